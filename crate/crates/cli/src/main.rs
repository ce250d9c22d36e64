use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainanchor::group_math::profile::profiles_from_toml;
use chainanchor::group_math::ParameterProfile;
use chainanchor::ledger::{export_chain, export_drop_log};
use chainanchor_cli::{run_demo_with, CliError, Command, ListChoice, WorldState};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "chainanchor", version, about = "Anonymous membership for a simulated permissioned ledger")]
struct Cli {
    /// World state file read and written by every stateful command.
    #[arg(long, global = true, default_value = "chainanchor-world.json")]
    world: PathBuf,
    /// Parameter profile name (`desk` or `full`, or a name from --config).
    #[arg(long, global = true, default_value = "desk")]
    profile: String,
    /// TOML file with extra profiles, one `[<name>]` table each.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Overwrite an existing world on `setup`.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate parameters, establish the group and hand its key to the verifier.
    Setup {
        #[arg(long, default_value = "g1")]
        group: String,
    },
    /// Add a consensus node.
    AddNode {
        node: String,
        #[arg(long)]
        dishonest: bool,
    },
    /// Add a user with no account at the issuer.
    AddUser { user: String },
    /// Authenticate a user to the issuer and obtain approval.
    Enroll { user: String },
    /// Run the join protocol and obtain a member key.
    Join { user: String },
    /// Prove membership to the verifier and establish a session.
    Prove {
        user: String,
        #[arg(long, default_value_t = 0)]
        member_key: usize,
    },
    /// Register a transaction key over an established session.
    Register {
        user: String,
        #[arg(long)]
        key: Option<usize>,
    },
    /// Obtain an anonymous identity certificate for a registered key.
    Identity {
        user: String,
        #[arg(long, default_value_t = 0)]
        key: usize,
    },
    /// Generate another transaction key.
    Keygen { user: String },
    /// Submit a transaction to the pool.
    Tx { user: String, key: usize, payload: String },
    /// Let a node process the pool and propose a block.
    Mine { node: String },
    /// Audit blocks against the permissions database (`latest`, `all`, or a hash prefix).
    Audit {
        #[arg(default_value = "latest")]
        block: String,
    },
    /// Put a signature's (B, K) pair on a revocation list.
    Revoke {
        base: String,
        pseudonym: String,
        #[arg(long, value_enum, default_value = "sig")]
        list: ListChoice,
    },
    /// Disclose that a transaction key belongs to the user.
    Disclose {
        user: String,
        key: usize,
        #[arg(long)]
        with_identity: bool,
    },
    /// Move the logical clock forward.
    Advance { ticks: u64 },
    /// Run the scripted scenario and its invariant checks.
    Demo {
        /// Serialize and reload the world between every command.
        #[arg(long)]
        round_trip: bool,
        /// Write the final world here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Print part of the world.
    Show {
        #[arg(value_enum)]
        what: Show,
        /// Party for `show network`.
        party: Option<String>,
    },
    /// Rebuild the world from its command log and compare state hashes.
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Show {
    Summary,
    Chain,
    Drops,
    Db,
    Transcript,
    Network,
    Hash,
}

fn resolve_profile(cli: &Cli) -> Result<ParameterProfile, CliError> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut profiles = profiles_from_toml(&text).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(p) = profiles.remove(&cli.profile) {
            return Ok(p);
        }
    }
    ParameterProfile::builtin(&cli.profile).map_err(|e| CliError::Usage(e.to_string()))
}

fn load(path: &Path) -> Result<WorldState, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {} ({e}); run setup first", path.display())))?;
    WorldState::from_json(&text)
}

fn save(path: &Path, world: &WorldState) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, world.to_json())
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_lines(lines: &[String]) {
    for l in lines {
        println!("{l}");
    }
}

fn to_command(cmd: &Cmd) -> Option<Command> {
    Some(match cmd {
        Cmd::AddNode { node, dishonest } => Command::AddNode { node: node.clone(), dishonest: *dishonest },
        Cmd::AddUser { user } => Command::AddUser { user: user.clone() },
        Cmd::Enroll { user } => Command::Enroll { user: user.clone() },
        Cmd::Join { user } => Command::Join { user: user.clone() },
        Cmd::Prove { user, member_key } => Command::Prove { user: user.clone(), member_key: *member_key },
        Cmd::Register { user, key } => Command::Register { user: user.clone(), key: *key },
        Cmd::Identity { user, key } => Command::Identity { user: user.clone(), key: *key },
        Cmd::Keygen { user } => Command::Keygen { user: user.clone() },
        Cmd::Tx { user, key, payload } => Command::Tx { user: user.clone(), key: *key, payload: payload.clone() },
        Cmd::Mine { node } => Command::Mine { node: node.clone() },
        Cmd::Audit { block } => Command::Audit { block: block.clone() },
        Cmd::Revoke { base, pseudonym, list } => {
            Command::Revoke { base: base.clone(), pseudonym: pseudonym.clone(), list: *list }
        }
        Cmd::Disclose { user, key, with_identity } => {
            Command::Disclose { user: user.clone(), key: *key, with_identity: *with_identity }
        }
        Cmd::Advance { ticks } => Command::Advance { ticks: *ticks },
        Cmd::Setup { .. } | Cmd::Demo { .. } | Cmd::Show { .. } | Cmd::Replay => return None,
    })
}

fn show(world: &WorldState, what: Show, party: Option<&str>) -> Result<(), CliError> {
    match what {
        Show::Summary => {
            println!(
                "profile {} seed {} group {} clock {}",
                world.profile.name, world.seed, world.group_id, world.clock
            );
            for (name, u) in &world.users {
                let registered = u.actor.transaction_keys().iter().filter(|k| k.registered_session.is_some()).count();
                println!(
                    "user {name}: {} member key(s), {} transaction key(s), {registered} registered",
                    u.actor.member_keys().len(),
                    u.actor.transaction_keys().len()
                );
            }
            for n in world.sim.nodes() {
                println!("node {}{}", n.node_id, if n.dishonest { " (dishonest)" } else { "" });
            }
            println!(
                "chain height {}, pool {}, drops {}",
                world.sim.chain().height(),
                world.sim.pool().len(),
                world.sim.drop_log().len()
            );
            println!(
                "sig-rl epoch {} ({} entries), issuer-rl epoch {} ({} entries)",
                world.verifier.sig_rl().epoch(),
                world.verifier.sig_rl().len(),
                world.verifier.issuer_rl().epoch(),
                world.verifier.issuer_rl().len()
            );
        }
        Show::Chain => print!("{}", export_chain(world.sim.chain())),
        Show::Drops => print!("{}", export_drop_log(world.sim.drop_log())),
        Show::Db => {
            for e in world.verifier.permissions_db().entries() {
                println!("{} {}", e.key.to_hex(), e.registered_at);
            }
        }
        Show::Transcript => print_lines(&world.transcript),
        Show::Network => {
            let party = party.ok_or_else(|| CliError::Usage("show network needs a party".into()))?;
            print!("{}", world.network.transcript_for(party));
        }
        Show::Hash => println!("{}", world.state_hash()),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Cmd::Setup { group } => {
            if cli.world.exists() && !cli.force {
                return Err(CliError::Usage(format!("{} exists; pass --force to overwrite", cli.world.display())));
            }
            let world = WorldState::setup(resolve_profile(cli)?, cli.seed, group)?;
            print_lines(&world.transcript);
            println!("state {}", world.state_hash());
            save(&cli.world, &world)
        }
        Cmd::Demo { round_trip, save: out } => match run_demo_with(resolve_profile(cli)?, cli.seed, *round_trip) {
            Ok(report) => {
                print_lines(&report.lines);
                println!("state {}", report.world.state_hash());
                match out {
                    Some(p) => save(p, &report.world),
                    None => Ok(()),
                }
            }
            Err((e, lines)) => {
                print_lines(&lines);
                Err(e)
            }
        },
        Cmd::Show { what, party } => show(&load(&cli.world)?, *what, party.as_deref()),
        Cmd::Replay => {
            let world = load(&cli.world)?;
            let rebuilt = world.replay()?;
            let (a, b) = (world.state_hash(), rebuilt.state_hash());
            if a == b {
                println!("replayed {} command(s); state {a}", world.command_log.len());
                Ok(())
            } else {
                Err(CliError::Invariant(format!("replay diverged: stored {a}, rebuilt {b}")))
            }
        }
        other => {
            let cmd = to_command(other).expect("stateful command");
            let mut world = load(&cli.world)?;
            let start = world.transcript.len();
            let result = world.execute(&cmd);
            if let Err(CliError::Usage(_)) = result {
                return result.map(|_| ());
            }
            // On a protocol error the partial transcript still goes out, minus
            // the trailing [error] line that stderr repeats.
            let new = &world.transcript[start..];
            print_lines(if result.is_err() { &new[..new.len() - 1] } else { new });
            save(&cli.world, &world)?;
            result.map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
