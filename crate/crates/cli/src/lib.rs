//! Command-line driver over the ChainAnchor simulation: a persisted world
//! file, one subcommand per protocol step, and a scripted demo.

pub mod demo;
pub mod error;
pub mod world;

pub use demo::{run_demo, run_demo_with, DemoReport, DEMO_GROUP};
pub use error::CliError;
pub use world::{Command, ListChoice, UserRecord, WorldState, ISSUER_DOMAIN, VERIFIER_DOMAIN};
