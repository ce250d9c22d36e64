//! Probabilistic primality testing and prime / safe-prime generation.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Miller-Rabin rounds used by [`is_probable_prime`].
pub const PRIMALITY_ROUNDS: usize = 64;

/// Default number of search windows (or candidates, for tiny bit lengths)
/// tried before giving up on a randomness source.
pub const DEFAULT_ATTEMPT_CAP: u32 = 4096;

const SIEVE_LIMIT: usize = 1 << 14;
const SEARCH_WINDOW: u32 = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrimeError {
    #[error("no prime of {bits} bits found after {attempts} attempts; randomness source looks degenerate")]
    AttemptsExhausted { bits: u64, attempts: u32 },
    #[error("cannot generate a safe prime of {0} bits")]
    TooSmall(u64),
    #[error("empty prime interval")]
    EmptyInterval,
}

pub(crate) fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut composite = vec![false; SIEVE_LIMIT];
        let mut primes = Vec::new();
        for i in 2..SIEVE_LIMIT {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j < SIEVE_LIMIT {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Miller-Rabin with [`PRIMALITY_ROUNDS`] bases, preceded by trial division.
///
/// Bases are drawn from a generator seeded with a hash of `n`, so the
/// answer is a pure function of `n`.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if let Some(v) = n.to_u64().filter(|&v| v < SIEVE_LIMIT as u64) {
        return small_primes().binary_search(&(v as u32)).is_ok();
    }
    if small_primes().iter().any(|&sp| (n % sp).is_zero()) {
        return false;
    }
    let limit = SIEVE_LIMIT as u64;
    if n.to_u64().is_some_and(|v| v < limit * limit) {
        return true;
    }

    let n_minus_one = n - 1u32;
    let twos = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> twos;
    let seed: [u8; 32] = Sha256::digest(n.to_bytes_be()).into();
    let mut rng = ChaCha20Rng::from_seed(seed);

    'witness: for _ in 0..PRIMALITY_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&odd, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..twos {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

fn fermat_base_two(n: &BigUint) -> bool {
    BigUint::from(2u32).modpow(&(n - 1u32), n).is_one()
}

/// Uniform odd integer with exactly `bits` bits.
fn random_odd_with_top_bit<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    let mut n = rng.gen_biguint(bits);
    n.set_bit(bits - 1, true);
    n.set_bit(0, true);
    n
}

/// Random prime of exactly `bits` bits.
pub fn gen_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint, PrimeError> {
    if bits < 2 {
        return Err(PrimeError::TooSmall(bits));
    }
    if bits < 32 {
        for _ in 0..DEFAULT_ATTEMPT_CAP {
            let mut c = rng.gen_biguint(bits);
            c.set_bit(bits - 1, true);
            if is_probable_prime(&c) {
                return Ok(c);
            }
        }
        return Err(PrimeError::AttemptsExhausted { bits, attempts: DEFAULT_ATTEMPT_CAP });
    }
    let primes = &small_primes()[1..];
    for _ in 0..DEFAULT_ATTEMPT_CAP {
        let base = random_odd_with_top_bit(bits, rng);
        let residues: Vec<u32> = primes.iter().map(|&s| (&base % s).to_u32().unwrap()).collect();
        for delta in (0..SEARCH_WINDOW).step_by(2) {
            let sieved =
                primes.iter().zip(&residues).all(|(&s, &r)| (u64::from(r) + u64::from(delta)) % u64::from(s) != 0);
            if !sieved {
                continue;
            }
            let candidate = &base + delta;
            if candidate.bits() != bits {
                break;
            }
            if fermat_base_two(&candidate) && is_probable_prime(&candidate) {
                return Ok(candidate);
            }
        }
    }
    Err(PrimeError::AttemptsExhausted { bits, attempts: DEFAULT_ATTEMPT_CAP })
}

/// Random safe prime `P = 2P' + 1` of exactly `bits` bits with the default
/// attempt cap.
pub fn gen_safe_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint, PrimeError> {
    gen_safe_prime_capped(bits, rng, DEFAULT_ATTEMPT_CAP)
}

/// Like [`gen_safe_prime`] but gives up after `max_attempts`.
///
/// Below 32 bits each attempt is a single candidate; above, each attempt
/// sieves a window of candidates starting at a fresh random point.
pub fn gen_safe_prime_capped<R: Rng + ?Sized>(
    bits: u64,
    rng: &mut R,
    max_attempts: u32,
) -> Result<BigUint, PrimeError> {
    if bits < 3 {
        return Err(PrimeError::TooSmall(bits));
    }
    let exhausted = PrimeError::AttemptsExhausted { bits, attempts: max_attempts };
    let half_bits = bits - 1;

    if bits < 32 {
        for _ in 0..max_attempts {
            let mut half = rng.gen_biguint(half_bits);
            half.set_bit(half_bits - 1, true);
            if is_probable_prime(&half) {
                let p = (&half << 1u32) + 1u32;
                if is_probable_prime(&p) {
                    return Ok(p);
                }
            }
        }
        return Err(exhausted);
    }

    let primes = &small_primes()[1..];
    for _ in 0..max_attempts {
        let base = random_odd_with_top_bit(half_bits, rng);
        let residues: Vec<u64> = primes.iter().map(|&s| (&base % s).to_u64().unwrap()).collect();
        for delta in (0..SEARCH_WINDOW).step_by(2) {
            let delta = u64::from(delta);
            // Reject when either P' or 2P'+1 has a small factor.
            let sieved = primes.iter().zip(&residues).all(|(&s, &r)| {
                let s = u64::from(s);
                let half_res = (r + delta) % s;
                half_res != 0 && (2 * half_res + 1) % s != 0
            });
            if !sieved {
                continue;
            }
            let half = &base + delta;
            if half.bits() != half_bits {
                break;
            }
            let p = (&half << 1u32) + 1u32;
            if fermat_base_two(&half) && fermat_base_two(&p) && is_probable_prime(&half) && is_probable_prime(&p) {
                return Ok(p);
            }
        }
    }
    Err(exhausted)
}

pub fn is_safe_prime(p: &BigUint) -> bool {
    p.is_odd() && is_probable_prime(p) && is_probable_prime(&(p >> 1u32))
}

/// Random prime in `[low, low + width]`.
pub fn random_prime_in_interval<R: Rng + ?Sized>(
    low: &BigUint,
    width: &BigUint,
    rng: &mut R,
) -> Result<BigUint, PrimeError> {
    if width.is_zero() {
        return if is_probable_prime(low) { Ok(low.clone()) } else { Err(PrimeError::EmptyInterval) };
    }
    let span = width + 1u32;
    for _ in 0..DEFAULT_ATTEMPT_CAP * 16 {
        let candidate = low + rng.gen_biguint_below(&span);
        if is_probable_prime(&candidate) {
            return Ok(candidate);
        }
    }
    Err(PrimeError::AttemptsExhausted { bits: (low + width).bits(), attempts: DEFAULT_ATTEMPT_CAP * 16 })
}
