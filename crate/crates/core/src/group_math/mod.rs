//! Arbitrary-precision modular arithmetic: primes, RSA and prime-order
//! groups, basename hashing and the Fiat-Shamir transcript.

pub mod encoding;
pub mod prime;
pub mod profile;
pub mod rsa;
pub mod subgroup;
pub mod transcript;

use num_bigint::{BigInt, BigUint, Sign};

pub use prime::{gen_prime, gen_safe_prime, gen_safe_prime_capped, is_probable_prime, PrimeError};
pub use profile::{ParameterProfile, ProfileError};
pub use rsa::{gen_rsa_group, RsaGroup};
pub use subgroup::{gen_schnorr_group, SchnorrGroup, SubgroupElement, SubgroupError};
pub use transcript::{canonical_encode, fiat_shamir_challenge, hash_bytes, Transcript};

/// `2^bits`.
pub fn pow2(bits: u32) -> BigUint {
    BigUint::from(1u32) << bits
}

/// `base^exp mod m` for a signed exponent; negative exponents use the
/// inverse of `base`, which must exist.
pub fn pow_signed(base: &BigUint, exp: &BigInt, modulus: &BigUint) -> Option<BigUint> {
    match exp.sign() {
        Sign::Minus => base.modinv(modulus).map(|inv| inv.modpow(exp.magnitude(), modulus)),
        _ => Some(base.modpow(exp.magnitude(), modulus)),
    }
}
