//! Special RSA modulus `N = p_N q_N` built from two safe primes.

use num_bigint::BigUint;
use rand::Rng;

use super::prime::{gen_safe_prime, PrimeError};
use super::profile::ParameterProfile;

/// The factorization of an RSA modulus whose factors are safe primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaGroup {
    pub modulus: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    pub p_prime: BigUint,
    pub q_prime: BigUint,
}

impl RsaGroup {
    /// `p' q'`, the order of the quadratic residues mod N.
    pub fn qr_order(&self) -> BigUint {
        &self.p_prime * &self.q_prime
    }
}

/// Draws distinct safe primes of `l_N / 2` bits until their product has
/// exactly `l_N` bits.
pub fn gen_rsa_group<R: Rng + ?Sized>(profile: &ParameterProfile, rng: &mut R) -> Result<RsaGroup, PrimeError> {
    let bits = u64::from(profile.modulus_bits);
    let half = bits / 2;
    let p = gen_safe_prime(half, rng)?;
    loop {
        let q = gen_safe_prime(half, rng)?;
        if q == p {
            continue;
        }
        let modulus = &p * &q;
        if modulus.bits() != bits {
            continue;
        }
        let p_prime = &p >> 1u32;
        let q_prime = &q >> 1u32;
        return Ok(RsaGroup { modulus, p, q, p_prime, q_prime });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_math::prime::is_probable_prime;
    use num_integer::Integer;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn desk_modulus_postconditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let mut profile = ParameterProfile::desk();
        profile.modulus_bits = 64;
        for _ in 0..5 {
            let g = gen_rsa_group(&profile, &mut rng).unwrap();
            assert_eq!(g.modulus, &g.p * &g.q);
            assert_eq!(g.modulus.bits(), 64);
            assert_eq!(g.p.bits(), 32);
            assert_eq!(g.q.bits(), 32);
            assert_ne!(g.p, g.q);
            assert!(g.p.gcd(&g.q).is_one());
            for x in [&g.p, &g.q, &g.p_prime, &g.q_prime] {
                assert!(is_probable_prime(x));
            }
            assert_eq!(g.p, &g.p_prime * 2u32 + 1u32);
            assert_eq!(g.q, &g.q_prime * 2u32 + 1u32);
        }
    }
}
