//! Prime-order subgroups of `Z_p^*`: the group that houses the base and
//! pseudonym values and the Schnorr signatures used for transaction and
//! identity keys.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::encoding::hex_uint;
use super::prime::{gen_prime, is_probable_prime, PrimeError};
use super::profile::ParameterProfile;
use super::transcript::expand_hash;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupError {
    #[error("p not prime")]
    ModulusNotPrime,
    #[error("q not prime")]
    OrderNotPrime,
    #[error("q does not divide p-1")]
    OrderDoesNotDivide,
    #[error("q divides (p-1)/q")]
    OrderSquared,
    #[error("u order")]
    GeneratorOrder,
    #[error("value is not in the order-q subgroup")]
    NotInSubgroup,
}

/// The triple `(p, q, u)`: `u` generates the subgroup of order `q` in `Z_p^*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrGroup {
    #[serde(with = "hex_uint")]
    p: BigUint,
    #[serde(with = "hex_uint")]
    q: BigUint,
    #[serde(with = "hex_uint")]
    generator: BigUint,
}

/// A residue `x` with `x^q = 1 (mod p)` for the group it was checked against.
///
/// Values obtained through [`SchnorrGroup`] constructors are checked;
/// deserialized values are not and must go through
/// [`SchnorrGroup::element`] or [`SchnorrGroup::contains`] before use.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubgroupElement(#[serde(with = "hex_uint")] BigUint);

impl SubgroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Wraps a raw residue without a membership check.
    pub fn from_value_unchecked(value: BigUint) -> Self {
        Self(value)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }
}

impl SchnorrGroup {
    pub fn new(p: BigUint, q: BigUint, generator: BigUint) -> Result<Self, SubgroupError> {
        let group = Self { p, q, generator };
        group.check()?;
        Ok(group)
    }

    /// Builds a group without validation, e.g. to model a malformed public key.
    pub fn new_unchecked(p: BigUint, q: BigUint, generator: BigUint) -> Self {
        Self { p, q, generator }
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn generator_value(&self) -> &BigUint {
        &self.generator
    }

    pub fn generator(&self) -> SubgroupElement {
        SubgroupElement(self.generator.clone())
    }

    /// Verifies: p, q prime; q | p-1; q does not divide (p-1)/q; u has order q.
    pub fn check(&self) -> Result<(), SubgroupError> {
        if !is_probable_prime(&self.p) {
            return Err(SubgroupError::ModulusNotPrime);
        }
        if !is_probable_prime(&self.q) {
            return Err(SubgroupError::OrderNotPrime);
        }
        let (cofactor, rem) = (&self.p - 1u32).div_rem(&self.q);
        if !rem.is_zero() {
            return Err(SubgroupError::OrderDoesNotDivide);
        }
        if (&cofactor % &self.q).is_zero() {
            return Err(SubgroupError::OrderSquared);
        }
        if self.generator.is_one() || !self.contains(&self.generator) {
            return Err(SubgroupError::GeneratorOrder);
        }
        Ok(())
    }

    /// `(p - 1) / q`.
    pub fn cofactor(&self) -> BigUint {
        (&self.p - 1u32) / &self.q
    }

    pub fn contains(&self, x: &BigUint) -> bool {
        !x.is_zero() && *x < self.p && x.modpow(&self.q, &self.p).is_one()
    }

    pub fn element(&self, x: BigUint) -> Result<SubgroupElement, SubgroupError> {
        if self.contains(&x) {
            Ok(SubgroupElement(x))
        } else {
            Err(SubgroupError::NotInSubgroup)
        }
    }

    pub fn pow(&self, base: &SubgroupElement, exp: &BigUint) -> SubgroupElement {
        SubgroupElement(base.0.modpow(exp, &self.p))
    }

    /// `base^(-exp)`, computed as `base^(q - exp mod q)`.
    pub fn pow_neg(&self, base: &SubgroupElement, exp: &BigUint) -> SubgroupElement {
        let e = (&self.q - (exp % &self.q)) % &self.q;
        self.pow(base, &e)
    }

    pub fn mul(&self, a: &SubgroupElement, b: &SubgroupElement) -> SubgroupElement {
        SubgroupElement((&a.0 * &b.0) % &self.p)
    }

    /// Uniform exponent in `[1, q)`.
    pub fn random_exponent<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.q)
    }

    /// Uniform element of the subgroup other than the identity.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> SubgroupElement {
        let k = self.random_exponent(rng);
        self.pow(&self.generator(), &k)
    }

    /// Deterministic map from a basename into the subgroup.
    ///
    /// Hashes `basename || counter` to `l_p + 128` bits, reduces mod p and
    /// raises to the cofactor, bumping the counter until the result is not
    /// the identity.
    pub fn hash_to_element(&self, basename: &[u8]) -> SubgroupElement {
        let cofactor = self.cofactor();
        let bits = self.p.bits() + 128;
        let mut input = basename.to_vec();
        for counter in 0u32.. {
            input.truncate(basename.len());
            input.extend_from_slice(&counter.to_be_bytes());
            let x = expand_hash(&input, bits) % &self.p;
            if x.is_zero() {
                continue;
            }
            let y = x.modpow(&cofactor, &self.p);
            if !y.is_one() {
                return SubgroupElement(y);
            }
        }
        unreachable!("counter space exhausted")
    }
}

/// Generates `(p, q, u)` with `|p| = l_p`, `|q| = l_q`, `q || p - 1` exactly
/// once, and `u` of order `q`.
pub fn gen_schnorr_group<R: Rng + ?Sized>(profile: &ParameterProfile, rng: &mut R) -> Result<SchnorrGroup, PrimeError> {
    let p_bits = u64::from(profile.subgroup_modulus_bits);
    let q = gen_prime(u64::from(profile.subgroup_order_bits), rng)?;
    let low = ((BigUint::one() << (p_bits - 1)) + &q - 1u32) / &q;
    let high = ((BigUint::one() << p_bits) - 2u32) / &q;
    let mut found = None;
    for _ in 0..1_000_000u32 {
        let mut k = rng.gen_biguint_range(&low, &(&high + 1u32));
        k.set_bit(0, false);
        if k < low || (&k % &q).is_zero() {
            continue;
        }
        let p = &k * &q + 1u32;
        if p.bits() == p_bits && is_probable_prime(&p) {
            found = Some((p, k));
            break;
        }
    }
    let (p, cofactor) = found.ok_or(PrimeError::AttemptsExhausted { bits: p_bits, attempts: 1_000_000 })?;
    let two = BigUint::from(2u32);
    let generator = loop {
        let h = rng.gen_biguint_range(&two, &(&p - 1u32));
        let u = h.modpow(&cofactor, &p);
        if !u.is_one() {
            break u;
        }
    };
    Ok(SchnorrGroup { p, q, generator })
}
