//! Schnorr signatures over a prime-order subgroup, used for transaction
//! keys and for the long-term identity keys of users and providers.

use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::encoding::{from_hex, hex_uint, int_bytes, to_hex};
use crate::group_math::{SchnorrGroup, SubgroupElement, Transcript};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SignatureError {
    #[error("public key is not a valid subgroup element")]
    InvalidKey,
    #[error("signature values out of range")]
    OutOfRange,
    #[error("signature does not verify")]
    Mismatch,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VerifyingKey(#[serde(with = "hex_uint")] BigUint);

impl VerifyingKey {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn from_value(value: BigUint) -> Self {
        Self(value)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        int_bytes(&self.0)
    }

    pub fn to_hex(&self) -> String {
        to_hex(&self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        from_hex(s).map(Self)
    }

    pub fn verify(&self, group: &SchnorrGroup, message: &[u8], sig: &Signature) -> Result<(), SignatureError> {
        if self.0 == BigUint::from(1u32) || !group.contains(&self.0) {
            return Err(SignatureError::InvalidKey);
        }
        if sig.challenge >= *group.q() || sig.response >= *group.q() {
            return Err(SignatureError::OutOfRange);
        }
        let key = SubgroupElement::from_value_unchecked(self.0.clone());
        let commitment = group.mul(&group.pow(&group.generator(), &sig.response), &group.pow_neg(&key, &sig.challenge));
        if challenge(group, &self.0, commitment.value(), message) == sig.challenge {
            Ok(())
        } else {
            Err(SignatureError::Mismatch)
        }
    }
}

impl fmt::Debug for VerifyingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VerifyingKey({})", self.to_hex())
    }
}

impl fmt::Display for VerifyingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "hex_uint")]
    pub challenge: BigUint,
    #[serde(with = "hex_uint")]
    pub response: BigUint,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    #[serde(with = "hex_uint")]
    secret: BigUint,
    public: VerifyingKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn generate<R: Rng + ?Sized>(group: &SchnorrGroup, rng: &mut R) -> Self {
        let secret = group.random_exponent(rng);
        let public = VerifyingKey(group.pow(&group.generator(), &secret).value().clone());
        Self { secret, public }
    }

    pub fn public(&self) -> &VerifyingKey {
        &self.public
    }

    pub fn sign<R: Rng + ?Sized>(&self, group: &SchnorrGroup, message: &[u8], rng: &mut R) -> Signature {
        let nonce = group.random_exponent(rng);
        let commitment = group.pow(&group.generator(), &nonce);
        let c = challenge(group, self.public.value(), commitment.value(), message);
        let response = (nonce + &c * &self.secret) % group.q();
        Signature { challenge: c, response }
    }
}

fn challenge(group: &SchnorrGroup, key: &BigUint, commitment: &BigUint, message: &[u8]) -> BigUint {
    Transcript::new("chainanchor/schnorr-signature")
        .ints([group.p(), group.q(), group.generator_value(), key, commitment])
        .bytes(message)
        .challenge(256)
        % group.q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_math::{gen_schnorr_group, ParameterProfile};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_verify_and_tamper() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let group = gen_schnorr_group(&ParameterProfile::desk(), &mut rng).unwrap();
        let kp = KeyPair::generate(&group, &mut rng);
        let sig = kp.sign(&group, b"pay bob 5", &mut rng);
        kp.public().verify(&group, b"pay bob 5", &sig).unwrap();
        assert_eq!(kp.public().verify(&group, b"pay bob 6", &sig), Err(SignatureError::Mismatch));

        let other = KeyPair::generate(&group, &mut rng);
        assert_eq!(other.public().verify(&group, b"pay bob 5", &sig), Err(SignatureError::Mismatch));

        let mut bumped = sig.clone();
        bumped.response = (&bumped.response + 1u32) % group.q();
        assert!(kp.public().verify(&group, b"pay bob 5", &bumped).is_err());

        let mut too_big = sig;
        too_big.challenge += group.q();
        assert_eq!(kp.public().verify(&group, b"pay bob 5", &too_big), Err(SignatureError::OutOfRange));
    }

    #[test]
    fn key_outside_subgroup_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let group = gen_schnorr_group(&ParameterProfile::desk(), &mut rng).unwrap();
        let kp = KeyPair::generate(&group, &mut rng);
        let sig = kp.sign(&group, b"m", &mut rng);
        let bogus = VerifyingKey::from_value(group.p() - 1u32);
        assert_eq!(bogus.verify(&group, b"m", &sig), Err(SignatureError::InvalidKey));
    }
}
