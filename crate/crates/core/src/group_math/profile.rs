//! Bit-length parameter profiles for the RSA group, the prime-order subgroup
//! and the zero-knowledge proofs built on top of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Output size of the transcript hash; challenge lengths may not exceed it.
pub const MAX_CHALLENGE_BITS: u32 = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("profile {name}: randomizer length {actual} must equal modulus + secret + hiding lengths ({expected})")]
    RandomizerLength { name: String, expected: u32, actual: u32 },
    #[error("profile {name}: prime-e length must exceed secret length + 2")]
    PrimeELength { name: String },
    #[error("profile {name}: prime-e interval width must be in [2, prime-e length)")]
    PrimeEInterval { name: String },
    #[error("profile {name}: challenge length must be in [8, {MAX_CHALLENGE_BITS}]")]
    ChallengeLength { name: String },
    #[error("profile {name}: subgroup modulus must be at least two bits longer than its order")]
    SubgroupLengths { name: String },
    #[error("profile {name}: modulus length must be even and at least 16 bits")]
    ModulusLength { name: String },
    #[error("unknown profile {0:?}")]
    Unknown(String),
    #[error("profile config: {0}")]
    Config(String),
}

/// Bit lengths that parameterize a group instance.
///
/// The doc on each field gives the conventional symbol from the DAA/EPID
/// literature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterProfile {
    pub name: String,
    /// `l_N`: RSA modulus length.
    pub modulus_bits: u32,
    /// `l_f`: member secret length.
    pub secret_bits: u32,
    /// `l_e`: length of the credential prime `e`.
    pub prime_e_bits: u32,
    /// `l_e'`: width of the interval `e` is drawn from.
    pub prime_e_interval_bits: u32,
    /// `l_v`: credential randomizer length.
    pub randomizer_bits: u32,
    /// `l_phi`: statistical zero-knowledge slack.
    pub hiding_bits: u32,
    /// `l_H`: Fiat-Shamir challenge length.
    pub challenge_bits: u32,
    /// `l_p`: prime-order subgroup modulus length.
    pub subgroup_modulus_bits: u32,
    /// `l_q`: prime-order subgroup order length.
    pub subgroup_order_bits: u32,
}

#[derive(Deserialize)]
struct ProfileLengths {
    modulus_bits: u32,
    secret_bits: u32,
    prime_e_bits: u32,
    prime_e_interval_bits: u32,
    randomizer_bits: u32,
    hiding_bits: u32,
    challenge_bits: u32,
    subgroup_modulus_bits: u32,
    subgroup_order_bits: u32,
}

impl ParameterProfile {
    /// Small parameters for tests and the demo.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            modulus_bits: 512,
            secret_bits: 40,
            prime_e_bits: 120,
            prime_e_interval_bits: 40,
            randomizer_bits: 592,
            hiding_bits: 40,
            challenge_bits: 256,
            subgroup_modulus_bits: 256,
            subgroup_order_bits: 160,
        }
    }

    /// DAA-style deployment lengths.
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            modulus_bits: 2048,
            secret_bits: 104,
            prime_e_bits: 368,
            prime_e_interval_bits: 120,
            randomizer_bits: 2232,
            hiding_bits: 80,
            challenge_bits: 256,
            subgroup_modulus_bits: 1632,
            subgroup_order_bits: 256,
        }
    }

    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let name = || self.name.clone();
        if self.modulus_bits < 16 || !self.modulus_bits.is_multiple_of(2) {
            return Err(ProfileError::ModulusLength { name: name() });
        }
        let expected = self.modulus_bits + self.secret_bits + self.hiding_bits;
        if self.randomizer_bits != expected {
            return Err(ProfileError::RandomizerLength { name: name(), expected, actual: self.randomizer_bits });
        }
        if self.prime_e_bits <= self.secret_bits + 2 {
            return Err(ProfileError::PrimeELength { name: name() });
        }
        if self.prime_e_interval_bits < 2 || self.prime_e_interval_bits >= self.prime_e_bits {
            return Err(ProfileError::PrimeEInterval { name: name() });
        }
        if self.challenge_bits < 8 || self.challenge_bits > MAX_CHALLENGE_BITS {
            return Err(ProfileError::ChallengeLength { name: name() });
        }
        if self.subgroup_order_bits < 2 || self.subgroup_modulus_bits < self.subgroup_order_bits + 2 {
            return Err(ProfileError::SubgroupLengths { name: name() });
        }
        Ok(())
    }

    /// Bound on `|v - e*w|`, the randomizer left after blinding the
    /// credential with `T = A * S^w` and `w < 2^(l_N + l_phi)`.
    pub fn blinded_randomizer_bits(&self) -> u32 {
        let product = self.prime_e_bits + self.modulus_bits + self.hiding_bits;
        (self.randomizer_bits + 1).max(product) + 1
    }

    /// Length of the credential-blinding exponent `w`.
    pub fn credential_blinding_bits(&self) -> u32 {
        self.modulus_bits + self.hiding_bits
    }
}

/// Parses a TOML profile table, one section per profile:
///
/// ```toml
/// [desk]
/// modulus_bits = 512
/// # ...
/// ```
pub fn profiles_from_toml(text: &str) -> Result<BTreeMap<String, ParameterProfile>, ProfileError> {
    let raw: BTreeMap<String, ProfileLengths> =
        toml::from_str(text).map_err(|e| ProfileError::Config(e.to_string()))?;
    raw.into_iter()
        .map(|(name, l)| {
            let profile = ParameterProfile {
                name: name.clone(),
                modulus_bits: l.modulus_bits,
                secret_bits: l.secret_bits,
                prime_e_bits: l.prime_e_bits,
                prime_e_interval_bits: l.prime_e_interval_bits,
                randomizer_bits: l.randomizer_bits,
                hiding_bits: l.hiding_bits,
                challenge_bits: l.challenge_bits,
                subgroup_modulus_bits: l.subgroup_modulus_bits,
                subgroup_order_bits: l.subgroup_order_bits,
            };
            profile.validate()?;
            Ok((name, profile))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_are_valid() {
        ParameterProfile::desk().validate().unwrap();
        ParameterProfile::full().validate().unwrap();
        assert!(matches!(ParameterProfile::builtin("huge"), Err(ProfileError::Unknown(_))));
    }

    #[test]
    fn randomizer_length_is_enforced() {
        let mut p = ParameterProfile::desk();
        p.randomizer_bits += 1;
        assert!(matches!(p.validate(), Err(ProfileError::RandomizerLength { expected: 592, actual: 593, .. })));
    }

    #[test]
    fn prime_e_must_clear_secret_range() {
        let mut p = ParameterProfile::desk();
        p.prime_e_bits = p.secret_bits + 2;
        assert!(matches!(p.validate(), Err(ProfileError::PrimeELength { .. })));

        let mut p = ParameterProfile::desk();
        p.prime_e_interval_bits = p.prime_e_bits;
        assert!(matches!(p.validate(), Err(ProfileError::PrimeEInterval { .. })));
    }

    #[test]
    fn toml_profiles_load() {
        let text = r#"
            [tiny]
            modulus_bits = 128
            secret_bits = 16
            prime_e_bits = 40
            prime_e_interval_bits = 16
            randomizer_bits = 160
            hiding_bits = 16
            challenge_bits = 64
            subgroup_modulus_bits = 64
            subgroup_order_bits = 32
        "#;
        let set = profiles_from_toml(text).unwrap();
        assert_eq!(set["tiny"].name, "tiny");
        assert_eq!(set["tiny"].randomizer_bits, 160);

        let broken = text.replace("randomizer_bits = 160", "randomizer_bits = 161");
        assert!(profiles_from_toml(&broken).is_err());
    }
}
