//! Issuer setup: the group public key, the issuing private key and the
//! checks a member runs on a public key before trusting it.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::encoding::hex_uint;
use crate::group_math::{
    gen_rsa_group, gen_schnorr_group, pow2, ParameterProfile, PrimeError, ProfileError, SchnorrGroup, SubgroupError,
    Transcript,
};

/// Why a group public key was rejected. `Display` yields the reason code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GpkError {
    #[error("missing proof {0}")]
    MissingProof(&'static str),
    #[error("proof {0}")]
    Proof(&'static str),
    #[error("{0}")]
    Subgroup(#[from] SubgroupError),
    #[error("profile: {0}")]
    Profile(String),
    #[error("length {0}")]
    Length(&'static str),
    #[error("range {0}")]
    Range(&'static str),
}

impl From<ProfileError> for GpkError {
    fn from(e: ProfileError) -> Self {
        GpkError::Profile(e.to_string())
    }
}

/// Proof of knowledge of `x` with `value = base^x (mod N)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorProof {
    pub label: String,
    #[serde(with = "hex_uint")]
    pub challenge: BigUint,
    #[serde(with = "hex_uint")]
    pub response: BigUint,
}

/// `(N, g', g, h, R, S, Z, p, q, u)` plus the proofs that `g, h` lie in
/// `<g'>` and `R, S, Z` lie in `<h>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPublicKey {
    pub profile: ParameterProfile,
    #[serde(with = "hex_uint")]
    pub modulus: BigUint,
    /// `g'`, a generator of the quadratic residues mod N.
    #[serde(with = "hex_uint")]
    pub qr_generator: BigUint,
    #[serde(with = "hex_uint")]
    pub g: BigUint,
    #[serde(with = "hex_uint")]
    pub h: BigUint,
    /// `R`, the base carrying the member secret `f`.
    #[serde(with = "hex_uint")]
    pub secret_base: BigUint,
    /// `S`, the base carrying the randomizer `v`.
    #[serde(with = "hex_uint")]
    pub randomizer_base: BigUint,
    /// `Z`, the value every credential opens to.
    #[serde(with = "hex_uint")]
    pub target: BigUint,
    pub subgroup: SchnorrGroup,
    pub correctness_proofs: Vec<GeneratorProof>,
}

/// `(p_N', q_N')` together with the safe primes they induce.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupIssuingPrivateKey {
    #[serde(with = "hex_uint")]
    pub p_n_prime: BigUint,
    #[serde(with = "hex_uint")]
    pub q_n_prime: BigUint,
    #[serde(with = "hex_uint")]
    pub p_n: BigUint,
    #[serde(with = "hex_uint")]
    pub q_n: BigUint,
}

impl fmt::Debug for GroupIssuingPrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GroupIssuingPrivateKey(..)")
    }
}

impl GroupIssuingPrivateKey {
    /// Order of the quadratic-residue group.
    pub fn qr_order(&self) -> BigUint {
        &self.p_n_prime * &self.q_n_prime
    }
}

impl GroupPublicKey {
    /// The ten public integers in canonical order, as bound into every
    /// challenge computed under this key.
    pub fn transcript_ints(&self) -> [&BigUint; 10] {
        [
            &self.modulus,
            &self.qr_generator,
            &self.g,
            &self.h,
            &self.secret_base,
            &self.randomizer_base,
            &self.target,
            self.subgroup.p(),
            self.subgroup.q(),
            self.subgroup.generator_value(),
        ]
    }

    /// `(label, base, value)` for each element whose membership is proven.
    fn proven_elements(&self) -> [(&'static str, &BigUint, &BigUint); 5] {
        [
            ("g", &self.qr_generator, &self.g),
            ("h", &self.qr_generator, &self.h),
            ("R", &self.h, &self.secret_base),
            ("S", &self.h, &self.randomizer_base),
            ("Z", &self.h, &self.target),
        ]
    }

    pub fn is_unit(&self, x: &BigUint) -> bool {
        *x > BigUint::one() && *x < self.modulus && x.gcd(&self.modulus).is_one()
    }
}

fn proof_response_bits(profile: &ParameterProfile) -> u32 {
    profile.modulus_bits + profile.hiding_bits + profile.challenge_bits
}

fn generator_challenge(
    label: &str,
    modulus: &BigUint,
    base: &BigUint,
    value: &BigUint,
    commitment: &BigUint,
    bits: u32,
) -> BigUint {
    Transcript::new("chainanchor/gpk-generator").bytes(label).ints([modulus, base, value, commitment]).challenge(bits)
}

fn prove_generator<R: Rng + ?Sized>(
    label: &str,
    profile: &ParameterProfile,
    modulus: &BigUint,
    base: &BigUint,
    value: &BigUint,
    exponent: &BigUint,
    rng: &mut R,
) -> GeneratorProof {
    let r = rng.gen_biguint(u64::from(proof_response_bits(profile)));
    let commitment = base.modpow(&r, modulus);
    let challenge = generator_challenge(label, modulus, base, value, &commitment, profile.challenge_bits);
    let response = r + &challenge * exponent;
    GeneratorProof { label: label.to_string(), challenge, response }
}

fn verify_generator(
    gpk: &GroupPublicKey,
    label: &str,
    base: &BigUint,
    value: &BigUint,
    proof: &GeneratorProof,
) -> bool {
    let profile = &gpk.profile;
    if !gpk.is_unit(base) || !gpk.is_unit(value) {
        return false;
    }
    if proof.response >= pow2(proof_response_bits(profile) + 1) || proof.challenge >= pow2(profile.challenge_bits) {
        return false;
    }
    let Some(value_inv) = value.modinv(&gpk.modulus) else {
        return false;
    };
    let commitment =
        (base.modpow(&proof.response, &gpk.modulus) * value_inv.modpow(&proof.challenge, &gpk.modulus)) % &gpk.modulus;
    generator_challenge(label, &gpk.modulus, base, value, &commitment, profile.challenge_bits) == proof.challenge
}

/// Generates a fresh group: a special RSA modulus with a QR generator and
/// derived bases, a prime-order subgroup, and membership proofs for every
/// derived base.
pub fn setup_group<R: Rng + ?Sized>(
    profile: &ParameterProfile,
    rng: &mut R,
) -> Result<(GroupPublicKey, GroupIssuingPrivateKey), SetupError> {
    profile.validate()?;
    let rsa = gen_rsa_group(profile, rng)?;
    let n = &rsa.modulus;
    let order = rsa.qr_order();
    let two = BigUint::from(2u32);

    let qr_generator = loop {
        let x = rng.gen_biguint_range(&two, &(n - 1u32));
        let gp = x.modpow(&two, n);
        // Order p'q' iff gp is not 1 and has no order p' or q' component.
        if gp > BigUint::one()
            && (&gp - 1u32).gcd(n).is_one()
            && !gp.modpow(&rsa.p_prime, n).is_one()
            && !gp.modpow(&rsa.q_prime, n).is_one()
        {
            break gp;
        }
    };

    let mut derive = |base: &BigUint| loop {
        let exp = rng.gen_biguint_range(&BigUint::one(), &order);
        let value = base.modpow(&exp, n);
        if value > BigUint::one() {
            break (value, exp);
        }
    };
    let (g, x_g) = derive(&qr_generator);
    let (h, x_h) = derive(&qr_generator);
    let (secret_base, x_r) = derive(&h);
    let (randomizer_base, x_s) = derive(&h);
    let (target, x_z) = derive(&h);

    let subgroup = gen_schnorr_group(profile, rng)?;

    let mut gpk = GroupPublicKey {
        profile: profile.clone(),
        modulus: n.clone(),
        qr_generator,
        g,
        h,
        secret_base,
        randomizer_base,
        target,
        subgroup,
        correctness_proofs: Vec::new(),
    };
    let exponents = [x_g, x_h, x_r, x_s, x_z];
    let proofs = gpk
        .proven_elements()
        .iter()
        .zip(&exponents)
        .map(|((label, base, value), exp)| prove_generator(label, profile, n, base, value, exp, rng))
        .collect();
    gpk.correctness_proofs = proofs;

    let gipk = GroupIssuingPrivateKey { p_n_prime: rsa.p_prime, q_n_prime: rsa.q_prime, p_n: rsa.p, q_n: rsa.q };
    Ok((gpk, gipk))
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Prime(#[from] PrimeError),
}

/// Runs the three public-key checks in order: the generator proofs, the
/// prime-order subgroup structure, then every length and range.
pub fn validate_gpk(gpk: &GroupPublicKey) -> Result<(), GpkError> {
    for (label, base, value) in gpk.proven_elements() {
        let proof = gpk.correctness_proofs.iter().find(|p| p.label == label).ok_or(GpkError::MissingProof(label))?;
        if !verify_generator(gpk, label, base, value, proof) {
            return Err(GpkError::Proof(label));
        }
    }

    gpk.subgroup.check()?;

    let profile = &gpk.profile;
    profile.validate()?;
    if gpk.modulus.bits() != u64::from(profile.modulus_bits) {
        return Err(GpkError::Length("N"));
    }
    if gpk.subgroup.p().bits() != u64::from(profile.subgroup_modulus_bits) {
        return Err(GpkError::Length("p"));
    }
    if gpk.subgroup.q().bits() != u64::from(profile.subgroup_order_bits) {
        return Err(GpkError::Length("q"));
    }
    let units = [
        ("g'", &gpk.qr_generator),
        ("g", &gpk.g),
        ("h", &gpk.h),
        ("R", &gpk.secret_base),
        ("S", &gpk.randomizer_base),
        ("Z", &gpk.target),
    ];
    for (label, x) in units {
        if !gpk.is_unit(x) {
            return Err(GpkError::Range(label));
        }
    }
    Ok(())
}
