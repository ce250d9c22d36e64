//! Blinded join: the member commits to its secret `f`, the issuer signs the
//! commitment without learning `f`, and the member unblinds the result
//! into its membership private key `(A, e, f, v)`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::keys::{validate_gpk, GpkError, GroupIssuingPrivateKey, GroupPublicKey};
use crate::group_math::encoding::{hex_bytes, hex_uint};
use crate::group_math::prime::{is_probable_prime, random_prime_in_interval};
use crate::group_math::{pow2, SubgroupElement, Transcript};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JoinError {
    #[error("invalid group public key: {0}")]
    InvalidGpk(#[from] GpkError),
    #[error("nonce mismatch")]
    NonceMismatch,
    #[error("base does not match the issuer basename")]
    BaseMismatch,
    #[error("commitment out of range")]
    CommitmentRange,
    #[error("pseudonym not in subgroup")]
    PseudonymRange,
    #[error("response out of interval")]
    Interval,
    #[error("join proof does not verify")]
    Proof,
    #[error("could not draw a credential prime")]
    PrimeSearch,
    #[error("credential invalid")]
    CredentialInvalid,
}

/// Member-side secrets held between sending the join request and
/// receiving the credential.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinState {
    #[serde(with = "hex_uint")]
    pub f: BigUint,
    #[serde(with = "hex_uint")]
    pub v_prime: BigUint,
    #[serde(with = "hex_bytes")]
    pub basename: Vec<u8>,
    pub base: SubgroupElement,
    #[serde(with = "hex_uint")]
    pub commitment: BigUint,
    pub pseudonym: SubgroupElement,
}

/// Signature of knowledge of `(f, v')` with `U = R^f S^v' (mod N)` and
/// `K_I = B_I^f (mod p)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinProof {
    #[serde(with = "hex_uint")]
    pub challenge: BigUint,
    #[serde(with = "hex_uint")]
    pub s_f: BigUint,
    #[serde(with = "hex_uint")]
    pub s_v: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRequest {
    /// `U`.
    #[serde(with = "hex_uint")]
    pub commitment: BigUint,
    /// `B_I`, derived from the issuer basename.
    pub base: SubgroupElement,
    /// `K_I = B_I^f`.
    pub pseudonym: SubgroupElement,
    pub proof: JoinProof,
    #[serde(with = "hex_bytes")]
    pub nonce: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialResponse {
    #[serde(with = "hex_uint")]
    pub a: BigUint,
    #[serde(with = "hex_uint")]
    pub e: BigUint,
    #[serde(with = "hex_uint")]
    pub v_double_prime: BigUint,
}

/// `(A, e, f, v)` with `A^e R^f S^v = Z (mod N)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserMemberPrivateKey {
    #[serde(with = "hex_uint")]
    pub a: BigUint,
    #[serde(with = "hex_uint")]
    pub e: BigUint,
    #[serde(with = "hex_uint")]
    pub f: BigUint,
    #[serde(with = "hex_uint")]
    pub v: BigUint,
}

impl UserMemberPrivateKey {
    /// Recomputes `A^e R^f S^v mod N`.
    pub fn opens_to(&self, gpk: &GroupPublicKey) -> BigUint {
        let n = &gpk.modulus;
        (self.a.modpow(&self.e, n) * gpk.secret_base.modpow(&self.f, n) * gpk.randomizer_base.modpow(&self.v, n)) % n
    }
}

fn join_challenge(
    gpk: &GroupPublicKey,
    req_values: [&BigUint; 3],
    commit_n: &BigUint,
    commit_p: &BigUint,
    nonce: &[u8],
) -> BigUint {
    Transcript::new("chainanchor/join")
        .ints(gpk.transcript_ints())
        .ints(req_values)
        .ints([commit_n, commit_p])
        .bytes(nonce)
        .challenge(gpk.profile.challenge_bits)
}

fn response_bounds(gpk: &GroupPublicKey) -> (u32, u32) {
    let p = &gpk.profile;
    (p.secret_bits + p.hiding_bits + p.challenge_bits, p.randomizer_bits + p.hiding_bits + p.challenge_bits)
}

/// Validates the public key, picks `f` and `v'`, and proves the commitment
/// and pseudonym are well formed under `issuer_nonce`.
pub fn join_request<R: Rng + ?Sized>(
    gpk: &GroupPublicKey,
    issuer_basename: &[u8],
    issuer_nonce: &[u8],
    rng: &mut R,
) -> Result<(JoinState, JoinRequest), JoinError> {
    validate_gpk(gpk)?;
    let profile = &gpk.profile;
    let n = &gpk.modulus;
    let group = &gpk.subgroup;

    let f = loop {
        let f = rng.gen_biguint(u64::from(profile.secret_bits));
        if !f.is_zero() {
            break f;
        }
    };
    let v_prime = rng.gen_biguint(u64::from(profile.randomizer_bits));
    let commitment = (gpk.secret_base.modpow(&f, n) * gpk.randomizer_base.modpow(&v_prime, n)) % n;
    let base = group.hash_to_element(issuer_basename);
    let pseudonym = group.pow(&base, &f);

    let (f_bits, v_bits) = response_bounds(gpk);
    let r_f = rng.gen_biguint(u64::from(f_bits));
    let r_v = rng.gen_biguint(u64::from(v_bits));
    let commit_n = (gpk.secret_base.modpow(&r_f, n) * gpk.randomizer_base.modpow(&r_v, n)) % n;
    let commit_p = group.pow(&base, &r_f);
    let challenge =
        join_challenge(gpk, [&commitment, base.value(), pseudonym.value()], &commit_n, commit_p.value(), issuer_nonce);
    let proof = JoinProof { s_f: r_f + &challenge * &f, s_v: r_v + &challenge * &v_prime, challenge };

    let request = JoinRequest {
        commitment: commitment.clone(),
        base: base.clone(),
        pseudonym: pseudonym.clone(),
        proof,
        nonce: issuer_nonce.to_vec(),
    };
    let state = JoinState { f, v_prime, basename: issuer_basename.to_vec(), base, commitment, pseudonym };
    Ok((state, request))
}

pub fn verify_join_request(
    gpk: &GroupPublicKey,
    issuer_basename: &[u8],
    req: &JoinRequest,
    issuer_nonce: &[u8],
) -> Result<(), JoinError> {
    if req.nonce != issuer_nonce {
        return Err(JoinError::NonceMismatch);
    }
    let group = &gpk.subgroup;
    if req.base != group.hash_to_element(issuer_basename) {
        return Err(JoinError::BaseMismatch);
    }
    let n = &gpk.modulus;
    if req.commitment.is_zero() || req.commitment >= *n || !req.commitment.gcd(n).is_one() {
        return Err(JoinError::CommitmentRange);
    }
    if !group.contains(req.pseudonym.value()) {
        return Err(JoinError::PseudonymRange);
    }
    let (f_bits, v_bits) = response_bounds(gpk);
    let proof = &req.proof;
    if proof.s_f >= pow2(f_bits + 1)
        || proof.s_v >= pow2(v_bits + 1)
        || proof.challenge >= pow2(gpk.profile.challenge_bits)
    {
        return Err(JoinError::Interval);
    }
    let u_inv = req.commitment.modinv(n).ok_or(JoinError::CommitmentRange)?;
    let commit_n = (u_inv.modpow(&proof.challenge, n)
        * gpk.secret_base.modpow(&proof.s_f, n)
        * gpk.randomizer_base.modpow(&proof.s_v, n))
        % n;
    let commit_p = group.mul(&group.pow_neg(&req.pseudonym, &proof.challenge), &group.pow(&req.base, &proof.s_f));
    let expected = join_challenge(
        gpk,
        [&req.commitment, req.base.value(), req.pseudonym.value()],
        &commit_n,
        commit_p.value(),
        &req.nonce,
    );
    if expected == proof.challenge {
        Ok(())
    } else {
        Err(JoinError::Proof)
    }
}

/// Checks the request, then signs the commitment with a fresh prime `e`
/// and randomizer `v''`.
pub fn issue_credential<R: Rng + ?Sized>(
    gpk: &GroupPublicKey,
    gipk: &GroupIssuingPrivateKey,
    issuer_basename: &[u8],
    req: &JoinRequest,
    issuer_nonce: &[u8],
    rng: &mut R,
) -> Result<CredentialResponse, JoinError> {
    verify_join_request(gpk, issuer_basename, req, issuer_nonce)?;
    let profile = &gpk.profile;
    let n = &gpk.modulus;
    let order = gipk.qr_order();

    let low = pow2(profile.prime_e_bits - 1);
    let width = pow2(profile.prime_e_interval_bits - 1);
    let (e, e_inv) = loop {
        let e = random_prime_in_interval(&low, &width, rng).map_err(|_| JoinError::PrimeSearch)?;
        if let Some(inv) = e.modinv(&order) {
            break (e, inv);
        }
    };
    let v_double_prime = rng.gen_biguint(u64::from(profile.randomizer_bits));

    let blinded = (&req.commitment * gpk.randomizer_base.modpow(&v_double_prime, n)) % n;
    let blinded_inv = blinded.modinv(n).ok_or(JoinError::CommitmentRange)?;
    let a = ((&gpk.target * blinded_inv) % n).modpow(&e_inv, n);
    Ok(CredentialResponse { a, e, v_double_prime })
}

/// Unblinds the credential, accepting it only if `A^e R^f S^v = Z (mod N)`.
pub fn complete_join(
    state: &JoinState,
    resp: &CredentialResponse,
    gpk: &GroupPublicKey,
) -> Result<UserMemberPrivateKey, JoinError> {
    let profile = &gpk.profile;
    let low = pow2(profile.prime_e_bits - 1);
    let high = &low + pow2(profile.prime_e_interval_bits - 1);
    if resp.e < low || resp.e > high || !is_probable_prime(&resp.e) {
        return Err(JoinError::CredentialInvalid);
    }
    if !gpk.is_unit(&resp.a) {
        return Err(JoinError::CredentialInvalid);
    }
    let key = UserMemberPrivateKey {
        a: resp.a.clone(),
        e: resp.e.clone(),
        f: state.f.clone(),
        v: &state.v_prime + &resp.v_double_prime,
    };
    if key.opens_to(gpk) == gpk.target {
        Ok(key)
    } else {
        Err(JoinError::CredentialInvalid)
    }
}

/// Full join in one call; convenient for tests and fixtures.
pub fn join_member<R: Rng + ?Sized>(
    gpk: &GroupPublicKey,
    gipk: &GroupIssuingPrivateKey,
    issuer_basename: &[u8],
    rng: &mut R,
) -> Result<UserMemberPrivateKey, JoinError> {
    let nonce: [u8; 16] = rng.gen();
    let (state, req) = join_request(gpk, issuer_basename, &nonce, rng)?;
    let resp = issue_credential(gpk, gipk, issuer_basename, &req, &nonce, rng)?;
    complete_join(&state, &resp, gpk)
}

impl JoinState {
    /// `R^f S^v' mod N`, recomputed from the secrets.
    pub fn recompute_commitment(&self, gpk: &GroupPublicKey) -> BigUint {
        let n = &gpk.modulus;
        (gpk.secret_base.modpow(&self.f, n) * gpk.randomizer_base.modpow(&self.v_prime, n)) % n
    }
}

impl CredentialResponse {
    /// `A^e U S^v'' mod N`; equals `Z` for an honestly issued credential.
    pub fn opens_to(&self, gpk: &GroupPublicKey, commitment: &BigUint) -> BigUint {
        let n = &gpk.modulus;
        (self.a.modpow(&self.e, n) * commitment * gpk.randomizer_base.modpow(&self.v_double_prime, n)) % n
    }
}
