//! Membership signatures of knowledge.
//!
//! A signature `σ = (σ1, σ2, σ3)` proves, bound to a message and a verifier
//! nonce:
//!
//! * `σ1`: knowledge of a credential `(A, e, f, v)` with `A^e R^f S^v = Z`,
//!   and that the revealed pseudonym `K = B^f` uses the same `f`. The
//!   credential is blinded as `T = A S^w`, turning the statement into a
//!   representation `Z = T^e R^f S^(v - e w)` provable with Schnorr-style
//!   integer responses.
//! * `σ2`, `σ3`: for every `(B_i, K_i)` on the signature / issuer revocation
//!   list, that `B_i^f != K_i`. Each entry carries `W_i = (B_i^f / K_i)^μ`
//!   and a proof of `(α, β)` with `W_i = B_i^α K_i^-β` and `1 = B^α K^-β`;
//!   the verifier additionally requires `W_i != 1`.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::join::UserMemberPrivateKey;
use super::keys::GroupPublicKey;
use super::revocation::{RevocationEntry, RevocationKind, RevocationList};
use crate::group_math::encoding::{hex_int, hex_uint};
use crate::group_math::{pow2, pow_signed, SchnorrGroup, SubgroupElement, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseMode {
    /// Fresh random base per signature; signatures are unlinkable.
    Random,
    /// Base derived from a verifier basename; `K` becomes a stable pseudonym.
    Named(Vec<u8>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignError {
    #[error("revoked")]
    Revoked(RevocationKind),
    #[error("revocation lists passed in the wrong order")]
    ListKind,
    #[error("member key does not match the group parameters")]
    InconsistentKey,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum NonRevocationFailure {
    #[error("revoked")]
    Revoked,
    #[error("range")]
    Range,
    #[error("proof")]
    Proof,
}

/// Why a membership signature was rejected. `Display` yields the reason code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("revocation lists passed in the wrong order")]
    ListKind,
    #[error("epoch")]
    Epoch,
    #[error("revocation proof count")]
    ProofCount,
    #[error("base")]
    Base,
    #[error("pseudonym")]
    Pseudonym,
    #[error("blinded credential")]
    BlindedCredential,
    #[error("interval {0}")]
    Interval(&'static str),
    #[error("challenge")]
    Challenge,
    #[error("{} entry {index}: {reason}", kind.tag())]
    NonRevocation { kind: RevocationKind, index: usize, reason: NonRevocationFailure },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonRevocationProof {
    pub w: SubgroupElement,
    #[serde(with = "hex_uint")]
    pub challenge: BigUint,
    #[serde(with = "hex_uint")]
    pub s_alpha: BigUint,
    #[serde(with = "hex_uint")]
    pub s_beta: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipSignature {
    /// `B`.
    pub base: SubgroupElement,
    /// `K = B^f`.
    pub pseudonym: SubgroupElement,
    /// `T = A S^w mod N`.
    #[serde(with = "hex_uint")]
    pub blinded_credential: BigUint,
    #[serde(with = "hex_uint")]
    pub challenge: BigUint,
    #[serde(with = "hex_uint")]
    pub s_e: BigUint,
    #[serde(with = "hex_uint")]
    pub s_f: BigUint,
    #[serde(with = "hex_int")]
    pub s_v: BigInt,
    pub sig_rl_epoch: u64,
    pub issuer_rl_epoch: u64,
    pub sig_rl_proofs: Vec<NonRevocationProof>,
    pub issuer_rl_proofs: Vec<NonRevocationProof>,
}

impl MembershipSignature {
    /// Canonical binary encoding of every field.
    pub fn to_transcript(&self) -> Transcript {
        let mut t = Transcript::new("chainanchor/membership-signature")
            .ints([
                self.base.value(),
                self.pseudonym.value(),
                &self.blinded_credential,
                &self.challenge,
                &self.s_e,
                &self.s_f,
            ])
            .signed(&self.s_v)
            .u64(self.sig_rl_epoch)
            .u64(self.issuer_rl_epoch);
        for (tag, proofs) in [("sig-rl", &self.sig_rl_proofs), ("issuer-rl", &self.issuer_rl_proofs)] {
            t = t.bytes(tag).u64(proofs.len() as u64);
            for p in proofs {
                t = t.ints([p.w.value(), &p.challenge, &p.s_alpha, &p.s_beta]);
            }
        }
        t
    }

    pub fn digest(&self) -> [u8; 32] {
        self.to_transcript().digest()
    }
}

/// Bit lengths of the `(r_e, r_f, r_v)` masks.
fn mask_bits(gpk: &GroupPublicKey) -> (u32, u32, u32) {
    let p = &gpk.profile;
    let slack = p.hiding_bits + p.challenge_bits;
    (p.prime_e_interval_bits + slack, p.secret_bits + slack, p.blinded_randomizer_bits() + slack)
}

#[allow(clippy::too_many_arguments)]
fn membership_challenge(
    gpk: &GroupPublicKey,
    base: &BigUint,
    pseudonym: &BigUint,
    blinded: &BigUint,
    commit_n: &BigUint,
    commit_p: &BigUint,
    epochs: (u64, u64),
    nonce: &[u8],
    message: &[u8],
) -> BigUint {
    Transcript::new("chainanchor/membership")
        .ints(gpk.transcript_ints())
        .ints([base, pseudonym, blinded, commit_n, commit_p])
        .u64(epochs.0)
        .u64(epochs.1)
        .bytes(nonce)
        .bytes(message)
        .challenge(gpk.profile.challenge_bits)
}

#[allow(clippy::too_many_arguments)]
fn nonrevocation_challenge(
    gpk: &GroupPublicKey,
    kind: RevocationKind,
    index: usize,
    outer: &BigUint,
    sig_base: &SubgroupElement,
    sig_pseudonym: &SubgroupElement,
    entry: &RevocationEntry,
    w: &SubgroupElement,
    t_entry: &SubgroupElement,
    t_sig: &SubgroupElement,
) -> BigUint {
    Transcript::new("chainanchor/nonrevocation")
        .bytes(kind.tag())
        .u64(index as u64)
        .int(outer)
        .ints([
            sig_base.value(),
            sig_pseudonym.value(),
            entry.base.value(),
            entry.pseudonym.value(),
            w.value(),
            t_entry.value(),
            t_sig.value(),
        ])
        .challenge(gpk.profile.challenge_bits)
}

/// `x^a y^-b` in the subgroup.
fn pair_exp(
    group: &SchnorrGroup,
    x: &SubgroupElement,
    a: &BigUint,
    y: &SubgroupElement,
    b: &BigUint,
) -> SubgroupElement {
    group.mul(&group.pow(x, a), &group.pow_neg(y, b))
}

#[allow(clippy::too_many_arguments)]
fn prove_nonrevocation<R: Rng + ?Sized>(
    gpk: &GroupPublicKey,
    f: &BigUint,
    sig_base: &SubgroupElement,
    sig_pseudonym: &SubgroupElement,
    kind: RevocationKind,
    index: usize,
    entry: &RevocationEntry,
    outer: &BigUint,
    rng: &mut R,
) -> NonRevocationProof {
    let group = &gpk.subgroup;
    let q = group.q();
    let mu = group.random_exponent(rng);
    let w = group.pow(&pair_exp(group, &entry.base, f, &entry.pseudonym, &BigUint::one()), &mu);
    let alpha = (f * &mu) % q;
    let beta = mu;

    let r_alpha = rng.gen_biguint_below(q);
    let r_beta = rng.gen_biguint_below(q);
    let t_entry = pair_exp(group, &entry.base, &r_alpha, &entry.pseudonym, &r_beta);
    let t_sig = pair_exp(group, sig_base, &r_alpha, sig_pseudonym, &r_beta);
    let challenge =
        nonrevocation_challenge(gpk, kind, index, outer, sig_base, sig_pseudonym, entry, &w, &t_entry, &t_sig);
    NonRevocationProof {
        s_alpha: (r_alpha + &challenge * alpha) % q,
        s_beta: (r_beta + &challenge * beta) % q,
        challenge,
        w,
    }
}

fn verify_nonrevocation(
    gpk: &GroupPublicKey,
    sig: &MembershipSignature,
    kind: RevocationKind,
    index: usize,
    entry: &RevocationEntry,
    proof: &NonRevocationProof,
) -> Result<(), NonRevocationFailure> {
    let group = &gpk.subgroup;
    let q = group.q();
    if !group.contains(proof.w.value()) {
        return Err(NonRevocationFailure::Range);
    }
    if proof.w.is_identity() {
        return Err(NonRevocationFailure::Revoked);
    }
    if proof.s_alpha >= *q || proof.s_beta >= *q || proof.challenge >= pow2(gpk.profile.challenge_bits) {
        return Err(NonRevocationFailure::Range);
    }
    let t_entry = group.mul(
        &pair_exp(group, &entry.base, &proof.s_alpha, &entry.pseudonym, &proof.s_beta),
        &group.pow_neg(&proof.w, &proof.challenge),
    );
    let t_sig = pair_exp(group, &sig.base, &proof.s_alpha, &sig.pseudonym, &proof.s_beta);
    let expected = nonrevocation_challenge(
        gpk,
        kind,
        index,
        &sig.challenge,
        &sig.base,
        &sig.pseudonym,
        entry,
        &proof.w,
        &t_entry,
        &t_sig,
    );
    if expected == proof.challenge {
        Ok(())
    } else {
        Err(NonRevocationFailure::Proof)
    }
}

#[derive(Default)]
struct SignOptions {
    skip_revocation_check: bool,
    r_f: Option<BigUint>,
}

#[allow(clippy::too_many_arguments)]
fn sign_inner<R: Rng + ?Sized>(
    sk: &UserMemberPrivateKey,
    gpk: &GroupPublicKey,
    message: &[u8],
    nonce: &[u8],
    base_mode: &BaseMode,
    sig_rl: &RevocationList,
    issuer_rl: &RevocationList,
    opts: SignOptions,
    rng: &mut R,
) -> Result<MembershipSignature, SignError> {
    if sig_rl.kind() != RevocationKind::Signature || issuer_rl.kind() != RevocationKind::Issuer {
        return Err(SignError::ListKind);
    }
    let profile = &gpk.profile;
    let group = &gpk.subgroup;
    let n = &gpk.modulus;
    let e_offset = pow2(profile.prime_e_bits - 1);
    if sk.e < e_offset {
        return Err(SignError::InconsistentKey);
    }

    let base = match base_mode {
        BaseMode::Random => group.random_element(rng),
        BaseMode::Named(name) => group.hash_to_element(name),
    };
    let pseudonym = group.pow(&base, &sk.f);

    if !opts.skip_revocation_check {
        for rl in [sig_rl, issuer_rl] {
            if rl.entries().iter().any(|entry| group.pow(&entry.base, &sk.f) == entry.pseudonym) {
                return Err(SignError::Revoked(rl.kind()));
            }
        }
    }

    let w = rng.gen_biguint(u64::from(profile.credential_blinding_bits()));
    let blinded = (&sk.a * gpk.randomizer_base.modpow(&w, n)) % n;
    let v_hat = BigInt::from(sk.v.clone()) - BigInt::from(sk.e.clone()) * BigInt::from(w);

    let (e_bits, f_bits, v_bits) = mask_bits(gpk);
    let r_e = rng.gen_biguint(u64::from(e_bits));
    let r_f = opts.r_f.unwrap_or_else(|| rng.gen_biguint(u64::from(f_bits)));
    let r_v = rng.gen_biguint(u64::from(v_bits));

    let commit_n =
        (blinded.modpow(&r_e, n) * gpk.secret_base.modpow(&r_f, n) * gpk.randomizer_base.modpow(&r_v, n)) % n;
    let commit_p = group.pow(&base, &r_f);
    let epochs = (sig_rl.epoch(), issuer_rl.epoch());
    let challenge = membership_challenge(
        gpk,
        base.value(),
        pseudonym.value(),
        &blinded,
        &commit_n,
        commit_p.value(),
        epochs,
        nonce,
        message,
    );

    let s_e = r_e + &challenge * (&sk.e - &e_offset);
    let s_f = r_f + &challenge * &sk.f;
    let s_v = BigInt::from(r_v) + BigInt::from(challenge.clone()) * v_hat;

    let prove_list = |rl: &RevocationList, rng: &mut R| -> Vec<NonRevocationProof> {
        rl.entries()
            .iter()
            .enumerate()
            .map(|(i, entry)| prove_nonrevocation(gpk, &sk.f, &base, &pseudonym, rl.kind(), i, entry, &challenge, rng))
            .collect()
    };
    let sig_rl_proofs = prove_list(sig_rl, rng);
    let issuer_rl_proofs = prove_list(issuer_rl, rng);

    Ok(MembershipSignature {
        base,
        pseudonym,
        blinded_credential: blinded,
        challenge,
        s_e,
        s_f,
        s_v,
        sig_rl_epoch: epochs.0,
        issuer_rl_epoch: epochs.1,
        sig_rl_proofs,
        issuer_rl_proofs,
    })
}

/// Signs `message` under the verifier's `nonce`, proving membership and
/// non-revocation against both lists.
#[allow(clippy::too_many_arguments)]
pub fn sign_membership<R: Rng + ?Sized>(
    sk: &UserMemberPrivateKey,
    gpk: &GroupPublicKey,
    message: &[u8],
    nonce: &[u8],
    base_mode: &BaseMode,
    sig_rl: &RevocationList,
    issuer_rl: &RevocationList,
    rng: &mut R,
) -> Result<MembershipSignature, SignError> {
    sign_inner(sk, gpk, message, nonce, base_mode, sig_rl, issuer_rl, SignOptions::default(), rng)
}

/// Signs without the signer-side revocation check. A revoked signer gets a
/// signature whose non-revocation proof carries `W = 1`; used to show that
/// verifiers reject it.
#[doc(hidden)]
#[allow(clippy::too_many_arguments)]
pub fn sign_membership_bypassing_revocation<R: Rng + ?Sized>(
    sk: &UserMemberPrivateKey,
    gpk: &GroupPublicKey,
    message: &[u8],
    nonce: &[u8],
    base_mode: &BaseMode,
    sig_rl: &RevocationList,
    issuer_rl: &RevocationList,
    rng: &mut R,
) -> Result<MembershipSignature, SignError> {
    let opts = SignOptions { skip_revocation_check: true, ..SignOptions::default() };
    sign_inner(sk, gpk, message, nonce, base_mode, sig_rl, issuer_rl, opts, rng)
}

/// Verifies all three components against the current revocation lists.
pub fn verify_membership(
    gpk: &GroupPublicKey,
    message: &[u8],
    nonce: &[u8],
    sig: &MembershipSignature,
    sig_rl: &RevocationList,
    issuer_rl: &RevocationList,
) -> Result<(), VerifyError> {
    if sig_rl.kind() != RevocationKind::Signature || issuer_rl.kind() != RevocationKind::Issuer {
        return Err(VerifyError::ListKind);
    }
    if sig.sig_rl_epoch != sig_rl.epoch() || sig.issuer_rl_epoch != issuer_rl.epoch() {
        return Err(VerifyError::Epoch);
    }
    if sig.sig_rl_proofs.len() != sig_rl.len() || sig.issuer_rl_proofs.len() != issuer_rl.len() {
        return Err(VerifyError::ProofCount);
    }

    let profile = &gpk.profile;
    let group = &gpk.subgroup;
    let n = &gpk.modulus;
    if sig.base.is_identity() || !group.contains(sig.base.value()) {
        return Err(VerifyError::Base);
    }
    if !group.contains(sig.pseudonym.value()) {
        return Err(VerifyError::Pseudonym);
    }
    let t = &sig.blinded_credential;
    if t.is_zero() || t >= n || !t.gcd(n).is_one() {
        return Err(VerifyError::BlindedCredential);
    }

    let (e_bits, f_bits, v_bits) = mask_bits(gpk);
    if sig.challenge >= pow2(profile.challenge_bits) {
        return Err(VerifyError::Interval("c"));
    }
    if sig.s_e >= pow2(e_bits + 1) {
        return Err(VerifyError::Interval("s_e"));
    }
    if sig.s_f >= pow2(f_bits + 1) {
        return Err(VerifyError::Interval("s_f"));
    }
    if sig.s_v.abs() >= BigInt::from(pow2(v_bits + 1)) {
        return Err(VerifyError::Interval("s_v"));
    }

    let c = &sig.challenge;
    let e_exp = &sig.s_e + c * pow2(profile.prime_e_bits - 1);
    let z_inv = gpk.target.modinv(n).ok_or(VerifyError::Challenge)?;
    let s_term = pow_signed(&gpk.randomizer_base, &sig.s_v, n).ok_or(VerifyError::Challenge)?;
    let commit_n = (z_inv.modpow(c, n) * t.modpow(&e_exp, n) * gpk.secret_base.modpow(&sig.s_f, n) * s_term) % n;
    let commit_p = group.mul(&group.pow_neg(&sig.pseudonym, c), &group.pow(&sig.base, &sig.s_f));
    let expected = membership_challenge(
        gpk,
        sig.base.value(),
        sig.pseudonym.value(),
        t,
        &commit_n,
        commit_p.value(),
        (sig.sig_rl_epoch, sig.issuer_rl_epoch),
        nonce,
        message,
    );
    if expected != *c {
        return Err(VerifyError::Challenge);
    }

    for (rl, proofs) in [(sig_rl, &sig.sig_rl_proofs), (issuer_rl, &sig.issuer_rl_proofs)] {
        for (index, (entry, proof)) in rl.entries().iter().zip(proofs).enumerate() {
            verify_nonrevocation(gpk, sig, rl.kind(), index, entry, proof)
                .map_err(|reason| VerifyError::NonRevocation { kind: rl.kind(), index, reason })?;
        }
    }
    Ok(())
}

/// True iff the signature's base is the one derived from `basename`.
pub fn uses_named_base(gpk: &GroupPublicKey, sig: &MembershipSignature, basename: &[u8]) -> bool {
    sig.base == gpk.subgroup.hash_to_element(basename)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epid::revocation::{revoke_by_issuer, revoke_signature};
    use crate::epid::test_support::{desk_group, member};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn empty_lists() -> (RevocationList, RevocationList) {
        (RevocationList::new(RevocationKind::Signature), RevocationList::new(RevocationKind::Issuer))
    }

    #[test]
    fn honest_signature_verifies() {
        let (gpk, _) = desk_group();
        let sk = member(1);
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(30);
        let sig = sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl, &irl, &mut rng).unwrap();
        verify_membership(gpk, b"m", b"n", &sig, &srl, &irl).unwrap();
        assert_eq!(verify_membership(gpk, b"m2", b"n", &sig, &srl, &irl), Err(VerifyError::Challenge));
        assert_eq!(verify_membership(gpk, b"m", b"n2", &sig, &srl, &irl), Err(VerifyError::Challenge));
    }

    #[test]
    fn signature_round_trips_through_serde() {
        let (gpk, _) = desk_group();
        let sk = member(2);
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for _ in 0..4 {
            let sig = sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl, &irl, &mut rng).unwrap();
            let text = serde_json::to_string(&sig).unwrap();
            let back: MembershipSignature = serde_json::from_str(&text).unwrap();
            assert_eq!(back, sig);
            verify_membership(gpk, b"m", b"n", &back, &srl, &irl).unwrap();
        }
    }

    #[test]
    fn named_base_pseudonym_is_stable() {
        let (gpk, _) = desk_group();
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let mode = BaseMode::Named(b"idp-verifier.com".to_vec());
        let sk = member(3);
        let a = sign_membership(&sk, gpk, b"m", b"n", &mode, &srl, &irl, &mut rng).unwrap();
        let b = sign_membership(&sk, gpk, b"m", b"n", &mode, &srl, &irl, &mut rng).unwrap();
        assert_eq!(a.pseudonym, b.pseudonym);
        assert_ne!(a.blinded_credential, b.blinded_credential);
        assert_ne!(a.challenge, b.challenge);
        assert_ne!(a.s_f, b.s_f);
        assert!(uses_named_base(gpk, &a, b"idp-verifier.com"));
        verify_membership(gpk, b"m", b"n", &b, &srl, &irl).unwrap();

        let other = sign_membership(&member(4), gpk, b"m", b"n", &mode, &srl, &irl, &mut rng).unwrap();
        assert_ne!(other.pseudonym, a.pseudonym);
    }

    #[test]
    fn revoked_signer_cannot_sign_and_bypass_is_caught() {
        let (gpk, _) = desk_group();
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let sk = member(5);
        let old = sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl, &irl, &mut rng).unwrap();
        let srl2 = revoke_signature(&srl, old.base.clone(), old.pseudonym.clone());

        assert_eq!(
            sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl2, &irl, &mut rng),
            Err(SignError::Revoked(RevocationKind::Signature))
        );
        let forged =
            sign_membership_bypassing_revocation(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl2, &irl, &mut rng)
                .unwrap();
        let err = verify_membership(gpk, b"m", b"n", &forged, &srl2, &irl).unwrap_err();
        assert_eq!(
            err,
            VerifyError::NonRevocation {
                kind: RevocationKind::Signature,
                index: 0,
                reason: NonRevocationFailure::Revoked
            }
        );
        assert_eq!(err.to_string(), "sig-rl entry 0: revoked");

        // The pre-revocation signature is stale.
        assert_eq!(verify_membership(gpk, b"m", b"n", &old, &srl2, &irl), Err(VerifyError::Epoch));

        // Other members still sign and verify against the updated list.
        let ok = sign_membership(&member(6), gpk, b"m", b"n", &BaseMode::Random, &srl2, &irl, &mut rng).unwrap();
        verify_membership(gpk, b"m", b"n", &ok, &srl2, &irl).unwrap();
        assert_eq!(ok.sig_rl_proofs.len(), 1);
    }

    #[test]
    fn issuer_revocation_blocks_signer() {
        let (gpk, _) = desk_group();
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        let sk = member(7);
        let sig = sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl, &irl, &mut rng).unwrap();
        let irl2 = revoke_by_issuer(&irl, sig.base, sig.pseudonym);
        assert_eq!(
            sign_membership(&sk, gpk, b"m", b"n", &BaseMode::Random, &srl, &irl2, &mut rng),
            Err(SignError::Revoked(RevocationKind::Issuer))
        );
        let ok = sign_membership(&member(8), gpk, b"m", b"n", &BaseMode::Random, &srl, &irl2, &mut rng).unwrap();
        verify_membership(gpk, b"m", b"n", &ok, &srl, &irl2).unwrap();
    }

    #[test]
    fn oversized_mask_is_rejected_even_though_algebra_holds() {
        let (gpk, _) = desk_group();
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(35);
        let (_, f_bits, _) = mask_bits(gpk);
        let opts = SignOptions { r_f: Some(pow2(f_bits + 2)), ..SignOptions::default() };
        let sig = sign_inner(&member(9), gpk, b"m", b"n", &BaseMode::Random, &srl, &irl, opts, &mut rng).unwrap();
        assert_eq!(verify_membership(gpk, b"m", b"n", &sig, &srl, &irl), Err(VerifyError::Interval("s_f")));

        // Same signature with the interval check removed would pass: the
        // representation itself is consistent.
        let c = &sig.challenge;
        let n = &gpk.modulus;
        let e_exp = &sig.s_e + c * pow2(gpk.profile.prime_e_bits - 1);
        let commit_n = (gpk.target.modinv(n).unwrap().modpow(c, n)
            * sig.blinded_credential.modpow(&e_exp, n)
            * gpk.secret_base.modpow(&sig.s_f, n)
            * pow_signed(&gpk.randomizer_base, &sig.s_v, n).unwrap())
            % n;
        let group = &gpk.subgroup;
        let commit_p = group.mul(&group.pow_neg(&sig.pseudonym, c), &group.pow(&sig.base, &sig.s_f));
        let recomputed = membership_challenge(
            gpk,
            sig.base.value(),
            sig.pseudonym.value(),
            &sig.blinded_credential,
            &commit_n,
            commit_p.value(),
            (0, 0),
            b"n",
            b"m",
        );
        assert_eq!(&recomputed, c);
    }

    #[test]
    fn lists_in_wrong_order_are_refused() {
        let (gpk, _) = desk_group();
        let (srl, irl) = empty_lists();
        let mut rng = ChaCha20Rng::seed_from_u64(36);
        assert_eq!(
            sign_membership(&member(1), gpk, b"m", b"n", &BaseMode::Random, &irl, &srl, &mut rng),
            Err(SignError::ListKind)
        );
    }
}
