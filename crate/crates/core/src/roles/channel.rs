//! Simulated message transport: envelopes, a logging network with an
//! optional in-transit tamper hook, and AEAD framing for PSK channels.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::messages::Message;
use crate::group_math::encoding::hex_bytes;
use crate::group_math::{SchnorrGroup, Transcript};
use crate::signature::{KeyPair, Signature, SignatureError, VerifyingKey};

pub const AEAD_NONCE_LEN: usize = 12;
pub const AEAD_TAG_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub sender: String,
    pub recipient: String,
    /// Protocol step this message belongs to, e.g. `"6.3"`.
    pub step: String,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Signature>,
}

impl Envelope {
    pub fn new(sender: &str, recipient: &str, step: &str, message: &Message) -> Self {
        Self {
            sender: sender.to_owned(),
            recipient: recipient.to_owned(),
            step: step.to_owned(),
            payload: message.to_bytes(),
            signature: None,
        }
    }

    pub fn message(&self) -> Option<Message> {
        Message::from_bytes(&self.payload)
    }

    /// Decodes the payload, lets `f` edit it, and re-encodes. Payloads that
    /// fail to decode are left alone.
    pub fn edit_message(&mut self, f: impl FnOnce(&mut Message)) {
        if let Some(mut m) = self.message() {
            f(&mut m);
            self.payload = m.to_bytes();
        }
    }

    fn signing_bytes(&self) -> Vec<u8> {
        Transcript::new("chainanchor/envelope")
            .bytes(&self.sender)
            .bytes(&self.recipient)
            .bytes(&self.step)
            .bytes(&self.payload)
            .encode()
    }

    /// Signs sender, recipient, step and payload.
    pub fn signed<R: Rng + ?Sized>(mut self, key: &KeyPair, group: &SchnorrGroup, rng: &mut R) -> Self {
        self.signature = Some(key.sign(group, &self.signing_bytes(), rng));
        self
    }

    /// Unsigned envelopes fail with `Mismatch`.
    pub fn verify_signature(&self, key: &VerifyingKey, group: &SchnorrGroup) -> Result<(), SignatureError> {
        let sig = self.signature.as_ref().ok_or(SignatureError::Mismatch)?;
        key.verify(group, &self.signing_bytes(), sig)
    }

    /// One line per envelope; this is what a party "saw".
    pub fn transcript_line(&self) -> String {
        let sig = match &self.signature {
            Some(s) => format!(" sig={}", serde_json::to_string(s).unwrap_or_default()),
            None => String::new(),
        };
        format!(
            "[{}] {} -> {} {}{}",
            self.step,
            self.sender,
            self.recipient,
            String::from_utf8_lossy(&self.payload),
            sig
        )
    }
}

pub type TamperHook = Box<dyn FnMut(&mut Envelope) + Send>;

/// Delivers envelopes in order and keeps a log of what was delivered.
#[derive(Default, Serialize, Deserialize)]
pub struct Network {
    log: Vec<Envelope>,
    #[serde(skip)]
    tamper: Option<TamperHook>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network").field("delivered", &self.log.len()).field("tamper", &self.tamper.is_some()).finish()
    }
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Self { log: self.log.clone(), tamper: None }
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.log == other.log
    }
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    /// Installs a hook that may rewrite every subsequent envelope in transit.
    pub fn set_tamper(&mut self, hook: impl FnMut(&mut Envelope) + Send + 'static) {
        self.tamper = Some(Box::new(hook));
    }

    pub fn clear_tamper(&mut self) {
        self.tamper = None;
    }

    /// Passes `env` through the tamper hook, logs it, and returns what the
    /// recipient receives.
    pub fn deliver(&mut self, mut env: Envelope) -> Envelope {
        if let Some(hook) = self.tamper.as_mut() {
            hook(&mut env);
        }
        self.log.push(env.clone());
        env
    }

    pub fn log(&self) -> &[Envelope] {
        &self.log
    }

    /// Every envelope `party` sent or received, one line each.
    pub fn transcript_for(&self, party: &str) -> String {
        let mut out = String::new();
        for env in self.log.iter().filter(|e| e.sender == party || e.recipient == party) {
            out.push_str(&env.transcript_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("authenticated decryption failed")]
pub struct AeadError;

/// `nonce ‖ ciphertext ‖ tag` under ChaCha20-Poly1305.
pub fn seal<R: Rng + ?Sized>(key: &[u8; 32], aad: &[u8], plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    let nonce: [u8; AEAD_NONCE_LEN] = rng.gen();
    let ct = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad })
        .expect("in-memory encryption cannot fail");
    let mut out = nonce.to_vec();
    out.extend_from_slice(&ct);
    out
}

pub fn open(key: &[u8; 32], aad: &[u8], framed: &[u8]) -> Result<Vec<u8>, AeadError> {
    if framed.len() < AEAD_NONCE_LEN + AEAD_TAG_LEN {
        return Err(AeadError);
    }
    let (nonce, ct) = framed.split_at(AEAD_NONCE_LEN);
    ChaCha20Poly1305::new(Key::from_slice(key))
        .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad })
        .map_err(|_| AeadError)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn aead_round_trip_and_tamper() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let key = [7u8; 32];
        let framed = seal(&key, b"aad", b"hello", &mut rng);
        assert_eq!(framed.len(), AEAD_NONCE_LEN + 5 + AEAD_TAG_LEN);
        assert_eq!(open(&key, b"aad", &framed).unwrap(), b"hello");
        assert_eq!(open(&key, b"other", &framed), Err(AeadError));
        assert_eq!(open(&[8u8; 32], b"aad", &framed), Err(AeadError));
        for i in 0..framed.len() {
            let mut bad = framed.clone();
            bad[i] ^= 1;
            assert_eq!(open(&key, b"aad", &bad), Err(AeadError), "byte {i}");
        }
        assert_eq!(open(&key, b"aad", &framed[..10]), Err(AeadError));
    }

    #[test]
    fn network_logs_delivered_copy() {
        let mut net = Network::new();
        let env = Envelope {
            sender: "a".into(),
            recipient: "b".into(),
            step: "1".into(),
            payload: b"xyz".to_vec(),
            signature: None,
        };
        net.set_tamper(|e| e.payload[0] = b'q');
        let got = net.deliver(env);
        assert_eq!(got.payload, b"qyz");
        assert_eq!(net.log()[0], got);
        assert!(net.transcript_for("a").contains("qyz"));
        assert!(net.transcript_for("c").is_empty());
    }
}
