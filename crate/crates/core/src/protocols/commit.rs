//! Hash commit-reveal for sealed submissions.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::PartyId;

pub type Nonce = [u8; 16];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitError {
    #[error("reveal by {0} does not match its commitment")]
    Mismatch(PartyId),
    #[error("{0} already revealed")]
    AlreadyRevealed(PartyId),
}

pub fn commit_digest(payload: &[u8], nonce: &Nonce) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(payload);
    h.update(nonce);
    h.finalize().into()
}

/// Per-party nonce drawn from the scenario seed.
pub fn derive_nonce(seed: u64, party: &PartyId) -> Nonce {
    let mut h = Sha256::new();
    h.update(b"nonce");
    h.update(seed.to_be_bytes());
    h.update(party.as_str().as_bytes());
    let d: [u8; 32] = h.finalize().into();
    d[..16].try_into().expect("16 of 32 bytes")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub party: PartyId,
    pub digest: [u8; 32],
    pub revealed: Option<(Vec<u8>, Nonce)>,
}

impl Commitment {
    pub fn new(party: PartyId, digest: [u8; 32]) -> Self {
        Self {
            party,
            digest,
            revealed: None,
        }
    }

    pub fn seal(party: PartyId, payload: &[u8], nonce: &Nonce) -> Self {
        Self::new(party, commit_digest(payload, nonce))
    }

    pub fn reveal(&mut self, payload: Vec<u8>, nonce: Nonce) -> Result<&[u8], CommitError> {
        if self.revealed.is_some() {
            return Err(CommitError::AlreadyRevealed(self.party.clone()));
        }
        if commit_digest(&payload, &nonce) != self.digest {
            return Err(CommitError::Mismatch(self.party.clone()));
        }
        Ok(&self.revealed.insert((payload, nonce)).0)
    }
}
