//! Graph keys, party signatures and the seeds derived from them.
//!
//! The owner holds a secret graph key `K^G`. A party proves its identity by
//! signing an issue timestamp; the seed for that issuance is
//! `H(K^G || signature)`. Seeds drive every random choice made while
//! watermarking, so the owner can recompute them later from the registry.

mod registry;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{b64, Digest, HashAlgorithm};

pub use registry::{registry_load, registry_store, Registry, RegistryEntry};

/// The owner's 32-byte secret. Its `Debug` output is redacted.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphKey(#[serde(with = "b64")] [u8; 32]);

impl GraphKey {
    pub fn generate() -> Self {
        let mut bytes = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut bytes);
        GraphKey(bytes)
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        GraphKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for GraphKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GraphKey(..)")
    }
}

/// An Ed25519 key pair bound to a party name.
#[derive(Clone, Serialize, Deserialize)]
pub struct PartyKeyPair {
    pub party_id: String,
    #[serde(with = "b64")]
    secret: [u8; 32],
}

impl PartyKeyPair {
    pub fn generate(party_id: impl Into<String>) -> Self {
        Self::generate_with(party_id, &mut rand::rngs::OsRng)
    }

    pub fn generate_with<R: rand::CryptoRng + RngCore>(party_id: impl Into<String>, rng: &mut R) -> Self {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        PartyKeyPair {
            party_id: party_id.into(),
            secret,
        }
    }

    pub fn from_secret(party_id: impl Into<String>, secret: [u8; 32]) -> Self {
        PartyKeyPair {
            party_id: party_id.into(),
            secret,
        }
    }

    pub fn secret_bytes(&self) -> &[u8; 32] {
        &self.secret
    }

    fn signing_key(&self) -> SigningKey {
        SigningKey::from_bytes(&self.secret)
    }

    pub fn public(&self) -> PublicIdentity {
        PublicIdentity {
            party_id: self.party_id.clone(),
            key: self.signing_key().verifying_key().to_bytes(),
        }
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.signing_key().sign(message).to_bytes()
    }

    /// The party's half of the challenge: a signature over the timestamp.
    pub fn respond(&self, t: &Timestamp) -> SignedTimestamp {
        SignedTimestamp {
            party_id: self.party_id.clone(),
            timestamp: t.clone(),
            signature: self.sign(t.as_str().as_bytes()).to_vec(),
        }
    }
}

impl fmt::Debug for PartyKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartyKeyPair")
            .field("party_id", &self.party_id)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicIdentity {
    pub party_id: String,
    #[serde(with = "b64")]
    pub key: [u8; 32],
}

impl PublicIdentity {
    pub fn verify(&self, message: &[u8], signature: &[u8]) -> Result<()> {
        let rejected = || Error::SignatureRejected {
            party: self.party_id.clone(),
        };
        let key = VerifyingKey::from_bytes(&self.key).map_err(|_| rejected())?;
        let sig = Signature::from_slice(signature).map_err(|_| rejected())?;
        key.verify(message, &sig).map_err(|_| rejected())
    }
}

/// Canonical UTC instant, e.g. `2024-05-01T12:00:00Z`. The exact string is
/// what gets signed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(String);

impl Timestamp {
    pub fn now() -> Self {
        Self::from_datetime(Utc::now())
    }

    pub fn from_unix(secs: i64) -> Result<Self> {
        DateTime::from_timestamp(secs, 0)
            .map(Self::from_datetime)
            .ok_or_else(|| Error::Timestamp(secs.to_string()))
    }

    /// Accepts any RFC 3339 string and normalizes it to UTC.
    pub fn parse(text: &str) -> Result<Self> {
        DateTime::parse_from_rfc3339(text.trim())
            .map(|t| Self::from_datetime(t.with_timezone(&Utc)))
            .map_err(|_| Error::Timestamp(text.to_string()))
    }

    fn from_datetime(t: DateTime<Utc>) -> Self {
        Timestamp(t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Timestamp {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Timestamp::parse(&s)
    }
}

impl From<Timestamp> for String {
    fn from(t: Timestamp) -> String {
        t.0
    }
}

/// What a party returns when challenged with a timestamp.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTimestamp {
    pub party_id: String,
    pub timestamp: Timestamp,
    #[serde(with = "b64")]
    pub signature: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    User,
    Group,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: SeedKind,
    pub party_id: String,
    pub timestamp: Timestamp,
}

/// A derived random-generator seed (`Ω`).
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    #[serde(with = "b64")]
    pub bytes: Digest,
    pub provenance: Provenance,
}

impl Seed {
    /// A deterministic stream keyed by the seed. Distinct `stream` values give
    /// independent sequences, so different uses never share randomness.
    pub fn rng(&self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.bytes);
        rng.set_stream(stream);
        rng
    }

    /// Seed for tests and experiments that do not need a signing round.
    pub fn from_label(label: &str) -> Self {
        Seed {
            bytes: HashAlgorithm::default().digest(&[b"graphmark-test-seed:", label.as_bytes()]),
            provenance: Provenance {
                kind: SeedKind::User,
                party_id: label.to_string(),
                timestamp: Timestamp::from_unix(0).expect("epoch"),
            },
        }
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Seed")
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

/// `H(K^G || signature)`.
pub fn derive_seed_bytes(owner: &GraphKey, signature: &[u8], alg: HashAlgorithm) -> Digest {
    alg.digest(&[owner.as_bytes(), signature])
}

/// Owner side of the exchange: verify the response, then derive the seed.
pub fn accept_response(
    owner: &GraphKey,
    party: &PublicIdentity,
    response: &SignedTimestamp,
    kind: SeedKind,
    alg: HashAlgorithm,
) -> Result<Seed> {
    if party.party_id != response.party_id {
        return Err(Error::SignatureRejected {
            party: response.party_id.clone(),
        });
    }
    party.verify(response.timestamp.as_str().as_bytes(), &response.signature)?;
    Ok(Seed {
        bytes: derive_seed_bytes(owner, &response.signature, alg),
        provenance: Provenance {
            kind,
            party_id: response.party_id.clone(),
            timestamp: response.timestamp.clone(),
        },
    })
}

/// The full in-process exchange for a user: the user signs `t`, the owner
/// verifies the signature and derives the user's seed.
pub fn challenge_response(owner: &GraphKey, user: &PartyKeyPair, t: &Timestamp) -> Result<Seed> {
    accept_response(owner, &user.public(), &user.respond(t), SeedKind::User, HashAlgorithm::default())
}

/// Seed of a group, from the group key's signature over `t`.
pub fn group_seed(owner: &GraphKey, group: &PartyKeyPair, t: &Timestamp) -> Result<Seed> {
    accept_response(owner, &group.public(), &group.respond(t), SeedKind::Group, HashAlgorithm::default())
}

/// User-side check that a group signature handed out with a release is
/// genuine.
pub fn verify_group_signature(group: &PublicIdentity, signed: &SignedTimestamp) -> Result<()> {
    if group.party_id != signed.party_id {
        return Err(Error::SignatureRejected {
            party: signed.party_id.clone(),
        });
    }
    group.verify(signed.timestamp.as_str().as_bytes(), &signed.signature)
}

/// A group name such as `a1` or `b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupLabel {
    /// 0 for partition `a`, 1 for partition `b`.
    pub partition: u8,
    /// 0 or 1 (printed as 1 or 2).
    pub index: u8,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 4] = [
        GroupLabel { partition: 0, index: 0 },
        GroupLabel { partition: 0, index: 1 },
        GroupLabel { partition: 1, index: 0 },
        GroupLabel { partition: 1, index: 1 },
    ];
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.partition == 0 { 'a' } else { 'b' };
        write!(f, "{p}{}", self.index + 1)
    }
}

impl TryFrom<String> for GroupLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        let b = s.as_bytes();
        let partition = match b.first() {
            Some(b'a') => 0,
            Some(b'b') => 1,
            _ => return Err(Error::param(format!("bad group label `{s}`"))),
        };
        let index = match (b.get(1), b.len()) {
            (Some(b'1'), 2) => 0,
            (Some(b'2'), 2) => 1,
            _ => return Err(Error::param(format!("bad group label `{s}`"))),
        };
        Ok(GroupLabel { partition, index })
    }
}

impl From<GroupLabel> for String {
    fn from(g: GroupLabel) -> String {
        g.to_string()
    }
}

/// Two independent random halvings of the user set (`a1`/`a2` and
/// `b1`/`b2`), with a key pair per group. Owner-side secret material.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupAssignment {
    /// Timestamp the group keys sign. Fixed for the lifetime of the
    /// assignment so every member of a group receives the same group seed.
    pub epoch: Timestamp,
    /// Keys for `a1, a2, b1, b2`, in that order.
    pub group_keys: Vec<PartyKeyPair>,
    pub members: BTreeMap<String, [GroupLabel; 2]>,
}

pub fn group_setup(users: &[String], owner: &GraphKey, rng_seed: u64) -> Result<GroupAssignment> {
    if users.is_empty() {
        return Err(Error::param("group setup needs at least one user"));
    }
    let material = HashAlgorithm::default().digest(&[b"graphmark-groups:", owner.as_bytes(), &rng_seed.to_le_bytes()]);
    let mut rng = ChaCha20Rng::from_seed(material);
    let group_keys = GroupLabel::ALL
        .iter()
        .map(|g| PartyKeyPair::generate_with(g.to_string(), &mut rng))
        .collect();
    let mut members = BTreeMap::new();
    for user in users {
        let a = rng.gen_range(0..2u8);
        let b = rng.gen_range(0..2u8);
        let labels = [
            GroupLabel { partition: 0, index: a },
            GroupLabel { partition: 1, index: b },
        ];
        if members.insert(user.clone(), labels).is_some() {
            return Err(Error::param(format!("duplicate user `{user}`")));
        }
    }
    Ok(GroupAssignment {
        epoch: Timestamp::from_unix(0)?,
        group_keys,
        members,
    })
}

impl GroupAssignment {
    pub fn labels(&self, user: &str) -> Option<[GroupLabel; 2]> {
        self.members.get(user).copied()
    }

    pub fn key(&self, label: GroupLabel) -> &PartyKeyPair {
        &self.group_keys[(label.partition * 2 + label.index) as usize]
    }

    /// Group seeds for `user`, partition `a` first.
    pub fn seeds_for(&self, owner: &GraphKey, user: &str) -> Result<Option<[Seed; 2]>> {
        let Some([a, b]) = self.labels(user) else {
            return Ok(None);
        };
        Ok(Some([
            group_seed(owner, self.key(a), &self.epoch)?,
            group_seed(owner, self.key(b), &self.epoch)?,
        ]))
    }

    /// Signatures handed to `user` with a release, so the user can check
    /// them with [`verify_group_signature`].
    pub fn signatures_for(&self, user: &str) -> Option<[SignedTimestamp; 2]> {
        let [a, b] = self.labels(user)?;
        Some([self.key(a).respond(&self.epoch), self.key(b).respond(&self.epoch)])
    }

    pub fn group_members(&self, label: GroupLabel) -> impl Iterator<Item = &str> {
        self.members
            .iter()
            .filter(move |(_, l)| l[label.partition as usize] == label)
            .map(|(u, _)| u.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn seed_is_deterministic_and_time_dependent() {
        let owner = GraphKey::from_bytes([7; 32]);
        let user = PartyKeyPair::from_secret("alice", [3; 32]);
        let s1 = challenge_response(&owner, &user, &t("2024-05-01T12:00:00Z")).unwrap();
        let s2 = challenge_response(&owner, &user, &t("2024-05-01T12:00:00Z")).unwrap();
        let s3 = challenge_response(&owner, &user, &t("2024-05-01T12:00:01Z")).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1.bytes, s3.bytes);
        let other_owner = GraphKey::from_bytes([8; 32]);
        assert_ne!(challenge_response(&other_owner, &user, &t("2024-05-01T12:00:00Z")).unwrap().bytes, s1.bytes);
    }

    #[test]
    fn seed_is_hash_of_key_and_signature() {
        let owner = GraphKey::from_bytes([1; 32]);
        let user = PartyKeyPair::from_secret("bob", [2; 32]);
        let ts = t("2030-01-01T00:00:00Z");
        let sig = user.sign(ts.as_str().as_bytes());
        let mut joined = owner.as_bytes().to_vec();
        joined.extend_from_slice(&sig);
        let expect = HashAlgorithm::Sha256.digest(&[&joined]);
        assert_eq!(challenge_response(&owner, &user, &ts).unwrap().bytes, expect);
    }

    #[test]
    fn tampered_signature_is_rejected() {
        let owner = GraphKey::from_bytes([1; 32]);
        let user = PartyKeyPair::from_secret("mallory", [9; 32]);
        let mut resp = user.respond(&t("2024-01-01T00:00:00Z"));
        resp.signature[5] ^= 1;
        let err = accept_response(&owner, &user.public(), &resp, SeedKind::User, HashAlgorithm::Sha256).unwrap_err();
        assert!(matches!(err, Error::SignatureRejected { ref party } if party == "mallory"));

        // signed by someone else
        let imposter = PartyKeyPair::from_secret("mallory", [10; 32]);
        let resp = imposter.respond(&t("2024-01-01T00:00:00Z"));
        assert!(accept_response(&owner, &user.public(), &resp, SeedKind::User, HashAlgorithm::Sha256).is_err());
    }

    #[test]
    fn timestamps_are_canonical_utc() {
        assert_eq!(t("2024-05-01T14:00:00+02:00").as_str(), "2024-05-01T12:00:00Z");
        assert_eq!(Timestamp::from_unix(0).unwrap().as_str(), "1970-01-01T00:00:00Z");
        assert!(Timestamp::parse("yesterday").is_err());
    }

    #[test]
    fn group_setup_structure() {
        let owner = GraphKey::from_bytes([4; 32]);
        let users: Vec<String> = (0..4).map(|i| format!("u{i}")).collect();
        let ga = group_setup(&users, &owner, 11).unwrap();
        for u in &users {
            let [a, b] = ga.labels(u).unwrap();
            assert_eq!((a.partition, b.partition), (0, 1));
        }
        let again = group_setup(&users, &owner, 11).unwrap();
        assert_eq!(ga.members, again.members);
        assert!(group_setup(&[], &owner, 1).is_err());
    }

    #[test]
    fn group_sizes_are_balanced() {
        let owner = GraphKey::from_bytes([5; 32]);
        let users: Vec<String> = (0..1000).map(|i| format!("user{i}")).collect();
        let ga = group_setup(&users, &owner, 2024).unwrap();
        for g in GroupLabel::ALL {
            // binomial(1000, 1/2): sd ~ 15.8, so [400, 600] is > 6 sd wide
            let size = ga.group_members(g).count();
            assert!((400..=600).contains(&size), "{g}: {size}");
        }
    }

    #[test]
    fn group_seeds_shared_within_group_only() {
        let owner = GraphKey::from_bytes([6; 32]);
        let users: Vec<String> = (0..40).map(|i| format!("u{i}")).collect();
        let ga = group_setup(&users, &owner, 3).unwrap();
        let a1 = GroupLabel { partition: 0, index: 0 };
        let a2 = GroupLabel { partition: 0, index: 1 };
        let in_a1: Vec<&str> = ga.group_members(a1).collect();
        let s0 = ga.seeds_for(&owner, in_a1[0]).unwrap().unwrap();
        let s1 = ga.seeds_for(&owner, in_a1[1]).unwrap().unwrap();
        assert_eq!(s0[0], s1[0]);
        let ka1 = group_seed(&owner, ga.key(a1), &ga.epoch).unwrap();
        let ka2 = group_seed(&owner, ga.key(a2), &ga.epoch).unwrap();
        assert_ne!(ka1.bytes, ka2.bytes);

        let [sa, sb] = ga.signatures_for(in_a1[0]).unwrap();
        verify_group_signature(&ga.key(a1).public(), &sa).unwrap();
        let mut forged = sb.clone();
        forged.signature[0] ^= 0x80;
        let [_, lb] = ga.labels(in_a1[0]).unwrap();
        assert!(verify_group_signature(&ga.key(lb).public(), &forged).is_err());
        assert!(verify_group_signature(&ga.key(a2).public(), &sa).is_err());
    }

    #[test]
    fn distinct_parties_and_times_give_distinct_seeds() {
        let owner = GraphKey::from_bytes([12; 32]);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let mut pairs = std::collections::HashSet::new();
        let mut seeds = std::collections::HashSet::new();
        for _ in 0..10_000 {
            let p: u32 = rng.gen_range(0..100);
            let mut secret = [0u8; 32];
            secret[..4].copy_from_slice(&p.to_le_bytes());
            let party = PartyKeyPair::from_secret(format!("p{p}"), secret);
            let ts = Timestamp::from_unix(rng.gen_range(0..4_000_000_000i64)).unwrap();
            if !pairs.insert((p, ts.clone())) {
                continue;
            }
            let seed = challenge_response(&owner, &party, &ts).unwrap();
            assert!(seeds.insert(seed.bytes));
        }
    }

    #[test]
    fn labels_roundtrip() {
        for g in GroupLabel::ALL {
            assert_eq!(GroupLabel::try_from(g.to_string()).unwrap(), g);
        }
        assert!(GroupLabel::try_from("c1".to_string()).is_err());
        assert!(GroupLabel::try_from("a3".to_string()).is_err());
    }

    #[test]
    fn debug_output_hides_secrets() {
        let k = GraphKey::from_bytes([0xAB; 32]);
        assert!(!format!("{k:?}").contains("171"));
        let p = PartyKeyPair::from_secret("x", [0xCD; 32]);
        assert!(!format!("{p:?}").contains("205"));
    }
}
