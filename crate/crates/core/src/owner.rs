//! The owner's side of issuing watermarked copies: one call per user turns
//! a signed timestamp into a released graph plus the registry entry needed
//! to recognize it later.

use rand::RngCore;

use crate::embed::{anonymize_with_permutation, embed_user, GroupLayout, NodeOrdering, ReleasePackage};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::keys::{
    accept_response, group_seed, GraphKey, GroupAssignment, GroupLabel, PartyKeyPair, PublicIdentity, RegistryEntry,
    SeedKind, SignedTimestamp,
};

pub struct Owner {
    key: GraphKey,
    graph: Graph,
    ordering: NodeOrdering,
    k: usize,
    copies: u32,
    groups: Option<(GroupAssignment, GroupLayout)>,
}

/// Everything one issuance produces. `permutation` maps owner ids to
/// released ids and is only for test harnesses; it is never published.
pub struct Issued {
    pub release: ReleasePackage,
    pub entry: RegistryEntry,
    pub watermarked: Graph,
    pub permutation: Vec<NodeId>,
}

impl Owner {
    pub fn new(graph: Graph, key: GraphKey, k: usize, copies: u32) -> Self {
        let ordering = NodeOrdering::new(&graph);
        Owner {
            key,
            graph,
            ordering,
            k,
            copies,
            groups: None,
        }
    }

    /// Enables group watermarks; their node regions are fixed here.
    pub fn with_groups(mut self, assignment: GroupAssignment) -> Result<Self> {
        let seeds = GroupLabel::ALL
            .iter()
            .map(|&l| group_seed(&self.key, assignment.key(l), &assignment.epoch))
            .collect::<Result<Vec<_>>>()?;
        let layout = GroupLayout::new(&self.ordering, &seeds, self.k)?;
        self.groups = Some((assignment, layout));
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn groups(&self) -> Option<&GroupAssignment> {
        self.groups.as_ref().map(|(a, _)| a)
    }

    /// Verifies the user's signed timestamp, embeds, and anonymizes.
    pub fn issue<R: RngCore>(&self, user: &PublicIdentity, signed: &SignedTimestamp, rng: &mut R) -> Result<Issued> {
        let seed = accept_response(&self.key, user, signed, SeedKind::User, Default::default())?;
        let labels = self.groups.as_ref().and_then(|(a, _)| a.labels(&user.party_id));
        let layout = match (&self.groups, labels) {
            (Some((_, layout)), Some(l)) => Some((layout, l)),
            (Some(_), None) => {
                return Err(Error::param(format!("`{}` is not in the group assignment", user.party_id)))
            }
            (None, _) => None,
        };
        let (watermarked, records) = embed_user(&self.graph, &self.ordering, layout, &seed, self.copies, self.k)?;
        let (released, permutation) = anonymize_with_permutation(&watermarked, rng);
        Ok(Issued {
            release: ReleasePackage {
                graph: released,
                party_id: user.party_id.clone(),
                timestamp: signed.timestamp.clone(),
            },
            entry: RegistryEntry {
                party_id: user.party_id.clone(),
                timestamp: signed.timestamp.clone(),
                signature: signed.signature.clone(),
                seed,
                groups: labels,
                records,
            },
            watermarked,
            permutation,
        })
    }

    /// Convenience for callers holding the user's key pair themselves.
    pub fn issue_to<R: RngCore>(&self, user: &PartyKeyPair, t: &crate::keys::Timestamp, rng: &mut R) -> Result<Issued> {
        self.issue(&user.public(), &user.respond(t), rng)
    }
}
