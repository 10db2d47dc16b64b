//! Append-only forests grown by single attachments.
//!
//! Every non-root vertex points at exactly one parent born at an earlier
//! step. The cluster of a vertex `v` is the set of vertices attached directly
//! to `v`; its size is the in-degree of `v`. A vertex with no attachments is a
//! leaf, otherwise it is deep. Ids are dense and assigned in birth order, so
//! they double as a topological order.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    pub parent: Option<VertexId>,
    pub birth_step: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexStatus {
    pub is_leaf: bool,
    pub is_deep: bool,
    pub in_degree: usize,
}

/// Owner of a cluster offered to leaf attachment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ClusterOwner {
    Vertex(VertexId),
    /// Stand-in owner for a root that is still a leaf; roots belong to no
    /// real cluster but must be reachable by the first arrivals.
    Virtual,
}

/// A cluster with at least one leaf, as seen by leaf attachment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafCluster {
    pub owner: ClusterOwner,
    pub leaves: Vec<VertexId>,
    /// All members, leaf or deep. The virtual cluster has size 1.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    vertices: Vec<Vertex>,
    children: Vec<Vec<VertexId>>,
    roots: Vec<VertexId>,
    current_step: u64,
}

impl Default for Forest {
    fn default() -> Self {
        Self::new()
    }
}

impl Forest {
    /// A single root, id 0, born at step 0.
    pub fn new() -> Self {
        Self {
            vertices: vec![Vertex {
                id: VertexId(0),
                parent: None,
                birth_step: 0,
            }],
            children: vec![Vec::new()],
            roots: vec![VertexId(0)],
            current_step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len() - self.roots.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn roots(&self) -> &[VertexId] {
        &self.roots
    }

    pub fn current_step(&self) -> u64 {
        self.current_step
    }

    pub fn vertex(&self, v: VertexId) -> Result<&Vertex> {
        self.vertices.get(v.0).ok_or(Error::UnknownVertex(v.0))
    }

    fn check_step(&self, birth_step: u64) -> Result<()> {
        if birth_step < self.current_step {
            return Err(Error::TimeViolation(format!(
                "birth step {birth_step} precedes current step {}",
                self.current_step
            )));
        }
        Ok(())
    }

    fn push(&mut self, parent: Option<VertexId>, birth_step: u64) -> VertexId {
        let id = VertexId(self.vertices.len());
        self.vertices.push(Vertex {
            id,
            parent,
            birth_step,
        });
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p.0].push(id);
        } else {
            self.roots.push(id);
        }
        id
    }

    /// Appends a vertex attached to `parent`, born at `birth_step`.
    ///
    /// The parent must predate the new vertex: arrivals of a step are never
    /// targets within that same step.
    pub fn attach(&mut self, parent: VertexId, birth_step: u64) -> Result<VertexId> {
        let parent_birth = self
            .vertices
            .get(parent.0)
            .ok_or(Error::UnknownParent(parent.0))?
            .birth_step;
        self.check_step(birth_step)?;
        if parent_birth >= birth_step {
            return Err(Error::TimeViolation(format!(
                "vertex {parent} (born at step {parent_birth}) cannot receive an attachment born at step {birth_step}"
            )));
        }
        Ok(self.push(Some(parent), birth_step))
    }

    /// Plants a new root born at `birth_step`.
    pub fn add_root(&mut self, birth_step: u64) -> Result<VertexId> {
        self.check_step(birth_step)?;
        Ok(self.push(None, birth_step))
    }

    /// Marks `step` as finished. Steps never move backwards.
    pub fn advance_to(&mut self, step: u64) -> Result<()> {
        self.check_step(step)?;
        self.current_step = step;
        Ok(())
    }

    /// The cluster `C_v`: vertices attached directly to `v`.
    pub fn cluster_members(&self, v: VertexId) -> Result<&[VertexId]> {
        self.children
            .get(v.0)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownVertex(v.0))
    }

    pub fn in_degree(&self, v: VertexId) -> Result<usize> {
        self.cluster_members(v).map(<[VertexId]>::len)
    }

    pub fn status(&self, v: VertexId) -> Result<VertexStatus> {
        let in_degree = self.in_degree(v)?;
        Ok(VertexStatus {
            is_leaf: in_degree == 0,
            is_deep: in_degree > 0,
            in_degree,
        })
    }

    /// In-degrees of all vertices, indexed by id.
    pub fn in_degrees(&self) -> Vec<usize> {
        self.children.iter().map(Vec::len).collect()
    }

    /// Clusters still accepting leaf attachments, in owner-id order.
    ///
    /// A cluster qualifies while it contains at least one leaf. Each root that
    /// is still a leaf appears first, wrapped in a virtual cluster of size 1.
    pub fn eligible_leaf_clusters(&self) -> Vec<LeafCluster> {
        let mut out: Vec<LeafCluster> = self
            .roots
            .iter()
            .filter(|r| self.children[r.0].is_empty())
            .map(|&r| LeafCluster {
                owner: ClusterOwner::Virtual,
                leaves: vec![r],
                size: 1,
            })
            .collect();
        for (v, members) in self.children.iter().enumerate() {
            let leaves: Vec<VertexId> = members
                .iter()
                .copied()
                .filter(|c| self.children[c.0].is_empty())
                .collect();
            if !leaves.is_empty() {
                out.push(LeafCluster {
                    owner: ClusterOwner::Vertex(VertexId(v)),
                    leaves,
                    size: members.len(),
                });
            }
        }
        out
    }

    /// Set of all current leaves.
    pub fn leaves(&self) -> BTreeSet<VertexId> {
        self.children
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(v, _)| VertexId(v))
            .collect()
    }

    /// `child<TAB>parent<TAB>birth_step`, one line per edge, by child id.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in &self.vertices {
            if let Some(p) = v.parent {
                writeln!(out, "{}\t{}\t{}", v.id, p, v.birth_step)?;
            }
        }
        Ok(())
    }

    /// Graphviz digraph with edges `child -> parent`, ordered by id.
    pub fn write_dot<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "digraph forest {{")?;
        for v in &self.vertices {
            match v.parent {
                Some(p) => writeln!(out, "  {} -> {};", v.id, p)?,
                None => writeln!(out, "  {};", v.id)?,
            }
        }
        writeln!(out, "}}")
    }
}
