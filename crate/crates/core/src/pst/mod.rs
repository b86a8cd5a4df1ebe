//! Packing signature tree.
//!
//! Every root-to-tail path is a sequence of atom placements (one LCN per
//! atom); ECN children of an LCN record the legality verdict for a cluster
//! whose placements match the path and whose boundary connectivity matches
//! the ECN. Nodes are never deleted while the tree lives.

mod signature;

pub use signature::{compute_external, lcn_key, DecodeError, ExternalConnectivity, KeyEncoder, LcnKey};

use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::arch::{ArchitectureModel, PinId};

type Children = FxHashMap<Box<[u8]>, u32>;

#[derive(Default)]
struct LcnNode {
    lcns: Children,
    ecns: Children,
}

struct EcnNode {
    legal: bool,
    hits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PstError {
    #[error("an ECN with this external connectivity already exists under the tail")]
    DuplicateEcn,
    #[error("no ECN under the tail matches the finalized cluster")]
    MissingEcn,
    #[error("cannot retreat {steps} levels from depth {depth}")]
    Underflow { steps: usize, depth: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PstStats {
    pub lcn_count: u64,
    pub ecn_count: u64,
    pub legal_ecn_count: u64,
    pub total_hits: u64,
    pub finalized_signatures: u64,
    pub repeated_finalized: u64,
}

/// Path from the root to the tail of the active packing signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignatureCursor {
    path: Vec<u32>,
}

impl Default for SignatureCursor {
    fn default() -> Self {
        SignatureCursor { path: vec![Pst::ROOT] }
    }
}

impl SignatureCursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of LCNs below the root.
    pub fn depth(&self) -> usize {
        self.path.len() - 1
    }

    fn tail(&self) -> usize {
        *self.path.last().expect("root is always present") as usize
    }

    /// Moves the tail up `steps` levels. The tree is not touched.
    pub fn retreat(&mut self, steps: usize) -> Result<(), PstError> {
        let depth = self.depth();
        if steps > depth {
            return Err(PstError::Underflow { steps, depth });
        }
        self.path.truncate(self.path.len() - steps);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.path.truncate(1);
    }
}

pub struct Pst {
    lcns: Vec<LcnNode>,
    ecns: Vec<EcnNode>,
    key_bytes: usize,
    finalized: u64,
    repeated: u64,
    scratch: Vec<u8>,
}

impl Default for Pst {
    fn default() -> Self {
        Self::new()
    }
}

impl Pst {
    const ROOT: u32 = 0;

    pub fn new() -> Self {
        Pst {
            lcns: vec![LcnNode::default()],
            ecns: Vec::new(),
            key_bytes: 0,
            finalized: 0,
            repeated: 0,
            scratch: Vec::new(),
        }
    }

    /// Descends to the tail's child with `key`, creating it if needed.
    /// Returns whether a node was created.
    pub fn advance(&mut self, cursor: &mut SignatureCursor, key: &LcnKey) -> bool {
        let mut bytes = std::mem::take(&mut self.scratch);
        key.encode_into(&mut bytes);
        let created = self.advance_encoded(cursor, &bytes);
        self.scratch = bytes;
        created
    }

    /// [`advance`](Pst::advance) with an already encoded key.
    pub fn advance_encoded(&mut self, cursor: &mut SignatureCursor, key: &[u8]) -> bool {
        let tail = cursor.tail();
        if let Some(&child) = self.lcns[tail].lcns.get(key) {
            cursor.path.push(child);
            return false;
        }
        let child = self.lcns.len() as u32;
        self.lcns.push(LcnNode::default());
        self.key_bytes += key.len();
        self.lcns[tail].lcns.insert(key.into(), child);
        cursor.path.push(child);
        true
    }

    fn with_encoded<T>(&mut self, ext: &ExternalConnectivity, f: impl FnOnce(&mut Self, &[u8]) -> T) -> T {
        let mut bytes = std::mem::take(&mut self.scratch);
        ext.encode_into(&mut bytes);
        let out = f(self, &bytes);
        self.scratch = bytes;
        out
    }

    /// Memoized verdict for the tail and `ext`, counting a hit when found.
    pub fn lookup(&mut self, cursor: &SignatureCursor, ext: &ExternalConnectivity) -> Option<bool> {
        self.with_encoded(ext, |pst, bytes| pst.lookup_encoded(cursor, bytes))
    }

    /// [`lookup`](Pst::lookup) with already encoded connectivity.
    pub fn lookup_encoded(&mut self, cursor: &SignatureCursor, ext: &[u8]) -> Option<bool> {
        let &e = self.lcns[cursor.tail()].ecns.get(ext)?;
        let ecn = &mut self.ecns[e as usize];
        ecn.hits += 1;
        Some(ecn.legal)
    }

    /// Stores a fresh verdict under the tail.
    pub fn record(
        &mut self,
        cursor: &SignatureCursor,
        ext: &ExternalConnectivity,
        legal: bool,
    ) -> Result<(), PstError> {
        self.with_encoded(ext, |pst, bytes| pst.record_encoded(cursor, bytes, legal))
    }

    /// [`record`](Pst::record) with already encoded connectivity.
    pub fn record_encoded(&mut self, cursor: &SignatureCursor, ext: &[u8], legal: bool) -> Result<(), PstError> {
        let tail = cursor.tail();
        if self.lcns[tail].ecns.contains_key(ext) {
            return Err(PstError::DuplicateEcn);
        }
        let id = self.ecns.len() as u32;
        self.ecns.push(EcnNode { legal, hits: 0 });
        self.key_bytes += ext.len();
        self.lcns[tail].ecns.insert(ext.into(), id);
        Ok(())
    }

    /// Counts a finalized cluster against its ECN. Returns whether the ECN
    /// had been hit or finalized before.
    pub fn finalize(&mut self, cursor: &SignatureCursor, ext: &ExternalConnectivity) -> Result<bool, PstError> {
        self.with_encoded(ext, |pst, bytes| pst.finalize_encoded(cursor, bytes))
    }

    /// [`finalize`](Pst::finalize) with already encoded connectivity.
    pub fn finalize_encoded(&mut self, cursor: &SignatureCursor, ext: &[u8]) -> Result<bool, PstError> {
        let &e = self.lcns[cursor.tail()].ecns.get(ext).ok_or(PstError::MissingEcn)?;
        let ecn = &mut self.ecns[e as usize];
        let repeated = ecn.hits >= 1;
        ecn.hits += 1;
        self.finalized += 1;
        if repeated {
            self.repeated += 1;
        }
        Ok(repeated)
    }

    /// (LCN count, ECN count), without scanning the nodes.
    pub fn node_counts(&self) -> (u64, u64) {
        (self.lcns.len() as u64 - 1, self.ecns.len() as u64)
    }

    pub fn stats(&self) -> PstStats {
        PstStats {
            lcn_count: self.lcns.len() as u64 - 1,
            ecn_count: self.ecns.len() as u64,
            legal_ecn_count: self.ecns.iter().filter(|e| e.legal).count() as u64,
            total_hits: self.ecns.iter().map(|e| e.hits).sum(),
            finalized_signatures: self.finalized,
            repeated_finalized: self.repeated,
        }
    }

    /// Rough heap footprint: node structs, hash-map slots and key bytes.
    pub fn approx_bytes(&self) -> usize {
        let slot = std::mem::size_of::<(Box<[u8]>, u32)>() + 1;
        let children: usize = self.lcns.iter().map(|n| n.lcns.capacity() + n.ecns.capacity()).sum();
        self.lcns.len() * std::mem::size_of::<LcnNode>()
            + self.ecns.len() * std::mem::size_of::<EcnNode>()
            + children * slot
            + self.key_bytes
    }

    /// Indented text rendering, children sorted by their encodings. Pin ids
    /// are printed by name when `arch` is given.
    pub fn dump(&self, arch: Option<&ArchitectureModel>) -> String {
        let mut out = String::from("root\n");
        self.dump_node(Self::ROOT, 1, arch, &mut out);
        out
    }

    fn dump_node(&self, node: u32, depth: usize, arch: Option<&ArchitectureModel>, out: &mut String) {
        let pin = |p: PinId| match arch {
            Some(a) if p.index() < a.pin_count() => a.pin_name(p).to_string(),
            _ => p.0.to_string(),
        };
        let list = |v: &[PinId]| v.iter().map(|&p| pin(p)).collect::<Vec<_>>().join(",");
        let pairs = |v: &[(PinId, PinId)]| {
            v.iter().map(|&(a, b)| format!("({},{})", pin(a), pin(b))).collect::<Vec<_>>().join(" ")
        };
        let indent = "  ".repeat(depth);
        let lcn = &self.lcns[node as usize];

        let mut ecns: Vec<_> = lcn.ecns.iter().collect();
        ecns.sort();
        for (bytes, &e) in ecns {
            let ext = ExternalConnectivity::decode(bytes).expect("stored encodings decode");
            let groups = ext.input_groups.iter().map(|g| format!("{{{}}}", list(g))).collect::<Vec<_>>().join(" ");
            let ecn = &self.ecns[e as usize];
            let _ = writeln!(
                out,
                "{indent}ECN in[{groups}] out[{}] legal={} hits={}",
                list(&ext.output_pins),
                ecn.legal,
                ecn.hits
            );
        }
        let mut children: Vec<_> = lcn.lcns.iter().collect();
        children.sort();
        for (bytes, &child) in children {
            let key = LcnKey::decode(bytes).expect("stored encodings decode");
            let _ = writeln!(
                out,
                "{indent}LCN loc{} in[{}] out[{}]",
                key.location.0,
                pairs(&key.internal_inputs),
                pairs(&key.internal_outputs)
            );
            self.dump_node(child, depth + 1, arch, out);
        }
    }
}
