//! Canonical keys for tree nodes and their byte encodings.

use crate::arch::{LocId, PinId};
use crate::netlist::{AtomId, Driver, NetId, Sink};
use crate::packer::ClusterState;

/// One placed atom: its location and the cluster-internal connections that
/// were fully known when it was inserted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LcnKey {
    pub location: LocId,
    /// (source pin, sink pin) with the sink on this atom; sorted.
    pub internal_inputs: Vec<(PinId, PinId)>,
    /// (source pin, sink pin) with this atom's output driving an earlier atom; sorted.
    pub internal_outputs: Vec<(PinId, PinId)>,
}

/// Boundary connectivity of a cluster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExternalConnectivity {
    /// Bound input pins driven from outside, grouped by shared driver. Inner
    /// sets are sorted and the list is ordered by each set's smallest pin.
    pub input_groups: Vec<Vec<PinId>>,
    /// Output pins whose nets leave the cluster; sorted.
    pub output_pins: Vec<PinId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("malformed key encoding at byte {0}")]
pub struct DecodeError(pub usize);

fn put(buf: &mut Vec<u8>, mut v: u32) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

struct Reader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl Reader<'_> {
    fn get(&mut self) -> Result<u32, DecodeError> {
        let mut v: u64 = 0;
        for shift in (0..35).step_by(7) {
            let b = *self.bytes.get(self.pos).ok_or(DecodeError(self.pos))?;
            self.pos += 1;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return u32::try_from(v).map_err(|_| DecodeError(self.pos));
            }
        }
        Err(DecodeError(self.pos))
    }

    fn pin(&mut self) -> Result<PinId, DecodeError> {
        self.get().map(PinId)
    }

    fn pairs(&mut self) -> Result<Vec<(PinId, PinId)>, DecodeError> {
        let n = self.get()? as usize;
        (0..n).map(|_| Ok((self.pin()?, self.pin()?))).collect()
    }

    fn finish(&self) -> Result<(), DecodeError> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(DecodeError(self.pos))
        }
    }
}

fn put_pairs(buf: &mut Vec<u8>, pairs: &[(PinId, PinId)]) {
    put(buf, pairs.len() as u32);
    for (a, b) in pairs {
        put(buf, a.0);
        put(buf, b.0);
    }
}

impl LcnKey {
    pub fn new(
        location: LocId,
        mut internal_inputs: Vec<(PinId, PinId)>,
        mut internal_outputs: Vec<(PinId, PinId)>,
    ) -> Self {
        internal_inputs.sort_unstable();
        internal_inputs.dedup();
        internal_outputs.sort_unstable();
        internal_outputs.dedup();
        LcnKey { location, internal_inputs, internal_outputs }
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.clear();
        put(buf, self.location.0);
        put_pairs(buf, &self.internal_inputs);
        put_pairs(buf, &self.internal_outputs);
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.encode_into(&mut buf);
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        let key = LcnKey { location: LocId(r.get()?), internal_inputs: r.pairs()?, internal_outputs: r.pairs()? };
        r.finish()?;
        Ok(key)
    }
}

impl ExternalConnectivity {
    pub fn new(mut input_groups: Vec<Vec<PinId>>, mut output_pins: Vec<PinId>) -> Self {
        for g in &mut input_groups {
            g.sort_unstable();
        }
        input_groups.retain(|g| !g.is_empty());
        input_groups.sort_unstable_by_key(|g| g[0]);
        output_pins.sort_unstable();
        ExternalConnectivity { input_groups, output_pins }
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.clear();
        put(buf, self.input_groups.len() as u32);
        for g in &self.input_groups {
            put(buf, g.len() as u32);
            for p in g {
                put(buf, p.0);
            }
        }
        put(buf, self.output_pins.len() as u32);
        for p in &self.output_pins {
            put(buf, p.0);
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.encode_into(&mut buf);
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        let groups = r.get()? as usize;
        let mut input_groups = Vec::with_capacity(groups.min(1024));
        for _ in 0..groups {
            let n = r.get()? as usize;
            input_groups.push((0..n).map(|_| r.pin()).collect::<Result<Vec<_>, _>>()?);
        }
        let n = r.get()? as usize;
        let output_pins = (0..n).map(|_| r.pin()).collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(ExternalConnectivity { input_groups, output_pins })
    }
}

/// Key for `atom`, which must be the most recently placed atom of `cluster`.
pub fn lcn_key(cluster: &ClusterState<'_>, atom: AtomId) -> LcnKey {
    let netlist = cluster.netlist();
    let a = netlist.atom(atom);
    let mut inputs = Vec::new();
    for (pin, net) in a.input_nets.iter().enumerate() {
        let Some(net) = net else { continue };
        if let Driver::Atom(d) = netlist.net(*net).driver {
            if cluster.contains(d) {
                inputs.push((cluster.output_pin(d), cluster.input_pin(atom, pin)));
            }
        }
    }
    let mut outputs = Vec::new();
    if let Some(net) = a.output_net {
        let src = cluster.output_pin(atom);
        for s in &netlist.net(net).sinks {
            if let Sink::Atom { atom: sink, pin } = *s {
                // self-loops are already listed as inputs
                if sink != atom && cluster.contains(sink) {
                    outputs.push((src, cluster.input_pin(sink, pin)));
                }
            }
        }
    }
    LcnKey::new(cluster.location_of(atom).expect("atom is placed"), inputs, outputs)
}

/// Boundary connectivity of `cluster`: input pins grouped by their external
/// driver, and output pins whose nets have a sink outside the cluster or are
/// primary outputs.
pub fn compute_external(cluster: &ClusterState<'_>) -> ExternalConnectivity {
    let netlist = cluster.netlist();
    let mut driven: Vec<(NetId, PinId)> = Vec::new();
    let mut outputs = Vec::new();
    for (atom_id, _) in cluster.atoms() {
        let atom = netlist.atom(atom_id);
        for (pin, net) in atom.input_nets.iter().enumerate() {
            let Some(net) = net else { continue };
            let inside = matches!(netlist.net(*net).driver, Driver::Atom(d) if cluster.contains(d));
            if !inside {
                driven.push((*net, cluster.input_pin(atom_id, pin)));
            }
        }
        if let Some(net) = atom.output_net {
            let leaves = netlist.net(net).sinks.iter().any(|s| match *s {
                Sink::Atom { atom, .. } => !cluster.contains(atom),
                Sink::PrimaryOutput => true,
            });
            if leaves {
                outputs.push(cluster.output_pin(atom_id));
            }
        }
    }
    driven.sort_unstable();
    let groups = driven.chunk_by(|a, b| a.0 == b.0).map(|run| run.iter().map(|&(_, pin)| pin).collect()).collect();
    ExternalConnectivity::new(groups, outputs)
}

/// Reusable buffers that write the canonical encodings of [`lcn_key`] and
/// [`compute_external`] straight from a cluster, without building the
/// intermediate key values. Used on the packer's hot path.
#[derive(Debug, Default)]
pub struct KeyEncoder {
    inputs: Vec<(PinId, PinId)>,
    outputs: Vec<(PinId, PinId)>,
    /// `net << 32 | pin` for every cluster input pin driven from outside,
    /// so that sorting groups pins by net with pins ascending.
    driven: Vec<u64>,
    /// `smallest pin << 32 | start << 16 | end` of each run of `driven`.
    groups: Vec<u64>,
    exits: Vec<u32>,
    bytes: Vec<u8>,
}

impl KeyEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same bytes as `lcn_key(cluster, atom).encode()`.
    pub fn lcn(&mut self, cluster: &ClusterState<'_>, atom: AtomId) -> &[u8] {
        let netlist = cluster.netlist();
        let a = netlist.atom(atom);
        let loc = cluster.location_of(atom).expect("atom is placed");
        let location = cluster.arch().location(loc);
        self.inputs.clear();
        self.outputs.clear();
        for (pin, net) in a.input_nets.iter().enumerate() {
            let Some(net) = net else { continue };
            if let Driver::Atom(d) = netlist.net(*net).driver {
                if cluster.contains(d) {
                    self.inputs.push((cluster.output_pin(d), location.input_pins[pin]));
                }
            }
        }
        if let Some(net) = a.output_net {
            let src = location.output_pins[0];
            for s in &netlist.net(net).sinks {
                if let Sink::Atom { atom: sink, pin } = *s {
                    if sink != atom && cluster.contains(sink) {
                        self.outputs.push((src, cluster.input_pin(sink, pin)));
                    }
                }
            }
        }
        self.inputs.sort_unstable();
        self.inputs.dedup();
        self.outputs.sort_unstable();
        self.outputs.dedup();
        self.bytes.clear();
        put(&mut self.bytes, loc.0);
        put_pairs(&mut self.bytes, &self.inputs);
        put_pairs(&mut self.bytes, &self.outputs);
        &self.bytes
    }

    /// The most recent encoding written by [`lcn`](Self::lcn) or
    /// [`external`](Self::external).
    pub fn last(&self) -> &[u8] {
        &self.bytes
    }

    /// Same bytes as `compute_external(cluster).encode()`.
    pub fn external(&mut self, cluster: &ClusterState<'_>) -> &[u8] {
        let netlist = cluster.netlist();
        self.driven.clear();
        self.exits.clear();
        for (atom_id, loc) in cluster.atoms() {
            let atom = netlist.atom(atom_id);
            let location = cluster.arch().location(loc);
            for (pin, net) in atom.input_nets.iter().enumerate() {
                let Some(net) = net else { continue };
                let inside = matches!(netlist.net(*net).driver, Driver::Atom(d) if cluster.contains(d));
                if !inside {
                    self.driven.push(u64::from(net.0) << 32 | u64::from(location.input_pins[pin].0));
                }
            }
            if let Some(net) = atom.output_net {
                let leaves = netlist.net(net).sinks.iter().any(|s| match *s {
                    Sink::Atom { atom, .. } => !cluster.contains(atom),
                    Sink::PrimaryOutput => true,
                });
                if leaves {
                    self.exits.push(location.output_pins[0].0);
                }
            }
        }
        // Offsets are packed into 16 bits each; a block has far fewer pins.
        assert!(self.driven.len() < 1 << 16, "cluster has too many input pins");
        self.driven.sort_unstable();
        self.groups.clear();
        let mut start = 0;
        while start < self.driven.len() {
            let net = self.driven[start] >> 32;
            let mut end = start + 1;
            while end < self.driven.len() && self.driven[end] >> 32 == net {
                end += 1;
            }
            let first_pin = self.driven[start] & 0xffff_ffff;
            self.groups.push(first_pin << 32 | (start as u64) << 16 | end as u64);
            start = end;
        }
        self.groups.sort_unstable();
        self.exits.sort_unstable();
        self.bytes.clear();
        put(&mut self.bytes, self.groups.len() as u32);
        for &g in &self.groups {
            let (start, end) = ((g >> 16) as usize & 0xffff, g as usize & 0xffff);
            put(&mut self.bytes, (end - start) as u32);
            for &d in &self.driven[start..end] {
                put(&mut self.bytes, d as u32);
            }
        }
        put(&mut self.bytes, self.exits.len() as u32);
        for &p in &self.exits {
            put(&mut self.bytes, p);
        }
        &self.bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pin() -> impl Strategy<Value = PinId> {
        prop_oneof![0u32..200, any::<u32>()].prop_map(PinId)
    }

    proptest! {
        #[test]
        fn lcn_key_round_trips(
            loc in any::<u32>(),
            ins in prop::collection::vec((pin(), pin()), 0..8),
            outs in prop::collection::vec((pin(), pin()), 0..8),
        ) {
            let key = LcnKey::new(LocId(loc), ins, outs);
            prop_assert_eq!(LcnKey::decode(&key.encode()).unwrap(), key);
        }

        #[test]
        fn external_round_trips(
            groups in prop::collection::vec(prop::collection::btree_set(pin(), 1..4), 0..6),
            outs in prop::collection::btree_set(pin(), 0..6),
        ) {
            let ext = ExternalConnectivity::new(
                groups.into_iter().map(|g| g.into_iter().collect()).collect(),
                outs.into_iter().collect(),
            );
            prop_assert_eq!(ExternalConnectivity::decode(&ext.encode()).unwrap(), ext);
        }

        #[test]
        fn distinct_keys_encode_differently(
            a in prop::collection::vec((pin(), pin()), 0..4),
            b in prop::collection::vec((pin(), pin()), 0..4),
            la in 0u32..4, lb in 0u32..4,
        ) {
            let ka = LcnKey::new(LocId(la), a.clone(), b.clone());
            let kb = LcnKey::new(LocId(lb), b, a);
            prop_assert_eq!(ka == kb, ka.encode() == kb.encode());
        }
    }

    #[test]
    fn truncated_encoding_is_rejected() {
        let key = LcnKey::new(LocId(3), vec![(PinId(300), PinId(7))], vec![]);
        let bytes = key.encode();
        for cut in 0..bytes.len() {
            assert!(LcnKey::decode(&bytes[..cut]).is_err());
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(LcnKey::decode(&long).is_err());
    }

    #[test]
    fn canonical_order_ignores_input_order() {
        let a = ExternalConnectivity::new(vec![vec![PinId(5), PinId(2)], vec![PinId(0)]], vec![PinId(9), PinId(1)]);
        let b = ExternalConnectivity::new(vec![vec![PinId(0)], vec![PinId(2), PinId(5)]], vec![PinId(1), PinId(9)]);
        assert_eq!(a.encode(), b.encode());
        assert_eq!(a.input_groups, vec![vec![PinId(0)], vec![PinId(2), PinId(5)]]);
    }
}
