//! Greedy seed-based packing with a speculative pass and a detailed
//! fallback, answering legality checks either with the router directly or
//! through the packing signature tree.

mod cluster;
mod stats;

pub use cluster::{ClusterState, PlacedMolecule};
pub use stats::{PackingStats, Timings};

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureModel;
use crate::netlist::{form_molecules, AtomId, Molecule, MoleculeError, MoleculeId, NetId, Netlist};
use crate::pst::{KeyEncoder, Pst, PstStats, SignatureCursor};
use crate::router::{derive_problem, route, route_cluster, RouterParams};

/// How the signature tree participates in legality checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoMode {
    /// No tree; every check routes.
    #[default]
    Off,
    /// Tree built and hits counted, but every check still routes.
    CountOnly,
    /// Recorded verdicts answer repeated checks.
    On,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackOptions {
    pub memo: MemoMode,
    /// Route memoized checks anyway and count disagreements.
    pub shadow: bool,
    /// Only the generator consumes randomness; kept for provenance.
    pub rng_seed: u64,
    pub router: RouterParams,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions { memo: MemoMode::Off, shadow: false, rng_seed: 0, router: RouterParams::default() }
    }
}

impl PackOptions {
    pub fn with_memo(memo: MemoMode) -> Self {
        PackOptions { memo, ..Self::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PackError {
    #[error(transparent)]
    Unmappable(#[from] MoleculeError),
    #[error("molecule {0} cannot be legally placed in an empty cluster")]
    Unpackable(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedCluster {
    pub id: usize,
    pub molecules: Vec<PlacedMolecule>,
}

#[derive(Clone, Debug)]
pub struct Packing {
    pub clusters: Vec<PackedCluster>,
    /// Cluster index of every atom.
    pub atom_cluster: Vec<usize>,
    pub molecules: Vec<Molecule>,
    pub stats: PackingStats,
    /// (lcn_count, ecn_count) after every finalized cluster; empty without a tree.
    pub pst_growth: Vec<(u64, u64)>,
    /// Text rendering of the tree, when requested.
    pub pst_dump: Option<String>,
}

/// Packing output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingFile {
    pub clusters: Vec<PackedCluster>,
}

impl Packing {
    pub fn to_file(&self) -> PackingFile {
        PackingFile { clusters: self.clusters.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("packing serializes")
    }
}

/// Whether the check happens in the speculative or detailed pass.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Pass {
    Speculative,
    Detailed,
}

struct Packer<'a> {
    netlist: &'a Netlist,
    arch: &'a ArchitectureModel,
    molecules: &'a [Molecule],
    options: PackOptions,
    mol_nets: Vec<Vec<NetId>>,
    net_mols: Vec<Vec<MoleculeId>>,
    packed: Vec<bool>,
    seed_order: Vec<MoleculeId>,
    next_seed: usize,
    pst: Option<Pst>,
    cursor: SignatureCursor,
    encoder: KeyEncoder,
    stats: PackingStats,
    cluster_calls: u64,
    pst_time: Duration,
    signature_time: Duration,
    router_time: Duration,
    router_time_failed: Duration,
}

/// The cluster under construction plus the bookkeeping gain needs.
struct Growing<'a> {
    state: ClusterState<'a>,
    /// Molecules of the cluster touching each net.
    net_refs: FxHashMap<NetId, u32>,
    /// Nets shared with the cluster, per touching molecule.
    gain: FxHashMap<MoleculeId, u32>,
    members: FxHashSet<MoleculeId>,
}

impl<'a> Packer<'a> {
    fn new(netlist: &'a Netlist, arch: &'a ArchitectureModel, molecules: &'a [Molecule], options: PackOptions) -> Self {
        let mol_nets: Vec<Vec<NetId>> = molecules
            .iter()
            .map(|m| {
                let mut nets: Vec<NetId> = m.atoms.iter().flat_map(|&a| netlist.atom(a).nets()).collect();
                nets.sort_unstable();
                nets.dedup();
                nets
            })
            .collect();
        let mut net_mols = vec![Vec::new(); netlist.nets.len()];
        for (m, nets) in mol_nets.iter().enumerate() {
            for n in nets {
                net_mols[n.index()].push(MoleculeId(m as u32));
            }
        }
        let used_pins = |m: &Molecule| -> usize { m.atoms.iter().map(|&a| netlist.atom(a).used_pins()).sum() };
        let mut seed_order: Vec<MoleculeId> = molecules.iter().map(|m| m.id).collect();
        seed_order.sort_by_cached_key(|&id| (std::cmp::Reverse(used_pins(&molecules[id.index()])), id));
        let pst = (options.memo != MemoMode::Off).then(Pst::new);
        Packer {
            netlist,
            arch,
            molecules,
            options,
            mol_nets,
            net_mols,
            packed: vec![false; molecules.len()],
            seed_order,
            next_seed: 0,
            pst,
            cursor: SignatureCursor::new(),
            encoder: KeyEncoder::new(),
            stats: PackingStats::default(),
            cluster_calls: 0,
            pst_time: Duration::ZERO,
            signature_time: Duration::ZERO,
            router_time: Duration::ZERO,
            router_time_failed: Duration::ZERO,
        }
    }

    /// Unpacked molecule with the most used pins, smallest id on ties.
    fn select_seed(&mut self) -> Option<MoleculeId> {
        while let Some(&m) = self.seed_order.get(self.next_seed) {
            if !self.packed[m.index()] {
                return Some(m);
            }
            self.next_seed += 1;
        }
        None
    }

    fn grow_start(&self) -> Growing<'a> {
        Growing {
            state: ClusterState::new(self.arch, self.netlist),
            net_refs: FxHashMap::default(),
            gain: FxHashMap::default(),
            members: FxHashSet::default(),
        }
    }

    /// Places `mol` at first-fit locations, advancing the signature per atom.
    fn add(&mut self, g: &mut Growing<'a>, mol: MoleculeId) -> bool {
        let molecule = &self.molecules[mol.index()];
        let Some(plan) = g.state.plan(molecule) else { return false };
        g.state.begin_molecule(mol);
        for (atom, loc) in plan {
            g.state.place_atom(atom, loc);
            if let Some(pst) = self.pst.as_mut() {
                let t0 = Instant::now();
                let key = self.encoder.lcn(&g.state, atom);
                let t1 = Instant::now();
                pst.advance_encoded(&mut self.cursor, key);
                self.signature_time += t1 - t0;
                self.pst_time += t1.elapsed();
            }
        }
        g.members.insert(mol);
        for &net in &self.mol_nets[mol.index()] {
            let refs = g.net_refs.entry(net).or_insert(0);
            *refs += 1;
            if *refs == 1 {
                for &m in &self.net_mols[net.index()] {
                    *g.gain.entry(m).or_insert(0) += 1;
                }
            }
        }
        true
    }

    fn remove_last(&mut self, g: &mut Growing<'a>) {
        let placed = g.state.remove_last_molecule().expect("cluster is not empty");
        let mol = placed.molecule_id;
        if self.pst.is_some() {
            let t = Instant::now();
            self.cursor.retreat(placed.placements.len()).expect("cursor tracks the cluster");
            self.pst_time += t.elapsed();
        }
        g.members.remove(&mol);
        for &net in &self.mol_nets[mol.index()] {
            let refs = g.net_refs.get_mut(&net).expect("net was referenced");
            *refs -= 1;
            if *refs == 0 {
                g.net_refs.remove(&net);
                for &m in &self.net_mols[net.index()] {
                    let e = g.gain.get_mut(&m).expect("gain was counted");
                    *e -= 1;
                    if *e == 0 {
                        g.gain.remove(&m);
                    }
                }
            }
        }
    }

    /// Highest-gain unpacked molecule outside the cluster that is not
    /// rejected and can be placed; smallest id on ties.
    fn best_candidate(&self, g: &mut Growing<'a>, rejected: &FxHashSet<MoleculeId>) -> Option<MoleculeId> {
        let mut candidates: Vec<(u32, MoleculeId)> = g
            .gain
            .iter()
            .filter(|(m, &gain)| gain > 0 && !self.packed[m.index()] && !g.members.contains(m) && !rejected.contains(m))
            .map(|(&m, &gain)| (gain, m))
            .collect();
        candidates.sort_unstable_by_key(|&(gain, m)| (std::cmp::Reverse(gain), m));
        candidates.into_iter().map(|(_, m)| m).find(|m| g.state.plan(&self.molecules[m.index()]).is_some())
    }

    fn run_router(&mut self, state: &ClusterState<'_>) -> bool {
        self.stats.router_calls += 1;
        self.cluster_calls += 1;
        let t = Instant::now();
        let result = route_cluster(state, &self.options.router);
        let elapsed = t.elapsed();
        self.router_time += elapsed;
        if !result.legal {
            self.router_time_failed += elapsed;
        }
        self.stats.router_iterations_total += u64::from(result.iterations_used);
        result.legal
    }

    fn check_legality(&mut self, state: &ClusterState<'_>) -> bool {
        self.stats.legality_checks += 1;
        let Some(pst) = self.pst.as_mut() else {
            return self.run_router(state);
        };
        let t0 = Instant::now();
        let ext = self.encoder.external(state);
        let t1 = Instant::now();
        let memo = pst.lookup_encoded(&self.cursor, ext);
        self.signature_time += t1 - t0;
        self.pst_time += t1.elapsed();

        if let (MemoMode::On, Some(verdict)) = (self.options.memo, memo) {
            self.stats.router_calls_skipped += 1;
            if self.options.shadow {
                self.stats.shadow_checks += 1;
                if route_cluster(state, &self.options.router).legal != verdict {
                    self.stats.shadow_mismatches += 1;
                }
            }
            return verdict;
        }
        let verdict = self.run_router(state);
        match memo {
            None => {
                let t = Instant::now();
                self.pst
                    .as_mut()
                    .expect("tree present")
                    .record_encoded(&self.cursor, self.encoder.last(), verdict)
                    .expect("lookup missed, so no duplicate");
                self.pst_time += t.elapsed();
            }
            Some(recorded) => {
                if self.options.shadow {
                    self.stats.shadow_checks += 1;
                    if recorded != verdict {
                        self.stats.shadow_mismatches += 1;
                    }
                }
            }
        }
        verdict
    }

    fn seed_cluster(&mut self, seed: MoleculeId) -> Result<Growing<'a>, PackError> {
        let mut g = self.grow_start();
        if !self.add(&mut g, seed) {
            return Err(PackError::Unpackable(seed.0));
        }
        Ok(g)
    }

    /// Fills the cluster greedily without intermediate checks, then checks once.
    fn speculative_pack(&mut self, seed: MoleculeId) -> Result<Option<Growing<'a>>, PackError> {
        let mut g = self.seed_cluster(seed)?;
        let none = FxHashSet::default();
        while let Some(m) = self.best_candidate(&mut g, &none) {
            self.add(&mut g, m);
        }
        if self.check_with(Pass::Speculative, &g) {
            self.stats.speculative_successes += 1;
            Ok(Some(g))
        } else {
            self.stats.speculative_failures += 1;
            self.cursor.reset();
            Ok(None)
        }
    }

    /// Rebuilds from the seed, checking legality after every addition and
    /// backing out molecules that make the cluster illegal.
    fn detailed_pack(&mut self, seed: MoleculeId) -> Result<Growing<'a>, PackError> {
        let mut g = self.seed_cluster(seed)?;
        if !self.check_with(Pass::Detailed, &g) {
            return Err(PackError::Unpackable(seed.0));
        }
        let mut rejected = FxHashSet::default();
        while let Some(m) = self.best_candidate(&mut g, &rejected) {
            self.add(&mut g, m);
            if self.check_with(Pass::Detailed, &g) {
                rejected.clear();
            } else {
                self.stats.detailed_route_failures += 1;
                self.remove_last(&mut g);
                rejected.insert(m);
            }
        }
        self.stats.detailed_clusters += 1;
        Ok(g)
    }

    fn check_with(&mut self, pass: Pass, g: &Growing<'_>) -> bool {
        let legal = self.check_legality(&g.state);
        if pass == Pass::Speculative {
            log::trace!("speculative check with {} molecules: {legal}", g.state.molecules().len());
        }
        legal
    }

    fn finalize(&mut self, g: Growing<'a>, clusters: &mut Vec<PackedCluster>, growth: &mut Vec<(u64, u64)>) {
        if let Some(pst) = self.pst.as_mut() {
            let t0 = Instant::now();
            let ext = self.encoder.external(&g.state);
            let t1 = Instant::now();
            pst.finalize_encoded(&self.cursor, ext).expect("the final state was checked");
            self.cursor.reset();
            self.signature_time += t1 - t0;
            self.pst_time += t1.elapsed();
            growth.push(pst.node_counts());
        }
        for m in g.state.molecules() {
            self.packed[m.molecule_id.index()] = true;
        }
        self.stats.router_calls_per_cluster.push(self.cluster_calls);
        self.stats.max_router_calls_per_cluster = self.stats.max_router_calls_per_cluster.max(self.cluster_calls);
        self.cluster_calls = 0;
        clusters.push(PackedCluster { id: clusters.len(), molecules: g.state.into_molecules() });
    }
}

/// Packs every molecule of `netlist` into clusters of `arch`.
///
/// The memo mode changes only how legality verdicts are obtained; the
/// resulting clusters are the same in every mode.
pub fn pack_netlist(netlist: &Netlist, arch: &ArchitectureModel, options: &PackOptions) -> Result<Packing, PackError> {
    pack_with_dump(netlist, arch, options, false)
}

/// As [`pack_netlist`], optionally keeping a text dump of the final tree.
pub fn pack_with_dump(
    netlist: &Netlist,
    arch: &ArchitectureModel,
    options: &PackOptions,
    dump_pst: bool,
) -> Result<Packing, PackError> {
    let start = Instant::now();
    let molecules = form_molecules(netlist, arch)?;
    let mut packer = Packer::new(netlist, arch, &molecules, *options);
    let mut clusters = Vec::new();
    let mut growth = Vec::new();
    while let Some(seed) = packer.select_seed() {
        let g = match packer.speculative_pack(seed)? {
            Some(g) => g,
            None => packer.detailed_pack(seed)?,
        };
        packer.finalize(g, &mut clusters, &mut growth);
    }
    let mut stats = std::mem::take(&mut packer.stats);
    stats.pst = packer.pst.as_ref().map(Pst::stats).unwrap_or_default();
    stats.pst_bytes = packer.pst.as_ref().map_or(0, Pst::approx_bytes) as u64;
    let pst_dump = dump_pst.then(|| packer.pst.as_ref().map(|p| p.dump(Some(arch))).unwrap_or_default());
    stats.timings = Timings {
        wall_time_packing: start.elapsed().as_secs_f64(),
        pst_time: packer.pst_time.as_secs_f64(),
        signature_time: packer.signature_time.as_secs_f64(),
        router_time: packer.router_time.as_secs_f64(),
        router_time_failed: packer.router_time_failed.as_secs_f64(),
    };
    // the tree is dropped here, at the end of packing
    drop(packer);

    let mut atom_cluster = vec![usize::MAX; netlist.atoms.len()];
    for c in &clusters {
        for m in &c.molecules {
            for &(atom, _) in &m.placements {
                atom_cluster[atom.index()] = c.id;
            }
        }
    }
    Ok(Packing { clusters, atom_cluster, molecules, stats, pst_growth: growth, pst_dump })
}

/// Number of distinct nets `candidate` shares with the cluster's atoms.
pub fn gain(cluster: &ClusterState<'_>, candidate: &Molecule) -> u32 {
    let netlist = cluster.netlist();
    let cluster_nets: HashSet<NetId> = cluster.atoms().flat_map(|(a, _)| netlist.atom(a).nets()).collect();
    let mut cand: Vec<NetId> = candidate.atoms.iter().flat_map(|&a| netlist.atom(a).nets()).collect();
    cand.sort_unstable();
    cand.dedup();
    cand.iter().filter(|n| cluster_nets.contains(n)).count() as u32
}

/// Seed choice over `unpacked`: most used pins, smallest id on ties.
pub fn select_seed<'m>(unpacked: &[&'m Molecule], netlist: &Netlist) -> Option<&'m Molecule> {
    unpacked.iter().copied().min_by_key(|m| {
        let pins: usize = m.atoms.iter().map(|&a| netlist.atom(a).used_pins()).sum();
        (std::cmp::Reverse(pins), m.id)
    })
}

/// Post-hoc checks on a finished packing; returns every violation found.
///
/// Covers atom and molecule coverage, location double-booking, exclusivity
/// groups, and a fresh re-route of every cluster.
pub fn audit_packing(
    packing: &Packing,
    netlist: &Netlist,
    arch: &ArchitectureModel,
    params: &RouterParams,
) -> Vec<String> {
    let mut problems = Vec::new();
    let mut atom_seen = vec![0usize; netlist.atoms.len()];
    let mut mol_seen = vec![0usize; packing.molecules.len()];
    for c in &packing.clusters {
        let mut state = ClusterState::new(arch, netlist);
        for pm in &c.molecules {
            mol_seen[pm.molecule_id.index()] += 1;
            let expected: Vec<AtomId> = packing.molecules[pm.molecule_id.index()].atoms.clone();
            let got: Vec<AtomId> = pm.placements.iter().map(|p| p.0).collect();
            if expected != got {
                problems.push(format!("cluster {}: molecule {} atoms differ", c.id, pm.molecule_id.0));
            }
            state.begin_molecule(pm.molecule_id);
            for &(atom, loc) in &pm.placements {
                atom_seen[atom.index()] += 1;
                if state.is_occupied(loc) {
                    problems.push(format!("cluster {}: location {} double-booked", c.id, loc.0));
                    continue;
                }
                if !crate::arch::exclusivity_ok(&state, loc) {
                    problems.push(format!("cluster {}: location {} violates its exclusivity group", c.id, loc.0));
                    continue;
                }
                if !netlist.atom(atom).kind.fits(arch.location(loc).kind) {
                    problems.push(format!("cluster {}: atom {} does not fit location {}", c.id, atom.0, loc.0));
                }
                state.place_atom(atom, loc);
            }
        }
        match derive_problem(&state) {
            Ok(problem) => {
                let r = route(&problem, params);
                if !r.legal {
                    problems.push(format!("cluster {}: fresh re-route failed", c.id));
                } else if !r.is_sound(&problem) {
                    problems.push(format!("cluster {}: re-route shares a node between nets", c.id));
                }
            }
            Err(e) => problems.push(format!("cluster {}: {e}", c.id)),
        }
    }
    for (a, &n) in atom_seen.iter().enumerate() {
        if n != 1 {
            problems.push(format!("atom {a} packed {n} times"));
        }
    }
    for (m, &n) in mol_seen.iter().enumerate() {
        if n != 1 {
            problems.push(format!("molecule {m} packed {n} times"));
        }
    }
    if packing.atom_cluster.iter().any(|&c| c >= packing.clusters.len()) {
        problems.push("atom-to-cluster map is not total".into());
    }
    problems
}

impl PstStats {
    /// Share of finalized clusters whose signature had been seen before.
    pub fn repeated_ratio(&self) -> f64 {
        if self.finalized_signatures == 0 {
            0.0
        } else {
            self.repeated_finalized as f64 / self.finalized_signatures as f64
        }
    }
}
