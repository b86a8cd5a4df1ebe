//! Architectures and netlists shipped as golden fixtures.
//!
//! Every builder here has a JSON twin under `fixtures/`; a test keeps the
//! two in sync.

use crate::arch::{toy_lb, ArchBuilder, ArchitectureModel};
use crate::kind::PrimitiveKind;
use crate::netlist::{generate_netlist, ArraySpec, GeneratorSpec};
use crate::netlist::{AtomEntry, Netlist, NetlistFile};

/// Depopulated-crossbar block: four logic elements, each two 4-LUTs and a FF.
///
/// The sixteen external inputs form four groups of logically equivalent
/// pins, pin p belonging to group p mod 4. Every LE owns eight input lines;
/// line j is fed by every pin of group j mod 4. Each LUT input sees only
/// four consecutive lines (one per group), half of the LE's lines: input k
/// of the LE's first LUT sees lines k..k+3 and of its second LUT lines
/// k+4..k+7 (mod 8). Four feedback lines per LE are fed by every location
/// output and reach every LUT input of the LE. A FF takes any LUT output
/// directly, the feedback lines, or lines 0..=3.
pub fn depop_medium() -> ArchitectureModel {
    const LINES: usize = 8;
    const FEEDBACK: usize = 4;
    let mut b = ArchBuilder::new("depop_medium");
    let lut_out = |i: usize| format!("l{i}_o");
    let ff_out = |e: usize| format!("f{e}_q");
    let line = |e: usize, j: usize| format!("le{e}_x{j}");
    let fb = |e: usize, j: usize| format!("le{e}_fb{j}");
    for e in 0..4 {
        for i in [2 * e, 2 * e + 1] {
            let ins: Vec<String> = (0..4).map(|k| format!("l{i}_i{k}")).collect();
            b.location(PrimitiveKind::Lut(4), &refs(&ins), &lut_out(i), None);
        }
        b.location(PrimitiveKind::Ff, &[&format!("f{e}_d")], &ff_out(e), None);
    }
    for i in 0..16 {
        b.external_input(&format!("in{i}"));
    }
    for o in 0..8 {
        b.external_output(&format!("out{o}"));
    }
    for e in 0..4 {
        for j in 0..LINES {
            b.wire(&line(e, j));
        }
        for j in 0..FEEDBACK {
            b.wire(&fb(e, j));
        }
    }
    let outputs: Vec<String> = (0..8).map(lut_out).chain((0..4).map(ff_out)).collect();
    for e in 0..4 {
        for j in 0..LINES {
            for p in (j % 4..16).step_by(4) {
                b.edge(&format!("in{p}"), &line(e, j));
            }
        }
        for j in 0..FEEDBACK {
            for o in &outputs {
                b.edge(o, &fb(e, j));
            }
        }
        for (half, i) in [2 * e, 2 * e + 1].into_iter().enumerate() {
            for k in 0..4 {
                let sink = format!("l{i}_i{k}");
                for t in 0..4 {
                    b.edge(&line(e, (k + 4 * half + t) % LINES), &sink);
                }
                for j in 0..FEEDBACK {
                    b.edge(&fb(e, j), &sink);
                }
            }
        }
        let d = format!("f{e}_d");
        for i in 0..8 {
            b.edge(&lut_out(i), &d);
        }
        for j in 0..FEEDBACK {
            b.edge(&fb(e, j), &d);
        }
        for j in 0..4 {
            b.edge(&line(e, j), &d);
        }
    }
    for i in 0..8 {
        b.edge(&lut_out(i), &format!("out{i}"));
        b.edge(&lut_out(i), &format!("out{}", (i + 4) % 8));
    }
    for e in 0..4 {
        b.edge(&ff_out(e), &format!("out{}", 2 * e));
        b.edge(&ff_out(e), &format!("out{}", 2 * e + 1));
    }
    for g in 0..4 {
        let group: Vec<String> = (g..16).step_by(4).map(|p| format!("in{p}")).collect();
        b.equivalence_group(&group);
    }
    b.build().expect("depop_medium is valid")
}

/// Mode-group block: four ALMs, each offering two 5-LUT halves or one 6-LUT
/// (one exclusivity group per ALM) plus two FFs, behind a full crossbar.
pub fn mode_lb() -> ArchitectureModel {
    let mut b = ArchBuilder::new("mode_lb");
    let mut outputs = Vec::new();
    let mut inputs = Vec::new();
    for a in 0..4u32 {
        for (tag, k) in [("p", 5), ("q", 5), ("r", 6)] {
            let ins: Vec<String> = (0..k).map(|i| format!("a{a}_{tag}{i}")).collect();
            let out = format!("a{a}_{tag}o");
            let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
            b.location(PrimitiveKind::Lut(k as u8), &refs, &out, Some(a));
            inputs.extend(ins);
            outputs.push(out);
        }
        for f in 0..2 {
            let (d, q) = (format!("a{a}_ffd{f}"), format!("a{a}_ffq{f}"));
            b.location(PrimitiveKind::Ff, &[&d], &q, None);
            inputs.push(d);
            outputs.push(q);
        }
    }
    let ext_in: Vec<String> = (0..12).map(|i| format!("in{i}")).collect();
    let ext_out: Vec<String> = (0..6).map(|o| format!("out{o}")).collect();
    for i in &ext_in {
        b.external_input(i);
    }
    for o in &ext_out {
        b.external_output(o);
    }
    for src in ext_in.iter().chain(&outputs) {
        for sink in &inputs {
            b.edge(src, sink);
        }
    }
    for src in &outputs {
        for o in &ext_out {
            b.edge(src, o);
        }
    }
    b.build().expect("mode_lb is valid")
}

/// Ten 4-LUTs and ten FFs behind a complete crossbar with generous boundary
/// pins, so that any cluster that fits the locations also routes.
pub fn full_xbar() -> ArchitectureModel {
    let mut b = ArchBuilder::new("full_xbar");
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..10 {
        let ins: Vec<String> = (0..4).map(|k| format!("l{i}_i{k}")).collect();
        let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
        b.location(PrimitiveKind::Lut(4), &refs, &format!("l{i}_o"), None);
        inputs.extend(ins);
        outputs.push(format!("l{i}_o"));
    }
    for i in 0..10 {
        b.location(PrimitiveKind::Ff, &[&format!("f{i}_d")], &format!("f{i}_q"), None);
        inputs.push(format!("f{i}_d"));
        outputs.push(format!("f{i}_q"));
    }
    let ext_in: Vec<String> = (0..50).map(|i| format!("in{i}")).collect();
    let ext_out: Vec<String> = (0..20).map(|o| format!("out{o}")).collect();
    for i in &ext_in {
        b.external_input(i);
    }
    for o in &ext_out {
        b.external_output(o);
    }
    for src in ext_in.iter().chain(&outputs) {
        for sink in &inputs {
            b.edge(src, sink);
        }
    }
    for src in &outputs {
        for o in &ext_out {
            b.edge(src, o);
        }
    }
    b.build().expect("full_xbar is valid")
}

/// Fifteen-node block with two shared wire nodes, small enough for the
/// exhaustive router oracle.
///
/// loc0 = 2-LUT (a0, a1 -> y0), loc1 = 2-LUT (b0, b1 -> y1), loc2 = FF
/// (d -> q). Wire w0 feeds a1 and b0; wire w1 feeds b1 and d.
pub fn tiny_depop() -> ArchitectureModel {
    let mut b = ArchBuilder::new("tiny_depop");
    b.location(PrimitiveKind::Lut(2), &["a0", "a1"], "y0", None)
        .location(PrimitiveKind::Lut(2), &["b0", "b1"], "y1", None)
        .location(PrimitiveKind::Ff, &["d"], "q", None)
        .external_input("i0")
        .external_input("i1")
        .external_input("i2")
        .external_output("o0")
        .external_output("o1")
        .wire("w0")
        .wire("w1");
    for (from, to) in [
        ("i0", "a0"),
        ("i1", "w0"),
        ("i2", "w1"),
        ("w0", "a1"),
        ("w0", "b0"),
        ("w1", "b1"),
        ("w1", "d"),
        ("y0", "b0"),
        ("y0", "w1"),
        ("y1", "d"),
        ("q", "a0"),
        ("y0", "o0"),
        ("y1", "o0"),
        ("y1", "o1"),
        ("q", "o1"),
    ] {
        b.edge(from, to);
    }
    b.build().expect("tiny_depop is valid")
}

/// Fracturable LUT: a 6-LUT at loc0 and two 5-LUT halves at loc1/loc2, all
/// modes of one resource (exclusivity group 0), plus a FF.
pub fn fracturable_lb() -> ArchitectureModel {
    let mut b = ArchBuilder::new("fracturable_lb");
    let six: Vec<String> = (0..6).map(|i| format!("r{i}")).collect();
    let p: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
    let q: Vec<String> = (0..5).map(|i| format!("q{i}")).collect();
    b.location(PrimitiveKind::Lut(6), &refs(&six), "ro", Some(0))
        .location(PrimitiveKind::Lut(5), &refs(&p), "po", Some(0))
        .location(PrimitiveKind::Lut(5), &refs(&q), "qo", Some(0))
        .location(PrimitiveKind::Ff, &["d"], "qq", None);
    let ext_in: Vec<String> = (0..6).map(|i| format!("in{i}")).collect();
    for i in &ext_in {
        b.external_input(i);
    }
    b.external_output("out0").external_output("out1");
    let sinks: Vec<String> = six.iter().chain(&p).chain(&q).cloned().chain(["d".to_string()]).collect();
    for src in ext_in.iter().map(String::as_str).chain(["ro", "po", "qo", "qq"]) {
        for s in &sinks {
            b.edge(src, s);
        }
        if !src.starts_with("in") {
            b.edge(src, "out0").edge(src, "out1");
        }
    }
    b.build().expect("fracturable_lb is valid")
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Every architecture fixture by file stem.
pub fn architectures() -> Vec<(&'static str, ArchitectureModel)> {
    vec![
        ("toy_lb", toy_lb()),
        ("depop_medium", depop_medium()),
        ("mode_lb", mode_lb()),
        ("full_xbar", full_xbar()),
        ("tiny_depop", tiny_depop()),
        ("fracturable_lb", fracturable_lb()),
    ]
}

fn atom(id: u32, kind: PrimitiveKind, inputs: &[&str], output: &str) -> AtomEntry {
    AtomEntry {
        id,
        kind,
        inputs: inputs.iter().map(|s| Some(s.to_string())).collect(),
        output: Some(output.to_string()),
    }
}

/// Atoms behind the two toy_lb example clusters.
///
/// Cluster1 places atom 0 at loc0, its FF atom 1 at loc2 (F drives G), the
/// unrelated FF atom 2 at loc3 and LUT atom 3 at loc1; atoms 0 and 3 share
/// net `y`, so B and C end up in one input group. Cluster2 shares the first
/// two placements and continues with the LUT/FF pair atoms 4 and 5 at loc1
/// and loc3.
pub fn fig5_netlist() -> Netlist {
    let lut = PrimitiveKind::Lut(2);
    let ff = PrimitiveKind::Ff;
    let file = NetlistFile {
        atoms: vec![
            atom(0, lut, &["x", "y"], "f"),
            atom(1, ff, &["f"], "q1"),
            atom(2, ff, &["w"], "q2"),
            atom(3, lut, &["y", "z"], "e"),
            atom(4, lut, &["x", "z"], "g"),
            atom(5, ff, &["g"], "q3"),
        ],
        primary_inputs: ["x", "y", "z", "w"].map(String::from).to_vec(),
        primary_outputs: ["q1", "q2", "e", "q3"].map(String::from).to_vec(),
    };
    Netlist::from_file(&file).expect("fig5 netlist is valid")
}

/// Two chained LUTs feeding a FF: the smallest netlist with an internal net,
/// a molecule and a primary output.
pub fn chain2_netlist() -> Netlist {
    let file = NetlistFile {
        atoms: vec![
            atom(0, PrimitiveKind::Lut(2), &["a", "b"], "n0"),
            atom(1, PrimitiveKind::Lut(2), &["n0", "c"], "n1"),
            atom(2, PrimitiveKind::Ff, &["n1"], "q"),
        ],
        primary_inputs: ["a", "b", "c"].map(String::from).to_vec(),
        primary_outputs: vec!["q".into()],
    };
    Netlist::from_file(&file).expect("chain2 netlist is valid")
}

/// Tile counts of the shipped array fixtures.
pub const ARRAY_TILES: [usize; 4] = [1, 4, 16, 64];

/// Generator seed of the shipped array fixtures.
pub const ARRAY_SEED: u64 = 7;

/// `tiles` disconnected copies of a tile sized like [`depop_medium`]: eight
/// 4-LUTs and four FFs over ten tile inputs. The tile fills every location
/// of the block but does not route in one, so each tile goes through a
/// failed speculative attempt and a detailed pass.
pub fn depop_array_spec(tiles: usize) -> ArraySpec {
    ArraySpec { tiles, tile_luts: 8, tile_ffs: 4, lut_inputs: 4, tile_inputs: 10, inter_tile_nets: 0 }
}

pub fn depop_array(tiles: usize) -> Netlist {
    generate_netlist(&GeneratorSpec::Array(depop_array_spec(tiles)), ARRAY_SEED).expect("array spec is feasible")
}

/// Every netlist fixture by file stem.
pub fn netlists() -> Vec<(String, Netlist)> {
    let mut v = vec![("fig5".to_string(), fig5_netlist()), ("chain2".to_string(), chain2_netlist())];
    v.extend(ARRAY_TILES.iter().map(|&t| (format!("array_t{t}"), depop_array(t))));
    v
}

/// Calls `visit` once for every distinct connectivity of toy_lb clusters
/// holding one atom per occupied location (so at most four singleton
/// molecules).
///
/// For every non-empty subset of locations, each input pin of an occupied
/// location is unconnected, driven by the output of any occupied location
/// (itself included), or driven by an external net. External nets are
/// numbered in first-use order so that relabelings are not repeated. Each
/// output is either a primary output or not; outputs left with no sink at
/// all are skipped as invalid netlists. Atoms are numbered in location order
/// and `visit` receives the netlist plus every atom's location.
pub fn for_each_toy_cluster(mut visit: impl FnMut(&Netlist, &[(u32, u32)])) -> usize {
    const INPUTS: [usize; 4] = [2, 2, 1, 1];
    let mut count = 0;
    for mask in 1u32..16 {
        let locs: Vec<u32> = (0..4).filter(|l| mask & (1 << l) != 0).collect();
        let pins: usize = locs.iter().map(|&l| INPUTS[l as usize]).sum();
        // pin source: 0 = none, 1..=locs.len() = that location's output,
        // above = external net
        let mut sources = vec![0usize; pins];
        loop {
            for exposed in 0u32..(1 << locs.len()) {
                if let Some(netlist) = toy_netlist(&locs, &sources, exposed) {
                    let placement: Vec<(u32, u32)> = locs.iter().enumerate().map(|(a, &l)| (a as u32, l)).collect();
                    visit(&netlist, &placement);
                    count += 1;
                }
            }
            if !next_assignment(&mut sources, locs.len()) {
                break;
            }
        }
    }
    count
}

/// Advances `sources` to the next assignment in which external net labels
/// appear in first-use order. Returns false after the last one.
fn next_assignment(sources: &mut [usize], outputs: usize) -> bool {
    for i in (0..sources.len()).rev() {
        let ext_used = sources[..i].iter().filter(|&&s| s > outputs).map(|&s| s - outputs).max().unwrap_or(0);
        let limit = outputs + ext_used + 1;
        if sources[i] < limit {
            sources[i] += 1;
            for s in &mut sources[i + 1..] {
                *s = 0;
            }
            return true;
        }
    }
    false
}

fn toy_netlist(locs: &[u32], sources: &[usize], exposed: u32) -> Option<Netlist> {
    const INPUTS: [usize; 4] = [2, 2, 1, 1];
    let outputs = locs.len();
    let mut pins = sources.iter();
    let mut atoms = Vec::new();
    let mut used = vec![false; outputs];
    let mut externals = std::collections::BTreeSet::new();
    for (a, &l) in locs.iter().enumerate() {
        let kind = if l < 2 { PrimitiveKind::Lut(2) } else { PrimitiveKind::Ff };
        let inputs = (0..INPUTS[l as usize])
            .map(|_| match *pins.next().expect("one source per pin") {
                0 => None,
                s if s <= outputs => {
                    used[s - 1] = true;
                    Some(format!("n{}", s - 1))
                }
                s => {
                    externals.insert(s - outputs);
                    Some(format!("x{}", s - outputs))
                }
            })
            .collect();
        atoms.push(AtomEntry { id: a as u32, kind, inputs, output: Some(format!("n{a}")) });
    }
    let mut primary_outputs = Vec::new();
    for (a, used) in used.iter().enumerate() {
        if exposed & (1 << a) != 0 {
            primary_outputs.push(format!("n{a}"));
        } else if !used {
            return None;
        }
    }
    let file =
        NetlistFile { atoms, primary_inputs: externals.iter().map(|x| format!("x{x}")).collect(), primary_outputs };
    Some(Netlist::from_file(&file).expect("enumerated netlists are valid"))
}
