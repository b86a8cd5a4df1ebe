//! Synthetic netlists with controllable substructure repetition.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AtomEntry, Netlist, NetlistFile};
use crate::kind::PrimitiveKind;

/// `tiles` copies of one randomly wired tile template.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub tiles: usize,
    pub tile_luts: usize,
    pub tile_ffs: usize,
    pub lut_inputs: u8,
    /// Primary inputs owned by each tile.
    pub tile_inputs: usize,
    /// Nets from tile t-1 replacing the first tile inputs of tile t.
    pub inter_tile_nets: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub luts: usize,
    pub ffs: usize,
    pub primary_inputs: usize,
    pub lut_inputs_min: u8,
    pub lut_inputs_max: u8,
    /// Upper bound on atom sinks per net.
    pub max_fanout: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Array(ArraySpec),
    Random(RandomSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
}

fn infeasible<T>(msg: impl Into<String>) -> Result<T, GenerateError> {
    Err(GenerateError::Infeasible(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Input(usize),
    Atom(usize),
}

#[derive(Clone, Debug)]
struct TemplateAtom {
    kind: PrimitiveKind,
    inputs: Vec<Source>,
}

/// Picks `count` sources, distinct where the pool allows it.
fn pick_sources(rng: &mut ChaCha8Rng, pool: &[Source], count: usize) -> Vec<Source> {
    let mut chosen: Vec<Source> = pool.choose_multiple(rng, count.min(pool.len())).copied().collect();
    while chosen.len() < count {
        chosen.push(pool[rng.gen_range(0..pool.len())]);
    }
    chosen
}

fn template(spec: &ArraySpec, rng: &mut ChaCha8Rng) -> Result<Vec<TemplateAtom>, GenerateError> {
    if spec.tile_luts + spec.tile_ffs == 0 {
        return infeasible("a tile needs at least one atom");
    }
    if !(1..=8).contains(&spec.lut_inputs) {
        return infeasible("lut_inputs must be in 1..=8");
    }
    if spec.tile_inputs == 0 && spec.tile_ffs == 0 {
        return infeasible("the first LUT of a tile has no possible driver");
    }
    if spec.tile_ffs > 0 && spec.tile_luts == 0 && spec.tile_inputs == 0 {
        return infeasible("FFs need a LUT or a tile input to drive them");
    }
    let ff_base = spec.tile_luts;
    let mut atoms = Vec::with_capacity(spec.tile_luts + spec.tile_ffs);
    for j in 0..spec.tile_luts {
        let pool: Vec<Source> = (0..spec.tile_inputs)
            .map(Source::Input)
            .chain((0..j).map(Source::Atom))
            .chain((0..spec.tile_ffs).map(|f| Source::Atom(ff_base + f)))
            .collect();
        atoms.push(TemplateAtom {
            kind: PrimitiveKind::Lut(spec.lut_inputs),
            inputs: pick_sources(rng, &pool, spec.lut_inputs as usize),
        });
    }
    for _ in 0..spec.tile_ffs {
        let d = if spec.tile_luts > 0 {
            Source::Atom(rng.gen_range(0..spec.tile_luts))
        } else {
            Source::Input(rng.gen_range(0..spec.tile_inputs))
        };
        atoms.push(TemplateAtom { kind: PrimitiveKind::Ff, inputs: vec![d] });
    }
    Ok(atoms)
}

/// Turns per-atom source lists into a netlist file. Unused primary inputs are
/// dropped and atom outputs without sinks become primary outputs.
fn assemble(
    atoms: &[(PrimitiveKind, Vec<Option<String>>, String)],
    primary_inputs: Vec<String>,
) -> Result<Netlist, GenerateError> {
    use std::collections::HashSet;
    let used: HashSet<&str> = atoms.iter().flat_map(|(_, ins, _)| ins.iter().flatten().map(String::as_str)).collect();
    let file = NetlistFile {
        atoms: atoms
            .iter()
            .enumerate()
            .map(|(i, (kind, inputs, output))| AtomEntry {
                id: i as u32,
                kind: *kind,
                inputs: inputs.clone(),
                output: Some(output.clone()),
            })
            .collect(),
        primary_inputs: primary_inputs.into_iter().filter(|n| used.contains(n.as_str())).collect(),
        primary_outputs: atoms.iter().map(|(_, _, out)| out).filter(|o| !used.contains(o.as_str())).cloned().collect(),
    };
    Netlist::from_file(&file).map_err(|e| GenerateError::Infeasible(e.to_string()))
}

fn array_netlist(spec: &ArraySpec, tiles: usize, rng_seed: u64) -> Result<Netlist, GenerateError> {
    if tiles == 0 {
        return infeasible("tiles must be positive");
    }
    if spec.inter_tile_nets > spec.tile_inputs {
        return infeasible("more inter-tile nets than tile inputs");
    }
    if spec.inter_tile_nets > spec.tile_luts + spec.tile_ffs {
        return infeasible("more inter-tile nets than atoms per tile");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tmpl = template(spec, &mut rng)?;
    let per_tile = tmpl.len();
    let out_name = |t: usize, j: usize| format!("t{t}_a{j}");
    let mut atoms = Vec::with_capacity(tiles * per_tile);
    let mut pis = Vec::new();
    for t in 0..tiles {
        let input_name = |i: usize| {
            if t > 0 && i < spec.inter_tile_nets {
                // chain i is driven by the i-th atom from the end of the previous tile
                out_name(t - 1, per_tile - 1 - i)
            } else {
                format!("t{t}_in{i}")
            }
        };
        for i in 0..spec.tile_inputs {
            if !(t > 0 && i < spec.inter_tile_nets) {
                pis.push(input_name(i));
            }
        }
        for (j, a) in tmpl.iter().enumerate() {
            let inputs = a
                .inputs
                .iter()
                .map(|s| {
                    Some(match *s {
                        Source::Input(i) => input_name(i),
                        Source::Atom(k) => out_name(t, k),
                    })
                })
                .collect();
            atoms.push((a.kind, inputs, out_name(t, j)));
        }
    }
    assemble(&atoms, pis)
}

fn random_netlist(spec: &RandomSpec, rng_seed: u64) -> Result<Netlist, GenerateError> {
    if spec.luts + spec.ffs == 0 {
        return infeasible("no atoms requested");
    }
    if spec.lut_inputs_min == 0 || spec.lut_inputs_min > spec.lut_inputs_max || spec.lut_inputs_max > 8 {
        return infeasible("LUT input range must satisfy 1 <= min <= max <= 8");
    }
    if spec.max_fanout == 0 {
        return infeasible("max_fanout must be positive");
    }
    let demand = spec.luts * spec.lut_inputs_max as usize + spec.ffs;
    let supply = (spec.primary_inputs + spec.luts + spec.ffs) * spec.max_fanout;
    if demand > supply {
        return infeasible(format!(
            "fanout demand {demand} exceeds what {} sources with max fanout {} can supply",
            spec.primary_inputs + spec.luts + spec.ffs,
            spec.max_fanout
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut kinds: Vec<bool> =
        std::iter::repeat_n(true, spec.luts).chain(std::iter::repeat_n(false, spec.ffs)).collect();
    kinds.shuffle(&mut rng);
    let n = kinds.len();
    let ffs: Vec<usize> = (0..n).filter(|&i| !kinds[i]).collect();
    let mut fanout_pi = vec![0usize; spec.primary_inputs];
    let mut fanout_atom = vec![0usize; n];

    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        let (kind, count) = if kinds[i] {
            let k = rng.gen_range(spec.lut_inputs_min..=spec.lut_inputs_max);
            (PrimitiveKind::Lut(k), k as usize)
        } else {
            (PrimitiveKind::Ff, 1)
        };
        let mut pool: Vec<Source> = if kinds[i] {
            (0..spec.primary_inputs)
                .filter(|&p| fanout_pi[p] < spec.max_fanout)
                .map(Source::Input)
                .chain(
                    (0..i)
                        .filter(|&a| kinds[a])
                        .chain(ffs.iter().copied())
                        .filter(|&a| fanout_atom[a] < spec.max_fanout)
                        .map(Source::Atom),
                )
                .collect()
        } else {
            (0..n).filter(|&a| kinds[a] && fanout_atom[a] < spec.max_fanout).map(Source::Atom).collect()
        };
        if pool.is_empty() && !kinds[i] {
            pool = (0..spec.primary_inputs).filter(|&p| fanout_pi[p] < spec.max_fanout).map(Source::Input).collect();
        }
        let mut inputs = Vec::with_capacity(count);
        for _ in 0..count {
            pool.retain(|s| match *s {
                Source::Input(p) => fanout_pi[p] < spec.max_fanout,
                Source::Atom(a) => fanout_atom[a] < spec.max_fanout,
            });
            let fresh: Vec<Source> = pool.iter().copied().filter(|s| !inputs.contains(s)).collect();
            let from = if fresh.is_empty() { &pool } else { &fresh };
            if from.is_empty() {
                return infeasible(format!("no driver with spare fanout for atom {i}"));
            }
            let s = from[rng.gen_range(0..from.len())];
            match s {
                Source::Input(p) => fanout_pi[p] += 1,
                Source::Atom(a) => fanout_atom[a] += 1,
            }
            inputs.push(s);
        }
        atoms.push((kind, inputs));
    }
    let named: Vec<(PrimitiveKind, Vec<Option<String>>, String)> = atoms
        .into_iter()
        .enumerate()
        .map(|(i, (kind, inputs))| {
            let inputs = inputs
                .into_iter()
                .map(|s| {
                    Some(match s {
                        Source::Input(p) => format!("pi{p}"),
                        Source::Atom(a) => format!("n{a}"),
                    })
                })
                .collect();
            (kind, inputs, format!("n{i}"))
        })
        .collect();
    assemble(&named, (0..spec.primary_inputs).map(|p| format!("pi{p}")).collect())
}

/// Deterministic for a fixed `(spec, rng_seed)`.
pub fn generate_netlist(spec: &GeneratorSpec, rng_seed: u64) -> Result<Netlist, GenerateError> {
    match spec {
        GeneratorSpec::Array(a) => array_netlist(a, a.tiles, rng_seed),
        GeneratorSpec::Random(r) => random_netlist(r, rng_seed),
    }
}

/// The single tile an `array` netlist replicates.
pub fn tile_template(spec: &ArraySpec, rng_seed: u64) -> Result<Netlist, GenerateError> {
    array_netlist(spec, 1, rng_seed)
}
