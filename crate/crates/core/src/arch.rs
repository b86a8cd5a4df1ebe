//! Logic-block architecture model: locations, pins, exclusivity groups and
//! the intracluster routing graph.
//!
//! Routing nodes are numbered pins-first: node `i < pin_count()` is `PinId(i)`,
//! the remaining nodes are internal wires in file order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kind::PrimitiveKind;
use crate::packer::ClusterState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PinId(pub u32);

impl PinId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocId(pub u32);

impl LocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: LocId,
    pub kind: PrimitiveKind,
    pub input_pins: Vec<PinId>,
    pub output_pins: Vec<PinId>,
    pub exclusivity_group: Option<u32>,
}

/// What a pin is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinRole {
    LocationInput { loc: LocId, index: usize },
    LocationOutput { loc: LocId, index: usize },
    ExternalInput,
    ExternalOutput,
}

/// Directed routing-resource graph. Every node has capacity 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingGraph {
    fanout: Vec<Vec<u32>>,
}

impl RoutingGraph {
    pub fn node_count(&self) -> usize {
        self.fanout.len()
    }

    /// Successors of `node`, sorted ascending.
    pub fn fanout(&self, node: usize) -> &[u32] {
        &self.fanout[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.fanout[from].binary_search(&(to as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.fanout.iter().map(Vec::len).sum()
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            for &m in &self.fanout[n] {
                if !seen[m as usize] {
                    seen[m as usize] = true;
                    queue.push_back(m as usize);
                }
            }
        }
        seen
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArchError {
    #[error("cannot read architecture file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed architecture file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("pin `{0}` is declared more than once")]
    DuplicatePin(String),
    #[error("wire `{0}` clashes with another node name")]
    DuplicateWire(String),
    #[error("location at position {position} has id {id}; ids must be dense and in order")]
    LocationId { position: usize, id: u32 },
    #[error("location {loc} of kind {kind} declares {inputs} inputs and {outputs} outputs")]
    PinCount { loc: u32, kind: PrimitiveKind, inputs: usize, outputs: usize },
    #[error("edge ({0}, {1}) references an unknown node")]
    DanglingEdge(String, String),
    #[error("edge ({0}, {1}) is listed twice")]
    DuplicateEdge(String, String),
    #[error("external input pin `{0}` has an incoming edge")]
    ExternalInputDriven(String),
    #[error("external output pin `{0}` has an outgoing edge")]
    ExternalOutputDrives(String),
    #[error("location input pin `{0}` is unreachable from every external input")]
    UnreachableInput(String),
    #[error("location output pin `{0}` reaches no external output")]
    TrappedOutput(String),
    #[error("equivalence group references unknown pin `{0}`")]
    UnknownEquivalentPin(String),
}

impl ArchError {
    /// True for I/O and syntax problems, false for semantic validation failures.
    pub fn is_parse(&self) -> bool {
        matches!(self, ArchError::Io(_) | ArchError::Parse(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchitectureModel {
    pub name: String,
    pub locations: Vec<Location>,
    pub external_inputs: Vec<PinId>,
    pub external_outputs: Vec<PinId>,
    pub graph: RoutingGraph,
    /// Logically equivalent pin sets. Informational only: equivalent pins keep
    /// their own ids everywhere.
    pub equivalence_groups: Vec<Vec<PinId>>,
    pin_names: Vec<String>,
    wire_names: Vec<String>,
    pin_roles: Vec<PinRole>,
    conflicts: Vec<Vec<LocId>>,
    exits: Vec<Vec<PinId>>,
}

impl ArchitectureModel {
    pub fn pin_count(&self) -> usize {
        self.pin_names.len()
    }

    pub fn location(&self, id: LocId) -> &Location {
        &self.locations[id.index()]
    }

    pub fn pin_name(&self, pin: PinId) -> &str {
        &self.pin_names[pin.index()]
    }

    pub fn node_name(&self, node: usize) -> &str {
        if node < self.pin_names.len() {
            &self.pin_names[node]
        } else {
            &self.wire_names[node - self.pin_names.len()]
        }
    }

    pub fn pin_by_name(&self, name: &str) -> Option<PinId> {
        self.pin_names.iter().position(|n| n == name).map(|i| PinId(i as u32))
    }

    pub fn pin_role(&self, pin: PinId) -> PinRole {
        self.pin_roles[pin.index()]
    }

    /// Other locations sharing `loc`'s exclusivity group.
    pub fn conflicts(&self, loc: LocId) -> &[LocId] {
        &self.conflicts[loc.index()]
    }

    /// External output pins reachable from a location output pin, ascending.
    pub fn reachable_exits(&self, pin: PinId) -> &[PinId] {
        &self.exits[pin.index()]
    }

    /// Serializes back to the file representation.
    pub fn to_file(&self) -> ArchFile {
        let name = |p: &PinId| self.pin_names[p.index()].clone();
        ArchFile {
            name: self.name.clone(),
            locations: self
                .locations
                .iter()
                .map(|l| LocationEntry {
                    id: l.id.0,
                    kind: l.kind,
                    inputs: l.input_pins.iter().map(name).collect(),
                    outputs: l.output_pins.iter().map(name).collect(),
                    exclusivity_group: l.exclusivity_group,
                })
                .collect(),
            external_inputs: self.external_inputs.iter().map(name).collect(),
            external_outputs: self.external_outputs.iter().map(name).collect(),
            wires: self.wire_names.clone(),
            edges: (0..self.graph.node_count())
                .flat_map(|from| {
                    self.graph
                        .fanout(from)
                        .iter()
                        .map(move |&to| (self.node_name(from).to_string(), self.node_name(to as usize).to_string()))
                })
                .collect(),
            equivalence_groups: self.equivalence_groups.iter().map(|g| g.iter().map(name).collect()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("architecture serializes")
    }

    pub fn from_file(file: ArchFile) -> Result<Self, ArchError> {
        let mut pin_names: Vec<String> = Vec::new();
        let mut pin_roles = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut declare = |name: &str, role: PinRole| -> Result<PinId, ArchError> {
            if index.contains_key(name) {
                return Err(ArchError::DuplicatePin(name.to_string()));
            }
            let id = pin_names.len();
            index.insert(name.to_string(), id);
            pin_names.push(name.to_string());
            pin_roles.push(role);
            Ok(PinId(id as u32))
        };

        let mut locations = Vec::with_capacity(file.locations.len());
        for (position, entry) in file.locations.iter().enumerate() {
            if entry.id as usize != position {
                return Err(ArchError::LocationId { position, id: entry.id });
            }
            if entry.inputs.len() != entry.kind.input_count() || entry.outputs.len() != 1 {
                return Err(ArchError::PinCount {
                    loc: entry.id,
                    kind: entry.kind,
                    inputs: entry.inputs.len(),
                    outputs: entry.outputs.len(),
                });
            }
            let loc = LocId(entry.id);
            let input_pins = entry
                .inputs
                .iter()
                .enumerate()
                .map(|(i, n)| declare(n, PinRole::LocationInput { loc, index: i }))
                .collect::<Result<Vec<_>, _>>()?;
            let output_pins = entry
                .outputs
                .iter()
                .enumerate()
                .map(|(i, n)| declare(n, PinRole::LocationOutput { loc, index: i }))
                .collect::<Result<Vec<_>, _>>()?;
            locations.push(Location {
                id: loc,
                kind: entry.kind,
                input_pins,
                output_pins,
                exclusivity_group: entry.exclusivity_group,
            });
        }
        let external_inputs =
            file.external_inputs.iter().map(|n| declare(n, PinRole::ExternalInput)).collect::<Result<Vec<_>, _>>()?;
        let external_outputs =
            file.external_outputs.iter().map(|n| declare(n, PinRole::ExternalOutput)).collect::<Result<Vec<_>, _>>()?;

        let pin_total = pin_names.len();
        for (i, w) in file.wires.iter().enumerate() {
            if index.contains_key(w) {
                return Err(ArchError::DuplicateWire(w.clone()));
            }
            index.insert(w.clone(), pin_total + i);
        }
        let node_total = pin_total + file.wires.len();

        let mut fanout = vec![Vec::new(); node_total];
        for (from, to) in &file.edges {
            let (Some(&a), Some(&b)) = (index.get(from), index.get(to)) else {
                return Err(ArchError::DanglingEdge(from.clone(), to.clone()));
            };
            fanout[a].push(b as u32);
        }
        for (node, succ) in fanout.iter_mut().enumerate() {
            succ.sort_unstable();
            if let Some(w) = succ.windows(2).find(|w| w[0] == w[1]) {
                let to = w[0] as usize;
                let name = |n: usize| {
                    if n < pin_total {
                        pin_names[n].clone()
                    } else {
                        file.wires[n - pin_total].clone()
                    }
                };
                return Err(ArchError::DuplicateEdge(name(node), name(to)));
            }
        }
        let graph = RoutingGraph { fanout };

        for &p in &external_inputs {
            if graph.fanout.iter().any(|s| s.contains(&p.0)) {
                return Err(ArchError::ExternalInputDriven(pin_names[p.index()].clone()));
            }
        }
        for &p in &external_outputs {
            if !graph.fanout(p.index()).is_empty() {
                return Err(ArchError::ExternalOutputDrives(pin_names[p.index()].clone()));
            }
        }

        let mut from_inputs = vec![false; node_total];
        for &p in &external_inputs {
            for (n, r) in graph.reachable_from(p.index()).into_iter().enumerate() {
                from_inputs[n] |= r;
            }
        }
        let mut exits = vec![Vec::new(); pin_total];
        for loc in &locations {
            for &p in &loc.input_pins {
                if !from_inputs[p.index()] {
                    return Err(ArchError::UnreachableInput(pin_names[p.index()].clone()));
                }
            }
            for &p in &loc.output_pins {
                let seen = graph.reachable_from(p.index());
                let reach: Vec<PinId> = external_outputs.iter().copied().filter(|o| seen[o.index()]).collect();
                if reach.is_empty() {
                    return Err(ArchError::TrappedOutput(pin_names[p.index()].clone()));
                }
                exits[p.index()] = reach;
            }
        }

        let equivalence_groups = file
            .equivalence_groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|n| match index.get(n) {
                        Some(&i) if i < pin_total => Ok(PinId(i as u32)),
                        _ => Err(ArchError::UnknownEquivalentPin(n.clone())),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;

        let conflicts = locations
            .iter()
            .map(|l| match l.exclusivity_group {
                None => Vec::new(),
                Some(g) => {
                    locations.iter().filter(|o| o.id != l.id && o.exclusivity_group == Some(g)).map(|o| o.id).collect()
                }
            })
            .collect();

        Ok(ArchitectureModel {
            name: file.name,
            locations,
            external_inputs,
            external_outputs,
            graph,
            equivalence_groups,
            pin_names,
            wire_names: file.wires,
            pin_roles,
            conflicts,
            exits,
        })
    }
}

/// On-disk architecture description.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchFile {
    pub name: String,
    pub locations: Vec<LocationEntry>,
    pub external_inputs: Vec<String>,
    pub external_outputs: Vec<String>,
    #[serde(default)]
    pub wires: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub equivalence_groups: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationEntry {
    pub id: u32,
    pub kind: PrimitiveKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusivity_group: Option<u32>,
}

pub fn parse_architecture(text: &str) -> Result<ArchitectureModel, ArchError> {
    ArchitectureModel::from_file(serde_json::from_str(text)?)
}

pub fn load_architecture(path: impl AsRef<Path>) -> Result<ArchitectureModel, ArchError> {
    parse_architecture(&std::fs::read_to_string(path)?)
}

/// True iff no occupied location of `cluster` shares `loc`'s exclusivity group.
pub fn exclusivity_ok(cluster: &ClusterState<'_>, loc: LocId) -> bool {
    cluster.arch().conflicts(loc).iter().all(|&other| !cluster.is_occupied(other))
}

/// Builder for architecture files assembled in code.
#[derive(Default)]
pub struct ArchBuilder {
    file: ArchFile,
    edge_set: HashSet<(String, String)>,
}

impl ArchBuilder {
    pub fn new(name: &str) -> Self {
        let mut b = ArchBuilder::default();
        b.file.name = name.to_string();
        b
    }

    pub fn location(&mut self, kind: PrimitiveKind, inputs: &[&str], output: &str, group: Option<u32>) -> &mut Self {
        let id = self.file.locations.len() as u32;
        self.file.locations.push(LocationEntry {
            id,
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: vec![output.to_string()],
            exclusivity_group: group,
        });
        self
    }

    pub fn external_input(&mut self, name: &str) -> &mut Self {
        self.file.external_inputs.push(name.to_string());
        self
    }

    pub fn external_output(&mut self, name: &str) -> &mut Self {
        self.file.external_outputs.push(name.to_string());
        self
    }

    pub fn wire(&mut self, name: &str) -> &mut Self {
        self.file.wires.push(name.to_string());
        self
    }

    /// Adds an edge; repeated edges are ignored.
    pub fn edge(&mut self, from: &str, to: &str) -> &mut Self {
        let e = (from.to_string(), to.to_string());
        if self.edge_set.insert(e.clone()) {
            self.file.edges.push(e);
        }
        self
    }

    pub fn equivalence_group(&mut self, pins: &[String]) -> &mut Self {
        self.file.equivalence_groups.push(pins.to_vec());
        self
    }

    pub fn file(&self) -> &ArchFile {
        &self.file
    }

    pub fn build(&self) -> Result<ArchitectureModel, ArchError> {
        ArchitectureModel::from_file(self.file.clone())
    }
}

/// The four-location example logic block: two 2-LUTs and two bypassable FFs.
///
/// loc0 = LUT (A, B -> F), loc1 = LUT (C, D -> E), loc2 = FF (G -> H),
/// loc3 = FF (I -> J). Four external inputs and every location output feed a
/// full crossbar into all location inputs; every output may leave the block
/// through any of the four external outputs.
pub fn toy_lb() -> ArchitectureModel {
    toy_lb_builder().build().expect("toy_lb is valid")
}

pub fn toy_lb_builder() -> ArchBuilder {
    let mut b = ArchBuilder::new("toy_lb");
    b.location(PrimitiveKind::Lut(2), &["A", "B"], "F", None)
        .location(PrimitiveKind::Lut(2), &["C", "D"], "E", None)
        .location(PrimitiveKind::Ff, &["G"], "H", None)
        .location(PrimitiveKind::Ff, &["I"], "J", None);
    let ins = ["in0", "in1", "in2", "in3"];
    let outs = ["out0", "out1", "out2", "out3"];
    for i in ins {
        b.external_input(i);
    }
    for o in outs {
        b.external_output(o);
    }
    let sinks = ["A", "B", "C", "D", "G", "I"];
    for src in ins.iter().chain(["E", "F", "H", "J"].iter()) {
        for s in sinks {
            b.edge(src, s);
        }
    }
    for src in ["E", "F", "H", "J"] {
        for o in outs {
            b.edge(src, o);
        }
    }
    b
}
