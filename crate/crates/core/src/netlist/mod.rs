//! Primitive netlists: atoms, nets, molecules, and a synthetic generator.

mod generate;
mod molecule;

pub use generate::{generate_netlist, tile_template, ArraySpec, GenerateError, GeneratorSpec, RandomSpec};
pub use molecule::{form_molecules, Molecule, MoleculeError, MoleculeId};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kind::PrimitiveKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub kind: PrimitiveKind,
    /// Input k is the atom's k-th placeholder pin.
    pub input_nets: Vec<Option<NetId>>,
    pub output_net: Option<NetId>,
}

impl Atom {
    /// Connected input pins plus a connected output.
    pub fn used_pins(&self) -> usize {
        self.input_nets.iter().flatten().count() + usize::from(self.output_net.is_some())
    }

    /// Distinct nets on any pin of this atom, ascending.
    pub fn nets(&self) -> Vec<NetId> {
        let mut v: Vec<NetId> = self.input_nets.iter().flatten().copied().chain(self.output_net).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    PrimaryInput,
    Atom(AtomId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sink {
    Atom { atom: AtomId, pin: usize },
    PrimaryOutput,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    pub id: NetId,
    pub name: String,
    pub driver: Driver,
    pub sinks: Vec<Sink>,
}

impl Net {
    pub fn is_primary_output(&self) -> bool {
        self.sinks.contains(&Sink::PrimaryOutput)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub atoms: Vec<Atom>,
    pub nets: Vec<Net>,
    pub primary_inputs: Vec<NetId>,
    pub primary_outputs: Vec<NetId>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetlistError {
    #[error("cannot read netlist file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed netlist file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("atom at position {position} has id {id}; ids must be dense and in order")]
    AtomId { position: usize, id: u32 },
    #[error("atom {atom} of kind {kind} lists {got} inputs, expected {expected}")]
    PinCount { atom: u32, kind: PrimitiveKind, expected: usize, got: usize },
    #[error("net `{0}` has more than one driver")]
    MultiplyDriven(String),
    #[error("net `{0}` is used but never driven")]
    Undriven(String),
    #[error("net `{0}` has no sinks")]
    NoSinks(String),
    #[error("net `{0}` is listed as a primary output more than once")]
    DuplicateOutput(String),
}

impl NetlistError {
    pub fn is_parse(&self) -> bool {
        matches!(self, NetlistError::Io(_) | NetlistError::Parse(_))
    }
}

/// On-disk netlist.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistFile {
    pub atoms: Vec<AtomEntry>,
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub id: u32,
    pub kind: PrimitiveKind,
    pub inputs: Vec<Option<String>>,
    pub output: Option<String>,
}

impl Netlist {
    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    /// Builds and validates a netlist. Net ids are assigned in order of first
    /// appearance: primary inputs, then atoms (inputs before output), then
    /// primary outputs.
    pub fn from_file(file: &NetlistFile) -> Result<Self, NetlistError> {
        let mut index: HashMap<&str, NetId> = HashMap::new();
        let mut names: Vec<&str> = Vec::new();
        let appearances = file
            .primary_inputs
            .iter()
            .map(String::as_str)
            .chain(
                file.atoms
                    .iter()
                    .flat_map(|a| a.inputs.iter().flatten().map(String::as_str).chain(a.output.as_deref())),
            )
            .chain(file.primary_outputs.iter().map(String::as_str));
        for n in appearances {
            index.entry(n).or_insert_with(|| {
                names.push(n);
                NetId(names.len() as u32 - 1)
            });
        }
        let id_of = |n: &str| index[n];

        let mut drivers: Vec<Option<Driver>> = vec![None; names.len()];
        let mut sinks: Vec<Vec<Sink>> = vec![Vec::new(); names.len()];
        let mut set_driver = |net: NetId, d: Driver| -> Result<(), NetlistError> {
            let slot = &mut drivers[net.index()];
            if slot.is_some() {
                return Err(NetlistError::MultiplyDriven(names[net.index()].to_string()));
            }
            *slot = Some(d);
            Ok(())
        };
        for n in &file.primary_inputs {
            set_driver(id_of(n), Driver::PrimaryInput)?;
        }
        let mut atoms = Vec::with_capacity(file.atoms.len());
        for (position, a) in file.atoms.iter().enumerate() {
            if a.id as usize != position {
                return Err(NetlistError::AtomId { position, id: a.id });
            }
            let expected = a.kind.input_count();
            if a.inputs.len() != expected {
                return Err(NetlistError::PinCount { atom: a.id, kind: a.kind, expected, got: a.inputs.len() });
            }
            let id = AtomId(a.id);
            let input_nets: Vec<Option<NetId>> = a.inputs.iter().map(|n| n.as_deref().map(id_of)).collect();
            for (pin, net) in input_nets.iter().enumerate() {
                if let Some(net) = net {
                    sinks[net.index()].push(Sink::Atom { atom: id, pin });
                }
            }
            let output_net = a.output.as_deref().map(id_of);
            if let Some(net) = output_net {
                set_driver(net, Driver::Atom(id))?;
            }
            atoms.push(Atom { id, kind: a.kind, input_nets, output_net });
        }
        let mut primary_outputs = Vec::new();
        for n in &file.primary_outputs {
            let net = id_of(n);
            if sinks[net.index()].contains(&Sink::PrimaryOutput) {
                return Err(NetlistError::DuplicateOutput(n.clone()));
            }
            sinks[net.index()].push(Sink::PrimaryOutput);
            primary_outputs.push(net);
        }

        // undriven references are reported before unused nets they may orphan
        if let Some(i) = drivers.iter().position(Option::is_none) {
            return Err(NetlistError::Undriven(names[i].to_string()));
        }
        let mut nets = Vec::with_capacity(names.len());
        for (i, (name, (driver, sinks))) in names.iter().zip(drivers.into_iter().zip(sinks)).enumerate() {
            let driver = driver.ok_or_else(|| NetlistError::Undriven(name.to_string()))?;
            if sinks.is_empty() {
                return Err(NetlistError::NoSinks(name.to_string()));
            }
            nets.push(Net { id: NetId(i as u32), name: name.to_string(), driver, sinks });
        }
        Ok(Netlist {
            atoms,
            nets,
            primary_inputs: file.primary_inputs.iter().map(|n| id_of(n)).collect(),
            primary_outputs,
        })
    }

    pub fn to_file(&self) -> NetlistFile {
        let name = |n: &NetId| self.nets[n.index()].name.clone();
        NetlistFile {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomEntry {
                    id: a.id.0,
                    kind: a.kind,
                    inputs: a.input_nets.iter().map(|n| n.as_ref().map(name)).collect(),
                    output: a.output_net.as_ref().map(name),
                })
                .collect(),
            primary_inputs: self.primary_inputs.iter().map(name).collect(),
            primary_outputs: self.primary_outputs.iter().map(name).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("netlist serializes")
    }
}

pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    Netlist::from_file(&serde_json::from_str(text)?)
}

pub fn load_netlist(path: impl AsRef<Path>) -> Result<Netlist, NetlistError> {
    parse_netlist(&std::fs::read_to_string(path)?)
}
