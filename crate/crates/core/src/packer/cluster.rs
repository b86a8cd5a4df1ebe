use serde::{Deserialize, Serialize};

use crate::arch::{exclusivity_ok, ArchitectureModel, LocId, PinId};
use crate::netlist::{AtomId, Molecule, MoleculeId, Netlist};

const EMPTY: u32 = u32::MAX;

/// One molecule inside a cluster, with the location chosen for each atom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedMolecule {
    pub molecule_id: MoleculeId,
    pub placements: Vec<(AtomId, LocId)>,
}

/// An in-progress cluster.
///
/// Atom input k is bound to the k-th input pin of its location; atom outputs
/// bind to the location's first output pin.
#[derive(Clone, Debug)]
pub struct ClusterState<'a> {
    arch: &'a ArchitectureModel,
    netlist: &'a Netlist,
    /// Raw id of the atom at each location, `EMPTY` if free.
    occupant: Vec<u32>,
    /// Location of each netlist atom, `EMPTY` if not in the cluster. Costs
    /// one word per atom but makes membership tests constant time, which
    /// the signature encoders rely on.
    placed_at: Vec<u32>,
    molecules: Vec<PlacedMolecule>,
}

impl<'a> ClusterState<'a> {
    pub fn new(arch: &'a ArchitectureModel, netlist: &'a Netlist) -> Self {
        ClusterState {
            arch,
            netlist,
            occupant: vec![EMPTY; arch.locations.len()],
            placed_at: vec![EMPTY; netlist.atoms.len()],
            molecules: Vec::new(),
        }
    }

    pub fn arch(&self) -> &'a ArchitectureModel {
        self.arch
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn is_occupied(&self, loc: LocId) -> bool {
        self.occupant[loc.index()] != EMPTY
    }

    pub fn occupant(&self, loc: LocId) -> Option<AtomId> {
        let a = self.occupant[loc.index()];
        (a != EMPTY).then_some(AtomId(a))
    }

    pub fn location_of(&self, atom: AtomId) -> Option<LocId> {
        let l = self.placed_at[atom.index()];
        (l != EMPTY).then_some(LocId(l))
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.placed_at[atom.index()] != EMPTY
    }

    /// Molecules in insertion order.
    pub fn molecules(&self) -> &[PlacedMolecule] {
        &self.molecules
    }

    /// Placed atoms in insertion order.
    pub fn atoms(&self) -> impl Iterator<Item = (AtomId, LocId)> + '_ {
        self.molecules.iter().flat_map(|m| m.placements.iter().copied())
    }

    pub fn atom_count(&self) -> usize {
        self.occupant.iter().filter(|&&o| o != EMPTY).count()
    }

    /// Location pin bound to input `pin` of a placed atom.
    pub fn input_pin(&self, atom: AtomId, pin: usize) -> PinId {
        let loc = self.location_of(atom).expect("atom is placed");
        self.arch.location(loc).input_pins[pin]
    }

    /// Location pin bound to the output of a placed atom.
    pub fn output_pin(&self, atom: AtomId) -> PinId {
        let loc = self.location_of(atom).expect("atom is placed");
        self.arch.location(loc).output_pins[0]
    }

    /// Lowest-id free location that fits `atom` and respects exclusivity.
    pub fn first_fit(&self, atom: AtomId) -> Option<LocId> {
        let kind = self.netlist.atom(atom).kind;
        self.arch
            .locations
            .iter()
            .find(|l| !self.is_occupied(l.id) && kind.fits(l.kind) && exclusivity_ok(self, l.id))
            .map(|l| l.id)
    }

    /// First-fit locations for every atom of `molecule`, in order, or `None`
    /// if some atom has nowhere to go. The cluster is left unchanged.
    pub fn plan(&mut self, molecule: &Molecule) -> Option<Vec<(AtomId, LocId)>> {
        let mut plan = Vec::with_capacity(molecule.atoms.len());
        for &atom in &molecule.atoms {
            match self.first_fit(atom) {
                Some(loc) => {
                    self.occupant[loc.index()] = atom.0;
                    plan.push((atom, loc));
                }
                None => break,
            }
        }
        for &(_, loc) in &plan {
            self.occupant[loc.index()] = EMPTY;
        }
        (plan.len() == molecule.atoms.len()).then_some(plan)
    }

    /// Opens a new molecule entry; atoms are then added with [`place_atom`].
    ///
    /// [`place_atom`]: ClusterState::place_atom
    pub fn begin_molecule(&mut self, id: MoleculeId) {
        self.molecules.push(PlacedMolecule { molecule_id: id, placements: Vec::new() });
    }

    pub fn place_atom(&mut self, atom: AtomId, loc: LocId) {
        debug_assert!(!self.is_occupied(loc), "location {loc:?} double-booked");
        debug_assert!(exclusivity_ok(self, loc));
        self.occupant[loc.index()] = atom.0;
        self.placed_at[atom.index()] = loc.0;
        self.molecules.last_mut().expect("begin_molecule first").placements.push((atom, loc));
    }

    /// Places a whole molecule at its first-fit locations.
    pub fn add_molecule(&mut self, molecule: &Molecule) -> bool {
        let Some(plan) = self.plan(molecule) else { return false };
        self.begin_molecule(molecule.id);
        for (atom, loc) in plan {
            self.place_atom(atom, loc);
        }
        true
    }

    pub fn remove_last_molecule(&mut self) -> Option<PlacedMolecule> {
        let m = self.molecules.pop()?;
        for &(atom, loc) in &m.placements {
            debug_assert_eq!(self.occupant[loc.index()], atom.0);
            self.occupant[loc.index()] = EMPTY;
            self.placed_at[atom.index()] = EMPTY;
        }
        Some(m)
    }

    pub fn into_molecules(self) -> Vec<PlacedMolecule> {
        self.molecules
    }
}
