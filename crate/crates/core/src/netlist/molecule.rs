use serde::{Deserialize, Serialize};

use super::{AtomId, Driver, Netlist, Sink};
use crate::arch::ArchitectureModel;
use crate::kind::PrimitiveKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoleculeId(pub u32);

impl MoleculeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Atoms that are always packed together, in placement order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Molecule {
    pub id: MoleculeId,
    pub atoms: Vec<AtomId>,
    /// (driving atom, driven atom, driven input pin) pairs kept inside the cluster.
    pub internal_links: Vec<(AtomId, AtomId, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("atom {atom} of kind {kind} fits no location of architecture `{arch}`")]
pub struct MoleculeError {
    pub atom: u32,
    pub kind: PrimitiveKind,
    pub arch: String,
}

/// Smallest atom, member atoms, and internal (driver, sink, sink pin) links.
type Group = (AtomId, Vec<AtomId>, Vec<(AtomId, AtomId, usize)>);

/// Groups atoms into molecules.
///
/// A LUT whose output net has exactly one sink, and that sink is the data
/// input of a FF, forms a {LUT, FF} molecule. Every other atom is a singleton.
/// Molecules are numbered in order of their smallest atom id.
pub fn form_molecules(netlist: &Netlist, arch: &ArchitectureModel) -> Result<Vec<Molecule>, MoleculeError> {
    for atom in &netlist.atoms {
        if !arch.locations.iter().any(|l| atom.kind.fits(l.kind)) {
            return Err(MoleculeError { atom: atom.id.0, kind: atom.kind, arch: arch.name.clone() });
        }
    }

    // partner[ff] = lut driving it through a fanout-1 net
    let mut partner: Vec<Option<AtomId>> = vec![None; netlist.atoms.len()];
    for lut in netlist.atoms.iter().filter(|a| a.kind.is_lut()) {
        let Some(net) = lut.output_net else { continue };
        let net = netlist.net(net);
        debug_assert_eq!(net.driver, Driver::Atom(lut.id));
        if let [Sink::Atom { atom: ff, pin: 0 }] = net.sinks.as_slice() {
            if netlist.atom(*ff).kind.is_ff() && *ff != lut.id {
                partner[ff.index()] = Some(lut.id);
            }
        }
    }
    let mut paired = vec![false; netlist.atoms.len()];
    let mut groups: Vec<Group> = Vec::new();
    for (ff, lut) in partner.iter().enumerate() {
        if let Some(lut) = lut {
            let ff = AtomId(ff as u32);
            paired[ff.index()] = true;
            paired[lut.index()] = true;
            groups.push(((*lut).min(ff), vec![*lut, ff], vec![(*lut, ff, 0)]));
        }
    }
    for atom in &netlist.atoms {
        if !paired[atom.id.index()] {
            groups.push((atom.id, vec![atom.id], Vec::new()));
        }
    }
    groups.sort_by_key(|g| g.0);
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(i, (_, atoms, internal_links))| Molecule { id: MoleculeId(i as u32), atoms, internal_links })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::toy_lb;
    use crate::netlist::{AtomEntry, NetlistFile};

    fn atom(id: u32, kind: &str, inputs: &[&str], output: &str) -> AtomEntry {
        AtomEntry {
            id,
            kind: kind.parse().unwrap(),
            inputs: inputs.iter().map(|s| Some(s.to_string())).collect(),
            output: Some(output.to_string()),
        }
    }

    fn build(atoms: Vec<AtomEntry>, pis: &[&str], pos: &[&str]) -> Netlist {
        Netlist::from_file(&NetlistFile {
            atoms,
            primary_inputs: pis.iter().map(|s| s.to_string()).collect(),
            primary_outputs: pos.iter().map(|s| s.to_string()).collect(),
        })
        .unwrap()
    }

    #[test]
    fn lut_ff_with_fanout_one_pairs() {
        let n = build(vec![atom(0, "lut2", &["a", "b"], "x"), atom(1, "ff", &["x"], "q")], &["a", "b"], &["q"]);
        let m = form_molecules(&n, &toy_lb()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].atoms, vec![AtomId(0), AtomId(1)]);
        assert_eq!(m[0].internal_links, vec![(AtomId(0), AtomId(1), 0)]);
    }

    #[test]
    fn fanout_two_breaks_pairing() {
        let n = build(
            vec![atom(0, "lut2", &["a", "b"], "x"), atom(1, "ff", &["x"], "q"), atom(2, "lut2", &["x", "a"], "y")],
            &["a", "b"],
            &["q", "y"],
        );
        let m = form_molecules(&n, &toy_lb()).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|m| m.atoms.len() == 1 && m.internal_links.is_empty()));
    }

    #[test]
    fn only_ffs_are_singletons() {
        let n = build(vec![atom(0, "ff", &["a"], "q0"), atom(1, "ff", &["q0"], "q1")], &["a"], &["q1"]);
        let m = form_molecules(&n, &toy_lb()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].atoms, vec![AtomId(1)]);
    }

    #[test]
    fn pair_is_ordered_by_smallest_atom() {
        // FF listed before the LUT that drives it
        let n = build(
            vec![atom(0, "lut2", &["a", "b"], "z"), atom(1, "ff", &["x"], "q"), atom(2, "lut2", &["a", "z"], "x")],
            &["a", "b"],
            &["q"],
        );
        let m = form_molecules(&n, &toy_lb()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].atoms, vec![AtomId(0)]);
        assert_eq!(m[1].atoms, vec![AtomId(2), AtomId(1)]);
    }

    #[test]
    fn unmappable_kind() {
        let n = build(vec![atom(0, "lut4", &["a", "a", "a", "a"], "x")], &["a"], &["x"]);
        let err = form_molecules(&n, &toy_lb()).unwrap_err();
        assert_eq!(err.atom, 0);
    }
}
