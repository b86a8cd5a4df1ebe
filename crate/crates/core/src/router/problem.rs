use crate::arch::{PinId, RoutingGraph};
use crate::netlist::{Driver, NetId, Sink};
use crate::packer::ClusterState;

/// One signal to route: a source node and the nodes it must reach.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemNet {
    pub source: u32,
    /// Ascending, non-empty, never containing `source`.
    pub sinks: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingProblem<'a> {
    pub graph: &'a RoutingGraph,
    pub nets: Vec<ProblemNet>,
}

/// The cluster needs more boundary pins than the architecture provides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ResourceOverflow {
    #[error("cluster needs {needed} external input pins, {available} available")]
    Inputs { needed: usize, available: usize },
    #[error("no free external output pin reachable from pin {0}")]
    Outputs(PinId),
}

/// Builds the routing problem implied by a cluster.
///
/// Nets are ordered structurally so that the problem depends only on pin
/// bindings, never on netlist ids: first nets driven inside the cluster in
/// ascending source-pin order, then externally driven nets in ascending order
/// of their smallest sink pin. External input pins are handed out lowest id
/// first in that order; every internally driven net that leaves the cluster
/// gains the lowest-id free external output pin reachable from its source.
pub fn derive_problem<'a>(cluster: &ClusterState<'a>) -> Result<RoutingProblem<'a>, ResourceOverflow> {
    let arch = cluster.arch();
    let netlist = cluster.netlist();

    let mut internal: Vec<(PinId, Vec<PinId>, bool)> = Vec::new();
    let mut driven: Vec<(NetId, PinId)> = Vec::new();
    for (atom_id, _) in cluster.atoms() {
        let atom = netlist.atom(atom_id);
        if let Some(net_id) = atom.output_net {
            let net = netlist.net(net_id);
            let mut sinks = Vec::new();
            let mut exposed = false;
            for s in &net.sinks {
                match *s {
                    Sink::Atom { atom, pin } if cluster.contains(atom) => sinks.push(cluster.input_pin(atom, pin)),
                    _ => exposed = true,
                }
            }
            internal.push((cluster.output_pin(atom_id), sinks, exposed));
        }
        for (pin, net) in atom.input_nets.iter().enumerate() {
            let Some(net) = net else { continue };
            let driven_inside = matches!(netlist.net(*net).driver, Driver::Atom(d) if cluster.contains(d));
            if !driven_inside {
                driven.push((*net, cluster.input_pin(atom_id, pin)));
            }
        }
    }

    driven.sort_unstable();
    let mut external: Vec<Vec<PinId>> = driven
        .chunk_by(|a, b| a.0 == b.0)
        .map(|run| {
            let mut pins: Vec<PinId> = run.iter().map(|&(_, pin)| pin).collect();
            pins.sort_unstable();
            pins
        })
        .collect();
    external.sort_unstable_by_key(|e| e[0]);
    internal.sort_unstable_by_key(|n| n.0);

    if external.len() > arch.external_inputs.len() {
        return Err(ResourceOverflow::Inputs { needed: external.len(), available: arch.external_inputs.len() });
    }
    let mut ext_inputs = arch.external_inputs.clone();
    ext_inputs.sort_unstable();

    let mut taken = vec![false; arch.pin_count()];
    let mut nets = Vec::with_capacity(internal.len() + external.len());
    for (source, mut sinks, exposed) in internal {
        if exposed {
            let exit = arch
                .reachable_exits(source)
                .iter()
                .copied()
                .find(|p| !taken[p.index()])
                .ok_or(ResourceOverflow::Outputs(source))?;
            taken[exit.index()] = true;
            sinks.push(exit);
        }
        if sinks.is_empty() {
            continue;
        }
        sinks.sort_unstable();
        nets.push(ProblemNet { source: source.0, sinks: sinks.into_iter().map(|p| p.0).collect() });
    }
    for (sinks, pin) in external.into_iter().zip(ext_inputs) {
        nets.push(ProblemNet { source: pin.0, sinks: sinks.into_iter().map(|p| p.0).collect() });
    }
    Ok(RoutingProblem { graph: &arch.graph, nets })
}
