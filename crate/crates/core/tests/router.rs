//! Router behaviour against hand-derived expectations and the exhaustive oracle.

use dejavu_core::arch::{toy_lb, ArchitectureModel, LocId, PinId};
use dejavu_core::fixtures::{fig5_netlist, for_each_toy_cluster, tiny_depop};
use dejavu_core::netlist::{AtomId, MoleculeId, Netlist};
use dejavu_core::packer::ClusterState;
use dejavu_core::router::{
    brute_force_routable, derive_problem, route, route_cluster, BudgetExceeded, ProblemNet, RouterParams,
    RoutingProblem, DEFAULT_NODE_BUDGET,
};
use proptest::prelude::*;

fn place<'a>(arch: &'a ArchitectureModel, netlist: &'a Netlist, steps: &[(u32, u32)]) -> ClusterState<'a> {
    let mut state = ClusterState::new(arch, netlist);
    for (i, &(atom, loc)) in steps.iter().enumerate() {
        state.begin_molecule(MoleculeId(i as u32));
        state.place_atom(AtomId(atom), LocId(loc));
    }
    state
}

fn node(arch: &ArchitectureModel, name: &str) -> u32 {
    (0..arch.graph.node_count()).find(|&n| arch.node_name(n) == name).unwrap() as u32
}

#[test]
fn empty_problem_is_legal_without_iterations() {
    let arch = toy_lb();
    let problem = RoutingProblem { graph: &arch.graph, nets: vec![] };
    let r = route(&problem, &RouterParams::default());
    assert!(r.legal);
    assert_eq!(r.iterations_used, 0);
}

#[test]
fn cluster1_problem_has_f_to_g_and_shared_b_c_source() {
    let arch = toy_lb();
    let netlist = fig5_netlist();
    let state = place(&arch, &netlist, &[(0, 0), (1, 2), (2, 3), (3, 1)]);
    let problem = derive_problem(&state).unwrap();
    let p = |n| arch.pin_by_name(n).unwrap().0;
    assert!(problem.nets.iter().any(|n| n.source == p("F") && n.sinks == vec![p("G")]));
    let shared: Vec<_> = problem.nets.iter().filter(|n| n.sinks == vec![p("B"), p("C")]).collect();
    assert_eq!(shared.len(), 1);
    assert_eq!(arch.pin_role(PinId(shared[0].source)), dejavu_core::arch::PinRole::ExternalInput);
    assert!(route(&problem, &RouterParams::default()).legal);
}

#[test]
fn derived_problem_is_structural() {
    // F first (internal, ascending source), then E/H/J exits, then external
    // nets by smallest sink pin with the lowest free input pins.
    let arch = toy_lb();
    let netlist = fig5_netlist();
    let state = place(&arch, &netlist, &[(0, 0), (1, 2), (2, 3), (3, 1)]);
    let problem = derive_problem(&state).unwrap();
    let p = |n: &str| arch.pin_by_name(n).unwrap().0;
    let net = |s: &str, sinks: &[&str]| ProblemNet { source: p(s), sinks: sinks.iter().map(|&n| p(n)).collect() };
    assert_eq!(
        problem.nets,
        vec![
            net("F", &["G"]),
            net("E", &["out0"]),
            net("H", &["out1"]),
            net("J", &["out2"]),
            net("in0", &["A"]),
            net("in1", &["B", "C"]),
            net("in2", &["D"]),
            net("in3", &["I"]),
        ]
    );
}

#[test]
fn single_lut_with_one_input_has_two_nets() {
    let arch = toy_lb();
    let netlist = dejavu_core::netlist::parse_netlist(
        r#"{"atoms":[{"id":0,"kind":"lut2","inputs":["a",null],"output":"o"}],
            "primary_inputs":["a"],"primary_outputs":["o"]}"#,
    )
    .unwrap();
    let state = place(&arch, &netlist, &[(0, 0)]);
    assert_eq!(derive_problem(&state).unwrap().nets.len(), 2);
}

#[test]
fn cluster2_routes_on_the_full_crossbar() {
    let arch = toy_lb();
    let netlist = fig5_netlist();
    let state = place(&arch, &netlist, &[(0, 0), (1, 2), (4, 1), (5, 3)]);
    let problem = derive_problem(&state).unwrap();
    let r = route(&problem, &RouterParams::default());
    assert!(r.legal);
    assert_eq!(r.iterations_used, 1);
    assert!(r.is_sound(&problem));
    assert_eq!(brute_force_routable(&problem, DEFAULT_NODE_BUDGET), Ok(true));
}

#[test]
fn two_nets_needing_one_wire_are_illegal() {
    let arch = tiny_depop();
    let n = |s| node(&arch, s);
    // i2 reaches b1 only through w1; y0 reaches d only through w1
    let problem = RoutingProblem {
        graph: &arch.graph,
        nets: vec![
            ProblemNet { source: n("i2"), sinks: vec![n("b1")] },
            ProblemNet { source: n("y0"), sinks: vec![n("d")] },
        ],
    };
    assert_eq!(brute_force_routable(&problem, DEFAULT_NODE_BUDGET), Ok(false));
    let r = route(&problem, &RouterParams::default());
    assert!(!r.legal);
    assert_eq!(r.iterations_used, 50);
}

#[test]
fn congestion_is_negotiated_away() {
    // one tree from i1 through w0 serves both a1 and b0; y0 reaches b1
    // through w1 and leaves directly
    let arch = tiny_depop();
    let n = |s| node(&arch, s);
    let problem = RoutingProblem {
        graph: &arch.graph,
        nets: vec![
            ProblemNet { source: n("i1"), sinks: vec![n("a1"), n("b0")] },
            ProblemNet { source: n("y0"), sinks: vec![n("b1"), n("o0")] },
        ],
    };
    let r = route(&problem, &RouterParams::default());
    assert!(r.legal && r.is_sound(&problem));
    assert_eq!(brute_force_routable(&problem, DEFAULT_NODE_BUDGET), Ok(true));
}

#[test]
fn unreachable_sink_fails_in_the_first_round() {
    let arch = tiny_depop();
    let n = |s| node(&arch, s);
    let problem =
        RoutingProblem { graph: &arch.graph, nets: vec![ProblemNet { source: n("i0"), sinks: vec![n("d")] }] };
    let r = route(&problem, &RouterParams::default());
    assert!(!r.legal);
    assert_eq!(r.iterations_used, 1);
    assert_eq!(brute_force_routable(&problem, DEFAULT_NODE_BUDGET), Ok(false));
}

#[test]
fn input_overflow_is_illegal_without_routing() {
    let arch = tiny_depop();
    let netlist = dejavu_core::netlist::parse_netlist(
        r#"{"atoms":[
            {"id":0,"kind":"lut2","inputs":["a","b"],"output":"o0"},
            {"id":1,"kind":"lut2","inputs":["c","d"],"output":"o1"}],
            "primary_inputs":["a","b","c","d"],"primary_outputs":["o0","o1"]}"#,
    )
    .unwrap();
    let state = place(&arch, &netlist, &[(0, 0), (1, 1)]);
    assert!(derive_problem(&state).is_err());
    let r = route_cluster(&state, &RouterParams::default());
    assert!(!r.legal);
    assert_eq!(r.iterations_used, 0);
}

#[test]
fn oracle_refuses_large_graphs() {
    let arch = dejavu_core::fixtures::depop_medium();
    let problem = RoutingProblem { graph: &arch.graph, nets: vec![] };
    assert_eq!(
        brute_force_routable(&problem, DEFAULT_NODE_BUDGET),
        Err(BudgetExceeded { nodes: arch.graph.node_count(), budget: DEFAULT_NODE_BUDGET })
    );
}

#[test]
fn router_matches_oracle_on_every_small_toy_cluster() {
    let arch = toy_lb();
    let params = RouterParams::default();
    let mut disagreements = 0;
    let count = for_each_toy_cluster(|netlist, placement| {
        let state = place(&arch, netlist, placement);
        let heuristic = route_cluster(&state, &params).legal;
        let exact = derive_problem(&state).map_or(Ok(false), |p| brute_force_routable(&p, DEFAULT_NODE_BUDGET));
        if exact != Ok(heuristic) {
            disagreements += 1;
        }
    });
    assert!(count > 100_000, "{count}");
    assert_eq!(disagreements, 0);
}

fn tiny_problem() -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    // sources: i0 i1 i2 y0 y1 q ; sinks: a0 a1 b0 b1 d o0 o1
    (prop::sample::subsequence((0..6).collect::<Vec<_>>(), 1..=4), prop::collection::vec(0usize..5, 7)).prop_map(
        |(sources, owner)| {
            sources
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, (0..7).filter(|&k| owner[k] == i).collect()))
                .filter(|(_, sinks): &(usize, Vec<usize>)| !sinks.is_empty())
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn router_never_beats_the_oracle_on_tiny_depop(nets in tiny_problem()) {
        let arch = tiny_depop();
        const SOURCES: [&str; 6] = ["i0", "i1", "i2", "y0", "y1", "q"];
        const SINKS: [&str; 7] = ["a0", "a1", "b0", "b1", "d", "o0", "o1"];
        let problem = RoutingProblem {
            graph: &arch.graph,
            nets: nets
                .iter()
                .map(|(s, sinks)| ProblemNet {
                    source: node(&arch, SOURCES[*s]),
                    sinks: { let mut v: Vec<u32> = sinks.iter().map(|&k| node(&arch, SINKS[k])).collect(); v.sort(); v },
                })
                .collect(),
        };
        let r = route(&problem, &RouterParams::default());
        let exact = brute_force_routable(&problem, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(r.is_sound(&problem));
        prop_assert_eq!(r.legal, exact);
        prop_assert_eq!(route(&problem, &RouterParams::default()), r.clone());
    }

    #[test]
    fn removing_a_net_keeps_legal_problems_legal(nets in tiny_problem()) {
        let arch = tiny_depop();
        const SOURCES: [&str; 6] = ["i0", "i1", "i2", "y0", "y1", "q"];
        const SINKS: [&str; 7] = ["a0", "a1", "b0", "b1", "d", "o0", "o1"];
        let all: Vec<ProblemNet> = nets
            .iter()
            .map(|(s, sinks)| ProblemNet {
                source: node(&arch, SOURCES[*s]),
                sinks: { let mut v: Vec<u32> = sinks.iter().map(|&k| node(&arch, SINKS[k])).collect(); v.sort(); v },
            })
            .collect();
        let full = RoutingProblem { graph: &arch.graph, nets: all.clone() };
        if brute_force_routable(&full, DEFAULT_NODE_BUDGET).unwrap() {
            for skip in 0..all.len() {
                let mut nets = all.clone();
                nets.remove(skip);
                let sub = RoutingProblem { graph: &arch.graph, nets };
                prop_assert!(brute_force_routable(&sub, DEFAULT_NODE_BUDGET).unwrap());
                prop_assert!(route(&sub, &RouterParams::default()).legal);
            }
        }
    }
}
