//! Array netlists checked against an independent graph-isomorphism oracle:
//! every tile must be a copy of the template, and disconnected tiles must
//! not share nets.

use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::DiGraph;
use proptest::prelude::*;

use dejavu_core::kind::PrimitiveKind;
use dejavu_core::netlist::{generate_netlist, tile_template, ArraySpec, Driver, GeneratorSpec, Netlist, Sink};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Atom(PrimitiveKind),
    PrimaryInput,
    PrimaryOutput,
}

/// Connectivity of atoms `range` as a labelled graph: atoms, one node per
/// primary input net, one node per primary output, and an edge per sink pin
/// labelled with the pin index.
fn tile_graph(netlist: &Netlist, range: std::ops::Range<usize>) -> DiGraph<Node, Option<usize>> {
    let mut g = DiGraph::new();
    let atom_nodes: Vec<_> = range.clone().map(|a| g.add_node(Node::Atom(netlist.atoms[a].kind))).collect();
    let local = |a: usize| range.contains(&a).then(|| atom_nodes[a - range.start]);
    for net in &netlist.nets {
        let src = match net.driver {
            Driver::Atom(a) => local(a.index()),
            Driver::PrimaryInput => None,
        };
        let sinks: Vec<_> = net
            .sinks
            .iter()
            .filter_map(|s| match *s {
                Sink::Atom { atom, pin } => local(atom.index()).map(|n| (Some(n), Some(pin))),
                Sink::PrimaryOutput => Some((None, None)),
            })
            .collect();
        let src = match (src, net.driver) {
            (Some(n), _) => n,
            (None, Driver::PrimaryInput) if sinks.iter().any(|s| s.0.is_some()) => g.add_node(Node::PrimaryInput),
            _ => continue,
        };
        for (sink, pin) in sinks {
            let sink = sink.unwrap_or_else(|| g.add_node(Node::PrimaryOutput));
            g.add_edge(src, sink, pin);
        }
    }
    g
}

fn spec(tiles: usize, luts: usize, ffs: usize, k: u8, inputs: usize, chain: usize) -> ArraySpec {
    ArraySpec { tiles, tile_luts: luts, tile_ffs: ffs, lut_inputs: k, tile_inputs: inputs, inter_tile_nets: chain }
}

fn assert_tiles_isomorphic(spec: &ArraySpec, seed: u64) {
    let netlist = generate_netlist(&GeneratorSpec::Array(spec.clone()), seed).unwrap();
    let template = tile_template(spec, seed).unwrap();
    let per_tile = template.atoms.len();
    assert_eq!(netlist.atoms.len(), spec.tiles * per_tile);
    let reference = tile_graph(&template, 0..per_tile);
    for t in 0..spec.tiles {
        let tile = tile_graph(&netlist, t * per_tile..(t + 1) * per_tile);
        assert!(
            is_isomorphic_matching(&reference, &tile, |a, b| a == b, |a, b| a == b),
            "tile {t} of {spec:?} (seed {seed}) differs from the template"
        );
    }
}

/// Every net touches atoms of a single tile.
fn assert_disconnected(netlist: &Netlist, per_tile: usize) {
    for net in &netlist.nets {
        let mut tiles = net.sinks.iter().filter_map(|s| match *s {
            Sink::Atom { atom, .. } => Some(atom.index() / per_tile),
            Sink::PrimaryOutput => None,
        });
        let driver = match net.driver {
            Driver::Atom(a) => Some(a.index() / per_tile),
            Driver::PrimaryInput => None,
        };
        let first = driver.or_else(|| tiles.next());
        assert!(tiles.all(|t| Some(t) == first), "net {} spans tiles", net.name);
    }
}

#[test]
fn depop_array_fixtures_are_disconnected_copies() {
    for tiles in [1, 4, 16, 64] {
        let spec = dejavu_core::fixtures::depop_array_spec(tiles);
        assert_tiles_isomorphic(&spec, dejavu_core::fixtures::ARRAY_SEED);
        let netlist = dejavu_core::fixtures::depop_array(tiles);
        assert_disconnected(&netlist, spec.tile_luts + spec.tile_ffs);
    }
}

#[test]
fn chained_tiles_are_not_disconnected() {
    let s = spec(3, 3, 1, 2, 3, 1);
    let netlist = generate_netlist(&GeneratorSpec::Array(s), 0).unwrap();
    let crossing = netlist
        .nets
        .iter()
        .filter(|n| match n.driver {
            Driver::Atom(a) => {
                n.sinks.iter().any(|s| matches!(*s, Sink::Atom { atom, .. } if atom.index() / 4 != a.index() / 4))
            }
            Driver::PrimaryInput => false,
        })
        .count();
    assert_eq!(crossing, 2, "one chain net between each pair of neighbouring tiles");
}

#[test]
fn the_oracle_distinguishes_different_tiles() {
    let s = spec(1, 4, 2, 3, 4, 0);
    let graphs: Vec<_> = (0..8).map(|seed| tile_graph(&tile_template(&s, seed).unwrap(), 0..6)).collect();
    let distinct = graphs
        .iter()
        .enumerate()
        .filter(|(i, g)| graphs[..*i].iter().all(|h| !is_isomorphic_matching(*g, h, |a, b| a == b, |a, b| a == b)))
        .count();
    assert!(distinct > 1, "eight seeds should not all give the same tile");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn disconnected_tiles_are_template_copies(
        tiles in 1usize..6,
        luts in 1usize..5,
        ffs in 0usize..3,
        k in 1u8..4,
        inputs in 1usize..5,
        seed in any::<u64>(),
    ) {
        let s = spec(tiles, luts, ffs, k, inputs, 0);
        assert_tiles_isomorphic(&s, seed);
        let netlist = generate_netlist(&GeneratorSpec::Array(s), seed).unwrap();
        assert_disconnected(&netlist, luts + ffs);
    }
}
