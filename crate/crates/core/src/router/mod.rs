//! Intracluster routing legality: a negotiated-congestion router and an
//! exhaustive oracle for small graphs.

mod brute;
mod problem;

pub use brute::{brute_force_routable, BudgetExceeded, DEFAULT_NODE_BUDGET};
pub use problem::{derive_problem, ProblemNet, ResourceOverflow, RoutingProblem};

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::packer::ClusterState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouterParams {
    pub max_iterations: u32,
    /// Added to a node's history cost for every round it ends overused.
    pub history_increment: f64,
    pub present_factor_initial: f64,
    pub present_factor_growth: f64,
}

impl Default for RouterParams {
    fn default() -> Self {
        RouterParams {
            max_iterations: 50,
            history_increment: 1.0,
            present_factor_initial: 1.0,
            present_factor_growth: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingResult {
    pub legal: bool,
    pub iterations_used: u32,
    /// Nodes of each net's routing tree, source first. Empty unless legal.
    pub routes: Vec<Vec<u32>>,
}

impl RoutingResult {
    /// Checks that no node is shared between nets and that every sink is
    /// connected to its source along graph edges.
    pub fn is_sound(&self, problem: &RoutingProblem<'_>) -> bool {
        if !self.legal {
            return true;
        }
        if self.routes.len() != problem.nets.len() {
            return false;
        }
        let mut owner = vec![usize::MAX; problem.graph.node_count()];
        for (i, (route, net)) in self.routes.iter().zip(&problem.nets).enumerate() {
            for &n in route {
                if owner[n as usize] != usize::MAX {
                    return false;
                }
                owner[n as usize] = i;
            }
            // every node except the source must be entered from another node of the tree
            if route.first() != Some(&net.source) {
                return false;
            }
            let mut reached = vec![false; problem.graph.node_count()];
            reached[net.source as usize] = true;
            let mut changed = true;
            while changed {
                changed = false;
                for &n in route {
                    if reached[n as usize] {
                        continue;
                    }
                    if route.iter().any(|&m| reached[m as usize] && problem.graph.has_edge(m as usize, n as usize)) {
                        reached[n as usize] = true;
                        changed = true;
                    }
                }
            }
            if !net.sinks.iter().all(|&s| reached[s as usize]) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search {
    dist: Vec<f64>,
    prev: Vec<u32>,
    heap: BinaryHeap<Reverse<Entry>>,
}

const NONE: u32 = u32::MAX;

impl Search {
    fn new(nodes: usize) -> Self {
        Search { dist: vec![f64::INFINITY; nodes], prev: vec![NONE; nodes], heap: BinaryHeap::new() }
    }

    /// Cheapest path from any tree node to `target`, returned target-first
    /// and excluding the tree node it starts from.
    fn path(
        &mut self,
        problem: &RoutingProblem<'_>,
        tree: &[u32],
        in_tree: &[bool],
        target: u32,
        node_cost: impl Fn(usize) -> f64,
    ) -> Option<Vec<u32>> {
        self.dist.fill(f64::INFINITY);
        self.prev.fill(NONE);
        self.heap.clear();
        for &t in tree {
            self.dist[t as usize] = 0.0;
            self.heap.push(Reverse(Entry { cost: 0.0, node: t }));
        }
        while let Some(Reverse(Entry { cost, node })) = self.heap.pop() {
            if cost > self.dist[node as usize] {
                continue;
            }
            if node == target {
                let mut path = vec![target];
                let mut n = self.prev[target as usize];
                while !in_tree[n as usize] {
                    path.push(n);
                    n = self.prev[n as usize];
                }
                return Some(path);
            }
            for &next in problem.graph.fanout(node as usize) {
                if in_tree[next as usize] {
                    continue;
                }
                let c = cost + node_cost(next as usize);
                if c < self.dist[next as usize] {
                    self.dist[next as usize] = c;
                    self.prev[next as usize] = node;
                    self.heap.push(Reverse(Entry { cost: c, node: next }));
                }
            }
        }
        None
    }
}

/// Negotiated-congestion routing.
///
/// Each round rips up and reroutes every net in problem order. Entering a
/// node costs `1 + history + present_factor * occupancy_by_other_nets`; ties
/// in the search are broken on node id. The first round that ends without an
/// overused node proves the problem legal. A sink that no path reaches, or
/// running out of rounds, makes it illegal.
pub fn route(problem: &RoutingProblem<'_>, params: &RouterParams) -> RoutingResult {
    if problem.nets.is_empty() {
        return RoutingResult { legal: true, iterations_used: 0, routes: Vec::new() };
    }
    let n = problem.graph.node_count();
    let mut occupancy = vec![0u32; n];
    let mut history = vec![0f64; n];
    let mut in_tree = vec![false; n];
    let mut routes: Vec<Vec<u32>> = vec![Vec::new(); problem.nets.len()];
    let mut search = Search::new(n);
    let mut present = params.present_factor_initial;

    for iteration in 1..=params.max_iterations {
        for (i, net) in problem.nets.iter().enumerate() {
            for &node in &routes[i] {
                occupancy[node as usize] -= 1;
            }
            let mut tree = vec![net.source];
            in_tree[net.source as usize] = true;
            for &sink in &net.sinks {
                if in_tree[sink as usize] {
                    continue;
                }
                let cost = |m: usize| 1.0 + history[m] + present * occupancy[m] as f64;
                match search.path(problem, &tree, &in_tree, sink, cost) {
                    Some(path) => {
                        for node in path.into_iter().rev() {
                            in_tree[node as usize] = true;
                            tree.push(node);
                        }
                    }
                    None => {
                        return RoutingResult { legal: false, iterations_used: iteration, routes: Vec::new() };
                    }
                }
            }
            for &node in &tree {
                in_tree[node as usize] = false;
                occupancy[node as usize] += 1;
            }
            routes[i] = tree;
        }

        let mut overused = false;
        for (node, &occ) in occupancy.iter().enumerate() {
            if occ > 1 {
                overused = true;
                history[node] += params.history_increment;
            }
        }
        if !overused {
            return RoutingResult { legal: true, iterations_used: iteration, routes };
        }
        present *= params.present_factor_growth;
    }
    RoutingResult { legal: false, iterations_used: params.max_iterations, routes: Vec::new() }
}

/// Derives and routes the cluster's problem. Overflowing the boundary pins is
/// illegal without routing (0 iterations).
pub fn route_cluster(cluster: &ClusterState<'_>, params: &RouterParams) -> RoutingResult {
    match derive_problem(cluster) {
        Ok(problem) => route(&problem, params),
        Err(_) => RoutingResult { legal: false, iterations_used: 0, routes: Vec::new() },
    }
}
