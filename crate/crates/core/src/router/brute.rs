use super::RoutingProblem;

pub const DEFAULT_NODE_BUDGET: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("graph has {nodes} nodes, exhaustive search is limited to {budget}")]
pub struct BudgetExceeded {
    pub nodes: usize,
    pub budget: usize,
}

struct Solver<'p, 'a> {
    problem: &'p RoutingProblem<'a>,
    /// Node -> index of the net whose terminal it is.
    terminal_of: Vec<Option<usize>>,
    /// Node -> net currently using it.
    used_by: Vec<Option<usize>>,
}

impl Solver<'_, '_> {
    fn usable(&self, node: usize, net: usize) -> bool {
        self.used_by[node].is_none() && self.terminal_of[node].is_none_or(|t| t == net)
    }

    fn solve_net(&mut self, net: usize) -> bool {
        if net == self.problem.nets.len() {
            return true;
        }
        let source = self.problem.nets[net].source as usize;
        self.used_by[source] = Some(net);
        let mut tree = vec![source];
        let ok = self.connect(net, &mut tree);
        self.used_by[source] = None;
        ok
    }

    /// Extends `tree` to the first sink it does not contain yet.
    fn connect(&mut self, net: usize, tree: &mut Vec<usize>) -> bool {
        let next_sink =
            self.problem.nets[net].sinks.iter().map(|&s| s as usize).find(|&s| self.used_by[s] != Some(net));
        let Some(sink) = next_sink else {
            return self.solve_net(net + 1);
        };
        for start in tree.clone() {
            let mut path = Vec::new();
            if self.paths_from(net, start, sink, &mut path, tree) {
                return true;
            }
        }
        false
    }

    /// Depth-first enumeration of simple paths `start -> sink` over nodes the
    /// net may claim; each complete path is committed and the search recurses.
    fn paths_from(&mut self, net: usize, at: usize, sink: usize, path: &mut Vec<usize>, tree: &mut Vec<usize>) -> bool {
        let graph = self.problem.graph;
        for &next in graph.fanout(at) {
            let next = next as usize;
            if !self.usable(next, net) {
                continue;
            }
            self.used_by[next] = Some(net);
            path.push(next);
            let found = if next == sink {
                let mark = tree.len();
                tree.extend_from_slice(path);
                let ok = self.connect(net, tree);
                tree.truncate(mark);
                ok
            } else {
                self.paths_from(net, next, sink, path, tree)
            };
            path.pop();
            self.used_by[next] = None;
            if found {
                return true;
            }
        }
        false
    }
}

/// Exact routability by exhaustive backtracking over node-disjoint routing
/// trees, one net at a time. Only for graphs within `budget` nodes.
pub fn brute_force_routable(problem: &RoutingProblem<'_>, budget: usize) -> Result<bool, BudgetExceeded> {
    let nodes = problem.graph.node_count();
    if nodes > budget {
        return Err(BudgetExceeded { nodes, budget });
    }
    let mut terminal_of = vec![None; nodes];
    for (i, net) in problem.nets.iter().enumerate() {
        for t in std::iter::once(net.source).chain(net.sinks.iter().copied()) {
            match terminal_of[t as usize] {
                Some(j) if j != i => return Ok(false),
                _ => terminal_of[t as usize] = Some(i),
            }
        }
    }
    let mut solver = Solver { problem, terminal_of, used_by: vec![None; nodes] };
    Ok(solver.solve_net(0))
}
