//! s/t flow network and a Boykov–Kolmogorov max-flow solver.
//!
//! Terminal arcs are stored per node (`source_cap`, `sink_cap`); every
//! other arc belongs to an edge added in both directions with its reverse
//! twin, so residual updates are local.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
struct Arc {
    head: usize,
    next: usize,
    cap: f64,
}

/// Capacitated graph over non-terminal nodes `0..n` plus implicit source
/// and sink terminals.
#[derive(Clone, Debug, Default)]
pub struct FlowNetworkGraph {
    first: Vec<usize>,
    source_cap: Vec<f64>,
    sink_cap: Vec<f64>,
    arcs: Vec<Arc>,
}

impl FlowNetworkGraph {
    pub fn new(nodes: usize) -> Self {
        FlowNetworkGraph {
            first: vec![NONE; nodes],
            source_cap: vec![0.0; nodes],
            sink_cap: vec![0.0; nodes],
            arcs: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.first.len()
    }

    /// Directed arcs, counting both terminal arcs of every node and both
    /// directions of every edge.
    pub fn arc_count(&self) -> usize {
        self.arcs.len() + 2 * self.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.arcs.len() / 2
    }

    /// Adds source->node and node->sink capacity (accumulating).
    pub fn add_terminal(&mut self, node: usize, to_source: f64, to_sink: f64) {
        assert!(to_source >= 0.0 && to_sink >= 0.0, "negative terminal capacity");
        assert!(to_source.is_finite() && to_sink.is_finite(), "non-finite terminal capacity");
        self.source_cap[node] += to_source;
        self.sink_cap[node] += to_sink;
    }

    /// Adds an edge `u -> v` with capacity `cap` and `v -> u` with `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        assert!(u != v, "self loops are not allowed");
        assert!(cap >= 0.0 && rev_cap >= 0.0, "negative edge capacity");
        assert!(cap.is_finite() && rev_cap.is_finite(), "non-finite edge capacity");
        let a = self.arcs.len();
        self.arcs.push(Arc {
            head: v,
            next: self.first[u],
            cap,
        });
        self.first[u] = a;
        self.arcs.push(Arc {
            head: u,
            next: self.first[v],
            cap: rev_cap,
        });
        self.first[v] = a + 1;
    }

    pub fn terminal_caps(&self, node: usize) -> (f64, f64) {
        (self.source_cap[node], self.sink_cap[node])
    }

    /// `(u, v, capacity)` for every non-terminal directed arc.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .map(|(a, arc)| (self.arcs[a ^ 1].head, arc.head, arc.cap))
    }

    /// Capacity of the cut whose source side is `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.node_count() {
            if source_side[i] {
                total += self.sink_cap[i];
            } else {
                total += self.source_cap[i];
            }
        }
        for (u, v, cap) in self.arcs() {
            if source_side[u] && !source_side[v] {
                total += cap;
            }
        }
        total
    }
}

/// Max-flow value and the minimum cut it certifies.
#[derive(Clone, Debug, PartialEq)]
pub struct MinCut {
    pub flow: f64,
    /// `true` for nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tree {
    Free,
    Source,
    Sink,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Parent {
    Orphan,
    Terminal,
    /// Arc from this node to its parent.
    Arc(usize),
}

struct Solver<'g> {
    graph: &'g FlowNetworkGraph,
    residual: Vec<f64>,
    /// Residual terminal capacity: positive toward the source, negative
    /// toward the sink.
    terminal: Vec<f64>,
    tree: Vec<Tree>,
    parent: Vec<Parent>,
    active: VecDeque<usize>,
    in_active: Vec<bool>,
    orphans: VecDeque<usize>,
    flow: f64,
}

impl<'g> Solver<'g> {
    fn new(graph: &'g FlowNetworkGraph) -> Self {
        let n = graph.node_count();
        let mut s = Solver {
            graph,
            residual: graph.arcs.iter().map(|a| a.cap).collect(),
            terminal: vec![0.0; n],
            tree: vec![Tree::Free; n],
            parent: vec![Parent::Orphan; n],
            active: VecDeque::new(),
            in_active: vec![false; n],
            orphans: VecDeque::new(),
            flow: 0.0,
        };
        for i in 0..n {
            let (src, snk) = (graph.source_cap[i], graph.sink_cap[i]);
            s.flow += src.min(snk);
            s.terminal[i] = src - snk;
            if s.terminal[i] > 0.0 {
                s.tree[i] = Tree::Source;
            } else if s.terminal[i] < 0.0 {
                s.tree[i] = Tree::Sink;
            } else {
                continue;
            }
            s.parent[i] = Parent::Terminal;
            s.activate(i);
        }
        s
    }

    fn activate(&mut self, i: usize) {
        if !self.in_active[i] {
            self.in_active[i] = true;
            self.active.push_back(i);
        }
    }

    fn arcs_of(&self, i: usize) -> ArcIter<'g> {
        ArcIter {
            arcs: &self.graph.arcs,
            cur: self.graph.first[i],
        }
    }

    /// Residual capacity along the tree direction between `i` and the
    /// neighbor reached by arc `a` (leaving `i`).
    fn tree_residual(&self, tree: Tree, a: usize) -> f64 {
        match tree {
            Tree::Source => self.residual[a],
            _ => self.residual[a ^ 1],
        }
    }

    /// Grows the trees until they touch; returns the connecting arc, directed
    /// from the source tree into the sink tree.
    fn grow(&mut self) -> Option<usize> {
        while let Some(&i) = self.active.front() {
            let t = self.tree[i];
            if t != Tree::Free {
                for a in self.arcs_of(i) {
                    if self.tree_residual(t, a) <= 0.0 {
                        continue;
                    }
                    let j = self.graph.arcs[a].head;
                    match self.tree[j] {
                        Tree::Free => {
                            self.tree[j] = t;
                            self.parent[j] = Parent::Arc(a ^ 1);
                            self.activate(j);
                        }
                        other if other != t => {
                            return Some(if t == Tree::Source { a } else { a ^ 1 });
                        }
                        _ => {}
                    }
                }
            }
            self.active.pop_front();
            self.in_active[i] = false;
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        let arcs = &self.graph.arcs;
        let s_start = arcs[middle ^ 1].head;
        let t_start = arcs[middle].head;

        let mut bottleneck = self.residual[middle];
        let mut i = s_start;
        while let Parent::Arc(p) = self.parent[i] {
            bottleneck = bottleneck.min(self.residual[p ^ 1]);
            i = arcs[p].head;
        }
        bottleneck = bottleneck.min(self.terminal[i]);
        let mut i = t_start;
        while let Parent::Arc(p) = self.parent[i] {
            bottleneck = bottleneck.min(self.residual[p]);
            i = arcs[p].head;
        }
        bottleneck = bottleneck.min(-self.terminal[i]);

        self.residual[middle] -= bottleneck;
        self.residual[middle ^ 1] += bottleneck;

        let mut i = s_start;
        while let Parent::Arc(p) = self.parent[i] {
            self.residual[p] += bottleneck;
            self.residual[p ^ 1] -= bottleneck;
            let up = arcs[p].head;
            if self.residual[p ^ 1] <= 0.0 {
                self.make_orphan(i);
            }
            i = up;
        }
        self.terminal[i] -= bottleneck;
        if self.terminal[i] <= 0.0 {
            self.make_orphan(i);
        }

        let mut i = t_start;
        while let Parent::Arc(p) = self.parent[i] {
            self.residual[p ^ 1] += bottleneck;
            self.residual[p] -= bottleneck;
            let up = arcs[p].head;
            if self.residual[p] <= 0.0 {
                self.make_orphan(i);
            }
            i = up;
        }
        self.terminal[i] += bottleneck;
        if self.terminal[i] >= 0.0 {
            self.make_orphan(i);
        }

        self.flow += bottleneck;
    }

    fn make_orphan(&mut self, i: usize) {
        self.parent[i] = Parent::Orphan;
        self.orphans.push_back(i);
    }

    /// True when following parents from `j` reaches a terminal.
    fn rooted(&self, mut j: usize) -> bool {
        loop {
            match self.parent[j] {
                Parent::Terminal => return true,
                Parent::Orphan => return false,
                Parent::Arc(p) => j = self.graph.arcs[p].head,
            }
        }
    }

    fn adopt(&mut self) {
        while let Some(o) = self.orphans.pop_front() {
            let t = self.tree[o];
            // the orphan may have been re-rooted at its terminal if residual remains
            let terminal_ok = match t {
                Tree::Source => self.terminal[o] > 0.0,
                Tree::Sink => self.terminal[o] < 0.0,
                Tree::Free => continue,
            };
            if terminal_ok {
                self.parent[o] = Parent::Terminal;
                continue;
            }
            let mut new_parent = None;
            for a in self.arcs_of(o) {
                let j = self.graph.arcs[a].head;
                // residual must run from j toward o for the source tree, o toward j for the sink tree
                let res = match t {
                    Tree::Source => self.residual[a ^ 1],
                    _ => self.residual[a],
                };
                if self.tree[j] == t && res > 0.0 && self.rooted(j) {
                    new_parent = Some(a);
                    break;
                }
            }
            if let Some(a) = new_parent {
                self.parent[o] = Parent::Arc(a);
                continue;
            }
            for a in self.arcs_of(o) {
                let j = self.graph.arcs[a].head;
                if self.tree[j] != t {
                    continue;
                }
                let res = match t {
                    Tree::Source => self.residual[a ^ 1],
                    _ => self.residual[a],
                };
                if res > 0.0 {
                    self.activate(j);
                }
                if self.parent[j] == Parent::Arc(a ^ 1) {
                    self.make_orphan(j);
                }
            }
            self.tree[o] = Tree::Free;
        }
    }

    fn run(mut self) -> MinCut {
        while let Some(middle) = self.grow() {
            self.augment(middle);
            self.adopt();
        }
        MinCut {
            flow: self.flow,
            source_side: self.tree.iter().map(|&t| t == Tree::Source).collect(),
        }
    }
}

struct ArcIter<'g> {
    arcs: &'g [Arc],
    cur: usize,
}

impl Iterator for ArcIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.cur == NONE {
            return None;
        }
        let a = self.cur;
        self.cur = self.arcs[a].next;
        Some(a)
    }
}

/// Exact maximum flow. Nodes left unreachable from the source in the final
/// residual graph go to the sink side.
pub fn max_flow(graph: &FlowNetworkGraph) -> MinCut {
    Solver::new(graph).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_diamond() {
        let mut g = FlowNetworkGraph::new(2);
        let (a, b) = (0, 1);
        g.add_terminal(a, 3.0, 2.0);
        g.add_terminal(b, 2.0, 3.0);
        g.add_edge(a, b, 1.0, 0.0);
        let cut = max_flow(&g);
        assert_eq!(cut.flow, 5.0);
        assert_eq!(g.cut_capacity(&cut.source_side), 5.0);
    }

    #[test]
    fn zero_capacities_put_everything_on_sink_side() {
        let mut g = FlowNetworkGraph::new(3);
        g.add_edge(0, 1, 0.0, 0.0);
        g.add_edge(1, 2, 0.0, 0.0);
        let cut = max_flow(&g);
        assert_eq!(cut.flow, 0.0);
        assert!(cut.source_side.iter().all(|&s| !s));
    }

    #[test]
    fn single_pixel_cut() {
        let mut g = FlowNetworkGraph::new(1);
        g.add_terminal(0, 10.0, 3.0);
        let cut = max_flow(&g);
        assert_eq!(cut.flow, 3.0);
        assert_eq!(cut.source_side, vec![true]);
    }

    #[test]
    fn chain_bottleneck_and_reverse_flow() {
        // s -> 0 -> 1 -> 2 -> t with a detour forcing flow cancellation
        let mut g = FlowNetworkGraph::new(4);
        g.add_terminal(0, 4.0, 0.0);
        g.add_terminal(1, 3.0, 0.0);
        g.add_terminal(2, 0.0, 4.0);
        g.add_terminal(3, 0.0, 3.0);
        g.add_edge(0, 2, 3.0, 0.0);
        g.add_edge(0, 3, 1.0, 0.0);
        g.add_edge(1, 2, 3.0, 0.0);
        g.add_edge(2, 3, 5.0, 0.0);
        let cut = max_flow(&g);
        assert_eq!(cut.flow, 7.0);
        assert_eq!(g.cut_capacity(&cut.source_side), 7.0);
    }

    #[test]
    fn arc_count_counts_terminals() {
        let mut g = FlowNetworkGraph::new(3);
        g.add_edge(0, 1, 1.0, 1.0);
        g.add_edge(1, 2, 1.0, 1.0);
        assert_eq!(g.arc_count(), 2 * 2 + 2 * 3);
    }
}
