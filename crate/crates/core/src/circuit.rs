//! Circuit graph representation, structural validation and simulation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::CircuitError;
use crate::truth::TruthTable;
use crate::MAX_TRUTH_INPUTS;

/// The three node kinds a circuit is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Primary input: no fan-in, value supplied by the environment.
    Pi,
    /// Primary output: exactly one fan-in, no fan-out; copies its driver.
    Po,
    /// NAND gate: one fan-in (both gate inputs tied) or two fan-ins.
    Nand,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Pi => "PI",
            NodeKind::Po => "PO",
            NodeKind::Nand => "NAND",
        }
    }

    pub fn parse(s: &str) -> Option<NodeKind> {
        match s {
            "PI" => Some(NodeKind::Pi),
            "PO" => Some(NodeKind::Po),
            "NAND" => Some(NodeKind::Nand),
            _ => None,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense binary adjacency matrix; `get(i, j)` means an edge from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, src: usize, dst: usize) -> bool {
        self.bits[src * self.n + dst]
    }

    #[inline]
    pub fn set(&mut self, src: usize, dst: usize, present: bool) {
        self.bits[src * self.n + dst] = present;
    }

    /// All edges in (src, dst) lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |src| {
            (0..self.n).filter_map(move |dst| self.get(src, dst).then_some((src, dst)))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Sources of edges into `dst`, ascending.
    pub fn fanins(&self, dst: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&src| self.get(src, dst))
    }

    /// Targets of edges out of `src`, ascending.
    pub fn fanouts(&self, src: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&dst| self.get(src, dst))
    }

    pub fn indegree(&self, dst: usize) -> usize {
        self.fanins(dst).count()
    }

    pub fn outdegree(&self, src: usize) -> usize {
        self.fanouts(src).count()
    }

    /// Kahn topological order with ascending node-id tie-breaking.
    /// Returns `None` if the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.n).map(|j| self.indegree(j)).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = (0..self.n)
            .filter(|&j| indeg[j] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(Reverse(node)) = ready.pop() {
            order.push(node);
            for dst in self.fanouts(node) {
                indeg[dst] -= 1;
                if indeg[dst] == 0 {
                    ready.push(Reverse(dst));
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }
}

/// A structural rule broken by a circuit, reported by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfLoop { node: usize },
    PiIndegree { node: usize, indegree: usize },
    PoOutdegree { node: usize, outdegree: usize },
    PoIndegree { node: usize, indegree: usize },
    NandIndegree { node: usize, indegree: usize },
    Cycle { nodes: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { node } => write!(f, "node {node} has a self-loop"),
            Violation::PiIndegree { node, indegree } => {
                write!(f, "PI {node} has indegree {indegree} (> 0)")
            }
            Violation::PoOutdegree { node, outdegree } => {
                write!(f, "PO {node} has outdegree {outdegree} (> 0)")
            }
            Violation::PoIndegree { node, indegree } => {
                write!(f, "PO {node} has indegree {indegree} (must be 1)")
            }
            Violation::NandIndegree { node, indegree } => {
                write!(f, "NAND {node} has indegree {indegree} (must be 1 or 2)")
            }
            Violation::Cycle { nodes } => write!(f, "cycle detected through nodes {nodes:?}"),
        }
    }
}

/// A gate-level circuit: node kinds plus a dense adjacency matrix.
///
/// Primary-input order (bit positions in assignments and truth-table rows)
/// and primary-output order (truth-table column order) follow ascending node
/// id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    kinds: Vec<NodeKind>,
    adj: Adjacency,
    pi_ids: Vec<usize>,
    po_ids: Vec<usize>,
}

impl Circuit {
    /// Build a circuit from node kinds and an edge list. Edge endpoints must
    /// be in range; no structural rules are checked (see [`Circuit::validate`]).
    pub fn new(kinds: Vec<NodeKind>, edges: &[(usize, usize)]) -> Circuit {
        let n = kinds.len();
        let mut adj = Adjacency::new(n);
        for &(src, dst) in edges {
            assert!(src < n && dst < n, "edge ({src}, {dst}) out of range for {n} nodes");
            adj.set(src, dst, true);
        }
        Circuit::from_parts(kinds, adj)
    }

    /// Build a circuit from node kinds and a prebuilt adjacency matrix.
    pub fn from_parts(kinds: Vec<NodeKind>, adj: Adjacency) -> Circuit {
        assert_eq!(kinds.len(), adj.n(), "kinds and adjacency disagree on node count");
        let pi_ids = ids_of(&kinds, NodeKind::Pi);
        let po_ids = ids_of(&kinds, NodeKind::Po);
        Circuit {
            kinds,
            adj,
            pi_ids,
            po_ids,
        }
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_pi(&self) -> usize {
        self.pi_ids.len()
    }

    pub fn num_po(&self) -> usize {
        self.po_ids.len()
    }

    pub fn num_nands(&self) -> usize {
        self.kinds.len() - self.pi_ids.len() - self.po_ids.len()
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adj
    }

    pub fn pi_ids(&self) -> &[usize] {
        &self.pi_ids
    }

    pub fn po_ids(&self) -> &[usize] {
        &self.po_ids
    }

    /// Check every structural rule and return all violations (empty = valid).
    ///
    /// Rules: no self-loops; PIs have indegree 0; POs have indegree exactly 1
    /// and outdegree 0; NANDs have indegree 1 or 2, except fully isolated
    /// (idle) NANDs which are permitted; the graph is acyclic.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.node_count();
        for node in 0..n {
            if self.adj.get(node, node) {
                out.push(Violation::SelfLoop { node });
            }
            let indegree = self.adj.indegree(node);
            let outdegree = self.adj.outdegree(node);
            match self.kinds[node] {
                NodeKind::Pi => {
                    if indegree > 0 {
                        out.push(Violation::PiIndegree { node, indegree });
                    }
                }
                NodeKind::Po => {
                    if outdegree > 0 {
                        out.push(Violation::PoOutdegree { node, outdegree });
                    }
                    if indegree != 1 {
                        out.push(Violation::PoIndegree { node, indegree });
                    }
                }
                NodeKind::Nand => {
                    let idle = indegree == 0 && outdegree == 0;
                    if !idle && !(indegree == 1 || indegree == 2) {
                        out.push(Violation::NandIndegree { node, indegree });
                    }
                }
            }
        }
        if let Some(nodes) = find_cycle(&self.adj) {
            out.push(Violation::Cycle { nodes });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Evaluate the circuit on one input assignment (bit `k` drives the k-th
    /// primary input in ascending-id order). Returns one bit per primary
    /// output, in ascending-id order.
    pub fn simulate(&self, assignment: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(CircuitError::Invalid(violations));
        }
        if assignment.len() != self.num_pi() {
            return Err(CircuitError::AssignmentLength {
                expected: self.num_pi(),
                got: assignment.len(),
            });
        }
        let plan = self.eval_plan();
        let mut values = vec![false; self.node_count()];
        self.eval_into(&plan, assignment, &mut values);
        Ok(self.po_ids.iter().map(|&po| values[po]).collect())
    }

    /// Exhaustively simulate all `2^num_pi` assignments.
    pub fn truth_table(&self) -> Result<TruthTable, CircuitError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(CircuitError::Invalid(violations));
        }
        let num_pi = self.num_pi();
        if num_pi > MAX_TRUTH_INPUTS {
            return Err(CircuitError::TooManyInputs {
                num_inputs: num_pi,
                max: MAX_TRUTH_INPUTS,
            });
        }
        let plan = self.eval_plan();
        let mut values = vec![false; self.node_count()];
        let mut assignment = vec![false; num_pi];
        let mut table = TruthTable::new_zeroed(num_pi, self.num_po())?;
        for row in 0..(1usize << num_pi) {
            for (k, bit) in assignment.iter_mut().enumerate() {
                *bit = (row >> k) & 1 == 1;
            }
            self.eval_into(&plan, &assignment, &mut values);
            for (o, &po) in self.po_ids.iter().enumerate() {
                table.set_bit(o, row, values[po]);
            }
        }
        Ok(table)
    }

    fn eval_plan(&self) -> EvalPlan {
        let order = self
            .adj
            .topo_order()
            .expect("eval_plan requires an acyclic circuit");
        let fanins = (0..self.node_count())
            .map(|node| self.adj.fanins(node).collect())
            .collect();
        EvalPlan { order, fanins }
    }

    fn eval_into(&self, plan: &EvalPlan, assignment: &[bool], values: &mut [bool]) {
        for (k, &pi) in self.pi_ids.iter().enumerate() {
            values[pi] = assignment[k];
        }
        for &node in &plan.order {
            let fanins = &plan.fanins[node];
            match self.kinds[node] {
                NodeKind::Pi => {}
                NodeKind::Po => values[node] = values[fanins[0]],
                NodeKind::Nand => {
                    values[node] = match fanins.len() {
                        // An isolated NAND's value is never observed; pick a
                        // fixed one so evaluation stays total.
                        0 => true,
                        1 => !values[fanins[0]],
                        _ => !(values[fanins[0]] && values[fanins[1]]),
                    };
                }
            }
        }
    }
}

struct EvalPlan {
    order: Vec<usize>,
    fanins: Vec<Vec<usize>>,
}

fn ids_of(kinds: &[NodeKind], kind: NodeKind) -> Vec<usize> {
    kinds
        .iter()
        .enumerate()
        .filter_map(|(id, &k)| (k == kind).then_some(id))
        .collect()
}

/// Iterative DFS cycle finder; returns the nodes of one cycle in edge order.
fn find_cycle(adj: &Adjacency) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let n = adj.n();
    let mut color = vec![WHITE; n];
    let mut path: Vec<usize> = Vec::new();
    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        // Stack entries: (node, next fanout id to try).
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = GRAY;
        path.push(start);
        while let Some(top) = stack.len().checked_sub(1) {
            let (node, mut cursor) = stack[top];
            let mut next_dst = None;
            while cursor < n {
                let dst = cursor;
                cursor += 1;
                if adj.get(node, dst) {
                    next_dst = Some(dst);
                    break;
                }
            }
            stack[top].1 = cursor;
            match next_dst {
                Some(dst) => match color[dst] {
                    GRAY => {
                        let pos = path.iter().position(|&p| p == dst).unwrap();
                        return Some(path[pos..].to_vec());
                    }
                    WHITE => {
                        color[dst] = GRAY;
                        path.push(dst);
                        stack.push((dst, 0));
                    }
                    _ => {}
                },
                None => {
                    color[node] = BLACK;
                    path.pop();
                    stack.pop();
                }
            }
        }
    }
    None
}
