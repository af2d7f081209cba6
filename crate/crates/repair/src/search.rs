//! Structural thresholding and greedy cycle removal.

use logicforge_core::circuit::Adjacency;

use crate::matrix::ProbabilityMatrix;
use crate::RepairError;

/// An edge deleted during cycle removal, with its proposal probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovedEdge {
    pub src: usize,
    pub dst: usize,
    pub prob: f64,
}

/// Outcome of [`dag_search`].
#[derive(Debug, Clone)]
pub struct RepairResult {
    /// The repaired binary adjacency (acyclic, rule-compliant).
    pub adjacency: Adjacency,
    /// Original probabilities masked by the repaired adjacency.
    pub masked: ProbabilityMatrix,
    /// Edges deleted to break cycles, in deletion order.
    pub removed_edges: Vec<RemovedEdge>,
    /// Outputs with no remaining path from any input; surfaced as a
    /// diagnostic and left for the search initializer to handle (its uniform
    /// fallback covers empty columns).
    pub disconnected_pos: Vec<usize>,
}

/// Threshold a probability matrix into candidate edges.
///
/// An edge `i -> j` survives iff its probability strictly exceeds 0.5, `i` is
/// not an output, `j` is not an input, and `i != j`.
pub fn apply_structural_rules(
    probs: &ProbabilityMatrix,
    pi_ids: &[usize],
    po_ids: &[usize],
) -> Adjacency {
    let n = probs.n();
    let mut is_pi = vec![false; n];
    let mut is_po = vec![false; n];
    for &pi in pi_ids {
        is_pi[pi] = true;
    }
    for &po in po_ids {
        is_po[po] = true;
    }
    let mut adj = Adjacency::new(n);
    for i in 0..n {
        if is_po[i] {
            continue;
        }
        for j in 0..n {
            if is_pi[j] || i == j {
                continue;
            }
            if probs.get(i, j) > 0.5 {
                adj.set(i, j, true);
            }
        }
    }
    adj
}

/// Find one cycle by depth-first search, visiting start nodes and fan-outs in
/// ascending id order. Returns the cycle's nodes so that consecutive entries
/// (and last back to first) are edges; empty when the graph is acyclic.
pub fn detect_cycle(adj: &Adjacency) -> Vec<usize> {
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
                        return path[pos..].to_vec();
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
    Vec::new()
}

/// Repair a probability matrix into an acyclic candidate adjacency.
///
/// After thresholding, cycles are removed greedily: each detected cycle loses
/// the edge with the smallest proposal probability (first such edge along the
/// cycle on ties). The loop terminates because every pass deletes one edge.
pub fn dag_search(
    probs: &ProbabilityMatrix,
    pi_ids: &[usize],
    po_ids: &[usize],
) -> RepairResult {
    let mut adj = apply_structural_rules(probs, pi_ids, po_ids);
    let mut removed_edges = Vec::new();
    loop {
        let cycle = detect_cycle(&adj);
        if cycle.is_empty() {
            break;
        }
        let mut weakest: Option<RemovedEdge> = None;
        for k in 0..cycle.len() {
            let src = cycle[k];
            let dst = cycle[(k + 1) % cycle.len()];
            let prob = probs.get(src, dst);
            let beats = match weakest {
                None => true,
                Some(w) => prob < w.prob,
            };
            if beats {
                weakest = Some(RemovedEdge { src, dst, prob });
            }
        }
        let edge = weakest.expect("cycle has at least one edge");
        adj.set(edge.src, edge.dst, false);
        removed_edges.push(edge);
    }
    let masked = masked_probabilities(&adj, probs).expect("shapes match by construction");
    let disconnected_pos = find_disconnected_pos(&adj, pi_ids, po_ids);
    RepairResult {
        adjacency: adj,
        masked,
        removed_edges,
        disconnected_pos,
    }
}

/// Elementwise product of a binary adjacency with the proposal probabilities.
pub fn masked_probabilities(
    adj: &Adjacency,
    probs: &ProbabilityMatrix,
) -> Result<ProbabilityMatrix, RepairError> {
    if adj.n() != probs.n() {
        return Err(RepairError::ShapeMismatch {
            matrix: probs.n(),
            adjacency: adj.n(),
        });
    }
    let n = adj.n();
    let mut out = ProbabilityMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if adj.get(i, j) {
                out.set(i, j, probs.get(i, j));
            }
        }
    }
    Ok(out)
}

fn find_disconnected_pos(adj: &Adjacency, pi_ids: &[usize], po_ids: &[usize]) -> Vec<usize> {
    let n = adj.n();
    let mut reachable = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for &pi in pi_ids {
        if !reachable[pi] {
            reachable[pi] = true;
            queue.push(pi);
        }
    }
    while let Some(node) = queue.pop() {
        for dst in adj.fanouts(node) {
            if !reachable[dst] {
                reachable[dst] = true;
                queue.push(dst);
            }
        }
    }
    po_ids.iter().copied().filter(|&po| !reachable[po]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, entries: &[(usize, usize, f64)]) -> ProbabilityMatrix {
        let mut m = ProbabilityMatrix::zeros(n);
        for &(i, j, p) in entries {
            m.set(i, j, p);
        }
        m
    }

    #[test]
    fn threshold_is_strict_and_terminal_aware() {
        // Node 0 input, node 3 output.
        let m = matrix(
            4,
            &[
                (0, 1, 0.9),  // kept
                (1, 2, 0.5),  // dropped: not strictly above 0.5
                (1, 0, 0.99), // dropped: into an input
                (3, 1, 0.99), // dropped: out of an output
                (2, 2, 0.99), // dropped: self-loop
                (2, 3, 0.51), // kept
            ],
        );
        let adj = apply_structural_rules(&m, &[0], &[3]);
        let edges: Vec<(usize, usize)> = adj.edges().collect();
        assert_eq!(edges, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn two_cycle_loses_weaker_edge() {
        let m = matrix(2, &[(0, 1, 0.9), (1, 0, 0.7)]);
        let result = dag_search(&m, &[], &[]);
        assert!(result.adjacency.get(0, 1));
        assert!(!result.adjacency.get(1, 0));
        assert_eq!(
            result.removed_edges,
            vec![RemovedEdge {
                src: 1,
                dst: 0,
                prob: 0.7
            }]
        );
    }

    #[test]
    fn triangle_loses_weakest_edge() {
        let m = matrix(3, &[(0, 1, 0.9), (1, 2, 0.8), (2, 0, 0.6)]);
        let result = dag_search(&m, &[], &[]);
        assert!(result.adjacency.get(0, 1));
        assert!(result.adjacency.get(1, 2));
        assert!(!result.adjacency.get(2, 0));
    }

    #[test]
    fn tie_removes_first_edge_along_cycle() {
        // DFS from node 0 reports the cycle as 0 -> 1 -> 2 -> 0; all edges
        // tie, so the first one scanned (0 -> 1) goes.
        let m = matrix(3, &[(0, 1, 0.8), (1, 2, 0.8), (2, 0, 0.8)]);
        let result = dag_search(&m, &[], &[]);
        assert_eq!(result.removed_edges.len(), 1);
        assert_eq!(
            result.removed_edges[0],
            RemovedEdge {
                src: 0,
                dst: 1,
                prob: 0.8
            }
        );
    }

    #[test]
    fn detect_cycle_returns_edge_ordered_nodes() {
        let mut adj = Adjacency::new(4);
        adj.set(1, 2, true);
        adj.set(2, 3, true);
        adj.set(3, 1, true);
        let cycle = detect_cycle(&adj);
        assert_eq!(cycle.len(), 3);
        for k in 0..cycle.len() {
            assert!(adj.get(cycle[k], cycle[(k + 1) % cycle.len()]));
        }
        assert!(cycle.contains(&1) && cycle.contains(&2) && cycle.contains(&3));
    }

    #[test]
    fn detect_cycle_empty_on_dag() {
        let mut adj = Adjacency::new(3);
        adj.set(0, 1, true);
        adj.set(1, 2, true);
        adj.set(0, 2, true);
        assert!(detect_cycle(&adj).is_empty());
    }

    #[test]
    fn masked_probabilities_zeroes_dropped_edges() {
        let m = matrix(2, &[(0, 1, 0.9), (1, 0, 0.7)]);
        let result = dag_search(&m, &[], &[]);
        assert_eq!(result.masked.get(0, 1), 0.9);
        assert_eq!(result.masked.get(1, 0), 0.0);
    }

    #[test]
    fn masked_probabilities_checks_shapes() {
        let m = ProbabilityMatrix::zeros(3);
        let adj = Adjacency::new(2);
        assert!(matches!(
            masked_probabilities(&adj, &m),
            Err(RepairError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn disconnected_output_is_reported() {
        // 0 is an input, 2 and 3 outputs; only 2 gets a driver path.
        let m = matrix(4, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let result = dag_search(&m, &[0], &[2, 3]);
        assert_eq!(result.disconnected_pos, vec![3]);
    }

    #[test]
    fn repair_of_probability_one_tie_still_terminates() {
        let m = matrix(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]);
        let result = dag_search(&m, &[], &[]);
        assert!(result.adjacency.is_acyclic());
    }
}
