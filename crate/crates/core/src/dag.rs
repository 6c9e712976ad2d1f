//! Labeled DAG adjacency matrices and single-edge moves.

use thiserror::Error;

use crate::state::StateKey;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("adjacency encoding has {actual} bytes, expected {expected} for {nodes} nodes")]
    LengthMismatch {
        nodes: usize,
        expected: usize,
        actual: usize,
    },
    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },
    #[error("adjacency matrix contains a directed cycle")]
    Cyclic,
}

/// An n×n binary adjacency matrix, entry (i, j) = 1 iff edge i→j.
/// Construction from a `StateKey` verifies acyclicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagAdjacency {
    nodes: usize,
    adj: Vec<bool>, // row-major
}

impl DagAdjacency {
    pub fn empty(nodes: usize) -> Self {
        Self { nodes, adj: vec![false; nodes * nodes] }
    }

    /// Decodes a row-major bit encoding, rejecting self-loops and cycles.
    pub fn from_state_key(key: &StateKey, nodes: usize) -> Result<Self, GraphError> {
        let expected = StateKey::bytes_for(nodes * nodes);
        if key.byte_len() != expected {
            return Err(GraphError::LengthMismatch {
                nodes,
                expected,
                actual: key.byte_len(),
            });
        }
        let adj = key.to_bits(nodes * nodes);
        for i in 0..nodes {
            if adj[i * nodes + i] {
                return Err(GraphError::SelfLoop { node: i });
            }
        }
        let dag = Self { nodes, adj };
        if !dag.is_acyclic() {
            return Err(GraphError::Cyclic);
        }
        Ok(dag)
    }

    pub fn to_state_key(&self) -> StateKey {
        StateKey::from_bits(&self.adj)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.nodes + to]
    }

    pub fn set_edge(&mut self, from: usize, to: usize, present: bool) {
        self.adj[from * self.nodes + to] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count()
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        (0..self.nodes).filter(|&i| self.edge(i, node)).collect()
    }

    /// Kahn's algorithm; true iff the graph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        let n = self.nodes;
        let mut indegree = vec![0usize; n];
        for i in 0..n {
            for j in 0..n {
                if self.edge(i, j) {
                    indegree[j] += 1;
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
        let mut removed = 0;
        while let Some(i) = ready.pop() {
            removed += 1;
            for j in 0..n {
                if self.edge(i, j) {
                    indegree[j] -= 1;
                    if indegree[j] == 0 {
                        ready.push(j);
                    }
                }
            }
        }
        removed == n
    }

    /// All DAGs one single-edge move away: every deletion, plus every
    /// addition or reversal that keeps the graph acyclic. Deterministic
    /// order: moves scanned by (from, to) row-major.
    pub fn neighborhood(&self) -> Vec<DagAdjacency> {
        let n = self.nodes;
        let mut moves = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if self.edge(i, j) {
                    let mut deleted = self.clone();
                    deleted.set_edge(i, j, false);
                    let mut reversed = deleted.clone();
                    reversed.set_edge(j, i, true);
                    moves.push(deleted);
                    if reversed.is_acyclic() {
                        moves.push(reversed);
                    }
                } else {
                    let mut added = self.clone();
                    added.set_edge(i, j, true);
                    if added.is_acyclic() {
                        moves.push(added);
                    }
                }
            }
        }
        moves
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cycles_and_self_loops() {
        let mut cyclic = DagAdjacency::empty(3);
        cyclic.set_edge(0, 1, true);
        cyclic.set_edge(1, 2, true);
        cyclic.set_edge(2, 0, true);
        assert!(!cyclic.is_acyclic());
        assert!(matches!(
            DagAdjacency::from_state_key(&cyclic.to_state_key(), 3),
            Err(GraphError::Cyclic)
        ));

        let mut looped = DagAdjacency::empty(2);
        looped.set_edge(1, 1, true);
        assert!(matches!(
            DagAdjacency::from_state_key(&looped.to_state_key(), 2),
            Err(GraphError::SelfLoop { node: 1 })
        ));
    }

    #[test]
    fn round_trips_through_state_key() {
        let mut dag = DagAdjacency::empty(4);
        dag.set_edge(0, 2, true);
        dag.set_edge(1, 3, true);
        dag.set_edge(2, 3, true);
        let back = DagAdjacency::from_state_key(&dag.to_state_key(), 4).unwrap();
        assert_eq!(dag, back);
    }

    #[test]
    fn empty_two_node_neighborhood_is_both_additions() {
        let nbhd = DagAdjacency::empty(2).neighborhood();
        assert_eq!(nbhd.len(), 2);
        assert!(nbhd.iter().all(|g| g.edge_count() == 1));
        assert!(nbhd[0] != nbhd[1]);
    }

    #[test]
    fn single_edge_two_node_neighborhood_is_delete_and_reverse() {
        let mut dag = DagAdjacency::empty(2);
        dag.set_edge(0, 1, true);
        let nbhd = dag.neighborhood();
        assert_eq!(nbhd.len(), 2);
        assert!(nbhd.contains(&DagAdjacency::empty(2)));
        let mut reversed = DagAdjacency::empty(2);
        reversed.set_edge(1, 0, true);
        assert!(nbhd.contains(&reversed));
    }

    #[test]
    fn neighborhood_members_are_acyclic() {
        let mut dag = DagAdjacency::empty(4);
        dag.set_edge(0, 1, true);
        dag.set_edge(1, 2, true);
        dag.set_edge(0, 3, true);
        for g in dag.neighborhood() {
            assert!(g.is_acyclic());
        }
    }
}
