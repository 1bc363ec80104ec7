//! Minimal-hop routing over the inter-cell fiber graph.
//!
//! Stands in for base-station routing intelligence: breadth-first distances
//! with a deterministic lexicographic tie-break, so equal-cost topologies
//! always route the same way.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

use super::topology::{CellId, NodeId, Topology};

/// Ordered base-station path between two cells (one element when they are
/// the same cell). Among minimal-hop paths the lexicographically smallest
/// node sequence wins.
pub fn route(topology: &Topology, from: &CellId, to: &CellId) -> Result<Vec<NodeId>> {
    let start = topology.qbs_of_cell(from)?.clone();
    let goal = topology.qbs_of_cell(to)?.clone();
    if start == goal {
        return Ok(vec![start]);
    }

    // distances to the goal, then greedy descent picking the smallest id
    let mut dist: BTreeMap<NodeId, usize> = BTreeMap::new();
    dist.insert(goal.clone(), 0);
    let mut queue = VecDeque::from([goal.clone()]);
    while let Some(node) = queue.pop_front() {
        let d = dist[&node];
        for neighbor in topology.qbs_neighbors(&node) {
            if !dist.contains_key(neighbor) {
                dist.insert(neighbor.clone(), d + 1);
                queue.push_back(neighbor.clone());
            }
        }
    }

    let Some(&total) = dist.get(&start) else {
        return Err(Error::NoRoute {
            from: from.to_string(),
            to: to.to_string(),
        });
    };

    let mut path = Vec::with_capacity(total + 1);
    path.push(start.clone());
    let mut current = start;
    for step in (0..total).rev() {
        let next = topology
            .qbs_neighbors(&current)
            .into_iter()
            .find(|n| dist.get(*n) == Some(&step))
            .expect("a neighbor one step closer exists on a shortest path")
            .clone();
        path.push(next.clone());
        current = next;
    }
    Ok(path)
}
