//! Shortest paths on explicit arc lists.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub edge: usize,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct Graph {
    pub arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, arcs: Vec<Arc>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, a) in arcs.iter().enumerate() {
            adj[a.from].push(i);
        }
        Graph { arcs, adj }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Dijkstra distances from `root`; weights must be nonnegative.
    pub fn dijkstra(&self, root: usize) -> Vec<f64> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[root] = 0.0;
        heap.push(Entry(0.0, root));
        while let Some(Entry(d, v)) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            for &ai in &self.adj[v] {
                let a = &self.arcs[ai];
                if done[a.to] {
                    continue;
                }
                let nd = d + a.weight;
                let better =
                    nd < dist[a.to] || (nd == dist[a.to] && pred[a.to].is_some_and(|p| a.edge < self.arcs[p].edge));
                if better {
                    dist[a.to] = nd;
                    pred[a.to] = Some(ai);
                    heap.push(Entry(nd, a.to));
                }
            }
        }
        dist
    }

    /// Label-correcting shortest paths allowing negative arcs.
    pub fn bellman_ford(&self, root: usize, tol: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        dist[root] = 0.0;
        for round in 0..=n {
            let mut changed = false;
            for a in &self.arcs {
                if dist[a.from].is_finite() {
                    let nd = dist[a.from] + a.weight;
                    if nd < dist[a.to] - tol * (1.0 + nd.abs()) {
                        dist[a.to] = nd;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(dist);
            }
            if round == n {
                break;
            }
        }
        Err(Error::Infeasible("negative cycle in residual graph".into()))
    }
}
