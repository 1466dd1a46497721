//! Graphs, incidence algebra and affine demand functions.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Flow restricted to `x_e >= 0`.
    Directed,
    /// Flow in `(-inf, inf)`; orientation only fixes the sign.
    Undirected,
}

#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize)>,
    mode: Mode,
    reference: usize,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network with vertex 0 as reference.
    pub fn new(n: usize, edges: Vec<(usize, usize)>, mode: Mode) -> Result<Self> {
        Self::with_reference(n, edges, mode, 0)
    }

    pub fn with_reference(n: usize, edges: Vec<(usize, usize)>, mode: Mode, reference: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork("no vertices".into()));
        }
        if reference >= n {
            return Err(Error::InvalidNetwork(format!(
                "reference vertex {reference} out of range"
            )));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidNetwork(format!("edge {e} has endpoint out of range")));
            }
            if u == v {
                return Err(Error::InvalidNetwork(format!("edge {e} is a self-loop at {u}")));
            }
            let key = match mode {
                Mode::Directed => (u, v),
                Mode::Undirected => (u.min(v), u.max(v)),
            };
            if !seen.insert(key) {
                return Err(Error::InvalidNetwork(format!("edge {e} ({u},{v}) is parallel")));
            }
            out_edges[u].push(e);
            in_edges[v].push(e);
        }
        let net = Network {
            n,
            edges,
            mode,
            reference,
            out_edges,
            in_edges,
        };
        net.check_connected()?;
        Ok(net)
    }

    fn check_connected(&self) -> Result<()> {
        let forward = self.reach(self.reference, true, self.mode == Mode::Undirected);
        if forward.iter().any(|r| !r) {
            return Err(Error::InvalidNetwork(match self.mode {
                Mode::Directed => "not strongly connected".into(),
                Mode::Undirected => "not connected".into(),
            }));
        }
        if self.mode == Mode::Directed {
            let backward = self.reach(self.reference, false, false);
            if backward.iter().any(|r| !r) {
                return Err(Error::InvalidNetwork("not strongly connected".into()));
            }
        }
        Ok(())
    }

    fn reach(&self, root: usize, forward: bool, both: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            let mut visit = |w: usize| {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            };
            if forward || both {
                for &e in &self.out_edges[v] {
                    visit(self.edges[e].1);
                }
            }
            if !forward || both {
                for &e in &self.in_edges[v] {
                    visit(self.edges[e].0);
                }
            }
        }
        seen
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn incidence_matrix(&self) -> Incidence {
        Incidence {
            n_rows: self.n,
            columns: self.edges.clone(),
        }
    }

    /// `Γx`: net inflow at every vertex.
    pub fn net_inflow(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&(u, v), &xe) in self.edges.iter().zip(x) {
            out[u] -= xe;
            out[v] += xe;
        }
        out
    }

    /// `Γᵀπ`: potential difference head minus tail on every edge.
    pub fn potential_diff(&self, pi: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|&(u, v)| pi[v] - pi[u]).collect()
    }
}

/// Sparse incidence matrix: column `e` is `-1` at the tail and `+1` at the head.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    pub n_rows: usize,
    pub columns: Vec<(usize, usize)>,
}

impl Incidence {
    pub fn get(&self, v: usize, e: usize) -> i8 {
        let (t, h) = self.columns[e];
        if v == t {
            -1
        } else if v == h {
            1
        } else {
            0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        (0..self.n_rows)
            .map(|v| (0..self.columns.len()).map(|e| self.get(v, e)).collect())
            .collect()
    }
}

fn balance_tolerance(v: &[f64]) -> f64 {
    1e-9 * v.iter().map(|x| x.abs()).sum::<f64>().max(1e-300)
}

/// Affine demand `λ ↦ b0 + λ b` on `[0, lambda_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandFunction {
    pub b0: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda_max: f64,
}

impl DemandFunction {
    pub fn new(b0: Vec<f64>, b: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if b0.len() != b.len() {
            return Err(Error::invalid("b0 and b differ in length"));
        }
        if !(lambda_max >= 0.0) || !lambda_max.is_finite() {
            return Err(Error::invalid(format!("lambda_max = {lambda_max}")));
        }
        for v in [&b0, &b] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite demand entry"));
            }
            let sum: f64 = v.iter().sum();
            if sum.abs() > balance_tolerance(v) {
                return Err(Error::Unbalanced { sum });
            }
        }
        Ok(DemandFunction { b0, b, lambda_max })
    }

    /// Demand `b0 = 0`, `b = rate·(1_t − 1_s)`.
    pub fn source_sink(n: usize, s: usize, t: usize, rate: f64, lambda_max: f64) -> Result<Self> {
        if s >= n || t >= n || s == t {
            return Err(Error::invalid(format!("bad source/sink pair ({s},{t})")));
        }
        let mut b = vec![0.0; n];
        b[s] = -rate;
        b[t] = rate;
        Self::new(vec![0.0; n], b, lambda_max)
    }

    pub fn n_vertices(&self) -> usize {
        self.b.len()
    }

    pub fn at(&self, lambda: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.lambda_max).contains(&lambda) {
            return Err(Error::Domain {
                name: "lambda",
                value: lambda,
                lo: 0.0,
                hi: self.lambda_max,
            });
        }
        Ok(self.at_unchecked(lambda))
    }

    pub(crate) fn at_unchecked(&self, lambda: f64) -> Vec<f64> {
        self.b0.iter().zip(&self.b).map(|(p, q)| p + lambda * q).collect()
    }

    pub fn has_offset(&self) -> bool {
        self.b0.iter().any(|&x| x != 0.0)
    }

    fn inflow(&self, lambda: f64) -> f64 {
        0.5 * self
            .b0
            .iter()
            .zip(&self.b)
            .map(|(p, q)| (p + lambda * q).abs())
            .sum::<f64>()
    }

    /// Maximum of `½ Σ |b0 + λ b|` over `[lo, hi]`, attained at an endpoint by convexity.
    pub fn max_inflow(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(0.0 <= lo && lo <= hi && hi <= self.lambda_max) {
            return Err(Error::invalid(format!(
                "interval [{lo}, {hi}] not inside [0, {}]",
                self.lambda_max
            )));
        }
        Ok(self.inflow(lo).max(self.inflow(hi)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub source: usize,
    pub sink: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSinkDecomposition {
    pub triples: Vec<Triple>,
}

impl SourceSinkDecomposition {
    /// Net vector induced by the triples.
    pub fn induced(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for t in &self.triples {
            out[t.source] -= t.rate;
            out[t.sink] += t.rate;
        }
        out
    }
}

/// Greedy pairing of the largest supply with the largest deficit.
pub fn source_sink_decompose(b: &[f64]) -> Result<SourceSinkDecomposition> {
    let sum: f64 = b.iter().sum();
    let tol = balance_tolerance(b);
    if sum.abs() > tol {
        return Err(Error::Unbalanced { sum });
    }
    let mut rest = b.to_vec();
    let mut triples = Vec::new();
    let pick = |rest: &[f64], sign: f64| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (v, &r) in rest.iter().enumerate() {
            if sign * r > tol && best.is_none_or(|w| sign * r > sign * rest[w]) {
                best = Some(v);
            }
        }
        best
    };
    while let (Some(s), Some(t)) = (pick(&rest, -1.0), pick(&rest, 1.0)) {
        let supply = -rest[s];
        let deficit = rest[t];
        let rate = supply.min(deficit);
        if supply <= deficit {
            rest[s] = 0.0;
            rest[t] = deficit - rate;
        } else {
            rest[t] = 0.0;
            rest[s] = -(supply - rate);
        }
        triples.push(Triple {
            source: s,
            sink: t,
            rate,
        });
        if triples.len() > b.len() {
            break;
        }
    }
    Ok(SourceSinkDecomposition { triples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinked_triangle() -> Network {
        Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap()
    }

    #[test]
    fn incidence_columns() {
        let inc = kinked_triangle().incidence_matrix().to_dense();
        let col = |e: usize| inc.iter().map(|row| row[e]).collect::<Vec<_>>();
        assert_eq!(col(0), vec![-1, 1, 0]);
        assert_eq!(col(1), vec![0, -1, 1]);
        assert_eq!(col(2), vec![-1, 0, 1]);
    }

    #[test]
    fn single_edge_column() {
        let net = Network::new(2, vec![(0, 1)], Mode::Undirected).unwrap();
        assert_eq!(net.incidence_matrix().to_dense(), vec![vec![-1], vec![1]]);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(Network::new(1, vec![(0, 0)], Mode::Undirected).is_err());
        assert!(Network::new(2, vec![(0, 1), (0, 1)], Mode::Directed).is_err());
        assert!(Network::new(2, vec![(0, 1), (1, 0)], Mode::Undirected).is_err());
        assert!(Network::new(2, vec![(0, 1), (1, 0)], Mode::Directed).is_ok());
        assert!(Network::new(3, vec![(0, 1), (1, 2)], Mode::Directed).is_err());
        assert!(Network::new(3, vec![(0, 1)], Mode::Undirected).is_err());
    }

    #[test]
    fn demand_examples() {
        let d = DemandFunction::new(vec![1.0, -1.0], vec![-2.0, 2.0], 1.0).unwrap();
        assert_eq!(d.at(0.0).unwrap(), vec![1.0, -1.0]);
        assert_eq!(d.at(0.5).unwrap(), vec![0.0, 0.0]);
        assert!(d.at(1.5).is_err());
        let d = DemandFunction::new(vec![0.0; 2], vec![-1.0, 1.0], 1.0).unwrap();
        assert_eq!(d.at(1.0).unwrap(), vec![-1.0, 1.0]);
        assert!(DemandFunction::new(vec![0.0; 2], vec![1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = source_sink_decompose(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            d.triples,
            vec![Triple {
                source: 0,
                sink: 2,
                rate: 1.0
            }]
        );
        assert!(source_sink_decompose(&[0.0; 4]).unwrap().triples.is_empty());
        let d = source_sink_decompose(&[-2.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.triples.len(), 2);
        assert_eq!((d.triples[0].sink, d.triples[1].sink), (1, 2));
        assert_eq!(d.induced(3), vec![-2.0, 1.0, 1.0]);
        assert!(source_sink_decompose(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn max_inflow_examples() {
        let d = DemandFunction::new(vec![0.0; 2], vec![-1.0, 1.0], 1.0).unwrap();
        assert_eq!(d.max_inflow(0.0, 1.0).unwrap(), 1.0);
        let d = DemandFunction::new(vec![-1.0, 1.0], vec![1.0, -1.0], 1.0).unwrap();
        assert_eq!(d.max_inflow(0.0, 1.0).unwrap(), 1.0);
        let d = DemandFunction::new(vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], 1.0).unwrap();
        let grid = (0..=1000).map(|k| d.inflow(k as f64 / 1000.0)).fold(0.0f64, f64::max);
        assert!((d.max_inflow(0.0, 1.0).unwrap() - grid).abs() < 1e-12);
        assert_eq!(grid, 1.0);
    }
}
