//! Weighted Laplacians with the reference vertex grounded.
//!
//! `L̂` is factored densely as `R Rᵀ`; conductance changes are applied as rank-1
//! up/downdates of `R`.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::network::Network;

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Cholesky {
    n: usize,
    /// Lower-triangular factor, row-major `n×n`.
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Cholesky> {
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
        let tol = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > tol) {
                return None;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
            for k in j + 1..n {
                a[j * n + k] = 0.0;
            }
        }
        Some(Cholesky { n, l: a })
    }

    /// `R Rᵀ ± w wᵀ` in place; returns false if a downdate loses definiteness.
    fn update(&mut self, mut w: Vec<f64>, downdate: bool, tol: f64) -> bool {
        let n = self.n;
        let start = match w.iter().position(|&x| x != 0.0) {
            Some(k) => k,
            None => return true,
        };
        let sign = if downdate { -1.0 } else { 1.0 };
        for k in start..n {
            let lkk = self.l[k * n + k];
            let r2 = lkk * lkk + sign * w[k] * w[k];
            if !(r2 > tol) {
                return false;
            }
            let r = r2.sqrt();
            let c = r / lkk;
            let s = w[k] / lkk;
            self.l[k * n + k] = r;
            for i in k + 1..n {
                let lik = (self.l[i * n + k] + sign * s * w[i]) / c;
                self.l[i * n + k] = lik;
                w[i] = c * w[i] - s * lik;
            }
        }
        true
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// `L = Γ diag(c) Γᵀ` with a factorization of the grounded matrix `L̂`.
#[derive(Debug, Clone)]
pub struct LaplacianState {
    n: usize,
    reference: usize,
    edges: Vec<(usize, usize)>,
    c: Vec<f64>,
    factor: Option<Cholesky>,
    updates: usize,
    refactors: usize,
}

impl LaplacianState {
    pub fn assemble(net: &Network, c: &[f64]) -> Result<Self> {
        if c.len() != net.n_edges() {
            return Err(Error::invalid("conductance vector length mismatch"));
        }
        if let Some(bad) = c.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(format!("bad conductance {bad}")));
        }
        let mut st = LaplacianState {
            n: net.n_vertices(),
            reference: net.reference(),
            edges: net.edges().to_vec(),
            c: c.to_vec(),
            factor: None,
            updates: 0,
            refactors: 0,
        };
        st.refactor();
        Ok(st)
    }

    fn reduced(&self, v: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match v.cmp(&self.reference) {
            Less => Some(v),
            Equal => None,
            Greater => Some(v - 1),
        }
    }

    /// Dense grounded matrix `L̂`.
    pub fn reduced_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.n - 1;
        let mut a = vec![vec![0.0; k]; k];
        for (&(u, v), &ce) in self.edges.iter().zip(&self.c) {
            let (ru, rv) = (self.reduced(u), self.reduced(v));
            if let Some(i) = ru {
                a[i][i] += ce;
            }
            if let Some(j) = rv {
                a[j][j] += ce;
            }
            if let (Some(i), Some(j)) = (ru, rv) {
                a[i][j] -= ce;
                a[j][i] -= ce;
            }
        }
        a
    }

    fn refactor(&mut self) {
        let k = self.n - 1;
        self.updates = 0;
        self.refactors += 1;
        if k == 0 {
            self.factor = Some(Cholesky { n: 0, l: Vec::new() });
            return;
        }
        let a: Vec<f64> = self.reduced_matrix().into_iter().flatten().collect();
        self.factor = Cholesky::factor(a, k);
    }

    pub fn is_singular(&self) -> bool {
        self.factor.is_none()
    }

    pub fn conductances(&self) -> &[f64] {
        &self.c
    }

    pub fn conductance(&self, e: usize) -> f64 {
        self.c[e]
    }

    pub fn refactor_count(&self) -> usize {
        self.refactors
    }

    /// Sets `c_e`; a loss of definiteness flags the state singular instead of failing.
    pub fn rank_one_update(&mut self, e: usize, new_c: f64) -> Result<()> {
        if !(new_c >= 0.0) || !new_c.is_finite() {
            return Err(Error::invalid(format!("bad conductance {new_c}")));
        }
        let old = self.c[e];
        if new_c == old {
            return Ok(());
        }
        self.c[e] = new_c;
        self.updates += 1;
        let delta = new_c - old;
        let (u, v) = self.edges[e];
        let k = self.n - 1;
        let max_diag = self.max_diag();
        let (ru, rv) = (self.reduced(u), self.reduced(v));
        let ok = match self.factor.as_mut() {
            Some(f) if self.updates < REFACTOR_EVERY && k > 0 => {
                let mut w = vec![0.0; k];
                let s = delta.abs().sqrt();
                if let Some(i) = ru {
                    w[i] = -s;
                }
                if let Some(j) = rv {
                    w[j] = s;
                }
                let tol = (PIVOT_TOL * max_diag).max(f64::MIN_POSITIVE);
                f.update(w, delta < 0.0, tol)
            }
            _ => false,
        };
        if !ok {
            self.refactor();
        }
        Ok(())
    }

    fn max_diag(&self) -> f64 {
        let mut d = vec![0.0; self.n];
        for (&(u, v), &ce) in self.edges.iter().zip(&self.c) {
            d[u] += ce;
            d[v] += ce;
        }
        d.into_iter().fold(0.0, f64::max)
    }

    /// `L z` for a full potential vector.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&(u, v), &ce) in self.edges.iter().zip(&self.c) {
            let f = ce * (z[v] - z[u]);
            out[u] -= f;
            out[v] += f;
        }
        out
    }

    fn raw_solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let f = self.factor.as_ref()?;
        let mut b: Vec<f64> = (0..self.n).filter(|&v| v != self.reference).map(|v| rhs[v]).collect();
        f.solve(&mut b);
        let mut z = vec![0.0; self.n];
        for v in 0..self.n {
            if let Some(i) = self.reduced(v) {
                z[v] = b[i];
            }
        }
        Some(z)
    }

    fn residual(&self, z: &[f64], rhs: &[f64]) -> f64 {
        let lz = self.apply(z);
        (0..self.n)
            .filter(|&v| v != self.reference)
            .map(|v| (lz[v] - rhs[v]).abs())
            .fold(0.0, f64::max)
    }

    /// `L* rhs`: the solution with `z[reference] = 0`.
    ///
    /// The sign convention is `L z = rhs` on all non-reference rows, so the result
    /// equals the potential of the electrical flow routing `rhs`.
    pub fn reduced_solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::invalid("rhs length mismatch"));
        }
        let scale: f64 = rhs.iter().map(|x| x.abs()).sum();
        let sum: f64 = rhs.iter().sum();
        if sum.abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Unbalanced { sum });
        }
        let z = self.raw_solve(rhs).ok_or(Error::Singular)?;
        let norm = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if self.residual(&z, rhs) <= RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
            return Ok(z);
        }
        self.refactor();
        self.raw_solve(rhs).ok_or(Error::Singular)
    }
}
