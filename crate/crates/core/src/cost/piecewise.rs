use serde::{Deserialize, Serialize};

use super::Marginal;
use crate::error::{Error, Result};

/// Inverse coefficients of one part: `x = c·y − d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub c: f64,
    pub d: f64,
}

impl Part {
    pub fn is_infinite(&self) -> bool {
        self.c == 0.0
    }

    pub fn flow(&self, y: f64) -> f64 {
        self.c * y - self.d
    }
}

/// Continuous, strictly increasing piecewise-linear marginal.
///
/// Finite parts are stored in anchor form `f(x) = ay + slope·(x − ax)`.
/// Optional bounds add an infinite-cost part before `lower` and after `upper`;
/// parts are indexed in potential-difference space, prefix first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearMarginal {
    lower: Option<f64>,
    upper: Option<f64>,
    tau: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
    slope: Vec<f64>,
    #[serde(skip)]
    parts: Vec<Part>,
    #[serde(skip)]
    sigma: Vec<f64>,
    #[serde(skip)]
    antideriv: Vec<f64>,
}

impl PiecewiseLinearMarginal {
    fn build(
        lower: Option<f64>,
        upper: Option<f64>,
        tau: Vec<f64>,
        ax: Vec<f64>,
        ay: Vec<f64>,
        slope: Vec<f64>,
    ) -> Result<Self> {
        let k = slope.len();
        if k == 0 || ax.len() != k || ay.len() != k || tau.len() + 1 != k {
            return Err(Error::invalid("inconsistent part counts"));
        }
        if slope.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("part slopes must be positive and finite"));
        }
        if tau.windows(2).any(|w| !(w[0] < w[1])) || tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        let mut p = PiecewiseLinearMarginal {
            lower,
            upper,
            tau,
            ax,
            ay,
            slope,
            parts: Vec::new(),
            sigma: Vec::new(),
            antideriv: Vec::new(),
        };
        for (j, &t) in p.tau.iter().enumerate() {
            let left = p.part_value(j, t);
            let right = p.part_value(j + 1, t);
            if (left - right).abs() > 1e-9 * (1.0 + left.abs()) {
                return Err(Error::invalid(format!("discontinuous at breakpoint {t}")));
            }
        }
        if let (Some(l), Some(u)) = (lower, upper) {
            if !(l < u) {
                return Err(Error::invalid("lower bound must be below upper bound"));
            }
        }
        if let (Some(l), Some(&t)) = (lower, p.tau.first()) {
            if !(l < t) {
                return Err(Error::invalid("lower bound must precede the first breakpoint"));
            }
        }
        if let (Some(u), Some(&t)) = (upper, p.tau.last()) {
            if !(u > t) {
                return Err(Error::invalid("upper bound must follow the last breakpoint"));
            }
        }
        p.derive();
        Ok(p)
    }

    fn derive(&mut self) {
        let k = self.slope.len();
        self.parts.clear();
        self.sigma.clear();
        if let Some(l) = self.lower {
            self.parts.push(Part { c: 0.0, d: -l });
            self.sigma.push(self.part_value(0, l));
        }
        for j in 0..k {
            let c = 1.0 / self.slope[j];
            self.parts.push(Part {
                c,
                d: self.ay[j] * c - self.ax[j],
            });
            if j + 1 < k {
                self.sigma.push(self.part_value(j, self.tau[j]));
            }
        }
        if let Some(u) = self.upper {
            self.sigma.push(self.part_value(k - 1, u));
            self.parts.push(Part { c: 0.0, d: -u });
        }
        // Antiderivative constants, normalized so that F(0) = 0.
        let prim = |p: &Self, j: usize, x: f64| {
            let h = x - p.ax[j];
            p.ay[j] * h + 0.5 * p.slope[j] * h * h
        };
        let mut kc = vec![0.0; k];
        for j in 1..k {
            let t = self.tau[j - 1];
            kc[j] = kc[j - 1] + prim(self, j - 1, t) - prim(self, j, t);
        }
        let j0 = self.finite_index(0.0);
        let shift = kc[j0] + prim(self, j0, 0.0);
        for v in &mut kc {
            *v -= shift;
        }
        self.antideriv = kc;
    }

    /// Finite parts given by slopes and intercepts `f(x) = slope·x + intercept`.
    pub fn from_parts(tau: Vec<f64>, slope: Vec<f64>, intercept: Vec<f64>) -> Result<Self> {
        if intercept.len() != slope.len() {
            return Err(Error::invalid("inconsistent part counts"));
        }
        let ax: Vec<f64> = (0..slope.len())
            .map(|j| {
                if j == 0 {
                    tau.first().copied().unwrap_or(0.0)
                } else {
                    tau[j - 1]
                }
            })
            .collect();
        let ay = ax
            .iter()
            .zip(slope.iter().zip(&intercept))
            .map(|(x, (a, b))| a * x + b)
            .collect();
        Self::build(None, None, tau, ax, ay, slope)
    }

    /// Linear interpolation through `(xs[i], ys[i])`, extended linearly beyond the ends.
    pub fn interpolate(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::invalid("interpolation needs at least two points"));
        }
        let k = xs.len() - 1;
        let mut slope = Vec::with_capacity(k);
        for i in 0..k {
            let dx = xs[i + 1] - xs[i];
            let dy = ys[i + 1] - ys[i];
            if !(dx > 0.0) {
                return Err(Error::invalid("mesh points must be strictly increasing"));
            }
            if !(dy > 0.0) {
                return Err(Error::invalid(format!(
                    "sampled marginal not increasing on [{}, {}]",
                    xs[i],
                    xs[i + 1]
                )));
            }
            slope.push(dy / dx);
        }
        Self::build(None, None, xs[1..k].to_vec(), xs[..k].to_vec(), ys[..k].to_vec(), slope)
    }

    /// Same marginal with infinite cost outside `[lower, upper]`.
    pub fn with_bounds(self, lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        Self::build(lower, upper, self.tau, self.ax, self.ay, self.slope)
    }

    /// Re-derives cached fields after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        let PiecewiseLinearMarginal {
            lower,
            upper,
            tau,
            ax,
            ay,
            slope,
            ..
        } = self;
        Self::build(lower, upper, tau, ax, ay, slope)
    }

    fn part_value(&self, j: usize, x: f64) -> f64 {
        self.ay[j] + self.slope[j] * (x - self.ax[j])
    }

    fn finite_index(&self, x: f64) -> usize {
        self.tau.partition_point(|&t| t < x)
    }

    fn prefix_len(&self) -> usize {
        usize::from(self.lower.is_some())
    }

    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn n_finite_parts(&self) -> usize {
        self.slope.len()
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// `(c, d)` of part `t`.
    pub fn inverse_part(&self, t: usize) -> (f64, f64) {
        let p = self.parts[t];
        (p.c, p.d)
    }

    pub fn part(&self, t: usize) -> Part {
        self.parts[t]
    }

    /// Potential-difference breakpoints between consecutive parts.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Lower end of part `t` in potential-difference space.
    pub fn sigma_lo(&self, t: usize) -> f64 {
        if t == 0 {
            f64::NEG_INFINITY
        } else {
            self.sigma[t - 1]
        }
    }

    /// Upper end of part `t` in potential-difference space.
    pub fn sigma_hi(&self, t: usize) -> f64 {
        self.sigma.get(t).copied().unwrap_or(f64::INFINITY)
    }

    /// Part containing `y`; a value on a breakpoint goes to the lower part.
    pub fn locate(&self, y: f64) -> usize {
        self.sigma.partition_point(|&s| s < y)
    }

    /// `f⁻¹(y)`, constant at a bound on infinite parts.
    pub fn inverse(&self, y: f64) -> f64 {
        self.parts[self.locate(y)].flow(y)
    }

    /// Finite interior breakpoints in flow space.
    pub fn breakpoints(&self) -> &[f64] {
        &self.tau
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slope
    }

    /// Finite-part index of part `t`, if it is finite.
    pub fn finite_of(&self, t: usize) -> Option<usize> {
        let j = t.checked_sub(self.prefix_len())?;
        (j < self.slope.len()).then_some(j)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.value(0.0) == 0.0
    }
}

impl Marginal for PiecewiseLinearMarginal {
    /// Linear extension of the boundary part outside the bounds.
    fn value(&self, x: f64) -> f64 {
        self.part_value(self.finite_index(x), x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.slope[self.finite_index(x)]
    }

    fn integral(&self, x: f64) -> f64 {
        let j = self.finite_index(x);
        let h = x - self.ax[j];
        self.antideriv[j] + self.ay[j] * h + 0.5 * self.slope[j] * h * h
    }

    fn lower_bound(&self) -> Option<f64> {
        self.lower
    }

    fn upper_bound(&self) -> Option<f64> {
        self.upper
    }
}
