use serde::{Deserialize, Serialize};

use super::Marginal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticMarginal {
    /// `fft·(1 + b·(x/cap)^power)`, defined for `x >= 0`.
    Bpr { fft: f64, b: f64, cap: f64, power: u32 },
    /// `beta·x·|x|`.
    Weymouth { beta: f64 },
    /// `beta·x·|x| + zeta·x`.
    RegularizedWeymouth { beta: f64, zeta: f64 },
    /// `Σ coeffs[k]·x^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl AnalyticMarginal {
    pub fn bpr(fft: f64, b: f64, cap: f64, power: u32) -> Self {
        AnalyticMarginal::Bpr { fft, b, cap, power }
    }

    pub fn weymouth(beta: f64) -> Self {
        AnalyticMarginal::Weymouth { beta }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        AnalyticMarginal::Polynomial { coeffs }
    }

    pub fn linear(intercept: f64, slope: f64) -> Self {
        AnalyticMarginal::Polynomial {
            coeffs: vec![intercept, slope],
        }
    }

    /// Checks parameter signs; does not establish monotonicity of polynomials.
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => {
                *fft > 0.0 && *b >= 0.0 && *cap > 0.0 && *power >= 1 && b.is_finite()
            }
            AnalyticMarginal::Weymouth { beta } => *beta > 0.0 && beta.is_finite(),
            AnalyticMarginal::RegularizedWeymouth { beta, zeta } => {
                *beta > 0.0 && *zeta >= 0.0 && beta.is_finite() && zeta.is_finite()
            }
            AnalyticMarginal::Polynomial { coeffs } => !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad cost parameters {self:?}")))
        }
    }

    /// `f`, `f'` or `f''`. Weymouth kinds report `f''(0) = 0`.
    pub fn eval(&self, x: f64, order: u8) -> f64 {
        match order {
            0 => self.value(x),
            1 => self.derivative(x),
            _ => self.second_derivative(x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => {
                let p = *power as i32;
                if p < 2 {
                    0.0
                } else {
                    fft * b * (p * (p - 1)) as f64 * x.powi(p - 2) / cap.powi(p)
                }
            }
            AnalyticMarginal::Weymouth { beta } | AnalyticMarginal::RegularizedWeymouth { beta, .. } => {
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * beta * x.signum()
                }
            }
            AnalyticMarginal::Polynomial { coeffs } => poly_eval_derivative(coeffs, x, 2),
        }
    }

    /// Upper bound on `sup |f''|` over `[lo, hi]`, exact for BPR and Weymouth.
    /// Weymouth uses the one-sided value `2β` at 0.
    pub fn max_abs_second_derivative(&self, lo: f64, hi: f64) -> f64 {
        match self {
            AnalyticMarginal::Bpr { .. } => {
                let a = self.second_derivative(lo.max(0.0)).abs();
                let b = self.second_derivative(hi.max(0.0)).abs();
                a.max(b)
            }
            AnalyticMarginal::Weymouth { beta } | AnalyticMarginal::RegularizedWeymouth { beta, .. } => {
                if lo == hi && lo == 0.0 {
                    0.0
                } else {
                    2.0 * beta
                }
            }
            AnalyticMarginal::Polynomial { coeffs } => {
                let d2 = |x: f64| poly_eval_derivative(coeffs, x, 2).abs();
                let mut m = d2(lo).max(d2(hi));
                match coeffs.len() {
                    0..=4 => {}
                    5 => {
                        // f'' is a quadratic; include its vertex.
                        let a = 12.0 * coeffs[4];
                        let b = 6.0 * coeffs[3];
                        if a != 0.0 {
                            let v = -b / (2.0 * a);
                            if lo < v && v < hi {
                                m = m.max(d2(v));
                            }
                        }
                    }
                    _ => {
                        let r = lo.abs().max(hi.abs());
                        let bound: f64 = coeffs
                            .iter()
                            .enumerate()
                            .skip(2)
                            .map(|(k, c)| c.abs() * (k * (k - 1)) as f64 * r.powi(k as i32 - 2))
                            .sum();
                        m = m.max(bound);
                    }
                }
                m
            }
        }
    }

    /// `f(0) = 0`.
    pub fn is_homogeneous(&self) -> bool {
        self.value(0.0) == 0.0
    }

    pub fn beckmann_value(&self, x: f64) -> f64 {
        self.integral(x)
    }

    /// Marginal of the system-optimal problem, `f(x) + x·f'(x)`.
    pub fn system_optimal(&self) -> AnalyticMarginal {
        match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => AnalyticMarginal::Bpr {
                fft: *fft,
                b: b * (*power as f64 + 1.0),
                cap: *cap,
                power: *power,
            },
            AnalyticMarginal::Weymouth { beta } => AnalyticMarginal::Weymouth { beta: 3.0 * beta },
            AnalyticMarginal::RegularizedWeymouth { beta, zeta } => AnalyticMarginal::RegularizedWeymouth {
                beta: 3.0 * beta,
                zeta: 2.0 * zeta,
            },
            AnalyticMarginal::Polynomial { coeffs } => AnalyticMarginal::Polynomial {
                coeffs: coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 + 1.0)).collect(),
            },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            AnalyticMarginal::Bpr { .. } => "bpr",
            AnalyticMarginal::Weymouth { .. } => "weymouth",
            AnalyticMarginal::RegularizedWeymouth { .. } => "regularized_weymouth",
            AnalyticMarginal::Polynomial { .. } => "polynomial",
        }
    }
}

fn poly_eval_derivative(coeffs: &[f64], x: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for k in (order..coeffs.len()).rev() {
        let mut factor = 1.0;
        for j in 0..order {
            factor *= (k - j) as f64;
        }
        acc = acc * x + coeffs[k] * factor;
    }
    acc
}

impl Marginal for AnalyticMarginal {
    fn value(&self, x: f64) -> f64 {
        match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => fft * (1.0 + b * (x / cap).powi(*power as i32)),
            AnalyticMarginal::Weymouth { beta } => beta * x * x.abs(),
            AnalyticMarginal::RegularizedWeymouth { beta, zeta } => beta * x * x.abs() + zeta * x,
            AnalyticMarginal::Polynomial { coeffs } => poly_eval_derivative(coeffs, x, 0),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => {
                let p = *power as i32;
                fft * b * p as f64 * x.powi(p - 1) / cap.powi(p)
            }
            AnalyticMarginal::Weymouth { beta } => 2.0 * beta * x.abs(),
            AnalyticMarginal::RegularizedWeymouth { beta, zeta } => 2.0 * beta * x.abs() + zeta,
            AnalyticMarginal::Polynomial { coeffs } => poly_eval_derivative(coeffs, x, 1),
        }
    }

    fn integral(&self, x: f64) -> f64 {
        match self {
            AnalyticMarginal::Bpr { fft, b, cap, power } => {
                let p = *power as i32;
                fft * (x + b / (p as f64 + 1.0) * x.powi(p + 1) / cap.powi(p))
            }
            AnalyticMarginal::Weymouth { beta } => beta * x * x * x.abs() / 3.0,
            AnalyticMarginal::RegularizedWeymouth { beta, zeta } => beta * x * x * x.abs() / 3.0 + 0.5 * zeta * x * x,
            AnalyticMarginal::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().rev() {
                    acc = acc * x + c / (k as f64 + 1.0);
                }
                acc * x
            }
        }
    }

    fn lower_bound(&self) -> Option<f64> {
        match self {
            AnalyticMarginal::Bpr { .. } => Some(0.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bpr_values() {
        let f = AnalyticMarginal::bpr(1.0, 1.0, 1.0, 4);
        assert_eq!(f.value(1.0), 2.0);
        assert_eq!(f.value(0.0), 1.0);
        assert_relative_eq!(f.beckmann_value(1.0), 1.2, max_relative = 1e-15);
        assert_eq!(f.beckmann_value(0.0), 0.0);
        assert_eq!(f.derivative(1.0), 4.0);
        assert_eq!(f.second_derivative(1.0), 12.0);
    }

    #[test]
    fn weymouth_values() {
        let f = AnalyticMarginal::weymouth(2.0);
        assert_eq!(f.value(3.0), 18.0);
        assert_eq!(f.value(-3.0), -18.0);
        assert_eq!(f.value(0.0), 0.0);
        assert_relative_eq!(f.beckmann_value(3.0), 18.0);
        assert_eq!(f.second_derivative(0.0), 0.0);
        assert_eq!(f.second_derivative(-1.0), -4.0);
        assert!(f.is_homogeneous());
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences() {
        let f = AnalyticMarginal::polynomial(vec![0.5, 1.0, -0.3, 0.2, 0.05]);
        for &x in &[-1.3, 0.0, 0.7, 2.1] {
            let h = 1e-5;
            let d1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let d2 = (f.derivative(x + h) - f.derivative(x - h)) / (2.0 * h);
            let di = (f.integral(x + h) - f.integral(x - h)) / (2.0 * h);
            assert_relative_eq!(f.derivative(x), d1, epsilon = 1e-8);
            assert_relative_eq!(f.second_derivative(x), d2, epsilon = 1e-8);
            assert_relative_eq!(f.value(x), di, epsilon = 1e-8);
        }
    }

    #[test]
    fn system_optimal_marginal() {
        let f = AnalyticMarginal::bpr(2.0, 0.15, 3.0, 4);
        let so = f.system_optimal();
        for &x in &[0.0, 1.0, 4.5] {
            assert_relative_eq!(so.value(x), f.value(x) + x * f.derivative(x), max_relative = 1e-13);
        }
        let g = AnalyticMarginal::polynomial(vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(g.system_optimal().value(2.0), g.value(2.0) + 2.0 * g.derivative(2.0));
    }
}
