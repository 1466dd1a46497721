use paraflow::cost::{linear_spline, mca_mesh, mesh_audit, Mesh, PiecewiseLinearMarginal, Rule, StepBudget};
use paraflow::{AnalyticMarginal, Marginal, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random marginal from one of the analytic families and its natural domain.
fn random_function(rng: &mut ChaCha8Rng) -> (AnalyticMarginal, Mode) {
    match rng.gen_range(0..3) {
        0 => (
            AnalyticMarginal::bpr(
                rng.gen_range(0.5..5.0),
                0.15,
                rng.gen_range(5.0..500.0),
                rng.gen_range(1..=4),
            ),
            Mode::Directed,
        ),
        1 => (
            AnalyticMarginal::weymouth(10f64.powf(rng.gen_range(-3.0..0.0))),
            Mode::Undirected,
        ),
        _ => {
            let deg = rng.gen_range(1..=4);
            let coeffs = (0..=deg)
                .map(|k| {
                    if k == 1 {
                        rng.gen_range(0.1..2.0)
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            (AnalyticMarginal::polynomial(coeffs), Mode::Directed)
        }
    }
}

fn random_mesh(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Mesh {
    let k = rng.gen_range(0..30);
    let mut pts: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| *a - *b < 1e-9);
    Mesh::new(pts).unwrap()
}

/// Cells of the spline itself; mesh points that are flat in floating point are not knots.
fn knots(s: &PiecewiseLinearMarginal, mesh: &Mesh) -> Vec<f64> {
    let mut k = vec![mesh.points[0]];
    k.extend_from_slice(s.breakpoints());
    k.push(*mesh.points.last().unwrap());
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spline_error_within_cell_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, mode) = random_function(&mut rng);
        let x_max = rng.gen_range(1.0..200.0);
        let lo = if mode == Mode::Undirected { -x_max } else { 0.0 };
        let mesh = random_mesh(&mut rng, lo, x_max);
        let s = linear_spline(&f, &mesh).unwrap();
        let fscale = mesh.points.iter().fold(1.0f64, |m, &x| m.max(f.value(x).abs()));
        let knots = knots(&s, &mesh);
        for &x in &knots {
            prop_assert!((s.value(x) - f.value(x)).abs() <= 1e-14 * fscale);
        }
        for w in knots.windows(2) {
            let d = w[1] - w[0];
            let bound = 0.125 * d * d * f.max_abs_second_derivative(w[0], w[1]);
            let tol = 1e-12 * f.value(w[0]).abs().max(f.value(w[1]).abs()).max(1.0);
            for i in 1..16 {
                let x = w[0] + d * i as f64 / 16.0;
                let fx = f.value(x);
                let slack = bound - (fx - s.value(x)).abs();
                prop_assert!(slack >= -tol, "slack {} at {}", slack, x);
            }
        }
    }

    #[test]
    fn mca_meshes_pass_their_audit(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, mode) = random_function(&mut rng);
        let budget = StepBudget {
            alpha: 1.0 + 10f64.powf(rng.gen_range(-3.0..-1.0)),
            beta: 10f64.powf(rng.gen_range(-1.0..1.0)),
            m: rng.gen_range(1..50),
            x_max: rng.gen_range(1.0..100.0),
        };
        let rule = Rule::for_family(&f);
        let mesh = mca_mesh(&f, rule, &budget, mode).unwrap();
        prop_assert_eq!(*mesh.points.last().unwrap(), budget.x_max);
        let first = if mode == Mode::Undirected { -budget.x_max } else { 0.0 };
        prop_assert_eq!(mesh.points[0], first);
        prop_assert!(mesh_audit(&f, &mesh, rule, &budget).iter().all(|&s| s >= 0.0));
        if rule == Rule::II {
            let s = linear_spline(&f, &mesh).unwrap();
            for w in mesh.points.windows(2) {
                let x = 0.5 * (w[0] + w[1]);
                prop_assert!(s.value(x).abs() >= f.value(x).abs() * (1.0 - 1e-12));
            }
        }
    }
}
