#![allow(dead_code)]

use paraflow::{AnalyticMarginal, DemandFunction, Instance, Mode, Network, PiecewiseLinearMarginal, PwqInstance};
use rand::Rng;

pub fn kinked_triangle() -> PwqInstance {
    let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
    let pl =
        |tau: f64, a: f64, b: f64| PiecewiseLinearMarginal::from_parts(vec![tau], vec![1.0, a], vec![0.0, b]).unwrap();
    Instance::new(net, vec![pl(3.0, 5.0, -12.0), pl(2.0, 3.0, -4.0), pl(1.0, 4.0, -3.0)]).unwrap()
}

pub fn kinked_triangle_demand() -> DemandFunction {
    DemandFunction::source_sink(3, 0, 2, 1.0, 6.0).unwrap()
}

/// s = 0, t = 2. The top link costs 1, the bottom path costs x; κ-sized slopes keep
/// every marginal strictly increasing and the reverse arc makes the graph strongly connected.
pub fn pigou() -> Instance<AnalyticMarginal> {
    let k = 1e-6;
    let net = Network::new(3, vec![(0, 2), (0, 1), (1, 2), (2, 0)], Mode::Directed).unwrap();
    let costs = vec![
        AnalyticMarginal::linear(1.0, k),
        AnalyticMarginal::linear(0.0, 1.0),
        AnalyticMarginal::linear(0.0, k),
        AnalyticMarginal::linear(10.0, k),
    ];
    Instance::new(net, costs).unwrap()
}

/// Continuous increasing marginal with the given slopes between `tau`, `f(0) = f0`.
pub fn pwl(tau: &[f64], slope: &[f64], f0: f64) -> PiecewiseLinearMarginal {
    let k = slope.len();
    let lo = |j: usize| if j == 0 { f64::NEG_INFINITY } else { tau[j - 1] };
    let hi = |j: usize| if j + 1 == k { f64::INFINITY } else { tau[j] };
    let value = |x: f64| {
        let (a, b, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
        f0 + sign
            * (0..k)
                .map(|j| slope[j] * (b.min(hi(j)) - a.max(lo(j))).max(0.0))
                .sum::<f64>()
    };
    let intercept = (0..k)
        .map(|j| {
            let anchor = if j == 0 {
                tau.first().copied().unwrap_or(0.0)
            } else {
                tau[j - 1]
            };
            value(anchor) - slope[j] * anchor
        })
        .collect();
    PiecewiseLinearMarginal::from_parts(tau.to_vec(), slope.to_vec(), intercept).unwrap()
}

fn random_marginal<R: Rng>(rng: &mut R, mode: Mode) -> PiecewiseLinearMarginal {
    let parts = rng.gen_range(1..=3);
    let mut tau: Vec<f64> = (1..parts)
        .map(|_| match mode {
            Mode::Undirected => rng.gen_range(-2.0..2.0),
            Mode::Directed => rng.gen_range(0.05..3.0),
        })
        .collect();
    tau.sort_by(f64::total_cmp);
    tau.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let slope: Vec<f64> = (0..=tau.len()).map(|_| rng.gen_range(0.3..3.0)).collect();
    match mode {
        Mode::Undirected => pwl(&tau, &slope, 0.0),
        Mode::Directed => {
            let f0 = if rng.gen_bool(0.7) {
                rng.gen_range(0.0..1.5)
            } else {
                0.0
            };
            pwl(&tau, &slope, f0).with_bounds(Some(0.0), None).unwrap()
        }
    }
}

/// Connected (strongly connected when directed) graph on `n` vertices.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize, mode: Mode) -> Network {
    let mut edges = Vec::new();
    match mode {
        Mode::Undirected => {
            for v in 1..n {
                edges.push((rng.gen_range(0..v), v));
            }
        }
        Mode::Directed => {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            for i in 0..n {
                edges.push((order[i], order[(i + 1) % n]));
            }
        }
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !edges.contains(&(u, v)) && !edges.contains(&(v, u)) {
            edges.push((u, v));
        }
    }
    Network::new(n, edges, mode).unwrap()
}

pub fn random_balanced<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    for v in &mut b {
        *v -= mean;
    }
    let fix = -b[..n - 1].iter().sum::<f64>();
    b[n - 1] = fix;
    b
}

/// Random piecewise-quadratic instance with `b0 = 0`, solvable from zero flow.
pub fn random_pwq<R: Rng>(rng: &mut R, max_n: usize, mode: Mode) -> (PwqInstance, DemandFunction) {
    let n = rng.gen_range(2..=max_n);
    let extra = rng.gen_range(0..=n);
    let net = random_graph(rng, n, extra, mode);
    let costs = (0..net.n_edges()).map(|_| random_marginal(rng, mode)).collect();
    let b = if rng.gen_bool(0.5) {
        random_balanced(rng, n)
    } else {
        let s = rng.gen_range(0..n);
        let t = (s + rng.gen_range(1..n)) % n;
        let mut b = vec![0.0; n];
        b[s] = -1.0;
        b[t] = 1.0;
        b
    };
    let lambda_max = rng.gen_range(1.0..5.0);
    let demand = DemandFunction::new(vec![0.0; n], b, lambda_max).unwrap();
    (Instance::new(net, costs).unwrap(), demand)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Whether the edge subset connects all vertices.
pub fn connects(n: usize, edges: &[(usize, usize)], subset: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while p[r] != r {
            r = p[r];
        }
        p[v] = r;
        r
    }
    let mut comps = n;
    for &e in subset {
        let (a, b) = (find(&mut parent, edges[e].0), find(&mut parent, edges[e].1));
        if a != b {
            parent[a] = b;
            comps -= 1;
        }
    }
    comps == 1
}
