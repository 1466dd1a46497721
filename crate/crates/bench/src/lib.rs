//! Shared fixtures for the solver benchmarks.

use std::path::PathBuf;

use paraflow::io::{parse_tntp, parse_trips_total, InstanceBundle, TRIPS_DIVISOR};
use paraflow::{DemandFunction, Instance, Mode, Network, PiecewiseLinearMarginal, PwqInstance};

/// Path of a file in the repository's `data/` directory.
pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Triangle with two-part piecewise-linear marginals, demand 0 → 2 on `[0, 6]`.
pub fn triangle() -> (PwqInstance, DemandFunction) {
    let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
    let pl =
        |tau: f64, a: f64, b: f64| PiecewiseLinearMarginal::from_parts(vec![tau], vec![1.0, a], vec![0.0, b]).unwrap();
    let inst = Instance::new(net, vec![pl(3.0, 5.0, -12.0), pl(2.0, 3.0, -4.0), pl(1.0, 4.0, -3.0)]).unwrap();
    (inst, DemandFunction::source_sink(3, 0, 2, 1.0, 6.0).unwrap())
}

/// Sioux Falls with the rate taken from the trips file.
pub fn sioux_falls() -> InstanceBundle {
    let read = |name| std::fs::read_to_string(data_file(name)).unwrap();
    let mut bundle = parse_tntp(&read("SiouxFalls_net.tntp")).unwrap();
    bundle.rate = parse_trips_total(&read("SiouxFalls_trips.tntp")).unwrap() / TRIPS_DIVISOR;
    bundle
}

/// `k × k` grid graph with unit conductances.
pub fn grid(k: usize) -> (Network, Vec<f64>) {
    let id = |r: usize, c: usize| r * k + c;
    let mut edges = Vec::new();
    for r in 0..k {
        for c in 0..k {
            if c + 1 < k {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < k {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let m = edges.len();
    (Network::new(k * k, edges, Mode::Undirected).unwrap(), vec![1.0; m])
}
