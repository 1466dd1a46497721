//! Gas networks as JSON.
//!
//! ```json
//! {"nodes": ["a", "b"],
//!  "pipes": [{"from": "a", "to": "b", "beta": 0.5}],
//!  "scenario": {"a": -5.0, "b": 5.0}}
//! ```
//!
//! Scenario values are net extractions (positive at exits); missing nodes default to 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InstanceBundle, InstanceClass};
use crate::cost::AnalyticMarginal;
use crate::error::{Error, Result};
use crate::network::{Mode, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipe {
    pub from: String,
    pub to: String,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasFile {
    pub nodes: Vec<String>,
    pub pipes: Vec<Pipe>,
    #[serde(default)]
    pub scenario: BTreeMap<String, f64>,
}

pub fn parse_gas_json(text: &str) -> Result<InstanceBundle> {
    let file: GasFile = serde_json::from_str(text)?;
    let index: BTreeMap<&str, usize> = file.nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    if index.len() != file.nodes.len() {
        return Err(Error::invalid("duplicate node names"));
    }
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown node {name:?}")))
    };
    let mut edges = Vec::with_capacity(file.pipes.len());
    let mut costs = Vec::with_capacity(file.pipes.len());
    for (i, p) in file.pipes.iter().enumerate() {
        if !(p.beta > 0.0) || !p.beta.is_finite() {
            return Err(Error::invalid(format!("pipe {i}: beta = {} must be positive", p.beta)));
        }
        edges.push((lookup(&p.from)?, lookup(&p.to)?));
        costs.push(AnalyticMarginal::weymouth(p.beta));
    }
    let mut base = vec![0.0; file.nodes.len()];
    for (name, &v) in &file.scenario {
        if !v.is_finite() {
            return Err(Error::invalid(format!("scenario value at {name:?} is not finite")));
        }
        base[lookup(name)?] = v;
    }
    let sum: f64 = base.iter().sum();
    let abs: f64 = base.iter().map(|v| v.abs()).sum();
    if sum.abs() > 1e-6 * abs {
        return Err(Error::Unbalanced { sum });
    }
    let network = Network::new(file.nodes.len(), edges, Mode::Undirected)?;
    Ok(InstanceBundle {
        network,
        costs,
        rate: 0.5 * abs,
        base,
        class: InstanceClass::UndirectedGas,
        labels: file.nodes,
    })
}

pub fn write_gas_json(bundle: &InstanceBundle) -> Result<String> {
    let name = |v: usize| bundle.labels[v].clone();
    let pipes = bundle
        .network
        .edges()
        .iter()
        .zip(&bundle.costs)
        .map(|(&(u, v), f)| match f {
            AnalyticMarginal::Weymouth { beta } => Ok(Pipe {
                from: name(u),
                to: name(v),
                beta: *beta,
            }),
            _ => Err(Error::invalid("gas output needs Weymouth costs")),
        })
        .collect::<Result<_>>()?;
    let scenario = bundle
        .base
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(v, &b)| (name(v), b))
        .collect();
    let file = GasFile {
        nodes: bundle.labels.clone(),
        pipes,
        scenario,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_rate() {
        let text = r#"{"nodes":["s","t"],"pipes":[{"from":"s","to":"t","beta":1.0}],"scenario":{"s":-5,"t":5}}"#;
        let b = parse_gas_json(text).unwrap();
        assert_eq!(b.rate, 5.0);
        assert_eq!(b.base, vec![-5.0, 5.0]);
        assert_eq!(b.network.mode(), Mode::Undirected);
    }

    #[test]
    fn rejects_bad_input() {
        let unbalanced = r#"{"nodes":["s","t"],"pipes":[{"from":"s","to":"t","beta":1.0}],"scenario":{"s":-5,"t":4}}"#;
        assert!(matches!(parse_gas_json(unbalanced), Err(Error::Unbalanced { .. })));
        let beta = r#"{"nodes":["s","t"],"pipes":[{"from":"s","to":"t","beta":0.0}]}"#;
        assert!(parse_gas_json(beta).is_err());
        let node = r#"{"nodes":["s","t"],"pipes":[{"from":"s","to":"x","beta":1.0}]}"#;
        assert!(parse_gas_json(node).is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"nodes":["a","b","c"],"pipes":[{"from":"a","to":"b","beta":0.1},{"from":"b","to":"c","beta":0.30000000000000004}],"scenario":{"a":-1.5,"c":1.5}}"#;
        let b = parse_gas_json(text).unwrap();
        let again = parse_gas_json(&write_gas_json(&b).unwrap()).unwrap();
        assert_eq!(b.costs, again.costs);
        assert_eq!(b.base, again.base);
        assert_eq!(b.labels, again.labels);
    }
}
