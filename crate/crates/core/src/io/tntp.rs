//! TNTP network and trips files.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{InstanceBundle, InstanceClass};
use crate::cost::AnalyticMarginal;
use crate::error::{Error, Result};
use crate::network::{Mode, Network};

/// Total trips are divided by this to get the single-commodity rate.
pub const TRIPS_DIVISOR: f64 = 10.0;

/// Tag → (line, value).
type Tags = BTreeMap<String, (usize, String)>;

fn metadata(text: &str) -> Result<(Tags, usize)> {
    let mut tags = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if line.starts_with("<END OF METADATA>") {
            return Ok((tags, i + 1));
        }
        if let Some(rest) = line.strip_prefix('<') {
            let close = rest
                .find('>')
                .ok_or_else(|| Error::parse(i + 1, "unterminated metadata tag"))?;
            tags.insert(
                rest[..close].trim().to_string(),
                (i + 1, rest[close + 1..].trim().to_string()),
            );
        } else {
            return Err(Error::parse(i + 1, "data before <END OF METADATA>"));
        }
    }
    Err(Error::parse(text.lines().count(), "missing <END OF METADATA>"))
}

fn tag_count(tags: &BTreeMap<String, (usize, String)>, name: &str) -> Result<usize> {
    let (line, value) = tags
        .get(name)
        .ok_or_else(|| Error::parse(1, format!("missing <{name}>")))?;
    value
        .parse::<f64>()
        .ok()
        .filter(|v| *v >= 0.0 && v.fract() == 0.0)
        .map(|v| v as usize)
        .ok_or_else(|| Error::parse(*line, format!("<{name}> is not a count: {value}")))
}

fn number(field: &str, line: usize, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(line, format!("{what} is not a number: {field:?}")))
}

/// Parses a TNTP network into a directed BPR instance without demand (`rate = 0`).
///
/// Links with zero free-flow time are dropped, then vertices without links are removed
/// and the rest renumbered in label order.
pub fn parse_tntp(text: &str) -> Result<InstanceBundle> {
    let (tags, start) = metadata(text)?;
    let n_nodes = tag_count(&tags, "NUMBER OF NODES")?;
    let n_links = tag_count(&tags, "NUMBER OF LINKS")?;
    let mut links = Vec::with_capacity(n_links);
    for (i, raw) in text.lines().enumerate().skip(start) {
        let line_no = i + 1;
        let body = raw.split('~').next().unwrap_or("").trim();
        let body = body.trim_end_matches(';').trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < 7 {
            return Err(Error::parse(
                line_no,
                format!("link row has {} fields, need 7", fields.len()),
            ));
        }
        let init = number(fields[0], line_no, "init node")?;
        let term = number(fields[1], line_no, "term node")?;
        let cap = number(fields[2], line_no, "capacity")?;
        let fft = number(fields[4], line_no, "free flow time")?;
        let b = number(fields[5], line_no, "b")?;
        let power = number(fields[6], line_no, "power")?;
        for (name, v) in [("init node", init), ("term node", term)] {
            if v < 1.0 || v.fract() != 0.0 || v as usize > n_nodes {
                return Err(Error::parse(line_no, format!("{name} {v} outside 1..={n_nodes}")));
            }
        }
        if fft < 0.0 {
            return Err(Error::parse(line_no, format!("free flow time {fft} is negative")));
        }
        if cap <= 0.0 {
            return Err(Error::parse(line_no, format!("capacity {cap} must be positive")));
        }
        if b < 0.0 {
            return Err(Error::parse(line_no, format!("b {b} is negative")));
        }
        if power < 1.0 || power.fract() != 0.0 || power > 32.0 {
            return Err(Error::parse(
                line_no,
                format!("power {power} is not an integer in 1..=32"),
            ));
        }
        links.push((line_no, init as usize, term as usize, cap, fft, b, power as u32));
    }
    if links.len() != n_links {
        return Err(Error::parse(
            tags["NUMBER OF LINKS"].0,
            format!("<NUMBER OF LINKS> says {n_links}, found {}", links.len()),
        ));
    }
    links.retain(|l| l.4 > 0.0);
    let mut used = vec![false; n_nodes + 1];
    for l in &links {
        used[l.1] = true;
        used[l.2] = true;
    }
    let mut id = vec![usize::MAX; n_nodes + 1];
    let mut labels = Vec::new();
    for v in 1..=n_nodes {
        if used[v] {
            id[v] = labels.len();
            labels.push(v.to_string());
        }
    }
    let edges = links.iter().map(|l| (id[l.1], id[l.2])).collect();
    let costs = links
        .iter()
        .map(|l| AnalyticMarginal::bpr(l.4, l.5, l.3, l.6))
        .collect();
    let network = Network::new(labels.len(), edges, Mode::Directed).map_err(|e| match e {
        Error::InvalidNetwork(msg) => Error::parse(start, msg),
        other => other,
    })?;
    Ok(InstanceBundle {
        base: vec![0.0; network.n_vertices()],
        network,
        costs,
        rate: 0.0,
        class: InstanceClass::DirectedTraffic,
        labels,
    })
}

/// Sum of all entries of a TNTP trips file.
pub fn parse_trips_total(text: &str) -> Result<f64> {
    let (_, start) = metadata(text)?;
    let mut total = 0.0;
    let mut origin_seen = false;
    for (i, raw) in text.lines().enumerate().skip(start) {
        let line_no = i + 1;
        let line = raw.split('~').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            number(rest.trim(), line_no, "origin")?;
            origin_seen = true;
            continue;
        }
        if !origin_seen {
            return Err(Error::parse(line_no, "destination entries before any Origin line"));
        }
        for entry in line.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (dest, value) = entry
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected `dest : value`, got {entry:?}")))?;
            number(dest.trim(), line_no, "destination")?;
            let v = number(value.trim(), line_no, "trips")?;
            if v < 0.0 {
                return Err(Error::parse(line_no, format!("negative trips {v}")));
            }
            total += v;
        }
    }
    Ok(total)
}

/// TNTP text for a directed BPR bundle; parses back to the same numbers.
pub fn write_tntp(bundle: &InstanceBundle) -> Result<String> {
    let mut out = String::new();
    let n = bundle.network.n_vertices();
    let labels: Vec<usize> = bundle
        .labels
        .iter()
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| Error::invalid(format!("label {l} is not numeric")))
        })
        .collect::<Result<_>>()?;
    let max_label = labels.iter().copied().max().unwrap_or(n);
    writeln!(out, "<NUMBER OF ZONES> {max_label}").unwrap();
    writeln!(out, "<NUMBER OF NODES> {max_label}").unwrap();
    writeln!(out, "<FIRST THRU NODE> 1").unwrap();
    writeln!(out, "<NUMBER OF LINKS> {}", bundle.network.n_edges()).unwrap();
    writeln!(out, "<END OF METADATA>").unwrap();
    writeln!(
        out,
        "~\tinit\tterm\tcapacity\tlength\tfft\tb\tpower\tspeed\ttoll\ttype\t;"
    )
    .unwrap();
    for (&(u, v), f) in bundle.network.edges().iter().zip(&bundle.costs) {
        let AnalyticMarginal::Bpr { fft, b, cap, power } = f else {
            return Err(Error::invalid("TNTP output needs BPR costs"));
        };
        writeln!(
            out,
            "\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{}\t0\t0\t1\t;",
            labels[u], labels[v], cap, fft, fft, b, power
        )
        .unwrap();
    }
    Ok(out)
}
