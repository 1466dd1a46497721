//! `paraflow`: parametric minimum-cost flows from the command line.
//!
//! ```text
//! paraflow mca  --network data/SiouxFalls_net.tntp --trips data/SiouxFalls_trips.tntp --source 1 --sink 20 --out sf.json
//! paraflow mcfi --network data/gas40_synthetic.json --epsilon 0.0015 --format csv --samples 50
//! ```

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use paraflow::analysis::{poa_curve, uniform_grid};
use paraflow::io::{
    parse_gas_json, parse_tntp, parse_trips_total, sample_pairs, InstanceBundle, SolutionFile, SolutionFormat,
    TRIPS_DIVISOR,
};
use paraflow::{
    run_mca, run_mcfi, solve_fixed, ApproxParams, DemandFunction, EfpaOptions, Error, FwOptions, McfiOptions, Rule,
};

#[derive(Parser)]
#[command(
    name = "paraflow",
    version,
    about = "Parametric minimum-cost flows with certified error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spline approximation solved exactly over the whole λ range.
    Mca(Common),
    /// Interpolation of Frank-Wolfe solutions at adaptively chosen λ.
    Mcfi(Common),
    /// Price of anarchy curve of the instance.
    Poa(Common),
    /// Frank-Wolfe solution at the single demand λ = lambda-max.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// Network file: TNTP (traffic) or JSON (gas).
    #[arg(long)]
    network: PathBuf,
    /// TNTP trips file; sets the rate to total demand / 10.
    #[arg(long, conflicts_with = "rate")]
    trips: Option<PathBuf>,
    /// Source vertex label; sampled with --seed when omitted.
    #[arg(long, requires = "sink")]
    source: Option<String>,
    /// Sink vertex label.
    #[arg(long, requires = "source")]
    sink: Option<String>,
    /// Rate of the source-sink flow (gas networks default to half the scenario's total absolute injection).
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 1.01)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_max: f64,
    /// Frank-Wolfe relative gap (mcfi: chosen automatically when omitted; solve: 1e-6).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Force step rule i or ii instead of choosing per cost family.
    #[arg(long)]
    rule: Option<RuleArg>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Sampled λ values for CSV output and PoA curves.
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// Seed for sampling the source-sink pair.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    I,
    Ii,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct Loaded {
    bundle: InstanceBundle,
    demand: DemandFunction,
    source: usize,
    sink: usize,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(args: &Common) -> Result<Loaded> {
    let text = read(&args.network)?;
    let is_json = args.network.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut bundle = if is_json {
        parse_gas_json(&text)
    } else {
        parse_tntp(&text)
    }
    .with_context(|| format!("parsing {}", args.network.display()))?;
    if let Some(trips) = &args.trips {
        let total = parse_trips_total(&read(trips)?).with_context(|| format!("parsing {}", trips.display()))?;
        bundle.rate = total / TRIPS_DIVISOR;
    }
    if let Some(rate) = args.rate {
        bundle.rate = rate;
    }
    if bundle.rate <= 0.0 && bundle.base.iter().all(|&v| v == 0.0) {
        bail!(Error::Invalid("no demand: pass --trips or --rate".into()));
    }
    let (source, sink) = match (&args.source, &args.sink) {
        (Some(s), Some(t)) => (bundle.vertex(s)?, bundle.vertex(t)?),
        _ => sample_pairs(bundle.network.n_vertices(), 1, args.seed)?[0],
    };
    let demand = bundle.demand(source, sink, args.lambda_max)?;
    Ok(Loaded {
        bundle,
        demand,
        source,
        sink,
    })
}

fn params(args: &Common) -> ApproxParams {
    ApproxParams {
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.epsilon,
        rule: args.rule.map(|r| match r {
            RuleArg::I => Rule::I,
            RuleArg::Ii => Rule::II,
        }),
    }
}

fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    let (Command::Mca(args) | Command::Mcfi(args) | Command::Poa(args) | Command::Solve(args)) = &cli.command;
    let loaded = load(args)?;
    let inst = loaded.bundle.instance()?;
    let d = &loaded.demand;
    let labels = &loaded.bundle.labels;
    eprintln!(
        "{} vertices, {} edges, source {} sink {} rate {}",
        inst.network.n_vertices(),
        inst.n_edges(),
        labels[loaded.source],
        labels[loaded.sink],
        loaded.bundle.rate
    );
    let format = match args.format {
        Format::Json => SolutionFormat::Json,
        Format::Csv => SolutionFormat::Csv,
    };
    let text = match &cli.command {
        Command::Mca(_) => {
            let out = run_mca(&inst, d, &params(args), EfpaOptions::default())?;
            eprintln!(
                "{} segments, {} mesh points",
                out.solution.segments.len(),
                out.mesh.points.iter().sum::<usize>()
            );
            solution_text(&SolutionFile::Parametric(out.solution), format, args.samples)?
        }
        Command::Mcfi(_) => {
            let p = params(args);
            let opts = McfiOptions {
                rule: p.rule,
                ..McfiOptions::default()
            };
            let sol = run_mcfi(&inst, d, &p, &opts)?;
            eprintln!("{} breakpoints, epsilon {}", sol.breakpoints.len(), sol.epsilon);
            solution_text(&SolutionFile::Interpolated(sol), format, args.samples)?
        }
        Command::Poa(_) => {
            let grid = uniform_grid(0.0, args.lambda_max, args.samples.max(2));
            let curve = poa_curve(&inst, d, &params(args), Some(&grid), EfpaOptions::default())?;
            match format {
                SolutionFormat::Json => serde_json::to_string(&curve)?,
                SolutionFormat::Csv => csv_table(&["lambda", "poa"], curve.points.iter().map(|&(l, p)| vec![l, p])),
            }
        }
        Command::Solve(_) => {
            let b = d.at(args.lambda_max)?;
            let opts = FwOptions::with_epsilon(args.epsilon.unwrap_or(1e-6));
            let r = solve_fixed(&inst, &b, &opts, None)?;
            eprintln!("{} iterations, relative gap {:e}", r.iterations, r.relative_gap());
            match format {
                SolutionFormat::Json => serde_json::to_string(&serde_json::json!({
                    "lambda": args.lambda_max,
                    "flow": r.flow,
                    "upper_cost": r.upper_cost,
                    "lower_bound": r.lower_bound,
                    "iterations": r.iterations,
                }))?,
                SolutionFormat::Csv => csv_table(
                    &["edge", "flow"],
                    r.flow.iter().enumerate().map(|(e, &x)| vec![e as f64, x]),
                ),
            }
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solution_text(sol: &SolutionFile, format: SolutionFormat, samples: usize) -> Result<String> {
    Ok(match format {
        SolutionFormat::Json => sol.to_json()?,
        SolutionFormat::Csv => sol.to_csv(samples)?,
    })
}

/// 2 input, 3 infeasible, 4 no convergence, 5 resource cap.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        return match e {
            Error::Infeasible(_) | Error::Singular => 3,
            Error::NoConvergence { .. } => 4,
            Error::ResourceLimit(_) => 5,
            _ => 2,
        };
    }
    if err
        .chain()
        .any(|e| e.is::<std::io::Error>() || e.is::<serde_json::Error>())
    {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
