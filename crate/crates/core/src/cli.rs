//! Command-line surface: instance documents, subcommand dispatch, tables
//! on stdout and CSV on request.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error
//! (clap's default). Instance files are flat JSON documents with exactly
//! three keys, e.g. `{"alpha":1,"sigma_sq":0.25,"costs":[0.0018,0.015]}`;
//! costs may arrive in any order and are canonicalized ascending on load.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::centralized::solve_centralized;
use crate::decentralized::{
    decentralized_report, decentralized_social_cost, decentralized_variance,
    enumerate_equilibria, StabilityKind, DEFAULT_MAX_BRUTE_FORCE_N,
};
use crate::efficiency::price_of_stability;
use crate::error::{Error, Result};
use crate::experiments::{
    monte_carlo_variance, sweep_scaling, sweep_sigma, write_scaling_csv, write_sweep_csv, CsvMeta,
    DataDistribution, MonteCarloConfig,
};
use crate::model::{Coalition, ProblemInstance, Tolerance};

#[derive(Debug, Deserialize)]
struct InstanceDocument {
    alpha: Option<f64>,
    sigma_sq: Option<f64>,
    costs: Option<Vec<f64>>,
}

/// Parses a flat key-value instance document into a canonical instance.
pub fn parse_instance_str(text: &str) -> Result<ProblemInstance> {
    let doc: InstanceDocument =
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    let alpha = doc.alpha.ok_or(Error::MissingKey("alpha"))?;
    let sigma_sq = doc.sigma_sq.ok_or(Error::MissingKey("sigma_sq"))?;
    let costs = doc.costs.ok_or(Error::MissingKey("costs"))?;
    ProblemInstance::new(costs, sigma_sq, alpha)
}

pub fn parse_instance_path(path: &Path) -> Result<ProblemInstance> {
    parse_instance_str(&fs::read_to_string(path)?)
}

/// Emits an instance document with costs restored to their original input
/// order, so emit-then-parse round-trips to an identical instance.
pub fn emit_instance(instance: &ProblemInstance) -> String {
    let mut original = vec![0.0; instance.n()];
    for (sorted_pos, &orig_pos) in instance.labels().iter().enumerate() {
        original[orig_pos - 1] = instance.costs()[sorted_pos];
    }
    serde_json::json!({
        "alpha": instance.alpha(),
        "sigma_sq": instance.sigma_sq(),
        "costs": original,
    })
    .to_string()
}

/// Grid flag: `start:stop:step` (linear, inclusive) or `start:stop:*factor`
/// (geometric, inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Linear { start: f64, stop: f64, step: f64 },
    Geometric { start: f64, stop: f64, factor: f64 },
}

impl GridSpec {
    pub fn f64_values(&self) -> Vec<f64> {
        match *self {
            GridSpec::Linear { start, stop, step } => {
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
            GridSpec::Geometric { start, stop, factor } => {
                let mut values = Vec::new();
                let mut v = start;
                while v <= stop * (1.0 + 1e-12) {
                    values.push(v);
                    v *= factor;
                }
                values
            }
        }
    }

    pub fn usize_values(&self) -> Vec<usize> {
        let mut values: Vec<usize> = self
            .f64_values()
            .into_iter()
            .map(|v| v.round() as usize)
            .collect();
        values.dedup();
        values
    }
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:step or start:stop:*factor".into());
    }
    let start: f64 = parts[0].parse().map_err(|_| "invalid grid start")?;
    let stop: f64 = parts[1].parse().map_err(|_| "invalid grid stop")?;
    if !(start > 0.0) || stop < start {
        return Err("grid requires 0 < start <= stop".into());
    }
    if let Some(f) = parts[2].strip_prefix('*') {
        let factor: f64 = f.parse().map_err(|_| "invalid grid factor")?;
        if !(factor > 1.0) {
            return Err("geometric grid factor must exceed 1".into());
        }
        Ok(GridSpec::Geometric { start, stop, factor })
    } else {
        let step: f64 = parts[2].parse().map_err(|_| "invalid grid step")?;
        if !(step > 0.0) {
            return Err("grid step must be positive".into());
        }
        Ok(GridSpec::Linear { start, stop, step })
    }
}

fn parse_stability(s: &str) -> std::result::Result<StabilityKind, String> {
    match s {
        "nash" => Ok(StabilityKind::Nash),
        "robust" => Ok(StabilityKind::Robust),
        other => Err(format!("unknown stability notion `{other}` (nash|robust)")),
    }
}

fn parse_distribution(s: &str) -> std::result::Result<DataDistribution, String> {
    if s == "uniform01" {
        return Ok(DataDistribution::Uniform01);
    }
    if s == "point-mass" {
        return Ok(DataDistribution::PointMass(0.5));
    }
    if let Some(v) = s.strip_prefix("point-mass=") {
        let v: f64 = v.parse().map_err(|_| "invalid point-mass value")?;
        return Ok(DataDistribution::PointMass(v));
    }
    if let Some(p) = s.strip_prefix("bernoulli=") {
        let p: f64 = p.parse().map_err(|_| "invalid bernoulli parameter")?;
        if !(0.0..=1.0).contains(&p) {
            return Err("bernoulli parameter must lie in [0, 1]".into());
        }
        return Ok(DataDistribution::Bernoulli(p));
    }
    Err("expected uniform01, point-mass[=V] or bernoulli=P".into())
}

#[derive(Debug, Parser)]
#[command(
    name = "dp-coalitions",
    version,
    about = "Coalition formation for data sharing under local differential privacy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Socially optimal coalition and privacy levels under full centralization
    Centralized {
        /// Instance file (flat JSON: alpha, sigma_sq, costs)
        #[arg(long)]
        instance: PathBuf,
    },
    /// Enumerate all stable coalitions of the instance
    Equilibria {
        #[arg(long)]
        instance: PathBuf,
        /// Stability notion: nash | robust
        #[arg(long, value_parser = parse_stability, default_value = "nash")]
        stability: StabilityKind,
        /// Absolute comparison tolerance for the stability conditions
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Cap on exhaustive subset enumeration
        #[arg(long, default_value_t = DEFAULT_MAX_BRUTE_FORCE_N)]
        max_brute_force_n: usize,
    },
    /// Price of Stability against the centralized benchmark
    Pos {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_parser = parse_stability, default_value = "nash")]
        stability: StabilityKind,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_BRUTE_FORCE_N)]
        max_brute_force_n: usize,
    },
    /// Sweep sigma over a grid, emitting equilibrium existence per row (CSV)
    SweepSigma {
        /// Instance file; supplies costs and alpha (its sigma_sq is unused)
        #[arg(long)]
        instance: PathBuf,
        /// Grid start:stop:step over sigma
        #[arg(long, value_parser = parse_grid, default_value = "0.15:0.6:0.005")]
        grid: GridSpec,
        /// CSV destination (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep n on identical-cost instances and fit log-log exponents (CSV)
    SweepN {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Common cost parameter of every player
        #[arg(long)]
        cost: f64,
        #[arg(long)]
        sigma_sq: f64,
        #[arg(long, value_parser = parse_stability, default_value = "robust")]
        stability: StabilityKind,
        /// Grid start:stop:*factor (or start:stop:step) over n
        #[arg(long, value_parser = parse_grid, default_value = "16:2048:*2")]
        grid: GridSpec,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo check of the estimator variance at a coalition
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated member indices (ascending-cost order); grand
        /// coalition when omitted
        #[arg(long, value_delimiter = ',')]
        coalition: Option<Vec<usize>>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Data law: uniform01 | point-mass[=V] | bernoulli=P
        #[arg(long, value_parser = parse_distribution, default_value = "uniform01")]
        distribution: DataDistribution,
    },
}

/// Rounds to six significant digits for table output.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..7).contains(&mag) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Centralized { instance } => {
            let inst = parse_instance_path(instance)?;
            let sol = solve_centralized(&inst);
            println!("k_star: {}", sol.k_star);
            println!("coalition: {}", sol.coalition);
            if !sol.profile.is_empty() {
                let eps: Vec<String> = sol
                    .profile
                    .iter()
                    .map(|(i, e)| format!("{i}:{}", sig6(e)))
                    .collect();
                println!("epsilon: [{}]", eps.join(", "));
            }
            println!("social_cost: {}", sig6(sol.social_cost));
            match sol.variance {
                Some(v) => println!("variance: {}", sig6(v)),
                None => println!("variance: undefined (empty coalition)"),
            }
        }
        Command::Equilibria {
            instance,
            stability,
            tolerance,
            max_brute_force_n,
        } => {
            let inst = parse_instance_path(instance)?;
            let tol = Tolerance::new(*tolerance, Tolerance::default().rel_tol);
            let eqs = enumerate_equilibria(&inst, *stability, *max_brute_force_n, tol)?;
            println!("{} {stability}-stable coalition(s)", eqs.len());
            for s in &eqs {
                let sc = decentralized_social_cost(s, &inst)?;
                let var = decentralized_variance(s, &inst)?;
                println!("{s}  social_cost={} variance={}", sig6(sc), sig6(var));
            }
        }
        Command::Pos {
            instance,
            stability,
            tolerance,
            max_brute_force_n,
        } => {
            let inst = parse_instance_path(instance)?;
            let tol = Tolerance::new(*tolerance, Tolerance::default().rel_tol);
            let report = price_of_stability(&inst, *stability, *max_brute_force_n, tol)?;
            println!("pos_sc: {}", sig6(report.pos_sc));
            println!("pos_var: {}", sig6(report.pos_var));
            println!("decentral_coalition: {}", report.decentral_coalition);
            println!("central_k_star: {}", report.central_solution.k_star);
            println!(
                "central_social_cost: {}",
                sig6(report.central_solution.social_cost)
            );
            match report.central_solution.variance {
                Some(v) => println!("central_variance: {}", sig6(v)),
                None => println!("central_variance: undefined (empty coalition)"),
            }
            if let Some(bound) = report.bound_high_alpha {
                println!("pos_sc_bound_high_alpha: {}", sig6(bound));
            }
        }
        Command::SweepSigma {
            instance,
            grid,
            output,
        } => {
            let inst = parse_instance_path(instance)?;
            let rows = sweep_sigma(inst.costs(), inst.alpha(), &grid.f64_values())?;
            let meta = CsvMeta {
                seed: None,
                tolerance: Tolerance::default(),
            };
            write_sweep_csv(&mut open_output(output)?, &rows, &meta)?;
        }
        Command::SweepN {
            alpha,
            cost,
            sigma_sq,
            stability,
            grid,
            output,
        } => {
            let n_grid = grid.usize_values();
            let (rows, fits) = sweep_scaling(*alpha, *cost, *sigma_sq, &n_grid, *stability)?;
            let meta = CsvMeta {
                seed: None,
                tolerance: Tolerance::default(),
            };
            write_scaling_csv(&mut open_output(output)?, &rows, &meta)?;
            let mut fit_sink: Box<dyn Write> = if output.is_some() {
                Box::new(std::io::stdout())
            } else {
                Box::new(std::io::stderr())
            };
            for (name, fit) in [
                ("sc_central", fits.sc_central),
                ("var_central", fits.var_central),
                ("sc_decentral", fits.sc_decentral),
                ("var_decentral", fits.var_decentral),
                ("pos_sc", fits.pos_sc),
                ("pos_var", fits.pos_var),
            ] {
                writeln!(
                    fit_sink,
                    "fit {name}: slope={} r_squared={}",
                    sig6(fit.slope),
                    sig6(fit.r_squared)
                )?;
            }
        }
        Command::Simulate {
            instance,
            coalition,
            samples,
            seed,
            distribution,
        } => {
            let inst = parse_instance_path(instance)?;
            let coalition = match coalition {
                Some(members) => Coalition::new(members.iter().copied())?,
                None => inst.grand_coalition(),
            };
            let config = MonteCarloConfig {
                samples: *samples,
                seed: *seed,
                distribution: *distribution,
            };
            let out = monte_carlo_variance(&coalition, &inst, &config)?;
            let report = decentralized_report(&coalition, &inst)?;
            println!("coalition: {coalition}");
            println!("empirical_var: {}", sig6(out.empirical_var));
            println!("predicted: {}", sig6(out.predicted));
            println!("z_score: {}", sig6(out.z_score));
            println!("closed_form_var: {}", sig6(report.variance));
        }
    }
    Ok(())
}
