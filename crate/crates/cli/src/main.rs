//! Command-line front end for the urn-ldp library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 spec validation
//! failure, 4 numerical non-convergence or failed verification, 5 I/O
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use urn_ldp::{
    cramer_local_rate, derive_seed, exact_distribution, local_rate, merge_restarts,
    mogulskii_lagrangian, optimize_restart, scaled_lagrangian, simulate, xi_invert,
    EndpointEvent, Gauge, OptimizeOptions, Urn,
};
use urn_ldp_cli::emit::{csv_table, distribution_csv, to_json_string, RateResultDoc};
use urn_ldp_cli::spec_io::{self, LoadedSpec};
use urn_ldp_cli::{parallel, verify, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Urn spec file (JSON).
    #[arg(long, value_name = "PATH")]
    spec: Option<PathBuf>,

    /// Number of process steps.
    #[arg(long = "N", value_name = "INT")]
    n: Option<usize>,

    /// Path grid cells for the variational solver.
    #[arg(long = "T", value_name = "INT", default_value_t = 200)]
    t: usize,

    /// Master seed for anything sampled.
    #[arg(long, value_name = "INT", default_value_t = 0)]
    seed: u64,

    /// Grid resolution for tables.
    #[arg(long, value_name = "INT")]
    grid: Option<usize>,

    /// Probability floor inside logarithms (0 keeps exact infinities).
    #[arg(long, value_name = "FLOAT", default_value_t = 0.0)]
    floor: f64,

    /// Endpoint event as LO,HI.
    #[arg(long, value_name = "LO,HI")]
    event: Option<String>,

    /// Output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format (default: csv for tables, json for rate-endpoint).
    #[arg(long, value_enum, value_name = "csv|json")]
    format: Option<Format>,

    /// Worker threads for Monte Carlo batches and optimizer restarts.
    #[arg(long, value_name = "INT", default_value_t = 1)]
    threads: usize,

    /// Monte Carlo runs for the simulate histogram.
    #[arg(long, value_name = "INT", default_value_t = 10_000)]
    runs: u64,

    /// Optimizer restarts.
    #[arg(long, value_name = "INT", default_value_t = 8)]
    restarts: usize,

    /// Optimize even when some urn-function component vanishes (the rate
    /// surface then has infinite plateaus).
    #[arg(long, default_value_t = false)]
    allow_degenerate: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "urn-ldp",
    version,
    about = "Generalized HLS urns: exact laws, sampling, and sample-path rate functionals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an urn spec against its stochasticity invariants.
    Validate(CommonArgs),
    /// Sample histories and emit the histogram of the final total.
    Simulate(CommonArgs),
    /// Exact law of the final total by dynamic programming.
    ExactDist(CommonArgs),
    /// Tilt, free energy, and Mogulskii Lagrangian over a velocity grid.
    MogulskiiTable(CommonArgs),
    /// Scaled Lagrangian L(alpha, beta) over a grid.
    LagrangianTable(CommonArgs),
    /// Entropy density of an endpoint event via the variational solver.
    RateEndpoint(CommonArgs),
    /// Integrate the zero-cost flow and its per-cell rate profile.
    ZeroCost(CommonArgs),
    /// Candidate local rate against the classical Cramér rate on a grid.
    CompareCramer(CommonArgs),
    /// Run the built-in verification checks (deterministic given --seed).
    Verify(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::ExactDist(args) => cmd_exact_dist(&args),
        Command::MogulskiiTable(args) => cmd_mogulskii_table(&args),
        Command::LagrangianTable(args) => cmd_lagrangian_table(&args),
        Command::RateEndpoint(args) => cmd_rate_endpoint(&args),
        Command::ZeroCost(args) => cmd_zero_cost(&args),
        Command::CompareCramer(args) => cmd_compare_cramer(&args),
        Command::Verify(args) => cmd_verify(&args),
    }
}

// ---------------------------------------------------------------------------
// Argument plumbing
// ---------------------------------------------------------------------------

impl CommonArgs {
    fn loaded_spec(&self) -> Result<LoadedSpec, CliError> {
        let path = self
            .spec
            .as_ref()
            .ok_or_else(|| CliError::Config("--spec is required for this command".to_string()))?;
        spec_io::load_spec(path)
    }

    fn urn(&self) -> Result<(Urn, f64), CliError> {
        let loaded = self.loaded_spec()?;
        let psi_init = loaded.psi_init;
        let report = loaded.spec.validate();
        if !report.is_clean() {
            return Err(CliError::Validation(report.lines().join("\n")));
        }
        let urn = loaded.spec.into_urn().expect("clean report");
        Ok((urn, psi_init))
    }

    fn require_n(&self) -> Result<usize, CliError> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(CliError::Config("--N must be at least 1".to_string())),
            None => Err(CliError::Config("--N is required for this command".to_string())),
        }
    }

    fn parse_event(&self, capacity: usize) -> Result<EndpointEvent, CliError> {
        let text = self
            .event
            .as_ref()
            .ok_or_else(|| CliError::Config("--event LO,HI is required for this command".to_string()))?;
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 2 {
            return Err(CliError::Config(format!("--event expects LO,HI, got '{text}'")));
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("--event lo: {e}")))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("--event hi: {e}")))?;
        EndpointEvent::new(lo, hi, capacity).map_err(|e| CliError::Config(format!("--event: {e}")))
    }

    fn grid_or(&self, default: usize) -> Result<usize, CliError> {
        let g = self.grid.unwrap_or(default);
        if g < 2 {
            return Err(CliError::Config("--grid must be at least 2".to_string()));
        }
        Ok(g)
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn write_output(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let loaded = args.loaded_spec()?;
    let report = loaded.spec.validate();
    if report.is_clean() {
        args.write_output(&format!(
            "spec ok: K = {}, {} curves, grid {}\n",
            loaded.spec.capacity(),
            loaded.spec.components().len(),
            loaded.spec.grid_size()
        ))?;
        Ok(())
    } else {
        let mut text = String::new();
        for line in report.lines() {
            text.push_str(&line);
            text.push('\n');
        }
        args.write_output(&text)?;
        Err(CliError::Validation(format!("{} violation(s)", report.violations.len())))
    }
}

fn cmd_simulate(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, psi_init) = args.urn()?;
    let n = args.require_n()?;
    if args.runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".to_string()));
    }
    let seed = args.seed;
    let counts = parallel::map_indexed(args.runs as usize, args.threads, |run| {
        let h = simulate(&urn, n, psi_init, derive_seed(seed, run as u64)).expect("validated spec");
        h.final_sum() as usize
    });
    let mut histogram = vec![0u64; urn.capacity() * n + 1];
    for m in counts {
        histogram[m] += 1;
    }
    let probabilities: Vec<f64> = histogram.iter().map(|&c| c as f64 / args.runs as f64).collect();
    let text = match args.format_or(Format::Csv) {
        Format::Csv => distribution_csv(&probabilities, n),
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                n: u64,
                runs: u64,
                seed: u64,
                probability: Vec<f64>,
            }
            to_json_string(&Doc { n: n as u64, runs: args.runs, seed, probability: probabilities })?
        }
    };
    args.write_output(&text)
}

fn cmd_exact_dist(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, psi_init) = args.urn()?;
    let n = args.require_n()?;
    let dist = exact_distribution(&urn, n, psi_init)
        .map_err(|e| CliError::Config(format!("exact-dist: {e}")))?;
    let text = match args.format_or(Format::Csv) {
        Format::Csv => distribution_csv(&dist, n),
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                n: u64,
                probability: Vec<f64>,
            }
            to_json_string(&Doc { n: n as u64, probability: dist })?
        }
    };
    args.write_output(&text)
}

fn cmd_mogulskii_table(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, _) = args.urn()?;
    let capacity = urn.capacity();
    let grid = args.grid_or(512)?;
    let k = capacity as f64;
    let rows: Vec<Vec<f64>> = (1..grid)
        .map(|i| {
            let alpha = k * i as f64 / grid as f64;
            let sol = xi_invert(alpha, capacity).expect("interior alpha");
            vec![
                alpha,
                sol.xi,
                sol.beta_star,
                mogulskii_lagrangian(alpha, capacity, false),
                mogulskii_lagrangian(alpha, capacity, true),
            ]
        })
        .collect();
    let text = match args.format_or(Format::Csv) {
        Format::Csv => csv_table("alpha,xi,beta_star,L0_unshifted,L0_shifted", rows.into_iter()),
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                columns: Vec<&'static str>,
                rows: Vec<Vec<f64>>,
            }
            to_json_string(&Doc {
                columns: vec!["alpha", "xi", "beta_star", "L0_unshifted", "L0_shifted"],
                rows,
            })?
        }
    };
    args.write_output(&text)
}

fn cmd_lagrangian_table(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, _) = args.urn()?;
    let grid = args.grid_or(64)?;
    let k = urn.capacity_f64();
    let mut rows = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let alpha = k * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let beta = k * j as f64 / (grid - 1) as f64;
            let l = scaled_lagrangian(&urn, alpha, beta, args.floor).unwrap_or(f64::NAN);
            rows.push(vec![alpha, beta, l]);
        }
    }
    let text = csv_table("alpha,beta,L", rows.into_iter());
    args.write_output(&text)
}

fn rate_profile_csv(urn: &Urn, path: &urn_ldp::DiscretePath, floor: f64) -> String {
    let t = path.grid_size();
    csv_table(
        "j,tau,velocity,psi,local_rate,cramer_rate",
        (0..t).map(|j| {
            let v = path.velocity(j);
            let psi = path.psi_mid(j);
            let rate = local_rate(urn, v, psi, floor).unwrap_or(f64::NAN);
            vec![
                j as f64,
                (j as f64 + 0.5) / t as f64,
                v,
                psi,
                rate,
                cramer_local_rate(urn, v, psi),
            ]
        }),
    )
}

fn cmd_rate_endpoint(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, _) = args.urn()?;
    let event = args.parse_event(urn.capacity())?;
    if args.t < 1 {
        return Err(CliError::Config("--T must be at least 1".to_string()));
    }
    let options = OptimizeOptions {
        restarts: args.restarts.max(1),
        floor: args.floor,
        allow_infinite_cells: args.allow_degenerate,
        gauge: Gauge::Shifted,
        ..Default::default()
    };
    let outcomes = parallel::try_map_indexed(options.restarts, args.threads, |index| {
        optimize_restart(&urn, &event, args.t, &options, index)
    })
    .map_err(|e| match e {
        urn_ldp::VariationalError::DegenerateSpec { .. } => CliError::Validation(format!(
            "{e}\nhint: pass --allow-degenerate or a positive --floor"
        )),
        other => CliError::Config(format!("{other}")),
    })?;
    let result = merge_restarts(&urn, &event, &options, outcomes)
        .map_err(|e| CliError::Config(format!("{e}")))?;

    let text = match args.format_or(Format::Json) {
        Format::Json => to_json_string(&RateResultDoc::from(&result))?,
        Format::Csv => rate_profile_csv(&urn, &result.optimal_path, args.floor),
    };
    args.write_output(&text)?;
    if result.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "optimizer did not converge: {} iterations, restart spread {:.3e}",
            result.iterations, result.restarts_agreement
        )))
    }
}

fn cmd_zero_cost(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, _) = args.urn()?;
    if args.t < 1 {
        return Err(CliError::Config("--T must be at least 1".to_string()));
    }
    let flow = urn_ldp::zero_cost_flow(&urn, args.t);
    let text = match args.format_or(Format::Csv) {
        Format::Csv => {
            let t = flow.path.grid_size();
            csv_table(
                "j,tau,velocity,psi,local_rate,cramer_rate",
                (0..t).map(|j| {
                    vec![
                        j as f64,
                        (j as f64 + 0.5) / t as f64,
                        flow.path.velocity(j),
                        flow.path.psi_mid(j),
                        flow.cell_rates[j],
                        flow.cramer_rates[j],
                    ]
                }),
            )
        }
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                initial_velocity: f64,
                initial_candidates: Vec<f64>,
                continuum_initial: bool,
                path: Vec<f64>,
                cell_rates: Vec<f64>,
                cramer_rates: Vec<f64>,
            }
            to_json_string(&Doc {
                initial_velocity: flow.initial_velocity,
                initial_candidates: flow.initial_candidates.clone(),
                continuum_initial: flow.continuum_initial,
                path: flow.path.values().to_vec(),
                cell_rates: flow.cell_rates.clone(),
                cramer_rates: flow.cramer_rates.clone(),
            })?
        }
    };
    args.write_output(&text)
}

fn cmd_compare_cramer(args: &CommonArgs) -> Result<(), CliError> {
    let (urn, _) = args.urn()?;
    let grid = args.grid_or(64)?;
    let k = urn.capacity_f64();
    let mut rows = Vec::with_capacity(grid * grid);
    let mut min_margin = f64::INFINITY;
    let mut undercuts = 0u64;
    let mut infinite_cells = 0u64;
    for i in 0..grid {
        let alpha = k * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let beta = k * j as f64 / (grid - 1) as f64;
            let candidate = local_rate(&urn, alpha, beta, args.floor).unwrap_or(f64::NAN);
            let classical = cramer_local_rate(&urn, alpha, beta);
            if candidate.is_finite() && classical.is_finite() {
                let margin = candidate - classical;
                if margin < min_margin {
                    min_margin = margin;
                }
                if margin < -1e-9 {
                    undercuts += 1;
                }
            } else {
                infinite_cells += 1;
            }
            rows.push(vec![alpha, beta, candidate, classical]);
        }
    }
    let summary = format!(
        "# {}x{grid} grid: min(local - cramer) = {min_margin:.6e}, undercuts beyond 1e-9: {undercuts}, non-finite pairs: {infinite_cells}",
        grid
    );
    let text = match args.format_or(Format::Csv) {
        Format::Csv => {
            let table = csv_table("alpha,beta,local_rate,cramer_rate", rows.into_iter());
            eprintln!("{summary}");
            table
        }
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Doc {
                grid: u64,
                min_margin: f64,
                undercuts: u64,
                non_finite_pairs: u64,
            }
            to_json_string(&Doc {
                grid: grid as u64,
                min_margin,
                undercuts,
                non_finite_pairs: infinite_cells,
            })?
        }
    };
    args.write_output(&text)
}

fn cmd_verify(args: &CommonArgs) -> Result<(), CliError> {
    let (report, all_passed) = verify::run(args.seed);
    args.write_output(&report)?;
    if args.out.is_some() {
        // Mirror to stdout so the run is observable either way.
        print!("{report}");
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::NonConvergence("verification checks failed".to_string()))
    }
}
