//! Command-line front end: convergence studies from config files plus
//! one-shot evaluations of the graph energy, the continuum target, the
//! TL1 distance, the slicing consistency check, and transport scaling
//! diagnostics. Results print as one-line JSON records (CSV for the
//! diagnostics table); progress and errors go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use bdgraphtv::continuum_tv::tv_eta;
use bdgraphtv::domain_sampling::{grid_reference, sample};
use bdgraphtv::experiments::{
    emit_report, fit_rate, interior_continuum_target, preflight_outputs, run_convergence_study,
    EpsRule, ExperimentConfig, THREADS_ENV,
};
use bdgraphtv::graph_energy::{gtv_celllist, gtv_naive, NodeField};
use bdgraphtv::slicing::verify_slicing_identity;
use bdgraphtv::transport::{
    build_transport_map, default_probe_dirs, scaling_diagnostics, tl1_solve, MapObjective,
    ScalingDiagnostics, Tl1Solver,
};
use bdgraphtv::{Error, QuadratureSpec, Result};

#[derive(Parser)]
#[command(
    name = "bdgraphtv",
    version,
    about = "Graph vectorial total variation on random point clouds: \
             studies, energies, transport diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the convergence study described by a config file and write
    /// CSV reports plus a plot into its output directory.
    Run {
        /// TOML study description (schema in the README).
        #[arg(long)]
        config: PathBuf,
        /// Also compute transport scaling diagnostics over the schedule
        /// (slower; fills diagnostics.csv).
        #[arg(long)]
        diagnostics: bool,
    },
    /// Evaluate the graph energy of one sampled cloud.
    Gtv {
        #[arg(long)]
        config: PathBuf,
        /// Sample size (default: largest schedule entry).
        #[arg(long)]
        n: Option<usize>,
        /// Sampling seed (default: first configured seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Interaction radius (default: the configured rule at n).
        #[arg(long)]
        eps: Option<f64>,
        /// Use the all-pairs reference evaluator instead of the
        /// neighbor-list one.
        #[arg(long)]
        naive: bool,
    },
    /// TL1 distance between the configured field carried by two
    /// independently sampled clouds.
    Tl1 {
        #[arg(long)]
        config: PathBuf,
        /// Atoms per cloud (default: smallest schedule entry).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed_a: u64,
        #[arg(long, default_value_t = 2)]
        seed_b: u64,
        #[arg(long, value_enum, default_value_t = SolverArg::Exact)]
        solver: SolverArg,
        /// Entropic regularization (sinkhorn solver only).
        #[arg(long, default_value_t = 0.01)]
        reg: f64,
    },
    /// Continuum energy target of the configured field.
    TvEta {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to the domain interior shrunk by the interaction
        /// range at this radius.
        #[arg(long)]
        interior_eps: Option<f64>,
    },
    /// Consistency check of the line decomposition of the nonlocal
    /// energy (pair sampling vs line sampling).
    SliceCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        mc_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scaling diagnostics of reference-to-sample transport maps over
    /// the configured schedule, as CSV on stdout.
    TransportDiagnostics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::MinSup)]
        objective: ObjectiveArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    Lp,
    Sinkhorn,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    MinSup,
    MinSum,
}

impl From<ObjectiveArg> for MapObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::MinSup => MapObjective::MinSup,
            ObjectiveArg::MinSum => MapObjective::MinSum,
        }
    }
}

fn main() -> ExitCode {
    init_thread_cap();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Applies the BDGRAPHTV_THREADS cap to the global worker pool (the
/// study runner builds its own capped pool; this covers everything
/// else).
fn init_thread_cap() {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        if let Ok(threads) = raw.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn load(config: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_file(config)
}

/// The interaction radius for `n`: the explicit flag, or the configured
/// rule (explicit rules only know radii for schedule entries).
fn resolve_eps(cfg: &ExperimentConfig, n: usize, flag: Option<f64>) -> Result<f64> {
    if let Some(eps) = flag {
        return Ok(eps);
    }
    match cfg.eps_rule() {
        EpsRule::PowerLaw { c, exponent } => {
            let nf = n as f64;
            Ok(c * (nf.ln() / nf).powf(*exponent))
        }
        EpsRule::Explicit(values) => cfg
            .n_schedule()
            .iter()
            .position(|&m| m == n)
            .map(|i| values[i])
            .ok_or_else(|| {
                Error::Config(format!(
                    "the explicit radius list has no entry for n = {n}; pass --eps"
                ))
            }),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            diagnostics,
        } => run_study(&config, diagnostics),
        Command::Gtv {
            config,
            n,
            seed,
            eps,
            naive,
        } => {
            let cfg = load(&config)?;
            let n = n.unwrap_or_else(|| *cfg.n_schedule().last().expect("validated nonempty"));
            let seed = seed.unwrap_or_else(|| cfg.seeds()[0]);
            let eps = resolve_eps(&cfg, n, eps)?;
            let cloud = sample(cfg.domain(), cfg.density(), n, seed)?;
            let nodes = NodeField::from_displacement(&cloud, cfg.field())?;
            let energy = if naive {
                gtv_naive(&cloud, &nodes, cfg.kernel(), eps)?
            } else {
                gtv_celllist(&cloud, &nodes, cfg.kernel(), eps)?
            };
            println!(
                "{}",
                json!({
                    "command": "gtv",
                    "n": n,
                    "eps": eps,
                    "seed": seed,
                    "value": energy.value,
                    "pair_count": energy.pair_count,
                })
            );
            Ok(())
        }
        Command::Tl1 {
            config,
            n,
            seed_a,
            seed_b,
            solver,
            reg,
        } => {
            let cfg = load(&config)?;
            let n = n.unwrap_or_else(|| cfg.n_schedule()[0]);
            let solver = match solver {
                SolverArg::Exact => Tl1Solver::ExactAssignment,
                SolverArg::Lp => Tl1Solver::Lp,
                SolverArg::Sinkhorn => Tl1Solver::Sinkhorn { reg },
            };
            let cloud_a = sample(cfg.domain(), cfg.density(), n, seed_a)?;
            let cloud_b = sample(cfg.domain(), cfg.density(), n, seed_b)?;
            let nodes_a = NodeField::from_displacement(&cloud_a, cfg.field())?;
            let nodes_b = NodeField::from_displacement(&cloud_b, cfg.field())?;
            let solution = tl1_solve((&nodes_a, &cloud_a), (&nodes_b, &cloud_b), solver)?;
            println!(
                "{}",
                json!({
                    "command": "tl1",
                    "n": n,
                    "seed_a": seed_a,
                    "seed_b": seed_b,
                    "value": solution.value,
                    "duality_gap": solution.duality_gap,
                    "plan_entries": solution.plan.entries().len(),
                })
            );
            Ok(())
        }
        Command::TvEta {
            config,
            interior_eps,
        } => {
            let cfg = load(&config)?;
            let spec = QuadratureSpec::default();
            let result = match interior_eps {
                None => tv_eta(cfg.field(), cfg.domain(), cfg.density(), cfg.kernel(), &spec)?,
                Some(eps) => interior_continuum_target(
                    cfg.field(),
                    cfg.domain(),
                    cfg.density(),
                    cfg.kernel(),
                    eps,
                    &spec,
                )?,
            };
            println!(
                "{}",
                json!({
                    "command": "tv-eta",
                    "interior_eps": interior_eps,
                    "value": result.value,
                    "volume_part": result.volume_part,
                    "jump_part": result.jump_part,
                    "quad_error": result.quad_error,
                })
            );
            Ok(())
        }
        Command::SliceCheck {
            config,
            eps,
            mc_nodes,
            seed,
        } => {
            let cfg = load(&config)?;
            let report = verify_slicing_identity(
                cfg.field(),
                cfg.domain(),
                cfg.density(),
                cfg.kernel(),
                eps,
                mc_nodes,
                seed,
            )?;
            println!(
                "{}",
                json!({
                    "command": "slice-check",
                    "eps": eps,
                    "mc_nodes": mc_nodes,
                    "seed": seed,
                    "lhs": report.lhs,
                    "rhs": report.rhs,
                    "rel_err": report.rel_err,
                    "lhs_std_error": report.lhs_std_error,
                    "rhs_std_error": report.rhs_std_error,
                    "lines": report.lines,
                })
            );
            Ok(())
        }
        Command::TransportDiagnostics { config, objective } => {
            let cfg = load(&config)?;
            let rows = diagnostics_over_schedule(&cfg, objective.into())?;
            println!("n,eps,sup_norm_ratio,first_diff_ratio,second_diff_ratio");
            for d in rows {
                println!(
                    "{},{},{},{},{}",
                    d.n, d.eps, d.sup_norm_ratio, d.first_diff_ratio, d.second_diff_ratio
                );
            }
            Ok(())
        }
    }
}

/// One diagnostics row per (n, seed): a map from the density's grid
/// reference onto the sampled cloud, probed at the schedule radius.
fn diagnostics_over_schedule(
    cfg: &ExperimentConfig,
    objective: MapObjective,
) -> Result<Vec<ScalingDiagnostics>> {
    let probes = default_probe_dirs(cfg.domain().dim());
    let mut rows = Vec::new();
    for (n, eps) in cfg.eps_schedule() {
        let reference = grid_reference(cfg.domain(), cfg.density(), n)?;
        for &seed in cfg.seeds() {
            let cloud = sample(cfg.domain(), cfg.density(), n, seed)?;
            let map = build_transport_map(&reference, &cloud, objective)?;
            rows.push(scaling_diagnostics(&map, eps, &probes)?);
        }
    }
    Ok(rows)
}

fn run_study(config: &Path, with_diagnostics: bool) -> Result<()> {
    let cfg = load(config)?;
    preflight_outputs(cfg.outputs())?;
    eprintln!(
        "study: {} sample sizes x {} seeds -> {}",
        cfg.n_schedule().len(),
        cfg.seeds().len(),
        cfg.outputs().display()
    );
    let table = run_convergence_study(&cfg)?;
    for f in &table.failures {
        eprintln!("cell n = {}, seed = {} failed: {}", f.n, f.seed, f.message);
    }
    let diagnostics = if with_diagnostics {
        diagnostics_over_schedule(&cfg, MapObjective::MinSup)?
    } else {
        Vec::new()
    };
    let paths = emit_report(&table, &diagnostics, cfg.outputs())?;
    let fit = fit_rate(&table.rows).ok();
    println!(
        "{}",
        json!({
            "command": "run",
            "rows": table.rows.len(),
            "failures": table.failures.len(),
            "results": paths.results,
            "interior_results": paths.interior_results,
            "diagnostics": paths.diagnostics,
            "plot": paths.plot,
            "fit": fit.map(|f| json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "r2": f.r2,
                "skipped": f.skipped,
            })),
        })
    );
    Ok(())
}
