use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};
use serde::Serialize;

use scnls::acceptance::{run_acceptance, AcceptanceOptions, CriterionResult, DEFAULT_SEED};
use scnls::config::RegimeConfig;
use scnls::dynamics::{solve, NLSParams, SolveOptions};
use scnls::grid::{gradient_norm, SpatialGrid};
use scnls::initial_data::{classify, separable_gradient_norm, synthesize, wavepacket_verdict};
use scnls::io;
use scnls::norms::{field_norm_report, phase_norm_report, NormReport};
use scnls::phase_space::{fourier_wigner, wigner_transform};
use scnls::regime::classify_regime;
use scnls::sweep::{epsilon_sweep, point_grid, SweepOptions};
use scnls::tables::{reproduce_tables, TablesOptions};
use scnls::{Error, Result};

#[derive(Parser)]
#[command(name = "scnls", version, about = "Semiclassical NLS experiments")]
struct Cli {
    /// Experiment configuration (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized corpora.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for independent sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one trajectory; writes frames.csv and conserved.csv.
    Solve {
        /// Semiclassical parameter; defaults to the first configured value.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Wigner raster and norms of the initial field or of the state at `--time`.
    Wigner {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        time: Option<f64>,
    },
    /// Regime of the coupling schedule and wavepacket diagnostics of the data.
    Classify,
    /// Full epsilon sweep; writes sweep.csv and summary.json.
    Sweep,
    /// Norm-scaling and transport tables.
    Tables {
        /// Skip the transport sweeps.
        #[arg(long)]
        norms_only: bool,
    },
    /// Run the acceptance suite.
    Verify,
}

fn load_config(cli: &Cli) -> Result<RegimeConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    RegimeConfig::from_path(path)
}

fn require_planar(cfg: &RegimeConfig) -> Result<()> {
    if cfg.dim > 2 {
        return Err(Error::Unsupported(format!(
            "{}-dimensional configurations can only be classified",
            cfg.dim
        )));
    }
    Ok(())
}

fn pick_epsilon(cfg: &RegimeConfig, epsilon: Option<f64>) -> Result<f64> {
    match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(Error::Config(format!("epsilon must be positive, got {e}"))),
        None => Ok(cfg.epsilons[0]),
    }
}

fn grid_for(cfg: &RegimeConfig, eps: f64, t_end: f64) -> Result<SpatialGrid> {
    let choice = point_grid(cfg, eps, t_end)?;
    SpatialGrid::new(cfg.dim, choice.points, choice.half_width)
}

fn solve_options(cfg: &RegimeConfig) -> SolveOptions {
    SolveOptions::default().with_dt(cfg.dt).with_stride(cfg.frame_stride)
}

fn run_solve(cli: &Cli, epsilon: Option<f64>) -> Result<bool> {
    let cfg = load_config(cli)?;
    require_planar(&cfg)?;
    let eps = pick_epsilon(&cfg, epsilon)?;
    let t_end = cfg.horizon.at(eps, cfg.data.effective_beta());
    let grid = grid_for(&cfg, eps, t_end)?;
    let params = NLSParams::new(eps, cfg.sigma, cfg.schedule.coupling(eps))?;
    for w in params.range_warnings(cfg.dim) {
        warn!("{w}");
    }
    let initial = synthesize(&cfg.data, eps, &grid)?;
    let traj = solve(&params, &initial, t_end, &solve_options(&cfg))?;
    io::write_frames_csv(&cli.out.join("frames.csv"), &traj)?;
    io::write_conserved_csv(&cli.out.join("conserved.csv"), &traj)?;
    println!(
        "eps = {eps}, b = {:.4e}, t_end = {t_end}, {} points on [-{}, {}), dt = {:.3e}, {} steps",
        params.b,
        grid.points_per_axis(),
        grid.half_width(),
        grid.half_width(),
        traj.dt,
        traj.steps
    );
    println!(
        "mass drift {:.3e}, energy drift {:.3e}, margin mass {:.3e}",
        traj.mass_drift(),
        traj.energy_drift(),
        traj.margin_mass
    );
    Ok(true)
}

#[derive(Serialize)]
struct WignerNorms {
    epsilon: f64,
    t: f64,
    field: NormReport,
    wigner: NormReport,
    fourier_wigner_sup: f64,
}

fn run_wigner(cli: &Cli, epsilon: Option<f64>, time: Option<f64>) -> Result<bool> {
    let cfg = load_config(cli)?;
    require_planar(&cfg)?;
    let eps = pick_epsilon(&cfg, epsilon)?;
    let t = time.unwrap_or(0.0);
    let grid = grid_for(&cfg, eps, t)?;
    let params = NLSParams::new(eps, cfg.sigma, cfg.schedule.coupling(eps))?;
    let mut field = synthesize(&cfg.data, eps, &grid)?;
    if t > 0.0 {
        field = solve(&params, &field, t, &solve_options(&cfg))?.last().clone();
    }
    let w = wigner_transform(&field)?;
    let norms = WignerNorms {
        epsilon: eps,
        t,
        field: field_norm_report(&field)?,
        wigner: phase_norm_report(&w.function),
        fourier_wigner_sup: fourier_wigner(&field)?.spectrum.max_abs(),
    };
    io::write_wigner_csv(&cli.out.join("wigner.csv"), &w)?;
    io::write_json(&cli.out.join("wigner_norms.json"), &norms)?;
    println!(
        "eps = {eps}, t = {t}: sup|W^| = {:.12}, A0(psi) = {:.6}, A1(W) = {:.6}",
        norms.fourier_wigner_sup, norms.field.a0, norms.wigner.a1
    );
    Ok(true)
}

fn run_classify(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let planar = cfg.dim <= 2;
    let report = classify_regime(&cfg, |eps| {
        if !planar {
            return separable_gradient_norm(&cfg.data, eps);
        }
        let grid = grid_for(&cfg, eps, 0.0)?;
        Ok(gradient_norm(&synthesize(&cfg.data, eps, &grid)?))
    })?;
    for line in report.lines() {
        println!("{line}");
    }
    if !planar {
        println!("initial-data diagnostics skipped for n = {}", cfg.dim);
        return Ok(true);
    }
    let mut sweep = Vec::new();
    println!("eps        ||psi||    ||psi||_H1  eps*||grad c||  spread     A0");
    for &eps in &cfg.epsilons {
        let grid = grid_for(&cfg, eps, 0.0)?;
        let field = synthesize(&cfg.data, eps, &grid)?;
        let d = classify(&field, &cfg.data.position, &cfg.data.wavenumber)?;
        println!(
            "{eps:<10} {:<10.6} {:<11.4e} {:<15.6} {:<10.6} {:.6}",
            d.l2_norm,
            d.h1_norm,
            eps * d.centered_gradient,
            d.centered_spread,
            d.a0_norm
        );
        sweep.push((eps, d));
    }
    let verdict = wavepacket_verdict(&sweep, Some(cfg.slope_threshold))?;
    println!(
        "centered gradient slope {:.4}, spread slope {:.4} (threshold {}): {}",
        verdict.gradient_fit.slope,
        verdict.spread_fit.slope,
        verdict.threshold,
        if verdict.is_wavepacket {
            "generalized wavepacket"
        } else {
            "not a wavepacket"
        }
    );
    Ok(true)
}

fn run_sweep(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    require_planar(&cfg)?;
    let options = SweepOptions {
        jobs: cli.jobs,
        record_timings: false,
    };
    let result = epsilon_sweep(&cfg, &options)?;
    io::write_sweep_csv(&cli.out.join("sweep.csv"), &result)?;
    io::write_json(&cli.out.join("summary.json"), &io::sweep_summary(&result))?;
    for v in &result.verdicts {
        let fit = v.fit.as_ref().map_or("no fit".to_string(), |f| {
            format!("slope {:.4}, R^2 {:.4}", f.slope, f.r_squared)
        });
        println!(
            "[{}] {}: {} ({}; {})",
            if v.pass { "PASS" } else { "FAIL" },
            v.metric,
            v.claim,
            v.rule,
            fit
        );
    }
    Ok(result.all_pass())
}

fn run_tables(cli: &Cli, norms_only: bool) -> Result<bool> {
    let base = if norms_only {
        TablesOptions::norms_only()
    } else {
        TablesOptions::default()
    };
    let report = reproduce_tables(&TablesOptions { jobs: cli.jobs, ..base })?;
    io::write_tables_csv(&cli.out.join("tables.csv"), &report)?;
    let text = report.render();
    std::fs::write(cli.out.join("tables.txt"), &text)?;
    print!("{text}");
    Ok(report.all_pass())
}

fn write_acceptance(out: &Path, results: &[CriterionResult]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        criterion: u32,
        name: &'a str,
        pass: bool,
        details: String,
    }
    let mut w = csv::Writer::from_path(out.join("acceptance.csv"))
        .map_err(|e| Error::Numerical(format!("cannot write acceptance.csv: {e}")))?;
    for r in results {
        w.serialize(Row {
            criterion: r.id,
            name: r.name,
            pass: r.pass,
            details: r.checks.join("; "),
        })
        .map_err(|e| Error::Numerical(format!("cannot write acceptance.csv: {e}")))?;
    }
    w.flush()?;
    io::write_json(&out.join("acceptance.json"), results)
}

fn run_verify(cli: &Cli) -> Result<bool> {
    std::fs::create_dir_all(&cli.out)?;
    let options = AcceptanceOptions {
        seed: cli.seed,
        jobs: cli.jobs,
    };
    let quiet = cli.quiet;
    let report = run_acceptance(&options, |r| {
        if !quiet {
            println!("{}", r.line());
        }
    });
    write_acceptance(&cli.out, &report.results)?;
    for (name, sweep) in &report.sweeps {
        io::write_sweep_csv(&cli.out.join(format!("{name}.csv")), sweep)?;
    }
    if let Some(tables) = &report.tables {
        io::write_tables_csv(&cli.out.join("tables_report.csv"), tables)?;
    }
    let passed = report.results.iter().filter(|r| r.pass).count();
    println!("{passed} of {} criteria pass", report.results.len());
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if cli.jobs == 0 {
        error!("--jobs must be at least 1");
        return ExitCode::from(2);
    }
    let outcome = match &cli.command {
        Command::Solve { epsilon } => run_solve(&cli, *epsilon),
        Command::Wigner { epsilon, time } => run_wigner(&cli, *epsilon, *time),
        Command::Classify => run_classify(&cli),
        Command::Sweep => run_sweep(&cli),
        Command::Tables { norms_only } => run_tables(&cli, *norms_only),
        Command::Verify => run_verify(&cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            info!("some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
