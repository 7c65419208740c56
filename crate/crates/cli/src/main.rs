use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rxdesign::config::DesignConfig;
use rxdesign::fmt::sig9;
use rxdesign::geometry::max_pd_side;
use rxdesign::optimizer::{feasible_region, solve_global, DesignSolution, Problem};
use rxdesign::oracle::{linspace, mc_average_snr, Combiner, McSpec};
use rxdesign::report::DesignReport;
use rxdesign::validation::{run_all, BatteryOptions};
use rxdesign::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Optimal design of lensed photodetector-array receivers for optical
/// wireless links.
#[derive(Debug, Parser)]
#[command(name = "rxdesign", version)]
struct Cli {
    /// Design configuration; defaults to the bundled OOK receiver.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte-Carlo and randomised checks.
    #[arg(long, global = true, default_value_t = 0x5eed_2024)]
    seed: u64,
    /// Emit JSON instead of CSV or text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimise the receiver and print the design report.
    Design {
        /// Print a short human-readable summary instead of the report.
        #[arg(long)]
        summary: bool,
    },
    /// Optimised rate of every configuration over a range of required FOVs.
    Sweep {
        #[arg(long, default_value_t = 10.0)]
        fov_min: f64,
        #[arg(long, default_value_t = 40.0)]
        fov_max: f64,
        #[arg(long, default_value_t = 1.0)]
        fov_step: f64,
    },
    /// Averaged SNR against lens-to-array distance, analytic and sampled.
    SnrCurve {
        #[arg(long, value_enum, default_value_t = CombinerArg::Both)]
        combiner: CombinerArg,
        /// Tilt samples per distance; 0 skips the Monte-Carlo columns.
        #[arg(long, default_value_t = 10_000)]
        mc_samples: usize,
        /// Number of distances between 0 and the back focal length.
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        pick: Pick,
    },
    /// Constraint check over a (d, L) grid.
    Feasible {
        /// Grid size as `<d nodes>x<L nodes>`.
        #[arg(long, default_value = "400x400", value_parser = parse_grid)]
        grid: (usize, usize),
        #[command(flatten)]
        pick: Pick,
    },
    /// Run the acceptance battery.
    Validate,
}

/// Receiver to inspect; defaults to the optimum of the configuration.
#[derive(Debug, clap::Args)]
struct Pick {
    #[arg(long)]
    n_pd: Option<u32>,
    #[arg(long)]
    n_a: Option<u32>,
    /// Detector side in µm (snr-curve only).
    #[arg(long)]
    d_um: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CombinerArg {
    Mrc,
    Egc,
    Both,
}

fn parse_grid(raw: &str) -> Result<(usize, usize), String> {
    let (a, b) = raw.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {raw:?}"))?;
    let n = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let m = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if n < 2 || m < 2 {
        return Err("each grid axis needs at least 2 nodes".into());
    }
    Ok((n, m))
}

enum Failure {
    Model(Error),
    Io(io::Error),
    Infeasible(String),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} acceptance check(s) failed");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(Failure::Model(e @ Error::InternalCheck(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(cli: &Cli) -> Result<DesignConfig, Failure> {
    Ok(match &cli.config {
        Some(path) => DesignConfig::load(path)?,
        None => DesignConfig::headline_ook(),
    })
}

fn output(cli: &Cli) -> io::Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Design { summary } => design(cli, *summary),
        Command::Sweep { fov_min, fov_max, fov_step } => sweep(cli, *fov_min, *fov_max, *fov_step),
        Command::SnrCurve { combiner, mc_samples, points, pick } => {
            snr_curve(cli, *combiner, *mc_samples, *points, pick)
        }
        Command::Feasible { grid, pick } => feasible(cli, *grid, pick),
        Command::Validate => validate(cli),
    }
}

fn design(cli: &Cli, summary: bool) -> Result<(), Failure> {
    let report = DesignReport::build(&load(cli)?)?;
    let mut out = output(cli)?;
    if summary {
        write!(out, "{}", report.summary())?;
    } else {
        writeln!(out, "{}", report.to_json())?;
    }
    out.flush()?;
    match &report.solution.infeasibility {
        Some(why) if !report.solution.feasible => Err(Failure::Infeasible(why.to_string())),
        _ => Ok(()),
    }
}

#[derive(serde::Serialize)]
struct SweepRow {
    fov_req_deg: f64,
    n_pd: u32,
    n_a: u32,
    d_opt_um: Option<f64>,
    l_lo_um: Option<f64>,
    l_hi_um: Option<f64>,
    rate_gbps: f64,
    feasible: bool,
}

fn sweep_row(fov: f64, s: &DesignSolution) -> SweepRow {
    SweepRow {
        fov_req_deg: fov,
        n_pd: s.n_pd,
        n_a: s.n_a,
        d_opt_um: s.optimum.map(|o| o.d * 1e6),
        l_lo_um: s.optimum.map(|o| o.l_lo * 1e6),
        l_hi_um: s.optimum.map(|o| o.l_hi * 1e6),
        rate_gbps: s.rate() * 1e-9,
        feasible: s.feasible,
    }
}

fn fov_points(min: f64, max: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("--fov-step must be positive, got {step}")).into());
    }
    if !(min > 0.0 && max >= min) {
        return Err(Error::Config(format!("need 0 < --fov-min <= --fov-max, got {min} and {max}")).into());
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| min + k as f64 * step).collect())
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

fn sweep(cli: &Cli, fov_min: f64, fov_max: f64, fov_step: f64) -> Result<(), Failure> {
    let resolved = load(cli)?.resolve()?;
    let mut rows = Vec::new();
    for fov in fov_points(fov_min, fov_max, fov_step)? {
        let constraints = resolved.constraints.with_fov(fov);
        let g = solve_global(&resolved.template, &constraints, resolved.modulation, &resolved.enumeration)?;
        rows.extend(g.configurations.iter().map(|s| sweep_row(fov, s)));
    }
    let mut out = output(cli)?;
    if cli.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialise"))?;
    } else {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["fov_req_deg", "n_pd", "n_a", "d_opt_um", "L_lo_um", "L_hi_um", "rate_gbps", "feasible"])?;
        for r in &rows {
            w.write_record([
                sig9(r.fov_req_deg),
                r.n_pd.to_string(),
                r.n_a.to_string(),
                opt_cell(r.d_opt_um),
                opt_cell(r.l_lo_um),
                opt_cell(r.l_hi_um),
                sig9(r.rate_gbps),
                r.feasible.to_string(),
            ])?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

/// Receiver and detector side to inspect: explicit flags first, then the
/// optimum, then the first enumerated configuration at its largest side.
fn pick_design(cfg: &DesignConfig, pick: &Pick) -> Result<Problem, Failure> {
    let resolved = cfg.resolve()?;
    let g = solve_global(&resolved.template, &resolved.constraints, resolved.modulation, &resolved.enumeration)?;
    let n_pd = pick.n_pd.unwrap_or(g.best.n_pd);
    let n_a = pick.n_a.unwrap_or(g.best.n_a);
    let design = resolved.template.build(n_pd, n_a)?;
    Problem::new(design, &resolved.constraints, resolved.modulation).map_err(|e| match e {
        Error::InfeasibleFov { .. } => Failure::Infeasible(e.to_string()),
        e => e.into(),
    })
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

#[derive(serde::Serialize)]
struct CurveRow {
    l_um: f64,
    combiner: Combiner,
    analytic_snr_db: f64,
    mc_snr_db: Option<f64>,
    mc_stderr_db: Option<f64>,
}

fn snr_curve(cli: &Cli, combiner: CombinerArg, mc_samples: usize, points: usize, pick: &Pick) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let problem = pick_design(&cfg, pick)?;
    let ctx = problem.design.snr;
    let d = match pick.d_um {
        Some(d) => d * 1e-6,
        None => {
            let best = problem.solve()?;
            best.optimum.map_or(max_pd_side(ctx.n_pd, ctx.array_side, cfg.array.ff_target), |o| o.d)
        }
    };
    let mc = (mc_samples > 0).then(|| McSpec::new(mc_samples, cli.seed)).transpose()?;
    let combiners: &[Combiner] = match combiner {
        CombinerArg::Mrc => &[Combiner::Mrc],
        CombinerArg::Egc => &[Combiner::Egc],
        CombinerArg::Both => &[Combiner::Mrc, Combiner::Egc],
    };
    let mut rows = Vec::new();
    for l in linspace(0.0, problem.back_focal_length(), points.max(2)) {
        let w = problem.design.spot.radius(l)?;
        for &c in combiners {
            let analytic = match c {
                Combiner::Mrc => ctx.avg_mrc_snr(d, w),
                Combiner::Egc => ctx.avg_egc_snr(d, w),
            };
            let sampled = mc.map(|spec| mc_average_snr(&ctx, d, w, c, spec)).transpose()?;
            rows.push(CurveRow {
                l_um: l * 1e6,
                combiner: c,
                analytic_snr_db: db(analytic),
                mc_snr_db: sampled.map(|s| db(s.mean)),
                mc_stderr_db: sampled.map(|s| 10.0 / std::f64::consts::LN_10 * s.std_error / s.mean),
            });
        }
    }
    let mut out = output(cli)?;
    if cli.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialise"))?;
    } else {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["L_um", "combiner", "analytic_snr_db"];
        if mc.is_some() {
            header.extend(["mc_snr_db", "mc_stderr_db"]);
        }
        w.write_record(&header)?;
        for r in &rows {
            let mut rec = vec![
                sig9(r.l_um),
                match r.combiner {
                    Combiner::Mrc => "mrc".into(),
                    Combiner::Egc => "egc".into(),
                },
                sig9(r.analytic_snr_db),
            ];
            if mc.is_some() {
                rec.extend([opt_cell(r.mc_snr_db), opt_cell(r.mc_stderr_db)]);
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct FeasibleRow {
    d_um: f64,
    l_um: f64,
    problem_id: u8,
    satisfies_all: bool,
}

fn feasible(cli: &Cli, (n, m): (usize, usize), pick: &Pick) -> Result<(), Failure> {
    let problem = pick_design(&load(cli)?, pick)?;
    let d_grid = if problem.d_min <= problem.d_max { linspace(problem.d_min, problem.d_max, n) } else { Vec::new() };
    let l_grid = linspace(0.0, problem.back_focal_length(), m);
    let mut rows: Vec<FeasibleRow> = feasible_region(&problem, &d_grid, &l_grid)
        .into_iter()
        .map(|e| FeasibleRow {
            d_um: e.d * 1e6,
            l_um: e.l * 1e6,
            problem_id: e.regime as u8 + 1,
            satisfies_all: e.satisfies_all,
        })
        .collect();
    rows.sort_by_key(|r| r.problem_id);
    let mut out = output(cli)?;
    if cli.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialise"))?;
    } else {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["d_um", "L_um", "problem_id", "satisfies_all"])?;
        for r in &rows {
            w.write_record([sig9(r.d_um), sig9(r.l_um), r.problem_id.to_string(), r.satisfies_all.to_string()])?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let opts = BatteryOptions { seed: cli.seed, ..BatteryOptions::default() };
    let results = run_all(&cfg, &opts);
    let mut out = output(cli)?;
    if cli.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&results).expect("results serialise"))?;
    } else {
        for r in &results {
            writeln!(out, "{r}")?;
        }
    }
    out.flush()?;
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(Failure::Checks(n)),
    }
}
