#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use emf_sg::analytic::{Analytic, AnalyticOptions};
use emf_sg::cli::{format_float, format_opt, parse_grid, RunManifest};
use emf_sg::config::Config;
use emf_sg::curve::MetricCurve;
use emf_sg::metric::{exposure_of, Metric};
use emf_sg::scenarios::{sweep, DensificationRule, Engine, ScenarioKind};
use emf_sg::simulate::{run_mc, sample_realization, McOptions, McRun, SampleRecord};
use emf_sg::units::{db_to_linear, dbm_to_watts, per_km2, to_per_km2, NetworkParams};
use emf_sg::Error;

#[derive(Parser)]
#[command(name = "emf-sg", version, about = "EMF exposure and SINR coverage in Poisson-Voronoi cellular networks")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "EMF_SG_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one metric over a threshold grid.
    Metric(MetricArgs),
    /// Evaluate one metric along a densification scenario.
    Sweep(SweepArgs),
    /// Run the Monte-Carlo simulator and write the raw per-realization samples.
    Simulate(SimulateArgs),
    /// Compare the analytic model against Monte-Carlo estimates.
    Validate(ValidateArgs),
    /// Write the points of one sampled network.
    DumpRealization(DumpArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the run manifest (TOML) to this path.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Override `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `mc.realizations`.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct Thresholds {
    /// SINR axis of coverage metrics, dB (`start:step:stop` or a single value).
    #[arg(long = "t-db", allow_hyphen_values = true)]
    t_db: Option<String>,
    /// Exposure axis, dBm (`start:step:stop` or a single value).
    #[arg(long = "te-dbm", allow_hyphen_values = true)]
    te_dbm: Option<String>,
    /// Fixed UL SINR threshold of the joint metrics, dB.
    #[arg(long = "tc-db", visible_alias = "tc-ul-db", allow_hyphen_values = true)]
    tc_db: Option<f64>,
    /// Fixed DL SINR threshold of the joint metrics, dB.
    #[arg(long = "tc-dl-db", allow_hyphen_values = true)]
    tc_dl_db: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Mc => Engine::Mc,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    thresholds: Thresholds,
    #[arg(long)]
    metric: String,
    #[arg(long, value_enum, default_value = "analytic")]
    engine: EngineArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    A,
    B,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    thresholds: Thresholds,
    #[arg(long)]
    metric: String,
    /// Defaults to `sweep.scenario`.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Defaults to `sweep.engine`.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Density grid in dB relative to 1 per km² (e.g. `-10:0.5:50`); defaults to the `[sweep]` grid.
    #[arg(long = "density-db", allow_hyphen_values = true)]
    density_db: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Largest accepted |analytic − MC| per row.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: Common,
    /// Realization index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    id: u64,
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::NullEvent(_) => 3,
            Error::Domain(_) | Error::Config(_) | Error::Io(_) => 2,
        };
        Fail { code, message: e.to_string() }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail { code: 2, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Fail {
    Fail { code: 2, message: message.into() }
}

type CmdResult = Result<u8, Fail>;

struct Setup {
    config: Config,
    params: NetworkParams,
    analytic: AnalyticOptions,
    mc: McOptions,
    manifest: RunManifest,
}

fn setup(command: &str, common: &Common) -> Result<Setup, Fail> {
    let config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let params = config.network_params()?;
    let analytic = config.analytic_options()?;
    let mut mc = config.mc;
    if let Some(seed) = common.seed {
        mc.seed = seed;
    }
    if let Some(n) = common.n {
        mc.realizations = n;
    }
    mc.validate()?;
    let path = common.config.as_ref().map(|p| p.display().to_string());
    let manifest = RunManifest::new(command, path, params.clone(), analytic, mc);
    Ok(Setup { config, params, analytic, mc, manifest })
}

/// Sink for the CSV body; the manifest is finalized once the run is done.
struct Output {
    lines: Vec<String>,
    started: Instant,
}

impl Output {
    fn new() -> Self {
        Self { lines: Vec::new(), started: Instant::now() }
    }

    fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    fn comment(&mut self, text: String) {
        self.lines.push(format!("# {text}"));
    }

    fn finish(self, common: &Common, mut manifest: RunManifest) -> Result<(), Fail> {
        let banner = manifest.csv_banner()?;
        let mut w: Box<dyn Write> = match &common.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        writeln!(w, "{banner}")?;
        for l in &self.lines {
            writeln!(w, "{l}")?;
        }
        w.flush()?;
        if let Some(p) = &common.manifest {
            manifest.wall_time_s = Some(self.started.elapsed().as_secs_f64());
            std::fs::write(p, manifest.to_toml()?)?;
        }
        Ok(())
    }
}

fn db_grid(text: &Option<String>, what: &str) -> Result<Vec<f64>, Fail> {
    match text {
        Some(s) => Ok(parse_grid(s)?),
        None => Err(usage(format!("this metric needs {what}"))),
    }
}

type ResolvedMetric = (Metric, Vec<f64>, Vec<f64>, &'static str);

/// Resolve the metric and its free axis (displayed values and linear values).
fn resolve_metric(name: &str, t: &Thresholds) -> Result<ResolvedMetric, Fail> {
    let metric = Metric::from_name(name, t.tc_db.map(db_to_linear), t.tc_dl_db.map(db_to_linear))?;
    if metric.is_mean() {
        return Ok((metric, vec![f64::NAN], vec![], "none"));
    }
    if metric.axis_is_sinr() {
        let shown = db_grid(&t.t_db, "--t-db")?;
        let lin = shown.iter().map(|x| db_to_linear(*x)).collect();
        Ok((metric, shown, lin, "db"))
    } else {
        let shown = db_grid(&t.te_dbm, "--te-dbm")?;
        let lin = shown.iter().map(|x| dbm_to_watts(*x)).collect();
        Ok((metric, shown, lin, "dbm"))
    }
}

fn record_thresholds(m: &mut RunManifest, metric: &Metric, t: &Thresholds, axis_lin: &[f64]) {
    m.arg("metric", metric.name());
    m.arg_list("axis", axis_lin);
    if let Some(tc) = t.tc_db {
        m.arg("t_cov_ul", format_float(db_to_linear(tc)));
    }
    if let Some(tc) = t.tc_dl_db {
        m.arg("t_cov_dl", format_float(db_to_linear(tc)));
    }
}

fn progress(msg: &str) {
    eprintln!("emf-sg: {msg}");
}

/// Analytic curve, falling back to point-wise evaluation on numerical failure.
fn analytic_points(metric: &Metric, a: &Analytic, axis: &[f64]) -> Result<Vec<Result<f64, String>>, Fail> {
    match metric.analytic(a, axis) {
        Ok(c) => {
            for w in &c.warnings {
                progress(&format!("warning: {w}"));
            }
            Ok(c.values.into_iter().map(Ok).collect())
        }
        Err(e @ (Error::NonConvergence { .. } | Error::NullEvent(_))) if axis.len() > 1 => {
            progress(&format!("curve evaluation failed ({e}); retrying point by point"));
            axis.iter()
                .map(|t| match metric.analytic(a, &[*t]) {
                    Ok(c) => Ok(Ok(c.values[0])),
                    Err(e @ (Error::NonConvergence { .. } | Error::NullEvent(_))) => Ok(Err(e.to_string())),
                    Err(e) => Err(e.into()),
                })
                .collect()
        }
        Err(e @ (Error::NonConvergence { .. } | Error::NullEvent(_))) => Ok(vec![Err(e.to_string())]),
        Err(e) => Err(e.into()),
    }
}

fn simulate(params: &NetworkParams, mc: &McOptions) -> Result<McRun, Fail> {
    progress(&format!("simulating {} realizations (seed {})", mc.realizations, mc.seed));
    let run = run_mc(params, mc)?;
    if run.n_rejected > 0 {
        progress(&format!("{} realizations had an empty typical cell and were redrawn", run.n_rejected));
    }
    Ok(run)
}

fn cmd_metric(args: &MetricArgs) -> CmdResult {
    let Setup { params, analytic, mc, mut manifest, .. } = setup("metric", &args.common)?;
    let (metric, shown, axis, unit) = resolve_metric(&args.metric, &args.thresholds)?;
    let engine: Engine = args.engine.into();
    record_thresholds(&mut manifest, &metric, &args.thresholds, &axis);
    manifest.arg("engine", format!("{:?}", engine).to_lowercase());

    let a_vals = if engine.analytic() {
        let a = Analytic::new(&params, analytic)?;
        Some(analytic_points(&metric, &a, &axis)?)
    } else {
        None
    };
    let mc_curve: Option<MetricCurve> = if engine.mc() {
        let run = simulate(&params, &mc)?;
        Some(metric.monte_carlo(&run, &axis)?)
    } else {
        None
    };

    let mut out = Output::new();
    out.comment(format!("metric={} axis_unit={unit}", metric.name()));
    let both = engine == Engine::Both;
    out.row(&if both {
        ["axis", "value", "half_width", "mc_value", "discrepancy"].map(String::from).to_vec()
    } else {
        ["axis", "value", "half_width"].map(String::from).to_vec()
    });
    let mut failed = 0;
    for (i, x) in shown.iter().enumerate() {
        let mc_pt = mc_curve.as_ref().map(|c| (c.values[i], c.half_width.as_ref().map_or(f64::NAN, |h| h[i])));
        let a_pt = match a_vals.as_ref().map(|v| &v[i]) {
            Some(Err(msg)) => {
                failed += 1;
                out.comment(format!("warning,{},{msg}", format_float(*x)));
                continue;
            }
            Some(Ok(v)) => Some(*v),
            None => None,
        };
        let mut cells = vec![format_float(*x)];
        match (a_pt, mc_pt) {
            (Some(a), Some((m, h))) => cells.extend([format_float(a), format_float(h), format_float(m), format_float((a - m).abs())]),
            (Some(a), None) => cells.extend([format_float(a), String::new()]),
            (None, Some((m, h))) => cells.extend([format_float(m), format_float(h)]),
            (None, None) => unreachable!("at least one engine runs"),
        }
        out.row(&cells);
    }
    out.finish(&args.common, manifest)?;
    if failed > 0 {
        progress(&format!("{failed} of {} points did not converge", shown.len()));
        return Ok(3);
    }
    Ok(0)
}

fn single(values: &[f64], flag: &str) -> Result<f64, Fail> {
    match values {
        [v] => Ok(*v),
        _ => Err(usage(format!("sweep takes a single value for {flag}"))),
    }
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let Setup { config, params, analytic, mc, mut manifest } = setup("sweep", &args.common)?;
    let (metric, shown, axis, _) = resolve_metric(&args.metric, &args.thresholds)?;
    let at = if metric.is_mean() {
        f64::NAN
    } else {
        single(&shown, if metric.axis_is_sinr() { "--t-db" } else { "--te-dbm" })?;
        axis[0]
    };
    let kind = match args.scenario {
        Some(ScenarioArg::A) => ScenarioKind::A,
        Some(ScenarioArg::B) => ScenarioKind::B,
        None => config.sweep.scenario,
    };
    let engine: Engine = args.engine.map_or(config.sweep.engine, Into::into);
    let grid = match &args.density_db {
        Some(s) => parse_grid(s)?.into_iter().map(|d| per_km2(db_to_linear(d))).collect(),
        None => {
            let mut section = config.sweep.clone();
            section.scenario = kind;
            section.grid()?
        }
    };
    if grid.is_empty() {
        return Err(usage("density grid is empty"));
    }
    record_thresholds(&mut manifest, &metric, &args.thresholds, &axis);
    manifest.arg("scenario", format!("{kind:?}").to_lowercase());
    manifest.arg("engine", format!("{engine:?}").to_lowercase());
    manifest.arg_list("densities_per_m2", &grid);

    progress(&format!("sweeping {} densities", grid.len()));
    let rule = DensificationRule::new(kind, params);
    let result = sweep(&rule, &grid, &metric, at, engine, &analytic, &mc)?;

    let mut out = Output::new();
    out.comment(format!("metric={} axis_unit=per_km2 scenario={}", metric.name(), format!("{kind:?}").to_lowercase()));
    out.row(&["axis", "value", "half_width", "mc_value", "discrepancy", "branch", "flag"].map(String::from));
    for r in &result.rows {
        let x = format_float(to_per_km2(r.point.density));
        if let Some(e) = &r.error {
            out.comment(format!("warning,{x},{e}"));
            continue;
        }
        let (value, hw, mc_value) = match (r.analytic, r.mc) {
            (Some(a), Some((m, h))) => (a, h, Some(m)),
            (Some(a), None) => (a, f64::NAN, None),
            (None, Some((m, h))) => (m, h, None),
            (None, None) => unreachable!("at least one engine runs"),
        };
        let flag = if r.point.clamped { "clamped" } else { "" };
        out.row(&[x, format_float(value), format_float(hw), format_opt(mc_value), format_opt(r.discrepancy()), r.point.branch.name().into(), flag.into()]);
    }
    if let Some(o) = result.optimum {
        out.row(&["#optimum".into(), format_float(to_per_km2(o.density)), format_float(o.value), format!("grid_ratio={}", format_float(o.grid_ratio))]);
    }
    out.finish(&args.common, manifest)?;
    let failures = result.failures();
    if failures > 0 {
        progress(&format!("{failures} of {} densities failed", result.rows.len()));
        return Ok(3);
    }
    Ok(0)
}

fn sample_row(r: &SampleRecord) -> Vec<String> {
    vec![
        r.realization_id.to_string(),
        format_float(r.sinr_ul),
        format_float(r.sinr_dl),
        format_float(r.exp_ul_w),
        format_float(r.exp_dl_w),
        format_float(r.r0_m),
    ]
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let Setup { params, mc, manifest, .. } = setup("simulate", &args.common)?;
    let run = simulate(&params, &mc)?;
    let mut out = Output::new();
    out.comment(format!("rejected_empty_cells={}", run.n_rejected));
    out.row(&["realization_id", "sinr_ul", "sinr_dl", "exp_ul_w", "exp_dl_w", "r0_m"].map(String::from));
    for r in &run.records {
        out.row(&sample_row(r));
    }
    for (name, f) in [("UL", exposure_of(emf_sg::analytic::ExposureLink::Ul)), ("DL", exposure_of(emf_sg::analytic::ExposureLink::Dl))] {
        let m = run.median(f);
        progress(&format!("median {name} exposure {} W", format_float(m.values[0])));
    }
    out.finish(&args.common, manifest)?;
    Ok(0)
}

/// Probabilities at the MC quantiles of the metric's axis variable.
const VALIDATION_QUANTILES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn quantiles(run: &McRun, f: impl Fn(&SampleRecord) -> f64) -> Vec<f64> {
    let mut v: Vec<f64> = run.records.iter().map(f).collect();
    v.sort_by(f64::total_cmp);
    let mut q: Vec<f64> = VALIDATION_QUANTILES.iter().map(|p| v[((v.len() - 1) as f64 * p).round() as usize]).collect();
    q.dedup();
    q
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let Setup { params, analytic, mc, mut manifest, .. } = setup("validate", &args.common)?;
    if mc.realizations < 1000 {
        return Err(usage("validate needs at least 1000 realizations"));
    }
    if !(args.tolerance >= 0.0) {
        return Err(usage("--tolerance must be non-negative"));
    }
    manifest.arg("tolerance", format_float(args.tolerance));
    let a = Analytic::new(&params, analytic)?;
    let run = simulate(&params, &mc)?;
    use emf_sg::analytic::ExposureLink::{Dl, Total, Ul};
    let (tu, td) = (1.0, db_to_linear(3.0));
    let cases: Vec<(Metric, Vec<f64>)> = vec![
        (Metric::CdfExposure { link: Ul }, quantiles(&run, exposure_of(Ul))),
        (Metric::CdfExposure { link: Dl }, quantiles(&run, exposure_of(Dl))),
        (Metric::CdfExposure { link: Total }, quantiles(&run, exposure_of(Total))),
        (Metric::CoverageUl, quantiles(&run, |r| r.sinr_ul)),
        (Metric::CoverageDl, quantiles(&run, |r| r.sinr_dl)),
        (Metric::JointUec { t_cov_ul: tu }, quantiles(&run, exposure_of(Ul))),
        (Metric::JointEmpUdc { t_cov_ul: tu, t_cov_dl: td }, quantiles(&run, exposure_of(Total))),
        (Metric::ConditionalEmpUdc { t_cov_ul: tu, t_cov_dl: td }, quantiles(&run, exposure_of(Total))),
    ];
    let mut out = Output::new();
    out.comment(format!("tolerance={} joint thresholds: ul 0 dB, dl 3 dB", format_float(args.tolerance)));
    out.row(&["metric", "threshold", "analytic", "mc", "half_width", "gap", "status"].map(String::from));
    let (mut failed, mut numerical) = (0, 0);
    for (metric, axis) in &cases {
        let mcc = metric.monte_carlo(&run, axis)?;
        let hw = mcc.half_width.clone().unwrap_or_default();
        for (i, (t, v)) in analytic_points(metric, &a, axis)?.into_iter().enumerate().map(|(i, v)| (i, (axis[i], v))) {
            let thr = format_float(t);
            match v {
                Ok(av) => {
                    let gap = (av - mcc.values[i]).abs();
                    let pass = gap <= args.tolerance;
                    failed += usize::from(!pass);
                    out.row(&[metric.name().into(), thr, format_float(av), format_float(mcc.values[i]), format_float(hw[i]), format_float(gap), if pass { "pass" } else { "fail" }.into()]);
                }
                Err(msg) => {
                    numerical += 1;
                    out.comment(format!("warning,{},{thr},{msg}", metric.name()));
                }
            }
        }
    }
    out.finish(&args.common, manifest)?;
    if failed > 0 {
        progress(&format!("{failed} rows exceed the tolerance"));
        return Ok(4);
    }
    Ok(if numerical > 0 { 3 } else { 0 })
}

fn cmd_dump(args: &DumpArgs) -> CmdResult {
    let Setup { params, mc, mut manifest, .. } = setup("dump-realization", &args.common)?;
    manifest.arg("id", args.id);
    let (real, rejected, _) = sample_realization(&params, &mc, args.id)?;
    let mut out = Output::new();
    out.comment(format!(
        "typical_bs={} typical_ue={} window_radius_m={} rejected_draws={rejected}",
        real.typical_bs_index,
        real.typical_ue_index,
        format_float(real.window_radius)
    ));
    out.row(&["kind", "x_m", "y_m", "serving_bs", "selected"].map(String::from));
    for (i, p) in real.bs_points.iter().enumerate() {
        out.row(&["bs".into(), format_float(p[0]), format_float(p[1]), i.to_string(), u8::from(real.is_active(i)).to_string()]);
    }
    for (i, p) in real.ue_points.iter().enumerate() {
        let bs = real.association[i];
        let selected = real.selected_ue[bs as usize] == Some(i as u32);
        out.row(&["ue".into(), format_float(p[0]), format_float(p[1]), bs.to_string(), u8::from(selected).to_string()]);
    }
    out.finish(&args.common, manifest)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("emf-sg: cannot start worker pool: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Metric(a) => cmd_metric(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::DumpRealization(a) => cmd_dump(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("emf-sg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
