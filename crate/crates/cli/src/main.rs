//! `vesselpinn` command-line driver.
//!
//! Exit codes: 0 on success, 1 on runtime or training failure, 2 on usage,
//! schema or missing-input errors. Every run writes a JSON echo of its
//! resolved configuration next to its primary output.

// `!(x > 0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use vesselpinn::geodesy::{EarthModel, GeoPoint};
use vesselpinn::geojson;
use vesselpinn::kinematics::{dead_reckon, Approx, KinematicState, Order, Rollout, Scheme};
use vesselpinn::losses::{DataUnits, PhysicsOrder};
use vesselpinn::metrics::{ade_fde, MetricsReport, ScoredWindow};
use vesselpinn::model::{predict_denorm, train, Arch, ModelFile, TrainConfig};
use vesselpinn::pipeline::{
    make_windows, parse_ais_csv, preprocess, read_dataset, write_ais_csv, write_dataset, Dataset, NormStats,
    PreprocessConfig, WindowConfig, WindowPair,
};
use vesselpinn::synth::{generate_fleet, to_ais_records, SynthSpec};

/// Ship type code written to synthetic AIS rows (cargo).
const SYNTH_SHIP_TYPE: u32 = 70;

#[derive(Parser)]
#[command(
    name = "vesselpinn",
    version,
    about = "Physics-informed vessel trajectory prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, segment and resample an AIS CSV into a windowed dataset.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic fleet as an AIS CSV.
    Synth(SynthArgs),
    /// Train a model on a preprocessed dataset.
    Train(TrainArgs),
    /// Score a model on the test split.
    Eval(EvalArgs),
    /// Export stitched observed and predicted test tracks as GeoJSON.
    Predict(PredictArgs),
    /// Extrapolate a kinematic state with an integration scheme.
    Deadreckon(DeadreckonArgs),
}

#[derive(Args, Serialize)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 120.0)]
    interval_s: f64,
    #[arg(long, default_value_t = 60.0)]
    gap_min: f64,
    #[arg(long, default_value_t = 300)]
    min_points: usize,
    #[arg(long, default_value_t = 0.5)]
    min_sog_kn: f64,
    #[arg(long, default_value_t = 3.0)]
    segment_h: f64,
    /// Input window length.
    #[arg(long, default_value_t = 15)]
    win: usize,
    /// Prediction horizon.
    #[arg(long, default_value_t = 15)]
    wout: usize,
    /// Seed of the segment split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Overrides the spec's positional noise, degrees.
    #[arg(long)]
    noise_deg: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    Mlp,
    Gru,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ApproxArg {
    Small,
    Great,
}

impl From<ApproxArg> for Approx {
    fn from(a: ApproxArg) -> Self {
        match a {
            ApproxArg::Small => Approx::SmallAngle,
            ApproxArg::Great => Approx::GreatCircle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RolloutArg {
    Literal,
    Propagated,
}

impl From<RolloutArg> for Rollout {
    fn from(r: RolloutArg) -> Self {
        match r {
            RolloutArg::Literal => Rollout::Literal,
            RolloutArg::Propagated => Rollout::Propagated,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum UnitsArg {
    Normalized,
    Degrees,
}

impl From<UnitsArg> for DataUnits {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Normalized => DataUnits::Normalized,
            UnitsArg::Degrees => DataUnits::Degrees,
        }
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Physics order: 0 none, 1 Euler with midpoint course, 2 Heun.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
    order: u8,
    #[arg(long, value_enum)]
    approx: ApproxArg,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 15)]
    win: usize,
    /// Prediction horizon; defaults to the dataset's.
    #[arg(long)]
    wout: Option<usize>,
    /// State evolution across the physics rollout.
    #[arg(long, value_enum, default_value_t = RolloutArg::Literal)]
    rollout: RolloutArg,
    /// Units of the data term.
    #[arg(long, value_enum, default_value_t = UnitsArg::Normalized)]
    data_units: UnitsArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// 1: every test window; 2: first, middle and last window per segment.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    case: u8,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    geojson: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SchemeArg {
    /// Forward Euler on the current course.
    Euler,
    /// Euler on the Taylor midpoint course.
    Midpoint,
    Heun,
}

impl From<SchemeArg> for Order {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Order::ForwardEuler,
            SchemeArg::Midpoint => Order::EulerMidpoint,
            SchemeArg::Heun => Order::Heun,
        }
    }
}

#[derive(Args, Serialize)]
struct DeadreckonArgs {
    /// JSON object with lat, lon, sog (m/s), cog and optionally accel
    /// (m/s²) and cog_rate (°/s).
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, value_enum)]
    approx: ApproxArg,
    #[arg(long)]
    dt_s: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = RolloutArg::Propagated)]
    mode: RolloutArg,
    #[arg(long)]
    out: PathBuf,
}

/// Input problem attributable to the caller; exits with code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<vesselpinn::Error>() {
        Some(
            vesselpinn::Error::Io { .. }
            | vesselpinn::Error::Csv(_)
            | vesselpinn::Error::Json(_)
            | vesselpinn::Error::Schema(_)
            | vesselpinn::Error::InvalidArgument(_),
        ) => 2,
        _ => 1,
    }
}

/// `dir/stem.suffix` for an output `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn echo(path: &Path, subcommand: &str, args: &impl Serialize, outputs: &[&Path]) -> Result<()> {
    write_json(
        path,
        &json!({
            "subcommand": subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "args": args,
            "outputs": outputs,
        }),
    )
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<()> {
    if !a.input.is_file() {
        return Err(usage(format!("input file {} does not exist", a.input.display())));
    }
    let (records, parse) = parse_ais_csv(&a.input)?;
    let cfg = PreprocessConfig {
        interval_s: a.interval_s,
        gap_min: a.gap_min,
        min_points: a.min_points,
        min_sog_kn: a.min_sog_kn,
        segment_h: a.segment_h,
        min_segment_points: a.win + a.wout,
    };
    let (segments, report) = preprocess(&records, &cfg)?;
    if segments.is_empty() {
        anyhow::bail!(
            "no segments survived preprocessing ({} vessels kept of {} accepted rows, {} trips)",
            report.clean.vessels_kept,
            parse.accepted,
            report.trips
        );
    }
    let wcfg = WindowConfig {
        w_in: a.win,
        w_out: a.wout,
        interval_s: a.interval_s,
        seed: a.seed,
        ..Default::default()
    };
    let ds = make_windows(&segments, &wcfg)?;
    write_dataset(&a.out, &ds, &json!({ "parse": parse, "pipeline": report }))?;
    echo(&a.out.join("config.json"), "preprocess", a, &[&a.out])?;
    println!(
        "{} rows, {} accepted; {} segments; windows train/val/test {}/{}/{}",
        parse.rows,
        parse.accepted,
        segments.len(),
        ds.train.len(),
        ds.val.len(),
        ds.test.len()
    );
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = read_json(&a.spec)?;
    if let Some(sigma) = a.noise_deg {
        spec.noise_sigma_deg = sigma;
    }
    let fleet = generate_fleet(&spec, a.n, a.seed)?;
    let records: Vec<_> = fleet
        .iter()
        .flat_map(|(m, t)| to_ais_records(*m, t, SYNTH_SHIP_TYPE))
        .collect();
    let mut w = create(&a.out)?;
    write_ais_csv(&mut w, &records)?;
    w.flush()?;
    echo(&sibling(&a.out, "config.json"), "synth", a, &[&a.out])?;
    println!("{} trajectories, {} rows", fleet.len(), records.len());
    Ok(())
}

/// Cuts every window of `ds` down to `w_in × w_out`.
fn truncate(ds: &mut Dataset, w_in: usize, w_out: usize) -> Result<()> {
    for split in [&mut ds.train, &mut ds.val, &mut ds.test] {
        for w in split.iter_mut() {
            *w = w.truncated(w_in, w_out)?;
        }
    }
    Ok(())
}

fn dataset_shape(ds: &Dataset) -> (usize, usize) {
    (ds.meta.config.w_in, ds.meta.config.w_out)
}

fn load_for_model(data: &Path, model: &ModelFile) -> Result<Dataset> {
    let mut ds = read_dataset(data)?;
    let (w_in, w_out) = (model.params.w_in, model.params.w_out);
    let (d_in, d_out) = dataset_shape(&ds);
    if w_in > d_in || w_out > d_out {
        return Err(usage(format!(
            "model expects {w_in}x{w_out} windows, dataset has {d_in}x{d_out}"
        )));
    }
    truncate(&mut ds, w_in, w_out)?;
    ds.stats = model.stats.clone();
    Ok(ds)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut ds = read_dataset(&a.data)?;
    let (d_in, d_out) = dataset_shape(&ds);
    let w_out = a.wout.unwrap_or(d_out);
    if a.win > d_in || w_out > d_out {
        return Err(usage(format!(
            "requested {}x{w_out} windows, dataset has {d_in}x{d_out}",
            a.win
        )));
    }
    truncate(&mut ds, a.win, w_out)?;
    let cfg = TrainConfig {
        arch: match a.model {
            ModelKind::Mlp => Arch::basic_mlp(),
            ModelKind::Gru => Arch::gru(),
        },
        order: PhysicsOrder::from_index(a.order).expect("range checked by clap"),
        approx: a.approx.into(),
        lambda: a.lambda,
        rollout: a.rollout.into(),
        data_units: a.data_units.into(),
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        ..Default::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let history_path = sibling(&a.out, "history.csv");
    let (params, history) = match train(&ds, &cfg) {
        Ok(r) => r,
        Err(vesselpinn::Error::Diverged { epoch, detail, history }) => {
            history.write_csv(create(&history_path)?)?;
            anyhow::bail!("training diverged at epoch {epoch}: {detail}");
        }
        Err(e) => return Err(e.into()),
    };
    let file = ModelFile {
        physics: cfg.physics(&ds.stats, ds.meta.config.interval_s),
        params,
        stats: ds.stats.clone(),
        train: cfg,
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    file.save(&a.out)?;
    history.write_csv(create(&history_path)?)?;
    echo(&sibling(&a.out, "config.json"), "train", a, &[&a.out, &history_path])?;
    let best = history.best();
    println!(
        "{} epochs{}, best epoch {} with val loss {:.6e} (data {:.6e}, physics {:.6e})",
        history.epochs.len(),
        if history.stopped_early { " (stopped early)" } else { "" },
        history.best_epoch,
        best.val.total,
        best.val.data,
        best.val.physics
    );
    Ok(())
}

/// First, middle and last window of every segment, in segment order.
fn case2(windows: &[WindowPair]) -> Vec<WindowPair> {
    let mut by_segment: std::collections::BTreeMap<usize, Vec<&WindowPair>> = Default::default();
    for w in windows {
        by_segment.entry(w.segment).or_default().push(w);
    }
    let mut out = Vec::new();
    for mut ws in by_segment.into_values() {
        ws.sort_by_key(|w| w.offset);
        let mut picks = vec![0, ws.len() / 2, ws.len() - 1];
        picks.dedup();
        out.extend(picks.into_iter().map(|i| ws[i].clone()));
    }
    out
}

fn score(model: &ModelFile, stats: &NormStats, windows: &[WindowPair]) -> Result<Vec<ScoredWindow<f64>>> {
    windows
        .iter()
        .map(|w| {
            Ok(ScoredWindow {
                pred: predict_denorm(&model.params, w, stats)?,
                truth: w
                    .truth_deg(stats)
                    .into_iter()
                    .map(|[lat, lon]| GeoPoint { lat, lon })
                    .collect(),
            })
        })
        .collect()
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let ds = load_for_model(&a.data, &model)?;
    let windows = if a.case == 2 { case2(&ds.test) } else { ds.test.clone() };
    if windows.is_empty() {
        anyhow::bail!("test split has no windows to score");
    }
    let metrics = MetricsReport::from_windows(&score(&model, &ds.stats, &windows)?, EarthModel::default())?;
    let report = json!({
        "case": a.case,
        "lambda": model.physics.lambda,
        "order": model.physics.order.index(),
        "approx": model.physics.approx,
        "arch": model.params.arch,
        "w_in": model.params.w_in,
        "horizon": model.params.w_out,
        "metrics": metrics,
    });
    if let Some(dir) = a.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_json(&a.report, &report)?;
    echo(&sibling(&a.report, "config.json"), "eval", a, &[&a.report])?;
    println!(
        "{} windows: ADE {:.2} ± {:.2} m, FDE {:.2} ± {:.2} m",
        metrics.n_windows, metrics.ade_m.mean, metrics.ade_m.std, metrics.fde_m.mean, metrics.fde_m.std
    );
    Ok(())
}

/// Observed positions of a segment by index, recovered from its windows.
fn observed_track(windows: &[&WindowPair], stats: &NormStats) -> Vec<(usize, GeoPoint<f64>)> {
    let mut pts: std::collections::BTreeMap<usize, GeoPoint<f64>> = Default::default();
    for w in windows {
        for (i, row) in w.x.iter().enumerate() {
            let [lat, lon] = stats.denormalize_pos([row[0], row[1]]);
            pts.entry(w.offset + i).or_insert(GeoPoint { lat, lon });
        }
        for (j, [lat, lon]) in w.truth_deg(stats).into_iter().enumerate() {
            pts.entry(w.offset + w.w_in() + j).or_insert(GeoPoint { lat, lon });
        }
    }
    pts.into_iter().collect()
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let ds = load_for_model(&a.data, &model)?;
    let mut by_segment: std::collections::BTreeMap<usize, Vec<&WindowPair>> = Default::default();
    for w in &ds.test {
        by_segment.entry(w.segment).or_default().push(w);
    }
    let mut features = Vec::new();
    let (mut all_pred, mut all_obs) = (Vec::new(), Vec::new());
    for (segment, windows) in &by_segment {
        let preds = windows
            .iter()
            .map(|w| Ok((w.offset + w.w_in(), predict_denorm(&model.params, w, &ds.stats)?)))
            .collect::<Result<Vec<_>>>()?;
        let stitched = geojson::stitch(&preds);
        let observed = observed_track(windows, &ds.stats);
        let lookup: std::collections::BTreeMap<usize, GeoPoint<f64>> = observed.iter().copied().collect();
        let truth: Vec<_> = stitched.iter().map(|(i, _)| lookup[i]).collect();
        let pred: Vec<_> = stitched.iter().map(|(_, p)| *p).collect();
        let (ade, fde) = ade_fde(&pred, &truth, EarthModel::default())?;
        let props = json!({ "segment": segment, "ade_m": ade, "fde_m": fde });
        let obs_pts: Vec<_> = observed.iter().map(|(_, p)| *p).collect();
        features.extend(geojson::line_string("observed", &obs_pts, props.clone()));
        features.extend(geojson::line_string("predicted", &pred, props));
        all_pred.extend(pred);
        all_obs.extend(truth);
    }
    let mut w = create(&a.geojson)?;
    serde_json::to_writer_pretty(&mut w, &geojson::feature_collection(features))?;
    writeln!(w)?;
    w.flush()?;
    echo(&sibling(&a.geojson, "config.json"), "predict", a, &[&a.geojson])?;
    if all_pred.is_empty() {
        println!("test split is empty; wrote an empty feature collection");
    } else {
        let (ade, _) = ade_fde(&all_pred, &all_obs, EarthModel::default())?;
        println!(
            "stitched ADE {ade:.2} m over {} segments ({} points)",
            by_segment.len(),
            all_pred.len()
        );
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateInput {
    lat: f64,
    lon: f64,
    sog: f64,
    cog: f64,
    #[serde(default)]
    accel: f64,
    #[serde(default)]
    cog_rate: f64,
}

fn cmd_deadreckon(a: &DeadreckonArgs) -> Result<()> {
    let s: StateInput = read_json(&a.state)?;
    let state =
        KinematicState::new(s.lat, s.lon, s.sog, s.cog, s.accel, s.cog_rate).map_err(|e| usage(e.to_string()))?;
    if !(a.dt_s > 0.0) || !a.dt_s.is_finite() {
        return Err(usage(format!("--dt-s must be positive, got {}", a.dt_s)));
    }
    let track = if a.steps == 0 {
        Vec::new()
    } else {
        let scheme = Scheme::new(a.scheme.into(), a.approx.into());
        dead_reckon(&state, a.dt_s, a.steps, scheme, a.mode.into(), EarthModel::default())?
    };
    let mut w = create(&a.out)?;
    writeln!(w, "step,t_s,lat,lon")?;
    for (k, p) in track.iter().enumerate() {
        let step = k + 1;
        writeln!(w, "{step},{},{},{}", step as f64 * a.dt_s, p.lat, p.lon)?;
    }
    w.flush()?;
    echo(&sibling(&a.out, "config.json"), "deadreckon", a, &[&a.out])?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Deadreckon(a) => cmd_deadreckon(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
