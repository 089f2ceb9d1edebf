use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pano_depth::boundary::{self, BoundaryParams, CannyParams};
use pano_depth::geom::{self, HausdorffOptions};
use pano_depth::io::{self, DepthFormat, FilterOutcome, Resolution, SampleManifest, DEFAULT_MAX_DEPTH, DEFAULT_MAX_INVALID};
use pano_depth::losses::{self, LossKind, LossOptions, VnlConfig};
use pano_depth::report::{self, Aggregation, ColumnSpec, EvalOptions, GeomOptions, Indicators, MetricsReport};
use pano_depth::warp::{self, DisplacementField};
use pano_depth::{build_icosphere, DepthPanorama, Error, Grid};

#[derive(Parser, Debug)]
#[command(name = "pano-depth", version, about = "Evaluate, compare and warp equirectangular depth maps")]
struct Cli {
    /// TOML file whose `[subcommand]` tables supply defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a prediction manifest against ground truth.
    Eval(EvalArgs),
    /// Rank models from saved reports with best-three markers.
    Compare(CompareArgs),
    /// Depth, boundary and smoothness indicators per report.
    Indicators(IndicatorsArgs),
    /// Keep samples with at most a given fraction of invalid pixels.
    FilterSplit(FilterArgs),
    /// Resample a depth map by an angular displacement field.
    Warp(WarpArgs),
    /// Write the vertices of a subdivided icosahedron as OBJ.
    Icosphere(IcoArgs),
    /// Evaluate a training loss on one prediction/ground-truth pair.
    Loss(LossArgs),
    /// Export point cloud, mesh or edge map of one depth map.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Weights {
    Uniform,
    Spherical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TableFormat {
    Md,
    Csv,
    Json,
}

/// Fills unset fields of `self` from a config layer. Options and lists are
/// taken from the config only when absent on the command line; switches are
/// on if either side sets them.
trait Layer {
    fn layer(self, config: Self) -> Self;
}

macro_rules! layered {
    ($t:ident { opt: [$($o:ident),*], flag: [$($f:ident),*], list: [$($l:ident),*] }) => {
        impl Layer for $t {
            #[allow(unused_mut)]
            fn layer(mut self, config: Self) -> Self {
                $(self.$o = self.$o.or(config.$o);)*
                $(self.$f |= config.$f;)*
                $(if self.$l.is_empty() { self.$l = config.$l; })*
                self
            }
        }
    };
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct EvalArgs {
    /// Prediction manifest (JSON Lines).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Ground-truth manifest (JSON Lines).
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model tag stored in the report.
    #[arg(long)]
    model: Option<String>,
    /// Also report solid-angle weighted errors and accuracies.
    #[arg(long, value_enum)]
    weights: Option<Weights>,
    /// Also report accuracies at the vertices of an order-K icosphere.
    #[arg(long, value_name = "K")]
    ico: Option<u32>,
    /// Compute point-cloud and mesh metrics.
    #[arg(long)]
    geom: bool,
    #[arg(long, value_name = "N")]
    m2m_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative depth jump that cuts a mesh triangle.
    #[arg(long)]
    disc_thresh: Option<f64>,
    #[arg(long)]
    canny_sigma: Option<f64>,
    #[arg(long)]
    canny_lo: Option<f64>,
    #[arg(long)]
    canny_hi: Option<f64>,
    /// Truncation distance of the depth boundary error, in pixels.
    #[arg(long)]
    dbe_trunc: Option<f64>,
    /// Pixel tolerance when matching edges for precision and recall.
    #[arg(long)]
    edge_tol: Option<f64>,
    /// Evaluated depth range upper bound in meters.
    #[arg(long)]
    max_depth: Option<f64>,
    /// Average per-sample metrics instead of pooling pixels.
    #[arg(long)]
    per_sample_mean: bool,
    /// Worker threads; 0 picks one per core.
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
}
layered!(EvalArgs {
    opt: [pred, gt, out, model, weights, ico, m2m_samples, seed, disc_thresh, canny_sigma, canny_lo, canny_hi, dbe_trunc, edge_tol, max_depth, jobs],
    flag: [geom, per_sample_mean],
    list: []
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct CompareArgs {
    /// Report files written by `eval`.
    #[arg(long, num_args = 1..)]
    reports: Vec<PathBuf>,
    /// Comma-separated columns, each optionally suffixed `:up` or `:down`.
    #[arg(long)]
    columns: Option<String>,
    #[arg(long, value_enum)]
    format: Option<TableFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}
layered!(CompareArgs { opt: [columns, format, out], flag: [], list: [reports] });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct IndicatorsArgs {
    #[arg(long, num_args = 1..)]
    reports: Vec<PathBuf>,
    /// `csv` (default) or `json`.
    #[arg(long, value_enum)]
    format: Option<TableFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}
layered!(IndicatorsArgs { opt: [format, out], flag: [], list: [reports] });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct FilterArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Largest kept fraction of invalid pixels.
    #[arg(long)]
    max_invalid: Option<f64>,
    /// Manifest of kept samples.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON Lines listing of dropped samples and why.
    #[arg(long)]
    dropped: Option<PathBuf>,
}
layered!(FilterArgs { opt: [manifest, max_invalid, out, dropped], flag: [], list: [] });

/// How single depth files are decoded and encoded.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct FileArgs {
    /// Meters per unit for 16-bit PNG files.
    #[arg(long)]
    scale: Option<f64>,
    /// `WxH` of headerless float32 files.
    #[arg(long)]
    resolution: Option<Resolution>,
}

impl FileArgs {
    fn layer(self, config: Self) -> Self {
        FileArgs {
            scale: self.scale.or(config.scale),
            resolution: self.resolution.or(config.resolution),
        }
    }

    fn read(&self, path: &Path) -> Result<Grid<f64>, Error> {
        io::load_depth_grid(path, DepthFormat::from_path(path, self.scale, self.resolution)?)
    }

    fn write(&self, path: &Path, grid: &Grid<f64>) -> Result<(), Error> {
        match DepthFormat::from_path(path, self.scale, Some(Resolution { width: grid.width(), height: grid.height() }))? {
            DepthFormat::Pfm => io::save_pfm(path, grid),
            DepthFormat::Png16 { scale } => io::save_png16(path, grid, scale),
            DepthFormat::RawF32 { .. } => io::save_raw_f32(path, grid),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct WarpArgs {
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Displacement field file (`DSPF` header, float32 pairs).
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read the field as pixel offsets instead of radians.
    #[arg(long)]
    pixel_units: bool,
    #[command(flatten)]
    #[serde(flatten)]
    file: FileArgs,
}

impl Layer for WarpArgs {
    fn layer(self, c: Self) -> Self {
        WarpArgs {
            depth: self.depth.or(c.depth),
            field: self.field.or(c.field),
            out: self.out.or(c.out),
            pixel_units: self.pixel_units | c.pixel_units,
            file: self.file.layer(c.file),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct IcoArgs {
    /// Subdivision order.
    #[arg(long, value_name = "K")]
    order: Option<u32>,
    /// OBJ path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}
layered!(IcoArgs { opt: [order, out], flag: [], list: [] });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct LossArgs {
    /// l1, log, berhu, grad, cosine, vnl, comb, comb+vnl or l1+vnl.
    #[arg(long)]
    kind: Option<LossKind>,
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Also report the max relative gap to a central-difference gradient.
    #[arg(long)]
    fd_check: bool,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    grad_scales: Option<usize>,
    #[arg(long)]
    vnl_triplets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ground truth beyond this depth is masked out.
    #[arg(long)]
    max_depth: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    file: FileArgs,
}

impl Layer for LossArgs {
    fn layer(self, c: Self) -> Self {
        LossArgs {
            kind: self.kind.or(c.kind),
            pred: self.pred.or(c.pred),
            gt: self.gt.or(c.gt),
            fd_check: self.fd_check | c.fd_check,
            fd_step: self.fd_step.or(c.fd_step),
            grad_scales: self.grad_scales.or(c.grad_scales),
            vnl_triplets: self.vnl_triplets.or(c.vnl_triplets),
            seed: self.seed.or(c.seed),
            max_depth: self.max_depth.or(c.max_depth),
            file: self.file.layer(c.file),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct ExportArgs {
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Binary PLY point cloud with normals.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Triangle mesh, PLY or OBJ by extension.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Canny depth-edge map as PNG.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    disc_thresh: Option<f64>,
    #[arg(long)]
    canny_sigma: Option<f64>,
    #[arg(long)]
    canny_lo: Option<f64>,
    #[arg(long)]
    canny_hi: Option<f64>,
    #[arg(long)]
    max_depth: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    file: FileArgs,
}

impl Layer for ExportArgs {
    fn layer(self, c: Self) -> Self {
        ExportArgs {
            depth: self.depth.or(c.depth),
            points: self.points.or(c.points),
            mesh: self.mesh.or(c.mesh),
            edges: self.edges.or(c.edges),
            disc_thresh: self.disc_thresh.or(c.disc_thresh),
            canny_sigma: self.canny_sigma.or(c.canny_sigma),
            canny_lo: self.canny_lo.or(c.canny_lo),
            canny_hi: self.canny_hi.or(c.canny_hi),
            max_depth: self.max_depth.or(c.max_depth),
            file: self.file.layer(c.file),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct Config {
    eval: EvalArgs,
    compare: CompareArgs,
    indicators: IndicatorsArgs,
    filter_split: FilterArgs,
    warp: WarpArgs,
    icosphere: IcoArgs,
    loss: LossArgs,
    export: ExportArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Run(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| Failure::Usage(format!("missing required `--{flag}` (flag or config)")))
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> CliResult {
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io { path: p.to_path_buf(), source: e }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io { path: "<stdout>".into(), source: e }),
    };
    res.map_err(Failure::from)
}

fn load_reports(paths: &[PathBuf]) -> CliResult<Vec<MetricsReport>> {
    if paths.is_empty() {
        return Err(Failure::Usage("no `--reports` given".into()));
    }
    paths
        .iter()
        .map(|p| {
            let mut r = MetricsReport::load(p)?;
            if r.model.is_empty() {
                r.model = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            }
            Ok(r)
        })
        .collect()
}

fn canny(sigma: Option<f64>, lo: Option<f64>, hi: Option<f64>) -> CannyParams {
    let d = CannyParams::default();
    CannyParams {
        sigma: sigma.unwrap_or(d.sigma),
        low: lo.unwrap_or(d.low),
        high: hi.unwrap_or(d.high),
    }
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let pred = SampleManifest::read(&need(a.pred, "pred")?)?;
    let gt = SampleManifest::read(&need(a.gt, "gt")?)?;
    let defaults = BoundaryParams::default();
    let max_depth = a.max_depth.unwrap_or(DEFAULT_MAX_DEPTH);
    let geom = a.geom.then(|| {
        let d = GeomOptions::default();
        GeomOptions {
            disc_thresh: a.disc_thresh.unwrap_or(d.disc_thresh),
            hausdorff: HausdorffOptions {
                samples: a.m2m_samples.unwrap_or(d.hausdorff.samples),
                seed: a.seed.unwrap_or(d.hausdorff.seed),
            },
        }
    });
    let opts = EvalOptions {
        model: a.model.unwrap_or_default(),
        max_depth,
        spherical_weights: a.weights == Some(Weights::Spherical),
        ico_order: a.ico,
        boundary: BoundaryParams {
            canny: canny(a.canny_sigma, a.canny_lo, a.canny_hi),
            max_depth,
            dbe_truncation: a.dbe_trunc.unwrap_or(defaults.dbe_truncation),
            edge_tolerance: a.edge_tol.unwrap_or(defaults.edge_tolerance),
        },
        geom,
        aggregation: if a.per_sample_mean { Aggregation::PerSampleMean } else { Aggregation::Pooled },
        jobs: a.jobs.unwrap_or(0),
    };
    let started = std::time::Instant::now();
    let report = report::evaluate(&pred, &gt, &opts)?;
    log::info!(
        "evaluated {} samples in {:.2?}: rmse {:.4}, delta1.25 {:.4}",
        report.samples,
        started.elapsed(),
        report.direct.errors.rmse,
        report.direct.delta[2]
    );
    let mut json = report.to_json()?;
    json.push('\n');
    emit(a.out.as_deref(), &json)
}

fn cmd_compare(a: CompareArgs) -> CliResult {
    let reports = load_reports(&a.reports)?;
    let columns = match &a.columns {
        Some(s) => ColumnSpec::parse_list(s)?,
        None => reports[0].columns().iter().map(|(name, _)| ColumnSpec::new(name)).collect(),
    };
    let table = report::rank_models(&reports, &columns)?;
    let text = match a.format.unwrap_or(TableFormat::Md) {
        TableFormat::Md => table.to_markdown(),
        TableFormat::Csv => table.to_csv(),
        TableFormat::Json => table.to_json()? + "\n",
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_indicators(a: IndicatorsArgs) -> CliResult {
    let reports = load_reports(&a.reports)?;
    let rows: Vec<(String, Indicators)> = reports.iter().map(|r| (r.model.clone(), report::indicators(r))).collect();
    let text = match a.format.unwrap_or(TableFormat::Csv) {
        TableFormat::Csv => {
            let mut s = format!("{}\n", Indicators::CSV_HEADER);
            for (m, i) in &rows {
                s.push_str(&i.csv_row(m));
                s.push('\n');
            }
            s
        }
        TableFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(m, i)| Ok((m.clone(), serde_json::to_value(i)?)))
                .collect::<Result<_, serde_json::Error>>()
                .map_err(Error::from)?;
            serde_json::to_string_pretty(&map).map_err(Error::from)? + "\n"
        }
        TableFormat::Md => return Err(Failure::Usage("indicators are written as csv or json".into())),
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_filter(a: FilterArgs) -> CliResult {
    let manifest = SampleManifest::read(&need(a.manifest, "manifest")?)?;
    let out = need(a.out, "out")?;
    let FilterOutcome { kept, dropped } = io::filter_split(&manifest, a.max_invalid.unwrap_or(DEFAULT_MAX_INVALID))?;
    kept.save(&out)?;
    if let Some(p) = a.dropped {
        let mut text = String::new();
        for d in &dropped {
            text.push_str(&serde_json::to_string(d).map_err(Error::from)?);
            text.push('\n');
        }
        emit(Some(&p), &text)?;
    }
    eprintln!("kept {} of {} samples", kept.len(), manifest.len());
    Ok(())
}

fn cmd_warp(a: WarpArgs) -> CliResult {
    let depth_path = need(a.depth, "depth")?;
    let field_path = need(a.field, "field")?;
    let out = need(a.out, "out")?;
    let d = DepthPanorama::from_depth(a.file.read(&depth_path)?, f64::INFINITY)?;
    let mut field = DisplacementField::load(&field_path)?;
    if a.pixel_units {
        field = DisplacementField::from_pixel_units(field.dphi(), field.dtheta())?;
    }
    let warped = warp::apply_displacement(&d, &field)?;
    a.file.write(&out, warped.depth())?;
    Ok(())
}

fn cmd_icosphere(a: IcoArgs) -> CliResult {
    let ico = build_icosphere(need(a.order, "order")?)?;
    let write = |w: &mut dyn Write| ico.write_obj(w);
    let res = match &a.out {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => write(&mut std::io::stdout().lock()),
    };
    res.map_err(|e| Failure::from(Error::Io { path: a.out.unwrap_or_else(|| "<stdout>".into()), source: e }))
}

fn cmd_loss(a: LossArgs) -> CliResult {
    let kind = need(a.kind, "kind")?;
    let pred = a.file.read(&need(a.pred, "pred")?)?;
    let gt = DepthPanorama::from_depth(a.file.read(&need(a.gt, "gt")?)?, a.max_depth.unwrap_or(DEFAULT_MAX_DEPTH))?;
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", gt.width(), gt.height()),
            found: format!("{}x{}", pred.width(), pred.height()),
        }
        .into());
    }
    let mask = gt.mask().and(&pred.map(|p| p.is_finite() && *p > 0.0))?;
    let defaults = LossOptions::default();
    let opts = LossOptions {
        grad_scales: a.grad_scales.unwrap_or(defaults.grad_scales),
        vnl: VnlConfig {
            n_triplets: a.vnl_triplets.unwrap_or(defaults.vnl.n_triplets),
            seed: a.seed.unwrap_or(defaults.vnl.seed),
            ..defaults.vnl
        },
    };
    let value = losses::evaluate(kind, &pred, gt.depth(), &mask, &opts)?.value;
    let mut out = serde_json::json!({ "kind": kind, "value": value });
    if a.fd_check {
        let step = a.fd_step.unwrap_or(losses::DEFAULT_FD_STEP);
        out["fd_discrepancy"] = losses::finite_difference_check(kind, &pred, gt.depth(), &mask, &opts, step)?.into();
    }
    emit(None, &format!("{out}\n"))
}

fn cmd_export(a: ExportArgs) -> CliResult {
    let d = DepthPanorama::from_depth(a.file.read(&need(a.depth, "depth")?)?, a.max_depth.unwrap_or(DEFAULT_MAX_DEPTH))?;
    if a.points.is_none() && a.mesh.is_none() && a.edges.is_none() {
        return Err(Failure::Usage("nothing to export: pass --points, --mesh or --edges".into()));
    }
    if let Some(p) = &a.points {
        geom::write_points_ply(p, &geom::lift(&d)?)?;
    }
    if let Some(p) = &a.mesh {
        let mesh = geom::grid_mesh(&d, a.disc_thresh.unwrap_or(geom::DEFAULT_DISC_THRESHOLD))?;
        let obj = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
        if obj {
            geom::write_mesh_obj(p, &mesh)?;
        } else {
            geom::write_mesh_ply(p, &mesh)?;
        }
    }
    if let Some(p) = &a.edges {
        let params = canny(a.canny_sigma, a.canny_lo, a.canny_hi);
        boundary::canny_edges(&d, &params, a.max_depth.unwrap_or(DEFAULT_MAX_DEPTH))?.save_png(p)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    let c = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Eval(a) => cmd_eval(a.layer(c.eval)),
        Command::Compare(a) => cmd_compare(a.layer(c.compare)),
        Command::Indicators(a) => cmd_indicators(a.layer(c.indicators)),
        Command::FilterSplit(a) => cmd_filter(a.layer(c.filter_split)),
        Command::Warp(a) => cmd_warp(a.layer(c.warp)),
        Command::Icosphere(a) => cmd_icosphere(a.layer(c.icosphere)),
        Command::Loss(a) => cmd_loss(a.layer(c.loss)),
        Command::Export(a) => cmd_export(a.layer(c.export)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
