//! The `smapy` command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data or runtime
//! error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::agents::{ScoreNormalization, SystemParams};
use crate::engine::SystemState;
use crate::error::Error;
use crate::evaluation::{
    boundary_raster, default_ranges, load_csv, make_synthetic, read_feature_rows, Dataset, EvalReport, GridSearch,
    GridSpec, LinearBaseline, Stage, SyntheticKind, DEFAULT_FOLDS, DEFAULT_RESOLUTION, DEFAULT_STANDALONE_EPOCHS,
};
use crate::learners::{LearnerKind, LearnerSettings};
use crate::model_file::{LoadedModel, ModelBody, ModelFile, ModelMeta, Provenance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config() { EXIT_USAGE } else { EXIT_DATA },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(name = "smapy", version, about = "Cooperative context-learning classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an agent system (or a standalone linear model) and write a model file.
    Train(TrainArgs),
    /// Classify the rows of a CSV file with a trained model.
    Predict(PredictArgs),
    /// Cross-validated grid search over model or system parameters.
    Gridsearch(GridArgs),
    /// Rasterize the decision regions of a two-feature model.
    Boundary(BoundaryArgs),
    /// Generate a synthetic two-feature dataset.
    Synth(SynthArgs),
    /// Print the agents of a model file.
    Inspect(InspectArgs),
}

/// Train settings; every field may also come from a TOML config file.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainArgs {
    /// TOML file with any of these settings (flags take precedence).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated feature column names.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long)]
    label: Option<String>,
    /// smapy (agent system) or linear (standalone learner).
    #[arg(long)]
    mode: Option<String>,
    /// logistic, linear_svm, pa1 or pa2.
    #[arg(long)]
    learner: Option<String>,
    /// Aggressiveness C of pa1/pa2.
    #[arg(long)]
    pa_c: Option<f64>,
    /// Regularization strength of logistic/linear_svm.
    #[arg(long)]
    alpha_reg: Option<f64>,
    /// l1, l2 or elastic_net.
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    l1_ratio: Option<f64>,
    /// Initial half-width R of new agents (normalized units).
    #[arg(long)]
    r: Option<f64>,
    /// Overlap threshold O, or `none`.
    #[arg(long)]
    overlap: Option<String>,
    /// Point exclusion E.
    #[arg(long)]
    exclusion: Option<bool>,
    /// Expansion/retraction factor.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    f_plus: Option<f64>,
    #[arg(long)]
    f_minus: Option<f64>,
    /// Passes over the data for `--mode linear`.
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training log path (JSON lines); defaults to `<out>.log.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
}

impl TrainArgs {
    fn overlay(self, flags: TrainArgs) -> TrainArgs {
        macro_rules! pick {
            ($($f:ident),*) => { TrainArgs { $($f: flags.$f.or(self.$f)),* } };
        }
        pick!(
            config, data, features, label, mode, learner, pa_c, alpha_reg, penalty, l1_ratio, r, overlap, exclusion,
            alpha, f_plus, f_minus, epochs, seed, out, log
        )
    }
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (`row,label`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long)]
    label: String,
    /// linear (model grid) or mas (system grid).
    #[arg(long)]
    stage: String,
    /// Required for the linear stage; taken from the fixed-parameter report otherwise.
    #[arg(long)]
    learner: Option<String>,
    /// Report of a prior linear-stage search whose best learner is frozen.
    #[arg(long)]
    fixed_model_params: Option<PathBuf>,
    /// TOML file with `[model]` and/or `[system]` tables of candidate lists.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Passes over the training folds for standalone learners.
    #[arg(long, default_value_t = DEFAULT_STANDALONE_EPOCHS)]
    epochs: u32,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// `lo,hi` in raw feature units; defaults to the training range plus 5%.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    x_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    y_range: Option<(f64, f64)>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// xor, moons, circles or blobs.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, stderr),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Gridsearch(a) => cmd_gridsearch(a, stdout),
        Command::Boundary(a) => cmd_boundary(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
        Command::Inspect(a) => cmd_inspect(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e).into())
}

fn write_all(path: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e).into()),
        None => stdout.write_all(bytes).map_err(|e| Error::io("<stdout>", e).into()),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("missing required setting `--{flag}`")))
}

fn parse_overlap(text: &str) -> Result<Option<f64>, Failure> {
    if text.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    text.parse::<f64>()
        .map(Some)
        .map_err(|_| Failure::usage(format!("overlap must be a number or `none`, got `{text}`")))
}

fn load_dataset(
    path: &Path,
    features: &[String],
    label: &str,
    stderr: Option<&mut dyn Write>,
) -> Result<Dataset, Failure> {
    let load = load_csv(path, features, label)?;
    if load.dropped > 0 {
        if let Some(err) = stderr {
            let _ = writeln!(err, "dropped {} incomplete rows", load.dropped);
        }
    }
    Ok(load.dataset)
}

fn cmd_train(flags: TrainArgs, stderr: &mut dyn Write) -> CmdResult {
    let args = match &flags.config {
        Some(path) => {
            let file: TrainArgs =
                toml::from_str(&read_text(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            file.overlay(flags)
        }
        None => flags,
    };

    let data_path = require(args.data.clone(), "data")?;
    let features = require(args.features.clone(), "features")?;
    let label = require(args.label.clone(), "label")?;
    let out = require(args.out.clone(), "out")?;
    let kind: LearnerKind = require(args.learner.as_deref(), "learner")?.parse()?;
    let linear_mode = match args.mode.as_deref().unwrap_or("smapy") {
        "smapy" => false,
        "linear" => true,
        other => return Err(Failure::usage(format!("unknown mode `{other}`"))),
    };
    let learner = LearnerSettings {
        kind: Some(kind),
        alpha_reg: args.alpha_reg,
        penalty: args.penalty.as_deref().map(str::parse).transpose()?,
        l1_ratio: args.l1_ratio,
        c: args.pa_c,
    }
    .validate()?;
    let defaults = SystemParams::default();
    let params = SystemParams {
        r: args.r.unwrap_or(defaults.r),
        overlap: match args.overlap.as_deref() {
            Some(text) => parse_overlap(text)?,
            None => defaults.overlap,
        },
        exclusion: args.exclusion.unwrap_or(defaults.exclusion),
        normalization: ScoreNormalization::Sigmoid,
        alpha: args.alpha.unwrap_or(defaults.alpha),
        f_plus: args.f_plus.unwrap_or(defaults.f_plus),
        f_minus: args.f_minus.unwrap_or(defaults.f_minus),
    };
    params.validate()?;
    let seed = args.seed.unwrap_or(0);

    let data = load_dataset(&data_path, &features, &label, Some(stderr))?;
    let mut meta = ModelMeta {
        feature_names: data.feature_names.clone(),
        label_name: data.label_name.clone(),
        classes: data.classes(),
        provenance: Provenance {
            seed,
            dataset_digest: data.digest(),
            cycles: 0,
        },
    };

    let file = if linear_mode {
        let epochs = args.epochs.unwrap_or(DEFAULT_STANDALONE_EPOCHS);
        let baseline = LinearBaseline::fit(learner, &data.features, &data.labels, epochs, seed)?;
        meta.provenance.cycles = baseline.model().updates();
        ModelFile::from_baseline(&baseline, meta)
    } else {
        let mut state = SystemState::new(params, learner, data.dim())?;
        let log = state.fit(&data.features, &data.labels, seed)?;
        let log_path = args.log.clone().unwrap_or_else(|| {
            let mut p = out.clone().into_os_string();
            p.push(".log.jsonl");
            PathBuf::from(p)
        });
        let mut w = create(&log_path)?;
        log.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(&log_path, e))?;
        meta.provenance.cycles = state.cycle();
        ModelFile::from_system(&state, meta)
    };
    file.save(&out)?;
    Ok(())
}

fn cmd_predict(args: PredictArgs, stdout: &mut dyn Write) -> CmdResult {
    let file = ModelFile::load(&args.model)?;
    let model = file.to_model()?;
    let input = File::open(&args.data).map_err(|e| Error::io(&args.data, e))?;
    let rows = read_feature_rows(input, &file.feature_names)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "label"]).map_err(Error::from)?;
    for (i, row) in rows.iter().enumerate() {
        w.write_record([i.to_string(), model.predict(row)?])
            .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    })?;
    write_all(args.out.as_deref(), stdout, &bytes)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    model: Option<serde_json::Map<String, serde_json::Value>>,
    system: Option<serde_json::Map<String, serde_json::Value>>,
}

fn cmd_gridsearch(args: GridArgs, stdout: &mut dyn Write) -> CmdResult {
    let stage: Stage = args.stage.parse()?;
    let fixed = match &args.fixed_model_params {
        Some(path) => {
            let report = EvalReport::from_json(&read_text(path)?)?;
            if report.stage != Stage::Linear {
                return Err(Failure::usage(format!(
                    "{} is not a linear-stage report",
                    path.display()
                )));
            }
            Some(report.best_row().learner)
        }
        None => None,
    };
    let learner: LearnerKind = match (args.learner.as_deref(), fixed) {
        (Some(name), _) => name.parse()?,
        (None, Some(cfg)) => cfg.kind(),
        (None, None) => return Err(Failure::usage("missing required setting `--learner`")),
    };
    if stage == Stage::Mas && fixed.is_none() {
        return Err(Failure::usage(
            "the mas stage needs `--fixed-model-params` from a linear-stage report",
        ));
    }

    let mut search = GridSearch::new(stage, learner);
    search.fixed_model = fixed;
    search.k = args.k;
    search.seed = args.seed;
    search.standalone_epochs = args.epochs;
    if let Some(path) = &args.grid {
        let grid: GridFile =
            toml::from_str(&read_text(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        if let Some(m) = &grid.model {
            search.model_grid = GridSpec::model_from_map(m)?;
        }
        if let Some(s) = &grid.system {
            search.system_grid = GridSpec::system_from_map(s)?;
        }
    }

    let data = load_dataset(&args.data, &args.features, &args.label, None)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let report = pool.install(|| search.run(&data))?;
    std::fs::write(&args.out, report.to_json()?).map_err(|e| Error::io(&args.out, e))?;
    write_all(None, stdout, report.summary().as_bytes())
}

fn parse_range(text: &str) -> std::result::Result<(f64, f64), String> {
    let parsed = text
        .split_once(',')
        .and_then(|(lo, hi)| Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)));
    parsed.ok_or_else(|| format!("expected `lo,hi`, got `{text}`"))
}

fn cmd_boundary(args: BoundaryArgs, stdout: &mut dyn Write) -> CmdResult {
    let file = ModelFile::load(&args.model)?;
    if file.dim() != 2 {
        return Err(Failure::usage(format!(
            "boundary rasters need a two-feature model, this one has {}",
            file.dim()
        )));
    }
    let model = file.to_model()?;
    let (dx, dy) = default_ranges(&file.normalization.mins, &file.normalization.maxs)?;
    let raster = boundary_raster(
        model.dim(),
        |p| model.predict(p),
        args.x_range.unwrap_or(dx),
        args.y_range.unwrap_or(dy),
        args.resolution,
    )?;
    let mut buf = Vec::new();
    raster.write_csv(&mut buf)?;
    write_all(args.out.as_deref(), stdout, &buf)
}

fn cmd_synth(args: SynthArgs, stdout: &mut dyn Write) -> CmdResult {
    let kind: SyntheticKind = args.kind.parse()?;
    let data = make_synthetic(kind, args.n, args.noise, args.seed)?;
    write_all(args.out.as_deref(), stdout, data.to_csv_string()?.as_bytes())
}

fn cmd_inspect(args: InspectArgs, stdout: &mut dyn Write) -> CmdResult {
    let file = ModelFile::load(&args.model)?;
    let model = file.to_model()?;
    let mut out = String::new();
    match (&file.model, &model) {
        (ModelBody::Smapy { params, .. }, LoadedModel::Smapy(state)) => {
            out.push_str(&format!(
                "agents={} cycles={} learner={}\n",
                state.agents().len(),
                state.cycle(),
                state.learner().kind()
            ));
            out.push_str("id\tlower\tupper\tvolume\tconfidence\tscore\tcenter_class\n");
            for a in state.agents() {
                let center = a.zone.center();
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    a.id,
                    fmt_vec(a.zone.lower()),
                    fmt_vec(a.zone.upper()),
                    a.zone.volume(),
                    a.confidence,
                    a.score(params),
                    a.model.predict(&center)?
                ));
            }
        }
        (_, LoadedModel::Linear(b)) => {
            out.push_str(&format!(
                "linear learner={} epochs={}\n",
                b.model().config().kind(),
                b.epochs()
            ));
            out.push_str("class\tweights\tbias\n");
            for (class, row) in b.model().classes().iter().zip(b.model().weights()) {
                let (w, bias) = row.split_at(row.len() - 1);
                out.push_str(&format!("{class}\t{}\t{}\n", fmt_vec(w), bias[0]));
            }
        }
        _ => unreachable!("model body and loaded model agree"),
    }
    write_all(None, stdout, out.as_bytes())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}
