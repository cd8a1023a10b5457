//! Command-line front end: configuration merging, subcommands and manifests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::events::{io, ActorId, ActorTable, CleaningConfig, Dataset, IngestReport, ObservationWindow};
use crate::intensity::ModelSpec;
use crate::netestimate::{
    estimate_network, write_edges, write_series, ExportFormat, SnapshotEdge, SnapshotEntry,
    SnapshotManifest,
};
use crate::posterior::{diagnostics, sample_posterior, Chain, McmcConfig, PriorSpec};
use crate::simulate::{generate_dataset, swallow_benchmark};

#[derive(Debug, Parser)]
#[command(name = "latnet", version, about = "Latent dynamic networks from dyadic interaction logs")]
pub struct Cli {
    /// JSON run configuration; relative paths inside it resolve against its directory.
    #[arg(long, global = true, env = "LATNET_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "LATNET_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "LATNET_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "LATNET_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean raw logs into per-dyad event streams and windows.
    Ingest(DataArgs),
    /// Generate a synthetic dataset with known truth.
    Simulate(SimulateArgs),
    /// Sample the parameter posterior.
    Fit(FitArgs),
    /// Posterior edge probabilities over time.
    Estimate(EstimateArgs),
    /// Network at given times.
    Snapshot(SnapshotArgs),
    /// Convergence summaries of a chain.
    Diagnostics(ChainArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    #[arg(long, env = "LATNET_ENCOUNTERS")]
    pub encounters: Option<PathBuf>,
    #[arg(long, env = "LATNET_ATTRIBUTES")]
    pub attributes: Option<PathBuf>,
    #[arg(long, env = "LATNET_ACTIVITY")]
    pub activity: Option<PathBuf>,
    /// Merge gap in hours.
    #[arg(long)]
    pub gap_hours: Option<f64>,
    #[arg(long)]
    pub floor_threshold: Option<f64>,
    /// Preset cleaning rules: `mit` or `swallow`.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Built-in scenario; `swallow` is the desk-scale swallow analog.
    #[arg(long)]
    pub benchmark: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Sample the prior only.
    #[arg(long)]
    pub prior_only: bool,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain CSV; defaults to `chain.csv` in the output directory.
    #[arg(long)]
    pub chain: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Use every m-th retained sample.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Use every retained sample.
    #[arg(long)]
    pub full: bool,
    /// Spacing of the evaluation grid in hours.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Explicit query times; overrides the grid.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, value_delimiter = ',')]
    pub time: Option<Vec<f64>>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub encounters: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub activity: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub chain: Option<PathBuf>,
    pub thin: usize,
    pub full: bool,
    pub grid_step: f64,
    pub times: Option<Vec<f64>>,
    pub format: String,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            chain: None,
            thin: 10,
            full: false,
            grid_step: 1.0,
            times: None,
            format: "json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotConfig {
    pub times: Vec<f64>,
    pub threshold: Option<f64>,
    pub format: String,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            times: Vec::new(),
            threshold: None,
            format: "csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub benchmark: Option<String>,
    /// Generating values by parameter name, used with `model` and the data paths.
    pub theta: BTreeMap<String, f64>,
}

/// Effective configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub cleaning: CleaningConfig,
    pub model: Option<ModelSpec>,
    /// Entries replacing the model's default priors.
    pub priors: PriorSpec,
    pub mcmc: McmcConfig,
    pub estimate: EstimateConfig,
    pub snapshot: SnapshotConfig,
    pub simulate: SimulateConfig,
    pub out: PathBuf,
    /// Overrides `mcmc.seed` when set.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataPaths::default(),
            cleaning: CleaningConfig::default(),
            model: None,
            priors: PriorSpec::new(),
            mcmc: McmcConfig::default(),
            estimate: EstimateConfig::default(),
            snapshot: SnapshotConfig::default(),
            simulate: SimulateConfig::default(),
            out: PathBuf::from("out"),
            seed: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data.encounters,
            &mut cfg.data.attributes,
            &mut cfg.data.activity,
            &mut cfg.estimate.chain,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.mcmc.seed)
    }

    fn apply_data(&mut self, a: &DataArgs) -> Result<()> {
        if let Some(preset) = &a.preset {
            self.cleaning = match preset.as_str() {
                "mit" => CleaningConfig::mit(),
                "swallow" => CleaningConfig::swallow(),
                other => return Err(Error::config(format!("unknown cleaning preset `{other}`"))),
            };
        }
        set(&mut self.data.encounters, &a.encounters);
        set(&mut self.data.attributes, &a.attributes);
        set(&mut self.data.activity, &a.activity);
        if let Some(g) = a.gap_hours {
            self.cleaning.gap_threshold_hours = g;
        }
        if a.floor_threshold.is_some() {
            self.cleaning.floor_prob_threshold = a.floor_threshold;
        }
        Ok(())
    }

    /// Folds flags over the file configuration.
    pub fn merge(cli: &Cli) -> Result<RunConfig> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if cli.seed.is_some() {
            cfg.seed = cli.seed;
        }
        if cli.threads.is_some() {
            cfg.threads = cli.threads;
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        match &cli.command {
            Command::Ingest(a) => cfg.apply_data(a)?,
            Command::Simulate(a) => {
                cfg.apply_data(&a.data)?;
                set(&mut cfg.simulate.benchmark, &a.benchmark);
            }
            Command::Fit(a) => {
                cfg.apply_data(&a.data)?;
                if let Some(n) = a.iterations {
                    cfg.mcmc.iterations = n;
                }
                if let Some(n) = a.burn_in {
                    cfg.mcmc.burn_in = n;
                }
            }
            Command::Estimate(a) => {
                cfg.apply_data(&a.data)?;
                set(&mut cfg.estimate.chain, &a.chain.chain);
                if let Some(m) = a.thin {
                    cfg.estimate.thin = m;
                }
                cfg.estimate.full |= a.full;
                if let Some(h) = a.grid_step {
                    cfg.estimate.grid_step = h;
                }
                if a.times.is_some() {
                    cfg.estimate.times = a.times.clone();
                }
                set_string(&mut cfg.estimate.format, &a.format);
            }
            Command::Snapshot(a) => {
                cfg.apply_data(&a.data)?;
                set(&mut cfg.estimate.chain, &a.chain.chain);
                if let Some(m) = a.thin {
                    cfg.estimate.thin = m;
                }
                cfg.estimate.full |= a.full;
                if let Some(t) = &a.time {
                    cfg.snapshot.times = t.clone();
                }
                if a.threshold.is_some() {
                    cfg.snapshot.threshold = a.threshold;
                }
                set_string(&mut cfg.snapshot.format, &a.format);
            }
            Command::Diagnostics(a) => set(&mut cfg.estimate.chain, &a.chain),
        }
        cfg.mcmc.seed = cfg.seed();
        Ok(cfg)
    }

    fn chain_path(&self) -> PathBuf {
        self.estimate.chain.clone().unwrap_or_else(|| self.out.join("chain.csv"))
    }

    fn thin(&self) -> usize {
        if self.estimate.full {
            1
        } else {
            self.estimate.thin.max(1)
        }
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

fn set_string(slot: &mut String, flag: &Option<String>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

/// Replay record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Outputs> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(mut self, command: &str, cfg: &RunConfig, summary: serde_json::Value) -> Result<()> {
        let path = self.dir.join(format!("manifest_{command}.json"));
        self.files.sort();
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed(),
            config_hash: config_hash(cfg)?,
            config: cfg.clone(),
            outputs: self.files,
            summary,
        };
        write_json(&path, &manifest)
    }
}

fn read_inputs(cfg: &RunConfig) -> Result<(Vec<crate::events::RawEncounter>, BTreeMap<ActorId, ObservationWindow>, ActorTable)> {
    let name = |p: &Path| p.display().to_string();
    let encounters = match &cfg.data.encounters {
        Some(p) => io::read_encounters(open(p)?, &name(p))?,
        None => Vec::new(),
    };
    let activity = match &cfg.data.activity {
        Some(p) => io::read_activity(open(p)?, &name(p))?,
        None => BTreeMap::new(),
    };
    let actors = match &cfg.data.attributes {
        Some(p) => io::read_attributes(open(p)?, &name(p))?,
        None => ActorTable::default(),
    };
    Ok((encounters, activity, actors))
}

fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, IngestReport)> {
    let (encounters, activity, actors) = read_inputs(cfg)?;
    Dataset::prepare(encounters, &activity, actors, &cfg.cleaning)
}

/// Validated model with data-driven constants filled in.
fn load_model(cfg: &mut RunConfig, dataset: &Dataset) -> Result<ModelSpec> {
    let model = cfg
        .model
        .as_mut()
        .ok_or_else(|| Error::config("no `model` in the configuration"))?;
    model.resolve(dataset);
    model.validate()?;
    Ok(model.clone())
}

fn priors_for(cfg: &RunConfig, model: &ModelSpec) -> PriorSpec {
    let mut priors = PriorSpec::default_for(model);
    for (k, v) in &cfg.priors.entries {
        priors.entries.insert(k.clone(), *v);
    }
    priors
}

fn parallel(cfg: &RunConfig) -> bool {
    cfg.threads != Some(1)
}

fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    let (dataset, report) = load_dataset(cfg)?;
    let mut out = Outputs::new(&cfg.out)?;
    {
        let p = out.path("events.csv");
        let mut w = csv::Writer::from_writer(create(&p)?);
        w.write_record(["i", "j", "t"])?;
        for s in &dataset.streams {
            for t in &s.times {
                w.write_record([s.dyad.i.to_string(), s.dyad.j.to_string(), t.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    {
        let p = out.path("windows.csv");
        let mut w = csv::Writer::from_writer(create(&p)?);
        w.write_record(["i", "j", "start", "end"])?;
        for s in &dataset.streams {
            for span in s.window.spans() {
                w.write_record([
                    s.dyad.i.to_string(),
                    s.dyad.j.to_string(),
                    span.start.to_string(),
                    span.end.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    write_json(&out.path("report.json"), &report)?;
    println!(
        "{} actors, {} dyads, {} interactions",
        report.actor_count, report.dyad_count, report.event_count
    );
    out.finish("ingest", cfg, serde_json::to_value(&report)?)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed();
    let (model, theta, actors, activity) = match (cfg.simulate.benchmark.as_deref(), &cfg.model) {
        (Some("swallow"), _) | (None, None) => {
            let b = swallow_benchmark(seed);
            (b.spec, b.theta, b.actors, b.activity)
        }
        (Some(other), _) => return Err(Error::config(format!("unknown benchmark `{other}`"))),
        (None, Some(model)) => {
            model.validate()?;
            let theta = model
                .parameter_names()
                .iter()
                .map(|n| {
                    cfg.simulate
                        .theta
                        .get(n)
                        .copied()
                        .ok_or_else(|| Error::config(format!("simulate.theta lacks `{n}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let (_, activity, actors) = read_inputs(cfg)?;
            (model.clone(), theta, actors, activity)
        }
    };
    let syn = generate_dataset(&model, &theta, &actors, &activity, seed)?;
    let mut out = Outputs::new(&cfg.out)?;
    syn.write_dir(&cfg.out)?;
    for f in [
        "encounters.csv",
        "activity.csv",
        "attributes.csv",
        "truth_paths.csv",
        "truth_theta.json",
    ] {
        out.path(f);
    }
    let run = RunConfig {
        data: DataPaths {
            encounters: Some("encounters.csv".into()),
            attributes: Some("attributes.csv".into()),
            activity: Some("activity.csv".into()),
        },
        model: Some(model),
        mcmc: McmcConfig {
            seed,
            ..cfg.mcmc.clone()
        },
        priors: cfg.priors.clone(),
        out: PathBuf::from("."),
        ..RunConfig::default()
    };
    write_json(&out.path("run.json"), &run)?;
    let report = syn.dataset.report();
    println!("{} dyads, {} events", report.dyad_count, report.event_count);
    out.finish("simulate", cfg, serde_json::to_value(&report)?)
}

fn cmd_fit(cfg: &mut RunConfig, prior_only: bool) -> Result<()> {
    let (dataset, _) = load_dataset(cfg)?;
    let model = load_model(cfg, &dataset)?;
    let priors = priors_for(cfg, &model);
    let chain = sample_posterior(&dataset, &model, &priors, &cfg.mcmc, !prior_only, parallel(cfg))?;
    let mut out = Outputs::new(&cfg.out)?;
    let p = out.path("chain.csv");
    let mut w = create(&p)?;
    chain.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&p, e))?;
    let acceptance: BTreeMap<&str, f64> = chain
        .names
        .iter()
        .map(String::as_str)
        .zip(chain.acceptance.iter().copied())
        .collect();
    out.finish(
        "fit",
        cfg,
        serde_json::json!({ "samples": chain.len(), "acceptance": acceptance }),
    )
}

fn read_chain(path: &Path) -> Result<Chain> {
    Chain::read_csv(open(path)?, &path.display().to_string())
}

fn cmd_estimate(cfg: &mut RunConfig) -> Result<()> {
    let format: ExportFormat = cfg.estimate.format.parse()?;
    let (dataset, _) = load_dataset(cfg)?;
    let model = load_model(cfg, &dataset)?;
    let chain = read_chain(&cfg.chain_path())?;
    let est = estimate_network(&model, &dataset, &chain, cfg.thin(), parallel(cfg))?;
    let times = match &cfg.estimate.times {
        Some(t) => {
            let mut t = t.clone();
            t.sort_by(f64::total_cmp);
            t
        }
        None => {
            let step = cfg.estimate.grid_step;
            if !(step > 0.0) {
                return Err(Error::config("estimate.grid_step must be positive"));
            }
            match dataset.horizon() {
                Some((lo, hi)) => {
                    let n = ((hi - lo) / step).floor() as usize;
                    (0..=n).map(|k| lo + k as f64 * step).collect()
                }
                None => Vec::new(),
            }
        }
    };
    let mut out = Outputs::new(&cfg.out)?;
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    let p = out.path(&format!("series.{ext}"));
    let mut w = create(&p)?;
    write_series(&mut w, &est.series(&times), format)?;
    w.flush().map_err(|e| Error::io(&p, e))?;
    let means: Vec<SnapshotEdge> = est
        .edges
        .iter()
        .map(|e| SnapshotEdge {
            i: e.dyad.i,
            j: e.dyad.j,
            prob: e.mean_probability(),
        })
        .collect();
    let p = out.path("mean_edges.csv");
    let mut w = create(&p)?;
    write_edges(&mut w, &means, ExportFormat::Csv)?;
    w.flush().map_err(|e| Error::io(&p, e))?;
    out.finish(
        "estimate",
        cfg,
        serde_json::json!({
            "dyads": est.edges.len(),
            "samples_used": est.samples_used,
            "thin": est.thin,
            "times": times.len(),
        }),
    )
}

fn cmd_snapshot(cfg: &mut RunConfig) -> Result<()> {
    let format: ExportFormat = cfg.snapshot.format.parse()?;
    if cfg.snapshot.times.is_empty() {
        return Err(Error::config("snapshot needs at least one time"));
    }
    if let Some(thr) = cfg.snapshot.threshold {
        if !(0.0..=1.0).contains(&thr) {
            return Err(Error::config("snapshot.threshold must lie in [0, 1]"));
        }
    }
    let (dataset, _) = load_dataset(cfg)?;
    let model = load_model(cfg, &dataset)?;
    let chain = read_chain(&cfg.chain_path())?;
    let est = estimate_network(&model, &dataset, &chain, cfg.thin(), parallel(cfg))?;
    let ids: Vec<ActorId> = dataset.actors.actors.keys().copied().collect();
    let horizon = dataset.horizon();
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    let mut out = Outputs::new(&cfg.out)?;
    let mut manifest = SnapshotManifest { snapshots: Vec::new() };
    for &t in &cfg.snapshot.times {
        if !horizon.is_some_and(|(lo, hi)| (lo..=hi).contains(&t)) {
            eprintln!("warning: time {t} is outside the study horizon; the snapshot is empty");
        }
        let snap = est.snapshot(t, cfg.snapshot.threshold, &ids);
        let file = format!("edges_t{t}.{ext}");
        let p = out.path(&file);
        let mut w = create(&p)?;
        write_edges(&mut w, &snap.edges, format)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
        if let Some(strong) = &snap.strong {
            let p = out.path(&format!("strong_edges_t{t}.{ext}"));
            let mut w = create(&p)?;
            write_edges(&mut w, strong, format)?;
            w.flush().map_err(|e| Error::io(&p, e))?;
        }
        let p = out.path(&format!("monitored_t{t}.csv"));
        let mut w = csv::Writer::from_writer(create(&p)?);
        w.write_record(["actor", "monitored"])?;
        for (a, m) in &snap.monitored {
            w.write_record([a.to_string(), (*m as u8).to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        manifest.snapshots.push(SnapshotEntry {
            time: t,
            threshold: snap.threshold,
            file,
            edges: snap.edges.len(),
            strong_edges: snap.strong.as_ref().map(Vec::len),
            monitored_actors: snap.monitored.values().filter(|&&m| m).count(),
        });
    }
    write_json(&out.path("snapshots.json"), &manifest)?;
    out.finish("snapshot", cfg, serde_json::to_value(&manifest)?)
}

fn cmd_diagnostics(cfg: &RunConfig) -> Result<()> {
    let chain = read_chain(&cfg.chain_path())?;
    let report = diagnostics(&chain)?;
    let mut out = Outputs::new(&cfg.out)?;
    let p = out.path("diagnostics.csv");
    let mut w = create(&p)?;
    report.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&p, e))?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
    println!("{:<10} {:>10} {:>8} {:>8} {:>8}", "param", "mean", "accept", "rhat", "ess");
    for d in &report.params {
        println!(
            "{:<10} {:>10.4} {:>8.3} {:>8} {:>8}",
            d.name,
            d.mean,
            d.acceptance,
            fmt(d.split_rhat),
            fmt(d.ess)
        );
    }
    out.finish("diagnostics", cfg, serde_json::json!({ "samples": report.samples }))
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        Error::Data { .. } | Error::Io { .. } | Error::Json(_) | Error::Csv(_) => 2,
        Error::Numerical(_) | Error::OutsideWindow(_) => 3,
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::merge(&cli)?;
    cfg.mcmc.validate()?;
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Ingest(_) => cmd_ingest(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Fit(a) => cmd_fit(&mut cfg, a.prior_only),
        Command::Estimate(_) => cmd_estimate(&mut cfg),
        Command::Snapshot(_) => cmd_snapshot(&mut cfg),
        Command::Diagnostics(_) => cmd_diagnostics(&cfg),
    })
}

/// Parses `args` and runs; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
