//! `acr`: perturb code review datasets, score models on the variants and
//! relate the failures to perturbation features.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use acr_core::features::{self, FeatureVector};
use acr_core::harness::{
    self, AdapterConfig, EvalSettings, Generation, Mitigation, SolveRecord, VariantScore, DEFAULT_SEED,
};
use acr_core::spp::PerturbationType;
use acr_core::stats::{self, GlmmOptions, ObservationRow};
use acr_core::{PerturbedVariant, ReviewInstance};

#[derive(Parser)]
#[command(name = "acr", version, about = "Robustness analysis for automated code revision models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply perturbation operators to every instance of a dataset.
    Perturb(PerturbArgs),
    /// Compute perturbation features of a variant file.
    Features(FeaturesArgs),
    /// Query models on originals and variants and score them.
    Evaluate(EvaluateArgs),
    /// Fit the mixed-effects regression to scored observations.
    Regress(RegressArgs),
    /// Render the CSV outputs of a run directory as one document.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Dataset of review instances (JSONL).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated operators (p1..p9); all when omitted.
    #[arg(long, value_delimiter = ',')]
    ptypes: Vec<PerturbationType>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Variant file; defaults to `<out>/variants.jsonl`.
    #[arg(long)]
    variants: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Use an existing variant file instead of generating variants.
    #[arg(long)]
    variants: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// `mock:<mode>`, `mock:scripted=<file>` or an adapter TOML file. Repeatable.
    #[arg(long, required = true)]
    adapter: Vec<String>,
    #[arg(long)]
    mitigation: Option<Mitigation>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Args)]
struct RegressArgs {
    /// Observation CSV; defaults to `<out>/observations.csv`.
    #[arg(long)]
    observations: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// z-score the continuous predictors.
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    standardize: OnOff,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory holding the CSV outputs.
    #[arg(long)]
    out: PathBuf,
}

/// Whether some inputs were skipped.
type Partial = bool;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Perturb(a) => perturb(&a),
        Command::Features(a) => features_cmd(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Regress(a) => regress(&a),
        Command::Report(a) => report::run(&a.out).map(|()| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn load(path: &Path) -> Result<(Vec<ReviewInstance>, Partial)> {
    let loaded = harness::load_dataset(path)?;
    for r in &loaded.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.message);
    }
    log::info!(
        "{}: {} instances loaded, {} rejected",
        path.display(),
        loaded.items.len(),
        loaded.rejected.len()
    );
    if loaded.items.is_empty() {
        bail!("{}: no usable instances", path.display());
    }
    Ok((loaded.items, !loaded.rejected.is_empty()))
}

fn load_variant_file(path: &Path) -> Result<(Vec<PerturbedVariant>, Partial)> {
    let loaded = harness::load_variants(path)?;
    for r in &loaded.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.message);
    }
    Ok((loaded.items, !loaded.rejected.is_empty()))
}

fn generate(gen: &GenArgs, instances: &[ReviewInstance]) -> (Generation, Partial) {
    let ptypes = if gen.ptypes.is_empty() {
        PerturbationType::ALL.to_vec()
    } else {
        gen.ptypes.clone()
    };
    let g = harness::generate_variants(instances, &ptypes, gen.seed);
    for (p, n) in g.counts() {
        log::info!("{p}: {n} variants");
    }
    for (r, n) in g.reasons() {
        log::info!("excluded ({r}): {n}");
    }
    let failed = g.exclusions.iter().filter(|e| e.reason.is_failure()).count();
    if failed > 0 {
        log::warn!("{failed} instance/operator pairs failed");
    }
    (g, failed > 0)
}

fn perturb(a: &PerturbArgs) -> Result<Partial> {
    let (instances, partial) = load(&a.gen.dataset)?;
    let (g, failed) = generate(&a.gen, &instances);
    out_dir(&a.out)?;
    write(&a.out.join("variants.jsonl"), &harness::to_jsonl(&g.variants))?;
    write(&a.out.join("exclusions.csv"), &harness::to_csv(&g.exclusions)?)?;
    Ok(partial || failed)
}

fn compute_features(instances: &[ReviewInstance], variants: &[PerturbedVariant]) -> (Vec<FeatureVector>, Partial) {
    let by_id: BTreeMap<&str, &ReviewInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut out = Vec::new();
    let mut partial = false;
    for v in variants {
        let Some(inst) = by_id.get(v.instance_id.as_str()) else {
            log::warn!("variant {} {}: no such instance in the dataset", v.instance_id, v.ptype);
            partial = true;
            continue;
        };
        match features::extract(v, inst) {
            Ok(f) => out.push(f),
            Err(e) => {
                log::warn!("{e}");
                partial = true;
            }
        }
    }
    (out, partial)
}

fn features_cmd(a: &FeaturesArgs) -> Result<Partial> {
    let (instances, p1) = load(&a.dataset)?;
    let path = a.variants.clone().unwrap_or_else(|| a.out.join("variants.jsonl"));
    let (variants, p2) = load_variant_file(&path)?;
    let (fs_, p3) = compute_features(&instances, &variants);
    out_dir(&a.out)?;
    write(&a.out.join("features.csv"), &harness::to_csv(&fs_)?)?;
    Ok(p1 || p2 || p3)
}

fn adapter_config(descriptor: &str, a: &EvaluateArgs) -> Result<AdapterConfig> {
    let mut cfg = AdapterConfig::from_descriptor(descriptor)?;
    if let Some(t) = a.temperature {
        cfg.temperature = t;
    }
    if let Some(n) = a.samples {
        cfg.samples = n;
    }
    if let Some(m) = a.mitigation {
        cfg.mitigation = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn evaluate(a: &EvaluateArgs) -> Result<Partial> {
    let (instances, mut partial) = load(&a.gen.dataset)?;
    let variants = match &a.variants {
        Some(path) => {
            let (v, p) = load_variant_file(path)?;
            partial |= p;
            v
        }
        None => {
            let (g, p) = generate(&a.gen, &instances);
            partial |= p;
            g.variants
        }
    };
    let (feats, p) = compute_features(&instances, &variants);
    partial |= p;

    let mut adapters = Vec::new();
    for descriptor in &a.adapter {
        let cfg = adapter_config(descriptor, a)?;
        let adapter = cfg.build()?;
        if cfg.mitigation == Mitigation::Cot && !adapter.instruction_tuned() {
            bail!("{}: chain-of-thought needs an instruction-tuned model", adapter.name());
        }
        let settings = EvalSettings {
            samples: cfg.samples,
            mitigation: cfg.mitigation,
            max_parallel: cfg.max_parallel,
        };
        adapters.push((adapter, settings));
    }
    let mut names: Vec<&str> = adapters.iter().map(|(a, _)| a.name()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        bail!("adapter names must be distinct");
    }

    let mut solve: Vec<SolveRecord> = Vec::new();
    for (adapter, settings) in &adapters {
        let recs = harness::solvability(adapter.as_ref(), &instances, settings);
        let solved = recs.iter().filter(|r| r.solved).count();
        log::info!("{}: solves {solved} of {} originals", adapter.name(), recs.len());
        for r in recs.iter().filter(|r| r.error.is_some()) {
            log::warn!("{} {}: {}", r.model, r.instance_id, r.error.as_deref().unwrap_or(""));
            partial = true;
        }
        solve.extend(recs);
    }
    let subsets = harness::compute_subsets(&solve);
    log::info!("intersection subset: {} instances", subsets.intersection.len());

    let mut scores: Vec<VariantScore> = Vec::new();
    for (adapter, settings) in &adapters {
        let s = harness::evaluate(&variants, adapter.as_ref(), &subsets, settings);
        for e in s.iter().filter(|s| s.error.is_some()) {
            log::warn!("{} {} {}: {}", e.model, e.instance_id, e.ptype, e.error.as_deref().unwrap_or(""));
            partial = true;
        }
        scores.extend(s);
    }
    let rows = harness::join_features(&scores, &feats);
    let agg = harness::aggregate(&scores, None);
    let agg_cap = harness::aggregate(&scores, Some(&subsets.intersection));
    let mut drops = harness::max_drops(&agg, "S_theta");
    drops.extend(harness::max_drops(&agg_cap, "S_cap"));

    out_dir(&a.out)?;
    write(&a.out.join("solvability.csv"), &harness::to_csv(&solve)?)?;
    write(&a.out.join("results.csv"), &harness::to_csv(&rows)?)?;
    write(&a.out.join("aggregates.csv"), &harness::to_csv(&agg)?)?;
    write(&a.out.join("aggregates_intersection.csv"), &harness::to_csv(&agg_cap)?)?;
    write(&a.out.join("max_drop.csv"), &harness::to_csv(&drops)?)?;
    write(&a.out.join("features.csv"), &harness::to_csv(&feats)?)?;
    write(&a.out.join("observations.csv"), &harness::to_csv(&harness::observations(&rows))?)?;
    Ok(partial)
}

fn regress(a: &RegressArgs) -> Result<Partial> {
    let path = a.observations.clone().unwrap_or_else(|| a.out.join("observations.csv"));
    let rows: Vec<ObservationRow> = harness::read_csv(&path)?;
    let report = stats::regress(&rows, a.standardize == OnOff::On, &GlmmOptions::default())
        .with_context(|| format!("fitting {}", path.display()))?;
    if !report.fit.converged {
        log::warn!("the fit did not converge");
    }
    if report.fit.separation {
        log::warn!("possible separation: some coefficients may be unreliable");
    }
    out_dir(&a.out)?;
    match a.format {
        Format::Md => write(&a.out.join("regression.md"), &report.to_markdown())?,
        Format::Csv => {
            write(&a.out.join("regression.csv"), &report.to_csv()?)?;
            write(&a.out.join("diagnostics.csv"), &report.diagnostics_csv()?)?;
        }
    }
    Ok(false)
}
