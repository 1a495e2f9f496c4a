mod config;
mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use glyphstroke::masking::{apply_mask, plan_mask, trial_rng, MaskConfig};
use glyphstroke::matcher::{
    explore, CachedProvider, EmbeddingProvider, MatchOptions, MemoProvider, OnEmbedError,
    PixelEmbedding, PoolEntry, RemoteEmbedding,
};
use glyphstroke::metrics::{summarize, InvalidRateMode, MetricsReport};
use glyphstroke::optimizer::{greedy_fit, OptimizerConfig};
use glyphstroke::visualize::{render_overlay, OverlaySpec};
use glyphstroke::{
    aggregate_reward, structural_stats, RewardConfig, RewardReport, StructuralStats,
};
use rayon::prelude::*;

use crate::config::RewardArgs;
use crate::io::{is_image_path, load_glyph, load_manifest, load_strokes, write_atomic};

#[derive(Parser)]
#[command(
    name = "glyphstroke",
    version,
    about = "Stroke-coverage scoring and analysis for binarized glyphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a stroke set against a glyph.
    Score(ScoreArgs),
    /// Corpus metrics over a JSONL manifest of image/stroke pairs.
    Metrics(MetricsArgs),
    /// Structural statistics (components, boundary, area) per image.
    Stats(StatsArgs),
    /// Fit strokes to a glyph by greedy reward maximization.
    Optimize(OptimizeArgs),
    /// Write stroke-masked variants of a glyph.
    Mask(MaskArgs),
    /// Rank a pool of glyphs by similarity to masked variants of a query.
    Explore(ExploreArgs),
    /// Draw strokes and coverage polygons over a glyph as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

impl JobsArg {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            if n == 0 {
                bail!("--jobs must be >= 1");
            }
            b = b.num_threads(n);
        }
        Ok(b.build()?)
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    image: PathBuf,
    /// Stroke JSON or raw `<strokes>` text.
    #[arg(long)]
    strokes: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    reward: RewardArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateMode {
    Corpus,
    PerSample,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// How the invalid-stroke percentage is aggregated.
    #[arg(long, value_enum, default_value = "corpus")]
    invalid_rate: RateMode,
    /// Comma-separated penalty values; emits one row per value.
    #[arg(long, value_delimiter = ',')]
    alpha_sweep: Vec<f64>,
    #[command(flatten)]
    jobs: JobsArg,
    #[command(flatten)]
    reward: RewardArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// Image files (PNG, PGM, PBM).
    images: Vec<PathBuf>,
    /// JSONL manifest; entries are appended after positional images.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = glyphstroke::bitmap::DEFAULT_THRESHOLD)]
    threshold: u8,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 12)]
    max_strokes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 96)]
    candidates: usize,
    #[arg(long, default_value_t = 12)]
    refine_steps: usize,
    /// Minimum marginal gain; defaults to the novelty threshold.
    #[arg(long)]
    min_gain: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    reward: RewardArgs,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    strokes: PathBuf,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.4)]
    temperature: f64,
    #[arg(long, default_value_t = 0.5)]
    base_rate: f64,
    /// Fix the masking center to this accepted-stroke index.
    #[arg(long)]
    center: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    reward: RewardArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Pixel,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnError {
    Abort,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Max,
    Mean,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    strokes: PathBuf,
    #[arg(long)]
    pool_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "pixel")]
    provider: ProviderKind,
    /// Embedding service URL for the remote provider.
    #[arg(long, required_if_eq("provider", "remote"))]
    endpoint: Option<String>,
    /// Drop pool images identical to the query.
    #[arg(long)]
    exclude_self: bool,
    /// What to do when a pool image cannot be embedded.
    #[arg(long, value_enum, default_value = "abort")]
    on_error: OnError,
    #[arg(long, value_enum, default_value = "max")]
    aggregation: AggregationArg,
    /// Skip the on-disk embedding cache.
    #[arg(long)]
    no_cache: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    reward: RewardArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    strokes: PathBuf,
    /// Report JSON from `score`; enables polygons and invalid-stroke colors.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Overlay a grid with this many divisions per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = glyphstroke::bitmap::DEFAULT_THRESHOLD)]
    threshold: u8,
    #[arg(long)]
    out: PathBuf,
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn score(args: ScoreArgs) -> Result<()> {
    let cfg = args.reward.resolve()?;
    let glyph = load_glyph(&args.image, cfg.threshold)?;
    let (strokes, format_ok) = load_strokes(&args.strokes)?;
    let report = aggregate_reward(&glyph, &strokes, format_ok, &cfg.reward)?;
    let text = to_json(&report);
    match args.report {
        Some(path) => write_atomic(&path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn score_entry(
    entry: &io::ManifestEntry,
    threshold: u8,
    cfg: &RewardConfig,
) -> Result<RewardReport> {
    let glyph = load_glyph(&entry.image_path, threshold)?;
    let (strokes, format_ok) = match &entry.strokes_path {
        Some(p) => load_strokes(p)?,
        None => bail!("sample {}: manifest entry has no strokes path", entry.id),
    };
    aggregate_reward(&glyph, &strokes, format_ok, cfg)
        .with_context(|| format!("sample {}", entry.id))
}

fn metrics_row(out: &mut String, m: &MetricsReport) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        m.re, m.co, m.is_pct, m.cs, m.ts, m.n_samples
    );
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let cfg = args.reward.resolve()?;
    let entries = load_manifest(&args.manifest)?;
    let mode = match args.invalid_rate {
        RateMode::Corpus => InvalidRateMode::Corpus,
        RateMode::PerSample => InvalidRateMode::PerSample,
    };
    let alphas = if args.alpha_sweep.is_empty() {
        vec![cfg.reward.alpha]
    } else {
        args.alpha_sweep.clone()
    };
    let pool = args.jobs.pool()?;
    let mut out = String::new();
    if args.alpha_sweep.is_empty() {
        out.push_str("re,co,is,cs,ts,n\n");
    } else {
        out.push_str("alpha,re,co,is,cs,ts,n\n");
    }
    for alpha in alphas {
        let rcfg = RewardConfig {
            alpha,
            ..cfg.reward
        };
        rcfg.validate()?;
        let reports: Vec<RewardReport> = pool.install(|| {
            entries
                .par_iter()
                .map(|e| score_entry(e, cfg.threshold, &rcfg))
                .collect::<Result<Vec<_>>>()
        })?;
        let m = summarize(&reports, mode)?;
        if !args.alpha_sweep.is_empty() {
            let _ = write!(out, "{alpha},");
        }
        metrics_row(&mut out, &m);
    }
    match args.csv {
        Some(path) => write_atomic(&path, out.as_bytes()),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn stats(args: StatsArgs) -> Result<()> {
    let mut files: Vec<(String, PathBuf)> = args
        .images
        .iter()
        .map(|p| (p.display().to_string(), p.clone()))
        .collect();
    if let Some(m) = &args.manifest {
        files.extend(load_manifest(m)?.into_iter().map(|e| (e.id, e.image_path)));
    }
    if files.is_empty() {
        bail!("no images given");
    }
    let pool = args.jobs.pool()?;
    let stats: Vec<StructuralStats> = pool.install(|| {
        files
            .par_iter()
            .map(|(_, p)| Ok(structural_stats(&load_glyph(p, args.threshold)?)))
            .collect::<Result<Vec<_>>>()
    })?;
    let fmt_bar = |b: Option<f64>| b.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("file,cc,fb,fa,bar\n");
    for ((name, _), s) in files.iter().zip(&stats) {
        let name = if name.contains([',', '"']) {
            format!("\"{}\"", name.replace('"', "\"\""))
        } else {
            name.clone()
        };
        let _ = writeln!(out, "{name},{},{},{},{}", s.cc, s.fb, s.fa, fmt_bar(s.bar));
    }
    let n = stats.len() as f64;
    let bars: Vec<f64> = stats.iter().filter_map(|s| s.bar).collect();
    let mean_bar = (!bars.is_empty()).then(|| bars.iter().sum::<f64>() / bars.len() as f64);
    let _ = writeln!(
        out,
        "mean,{},{},{},{}",
        stats.iter().map(|s| s.cc as f64).sum::<f64>() / n,
        stats.iter().map(|s| s.fb).sum::<f64>() / n,
        stats.iter().map(|s| s.fa).sum::<f64>() / n,
        fmt_bar(mean_bar)
    );
    match args.csv {
        Some(path) => write_atomic(&path, out.as_bytes()),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let cfg = args.reward.resolve()?;
    let glyph = load_glyph(&args.image, cfg.threshold)?;
    let ocfg = OptimizerConfig {
        max_strokes: args.max_strokes,
        candidates_per_round: args.candidates,
        min_gain: args.min_gain,
        rng_seed: args.seed,
        refine_steps: args.refine_steps,
    };
    let (strokes, report) = greedy_fit(&glyph, &ocfg, &cfg.reward)?;
    let strokes = strokes.with_source_id(glyph.source_id());
    let svg = args
        .svg
        .as_ref()
        .map(|_| render_overlay(&glyph, Some(&report), &strokes, &OverlaySpec::default()));
    write_atomic(&args.out, to_json(&strokes).as_bytes())?;
    if let (Some(path), Some(svg)) = (&args.svg, svg) {
        write_atomic(path, svg.as_bytes())?;
    }
    println!(
        "{}",
        serde_json::json!({
            "strokes": strokes.len(),
            "coverage": report.coverage_fraction(),
            "r_s": report.r_s,
            "r": report.r,
        })
    );
    Ok(())
}

fn mask(args: MaskArgs) -> Result<()> {
    let cfg = args.reward.resolve()?;
    let glyph = load_glyph(&args.image, cfg.threshold)?;
    let (strokes, _) = load_strokes(&args.strokes)?;
    let mcfg = MaskConfig {
        temperature: args.temperature,
        base_rate: args.base_rate,
        trials: args.trials,
        rng_seed: args.seed,
    };
    mcfg.validate()?;
    let (accepted, polygons) =
        glyphstroke::matcher::query_coverages(&glyph, &strokes, &cfg.reward)?;
    let mut outputs = Vec::new();
    for t in 0..mcfg.trials {
        let plan = plan_mask(
            &accepted,
            &mcfg,
            &mut trial_rng(mcfg.rng_seed, t),
            args.center,
        )?;
        let masked = apply_mask(&glyph, &accepted, &polygons, &plan)?;
        outputs.push((t, masked.to_png_bytes()?, to_json(&plan)));
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (t, png, plan) in outputs {
        write_atomic(&args.out_dir.join(format!("trial_{t}.png")), &png)?;
        write_atomic(
            &args.out_dir.join(format!("trial_{t}.json")),
            plan.as_bytes(),
        )?;
    }
    Ok(())
}

fn cache_root() -> PathBuf {
    if let Some(dir) = std::env::var_os("HIEROSA_CACHE_DIR") {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME") {
        return Path::new(&dir).join("glyphstroke");
    }
    match std::env::var_os("HOME") {
        Some(home) => Path::new(&home).join(".cache").join("glyphstroke"),
        None => std::env::temp_dir().join("glyphstroke-cache"),
    }
}

fn load_pool(dir: &Path, threshold: u8) -> Result<Vec<PoolEntry>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading pool {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image_path(p))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let g = load_glyph(p, threshold)?;
            Ok((g.source_id().to_string(), g))
        })
        .collect()
}

fn run_explore(args: &ExploreArgs, provider: &dyn EmbeddingProvider) -> Result<String> {
    let cfg = args.reward.resolve()?;
    let query = load_glyph(&args.query, cfg.threshold)?;
    let (strokes, _) = load_strokes(&args.strokes)?;
    let pool = load_pool(&args.pool_dir, cfg.threshold)?;
    if pool.is_empty() {
        bail!("pool directory {} has no images", args.pool_dir.display());
    }
    let mcfg = MaskConfig {
        trials: args.trials,
        rng_seed: args.seed,
        ..Default::default()
    };
    mcfg.validate()?;
    let opts = MatchOptions {
        k: args.k,
        aggregation: match args.aggregation {
            AggregationArg::Max => glyphstroke::matcher::Aggregation::Max,
            AggregationArg::Mean => glyphstroke::matcher::Aggregation::Mean,
        },
        exclude_self: args.exclude_self,
        on_error: match args.on_error {
            OnError::Abort => OnEmbedError::Abort,
            OnError::Skip => OnEmbedError::Skip,
        },
    };
    let results = explore(
        &query,
        &strokes,
        &pool,
        &provider,
        &mcfg,
        &cfg.reward,
        &opts,
    )?;
    Ok(to_json(&results))
}

fn explore_cmd(args: ExploreArgs) -> Result<()> {
    let base: Box<dyn EmbeddingProvider> = match args.provider {
        ProviderKind::Pixel => Box::new(PixelEmbedding),
        ProviderKind::Remote => Box::new(RemoteEmbedding::new(
            args.endpoint.clone().expect("required by clap"),
        )),
    };
    let text = if args.no_cache {
        run_explore(&args, &MemoProvider::new(base))?
    } else {
        run_explore(
            &args,
            &MemoProvider::new(CachedProvider::new(base, cache_root())),
        )?
    };
    write_atomic(&args.out, text.as_bytes())
}

fn render(args: RenderArgs) -> Result<()> {
    let glyph = load_glyph(&args.image, args.threshold)?;
    let (strokes, _) = load_strokes(&args.strokes)?;
    let report: Option<RewardReport> = match &args.report {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing report {}", p.display()))?,
            )
        }
        None => None,
    };
    if let Some(r) = &report {
        if r.per_stroke.len() != strokes.len() {
            bail!(
                "report has {} strokes but the stroke file has {}",
                r.per_stroke.len(),
                strokes.len()
            );
        }
    }
    let spec = OverlaySpec {
        show_grid: args.grid.is_some(),
        grid_divisions: args.grid.unwrap_or(10),
        ..Default::default()
    };
    let svg = render_overlay(&glyph, report.as_ref(), &strokes, &spec);
    write_atomic(&args.out, svg.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(a) => score(a),
        Command::Metrics(a) => metrics(a),
        Command::Stats(a) => stats(a),
        Command::Optimize(a) => optimize(a),
        Command::Mask(a) => mask(a),
        Command::Explore(a) => explore_cmd(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
