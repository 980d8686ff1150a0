use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use coseg::eval::{load_dataset, score, SyntheticSpec};
use coseg::pipeline::{run_cluster, run_fuse, run_pipeline, run_segment, PipelineConfig};

#[derive(Parser)]
#[command(name = "coseg", version, about = "Saliency-fusion object co-segmentation")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group, fuse and segment in one pass.
    Run(PipelineArgs),
    /// Choose sub-groups and key images; writes grouping.txt and required_pairs.txt.
    Cluster(PipelineArgs),
    /// Fuse saliency maps for the grouping in the output directory.
    Fuse(PipelineArgs),
    /// Segment images from previously fused maps.
    Segment(PipelineArgs),
    /// Score predicted masks against a dataset's ground truth.
    Evaluate(EvaluateArgs),
    /// Write a synthetic test group.
    GenSynthetic(SyntheticArgs),
}

/// Every option can also be given as `key = value` in the config file;
/// flags override the file.
#[derive(Args)]
struct PipelineArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input_dir: Option<String>,
    /// Comma-separated saliency directories, one per source.
    #[arg(long)]
    saliency_dirs: Option<String>,
    #[arg(long)]
    flow_manifest: Option<String>,
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    gc_iters: Option<usize>,
    #[arg(long)]
    gc_gamma: Option<f64>,
    #[arg(long)]
    gc_components: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write fused maps during `run`.
    #[arg(long)]
    dump_fused: bool,
}

impl PipelineArgs {
    fn config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let overrides = [
            ("input_dir", self.input_dir.clone()),
            ("saliency_dirs", self.saliency_dirs.clone()),
            ("flow_manifest", self.flow_manifest.clone()),
            ("features", self.features.clone()),
            ("output_dir", self.output_dir.clone()),
            ("k_min", self.k_min.map(|v| v.to_string())),
            ("k_max", self.k_max.map(|v| v.to_string())),
            ("gc_iters", self.gc_iters.map(|v| v.to_string())),
            ("gc_gamma", self.gc_gamma.map(|v| v.to_string())),
            ("gc_components", self.gc_components.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("dump_fused", self.dump_fused.then(|| "true".to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.set(key, &value, Path::new(""))?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset root: one directory per class, each with a GT/ subdirectory.
    #[arg(long)]
    dataset: PathBuf,
    /// Directory of predicted masks, flat or with one subdirectory per class.
    #[arg(long)]
    predictions: PathBuf,
    /// Where to write the per-image lines (default: <predictions>/scores.txt).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    group_size: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 4)]
    sources: usize,
    /// 1-based index of a source whose maps are inverted.
    #[arg(long)]
    corrupt: Option<usize>,
    /// Object shift between consecutive images, as `dx,dy`.
    #[arg(long, default_value = "3,0", value_parser = parse_shift)]
    shift: (i32, i32),
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_shift(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(',').ok_or("expected dx,dy")?;
    let n = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("{v:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

fn evaluate(args: &EvaluateArgs) -> anyhow::Result<bool> {
    let dataset = load_dataset(&args.dataset)?;
    let report = score(&args.predictions, &dataset)?;
    print!("{}", report.to_table());
    let path = args.report.clone().unwrap_or_else(|| args.predictions.join("scores.txt"));
    fs::write(&path, report.to_lines()).with_context(|| format!("writing {}", path.display()))?;
    for (class, image) in &report.missing {
        eprintln!("missing prediction for {class}/{image}");
    }
    Ok(report.is_complete())
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run(args) => {
            let summary = run_pipeline(&args.config()?)?;
            println!("{} masks, {} sub-groups", summary.masks.len(), summary.manifest.subgroups.len());
        }
        Command::Cluster(args) => {
            let manifest = run_cluster(&args.config()?)?;
            println!("{} sub-groups, {} flows required", manifest.subgroups.len(), manifest.required_pairs().len());
        }
        Command::Fuse(args) => {
            let fused = run_fuse(&args.config()?)?;
            println!("{} fused maps", fused.len());
        }
        Command::Segment(args) => {
            let masks = run_segment(&args.config()?)?;
            println!("{} masks", masks.len());
        }
        Command::Evaluate(args) => {
            if !evaluate(&args)? {
                bail!("some predictions are missing");
            }
        }
        Command::GenSynthetic(args) => {
            let spec = SyntheticSpec {
                group_size: args.group_size,
                image_size: (args.width, args.height),
                sources: args.sources,
                corrupted_source: args.corrupt,
                shift: args.shift,
                seed: args.seed,
            };
            let group = coseg::eval::gen_synthetic(&spec, &args.out)?;
            println!("wrote {} images; config at {}", group.image_ids.len(), group.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
