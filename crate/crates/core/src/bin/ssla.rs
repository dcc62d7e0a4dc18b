use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssla::expogen::{self, ExposureSpec, Response};
use ssla::imageio::{self, BitDepth, ExposureStack};
use ssla::metrics::{self, NaturalnessParams};
use ssla::pipeline::{self, PipelineConfig};
use ssla::{Error, Result};

#[derive(Parser)]
#[command(name = "ssla", version, about = "Segment-wise luminance adjustment for multi-exposure fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adjust and fuse an exposure stack.
    Fuse(FuseArgs),
    /// Score one image with discrete entropy and statistical naturalness.
    Metrics(MetricsArgs),
    /// Render a synthetic exposure stack from a builtin HDR scene.
    Expogen(ExpogenArgs),
    /// Score the standard configurations side by side on one stack.
    Compare(CompareArgs),
}

/// Overrides applied on top of the config file, in `key = value` terms.
#[derive(Args, Default)]
struct PipelineFlags {
    /// key = value file read before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Segmentation: none, 1 (thresholds) or 2 (VB mixture).
    #[arg(long)]
    approach: Option<String>,
    /// on or off.
    #[arg(long)]
    contrast_enhancement: Option<String>,
    #[arg(long)]
    sigma_spatial: Option<f64>,
    #[arg(long)]
    sigma_range: Option<f64>,
    /// exact or grid.
    #[arg(long)]
    bilateral: Option<String>,
    /// Upper bound on mixture components.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    downsize_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// max or 1.
    #[arg(long)]
    tonemap_knee: Option<String>,
    #[arg(long)]
    middle_gray: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// mertens or average.
    #[arg(long)]
    fusion: Option<String>,
    /// encoded or linear.
    #[arg(long)]
    fuse_domain: Option<String>,
    #[arg(long)]
    patch_stride: Option<usize>,
}

impl PipelineFlags {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        let overrides = [
            ("approach", self.approach.clone()),
            ("contrast_enhancement", self.contrast_enhancement.clone()),
            ("sigma_spatial", self.sigma_spatial.map(|v| v.to_string())),
            ("sigma_range", self.sigma_range.map(|v| v.to_string())),
            ("bilateral", self.bilateral.clone()),
            ("k_max", self.k.map(|v| v.to_string())),
            ("max_iters", self.max_iters.map(|v| v.to_string())),
            ("downsize_max", self.downsize_max.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("tonemap_knee", self.tonemap_knee.clone()),
            ("middle_gray", self.middle_gray.map(|v| v.to_string())),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("fusion", self.fusion.clone()),
            ("fuse_domain", self.fuse_domain.clone()),
            ("patch_stride", self.patch_stride.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        Ok(config)
    }
}

#[derive(Args)]
struct FuseArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// Write the run report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write adjusted_XX.png and labels.png.
    #[arg(long)]
    emit_intermediates: bool,
    /// Directory for intermediates; defaults to the output's directory.
    #[arg(long)]
    intermediates_dir: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct MetricsArgs {
    image: PathBuf,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    patch_stride: Option<usize>,
}

#[derive(Args)]
struct ExpogenArgs {
    /// window, trimodal or gradient.
    #[arg(long)]
    scene: String,
    /// Comma-separated exposure values relative to 0 EV, e.g. -1,0,1.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    evs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// Skip saturation at 1.0; the PFM files then keep values above 1.
    #[arg(long)]
    no_clip: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Input exposures; omit to use a synthetic stack from --scene.
    inputs: Vec<PathBuf>,
    #[arg(long, conflicts_with = "inputs")]
    scene: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "-1,0,1")]
    evs: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Emit a Markdown table instead of CSV.
    #[arg(long)]
    markdown: bool,
    /// Write the table here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

fn fuse(args: FuseArgs) -> Result<()> {
    let mut config = args.pipeline.resolve()?;
    config.output = Some(args.output);
    config.report = args.report;
    config.emit_intermediates |= args.emit_intermediates;
    if args.intermediates_dir.is_some() {
        config.intermediates_dir = args.intermediates_dir;
    }
    config.validate()?;
    let out = pipeline::run_pipeline(&args.inputs, &config)?;
    let r = &out.report;
    println!(
        "fused {} images ({}x{}): M={} entropy={:.4} naturalness={:.4}",
        r.inputs, r.width, r.height, r.segment_count, r.scores.entropy_bits, r.scores.naturalness
    );
    Ok(())
}

fn score(args: MetricsArgs) -> Result<()> {
    let img = imageio::read_image(&args.image)?;
    let mut params = NaturalnessParams::default();
    if let Some(stride) = args.patch_stride {
        params.stride = stride;
    }
    let scores = metrics::score_image(&img, &params)?;
    if args.json {
        println!("{}", serde_json::to_string(&scores).expect("scores serialize"));
    } else {
        println!("entropy_bits {:.6}\nnaturalness  {:.6}", scores.entropy_bits, scores.naturalness);
    }
    Ok(())
}

fn exposures(args: ExpogenArgs) -> Result<()> {
    let scene = expogen::builtin_scene(&args.scene, args.width, args.height, args.seed)?;
    let response = if args.no_clip { Response::Linear } else { Response::ClippedLinear };
    let spec = ExposureSpec {
        response,
        ..ExposureSpec::new(args.evs.clone())?
    };
    let stack = expogen::make_stack(&scene, &spec)?;
    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    for (i, img) in stack.images().iter().enumerate() {
        let stem = args.output.join(format!("exposure_{i:02}"));
        imageio::write_pfm_file(stem.with_extension("pfm"), img)?;
        imageio::encode_srgb_file(stem.with_extension("png"), &img.clamped(), BitDepth::Eight)?;
    }
    imageio::write_pfm_file(args.output.join("reference.pfm"), &scene.reference())?;
    println!("wrote {} exposures of '{}' to {}", stack.len(), args.scene, args.output.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let base = args.pipeline.resolve()?;
    base.validate()?;
    let stack = match &args.scene {
        Some(name) => {
            let scene = expogen::builtin_scene(name, args.size, args.size, base.seed)?;
            expogen::make_stack(&scene, &ExposureSpec::new(args.evs.clone())?)?
        }
        None if args.inputs.is_empty() => {
            return Err(Error::InvalidInput("give input images or --scene".into()));
        }
        None => ExposureStack::new(args.inputs.iter().map(imageio::read_image).collect::<Result<Vec<_>>>()?)?,
    };
    let table = pipeline::compare_runs(&stack, &pipeline::standard_variants(&base))?;
    let text = if args.markdown { table.to_markdown() } else { table.to_csv() };
    match &args.output {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fuse(a) => fuse(a),
        Command::Metrics(a) => score(a),
        Command::Expogen(a) => exposures(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
