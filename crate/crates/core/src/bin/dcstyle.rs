use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use dcstyle::nn::{synthetic_store, Manifest, Section, WeightStore};
use dcstyle::pipeline::{DECODER_FILE, ENCODER_FILE, MANIFEST_FILE};
use dcstyle::{load_depth, load_mask, DepthControls, Engine, Error, MaskSource, RasterImage, StylizeParams};

/// Depth-controlled AdaIN style transfer.
///
/// Depth and mask files are single-channel 8- or 16-bit PNG/PGM. In depth
/// files a larger sample means farther away; farther regions receive more
/// style unless --invert-depth is given.
#[derive(Parser)]
#[command(name = "dcstyle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the content image in the given style(s).
    Stylize {
        #[arg(long)]
        content: PathBuf,
        /// Repeat to mix several styles.
        #[arg(long = "style", required = true)]
        styles: Vec<PathBuf>,
        /// One per --style, summing to 1. Defaults to equal weights.
        #[arg(long = "style-weight")]
        style_weights: Vec<f32>,
        /// Relative depth map, same size as the content image.
        #[arg(long, conflicts_with = "mask")]
        depth: Option<PathBuf>,
        /// Explicit strength mask in [0, 1] (0 keeps content, 1 full style).
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Global stylization strength in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        alpha: f32,
        #[arg(long, default_value_t = 0.0)]
        depth_min: f64,
        #[arg(long, default_value_t = 1.0)]
        depth_max: f64,
        /// Stylize near regions more than far ones.
        #[arg(long)]
        invert_depth: bool,
        #[arg(long, default_value = "stylized.png")]
        out: PathBuf,
        /// Directory holding encoder.adsw and decoder.adsw.
        #[arg(long, default_value = "weights")]
        weights: PathBuf,
    },
    /// Encode and decode the content image without stylization.
    Reconstruct {
        #[arg(long)]
        content: PathBuf,
        #[arg(long, default_value = "reconstructed.png")]
        out: PathBuf,
        #[arg(long, default_value = "weights")]
        weights: PathBuf,
    },
    /// List the tensors in a weight file and check them against the manifest.
    InspectWeights { file: PathBuf },
    /// Write random weights matching the manifest, for smoke tests.
    SynthWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Stylize {
            content,
            styles,
            style_weights,
            depth,
            mask,
            alpha,
            depth_min,
            depth_max,
            invert_depth,
            out,
            weights,
        } => {
            let engine = Engine::from_dir(&weights)?;
            let content = RasterImage::load(&content)?;
            let summaries = styles
                .iter()
                .map(|p| engine.style_summary_from_file_bytes(&std::fs::read(p)?))
                .collect::<Result<Vec<_>, _>>()?;
            let style_weights = if style_weights.is_empty() {
                None
            } else if style_weights.len() != styles.len() {
                return Err(Error::InvalidInput(format!(
                    "{} --style-weight values for {} --style images",
                    style_weights.len(),
                    styles.len()
                )));
            } else {
                Some(style_weights)
            };
            let mask_source = match (depth, mask) {
                (Some(d), _) => MaskSource::Depth(load_depth(d)?),
                (None, Some(m)) => MaskSource::Mask(load_mask(m)?),
                (None, None) => MaskSource::None,
            };
            let params = StylizeParams {
                alpha,
                depth_controls: DepthControls::new(depth_min, depth_max, invert_depth)?,
                style_weights,
                mask_source,
            };
            let image = engine.stylize_with_summaries(&content, &summaries, &params)?;
            image.save(&out)?;
            info!("wrote {}", out.display());
        }
        Command::Reconstruct { content, out, weights } => {
            let engine = Engine::from_dir(&weights)?;
            engine.reconstruct(&RasterImage::load(&content)?)?.save(&out)?;
            info!("wrote {}", out.display());
        }
        Command::InspectWeights { file } => inspect(&file)?,
        Command::SynthWeights { out, seed } => {
            std::fs::create_dir_all(&out)?;
            let m = Manifest::builtin();
            synthetic_store(m, Section::Encoder, seed).write_file(out.join(ENCODER_FILE))?;
            synthetic_store(m, Section::Decoder, seed.wrapping_add(1)).write_file(out.join(DECODER_FILE))?;
            std::fs::write(out.join(MANIFEST_FILE), dcstyle::nn::manifest::BUILTIN_MANIFEST)?;
            println!("wrote synthetic weights to {}", out.display());
        }
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<(), Error> {
    let store = WeightStore::read_file(path)?;
    for (name, t) in store.iter() {
        let shape: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
        println!("{name}\t[{}]", shape.join(", "));
    }
    let manifest = Manifest::builtin();
    let mut failures = Vec::new();
    for section in [Section::Encoder, Section::Decoder] {
        match manifest.validate_store(section, &store) {
            Ok(()) => {
                println!(
                    "manifest: {section} ok ({} tensors, variant {}, pixel_range {})",
                    store.len(),
                    manifest.variant,
                    manifest.pixel_range
                );
                return Ok(());
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    Err(Error::Manifest(format!("matches no manifest section: {}", failures.join("; "))))
}
