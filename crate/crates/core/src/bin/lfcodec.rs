use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lfcodec::bitstream::{
    bits_for_qp, export_latent_planes, read_container, read_header_bytes, section_sizes, LevelPayload, QuantizerSpec,
    StackSource,
};
use lfcodec::config::PipelineConfig;
use lfcodec::error::Error;
use lfcodec::layers::{load_layers, optimize_layers, render_additive, save_layers};
use lfcodec::lightfield::{load_manifest_file, save_light_field, LightField};
use lfcodec::metrics::{bd_metrics, bd_report, gnuplot_script, rd_csv, rd_sweep, read_rd_csv};
use lfcodec::pipeline::{bits_per_pixel, decode, encode, train_model, DbnModel};
use lfcodec::synth::occluded_disc;
use lfcodec::quality::{masked_psnr, per_view_psnr, PEAK_NORMALIZED};

#[derive(Parser)]
#[command(name = "lfcodec", version, about = "Scalable light-field codec built on layer factorization, weighted binary images and a deep belief network")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set solver.max_iterations=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a light field into a scalable container.
    Encode {
        #[arg(long)]
        manifest: PathBuf,
        /// Trained network (required unless --lossless).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Quality parameter, mapped to quantizer bits.
        #[arg(long, conflicts_with = "bits")]
        qp: Option<u32>,
        /// Quantizer bits for latent codes.
        #[arg(long)]
        bits: Option<u32>,
        /// Store basis images losslessly instead of as latent codes.
        #[arg(long)]
        lossless: bool,
        /// Decode immediately and report PSNR per level.
        #[arg(long)]
        check: bool,
        /// Also write the quantized latent codes as 8-bit PGM frames here.
        #[arg(long)]
        export_latents: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Decode a container (optionally only its first levels) into views.
    Decode {
        #[arg(long)]
        container: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        max_level: Option<usize>,
        /// Original light field for a PSNR report.
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        bit_depth: u32,
    },
    /// Factorize a light field into display layers.
    OptimizeLayers {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 8)]
        bit_depth: u32,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render one view from saved layers.
    RenderView {
        /// Layer sidecar written by optimize-layers.
        #[arg(long)]
        layers: PathBuf,
        /// Angular grid size as S,T.
        #[arg(long, value_parser = parse_pair)]
        angular: (usize, usize),
        /// View index as s,t.
        #[arg(long, value_parser = parse_pair)]
        view: (usize, usize),
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        bit_depth: u32,
    },
    /// Train the patch autoencoder on one or more light fields.
    TrainDbn {
        #[arg(long, required = true)]
        manifest: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Rate-distortion sweep over quality parameters.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        csv: PathBuf,
        /// Also write a gnuplot script plotting the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Bjontegaard metrics between two sweep CSV files.
    Bd {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Write a procedural test light field (textured disc over a textured plane).
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// Angular grid size as S,T.
        #[arg(long, value_parser = parse_pair, default_value = "5,5")]
        angular: (usize, usize),
        /// View size as W,H.
        #[arg(long, value_parser = parse_pair, default_value = "64,64")]
        spatial: (usize, usize),
        #[arg(long, default_value_t = 1)]
        channels: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        bit_depth: u32,
    },
    /// Describe a container.
    Info {
        #[arg(long)]
        container: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((a, b))
}

/// A failure tagged with the stage it happened in.
struct Failure {
    stage: &'static str,
    error: Error,
}

type Outcome<T = ()> = Result<T, Failure>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Outcome<T>;
}

impl<T> Stage<T> for lfcodec::Result<T> {
    fn stage(self, stage: &'static str) -> Outcome<T> {
        self.map_err(|error| Failure { stage, error })
    }
}

fn io_failure(stage: &'static str, path: &Path, source: std::io::Error) -> Failure {
    Failure {
        stage,
        error: Error::Io {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn resolve_config(args: &ConfigArgs) -> lfcodec::Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn echo_config(cfg: &PipelineConfig) {
    println!("# resolved configuration");
    print!("{}", cfg.to_text());
}

fn load_model(path: Option<&Path>, needed: bool) -> Outcome<Option<DbnModel>> {
    match path {
        Some(p) => DbnModel::load(p).stage("model").map(Some),
        None if needed => Err(Failure {
            stage: "model",
            error: Error::Config("--model is required for lossy coding".into()),
        }),
        None => Ok(None),
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    println!("time {label}: {:.3} s", start.elapsed().as_secs_f64());
    out
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Encode {
            manifest,
            model,
            out,
            qp,
            bits,
            lossless,
            check,
            export_latents,
            cfg,
        } => {
            let mut cfg = resolve_config(&cfg).stage("config")?;
            if let Some(qp) = qp {
                cfg.codec.quant_bits = bits_for_qp(qp);
            }
            if let Some(b) = bits {
                cfg.codec.quant_bits = b;
            }
            cfg.codec.lossless |= lossless;
            cfg.validate().stage("config")?;
            echo_config(&cfg);
            let lf = timed("load", || load_manifest_file(&manifest)).stage("load")?;
            let model = load_model(model.as_deref(), !cfg.codec.lossless)?;
            let enc = encode(&lf, &cfg.codec, model.as_ref()).stage("encode")?;
            for t in &enc.timings {
                println!("time {}: {:.3} s", t.stage, t.seconds);
            }
            fs::write(&out, &enc.bytes).map_err(|e| io_failure("write", &out, e))?;
            let h = &enc.header;
            println!(
                "container {} bytes, {:.5} bpp, K={} M={} N={} p={} Q={}",
                enc.bytes.len(),
                enc.bits_per_pixel(),
                h.layer_count(),
                h.level_count(),
                h.components(),
                h.patch,
                h.quant_bits
            );
            if !enc.skipped_levels.is_empty() {
                println!("skipped levels (no improvement): {:?}", enc.skipped_levels);
            }
            if check {
                for m in 1..=h.level_count() {
                    let dec = decode(&enc.bytes, Some(m), model.as_ref()).stage("decode")?;
                    println!("level {m}: psnr {:.4} dB", dec.psnr(&lf).stage("decode")?);
                }
            }
            if let Some(dir) = export_latents {
                export_latents_from(&enc.bytes, &dir)?;
            }
            Ok(())
        }
        Command::Decode {
            container,
            model,
            out_dir,
            max_level,
            original,
            bit_depth,
        } => {
            let bytes = fs::read(&container).map_err(|e| io_failure("read", &container, e))?;
            let header = read_header_bytes(&bytes).stage("container")?;
            let model = load_model(model.as_deref(), !header.lossless)?;
            let dec = timed("decode", || decode(&bytes, max_level, model.as_ref())).stage("decode")?;
            println!("levels used: {} of {}", dec.levels_used, dec.header.level_count());
            let manifest = save_light_field(&dec.light_field, &out_dir, bit_depth).stage("write")?;
            println!("wrote {}", manifest.display());
            if let Some(path) = original {
                let lf = load_manifest_file(&path).stage("load")?;
                report_psnr(&lf, &dec.light_field, &dec.mask).stage("report")?;
            }
            Ok(())
        }
        Command::OptimizeLayers {
            manifest,
            out_dir,
            bit_depth,
            cfg,
        } => {
            let cfg = resolve_config(&cfg).stage("config")?;
            cfg.validate().stage("config")?;
            echo_config(&cfg);
            let lf = load_manifest_file(&manifest).stage("load")?;
            let sol = timed("layers", || optimize_layers(&lf, &cfg.codec.depths(), &cfg.codec.solver)).stage("layers")?;
            let (view, mask) = render_additive(&sol.stack, lf.angular_dims()).stage("render")?;
            println!("iterations: {}", sol.loss_history.len() - 1);
            println!(
                "psnr: {:.4} dB",
                masked_psnr(&lf, &view, &mask, PEAK_NORMALIZED).stage("report")?
            );
            let sidecar = save_layers(&sol.stack, &out_dir, bit_depth).stage("write")?;
            println!("wrote {}", sidecar.display());
            Ok(())
        }
        Command::RenderView {
            layers,
            angular,
            view,
            out,
            bit_depth,
        } => {
            let stack = load_layers(&layers).stage("load")?;
            let (lf, _) = render_additive(&stack, angular).stage("render")?;
            let img = lf.extract_view(view.0, view.1).stage("render")?;
            let maxval = if bit_depth > 8 { 65535 } else { 255 };
            lfcodec::pnm::write(&out, &img.to_pnm(maxval).stage("write")?).stage("write")?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::TrainDbn { manifest, out, cfg } => {
            let cfg = resolve_config(&cfg).stage("config")?;
            cfg.validate().stage("config")?;
            echo_config(&cfg);
            let lfs = manifest
                .iter()
                .map(|m| load_manifest_file(m))
                .collect::<lfcodec::Result<Vec<_>>>()
                .stage("load")?;
            let (model, report) = timed("train", || train_model(&lfs, &cfg.codec, &cfg.dbn)).stage("train")?;
            println!("patches: {}", report.patches);
            println!("pretrained mse: {:.6}", report.pretrained_mse);
            println!("fine-tuned mse: {:.6}", report.finetuned_mse);
            model.save(&out).stage("write")?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Sweep {
            manifest,
            model,
            csv,
            gnuplot,
            cfg,
        } => {
            let cfg = resolve_config(&cfg).stage("config")?;
            cfg.validate().stage("config")?;
            echo_config(&cfg);
            let lf = load_manifest_file(&manifest).stage("load")?;
            let model = load_model(model.as_deref(), !cfg.codec.lossless)?;
            let rows = timed("sweep", || rd_sweep(&lf, &cfg.codec, model.as_ref(), &cfg.sweep_qps)).stage("sweep")?;
            let text = rd_csv(&rows);
            print!("{text}");
            fs::write(&csv, &text).map_err(|e| io_failure("write", &csv, e))?;
            if let Some(script) = gnuplot {
                let png = csv.with_extension("png");
                let body = gnuplot_script(&csv.to_string_lossy(), &png.to_string_lossy(), "lfcodec");
                fs::write(&script, body).map_err(|e| io_failure("write", &script, e))?;
            }
            Ok(())
        }
        Command::Bd { anchor, test } => {
            let a = read_rd_csv(&anchor).stage("load")?;
            let b = read_rd_csv(&test).stage("load")?;
            let pa: Vec<_> = a.iter().map(|r| r.point).collect();
            let pb: Vec<_> = b.iter().map(|r| r.point).collect();
            let result = bd_metrics(&pa, &pb).stage("bd")?;
            print!(
                "{}",
                bd_report(&anchor.to_string_lossy(), &test.to_string_lossy(), &result)
            );
            Ok(())
        }
        Command::Synth {
            out_dir,
            angular,
            spatial,
            channels,
            seed,
            bit_depth,
        } => {
            let lf = occluded_disc(angular, spatial, channels, seed).stage("synth")?;
            let manifest = save_light_field(&lf, &out_dir, bit_depth).stage("write")?;
            println!("wrote {}", manifest.display());
            Ok(())
        }
        Command::Info { container } => {
            let bytes = fs::read(&container).map_err(|e| io_failure("read", &container, e))?;
            let h = read_header_bytes(&bytes).stage("container")?;
            let sizes = section_sizes(&bytes).stage("container")?;
            println!("angular (S,T): {:?}", h.angular);
            println!("spatial (W,H): {:?}", h.spatial);
            println!("channels: {}", h.channels);
            println!("layers K: {} depths {:?} beta {:.6}", h.layer_count(), h.depths, h.beta);
            println!(
                "stack: {}",
                match h.source {
                    StackSource::Layers => "layers",
                    StackSource::Views => "views",
                }
            );
            println!("components N: {} partition {:?}", h.components(), h.partition);
            if h.lossless {
                println!("mode: lossless");
            } else {
                println!("mode: latent, p={} sizes {:?} Q={}", h.patch, h.dbn_sizes, h.quant_bits);
            }
            for (m, s) in sizes.iter().enumerate() {
                println!("level {}: {s} bytes", m + 1);
            }
            println!("total: {} bytes, {:.5} bpp", bytes.len(), bits_per_pixel(bytes.len(), &h));
            Ok(())
        }
    }
}

fn report_psnr(original: &LightField, decoded: &LightField, mask: &lfcodec::layers::ValidityMask) -> lfcodec::Result<()> {
    let (s_dim, _) = original.angular_dims();
    for (i, p) in per_view_psnr(original, decoded, mask, PEAK_NORMALIZED)?.into_iter().enumerate() {
        match p {
            Some(p) => println!("view s={} t={}: psnr {p:.4} dB", i % s_dim, i / s_dim),
            None => println!("view s={} t={}: no valid rays", i % s_dim, i / s_dim),
        }
    }
    println!("overall psnr: {:.4} dB", masked_psnr(original, decoded, mask, PEAK_NORMALIZED)?);
    Ok(())
}

fn export_latents_from(bytes: &[u8], dir: &Path) -> Outcome {
    let container = read_container(bytes, None).stage("export")?;
    let h = &container.header;
    if h.lossless {
        return Err(Failure {
            stage: "export",
            error: Error::Config("lossless containers carry no latent codes".into()),
        });
    }
    let quant = QuantizerSpec::new(h.quant_bits).stage("export")?;
    let codes: Vec<Vec<f64>> = container
        .levels
        .iter()
        .filter_map(|l| match l {
            LevelPayload::Latent { symbols, .. } => Some(symbols),
            _ => None,
        })
        .flat_map(|s| quant.dequantize(s).chunks(h.code_len()).map(<[f64]>::to_vec).collect::<Vec<_>>())
        .collect();
    let frames = export_latent_planes(&codes, dir, lfcodec::bitstream::planes::DEFAULT_ROWS_PER_FRAME).stage("export")?;
    println!("exported {} latent vectors in {} frames to {}", codes.len(), frames.len(), dir.display());
    Ok(())
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error [workers]: {e}");
            return ExitCode::from(1);
        }
    }
    match panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error [{}]: {}", f.stage, f.error);
            ExitCode::from(exit_code(&f.error))
        }
        Err(_) => {
            eprintln!("error [internal]: unexpected failure");
            ExitCode::from(3)
        }
    }
}
