use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use pcc_core::bench::{
    self, container_sizes, decode, encode, evaluate, run_sweep, Coder, ExperimentConfig, PipelineConfig, PipelineError, RdRow,
};
use pcc_core::cloud::PointCloud;
use pcc_core::geometry::{GeometryConfig, GeometryMode};
use pcc_core::ply::{read_ply, write_ply, PlyFormat};
use pcc_core::vpcc::VpccConfig;

#[derive(Parser)]
#[command(name = "pcc", version, about = "Point cloud encoder, decoder and rate-distortion harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PLY file into a container.
    Encode(EncodeArgs),
    /// Decode a container into a PLY file.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write ASCII instead of binary little-endian PLY.
        #[arg(long)]
        ascii: bool,
    },
    /// Compare a decoded cloud with its original and print one CSV row.
    Eval {
        original: PathBuf,
        decoded: PathBuf,
        /// Container the decoded cloud came from, for the rate columns.
        #[arg(long)]
        bitstream: Option<PathBuf>,
        #[arg(long, default_value = "input")]
        dataset: String,
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long, default_value = "raht")]
        coder: String,
    },
    /// Run an experiment described by a JSON config.
    Sweep {
        config: PathBuf,
        /// Extra input files, appended to the config's list.
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "raht")]
    coder: Coder,
    /// Position quantization scale.
    #[arg(long = "pqs", alias = "PQS", alias = "position-quantization-scale", default_value_t = 1.0)]
    pqs: f64,
    /// Trisoup block size exponent; enables trisoup geometry.
    #[arg(long = "dbodl", alias = "DBODL", alias = "trisoup-depth")]
    dbodl: Option<u32>,
    /// RAHT quantization step (0 is lossless).
    #[arg(long = "rqs", alias = "RQS", alias = "raht-qstep")]
    rqs: Option<f64>,
    /// Predicting-transform quantization step (1 or less is lossless).
    #[arg(long = "ptqs", alias = "PTQS", alias = "predict-qstep")]
    ptqs: Option<f64>,
    /// Lifting quantization step (0 is lossless).
    #[arg(long = "ltqs", alias = "LTQS", alias = "lifting-qstep")]
    ltqs: Option<f64>,
    /// Number of detail levels.
    #[arg(long = "lodc", alias = "LODC", alias = "lod-count", default_value_t = 8)]
    lodc: usize,
    /// Neighbours per prediction.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Image quantization step for the projection coder's depth images.
    #[arg(long, default_value_t = 1)]
    geometry_qstep: u16,
    /// Image quantization step for the projection coder's texture images.
    #[arg(long, default_value_t = 1)]
    texture_qstep: u16,
    /// Code colors in YUV.
    #[arg(long)]
    yuv: bool,
    /// Disable direct coding of isolated points.
    #[arg(long)]
    no_dcm: bool,
}

/// Failure class, mapped to the process exit code.
enum Failure {
    Codec(anyhow::Error),
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<PipelineError>() {
            Some(PipelineError::Config(_)) | None => Failure::Usage(e),
            Some(_) => Failure::Codec(e),
        }
    }
}

fn codec(e: PipelineError) -> Failure {
    Failure::from(anyhow::Error::new(e))
}

fn read_cloud(path: &Path) -> anyhow::Result<PointCloud> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_ply(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn pipeline_config(a: &EncodeArgs) -> anyhow::Result<PipelineConfig> {
    let steps = [(Coder::Raht, a.rqs, "--rqs"), (Coder::Predict, a.ptqs, "--ptqs"), (Coder::Lifting, a.ltqs, "--ltqs")];
    let mut qstep = 0.0;
    for (coder, step, flag) in steps {
        if let Some(s) = step {
            if coder != a.coder {
                bail!("{flag} does not apply to the {} coder", a.coder.name());
            }
            qstep = s;
        }
    }
    let geometry = match a.dbodl {
        Some(dbodl) => GeometryConfig {
            mode: GeometryMode::Trisoup,
            dbodl,
            dcm: false,
            slicing: None,
        },
        None => GeometryConfig {
            dcm: !a.no_dcm,
            ..GeometryConfig::default()
        },
    };
    let cfg = PipelineConfig {
        coder: a.coder,
        pqs: a.pqs,
        geometry,
        qstep,
        lodc: a.lodc,
        k: a.k,
        vpcc: VpccConfig {
            geometry_qstep: a.geometry_qstep,
            texture_qstep: a.texture_qstep,
            ..VpccConfig::default()
        },
        yuv: a.yuv,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_encode(a: &EncodeArgs) -> Result<(), Failure> {
    let cfg = pipeline_config(a)?;
    let cloud = read_cloud(&a.input)?;
    let enc = encode(&cloud, &cfg).map_err(codec)?;
    write_file(&a.output, &enc.bytes)?;
    println!(
        "points={} bpp_geom={:.4} bpp_color={:.4} bpp_total={:.4} bytes={}",
        cloud.len(),
        enc.bpp_geometry(),
        enc.bpp_color(),
        enc.bpp_total(),
        enc.bytes.len()
    );
    Ok(())
}

fn cmd_decode(input: &Path, output: &Path, ascii: bool) -> Result<(), Failure> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let cloud = decode(&bytes).map_err(codec)?;
    let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
    write_file(output, &write_ply(&cloud, format))?;
    println!("points={}", cloud.len());
    Ok(())
}

fn cmd_eval(original: &Path, decoded: &Path, bitstream: Option<&Path>, dataset: String, case: u8, coder: String) -> Result<(), Failure> {
    let a = read_cloud(original)?;
    let b = read_cloud(decoded)?;
    let ev = evaluate(&a, &b).map_err(codec)?;
    let (g, c) = match bitstream {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            container_sizes(&bytes).map_err(codec)?
        }
        None => (0, 0),
    };
    let n = a.len() as f64;
    let [y, u, v] = match ev.psnr_yuv {
        Some(p) => p.map(Some),
        None => [None; 3],
    };
    let row = RdRow {
        dataset,
        case,
        coder,
        bpp_geom: g as f64 * 8.0 / n,
        bpp_color: c as f64 * 8.0 / n,
        bpp_total: (g + c) as f64 * 8.0 / n,
        psnr_g: ev.psnr_geometry,
        psnr_y: y,
        psnr_u: u,
        psnr_v: v,
    };
    bench::write_rows_csv(&[row], std::io::stdout()).context("writing CSV")?;
    Ok(())
}

fn cmd_sweep(config: &Path, inputs: Vec<PathBuf>, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    cfg.inputs.extend(inputs);
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    if cfg.inputs.is_empty() {
        return Err(Failure::Usage(anyhow!("no input files")));
    }
    let mut datasets = Vec::new();
    for path in &cfg.inputs {
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        datasets.push((name, read_cloud(path)?));
    }
    let res = run_sweep(&cfg, &datasets).map_err(codec)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let open = |name: &str| -> anyhow::Result<fs::File> {
        let p = cfg.output_dir.join(name);
        fs::File::create(&p).with_context(|| format!("creating {}", p.display()))
    };
    bench::write_rows_csv(&res.rows, open("rd.csv")?).context("writing rd.csv")?;
    bench::write_timing_csv(&res.timings, open("timing.csv")?).context("writing timing.csv")?;
    bench::write_bd_csv(&res.bd, open("bd.csv")?).context("writing bd.csv")?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    println!("rows={} bd_rows={} output={}", res.rows.len(), res.bd.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(&a),
        Command::Decode { input, output, ascii } => cmd_decode(&input, &output, ascii),
        Command::Eval {
            original,
            decoded,
            bitstream,
            dataset,
            case,
            coder,
        } => cmd_eval(&original, &decoded, bitstream.as_deref(), dataset, case, coder),
        Command::Sweep {
            config,
            inputs,
            output_dir,
        } => cmd_sweep(&config, inputs, output_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Codec(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
