//! Parameter ladders, the parallel sweep and its CSV outputs.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::{decode, encode, evaluate, Coder, PipelineConfig, PipelineError};
use crate::cloud::PointCloud;
use crate::geometry::{GeometryConfig, GeometryMode};
use crate::metrics::{bd_stats, RdPoint};
use crate::vpcc::VpccConfig;

/// A three-case experiment. Case 1 codes everything losslessly, case 2
/// keeps geometry lossless and walks the color ladder, case 3 walks both.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub case: u8,
    pub coders: Vec<Coder>,
    /// Position quantization scales; one entry or one per ladder step.
    pub pqs: Vec<f64>,
    /// Trisoup block exponents for case 3; empty keeps octree geometry.
    pub dbodl: Vec<u32>,
    pub rqs: Vec<f64>,
    pub ptqs: Vec<f64>,
    pub ltqs: Vec<f64>,
    pub image_qsteps: Vec<u16>,
    pub lodc: usize,
    pub k: usize,
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub benchmark: Coder,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: 2,
            coders: vec![Coder::Raht, Coder::Predict, Coder::Lifting],
            pqs: vec![1.0],
            dbodl: Vec::new(),
            rqs: vec![2.0, 4.0, 8.0, 16.0],
            ptqs: vec![2.0, 4.0, 8.0, 16.0],
            ltqs: vec![2.0, 4.0, 8.0, 16.0],
            image_qsteps: vec![1, 2, 4, 8],
            lodc: 8,
            k: 3,
            inputs: Vec::new(),
            output_dir: PathBuf::from("."),
            benchmark: Coder::Raht,
        }
    }
}

fn pick<T: Copy>(list: &[T], i: usize, what: &str, n: usize) -> Result<T, PipelineError> {
    match list.len() {
        1 => Ok(list[0]),
        len if len == n => Ok(list[i]),
        len => Err(PipelineError::Config(format!("{what} has {len} entries, expected 1 or {n}"))),
    }
}

/// The pipeline configurations of one coder's ladder, in ladder order.
pub fn ladder(cfg: &ExperimentConfig, coder: Coder) -> Result<Vec<PipelineConfig>, PipelineError> {
    let base = PipelineConfig {
        coder,
        lodc: cfg.lodc,
        k: cfg.k,
        ..Default::default()
    };
    let steps: Vec<f64> = match coder {
        Coder::Raht => cfg.rqs.clone(),
        Coder::Predict => cfg.ptqs.clone(),
        Coder::Lifting => cfg.ltqs.clone(),
        Coder::Vpcc => cfg.image_qsteps.iter().map(|&q| q as f64).collect(),
    };
    let out = match cfg.case {
        1 => vec![PipelineConfig {
            vpcc: VpccConfig {
                geometry_qstep: 1,
                texture_qstep: 1,
                ..base.vpcc
            },
            ..base
        }],
        2 | 3 => {
            if steps.is_empty() {
                return Err(PipelineError::Config(format!("empty step ladder for {}", coder.name())));
            }
            let n = steps.len();
            let mut v = Vec::with_capacity(n);
            for (i, &step) in steps.iter().enumerate() {
                let mut p = PipelineConfig {
                    qstep: step,
                    yuv: true,
                    ..base.clone()
                };
                p.vpcc.texture_qstep = step as u16;
                if cfg.case == 3 {
                    p.pqs = pick(&cfg.pqs, i, "pqs", n)?;
                    if coder == Coder::Vpcc {
                        p.vpcc.geometry_qstep = step as u16;
                    } else if !cfg.dbodl.is_empty() {
                        p.geometry = GeometryConfig {
                            mode: GeometryMode::Trisoup,
                            dbodl: pick(&cfg.dbodl, i, "dbodl", n)?,
                            ..GeometryConfig::default()
                        };
                    }
                }
                v.push(p);
            }
            v
        }
        c => return Err(PipelineError::Config(format!("case must be 1, 2 or 3, got {c}"))),
    };
    for p in &out {
        p.validate()?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RdRow {
    pub dataset: String,
    pub case: u8,
    pub coder: String,
    pub bpp_geom: f64,
    pub bpp_color: f64,
    pub bpp_total: f64,
    pub psnr_g: f64,
    pub psnr_y: Option<f64>,
    pub psnr_u: Option<f64>,
    pub psnr_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TimingRow {
    pub dataset: String,
    pub case: u8,
    pub coder: String,
    pub step: usize,
    pub encode_s: f64,
    pub decode_s: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BdRow {
    pub dataset: String,
    pub coder: String,
    pub benchmark: String,
    pub bd_psnr: f64,
    pub bd_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<RdRow>,
    pub timings: Vec<TimingRow>,
    pub bd: Vec<BdRow>,
    pub warnings: Vec<String>,
}

fn run_point(name: &str, case: u8, cloud: &PointCloud, cfg: &PipelineConfig, step: usize) -> Result<(RdRow, TimingRow), PipelineError> {
    let t0 = Instant::now();
    let enc = encode(cloud, cfg)?;
    let t1 = Instant::now();
    let dec = decode(&enc.bytes)?;
    let t2 = Instant::now();
    let ev = evaluate(cloud, &dec)?;
    let [y, u, v] = match ev.psnr_yuv {
        Some(p) => p.map(Some),
        None => [None; 3],
    };
    let row = RdRow {
        dataset: name.to_string(),
        case,
        coder: cfg.coder.name().to_string(),
        bpp_geom: enc.bpp_geometry(),
        bpp_color: enc.bpp_color(),
        bpp_total: enc.bpp_total(),
        psnr_g: ev.psnr_geometry,
        psnr_y: y,
        psnr_u: u,
        psnr_v: v,
    };
    let timing = TimingRow {
        dataset: name.to_string(),
        case,
        coder: cfg.coder.name().to_string(),
        step,
        encode_s: (t1 - t0).as_secs_f64(),
        decode_s: (t2 - t1).as_secs_f64(),
    };
    Ok((row, timing))
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0]) || v.windows(2).all(|w| w[1] > w[0])
}

/// Runs every ladder point of every coder on every dataset in parallel.
/// Rows come back in dataset, coder, ladder order.
pub fn run_sweep(cfg: &ExperimentConfig, datasets: &[(String, PointCloud)]) -> Result<SweepResult, PipelineError> {
    let mut jobs = Vec::new();
    for (d, _) in datasets.iter().enumerate() {
        for &coder in &cfg.coders {
            for (i, p) in ladder(cfg, coder)?.into_iter().enumerate() {
                jobs.push((d, i, p));
            }
        }
    }
    let done = jobs
        .par_iter()
        .map(|(d, i, p)| run_point(&datasets[*d].0, cfg.case, &datasets[*d].1, p, *i))
        .collect::<Result<Vec<_>, _>>()?;
    let (rows, timings): (Vec<RdRow>, Vec<TimingRow>) = done.into_iter().unzip();
    let mut warnings = Vec::new();
    for (name, _) in datasets {
        for &coder in &cfg.coders {
            let rates: Vec<f64> = rows
                .iter()
                .filter(|r| &r.dataset == name && r.coder == coder.name())
                .map(|r| r.bpp_total)
                .collect();
            if rates.len() > 1 && !strictly_monotone(&rates) {
                let w = format!("{name}/{}: rates along the ladder are not monotone: {rates:?}", coder.name());
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    let bd = bd_table(&rows, cfg.benchmark);
    Ok(SweepResult {
        rows,
        timings,
        bd,
        warnings,
    })
}

fn curve(rows: &[RdRow], dataset: &str, coder: &str) -> Vec<RdPoint> {
    rows.iter()
        .filter(|r| r.dataset == dataset && r.coder == coder)
        .map(|r| RdPoint {
            rate: r.bpp_total,
            psnr: r.psnr_y.unwrap_or(r.psnr_g),
        })
        .collect()
}

/// BD-PSNR and BD-rate of each coder against the benchmark, per dataset.
/// Curves use total rate and luma PSNR (geometry PSNR for colorless
/// clouds); pairs whose curves do not support the statistics are skipped.
pub fn bd_table(rows: &[RdRow], benchmark: Coder) -> Vec<BdRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let k = (r.dataset.as_str(), r.coder.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for &(dataset, coder) in &keys {
        if coder == benchmark.name() || !keys.contains(&(dataset, benchmark.name())) {
            continue;
        }
        let a = curve(rows, dataset, benchmark.name());
        let b = curve(rows, dataset, coder);
        match bd_stats(&a, &b) {
            Ok((bd_psnr, bd_rate)) => out.push(BdRow {
                dataset: dataset.to_string(),
                coder: coder.to_string(),
                benchmark: benchmark.name().to_string(),
                bd_psnr,
                bd_rate,
            }),
            Err(e) => log::debug!("no BD statistics for {dataset}/{coder}: {e}"),
        }
    }
    out
}

fn write_csv<T: serde::Serialize>(rows: &[T], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_csv(rows: &[RdRow], out: impl Write) -> Result<(), csv::Error> {
    write_csv(rows, out)
}

pub fn write_timing_csv(rows: &[TimingRow], out: impl Write) -> Result<(), csv::Error> {
    write_csv(rows, out)
}

pub fn write_bd_csv(rows: &[BdRow], out: impl Write) -> Result<(), csv::Error> {
    write_csv(rows, out)
}
