//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcc_core::attribute::{
    attribute_decode, encode_attributes, generate_lod, influence_weights, lifting_forward, lifting_inverse, predict_value,
    prediction_weights, update_coefficient, validate_thresholds, AttributeCoder, AttributeConfig, LodPartition, Predictors,
    RahtPlan,
};
use pcc_core::bench::{decode, encode, run_sweep, Coder, ExperimentConfig, PipelineConfig};
use pcc_core::cloud::PointCloud;
use pcc_core::geometry::{decode_geometry, encode_geometry, encode_geometry_lossless, GeometryConfig, GeometryMode};
use pcc_core::metrics::{bd_stats, d_rms, d_s_rms, omega, psnr, psnr_color, psnr_geometry, Channel, RdPoint, PSNR_CAP};
use pcc_core::spatial::kd_build;
use pcc_core::vpcc::{
    build_occupancy_map, decode_vpcc, encode_vpcc, estimate_normals, pack_patches, project, OccupancyMap, Patch, Plane,
    ReferenceCodec, VpccConfig,
};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_colors(r: &mut ChaCha8Rng, n: usize) -> Vec<[u8; 3]> {
    (0..n).map(|_| [r.gen(), r.gen(), r.gen()]).collect()
}

fn random_voxels(r: &mut ChaCha8Rng, n: usize, bits: u32) -> Vec<[u32; 3]> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = [0; 3].map(|_: u8| r.gen_range(0..1u32 << bits));
        if seen.insert(v) {
            out.push(v);
        }
    }
    out
}

fn plane_voxels(side: u32) -> Vec<[u32; 3]> {
    let mut v = Vec::new();
    for x in 0..side {
        for y in 0..side {
            v.push([x + 5, y + 9, 300 + (2 * x + y) / 7]);
        }
    }
    v
}

fn sphere_voxels(r: f64, c: f64) -> Vec<[u32; 3]> {
    let lo = (c - r - 1.0) as u32;
    let hi = (c + r + 1.0) as u32;
    let mut v = Vec::new();
    for x in lo..=hi {
        for y in lo..=hi {
            for z in lo..=hi {
                let d = [x, y, z].map(|a| a as f64 - c);
                if ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() - r).abs() < 0.5 {
                    v.push([x, y, z]);
                }
            }
        }
    }
    v
}

fn cube_shell_voxels(side: u32, at: u32) -> Vec<[u32; 3]> {
    let mut v = Vec::new();
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                if [x, y, z].iter().any(|&a| a == 0 || a == side - 1) {
                    v.push([x + at, y + at, z + at]);
                }
            }
        }
    }
    v
}

fn colored(r: &mut ChaCha8Rng, v: &[[u32; 3]]) -> PointCloud {
    PointCloud::from_voxels(v, Some(random_colors(r, v.len())))
}

fn lossless_config(coder: Coder) -> PipelineConfig {
    PipelineConfig {
        coder,
        geometry: GeometryConfig {
            mode: GeometryMode::Lossless,
            dcm: true,
            ..GeometryConfig::default()
        },
        ..PipelineConfig::default()
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut clouds = Vec::new();
    for _ in 0..50 {
        let n = 10f64.powf(r.gen_range(1.0..4.0)).round() as usize;
        let v = random_voxels(&mut r, n, 10);
        clouds.push(colored(&mut r, &v));
    }
    for v in [plane_voxels(60), sphere_voxels(40.0, 512.0), cube_shell_voxels(30, 700)] {
        clouds.push(colored(&mut r, &v));
    }
    let mut runs = 0;
    for (i, c) in clouds.iter().enumerate() {
        for coder in [Coder::Raht, Coder::Predict, Coder::Lifting] {
            let cfg = lossless_config(coder);
            let enc = encode(c, &cfg).map_err(|e| format!("cloud {i} {coder:?}: {e}"))?;
            let back = decode(&enc.bytes).map_err(|e| format!("cloud {i} {coder:?}: {e}"))?;
            check!(back.sorted_entries() == c.sorted_entries(), "cloud {i} ({} points) {coder:?} not reproduced", c.len());
            runs += 1;
        }
    }
    let t = start.elapsed();
    check!(t < Duration::from_secs(60), "took {t:.1?}");
    Ok(format!("{runs} round trips exact in {t:.1?}"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, v) in [
        ("plane", plane_voxels(64)),
        ("sphere", sphere_voxels(50.0, 200.0)),
        ("cube shell", cube_shell_voxels(40, 100)),
    ] {
        check!(v.len() >= 1000, "{name} has only {} points", v.len());
        let c = PointCloud::from_voxels(&v, None);
        let bs = encode_geometry_lossless(&c, true).map_err(|e| e.to_string())?;
        let bpp = bs.to_bytes().len() as f64 * 8.0 / v.len() as f64;
        check!(bpp < 15.0, "{name}: {bpp:.3} bpp");
        worst = worst.max(bpp);
    }
    Ok(format!("worst lossless geometry rate {worst:.3} bpp (limit 15)"))
}

fn brute_k(points: &[[f64; 3]], q: &[f64; 3], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (0..3).map(|a| (p[a] - q[a]) * (p[a] - q[a])).sum::<f64>()))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    for inst in 0..1000 {
        let n = r.gen_range(1..300);
        let integer = inst % 2 == 0;
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [0; 3].map(|_: u8| {
                    if integer {
                        r.gen_range(0..20) as f64
                    } else {
                        r.gen_range(-50.0..50.0)
                    }
                })
            })
            .collect();
        let tree = kd_build(&pts, r.gen_range(1..10));
        let q = [0; 3].map(|_: u8| r.gen_range(-60.0..60.0f64).round());
        let k = r.gen_range(1..12);
        let want = brute_k(&pts, &q, k);
        let got = tree.k_nearest_sq(&q, k);
        check!(got == want, "instance {inst}: k-nearest mismatch");
        let nn = tree.nearest(&q).unwrap();
        check!(nn.index == want[0].0 && nn.distance == want[0].1.sqrt(), "instance {inst}: nearest mismatch");
    }
    let fig = [[2.0, 3.0], [4.0, 7.0], [5.0, 4.0], [9.0, 6.0], [8.0, 1.0], [7.0, 2.0]];
    let tree = kd_build(&fig, 1);
    let nn = tree.nearest(&[9.0, 7.0]).unwrap();
    check!(fig[nn.index] == [9.0, 6.0] && nn.distance == 1.0, "figure query returned {:?}", fig[nn.index]);
    Ok("1000 random instances exact; (9,7) -> (9,6) at distance 1".into())
}

fn criterion_4() -> Outcome {
    let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
    let lod = generate_lod(&pts, &[2.0, 0.0], 0).map_err(|e| e.to_string())?;
    let xs = |s: &[usize]| s.iter().map(|&i| pts[i][0]).collect::<Vec<_>>();
    check!(lod.refinements.len() == 2, "{} levels", lod.refinements.len());
    check!(xs(&lod.refinements[0]) == [3.0], "R_1 = {:?}", xs(&lod.refinements[0]));
    check!(xs(&lod.refinements[1]) == [1.0], "R_2 = {:?}", xs(&lod.refinements[1]));
    for bad in [vec![], vec![2.0, 1.0], vec![0.0, 2.0, 0.0], vec![2.0, 2.0, 0.0], vec![-1.0, 0.0], vec![f64::NAN, 0.0]] {
        check!(validate_thresholds(&bad).is_err(), "{bad:?} accepted");
        check!(generate_lod(&pts, &bad, 0).is_err(), "{bad:?} accepted by generation");
    }
    Ok("R_1 = {3}, R_2 = {1}; invalid thresholds rejected".into())
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = r.gen_range(1..600);
        let bits = r.gen_range(2..9);
        let v = random_voxels(&mut r, n.min(1 << (3 * bits)), bits);
        let vals: Vec<f64> = (0..v.len()).map(|_| r.gen_range(0.0..255.0)).collect();
        let plan = RahtPlan::new(&v);
        let coeffs = plan.forward(&vals);
        let e_in: f64 = vals.iter().map(|x| x * x).sum();
        let e_out: f64 = coeffs.iter().map(|x| x * x).sum();
        let rel = (e_in - e_out).abs() / e_in.max(f64::MIN_POSITIVE);
        check!(rel <= 1e-9, "cloud {i}: relative energy error {rel:e}");
        worst = worst.max(rel);

        let c = colored(&mut r, &v);
        let cfg = AttributeConfig {
            coder: AttributeCoder::Raht,
            qsteps: [0.0; 3],
            ..AttributeConfig::default()
        };
        let bs = encode_attributes(&c, &cfg).map_err(|e| e.to_string())?;
        let back = attribute_decode(&bs, &c).map_err(|e| e.to_string())?;
        check!(back.colors == c.colors, "cloud {i}: lossless decode differs");
    }
    Ok(format!("energy preserved (worst relative error {worst:.1e}); lossless identity on 100 clouds"))
}

fn random_lod(r: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 3]>, LodPartition, Predictors) {
    let v = random_voxels(r, n, 6);
    let pos: Vec<[f64; 3]> = v.iter().map(|p| p.map(f64::from)).collect();
    let lod = generate_lod(&pos, &[16.0, 8.0, 4.0, 2.0, 0.0], 0).unwrap();
    let pred = Predictors::build(&pos, &lod, r.gen_range(1..5));
    (pos, lod, pred)
}

/// Influence weights from their recursive definition: one plus the
/// ζ-scaled weights of every point a point helps predict.
fn weights_oracle(pred: &Predictors) -> Vec<f64> {
    let n = pred.neighbors.len();
    let mut users: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, nb) in pred.neighbors.iter().enumerate() {
        for &(j, d2) in nb {
            users[j].push((i, d2));
        }
    }
    fn w(j: usize, users: &[Vec<(usize, f64)>], memo: &mut HashMap<usize, f64>) -> f64 {
        if let Some(&v) = memo.get(&j) {
            return v;
        }
        let v = 1.0 + users[j].iter().map(|&(i, d2)| w(i, users, memo) / d2.max(1.0)).sum::<f64>();
        memo.insert(j, v);
        v
    }
    let mut memo = HashMap::new();
    (0..n).map(|j| w(j, &users, &mut memo)).collect()
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    for i in 0..100 {
        let n = r.gen_range(1..=200);
        let (_, lod, pred) = random_lod(&mut r, n);
        let weights = influence_weights(&lod, &pred);
        let oracle = weights_oracle(&pred);
        for (a, b) in weights.iter().zip(&oracle) {
            check!((a - b).abs() <= 1e-9 * b, "cloud {i}: weight {a} vs oracle {b}");
        }
        for d2 in [0.0, 0.5, 1.0, 2.0, 9.0] {
            check!(update_coefficient(d2) == 1.0 / f64::max(d2, 1.0), "update coefficient at {d2}");
        }
        let vals: Vec<i64> = (0..n).map(|_| r.gen_range(0..256)).collect();
        let coeffs = lifting_forward(&vals, &lod, &pred, &weights);
        let back = lifting_inverse(&coeffs, &lod, &pred, &weights);
        check!(back == vals, "cloud {i}: reconstruction differs");
    }
    Ok("100 clouds reconstructed exactly; weights match the recursive definition".into())
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    for t in 0..1000 {
        let k = r.gen_range(1..=8);
        let vals: Vec<i64> = (0..k).map(|_| r.gen_range(0..256)).collect();
        let nb: Vec<(usize, f64)> = (0..k)
            .map(|i| {
                let d = [0; 3].map(|_: u8| r.gen_range(-20i64..=20));
                let d2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).max(1) as f64;
                (i, d2)
            })
            .collect();
        let den: f64 = nb.iter().map(|n| 1.0 / n.1).sum();
        let num: f64 = nb.iter().map(|n| vals[n.0] as f64 / n.1).sum();
        let want = (num / den).round() as i64;
        let got = predict_value(&nb, &vals);
        check!(got == want, "configuration {t}: {got} vs {want}");
        let w = prediction_weights(&nb);
        for (wi, n) in w.iter().zip(&nb) {
            check!((wi - (1.0 / n.1) / den).abs() < 1e-12, "configuration {t}: weight mismatch");
        }
    }
    let mut rc = rng(70);
    for i in 0..10 {
        let v = random_voxels(&mut rc, 500 + 100 * i, 8);
        let c = colored(&mut rc, &v);
        let cfg = AttributeConfig {
            coder: AttributeCoder::Predict,
            qsteps: [1.0; 3],
            ..AttributeConfig::default()
        };
        let bs = encode_attributes(&c, &cfg).map_err(|e| e.to_string())?;
        let back = attribute_decode(&bs, &c).map_err(|e| e.to_string())?;
        check!(back.colors == c.colors, "cloud {i}: qstep 1 not lossless");
        let back = decode(&encode(&c, &PipelineConfig { qstep: 1.0, ..lossless_config(Coder::Predict) }).unwrap().bytes).unwrap();
        check!(back.sorted_entries() == c.sorted_entries(), "cloud {i}: pipeline at qstep 1 not lossless");
    }
    Ok("1000 configurations match the weighted-average formula; qstep 1 lossless".into())
}

fn trisoup(v: &[[u32; 3]], dbodl: u32) -> Result<PointCloud, String> {
    let cfg = GeometryConfig {
        mode: GeometryMode::Trisoup,
        dbodl,
        dcm: false,
        slicing: None,
    };
    let c = PointCloud::from_voxels(v, None);
    decode_geometry(&encode_geometry(&c, &cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    for (name, v) in [("plane", plane_voxels(48)), ("sphere", sphere_voxels(30.0, 64.0))] {
        let orig = PointCloud::from_voxels(&v, None);
        let mut prev = f64::INFINITY;
        for dbodl in [1, 2] {
            let w = (1u32 << dbodl) as f64;
            let dec = trisoup(&v, dbodl)?;
            let d = d_s_rms(&orig, &dec, Channel::Geometry).map_err(|e| e.to_string())?;
            check!(d <= w * 3f64.sqrt(), "{name} at block exponent {dbodl}: d_s_rms {d:.3} > {:.3}", w * 3f64.sqrt());
            let p = psnr_geometry(&orig, &dec).map_err(|e| e.to_string())?;
            check!(p <= prev, "{name}: PSNR rose from {prev:.4} to {p:.4} at block exponent {dbodl}");
            prev = p;
            notes.push(format!("{name}/{dbodl}: {d:.3}"));
        }
    }
    Ok(format!("d_s_rms {}", notes.join(", ")))
}

fn brute_d_rms(a: &PointCloud, b: &PointCloud, ch: Option<usize>) -> f64 {
    let mut sum = 0.0;
    for (i, p) in a.positions.iter().enumerate() {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (j, q) in b.positions.iter().enumerate() {
            let d: f64 = (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum();
            if d < bd {
                bd = d;
                best = j;
            }
        }
        sum += match ch {
            None => bd,
            Some(c) => {
                let x = a.colors.as_ref().unwrap()[i][c] as f64 - b.colors.as_ref().unwrap()[best][c] as f64;
                x * x
            }
        };
    }
    (sum / a.len() as f64).sqrt()
}

fn criterion_9() -> Outcome {
    let mut r = rng(9);
    for t in 0..20 {
        let na = r.gen_range(1..=1000);
        let nb = r.gen_range(1..=1000);
        let mk = |r: &mut ChaCha8Rng, n: usize| {
            let pos: Vec<[f64; 3]> = (0..n).map(|_| [0; 3].map(|_: u8| r.gen_range(0.0..100.0))).collect();
            PointCloud::with_colors(pos, random_colors(r, n))
        };
        let a = mk(&mut r, na);
        let b = mk(&mut r, nb);
        for (ch, idx) in [(Channel::Geometry, None), (Channel::Y, Some(0)), (Channel::U, Some(1)), (Channel::V, Some(2))] {
            let got = d_rms(&a, &b, ch).map_err(|e| e.to_string())?;
            let want = brute_d_rms(&a, &b, idx);
            check!((got - want).abs() <= 1e-12 * want.max(1.0), "pair {t} {ch:?}: {got} vs {want}");
        }
        let s = d_s_rms(&a, &b, Channel::Geometry).unwrap();
        check!(s == d_s_rms(&b, &a, Channel::Geometry).unwrap(), "pair {t}: asymmetric");
    }
    let corners = PointCloud::new(vec![[0.0; 3], [1023.0, 5.0, 9.0], [3.0, 1023.0, 1023.0]]);
    check!(omega(&corners).unwrap() == 1023.0, "omega");
    let a = PointCloud::new(vec![[0.0; 3]]);
    let b = PointCloud::new(vec![[3.0, 4.0, 0.0]]);
    check!(d_rms(&a, &b, Channel::Geometry).unwrap() == 5.0, "3-4-5 pair");
    check!((psnr(1023.0, 1.0) - 60.1975).abs() < 1e-3, "PSNR at peak 1023");
    check!((psnr(255.0, 8.0) - 30.0695).abs() < 1e-3, "PSNR at 8");
    check!(psnr(255.0, 255.0) == 0.0, "PSNR at peak");
    check!(psnr_geometry(&corners, &corners).unwrap() == PSNR_CAP, "cap");
    let ca = PointCloud::with_colors(vec![[0.0; 3]], vec![[10, 20, 30]]);
    check!(psnr_color(&ca, &ca, Channel::Y).unwrap() == PSNR_CAP, "color cap");

    let base: Vec<RdPoint> = [(0.3, 28.0), (0.7, 32.5), (1.6, 36.1), (3.5, 39.0), (7.9, 41.2)]
        .iter()
        .map(|&(rate, psnr)| RdPoint { rate, psnr })
        .collect();
    let up: Vec<RdPoint> = base.iter().map(|p| RdPoint { psnr: p.psnr + 1.0, ..*p }).collect();
    let (bd_psnr, _) = bd_stats(&base, &up).map_err(|e| e.to_string())?;
    check!((bd_psnr - 1.0).abs() <= 1e-6, "BD-PSNR {bd_psnr}");
    let doubled: Vec<RdPoint> = base.iter().map(|p| RdPoint { rate: p.rate * 2.0, ..*p }).collect();
    let (_, bd_rate) = bd_stats(&base, &doubled).map_err(|e| e.to_string())?;
    check!((bd_rate - 100.0).abs() <= 0.1, "BD-rate {bd_rate}");
    Ok(format!("20 random pairs match brute force; BD-PSNR {bd_psnr:.9} dB, BD-rate {bd_rate:.6} %"))
}

fn occupancy_ok(m: &OccupancyMap) -> Result<(), String> {
    let sw = m.width.div_ceil(m.sub_block);
    for (s, &flag) in m.sub_flags.iter().enumerate() {
        let (sx, sy) = (s as u32 % sw, s as u32 / sw);
        let any = (0..m.sub_block).any(|y| {
            (0..m.sub_block).any(|x| {
                let (px, py) = (sx * m.sub_block + x, sy * m.sub_block + y);
                px < m.width && py < m.height && m.get(px, py)
            })
        });
        check!(flag == any, "sub-block {s} flag {flag} but occupancy {any}");
    }
    let bw = m.width.div_ceil(m.block);
    let per = m.block / m.sub_block;
    for (b, &flag) in m.block_flags.iter().enumerate() {
        let (bx, by) = (b as u32 % bw, b as u32 / bw);
        let all = (0..per).all(|y| (0..per).all(|x| m.sub_flags[((by * per + y) * sw + bx * per + x) as usize]));
        check!(flag == all, "block {b} flag {flag} but sub-blocks {all}");
    }
    Ok(())
}

fn packing_ok(patches: &[Patch], w: u32, h: u32, block: u32) -> Result<(), String> {
    let mut owner = vec![usize::MAX; (w * h) as usize];
    for (k, p) in patches.iter().enumerate() {
        check!(p.u0 % block == 0 && p.v0 % block == 0, "patch {k} not block aligned");
        check!(p.u0 + p.width <= w && p.v0 + p.height <= h, "patch {k} outside the grid");
        for by in p.v0 / block..(p.v0 + p.height).div_ceil(block) {
            for bx in p.u0 / block..(p.u0 + p.width).div_ceil(block) {
                let i = (by * (w / block) + bx) as usize;
                check!(owner[i] == usize::MAX || owner[i] == k, "block ({bx},{by}) shared");
                owner[i] = k;
            }
        }
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let mut packings = 0;
    for _ in 0..40 {
        let mut patches: Vec<Patch> = (0..r.gen_range(1..30))
            .map(|_| {
                let (w, h) = (r.gen_range(1..80), r.gen_range(1..80));
                let n = (w * h) as usize;
                let occupied: Vec<bool> = (0..n).map(|_| r.gen_bool(0.7)).collect();
                Patch {
                    plane: Plane::ALL[r.gen_range(0..6)],
                    u_min: 0,
                    v_min: 0,
                    depth_ref: 0,
                    width: w,
                    height: h,
                    u0: 0,
                    v0: 0,
                    occupied,
                    near: vec![0; n],
                    far: vec![0; n],
                    color_near: vec![[0; 3]; n],
                    color_far: vec![[0; 3]; n],
                    points: Vec::new(),
                }
            })
            .collect();
        let (w, h) = pack_patches(&mut patches, 128, 16);
        packing_ok(&patches, w, h, 16)?;
        occupancy_ok(&build_occupancy_map(&patches, w, h, 16, 4))?;
        packings += 1;
    }
    for v in [sphere_voxels(20.0, 40.0), cube_shell_voxels(20, 3)] {
        let f = project(&colored(&mut r, &v), &VpccConfig::default()).map_err(|e| e.to_string())?;
        occupancy_ok(&f.occupancy)?;
        packings += 1;
    }

    let cfg = VpccConfig::default();
    let squares: [Vec<[u32; 3]>; 3] = [
        (0..30).flat_map(|x| (0..20).map(move |y| [x + 2, y + 4, 17])).collect(),
        (0..25).flat_map(|y| (0..25).map(move |z| [9, y, z])).collect(),
        (0..12)
            .flat_map(|x| (0..12).map(move |z| [x, 40, z]))
            .chain((0..12).flat_map(|x| (0..12).map(move |z| [x + 40, 40, z + 40])))
            .collect(),
    ];
    for (i, v) in squares.iter().enumerate() {
        let c = colored(&mut r, v);
        let (bytes, _) = encode_vpcc(&c, &cfg, &ReferenceCodec).map_err(|e| e.to_string())?;
        let back = decode_vpcc(&bytes, &ReferenceCodec).map_err(|e| e.to_string())?;
        check!(back.sorted_entries() == c.sorted_entries(), "flat cloud {i} not reproduced");
    }

    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let n = [0; 3].map(|_: u8| r.gen_range(-1.0..1.0f64));
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let mut n = n.map(|c| c / len);
        let big = (0..3).max_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
        if n[big] < 0.0 {
            n = n.map(|c| -c);
        }
        let t1 = {
            let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let d = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
            let t = [0, 1, 2].map(|k| a[k] - d * n[k]);
            let l = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            t.map(|c| c / l)
        };
        let t2 = [n[1] * t1[2] - n[2] * t1[1], n[2] * t1[0] - n[0] * t1[2], n[0] * t1[1] - n[1] * t1[0]];
        let pts: Vec<[f64; 3]> = (0..400)
            .map(|_| {
                let (a, b) = (r.gen_range(-30.0..30.0), r.gen_range(-30.0..30.0));
                [0, 1, 2].map(|k| 50.0 + a * t1[k] + b * t2[k])
            })
            .collect();
        for est in estimate_normals(&PointCloud::new(pts), 12) {
            for k in 0..3 {
                worst = worst.max((est[k] - n[k]).abs());
            }
        }
    }
    check!(worst <= 1e-6, "normal error {worst:e}");
    Ok(format!("{packings} packings valid; flat clouds exact; worst normal error {worst:.1e}"))
}

fn dense_colored() -> PointCloud {
    let mut v = Vec::new();
    let mut c = Vec::new();
    for x in 0..48u32 {
        for y in 0..48u32 {
            let z = 20 + ((x as f64 / 7.0).sin() * 6.0 + (y as f64 / 9.0).cos() * 5.0).round() as u32 + 11;
            v.push([x, y, z]);
            let f = |a: f64| (128.0 + 100.0 * a).clamp(0.0, 255.0) as u8;
            c.push([
                f((x as f64 / 6.0).sin() * (y as f64 / 11.0).cos()),
                f(((x + 2 * y) as f64 / 13.0).sin()),
                f((y as f64 / 5.0).cos() * 0.8),
            ]);
        }
    }
    PointCloud::from_voxels(&v, Some(c))
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        case: 2,
        coders: vec![Coder::Raht, Coder::Predict, Coder::Lifting],
        rqs: vec![2.0, 4.0, 8.0, 16.0],
        ptqs: vec![2.0, 4.0, 8.0, 16.0],
        ltqs: vec![2.0, 4.0, 8.0, 16.0],
        ..ExperimentConfig::default()
    };
    let res = run_sweep(&cfg, &[("dense".to_string(), dense_colored())]).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for coder in &cfg.coders {
        let mut pts: Vec<(f64, [f64; 3])> = res
            .rows
            .iter()
            .filter(|r| r.coder == coder.name())
            .map(|r| (r.bpp_total, [r.psnr_y.unwrap(), r.psnr_u.unwrap(), r.psnr_v.unwrap()]))
            .collect();
        check!(pts.len() == 4, "{coder:?}: {} points", pts.len());
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            for ch in 0..3 {
                check!(
                    w[1].1[ch] >= w[0].1[ch],
                    "{coder:?} channel {ch}: {:.3} bpp gives {:.3} dB but {:.3} bpp gives {:.3} dB",
                    w[1].0,
                    w[1].1[ch],
                    w[0].0,
                    w[0].1[ch]
                );
            }
        }
        notes.push(format!("{} {:.2}-{:.2} bpp", coder.name(), pts[0].0, pts[3].0));
    }
    let t = start.elapsed();
    check!(t < Duration::from_secs(120), "took {t:.1?}");
    Ok(format!("{} in {t:.1?}", notes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("lossless round trip", criterion_1),
        ("lossless geometry rate", criterion_2),
        ("k-d search", criterion_3),
        ("level-of-detail trace", criterion_4),
        ("RAHT", criterion_5),
        ("lifting", criterion_6),
        ("predicting transform", criterion_7),
        ("trisoup", criterion_8),
        ("metrics", criterion_9),
        ("projection pipeline", criterion_10),
        ("rate-distortion shape", criterion_11),
    ];
    let mut failed = BTreeSet::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg}"),
            Err(msg) => {
                println!("criterion {n:>2} FAIL  {name}: {msg}");
                failed.insert(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
