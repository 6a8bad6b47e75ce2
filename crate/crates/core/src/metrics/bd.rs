//! Bjøntegaard-delta statistics with monotone piecewise-cubic interpolation.

use super::MetricsError;

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RdPoint {
    /// Bits per point.
    pub rate: f64,
    pub psnr: f64,
}

/// Monotone cubic Hermite interpolant through points with increasing `x`.
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(mut pts: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(MetricsError::InvalidCurve("repeated abscissa"));
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0]));
        d[n - 1] = end_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        Ok(Self { x, y, d })
    }

    /// Exact integral of the interpolant over `[a, b]` inside its support.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.x.len() - 1 {
            let lo = self.x[i].max(a);
            let hi = self.x[i + 1].min(b);
            if hi > lo {
                total += self.segment_integral(i, lo, hi);
            }
        }
        total
    }

    fn segment_integral(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        // Antiderivative of the Hermite basis in t = (x - x_i)/h.
        let anti = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let h00 = t4 / 2.0 - t3 + t;
            let h10 = t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0;
            let h01 = -t4 / 2.0 + t3;
            let h11 = t4 / 4.0 - t3 / 3.0;
            h * (h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1)
        };
        anti((hi - self.x[i]) / h) - anti((lo - self.x[i]) / h)
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

fn average_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64, MetricsError> {
    let pa = Pchip::new(a.to_vec())?;
    let pb = Pchip::new(b.to_vec())?;
    let lo = pa.x[0].max(pb.x[0]);
    let hi = pa.x[pa.x.len() - 1].min(pb.x[pb.x.len() - 1]);
    if hi <= lo {
        return Err(MetricsError::InvalidCurve("curves do not overlap"));
    }
    Ok((pb.integral(lo, hi) - pa.integral(lo, hi)) / (hi - lo))
}

fn check(curve: &[RdPoint]) -> Result<(), MetricsError> {
    if curve.len() < 4 {
        return Err(MetricsError::InvalidCurve("fewer than 4 points"));
    }
    if curve.iter().any(|p| !(p.rate > 0.0 && p.rate.is_finite() && p.psnr.is_finite())) {
        return Err(MetricsError::InvalidCurve("rates must be positive and PSNRs finite"));
    }
    Ok(())
}

/// Average PSNR gain (dB) and rate change (percent) of curve `b` relative
/// to curve `a` over their common range.
pub fn bd_stats(a: &[RdPoint], b: &[RdPoint]) -> Result<(f64, f64), MetricsError> {
    check(a)?;
    check(b)?;
    let by_rate = |c: &[RdPoint]| c.iter().map(|p| (p.rate.log10(), p.psnr)).collect::<Vec<_>>();
    let by_psnr = |c: &[RdPoint]| c.iter().map(|p| (p.psnr, p.rate.log10())).collect::<Vec<_>>();
    let bd_psnr = average_gap(&by_rate(a), &by_rate(b))?;
    let log_gap = average_gap(&by_psnr(a), &by_psnr(b))?;
    Ok((bd_psnr, (10f64.powf(log_gap) - 1.0) * 100.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> Vec<RdPoint> {
        [(0.5, 30.0), (1.0, 34.5), (2.0, 38.2), (4.0, 41.0), (8.0, 43.1)]
            .iter()
            .map(|&(rate, psnr)| RdPoint { rate, psnr })
            .collect()
    }

    #[test]
    fn identical_curves() {
        let (p, r) = bd_stats(&curve(), &curve()).unwrap();
        assert_eq!(p, 0.0);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn constant_psnr_offset() {
        let b: Vec<RdPoint> = curve().iter().map(|p| RdPoint { psnr: p.psnr + 1.0, ..*p }).collect();
        let (p, _) = bd_stats(&curve(), &b).unwrap();
        assert!((p - 1.0).abs() < 1e-6);
        let (q, _) = bd_stats(&b, &curve()).unwrap();
        assert!((p + q).abs() < 1e-9);
    }

    #[test]
    fn doubled_rate() {
        let b: Vec<RdPoint> = curve().iter().map(|p| RdPoint { rate: p.rate * 2.0, ..*p }).collect();
        let (_, r) = bd_stats(&curve(), &b).unwrap();
        assert!((r - 100.0).abs() < 0.1, "{r}");
    }

    #[test]
    fn integral_of_linear_data_is_exact() {
        let p = Pchip::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 6.0), (4.0, 8.0)]).unwrap();
        assert!((p.integral(0.0, 4.0) - 16.0).abs() < 1e-12);
        assert!((p.integral(0.5, 2.0) - 3.75).abs() < 1e-12);
    }

    #[test]
    fn bad_curves_rejected() {
        let c = curve();
        assert!(bd_stats(&c[..3], &c).is_err());
        let far: Vec<RdPoint> = c.iter().map(|p| RdPoint { rate: p.rate * 1000.0, psnr: p.psnr + 100.0 }).collect();
        assert!(bd_stats(&c, &far).is_err());
    }
}
