use serde::Serialize;

use super::RepMode;
use crate::error::{Error, Result};
use crate::sim::Trace;

/// Shortest usable trace accepted by [`variance_profile`].
pub const VARIANCE_MIN_LEN: usize = 1 << 14;

/// Fewest non-overlapping blocks used at any block length.
pub const MIN_BLOCKS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Linear,
    Logarithmic,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariancePoint {
    pub s: usize,
    pub blocks: usize,
    /// Sample variance of block sums `ζ_1 + … + ζ_s`.
    pub variance: f64,
    pub per_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceProfile {
    pub d: usize,
    pub points: Vec<VariancePoint>,
    /// Slope `b` of `Var ≈ a + b s`, clamped at 0.
    pub slope: f64,
    pub intercept: f64,
    /// Slope `b` of `Var ≈ a + b ln s`.
    pub log_slope: f64,
    /// Relative residual sums of squares of the two fits.
    pub linear_rss: f64,
    pub log_rss: f64,
    pub classification: Classification,
}

/// Weighted least squares for `y ≈ a + b x`; returns `(a, b, rss)` with the
/// residuals measured in the same weights.
fn fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - a - b * x).powi(2))
        .sum();
    (a, b, rss)
}

/// Growth of `Var(ζ_1 + … + ζ_s)` over dyadic `s`, estimated from
/// non-overlapping blocks, with linear and logarithmic fits. A model is chosen
/// when its relative residual is at most half the other's.
pub fn variance_profile(trace: &Trace, d: usize) -> Result<VarianceProfile> {
    let bits = trace.usable();
    if bits.len() < VARIANCE_MIN_LEN {
        return Err(Error::Domain(format!(
            "{} usable observations; variance profiling needs at least {VARIANCE_MIN_LEN}",
            bits.len()
        )));
    }
    let mode = RepMode::Plain { d };
    mode.validate()?;
    let zeta: Vec<u32> = mode.indicators(bits).map(u32::from).collect();
    let mut prefix = Vec::with_capacity(zeta.len() + 1);
    prefix.push(0u64);
    for &z in &zeta {
        prefix.push(prefix.last().unwrap() + u64::from(z));
    }

    let mut points = Vec::new();
    let mut s = 1;
    while zeta.len() / s >= MIN_BLOCKS {
        let blocks = zeta.len() / s;
        let sums: Vec<f64> = (0..blocks)
            .map(|b| (prefix[(b + 1) * s] - prefix[b * s]) as f64)
            .collect();
        let mean = sums.iter().sum::<f64>() / blocks as f64;
        let variance = sums.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (blocks - 1) as f64;
        points.push(VariancePoint {
            s,
            blocks,
            variance,
            per_step: variance / s as f64,
        });
        s *= 2;
    }

    let y: Vec<f64> = points.iter().map(|p| p.variance).collect();
    let floor = y.iter().copied().fold(0.0, f64::max) * 1e-12 + f64::MIN_POSITIVE;
    let w: Vec<f64> = y.iter().map(|v| 1.0 / v.max(floor).powi(2)).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.s as f64).collect();
    let xl: Vec<f64> = xs.iter().map(|s| s.ln()).collect();
    let (intercept, slope, linear_rss) = fit(&xs, &y, &w);
    let (_, log_slope, log_rss) = fit(&xl, &y, &w);

    let classification = if y.iter().all(|&v| v == 0.0) {
        Classification::Inconclusive
    } else if linear_rss <= 0.5 * log_rss {
        Classification::Linear
    } else if log_rss <= 0.5 * linear_rss {
        Classification::Logarithmic
    } else {
        Classification::Inconclusive
    };
    Ok(VarianceProfile {
        d,
        points,
        slope: slope.max(0.0),
        intercept,
        log_slope,
        linear_rss,
        log_rss,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fits() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 0.5 * v).collect();
        let (a, b, rss) = fit(&x, &y, &[1.0; 4]);
        assert!((a - 3.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12 && rss < 1e-20);
    }

    #[test]
    fn short_trace_rejected() {
        let t = Trace::from_bits(vec![0; 1000], 0.5, 0).unwrap();
        assert!(matches!(variance_profile(&t, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_trace_is_inconclusive() {
        let t = Trace::from_bits(vec![1; VARIANCE_MIN_LEN + 10], 0.5, 0).unwrap();
        let v = variance_profile(&t, 2).unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
        assert_eq!(v.slope, 0.0);
    }
}
