//! Repetition statistics over a trace and their diagnostics.
//!
//! Every statistic is a mean of coincidence indicators `I(X_i = X_{i+d})` (or
//! a product of them) over the post-burn-in part of the trace. Standard errors
//! come from batch means.

mod variance;

use serde::Serialize;

pub use variance::{variance_profile, Classification, VarianceProfile, VARIANCE_MIN_LEN};

use crate::error::{check_epsilon, Error, Result};
use crate::genealogy::Estimate;
use crate::sim::Trace;

/// Default number of batches for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RepMode {
    Plain { d: usize },
    Thinned { d: usize, kappa: usize },
    Quadruple { d1: usize, d2: usize, d3: usize },
}

impl RepMode {
    fn validate(&self) -> Result<()> {
        match *self {
            RepMode::Plain { d } | RepMode::Thinned { d, .. } if d == 0 => {
                Err(Error::param("d", "must be positive"))
            }
            RepMode::Thinned { kappa: 0, .. } => Err(Error::param("kappa", "must be positive")),
            RepMode::Quadruple { d1, d2, d3 } if !(0 < d1 && d1 < d2 && d2 < d3) => {
                Err(Error::param(
                    "d1,d2,d3",
                    format!("need 0 < d1 < d2 < d3, got ({d1}, {d2}, {d3})"),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Largest lag the mode looks ahead.
    fn span(&self) -> usize {
        match *self {
            RepMode::Plain { d } | RepMode::Thinned { d, .. } => d,
            RepMode::Quadruple { d3, .. } => d3,
        }
    }

    fn step(&self) -> usize {
        match *self {
            RepMode::Thinned { kappa, .. } => kappa,
            _ => 1,
        }
    }

    /// Number of indicator terms available in `len` usable observations.
    pub fn terms(&self, len: usize) -> usize {
        let span = self.span();
        if len <= span {
            0
        } else {
            (len - 1 - span) / self.step() + 1
        }
    }

    fn indicator(&self, bits: &[u8], i: usize) -> bool {
        match *self {
            RepMode::Plain { d } | RepMode::Thinned { d, .. } => bits[i] == bits[i + d],
            RepMode::Quadruple { d1, d2, d3 } => {
                let b = bits[i];
                b == bits[i + d1] && b == bits[i + d2] && b == bits[i + d3]
            }
        }
    }

    /// Indicator values in index order.
    pub fn indicators<'a>(&'a self, bits: &'a [u8]) -> impl Iterator<Item = bool> + 'a {
        let step = self.step();
        (0..self.terms(bits.len())).map(move |j| self.indicator(bits, j * step))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepStatResult {
    pub mode: RepMode,
    pub value: f64,
    pub terms: usize,
    pub batch_stderr: f64,
    pub burn_in_used: usize,
}

/// Mean and batch-means standard error of a 0/1 stream of known length.
/// Uses `min(batches, terms)` equal batches; trailing terms that do not fill
/// a batch count toward the mean only.
pub(crate) fn batch_mean(
    values: impl Iterator<Item = bool>,
    terms: usize,
    batches: usize,
) -> (f64, f64) {
    let b = batches.min(terms).max(1);
    let size = terms / b;
    let mut total = 0u64;
    let mut batch_sums = vec![0u64; b];
    for (i, v) in values.enumerate() {
        if v {
            total += 1;
            let k = i / size.max(1);
            if k < b {
                batch_sums[k] += 1;
            }
        }
    }
    let mean = total as f64 / terms as f64;
    if b < 2 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = batch_sums.iter().map(|&s| s as f64 / size as f64).collect();
    let mu = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

pub fn repetition_stat(trace: &Trace, mode: RepMode) -> Result<RepStatResult> {
    repetition_stat_batches(trace, mode, DEFAULT_BATCHES)
}

pub fn repetition_stat_batches(
    trace: &Trace,
    mode: RepMode,
    batches: usize,
) -> Result<RepStatResult> {
    mode.validate()?;
    if batches == 0 {
        return Err(Error::param("batches", "must be positive"));
    }
    let bits = trace.usable();
    let terms = mode.terms(bits.len());
    if terms == 0 {
        return Err(Error::Domain(format!(
            "{} usable observations after burn-in {}; the statistic needs at least {}",
            bits.len(),
            trace.burn_in(),
            mode.span() + 1
        )));
    }
    let (value, batch_stderr) = batch_mean(mode.indicators(bits), terms, batches);
    Ok(RepStatResult {
        mode,
        value,
        terms,
        batch_stderr,
        burn_in_used: trace.burn_in(),
    })
}

/// Plug-in estimate `2 S^(d) - 1` of `p_d`, clamped to `[0, 1]`. The
/// truncation bound holds `(1-ε)^burn_in / ε`, the bias allowance for the
/// discarded prefix.
pub fn pd_hat(trace: &Trace, d: usize) -> Result<Estimate> {
    let s = repetition_stat(trace, RepMode::Plain { d })?;
    let eps = trace.epsilon();
    Ok(Estimate {
        value: (2.0 * s.value - 1.0).clamp(0.0, 1.0),
        stderr: 2.0 * s.batch_stderr,
        replicas: s.terms as u64,
        truncation_bound: (1.0 - eps).powi(s.burn_in_used.min(i32::MAX as usize) as i32) / eps,
    })
}

/// Upper limit on the thinning interval search.
pub const MAX_KAPPA: usize = 1 << 20;

/// Smallest `κ > d` with `4(1-ε)^(κ-d) < (1-(1-ε)^κ)(1+p)(1-(1+p)/2)`.
pub fn choose_kappa(epsilon: f64, d: usize, p_hat: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::param("p_hat", format!("{p_hat} is not in [0, 1]")));
    }
    if p_hat == 1.0 {
        return Err(Error::Domain(
            "p_hat = 1 makes the right-hand side vanish; no thinning interval exists".into(),
        ));
    }
    let s = 1.0 - epsilon;
    let factor = (1.0 + p_hat) * (1.0 - (1.0 + p_hat) / 2.0);
    (d + 1..=MAX_KAPPA)
        .find(|&k| kappa_holds(s, d, k, factor))
        .ok_or_else(|| Error::Numeric {
            message: format!("no thinning interval up to {MAX_KAPPA}"),
            residual: f64::NAN,
        })
}

fn kappa_holds(s: f64, d: usize, kappa: usize, factor: f64) -> bool {
    4.0 * s.powi((kappa - d) as i32) < (1.0 - s.powi(kappa as i32)) * factor
}

/// Whether `kappa` satisfies the thinning inequality.
pub fn kappa_satisfies(epsilon: f64, d: usize, kappa: usize, p_hat: f64) -> bool {
    kappa > d
        && kappa_holds(
            1.0 - epsilon,
            d,
            kappa,
            (1.0 + p_hat) * (1.0 - (1.0 + p_hat) / 2.0),
        )
}

/// Standardized moments of thinned batch means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub d: usize,
    pub kappa: usize,
    pub batches: usize,
    pub batch_size: usize,
    /// Mean and population SD of the batch means before standardization.
    pub batch_mean: f64,
    pub batch_sd: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub variance_slope: Option<f64>,
    pub classification: Option<Classification>,
}

/// Minimum batches for [`clt_report`].
pub const CLT_MIN_BATCHES: usize = 100;

/// Splits the `κ`-thinned stream into `batches` equal batches, standardizes
/// the batch means by their own mean and population SD, and reports moments
/// 1 to 4. Variance growth fields are filled when the trace is long enough.
pub fn clt_report(trace: &Trace, d: usize, kappa: usize, batches: usize) -> Result<CltReport> {
    if batches < CLT_MIN_BATCHES {
        return Err(Error::param(
            "batches",
            format!("need at least {CLT_MIN_BATCHES}, got {batches}"),
        ));
    }
    let mode = RepMode::Thinned { d, kappa };
    mode.validate()?;
    let bits = trace.usable();
    let terms = mode.terms(bits.len());
    let size = terms / batches;
    if size == 0 {
        return Err(Error::Domain(format!(
            "{terms} thinned terms cannot fill {batches} batches (need {} usable observations)",
            (batches - 1) * kappa + d + 1
        )));
    }
    let mut sums = vec![0u64; batches];
    for (i, v) in mode.indicators(bits).take(size * batches).enumerate() {
        if v {
            sums[i / size] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().map(|&s| s as f64 / size as f64).collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / batches as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::Domain(
            "batch means are constant; moments are undefined".into(),
        ));
    }
    let z: Vec<f64> = means.iter().map(|m| (m - mu) / sd).collect();
    let moment = |k: i32| z.iter().map(|v| v.powi(k)).sum::<f64>() / batches as f64;
    let (variance_slope, classification) = if trace.usable().len() >= VARIANCE_MIN_LEN {
        let v = variance_profile(trace, d)?;
        (Some(v.slope), Some(v.classification))
    } else {
        (None, None)
    };
    Ok(CltReport {
        d,
        kappa,
        batches,
        batch_size: size,
        batch_mean: mu,
        batch_sd: sd,
        m1: moment(1),
        m2: moment(2),
        m3: moment(3),
        m4: moment(4),
        variance_slope,
        classification,
    })
}

/// Compares the triple coincidence frequency with the value implied by the
/// three pairwise estimates from the same trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TripleIdentity {
    pub d1: usize,
    pub d2: usize,
    pub frequency: f64,
    pub predicted: f64,
    pub residual: f64,
    /// Batch-means standard error of `frequency - predicted`.
    pub stderr: f64,
}

/// `|freq(X_i = X_{i+d1} = X_{i+d2}) - (1 + p̂_{d1} + p̂_{d2} + p̂_{d2-d1}) / 4|`.
pub fn triple_identity_residual(trace: &Trace, d1: usize, d2: usize) -> Result<TripleIdentity> {
    if !(0 < d1 && d1 < d2) {
        return Err(Error::param(
            "d1,d2",
            format!("need 0 < d1 < d2, got ({d1}, {d2})"),
        ));
    }
    let bits = trace.usable();
    if bits.len() <= d2 {
        return Err(Error::Domain(format!(
            "{} usable observations; the triple statistic needs at least {}",
            bits.len(),
            d2 + 1
        )));
    }
    let terms = bits.len() - d2;
    let triple = (0..terms).map(|i| bits[i] == bits[i + d1] && bits[i] == bits[i + d2]);
    let (frequency, se_triple) = batch_mean(triple, terms, DEFAULT_BATCHES);
    let p1 = pd_hat(trace, d1)?;
    let p2 = pd_hat(trace, d2)?;
    let p3 = pd_hat(trace, d2 - d1)?;
    let predicted = (1.0 + p1.value + p2.value + p3.value) / 4.0;
    let stderr = (se_triple.powi(2)
        + (p1.stderr.powi(2) + p2.stderr.powi(2) + p3.stderr.powi(2)) / 16.0)
        .sqrt();
    Ok(TripleIdentity {
        d1,
        d2,
        frequency,
        predicted,
        residual: (frequency - predicted).abs(),
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(bits: &[u8]) -> Trace {
        Trace::from_bits(bits.to_vec(), 0.5, 0).unwrap()
    }

    #[test]
    fn plain_examples() {
        let t = trace(&[0, 0, 0, 0, 0]);
        assert_eq!(
            repetition_stat(&t, RepMode::Plain { d: 1 }).unwrap().value,
            1.0
        );
        let t = trace(&[0, 1, 0, 1, 0]);
        assert_eq!(
            repetition_stat(&t, RepMode::Plain { d: 1 }).unwrap().value,
            0.0
        );
        let r = repetition_stat(&t, RepMode::Plain { d: 2 }).unwrap();
        assert_eq!((r.value, r.terms), (1.0, 3));
    }

    #[test]
    fn quadruple_all_equal() {
        let t = trace(&[1; 20]);
        let r = repetition_stat(
            &t,
            RepMode::Quadruple {
                d1: 2,
                d2: 4,
                d3: 6,
            },
        )
        .unwrap();
        assert_eq!((r.value, r.terms), (1.0, 14));
    }

    #[test]
    fn thinned_indices() {
        // Indices 0, 3, 6 compared with 1, 4, 7.
        let t = trace(&[0, 0, 1, 1, 1, 0, 0, 1, 0]);
        let r = repetition_stat(&t, RepMode::Thinned { d: 1, kappa: 3 }).unwrap();
        assert_eq!(r.terms, 3);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_short_names_minimum() {
        let t = trace(&[0, 1]);
        let err = repetition_stat(&t, RepMode::Plain { d: 3 }).unwrap_err();
        assert!(err.to_string().contains("at least 4"), "{err}");
    }

    #[test]
    fn pd_hat_all_equal() {
        let t = trace(&[1; 100]);
        let p = pd_hat(&t, 2).unwrap();
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(choose_kappa(0.5, 2, 0.2).unwrap(), 6);
        assert_eq!(choose_kappa(1.0, 3, 0.4).unwrap(), 4);
        assert!(matches!(choose_kappa(0.5, 2, 1.0), Err(Error::Domain(_))));
        for (eps, d, p) in [(0.1, 1, 0.0), (0.3, 2, 0.18), (0.7, 5, 0.9)] {
            let k = choose_kappa(eps, d, p).unwrap();
            assert!(kappa_satisfies(eps, d, k, p));
            assert!(k == d + 1 || !kappa_satisfies(eps, d, k - 1, p));
        }
    }

    #[test]
    fn batch_mean_of_constant_stream() {
        let (m, se) = batch_mean(std::iter::repeat_n(true, 640), 640, 64);
        assert_eq!((m, se), (1.0, 0.0));
    }
}
