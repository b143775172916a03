use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_epsilon, Error, Result};
use crate::genealogy::Estimate;
use crate::rng::{mix, stream_rng};

/// Lockstep steps simulated before a surviving pair is counted as not meeting.
pub const LATTICE_STEP_CAP: usize = 1 << 16;

const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeP2 {
    pub dim: usize,
    pub epsilon: f64,
    pub p2: Estimate,
    /// Walkers started at the origin and `2 e_1`.
    pub mu1: Estimate,
    /// Walkers started at the origin and `e_1 + e_2` (`d >= 2`).
    pub mu2: Option<Estimate>,
}

/// Fraction of replicas in which terminable lockstep walkers from the origin
/// and `start` meet. Each step both survive with probability `(1-ε)^2`.
fn meet_fraction(dim: usize, epsilon: f64, start: &[i64], replicas: u64, seed: u64) -> Estimate {
    let both = Bernoulli::new((1.0 - epsilon).powi(2)).expect("probability in range");
    let chunks = replicas.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hits = 0;
            let mut a = vec![0i64; dim];
            let mut b = vec![0i64; dim];
            for r in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
                let mut rng = stream_rng(seed, r);
                a.iter_mut().for_each(|x| *x = 0);
                b.copy_from_slice(start);
                for _ in 0..LATTICE_STEP_CAP {
                    if !both.sample(&mut rng) {
                        break;
                    }
                    let i = rng.random_range(0..2 * dim);
                    a[i / 2] += if i % 2 == 0 { 1 } else { -1 };
                    let j = rng.random_range(0..2 * dim);
                    b[j / 2] += if j % 2 == 0 { 1 } else { -1 };
                    if a == b {
                        hits += 1;
                        break;
                    }
                }
            }
            hits
        })
        .sum();
    let cap_bound = (1.0 - epsilon).powi(2 * LATTICE_STEP_CAP as i32);
    Estimate::from_count(hits, replicas, cap_bound)
}

/// `p_2` on `Z^d`: the later path takes two solo steps, landing back at the
/// origin (`2d` of `(2d)^2` step pairs), at `±2e_i` (`2d` pairs) or at
/// `±e_i ± e_j` with `i != j` (`4d(d-1)` pairs); afterwards both paths walk in
/// lockstep.
pub fn lattice_p2(dim: usize, epsilon: f64, replicas: u64, seed: u64) -> Result<LatticeP2> {
    check_epsilon(epsilon)?;
    if dim < 1 {
        return Err(Error::param("d", "lattice dimension must be at least 1"));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    let mut r1 = vec![0i64; dim];
    r1[0] = 2;
    let mu1 = meet_fraction(dim, epsilon, &r1, replicas, mix(seed, 1));
    let mu2 = (dim >= 2).then(|| {
        let mut r2 = vec![0i64; dim];
        r2[0] = 1;
        r2[1] = 1;
        meet_fraction(dim, epsilon, &r2, replicas, mix(seed, 2))
    });

    let s2 = (1.0 - epsilon).powi(2);
    let deg = 2.0 * dim as f64;
    let w1 = s2 * deg / (deg * deg);
    let w2 = s2 * 4.0 * (dim * (dim - 1)) as f64 / (deg * deg);
    let (v2, e2) = mu2.map_or((0.0, 0.0), |m| (m.value, m.stderr));
    let p2 = Estimate {
        value: s2 / deg + w1 * mu1.value + w2 * v2,
        stderr: ((w1 * mu1.stderr).powi(2) + (w2 * e2).powi(2)).sqrt(),
        replicas,
        truncation_bound: w1 * mu1.truncation_bound + w2 * mu2.map_or(0.0, |m| m.truncation_bound),
    };
    Ok(LatticeP2 {
        dim,
        epsilon,
        p2,
        mu1,
        mu2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_one_is_zero() {
        for d in 1..4 {
            let l = lattice_p2(d, 1.0, 1000, 0).unwrap();
            assert_eq!(l.p2.value, 0.0);
        }
    }

    #[test]
    fn line_has_no_second_class() {
        let l = lattice_p2(1, 0.3, 10_000, 2).unwrap();
        assert!(l.mu2.is_none());
        assert!(l.p2.value > 0.49 / 2.0);
    }

    #[test]
    fn reproducible() {
        assert_eq!(
            lattice_p2(2, 0.2, 5000, 9).unwrap(),
            lattice_p2(2, 0.2, 5000, 9).unwrap()
        );
    }
}
