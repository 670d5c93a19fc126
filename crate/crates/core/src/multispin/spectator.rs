use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_polarizations, Bath};
use crate::error::{invalid, Result};
use crate::liouville::NvModel;
use crate::physmodel::NucleusSite;
use crate::rates::{RateMethod, RatePair};

/// How the rates of nucleus i are averaged over the other nuclei.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectatorAverage {
    /// Enumeration up to 12 nuclei, Gauss–Hermite with 21 nodes beyond.
    #[default]
    Auto,
    /// All 2^(N−1) spectator configurations.
    Enumerate,
    /// Gaussian Overhauser distribution integrated with `nodes` points.
    GaussHermite { nodes: usize },
    /// Random spectator configurations; the stream of site i is seeded by `seed + i`.
    MonteCarlo { samples: usize, seed: u64 },
}

const ENUMERATE_MAX: usize = 12;
const ENUMERATE_HARD_CAP: usize = 20;
const DEFAULT_NODES: usize = 21;

/// Nodes x_k and weights w_k of the physicists' Gauss–Hermite rule,
/// ∫ e^{−x²} f(x) dx ≈ Σ w_k f(x_k), from the Jacobi matrix eigenproblem.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (vec![], vec![]);
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Precomputed averaging rule for one bath.
#[derive(Debug, Clone)]
pub(crate) enum Averager {
    Enumerate,
    Gauss { nodes: Vec<f64>, weights: Vec<f64> },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Averager {
    pub(crate) fn new(mode: SpectatorAverage, n: usize) -> Result<Self> {
        let gauss = |nodes: usize| {
            if nodes == 0 {
                return Err(invalid("nodes", "Gauss–Hermite needs at least one node"));
            }
            let (nodes, weights) = gauss_hermite(nodes);
            Ok(Averager::Gauss { nodes, weights })
        };
        match mode {
            SpectatorAverage::Auto if n <= ENUMERATE_MAX => Ok(Averager::Enumerate),
            SpectatorAverage::Auto => gauss(DEFAULT_NODES),
            SpectatorAverage::Enumerate if n <= ENUMERATE_HARD_CAP => Ok(Averager::Enumerate),
            SpectatorAverage::Enumerate => Err(invalid(
                "spectators",
                format!("enumeration over {n} nuclei exceeds the cap of {ENUMERATE_HARD_CAP}"),
            )),
            SpectatorAverage::GaussHermite { nodes } => gauss(nodes),
            SpectatorAverage::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(invalid("samples", "Monte Carlo needs at least one sample"));
                }
                Ok(Averager::MonteCarlo { samples, seed })
            }
        }
    }

    /// W̄_{i,±} with spectators j ≠ i independent at polarizations `p`.
    pub(crate) fn rates(&self, bath: &Bath, p: &[f64], i: usize) -> Result<RatePair> {
        let spectators = (0..bath.len()).filter(|&j| j != i);
        let mut acc = Accum::default();
        match self {
            Averager::Enumerate => {
                // distribution of h built by successive convolution
                let mut dist = vec![(0.0, 1.0)];
                for j in spectators {
                    let half = bath.a_zz(j) / 2.0;
                    let (up, down) = ((1.0 + p[j]) / 2.0, (1.0 - p[j]) / 2.0);
                    let mut next = Vec::with_capacity(dist.len() * 2);
                    for &(h, w) in &dist {
                        if up > 0.0 {
                            next.push((h + half, w * up));
                        }
                        if down > 0.0 {
                            next.push((h - half, w * down));
                        }
                    }
                    dist = next;
                }
                for (h, w) in dist {
                    acc.add(&bath.pair(i, h)?, w);
                }
            }
            Averager::Gauss { nodes, weights } => {
                let (mut mean, mut var) = (0.0, 0.0);
                for j in spectators {
                    let a = bath.a_zz(j);
                    mean += a * p[j] / 2.0;
                    var += a * a * (1.0 - p[j] * p[j]) / 4.0;
                }
                if var <= 0.0 {
                    acc.add(&bath.pair(i, mean)?, 1.0);
                } else {
                    let scale = (2.0 * var).sqrt();
                    let norm = std::f64::consts::PI.sqrt();
                    for (x, w) in nodes.iter().zip(weights) {
                        acc.add(&bath.pair(i, mean + scale * x)?, w / norm);
                    }
                }
            }
            Averager::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let spect: Vec<usize> = spectators.collect();
                let w = 1.0 / *samples as f64;
                for _ in 0..*samples {
                    let h: f64 = spect
                        .iter()
                        .map(|&j| {
                            let up = rng.gen::<f64>() < (1.0 + p[j]) / 2.0;
                            bath.a_zz(j) * if up { 0.5 } else { -0.5 }
                        })
                        .sum();
                    acc.add(&bath.pair(i, h)?, w);
                }
            }
        }
        let base = bath.pair(i, 0.0)?;
        Ok(RatePair {
            w_plus: acc.w_plus,
            w_minus: acc.w_minus,
            method: RateMethod::GoldenRule,
            ..base
        })
    }
}

#[derive(Default)]
struct Accum {
    w_plus: f64,
    w_minus: f64,
}

impl Accum {
    fn add(&mut self, pair: &RatePair, weight: f64) {
        self.w_plus += weight * pair.w_plus;
        self.w_minus += weight * pair.w_minus;
    }
}

/// Rates of nucleus `i` averaged over the Overhauser field of the others.
///
/// The detuning fields of the returned pair refer to h = 0.
pub fn meanfield_rates(
    sites: &[NucleusSite],
    polarizations: &[f64],
    i: usize,
    model: &NvModel,
    mode: SpectatorAverage,
) -> Result<RatePair> {
    check_polarizations(sites, polarizations)?;
    if i >= sites.len() {
        return Err(invalid(
            "i",
            format!("site index {i} out of range for {} sites", sites.len()),
        ));
    }
    let bath = Bath::new(model, sites)?;
    Averager::new(mode, sites.len())?.rates(&bath, polarizations, i)
}
