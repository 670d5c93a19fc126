//! Many-nucleus DNP: exact rate equations over joint Zeeman configurations
//! for small ensembles and a factorized mean-field description for large ones.
//!
//! Only spin-1/2 nuclei are supported. A configuration is a bit pattern with
//! bit i set when nucleus i is in m = +1/2.

mod dynamics;
mod exact;
mod fixed_point;
mod report;
mod spectator;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DnpError, Result};
use crate::liouville::NvModel;
use crate::physmodel::{delta_n, NucleusSite};
use crate::rates::{rate_pair_spin_half, RatePair};

pub use dynamics::{meanfield_dynamics, DynamicsOptions, EnsembleSample};
pub use exact::{exact_joint_steady, ExactJointState, EXACT_MAX_SITES};
pub use fixed_point::{
    meanfield_fixed_point, meanfield_sweep, FixedPointOptions, MeanFieldSolution,
};
pub use report::{
    spatial_report, EnsembleSnapshot, RadiusBin, SitePolarization, SiteRecord, SpatialReport,
};
pub use spectator::{gauss_hermite, meanfield_rates, SpectatorAverage};

/// Nuclei with their polarizations p_i = 2⟨I_z,i⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsemble {
    pub sites: Vec<NucleusSite>,
    pub polarizations: Vec<f64>,
}

impl SpinEnsemble {
    pub fn new(sites: Vec<NucleusSite>, polarizations: Vec<f64>) -> Result<Self> {
        check_polarizations(&sites, &polarizations)?;
        Ok(Self {
            sites,
            polarizations,
        })
    }

    pub fn unpolarized(sites: Vec<NucleusSite>) -> Self {
        let n = sites.len();
        Self {
            sites,
            polarizations: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Mean polarization p̄.
    pub fn mean_polarization(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.polarizations.iter().sum::<f64>() / self.len() as f64
    }

    /// Mean and rms fluctuation of the Overhauser field for independent spins.
    pub fn overhauser(&self) -> OverhauserStats {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (s, p) in self.sites.iter().zip(&self.polarizations) {
            let a = s.ground.a_zz();
            mean += a * p / 2.0;
            var += a * a * (1.0 - p * p) / 4.0;
        }
        OverhauserStats {
            mean,
            rms: var.max(0.0).sqrt(),
        }
    }
}

/// Overhauser field statistics in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverhauserStats {
    pub mean: f64,
    pub rms: f64,
}

/// One joint Zeeman configuration and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    /// 2m_i = ±1 per nucleus.
    pub two_m: Vec<i8>,
    pub probability: f64,
}

impl JointConfig {
    pub(crate) fn from_bits(bits: usize, n: usize, probability: f64) -> Self {
        Self {
            two_m: (0..n)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
            probability,
        }
    }
}

/// h = Σ A_zz,i m_i in MHz.
pub fn overhauser_field(two_m: &[i8], sites: &[NucleusSite]) -> Result<f64> {
    if two_m.len() != sites.len() {
        return Err(DnpError::LengthMismatch {
            expected: sites.len(),
            got: two_m.len(),
        });
    }
    Ok(two_m
        .iter()
        .zip(sites)
        .map(|(m, s)| s.ground.a_zz() * *m as f64 / 2.0)
        .sum())
}

/// Monte Carlo estimate of the Overhauser statistics over configurations
/// drawn independently with P(m_i = +1/2) = (1 + p_i)/2.
pub fn sample_overhauser(
    sites: &[NucleusSite],
    polarizations: &[f64],
    samples: usize,
    seed: u64,
) -> Result<OverhauserStats> {
    check_polarizations(sites, polarizations)?;
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let h: f64 = sites
            .iter()
            .zip(polarizations)
            .map(|(s, p)| {
                let up = rng.gen::<f64>() < (1.0 + p) / 2.0;
                s.ground.a_zz() * if up { 0.5 } else { -0.5 }
            })
            .sum();
        values.push(h);
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(OverhauserStats {
        mean,
        rms: var.sqrt(),
    })
}

/// Rates of one nucleus when the other nuclei shift the detuning by `h` (MHz).
pub fn conditional_rates(site: &NucleusSite, h: f64, model: &NvModel) -> Result<RatePair> {
    let bath = Bath::new(model, std::slice::from_ref(site))?;
    bath.pair(0, h)
}

fn check_polarizations(sites: &[NucleusSite], polarizations: &[f64]) -> Result<()> {
    if sites.len() != polarizations.len() {
        return Err(DnpError::LengthMismatch {
            expected: sites.len(),
            got: polarizations.len(),
        });
    }
    if let Some(p) = polarizations.iter().find(|p| !(p.abs() <= 1.0)) {
        return Err(invalid(
            "polarizations",
            format!("|p| must not exceed 1, got {p}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Coupling {
    a_pp: f64,
    a_pm: f64,
    a_zz: f64,
    delta_n: f64,
}

/// Field-dependent scalars shared by every rate evaluation at one model.
#[derive(Debug, Clone)]
pub(crate) struct Bath {
    delta: f64,
    gamma: f64,
    p_g: f64,
    couplings: Vec<Coupling>,
}

impl Bath {
    pub(crate) fn new(model: &NvModel, sites: &[NucleusSite]) -> Result<Self> {
        if let Some(s) = sites.iter().find(|s| s.two_i() != 1) {
            return Err(invalid(
                "sites",
                format!("only spin-1/2 nuclei are supported, got 2I = {}", s.two_i()),
            ));
        }
        let gamma = model.flip_linewidth();
        if !(gamma > 0.0) {
            return Err(invalid("linewidth", "γ_φ + R must be positive"));
        }
        let couplings = sites
            .iter()
            .map(|s| Coupling {
                a_pp: s.ground.a_pp().norm(),
                a_pm: s.ground.a_pm().norm(),
                a_zz: s.ground.a_zz(),
                delta_n: delta_n(model.field, s.ground.a_zz(), s.gamma_n),
            })
            .collect();
        Ok(Self {
            delta: model.detuning(),
            gamma,
            p_g: model.ground_population(),
            couplings,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.couplings.len()
    }

    pub(crate) fn a_zz(&self, i: usize) -> f64 {
        self.couplings[i].a_zz
    }

    /// W_{i,±} with the detuning shifted to Δ − h.
    pub(crate) fn pair(&self, i: usize, h: f64) -> Result<RatePair> {
        let c = &self.couplings[i];
        rate_pair_spin_half(
            self.delta - h,
            c.delta_n,
            self.gamma,
            self.p_g,
            Complex64::new(c.a_pp, 0.0),
            Complex64::new(c.a_pm, 0.0),
        )
    }
}

/// Stationary p_i of a spin-1/2 with rates in 1/μs and γ_dep in 1/μs; zero
/// when every rate vanishes.
pub(crate) fn stationary_polarization(w_plus: f64, w_minus: f64, gamma_dep: f64) -> f64 {
    let total = w_plus + w_minus + 2.0 * gamma_dep;
    if total > 0.0 {
        (w_plus - w_minus) / total
    } else {
        0.0
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::physmodel::{shell_positions, NucleusSite, PhysConstants};

    /// `n` distinct lattice sites drawn from the shell [r_min, r_max].
    pub(crate) fn random_sites(n: usize, r_min: f64, r_max: f64, seed: u64) -> Vec<NucleusSite> {
        let k = PhysConstants::default();
        let mut shell = shell_positions(r_min, r_max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        shell.shuffle(&mut rng);
        shell
            .into_iter()
            .take(n)
            .map(|p| NucleusSite::dipolar(p, &k).unwrap())
            .collect()
    }
}
