use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectator::Averager;
use super::{check_polarizations, stationary_polarization, Bath, SpectatorAverage, SpinEnsemble};
use crate::error::{invalid, DnpError, Result};
use crate::liouville::NvModel;
use crate::physmodel::{per_s_to_per_us, NucleusSite};
use crate::rates::RatePair;

// below this many sites the per-iteration work is too small for rayon
const PARALLEL_MIN_SITES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Weight of the new iterate, p ← (1 − α)p + αF(p).
    pub damping: f64,
    pub max_iterations: usize,
    /// Convergence on max_i |F(p)_i − p_i|.
    pub tolerance: f64,
    pub spectators: SpectatorAverage,
    /// Halve the damping when the residual stalls.
    pub adaptive: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 10_000,
            tolerance: 1e-6,
            spectators: SpectatorAverage::Auto,
            adaptive: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub b_mt: f64,
    pub ensemble: SpinEnsemble,
    /// Spectator-averaged rates at the returned polarizations, 1/μs.
    pub rates: Vec<RatePair>,
    pub iterations: usize,
    pub residual: f64,
}

impl MeanFieldSolution {
    pub fn mean_polarization(&self) -> f64 {
        self.ensemble.mean_polarization()
    }
}

/// One Jacobi sweep: every W̄_i evaluated at the same iterate.
fn sweep(bath: &Bath, avg: &Averager, p: &[f64]) -> Result<Vec<RatePair>> {
    let n = bath.len();
    if n >= PARALLEL_MIN_SITES {
        (0..n)
            .into_par_iter()
            .map(|i| avg.rates(bath, p, i))
            .collect()
    } else {
        (0..n).map(|i| avg.rates(bath, p, i)).collect()
    }
}

/// Solves p_i = (W̄₊ − W̄₋)/(W̄₊ + W̄₋ + 2γ_dep) for every site by damped
/// Jacobi iteration; `gamma_dep` in 1/s.
///
/// Convergence is tested before each update, so restarting from a converged
/// point returns it unchanged.
pub fn meanfield_fixed_point(
    sites: &[NucleusSite],
    model: &NvModel,
    gamma_dep: f64,
    p_init: &[f64],
    opts: &FixedPointOptions,
) -> Result<MeanFieldSolution> {
    if sites.is_empty() {
        return Err(DnpError::EmptyEnsemble);
    }
    check_polarizations(sites, p_init)?;
    if !(gamma_dep >= 0.0 && gamma_dep.is_finite()) {
        return Err(invalid(
            "gamma_dep",
            format!("must be finite and ≥ 0, got {gamma_dep}"),
        ));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(invalid(
            "damping",
            format!("must lie in (0, 1], got {}", opts.damping),
        ));
    }
    let g = per_s_to_per_us(gamma_dep);
    let bath = Bath::new(model, sites)?;
    let avg = Averager::new(opts.spectators, sites.len())?;

    let mut p = p_init.to_vec();
    let mut alpha = opts.damping;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut residual = f64::INFINITY;
    for iter in 0..=opts.max_iterations {
        let rates = sweep(&bath, &avg, &p)?;
        let target: Vec<f64> = rates
            .iter()
            .map(|r| stationary_polarization(r.w_plus, r.w_minus, g))
            .collect();
        residual = target
            .iter()
            .zip(&p)
            .map(|(t, x)| (t - x).abs())
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            return Err(DnpError::NonFinite("meanfield_fixed_point"));
        }
        if residual < opts.tolerance {
            return Ok(MeanFieldSolution {
                b_mt: model.field.millitesla(),
                ensemble: SpinEnsemble {
                    sites: sites.to_vec(),
                    polarizations: p,
                },
                rates,
                iterations: iter,
                residual,
            });
        }
        if iter == opts.max_iterations {
            break;
        }
        if opts.adaptive {
            if residual < 0.999 * best {
                best = residual;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= 50 && alpha > 1.0 / 256.0 {
                    alpha /= 2.0;
                    stalled = 0;
                    best = residual;
                }
            }
        }
        for (x, t) in p.iter_mut().zip(&target) {
            *x = ((1.0 - alpha) * *x + alpha * t).clamp(-1.0, 1.0);
        }
    }
    Err(DnpError::NoConvergence {
        iterations: opts.max_iterations,
        residual,
        last_iterate: p,
    })
}

/// Fixed points along `fields` (mT), each warm-started from the previous one.
pub fn meanfield_sweep(
    sites: &[NucleusSite],
    model: &NvModel,
    gamma_dep: f64,
    fields: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<MeanFieldSolution>> {
    let mut p = vec![0.0; sites.len()];
    let mut out = Vec::with_capacity(fields.len());
    for &b in fields {
        let sol = meanfield_fixed_point(sites, &model.with_field(b)?, gamma_dep, &p, opts)?;
        p.clone_from(&sol.ensemble.polarizations);
        out.push(sol);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::LevelScheme;
    use crate::multispin::exact_joint_steady;
    use crate::multispin::test_util::random_sites;
    use crate::physmodel::HfiTensor;

    #[test]
    fn zero_tensors_give_zero_polarization() {
        let mut sites = random_sites(4, 3.0, 8.0, 1);
        for s in &mut sites {
            s.ground = HfiTensor::zero();
        }
        let model = NvModel::new(LevelScheme::Five, 102.4, 0.2).unwrap();
        let sol = meanfield_fixed_point(
            &sites,
            &model,
            1.0,
            &[0.5, -0.2, 0.9, 0.0],
            &FixedPointOptions::default(),
        )
        .unwrap();
        assert!(sol.ensemble.polarizations.iter().all(|p| p.abs() < 1e-5));
    }

    #[test]
    fn restart_is_idempotent() {
        let sites = random_sites(30, 3.0, 15.0, 2);
        let model = NvModel::new(LevelScheme::Five, 102.45, 0.2).unwrap();
        let opts = FixedPointOptions::default();
        let a = meanfield_fixed_point(&sites, &model, 1.0, &vec![0.0; 30], &opts).unwrap();
        let b =
            meanfield_fixed_point(&sites, &model, 1.0, &a.ensemble.polarizations, &opts).unwrap();
        assert_eq!(b.iterations, 0);
        for (x, y) in a
            .ensemble
            .polarizations
            .iter()
            .zip(&b.ensemble.polarizations)
        {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn overhauser_mean_identity() {
        let sites = random_sites(12, 3.0, 10.0, 3);
        let model = NvModel::new(LevelScheme::Five, 102.37, 0.2).unwrap();
        let sol = meanfield_fixed_point(
            &sites,
            &model,
            0.0,
            &[0.0; 12],
            &FixedPointOptions::default(),
        )
        .unwrap();
        let direct: f64 = sites
            .iter()
            .zip(&sol.ensemble.polarizations)
            .map(|(s, p)| s.ground.a_zz() * p / 2.0)
            .sum();
        assert_eq!(sol.ensemble.overhauser().mean, direct);
    }

    #[test]
    fn single_site_matches_exact() {
        let sites = random_sites(1, 3.0, 6.0, 5);
        let model = NvModel::new(LevelScheme::Five, 102.4, 0.2).unwrap();
        let mf = meanfield_fixed_point(&sites, &model, 1.0, &[0.0], &FixedPointOptions::default())
            .unwrap();
        let ex = exact_joint_steady(&sites, &model, 1.0).unwrap();
        assert!((mf.ensemble.polarizations[0] - ex.polarizations[0]).abs() < 1e-5);
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let sites = random_sites(5, 3.0, 8.0, 6);
        let model = NvModel::new(LevelScheme::Five, 102.4, 0.2).unwrap();
        let opts = FixedPointOptions {
            max_iterations: 1,
            tolerance: 1e-15,
            ..Default::default()
        };
        match meanfield_fixed_point(&sites, &model, 0.0, &[0.0; 5], &opts) {
            Err(DnpError::NoConvergence { last_iterate, .. }) => assert_eq!(last_iterate.len(), 5),
            other => panic!("{other:?}"),
        }
    }
}
