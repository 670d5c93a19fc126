use serde::{Deserialize, Serialize};

use super::fixed_point::FixedPointOptions;
use super::spectator::Averager;
use super::{check_polarizations, Bath};
use crate::error::{invalid, DnpError, Result};
use crate::liouville::NvModel;
use crate::physmodel::{per_s_to_per_us, NucleusSite};
use crate::rates::RatePair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Keep the rates at their initial values instead of following the bath.
    pub frozen_spectators: bool,
    pub spectators: super::SpectatorAverage,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            frozen_spectators: false,
            spectators: FixedPointOptions::default().spectators,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSample {
    pub t_us: f64,
    pub polarizations: Vec<f64>,
}

impl EnsembleSample {
    pub fn mean_polarization(&self) -> f64 {
        self.polarizations.iter().sum::<f64>() / self.polarizations.len() as f64
    }
}

struct Rhs {
    bath: Bath,
    avg: Averager,
    g: f64,
    frozen: Option<Vec<RatePair>>,
}

impl Rhs {
    fn eval(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        let owned;
        let rates = match &self.frozen {
            Some(r) => r,
            None => {
                owned = (0..p.len())
                    .map(|i| self.avg.rates(&self.bath, p, i))
                    .collect::<Result<Vec<_>>>()?;
                &owned
            }
        };
        for ((o, r), x) in out.iter_mut().zip(rates).zip(p) {
            *o = r.w_plus - r.w_minus - (r.w_plus + r.w_minus + 2.0 * self.g) * x;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4); the autonomous right-hand side needs no c_i nodes
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the mean-field equations ṗ_i = W̄₊ − W̄₋ − (W̄₊ + W̄₋ + 2γ_dep)p_i
/// with adaptive Dormand–Prince steps; `t_grid` in μs, ascending from 0 or later.
pub fn meanfield_dynamics(
    sites: &[NucleusSite],
    model: &NvModel,
    gamma_dep: f64,
    p_init: &[f64],
    t_grid: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<EnsembleSample>> {
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
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(invalid(
            "t_grid",
            "times must be non-negative and ascending",
        ));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(invalid("tolerance", "rtol and atol must be positive"));
    }
    let bath = Bath::new(model, sites)?;
    let avg = Averager::new(opts.spectators, sites.len())?;
    let frozen = if opts.frozen_spectators {
        Some(
            (0..sites.len())
                .map(|i| avg.rates(&bath, p_init, i))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let rhs = Rhs {
        bath,
        avg,
        g: per_s_to_per_us(gamma_dep),
        frozen,
    };

    let n = sites.len();
    let mut p = p_init.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut h: Option<f64> = None;
    rhs.eval(&p, &mut k[0])?;

    for &target in t_grid {
        while t < target {
            // initial step from the rate scale
            let mut step = h.unwrap_or_else(|| {
                let scale = k[0].iter().map(|x| x.abs()).fold(0.0, f64::max);
                if scale > 0.0 {
                    0.01 / scale
                } else {
                    target - t
                }
            });
            step = step.min(target - t);
            loop {
                if step <= 1e-14 * t.abs().max(1.0) {
                    return Err(DnpError::StepUnderflow { t });
                }
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = p[i];
                        for (j, a) in A[s].iter().enumerate().take(s) {
                            acc += step * a * k[j][i];
                        }
                        stage[i] = acc;
                    }
                    rhs.eval(&stage, &mut k[s])?;
                }
                // stage holds the fifth-order solution (FSAL row equals B5)
                let mut err = 0.0f64;
                for i in 0..n {
                    let e: f64 = (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>() * step;
                    let sc = opts.atol + opts.rtol * p[i].abs().max(stage[i].abs());
                    err = err.max((e / sc).abs());
                }
                if !err.is_finite() {
                    return Err(DnpError::NonFinite("meanfield_dynamics"));
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 {
                    t += step;
                    if (target - t).abs() <= 1e-12 * target.abs().max(1.0) {
                        t = target;
                    }
                    p.copy_from_slice(&stage);
                    let last = k[6].clone();
                    k[0] = last;
                    h = Some(step * factor);
                    break;
                }
                step *= factor;
            }
        }
        out.push(EnsembleSample {
            t_us: target,
            polarizations: p.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::LevelScheme;
    use crate::multispin::test_util::random_sites;
    use crate::multispin::{conditional_rates, meanfield_fixed_point};
    use crate::singlespin::polarization_trajectory;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
    }

    #[test]
    fn single_site_is_exponential() {
        let sites = random_sites(1, 3.0, 6.0, 7);
        let model = NvModel::new(LevelScheme::Five, 102.37, 0.2).unwrap();
        let pair = conditional_rates(&sites[0], 0.0, &model).unwrap();
        let w = pair.total();
        let t = grid(5.0 / w, 40);
        let traj = meanfield_dynamics(&sites, &model, 0.0, &[0.0], &t, &DynamicsOptions::default())
            .unwrap();
        let expect = polarization_trajectory(0.0, pair.polarization(), w, &t);
        for (s, e) in traj.iter().zip(&expect) {
            assert!(
                (s.polarizations[0] - e).abs() < 1e-7,
                "{} {}",
                s.polarizations[0],
                e
            );
        }
    }

    #[test]
    fn frozen_spectators_decouple() {
        let sites = random_sites(6, 3.0, 8.0, 8);
        let model = NvModel::new(LevelScheme::Five, 102.42, 0.2).unwrap();
        let p0 = vec![0.1, -0.3, 0.0, 0.5, 0.2, -0.1];
        let opts = DynamicsOptions {
            frozen_spectators: true,
            ..Default::default()
        };
        let bath = Bath::new(&model, &sites).unwrap();
        let avg = Averager::new(opts.spectators, 6).unwrap();
        let t = grid(2000.0, 20);
        let traj = meanfield_dynamics(&sites, &model, 1.0, &p0, &t, &opts).unwrap();
        let g = per_s_to_per_us(1.0);
        for i in 0..6 {
            let r = avg.rates(&bath, &p0, i).unwrap();
            let w = r.total() + 2.0 * g;
            let pss = (r.w_plus - r.w_minus) / w;
            let expect = polarization_trajectory(p0[i], pss, w, &t);
            for (s, e) in traj.iter().zip(&expect) {
                assert!((s.polarizations[i] - e).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn long_time_reaches_fixed_point() {
        let sites = random_sites(8, 3.0, 9.0, 9);
        let model = NvModel::new(LevelScheme::Five, 102.44, 0.2).unwrap();
        let fp = meanfield_fixed_point(
            &sites,
            &model,
            1.0,
            &[0.0; 8],
            &FixedPointOptions::default(),
        )
        .unwrap();
        let slowest = fp
            .rates
            .iter()
            .map(|r| r.total())
            .fold(f64::INFINITY, f64::min);
        let t_end = 40.0 / slowest;
        let traj = meanfield_dynamics(
            &sites,
            &model,
            1.0,
            &[0.0; 8],
            &[0.0, t_end],
            &DynamicsOptions::default(),
        )
        .unwrap();
        for (a, b) in traj[1].polarizations.iter().zip(&fp.ensemble.polarizations) {
            assert!((a - b).abs() < 1e-4, "{a} {b}");
        }
        assert_eq!(traj[0].polarizations, vec![0.0; 8]);
    }
}
