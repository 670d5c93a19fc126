//! Single-nucleus DNP: rate-equation steady states and relaxation, the
//! broad-line dipolar limit, validity checks and exact Lindblad references.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DnpError, Result};
use crate::liouville::{evolve, joint_lindblad, nv_steady_state, steady_state, NvModel};
use crate::physmodel::{angular, per_s_to_per_us, xi, Direction, NucleusSite};
use crate::rates::{correlation_time, RatePair, ZeemanLadder};

/// Populations of the 2I + 1 Zeeman levels, ordered m = −I, …, +I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub two_i: u32,
    pub populations: Vec<f64>,
}

impl PolarizationState {
    /// ⟨I_z⟩/I; equals 2⟨I_z⟩ for spin 1/2.
    pub fn polarization(&self) -> f64 {
        let spin = self.two_i as f64 / 2.0;
        let iz: f64 = self
            .populations
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - spin) * p)
            .sum();
        iz / spin
    }

    pub fn unpolarized(two_i: u32) -> Self {
        let n = two_i as usize + 1;
        Self {
            two_i,
            populations: vec![1.0 / n as f64; n],
        }
    }
}

/// Adds ξ_m^± γ_dep to every flip rate; `gamma_dep` in 1/s.
pub fn augment_depolarization(ladder: &ZeemanLadder, gamma_dep: f64) -> Result<ZeemanLadder> {
    if !(gamma_dep >= 0.0 && gamma_dep.is_finite()) {
        return Err(invalid(
            "gamma_dep",
            format!("must be finite and ≥ 0, got {gamma_dep}"),
        ));
    }
    let g = per_s_to_per_us(gamma_dep);
    let two_i = ladder.two_i;
    let up = (0..two_i as usize)
        .map(|k| ladder.up[k] + xi(two_i, -(two_i as i32) + 2 * k as i32, Direction::Up) * g)
        .collect();
    let down = (0..two_i as usize)
        .map(|k| {
            ladder.down[k] + xi(two_i, -(two_i as i32) + 2 * k as i32 + 2, Direction::Down) * g
        })
        .collect();
    ZeemanLadder::new(two_i, up, down)
}

/// Stationary distribution of the birth-death chain after depolarization.
///
/// Detailed balance p_{m+1} W_{m←m+1} = p_m W_{m+1←m} holds within the single
/// closed class; states outside it are transient and carry no weight.
pub fn rate_equation_steady(ladder: &ZeemanLadder, gamma_dep: f64) -> Result<PolarizationState> {
    let chain = augment_depolarization(ladder, gamma_dep)?;
    let n = chain.two_i as usize + 1;
    if chain.up.iter().chain(&chain.down).all(|w| *w == 0.0) && n > 1 {
        return Err(DnpError::FrozenSpin);
    }
    // maximal runs of links that are open in both directions
    let mut classes = Vec::new();
    let mut start = 0;
    for k in 0..n {
        let linked = k + 1 < n && chain.up[k] > 0.0 && chain.down[k] > 0.0;
        if !linked {
            let leaks_down = start > 0 && chain.down[start - 1] > 0.0;
            let leaks_up = k + 1 < n && chain.up[k] > 0.0;
            if !leaks_down && !leaks_up {
                classes.push((start, k));
            }
            start = k + 1;
        }
    }
    if classes.len() != 1 {
        return Err(DnpError::NonUniqueStationary {
            classes: classes.len(),
        });
    }
    let (a, b) = classes[0];
    let mut logp = vec![f64::NEG_INFINITY; n];
    logp[a] = 0.0;
    for k in a..b {
        logp[k + 1] = logp[k] + chain.up[k].ln() - chain.down[k].ln();
    }
    let top = logp[a..=b]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut populations: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = populations.iter().sum();
    populations.iter_mut().for_each(|p| *p /= total);
    Ok(PolarizationState {
        two_i: chain.two_i,
        populations,
    })
}

/// Steady polarization, total rate and validity flags of one nucleus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnpResult {
    pub p_ss: f64,
    /// W₊ + W₋ + 2γ_dep in 1/μs.
    pub w: f64,
    pub trajectory: Option<Vec<(f64, f64)>>,
    pub markovian_valid: bool,
    /// 1/s.
    pub gamma_dep: f64,
}

impl DnpResult {
    /// Spin-1/2 result from a rate pair.
    pub fn from_pair(pair: &RatePair, gamma_dep: f64, model: &NvModel) -> Result<Self> {
        let ladder = ZeemanLadder::spin_half(pair.w_plus, pair.w_minus)?;
        let state = rate_equation_steady(&ladder, gamma_dep)?;
        let w = pair.total() + 2.0 * per_s_to_per_us(gamma_dep);
        Ok(Self {
            p_ss: state.polarization(),
            w,
            trajectory: None,
            markovian_valid: markovian_validity(pair.total(), model).valid,
            gamma_dep,
        })
    }

    /// Attaches p(t) = p_ss + (p0 − p_ss)e^{−Wt} on `t_grid` (μs).
    pub fn with_trajectory(mut self, p0: f64, t_grid: &[f64]) -> Self {
        let p = polarization_trajectory(p0, self.p_ss, self.w, t_grid);
        self.trajectory = Some(t_grid.iter().cloned().zip(p).collect());
        self
    }
}

/// p(t) = p_ss + (p0 − p_ss) e^{−Wt}.
pub fn polarization_trajectory(p0: f64, p_ss: f64, w: f64, t_grid: &[f64]) -> Vec<f64> {
    t_grid
        .iter()
        .map(|t| {
            let decay = (-w * t).exp();
            p0 * decay + p_ss * (1.0 - decay)
        })
        .collect()
}

/// Broad-line dipolar limit 2/(c_θ + 1/c_θ), c_θ = 3cos²θ − 2.
pub fn pss_dipolar(theta: f64) -> f64 {
    let c = crate::physmodel::c_theta(theta);
    // 2c/(c² + 1) is the same expression without the pole at c = 0
    2.0 * c / (c * c + 1.0)
}

/// A_dp² ≥ 10·4Γγ_dep, angular units; `a_dp` and `gamma` in MHz, `gamma_dep` in 1/s.
pub fn strong_hfi_check(a_dp: f64, gamma: f64, gamma_dep: f64) -> bool {
    let a = angular(a_dp);
    a * a >= 10.0 * 4.0 * angular(gamma) * per_s_to_per_us(gamma_dep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub valid: bool,
    /// W τ_c.
    pub ratio: f64,
}

/// The rate description holds when 1/W ≥ 10 τ_c; `w` in 1/μs.
pub fn markovian_validity(w: f64, model: &NvModel) -> MarkovCheck {
    if w == 0.0 {
        return MarkovCheck {
            valid: true,
            ratio: 0.0,
        };
    }
    match correlation_time(model) {
        Ok(tau) => {
            let ratio = w * tau;
            MarkovCheck {
                valid: ratio <= 0.1,
                ratio,
            }
        }
        Err(_) => MarkovCheck {
            valid: false,
            ratio: f64::INFINITY,
        },
    }
}

/// Steady polarization of each site from the exact joint Lindblad equation.
pub fn lindblad_polarization(
    model: &NvModel,
    sites: &[NucleusSite],
    include_excited_hfi: bool,
) -> Result<Vec<f64>> {
    let sys = joint_lindblad(model, sites, include_excited_hfi)?;
    let ss = steady_state(&sys.generator)?;
    Ok((0..sites.len()).map(|i| sys.polarization(&ss, i)).collect())
}

/// One sample of an exact joint trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LindbladSample {
    pub t_us: f64,
    pub nv_populations: Vec<f64>,
    pub polarizations: Vec<f64>,
}

/// Exact evolution from the pumped NV steady state with unpolarized nuclei.
pub fn lindblad_trajectory(
    model: &NvModel,
    sites: &[NucleusSite],
    include_excited_hfi: bool,
    t_grid: &[f64],
) -> Result<Vec<LindbladSample>> {
    let sys = joint_lindblad(model, sites, include_excited_hfi)?;
    let rho0 = sys.unpolarized_state(&nv_steady_state(model)?);
    let traj = evolve(&sys.generator, &rho0, t_grid)?;
    Ok(t_grid
        .iter()
        .zip(traj)
        .map(|(t, rho)| LindbladSample {
            t_us: *t,
            nv_populations: sys.nv_populations(&rho),
            polarizations: (0..sites.len())
                .map(|i| sys.polarization(&rho, i))
                .collect(),
        })
        .collect())
}

/// First time at which |p − p_final| has fallen to |p₀ − p_final|/e, linearly
/// interpolated; `None` if never reached on the grid.
pub fn relaxation_time(times: &[f64], values: &[f64], p_final: f64) -> Option<f64> {
    let first = *values.first()?;
    let threshold = (first - p_final).abs() / std::f64::consts::E;
    let gap = |v: f64| (v - p_final).abs() - threshold;
    for k in 1..values.len().min(times.len()) {
        let (g0, g1) = (gap(values[k - 1]), gap(values[k]));
        if g1 <= 0.0 {
            if g0 <= 0.0 {
                return Some(times[k - 1]);
            }
            return Some(times[k - 1] + (times[k] - times[k - 1]) * g0 / (g0 - g1));
        }
    }
    None
}

/// Slowest relaxation time: least-squares slope of ln|p − p_final| over the
/// second half of the grid. Fast transients early in the trajectory do not
/// enter. `None` if fewer than three usable samples remain.
pub fn asymptotic_relaxation_time(times: &[f64], values: &[f64], p_final: f64) -> Option<f64> {
    let n = values.len().min(times.len());
    let t_end = *times.get(n.checked_sub(1)?)?;
    let t_half = times[0] + 0.5 * (t_end - times[0]);
    let pts: Vec<(f64, f64)> = (0..n)
        .filter(|&k| times[k] >= t_half)
        .filter_map(|k| {
            let gap = (values[k] - p_final).abs();
            (gap > 1e-12).then(|| (times[k], gap.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::LevelScheme;
    use crate::physmodel::PhysConstants;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn spin_half_examples() {
        let sym = rate_equation_steady(&ZeemanLadder::spin_half(2.0, 2.0).unwrap(), 0.0).unwrap();
        assert!(sym.polarization().abs() < 1e-15);
        let full = rate_equation_steady(&ZeemanLadder::spin_half(3e-4, 0.0).unwrap(), 0.0).unwrap();
        assert_eq!(full.polarization(), 1.0);
        let down = rate_equation_steady(&ZeemanLadder::spin_half(0.0, 3e-4).unwrap(), 0.0).unwrap();
        assert_eq!(down.polarization(), -1.0);
    }

    #[test]
    fn depolarization_reduces_by_factor() {
        let (wp, wm) = (2e-4, 0.5e-4);
        let gd = 10.0;
        let p0 = (wp - wm) / (wp + wm);
        let p = rate_equation_steady(&ZeemanLadder::spin_half(wp, wm).unwrap(), gd)
            .unwrap()
            .polarization();
        let factor = 1.0 + 2.0 * per_s_to_per_us(gd) / (wp + wm);
        assert!((p - p0 / factor).abs() < 1e-12);
    }

    #[test]
    fn frozen_and_split_chains() {
        assert_eq!(
            rate_equation_steady(&ZeemanLadder::spin_half(0.0, 0.0).unwrap(), 0.0),
            Err(DnpError::FrozenSpin)
        );
        let split = ZeemanLadder::new(2, vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            rate_equation_steady(&split, 0.0),
            Err(DnpError::NonUniqueStationary { classes: 2 })
        ));
    }

    #[test]
    fn spin_one_detailed_balance() {
        let ladder = ZeemanLadder::new(2, vec![3.0, 0.5], vec![1.0, 2.0]).unwrap();
        let s = rate_equation_steady(&ladder, 0.0).unwrap();
        let p = &s.populations;
        assert!((p[1] / p[0] - 3.0).abs() < 1e-12);
        assert!((p[2] / p[1] - 0.25).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spin_half_closed_form(wp in 0.0f64..1.0, wm in 0.0f64..1.0, gd in 0.0f64..1e5) {
            prop_assume!(wp + wm + gd > 1e-9);
            let s = rate_equation_steady(&ZeemanLadder::spin_half(wp, wm).unwrap(), gd).unwrap();
            let g = per_s_to_per_us(gd);
            let expect = (wp - wm) / (wp + wm + 2.0 * g);
            prop_assert!((s.polarization() - expect).abs() <= 1e-12);
            prop_assert!((s.populations.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(s.populations.iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn dipolar_limit_is_odd(theta in 0.0f64..PI) {
            // pair θ with θ' where c_θ' = −c_θ
            let c = crate::physmodel::c_theta(theta);
            let cos2 = (2.0 - c) / 3.0;
            prop_assume!((0.0..=1.0).contains(&cos2));
            let other = cos2.sqrt().acos();
            prop_assert!((pss_dipolar(theta) + pss_dipolar(other)).abs() < 1e-12);
        }
    }

    #[test]
    fn dipolar_limit_examples() {
        assert!((pss_dipolar(0.0) - 1.0).abs() < 1e-15);
        assert!(pss_dipolar((2.0f64 / 3.0).sqrt().acos()).abs() < 1e-15);
        assert!((pss_dipolar(PI / 2.0) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn trajectory_examples() {
        let t = [0.0, 1.0 / 0.3, 1e6];
        let p = polarization_trajectory(-0.2, 0.7, 0.3, &t);
        assert_eq!(p[0], -0.2);
        assert!((p[1] - (0.7 - 0.9 / std::f64::consts::E)).abs() < 1e-14);
        assert!((p[2] - 0.7).abs() < 1e-14);
        assert_eq!(relaxation_time(&[0.0, 1.0], &[0.0, 0.0], 0.0), Some(0.0));
    }

    #[test]
    fn strong_hfi_examples() {
        let k = PhysConstants::default();
        assert!(strong_hfi_check(k.a_dp(20.0), 0.2, 1.0));
        assert!(!strong_hfi_check(k.a_dp(40.0), 0.2, 1.0));
        assert!(strong_hfi_check(1e-9, 0.2, 0.0));
    }

    #[test]
    fn markov_check() {
        let m = NvModel::new(LevelScheme::Seven, 102.0, 0.4).unwrap();
        assert!(markovian_validity(0.0, &m).valid);
        assert!(!markovian_validity(1.0, &m).valid);
        assert!(markovian_validity(1e-3, &m).valid);
    }

    #[test]
    fn exact_first_shell_sign_reversal() {
        let k = PhysConstants::default();
        let site = NucleusSite::first_shell(&k);
        let base = NvModel::new(LevelScheme::Seven, 100.07, 0.4).unwrap();
        let plus = lindblad_polarization(&base, std::slice::from_ref(&site), false).unwrap()[0];
        let minus =
            lindblad_polarization(&base.with_field(104.75).unwrap(), &[site], false).unwrap()[0];
        assert!(plus > 0.0 && minus < 0.0, "{plus} {minus}");
    }

    #[test]
    fn tail_fit_ignores_fast_transient() {
        let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let p: Vec<f64> = t
            .iter()
            .map(|&t| 0.5 - 0.3 * (-t / 1.5).exp() - 0.2 * (-t / 0.05).exp())
            .collect();
        let tau = asymptotic_relaxation_time(&t, &p, 0.5).unwrap();
        assert!((tau - 1.5).abs() < 1e-6, "{tau}");
        assert!(relaxation_time(&t, &p, 0.5).unwrap() < 1.5);
        assert_eq!(asymptotic_relaxation_time(&t[..2], &p[..2], 0.5), None);
    }
}
