//! Nuclear spin-flip rates: Liouville resolvent, analytic five-level
//! resolvent and weak-pumping golden rule.
//!
//! Inputs are ordinary frequencies in MHz. Returned rates are angular decay
//! constants in 1/μs, i.e. the W of e^{−Wt}.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DnpError, Result};
use crate::liouville::{
    nv_generator, steady_state, vectorize, CMat, HfiCoupling, KnightField, LevelScheme,
    LiouvilleOperator, NvModel,
};
use crate::physmodel::{
    angular, check_transition, mismatch_from_detuning, xi, Direction, NucleusSite,
};

/// Tolerance below which slightly negative rates are clamped to zero (1/μs).
pub const NEGATIVE_RATE_TOL: f64 = 1e-12;

/// δ^{(γ)}(x) = (γ/π)/(x² + γ²).
pub fn lorentzian(x: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid(
            "gamma",
            format!("Lorentzian width must be positive, got {gamma}"),
        ));
    }
    Ok(lorentzian_unchecked(x, gamma))
}

fn lorentzian_unchecked(x: f64, gamma: f64) -> f64 {
    (gamma / PI) / (x * x + gamma * gamma)
}

fn clamp_rate(w: f64) -> f64 {
    if (-NEGATIVE_RATE_TOL..0.0).contains(&w) {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    Resolvent,
    Analytic5,
    GoldenRule,
}

/// One flip rate W_{m±1←m} with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipRate {
    /// 1/μs.
    pub rate: f64,
    /// Energy mismatch Δ_{m±1←m}, MHz.
    pub detuning: f64,
    /// Γ = γ_φ + R, MHz.
    pub linewidth: f64,
    pub method: RateMethod,
    /// False when the golden rule is used outside R ≤ 0.1(γ + γ₁/2).
    pub regime_valid: bool,
}

/// W₊ and W₋ of a spin-1/2 nucleus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub w_plus: f64,
    pub w_minus: f64,
    pub detuning_plus: f64,
    pub detuning_minus: f64,
    pub linewidth: f64,
    pub method: RateMethod,
    pub regime_valid: bool,
}

impl RatePair {
    /// W = W₊ + W₋.
    pub fn total(&self) -> f64 {
        self.w_plus + self.w_minus
    }

    /// (W₊ − W₋)/(W₊ + W₋), or 0 when both vanish.
    pub fn polarization(&self) -> f64 {
        let w = self.total();
        if w > 0.0 {
            (self.w_plus - self.w_minus) / w
        } else {
            0.0
        }
    }
}

/// Options shared by the resolvent and analytic paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateOptions {
    pub coupling: HfiCoupling,
    pub include_excited_hfi: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            coupling: HfiCoupling::Full,
            include_excited_hfi: false,
        }
    }
}

impl RateOptions {
    /// Secular coupling for the five-level model, full tensors for seven.
    pub fn for_levels(levels: LevelScheme, include_excited_hfi: bool) -> Self {
        Self {
            coupling: match levels {
                LevelScheme::Five => HfiCoupling::Secular,
                LevelScheme::Seven => HfiCoupling::Full,
            },
            include_excited_hfi,
        }
    }

    pub fn secular() -> Self {
        Self {
            coupling: HfiCoupling::Secular,
            include_excited_hfi: false,
        }
    }
}

fn regime_valid(model: &NvModel) -> bool {
    let r = &model.rates;
    model.pump.rate <= 0.1 * (r.radiative + 0.5 * r.isc)
}

fn site_mismatch(model: &NvModel, site: &NucleusSite, two_m: i32, dir: Direction) -> Result<f64> {
    mismatch_from_detuning(
        model.detuning(),
        site.two_i(),
        two_m,
        dir,
        model.field,
        site.ground.a_zz(),
        site.gamma_n,
    )
}

/// −(ξ/2) Re Tr[F† (L − i·zeeman)⁻¹ F P], the closed form of the one-sided
/// correlation integral, for an already shifted generator `l`.
pub fn resolvent_flip_rate(
    l: &LiouvilleOperator,
    f: &CMat,
    p: &CMat,
    xi: f64,
    zeeman: f64,
) -> Result<f64> {
    let a = l.minus_identity(Complex64::new(0.0, zeeman));
    let v: DVector<Complex64> = vectorize(&(f * p));
    let lu = a.lu();
    let n = l.matrix.nrows();
    let smallest_pivot = (0..n)
        .map(|i| lu.u()[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if smallest_pivot < 1e-12 {
        return Err(DnpError::SingularResolvent(format!(
            "pivot {smallest_pivot:e} at nuclear Zeeman shift {zeeman}"
        )));
    }
    let y = lu
        .solve(&v)
        .ok_or_else(|| DnpError::SingularResolvent("LU solve failed".into()))?;
    let fv = vectorize(f);
    let tr: Complex64 = fv.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
    let w = -0.5 * xi * tr.re;
    if !w.is_finite() {
        return Err(DnpError::NonFinite("resolvent rate"));
    }
    Ok(w)
}

/// W_{m±1←m} from the Liouville-space resolvent of the full NV model.
pub fn rate_resolvent(
    model: &NvModel,
    site: &NucleusSite,
    two_m: i32,
    dir: Direction,
    opts: RateOptions,
) -> Result<FlipRate> {
    let two_i = site.two_i();
    check_transition(two_i, two_m, dir)?;
    let knight = KnightField::new(model.levels, site, opts.coupling, opts.include_excited_hfi);
    let base = nv_generator(model);
    let m = two_m as f64 / 2.0;
    let s = dir.sign() as f64;
    let p = steady_state(&base.with_shift(m, m, &knight.z))?;
    let f = match dir {
        Direction::Up => &knight.minus,
        Direction::Down => &knight.plus,
    };
    let l_nm = base.with_shift(m + s, m, &knight.z);
    let zeeman = s * angular(model.field.nuclear_zeeman(site.gamma_n));
    let w = resolvent_flip_rate(&l_nm, f, &p.matrix, xi(two_i, two_m, dir), zeeman)?;
    Ok(FlipRate {
        rate: clamp_rate(w),
        detuning: site_mismatch(model, site, two_m, dir)?,
        linewidth: model.flip_linewidth(),
        method: RateMethod::Resolvent,
        regime_valid: true,
    })
}

/// Detunings (energy of the first state minus the second) and linewidths of
/// the four coherences of the five-level resolvent, MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticInputs {
    /// |−1_g⟩ vs |0_g⟩.
    pub delta_gg: f64,
    /// |−1_e⟩ vs |0_e⟩.
    pub delta_ee: f64,
    /// |−1_e⟩ vs |0_g⟩.
    pub delta_eg: f64,
    /// |−1_g⟩ vs |0_e⟩.
    pub delta_ge: f64,
    pub gamma_gg: f64,
    pub gamma_ee: f64,
    pub gamma_eg: f64,
    pub gamma_ge: f64,
    pub omega_r: f64,
}

impl AnalyticInputs {
    pub fn from_model(
        model: &NvModel,
        site: &NucleusSite,
        two_m: i32,
        dir: Direction,
        include_excited_hfi: bool,
    ) -> Result<Self> {
        let two_i = site.two_i();
        check_transition(two_i, two_m, dir)?;
        let k = &model.consts;
        let s = dir.sign() as f64;
        let n = two_m as f64 / 2.0 + s;
        let zn = s * model.field.nuclear_zeeman(site.gamma_n);
        let a_ezz = if include_excited_hfi {
            site.excited_or_zero().a_zz()
        } else {
            0.0
        };
        let delta_gg = site_mismatch(model, site, two_m, dir)?;
        let delta_ee = k.d_es - k.gamma_e * model.field.millitesla() + zn - n * a_ezz;
        let laser = model.pump.laser_detuning;
        let r = &model.rates;
        Ok(Self {
            delta_gg,
            delta_ee,
            delta_eg: delta_ee + laser,
            delta_ge: delta_gg - laser,
            gamma_gg: r.ground_dephasing,
            gamma_ee: r.radiative + 0.5 * r.isc,
            gamma_eg: 0.5 * (r.orbital_dephasing + r.radiative + r.isc + r.ground_dephasing),
            gamma_ge: 0.5 * (r.orbital_dephasing + r.radiative + r.ground_dephasing),
            omega_r: model.pump.omega_r,
        })
    }
}

/// Closed-form ⟨−1_g|ρ|0_g⟩ of the five-level resolvent (1/MHz).
pub fn rho_gg_analytic(x: &AnalyticInputs) -> Result<Complex64> {
    let vals = [
        x.delta_gg, x.delta_ee, x.delta_eg, x.delta_ge, x.gamma_gg, x.gamma_ee, x.gamma_eg,
        x.gamma_ge, x.omega_r,
    ];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(DnpError::NonFinite("analytic resolvent inputs"));
    }
    let d = |delta: f64, gamma: f64| Complex64::new(delta, -gamma);
    let q = (x.omega_r / 2.0).powi(2);
    let self_energy = q / d(x.delta_ge, x.gamma_ge) + q / d(x.delta_eg, x.gamma_eg);
    let inner = Complex64::new(1.0, 0.0) + self_energy / (d(x.delta_ee, x.gamma_ee) - self_energy);
    let rho = Complex64::new(0.0, 1.0) / (d(x.delta_gg, x.gamma_gg) - self_energy * inner);
    if !(rho.re.is_finite() && rho.im.is_finite()) {
        return Err(DnpError::NonFinite("analytic resolvent"));
    }
    Ok(rho)
}

/// Five-level analytic rate −ξ(|A_{+∓}|²/4) P_g Re ρ, angular units.
pub fn rate_analytic5(
    model: &NvModel,
    site: &NucleusSite,
    two_m: i32,
    dir: Direction,
    include_excited_hfi: bool,
) -> Result<FlipRate> {
    let inputs = AnalyticInputs::from_model(model, site, two_m, dir, include_excited_hfi)?;
    let rho = rho_gg_analytic(&inputs)?;
    let a = transverse_component(site, dir);
    // ρ is in 1/MHz; 1/(2π) converts it to angular
    let w = -xi(site.two_i(), two_m, dir) * angular(a).powi(2) / 4.0
        * model.ground_population()
        * rho.re
        / angular(1.0);
    Ok(FlipRate {
        rate: clamp_rate(w),
        detuning: inputs.delta_gg,
        linewidth: model.flip_linewidth(),
        method: RateMethod::Analytic5,
        regime_valid: true,
    })
}

/// |A_{+−}| for up flips, |A_{++}| for down flips (MHz).
fn transverse_component(site: &NucleusSite, dir: Direction) -> f64 {
    match dir {
        Direction::Up => site.ground.a_pm().norm(),
        Direction::Down => site.ground.a_pp().norm(),
    }
}

/// P_g ξ 2π |A/(2√2)|² δ^{(Γ)}(Δ) with everything angular.
fn golden(p_g: f64, xi: f64, a_mhz: f64, mismatch: f64, gamma: f64) -> f64 {
    let a = angular(a_mhz);
    2.0 * PI * p_g * xi * (a * a / 8.0) * lorentzian_unchecked(angular(mismatch), angular(gamma))
}

/// Weak-pumping golden-rule rate with Γ = γ_φ + R.
pub fn rate_golden_rule(
    model: &NvModel,
    site: &NucleusSite,
    two_m: i32,
    dir: Direction,
) -> Result<FlipRate> {
    let two_i = site.two_i();
    let mismatch = site_mismatch(model, site, two_m, dir)?;
    let gamma = model.flip_linewidth();
    if !(gamma > 0.0) {
        return Err(invalid("linewidth", "γ_φ + R must be positive"));
    }
    let w = golden(
        model.ground_population(),
        xi(two_i, two_m, dir),
        transverse_component(site, dir),
        mismatch,
        gamma,
    );
    Ok(FlipRate {
        rate: w,
        detuning: mismatch,
        linewidth: gamma,
        method: RateMethod::GoldenRule,
        regime_valid: regime_valid(model),
    })
}

/// Any single rate by method.
pub fn flip_rate(
    model: &NvModel,
    site: &NucleusSite,
    two_m: i32,
    dir: Direction,
    method: RateMethod,
    opts: RateOptions,
) -> Result<FlipRate> {
    match method {
        RateMethod::Resolvent => rate_resolvent(model, site, two_m, dir, opts),
        RateMethod::Analytic5 => rate_analytic5(model, site, two_m, dir, opts.include_excited_hfi),
        RateMethod::GoldenRule => rate_golden_rule(model, site, two_m, dir),
    }
}

/// W₊ (m = −1/2 → +1/2) and W₋ (m = +1/2 → −1/2) of a spin-1/2 site.
pub fn rate_pair(
    model: &NvModel,
    site: &NucleusSite,
    method: RateMethod,
    opts: RateOptions,
) -> Result<RatePair> {
    if site.two_i() != 1 {
        return Err(invalid(
            "site",
            "rate pairs are defined for spin-1/2 nuclei",
        ));
    }
    let up = flip_rate(model, site, -1, Direction::Up, method, opts)?;
    let down = flip_rate(model, site, 1, Direction::Down, method, opts)?;
    Ok(RatePair {
        w_plus: up.rate,
        w_minus: down.rate,
        detuning_plus: up.detuning,
        detuning_minus: down.detuning,
        linewidth: up.linewidth,
        method,
        regime_valid: up.regime_valid && down.regime_valid,
    })
}

/// Spin-1/2 golden-rule pair from Δ, Δ_N and Γ (MHz): W₊ resonant at
/// Δ = −Δ_N/2 with |A_{+−}|, W₋ at Δ = Δ_N/2 with |A_{++}|.
pub fn rate_pair_spin_half(
    delta: f64,
    delta_n: f64,
    gamma: f64,
    p_g: f64,
    a_pp: Complex64,
    a_pm: Complex64,
) -> Result<RatePair> {
    if !(gamma > 0.0) {
        return Err(invalid(
            "gamma",
            format!("linewidth must be positive, got {gamma}"),
        ));
    }
    let plus = delta + delta_n / 2.0;
    let minus = delta - delta_n / 2.0;
    Ok(RatePair {
        w_plus: golden(p_g, 1.0, a_pm.norm(), plus, gamma),
        w_minus: golden(p_g, 1.0, a_pp.norm(), minus, gamma),
        detuning_plus: plus,
        detuning_minus: minus,
        linewidth: gamma,
        method: RateMethod::GoldenRule,
        regime_valid: true,
    })
}

/// Rates W_{m+1←m} (`up[k]`) and W_{m←m+1} (`down[k]`) for m = −I + k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeemanLadder {
    pub two_i: u32,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl ZeemanLadder {
    pub fn new(two_i: u32, up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        let n = two_i as usize;
        if up.len() != n {
            return Err(DnpError::LengthMismatch {
                expected: n,
                got: up.len(),
            });
        }
        if down.len() != n {
            return Err(DnpError::LengthMismatch {
                expected: n,
                got: down.len(),
            });
        }
        if up
            .iter()
            .chain(&down)
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(invalid("rates", "flip rates must be finite and ≥ 0"));
        }
        Ok(Self { two_i, up, down })
    }

    pub fn spin_half(w_plus: f64, w_minus: f64) -> Result<Self> {
        Self::new(1, vec![w_plus], vec![w_minus])
    }
}

/// Every adjacent flip rate of a site.
pub fn ladder_rates(
    model: &NvModel,
    site: &NucleusSite,
    method: RateMethod,
    opts: RateOptions,
) -> Result<ZeemanLadder> {
    let two_i = site.two_i();
    let mut up = Vec::with_capacity(two_i as usize);
    let mut down = Vec::with_capacity(two_i as usize);
    for k in 0..two_i as i32 {
        let two_m = -(two_i as i32) + 2 * k;
        up.push(flip_rate(model, site, two_m, Direction::Up, method, opts)?.rate);
        down.push(flip_rate(model, site, two_m + 2, Direction::Down, method, opts)?.rate);
    }
    ZeemanLadder::new(two_i, up, down)
}

/// Excited-state flip estimate 2π(A_e/2)² δ^{(γ+γ₁/2)}(D_es) P_e (1/μs).
pub fn rate_excited_estimate(a_e: f64, model: &NvModel) -> f64 {
    let r = model.pump.rate;
    let g = model.rates.radiative;
    let p_e = if r == 0.0 { 0.0 } else { r / (2.0 * r + g) };
    let width = model.rates.radiative + 0.5 * model.rates.isc;
    let a = angular(a_e) / 2.0;
    2.0 * PI * a * a * lorentzian_unchecked(angular(model.consts.d_es), angular(width)) * p_e
}

/// τ_c = [2πRγ₁/(γ₁+γ)]⁻¹ + [2πγ_s]⁻¹ in μs.
pub fn correlation_time(model: &NvModel) -> Result<f64> {
    let r = model.pump.rate;
    if !(r > 0.0) {
        return Err(DnpError::NoOpticalInitialization);
    }
    let k = &model.rates;
    let init = angular(r * k.isc / (k.isc + k.radiative));
    Ok(1.0 / init + 1.0 / angular(k.singlet))
}
