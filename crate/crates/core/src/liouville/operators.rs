//! NV-space operators: Hamiltonian, Lindblad channels, spin and Knight-field
//! operators. Every matrix returned here is in angular units (rad/μs).

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use super::model::{LevelScheme, NvLevel, NvModel};
use crate::physmodel::{angular, HfiTensor, NucleusSite};

pub type CMat = DMatrix<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// |i⟩⟨j| on a `dim`-dimensional space.
pub fn transition(dim: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    m[(i, j)] = c(1.0);
    m
}

fn level_op(scheme: LevelScheme, from: NvLevel, to: NvLevel) -> Option<CMat> {
    let i = scheme.index(to)?;
    let j = scheme.index(from)?;
    Some(transition(scheme.dim(), i, j))
}

/// Rotating-frame NV Hamiltonian (rad/μs).
pub fn build_nv_hamiltonian(model: &NvModel) -> CMat {
    let scheme = model.levels;
    let dim = scheme.dim();
    let k = &model.consts;
    let zeeman = k.gamma_e * model.field.millitesla();
    let laser = model.pump.laser_detuning;
    let mut h = CMat::zeros(dim, dim);
    for (idx, &level) in scheme.basis().iter().enumerate() {
        let e = match level {
            NvLevel::G0 | NvLevel::S => 0.0,
            NvLevel::Gm1 => model.detuning(),
            NvLevel::Gp1 => k.d_gs + zeeman,
            NvLevel::E0 => laser,
            NvLevel::Em1 => k.d_es - zeeman + laser,
            NvLevel::Ep1 => k.d_es + zeeman + laser,
        };
        h[(idx, idx)] = c(angular(e));
    }
    let half_rabi = c(angular(model.pump.omega_r / 2.0));
    let pairs = [
        (NvLevel::G0, NvLevel::E0),
        (NvLevel::Gm1, NvLevel::Em1),
        (NvLevel::Gp1, NvLevel::Ep1),
    ];
    for (g, e) in pairs {
        if let (Some(ig), Some(ie)) = (scheme.index(g), scheme.index(e)) {
            h[(ie, ig)] += half_rabi;
            h[(ig, ie)] += half_rabi;
        }
    }
    h
}

/// A Lindblad channel D[√rate · op].
#[derive(Debug, Clone)]
pub struct Channel {
    pub label: String,
    /// Angular rate (1/μs).
    pub rate: f64,
    pub op: CMat,
}

/// Collapse operators and dephasing projectors of the NV model.
///
/// Channels with zero rate are omitted.
pub fn build_dissipators(model: &NvModel) -> Vec<Channel> {
    use NvLevel::*;
    let scheme = model.levels;
    let r = &model.rates;
    let mut out = Vec::new();
    let mut push = |label: String, rate_mhz: f64, op: Option<CMat>| {
        if let Some(op) = op {
            if rate_mhz > 0.0 {
                out.push(Channel {
                    label,
                    rate: angular(rate_mhz),
                    op,
                });
            }
        }
    };
    for (e, g) in [(E0, G0), (Em1, Gm1), (Ep1, Gp1)] {
        push(
            format!("radiative {}->{}", e.label(), g.label()),
            r.radiative,
            level_op(scheme, e, g),
        );
    }
    for e in [Em1, Ep1] {
        push(
            format!("isc {}->S", e.label()),
            r.isc,
            level_op(scheme, e, S),
        );
    }
    push("leak 0e->S".into(), r.leak_0e, level_op(scheme, E0, S));
    push("singlet S->0g".into(), r.singlet, level_op(scheme, S, G0));

    let dim = scheme.dim();
    if r.orbital_dephasing > 0.0 {
        let mut proj = CMat::zeros(dim, dim);
        for (idx, level) in scheme.basis().iter().enumerate() {
            if level.is_excited() {
                proj[(idx, idx)] = c(1.0);
            }
        }
        push("orbital dephasing".into(), r.orbital_dephasing, Some(proj));
    }
    for g in [G0, Gm1, Gp1] {
        push(
            format!("dephasing {}", g.label()),
            r.ground_dephasing,
            level_op(scheme, g, g),
        );
    }
    out
}

/// Spin-1 operators (S_x, S_y, S_z) restricted to the ground or excited
/// triplet levels present in `scheme`.
pub fn spin_operators(scheme: LevelScheme, excited: bool) -> [CMat; 3] {
    let dim = scheme.dim();
    let (l0, lm, lp) = if excited {
        (NvLevel::E0, NvLevel::Em1, NvLevel::Ep1)
    } else {
        (NvLevel::G0, NvLevel::Gm1, NvLevel::Gp1)
    };
    let mut sz = CMat::zeros(dim, dim);
    let mut splus = CMat::zeros(dim, dim);
    let i0 = scheme.index(l0);
    let im = scheme.index(lm);
    let ip = scheme.index(lp);
    if let Some(im) = im {
        sz[(im, im)] = c(-1.0);
    }
    if let Some(ip) = ip {
        sz[(ip, ip)] = c(1.0);
    }
    if let (Some(i0), Some(im)) = (i0, im) {
        splus[(i0, im)] = c(SQRT_2);
    }
    if let (Some(i0), Some(ip)) = (i0, ip) {
        splus[(ip, i0)] = c(SQRT_2);
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus) * c(0.5);
    let sy = (&splus - &sminus) * (-I * 0.5);
    [sx, sy, sz]
}

/// How much of the hyperfine tensor enters the Knight field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfiCoupling {
    /// Every tensor component, ground and (optionally) excited.
    Full,
    /// Longitudinal A_zz terms in F_z, ground-state flip-flop terms A_{+∓}
    /// in F_±; non-collinear and excited transverse terms dropped.
    Secular,
}

/// Knight-field operators F_z, F_+ = F_x + iF_y and F_- = F_x − iF_y on
/// the NV space (rad/μs), for F_a = Σ_b S_{g,b} A_g[b][a] + S_{e,b} A_e[b][a].
#[derive(Debug, Clone)]
pub struct KnightField {
    pub z: CMat,
    pub plus: CMat,
    pub minus: CMat,
}

impl KnightField {
    pub fn new(
        scheme: LevelScheme,
        site: &NucleusSite,
        coupling: HfiCoupling,
        include_excited: bool,
    ) -> Self {
        let ground = site.ground;
        let excited = if include_excited {
            site.excited_or_zero()
        } else {
            HfiTensor::zero()
        };
        let sg = spin_operators(scheme, false);
        let se = spin_operators(scheme, true);
        let dim = scheme.dim();
        match coupling {
            HfiCoupling::Full => {
                let comp = |a: usize| {
                    let mut f = CMat::zeros(dim, dim);
                    for b in 0..3 {
                        f += &sg[b] * c(angular(ground.a[b][a]));
                        f += &se[b] * c(angular(excited.a[b][a]));
                    }
                    f
                };
                let fx = comp(0);
                let fy = comp(1);
                let fz = comp(2);
                Self {
                    plus: &fx + &fy * I,
                    minus: &fx - &fy * I,
                    z: fz,
                }
            }
            HfiCoupling::Secular => {
                let s_plus_g = &sg[0] + &sg[1] * I;
                let s_minus_g = &sg[0] - &sg[1] * I;
                let z = &sg[2] * c(angular(ground.a_zz())) + &se[2] * c(angular(excited.a_zz()));
                let plus = &s_plus_g * (ground.a_mp() * angular(0.5))
                    + &s_minus_g * (ground.a_pp() * angular(0.5));
                let minus = &s_plus_g * (ground.a_mm() * angular(0.5))
                    + &s_minus_g * (ground.a_pm() * angular(0.5));
                Self { z, plus, minus }
            }
        }
    }
}
