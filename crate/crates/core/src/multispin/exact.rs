use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Bath, JointConfig};
use crate::error::{invalid, DnpError, Result};
use crate::liouville::NvModel;
use crate::physmodel::{per_s_to_per_us, NucleusSite};

pub const EXACT_MAX_SITES: usize = 12;

/// Stationary distribution over the 2^N joint configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactJointState {
    pub configs: Vec<JointConfig>,
    /// Marginals p_i = 2⟨I_z,i⟩.
    pub polarizations: Vec<f64>,
    /// ‖Q p‖_∞ of the master-equation generator, 1/μs.
    pub residual: f64,
}

impl ExactJointState {
    pub fn mean_polarization(&self) -> f64 {
        self.polarizations.iter().sum::<f64>() / self.polarizations.len() as f64
    }
}

/// Rate generator Q[to, from] of the joint master equation.
///
/// The rates of nucleus i see the Overhauser field of the other nuclei only;
/// its own A_zz already enters through Δ_N.
fn generator(bath: &Bath, gamma_dep: f64) -> Result<DMatrix<f64>> {
    let n = bath.len();
    let dim = 1usize << n;
    let g = per_s_to_per_us(gamma_dep);
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let h_all: f64 = (0..n)
            .map(|j| bath.a_zz(j) * if k >> j & 1 == 1 { 0.5 } else { -0.5 })
            .sum();
        for i in 0..n {
            let up = k >> i & 1 == 1;
            let h = h_all - bath.a_zz(i) * if up { 0.5 } else { -0.5 };
            let pair = bath.pair(i, h)?;
            let (rate, to) = if up {
                (pair.w_minus + g, k & !(1 << i))
            } else {
                (pair.w_plus + g, k | 1 << i)
            };
            q[(to, k)] += rate;
            q[(k, k)] -= rate;
        }
    }
    Ok(q)
}

/// Exact stationary state of the coupled N-nucleus rate equations, N ≤ 12.
pub fn exact_joint_steady(
    sites: &[NucleusSite],
    model: &NvModel,
    gamma_dep: f64,
) -> Result<ExactJointState> {
    let n = sites.len();
    if n == 0 {
        return Err(DnpError::EmptyEnsemble);
    }
    if n > EXACT_MAX_SITES {
        return Err(DnpError::DimensionCap {
            dim: n,
            cap: EXACT_MAX_SITES,
        });
    }
    if !(gamma_dep >= 0.0 && gamma_dep.is_finite()) {
        return Err(invalid(
            "gamma_dep",
            format!("must be finite and ≥ 0, got {gamma_dep}"),
        ));
    }
    let bath = Bath::new(model, sites)?;
    let q = generator(&bath, gamma_dep)?;
    let dim = q.nrows();
    if q.iter().all(|x| *x == 0.0) {
        return Err(DnpError::FrozenSpin);
    }

    let mut a = q.clone();
    for c in 0..dim {
        a[(dim - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs[dim - 1] = 1.0;
    let mut p = a.lu().solve(&rhs).ok_or_else(|| {
        DnpError::SingularSystem("joint master equation has no unique stationary state".into())
    })?;
    if p.iter().any(|x| !x.is_finite()) {
        return Err(DnpError::NonFinite("exact_joint_steady"));
    }
    if let Some(x) = p.iter().find(|x| **x < -1e-10) {
        return Err(DnpError::SingularSystem(format!(
            "stationary solve produced probability {x}"
        )));
    }
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let total = p.sum();
    p /= total;
    let residual = (&q * &p).amax();

    let polarizations = (0..n)
        .map(|i| {
            (0..dim)
                .map(|k| if k >> i & 1 == 1 { p[k] } else { -p[k] })
                .sum()
        })
        .collect();
    Ok(ExactJointState {
        configs: (0..dim)
            .map(|k| JointConfig::from_bits(k, n, p[k]))
            .collect(),
        polarizations,
        residual,
    })
}
