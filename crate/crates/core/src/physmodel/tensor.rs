use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constants::PhysConstants;
use crate::error::{DnpError, Result};

/// Real 3×3 hyperfine tensor in MHz, indexed `a[row][col]` with x, y, z order.
///
/// The Knight field acting on the nucleus is `F_a = Σ_b S_b a[b][a]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HfiTensor {
    pub a: [[f64; 3]; 3],
}

impl HfiTensor {
    pub const fn new(a: [[f64; 3]; 3]) -> Self {
        Self { a }
    }

    pub const fn zero() -> Self {
        Self { a: [[0.0; 3]; 3] }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().flatten().all(|&x| x == 0.0)
    }

    /// e₊·A·e₋ with e_± = e_x ± i e_y.
    pub fn a_pm(&self) -> Complex64 {
        let a = &self.a;
        Complex64::new(a[0][0] + a[1][1], a[1][0] - a[0][1])
    }

    /// e₊·A·e₊.
    pub fn a_pp(&self) -> Complex64 {
        let a = &self.a;
        Complex64::new(a[0][0] - a[1][1], a[0][1] + a[1][0])
    }

    /// e₋·A·e₋, the complex conjugate of `a_pp` for a real tensor.
    pub fn a_mm(&self) -> Complex64 {
        self.a_pp().conj()
    }

    /// e₋·A·e₊.
    pub fn a_mp(&self) -> Complex64 {
        self.a_pm().conj()
    }

    pub fn a_zz(&self) -> f64 {
        self.a[2][2]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.a[i][j] == self.a[j][i]))
    }

    /// Divides the transverse diagonal components A_xx, A_yy by `eta`.
    ///
    /// For `eta != 1` the non-collinear A_xz and A_zx entries are zeroed as
    /// well; A_zz is kept.
    pub fn scale_transverse(&self, eta: f64) -> Self {
        let mut a = self.a;
        a[0][0] /= eta;
        a[1][1] /= eta;
        if eta != 1.0 {
            a[0][2] = 0.0;
            a[2][0] = 0.0;
        }
        Self { a }
    }
}

/// Full point-dipole hyperfine tensor A_ab = A_dp(|R|)(3 n_a n_b − δ_ab).
pub fn dipolar_tensor(position: [f64; 3], consts: &PhysConstants) -> Result<HfiTensor> {
    let r = norm(position);
    if !(r > 0.0) || !r.is_finite() {
        return Err(DnpError::DegenerateSite);
    }
    let a_dp = consts.a_dp(r);
    let n = position.map(|x| x / r);
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            *v = a_dp * (3.0 * n[i] * n[j] - delta);
        }
    }
    Ok(HfiTensor { a })
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Polar and azimuthal angles (radians) of a position relative to the N-V axis.
pub fn polar_angles(position: [f64; 3]) -> (f64, f64) {
    let r = norm(position);
    let theta = (position[2] / r).clamp(-1.0, 1.0).acos();
    let phi = position[1].atan2(position[0]);
    (theta, phi)
}

/// c_θ = 3cos²θ − 2.
pub fn c_theta(theta: f64) -> f64 {
    3.0 * theta.cos().powi(2) - 2.0
}
