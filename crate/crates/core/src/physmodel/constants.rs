use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{invalid, Result};

/// Converts an ordinary frequency in MHz to an angular frequency in rad/μs.
///
/// Every user-facing frequency is ordinary; every Hamiltonian, Lindblad rate
/// and nuclear flip rate computed internally is angular with time in μs.
#[inline]
pub fn angular(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Converts a decay constant in 1/μs to s⁻¹.
#[inline]
pub fn per_us_to_per_s(rate: f64) -> f64 {
    rate * 1e6
}

/// Converts a decay constant in s⁻¹ to 1/μs.
#[inline]
pub fn per_s_to_per_us(rate: f64) -> f64 {
    rate * 1e-6
}

/// Physical constants of the NV center and the ¹³C nucleus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// Ground-state zero-field splitting (MHz).
    pub d_gs: f64,
    /// Excited-state zero-field splitting (MHz).
    pub d_es: f64,
    /// Electron gyromagnetic ratio (MHz/mT).
    pub gamma_e: f64,
    /// ¹³C gyromagnetic ratio (MHz/T).
    pub gamma_n13c: f64,
    /// Dipolar hyperfine prefactor (MHz·Å³).
    pub a_dp_prefactor: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self {
            d_gs: 2870.0,
            d_es: 1410.0,
            gamma_e: 28.025,
            gamma_n13c: -10.705,
            a_dp_prefactor: 20.0,
        }
    }
}

impl PhysConstants {
    /// Field (mT) at which the |−1_g⟩ and |0_g⟩ levels cross.
    pub fn gslac_field(&self) -> f64 {
        self.d_gs / self.gamma_e
    }

    /// Dipolar coupling strength A_dp(|R|) in MHz for a distance in Å.
    pub fn a_dp(&self, r_angstrom: f64) -> f64 {
        self.a_dp_prefactor / r_angstrom.powi(3)
    }
}

/// Magnetic field magnitude along the N-V axis, stored in mT.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MagneticField(f64);

impl MagneticField {
    pub fn from_millitesla(b_mt: f64) -> Result<Self> {
        if !b_mt.is_finite() || b_mt < 0.0 {
            return Err(invalid(
                "B",
                format!("field must be finite and non-negative, got {b_mt}"),
            ));
        }
        Ok(Self(b_mt))
    }

    pub fn millitesla(self) -> f64 {
        self.0
    }

    /// The only place where mT is converted to T.
    pub fn tesla(self) -> f64 {
        self.0 * 1e-3
    }

    /// Nuclear Zeeman frequency γ_N B in MHz for γ_N given in MHz/T.
    pub fn nuclear_zeeman(self, gamma_n: f64) -> f64 {
        gamma_n * self.tesla()
    }
}
