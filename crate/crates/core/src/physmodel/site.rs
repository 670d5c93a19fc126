use serde::{Deserialize, Serialize};

use super::constants::PhysConstants;
use super::tensor::{dipolar_tensor, norm, polar_angles, HfiTensor};
use crate::error::{DnpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    C13,
    N14,
    N15,
}

impl Species {
    /// Twice the nuclear spin, 2I.
    pub fn two_i(self) -> u32 {
        match self {
            Species::C13 | Species::N15 => 1,
            Species::N14 => 2,
        }
    }

    /// Number of Zeeman levels 2I + 1.
    pub fn multiplicity(self) -> usize {
        self.two_i() as usize + 1
    }

    /// Default gyromagnetic ratio in MHz/T.
    pub fn gamma_n(self, consts: &PhysConstants) -> f64 {
        match self {
            Species::C13 => consts.gamma_n13c,
            Species::N14 => 3.077,
            Species::N15 => -4.316,
        }
    }
}

/// Direction of a single nuclear Zeeman step, m → m ± 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> i32 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }
}

/// Checks that 2m and 2m ± 2 are both valid Zeeman indices for spin 2I.
pub fn check_transition(two_i: u32, two_m: i32, dir: Direction) -> Result<()> {
    let valid = |tm: i32| tm.abs() <= two_i as i32 && (tm + two_i as i32) % 2 == 0;
    let target = two_m + 2 * dir.sign();
    if valid(two_m) && valid(target) {
        Ok(())
    } else {
        Err(DnpError::InvalidTransition {
            two_i,
            two_m,
            direction: dir.sign(),
        })
    }
}

/// ξ_m^± = ⟨m|I_∓ I_±|m⟩ = I(I+1) − m(m ± 1).
pub fn xi(two_i: u32, two_m: i32, dir: Direction) -> f64 {
    let i = two_i as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    i * (i + 1.0) - m * (m + dir.sign() as f64)
}

/// A nucleus coupled to the NV center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NucleusSite {
    /// Position relative to the vacancy (Å), N-V axis along +z.
    pub position: [f64; 3],
    pub species: Species,
    pub ground: HfiTensor,
    pub excited: Option<HfiTensor>,
    /// Gyromagnetic ratio (MHz/T).
    pub gamma_n: f64,
}

impl NucleusSite {
    /// A ¹³C coupled to the ground state by the point-dipole interaction.
    pub fn dipolar(position: [f64; 3], consts: &PhysConstants) -> Result<Self> {
        Ok(Self {
            position,
            species: Species::C13,
            ground: dipolar_tensor(position, consts)?,
            excited: None,
            gamma_n: consts.gamma_n13c,
        })
    }

    /// First-shell ¹³C with the measured ground and excited tensors.
    pub fn first_shell(consts: &PhysConstants) -> Self {
        // nearest-neighbour carbon, 1.545 Å from the vacancy in the x-z plane
        let cos_t = -1.0 / 3.0_f64;
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        Self {
            position: [1.545 * sin_t, 0.0, 1.545 * cos_t],
            species: Species::C13,
            ground: HfiTensor::new([[198.6, 0.0, -21.5], [0.0, 123.0, 0.0], [-21.5, 0.0, 129.0]]),
            excited: Some(HfiTensor::new([
                [103.2, 0.0, -32.6],
                [0.0, 56.7, 0.0],
                [-32.6, 0.0, 79.5],
            ])),
            gamma_n: consts.gamma_n13c,
        }
    }

    /// Copy with the ground transverse HFI scaled down by `eta`.
    pub fn with_scaled_transverse(&self, eta: f64) -> Self {
        Self {
            ground: self.ground.scale_transverse(eta),
            ..self.clone()
        }
    }

    pub fn two_i(&self) -> u32 {
        self.species.two_i()
    }

    pub fn radius(&self) -> f64 {
        norm(self.position)
    }

    /// (θ, φ) in radians.
    pub fn angles(&self) -> (f64, f64) {
        polar_angles(self.position)
    }

    pub fn excited_or_zero(&self) -> HfiTensor {
        self.excited.unwrap_or_default()
    }
}
