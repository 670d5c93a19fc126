use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::physmodel::{detuning, MagneticField, PhysConstants};

/// NV level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelScheme {
    /// {0_g, −1_g, 0_e, −1_e, S}
    Five,
    /// {0_g, −1_g, +1_g, 0_e, −1_e, +1_e, S}
    Seven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NvLevel {
    G0,
    Gm1,
    Gp1,
    E0,
    Em1,
    Ep1,
    S,
}

impl NvLevel {
    pub fn label(self) -> &'static str {
        match self {
            NvLevel::G0 => "0g",
            NvLevel::Gm1 => "-1g",
            NvLevel::Gp1 => "+1g",
            NvLevel::E0 => "0e",
            NvLevel::Em1 => "-1e",
            NvLevel::Ep1 => "+1e",
            NvLevel::S => "S",
        }
    }

    /// Spin projection m_s; the singlet has none.
    pub fn spin_projection(self) -> Option<i32> {
        match self {
            NvLevel::G0 | NvLevel::E0 => Some(0),
            NvLevel::Gm1 | NvLevel::Em1 => Some(-1),
            NvLevel::Gp1 | NvLevel::Ep1 => Some(1),
            NvLevel::S => None,
        }
    }

    pub fn is_ground(self) -> bool {
        matches!(self, NvLevel::G0 | NvLevel::Gm1 | NvLevel::Gp1)
    }

    pub fn is_excited(self) -> bool {
        matches!(self, NvLevel::E0 | NvLevel::Em1 | NvLevel::Ep1)
    }
}

impl LevelScheme {
    pub fn basis(self) -> &'static [NvLevel] {
        use NvLevel::*;
        match self {
            LevelScheme::Five => &[G0, Gm1, E0, Em1, S],
            LevelScheme::Seven => &[G0, Gm1, Gp1, E0, Em1, Ep1, S],
        }
    }

    pub fn dim(self) -> usize {
        self.basis().len()
    }

    pub fn index(self, level: NvLevel) -> Option<usize> {
        self.basis().iter().position(|&l| l == level)
    }
}

/// NV dissipation rates, ordinary frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvRates {
    /// Excited-orbital pure dephasing Γ_e.
    pub orbital_dephasing: f64,
    /// Radiative decay γ, |m_e⟩ → |m_g⟩.
    pub radiative: f64,
    /// Intersystem crossing γ₁, |±1_e⟩ → |S⟩.
    pub isc: f64,
    /// Singlet decay γ_s, |S⟩ → |0_g⟩.
    pub singlet: f64,
    /// Ground-state spin dephasing γ_φ.
    pub ground_dephasing: f64,
    /// Optional |0_e⟩ → |S⟩ leakage; zero unless configured.
    pub leak_0e: f64,
}

impl Default for NvRates {
    fn default() -> Self {
        Self {
            orbital_dephasing: 1.0e7,
            radiative: 13.0,
            isc: 13.3,
            singlet: 0.56,
            ground_dephasing: 0.001,
            leak_0e: 0.0,
        }
    }
}

impl NvRates {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("orbital_dephasing", self.orbital_dephasing),
            ("radiative", self.radiative),
            ("isc", self.isc),
            ("singlet", self.singlet),
            ("ground_dephasing", self.ground_dephasing),
            ("leak_0e", self.leak_0e),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(
                    "rates",
                    format!("{name} must be finite and ≥ 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Half-width of the |0_g⟩ ↔ |0_e⟩ optical line, (γ + Γ_e + γ_φ)/2.
    pub fn optical_half_width(&self) -> f64 {
        0.5 * (self.radiative + self.orbital_dephasing + self.ground_dephasing)
    }
}

/// Optical pump: Rabi frequency, laser detuning ω₀ − ω and the derived
/// pump rate R = 2π(Ω_R/2)² δ^{(γ+Γ_e+γ_φ)/2}(ω₀ − ω), all in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    pub omega_r: f64,
    pub laser_detuning: f64,
    pub rate: f64,
}

impl PumpConfig {
    pub fn from_rabi(omega_r: f64, laser_detuning: f64, rates: &NvRates) -> Result<Self> {
        if !(omega_r >= 0.0 && omega_r.is_finite()) || !laser_detuning.is_finite() {
            return Err(invalid(
                "pump",
                format!("bad Rabi frequency {omega_r} or detuning {laser_detuning}"),
            ));
        }
        let hw = rates.optical_half_width();
        let rate = if omega_r == 0.0 {
            0.0
        } else {
            omega_r * omega_r * hw / (2.0 * (laser_detuning * laser_detuning + hw * hw))
        };
        Ok(Self {
            omega_r,
            laser_detuning,
            rate,
        })
    }

    /// Back-computes Ω_R from a requested pump rate.
    pub fn from_rate(rate: f64, laser_detuning: f64, rates: &NvRates) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid(
                "pump",
                format!("pump rate must be finite and ≥ 0, got {rate}"),
            ));
        }
        let hw = rates.optical_half_width();
        if hw <= 0.0 && rate > 0.0 {
            return Err(invalid("pump", "optical linewidth vanishes"));
        }
        let omega_r = if rate == 0.0 {
            0.0
        } else {
            (2.0 * rate * (laser_detuning * laser_detuning + hw * hw) / hw).sqrt()
        };
        Ok(Self {
            omega_r,
            laser_detuning,
            rate,
        })
    }
}

/// NV center configuration at a given field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvModel {
    pub levels: LevelScheme,
    pub rates: NvRates,
    pub pump: PumpConfig,
    pub field: MagneticField,
    pub consts: PhysConstants,
    /// Constant shift of Δ in MHz, e.g. from a polarized on-site nitrogen.
    pub detuning_shift: f64,
}

impl NvModel {
    /// Model with default rates and resonant pumping at rate `pump_rate` (MHz).
    pub fn new(levels: LevelScheme, b_mt: f64, pump_rate: f64) -> Result<Self> {
        let rates = NvRates::default();
        Ok(Self {
            levels,
            rates,
            pump: PumpConfig::from_rate(pump_rate, 0.0, &rates)?,
            field: MagneticField::from_millitesla(b_mt)?,
            consts: PhysConstants::default(),
            detuning_shift: 0.0,
        })
    }

    pub fn with_field(&self, b_mt: f64) -> Result<Self> {
        Ok(Self {
            field: MagneticField::from_millitesla(b_mt)?,
            ..*self
        })
    }

    pub fn with_pump_rate(&self, pump_rate: f64) -> Result<Self> {
        Ok(Self {
            pump: PumpConfig::from_rate(pump_rate, self.pump.laser_detuning, &self.rates)?,
            ..*self
        })
    }

    pub fn with_rates(&self, rates: NvRates) -> Result<Self> {
        rates.validate()?;
        Ok(Self {
            rates,
            pump: PumpConfig::from_rate(self.pump.rate, self.pump.laser_detuning, &rates)?,
            ..*self
        })
    }

    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    /// Δ in MHz including the configured shift.
    pub fn detuning(&self) -> f64 {
        detuning(&self.consts, self.field) + self.detuning_shift
    }

    /// Steady |0_g⟩ population (R + γ)/(2R + γ) of the pumped two-level cycle.
    pub fn ground_population(&self) -> f64 {
        let r = self.pump.rate;
        let g = self.rates.radiative;
        if r == 0.0 && g == 0.0 {
            return 1.0;
        }
        (r + g) / (2.0 * r + g)
    }

    /// Γ = γ_φ + R, the flip-flop resonance linewidth (MHz).
    pub fn flip_linewidth(&self) -> f64 {
        self.rates.ground_dephasing + self.pump.rate
    }
}
