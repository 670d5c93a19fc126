//! Detunings and energy mismatches of the NV–nucleus flip-flop processes.
//!
//! All values are ordinary frequencies in MHz.

use super::constants::{MagneticField, PhysConstants};
use super::site::{check_transition, Direction};
use crate::error::Result;

/// Δ = D_gs − γ_e B, the |−1_g⟩–|0_g⟩ separation.
pub fn detuning(consts: &PhysConstants, b: MagneticField) -> f64 {
    consts.d_gs - consts.gamma_e * b.millitesla()
}

/// Δ_N = 2γ_N B − A_zz, the separation between the two flip-flop resonances.
pub fn delta_n(b: MagneticField, a_zz: f64, gamma_n: f64) -> f64 {
    2.0 * b.nuclear_zeeman(gamma_n) - a_zz
}

/// Energy mismatch of |0_g⟩|m⟩ → |−1_g⟩|m ± 1⟩ for the given detuning Δ.
///
/// Up:   Δ_{m+1←m} = Δ + γ_N B − (m+1) A_zz
/// Down: Δ_{m−1←m} = Δ − γ_N B − (m−1) A_zz
pub fn mismatch_from_detuning(
    delta: f64,
    two_i: u32,
    two_m: i32,
    dir: Direction,
    b: MagneticField,
    a_zz: f64,
    gamma_n: f64,
) -> Result<f64> {
    check_transition(two_i, two_m, dir)?;
    let s = dir.sign() as f64;
    let m_target = (two_m as f64) / 2.0 + s;
    Ok(delta + s * b.nuclear_zeeman(gamma_n) - m_target * a_zz)
}

/// Energy mismatch at field `b` using Δ = D_gs − γ_e B.
pub fn energy_mismatch(
    consts: &PhysConstants,
    two_i: u32,
    two_m: i32,
    dir: Direction,
    b: MagneticField,
    a_zz: f64,
    gamma_n: f64,
) -> Result<f64> {
    mismatch_from_detuning(detuning(consts, b), two_i, two_m, dir, b, a_zz, gamma_n)
}

/// Field (mT) at which the spin-1/2 flip in `dir` is resonant, i.e. Δ = ∓Δ_N/2.
///
/// Solved in closed form since Δ and Δ_N are both linear in B.
pub fn resonance_field(consts: &PhysConstants, dir: Direction, a_zz: f64, gamma_n: f64) -> f64 {
    // D_gs − γ_e B ± (γ_N' B − A_zz/2) = 0 with γ_N' in MHz/mT
    let s = dir.sign() as f64;
    let gn = gamma_n * 1e-3;
    (consts.d_gs - s * a_zz / 2.0) / (consts.gamma_e - s * gn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(b: f64) -> MagneticField {
        MagneticField::from_millitesla(b).unwrap()
    }

    #[test]
    fn delta_n_examples() {
        let c = PhysConstants::default();
        let first = delta_n(field(102.4), 129.0, c.gamma_n13c);
        assert!((first - (-131.192)).abs() < 1e-3, "{first}");
        let weak = delta_n(field(102.4), 0.0, c.gamma_n13c);
        assert!((weak - (-2.192384)).abs() < 1e-6);
        assert_eq!(delta_n(field(0.0), 0.0, c.gamma_n13c), 0.0);
    }

    #[test]
    fn delta_n_is_linear() {
        let g = -10.705;
        let a = delta_n(field(50.0), 3.0, g);
        let b = delta_n(field(100.0), 3.0, g);
        let z = delta_n(field(0.0), 3.0, g);
        assert!((b - z - 2.0 * (a - z)).abs() < 1e-12);
        let a2 = delta_n(field(50.0), 6.0, g);
        assert!((a2 - a + 3.0).abs() < 1e-12);
    }

    #[test]
    fn detuning_examples() {
        let c = PhysConstants::default();
        assert!(detuning(&c, field(c.gslac_field())).abs() < 1e-9);
        assert!((detuning(&c, field(100.0)) - 67.5).abs() < 1e-9);
        assert!((detuning(&c, field(105.0)) + 72.625).abs() < 1e-9);
        let g = c.gslac_field();
        assert!((102.3..=102.5).contains(&g));
    }

    #[test]
    fn spin_half_mismatches() {
        let c = PhysConstants::default();
        let b = field(101.0);
        let d = detuning(&c, b);
        let dn = delta_n(b, 0.7, c.gamma_n13c);
        let up = energy_mismatch(&c, 1, -1, Direction::Up, b, 0.7, c.gamma_n13c).unwrap();
        let down = energy_mismatch(&c, 1, 1, Direction::Down, b, 0.7, c.gamma_n13c).unwrap();
        assert!((up - (d + dn / 2.0)).abs() < 1e-12);
        assert!((down - (d - dn / 2.0)).abs() < 1e-12);
        assert!(energy_mismatch(&c, 1, 1, Direction::Up, b, 0.7, c.gamma_n13c).is_err());
        assert!(energy_mismatch(&c, 1, 0, Direction::Up, b, 0.7, c.gamma_n13c).is_err());
    }

    #[test]
    fn first_shell_resonances() {
        let c = PhysConstants::default();
        let b_plus = resonance_field(&c, Direction::Up, 129.0, c.gamma_n13c);
        let b_minus = resonance_field(&c, Direction::Down, 129.0, c.gamma_n13c);
        assert!((b_plus - 100.07).abs() < 0.005, "{b_plus}");
        assert!((b_minus - 104.75).abs() < 0.005, "{b_minus}");
        let up =
            energy_mismatch(&c, 1, -1, Direction::Up, field(b_plus), 129.0, c.gamma_n13c).unwrap();
        assert!(up.abs() < 1e-9);
    }

    #[test]
    fn weak_coupling_resonances() {
        let c = PhysConstants::default();
        let b_plus = resonance_field(&c, Direction::Up, 0.0, c.gamma_n13c);
        let b_minus = resonance_field(&c, Direction::Down, 0.0, c.gamma_n13c);
        assert!((b_plus - 102.37).abs() < 0.005);
        assert!((b_minus - 102.45).abs() < 0.005);
    }
}
