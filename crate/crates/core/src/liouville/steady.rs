use nalgebra::DVector;
use num_complex::Complex64;

use super::operators::{c, CMat};
use super::superop::{unvectorize, LiouvilleOperator};
use crate::error::{DnpError, Result};

/// Null-space uniqueness is checked by SVD only up to this Liouville dimension.
const SVD_CHECK_LIMIT: usize = 1024;

/// Ratio σ₂/σ₁ of the two smallest singular values below which the null
/// space is reported as degenerate.
const DEGENERACY_RATIO: f64 = 1e3;

/// A density operator on the NV (or joint) Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub matrix: CMat,
}

impl DensityOperator {
    pub fn new(matrix: CMat) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    /// ‖ρ − ρ†‖ (Frobenius).
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Tr[O ρ].
    pub fn expectation(&self, op: &CMat) -> Complex64 {
        (op * &self.matrix).trace()
    }

    pub fn is_finite(&self) -> bool {
        self.matrix
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Check uniqueness of the null vector with an SVD.
    pub check_uniqueness: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            check_uniqueness: true,
        }
    }
}

/// Two smallest singular values of the generator, ascending.
pub fn smallest_singular_values(l: &LiouvilleOperator) -> (f64, f64) {
    let mut sv: Vec<f64> = l.matrix.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    (sv[0], sv.get(1).cloned().unwrap_or(f64::INFINITY))
}

/// Unique steady state of `l`, with trace one.
pub fn steady_state(l: &LiouvilleOperator) -> Result<DensityOperator> {
    steady_state_with(l, SteadyOptions::default())
}

pub fn steady_state_with(l: &LiouvilleOperator, opts: SteadyOptions) -> Result<DensityOperator> {
    let m = l.dim;
    let n = m * m;
    if l.matrix
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(DnpError::NonFinite("generator"));
    }
    if opts.check_uniqueness && n <= SVD_CHECK_LIMIT {
        let (s1, s2) = smallest_singular_values(l);
        let floor = f64::EPSILON * l.norm();
        if s2 < DEGENERACY_RATIO * s1.max(floor) {
            return Err(DnpError::DegenerateSteadyState {
                smallest: s1,
                second: s2,
            });
        }
    }
    // replace the ⟨0|·|0⟩ equation by the trace constraint
    let mut a = l.matrix.clone();
    for col in 0..n {
        a[(0, col)] = c(0.0);
    }
    for i in 0..m {
        a[(0, i * m + i)] = c(1.0);
    }
    let mut b = DVector::zeros(n);
    b[0] = c(1.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| DnpError::SingularSystem("steady-state equations".into()))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        // a singular bordered system signals a degenerate null space
        let (s1, s2) = smallest_singular_values(l);
        return Err(DnpError::DegenerateSteadyState {
            smallest: s1,
            second: s2,
        });
    }
    let rho = unvectorize(&x, m);
    let mut herm = (&rho + rho.adjoint()) * c(0.5);
    let tr = herm.trace();
    herm /= tr;
    Ok(DensityOperator::new(herm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::operators::{build_dissipators, build_nv_hamiltonian};
    use crate::liouville::superop::superoperator_matrix;
    use crate::liouville::{LevelScheme, NvLevel, NvModel};

    fn nv_generator(model: &NvModel) -> LiouvilleOperator {
        superoperator_matrix(
            &build_nv_hamiltonian(model),
            &build_dissipators(model),
            None,
            vec![],
        )
    }

    #[test]
    fn five_level_ground_population() {
        let model = NvModel::new(LevelScheme::Five, 101.0, 0.2).unwrap();
        let l = nv_generator(&model);
        let p = steady_state(&l).unwrap();
        let g0 = LevelScheme::Five.index(NvLevel::G0).unwrap();
        let pg = p.population(g0);
        assert!((pg - 0.985).abs() < 1e-3, "{pg}");
        assert!((pg - model.ground_population()).abs() < 1e-9);
        assert!(l.apply(&p.matrix).norm() <= 1e-10 * l.norm());
        assert!((p.trace().re - 1.0).abs() < 1e-12);
        assert!(p.hermiticity_error() < 1e-12);
        assert!(p.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn saturated_pumping_equalizes() {
        let model = NvModel::new(LevelScheme::Five, 101.0, 1e4).unwrap();
        let p = steady_state(&nv_generator(&model)).unwrap();
        let s = LevelScheme::Five;
        let g = p.population(s.index(NvLevel::G0).unwrap());
        let e = p.population(s.index(NvLevel::E0).unwrap());
        assert!((g - 0.5).abs() < 2e-3 && (e - 0.5).abs() < 2e-3, "{g} {e}");
    }

    #[test]
    fn seven_level_initializes_into_zero() {
        let model = NvModel::new(LevelScheme::Seven, 99.0, 0.4).unwrap();
        let p = steady_state(&nv_generator(&model)).unwrap();
        let s = LevelScheme::Seven;
        let g0 = p.population(s.index(NvLevel::G0).unwrap());
        assert!(g0 > 0.95, "{g0}");
        for l in [NvLevel::Gm1, NvLevel::Gp1] {
            assert!(p.population(s.index(l).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn unpumped_steady_state_is_degenerate() {
        let model = NvModel::new(LevelScheme::Seven, 101.0, 0.0).unwrap();
        let err = steady_state(&nv_generator(&model)).unwrap_err();
        assert!(
            matches!(err, DnpError::DegenerateSteadyState { .. }),
            "{err:?}"
        );
    }
}
