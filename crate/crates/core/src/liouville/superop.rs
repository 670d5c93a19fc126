use num_complex::Complex64;

use super::operators::{c, CMat, Channel, I};

/// Matrix of a superoperator on the vectorized operator space.
///
/// Operators are vectorized row-major, |i⟩⟨j| ↦ index i·M + j, so that
/// `matrix[(k·M + l, i·M + j)] = ⟨k|L(|i⟩⟨j|)|l⟩`.
#[derive(Debug, Clone)]
pub struct LiouvilleOperator {
    /// Hilbert-space dimension M.
    pub dim: usize,
    pub matrix: CMat,
    pub labels: Vec<String>,
}

pub fn vectorize(op: &CMat) -> nalgebra::DVector<Complex64> {
    let m = op.nrows();
    nalgebra::DVector::from_fn(m * m, |k, _| op[(k / m, k % m)])
}

pub fn unvectorize(v: &nalgebra::DVector<Complex64>, m: usize) -> CMat {
    CMat::from_fn(m, m, |i, j| v[i * m + j])
}

/// A ⊗ 1: X ↦ A X.
pub fn left(a: &CMat) -> CMat {
    a.kronecker(&CMat::identity(a.nrows(), a.nrows()))
}

/// 1 ⊗ Bᵀ: X ↦ X B.
pub fn right(b: &CMat) -> CMat {
    CMat::identity(b.nrows(), b.nrows()).kronecker(&b.transpose())
}

/// −i[H, ·] + Σ_k rate_k D[op_k].
pub fn lindbladian(h: &CMat, channels: &[Channel]) -> CMat {
    let mut l = (left(h) - right(h)) * (-I);
    for ch in channels {
        let op = &ch.op;
        let ldl = op.adjoint() * op;
        let term = op.kronecker(&op.map(|z| z.conj())) - (left(&ldl) + right(&ldl)) * c(0.5);
        l += term * c(ch.rate);
    }
    l
}

impl LiouvilleOperator {
    pub fn new(dim: usize, matrix: CMat, labels: Vec<String>) -> Self {
        debug_assert_eq!(matrix.nrows(), dim * dim);
        Self {
            dim,
            matrix,
            labels,
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// Adds −i(n F_z ⊗ 1 − m 1 ⊗ F_zᵀ), the conditional longitudinal shift of L_{n,m}.
    pub fn with_shift(&self, n: f64, m: f64, fz: &CMat) -> Self {
        let shift = (left(fz) * c(n) - right(fz) * c(m)) * (-I);
        Self {
            dim: self.dim,
            matrix: &self.matrix + shift,
            labels: self.labels.clone(),
        }
    }

    /// L − s·1.
    pub fn minus_identity(&self, s: Complex64) -> CMat {
        let n = self.matrix.nrows();
        &self.matrix - CMat::identity(n, n) * s
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }
}

/// Matrix of L_NV, or of the conditional L_{n,m} when `shift = Some((n, m, F_z))`.
pub fn superoperator_matrix(
    h: &CMat,
    channels: &[Channel],
    shift: Option<(f64, f64, &CMat)>,
    labels: Vec<String>,
) -> LiouvilleOperator {
    let base = LiouvilleOperator::new(h.nrows(), lindbladian(h, channels), labels);
    match shift {
        Some((n, m, fz)) => base.with_shift(n, m, fz),
        None => base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::operators::{build_dissipators, build_nv_hamiltonian};
    use crate::liouville::{LevelScheme, NvModel};

    fn random_op(m: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(m, m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn matches_direct_action() {
        let model = NvModel::new(LevelScheme::Seven, 101.3, 0.4).unwrap();
        let h = build_nv_hamiltonian(&model);
        let ch = build_dissipators(&model);
        let l = superoperator_matrix(&h, &ch, None, vec![]);
        let x = random_op(7, 1);
        let mut direct = (&h * &x - &x * &h) * (-I);
        for k in &ch {
            let a = &k.op;
            let ad = a.adjoint();
            direct += (a * &x * &ad - (&ad * a * &x + &x * &ad * a) * c(0.5)) * c(k.rate);
        }
        let via = l.apply(&x);
        assert!((via - &direct).norm() <= 1e-12 * direct.norm().max(1.0) * 1e3);
    }

    #[test]
    fn trace_preserving() {
        let model = NvModel::new(LevelScheme::Seven, 102.0, 0.4).unwrap();
        let l = superoperator_matrix(
            &build_nv_hamiltonian(&model),
            &build_dissipators(&model),
            None,
            vec![],
        );
        for seed in 0..20 {
            let x = random_op(7, seed);
            let tr = l.apply(&x).trace();
            assert!(tr.norm() <= 1e-10 * l.norm(), "{tr}");
        }
    }

    #[test]
    fn zero_fz_shift_is_identity() {
        let model = NvModel::new(LevelScheme::Five, 102.0, 0.4).unwrap();
        let h = build_nv_hamiltonian(&model);
        let ch = build_dissipators(&model);
        let plain = superoperator_matrix(&h, &ch, None, vec![]);
        let fz = CMat::zeros(5, 5);
        let shifted = superoperator_matrix(&h, &ch, Some((0.5, -0.5, &fz)), vec![]);
        assert_eq!(plain.matrix, shifted.matrix);
    }
}
