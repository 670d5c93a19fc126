use num_complex::Complex64;

use super::operators::CMat;
use super::steady::DensityOperator;
use super::superop::{unvectorize, vectorize, LiouvilleOperator};
use crate::error::{invalid, DnpError, Result};

/// Relative tolerance for reusing the propagator of the previous step.
const STEP_REUSE_TOL: f64 = 1e-12;

/// Propagates `rho0`, given at `t_grid[0]`, to every time in `t_grid` (μs).
///
/// Each interval uses the exact propagator exp(L·dt), computed by
/// scaling-and-squaring with a Padé approximant; on uniform grids the
/// propagator is computed once.
pub fn evolve(
    l: &LiouvilleOperator,
    rho0: &DensityOperator,
    t_grid: &[f64],
) -> Result<Vec<DensityOperator>> {
    if !rho0.is_finite() {
        return Err(DnpError::NonFinite("initial state"));
    }
    if l.matrix
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(DnpError::NonFinite("generator"));
    }
    if rho0.dim() != l.dim {
        return Err(DnpError::LengthMismatch {
            expected: l.dim,
            got: rho0.dim(),
        });
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("t_grid", "times must be finite and non-decreasing"));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    if t_grid.is_empty() {
        return Ok(out);
    }
    let mut v = vectorize(&rho0.matrix);
    out.push(rho0.clone());
    let mut cached: Option<(f64, CMat)> = None;
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= STEP_REUSE_TOL * dt);
            if !reuse {
                let prop = (&l.matrix * Complex64::new(dt, 0.0)).exp();
                cached = Some((dt, restore_trace(prop, l.dim)));
            }
            let prop = &cached.as_ref().expect("propagator cached").1;
            v = prop * v;
        }
        let rho = unvectorize(&v, l.dim);
        let state = DensityOperator::new(rho);
        if !state.is_finite() {
            return Err(DnpError::NonFinite("trajectory"));
        }
        out.push(state);
    }
    Ok(out)
}

/// Rank-one correction enforcing t·P = t for the trace functional t.
///
/// With Γ_e ≫ other rates the squaring phase loses about 1e-9 of the trace
/// per step; the generator satisfies t·L = 0 exactly, so the propagator must too.
fn restore_trace(mut prop: CMat, m: usize) -> CMat {
    let n = m * m;
    let diag: Vec<usize> = (0..m).map(|i| i * m + i).collect();
    // defect d = t − t·P
    let defect: Vec<Complex64> = (0..n)
        .map(|col| {
            let tp: Complex64 = diag.iter().map(|&r| prop[(r, col)]).sum();
            let t = if col % (m + 1) == 0 { 1.0 } else { 0.0 };
            Complex64::new(t, 0.0) - tp
        })
        .collect();
    let w = 1.0 / m as f64;
    for &r in &diag {
        for col in 0..n {
            prop[(r, col)] += defect[col] * w;
        }
    }
    prop
}

/// Uniform grid of `steps + 1` points on [0, t_max].
pub fn uniform_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| t_max * k as f64 / steps.max(1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::operators::{build_dissipators, build_nv_hamiltonian, c};
    use crate::liouville::steady::steady_state;
    use crate::liouville::superop::superoperator_matrix;
    use crate::liouville::{LevelScheme, NvLevel, NvModel};

    #[test]
    fn zero_generator_is_constant() {
        let l = LiouvilleOperator::new(3, CMat::zeros(9, 9), vec![]);
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = c(0.3);
        m[(1, 1)] = c(0.7);
        let rho = DensityOperator::new(m);
        let traj = evolve(&l, &rho, &uniform_grid(5.0, 10)).unwrap();
        assert_eq!(traj.len(), 11);
        for s in traj {
            assert!((&s.matrix - &rho.matrix).norm() < 1e-15);
        }
    }

    #[test]
    fn relaxes_to_steady_state_and_preserves_trace() {
        let model = NvModel::new(LevelScheme::Seven, 101.0, 0.4).unwrap();
        let l = superoperator_matrix(
            &build_nv_hamiltonian(&model),
            &build_dissipators(&model),
            None,
            vec![],
        );
        let ss = steady_state(&l).unwrap();
        let s = LevelScheme::Seven;
        let start = s.index(NvLevel::Gm1).unwrap();
        let mut m = CMat::zeros(7, 7);
        m[(start, start)] = c(1.0);
        let rho0 = DensityOperator::new(m);
        let traj = evolve(&l, &rho0, &uniform_grid(60.0, 200)).unwrap();
        for st in &traj {
            assert!(
                (st.trace().re - 1.0).abs() < 1e-9,
                "{}",
                st.trace().re - 1.0
            );
            assert!(st.trace().im.abs() < 1e-9);
            assert!(st.hermiticity_error() < 1e-9);
        }
        let last = traj.last().unwrap();
        assert!((&last.matrix - &ss.matrix).norm() < 1e-6);
        // the steady state is a fixed point
        let fixed = evolve(&l, &ss, &uniform_grid(10.0, 100)).unwrap();
        assert!((&fixed.last().unwrap().matrix - &ss.matrix).norm() < 1e-8);
    }

    #[test]
    fn rejects_non_finite_input() {
        let l = LiouvilleOperator::new(2, CMat::zeros(4, 4), vec![]);
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN);
        assert!(evolve(&l, &DensityOperator::new(m), &[0.0, 1.0]).is_err());
    }
}
