use nalgebra::DMatrix;
use num_complex::Complex64;

use super::model::NvModel;
use super::operators::{
    build_dissipators, build_nv_hamiltonian, c, CMat, Channel, HfiCoupling, KnightField, I,
};
use super::steady::DensityOperator;
use super::superop::{lindbladian, LiouvilleOperator};
use crate::error::{DnpError, Result};
use crate::physmodel::{angular, NucleusSite};

/// Cap on the Liouville-space dimension of the joint generator.
pub const JOINT_LIOUVILLE_CAP: usize = 10_000;
pub const JOINT_MAX_SITES: usize = 2;

/// (I_x, I_y, I_z) for spin 2I, basis index k ↔ m = I − k.
pub fn nuclear_spin_matrices(two_i: u32) -> [CMat; 3] {
    let d = two_i as usize + 1;
    let spin = two_i as f64 / 2.0;
    let mut iz = CMat::zeros(d, d);
    let mut iplus = CMat::zeros(d, d);
    for k in 0..d {
        let m = spin - k as f64;
        iz[(k, k)] = c(m);
        if k > 0 {
            // ⟨m+1|I_+|m⟩
            iplus[(k - 1, k)] = c((spin * (spin + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let iminus = iplus.adjoint();
    let ix = (&iplus + &iminus) * c(0.5);
    let iy = (&iplus - &iminus) * (-I * 0.5);
    [ix, iy, iz]
}

fn identity(d: usize) -> CMat {
    DMatrix::identity(d, d)
}

/// Exact generator on the NV ⊗ nuclei space, NV index major.
#[derive(Debug, Clone)]
pub struct JointSystem {
    pub model: NvModel,
    pub sites: Vec<NucleusSite>,
    pub nuclear_dims: Vec<usize>,
    pub hamiltonian: CMat,
    pub generator: LiouvilleOperator,
    iz: Vec<CMat>,
}

impl JointSystem {
    pub fn nv_dim(&self) -> usize {
        self.model.dim()
    }

    pub fn nuclear_dim(&self) -> usize {
        self.nuclear_dims.iter().product()
    }

    /// Polarization ⟨I_z⟩/I of nucleus `i` (= 2⟨I_z⟩ for spin 1/2).
    pub fn polarization(&self, rho: &DensityOperator, i: usize) -> f64 {
        let spin = self.sites[i].two_i() as f64 / 2.0;
        rho.expectation(&self.iz[i]).re / spin
    }

    /// Partial trace over the nuclei.
    pub fn nv_reduced(&self, rho: &DensityOperator) -> CMat {
        let m = self.nv_dim();
        let d = self.nuclear_dim();
        CMat::from_fn(m, m, |a, b| {
            (0..d)
                .map(|k| rho.matrix[(a * d + k, b * d + k)])
                .sum::<Complex64>()
        })
    }

    pub fn nv_populations(&self, rho: &DensityOperator) -> Vec<f64> {
        let r = self.nv_reduced(rho);
        (0..r.nrows()).map(|i| r[(i, i)].re).collect()
    }

    /// `nv` ⊗ (maximally mixed nuclei).
    pub fn unpolarized_state(&self, nv: &DensityOperator) -> DensityOperator {
        let d = self.nuclear_dim();
        DensityOperator::new(nv.matrix.kronecker(&(identity(d) * c(1.0 / d as f64))))
    }
}

/// Builds the exact joint Lindblad generator for up to two nuclei, with the
/// full hyperfine tensors and the nuclear Zeeman term γ_N B I_z.
pub fn joint_lindblad(
    model: &NvModel,
    sites: &[NucleusSite],
    include_excited_hfi: bool,
) -> Result<JointSystem> {
    let m = model.dim();
    let nuclear_dims: Vec<usize> = sites.iter().map(|s| s.species.multiplicity()).collect();
    let d: usize = nuclear_dims.iter().product();
    let liouville_dim = (m * d) * (m * d);
    if sites.len() > JOINT_MAX_SITES {
        return Err(DnpError::DimensionCap {
            dim: sites.len(),
            cap: JOINT_MAX_SITES,
        });
    }
    if liouville_dim > JOINT_LIOUVILLE_CAP {
        return Err(DnpError::DimensionCap {
            dim: liouville_dim,
            cap: JOINT_LIOUVILLE_CAP,
        });
    }

    // embeds a nuclear operator acting on site `i`
    let embed_nuclear = |i: usize, op: &CMat| -> CMat {
        let before: usize = nuclear_dims[..i].iter().product();
        let after: usize = nuclear_dims[i + 1..].iter().product();
        identity(before).kronecker(op).kronecker(&identity(after))
    };

    let h_nv = build_nv_hamiltonian(model);
    let mut h = h_nv.kronecker(&identity(d));
    let mut iz_ops = Vec::with_capacity(sites.len());
    for (i, site) in sites.iter().enumerate() {
        let spins = nuclear_spin_matrices(site.two_i());
        let zeeman = angular(model.field.nuclear_zeeman(site.gamma_n));
        let iz = embed_nuclear(i, &spins[2]);
        h += identity(m).kronecker(&(&iz * c(zeeman)));
        let f = KnightField::new(model.levels, site, HfiCoupling::Full, include_excited_hfi);
        let fx = (&f.plus + &f.minus) * c(0.5);
        let fy = (&f.plus - &f.minus) * (-I * 0.5);
        for (fa, ia) in [(&fx, &spins[0]), (&fy, &spins[1]), (&f.z, &spins[2])] {
            h += fa.kronecker(&embed_nuclear(i, ia));
        }
        iz_ops.push(identity(m).kronecker(&iz));
    }

    let channels: Vec<Channel> = build_dissipators(model)
        .into_iter()
        .map(|ch| Channel {
            op: ch.op.kronecker(&identity(d)),
            ..ch
        })
        .collect();
    let generator = LiouvilleOperator::new(m * d, lindbladian(&h, &channels), vec![]);
    Ok(JointSystem {
        model: *model,
        sites: sites.to_vec(),
        nuclear_dims,
        hamiltonian: h,
        generator,
        iz: iz_ops,
    })
}
