use dnp_core::liouville::{LevelScheme, NvModel};
use dnp_core::multispin::{
    exact_joint_steady, meanfield_fixed_point, meanfield_sweep, FixedPointOptions,
};
use dnp_core::physmodel::{
    export_lattice_json, import_lattice_json, sample_lattice, shell_positions, LatticeParams,
    NucleusSite, PhysConstants,
};
use proptest::prelude::*;

fn sites_from(indices: &[usize]) -> Vec<NucleusSite> {
    let shell = shell_positions(3.0, 9.0);
    let k = PhysConstants::default();
    indices
        .iter()
        .map(|&i| NucleusSite::dipolar(shell[i % shell.len()], &k).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_state_is_a_distribution(
        idx in proptest::collection::btree_set(0usize..300, 1..5),
        b in 102.2f64..102.6,
        pump in 0.05f64..1.0,
    ) {
        let idx: Vec<usize> = idx.into_iter().collect();
        let sites = sites_from(&idx);
        let model = NvModel::new(LevelScheme::Seven, b, pump).unwrap();
        let st = exact_joint_steady(&sites, &model, 1.0).unwrap();
        let total: f64 = st.configs.iter().map(|c| c.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(st.configs.iter().all(|c| c.probability >= -1e-10));
        prop_assert!(st.polarizations.iter().all(|p| p.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn meanfield_polarizations_bounded(
        idx in proptest::collection::btree_set(0usize..300, 1..8),
        b in 102.2f64..102.6,
        gamma_dep in 0.0f64..100.0,
    ) {
        let idx: Vec<usize> = idx.into_iter().collect();
        let sites = sites_from(&idx);
        let model = NvModel::new(LevelScheme::Seven, b, 0.2).unwrap();
        let n = sites.len();
        let sol = meanfield_fixed_point(
            &sites, &model, gamma_dep, &vec![0.0; n], &FixedPointOptions::default(),
        ).unwrap();
        prop_assert!(sol.residual < 1e-6);
        prop_assert!(sol.ensemble.polarizations.iter().all(|p| p.abs() <= 1.0));
    }
}

#[test]
fn single_nucleus_meanfield_equals_exact_along_sweep() {
    let sites = sites_from(&[17]);
    let model = NvModel::new(LevelScheme::Seven, 102.2, 0.2).unwrap();
    let fields: Vec<f64> = (0..21).map(|k| 102.2 + 0.02 * k as f64).collect();
    let mf = meanfield_sweep(&sites, &model, 1.0, &fields, &FixedPointOptions::default()).unwrap();
    for (b, s) in fields.iter().zip(&mf) {
        let ex = exact_joint_steady(&sites, &model.with_field(*b).unwrap(), 1.0).unwrap();
        assert!(
            (s.mean_polarization() - ex.mean_polarization()).abs() < 1e-5,
            "{b}"
        );
    }
}

#[test]
fn lattice_file_round_trip_preserves_solution() {
    let k = PhysConstants::default();
    let params = LatticeParams {
        seed: 4,
        r_min: 4.0,
        r_max: 14.0,
        abundance: 0.05,
    };
    let sites = sample_lattice(&params, &k).unwrap();
    let back = import_lattice_json(&export_lattice_json(&sites), &k).unwrap();
    let model = NvModel::new(LevelScheme::Seven, 102.37, 0.2).unwrap();
    let opts = FixedPointOptions::default();
    let zeros = vec![0.0; sites.len()];
    let a = meanfield_fixed_point(&sites, &model, 1.0, &zeros, &opts).unwrap();
    let b = meanfield_fixed_point(&back, &model, 1.0, &zeros, &opts).unwrap();
    assert_eq!(a.ensemble.polarizations, b.ensemble.polarizations);
}
