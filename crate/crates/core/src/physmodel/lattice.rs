//! Diamond-lattice sampling of ¹³C sites around the vacancy.
//!
//! The vacancy sits at the origin of a conventional cubic cell; the
//! nitrogen occupies the neighbouring site along [111]. Coordinates are
//! rotated so that [111] is the +z (N-V) axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constants::PhysConstants;
use super::site::{NucleusSite, Species};
use super::tensor::{dipolar_tensor, norm, HfiTensor};
use crate::error::{invalid, DnpError, Result};

/// Conventional cubic lattice constant of diamond (Å).
pub const LATTICE_CONSTANT: f64 = 3.567;

const BASIS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
    [0.25, 0.25, 0.25],
    [0.25, 0.75, 0.75],
    [0.75, 0.25, 0.75],
    [0.75, 0.75, 0.25],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub seed: u64,
    /// Inner radius (Å); the default excludes the first shell.
    pub r_min: f64,
    pub r_max: f64,
    pub abundance: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            seed: 0,
            r_min: 3.0,
            r_max: 25.0,
            abundance: 0.011,
        }
    }
}

/// Rotates cubic coordinates into the frame with z ∥ [111].
fn to_nv_frame(v: [f64; 3]) -> [f64; 3] {
    let s2 = std::f64::consts::SQRT_2;
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        (v[0] + v[1] - 2.0 * v[2]) / s6,
        (-v[0] + v[1]) / s2,
        (v[0] + v[1] + v[2]) / s3,
    ]
}

/// All carbon positions (Å, N-V frame) with r_min ≤ |R| ≤ r_max, in a
/// fixed enumeration order.
pub fn shell_positions(r_min: f64, r_max: f64) -> Vec<[f64; 3]> {
    let a = LATTICE_CONSTANT;
    let n = (r_max / a).ceil() as i64 + 1;
    let nitrogen = [0.25 * a, 0.25 * a, 0.25 * a];
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in BASIS.iter() {
                    let p = [
                        (i as f64 + b[0]) * a,
                        (j as f64 + b[1]) * a,
                        (k as f64 + b[2]) * a,
                    ];
                    let r = norm(p);
                    if r == 0.0 || p == nitrogen {
                        continue;
                    }
                    if r >= r_min && r <= r_max {
                        out.push(to_nv_frame(p));
                    }
                }
            }
        }
    }
    out
}

/// Draws ¹³C nuclei on the lattice shell with the given natural abundance.
///
/// Each site in the shell is independently occupied with probability
/// `abundance`, using a ChaCha8 stream seeded by `seed`.
pub fn sample_lattice(params: &LatticeParams, consts: &PhysConstants) -> Result<Vec<NucleusSite>> {
    let LatticeParams {
        seed,
        r_min,
        r_max,
        abundance,
    } = *params;
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(invalid(
            "r_min/r_max",
            format!("need 0 < r_min < r_max, got {r_min}, {r_max}"),
        ));
    }
    if !(0.0..=1.0).contains(&abundance) {
        return Err(invalid(
            "abundance",
            format!("must lie in [0, 1], got {abundance}"),
        ));
    }
    let shell = shell_positions(r_min, r_max);
    if shell.is_empty() {
        return Err(DnpError::EmptyShell {
            r_min,
            r_max,
            site_count: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites = Vec::new();
    for p in shell {
        // always draw so that the stream position does not depend on abundance
        let u: f64 = rng.gen();
        if u < abundance {
            sites.push(NucleusSite::dipolar(p, consts)?);
        }
    }
    Ok(sites)
}

/// One record of the lattice JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRecord {
    #[serde(rename = "x_A")]
    pub x_a: f64,
    #[serde(rename = "y_A")]
    pub y_a: f64,
    #[serde(rename = "z_A")]
    pub z_a: f64,
    pub species: Species,
    #[serde(rename = "tensor_MHz")]
    pub tensor_mhz: [[f64; 3]; 3],
}

impl From<&NucleusSite> for LatticeRecord {
    fn from(s: &NucleusSite) -> Self {
        Self {
            x_a: s.position[0],
            y_a: s.position[1],
            z_a: s.position[2],
            species: s.species,
            tensor_mhz: s.ground.a,
        }
    }
}

impl LatticeRecord {
    pub fn into_site(self, consts: &PhysConstants) -> NucleusSite {
        NucleusSite {
            position: [self.x_a, self.y_a, self.z_a],
            species: self.species,
            ground: HfiTensor::new(self.tensor_mhz),
            excited: None,
            gamma_n: self.species.gamma_n(consts),
        }
    }
}

pub fn export_lattice_json(sites: &[NucleusSite]) -> String {
    let records: Vec<LatticeRecord> = sites.iter().map(LatticeRecord::from).collect();
    serde_json::to_string_pretty(&records).expect("lattice records serialize")
}

pub fn import_lattice_json(json: &str, consts: &PhysConstants) -> Result<Vec<NucleusSite>> {
    let records: Vec<LatticeRecord> =
        serde_json::from_str(json).map_err(|e| invalid("lattice json", e.to_string()))?;
    Ok(records.into_iter().map(|r| r.into_site(consts)).collect())
}

/// Recomputes the dipolar tensor of every site, e.g. after editing positions.
pub fn redipolarize(sites: &mut [NucleusSite], consts: &PhysConstants) -> Result<()> {
    for s in sites {
        s.ground = dipolar_tensor(s.position, consts)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbours() {
        // the first shell: three carbons at a√3/4, the fourth neighbour is N
        let shell = shell_positions(1.0, 1.6);
        assert_eq!(shell.len(), 3);
        for p in &shell {
            assert!((norm(*p) - LATTICE_CONSTANT * 3f64.sqrt() / 4.0).abs() < 1e-12);
            // below the vacancy, opposite to the nitrogen
            assert!(p[2] < 0.0);
        }
    }

    #[test]
    fn full_abundance_returns_every_site() {
        let c = PhysConstants::default();
        let p = LatticeParams {
            seed: 3,
            r_min: 2.0,
            r_max: 4.0,
            abundance: 1.0,
        };
        let sites = sample_lattice(&p, &c).unwrap();
        assert_eq!(sites.len(), shell_positions(2.0, 4.0).len());
        assert!(!sites.is_empty());
    }

    #[test]
    fn zero_abundance_is_empty() {
        let c = PhysConstants::default();
        let p = LatticeParams {
            abundance: 0.0,
            ..Default::default()
        };
        assert!(sample_lattice(&p, &c).unwrap().is_empty());
    }

    #[test]
    fn empty_shell_is_an_error() {
        let c = PhysConstants::default();
        let p = LatticeParams {
            seed: 0,
            r_min: 0.1,
            r_max: 0.2,
            abundance: 1.0,
        };
        assert!(matches!(
            sample_lattice(&p, &c),
            Err(DnpError::EmptyShell { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = PhysConstants::default();
        let p = LatticeParams {
            seed: 42,
            ..Default::default()
        };
        let a = sample_lattice(&p, &c).unwrap();
        let b = sample_lattice(&p, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(export_lattice_json(&a), export_lattice_json(&b));
    }

    #[test]
    fn site_count_statistics() {
        let c = PhysConstants::default();
        let shell = shell_positions(3.0, 15.0).len() as f64;
        let abundance = 0.011;
        let seeds = 200;
        let total: usize = (0..seeds)
            .map(|seed| {
                sample_lattice(
                    &LatticeParams {
                        seed,
                        r_min: 3.0,
                        r_max: 15.0,
                        abundance,
                    },
                    &c,
                )
                .unwrap()
                .len()
            })
            .sum();
        let mean = total as f64 / seeds as f64;
        let expected = shell * abundance;
        let sd_of_mean = (shell * abundance * (1.0 - abundance) / seeds as f64).sqrt();
        assert!(
            (mean - expected).abs() < 5.0 * sd_of_mean,
            "{mean} vs {expected}"
        );
    }

    #[test]
    fn json_round_trip() {
        let c = PhysConstants::default();
        let sites = sample_lattice(
            &LatticeParams {
                seed: 7,
                r_min: 3.0,
                r_max: 10.0,
                abundance: 0.2,
            },
            &c,
        )
        .unwrap();
        let json = export_lattice_json(&sites);
        assert!(json.contains("tensor_MHz"));
        let back = import_lattice_json(&json, &c).unwrap();
        assert_eq!(back, sites);
    }
}
