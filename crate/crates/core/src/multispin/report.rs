use serde::{Deserialize, Serialize};

use super::SpinEnsemble;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// |R| in Å.
    pub r: f64,
    /// Polar angle from the N-V axis, degrees.
    pub theta_deg: f64,
    pub p: f64,
}

/// Mean polarization of the sites with r_lo ≤ |R| < r_hi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub count: usize,
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialReport {
    pub sites: Vec<SiteRecord>,
    /// Non-empty bins only, in order of radius.
    pub bins: Vec<RadiusBin>,
}

impl SpatialReport {
    /// Bins lying entirely below `r`.
    pub fn bins_within(&self, r: f64) -> impl Iterator<Item = &RadiusBin> {
        self.bins.iter().filter(move |b| b.r_hi <= r + 1e-9)
    }
}

pub fn spatial_report(ensemble: &SpinEnsemble, bin_width: f64) -> Result<SpatialReport> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(invalid(
            "bin_width",
            format!("must be positive, got {bin_width}"),
        ));
    }
    let sites: Vec<SiteRecord> = ensemble
        .sites
        .iter()
        .zip(&ensemble.polarizations)
        .map(|(s, p)| SiteRecord {
            x: s.position[0],
            y: s.position[1],
            z: s.position[2],
            r: s.radius(),
            theta_deg: s.angles().0.to_degrees(),
            p: *p,
        })
        .collect();
    let n_bins = sites
        .iter()
        .map(|s| (s.r / bin_width).floor() as usize + 1)
        .max()
        .unwrap_or(0);
    let mut sums = vec![(0usize, 0.0f64); n_bins];
    for s in &sites {
        let k = (s.r / bin_width).floor() as usize;
        sums[k].0 += 1;
        sums[k].1 += s.p;
    }
    let bins = sums
        .into_iter()
        .enumerate()
        .filter(|(_, (c, _))| *c > 0)
        .map(|(k, (count, sum))| RadiusBin {
            r_lo: k as f64 * bin_width,
            r_hi: (k + 1) as f64 * bin_width,
            count,
            mean_p: sum / count as f64,
        })
        .collect();
    Ok(SpatialReport { sites, bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePolarization {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub p: f64,
}

/// Serialized ensemble state at one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSnapshot {
    #[serde(rename = "B_mT")]
    pub b_mt: f64,
    pub p_bar: f64,
    #[serde(rename = "h_ss_MHz")]
    pub h_ss_mhz: f64,
    pub sites: Vec<SitePolarization>,
}

impl EnsembleSnapshot {
    pub fn new(b_mt: f64, ensemble: &SpinEnsemble) -> Self {
        Self {
            b_mt,
            p_bar: ensemble.mean_polarization(),
            h_ss_mhz: ensemble.overhauser().mean,
            sites: ensemble
                .sites
                .iter()
                .zip(&ensemble.polarizations)
                .map(|(s, p)| SitePolarization {
                    x: s.position[0],
                    y: s.position[1],
                    z: s.position[2],
                    p: *p,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multispin::test_util::random_sites;

    #[test]
    fn bins_average_by_radius() {
        let sites = random_sites(20, 3.0, 14.0, 1);
        let p: Vec<f64> = sites
            .iter()
            .map(|s| if s.radius() < 8.0 { 0.8 } else { -0.4 })
            .collect();
        let ens = SpinEnsemble::new(sites, p).unwrap();
        let rep = spatial_report(&ens, 4.0).unwrap();
        assert_eq!(rep.bins.iter().map(|b| b.count).sum::<usize>(), 20);
        for b in rep.bins_within(8.0) {
            assert_eq!(b.mean_p, 0.8);
        }
        assert!(spatial_report(&ens, 0.0).is_err());
    }

    #[test]
    fn snapshot_json_keys() {
        let ens = SpinEnsemble::new(random_sites(2, 3.0, 6.0, 2), vec![0.5, -0.5]).unwrap();
        let json = serde_json::to_value(EnsembleSnapshot::new(102.4, &ens)).unwrap();
        for key in ["B_mT", "p_bar", "h_ss_MHz", "sites"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["sites"][0].get("x").is_some() && json["sites"][0].get("p").is_some());
    }
}
