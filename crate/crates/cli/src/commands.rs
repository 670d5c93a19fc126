use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use dnp_core::liouville::{uniform_grid, NvModel};
use dnp_core::multispin::{
    exact_joint_steady, meanfield_fixed_point, meanfield_sweep, spatial_report, EnsembleSnapshot,
    FixedPointOptions, RadiusBin, SpinEnsemble,
};
use dnp_core::physmodel::{delta_n, per_us_to_per_s, NucleusSite, PhysConstants};
use dnp_core::rates::{rate_pair, RateMethod};
use dnp_core::singlespin::{
    asymptotic_relaxation_time, lindblad_polarization, lindblad_trajectory,
    polarization_trajectory, DnpResult,
};

use crate::config::{Method, RunConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};

fn rate_method(m: Method) -> Option<RateMethod> {
    match m {
        Method::Resolvent => Some(RateMethod::Resolvent),
        Method::Analytic => Some(RateMethod::Analytic5),
        Method::Golden => Some(RateMethod::GoldenRule),
        _ => None,
    }
}

fn methods(cfg: &RunConfig, default: Method) -> Vec<Method> {
    if !cfg.methods.is_empty() {
        cfg.methods.clone()
    } else {
        vec![cfg.method.unwrap_or(default)]
    }
}

fn single_site(sites: &[NucleusSite], command: &str) -> Result<NucleusSite, CliError> {
    match sites {
        [s] => Ok(s.clone()),
        _ => Err(CliError::usage(format!(
            "{command} with a rate method needs exactly one nucleus, the config gives {}",
            sites.len()
        ))),
    }
}

/// W₊, W₋, p_ss and mismatch data per field point, one column group per method.
pub fn cmd_rates(cfg: &RunConfig) -> Result<Table, CliError> {
    let site = single_site(&cfg.nuclei.sites()?, "rates")?;
    let ms = methods(cfg, Method::Golden);
    let rms: Vec<RateMethod> = ms
        .iter()
        .map(|m| {
            rate_method(*m).ok_or_else(|| {
                CliError::usage(format!("rates: method `{}` is not a rate method", m.name()))
            })
        })
        .collect::<Result<_, _>>()?;
    let opts = cfg.model.rate_options();
    let mut headers = vec![
        "B_mT".to_string(),
        "Delta_MHz".into(),
        "Delta_N_MHz".into(),
        "Gamma_MHz".into(),
    ];
    for m in &ms {
        for col in ["W_plus_per_s", "W_minus_per_s", "p_ss"] {
            headers.push(format!("{col}_{}", m.name()));
        }
    }
    if ms.len() > 1 {
        headers.push("rel_discrepancy".into());
    }
    let fields = cfg.field.values()?;
    let rows: Vec<Vec<Cell>> = fields
        .par_iter()
        .map(|&b| {
            let model = cfg.model.build(b, None)?;
            let mut row: Vec<Cell> = vec![
                b.into(),
                model.detuning().into(),
                delta_n(model.field, site.ground.a_zz(), site.gamma_n).into(),
                model.flip_linewidth().into(),
            ];
            let mut totals = vec![];
            for &rm in &rms {
                let pair = rate_pair(&model, &site, rm, opts)?;
                row.push(per_us_to_per_s(pair.w_plus).into());
                row.push(per_us_to_per_s(pair.w_minus).into());
                row.push(pair.polarization().into());
                totals.push(pair.total());
            }
            if totals.len() > 1 {
                let (a, b) = (totals[0], totals[1]);
                let scale = a.abs().max(b.abs());
                row.push(if scale > 0.0 {
                    ((a - b).abs() / scale).into()
                } else {
                    0.0.into()
                });
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(headers);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn sweep_row(
    cfg: &RunConfig,
    method: Method,
    model: &NvModel,
    sites: &[NucleusSite],
) -> Result<[Cell; 5], CliError> {
    if method == Method::Lindblad {
        let p = lindblad_polarization(model, sites, cfg.model.include_excited_hfi)?;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        return Ok([
            mean.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    let rm = rate_method(method).ok_or_else(|| {
        CliError::usage(format!(
            "sweep: method `{}` belongs to the multispin command",
            method.name()
        ))
    })?;
    let site = single_site(sites, "sweep")?;
    let pair = rate_pair(model, &site, rm, cfg.model.rate_options())?;
    let res = DnpResult::from_pair(&pair, cfg.model.gamma_dep_per_s, model)?;
    Ok([
        res.p_ss.into(),
        per_us_to_per_s(pair.total()).into(),
        per_us_to_per_s(pair.w_plus).into(),
        per_us_to_per_s(pair.w_minus).into(),
        res.markovian_valid.into(),
    ])
}

// nuclei for one sweep point; θ in map mode
type SitesAt = dyn Fn(Option<f64>) -> Result<Vec<NucleusSite>, CliError> + Sync;

/// Steady polarization per field point, or per (field, θ) in map mode.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = methods(cfg, Method::Golden)[0];
    let fields = cfg.field.values()?;
    let k = PhysConstants::default();
    let (points, sites_for): (Vec<(f64, Option<f64>)>, Box<SitesAt>) = match &cfg.map {
        None => {
            let sites = cfg.nuclei.sites()?;
            if sites.is_empty() {
                return Err(CliError::usage("sweep: the nuclei source yields no nuclei"));
            }
            (
                fields.iter().map(|b| (*b, None)).collect(),
                Box::new(move |_| Ok(sites.clone())),
            )
        }
        Some(map) => {
            let thetas = map.thetas()?;
            let (r, phi) = (map.radius_angstrom, map.phi_deg.to_radians());
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::usage("map.radius_angstrom must be positive"));
            }
            let pts = fields
                .iter()
                .flat_map(|b| thetas.iter().map(move |t| (*b, Some(*t))))
                .collect();
            let build = move |theta: Option<f64>| {
                let th = theta.unwrap_or(0.0).to_radians();
                let pos = [
                    r * th.sin() * phi.cos(),
                    r * th.sin() * phi.sin(),
                    r * th.cos(),
                ];
                Ok(vec![NucleusSite::dipolar(pos, &k)?])
            };
            (pts, Box::new(build))
        }
    };
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(b, theta)| {
            let model = cfg.model.build(b, None)?;
            let sites = sites_for(theta)?;
            let cells = sweep_row(cfg, method, &model, &sites)?;
            let mut row = vec![Cell::Num(b)];
            if let Some(t) = theta {
                row.push(Cell::Num(t));
            }
            row.extend(cells);
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    let mut headers = vec!["B_mT"];
    if cfg.map.is_some() {
        headers.push("theta_deg");
    }
    headers.extend([
        "p_ss",
        "W_per_s",
        "W_plus_per_s",
        "W_minus_per_s",
        "markovian_valid",
    ]);
    let mut t = Table::new(headers);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Time series p(t) at the first field of the grid.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = methods(cfg, Method::Lindblad)[0];
    let fields = cfg.field.values()?;
    if fields.len() != 1 {
        return Err(CliError::usage("evolve: field.points must be 1"));
    }
    let ev = &cfg.evolve;
    if !(ev.t_max_us > 0.0 && ev.t_max_us.is_finite()) || ev.steps == 0 {
        return Err(CliError::usage(
            "evolve: t_max_us must be positive and steps at least 1",
        ));
    }
    if !(ev.p0.abs() <= 1.0) {
        return Err(CliError::usage("evolve.p0 must lie in [-1, 1]"));
    }
    let model = cfg.model.build(fields[0], None)?;
    let sites = cfg.nuclei.sites()?;
    let grid = uniform_grid(ev.t_max_us, ev.steps);
    if method == Method::Lindblad {
        let samples = lindblad_trajectory(&model, &sites, cfg.model.include_excited_hfi, &grid)?;
        let mut headers = vec!["t_us".to_string(), "p".into()];
        headers.extend(
            model
                .levels
                .basis()
                .iter()
                .map(|l| format!("pop_{}", l.label())),
        );
        let mut t = Table::new(headers);
        let mut ps = Vec::with_capacity(samples.len());
        for s in &samples {
            let p = s.polarizations.iter().sum::<f64>() / s.polarizations.len() as f64;
            ps.push(p);
            let mut row = vec![Cell::Num(s.t_us), Cell::Num(p)];
            row.extend(s.nv_populations.iter().map(|x| Cell::Num(*x)));
            t.push(row);
        }
        let p_ss = lindblad_polarization(&model, &sites, cfg.model.include_excited_hfi)?;
        let p_ss = p_ss.iter().sum::<f64>() / p_ss.len() as f64;
        match asymptotic_relaxation_time(&grid, &ps, p_ss) {
            Some(tau) => eprintln!("p_ss = {p_ss}, DNP time = {tau} us"),
            None => eprintln!("p_ss = {p_ss}, DNP time not resolved on this grid"),
        }
        return Ok(t);
    }
    let rm = rate_method(method).ok_or_else(|| {
        CliError::usage(format!(
            "evolve: method `{}` is not supported",
            method.name()
        ))
    })?;
    let site = single_site(&sites, "evolve")?;
    let pair = rate_pair(&model, &site, rm, cfg.model.rate_options())?;
    let ps = match DnpResult::from_pair(&pair, cfg.model.gamma_dep_per_s, &model) {
        Ok(res) => polarization_trajectory(ev.p0, res.p_ss, res.w, &grid),
        // nothing drives the nucleus
        Err(dnp_core::DnpError::FrozenSpin) => vec![ev.p0; grid.len()],
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(["t_us", "p"]);
    for (ti, p) in grid.iter().zip(ps) {
        t.push(vec![Cell::Num(*ti), Cell::Num(p)]);
    }
    Ok(t)
}

#[derive(Debug, Serialize)]
struct ReportEntry {
    #[serde(rename = "R_MHz")]
    r_mhz: f64,
    method: &'static str,
    #[serde(flatten)]
    snapshot: EnsembleSnapshot,
    bins: Vec<RadiusBin>,
}

pub struct MultispinOutput {
    pub table: Table,
    pub report: Option<String>,
}

/// Ensemble sweeps for every requested pump rate, plus per-site reports.
pub fn cmd_multispin(cfg: &RunConfig) -> Result<MultispinOutput, CliError> {
    let ms = methods(cfg, Method::Meanfield);
    if let Some(m) = ms
        .iter()
        .find(|m| !matches!(m, Method::Meanfield | Method::ExactJoint))
    {
        return Err(CliError::usage(format!(
            "multispin: method `{}` is not a multispin method",
            m.name()
        )));
    }
    let sites = cfg.nuclei.sites()?;
    if sites.is_empty() {
        return Err(dnp_core::DnpError::EmptyEnsemble.into());
    }
    if ms.contains(&Method::ExactJoint) && sites.len() > dnp_core::multispin::EXACT_MAX_SITES {
        return Err(CliError::usage(format!(
            "multispin: exact_joint supports at most {} nuclei, got {}",
            dnp_core::multispin::EXACT_MAX_SITES,
            sites.len()
        )));
    }
    let mc = &cfg.multispin;
    let opts = FixedPointOptions {
        damping: mc.damping,
        max_iterations: mc.max_iterations,
        tolerance: mc.tolerance,
        spectators: mc.spectators,
        adaptive: true,
    };
    let fields = cfg.field.values()?;
    let pumps: Vec<Option<f64>> = if mc.pump_rates_mhz.is_empty() {
        vec![None]
    } else {
        mc.pump_rates_mhz.iter().map(|r| Some(*r)).collect()
    };
    let gamma_dep = cfg.model.gamma_dep_per_s;

    struct Run {
        table_rows: Vec<Vec<Cell>>,
        report: Vec<ReportEntry>,
    }
    let runs: Vec<Run> = pumps
        .par_iter()
        .map(|pump| {
            let base = cfg.model.build(fields[0], *pump)?;
            let r = base.pump.rate;
            let mf = if ms.contains(&Method::Meanfield) {
                Some(meanfield_sweep(&sites, &base, gamma_dep, &fields, &opts)?)
            } else {
                None
            };
            let exact = if ms.contains(&Method::ExactJoint) {
                Some(
                    fields
                        .par_iter()
                        .map(|&b| exact_joint_steady(&sites, &base.with_field(b)?, gamma_dep))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            } else {
                None
            };
            let mut table_rows = Vec::with_capacity(fields.len());
            for (k, &b) in fields.iter().enumerate() {
                let mut row = vec![Cell::Num(r), Cell::Num(b)];
                for m in &ms {
                    let ens = match m {
                        Method::Meanfield => mf.as_ref().map(|v| v[k].ensemble.clone()),
                        _ => exact.as_ref().map(|v| SpinEnsemble {
                            sites: sites.clone(),
                            polarizations: v[k].polarizations.clone(),
                        }),
                    }
                    .expect("solved above");
                    row.push(Cell::Num(ens.mean_polarization()));
                    row.push(Cell::Num(ens.overhauser().mean));
                }
                table_rows.push(row);
            }
            let mut report = vec![];
            for &b in &mc.report_fields_mt {
                let model = base.with_field(b)?;
                let (method, ens) = match &mf {
                    Some(sweep) => {
                        // warm start from the nearest sweep point
                        let near = fields
                            .iter()
                            .enumerate()
                            .min_by(|x, y| (x.1 - b).abs().total_cmp(&(y.1 - b).abs()))
                            .map(|(k, _)| k)
                            .unwrap_or(0);
                        let p0 = &sweep[near].ensemble.polarizations;
                        (
                            Method::Meanfield,
                            meanfield_fixed_point(&sites, &model, gamma_dep, p0, &opts)?.ensemble,
                        )
                    }
                    None => {
                        let ex = exact_joint_steady(&sites, &model, gamma_dep)?;
                        (
                            Method::ExactJoint,
                            SpinEnsemble {
                                sites: sites.clone(),
                                polarizations: ex.polarizations,
                            },
                        )
                    }
                };
                let spatial = spatial_report(&ens, mc.bin_width_angstrom)?;
                report.push(ReportEntry {
                    r_mhz: r,
                    method: method.name(),
                    snapshot: EnsembleSnapshot::new(b, &ens),
                    bins: spatial.bins,
                });
            }
            Ok(Run { table_rows, report })
        })
        .collect::<Result<_, CliError>>()?;

    let mut headers = vec!["R_MHz".to_string(), "B_mT".into()];
    for m in &ms {
        headers.push(format!("p_bar_{}", m.name()));
        headers.push(format!("h_ss_MHz_{}", m.name()));
    }
    let mut table = Table::new(headers);
    let mut entries = vec![];
    for run in runs {
        run.table_rows.into_iter().for_each(|r| table.push(r));
        entries.extend(run.report);
    }
    let report = if mc.report_fields_mt.is_empty() {
        None
    } else {
        Some(
            serde_json::to_string_pretty(&entries).map_err(|e| CliError::io(e.to_string()))? + "\n",
        )
    };
    Ok(MultispinOutput { table, report })
}

/// Where the multispin JSON report goes.
pub fn report_path(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    if let Some(p) = &cfg.multispin.json_out {
        return Ok(p.clone());
    }
    match out {
        Some(o) => {
            let mut s = o.as_os_str().to_owned();
            s.push(".json");
            Ok(PathBuf::from(s))
        }
        None => Err(CliError::usage(
            "multispin: report_fields_mt needs multispin.json_out or an output path",
        )),
    }
}

/// The sampled nuclei as JSON records.
pub fn cmd_lattice(cfg: &RunConfig) -> Result<String, CliError> {
    let sites = cfg.nuclei.sites()?;
    Ok(dnp_core::physmodel::export_lattice_json(&sites) + "\n")
}
