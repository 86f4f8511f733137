//! Executes a validated [`Scenario`] and returns its table.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use mlz_core::families::{bosonic_chain_sector, demo_three_state, reduced_two_state, Breakage, ChainFamily, FourStateParams};
use mlz_core::integrability::{check_mlz_conditions, check_zero_curvature, default_t_grid, default_tau_grid, ResidualReport};
use mlz_core::propagator::{
    expectation_n, propagate_coulomb_halfline, propagate_scattering, transition_matrix, ScatterResult,
};
use mlz_core::semiclassical::{avg_n_exact, dykhne, p14_exact, p3_semiclassical};
use mlz_core::{adiabatic_energies, Error};

use crate::scenario::{Grid, Issue, Job, Scenario};

/// Norm drift above this marks a point as not converged.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Convergence record of one propagation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStatus {
    pub key: String,
    pub converged: bool,
    pub window_deviation: f64,
    pub t_max_used: f64,
    pub norm_drift: f64,
    pub steps: u64,
}

impl PointStatus {
    fn of(key: String, r: &ScatterResult) -> Self {
        Self::new(key, r.window_deviation, r.t_max_used, r.norm_drift, r.stats.accepted + r.stats.rejected)
    }

    fn new(key: String, window_deviation: f64, t_max_used: f64, norm_drift: f64, steps: u64) -> Self {
        Self { key, converged: norm_drift <= NORM_DRIFT_LIMIT, window_deviation, t_max_used, norm_drift, steps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub points: Vec<PointStatus>,
    pub summary: Map<String, Value>,
}

impl Outcome {
    pub fn converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Invalid(Vec<Issue>),
    NotConverged { point: String, deviation: f64, t_max: f64 },
    Compute { point: String, message: String },
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::NotConverged { .. } => 2,
            Failure::Compute { .. } | Failure::Io(_) => 3,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Failure::Invalid(issues) => json!({"status": "error", "error": "validation", "errors": issues}),
            Failure::NotConverged { point, deviation, t_max } => json!({
                "status": "error", "error": "not_converged", "point": point,
                "window_deviation": deviation, "t_max": t_max,
            }),
            Failure::Compute { point, message } => json!({"status": "error", "error": "compute", "point": point, "message": message}),
            Failure::Io(message) => json!({"status": "error", "error": "io", "message": message}),
        }
    }
}

fn fail(point: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::NotConverged { deviation, t_max } => Failure::NotConverged { point: point.to_string(), deviation, t_max },
        e => Failure::Compute { point: point.to_string(), message: e.to_string() },
    }
}

/// Evaluate `f` on every item in parallel; results keep the input order and
/// the first failure in that order wins.
fn sweep<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R, Failure> + Sync + Send) -> Result<Vec<R>, Failure> {
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn values(g: &Grid) -> Vec<f64> {
    g.values().expect("grid checked during validation")
}

fn key(name: &str, x: f64) -> String {
    format!("{name}={x}")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn run(s: &Scenario) -> Result<Outcome, Failure> {
    let cfg = &s.config;
    match &s.job {
        Job::Spectrum(p) => {
            let model = p.model.build().map_err(fail("model"))?;
            let ts = values(&p.t);
            let rows = sweep(&ts, |&t| {
                let e = adiabatic_energies(&model, t).map_err(fail(&key("t", t)))?;
                Ok(std::iter::once(Cell::Num(t)).chain(e.into_iter().map(Cell::Num)).collect())
            })?;
            let mut head = header(&["t"]);
            head.extend((1..=model.n()).map(|k| format!("E_{k}")));
            Ok(Outcome { table: Table { header: head, rows }, points: Vec::new(), summary: Map::new() })
        }
        Job::Propagate(p) => {
            let model = p.model.build().map_err(fail("model"))?;
            let n = model.n();
            let starts: Vec<usize> = match p.initial_level {
                Some(l) => vec![l - 1],
                None => (0..n).collect(),
            };
            let mut rows = Vec::new();
            let mut points = Vec::new();
            if p.halfline || p.initial_level.is_some() {
                let runs = sweep(&starts, |&l| {
                    let k = key("from", (l + 1) as f64);
                    let r = if p.halfline {
                        propagate_coulomb_halfline(&model, l, cfg)
                    } else {
                        propagate_scattering(&model, l, cfg)
                    };
                    r.map(|r| (l, k.clone(), r)).map_err(fail(&k))
                })?;
                for (l, k, r) in runs {
                    for (m, &prob) in r.probabilities.iter().enumerate() {
                        rows.push(vec![Cell::Int(l as i64 + 1), Cell::Int(m as i64 + 1), Cell::Num(prob)]);
                    }
                    points.push(PointStatus::of(k, &r));
                }
            } else {
                let r = transition_matrix(&model, cfg).map_err(fail("matrix"))?;
                for (l, row) in r.matrix.p.iter().enumerate() {
                    for (m, &prob) in row.iter().enumerate() {
                        rows.push(vec![Cell::Int(l as i64 + 1), Cell::Int(m as i64 + 1), Cell::Num(prob)]);
                    }
                }
                points.push(PointStatus::new(
                    "matrix".into(),
                    r.window_deviation,
                    r.t_max_used,
                    r.norm_drift,
                    r.stats.accepted + r.stats.rejected,
                ));
                let mut summary = Map::new();
                summary.insert("residual_row".into(), json!(r.matrix.residual_row));
                summary.insert("residual_col".into(), json!(r.matrix.residual_col));
                return Ok(Outcome { table: Table { header: header(&["from", "to", "P"]), rows }, points, summary });
            }
            Ok(Outcome { table: Table { header: header(&["from", "to", "P"]), rows }, points, summary: Map::new() })
        }
        Job::Invariance(p) => {
            let fam = p.family.family();
            let l = p.initial_level;
            let taus = values(&p.tau);
            let runs = sweep(&taus, |&tau| {
                let k = key("tau", tau);
                let m = fam.model(tau).map_err(fail(&k))?;
                propagate_scattering(&m, l - 1, cfg).map(|r| (k.clone(), r)).map_err(fail(&k))
            })?;
            let mut rows = Vec::new();
            let mut points = Vec::new();
            let mut spread: f64 = 0.0;
            for (tau, (k, r)) in taus.iter().zip(&runs) {
                let mut row = vec![Cell::Num(*tau)];
                row.extend(r.probabilities.iter().map(|&x| Cell::Num(x)));
                rows.push(row);
                points.push(PointStatus::of(k.clone(), r));
                for (_, (_, o)) in taus.iter().zip(&runs) {
                    for (a, b) in r.probabilities.iter().zip(&o.probabilities) {
                        spread = spread.max((a - b).abs());
                    }
                }
            }
            let mut head = header(&["tau"]);
            head.extend((1..=3).map(|m| format!("P_{l}to{m}")));
            let mut summary = Map::new();
            summary.insert("max_spread".into(), json!(spread));
            Ok(Outcome { table: Table { header: head, rows }, points, summary })
        }
        Job::DykhneSweep(p) => {
            let eps = values(&p.eps);
            let runs = sweep(&eps, |&e| {
                let k = key("eps", e);
                let pd = dykhne(p.b, p.g, e, p.eta).map_err(fail(&k))?;
                let m = reduced_two_state(p.b, p.g, e).map_err(fail(&k))?;
                let r = propagate_coulomb_halfline(&m, 0, cfg).map_err(fail(&k))?;
                Ok((vec![Cell::Num(e), Cell::Num(pd.p), Cell::Num(r.probabilities[0])], PointStatus::of(k, &r), pd.tie))
            })?;
            let mut summary = Map::new();
            summary.insert("root_ties".into(), json!(runs.iter().filter(|r| r.2).count()));
            let (rows, points) = runs.into_iter().map(|(r, s, _)| (r, s)).unzip();
            Ok(Outcome { table: Table { header: header(&["eps", "P_dykhne", "P_numeric"]), rows }, points, summary })
        }
        Job::ThreeLevelSweep(p) => {
            let pairs: Vec<(f64, f64)> =
                values(&p.g).into_iter().flat_map(|g| values(&p.eps).into_iter().map(move |e| (g, e))).collect();
            let runs = sweep(&pairs, |&(g, e)| {
                let k = format!("g={g},eps={e}");
                let sc = p3_semiclassical(p.b, g, e, p.eta).map_err(fail(&k))?;
                let m = demo_three_state(p.b, g, e).map_err(fail(&k))?;
                let r = propagate_scattering(&m, 0, cfg).map_err(fail(&k))?;
                Ok((vec![Cell::Num(g), Cell::Num(e), Cell::Num(sc), Cell::Num(r.probabilities[1])], PointStatus::of(k, &r)))
            })?;
            let (rows, points) = runs.into_iter().unzip();
            Ok(Outcome {
                table: Table { header: header(&["g", "eps", "P3_semiclassical", "P_numeric"]), rows },
                points,
                summary: Map::new(),
            })
        }
        Job::ChainAvgN(p) => {
            let gs = values(&p.g_base);
            let runs = sweep(&gs, |&g| {
                let k = key("g", g);
                let m = bosonic_chain_sector(p.n_max, p.beta, g)
                    .and_then(|c| c.q_deform(p.q))
                    .and_then(|c| c.model())
                    .map_err(fail(&k))?;
                let r = propagate_scattering(&m, 0, cfg).map_err(fail(&k))?;
                let n = expectation_n(&r.final_state);
                Ok((vec![Cell::Num(g), Cell::Num(n), Cell::Num(avg_n_exact(g, p.beta))], PointStatus::of(k, &r)))
            })?;
            let (rows, points) = runs.into_iter().unzip();
            Ok(Outcome {
                table: Table { header: header(&["g", "n_avg_numeric", "n_avg_exact"]), rows },
                points,
                summary: Map::new(),
            })
        }
        Job::FourStateSweep(p) => {
            let phis = values(&p.phi);
            let runs = sweep(&phis, |&phi| {
                let k = key("phi", phi);
                let fp = FourStateParams::phase_sweep(p.b, p.g, phi);
                let (p11, p14, _) = p14_exact(&fp).map_err(fail(&k))?;
                let m = fp.model().map_err(fail(&k))?;
                let r = propagate_scattering(&m, 0, cfg).map_err(fail(&k))?;
                let row = vec![
                    Cell::Num(phi),
                    Cell::Num(phi / PI),
                    Cell::Num(r.probabilities[3]),
                    Cell::Num(p14),
                    Cell::Num(r.probabilities[0]),
                    Cell::Num(p11),
                ];
                Ok((row, PointStatus::of(k, &r)))
            })?;
            let (rows, points) = runs.into_iter().unzip();
            Ok(Outcome {
                table: Table {
                    header: header(&["phi", "phi_over_pi", "P_1to4_numeric", "P_1to4_exact", "P_1to1_numeric", "P_1to1_exact"]),
                    rows,
                },
                points,
                summary: Map::new(),
            })
        }
        Job::IntegrabilityReport(p) => integrability(p),
    }
    .map(|mut o| {
        o.summary.insert("points".into(), json!(o.points.len()));
        o
    })
}

fn report_rows(system: &str, r: &ResidualReport, rows: &mut Vec<Vec<Cell>>) {
    let metrics = [
        ("max_flatness", r.max_flatness),
        ("max_commutator", r.max_commutator),
        ("slope_coupling", Some(r.slope_coupling)),
        ("partner_slope", Some(r.partner_slope)),
        ("partner_commutes", Some(r.partner_commutes)),
        ("max", Some(r.max())),
    ];
    for (name, v) in metrics {
        if let Some(v) = v {
            rows.push(vec![Cell::Text(system.into()), Cell::Text(name.into()), Cell::Num(v)]);
        }
    }
}

fn integrability(p: &crate::scenario::IntegrabilityParams) -> Result<Outcome, Failure> {
    let taus = p.tau.as_ref().map_or_else(default_tau_grid, values);
    let ts = p.t.as_ref().map_or_else(default_t_grid, values);
    let fam = p.family.family();
    let mut rows = Vec::new();
    let mut summary = Map::new();
    let main = check_zero_curvature(&fam, &taus, &ts).map_err(fail("three_state"))?;
    report_rows("three_state", &main, &mut rows);
    let mut worst = main.max();
    if let Some(c) = &p.chain {
        let base = bosonic_chain_sector(c.n_max, c.beta, c.g_base).map_err(fail("chain"))?;
        let chain = ChainFamily { base, r: c.r };
        let r = check_mlz_conditions(
            |tau| chain.spec(tau).map(|s| s.slopes),
            |tau| chain.spec(tau).map(|s| s.couplings_matrix()),
            |tau| chain.partner_constant(tau),
            &values(&c.tau),
            p.fd_step,
        )
        .map_err(fail("chain"))?;
        report_rows("chain", &r, &mut rows);
        worst = worst.max(r.max());
    }
    summary.insert("residual_max".into(), json!(worst));
    if p.controls {
        let mut control = f64::INFINITY;
        for (name, brk) in [("frozen_couplings", Breakage::FrozenCouplings), ("frozen_epsilon", Breakage::FrozenEpsilon)] {
            let r = check_zero_curvature(&fam.clone().broken(brk), &taus, &ts).map_err(fail(name))?;
            report_rows(&format!("control_{name}"), &r, &mut rows);
            control = control.min(r.max());
        }
        summary.insert("control_min".into(), json!(control));
    }
    Ok(Outcome { table: Table { header: header(&["system", "metric", "value"]), rows }, points: Vec::new(), summary })
}
