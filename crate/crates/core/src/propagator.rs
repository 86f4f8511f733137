//! Scattering propagation in the diabatic interaction picture.
//!
//! Amplitudes are carried as `ãₙ = aₙ exp(iφₙ)` with
//! `φₙ = Qₙt³/6 + Bₙt²/2 + Aₙₙt + Kₙₙ ln|t|`, so the right-hand side only
//! contains bounded oscillating couplings. Probabilities are read out by
//! projecting onto the instantaneous eigenvectors attached to each diabatic
//! level, which removes the slowly decaying `g/(ΔB t)` admixture a plain
//! diabatic readout would carry.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::ThreeStateFamily;
use crate::model::{hermitian_eigen, same_asymptotics, AsPencil, CMatrix, Pencil, Picture, StateVector, C64};
use crate::ode::{integrate, Dop853Options, Dop853Stats};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// How final amplitudes are turned into probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Project on the instantaneous eigenvectors that merge with each diabatic level.
    #[default]
    Adiabatic,
    /// Plain `|aₙ|²`.
    Diabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatterConfig {
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Radius of the indentation around `t = 0`; derived from the slopes when `None`.
    pub rho: Option<f64>,
    pub window_check: f64,
    pub readout: Readout,
    /// Step ceiling factor `c` in `h ≤ c / (1 + max |φ̇ₙ − φ̇ₘ|)`.
    pub step_ceiling: f64,
    pub max_steps: u64,
    /// Retry once with a doubled window when the window check fails.
    pub extend_window: bool,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            t_max: 1000.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            rho: None,
            window_check: 0.5,
            readout: Readout::Adiabatic,
            step_ceiling: 0.25,
            max_steps: 400_000_000,
            extend_window: true,
        }
    }
}

impl ScatterConfig {
    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if !(self.window_check > 0.0 && self.window_check < 1.0) {
            return bad("window_check must lie in (0, 1)");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return bad("rho must be positive");
            }
        }
        if !(self.step_ceiling > 0.0) {
            return bad("step_ceiling must be positive");
        }
        Ok(())
    }

    /// Largest window difference still accepted.
    pub fn window_tolerance(&self, t_max: f64) -> f64 {
        (5e-4f64).max(5.0 * self.rel_tol * t_max)
    }

    fn ode(&self) -> Dop853Options {
        Dop853Options { rtol: self.rel_tol, atol: self.abs_tol, h_init: None, max_steps: self.max_steps }
    }

    fn rho_for(&self, p: &Pencil) -> f64 {
        self.rho.unwrap_or_else(|| {
            let bmax = p.slopes.iter().fold(0.0f64, |m, b| m.max(b.abs()));
            1e-3 * if bmax > 1.0 { 1.0 / bmax } else { 1.0 }
        })
    }
}

/// Starting condition of a scattering run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Asymptotic state of one diabatic level.
    Level(usize),
    /// Coefficients on the asymptotic level states (normalized internally).
    State(Vec<C64>),
}

impl From<usize> for Init {
    fn from(level: usize) -> Self {
        Init::Level(level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterResult {
    /// Final probability per diabatic level.
    pub probabilities: Vec<f64>,
    /// Amplitudes on the asymptotic level states at the final time.
    pub final_state: StateVector,
    /// Same probabilities read at `window_check · t_max`.
    pub early: Vec<f64>,
    /// Largest change of a slope-group probability between the two readouts.
    pub window_deviation: f64,
    pub t_max_used: f64,
    /// Largest `|‖ã‖² − 1|` over real-axis segments.
    pub norm_drift: f64,
    /// Sets of levels sharing an asymptotic slope; only group sums are basis-independent.
    pub groups: Vec<Vec<usize>>,
    pub stats: Dop853Stats,
}

impl ScatterResult {
    /// Probability summed over each slope group, in the order of `groups`.
    pub fn group_probabilities(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.iter().map(|&n| self.probabilities[n]).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixResult {
    pub matrix: crate::model::TransitionMatrix,
    /// `S[n][m]`: amplitude on asymptotic level `n` for a start on level `m`.
    pub amplitudes: CMatrix,
    pub window_deviation: f64,
    pub t_max_used: f64,
    pub norm_drift: f64,
    pub groups: Vec<Vec<usize>>,
    pub stats: Dop853Stats,
}

struct Pair {
    n: usize,
    m: usize,
    dq: f64,
    db: f64,
    da: f64,
    dk: f64,
    a: C64,
    k: C64,
}

/// Interaction-picture right-hand side for one pencil on the real axis.
struct Coupler {
    n: usize,
    q: Vec<f64>,
    b: Vec<f64>,
    a: Vec<f64>,
    k: Vec<f64>,
    pairs: Vec<Pair>,
    has_log: bool,
    has_inverse: bool,
}

impl Coupler {
    fn new(p: &Pencil) -> Self {
        let n = p.dim();
        let q = p.quadratic.clone();
        let b = p.slopes.clone();
        let a: Vec<f64> = (0..n).map(|i| p.constant[(i, i)].re).collect();
        let k: Vec<f64> = (0..n).map(|i| p.coulomb[(i, i)].re).collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (ac, kc) = (p.constant[(i, j)], p.coulomb[(i, j)]);
                if ac.norm() == 0.0 && kc.norm() == 0.0 {
                    continue;
                }
                pairs.push(Pair {
                    n: i,
                    m: j,
                    dq: q[i] - q[j],
                    db: b[i] - b[j],
                    da: a[i] - a[j],
                    dk: k[i] - k[j],
                    a: ac,
                    k: kc,
                });
            }
        }
        let has_log = pairs.iter().any(|p| p.dk != 0.0);
        let has_inverse = pairs.iter().any(|p| p.k.norm() != 0.0);
        Self { n, q, b, a, k, pairs, has_log, has_inverse }
    }

    fn phase(&self, i: usize, t: f64) -> f64 {
        let log = if self.k[i] != 0.0 { self.k[i] * t.abs().ln() } else { 0.0 };
        ((self.q[i] * t / 6.0 + 0.5 * self.b[i]) * t + self.a[i]) * t + log
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64], w: &mut [C64]) {
        let ln_t = if self.has_log { t.abs().ln() } else { 0.0 };
        let inv_t = if self.has_inverse { 1.0 / t } else { 0.0 };
        for (slot, p) in w.iter_mut().zip(&self.pairs) {
            let theta = ((p.dq * t / 6.0 + 0.5 * p.db) * t + p.da) * t + p.dk * ln_t;
            let (s, c) = theta.sin_cos();
            let coupling = if self.has_inverse { p.a + p.k * inv_t } else { p.a };
            // -i * C * e^{iθ}
            *slot = -I * coupling * C64::new(c, s);
        }
        dy.fill(ZERO);
        let n = self.n;
        for (yc, dc) in y.chunks_exact(n).zip(dy.chunks_exact_mut(n)) {
            for (wp, p) in w.iter().zip(&self.pairs) {
                dc[p.n] += wp * yc[p.m];
                // -i conj(C e^{iθ}) = -conj(wp)
                dc[p.m] -= wp.conj() * yc[p.n];
            }
        }
    }

    fn max_rate(&self, t: f64) -> f64 {
        let inv_t = if self.has_log { 1.0 / t } else { 0.0 };
        self.pairs
            .iter()
            .map(|p| ((0.5 * p.dq * t + p.db) * t + p.da + p.dk * inv_t).abs())
            .fold(0.0, f64::max)
    }

    fn to_raw(&self, t: f64, y: &mut [C64]) {
        let ph: Vec<C64> = (0..self.n).map(|i| C64::from_polar(1.0, -self.phase(i, t))).collect();
        for col in y.chunks_exact_mut(self.n) {
            for (a, p) in col.iter_mut().zip(&ph) {
                *a *= p;
            }
        }
    }

    fn to_interaction(&self, t: f64, y: &mut [C64]) {
        let ph: Vec<C64> = (0..self.n).map(|i| C64::from_polar(1.0, self.phase(i, t))).collect();
        for col in y.chunks_exact_mut(self.n) {
            for (a, p) in col.iter_mut().zip(&ph) {
                *a *= p;
            }
        }
    }

    /// Integrates the interaction-picture block `y` from `t0` to `t1`.
    fn run(&self, t0: f64, t1: f64, y: &mut [C64], cfg: &ScatterConfig) -> Result<Dop853Stats> {
        if self.pairs.is_empty() {
            return Ok(Dop853Stats::default());
        }
        let mut w = vec![ZERO; self.pairs.len()];
        let c = cfg.step_ceiling;
        integrate(
            |t, y, dy| self.rhs(t, y, dy, &mut w),
            |t| c / (1.0 + self.max_rate(t)),
            t0,
            t1,
            y,
            &cfg.ode(),
        )
    }
}

fn column_norms(y: &[C64], n: usize) -> Vec<f64> {
    y.chunks_exact(n).map(|c| c.iter().map(|a| a.norm_sqr()).sum()).collect()
}

fn drift(before: &[f64], after: &[f64]) -> f64 {
    before
        .iter()
        .zip(after)
        .map(|(b, a)| if *b > 0.0 { (a / b - 1.0).abs() } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Raw-picture integration along the lower semicircle `t = ρ e^{iθ}`, `θ: π → 2π`.
fn semicircle(p: &Pencil, rho: f64, y: &mut [C64], cfg: &ScatterConfig) -> Result<Dop853Stats> {
    let n = p.dim();
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| p.constant[(i, j)].norm() * rho + p.coulomb[(i, j)].norm())
        .fold(0.0, f64::max)
        + p.slopes.iter().fold(0.0f64, |m, b| m.max(b.abs())) * rho * rho;
    let cap = cfg.step_ceiling / (1.0 + n as f64 * scale);
    integrate(
        |theta, y, dy| {
            let e = C64::from_polar(1.0, theta);
            let h = p.at(e * rho).expect("semicircle avoids t = 0") * (e * rho);
            for (yc, dc) in y.chunks_exact(n).zip(dy.chunks_exact_mut(n)) {
                for i in 0..n {
                    let mut acc = ZERO;
                    for j in 0..n {
                        acc += h[(i, j)] * yc[j];
                    }
                    dc[i] = acc;
                }
            }
        },
        |_| cap,
        std::f64::consts::PI,
        2.0 * std::f64::consts::PI,
        y,
        &cfg.ode(),
    )
}

/// Levels grouped by identical `(Q, B)`, in index order.
pub fn slope_groups(p: &Pencil) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..p.dim() {
        match groups
            .iter_mut()
            .find(|g| same_asymptotics(p.quadratic[g[0]], p.slopes[g[0]], p.quadratic[i], p.slopes[i]))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

fn check_pencil(p: &Pencil, degenerate_allowed: bool) -> Result<()> {
    let n = p.dim();
    if p.quadratic.len() != n || p.constant.shape() != (n, n) || p.coulomb.shape() != (n, n) {
        return Err(Error::InvalidModel("pencil parts have inconsistent sizes".into()));
    }
    for g in slope_groups(p) {
        if g.len() < 2 {
            continue;
        }
        for (x, &i) in g.iter().enumerate() {
            for &j in &g[x + 1..] {
                if p.constant[(i, j)].norm() != 0.0 || p.coulomb[(i, j)].norm() != 0.0 {
                    return Err(Error::InvalidModel(format!("levels {i} and {j} share a slope but are coupled")));
                }
                if !degenerate_allowed {
                    return Err(Error::InvalidModel(format!(
                        "levels {i} and {j} share a slope; mark the model degenerate_allowed"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Orthonormal basis of asymptotic level states at real time `t`; column `n`
/// belongs to diabatic level `n`.
pub fn asymptotic_basis(p: &Pencil, t: f64, readout: Readout) -> Result<CMatrix> {
    let n = p.dim();
    if readout == Readout::Diabatic {
        return Ok(CMatrix::identity(n, n));
    }
    let (_, vecs) = hermitian_eigen(&p.at_real(t)?);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| p.diagonal_at(i, t).total_cmp(&p.diagonal_at(j, t)));
    // eigenvector column assigned to each level
    let mut owner = vec![0usize; n];
    for (rank, &level) in order.iter().enumerate() {
        owner[level] = rank;
    }
    let mut basis = CMatrix::zeros(n, n);
    for g in slope_groups(p) {
        if let [level] = g[..] {
            let v = vecs.column(owner[level]);
            let lead = v[level];
            basis.set_column(level, &(v * (lead.conj() / lead.norm())));
            continue;
        }
        let vg = CMatrix::from_fn(n, g.len(), |r, c| vecs[(r, owner[g[c]])]);
        // W = V_G† E_G; the unitary polar factor of W rotates V_G onto the
        // group's diabatic vectors as closely as possible.
        let w = CMatrix::from_fn(g.len(), g.len(), |r, c| vecs[(g[c], owner[g[r]])].conj());
        let svd = w.svd(true, true);
        let polar = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
        let ug = vg * polar;
        for (c, &level) in g.iter().enumerate() {
            basis.set_column(level, &ug.column(c));
        }
    }
    Ok(basis)
}

fn project(basis: &CMatrix, y: &[C64]) -> (Vec<C64>, Vec<Vec<f64>>) {
    let n = basis.nrows();
    let mut amps = Vec::with_capacity(y.len());
    let mut probs = Vec::new();
    for col in y.chunks_exact(n) {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = ZERO;
            for i in 0..n {
                acc += basis[(i, k)].conj() * col[i];
            }
            amps.push(acc);
            row.push(acc.norm_sqr());
        }
        probs.push(row);
    }
    (amps, probs)
}

fn initial_columns(basis: &CMatrix, inits: &[Init]) -> Result<Vec<C64>> {
    let n = basis.nrows();
    let mut y = Vec::with_capacity(n * inits.len());
    for init in inits {
        match init {
            Init::Level(m) => {
                if *m >= n {
                    return Err(Error::InvalidArgument(format!("level {m} out of range")));
                }
                y.extend(basis.column(*m).iter().copied());
            }
            Init::State(c) => {
                if c.len() != n {
                    return Err(Error::InvalidArgument("initial state has wrong length".into()));
                }
                let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::InvalidArgument("initial state is zero".into()));
                }
                for i in 0..n {
                    let mut acc = ZERO;
                    for (k, ck) in c.iter().enumerate() {
                        acc += basis[(i, k)] * ck;
                    }
                    y.push(acc / norm);
                }
            }
        }
    }
    Ok(y)
}

struct Run {
    early: Vec<Vec<f64>>,
    late: Vec<Vec<f64>>,
    amplitudes: Vec<C64>,
    norm_drift: f64,
    stats: Dop853Stats,
}

enum Start<'a> {
    FullLine(&'a [Init]),
    HalfLine(&'a [Init]),
}

fn run_once(p: &Pencil, start: &Start, cfg: &ScatterConfig, t_max: f64) -> Result<Run> {
    let n = p.dim();
    let coupler = Coupler::new(p);
    let t_early = cfg.window_check * t_max;
    let mut stats = Dop853Stats::default();
    let mut norm_drift: f64 = 0.0;
    let rho = cfg.rho_for(p);

    let (mut y, t_start) = match start {
        Start::FullLine(inits) => {
            let basis = asymptotic_basis(p, -t_max, cfg.readout)?;
            (initial_columns(&basis, inits)?, -t_max)
        }
        Start::HalfLine(inits) => {
            if t_early <= rho {
                return Err(Error::InvalidArgument("window is shorter than the indentation radius".into()));
            }
            let mut y = Vec::with_capacity(n * inits.len());
            for init in inits.iter() {
                y.extend(frobenius_start(p, init, rho)?);
            }
            (y, rho)
        }
    };

    coupler.to_interaction(t_start, &mut y);
    let mut t = t_start;
    let mut seg_norm = column_norms(&y, n);

    if t < 0.0 && p.has_coulomb() {
        stats.merge(coupler.run(t, -rho, &mut y, cfg)?);
        norm_drift = norm_drift.max(drift(&seg_norm, &column_norms(&y, n)));
        coupler.to_raw(-rho, &mut y);
        stats.merge(semicircle(p, rho, &mut y, cfg)?);
        coupler.to_interaction(rho, &mut y);
        seg_norm = column_norms(&y, n);
        t = rho;
    }
    stats.merge(coupler.run(t, t_early, &mut y, cfg)?);
    let early = {
        let mut raw = y.clone();
        coupler.to_raw(t_early, &mut raw);
        project(&asymptotic_basis(p, t_early, cfg.readout)?, &raw).1
    };
    stats.merge(coupler.run(t_early, t_max, &mut y, cfg)?);
    norm_drift = norm_drift.max(drift(&seg_norm, &column_norms(&y, n)));
    coupler.to_raw(t_max, &mut y);
    let (amplitudes, late) = project(&asymptotic_basis(p, t_max, cfg.readout)?, &y);
    Ok(Run { early, late, amplitudes, norm_drift, stats })
}

/// Largest change of a slope-group probability; individual levels inside a
/// degenerate group keep rotating slowly and are not compared.
fn max_difference(a: &[Vec<f64>], b: &[Vec<f64>], groups: &[Vec<usize>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for g in groups {
            let sa: f64 = g.iter().map(|&n| ra[n]).sum();
            let sb: f64 = g.iter().map(|&n| rb[n]).sum();
            worst = worst.max((sa - sb).abs());
        }
    }
    worst
}

/// Runs with the window check and one doubling; returns the run and the window used.
fn run_checked(p: &Pencil, start: &Start, cfg: &ScatterConfig) -> Result<(Run, f64, f64)> {
    let mut t_max = cfg.t_max;
    let mut attempts = if cfg.extend_window { 2 } else { 1 };
    let groups = slope_groups(p);
    loop {
        let run = run_once(p, start, cfg, t_max)?;
        let dev = max_difference(&run.early, &run.late, &groups);
        if dev <= cfg.window_tolerance(t_max) {
            return Ok((run, t_max, dev));
        }
        attempts -= 1;
        if attempts == 0 {
            return Err(Error::NotConverged { deviation: dev, t_max });
        }
        t_max *= 2.0;
    }
}

/// First-order Frobenius solution at `t = ρ` for a start in a `1/t` eigenstate.
fn frobenius_start(p: &Pencil, init: &Init, rho: f64) -> Result<Vec<C64>> {
    let n = p.dim();
    let v: Vec<C64> = match init {
        Init::Level(m) => {
            if *m >= n {
                return Err(Error::InvalidArgument(format!("level {m} out of range")));
            }
            (0..n).map(|i| if i == *m { C64::new(1.0, 0.0) } else { ZERO }).collect()
        }
        Init::State(c) => {
            if c.len() != n {
                return Err(Error::InvalidArgument("initial state has wrong length".into()));
            }
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            c.iter().map(|z| z / norm).collect()
        }
    };
    let vv = nalgebra::DVector::from_vec(v.clone());
    let kv = &p.coulomb * &vv;
    let kval = vv.dotc(&kv);
    let scale = p.coulomb.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    if (&kv - &vv * kval).norm() > 1e-10 * scale {
        return Err(Error::InvalidArgument("half-line start must be an eigenvector of the 1/t term".into()));
    }
    // (k + i − K) c = A v
    let mut lhs = -p.coulomb.clone();
    for i in 0..n {
        lhs[(i, i)] += kval + I;
    }
    let rhs = &p.constant * &vv;
    let c = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular Frobenius system".into()))?;
    let a = &vv + c * C64::new(rho, 0.0);
    let norm = a.norm();
    Ok(a.iter().map(|z| z / norm).collect())
}

fn single(run: Run, t_max: f64, dev: f64, groups: Vec<Vec<usize>>) -> ScatterResult {
    ScatterResult {
        probabilities: run.late[0].clone(),
        final_state: StateVector { amplitudes: run.amplitudes, picture: Picture::Diabatic, t: t_max },
        early: run.early[0].clone(),
        window_deviation: dev,
        t_max_used: t_max,
        norm_drift: run.norm_drift,
        groups,
        stats: run.stats,
    }
}

/// Scattering from `t = −t_max` to `t = +t_max`. Models with a `1/t` term
/// pass below `t = 0` on a semicircle of radius `ρ`.
pub fn propagate_scattering<M: AsPencil + ?Sized>(model: &M, init: impl Into<Init>, cfg: &ScatterConfig) -> Result<ScatterResult> {
    cfg.validate()?;
    let p = model.pencil();
    check_pencil(&p, model.degenerate_allowed())?;
    let inits = [init.into()];
    let (run, t_max, dev) = run_checked(&p, &Start::FullLine(&inits), cfg)?;
    Ok(single(run, t_max, dev, slope_groups(&p)))
}

/// Evolution on `(ρ, t_max]` starting in an eigenstate of the `1/t` term at `t = ρ`.
pub fn propagate_coulomb_halfline<M: AsPencil + ?Sized>(
    model: &M,
    init: impl Into<Init>,
    cfg: &ScatterConfig,
) -> Result<ScatterResult> {
    cfg.validate()?;
    let p = model.pencil();
    if !p.has_coulomb() {
        return Err(Error::InvalidModel("half-line propagation needs a 1/t term".into()));
    }
    check_pencil(&p, model.degenerate_allowed())?;
    let inits = [init.into()];
    let (run, t_max, dev) = run_checked(&p, &Start::HalfLine(&inits), cfg)?;
    Ok(single(run, t_max, dev, slope_groups(&p)))
}

/// Full transition matrix from simultaneous propagation of every level.
pub fn transition_matrix<M: AsPencil + ?Sized>(model: &M, cfg: &ScatterConfig) -> Result<MatrixResult> {
    cfg.validate()?;
    let p = model.pencil();
    check_pencil(&p, model.degenerate_allowed())?;
    let n = p.dim();
    let inits: Vec<Init> = (0..n).map(Init::Level).collect();
    let (run, t_max, dev) = run_checked(&p, &Start::FullLine(&inits), cfg)?;
    let amplitudes = CMatrix::from_column_slice(n, n, &run.amplitudes);
    Ok(MatrixResult {
        matrix: crate::model::TransitionMatrix::from_rows(run.late)?,
        amplitudes,
        window_deviation: dev,
        t_max_used: t_max,
        norm_drift: run.norm_drift,
        groups: slope_groups(&p),
        stats: run.stats,
    })
}

/// Interaction-picture propagation of a raw state between two real times on
/// one side of `t = 0`, used for reversibility checks.
pub fn propagate_between<M: AsPencil + ?Sized>(
    model: &M,
    state: &[C64],
    t0: f64,
    t1: f64,
    cfg: &ScatterConfig,
) -> Result<(Vec<C64>, Dop853Stats)> {
    let p = model.pencil();
    if p.has_coulomb() && (t0 <= 0.0) != (t1 <= 0.0) {
        return Err(Error::SingularTime);
    }
    let c = Coupler::new(&p);
    let mut y = state.to_vec();
    c.to_interaction(t0, &mut y);
    let stats = c.run(t0, t1, &mut y, cfg)?;
    c.to_raw(t1, &mut y);
    Ok((y, stats))
}

/// `Σ n |aₙ|²`.
pub fn expectation_n(state: &StateVector) -> f64 {
    state.amplitudes.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

/// Which time variable a path segment advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    T,
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub vary: Vary,
    pub from: f64,
    pub to: f64,
    /// Value of the variable held fixed.
    pub fixed: f64,
}

impl Segment {
    fn start(&self) -> (f64, f64) {
        match self.vary {
            Vary::T => (self.from, self.fixed),
            Vary::Tau => (self.fixed, self.from),
        }
    }

    fn end(&self) -> (f64, f64) {
        match self.vary {
            Vary::T => (self.to, self.fixed),
            Vary::Tau => (self.fixed, self.to),
        }
    }
}

/// Piecewise axis-parallel path in the `(t, τ)` plane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoTimePath {
    pub segments: Vec<Segment>,
}

impl TwoTimePath {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let path = Self { segments };
        path.validate()?;
        Ok(path)
    }

    /// `t: t0 → t1` at fixed τ.
    pub fn straight(tau: f64, t0: f64, t1: f64) -> Self {
        Self { segments: vec![Segment { vary: Vary::T, from: t0, to: t1, fixed: tau }] }
    }

    /// `τ: τ_a → τ_b` at `t = −T`, `t: −T → T` at `τ_b`, `τ: τ_b → τ_a` at `t = T`.
    pub fn rectangle(tau_a: f64, tau_b: f64, t_max: f64) -> Self {
        Self {
            segments: vec![
                Segment { vary: Vary::Tau, from: tau_a, to: tau_b, fixed: -t_max },
                Segment { vary: Vary::T, from: -t_max, to: t_max, fixed: tau_b },
                Segment { vary: Vary::Tau, from: tau_b, to: tau_a, fixed: t_max },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.segments.windows(2) {
            let (a, b) = (w[0].end(), w[1].start());
            let tol = 1e-12 * (1.0 + a.0.abs().max(a.1.abs()));
            if (a.0 - b.0).abs() > tol || (a.1 - b.1).abs() > tol {
                return Err(Error::InvalidArgument("path segments are not contiguous".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeResult {
    /// Schrödinger-picture evolution operator along the path.
    pub u: CMatrix,
    pub norm_drift: f64,
    pub stats: Dop853Stats,
}

impl TwoTimeResult {
    /// `|U_{nm}|²`, indexed `[m][n]` like a transition matrix.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        let n = self.u.nrows();
        (0..n).map(|m| (0..n).map(|k| self.u[(k, m)].norm_sqr()).collect()).collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.u.nrows();
        crate::model::max_abs(&(self.u.adjoint() * &self.u - CMatrix::identity(n, n)))
    }
}

/// τ-leg data at fixed `t`: diagonal phase rates and the coupling matrix.
fn tau_leg_coefficients(fam: &ThreeStateFamily, t: f64, tau: f64) -> Result<([f64; 3], [f64; 3], Matrix3<C64>)> {
    let s = fam.slopes(tau)?;
    let a = fam.constant(tau)?;
    let l = fam.constant_derivative(tau)?;
    let r2 = fam.r2(tau)?;
    let a3 = Matrix3::from_fn(|i, j| a[(i, j)]);
    let l3 = Matrix3::from_fn(|i, j| l[(i, j)]);
    let d3 = a3 * a3 * C64::new(0.5 * r2, 0.0);
    let b = [s.b1, 0.0, -s.b2];
    let q = [s.db1, 0.0, -s.db2];
    let phase = [
        0.5 * b[0] * t * t + a3[(0, 0)].re * t,
        0.5 * b[1] * t * t + a3[(1, 1)].re * t,
        0.5 * b[2] * t * t + a3[(2, 2)].re * t,
    ];
    let rate = [
        0.5 * q[0] * t * t + l3[(0, 0)].re * t,
        0.5 * q[1] * t * t + l3[(1, 1)].re * t,
        0.5 * q[2] * t * t + l3[(2, 2)].re * t,
    ];
    let mut m = d3;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                m[(i, j)] += l3[(i, j)] * t;
            }
        }
    }
    Ok((phase, rate, m))
}

fn tau_leg(fam: &ThreeStateFamily, t: f64, tau0: f64, tau1: f64, u: &mut CMatrix, cfg: &ScatterConfig) -> Result<(Dop853Stats, f64)> {
    // validate both ends before integrating
    fam.slopes(tau0)?;
    fam.slopes(tau1)?;
    let phases = |tau: f64| -> [f64; 3] { tau_leg_coefficients(fam, t, tau).map(|c| c.0).unwrap_or([0.0; 3]) };
    let mut y: Vec<C64> = u.as_slice().to_vec();
    let ph0 = phases(tau0);
    for col in y.chunks_exact_mut(3) {
        for i in 0..3 {
            col[i] *= C64::from_polar(1.0, ph0[i]);
        }
    }
    let before = column_norms(&y, 3);
    let c = cfg.step_ceiling;
    let stats = integrate(
        |tau, y, dy| {
            let (ph, _, m) = tau_leg_coefficients(fam, t, tau).expect("τ validated on the leg");
            let e: [C64; 3] = std::array::from_fn(|i| C64::from_polar(1.0, ph[i]));
            for (yc, dc) in y.chunks_exact(3).zip(dy.chunks_exact_mut(3)) {
                for i in 0..3 {
                    let mut acc = ZERO;
                    for j in 0..3 {
                        acc += m[(i, j)] * e[j].conj() * yc[j];
                    }
                    dc[i] = -I * e[i] * acc;
                }
            }
        },
        |tau| {
            let (_, rate, _) = tau_leg_coefficients(fam, t, tau).expect("τ validated on the leg");
            let mut mx: f64 = 0.0;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    mx = mx.max((rate[i] - rate[j]).abs());
                }
            }
            c / (1.0 + mx)
        },
        tau0,
        tau1,
        &mut y,
        &cfg.ode(),
    )?;
    let d = drift(&before, &column_norms(&y, 3));
    let ph1 = phases(tau1);
    for col in y.chunks_exact_mut(3) {
        for i in 0..3 {
            col[i] *= C64::from_polar(1.0, -ph1[i]);
        }
    }
    *u = CMatrix::from_column_slice(3, 3, &y);
    Ok((stats, d))
}

/// Path-ordered evolution of the three-state family in the `(t, τ)` plane:
/// t-legs use the family Hamiltonian, τ-legs its quadratic partner.
pub fn propagate_two_time(fam: &ThreeStateFamily, path: &TwoTimePath, cfg: &ScatterConfig) -> Result<TwoTimeResult> {
    cfg.validate()?;
    path.validate()?;
    let mut u = CMatrix::identity(3, 3);
    let mut stats = Dop853Stats::default();
    let mut norm_drift: f64 = 0.0;
    for seg in &path.segments {
        if seg.from == seg.to {
            continue;
        }
        match seg.vary {
            Vary::T => {
                let p = fam.model(seg.fixed)?.pencil();
                let c = Coupler::new(&p);
                let mut y: Vec<C64> = u.as_slice().to_vec();
                c.to_interaction(seg.from, &mut y);
                let before = column_norms(&y, 3);
                stats.merge(c.run(seg.from, seg.to, &mut y, cfg)?);
                norm_drift = norm_drift.max(drift(&before, &column_norms(&y, 3)));
                c.to_raw(seg.to, &mut y);
                u = CMatrix::from_column_slice(3, 3, &y);
            }
            Vary::Tau => {
                let (s, d) = tau_leg(fam, seg.fixed, seg.from, seg.to, &mut u, cfg)?;
                stats.merge(s);
                norm_drift = norm_drift.max(d);
            }
        }
    }
    Ok(TwoTimeResult { u, norm_drift, stats })
}
