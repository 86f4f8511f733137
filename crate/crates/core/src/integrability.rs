//! Residual checks of the two-time integrability conditions and the
//! τ-invariance sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::ThreeStateFamily;
use crate::model::{max_abs, CMatrix, TransitionMatrix, C64};
use crate::propagator::{transition_matrix, ScatterConfig};

/// Default finite-difference step for `∂τ`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// All residual norms are the largest absolute matrix entry over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `‖∂τH − ∂tH'‖`; absent for checks that have no time grid.
    pub max_flatness: Option<f64>,
    /// `‖[H, H']‖`; absent for checks that have no time grid.
    pub max_commutator: Option<f64>,
    /// `½[∂τB, A] + [∂τA, B]`.
    pub slope_coupling: f64,
    /// `[∂τA, A] + [D, B]`.
    pub partner_slope: f64,
    /// `[A, D]`.
    pub partner_commutes: f64,
    pub tau_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Finite-difference step, when derivatives were not closed-form.
    pub fd_step: Option<f64>,
}

impl ResidualReport {
    /// Largest of all reported residuals.
    pub fn max(&self) -> f64 {
        [self.max_flatness.unwrap_or(0.0), self.max_commutator.unwrap_or(0.0), self.slope_coupling, self.partner_slope, self.partner_commutes]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn default_tau_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

pub fn default_t_grid() -> Vec<f64> {
    (-10..=10).map(f64::from).collect()
}

fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

fn diag(v: &[f64]) -> CMatrix {
    CMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { C64::new(v[i], 0.0) } else { C64::new(0.0, 0.0) })
}

struct Conditions {
    slope_coupling: f64,
    partner_slope: f64,
    partner_commutes: f64,
}

fn conditions(b: &CMatrix, db: &CMatrix, a: &CMatrix, da: &CMatrix, d: &CMatrix) -> Conditions {
    let half = C64::new(0.5, 0.0);
    Conditions {
        slope_coupling: max_abs(&(commutator(db, a) * half + commutator(da, b))),
        partner_slope: max_abs(&(commutator(da, a) + commutator(d, b))),
        partner_commutes: max_abs(&commutator(a, d)),
    }
}

/// Flatness and commutation of `H = Bt + A` with its quadratic partner on a
/// `(τ, t)` grid, with closed-form `τ` derivatives.
pub fn check_zero_curvature(fam: &ThreeStateFamily, tau_grid: &[f64], t_grid: &[f64]) -> Result<ResidualReport> {
    let mut flat: f64 = 0.0;
    let mut comm: f64 = 0.0;
    let mut cond = Conditions { slope_coupling: 0.0, partner_slope: 0.0, partner_commutes: 0.0 };
    for &tau in tau_grid {
        let model = fam.model(tau)?;
        let partner = fam.partner(tau)?;
        let s = fam.slopes(tau)?;
        let b = diag(model.slopes());
        let db = diag(&[s.db1, 0.0, -s.db2]);
        let a = model.couplings().clone();
        let da = fam.constant_derivative(tau)?;
        let c = conditions(&b, &db, &a, &da, &partner.d);
        cond.slope_coupling = cond.slope_coupling.max(c.slope_coupling);
        cond.partner_slope = cond.partner_slope.max(c.partner_slope);
        cond.partner_commutes = cond.partner_commutes.max(c.partner_commutes);
        for &t in t_grid {
            let h = model.hamiltonian_real(t)?;
            let dtau_h = &db * C64::new(t, 0.0) + &da;
            flat = flat.max(max_abs(&(dtau_h - partner.time_derivative(t))));
            comm = comm.max(max_abs(&commutator(&h, &partner.at(t))));
        }
    }
    Ok(ResidualReport {
        max_flatness: Some(flat),
        max_commutator: Some(comm),
        slope_coupling: cond.slope_coupling,
        partner_slope: cond.partner_slope,
        partner_commutes: cond.partner_commutes,
        tau_grid: tau_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        fd_step: None,
    })
}

/// Fourth-order central difference.
fn stencil<F>(f: &F, tau: f64, h: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let (m2, m1, p1, p2) = (f(tau - 2.0 * h)?, f(tau - h)?, f(tau + h)?, f(tau + 2.0 * h)?);
    Ok((m2 - p2 + (p1 - m1) * C64::new(8.0, 0.0)) * C64::new(1.0 / (12.0 * h), 0.0))
}

/// The three algebraic conditions for user-supplied `B(τ)` (diagonal),
/// `A(τ)` and `D(τ)`; `∂τ` by a five-point stencil of step `h`.
pub fn check_mlz_conditions<FB, FA, FD>(b: FB, a: FA, d: FD, tau_grid: &[f64], h: f64) -> Result<ResidualReport>
where
    FB: Fn(f64) -> Result<Vec<f64>>,
    FA: Fn(f64) -> Result<CMatrix>,
    FD: Fn(f64) -> Result<CMatrix>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let bm = |tau: f64| b(tau).map(|v| diag(&v));
    let mut out = Conditions { slope_coupling: 0.0, partner_slope: 0.0, partner_commutes: 0.0 };
    for &tau in tau_grid {
        let bt = bm(tau)?;
        let at = a(tau)?;
        let dt = d(tau)?;
        let n = at.nrows();
        if bt.nrows() != n || dt.shape() != (n, n) {
            return Err(Error::InvalidArgument("B, A and D have different sizes".into()));
        }
        let db = stencil(&bm, tau, h)?;
        let da = stencil(&a, tau, h)?;
        let c = conditions(&bt, &db, &at, &da, &dt);
        out.slope_coupling = out.slope_coupling.max(c.slope_coupling);
        out.partner_slope = out.partner_slope.max(c.partner_slope);
        out.partner_commutes = out.partner_commutes.max(c.partner_commutes);
    }
    Ok(ResidualReport {
        max_flatness: None,
        max_commutator: None,
        slope_coupling: out.slope_coupling,
        partner_slope: out.partner_slope,
        partner_commutes: out.partner_commutes,
        tau_grid: tau_grid.to_vec(),
        t_grid: Vec::new(),
        fd_step: Some(h),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub tau: Vec<f64>,
    pub matrices: Vec<TransitionMatrix>,
    /// Index of the reference value (the τ closest to 1).
    pub reference: usize,
    pub deviation_from_reference: f64,
    pub max_pairwise_deviation: f64,
    pub max_norm_drift: f64,
    pub max_residual: f64,
}

/// Full transition matrices along the family and their spread.
pub fn invariance_sweep(fam: &ThreeStateFamily, tau_values: &[f64], cfg: &ScatterConfig) -> Result<InvarianceReport> {
    if tau_values.is_empty() {
        return Err(Error::InvalidArgument("no τ values".into()));
    }
    let mut matrices = Vec::with_capacity(tau_values.len());
    let mut drift: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for &tau in tau_values {
        let r = transition_matrix(&fam.model(tau)?, cfg)?;
        drift = drift.max(r.norm_drift);
        residual = residual.max(r.matrix.residual_row.max(r.matrix.residual_col));
        matrices.push(r.matrix);
    }
    let reference = tau_values
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - 1.0).abs().total_cmp(&(y.1 - 1.0).abs()))
        .map(|(i, _)| i)
        .expect("nonempty");
    let deviation_from_reference =
        matrices.iter().map(|m| m.max_deviation(&matrices[reference])).fold(0.0, f64::max);
    let mut pairwise: f64 = 0.0;
    for (i, x) in matrices.iter().enumerate() {
        for y in &matrices[i + 1..] {
            pairwise = pairwise.max(x.max_deviation(y));
        }
    }
    Ok(InvarianceReport {
        tau: tau_values.to_vec(),
        matrices,
        reference,
        deviation_from_reference,
        max_pairwise_deviation: pairwise,
        max_norm_drift: drift,
        max_residual: residual,
    })
}
