//! Complex-time adiabatic exponents and closed-form transition probabilities.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{reduced_two_state, FourStateParams};
use crate::model::{gap_discriminant, DiabaticModel, C64};

/// Default distance below which a foreign degeneracy point counts as touching the path.
pub const BRANCH_TOL: f64 = 1e-6;

const QUAD_TOL: f64 = 1e-10;

// 15-point Kronrod extension of the 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Upper-half-plane degeneracy points of the reduced two-level model,
/// `t = (2ig − ε ± √(ε² − 4iεg)) / (2b)` with the principal root.
pub fn branch_points(b: f64, g: f64, eps: f64) -> Result<(C64, C64)> {
    if !(b > 0.0 && g > 0.0) {
        return Err(Error::InvalidArgument("branch points need b > 0 and g > 0".into()));
    }
    let r = C64::new(eps * eps, -4.0 * eps * g).sqrt();
    let base = C64::new(-eps, 2.0 * g);
    Ok(((base + r) / (2.0 * b), (base - r) / (2.0 * b)))
}

/// Ascending-coefficient polynomial product.
fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots of an ascending-coefficient polynomial from its companion matrix.
pub(crate) fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut m = DMatrix::<C64>::zeros(deg, deg);
    for j in 0..deg {
        m[(0, j)] = -coeffs[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let (_, t) = nalgebra::Schur::new(m).unpack();
    (0..deg).map(|i| t[(i, i)]).collect()
}

/// Analytic continuation of the two-level gap along a straight segment.
///
/// The discriminant is written as `c Π(t − r_k) / t^m`; each factor's square
/// root gets its cut turned away from the segment, so the product is
/// continuous on the whole segment without sampling.
struct SegmentGap {
    scale: C64,
    roots: Vec<(C64, C64)>,
    pole: bool,
}

impl SegmentGap {
    fn new(model: &DiabaticModel, t0: f64, t1: C64, branch_tol: f64) -> Result<Self> {
        if model.n() != 2 {
            return Err(Error::InvalidArgument("the adiabatic exponent needs a two-level model".into()));
        }
        let q = model.quadratic();
        let bs = model.slopes();
        let a = model.couplings();
        let k = model.coulomb();
        let dq = q[0] - q[1];
        let db = bs[0] - bs[1];
        let da = (a[(0, 0)] - a[(1, 1)]).re;
        let dk = k[0] - k[1];
        let g2 = a[(0, 1)].norm_sqr();
        let c = |x: f64| C64::new(x, 0.0);
        // t·(H11 − H22) and t·2|A12|
        let lin = vec![c(dk), c(da), c(db), c(0.5 * dq)];
        let mut num = poly_mul(&lin, &lin);
        num[2] += c(4.0 * g2);
        let pole = dk != 0.0;
        if !pole {
            // no 1/t term: divide out t²
            num.drain(0..2);
        }
        while num.len() > 1 && num.last().is_some_and(|z| z.norm() == 0.0) {
            num.pop();
        }
        if num.len() < 2 {
            return Err(Error::InvalidArgument("the gap has no degeneracy point".into()));
        }
        let lead = *num.last().expect("nonempty");
        let roots_raw = poly_roots(&num);

        let seg = t1 - t0;
        let len = seg.norm();
        let distance = |r: C64| -> f64 {
            if len == 0.0 {
                return (r - t0).norm();
            }
            let s = (((r - t0) * seg.conj()).re / (len * len)).clamp(0.0, 1.0);
            (t0 + seg * s - r).norm()
        };
        let scale = 1.0 + t1.norm().max(t0.abs());
        if pole && distance(C64::new(0.0, 0.0)) < branch_tol {
            return Err(Error::BranchAmbiguity { at: C64::new(0.0, 0.0), gap: 0.0 });
        }
        let mut roots = Vec::with_capacity(roots_raw.len());
        for r in roots_raw {
            if (r - t1).norm() <= 1e-7 * scale {
                // ends the path; the factor's direction is fixed along the segment
                let r = t1;
                let dir = if len == 0.0 { C64::new(1.0, 0.0) } else { (C64::new(t0, 0.0) - r) / len };
                roots.push((r, dir));
                continue;
            }
            if distance(r) < branch_tol {
                let gap = gap_discriminant(model, r).map(|d| d.norm().sqrt()).unwrap_or(0.0);
                return Err(Error::BranchAmbiguity { at: r, gap });
            }
            let a0 = C64::new(t0, 0.0) - r;
            let a1 = t1 - r;
            let span = (a1 / a0).arg();
            let mid = a0.arg() + 0.5 * span;
            roots.push((r, C64::from_polar(1.0, mid)));
        }
        let mut gap = Self { scale: lead.sqrt(), roots, pole };
        let d0 = gap_discriminant(model, C64::new(t0, 0.0))?.sqrt();
        let v0 = gap.eval(C64::new(t0, 0.0));
        if (v0 - d0).norm() > (v0 + d0).norm() {
            gap.scale = -gap.scale;
        }
        Ok(gap)
    }

    fn eval(&self, t: C64) -> C64 {
        let mut v = self.scale;
        for (r, dir) in &self.roots {
            v *= dir.sqrt() * ((t - r) / dir).sqrt();
        }
        if self.pole {
            v /= t;
        }
        v
    }
}

fn kronrod(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

fn adaptive(f: &impl Fn(f64) -> C64, a: f64, b: f64, tol: f64, depth: u32) -> C64 {
    let (k, err) = kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// `Im ∫ ΔE dt` along the straight segment from real `t0` to `t1`, using `BRANCH_TOL`.
pub fn dykhne_action(model: &DiabaticModel, t0: f64, t1: C64) -> Result<f64> {
    dykhne_action_with(model, t0, t1, BRANCH_TOL)
}

/// [`dykhne_action`] with an explicit tolerance for foreign degeneracy points.
pub fn dykhne_action_with(model: &DiabaticModel, t0: f64, t1: C64, branch_tol: f64) -> Result<f64> {
    if !t0.is_finite() || !t1.re.is_finite() || !t1.im.is_finite() {
        return Err(Error::InvalidArgument("non-finite endpoint".into()));
    }
    if t1 == C64::new(t0, 0.0) {
        return Ok(0.0);
    }
    let gap = SegmentGap::new(model, t0, t1, branch_tol)?;
    let seg = t1 - t0;
    // s = 1 − u² absorbs the square-root endpoint singularity
    let f = |u: f64| gap.eval(C64::new(t0, 0.0) + seg * (1.0 - u * u)) * seg * (2.0 * u);
    let total = adaptive(&f, 0.0, 1.0, QUAD_TOL, 40);
    Ok(total.im)
}

/// Which upper-half-plane root set the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DykhneResult {
    pub t1: C64,
    pub t2: C64,
    pub action: f64,
    /// `η e^{−2·action}`, capped at 1.
    pub p: f64,
    pub eta: f64,
    pub selected: RootChoice,
    /// Both roots give the same action (coincident roots at `ε = 0`).
    pub tie: bool,
}

/// Over-gap probability of the reduced two-level model from the root with the smaller action.
pub fn dykhne(b: f64, g: f64, eps: f64, eta: f64) -> Result<DykhneResult> {
    dykhne_from(b, g, eps, eta, 1.0)
}

/// [`dykhne`] with the real start point `t0` of the contour.
pub fn dykhne_from(b: f64, g: f64, eps: f64, eta: f64, t0: f64) -> Result<DykhneResult> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("prefactor must be positive".into()));
    }
    let (t1, t2) = branch_points(b, g, eps)?;
    let model = reduced_two_state(b, g, eps)?;
    let a1 = dykhne_action(&model, t0, t1);
    let a2 = dykhne_action(&model, t0, t2);
    let (action, selected) = match (a1, a2) {
        (Ok(x), Ok(y)) if y < x => (y, RootChoice::Second),
        (Ok(x), _) => (x, RootChoice::First),
        (Err(_), Ok(y)) => (y, RootChoice::Second),
        (Err(e), Err(_)) => return Err(e),
    };
    let tie = (t1 - t2).norm() <= 1e-12 * (1.0 + t1.norm());
    Ok(DykhneResult { t1, t2, action, p: (eta * (-2.0 * action).exp()).min(1.0), eta, selected, tie })
}

/// Semiclassical probability of `1 → 2` in the three-level demonstration model.
pub fn p3_semiclassical(b: f64, g: f64, eps: f64, eta: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    let d = dykhne(b, g, eps, eta)?;
    Ok((1.0 - (-2.0 * std::f64::consts::PI * g * g / b).exp()) * d.p)
}

/// `exp(−2π Σ|γ|²)`.
pub fn be_survival(gammas: &[C64]) -> f64 {
    (-2.0 * std::f64::consts::PI * gammas.iter().map(|g| g.norm_sqr()).sum::<f64>()).exp()
}

/// `2x/(1 + x)` with `x = exp(−πg²/b)`.
pub fn p22_exact_eps0(g: f64, b: f64) -> f64 {
    let x = (-std::f64::consts::PI * g * g / b).exp();
    2.0 * x / (1.0 + x)
}

/// Survival, transfer to level 4 and transfer into the degenerate pair for a
/// start on level 1 of the four-level model.
pub fn p14_exact(p: &FourStateParams) -> Result<(f64, f64, f64)> {
    use std::f64::consts::PI;
    let k = p.kappa();
    let (sp, sm) = p.s_pm()?;
    let p11 = (-2.0 * PI * k).exp();
    let p14 = (-PI * (p.kappa_plus() + k)).exp() * (PI * sp).exp_m1() * (PI * sm).exp_m1();
    Ok((p11, p14, 1.0 - p11 - p14))
}

/// `2(exp(πg²/β) − 1)`.
pub fn avg_n_exact(g: f64, beta: f64) -> f64 {
    2.0 * (std::f64::consts::PI * g * g / beta).exp_m1()
}
