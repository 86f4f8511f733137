//! Diabatic-basis representation of a multistate Landau-Zener Hamiltonian
//!
//! ```text
//! H(t) = diag(Q) t²/2 + diag(B) t + A + diag(K)/t
//! ```
//!
//! together with spectra and branch-tracked gaps at complex time.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative tolerance for the Hermiticity check on the constant part.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// Relative tolerance under which two slopes count as equal.
const SLOPE_TIE_TOL: f64 = 1e-12;

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidModel(format!("{what} is not square")));
    }
    let scale = max_abs(m).max(1.0);
    if hermiticity_defect(m) > HERMITIAN_TOL * scale {
        return Err(Error::InvalidModel(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// One MLZ-type Hamiltonian in its diabatic basis.
///
/// The `t²/2`, `t` and `1/t` parts are diagonal and stored as vectors; all
/// couplings and constant diabatic energies live in the Hermitian matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiabaticModel {
    quadratic: Vec<f64>,
    slopes: Vec<f64>,
    couplings: CMatrix,
    coulomb: Vec<f64>,
    degenerate_allowed: bool,
}

impl DiabaticModel {
    pub fn new(slopes: Vec<f64>, couplings: CMatrix) -> Result<Self> {
        let n = slopes.len();
        if n == 0 {
            return Err(Error::InvalidModel("empty model".into()));
        }
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "coupling matrix is {}x{}, expected {n}x{n}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        if slopes.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidModel("non-finite slope".into()));
        }
        check_hermitian(&couplings, "A")?;
        Ok(Self {
            quadratic: vec![0.0; n],
            slopes,
            couplings,
            coulomb: vec![0.0; n],
            degenerate_allowed: false,
        })
    }

    /// Builds a model from real symmetric couplings given row by row.
    pub fn from_real(slopes: Vec<f64>, couplings: &[Vec<f64>]) -> Result<Self> {
        let n = slopes.len();
        if couplings.len() != n || couplings.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidModel("coupling rows do not match level count".into()));
        }
        let a = CMatrix::from_fn(n, n, |i, j| C64::new(couplings[i][j], 0.0));
        Self::new(slopes, a)
    }

    pub fn with_quadratic(mut self, quadratic: Vec<f64>) -> Result<Self> {
        if quadratic.len() != self.n() {
            return Err(Error::InvalidModel("quadratic vector has wrong length".into()));
        }
        self.quadratic = quadratic;
        Ok(self)
    }

    pub fn with_coulomb(mut self, coulomb: Vec<f64>) -> Result<Self> {
        if coulomb.len() != self.n() {
            return Err(Error::InvalidModel("coulomb vector has wrong length".into()));
        }
        self.coulomb = coulomb;
        Ok(self)
    }

    /// Permits equal slopes among mutually uncoupled levels.
    pub fn allow_degenerate(mut self) -> Self {
        self.degenerate_allowed = true;
        self
    }

    pub fn n(&self) -> usize {
        self.slopes.len()
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.quadratic
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn couplings(&self) -> &CMatrix {
        &self.couplings
    }

    pub fn coulomb(&self) -> &[f64] {
        &self.coulomb
    }

    pub fn degenerate_allowed(&self) -> bool {
        self.degenerate_allowed
    }

    pub fn has_coulomb(&self) -> bool {
        self.coulomb.iter().any(|&k| k != 0.0)
    }

    pub fn hamiltonian_at(&self, t: C64) -> Result<CMatrix> {
        if t == C64::new(0.0, 0.0) && self.has_coulomb() {
            return Err(Error::SingularTime);
        }
        let mut h = self.couplings.clone();
        for i in 0..self.n() {
            let mut d = t * self.slopes[i] + t * t * (0.5 * self.quadratic[i]);
            if self.coulomb[i] != 0.0 {
                d += self.coulomb[i] / t;
            }
            h[(i, i)] += d;
        }
        Ok(h)
    }

    pub fn hamiltonian_real(&self, t: f64) -> Result<CMatrix> {
        self.hamiltonian_at(C64::new(t, 0.0))
    }

    /// Diagonal entry `H_nn(t)` at real time.
    pub fn diabatic_energy(&self, n: usize, t: f64) -> f64 {
        let k = if self.coulomb[n] != 0.0 { self.coulomb[n] / t } else { 0.0 };
        0.5 * self.quadratic[n] * t * t + self.slopes[n] * t + self.couplings[(n, n)].re + k
    }

    /// Checks the slope conditions required for a well-defined scattering problem.
    pub fn check_scattering(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                if !same_asymptotics(self.quadratic[i], self.slopes[i], self.quadratic[j], self.slopes[j]) {
                    continue;
                }
                let coupled = self.couplings[(i, j)].norm() > 0.0;
                if coupled {
                    return Err(Error::InvalidModel(format!(
                        "levels {i} and {j} share a slope but are coupled"
                    )));
                }
                if !self.degenerate_allowed {
                    return Err(Error::InvalidModel(format!(
                        "levels {i} and {j} share a slope; mark the model degenerate_allowed"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn same_asymptotics(q1: f64, b1: f64, q2: f64, b2: f64) -> bool {
    let tie = |x: f64, y: f64| (x - y).abs() <= SLOPE_TIE_TOL * x.abs().max(y.abs()).max(1.0);
    tie(q1, q2) && tie(b1, b2)
}

/// General form `diag(Q)t²/2 + diag(B)t + A + K/t` with a Hermitian (not
/// necessarily diagonal) `K`. Reduced models produced by eliminating a fast
/// level carry their `1/t` term in a rotated frame and land here.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub quadratic: Vec<f64>,
    pub slopes: Vec<f64>,
    pub constant: CMatrix,
    pub coulomb: CMatrix,
}

impl Pencil {
    pub fn dim(&self) -> usize {
        self.slopes.len()
    }

    pub fn has_coulomb(&self) -> bool {
        self.coulomb.iter().any(|z| z.norm() > 0.0)
    }

    pub fn at(&self, t: C64) -> Result<CMatrix> {
        let singular = self.has_coulomb();
        if singular && t == C64::new(0.0, 0.0) {
            return Err(Error::SingularTime);
        }
        let mut h = self.constant.clone();
        if singular {
            h += &self.coulomb / t;
        }
        for i in 0..self.dim() {
            h[(i, i)] += t * self.slopes[i] + t * t * (0.5 * self.quadratic[i]);
        }
        Ok(h)
    }

    pub fn at_real(&self, t: f64) -> Result<CMatrix> {
        self.at(C64::new(t, 0.0))
    }

    /// Real diagonal `H_nn(t)`.
    pub fn diagonal_at(&self, n: usize, t: f64) -> f64 {
        let k = self.coulomb[(n, n)].re;
        let k = if k != 0.0 { k / t } else { 0.0 };
        0.5 * self.quadratic[n] * t * t + self.slopes[n] * t + self.constant[(n, n)].re + k
    }
}

/// Anything that can be propagated as a scattering problem.
pub trait AsPencil {
    fn pencil(&self) -> Pencil;

    /// Permits equal slopes among mutually uncoupled levels.
    fn degenerate_allowed(&self) -> bool {
        false
    }
}

impl AsPencil for DiabaticModel {
    fn pencil(&self) -> Pencil {
        Pencil {
            quadratic: self.quadratic.clone(),
            slopes: self.slopes.clone(),
            constant: self.couplings.clone(),
            coulomb: CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                self.n(),
                self.coulomb.iter().map(|&k| C64::new(k, 0.0)),
            )),
        }
    }

    fn degenerate_allowed(&self) -> bool {
        self.degenerate_allowed
    }
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending spectrum of a Hermitian matrix.
pub fn spectrum(h: &CMatrix) -> Vec<f64> {
    hermitian_eigen(h).0
}

/// Adiabatic energies of `model` at real time, ascending.
pub fn adiabatic_energies(model: &DiabaticModel, t: f64) -> Result<Vec<f64>> {
    Ok(spectrum(&model.hamiltonian_real(t)?))
}

/// Eigenvalue differences of `model` at time `t`.
///
/// At real `t` this returns all adjacent gaps of the sorted spectrum, for any
/// level count. Off the real axis only two-level models are supported and the
/// principal branch of the square root is returned; use [`eigen_gap_along`]
/// when a branch continuous along a path is needed.
pub fn eigen_gap(model: &DiabaticModel, t: C64) -> Result<Vec<C64>> {
    if t.im == 0.0 {
        let e = adiabatic_energies(model, t.re)?;
        return Ok(e.windows(2).map(|w| C64::new(w[1] - w[0], 0.0)).collect());
    }
    Ok(vec![gap_discriminant(model, t)?.sqrt()])
}

/// `(H11 - H22)² + 4 H12 H21` of a two-level model, analytic in `t`.
pub fn gap_discriminant(model: &DiabaticModel, t: C64) -> Result<C64> {
    if model.n() != 2 {
        return Err(Error::InvalidArgument(format!(
            "complex-time gap needs a two-level model, got {} levels",
            model.n()
        )));
    }
    let h = model.hamiltonian_at(t)?;
    let d = h[(0, 0)] - h[(1, 1)];
    Ok(d * d + 4.0 * h[(0, 1)] * h[(1, 0)])
}

/// Two-level gap `ΔE` sampled along a polyline, continued from the path start.
///
/// The branch at the first vertex is the principal one, which is the positive
/// gap when the path starts on the real axis. Each further vertex takes the sign
/// closest to its predecessor. Interior vertices closer than `branch_tol` to a
/// degeneracy make the continuation ambiguous; the final vertex may sit on one.
pub fn eigen_gap_along(model: &DiabaticModel, path: &[C64], branch_tol: f64) -> Result<Vec<C64>> {
    let mut out: Vec<C64> = Vec::with_capacity(path.len());
    for (i, &t) in path.iter().enumerate() {
        let root = gap_discriminant(model, t)?.sqrt();
        let value = match out.last() {
            None => root,
            Some(&prev) => {
                if (root - prev).norm() <= (root + prev).norm() {
                    root
                } else {
                    -root
                }
            }
        };
        let interior = i + 1 < path.len();
        if interior && value.norm() < branch_tol {
            return Err(Error::BranchAmbiguity { at: t, gap: value.norm() });
        }
        out.push(value);
    }
    Ok(out)
}

/// Squared-amplitude view of a final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    Diabatic,
    Interaction,
}

/// Amplitudes on the diabatic basis at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
    pub picture: Picture,
    pub t: f64,
}

impl StateVector {
    pub fn basis(n: usize, level: usize, t: f64) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); n];
        amplitudes[level] = C64::new(1.0, 0.0);
        Self { amplitudes, picture: Picture::Diabatic, t }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Matrix of transition probabilities `P[m][n]` for `m -> n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub p: Vec<Vec<f64>>,
    pub residual_row: f64,
    pub residual_col: f64,
}

impl TransitionMatrix {
    pub fn from_rows(p: Vec<Vec<f64>>) -> Result<Self> {
        let n = p.len();
        if p.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("transition matrix must be square".into()));
        }
        let residual_row = p
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let residual_col = (0..n)
            .map(|c| (p.iter().map(|r| r[c]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(Self { p, residual_row, residual_col })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Entries within `[-1e-9, 1 + 1e-9]` and row/column sums within `tol` of one.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        let in_range = self.p.iter().flatten().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x));
        in_range && self.residual_row <= tol && self.residual_col <= tol
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_deviation(&self, other: &TransitionMatrix) -> f64 {
        self.p
            .iter()
            .flatten()
            .zip(other.p.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn lz(b: f64, g: f64) -> DiabaticModel {
        DiabaticModel::from_real(vec![b, -b], &[vec![0.0, g], vec![g, 0.0]]).unwrap()
    }

    fn demo(b: f64, g: f64, eps: f64) -> DiabaticModel {
        DiabaticModel::from_real(
            vec![b, 0.0, -b],
            &[vec![0.0, g, 0.0], vec![g, eps / 2f64.sqrt(), g], vec![0.0, g, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn hamiltonian_at_zero_time_is_the_constant_part() {
        let g = 0.7;
        let h = lz(1.0, g).hamiltonian_at(c(0.0)).unwrap();
        assert_eq!(h, CMatrix::from_row_slice(2, 2, &[c(0.0), c(g), c(g), c(0.0)]));
    }

    #[test]
    fn three_level_demo_at_unit_time() {
        let h = demo(1.0, 1.0, 3.0).hamiltonian_real(1.0).unwrap();
        let want = [[1.0, 1.0, 0.0], [1.0, 3.0 / 2f64.sqrt(), 1.0], [0.0, 1.0, -1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(h[(i, j)].re, want[i][j], epsilon = 1e-15);
                assert_eq!(h[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn coulomb_model_at_t2() {
        // b=1, g=2, eps=4, kappa=4 -> diag(-kappa/t + eps, -b t)
        let m = DiabaticModel::from_real(vec![0.0, -1.0], &[vec![4.0, 2.0], vec![2.0, 0.0]])
            .unwrap()
            .with_coulomb(vec![-4.0, 0.0])
            .unwrap();
        let h = m.hamiltonian_real(2.0).unwrap();
        assert_relative_eq!(h[(0, 0)].re, 2.0);
        assert_relative_eq!(h[(0, 1)].re, 2.0);
        assert_relative_eq!(h[(1, 1)].re, -2.0);
        assert_eq!(m.hamiltonian_real(0.0), Err(Error::SingularTime));
    }

    #[test]
    fn non_hermitian_couplings_are_rejected() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(1.0, 1.0), C64::new(1.0, 1.0), c(0.0)]);
        assert!(matches!(DiabaticModel::new(vec![1.0, -1.0], a), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn coulomb_gap_simplifies_on_the_positive_axis() {
        let (b, g) = (1.3, 0.8);
        let kappa = g * g / b;
        let m = DiabaticModel::from_real(vec![0.0, -b], &[vec![0.0, g], vec![g, 0.0]])
            .unwrap()
            .with_coulomb(vec![-kappa, 0.0])
            .unwrap();
        for &t in &[0.1, 0.7, 1.0, 3.0, 40.0] {
            let gap = eigen_gap(&m, c(t)).unwrap()[0].re;
            assert_relative_eq!(gap, b * t + g * g / (b * t), max_relative = 1e-12);
        }
    }

    #[test]
    fn constant_gap_without_slopes() {
        let g = 0.35;
        let m = DiabaticModel::from_real(vec![0.0, 0.0], &[vec![0.0, g], vec![g, 0.0]]).unwrap();
        for &t in &[-5.0, 0.0, 2.5] {
            assert_relative_eq!(eigen_gap(&m, c(t)).unwrap()[0].re, 2.0 * g, max_relative = 1e-12);
        }
    }

    /// Closed-form eigenvalues of a real symmetric 3x3 matrix (trigonometric
    /// solution of the characteristic cubic).
    fn symmetric3_eigenvalues(m: [[f64; 3]; 3]) -> [f64; 3] {
        let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut bm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                bm[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det = bm[0][0] * (bm[1][1] * bm[2][2] - bm[1][2] * bm[2][1])
            - bm[0][1] * (bm[1][0] * bm[2][2] - bm[1][2] * bm[2][0])
            + bm[0][2] * (bm[1][0] * bm[2][1] - bm[1][1] * bm[2][0]);
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mut e = [e1, 3.0 * q - e1 - e3, e3];
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn demo_gaps_match_closed_form_cubic() {
        let s = 3.0 / 2f64.sqrt();
        let oracle = symmetric3_eigenvalues([[0.0, 1.0, 0.0], [1.0, s, 1.0], [0.0, 1.0, 0.0]]);
        let gaps = eigen_gap(&demo(1.0, 1.0, 3.0), c(0.0)).unwrap();
        assert_relative_eq!(gaps[0].re, oracle[1] - oracle[0], max_relative = 1e-12);
        assert_relative_eq!(gaps[1].re, oracle[2] - oracle[1], max_relative = 1e-12);
        for &t in &[-4.0, -0.3, 1.7] {
            let h = demo(1.0, 1.0, 3.0).hamiltonian_real(t).unwrap();
            let m = [
                [h[(0, 0)].re, 1.0, 0.0],
                [1.0, h[(1, 1)].re, 1.0],
                [0.0, 1.0, h[(2, 2)].re],
            ];
            let e = symmetric3_eigenvalues(m);
            let got = adiabatic_energies(&demo(1.0, 1.0, 3.0), t).unwrap();
            for k in 0..3 {
                assert_relative_eq!(got[k], e[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gap_continuation_flips_sign_across_the_cut() {
        let m = lz(1.0, 1.0);
        // Circle around the branch point at t = i: the gap changes sign once.
        let path: Vec<C64> = (0..=400)
            .map(|k| {
                let th = -std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / 400.0;
                C64::new(0.0, 1.0) + 0.5 * C64::from_polar(1.0, th)
            })
            .collect();
        let gaps = eigen_gap_along(&m, &path, 1e-6).unwrap();
        assert_relative_eq!((gaps[0] + gaps[400]).norm(), 0.0, epsilon = 1e-9);
        assert!(gaps[0].re > 0.0);
    }

    #[test]
    fn gap_continuation_reports_interior_degeneracy() {
        let m = lz(1.0, 1.0);
        let path = vec![C64::new(0.5, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 2.0)];
        assert!(matches!(eigen_gap_along(&m, &path, 1e-8), Err(Error::BranchAmbiguity { .. })));
        // Ending on the branch point is allowed.
        assert!(eigen_gap_along(&m, &path[..2], 1e-8).is_ok());
    }

    #[test]
    fn degenerate_slopes_need_the_flag() {
        let m = DiabaticModel::from_real(
            vec![1.0, 0.0, 0.0],
            &[vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.0], vec![0.5, 0.0, 0.0]],
        )
        .unwrap();
        assert!(m.check_scattering().is_err());
        assert!(m.clone().allow_degenerate().check_scattering().is_ok());
        let coupled = DiabaticModel::from_real(vec![0.0, 0.0], &[vec![0.0, 0.5], vec![0.5, 0.0]])
            .unwrap()
            .allow_degenerate();
        assert!(coupled.check_scattering().is_err());
    }

    #[test]
    fn transition_matrix_residuals() {
        let tm = TransitionMatrix::from_rows(vec![vec![0.3, 0.7], vec![0.7, 0.3]]).unwrap();
        assert!(tm.is_doubly_stochastic(1e-12));
        let bad = TransitionMatrix::from_rows(vec![vec![0.3, 0.6], vec![0.7, 0.3]]).unwrap();
        assert_relative_eq!(bad.residual_row, 0.1, epsilon = 1e-12);
        assert!(!bad.is_doubly_stochastic(1e-6));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn model_strategy() -> impl Strategy<Value = DiabaticModel> {
            (2usize..5)
                .prop_flat_map(|n| {
                    (
                        proptest::collection::vec(-3.0..3.0f64, n),
                        proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n * n),
                    )
                })
                .prop_map(|(slopes, raw)| {
                    let n = slopes.len();
                    let m = CMatrix::from_fn(n, n, |i, j| C64::new(raw[i * n + j].0, raw[i * n + j].1));
                    let a = (&m + m.adjoint()) * C64::new(0.5, 0.0);
                    DiabaticModel::new(slopes, a).unwrap()
                })
        }

        proptest! {
            #[test]
            fn real_time_hamiltonian_is_hermitian(m in model_strategy(), t in -50.0..50.0f64) {
                let h = m.hamiltonian_real(t).unwrap();
                prop_assert!(hermiticity_defect(&h) <= 1e-14 * max_abs(&h).max(1.0));
            }

            #[test]
            fn slope_reversal_symmetry(m in model_strategy(), t in -50.0..50.0f64) {
                let reversed = DiabaticModel::new(
                    m.slopes().iter().map(|b| -b).collect(),
                    m.couplings().clone(),
                ).unwrap();
                let h1 = m.hamiltonian_real(t).unwrap();
                let h2 = reversed.hamiltonian_real(-t).unwrap();
                prop_assert!(max_abs(&(h1 - h2)) == 0.0);
            }

            #[test]
            fn two_level_gap_matches_trace_and_determinant(
                b in 0.1..3.0f64, g in 0.0..2.0f64, e in -2.0..2.0f64,
                tr in -20.0..20.0f64, ti in -5.0..5.0f64,
            ) {
                let m = DiabaticModel::from_real(vec![b, -b], &[vec![e, g], vec![g, 0.0]]).unwrap();
                let t = C64::new(tr, ti);
                let h = m.hamiltonian_at(t).unwrap();
                let tr_h = h[(0, 0)] + h[(1, 1)];
                let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
                let gap = eigen_gap(&m, t).unwrap()[0];
                let lhs = gap * gap;
                let rhs = tr_h * tr_h - 4.0 * det;
                prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
            }
        }
    }
}
