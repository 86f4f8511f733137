//! Concrete model families: the τ-parametrized three-state model with its
//! time-quadratic partner, reduced Coulomb models, LZ-chains with
//! q-deformation, and the degenerate four-state model.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AsPencil, CMatrix, DiabaticModel, Pencil, TransitionMatrix, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// How the slopes `b1(τ)`, `b2(τ)` of the three-state family depend on τ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeMap {
    /// `b1 = β1 τ`, `b2 = β2`.
    #[default]
    FirstLinear,
    /// Both slopes frozen at their reference values.
    Constant,
    /// `b1 = β1 τ^p`, `b2 = β2`.
    FirstPower { exponent: f64 },
    /// `b1 = β1 τ`, `b2 = β2 / τ`.
    Opposed,
}

/// Deliberate violations of the family construction, used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakage {
    #[default]
    None,
    /// Middle-level energy held at its τ = 1 value.
    FrozenEpsilon,
    /// Couplings held at γ instead of being rescaled with the slopes.
    FrozenCouplings,
}

/// Slopes and their τ-derivatives at one τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePoint {
    pub b1: f64,
    pub b2: f64,
    pub db1: f64,
    pub db2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateFamily {
    pub gamma12: C64,
    pub gamma13: C64,
    pub gamma23: C64,
    pub eps0: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default)]
    pub slope_map: SlopeMap,
    #[serde(default)]
    pub breakage: Breakage,
}

/// Time-quadratic partner `H' = diag(Q) t²/2 + L t + D` at one τ.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPartner {
    pub q: Vec<f64>,
    pub l: CMatrix,
    pub d: CMatrix,
    pub r2: f64,
}

impl QuadraticPartner {
    pub fn at(&self, t: f64) -> CMatrix {
        let mut h = &self.l * c(t) + &self.d;
        for (i, q) in self.q.iter().enumerate() {
            h[(i, i)] += 0.5 * q * t * t;
        }
        h
    }

    /// `∂t H'`.
    pub fn time_derivative(&self, t: f64) -> CMatrix {
        let mut h = self.l.clone();
        for (i, q) in self.q.iter().enumerate() {
            h[(i, i)] += q * t;
        }
        h
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&x| x == 0.0)
            && self.l.iter().all(|z| z.norm() == 0.0)
            && self.d.iter().all(|z| z.norm() == 0.0)
    }
}

impl ThreeStateFamily {
    /// Family with real couplings and the default slope map.
    pub fn real(gamma12: f64, gamma13: f64, gamma23: f64, eps0: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            gamma12: c(gamma12),
            gamma13: c(gamma13),
            gamma23: c(gamma23),
            eps0,
            beta1,
            beta2,
            slope_map: SlopeMap::FirstLinear,
            breakage: Breakage::None,
        }
    }

    pub fn with_slope_map(mut self, slope_map: SlopeMap) -> Self {
        self.slope_map = slope_map;
        self
    }

    pub fn broken(mut self, breakage: Breakage) -> Self {
        self.breakage = breakage;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return Err(Error::InvalidModel("reference slopes must be positive".into()));
        }
        if !self.eps0.is_finite() {
            return Err(Error::InvalidModel("eps0 must be finite".into()));
        }
        Ok(())
    }

    pub fn slopes(&self, tau: f64) -> Result<SlopePoint> {
        self.validate()?;
        let (b1, b2) = (self.beta1, self.beta2);
        let p = match self.slope_map {
            SlopeMap::FirstLinear => SlopePoint { b1: b1 * tau, b2, db1: b1, db2: 0.0 },
            SlopeMap::Constant => SlopePoint { b1, b2, db1: 0.0, db2: 0.0 },
            SlopeMap::FirstPower { exponent } => SlopePoint {
                b1: b1 * tau.powf(exponent),
                b2,
                db1: b1 * exponent * tau.powf(exponent - 1.0),
                db2: 0.0,
            },
            SlopeMap::Opposed => SlopePoint { b1: b1 * tau, b2: b2 / tau, db1: b1, db2: -b2 / (tau * tau) },
        };
        let ok = [p.b1, p.b2, p.db1, p.db2].iter().all(|x| x.is_finite());
        if !ok || p.b1 <= 0.0 || p.b2 <= 0.0 {
            return Err(Error::DegenerateSlopes { tau });
        }
        Ok(p)
    }

    fn couplings(&self, s: &SlopePoint) -> [C64; 3] {
        if self.breakage == Breakage::FrozenCouplings {
            return [self.gamma12, self.gamma13, self.gamma23];
        }
        [
            self.gamma12 * (s.b1 / self.beta1).sqrt(),
            self.gamma13 * ((s.b1 + s.b2) / (self.beta1 + self.beta2)).sqrt(),
            self.gamma23 * (s.b2 / self.beta2).sqrt(),
        ]
    }

    fn coupling_derivatives(&self, s: &SlopePoint) -> [C64; 3] {
        if self.breakage == Breakage::FrozenCouplings {
            return [c(0.0); 3];
        }
        let (b1, b2) = (self.beta1, self.beta2);
        [
            self.gamma12 * (s.db1 / (2.0 * (b1 * s.b1).sqrt())),
            self.gamma13 * ((s.db1 + s.db2) / (2.0 * ((b1 + b2) * (s.b1 + s.b2)).sqrt())),
            self.gamma23 * (s.db2 / (2.0 * (b2 * s.b2).sqrt())),
        ]
    }

    fn epsilon(&self, s: &SlopePoint) -> f64 {
        if self.breakage == Breakage::FrozenEpsilon {
            let (b1, b2) = (self.beta1, self.beta2);
            return self.eps0 * (b1 * b2 / (b1 + b2)).sqrt();
        }
        self.eps0 * (s.b1 * s.b2 / (s.b1 + s.b2)).sqrt()
    }

    fn epsilon_derivative(&self, s: &SlopePoint) -> f64 {
        if self.breakage == Breakage::FrozenEpsilon {
            return 0.0;
        }
        let sum = s.b1 + s.b2;
        let p = s.b1 * s.b2 / sum;
        let dp = (s.db1 * s.b2 * s.b2 + s.db2 * s.b1 * s.b1) / (sum * sum);
        self.eps0 * dp / (2.0 * p.sqrt())
    }

    fn assemble(g: [C64; 3], eps: f64) -> CMatrix {
        let [g12, g13, g23] = g;
        CMatrix::from_row_slice(
            3,
            3,
            &[c(0.0), g12, g13, g12.conj(), c(eps), g23, g13.conj(), g23.conj(), c(0.0)],
        )
    }

    /// Constant part `A(τ)`.
    pub fn constant(&self, tau: f64) -> Result<CMatrix> {
        let s = self.slopes(tau)?;
        Ok(Self::assemble(self.couplings(&s), self.epsilon(&s)))
    }

    /// Closed-form `∂τ A(τ)`.
    pub fn constant_derivative(&self, tau: f64) -> Result<CMatrix> {
        let s = self.slopes(tau)?;
        Ok(Self::assemble(self.coupling_derivatives(&s), self.epsilon_derivative(&s)))
    }

    pub fn model(&self, tau: f64) -> Result<DiabaticModel> {
        let s = self.slopes(tau)?;
        DiabaticModel::new(vec![s.b1, 0.0, -s.b2], Self::assemble(self.couplings(&s), self.epsilon(&s)))
    }

    /// `(b2 ∂b1 − b1 ∂b2) / (b1 b2 (b1 + b2))`.
    pub fn r2(&self, tau: f64) -> Result<f64> {
        let s = self.slopes(tau)?;
        Ok((s.b2 * s.db1 - s.b1 * s.db2) / (s.b1 * s.b2 * (s.b1 + s.b2)))
    }

    pub fn partner(&self, tau: f64) -> Result<QuadraticPartner> {
        let s = self.slopes(tau)?;
        let a = self.constant(tau)?;
        let r2 = self.r2(tau)?;
        let d = (&a * &a) * c(0.5 * r2);
        Ok(QuadraticPartner {
            q: vec![s.db1, 0.0, -s.db2],
            l: self.constant_derivative(tau)?,
            d,
            r2,
        })
    }

    /// Area of the triangle formed by the three diabatic levels.
    pub fn triangle_area(&self, tau: f64) -> Result<f64> {
        let s = self.slopes(tau)?;
        let eps = self.epsilon(&s);
        Ok(0.5 * eps * eps * (1.0 / s.b1 + 1.0 / s.b2))
    }
}

/// Three levels with slopes `(b, 0, −b)`, couplings `g` to the middle level and
/// middle energy `ε/√2`.
pub fn demo_three_state(b: f64, g: f64, eps: f64) -> Result<DiabaticModel> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    DiabaticModel::from_real(
        vec![b, 0.0, -b],
        &[vec![0.0, g, 0.0], vec![g, eps / 2f64.sqrt(), g], vec![0.0, g, 0.0]],
    )
}

/// Two levels `diag(ε − κ/t, −bt)` with coupling `g` and `κ = g²/b`.
pub fn reduced_two_state(b: f64, g: f64, eps: f64) -> Result<DiabaticModel> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    DiabaticModel::from_real(vec![0.0, -b], &[vec![eps, g], vec![g, 0.0]])?
        .with_coulomb(vec![-g * g / b, 0.0])
}

/// Bright/dark split of the two slow levels seen by the eliminated fast level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitter {
    /// Components of `ψ1` on `(|2⟩, |3⟩)`.
    pub psi1: [f64; 2],
    /// Components of `ψ2` on `(|2⟩, |3⟩)`.
    pub psi2: [f64; 2],
    /// Coulomb strength on `ψ1`.
    pub kappa: f64,
    /// Probability of leaving level 1 through the fast crossing.
    pub p_fast: f64,
}

/// Effective two-level model left after integrating out the fast level 1 of a
/// three-state family. The `1/t` term acts on `ψ1`, so in the `{|2⟩,|3⟩}`
/// basis it is generally not diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedThreeState {
    pub pencil: Pencil,
    pub splitter: Splitter,
}

impl ReducedThreeState {
    /// The same model as a [`DiabaticModel`]; only possible when `ψ1` is a
    /// basis vector, i.e. when one of the fast couplings vanishes.
    pub fn to_diabatic(&self) -> Result<DiabaticModel> {
        let k = &self.pencil.coulomb;
        if k[(0, 1)].norm() != 0.0 {
            return Err(Error::InvalidModel("1/t term is not diagonal in the diabatic basis".into()));
        }
        DiabaticModel::new(self.pencil.slopes.clone(), self.pencil.constant.clone())?
            .with_coulomb(vec![k[(0, 0)].re, k[(1, 1)].re])
    }
}

impl AsPencil for ReducedThreeState {
    fn pencil(&self) -> Pencil {
        self.pencil.clone()
    }
}

/// Integrates out level 1 in the limit `b1 → ∞` of the default slope map.
pub fn reduce_three_state(fam: &ThreeStateFamily) -> Result<ReducedThreeState> {
    fam.validate()?;
    if [fam.gamma12, fam.gamma13, fam.gamma23].iter().any(|g| g.im != 0.0) {
        return Err(Error::ComplexCouplingUnsupported);
    }
    let c12 = fam.gamma12.re / fam.beta1.sqrt();
    let c13 = fam.gamma13.re / (fam.beta1 + fam.beta2).sqrt();
    let kappa = c12 * c12 + c13 * c13;
    if kappa == 0.0 {
        return Err(Error::DegenerateReduction);
    }
    let norm = kappa.sqrt();
    let psi1 = [c12 / norm, c13 / norm];
    let psi2 = [c13 / norm, -c12 / norm];
    let coulomb = CMatrix::from_fn(2, 2, |i, j| c(-kappa * psi1[i] * psi1[j]));
    let eps = fam.eps0 * fam.beta2.sqrt();
    let g23 = fam.gamma23.re;
    let pencil = Pencil {
        quadratic: vec![0.0, 0.0],
        slopes: vec![0.0, -fam.beta2],
        constant: CMatrix::from_row_slice(2, 2, &[c(eps), c(g23), c(g23), c(0.0)]),
        coulomb,
    };
    let p_fast = 1.0 - (-2.0 * std::f64::consts::PI * kappa).exp();
    Ok(ReducedThreeState { pencil, splitter: Splitter { psi1, psi2, kappa, p_fast } })
}

/// Level-1 row `(P₁→₁, P₁→₂, P₁→₃)` from the fast crossing and the effective
/// `ψ1`-initialized scattering row over `(|2⟩, |3⟩)`.
pub fn compose_from_level1(p_fast: f64, psi1_row: &[f64]) -> Result<[f64; 3]> {
    if psi1_row.len() != 2 {
        return Err(Error::InvalidArgument("effective row must have two entries".into()));
    }
    Ok([1.0 - p_fast, p_fast * psi1_row[0], p_fast * psi1_row[1]])
}

/// Same as [`compose_from_level1`], taking the `ψ1` row from a transition matrix.
pub fn compose_from_matrix(p_fast: f64, p_eff: &TransitionMatrix, psi1_index: usize) -> Result<[f64; 3]> {
    let row = p_eff
        .p
        .get(psi1_index)
        .ok_or_else(|| Error::InvalidArgument("row index out of range".into()))?;
    compose_from_level1(p_fast, row)
}

/// Nearest-neighbour LZ-chain with diabatic slopes and couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_levels: usize,
    pub beta: f64,
    pub g_base: f64,
    pub slopes: Vec<f64>,
    pub couplings: Vec<f64>,
    pub q: f64,
}

/// Number sectors `|n, n+1⟩` of the two-mode dissociation model, truncated to
/// `n_max` levels.
pub fn bosonic_chain_sector(n_max: usize, beta: f64, g: f64) -> Result<ChainSpec> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let slopes = (0..n_max).map(|n| beta * n as f64).collect();
    let couplings = (0..n_max - 1)
        .map(|n| g / 2f64.sqrt() * (((n + 1) * (n + 2)) as f64).sqrt())
        .collect();
    Ok(ChainSpec { n_levels: n_max, beta, g_base: g, slopes, couplings, q: 1.0 })
}

impl ChainSpec {
    /// Chain with slopes `βn` and the given couplings.
    pub fn linear(beta: f64, couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidArgument("a chain needs at least one coupling".into()));
        }
        let n = couplings.len() + 1;
        let g_base = couplings[0];
        Ok(Self {
            n_levels: n,
            beta,
            g_base,
            slopes: (0..n).map(|k| beta * k as f64).collect(),
            couplings,
            q: 1.0,
        })
    }

    pub fn slope_gaps(&self) -> Vec<f64> {
        self.slopes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `|gₙ|² / (βₙ₊₁ − βₙ)` for every link.
    pub fn adiabaticity(&self) -> Vec<f64> {
        self.couplings.iter().zip(self.slope_gaps()).map(|(g, d)| g * g / d).collect()
    }

    /// Applies the slope map `βₙ → βₙ / (q + (1 − q) βₙ/β)` and rescales the
    /// couplings so that every adiabaticity ratio is kept. Deformations
    /// compose multiplicatively in `q`.
    pub fn q_deform(&self, q: f64) -> Result<ChainSpec> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::DeformationSingular { n: 0 });
        }
        if q == 1.0 {
            return Ok(self.clone());
        }
        let mut slopes = Vec::with_capacity(self.n_levels);
        for (n, &b) in self.slopes.iter().enumerate() {
            let den = q + (1.0 - q) * b / self.beta;
            if den <= 0.0 {
                return Err(Error::DeformationSingular { n });
            }
            slopes.push(b / den);
        }
        let old = self.slope_gaps();
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for (n, (&g, &d_old)) in self.couplings.iter().zip(&old).enumerate() {
            let d_new = slopes[n + 1] - slopes[n];
            let ratio = d_new / d_old;
            if !(ratio > 0.0) || !ratio.is_finite() {
                return Err(Error::DeformationSingular { n });
            }
            couplings.push(g * ratio.sqrt());
        }
        Ok(ChainSpec {
            n_levels: self.n_levels,
            beta: self.beta,
            g_base: self.g_base,
            slopes,
            couplings,
            q: self.q * q,
        })
    }

    pub fn couplings_matrix(&self) -> CMatrix {
        let n = self.n_levels;
        let mut a = CMatrix::zeros(n, n);
        for (k, &g) in self.couplings.iter().enumerate() {
            a[(k, k + 1)] = c(g);
            a[(k + 1, k)] = c(g);
        }
        a
    }

    pub fn model(&self) -> Result<DiabaticModel> {
        if self.slopes.len() != self.n_levels || self.couplings.len() + 1 != self.n_levels {
            return Err(Error::InvalidModel("chain vectors do not match n_levels".into()));
        }
        DiabaticModel::new(self.slopes.clone(), self.couplings_matrix())
    }
}

/// Continuous deformation `q(τ) = exp(βrτ)` of an undeformed chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFamily {
    pub base: ChainSpec,
    pub r: f64,
}

impl ChainFamily {
    pub fn q_at(&self, tau: f64) -> f64 {
        (self.base.beta * self.r * tau).exp()
    }

    pub fn spec(&self, tau: f64) -> Result<ChainSpec> {
        self.base.q_deform(self.q_at(tau))
    }

    /// `D(τ) = (r/2) A(τ)²`.
    pub fn partner_constant(&self, tau: f64) -> Result<CMatrix> {
        let a = self.spec(tau)?.couplings_matrix();
        Ok((&a * &a) * c(0.5 * self.r))
    }
}

/// Slope differences `(Δ34, Δ24, Δ13, Δ12)` of the bipartite four-level
/// family with `Δ34 = b` held fixed.
pub fn bipartite_4slopes(b: f64, b1: f64, r2: f64, tau: f64) -> Result<[f64; 4]> {
    let e = (r2 * b * tau).exp();
    let x = b + b1 * (1.0 - e);
    let y = b * (e - 2.0) + b1 * (e - 1.0);
    if x == 0.0 || !x.is_finite() {
        return Err(Error::DeformationSingular { n: 2 });
    }
    if y == 0.0 || !y.is_finite() {
        return Err(Error::DeformationSingular { n: 1 });
    }
    let d34 = b;
    let d24 = b * (b + b1) / x;
    let d13 = -b * (b + b1) * e / y;
    let d12 = -b * b * b * e / (x * y);
    Ok([d34, d24, d13, d12])
}

/// Four-level bipartite model built on [`bipartite_4slopes`]: slopes are fixed
/// by `B44 = 0` and the Δ's; couplings `γ_ij √Δ_ij` on the links
/// `(1,2), (1,3), (2,4), (3,4)`.
pub fn bipartite_4state_model(b: f64, b1: f64, r2: f64, tau: f64, gamma: [C64; 4]) -> Result<DiabaticModel> {
    let [d34, d24, d13, d12] = bipartite_4slopes(b, b1, r2, tau)?;
    if [d34, d24, d13, d12].iter().any(|&d| d <= 0.0) {
        return Err(Error::DegenerateSlopes { tau });
    }
    let b44 = 0.0;
    let b33 = b44 + d34;
    let b22 = b44 + d24;
    let b11 = b22 + d12;
    let mut a = CMatrix::zeros(4, 4);
    let links = [(0, 1, d12), (0, 2, d13), (1, 3, d24), (2, 3, d34)];
    for (k, &(i, j, d)) in links.iter().enumerate() {
        let g = gamma[k] * d.sqrt();
        a[(i, j)] = g;
        a[(j, i)] = g.conj();
    }
    DiabaticModel::new(vec![b11, b22, b33, b44], a)
}

/// Parameters of the four-level model with two degenerate middle levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourStateParams {
    pub b: f64,
    pub g1: C64,
    pub g2: C64,
    pub g3: C64,
    pub g4: C64,
}

impl FourStateParams {
    /// `g1 = g e^{iφ}`, `g2 = g3 = g4 = g`.
    pub fn phase_sweep(b: f64, g: f64, phi: f64) -> Self {
        Self { b, g1: C64::from_polar(g, phi), g2: c(g), g3: c(g), g4: c(g) }
    }

    fn bright_norm(&self) -> f64 {
        (self.g1.norm_sqr() + self.g2.norm_sqr()).sqrt()
    }

    pub fn kappa(&self) -> f64 {
        (self.g1.norm_sqr() + self.g2.norm_sqr()) / self.b
    }

    /// Coupling of `ψ1 ∝ g1*|2⟩ + g2*|3⟩` to level 4.
    pub fn gamma1(&self) -> C64 {
        (self.g1 * self.g3.conj() + self.g2 * self.g4.conj()) / self.bright_norm()
    }

    /// Coupling of `ψ2 ∝ g2|2⟩ − g1|3⟩` to level 4.
    pub fn gamma2(&self) -> C64 {
        (self.g2.conj() * self.g3.conj() - self.g1.conj() * self.g4.conj()) / self.bright_norm()
    }

    pub fn kappa_plus(&self) -> f64 {
        (self.gamma1().norm_sqr() + self.gamma2().norm_sqr()) / self.b
    }

    pub fn kappa_minus(&self) -> f64 {
        (self.gamma1().norm_sqr() - self.gamma2().norm_sqr()) / self.b
    }

    /// `(s₊, s₋)`; errors when the square-root argument is negative.
    pub fn s_pm(&self) -> Result<(f64, f64)> {
        let k = self.kappa();
        let kp = self.kappa_plus();
        let km = self.kappa_minus();
        let disc = kp * kp + k * (k - 2.0 * km);
        if disc < 0.0 {
            return Err(Error::ComplexExponents { discriminant: disc });
        }
        let r = disc.sqrt();
        Ok((0.5 * (kp + k + r), 0.5 * (kp + k - r)))
    }

    /// `ψ1`, `ψ2` as vectors on `(|2⟩, |3⟩)`.
    pub fn bright_dark(&self) -> Result<([C64; 2], [C64; 2])> {
        let n = self.bright_norm();
        if n == 0.0 {
            return Err(Error::DegenerateReduction);
        }
        Ok(([self.g1.conj() / n, self.g2.conj() / n], [self.g2 / n, -self.g1 / n]))
    }

    pub fn model(&self) -> Result<DiabaticModel> {
        if !(self.b > 0.0) {
            return Err(Error::InvalidArgument("b must be positive".into()));
        }
        let z = c(0.0);
        let (g1, g2, g3, g4) = (self.g1, self.g2, self.g3, self.g4);
        let a = CMatrix::from_row_slice(
            4,
            4,
            &[
                z, g1, g2, z, //
                g1.conj(), z, z, g3.conj(), //
                g2.conj(), z, z, g4.conj(), //
                z, g3, g4, z,
            ],
        );
        Ok(DiabaticModel::new(vec![self.b, 0.0, 0.0, -self.b], a)?.allow_degenerate())
    }

    /// Three-level model on `(ψ1, ψ2, |4⟩)` after integrating out level 1.
    pub fn effective_coulomb(&self) -> Result<DiabaticModel> {
        if !(self.b > 0.0) {
            return Err(Error::InvalidArgument("b must be positive".into()));
        }
        if self.bright_norm() == 0.0 {
            return Err(Error::DegenerateReduction);
        }
        let (g1, g2) = (self.gamma1(), self.gamma2());
        let z = c(0.0);
        let a = CMatrix::from_row_slice(3, 3, &[z, z, g1, z, z, g2, g1.conj(), g2.conj(), z]);
        Ok(DiabaticModel::new(vec![0.0, 0.0, -self.b], a)?
            .with_coulomb(vec![-self.kappa(), 0.0, 0.0])?
            .allow_degenerate())
    }
}

pub fn four_state_model(p: &FourStateParams) -> Result<DiabaticModel> {
    p.model()
}

pub fn effective_coulomb_3state(p: &FourStateParams) -> Result<DiabaticModel> {
    p.effective_coulomb()
}

/// Diagonal matrix helper shared by tests and the integrability checks.
pub fn diag(v: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))
}

/// `D(τ) = (r₂/2) A(τ)²` for [`bipartite_4state_model`].
pub fn bipartite_partner_constant(b: f64, b1: f64, r2: f64, tau: f64, gamma: [C64; 4]) -> Result<CMatrix> {
    let a = bipartite_4state_model(b, b1, r2, tau, gamma)?.couplings().clone();
    Ok((&a * &a) * c(0.5 * r2))
}
