//! Scenario documents: parsing, overrides and validation.
//!
//! A scenario is one JSON object with the keys `kind`, `params`, and
//! optionally `name`, `output` and `config` (a partial [`ScatterConfig`]).
//! Validation collects every problem it finds instead of stopping at the first.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use mlz_core::families::{
    bosonic_chain_sector, demo_three_state, reduced_two_state, Breakage, FourStateParams, SlopeMap, ThreeStateFamily,
};
use mlz_core::propagator::ScatterConfig;
use mlz_core::{CMatrix, DiabaticModel, Error, C64};

pub const KINDS: [&str; 8] = [
    "spectrum",
    "propagate",
    "invariance",
    "dykhne_sweep",
    "fig6_sweep",
    "chain_avg_n",
    "four_state_sweep",
    "integrability_report",
];

const TOP_LEVEL: [&str; 5] = ["kind", "name", "output", "config", "params"];

/// One validation problem, addressed by a dotted path into the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

/// A set of sample points: a number, a list, or `{start, stop, step | count}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Single(f64),
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        count: Option<usize>,
    },
}

impl Grid {
    /// Points in ascending order. Range points are `start + k·step`, never accumulated.
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let mut v = match *self {
            Grid::Single(x) => vec![x],
            Grid::List(ref xs) => xs.clone(),
            Grid::Range { start, stop, step, count } => match (step, count) {
                (Some(h), None) => {
                    if !(h > 0.0) || !(stop >= start) {
                        return Err("range needs step > 0 and stop >= start".into());
                    }
                    let n = ((stop - start) / h + 1e-9).floor() as usize + 1;
                    if n > 1_000_000 {
                        return Err(format!("range has {n} points"));
                    }
                    (0..n).map(|k| start + k as f64 * h).collect()
                }
                (None, Some(n)) => match n {
                    0 => return Err("count must be at least 1".into()),
                    1 => vec![start],
                    _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
                },
                _ => return Err("range needs exactly one of step or count".into()),
            },
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err("grid contains a non-finite value".into());
        }
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// Three-state family with real couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub gamma12: f64,
    pub gamma13: f64,
    pub gamma23: f64,
    pub eps0: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default)]
    pub slope_map: SlopeMap,
    #[serde(default)]
    pub breakage: Breakage,
}

const FAMILY_FIELDS: [&str; 6] = ["gamma12", "gamma13", "gamma23", "eps0", "beta1", "beta2"];

impl FamilySpec {
    pub fn family(&self) -> ThreeStateFamily {
        ThreeStateFamily::real(self.gamma12, self.gamma13, self.gamma23, self.eps0, self.beta1, self.beta2)
            .with_slope_map(self.slope_map)
            .broken(self.breakage)
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Diabatic {
        slopes: Vec<f64>,
        couplings: Vec<Vec<f64>>,
        #[serde(default)]
        couplings_im: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        quadratic: Option<Vec<f64>>,
        #[serde(default)]
        coulomb: Option<Vec<f64>>,
        #[serde(default)]
        allow_degenerate: bool,
    },
    ThreeStateFamily {
        family: FamilySpec,
        tau: f64,
    },
    DemoThreeState {
        b: f64,
        g: f64,
        eps: f64,
    },
    ReducedTwoState {
        b: f64,
        g: f64,
        eps: f64,
    },
    Chain {
        n_max: usize,
        beta: f64,
        g_base: f64,
        #[serde(default = "one")]
        q: f64,
    },
    FourState {
        b: f64,
        g: f64,
        phi: f64,
    },
    EffectiveCoulomb {
        b: f64,
        g: f64,
        phi: f64,
    },
}

fn model_fields(ty: &str) -> Option<&'static [&'static str]> {
    Some(match ty {
        "diabatic" => &["slopes", "couplings"],
        "three_state_family" => &["family", "tau"],
        "demo_three_state" | "reduced_two_state" => &["b", "g", "eps"],
        "chain" => &["n_max", "beta", "g_base"],
        "four_state" | "effective_coulomb" => &["b", "g", "phi"],
        _ => return None,
    })
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> mlz_core::Result<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidModel(format!("{what} must be {n}x{n}")));
    }
    Ok(())
}

impl ModelSpec {
    pub fn build(&self) -> mlz_core::Result<DiabaticModel> {
        match self {
            ModelSpec::Diabatic { slopes, couplings, couplings_im, quadratic, coulomb, allow_degenerate } => {
                let n = slopes.len();
                square(couplings, n, "couplings")?;
                if let Some(im) = couplings_im {
                    square(im, n, "couplings_im")?;
                }
                let a = CMatrix::from_fn(n, n, |i, j| {
                    C64::new(couplings[i][j], couplings_im.as_ref().map_or(0.0, |im| im[i][j]))
                });
                let mut m = DiabaticModel::new(slopes.clone(), a)?;
                if let Some(q) = quadratic {
                    m = m.with_quadratic(q.clone())?;
                }
                if let Some(k) = coulomb {
                    m = m.with_coulomb(k.clone())?;
                }
                Ok(if *allow_degenerate { m.allow_degenerate() } else { m })
            }
            ModelSpec::ThreeStateFamily { family, tau } => family.family().model(*tau),
            ModelSpec::DemoThreeState { b, g, eps } => demo_three_state(*b, *g, *eps),
            ModelSpec::ReducedTwoState { b, g, eps } => reduced_two_state(*b, *g, *eps),
            ModelSpec::Chain { n_max, beta, g_base, q } => bosonic_chain_sector(*n_max, *beta, *g_base)?.q_deform(*q)?.model(),
            ModelSpec::FourState { b, g, phi } => FourStateParams::phase_sweep(*b, *g, *phi).model(),
            ModelSpec::EffectiveCoulomb { b, g, phi } => FourStateParams::phase_sweep(*b, *g, *phi).effective_coulomb(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub model: ModelSpec,
    pub t: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateParams {
    pub model: ModelSpec,
    /// 1-based; the full transition matrix is computed when absent.
    #[serde(default)]
    pub initial_level: Option<usize>,
    /// Start at `0+` instead of `−T` (models with a Coulomb level).
    #[serde(default)]
    pub halfline: bool,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceParams {
    pub family: FamilySpec,
    pub tau: Grid,
    #[serde(default = "two")]
    pub initial_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DykhneParams {
    pub b: f64,
    pub g: f64,
    pub eps: Grid,
    #[serde(default = "one")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeLevelSweepParams {
    pub b: f64,
    pub g: Grid,
    pub eps: Grid,
    #[serde(default = "one")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub beta: f64,
    /// Number of diabatic levels kept.
    pub n_max: usize,
    /// Base coupling values to sweep.
    pub g_base: Grid,
    #[serde(default = "half")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourStateSweepParams {
    pub b: f64,
    pub g: f64,
    pub phi: Grid,
}

fn chain_tau() -> Grid {
    Grid::List(vec![-1.0, -0.5, -0.2, 0.0, 0.1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainCheck {
    pub n_max: usize,
    pub beta: f64,
    pub g_base: f64,
    pub r: f64,
    #[serde(default = "chain_tau")]
    pub tau: Grid,
}

fn fd_step() -> f64 {
    mlz_core::integrability::DEFAULT_FD_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrabilityParams {
    pub family: FamilySpec,
    #[serde(default)]
    pub tau: Option<Grid>,
    #[serde(default)]
    pub t: Option<Grid>,
    #[serde(default)]
    pub chain: Option<ChainCheck>,
    /// Also report the frozen-coupling and frozen-ε controls.
    #[serde(default)]
    pub controls: bool,
    #[serde(default = "fd_step")]
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Spectrum(SpectrumParams),
    Propagate(PropagateParams),
    Invariance(InvarianceParams),
    DykhneSweep(DykhneParams),
    ThreeLevelSweep(ThreeLevelSweepParams),
    ChainAvgN(ChainParams),
    FourStateSweep(FourStateSweepParams),
    IntegrabilityReport(IntegrabilityParams),
}

impl Job {
    pub fn kind(&self) -> &'static str {
        match self {
            Job::Spectrum(_) => "spectrum",
            Job::Propagate(_) => "propagate",
            Job::Invariance(_) => "invariance",
            Job::DykhneSweep(_) => "dykhne_sweep",
            Job::ThreeLevelSweep(_) => "fig6_sweep",
            Job::ChainAvgN(_) => "chain_avg_n",
            Job::FourStateSweep(_) => "four_state_sweep",
            Job::IntegrabilityReport(_) => "integrability_report",
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// CSV file name, relative to the output directory.
    pub output: String,
    pub config: ScatterConfig,
    pub job: Job,
    /// The document after environment and command-line overrides.
    pub document: Value,
}

/// Set `key` (dotted path) to `raw`, parsed as JSON when possible and as a string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), Issue> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Issue::new("--override", format!("expected key=value, got {spec:?}")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Issue::new("--override", format!("bad key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => return Err(Issue::new(parts[..i].join("."), "override path crosses a non-object")),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!()
}

/// Parse, apply `MLZ_DEFAULT_TOL` then the overrides, and validate.
pub fn load(text: &str, overrides: &[String], env_tol: Option<&str>) -> Result<Scenario, Vec<Issue>> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| vec![Issue::new("", format!("not valid JSON: {e}"))])?;
    if !doc.is_object() {
        return Err(vec![Issue::new("", "scenario must be a JSON object")]);
    }
    let mut issues = Vec::new();
    if let Some(raw) = env_tol {
        match raw.trim().parse::<f64>() {
            Ok(tol) if tol > 0.0 && tol.is_finite() => {
                let _ = apply_override(&mut doc, &format!("config.rel_tol={tol:e}"));
            }
            _ => issues.push(Issue::new("MLZ_DEFAULT_TOL", format!("expected a positive number, got {raw:?}"))),
        }
    }
    for o in overrides {
        if let Err(e) = apply_override(&mut doc, o) {
            issues.push(e);
        }
    }
    match validate(&doc) {
        Ok(s) if issues.is_empty() => Ok(s),
        Ok(_) => Err(issues),
        Err(more) => {
            issues.extend(more);
            Err(issues)
        }
    }
}

fn missing(obj: &Value, path: &str, fields: &[&str], issues: &mut Vec<Issue>) -> bool {
    let mut any = false;
    for f in fields {
        if obj.get(f).is_none_or(Value::is_null) {
            issues.push(Issue::new(join(path, f), "required field is missing"));
            any = true;
        }
    }
    any
}

fn join(path: &str, f: &str) -> String {
    if path.is_empty() {
        f.to_string()
    } else {
        format!("{path}.{f}")
    }
}

fn check_model_fields(model: Option<&Value>, path: &str, issues: &mut Vec<Issue>) -> bool {
    let Some(m) = model else { return false };
    let Some(ty) = m.get("type").and_then(Value::as_str) else {
        issues.push(Issue::new(join(path, "type"), "required field is missing"));
        return true;
    };
    let Some(fields) = model_fields(ty) else {
        issues.push(Issue::new(join(path, "type"), format!("unknown model type {ty:?}")));
        return true;
    };
    let mut bad = missing(m, path, fields, issues);
    if ty == "three_state_family" {
        if let Some(f) = m.get("family") {
            bad |= missing(f, &join(path, "family"), &FAMILY_FIELDS, issues);
        }
    }
    bad
}

fn typed<T: for<'de> Deserialize<'de>>(v: &Value, path: &str, issues: &mut Vec<Issue>) -> Option<T> {
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            issues.push(Issue::new(path, e.to_string()));
            None
        }
    }
}

/// Validate a document without running anything. All problems are returned together.
pub fn validate(doc: &Value) -> Result<Scenario, Vec<Issue>> {
    let mut issues = Vec::new();
    let Some(obj) = doc.as_object() else {
        return Err(vec![Issue::new("", "scenario must be a JSON object")]);
    };
    for k in obj.keys() {
        if !TOP_LEVEL.contains(&k.as_str()) {
            issues.push(Issue::new(k.clone(), "unknown top-level key"));
        }
    }

    let config = check_config(obj.get("config"), &mut issues);

    let kind = match obj.get("kind") {
        None => {
            issues.push(Issue::new("kind", "required field is missing"));
            None
        }
        Some(Value::String(k)) if KINDS.contains(&k.as_str()) => Some(k.as_str()),
        Some(other) => {
            issues.push(Issue::new("kind", format!("expected one of {}, got {other}", KINDS.join(", "))));
            None
        }
    };
    let params = obj.get("params");
    if params.is_none() {
        issues.push(Issue::new("params", "required field is missing"));
    }
    let name = match obj.get("name") {
        None => kind.unwrap_or("scenario").to_string(),
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            issues.push(Issue::new("name", "expected a non-empty string"));
            String::new()
        }
    };
    let output = match obj.get("output") {
        None => format!("{name}.csv"),
        Some(Value::String(s)) if !s.is_empty() && !s.contains(['/', '\\']) => s.clone(),
        Some(_) => {
            issues.push(Issue::new("output", "expected a plain file name"));
            String::new()
        }
    };

    let job = match (kind, params) {
        (Some(kind), Some(p)) => parse_job(kind, p, &mut issues),
        _ => None,
    };
    if let Some(job) = &job {
        check_job(job, &mut issues);
    }
    match (job, config) {
        (Some(job), Some(config)) if issues.is_empty() => Ok(Scenario { name, output, config, job, document: doc.clone() }),
        _ => Err(issues),
    }
}

fn check_config(v: Option<&Value>, issues: &mut Vec<Issue>) -> Option<ScatterConfig> {
    let Some(v) = v else { return Some(ScatterConfig::default()) };
    let known = serde_json::to_value(ScatterConfig::default()).expect("config serializes");
    let (Some(given), Some(known)) = (v.as_object(), known.as_object()) else {
        issues.push(Issue::new("config", "expected an object"));
        return None;
    };
    let mut ok = true;
    for k in given.keys() {
        if !known.contains_key(k) {
            issues.push(Issue::new(format!("config.{k}"), "unknown setting"));
            ok = false;
        }
    }
    let cfg: ScatterConfig = typed(v, "config", issues)?;
    if let Err(e) = cfg.validate() {
        issues.push(Issue::new("config", e.to_string()));
        ok = false;
    }
    ok.then_some(cfg)
}

fn parse_job(kind: &str, p: &Value, issues: &mut Vec<Issue>) -> Option<Job> {
    if !p.is_object() {
        issues.push(Issue::new("params", "expected an object"));
        return None;
    }
    let required: &[&str] = match kind {
        "spectrum" => &["model", "t"],
        "propagate" => &["model"],
        "invariance" => &["family", "tau"],
        "dykhne_sweep" => &["b", "g", "eps"],
        "fig6_sweep" => &["b", "g", "eps"],
        "chain_avg_n" => &["beta", "n_max", "g_base"],
        "four_state_sweep" => &["b", "g", "phi"],
        "integrability_report" => &["family"],
        _ => unreachable!(),
    };
    let mut bad = missing(p, "params", required, issues);
    bad |= check_model_fields(p.get("model"), "params.model", issues);
    if let Some(f) = p.get("family") {
        bad |= missing(f, "params.family", &FAMILY_FIELDS, issues);
    }
    if let Some(c) = p.get("chain").filter(|c| !c.is_null()) {
        bad |= missing(c, "params.chain", &["n_max", "beta", "g_base", "r"], issues);
    }
    if bad {
        return None;
    }
    Some(match kind {
        "spectrum" => Job::Spectrum(typed(p, "params", issues)?),
        "propagate" => Job::Propagate(typed(p, "params", issues)?),
        "invariance" => Job::Invariance(typed(p, "params", issues)?),
        "dykhne_sweep" => Job::DykhneSweep(typed(p, "params", issues)?),
        "fig6_sweep" => Job::ThreeLevelSweep(typed(p, "params", issues)?),
        "chain_avg_n" => Job::ChainAvgN(typed(p, "params", issues)?),
        "four_state_sweep" => Job::FourStateSweep(typed(p, "params", issues)?),
        "integrability_report" => Job::IntegrabilityReport(typed(p, "params", issues)?),
        _ => unreachable!(),
    })
}

fn grid(g: &Grid, path: &str, issues: &mut Vec<Issue>) -> Vec<f64> {
    g.values().unwrap_or_else(|e| {
        issues.push(Issue::new(path, e));
        Vec::new()
    })
}

fn positive(x: f64, path: &str, issues: &mut Vec<Issue>) {
    if !(x > 0.0 && x.is_finite()) {
        issues.push(Issue::new(path, format!("must be positive and finite, got {x}")));
    }
}

fn finite(x: f64, path: &str, issues: &mut Vec<Issue>) {
    if !x.is_finite() {
        issues.push(Issue::new(path, "must be finite"));
    }
}

fn core_issue(path: &str, e: &Error) -> Issue {
    let name = match e {
        Error::DegenerateSlopes { .. } => "DegenerateSlopes",
        Error::DeformationSingular { .. } => "DeformationSingular",
        Error::SingularTime => "SingularTime",
        Error::ComplexExponents { .. } => "ComplexExponents",
        Error::InvalidModel(_) => "InvalidModel",
        Error::InvalidArgument(_) => "InvalidArgument",
        _ => "Error",
    };
    Issue::new(path, format!("{name} predicted: {e}"))
}

fn check_family_taus(fam: &FamilySpec, taus: &[f64], path: &str, issues: &mut Vec<Issue>) {
    let f = fam.family();
    if let Err(e) = f.validate() {
        issues.push(core_issue("params.family", &e));
        return;
    }
    for &tau in taus {
        if let Err(e) = f.model(tau) {
            issues.push(core_issue(path, &e));
        }
    }
}

fn check_job(job: &Job, issues: &mut Vec<Issue>) {
    match job {
        Job::Spectrum(p) => {
            let ts = grid(&p.t, "params.t", issues);
            match p.model.build() {
                Ok(m) if m.has_coulomb() && ts.contains(&0.0) => {
                    issues.push(core_issue("params.t", &Error::SingularTime));
                }
                Ok(_) => {}
                Err(e) => issues.push(core_issue("params.model", &e)),
            }
        }
        Job::Propagate(p) => match p.model.build() {
            Ok(m) => {
                if let Some(l) = p.initial_level {
                    if l == 0 || l > m.n() {
                        issues.push(Issue::new("params.initial_level", format!("must lie in 1..={}", m.n())));
                    }
                }
                if p.halfline && !m.has_coulomb() {
                    issues.push(Issue::new("params.halfline", "the half-line start needs a model with a 1/t term"));
                }
                if !p.halfline {
                    if let Err(e) = m.check_scattering() {
                        issues.push(core_issue("params.model", &e));
                    }
                }
            }
            Err(e) => issues.push(core_issue("params.model", &e)),
        },
        Job::Invariance(p) => {
            let taus = grid(&p.tau, "params.tau", issues);
            check_family_taus(&p.family, &taus, "params.tau", issues);
            if !(1..=3).contains(&p.initial_level) {
                issues.push(Issue::new("params.initial_level", "must lie in 1..=3"));
            }
        }
        Job::DykhneSweep(p) => {
            positive(p.b, "params.b", issues);
            finite(p.g, "params.g", issues);
            positive(p.eta, "params.eta", issues);
            for e in grid(&p.eps, "params.eps", issues) {
                positive(e, "params.eps", issues);
            }
        }
        Job::ThreeLevelSweep(p) => {
            positive(p.b, "params.b", issues);
            positive(p.eta, "params.eta", issues);
            grid(&p.g, "params.g", issues);
            for e in grid(&p.eps, "params.eps", issues) {
                positive(e, "params.eps", issues);
            }
        }
        Job::ChainAvgN(p) => {
            positive(p.beta, "params.beta", issues);
            positive(p.q, "params.q", issues);
            if p.n_max < 2 {
                issues.push(Issue::new("params.n_max", "need at least 2 levels"));
            }
            let gs = grid(&p.g_base, "params.g_base", issues);
            if issues.is_empty() {
                for g in gs {
                    if let Err(e) = bosonic_chain_sector(p.n_max, p.beta, g).and_then(|c| c.q_deform(p.q)) {
                        issues.push(core_issue("params.q", &e));
                        break;
                    }
                }
            }
        }
        Job::FourStateSweep(p) => {
            positive(p.b, "params.b", issues);
            positive(p.g, "params.g", issues);
            grid(&p.phi, "params.phi", issues);
        }
        Job::IntegrabilityReport(p) => {
            if let Some(t) = &p.tau {
                let taus = grid(t, "params.tau", issues);
                check_family_taus(&p.family, &taus, "params.tau", issues);
            } else {
                check_family_taus(&p.family, &mlz_core::integrability::default_tau_grid(), "params.tau", issues);
            }
            if let Some(t) = &p.t {
                grid(t, "params.t", issues);
            }
            positive(p.fd_step, "params.fd_step", issues);
            if let Some(c) = &p.chain {
                positive(c.beta, "params.chain.beta", issues);
                finite(c.r, "params.chain.r", issues);
                grid(&c.tau, "params.chain.tau", issues);
                if let Err(e) = bosonic_chain_sector(c.n_max, c.beta, c.g_base) {
                    issues.push(core_issue("params.chain", &e));
                }
            }
        }
    }
}
