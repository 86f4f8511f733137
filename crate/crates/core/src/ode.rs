#![allow(clippy::excessive_precision)]

//! Adaptive 8(5,3) Dormand-Prince integrator for complex vector ODEs.
//!
//! Error estimation and step control follow Hairer's DOP853: the 5th and 3rd
//! order estimates are blended so the step size is not over-restricted when
//! one of them happens to be small.

use crate::error::{Error, Result};
use crate::model::C64;

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510;
const C5: f64 = 0.281649658092772603273242802490;
const C6: f64 = 0.333333333333333333333333333333;
const C7: f64 = 0.25;
const C8: f64 = 0.307692307692307692307692307692;
const C9: f64 = 0.651282051282051282051282051282;
const C10: f64 = 0.6;
const C11: f64 = 0.857142857142857142857142857142;

const A21: f64 = 5.26001519587677318785587544488e-02;
const A31: f64 = 1.97250569845378994544595329183e-02;
const A32: f64 = 5.91751709536136983633785987549e-02;
const A41: f64 = 2.95875854768068491816892993775e-02;
const A43: f64 = 8.87627564304205475450678981324e-02;
const A51: f64 = 2.41365134159266685502369798665e-01;
const A53: f64 = -8.84549479328286085344864962717e-01;
const A54: f64 = 9.24834003261792003115737966543e-01;
const A61: f64 = 3.70370370370370370370370370370e-02;
const A64: f64 = 1.70828608729473871279604482173e-01;
const A65: f64 = 1.25467687566822425016691814123e-01;
const A71: f64 = 3.71093750000000000000000000000e-02;
const A74: f64 = 1.70252211019544039314978060272e-01;
const A75: f64 = 6.02165389804559606850219397283e-02;
const A76: f64 = -1.75781250000000000000000000000e-02;
const A81: f64 = 3.70920001185047927108779319836e-02;
const A84: f64 = 1.70383925712239993810214054705e-01;
const A85: f64 = 1.07262030446373284651809199168e-01;
const A86: f64 = -1.53194377486244017527936158236e-02;
const A87: f64 = 8.27378916381402288758473766002e-03;
const A91: f64 = 6.24110958716075717114429577812e-01;
const A94: f64 = -3.36089262944694129406857109825e+00;
const A95: f64 = -8.68219346841726006818189891453e-01;
const A96: f64 = 2.75920996994467083049415600797e+01;
const A97: f64 = 2.01540675504778934086186788979e+01;
const A98: f64 = -4.34898841810699588477366255144e+01;
const A101: f64 = 4.77662536438264365890433908527e-01;
const A104: f64 = -2.48811461997166764192642586468e+00;
const A105: f64 = -5.90290826836842996371446475743e-01;
const A106: f64 = 2.12300514481811942347288949897e+01;
const A107: f64 = 1.52792336328824235832596922938e+01;
const A108: f64 = -3.32882109689848629194453265587e+01;
const A109: f64 = -2.03312017085086261358222928593e-02;
const A111: f64 = -9.37142430085987325717040528057e-01;
const A114: f64 = 5.18637242884406370830023853209e+00;
const A115: f64 = 1.09143734899672957818500254654e+00;
const A116: f64 = -8.14978701074692612513997267357e+00;
const A117: f64 = -1.85200656599969598641566180701e+01;
const A118: f64 = 2.27394870993505042818970056734e+01;
const A119: f64 = 2.49360555267965238987089396762e+00;
const A1110: f64 = -3.04676447189821950038236690220e+00;
const A121: f64 = 2.27331014751653820792359768449e+00;
const A124: f64 = -1.05344954667372501984066689879e+01;
const A125: f64 = -2.00087205822486249909675718444e+00;
const A126: f64 = -1.79589318631187989172765950534e+01;
const A127: f64 = 2.79488845294199600508499808837e+01;
const A128: f64 = -2.85899827713502369474065508674e+00;
const A129: f64 = -8.87285693353062954433549289258e+00;
const A1210: f64 = 1.23605671757943030647266201528e+01;
const A1211: f64 = 6.43392746015763530355970484046e-01;

const B1: f64 = 5.42937341165687622380535766363e-02;
const B6: f64 = 4.45031289275240888144113950566e+00;
const B7: f64 = 1.89151789931450038304281599044e+00;
const B8: f64 = -5.80120396001058478146721142270e+00;
const B9: f64 = 3.1116436695781989440891606237e-01;
const B10: f64 = -1.52160949662516078556178806805e-01;
const B11: f64 = 2.01365400804030348374776537501e-01;
const B12: f64 = 4.47106157277725905176885569043e-02;

const BHH1: f64 = 0.244094488188976377952755905512;
const BHH2: f64 = 0.733846688281611857341361741547;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290;
const ER10: f64 = 0.3341791187130174790297318841;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 1.0 / 3.0;
const FAC_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop853Options {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen from the step cap when `None`.
    pub h_init: Option<f64>,
    pub max_steps: u64,
}

impl Default for Dop853Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: None, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dop853Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evals: u64,
}

impl Dop853Stats {
    pub fn merge(&mut self, other: Dop853Stats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evals += other.evals;
    }
}

struct Stages {
    k: [Vec<C64>; 12],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: std::array::from_fn(|_| z.clone()),
            ytmp: z.clone(),
            ynew: z,
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
///
/// `h_cap(t)` bounds the step magnitude near `t`; it is how callers stop the
/// controller from stepping over fast phases it has not yet resolved.
/// Integration backwards in time (`t1 < t0`) is supported.
pub fn integrate<F, H>(
    mut f: F,
    mut h_cap: H,
    t0: f64,
    t1: f64,
    y: &mut [C64],
    opts: &Dop853Options,
) -> Result<Dop853Stats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    H: FnMut(f64) -> f64,
{
    let mut stats = Dop853Stats::default();
    if t0 == t1 {
        return Ok(stats);
    }
    let n = y.len();
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut st = Stages::new(n);
    let mut t = t0;
    f(t, y, &mut st.k[0]);
    stats.evals += 1;

    let mut h = opts.h_init.unwrap_or_else(|| 0.1 * h_cap(t0)).abs().min(span);
    let mut last_rejected = false;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { t, max_steps: opts.max_steps });
        }
        h = h.min(h_cap(t).abs()).min(remaining);
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let hs = dir * h;
        let err = step(&mut f, t, hs, y, &mut st, opts);
        stats.evals += 11;

        let fac11 = err.powf(0.125);
        let fac = (fac11 / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        if err <= 1.0 {
            stats.accepted += 1;
            // Not FSAL: the last stage is not evaluated at the accepted point.
            let t_next = if remaining - h <= 0.0 { t1 } else { t + hs };
            y.copy_from_slice(&st.ynew);
            t = t_next;
            f(t, y, &mut st.k[0]);
            stats.evals += 1;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h_new = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
        if !h_new.is_finite() {
            return Err(Error::StepUnderflow { t });
        }
        h = h_new;
    }
    Ok(stats)
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for &(c, k) in terms {
            acc += k[i] * c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// One trial step from `(t, y)` with `k[0] = f(t, y)` already filled. Leaves
/// the 8th-order result in `st.ynew` and returns the scaled error norm.
fn step<F>(f: &mut F, t: f64, h: f64, y: &[C64], st: &mut Stages, opts: &Dop853Options) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    macro_rules! stage {
        ($idx:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
            let (done, rest) = st.k.split_at_mut($idx);
            combine(&mut st.ytmp, y, h, &[$(($a, &done[$j][..])),*]);
            f(t + $c * h, &st.ytmp, &mut rest[0]);
        }};
    }
    stage!(1, C2, [(A21, 0)]);
    stage!(2, C3, [(A31, 0), (A32, 1)]);
    stage!(3, C4, [(A41, 0), (A43, 2)]);
    stage!(4, C5, [(A51, 0), (A53, 2), (A54, 3)]);
    stage!(5, C6, [(A61, 0), (A64, 3), (A65, 4)]);
    stage!(6, C7, [(A71, 0), (A74, 3), (A75, 4), (A76, 5)]);
    stage!(7, C8, [(A81, 0), (A84, 3), (A85, 4), (A86, 5), (A87, 6)]);
    stage!(8, C9, [(A91, 0), (A94, 3), (A95, 4), (A96, 5), (A97, 6), (A98, 7)]);
    stage!(9, C10, [(A101, 0), (A104, 3), (A105, 4), (A106, 5), (A107, 6), (A108, 7), (A109, 8)]);
    stage!(
        10,
        C11,
        [(A111, 0), (A114, 3), (A115, 4), (A116, 5), (A117, 6), (A118, 7), (A119, 8), (A1110, 9)]
    );
    stage!(
        11,
        1.0,
        [
            (A121, 0),
            (A124, 3),
            (A125, 4),
            (A126, 5),
            (A127, 6),
            (A128, 7),
            (A129, 8),
            (A1210, 9),
            (A1211, 10)
        ]
    );

    let k = &st.k;
    let n = y.len();
    let mut err5 = 0.0;
    let mut err3 = 0.0;
    for i in 0..n {
        let incr = k[0][i] * B1
            + k[5][i] * B6
            + k[6][i] * B7
            + k[7][i] * B8
            + k[8][i] * B9
            + k[9][i] * B10
            + k[10][i] * B11
            + k[11][i] * B12;
        let ynew = y[i] + incr * h;
        st.ynew[i] = ynew;
        let sk = opts.atol + opts.rtol * y[i].norm().max(ynew.norm());
        let e3 = incr - k[0][i] * BHH1 - k[8][i] * BHH2 - k[11][i] * BHH3;
        let e5 = k[0][i] * ER1
            + k[5][i] * ER6
            + k[6][i] * ER7
            + k[7][i] * ER8
            + k[8][i] * ER9
            + k[9][i] * ER10
            + k[10][i] * ER11
            + k[11][i] * ER12;
        err3 += (e3 / sk).norm_sqr();
        err5 += (e5 / sk).norm_sqr();
    }
    let mut deno = err5 + 0.01 * err3;
    if deno <= 0.0 {
        deno = 1.0;
    }
    h.abs() * err5 * (1.0 / (n as f64 * deno)).sqrt()
}
