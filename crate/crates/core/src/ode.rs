//! Adaptive Dormand–Prince 8(5,3) integrator for complex-valued systems.
//!
//! Only what the monodromy computation needs: fixed end point, no dense
//! output, mixed absolute/relative error control.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerances and step limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks `(x1 - x0) / 64`.
    pub h0: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 200_000, h0: None }
    }
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

/// `acc = y + h * Σ c_i k_i` over the supplied stage list.
fn combine(acc: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, a) in acc.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for (c, k) in terms {
            s += *c * k[i];
        }
        *a = y[i] + h * s;
    }
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` and returns `y(x1)`.
///
/// `f(x, y, dy)` must write the derivative into `dy`.
pub fn integrate<F>(f: F, x0: f64, x1: f64, y0: &[C64], opts: &OdeOptions) -> Result<Vec<C64>>
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let span = x1 - x0;
    if span == 0.0 || n == 0 {
        return Ok(y0.to_vec());
    }
    let dir = span.signum();
    let mut h = opts.h0.unwrap_or(span.abs() / 64.0).abs().min(span.abs()) * dir;
    let mut x = x0;
    let mut y = y0.to_vec();

    let mut k: Vec<Vec<C64>> = (0..12).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut ytmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];

    f(x, &y, &mut k[0]);
    let mut steps = 0usize;
    let mut last_rejected = false;
    while (x1 - x) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::IntegratorFailure(format!("step limit {} reached at x = {x}", opts.max_steps)));
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        if h.abs() < 1e-14 * span.abs() {
            return Err(Error::IntegratorFailure(format!("step size underflow at x = {x}")));
        }
        steps += 1;

        macro_rules! stage {
            ($idx:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
                {
                    let terms: Vec<(f64, &[C64])> = vec![$(($a, &k[$j][..])),*];
                    combine(&mut ytmp, &y, h, &terms);
                }
                let (_, rest) = k.split_at_mut($idx);
                f(x + $c * h, &ytmp, &mut rest[0]);
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
        stage!(10, C11, [(A111, 0), (A114, 3), (A115, 4), (A116, 5), (A117, 6), (A118, 7), (A119, 8), (A1110, 9)]);
        stage!(11, 1.0, [(A121, 0), (A124, 3), (A125, 4), (A126, 5), (A127, 6), (A128, 7), (A129, 8), (A1210, 9), (A1211, 10)]);

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..n {
            let bsum = B1 * k[0][i] + B6 * k[5][i] + B7 * k[6][i] + B8 * k[7][i] + B9 * k[8][i]
                + B10 * k[9][i] + B11 * k[10][i] + B12 * k[11][i];
            ynew[i] = y[i] + h * bsum;
            let sk = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            let e2 = bsum - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e2.norm() / sk).powi(2);
            let e1 = ER1 * k[0][i] + ER6 * k[5][i] + ER7 * k[6][i] + ER8 * k[7][i] + ER9 * k[8][i]
                + ER10 * k[9][i] + ER11 * k[10][i] + ER12 * k[11][i];
            err += (e1.norm() / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (n as f64 * deno)).sqrt();
        if !err.is_finite() {
            return Err(Error::IntegratorFailure(format!("non-finite error estimate at x = {x}")));
        }

        let fac11 = err.powf(0.125);
        if err <= 1.0 {
            x += h;
            std::mem::swap(&mut y, &mut ynew);
            f(x, &y, &mut k[0]);
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 1.0 / 0.333);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = dir * hnew.abs().min(h.abs());
            }
            last_rejected = false;
            h = hnew;
        } else {
            h /= (fac11 / 0.9).min(1.0 / 0.333);
            last_rejected = true;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let lam = C64::new(-0.5, 3.0);
        let y = integrate(|_, y, dy| dy[0] = lam * y[0], 0.0, 2.0, &[C64::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        let exact = (lam * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-11 * exact.norm());
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let w = 7.0;
        let y = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -w * w * y[0];
            },
            1.0,
            0.0,
            &[C64::new((w * 1.0f64).cos(), 0.0), C64::new(-w * (w * 1.0f64).sin(), 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(y[1].norm() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 2x y, y(0) = 1 -> e^{x^2}
        let y = integrate(|x, y, dy| dy[0] = 2.0 * x * y[0], 0.0, 1.5, &[C64::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        assert!((y[0].re - (2.25f64).exp()).abs() < 1e-10 * (2.25f64).exp());
    }
}
