//! Dormand–Prince 5(4) with step control and cubic Hermite dense output.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-9, rtol: 1e-9, max_steps: 1_000_000, initial_step: None, max_step: f64::INFINITY }
    }
}

/// Accepted steps of an integration. Times are monotone in the direction of travel.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    /// Scaled local error estimate of the step ending at each sample (0 for the first).
    pub err: Vec<f64>,
    /// Fourth-order dense-output correction of the step ending at each sample.
    pub corr: Vec<[f64; N]>,
}

/// Integration that stopped early, with everything accepted so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Incomplete<const N: usize> {
    pub error: Error,
    pub partial: Solution<N>,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> [f64; N] {
        *self.y.last().expect("solution has the initial sample")
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }

    /// Dense output by cubic Hermite interpolation on the bracketing step.
    pub fn eval(&self, t: f64) -> Result<[f64; N]> {
        let (a, b) = (self.t_start(), self.t_end());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!("t = {t} outside integrated span [{lo}, {hi}]")));
        }
        let forward = b >= a;
        let idx = if forward {
            self.t.partition_point(|&s| s < t)
        } else {
            self.t.partition_point(|&s| s > t)
        };
        let i = idx.clamp(1, self.t.len().max(2) - 1);
        if self.t.len() == 1 {
            return Ok(self.y[0]);
        }
        Ok(dense(self.t[i - 1], self.t[i], &self.y[i - 1], &self.y[i], &self.dy[i - 1], &self.dy[i], &self.corr[i], t))
    }
}

/// Dormand–Prince continuous extension: the cubic Hermite interpolant plus s²(1−s)² corr.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dense<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    corr: &[f64; N],
    t: f64,
) -> [f64; N] {
    let s = (t - t0) / (t1 - t0);
    let b = s * s * (1.0 - s) * (1.0 - s);
    let mut y = hermite(t0, t1, y0, y1, f0, f1, t);
    for k in 0..N {
        y[k] += b * corr[k];
    }
    y
}

/// Time derivative of [`dense`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn dense_derivative<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    corr: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let d00 = 6.0 * s * s - 6.0 * s;
    let d10 = 3.0 * s * s - 4.0 * s + 1.0;
    let d11 = 3.0 * s * s - 2.0 * s;
    let db = 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    std::array::from_fn(|k| (d00 * (y0[k] - y1[k]) + db * corr[k]) / h + d10 * f0[k] + d11 * f1[k])
}

pub(crate) fn hermite<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|k| h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k])
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate y' = f(t, y) from t0 to t1 (either direction).
///
/// A right-hand side returning `Error::NodeProximity` or `Error::Singularity`
/// makes the step shrink; the error surfaces once the step underflows.
#[allow(clippy::result_large_err)] // the partial solution is the point of the error
pub fn dopri5<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
) -> std::result::Result<Solution<N>, Incomplete<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let fail = |error, partial| Err(Incomplete { error, partial });
    let mut sol = Solution { t: vec![t0], y: vec![y0], dy: vec![], err: vec![0.0], corr: vec![[0.0; N]] };
    let f0 = match f(t0, &y0) {
        Ok(v) => v,
        Err(e) => return fail(e, Solution { dy: vec![[0.0; N]], ..sol }),
    };
    sol.dy.push(f0);
    if !(opts.atol > 0.0 && opts.rtol >= 0.0) || !t0.is_finite() || !t1.is_finite() {
        return fail(Error::Domain("bad integration span or tolerances".into()), sol);
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let scale = |y: &[f64; N], k: usize| opts.atol + opts.rtol * y[k].abs();
    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let d0 = rms::<N>(|k| y0[k] / scale(&y0, k));
            let d1 = rms::<N>(|k| f0[k] / scale(&y0, k));
            if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }
        }
    }
    .min(span.abs())
    .min(opts.max_step);
    let (mut t, mut y, mut fy) = (t0, y0, f0);
    let mut steps = 0usize;
    let min_h = |t: f64| 1e-14 * (1.0 + t.abs());
    while dir * (t1 - t) > 0.0 {
        if steps >= opts.max_steps {
            return fail(Error::StepLimit(opts.max_steps), sol);
        }
        steps += 1;
        let last = h >= (t1 - t).abs();
        let hs = if last { t1 - t } else { dir * h };
        let mut k = [[0.0; N]; 7];
        k[0] = fy;
        let mut rhs_error = None;
        for s in 1..7 {
            let ys: [f64; N] = std::array::from_fn(|j| y[j] + hs * (0..s).map(|m| A[s][m] * k[m][j]).sum::<f64>());
            match f(t + C[s] * hs, &ys) {
                Ok(v) => k[s] = v,
                Err(e @ (Error::NodeProximity { .. } | Error::Singularity(_))) => {
                    rhs_error = Some(e);
                    break;
                }
                Err(e) => return fail(e, sol),
            }
        }
        if let Some(e) = rhs_error {
            h *= 0.25;
            if h < min_h(t) {
                return fail(e, sol);
            }
            continue;
        }
        let y_new: [f64; N] = std::array::from_fn(|j| y[j] + hs * (0..6).map(|m| A[6][m] * k[m][j]).sum::<f64>());
        let err = rms::<N>(|j| {
            let e = hs * (0..7).map(|m| E[m] * k[m][j]).sum::<f64>();
            e / (opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs()))
        });
        if !err.is_finite() {
            h *= 0.25;
            if h < min_h(t) {
                return fail(Error::NonConvergence("non-finite step".into()), sol);
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            fy = k[6];
            sol.t.push(t);
            sol.y.push(y);
            sol.dy.push(fy);
            sol.err.push(err);
            sol.corr.push(std::array::from_fn(|j| hs * (0..7).map(|m| D[m] * k[m][j]).sum::<f64>()));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (hs.abs() * if err <= 1.0 { factor } else { factor.min(1.0) }).min(opts.max_step);
        if h < min_h(t) {
            return fail(Error::NonConvergence(format!("step size underflow at t = {t}")), sol);
        }
    }
    Ok(sol)
}

fn rms<const N: usize>(g: impl Fn(usize) -> f64) -> f64 {
    ((0..N).map(|k| g(k).powi(2)).sum::<f64>() / N as f64).sqrt()
}
