//! Quadrature rules shared by the solvers.

use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A 1D rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre rule with `order` nodes on each panel `[b_i, b_{i+1}]`.
    pub fn composite(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (h, mid) = (0.5 * (b - a), 0.5 * (a + b));
            for k in 0..order {
                nodes.push(mid + h * x[k]);
                weights.push(h * w[k]);
            }
        }
        Self { nodes, weights }
    }

    /// `panels` equal panels on [a, b].
    pub fn uniform_panels(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
        Self::composite(&breaks, order)
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (h, c) = (0.5 * (b - a), 0.5 * (a + b));
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for j in 0..7 {
        let dx = h * GK_X[j];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[j] * s;
        if j % 2 == 1 {
            g += GK_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const START: usize = 16;
    let mut stack: Vec<(f64, f64, f64, u32)> = (0..START)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / START as f64;
            let hi = a + (b - a) * (i + 1) as f64 / START as f64;
            (lo, hi, tol / START as f64, 0u32)
        })
        .collect();
    let mut total = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, lo, hi);
        evals += 15;
        if err <= t || depth >= 50 || (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            if err > t && depth >= 50 {
                return Err(Error::NonConvergence(format!("adaptive quadrature: error {err:.3e} at depth limit")));
            }
            total += val;
        } else {
            if evals > 20_000_000 {
                return Err(Error::NonConvergence("adaptive quadrature: evaluation budget exhausted".into()));
            }
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t, depth + 1));
            stack.push((mid, hi, 0.5 * t, depth + 1));
        }
    }
    Ok(total)
}

/// 14-point spherical rule (octahedron vertices + cube vertices), exact through degree 5.
pub fn sphere14() -> [(Vec3, f64); 14] {
    let mut out = [(Vec3::zeros(), 0.0); 14];
    let mut k = 0;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut v = Vec3::zeros();
            v[axis] = sign;
            out[k] = (v, 1.0 / 15.0);
            k += 1;
        }
    }
    let s = 1.0 / 3f64.sqrt();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out[k] = (Vec3::new(sx * s, sy * s, sz * s), 3.0 / 40.0);
                k += 1;
            }
        }
    }
    out
}

/// Average of `f` over the solid ball of radius `a` around `center`
/// (radial Gauss–Legendre in r³ times the 14-point sphere rule).
pub fn ball_average<V>(center: &Vec3, a: f64, radial_nodes: usize, mut f: impl FnMut(&Vec3) -> V) -> V
where
    V: std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V> + Copy,
{
    // radial density 3r²/a³ on [0, a]
    let (x, w) = gauss_legendre(radial_nodes);
    let rule = sphere14();
    let mut acc: Option<V> = None;
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * a * (xi + 1.0);
        let wr = 1.5 * wi * r * r / (a * a);
        for (dir, wd) in &rule {
            let p = center + dir * r;
            let term = f(&p) * (wr * wd);
            acc = Some(match acc {
                None => term,
                Some(s) => s + term,
            });
        }
    }
    acc.expect("at least one node")
}

/// Chebyshev interpolant on [a, b] built from samples at first-kind Chebyshev points.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    pub fn fit(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let pi = std::f64::consts::PI;
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let x = (pi * (k as f64 + 0.5) / n as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * x)
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = vals
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (pi * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                if j == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect();
        Self { a, b, coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// Spectral derivative on the same interval.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(1)];
        if n >= 2 {
            for k in (1..n).rev() {
                let next = if k + 1 < n { d[k + 1] } else { 0.0 };
                d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        Self { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * scale).collect() }
    }

    /// Magnitude of the trailing coefficients, a convergence indicator.
    pub fn tail(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(3)..].iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

/// Integral over all of R³ of a function that is smooth except for kinks on
/// spheres of radius `a` around `centers` and decays at least like |s|⁻⁴.
///
/// A partition of unity w_i ∝ |s − c_i|⁻⁶ splits the integrand into pieces,
/// each integrated in spherical coordinates about its own center with a
/// radial break at `a` and the map r = a + L·x/(1−x) of [a, ∞), where L is
/// the length scale on which the integrand varies away from the kinks.
pub fn whole_space_integral(
    f: &(dyn Fn(&Vec3) -> f64 + Sync),
    centers: &[Vec3],
    a: f64,
    length_scale: f64,
    resolution: usize,
) -> f64 {
    use rayon::prelude::*;
    assert!(!centers.is_empty());
    let res = resolution.max(1);
    let inner = Rule::uniform_panels(0.0, a, 2, 8 * res);
    // r = a + s x/(1-x) on x in [0,1)
    let scale = length_scale;
    let outer_x = Rule::uniform_panels(0.0, 1.0, 24 * res, 8);
    let mut radial: Vec<(f64, f64)> = inner.nodes.iter().zip(&inner.weights).map(|(&r, &w)| (r, w)).collect();
    for (&x, &w) in outer_x.nodes.iter().zip(&outer_x.weights) {
        let r = a + scale * x / (1.0 - x);
        let jac = scale / ((1.0 - x) * (1.0 - x));
        radial.push((r, w * jac));
    }
    let theta = Rule::uniform_panels(0.0, std::f64::consts::PI, 4 * res, 8);
    let nphi = 24 * res;
    let weight = |s: &Vec3, i: usize| -> f64 {
        if centers.len() == 1 {
            return 1.0;
        }
        let di = (s - centers[i]).norm_squared().powi(3);
        if di == 0.0 {
            return 1.0;
        }
        let mut denom = 0.0;
        for c in centers {
            let dj = (s - c).norm_squared().powi(3);
            if dj == 0.0 {
                return 0.0;
            }
            denom += di / dj;
        }
        1.0 / denom
    };
    (0..centers.len())
        .map(|i| {
            radial
                .par_iter()
                .map(|&(r, wr)| {
                    let mut acc = 0.0;
                    for (&th, &wt) in theta.nodes.iter().zip(&theta.weights) {
                        let (st, ct) = th.sin_cos();
                        for k in 0..nphi {
                            let ph = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nphi as f64;
                            let (sp, cp) = ph.sin_cos();
                            let s = centers[i] + Vec3::new(r * st * cp, r * st * sp, r * ct);
                            acc += wt * st * weight(&s, i) * f(&s);
                        }
                    }
                    acc * wr * r * r * 2.0 * std::f64::consts::PI / nphi as f64
                })
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 5, 12, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate_adaptive(|x| (-(x - 0.3).powi(2) / 1e-3).exp(), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::PI * 1e-3).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn sphere_rule_degree_five() {
        let r = sphere14();
        let avg = |f: &dyn Fn(&Vec3) -> f64| r.iter().map(|(p, w)| w * f(p)).sum::<f64>();
        assert!((avg(&|_| 1.0) - 1.0).abs() < 1e-15);
        assert!((avg(&|p| p.x * p.x) - 1.0 / 3.0).abs() < 1e-15);
        assert!((avg(&|p| p.x.powi(4)) - 0.2).abs() < 1e-15);
        assert!((avg(&|p| p.x * p.x * p.y * p.y) - 1.0 / 15.0).abs() < 1e-15);
        assert!(avg(&|p| p.x.powi(3) * p.y * p.y).abs() < 1e-15);
    }

    #[test]
    fn ball_average_of_quadratic() {
        // mean of |s|^2 over a ball of radius a is 3a^2/5
        let c = Vec3::new(0.3, -0.2, 0.1);
        let a = 0.7;
        let v = ball_average(&c, a, 6, |p| (p - c).norm_squared());
        assert!((v - 0.6 * a * a).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_derivative() {
        let ch = Chebyshev::fit(|t| (2.0 * t).sin(), 0.0, 3.0, 40);
        let d = ch.derivative();
        for t in [0.0, 0.4, 1.7, 3.0] {
            assert!((ch.eval(t) - (2.0 * t).sin()).abs() < 1e-13);
            assert!((d.eval(t) - 2.0 * (2.0 * t).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn whole_space_gaussian() {
        let c = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let f = |s: &Vec3| (-s.norm_squared()).exp();
        let v = whole_space_integral(&f, &c, 0.1, 1.0, 2);
        assert!((v - std::f64::consts::PI.powf(1.5)).abs() < 1e-8, "{v}");
    }
}
