//! Hydrogen bound states: Bohr levels, real eigenfunctions, superpositions,
//! densities and probability currents.

use crate::special::{assoc_laguerre, assoc_legendre_cs, assoc_legendre_over_sin, factorial, spherical_norm, MAX_N};
use crate::{CVec3, Complex64, Error, Real, Result, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Labels (n, l, m, ς) of a real hydrogen eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawLabel", into = "RawLabel")]
pub struct QuantumNumbers {
    n: u32,
    l: u32,
    m: u32,
    parity: Parity,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    n: u32,
    l: u32,
    m: u32,
    #[serde(default = "plus")]
    parity: Parity,
}

fn plus() -> Parity {
    Parity::Plus
}

impl TryFrom<RawLabel> for QuantumNumbers {
    type Error = Error;
    fn try_from(r: RawLabel) -> Result<Self> {
        QuantumNumbers::new(r.n, r.l, r.m, r.parity)
    }
}

impl From<QuantumNumbers> for RawLabel {
    fn from(q: QuantumNumbers) -> Self {
        RawLabel { n: q.n, l: q.l, m: q.m, parity: q.parity }
    }
}

impl QuantumNumbers {
    pub fn new(n: u32, l: u32, m: u32, parity: Parity) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::Domain(format!("principal number {n} outside 1..={MAX_N}")));
        }
        if l >= n || m > l {
            return Err(Error::Domain(format!("invalid labels n={n} l={l} m={m}")));
        }
        if m == 0 && parity == Parity::Minus {
            return Err(Error::Domain("parity '-' is forbidden for m = 0".into()));
        }
        Ok(Self { n, l, m, parity })
    }

    /// Shorthand for tests and presets; panics on invalid labels.
    pub fn nlm(n: u32, l: u32, m: u32, parity: Parity) -> Self {
        Self::new(n, l, m, parity).expect("valid quantum numbers")
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn l(&self) -> u32 {
        self.l
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn energy(&self) -> f64 {
        -0.5 / (self.n as f64 * self.n as f64)
    }

    /// All n² labels belonging to shell `n`.
    pub fn shell(n: u32) -> Result<Vec<Self>> {
        if n == 0 || n > MAX_N {
            return Err(Error::Domain(format!("principal number {n} outside 1..={MAX_N}")));
        }
        let mut out = Vec::new();
        for l in 0..n {
            for m in 0..=l {
                out.push(Self { n, l, m, parity: Parity::Plus });
                if m > 0 {
                    out.push(Self { n, l, m, parity: Parity::Minus });
                }
            }
        }
        Ok(out)
    }

    /// All labels with principal number up to `n_max`.
    pub fn up_to(n_max: u32) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for n in 1..=n_max {
            out.extend(Self::shell(n)?);
        }
        Ok(out)
    }
}

impl std::fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = if self.parity == Parity::Plus { '+' } else { '-' };
        write!(f, "{}{}{}{}", self.n, self.l, self.m, p)
    }
}

/// Bohr level −1/(2n²) in Hartree.
pub fn bohr_energy<T: Real>(n: i64) -> Result<T> {
    if n < 1 {
        return Err(Error::Domain(format!("principal number must be >= 1, got {n}")));
    }
    let nf = T::lit(n as f64);
    Ok(-T::lit(0.5) / (nf * nf))
}

/// Transition frequency ω_{n,n'} = E_n − E_{n'} (ħ = 1).
pub fn omega(n: i64, n_prime: i64) -> Result<f64> {
    Ok(bohr_energy::<f64>(n)? - bohr_energy::<f64>(n_prime)?)
}

fn check_nl(n: u32, l: u32) -> Result<()> {
    if n == 0 || n > MAX_N || l >= n {
        return Err(Error::Domain(format!("invalid radial labels n={n} l={l}")));
    }
    Ok(())
}

fn radial_norm<T: Real>(n: u32, l: u32) -> T {
    let nf = T::lit(n as f64);
    let two_over_n = T::lit(2.0) / nf;
    (two_over_n.powi(3) * factorial::<T>(n - l - 1) / (T::lit(2.0) * nf * factorial::<T>(n + l))).sqrt()
}

/// Radial function R_{n,l}(r), unit normalized with weight r².
pub fn radial_wavefunction<T: Real>(n: u32, l: u32, r: T) -> Result<T> {
    check_nl(n, l)?;
    if r < T::zero() {
        return Err(Error::Domain("radius must be non-negative".into()));
    }
    let rho = T::lit(2.0) * r / T::lit(n as f64);
    let lag = assoc_laguerre(n - l - 1, T::lit((2 * l + 1) as f64), rho);
    Ok(radial_norm::<T>(n, l) * rho.powi(l as i32) * lag * (-rho / T::lit(2.0)).exp())
}

/// dR_{n,l}/dr.
pub fn radial_derivative<T: Real>(n: u32, l: u32, r: T) -> Result<T> {
    check_nl(n, l)?;
    let two = T::lit(2.0);
    let rho = two * r / T::lit(n as f64);
    let alpha = T::lit((2 * l + 1) as f64);
    let k = n - l - 1;
    let lag = assoc_laguerre(k, alpha, rho);
    let dlag = if k == 0 { T::zero() } else { -assoc_laguerre(k - 1, alpha + T::one(), rho) };
    let pl = rho.powi(l as i32);
    let dpl = if l == 0 { T::zero() } else { T::lit(l as f64) * rho.powi(l as i32 - 1) };
    let d_rho = (dpl * lag + pl * dlag - pl * lag / two) * (-rho / two).exp();
    Ok(radial_norm::<T>(n, l) * d_rho * two / T::lit(n as f64))
}

/// Spherical coordinates (r, ϑ from +z, φ from +x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical<T> {
    pub r: T,
    pub theta: T,
    pub phi: T,
}

impl<T: Real> Spherical<T> {
    pub fn from_cartesian(p: [T; 3]) -> Self {
        let rxy = p[0].hypot(p[1]);
        let r = rxy.hypot(p[2]);
        Self { r, theta: rxy.atan2(p[2]), phi: p[1].atan2(p[0]) }
    }

    pub fn to_cartesian(&self) -> [T; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

fn angular_factor<T: Real>(l: u32, m: u32, parity: Parity, theta: T, phi: T) -> T {
    let (st, ct) = theta.sin_cos();
    let mut theta_part = spherical_norm::<T>(l, m) * assoc_legendre_cs(l, m, ct, st);
    if m > 0 {
        theta_part = theta_part * T::SQRT_2();
    }
    let mphi = T::lit(m as f64) * phi;
    let trig = match parity {
        Parity::Plus => mphi.cos(),
        Parity::Minus => mphi.sin(),
    };
    theta_part * trig
}

/// Real eigenfunction R_{nl}·Θ_l^m·cos(mφ) (ς = +) or ·sin(mφ) (ς = −).
///
/// Θ carries the extra √2 for m > 0 so that the real functions are orthonormal.
pub fn real_eigenfunction<T: Real>(qn: &QuantumNumbers, p: [T; 3]) -> T {
    let s = Spherical::from_cartesian(p);
    let radial = radial_wavefunction(qn.n, qn.l, s.r).expect("labels validated at construction");
    radial * angular_factor(qn.l, qn.m, qn.parity, s.theta, s.phi)
}

/// Value and Cartesian gradient of a real eigenfunction.
pub fn eigenfunction_with_gradient(qn: &QuantumNumbers, p: &Vec3) -> (f64, Vec3) {
    let mut p = *p;
    if p.norm() < 1e-10 {
        p.z += 1e-10;
    }
    let s = Spherical::from_cartesian([p.x, p.y, p.z]);
    let (l, m) = (qn.l, qn.m);
    let x = s.theta.cos();
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    let mut norm = spherical_norm::<f64>(l, m);
    if m > 0 {
        norm *= std::f64::consts::SQRT_2;
    }
    let mphi = m as f64 * s.phi;
    let (trig, dtrig) = match qn.parity {
        Parity::Plus => (mphi.cos(), -(m as f64) * mphi.sin()),
        Parity::Minus => (mphi.sin(), m as f64 * mphi.cos()),
    };
    let theta_val = norm * assoc_legendre_cs(l, m, x, st);
    let (dtheta, theta_over_sin) = if m == 0 {
        (-norm * assoc_legendre_cs(l, 1, x, st), 0.0)
    } else {
        let lm1 = if l > m { assoc_legendre_over_sin(l - 1, m, x, st) } else { 0.0 };
        let pl = assoc_legendre_over_sin(l, m, x, st);
        (norm * (l as f64 * x * pl - (l + m) as f64 * lm1), norm * pl)
    };
    let rad = radial_wavefunction(qn.n, l, s.r).expect("validated");
    let drad = radial_derivative(qn.n, l, s.r).expect("validated");
    let value = rad * theta_val * trig;
    let g_r = drad * theta_val * trig;
    let g_t = rad * dtheta * trig / s.r;
    let g_p = rad * theta_over_sin * dtrig / s.r;
    let r_hat = Vec3::new(st * cp, st * sp, ct);
    let t_hat = Vec3::new(ct * cp, ct * sp, -st);
    let p_hat = Vec3::new(-sp, cp, 0.0);
    (value, r_hat * g_r + t_hat * g_t + p_hat * g_p)
}

/// Finite superposition Σ c e^{−iE_n(t−t₀)} ψ_{nlmς}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuperposition {
    pub terms: Vec<(QuantumNumbers, Complex64)>,
    #[serde(default)]
    pub t0: f64,
}

impl BoundSuperposition {
    /// Normalizes the coefficients; duplicate labels are merged.
    pub fn new(terms: Vec<(QuantumNumbers, Complex64)>) -> Result<Self> {
        let mut merged: Vec<(QuantumNumbers, Complex64)> = Vec::new();
        for (q, c) in terms {
            match merged.iter_mut().find(|(p, _)| *p == q) {
                Some(entry) => entry.1 += c,
                None => merged.push((q, c)),
            }
        }
        let norm: f64 = merged.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("superposition has zero norm".into()));
        }
        let terms = merged.into_iter().map(|(q, c)| (q, c / norm)).collect();
        Ok(Self { terms, t0: 0.0 })
    }

    pub fn eigenstate(qn: QuantumNumbers) -> Self {
        Self { terms: vec![(qn, Complex64::new(1.0, 0.0))], t0: 0.0 }
    }

    /// Equal-weight superposition of the given labels.
    pub fn equal(labels: &[QuantumNumbers]) -> Result<Self> {
        Self::new(labels.iter().map(|&q| (q, Complex64::new(1.0, 0.0))).collect())
    }

    pub fn is_normalized(&self) -> bool {
        (self.terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-10
    }

    pub fn max_n(&self) -> u32 {
        self.terms.iter().map(|(q, _)| q.n).max().unwrap_or(1)
    }

    /// Coefficients at time t including the phases.
    pub fn coefficients_at(&self, t: f64) -> Vec<Complex64> {
        self.terms
            .iter()
            .map(|(q, c)| c * Complex64::from_polar(1.0, -q.energy() * (t - self.t0)))
            .collect()
    }

    pub fn value(&self, t: f64, p: &Vec3) -> Complex64 {
        let cs = self.coefficients_at(t);
        self.terms
            .iter()
            .zip(cs)
            .map(|((q, _), c)| c * real_eigenfunction(q, [p.x, p.y, p.z]))
            .sum()
    }

    pub fn value_gradient(&self, t: f64, p: &Vec3) -> (Complex64, CVec3) {
        let cs = self.coefficients_at(t);
        let mut v = Complex64::new(0.0, 0.0);
        let mut g = CVec3::zeros();
        for ((q, _), c) in self.terms.iter().zip(cs) {
            let (f, grad) = eigenfunction_with_gradient(q, p);
            v += c * f;
            for k in 0..3 {
                g[k] += c * grad[k];
            }
        }
        (v, g)
    }

    /// ρ = |Ψ|² and J = Im(Ψ*∇Ψ).
    pub fn density_current(&self, t: f64, p: &Vec3) -> (f64, Vec3) {
        let (v, g) = self.value_gradient(t, p);
        let j = Vec3::new((v.conj() * g[0]).im, (v.conj() * g[1]).im, (v.conj() * g[2]).im);
        (v.norm_sqr(), j)
    }
}
