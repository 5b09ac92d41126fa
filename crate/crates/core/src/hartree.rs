//! Self-consistent Hartree ground state of the spherically symmetric
//! Schrödinger–Maxwell problem −½Δψ − Z/r ψ + (|ψ|² ⋆ 1/r)ψ = E_g ψ.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Logarithmic radial grid with high-order integration weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    /// ∫ f(r) dr ≈ Σ w_i f(r_i)
    pub w: Vec<f64>,
    /// Uniform step in x = ln r.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r_min: 1e-5, r_max: 60.0, count: 4000 }
    }
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { r_min, r_max, count } = spec;
        if !(r_min > 0.0 && r_max > r_min && count >= 16) {
            return Err(Error::Domain(format!("bad radial grid {spec:?}")));
        }
        let h = (r_max / r_min).ln() / (count - 1) as f64;
        let r: Vec<f64> = (0..count).map(|i| r_min * (i as f64 * h).exp()).collect();
        let wx = newton_cotes_weights(count, h);
        let w = wx.iter().zip(&r).map(|(a, b)| a * b).collect();
        Ok(Self { r, w, h })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.len()).map(|i| self.w[i] * f(i)).sum()
    }

    /// Running integral ∫_{r_0}^{r_i} f dr with fourth-order local panels.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let g: Vec<f64> = f.iter().zip(&self.r).map(|(a, r)| a * r).collect();
        let h = self.h;
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let seg = if i == 0 {
                h * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]) / 24.0
            } else if i == n - 2 {
                h * (9.0 * g[n - 1] + 19.0 * g[n - 2] - 5.0 * g[n - 3] + g[n - 4]) / 24.0
            } else {
                h * (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2]) / 24.0
            };
            out[i + 1] = out[i] + seg;
        }
        out
    }

    /// d/dr of sampled values, fourth-order differences in x = ln r.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = self.h;
        (0..n)
            .map(|i| {
                let dx = if i >= 2 && i + 2 < n {
                    (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h)
                } else if i < 2 {
                    (-25.0 * u[i] + 48.0 * u[i + 1] - 36.0 * u[i + 2] + 16.0 * u[i + 3] - 3.0 * u[i + 4]) / (12.0 * h)
                } else {
                    (25.0 * u[i] - 48.0 * u[i - 1] + 36.0 * u[i - 2] - 16.0 * u[i - 3] + 3.0 * u[i - 4]) / (12.0 * h)
                };
                dx / self.r[i]
            })
            .collect()
    }
}

// Boole panels, closed off with Simpson 3/8 and/or 1/3 panels for the remainder.
fn newton_cotes_weights(count: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; count];
    let intervals = count - 1;
    let (boole_panels, tail) = match intervals % 4 {
        0 => (intervals / 4, vec![]),
        1 => ((intervals - 5) / 4, vec![3, 2]),
        2 => (intervals / 4, vec![2]),
        _ => (intervals / 4, vec![3]),
    };
    let mut i = 0;
    for _ in 0..boole_panels {
        for (k, c) in [7.0, 32.0, 12.0, 32.0, 7.0].iter().enumerate() {
            w[i + k] += 2.0 * h / 45.0 * c;
        }
        i += 4;
    }
    for len in tail {
        let coeffs: &[f64] = if len == 3 { &[3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0] } else { &[1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0] };
        for (k, c) in coeffs.iter().enumerate() {
            w[i + k] += h * c;
        }
        i += len;
    }
    w
}

/// u(r) = r ψ(r)·√(4π) sampled on a grid; ∫u² dr = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub u: Vec<f64>,
}

impl RadialState {
    pub fn norm(&self, grid: &RadialGrid) -> f64 {
        grid.integrate(|i| self.u[i] * self.u[i])
    }

    /// Hydrogenic 1s orbital with exponent ζ: u = 2ζ^{3/2} r e^{−ζr}.
    pub fn hydrogenic(grid: &RadialGrid, zeta: f64) -> Self {
        Self { u: grid.r.iter().map(|&r| 2.0 * zeta.powf(1.5) * r * (-zeta * r).exp()).collect() }
    }

    fn check_normalized(&self, grid: &RadialGrid) -> Result<()> {
        let n = self.norm(grid);
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::Precondition(format!("radial state not normalized (∫u² = {n})")));
        }
        Ok(())
    }
}

/// V_H(r) = (1/r)∫₀^r u² + ∫_r^∞ u²/r'.
pub fn hartree_potential(grid: &RadialGrid, state: &RadialState) -> Result<Vec<f64>> {
    state.check_normalized(grid)?;
    Ok(hartree_potential_unchecked(grid, &state.u))
}

fn hartree_potential_unchecked(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let rho: Vec<f64> = u.iter().map(|v| v * v).collect();
    let inner = grid.cumulative(&rho);
    let over_r: Vec<f64> = rho.iter().zip(&grid.r).map(|(a, r)| a / r).collect();
    let outer_cum = grid.cumulative(&over_r);
    let total = *outer_cum.last().expect("non-empty grid");
    grid.r
        .iter()
        .enumerate()
        .map(|(i, &r)| inner[i] / r + (total - outer_cum[i]))
        .collect()
}

/// Components of the Hartree functional 𝔉(ψ) = T − Z⟨1/r⟩ + ½J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParts {
    pub kinetic: f64,
    pub attraction: f64,
    /// U = ½∬|ψ|²|ψ|²/|s − s'|.
    pub hartree_self: f64,
    pub value: f64,
}

pub fn functional_parts(grid: &RadialGrid, state: &RadialState, z: f64) -> Result<FunctionalParts> {
    state.check_normalized(grid)?;
    let du = grid.derivative(&state.u);
    // u ≈ u₀ r/r₀ below the first node
    let (u0, r0) = (state.u[0], grid.r[0]);
    let kinetic = 0.5 * (grid.integrate(|i| du[i] * du[i]) + u0 * u0 / r0);
    let attraction = -z * (grid.integrate(|i| state.u[i] * state.u[i] / grid.r[i]) + 0.5 * u0 * u0);
    let vh = hartree_potential_unchecked(grid, &state.u);
    let hartree_self = 0.5 * grid.integrate(|i| state.u[i] * state.u[i] * vh[i]);
    Ok(FunctionalParts { kinetic, attraction, hartree_self, value: kinetic + attraction + hartree_self })
}

/// 𝔉(ψ) for a normalized radial state.
pub fn functional_f(grid: &RadialGrid, state: &RadialState, z: f64) -> Result<f64> {
    Ok(functional_parts(grid, state, z)?.value)
}

fn numerov_coeffs(grid: &RadialGrid, v: &[f64], e: f64) -> Vec<f64> {
    let h2 = grid.h * grid.h / 12.0;
    grid.r.iter().zip(v).map(|(&r, &vi)| h2 * (2.0 * r * r * (vi - e) + 0.25)).collect()
}

// y'' = F y in x = ln r, with u = √r · y. Returns y and the number of sign changes.
fn shoot_outward(grid: &RadialGrid, f: &[f64], z: f64, upto: usize) -> (Vec<f64>, usize) {
    let mut y = vec![0.0; upto + 1];
    y[0] = grid.r[0].sqrt() * (1.0 - z * grid.r[0]);
    y[1] = grid.r[1].sqrt() * (1.0 - z * grid.r[1]);
    let mut nodes = 0;
    for i in 1..upto {
        y[i + 1] = (2.0 * (1.0 + 5.0 * f[i]) * y[i] - (1.0 - f[i - 1]) * y[i - 1]) / (1.0 - f[i + 1]);
        if y[i + 1] * y[i] < 0.0 {
            nodes += 1;
        }
        if y[i + 1].abs() > 1e200 {
            let s = 1e-200;
            for v in y.iter_mut().take(i + 2) {
                *v *= s;
            }
        }
    }
    (y, nodes)
}

fn shoot_inward(f: &[f64], from: usize) -> Vec<f64> {
    let n = f.len();
    let mut y = vec![0.0; n];
    y[n - 1] = 0.0;
    y[n - 2] = 1e-30;
    for i in (from + 1..n - 1).rev() {
        y[i - 1] = (2.0 * (1.0 + 5.0 * f[i]) * y[i] - (1.0 - f[i + 1]) * y[i + 1]) / (1.0 - f[i - 1]);
        if y[i - 1].abs() > 1e200 {
            for v in y.iter_mut().skip(i - 1) {
                *v *= 1e-200;
            }
        }
    }
    y
}

/// Lowest eigenpair of −½u'' + V u = E u with u(r_min) ~ r, u(r_max) = 0.
pub fn lowest_eigenpair(grid: &RadialGrid, v: &[f64], z: f64) -> Result<(f64, RadialState)> {
    let n = grid.len();
    let mut lo = -0.5 * z * z - 1.0;
    let mut hi = *v.last().expect("grid");
    let count = |e: f64| shoot_outward(grid, &numerov_coeffs(grid, v, e), z, n - 1).1;
    // A weakly binding intermediate potential may need the box states above V(r_max).
    let mut raise = 0;
    while count(hi) == 0 {
        raise += 1;
        if raise > 60 {
            return Err(Error::NonConvergence("no state found in the radial box".into()));
        }
        hi += 0.01 * raise as f64;
    }
    while count(lo) > 0 {
        lo -= 2.0 * (hi - lo);
        if lo < -1e8 {
            return Err(Error::NonConvergence("eigenvalue bracket failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    let e = 0.5 * (lo + hi);
    let f = numerov_coeffs(grid, v, e);
    // match at the outermost classical turning point
    let turn = (0..n).rev().find(|&i| v[i] < e).unwrap_or(n / 2);
    let m = turn.clamp(n / 8, n - 16);
    let (mut y, _) = shoot_outward(grid, &f, z, m);
    let yin = shoot_inward(&f, m);
    let scale = y[m] / yin[m];
    y.resize(n, 0.0);
    for i in m + 1..n {
        y[i] = yin[i] * scale;
    }
    let mut u: Vec<f64> = y.iter().zip(&grid.r).map(|(yy, r)| yy * r.sqrt()).collect();
    let norm = grid.integrate(|i| u[i] * u[i]).sqrt();
    let sign = if u[n / 4] < 0.0 { -1.0 } else { 1.0 };
    for x in u.iter_mut() {
        *x *= sign / norm;
    }
    Ok((e, RadialState { u }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScfOptions {
    pub z: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_mixing")]
    pub mixing: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iterations: usize,
    /// Effective charge of the hydrogenic starting density (default Z − 5/16).
    #[serde(default)]
    pub initial_zeta: Option<f64>,
}

fn default_mixing() -> f64 {
    0.3
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    500
}

impl ScfOptions {
    pub fn new(z: f64) -> Self {
        Self {
            z,
            grid: GridSpec::default(),
            mixing: default_mixing(),
            tol: default_tol(),
            max_iterations: default_max_iter(),
            initial_zeta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eigenvalue: f64,
    pub functional: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfResult {
    pub z: f64,
    #[serde(skip)]
    pub state: Option<RadialState>,
    pub functional: f64,
    pub eigenvalue: f64,
    pub kinetic: f64,
    pub attraction: f64,
    pub hartree_self: f64,
    pub converged: bool,
    pub tol: f64,
    /// F rose between iterates after the third iteration (beyond round-off).
    pub monotonicity_violations: usize,
    pub log: Vec<IterationRecord>,
    /// Diagnostics such as a virial residual above 1e−2 (grid too coarse).
    pub warnings: Vec<String>,
}

/// Self-consistent ground state by linear potential mixing.
pub fn scf_ground_state(opts: &ScfOptions) -> Result<ScfResult> {
    if !(opts.z >= 1.0) || !(opts.tol > 0.0) || !(opts.mixing > 0.0 && opts.mixing <= 1.0) {
        return Err(Error::Domain(format!("invalid SCF options {opts:?}")));
    }
    let grid = RadialGrid::new(opts.grid)?;
    let z = opts.z;
    let zeta = opts.initial_zeta.unwrap_or(z - 5.0 / 16.0);
    let start = RadialState::hydrogenic(&grid, zeta);
    let mut v_in = hartree_potential_unchecked(&grid, &start.u);
    let coulomb: Vec<f64> = grid.r.iter().map(|r| -z / r).collect();
    let mut log = Vec::new();
    let mut previous = f64::NAN;
    let mut violations = 0;
    for it in 0..opts.max_iterations {
        let v: Vec<f64> = coulomb.iter().zip(&v_in).map(|(a, b)| a + b).collect();
        let (e, state) = lowest_eigenpair(&grid, &v, z)?;
        let parts = functional_parts(&grid, &state, z)?;
        let delta = (e - previous).abs();
        if let Some(last) = log.last() {
            let last: &IterationRecord = last;
            if it >= 3 && parts.value > last.functional + 1e-12 * parts.value.abs() {
                violations += 1;
            }
        }
        log.push(IterationRecord { iteration: it, eigenvalue: e, functional: parts.value, delta_e: delta });
        let v_out = hartree_potential_unchecked(&grid, &state.u);
        if delta < opts.tol {
            let mut warnings = Vec::new();
            let virial = (parts.value + parts.kinetic).abs() / parts.value.abs();
            if virial > 1e-2 {
                warnings.push(format!("virial residual {virial:.2e}: grid too coarse"));
            }
            if violations > 0 {
                warnings.push(format!("functional increased on {violations} iterates"));
            }
            return Ok(ScfResult {
                warnings,
                z,
                functional: parts.value,
                eigenvalue: e,
                kinetic: parts.kinetic,
                attraction: parts.attraction,
                hartree_self: parts.hartree_self,
                converged: true,
                tol: opts.tol,
                monotonicity_violations: violations,
                log,
                state: Some(state),
            });
        }
        previous = e;
        for (a, b) in v_in.iter_mut().zip(&v_out) {
            *a = (1.0 - opts.mixing) * *a + opts.mixing * b;
        }
    }
    Err(Error::NonConvergence(format!(
        "SCF did not converge in {} iterations (last ΔE = {:.3e})",
        opts.max_iterations,
        log.last().map(|r| r.delta_e).unwrap_or(f64::NAN)
    )))
}

/// Energy relations checked on an SCF result; report-only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_bohr_1: f64,
    pub eigenvalue: f64,
    pub functional: f64,
    pub hartree_self: f64,
    /// E_g − F − U.
    pub identity_residual: f64,
    pub eg_over_e1: f64,
    pub two_eg_over_e1: f64,
    pub f_over_e1: f64,
    pub two_f_over_e1: f64,
    /// Implied hydride Hartree–Fock energy 2E_g and the alternative 2F.
    pub implied_hf_from_eg: f64,
    pub implied_hf_from_f: f64,
    /// |F + T|/|F|.
    pub virial_residual: f64,
    pub eg_above_f: bool,
    pub f_above_bohr: bool,
    pub converged: bool,
}

pub fn energy_relations(res: &ScfResult) -> EnergyReport {
    let e1 = -0.5 * res.z * res.z;
    let (eg, f, u, t) = (res.eigenvalue, res.functional, res.hartree_self, res.kinetic);
    EnergyReport {
        e_bohr_1: e1,
        eigenvalue: eg,
        functional: f,
        hartree_self: u,
        identity_residual: eg - f - u,
        eg_over_e1: eg / e1,
        two_eg_over_e1: 2.0 * eg / e1,
        f_over_e1: f / e1,
        two_f_over_e1: 2.0 * f / e1,
        implied_hf_from_eg: 2.0 * eg,
        implied_hf_from_f: 2.0 * f,
        virial_residual: (f + t).abs() / f.abs(),
        eg_above_f: eg > f,
        f_above_bohr: f > e1,
        converged: res.converged,
    }
}
