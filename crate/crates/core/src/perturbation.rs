//! First-order amplitudes of a hydrogen atom crossed by a Gaussian plane-wave pulse.

use crate::{Error, Result, Vec3, C_LIGHT};
use serde::{Deserialize, Serialize};

/// A = x̂·amp·exp(−ξ²/2σ_z²)·cos(ωξ/c) with ξ = z − z₀ − ct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub sigma_z: f64,
    pub z0: f64,
    pub omega: f64,
}

impl GaussianPulse {
    pub fn new(amplitude: f64, sigma_z: f64, z0: f64, omega: f64) -> Result<Self> {
        let p = Self { amplitude, sigma_z, z0, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_z > 0.0) || !self.amplitude.is_finite() || !self.z0.is_finite() || !(self.omega >= 0.0) {
            return Err(Error::Domain(format!("invalid pulse {self:?}")));
        }
        Ok(())
    }

    /// Lyman-α carrier wavelength 2πc/ω.
    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * C_LIGHT / self.omega
    }

    /// Desk-scale Lyman-α beam: σ_z = 80λ, centre 12σ_z before the atom.
    pub fn lyman_desk(amplitude: f64) -> Self {
        let omega = 0.375;
        let sigma_z = 80.0 * 2.0 * std::f64::consts::PI * C_LIGHT / omega;
        Self { amplitude, sigma_z, z0: -12.0 * sigma_z, omega }
    }

    /// The laboratory beam with σ_zω/c = 1000/√2, so that 2σ_z²ω²/c² = 10⁶.
    pub fn paper_preset() -> Self {
        let omega = 0.375;
        let sigma_z = 1000.0 / 2f64.sqrt() * C_LIGHT / omega;
        Self { amplitude: C_LIGHT, sigma_z, z0: -12.0 * sigma_z, omega }
    }

    /// Exponent −2σ_z²ω²/c² of the counter-rotating suppression factor.
    pub fn suppression_exponent(&self) -> f64 {
        -2.0 * (self.sigma_z * self.omega / C_LIGHT).powi(2)
    }

    pub fn profile(&self, xi: f64) -> f64 {
        (-0.5 * (xi / self.sigma_z).powi(2)).exp() * (self.omega * xi / C_LIGHT).cos()
    }

    pub fn vector_potential(&self, t: f64, z: f64) -> Vec3 {
        Vec3::new(self.amplitude * self.profile(z - self.z0 - C_LIGHT * t), 0.0, 0.0)
    }
}

/// A(t, z) of the pulse; only the x-component is nonzero.
pub fn pulse_vector_potential(pulse: &GaussianPulse, t: f64, z: f64) -> Vec3 {
    pulse.vector_potential(t, z)
}

use crate::hydrogen::{eigenfunction_with_gradient, real_eigenfunction, QuantumNumbers};
use crate::quadrature::{gauss_legendre, Rule};
use crate::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Radius of the atomic region covered by the spatial quadrature.
pub const ATOMIC_RADIUS: f64 = 40.0;

/// Product quadrature over the ball |q| ≤ 40: Gauss–Legendre panels in r,
/// Gauss–Legendre in cos θ and a uniform azimuth rule.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn atomic(resolution: usize) -> Self {
        let res = resolution.max(1);
        let base = [0.0, 1.0, 2.0, 4.0, 8.0, 14.0, 22.0, 30.0, ATOMIC_RADIUS];
        let mut breaks = vec![0.0];
        for w in base.windows(2) {
            for j in 1..=res {
                breaks.push(w[0] + (w[1] - w[0]) * j as f64 / res as f64);
            }
        }
        Self::product(&breaks, 16, 12 + 8 * res, 16)
    }

    /// Gauss–Legendre panels between `radial_breaks`, `polar` nodes in cos θ and `azimuth` uniform angles.
    pub fn product(radial_breaks: &[f64], order: usize, polar: usize, azimuth: usize) -> Self {
        let radial = Rule::composite(radial_breaks, order);
        let (ct, wt) = gauss_legendre(polar);
        let mut points = Vec::with_capacity(radial.len() * polar * azimuth);
        let mut weights = Vec::with_capacity(points.capacity());
        for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
            for (&c, &wc) in ct.iter().zip(&wt) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..azimuth {
                    let ph = 2.0 * PI * (k as f64 + 0.5) / azimuth as f64;
                    points.push(Vec3::new(r * s * ph.cos(), r * s * ph.sin(), r * c));
                    weights.push(wr * r * r * wc * 2.0 * PI / azimuth as f64);
                }
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// W_j = w_j ψ_bra(q_j) ∂_xψ_ket(q_j) together with the node heights z_j.
#[derive(Debug, Clone)]
pub struct TransitionWeights {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl TransitionWeights {
    pub fn new(bra: &QuantumNumbers, ket: &QuantumNumbers, grid: &SpatialGrid) -> Self {
        let (z, w) = grid
            .points
            .par_iter()
            .zip(&grid.weights)
            .map(|(p, &wp)| {
                let b = real_eigenfunction(bra, [p.x, p.y, p.z]);
                let (_, g) = eigenfunction_with_gradient(ket, p);
                (p.z, wp * b * g.x)
            })
            .unzip();
        Self { z, w }
    }

    /// ⟨bra|∂_x|ket⟩.
    pub fn uniform(&self) -> f64 {
        self.w.iter().sum()
    }

    /// ⟨bra|A_x(t, z)∂_x|ket⟩ by direct summation.
    pub fn with_pulse(&self, pulse: &GaussianPulse, t: f64) -> f64 {
        self.z.iter().zip(&self.w).map(|(&z, &w)| w * pulse.vector_potential(t, z).x).sum()
    }

    /// Σ_j W_j e^{iκz_j}.
    pub fn phase_sum(&self, kappa: f64) -> Complex64 {
        self.z.iter().zip(&self.w).map(|(&z, &w)| Complex64::from_polar(w, kappa * z)).sum()
    }
}

/// ⟨bra|A(t)·∇|ket⟩ for the pulse, refined until two resolutions agree to 1e−10.
pub fn matrix_element(bra: &QuantumNumbers, ket: &QuantumNumbers, pulse: &GaussianPulse, t: f64) -> Result<f64> {
    pulse.validate()?;
    let coarse = TransitionWeights::new(bra, ket, &SpatialGrid::atomic(1)).with_pulse(pulse, t);
    let fine = TransitionWeights::new(bra, ket, &SpatialGrid::atomic(2)).with_pulse(pulse, t);
    let err = (fine - coarse).abs();
    if err > 1e-10 {
        return Err(Error::NonConvergence(format!("matrix element {bra}→{ket}: estimate {fine:e}, error {err:e}")));
    }
    Ok(fine)
}

/// max|A|·‖bra‖·‖∂_x ket‖, the Cauchy–Schwarz bound of the matrix element.
pub fn cauchy_schwarz_bound(bra: &QuantumNumbers, ket: &QuantumNumbers, pulse: &GaussianPulse) -> f64 {
    let grid = SpatialGrid::atomic(2);
    let norm_b: f64 = grid.points.iter().zip(&grid.weights).map(|(p, w)| w * real_eigenfunction(bra, [p.x, p.y, p.z]).powi(2)).sum();
    let norm_dk: f64 = grid.points.iter().zip(&grid.weights).map(|(p, w)| w * eigenfunction_with_gradient(ket, p).1.x.powi(2)).sum();
    pulse.amplitude.abs() * norm_b.sqrt() * norm_dk.sqrt()
}

/// Moments for fast time evaluation of Σ_j W_j A_x(t, z_j), split into the
/// carrier components e^{±iωξ/c} (ξ = z − u, u = z₀ + ct).
#[derive(Debug, Clone)]
struct PulseMoments {
    pulse: GaussianPulse,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
}

impl PulseMoments {
    fn new(tw: &TransitionWeights, pulse: &GaussianPulse) -> Self {
        let s2 = pulse.sigma_z * pulse.sigma_z;
        let zmax = tw.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let umax = 13.0 * pulse.sigma_z + zmax;
        let x = zmax * umax / s2;
        let mut count = 1;
        let mut term = 1.0;
        while term > 1e-17 || (count as f64) < x {
            term *= x / count as f64;
            count += 1;
            if count > 400 {
                break;
            }
        }
        let kappa = pulse.omega / C_LIGHT;
        let mut plus = vec![Complex64::new(0.0, 0.0); count];
        let mut minus = plus.clone();
        for (&z, &w) in tw.z.iter().zip(&tw.w) {
            let g = w * (-0.5 * z * z / s2).exp();
            let e = Complex64::from_polar(1.0, kappa * z);
            let mut zp = 1.0;
            for p in 0..count {
                plus[p] += e * (g * zp);
                minus[p] += e.conj() * (g * zp);
                zp *= z;
            }
        }
        Self { pulse: *pulse, plus, minus }
    }

    /// (F₊(u), F₋(u)) with F₊ + F₋ = Σ_j W_j A_x at u = z₀ + ct.
    fn eval(&self, u: f64) -> (Complex64, Complex64) {
        let s2 = self.pulse.sigma_z * self.pulse.sigma_z;
        let y = u / s2;
        let (mut sp, mut sm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut c = 1.0;
        for p in 0..self.plus.len() {
            sp += self.plus[p] * c;
            sm += self.minus[p] * c;
            c *= y / (p + 1) as f64;
        }
        let env = 0.5 * self.pulse.amplitude * (-0.5 * u * u / s2).exp();
        let ph = Complex64::from_polar(1.0, -self.pulse.omega * u / C_LIGHT);
        (sp * ph * env, sm * ph.conj() * env)
    }
}

/// Carrier components of a first-order amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeComponents {
    /// Component whose carrier phase cancels e^{−iΔτ} at resonance.
    pub co: Complex64,
    pub counter: Complex64,
}

impl AmplitudeComponents {
    pub fn total(&self) -> Complex64 {
        self.co + self.counter
    }
}

// −(1/c)∫ e^{−iΔτ} F±(z₀ + cτ) dτ over [t0, t1], restricted to where the envelope overlaps the atom.
fn time_integral(m: &PulseMoments, delta: f64, t0: f64, t1: f64) -> (Complex64, Complex64) {
    let p = &m.pulse;
    let reach = 13.0 * p.sigma_z + ATOMIC_RADIUS;
    let lo = t0.max((-reach - p.z0) / C_LIGHT);
    let hi = t1.min((reach - p.z0) / C_LIGHT);
    if hi <= lo {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let rate = delta.abs() + p.omega + C_LIGHT / p.sigma_z;
    let panels = ((rate * (hi - lo) / 2.0).ceil() as usize).max(8);
    let rule = Rule::uniform_panels(lo, hi, panels, 16);
    let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (fp, fm) = m.eval(p.z0 + C_LIGHT * tau);
        let ph = Complex64::from_polar(-w / C_LIGHT, -delta * tau);
        a += fp * ph;
        b += fm * ph;
    }
    (a, b)
}

fn split_components(delta: f64, omega: f64, plus: Complex64, minus: Complex64) -> AmplitudeComponents {
    // F₊ carries e^{−iωτ}, F₋ carries e^{+iωτ}
    if (delta + omega).abs() <= (delta - omega).abs() {
        AmplitudeComponents { co: plus, counter: minus }
    } else {
        AmplitudeComponents { co: minus, counter: plus }
    }
}

/// Options for the sourced (outgoing) contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcedSpec {
    /// Bookkeeping scale ε of the Born characteristic.
    pub epsilon: f64,
    /// Ball radius a of the electron charge.
    pub ball_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcedAmplitudes {
    /// Always true: computed in the Born-type approximation only.
    pub born_type: bool,
    pub epsilon: f64,
    pub ball_radius: f64,
    /// Ball-averaged self-response h(ω) of the sourced potential to the electron velocity.
    pub self_response: Complex64,
    pub values: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSet {
    pub initial: QuantumNumbers,
    pub labels: Vec<QuantumNumbers>,
    pub times: Vec<f64>,
    /// free[i][j] = c^f of labels[i] at times[j].
    pub free: Vec<Vec<Complex64>>,
    pub sourced: Option<SourcedAmplitudes>,
    /// max_t Σ|c|².
    pub unitarity_budget: f64,
    pub warnings: Vec<String>,
}

impl AmplitudeSet {
    pub fn final_free(&self, label: &QuantumNumbers) -> Option<Complex64> {
        let i = self.labels.iter().position(|l| l == label)?;
        self.free[i].last().copied()
    }
}

/// Default basis: bound states with n ≤ 4.
pub fn default_basis() -> Vec<QuantumNumbers> {
    QuantumNumbers::up_to(4).expect("n ≤ 4 is in range")
}

fn check_far(pulse: &GaussianPulse) -> Result<()> {
    pulse.validate()?;
    if pulse.z0 > -10.0 * pulse.sigma_z {
        return Err(Error::Precondition(format!(
            "pulse must start at least 10σ_z before the atom (z0 = {}, σ_z = {})",
            pulse.z0, pulse.sigma_z
        )));
    }
    Ok(())
}

/// c_{n'}(t) = −(1/c)∫₀^t e^{−i(E_i−E_{n'})τ}⟨n'|A·∇|i⟩dτ at the requested times (ascending).
pub fn amplitude_evolution(
    initial: &QuantumNumbers,
    pulse: &GaussianPulse,
    basis: &[QuantumNumbers],
    times: &[f64],
    sourced: Option<&SourcedSpec>,
) -> Result<AmplitudeSet> {
    check_far(pulse)?;
    if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return Err(Error::Domain("output times must be non-negative and ascending".into()));
    }
    let labels: Vec<QuantumNumbers> = basis.iter().filter(|l| *l != initial).copied().collect();
    let grid = SpatialGrid::atomic(1);
    let self_response = match sourced {
        Some(spec) => Some(crate::radiation::born_self_response(pulse.omega, spec.ball_radius)?),
        None => None,
    };
    // cumulative (F₊, F₋) integrals per label and time
    let components: Vec<Vec<(Complex64, Complex64)>> = labels
        .par_iter()
        .map(|bra| {
            let delta = initial.energy() - bra.energy();
            let m = PulseMoments::new(&TransitionWeights::new(bra, initial, &grid), pulse);
            let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    let (da, db) = time_integral(&m, delta, prev, t);
                    a += da;
                    b += db;
                    prev = t;
                    (a, b)
                })
                .collect()
        })
        .collect();
    let free: Vec<Vec<Complex64>> = components.iter().map(|row| row.iter().map(|(a, b)| a + b).collect()).collect();
    let sourced = match (sourced, self_response) {
        (Some(spec), Some(h)) => {
            // A^s_x = (ε/c)[Re h·A_x − Im h·A_x^sin]; the sin carrier has components −iF₊ and +iF₋
            let i = Complex64::new(0.0, 1.0);
            let values = components
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(a, b)| {
                            let cos = a + b;
                            let sin = -i * (a - b);
                            (cos * h.re - sin * h.im) * (spec.epsilon / C_LIGHT)
                        })
                        .collect()
                })
                .collect();
            Some(SourcedAmplitudes {
                born_type: true,
                epsilon: spec.epsilon,
                ball_radius: spec.ball_radius,
                self_response: h,
                values,
            })
        }
        _ => None,
    };
    let unitarity_budget = (0..times.len())
        .map(|j| free.iter().map(|c| c[j].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if unitarity_budget > 0.1 {
        warnings.push(format!("Σ|c|² = {unitarity_budget:.3} exceeds 0.1: first-order theory is not valid"));
    }
    if basis.contains(initial) {
        warnings.push(format!("initial label {initial} dropped from the basis"));
    }
    Ok(AmplitudeSet { initial: *initial, labels, times: times.to_vec(), free, sourced, unitarity_budget, warnings })
}

/// Closed-form t → ∞ amplitude, split into carrier components.
pub fn asymptotic_components(initial: &QuantumNumbers, target: &QuantumNumbers, pulse: &GaussianPulse) -> Result<AmplitudeComponents> {
    pulse.validate()?;
    let delta = initial.energy() - target.energy();
    let tw = TransitionWeights::new(target, initial, &SpatialGrid::atomic(1));
    let spatial = tw.phase_sum(-delta / C_LIGHT) * Complex64::from_polar(1.0, delta * pulse.z0 / C_LIGHT);
    let s = pulse.sigma_z / C_LIGHT;
    let base = -pulse.amplitude / C_LIGHT * 0.5 * (2.0 * PI).sqrt() * s;
    // Δ + ω pairs with F₊ (e^{−iωτ}), Δ − ω with F₋
    let plus = spatial * base * (-0.5 * s * s * (delta + pulse.omega).powi(2)).exp();
    let minus = spatial * base * (-0.5 * s * s * (delta - pulse.omega).powi(2)).exp();
    Ok(split_components(delta, pulse.omega, plus, minus))
}

pub fn asymptotic_amplitude(initial: &QuantumNumbers, target: &QuantumNumbers, pulse: &GaussianPulse) -> Result<Complex64> {
    Ok(asymptotic_components(initial, target, pulse)?.total())
}

/// The same components by direct time quadrature over the whole passage.
pub fn quadrature_components(initial: &QuantumNumbers, target: &QuantumNumbers, pulse: &GaussianPulse) -> Result<AmplitudeComponents> {
    check_far(pulse)?;
    let delta = initial.energy() - target.energy();
    let m = PulseMoments::new(&TransitionWeights::new(target, initial, &SpatialGrid::atomic(1)), pulse);
    let t_end = (-pulse.z0 + 20.0 * pulse.sigma_z) / C_LIGHT;
    let (plus, minus) = time_integral(&m, delta, 0.0, t_end);
    Ok(split_components(delta, pulse.omega, plus, minus))
}
