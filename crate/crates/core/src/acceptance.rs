//! Acceptance suite: each criterion runs its checks against independent oracles
//! and reports values, limits and runtime. `selftest` and the `acceptance`
//! test target both drive [`run_all`].

use crate::audit::{
    commutator_series, energy_identity_residual, jensen_gap, momentum_identity_residuals, CoulombSharp, DensityModel,
    DriftingGaussian, ExpectationContext, FreeField, Interaction, SeparableField, SharpFieldModel,
};
use crate::bohm::{pushforward_density, PushforwardOptions};
use crate::electrostatics::{field_energy, field_energy_quadrature, ChargeConfiguration};
use crate::hartree::{energy_relations, scf_ground_state, ScfOptions};
use crate::hydrogen::{bohr_energy, omega, BoundSuperposition, Parity, QuantumNumbers};
use crate::ode::OdeOptions;
use crate::perturbation::{
    asymptotic_components, cauchy_schwarz_bound, matrix_element, quadrature_components, GaussianPulse, SpatialGrid,
};
use crate::photon::{integrate_photon, photon_velocity, to_weber, PlaneWave, WeberField, DEFAULT_NODE_FLOOR};
use crate::quadrature::{gauss_legendre, Rule};
use crate::radiation::{fourier_fields, oscillator_solve, radial_kernel, radial_kernel_regularized, FnPath, SourceContext};
use crate::{Complex64, Result, Vec3, C_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

/// One numeric check inside a criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
    /// Documented spec/paper conflict: reported, expected to fail.
    pub known_deviation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub error: Option<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.seconds <= self.budget_seconds && self.checks.iter().all(|c| c.passed)
    }

    /// True if every failing check is a documented deviation.
    pub fn only_known_failures(&self) -> bool {
        self.error.is_none() && self.seconds <= self.budget_seconds && self.checks.iter().all(|c| c.passed || c.known_deviation)
    }
}

fn below(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.into(), value, limit: format!("< {limit:e}"), passed: value < limit, known_deviation: false }
}

fn within(name: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check { name: name.into(), value, limit: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value), known_deviation: false }
}

fn holds(name: &str, value: f64, ok: bool, limit: &str) -> Check {
    Check { name: name.into(), value, limit: limit.into(), passed: ok, known_deviation: false }
}

fn known(mut c: Check) -> Check {
    c.known_deviation = true;
    c
}

/// (id, title, runtime budget in seconds).
pub const CRITERIA: [(u32, &str, f64); 12] = [
    (1, "Bohr spectrum", 1.0),
    (2, "Hartree benchmark", 60.0),
    (3, "Electrostatic identity", 120.0),
    (4, "Radial kernels", 30.0),
    (5, "Selection rules", 60.0),
    (6, "Gaussian suppression", 10.0),
    (7, "Oscillator solver", 30.0),
    (8, "Transversality and gauge", 30.0),
    (9, "Equivariance", 300.0),
    (10, "Photon guiding", 10.0),
    (11, "Energy-momentum audits", 120.0),
    (12, "Relaxation substitutes", 60.0),
];

pub fn run(id: u32) -> Option<CriterionReport> {
    let (_, title, budget) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let result = match id {
        1 => bohr_spectrum(),
        2 => hartree_benchmark(),
        3 => electrostatic_identity(),
        4 => radial_kernels(),
        5 => selection_rules(),
        6 => gaussian_suppression(),
        7 => oscillator(),
        8 => transversality(),
        9 => equivariance(),
        10 => photon_guiding(),
        11 => audits(),
        _ => relaxation_substitutes(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Some(CriterionReport { id, title: title.to_string(), checks, seconds, budget_seconds: *budget, error })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|c| run(c.0)).collect()
}

fn bohr_spectrum() -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for n in 1..=8i64 {
        worst = worst.max((bohr_energy::<f64>(n)? + 0.5 / (n * n) as f64).abs());
    }
    let w21 = omega(2, 1)?;
    Ok(vec![below("max |E_n + 1/(2n^2)|, n <= 8", worst, 1e-12), holds("omega_21", w21, w21 == 0.375, "== 0.375")])
}

fn hartree_benchmark() -> Result<Vec<Check>> {
    let res = scf_ground_state(&ScfOptions::new(1.0))?;
    let r = energy_relations(&res);
    Ok(vec![
        holds("converged", res.log.len() as f64, r.converged, "true"),
        known(within("E_g/E1", r.eg_over_e1, 0.486, 0.490)),
        known(within("2E_g/E1", r.two_eg_over_e1, 0.972, 0.980)),
        within("F/E1 (companion)", r.f_over_e1, 0.486, 0.490),
        within("2F/E1 (companion)", r.two_f_over_e1, 0.972, 0.980),
        holds("E_g > F", r.eigenvalue - r.functional, r.eg_above_f, "> 0"),
        holds("F > -0.5", r.functional + 0.5, r.f_above_bohr, "> 0"),
        below("virial |F + T|/|F|", r.virial_residual, 1e-3),
        below("|E_g - F - U|", r.identity_residual.abs(), 1e-8),
    ])
}

fn electrostatic_identity() -> Result<Vec<Check>> {
    let cfg = ChargeConfiguration::atom(1.0, [1.0, 0.0, 0.0], 0.1);
    let closed = field_energy(&cfg)?.total;
    let quad = field_energy_quadrature(&cfg, 2);
    Ok(vec![below("|closed form - 11|", (closed - 11.0).abs(), 1e-12), below("quadrature relative error", (quad / closed - 1.0).abs(), 5e-3)])
}

fn radial_kernels() -> Result<Vec<Check>> {
    let outside = radial_kernel(2.0, 1.0)?;
    let on = radial_kernel(1.0, 1.0)?;
    let inside = radial_kernel(1.0, 2.0)?;
    let eta = 1e-4;
    let off_err = (radial_kernel_regularized(2.0, 1.0, eta)? - outside).abs().max((radial_kernel_regularized(1.0, 2.0, eta)? - inside).abs());
    let on_err = (radial_kernel_regularized(1.0, 1.0, eta)? - on).abs();
    Ok(vec![
        holds("K(R=2, ct=1)", outside, outside == -0.5, "== -ct/R"),
        holds("K(R=ct)", on, on == -PI / 4.0, "== -pi/4"),
        holds("K(R=1, ct=2)", inside, inside == 0.0, "== 0"),
        below("regularized oracle off the cone", off_err, 1e-3),
        known(below("regularized oracle on the cone", on_err, 1e-3)),
    ])
}

fn selection_rules() -> Result<Vec<Check>> {
    let pulse = GaussianPulse::lyman_desk(1.0);
    let peak = -pulse.z0 / C_LIGHT;
    let s1 = QuantumNumbers::nlm(1, 0, 0, Parity::Plus);
    let p0 = QuantumNumbers::nlm(2, 1, 0, Parity::Plus);
    let px = QuantumNumbers::nlm(2, 1, 1, Parity::Plus);
    let forbidden = matrix_element(&s1, &p0, &pulse, peak)?.abs();
    let allowed = matrix_element(&s1, &px, &pulse, peak)?.abs();
    let bound = cauchy_schwarz_bound(&s1, &px, &pulse);
    Ok(vec![
        below("|<100|A.dx|210>|", forbidden, 1e-10),
        holds("|<100|A.dx|211+>| / bound", allowed / bound, allowed > 1e-3 * bound && allowed <= bound, "in (1e-3, 1]"),
    ])
}

fn gaussian_suppression() -> Result<Vec<Check>> {
    let s1 = QuantumNumbers::nlm(1, 0, 0, Parity::Plus);
    let px = QuantumNumbers::nlm(2, 1, 1, Parity::Plus);
    let mut checks = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let sigma_z = s * C_LIGHT / 0.375;
        let pulse = GaussianPulse::new(1.0, sigma_z, -12.0 * sigma_z, 0.375)?;
        let expect = (-2.0 * s * s).exp();
        let closed = asymptotic_components(&px, &s1, &pulse)?;
        let quad = quadrature_components(&px, &s1, &pulse)?;
        checks.push(below(&format!("closed-form ratio error, sigma*omega/c = {s}"), (closed.counter.norm() / closed.co.norm() / expect - 1.0).abs(), 1e-4));
        checks.push(below(&format!("quadrature ratio error, sigma*omega/c = {s}"), (quad.counter.norm() / quad.co.norm() / expect - 1.0).abs(), 1e-4));
    }
    let exponent = GaussianPulse::paper_preset().suppression_exponent();
    checks.push(below("|preset exponent + 1e6| / 1e6", (exponent + 1e6).abs() / 1e6, 1e-9));
    Ok(checks)
}

fn oscillator() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let horizon = 4.0;
    let mut checks = Vec::new();
    for w in [0.0, 0.375, 5.0] {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            // smooth forcing with g(0) = 0
            let a: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b: [f64; 3] = [rng.random_range(0.2..3.0), rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
            let c: f64 = rng.random_range(-0.5..0.5);
            let g = move |t: f64| a[0] * (b[0] * t).sin() + a[1] * (1.0 - (b[1] * t).cos()) + a[2] * t * (-b[2] * t * t / 4.0).exp() + c * t * t;
            for i in 1..=8 {
                worst = worst.max(oscillator_solve(g, w, horizon * i as f64 / 8.0)?.residual);
            }
        }
        checks.push(below(&format!("sup residual, omega = {w}"), worst, 1e-6));
    }
    Ok(checks)
}

fn transversality() -> Result<Vec<Check>> {
    let path = FnPath {
        position: |t: f64| Vec3::new(0.3 * (0.375 * t).sin(), 0.2 * (0.7 * t).cos() - 0.2, 0.1 * t / (1.0 + t)),
        velocity: |t: f64| Vec3::new(0.1125 * (0.375 * t).cos(), -0.14 * (0.7 * t).sin(), 0.1 / (1.0 + t).powi(2)),
        span: (0.0, 20.0),
    };
    let ctx = SourceContext::new(&path, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<(f64, Vec3)> = (0..500)
        .map(|_| {
            let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let k = dir.normalize() * 10f64.powf(rng.random_range(-2.0..0.5));
            (rng.random_range(0.5..20.0), k)
        })
        .collect();
    use rayon::prelude::*;
    let worst = samples
        .par_iter()
        .map(|(t, k)| fourier_fields(&ctx, *t, k).map(|s| s.div_e.max(s.div_b).max(s.div_a)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(vec![below("max relative |k.E|, |k.B|, |k.A| over 500 samples", worst, 1e-8)])
}

fn equivariance() -> Result<Vec<Check>> {
    let state = BoundSuperposition::equal(&[QuantumNumbers::nlm(1, 0, 0, Parity::Plus), QuantumNumbers::nlm(2, 1, 0, Parity::Plus)])?;
    let period = 2.0 * PI / 0.375;
    let rep = pushforward_density(&state, period, &PushforwardOptions::default())?;
    Ok(vec![
        holds("chi-square p-value (1e5 samples)", rep.p_value, rep.p_value > 0.01, "> 0.01"),
        holds("lost trajectories", rep.failures as f64, rep.failures == 0, "== 0"),
    ])
}

fn photon_guiding() -> Result<Vec<Check>> {
    let wave = PlaneWave { amplitude: 0.7, direction: [0.0, 0.6, 0.8], polarization: [1.0, 0.0, 0.0], omega: 0.375, circular: true };
    let field = WeberField::plane_wave(wave)?;
    let tr = integrate_photon(&field, &Vec3::new(0.2, -0.1, 0.0), None, (0.0, 2.0), &OdeOptions::default())?;
    let speed_err = tr.speed.iter().map(|s| (s / C_LIGHT - 1.0).abs()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut fastest, mut dyadic, mut phase): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let e = Vec3::from_fn(|_, _| rng.random_range(-5.0..5.0));
        let b = Vec3::from_fn(|_, _| rng.random_range(-5.0..5.0));
        let psi = to_weber(&e, &b);
        let v = photon_velocity(&psi, DEFAULT_NODE_FLOOR)?;
        fastest = fastest.max(v.norm() / C_LIGHT);
        let scale = 2f64.powi(rng.random_range(-20..20));
        let scaled = photon_velocity(&psi.map(|z| z * scale), DEFAULT_NODE_FLOOR)?;
        dyadic = dyadic.max((scaled - v).norm());
        let lambda = Complex64::from_polar(rng.random_range(0.1..10.0), rng.random_range(-PI..PI));
        phase = phase.max((photon_velocity(&psi.map(|z| z * lambda), DEFAULT_NODE_FLOOR)? - v).norm() / C_LIGHT);
    }
    Ok(vec![
        below("max |speed/c - 1| on a plane wave", speed_err, 1e-8),
        holds("max |v|/c over 1e4 samples", fastest, fastest <= 1.0 + 1e-9, "<= 1 + 1e-9"),
        holds("real power-of-two rescaling, max |dv|", dyadic, dyadic == 0.0, "== 0"),
        below("complex rescaling, max |dv|/c (rounding)", phase, 1e-12),
    ])
}

/// ∫N(q; μ(t), s²) exp(−|q|²/(2τ²)) d³q and its time derivative for μ = center + drift·t.
pub(crate) fn gaussian_overlap(g: &DriftingGaussian, tau2: f64, t: f64) -> (f64, f64) {
    let s2 = g.spread * g.spread;
    let v = Vec3::from(g.drift);
    let mu = Vec3::from(g.center) + v * t;
    let k = (tau2 / (tau2 + s2)).powf(1.5) * (-mu.norm_squared() / (2.0 * (tau2 + s2))).exp();
    (k, -k * mu.dot(&v) / (tau2 + s2))
}

/// Nested quadrature of ∫ρ F(ball-averaged E, ball-averaged B, ρ, j) d³q for a Gaussian
/// density, with its own tensor rule in q and ball rule, independent of the audit grids.
pub(crate) fn nested_ball_average(
    field: &impl SharpFieldModel,
    g: &DriftingGaussian,
    t: f64,
    a: f64,
    f: impl Fn(Vec3, Vec3, f64, Vec3) -> Vec3 + Sync,
) -> Vec3 {
    use rayon::prelude::*;
    let mu = Vec3::from(g.center) + Vec3::from(g.drift) * t;
    let axis = Rule::uniform_panels(-7.0, 7.0, 7, 8);
    let (xr, wr) = gauss_legendre(10);
    let (xc, wc) = gauss_legendre(10);
    let mut ball = Vec::new();
    for (r0, w1) in xr.iter().zip(&wr) {
        let r = 0.5 * a * (r0 + 1.0);
        for (c, w2) in xc.iter().zip(&wc) {
            let st = (1.0 - c * c).sqrt();
            for k in 0..20 {
                let ph = 2.0 * PI * k as f64 / 20.0;
                let wt = 0.5 * a * w1 * r * r * w2 * (2.0 * PI / 20.0) * 3.0 / (4.0 * PI * a.powi(3));
                ball.push((Vec3::new(st * ph.cos(), st * ph.sin(), *c) * r, wt));
            }
        }
    }
    let n = axis.nodes.len();
    (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let q = mu + Vec3::new(axis.nodes[i], axis.nodes[j], axis.nodes[k]) * g.spread;
            let w = axis.weights[i] * axis.weights[j] * axis.weights[k] * g.spread.powi(3);
            let (rho, cur) = g.density_current(t, &q);
            let (mut e, mut b) = (Vec3::zeros(), Vec3::zeros());
            for (off, wt) in &ball {
                let (fe, fb) = field.fields(t, &(q + off), &q);
                e += fe * *wt;
                b += fb * *wt;
            }
            f(e, b, rho, cur) * w
        })
        .sum()
}

fn audits() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let s1 = QuantumNumbers::nlm(1, 0, 0, Parity::Plus);
    let eigen = BoundSuperposition::eigenstate(s1);

    // static Coulomb field with a stationary state: both sides vanish
    let coulomb = CoulombSharp { z: 1.0, radius: 0.5 };
    let ctx = ExpectationContext::new(&eigen, &coulomb, ExpectationContext::default_grid(1), 0.5, 0.0)?;
    let e = energy_identity_residual(&ctx, 0.0, 1e-3)?;
    let m = momentum_identity_residuals(&ctx, 0.0, 1e-3)?;
    checks.push(below("static: energy residual", e.residual, 1e-8));
    checks.push(below("static: momentum residuals", m.residual.max(m.residual_square), 1e-8));

    // plane wave in a unit box, period-averaged
    let box_energy = |t: f64| (0.5 + ((2.0 * (1.0 - C_LIGHT * t)).sin() + (2.0 * C_LIGHT * t).sin()) / 4.0) / (4.0 * PI);
    let wave = FreeField {
        fields: |t: f64, s: &Vec3| {
            let c = (s.z - C_LIGHT * t).cos();
            (Vec3::new(c, 0.0, 0.0), Vec3::new(0.0, c, 0.0))
        },
        energy: box_energy,
        momentum: move |t: f64| Vec3::new(0.0, 0.0, box_energy(t) / C_LIGHT),
    };
    let ctx = ExpectationContext::new(&eigen, &wave, ExpectationContext::default_grid(1), 0.5, 0.0)?;
    let period = 2.0 * PI / C_LIGHT;
    let mut mean = 0.0;
    for i in 0..32 {
        let r = energy_identity_residual(&ctx, period * i as f64 / 32.0, period * 1e-3)?;
        mean += (r.lhs - r.rhs) / 32.0;
    }
    checks.push(below("plane wave: period-averaged energy residual", mean.abs(), 1e-5));

    // separable field against closed-form and nested-quadrature oracles
    let g = DriftingGaussian { center: [0.3, -0.2, 0.1], drift: [0.4, 0.1, -0.2], spread: 1.0 };
    let field = SeparableField { f: |t: f64| 1.0 + 0.5 * t.sin(), f_b: |t: f64| 0.7 * (2.0 * t).cos(), length: 2.0 };
    let a = 0.4;
    let t: f64 = 0.3;
    let ctx = ExpectationContext::new(&g, &field, ExpectationContext::default_grid(1), a, t)?;
    let (f, df) = (1.0 + 0.5 * t.sin(), 0.5 * t.cos());
    let (fb, dfb) = (0.7 * (2.0 * t).cos(), -1.4 * (2.0 * t).sin());
    let g2 = PI.powf(1.5);
    let (k, dk) = gaussian_overlap(&g, 2.0, t);
    let (k4, dk4) = gaussian_overlap(&g, 1.0, t);
    let e = energy_identity_residual(&ctx, t, 1e-3)?;
    let lhs = g2 / (8.0 * PI) * (2.0 * (f * df + fb * dfb) * k + (f * f + fb * fb) * dk);
    let rhs = nested_ball_average(&field, &g, t, a, |e, _, _, j| Vec3::new(e.dot(&j), 0.0, 0.0)).x;
    checks.push(below("separable: d<E>/dt vs closed form", (e.lhs - lhs).abs(), 1e-5));
    checks.push(below("separable: <[E].v> vs nested quadrature", (e.rhs - rhs).abs(), 1e-5));
    let m = momentum_identity_residuals(&ctx, t, 1e-3)?;
    let pz = g2 / (4.0 * PI * C_LIGHT);
    let lhs = Vec3::new(0.0, 0.0, pz * ((df * fb + f * dfb) * k + f * fb * dk));
    let rhs = nested_ball_average(&field, &g, t, a, |e, b, rho, j| e * rho + j.cross(&b) / C_LIGHT);
    checks.push(below("separable: d<P>/dt vs closed form", (m.lhs - lhs).norm(), 1e-5));
    checks.push(below("separable: force density vs nested quadrature", (m.rhs - rhs).norm(), 1e-5));
    let lhs_sq = 0.5 * pz * pz * (2.0 * f * fb * (df * fb + f * dfb) * k4 + (f * fb).powi(2) * dk4);
    checks.push(below("separable: d<|P|^2/2>/dt vs closed form", (m.lhs_square - lhs_sq).abs(), 1e-5));

    // chain rule for a q-independent momentum
    let drift = FreeField {
        fields: |_: f64, _: &Vec3| (Vec3::zeros(), Vec3::zeros()),
        energy: |_: f64| 0.0,
        momentum: |t: f64| Vec3::new(t.sin(), (2.0 * t).cos(), 0.3),
    };
    let ctx = ExpectationContext::new(&eigen, &drift, ExpectationContext::default_grid(1), 0.5, 0.0)?;
    let m = momentum_identity_residuals(&ctx, 0.7, 1e-3)?;
    let p = Vec3::new(0.7f64.sin(), 1.4f64.cos(), 0.3);
    checks.push(below("|P|^2 identity vs P.(momentum identity)", (m.lhs_square - p.dot(&m.lhs)).abs(), 1e-5));

    // Jensen gap
    let coarse = || SpatialGrid::product(&[0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0], 4, 6, 12);
    let ctx = ExpectationContext::new(&eigen, &drift, coarse(), 0.5, 0.0)?;
    checks.push(below("Jensen gap, q-independent field", jensen_gap(&ctx, 0.4).gap.abs(), 1e-12));
    let mut lowest = f64::INFINITY;
    for (spread, cx) in [(0.5, 0.0), (0.8, 0.4), (1.2, -0.7), (1.5, 0.2)] {
        let g = DriftingGaussian { center: [cx, 0.0, -cx], drift: [0.0; 3], spread };
        let ctx = ExpectationContext::new(&g, &coulomb, coarse(), 0.5, 0.0)?;
        lowest = lowest.min(jensen_gap(&ctx, 0.0).gap);
    }
    let ctx = ExpectationContext::new(&eigen, &coulomb, coarse(), 0.5, 0.0)?;
    lowest = lowest.min(jensen_gap(&ctx, 0.0).gap);
    checks.push(holds("min Jensen gap, Coulomb fields", lowest, lowest >= -1e-10, ">= -1e-10"));
    Ok(checks)
}

fn relaxation_substitutes() -> Result<Vec<Check>> {
    // the full relaxation is out of reach; report the commutator series instead
    let pulse = GaussianPulse::lyman_desk(C_LIGHT * 1e-3);
    let a_field = move |t: f64, q: &Vec3| pulse.vector_potential(t, q.z);
    let inter = Interaction { vector_potential: Some(&a_field), radiation_energy: None };
    // eigenstates give zero identically; the Lyman-alpha superposition does not
    let state = BoundSuperposition::equal(&[QuantumNumbers::nlm(1, 0, 0, Parity::Plus), QuantumNumbers::nlm(2, 1, 1, Parity::Plus)])?;
    let peak = -pulse.z0 / C_LIGHT;
    let quarter = 0.25 * 2.0 * PI / pulse.omega;
    let times: Vec<f64> = (-4..=4).map(|i| peak + i as f64 * quarter).collect();
    let series = commutator_series(&state, &inter, &times, &SpatialGrid::atomic(1))?;
    let largest = series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let finite = series.iter().all(|(_, v)| v.is_finite());
    let idle = commutator_series(&state, &Interaction::default(), &times[..1], &SpatialGrid::atomic(1))?[0].1;
    Ok(vec![
        holds("commutator series finite (max |value|)", largest, finite && largest > 1e-12, "finite, > 1e-12 under the pulse"),
        holds("commutator without interaction", idle, idle == 0.0, "== 0"),
    ])
}
