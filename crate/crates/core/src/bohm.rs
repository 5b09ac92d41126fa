//! Guiding velocity fields, characteristics and transport along them.

use crate::hydrogen::BoundSuperposition;
use crate::ode::{dense, dense_derivative, dopri5, OdeOptions, Solution};
use crate::quadrature::Rule;
use crate::{Error, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;

pub const DEFAULT_NODE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Wavefunction,
    Pulse,
    Synthetic,
}

/// Velocity field v(t, q) driving the characteristics. Implementations must be pure.
pub trait VelocityField: Sync {
    fn velocity(&self, t: f64, q: &Vec3) -> Result<Vec3>;
    fn provenance(&self) -> Provenance;
}

/// Momentum offset P♯(t, q) subtracted from ħ∇Φ.
pub type MomentumOffset = dyn Fn(f64, &Vec3) -> Vec3 + Send + Sync;

/// v = Im(Ψ*∇Ψ)/|Ψ|² − P♯ (unit mass, ħ = 1).
pub fn wavefunction_velocity(
    state: &BoundSuperposition,
    offset: Option<&MomentumOffset>,
    t: f64,
    q: &Vec3,
    node_floor: f64,
) -> Result<Vec3> {
    let (rho, j) = state.density_current(t, q);
    if !(rho >= node_floor) {
        return Err(Error::NodeProximity { t, q: [q.x, q.y, q.z], rho });
    }
    let v = j / rho;
    Ok(match offset {
        Some(p) => v - p(t, q),
        None => v,
    })
}

/// Velocity field of a bound superposition.
pub struct WavefunctionField<'a> {
    pub state: &'a BoundSuperposition,
    pub offset: Option<&'a MomentumOffset>,
    pub node_floor: f64,
}

impl<'a> WavefunctionField<'a> {
    pub fn new(state: &'a BoundSuperposition) -> Self {
        Self { state, offset: None, node_floor: DEFAULT_NODE_FLOOR }
    }
}

impl VelocityField for WavefunctionField<'_> {
    fn velocity(&self, t: f64, q: &Vec3) -> Result<Vec3> {
        wavefunction_velocity(self.state, self.offset, t, q, self.node_floor)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Wavefunction
    }
}

/// Any closure, tagged with its provenance.
pub struct FnField<F> {
    pub f: F,
    pub provenance: Provenance,
}

impl<F: Fn(f64, &Vec3) -> Vec3 + Sync> FnField<F> {
    pub fn synthetic(f: F) -> Self {
        Self { f, provenance: Provenance::Synthetic }
    }
}

impl<F: Fn(f64, &Vec3) -> Vec3 + Sync> VelocityField for FnField<F> {
    fn velocity(&self, t: f64, q: &Vec3) -> Result<Vec3> {
        let v = (self.f)(t, q);
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::Singularity(format!("non-finite velocity at t = {t}")))
        }
    }
    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Initial-value problem, anchor at the earliest time.
    Forward,
    /// Final-value problem, anchor at the latest time.
    Backward,
}

/// Characteristic τ ↦ Q_q(τ), stored in increasing τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub q: Vec<Vec3>,
    pub v: Vec<Vec3>,
    /// Scaled local error estimate of the step ending at each sample.
    pub step_error: Vec<f64>,
    /// Dense-output correction of the step ending at each sample (in the integration order).
    corr: Vec<Vec3>,
    pub anchor: (f64, Vec3),
    pub direction: Direction,
}

impl Trajectory {
    fn from_solution(sol: Solution<3>, anchor: (f64, Vec3), direction: Direction) -> Self {
        let mut tr = Trajectory {
            tau: sol.t,
            q: sol.y.iter().map(|y| Vec3::from(*y)).collect(),
            v: sol.dy.iter().map(|y| Vec3::from(*y)).collect(),
            step_error: sol.err,
            corr: sol.corr.iter().map(|y| Vec3::from(*y)).collect(),
            anchor,
            direction,
        };
        if direction == Direction::Backward {
            tr.tau.reverse();
            tr.q.reverse();
            tr.v.reverse();
            // errors belong to the step ending at each sample in the new order
            tr.step_error.reverse();
            tr.step_error.rotate_right(1);
            // the quartic correction is symmetric in s ↔ 1−s
            tr.corr.reverse();
            tr.corr.rotate_right(1);
        }
        if let Some(i) = tr.tau.iter().position(|&t| t == anchor.0) {
            tr.q[i] = anchor.1;
        }
        tr
    }

    pub fn span(&self) -> (f64, f64) {
        (self.tau[0], *self.tau.last().expect("non-empty"))
    }

    /// Dense output Q_q(τ).
    pub fn at(&self, tau: f64) -> Result<Vec3> {
        let (i, _) = self.locate(tau)?;
        if self.tau.len() == 1 {
            return Ok(self.q[0]);
        }
        let y = dense(
            self.tau[i - 1],
            self.tau[i],
            &self.q[i - 1].into(),
            &self.q[i].into(),
            &self.v[i - 1].into(),
            &self.v[i].into(),
            &self.corr[i].into(),
            tau,
        );
        Ok(Vec3::from(y))
    }

    /// Velocity at τ from the derivative of the dense output.
    pub fn velocity_at(&self, tau: f64) -> Result<Vec3> {
        let (i, _) = self.locate(tau)?;
        if self.tau.len() == 1 {
            return Ok(self.v[0]);
        }
        let y = dense_derivative(
            self.tau[i - 1],
            self.tau[i],
            &self.q[i - 1].into(),
            &self.q[i].into(),
            &self.v[i - 1].into(),
            &self.v[i].into(),
            &self.corr[i].into(),
            tau,
        );
        Ok(Vec3::from(y))
    }

    fn locate(&self, tau: f64) -> Result<(usize, f64)> {
        let (a, b) = self.span();
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(tau >= a - slack && tau <= b + slack) {
            return Err(Error::Domain(format!("τ = {tau} outside trajectory span [{a}, {b}]")));
        }
        Ok((self.tau.partition_point(|&s| s < tau).clamp(1, self.tau.len().max(2) - 1), tau))
    }
}

/// Integration failure with the accepted part of the characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryError {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} accepted samples)", self.error, self.partial.tau.len())
    }
}

impl std::error::Error for TrajectoryError {}

impl From<TrajectoryError> for Error {
    fn from(e: TrajectoryError) -> Self {
        e.error
    }
}

/// Solve dQ/dτ = v(τ, Q) with Q(t_anchor) = q_anchor up to `t_other`, which may
/// lie before the anchor (final-value problem) or after it.
#[allow(clippy::result_large_err)] // the partial solution is the point of the error
pub fn integrate_trajectory(
    field: &dyn VelocityField,
    anchor: (f64, Vec3),
    t_other: f64,
    opts: &OdeOptions,
) -> std::result::Result<Trajectory, TrajectoryError> {
    let direction = if t_other >= anchor.0 { Direction::Forward } else { Direction::Backward };
    let rhs = |t: f64, y: &[f64; 3]| field.velocity(t, &Vec3::from(*y)).map(Into::into);
    match dopri5(rhs, anchor.0, anchor.1.into(), t_other, opts) {
        Ok(sol) => Ok(Trajectory::from_solution(sol, anchor, direction)),
        Err(inc) => Err(TrajectoryError {
            error: inc.error,
            partial: Trajectory::from_solution(inc.partial, anchor, direction),
        }),
    }
}

/// u(t, q) = ∫₀^t R(τ, Q_q(τ)) dτ along the final-value characteristic through (t, q).
pub fn solve_transport(
    field: &dyn VelocityField,
    source: impl Fn(f64, &Vec3) -> f64 + Sync,
    t: f64,
    q: &Vec3,
    opts: &OdeOptions,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain("transport is posed for t ≥ 0".into()));
    }
    // augmented state (Q, U) integrated backward from U(t) = 0
    let rhs = |tau: f64, y: &[f64; 4]| {
        let p = Vec3::new(y[0], y[1], y[2]);
        let v = field.velocity(tau, &p)?;
        Ok([v.x, v.y, v.z, source(tau, &p)])
    };
    let sol = dopri5(rhs, t, [q.x, q.y, q.z, 0.0], 0.0, opts).map_err(|inc| inc.error)?;
    Ok(-sol.last()[3])
}

/// Vector-valued variant: quadrature of a multi-component source along a precomputed characteristic.
pub fn integrate_along<const M: usize>(
    traj: &Trajectory,
    source: impl Fn(f64, &Vec3) -> [f64; M],
    t0: f64,
    t1: f64,
    nodes_per_step: usize,
) -> Result<[f64; M]> {
    let mut breaks: Vec<f64> = traj.tau.iter().copied().filter(|&s| s > t0 && s < t1).collect();
    breaks.insert(0, t0);
    breaks.push(t1);
    let rule = Rule::composite(&breaks, nodes_per_step);
    let mut acc = [0.0; M];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r = source(x, &traj.at(x)?);
        for k in 0..M {
            acc[k] += w * r[k];
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushforwardOptions {
    pub samples: usize,
    pub seed: u64,
    pub ode: OdeTolerance,
    /// Number of transported samples sent back to t = 0 to measure invertibility.
    pub return_check: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeTolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl From<OdeTolerance> for OdeOptions {
    fn from(t: OdeTolerance) -> Self {
        OdeOptions { atol: t.atol, rtol: t.rtol, ..Default::default() }
    }
}

impl Default for PushforwardOptions {
    fn default() -> Self {
        Self { samples: 100_000, seed: 1, ode: OdeTolerance { atol: 1e-9, rtol: 1e-9 }, return_check: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub r: (f64, f64),
    pub cos_theta: (f64, f64),
    pub phi: (f64, f64),
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub t: f64,
    pub samples: usize,
    pub acceptance_rate: f64,
    /// Trajectories lost to node proximity or step limits.
    pub failures: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub max_return_error: f64,
    pub bins: Vec<BinRecord>,
}

/// Draw N points from |Ψ(t)|² by rejection against an exponential-radius envelope.
pub fn sample_density(state: &BoundSuperposition, t: f64, count: usize, rng: &mut impl Rng) -> Result<(Vec<Vec3>, f64)> {
    let n = state.max_n() as f64;
    let lambda = 0.8 * 2.0 / n;
    let proposal = |p: &Vec3| lambda.powi(3) / (8.0 * PI) * (-lambda * p.norm()).exp();
    let rho = |p: &Vec3| state.value(t, p).norm_sqr();
    let mut bound = envelope_bound(&rho, &proposal, n);
    let gamma = Gamma::new(3.0, 1.0 / lambda).map_err(|e| Error::Sampling(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 && (out.len() as f64) < 1e-4 * tries as f64 {
            return Err(Error::Sampling(format!("acceptance rate below 1e-4 after {tries} proposals")));
        }
        let r: f64 = gamma.sample(rng);
        let ct: f64 = rng.random_range(-1.0..1.0);
        let ph: f64 = rng.random_range(0.0..2.0 * PI);
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let p = Vec3::new(r * st * ph.cos(), r * st * ph.sin(), r * ct);
        let ratio = rho(&p) / proposal(&p);
        if ratio > bound {
            // the grid search missed the supremum: restart with a safe bound
            bound = 2.0 * ratio;
            out.clear();
            tries = 0;
            continue;
        }
        if rng.random::<f64>() * bound < ratio {
            out.push(p);
        }
    }
    Ok((out, count as f64 / tries as f64))
}

fn envelope_bound(rho: &impl Fn(&Vec3) -> f64, proposal: &impl Fn(&Vec3) -> f64, n: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=200 {
        let r = 1e-3 + 8.0 * n * n * i as f64 / 200.0;
        for j in 0..=24 {
            let ct = -1.0 + 2.0 * j as f64 / 24.0;
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..16 {
                let ph = 2.0 * PI * k as f64 / 16.0;
                let p = Vec3::new(r * st * ph.cos(), r * st * ph.sin(), r * ct);
                best = best.max(rho(&p) / proposal(&p));
            }
        }
    }
    1.25 * best
}

fn bin_edges(n_max: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 9.0, f64::INFINITY].iter().map(|x| x * n_max).collect();
    let c = (0..=6).map(|i| -1.0 + i as f64 / 3.0).collect();
    let p = (0..=4).map(|i| i as f64 * PI / 2.0).collect();
    (r, c, p)
}

fn bin_probability(state: &BoundSuperposition, t: f64, r: (f64, f64), c: (f64, f64), p: (f64, f64)) -> f64 {
    let rule = |a: f64, b: f64| Rule::uniform_panels(a, b, 1, 8);
    let (rr, cr, pr) = if r.1.is_finite() {
        (rule(r.0, r.1), rule(c.0, c.1), rule(p.0, p.1))
    } else {
        // r = r₀ + x/(1−x), x ∈ [0, 1)
        (rule(0.0, 1.0), rule(c.0, c.1), rule(p.0, p.1))
    };
    let mut acc = 0.0;
    for (&x, &wx) in rr.nodes.iter().zip(&rr.weights) {
        let (rad, jac) = if r.1.is_finite() { (x, 1.0) } else { (r.0 + x / (1.0 - x), 1.0 / (1.0 - x).powi(2)) };
        for (&ct, &wc) in cr.nodes.iter().zip(&cr.weights) {
            let st = (1.0 - ct * ct).sqrt();
            for (&ph, &wp) in pr.nodes.iter().zip(&pr.weights) {
                let q = Vec3::new(rad * st * ph.cos(), rad * st * ph.sin(), rad * ct);
                acc += wx * wc * wp * jac * rad * rad * state.value(t, &q).norm_sqr();
            }
        }
    }
    acc
}

fn bin_index(p: &Vec3, edges: &(Vec<f64>, Vec<f64>, Vec<f64>)) -> usize {
    let r = p.norm();
    let ct = if r > 0.0 { (p.z / r).clamp(-1.0, 1.0) } else { 1.0 };
    let ph = p.y.atan2(p.x).rem_euclid(2.0 * PI);
    let find = |e: &Vec<f64>, x: f64| e.partition_point(|&b| b <= x).clamp(1, e.len() - 1) - 1;
    let (nr, nc, np) = (edges.0.len() - 1, edges.1.len() - 1, edges.2.len() - 1);
    let _ = nr;
    (find(&edges.0, r) * nc + find(&edges.1, ct)) * np + find(&edges.2, ph)
}

/// Equivariance check: transport |Ψ(0)|² samples to time t and compare with |Ψ(t)|².
pub fn pushforward_density(state: &BoundSuperposition, t: f64, opts: &PushforwardOptions) -> Result<PushforwardReport> {
    if !state.is_normalized() {
        return Err(Error::Precondition("state must be normalized".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (initial, acceptance_rate) = sample_density(state, 0.0, opts.samples, &mut rng)?;
    let field = WavefunctionField::new(state);
    let ode: OdeOptions = opts.ode.into();
    let finals: Vec<Option<Vec3>> = initial
        .par_iter()
        .map(|q| integrate_trajectory(&field, (0.0, *q), t, &ode).ok().map(|tr| *tr.q.last().expect("sample")))
        .collect();
    let max_return_error = initial
        .par_iter()
        .zip(finals.par_iter())
        .take(opts.return_check)
        .filter_map(|(q0, qf)| {
            let qf = (*qf)?;
            let back = integrate_trajectory(&field, (t, qf), 0.0, &ode).ok()?;
            Some((back.q[0] - q0).norm())
        })
        .reduce(|| 0.0, f64::max);

    let edges = bin_edges(state.max_n() as f64);
    let (nr, nc, np) = (edges.0.len() - 1, edges.1.len() - 1, edges.2.len() - 1);
    let mut counts = vec![0u64; nr * nc * np];
    let mut failures = 0;
    for qf in &finals {
        match qf {
            Some(p) => counts[bin_index(p, &edges)] += 1,
            None => failures += 1,
        }
    }
    let kept = (finals.len() - failures) as f64;
    let cells: Vec<(usize, usize, usize)> =
        (0..nr).flat_map(|i| (0..nc).flat_map(move |j| (0..np).map(move |k| (i, j, k)))).collect();
    let probs: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j, k)| {
            bin_probability(
                state,
                t,
                (edges.0[i], edges.0[i + 1]),
                (edges.1[j], edges.1[j + 1]),
                (edges.2[k], edges.2[k + 1]),
            )
        })
        .collect();
    let total: f64 = probs.iter().sum();
    let mut bins = Vec::with_capacity(cells.len());
    let (mut chi2, mut used) = (0.0, 0usize);
    // pool sparse cells so every term has expectation ≥ 5
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (idx, &(i, j, k)) in cells.iter().enumerate() {
        let expected = kept * probs[idx] / total;
        let observed = counts[idx];
        bins.push(BinRecord {
            r: (edges.0[i], edges.0[i + 1]),
            cos_theta: (edges.1[j], edges.1[j + 1]),
            phi: (edges.2[k], edges.2[k + 1]),
            observed,
            expected,
        });
        if expected >= 5.0 {
            chi2 += (observed as f64 - expected).powi(2) / expected;
            used += 1;
        } else {
            pool_o += observed as f64;
            pool_e += expected;
        }
    }
    if pool_e > 0.0 {
        chi2 += (pool_o - pool_e).powi(2) / pool_e.max(1e-300);
        used += 1;
    }
    let dof = used.saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::Sampling(e.to_string()))?.cdf(chi2);
    Ok(PushforwardReport {
        t,
        samples: opts.samples,
        acceptance_rate,
        failures,
        chi2,
        dof,
        p_value,
        max_return_error,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydrogen::{Parity, QuantumNumbers};
    use crate::Complex64;
    use proptest::prelude::*;

    fn q(n: u32, l: u32, m: u32, p: Parity) -> QuantumNumbers {
        QuantumNumbers::nlm(n, l, m, p)
    }

    #[test]
    fn eigenstates_are_static() {
        for label in QuantumNumbers::up_to(3).unwrap() {
            let s = BoundSuperposition::eigenstate(label);
            let v = wavefunction_velocity(&s, None, 0.7, &Vec3::new(0.3, -1.1, 0.8), 1e-30).unwrap();
            assert!(v.norm() < 1e-14, "{label}: {v}");
        }
    }

    #[test]
    fn global_phase_and_offset() {
        let mut s = BoundSuperposition::equal(&[q(1, 0, 0, Parity::Plus), q(2, 1, 1, Parity::Plus), q(2, 1, 1, Parity::Minus)]).unwrap();
        let p = Vec3::new(0.4, 0.2, -0.3);
        let v0 = wavefunction_velocity(&s, None, 1.3, &p, 0.0).unwrap();
        let phase = Complex64::from_polar(1.0, 0.9);
        for term in s.terms.iter_mut() {
            term.1 *= phase;
        }
        let v1 = wavefunction_velocity(&s, None, 1.3, &p, 0.0).unwrap();
        assert!((v0 - v1).norm() < 1e-13);
        // 211+ + i 211− carries angular momentum about z
        assert!(v0.norm() > 1e-3);
        let off = |_: f64, _: &Vec3| Vec3::new(1.0, 0.0, 0.0);
        let v2 = wavefunction_velocity(&s, Some(&off), 1.3, &p, 0.0).unwrap();
        assert!((v1 - v2 - Vec3::x()).norm() < 1e-14);
    }

    #[test]
    fn node_floor_is_enforced() {
        let s = BoundSuperposition::eigenstate(q(2, 1, 0, Parity::Plus));
        let err = wavefunction_velocity(&s, None, 0.0, &Vec3::new(1.0, 0.0, 0.0), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NodeProximity { .. }));
    }

    #[test]
    fn rotation_conserves_radius() {
        let w = 1.3;
        let field = FnField::synthetic(move |_, p: &Vec3| Vec3::new(-w * p.y, w * p.x, 0.0));
        let periods = 10.0 * 2.0 * PI / w;
        // global error grows ~40x over the local tolerance across ten periods
        let opts = OdeOptions { atol: 1e-10, rtol: 1e-10, ..Default::default() };
        let tr = integrate_trajectory(&field, (0.0, Vec3::new(2.0, 0.0, 0.5)), periods, &opts).unwrap();
        for p in &tr.q {
            assert!((p.xy().norm() - 2.0).abs() < 1e-8);
        }
        let end = tr.q.last().unwrap();
        assert!((end - Vec3::new(2.0, 0.0, 0.5)).norm() < 1e-7);
        let mid = tr.at(1.0).unwrap();
        assert!((mid - Vec3::new(2.0 * (w).cos(), 2.0 * (w).sin(), 0.5)).norm() < 1e-7);
    }

    #[test]
    fn final_value_anchor_is_exact() {
        let field = FnField::synthetic(|t, p: &Vec3| Vec3::new(p.y, -p.x, t.sin()));
        let anchor = (3.0, Vec3::new(0.1, 0.2, 0.3));
        let tr = integrate_trajectory(&field, anchor, 0.0, &OdeOptions::default()).unwrap();
        assert_eq!(tr.direction, Direction::Backward);
        assert_eq!(*tr.q.last().unwrap(), anchor.1);
        assert!(tr.tau.windows(2).all(|w| w[0] < w[1]));
        // group property
        let mid = tr.at(1.5).unwrap();
        let again = integrate_trajectory(&field, (1.5, mid), 0.0, &OdeOptions::default()).unwrap();
        assert!((again.q[0] - tr.q[0]).norm() < 1e-8);
    }

    #[test]
    fn transport_reductions() {
        let zero = FnField::synthetic(|_, _: &Vec3| Vec3::zeros());
        let u = solve_transport(&zero, |tau, _| tau.cos(), 2.0, &Vec3::new(1.0, 2.0, 3.0), &OdeOptions::default()).unwrap();
        assert!((u - 2f64.sin()).abs() < 1e-9);
        let v0 = Vec3::new(0.3, -0.2, 0.5);
        let adv = FnField::synthetic(move |_, _: &Vec3| v0);
        let f = |p: &Vec3| (-(p.norm_squared())).exp();
        let (t, x) = (1.7, Vec3::new(0.2, 0.1, -0.4));
        let u = solve_transport(&adv, move |tau, p| f(&(p - v0 * tau)), t, &x, &OdeOptions::default()).unwrap();
        assert!((u - t * f(&(x - v0 * t))).abs() < 1e-7);
        let u = solve_transport(&adv, |_, _| 0.0, t, &x, &OdeOptions::default()).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = BoundSuperposition::eigenstate(q(1, 0, 0, Parity::Plus));
        let a = sample_density(&s, 0.0, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_density(&s, 0.0, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.0, b.0);
        let mean_r = a.0.iter().map(|p| p.norm()).sum::<f64>() / 500.0;
        assert!((mean_r - 1.5).abs() < 0.15, "{mean_r}");
    }

    #[test]
    fn static_cloud_passes_chi_square() {
        let s = BoundSuperposition::eigenstate(q(2, 1, 1, Parity::Minus));
        let opts = PushforwardOptions { samples: 4000, seed: 3, ..Default::default() };
        let rep = pushforward_density(&s, 2.0, &opts).unwrap();
        assert_eq!(rep.failures, 0);
        assert!(rep.max_return_error < 1e-12);
        assert!(rep.p_value > 1e-3, "{rep:?}");
        let total: f64 = rep.bins.iter().map(|b| b.expected).sum();
        assert!((total - 4000.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn constant_flow_is_linear(vx in -2.0..2.0f64, vy in -2.0..2.0f64, t1 in -5.0..5.0f64) {
            let v0 = Vec3::new(vx, vy, 0.25);
            let field = FnField::synthetic(move |_, _: &Vec3| v0);
            let q0 = Vec3::new(1.0, -1.0, 0.5);
            let tr = integrate_trajectory(&field, (0.5, q0), t1, &OdeOptions::default()).unwrap();
            for (tau, p) in tr.tau.iter().zip(&tr.q) {
                prop_assert!((p - (q0 + v0 * (tau - 0.5))).norm() < 1e-10);
            }
        }
    }
}
