//! Numerical audits of the ρ-averaged ♯-field energy–momentum balance, the Jensen
//! gap between expected field energy and the energy of expected fields, and the
//! commutator ⟨(1/i)[H_hyd, H_int + H_rad]⟩.
//!
//! Averages ⟨f⟩ = ∫ρ f d³q and ball averages {[F]}_a(q) = ∫F(s; q)δ^(a)_q(s) d³s are
//! taken on a [`SpatialGrid`]. Single-electron contexts only.

use crate::electrostatics::{ball_field, pair_interaction, BallCharge};
use crate::hydrogen::BoundSuperposition;
use crate::perturbation::SpatialGrid;
use crate::quadrature::gauss_legendre;
use crate::{Complex64, Error, Result, Vec3, C_LIGHT};
use nalgebra::Vector6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Elementary charge; the electron carries −e.
pub const E_CHARGE: f64 = 1.0;

/// ρ(t, q) and J = ρv.
pub trait DensityModel: Sync {
    fn density_current(&self, t: f64, q: &Vec3) -> (f64, Vec3);
}

impl DensityModel for BoundSuperposition {
    fn density_current(&self, t: f64, q: &Vec3) -> (f64, Vec3) {
        BoundSuperposition::density_current(self, t, q)
    }
}

/// Normalized Gaussian density drifting rigidly with velocity `drift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftingGaussian {
    pub center: [f64; 3],
    pub drift: [f64; 3],
    pub spread: f64,
}

impl DensityModel for DriftingGaussian {
    fn density_current(&self, t: f64, q: &Vec3) -> (f64, Vec3) {
        let v = Vec3::from(self.drift);
        let mu = Vec3::from(self.center) + v * t;
        let s2 = self.spread * self.spread;
        let rho = (2.0 * PI * s2).powf(-1.5) * (-(q - mu).norm_squared() / (2.0 * s2)).exp();
        (rho, v * rho)
    }
}

/// ♯-fields E♯(t, s; q), B♯(t, s; q) together with their s-integrals.
pub trait SharpFieldModel: Sync {
    fn fields(&self, t: f64, s: &Vec3, q: &Vec3) -> (Vec3, Vec3);

    /// (1/8π)∫(E_q·E_q' + B_q·B_q') d³s.
    fn overlap_energy(&self, t: f64, q: &Vec3, q2: &Vec3) -> f64;

    /// E♯(t; q).
    fn energy(&self, t: f64, q: &Vec3) -> f64 {
        self.overlap_energy(t, q, q)
    }

    /// P♯(t; q) = (1/4πc)∫E×B d³s.
    fn momentum(&self, t: f64, q: &Vec3) -> Vec3;

    /// ({[E♯]}_a, {[B♯]}_a) at the generic position q.
    fn ball_fields(&self, t: f64, q: &Vec3, a: f64) -> (Vec3, Vec3) {
        let mut v = Vector6::zeros();
        for (off, w) in ball_rule(a) {
            let (e, b) = self.fields(t, &(q + off), q);
            v += Vector6::new(e.x, e.y, e.z, b.x, b.y, b.z) * w;
        }
        (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }
}

/// Product rule for the uniform ball of radius a: 6 Gauss–Legendre radii,
/// 8 in cos θ and 16 azimuths (exact for polynomials of degree 11).
pub fn ball_rule(a: f64) -> Vec<(Vec3, f64)> {
    let (xr, wr) = gauss_legendre(6);
    let (xc, wc) = gauss_legendre(8);
    let nphi = 16;
    let mut out = Vec::with_capacity(6 * 8 * nphi);
    for (x, w1) in xr.iter().zip(&wr) {
        let r = 0.5 * a * (x + 1.0);
        let radial = 1.5 * w1 * r * r / (a * a);
        for (c, w2) in xc.iter().zip(&wc) {
            let st = (1.0 - c * c).sqrt();
            for k in 0..nphi {
                let ph = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                out.push((Vec3::new(r * st * ph.cos(), r * st * ph.sin(), r * c), radial * 0.5 * w2 / nphi as f64));
            }
        }
    }
    out
}

/// Electrostatic ♯-field of a nucleus (charge Z at the origin) and an electron ball at q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombSharp {
    pub z: f64,
    pub radius: f64,
}

impl CoulombSharp {
    fn nucleus(&self) -> BallCharge {
        BallCharge { center: [0.0; 3], radius: self.radius, charge: self.z }
    }
    fn electron(&self, q: &Vec3) -> BallCharge {
        BallCharge { center: (*q).into(), radius: self.radius, charge: -1.0 }
    }
}

impl SharpFieldModel for CoulombSharp {
    fn fields(&self, _t: f64, s: &Vec3, q: &Vec3) -> (Vec3, Vec3) {
        (ball_field(&self.nucleus(), s) + ball_field(&self.electron(q), s), Vec3::zeros())
    }

    fn overlap_energy(&self, _t: f64, q: &Vec3, q2: &Vec3) -> f64 {
        let n = self.nucleus();
        let pair = |a: &BallCharge, b: &BallCharge| pair_interaction(a, b).expect("equal radii");
        n.self_energy()
            + 0.5 * (pair(&n, &self.electron(q)) + pair(&n, &self.electron(q2)) + pair(&self.electron(q), &self.electron(q2)))
    }

    fn momentum(&self, _t: f64, _q: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// q-independent field with caller-supplied energy and momentum functionals
/// (for example integrals over a finite box for plane waves).
pub struct FreeField<F, En, Mo> {
    pub fields: F,
    pub energy: En,
    pub momentum: Mo,
}

impl<F, En, Mo> SharpFieldModel for FreeField<F, En, Mo>
where
    F: Fn(f64, &Vec3) -> (Vec3, Vec3) + Sync,
    En: Fn(f64) -> f64 + Sync,
    Mo: Fn(f64) -> Vec3 + Sync,
{
    fn fields(&self, t: f64, s: &Vec3, _q: &Vec3) -> (Vec3, Vec3) {
        (self.fields)(t, s)
    }
    fn overlap_energy(&self, t: f64, _q: &Vec3, _q2: &Vec3) -> f64 {
        (self.energy)(t)
    }
    fn momentum(&self, t: f64, _q: &Vec3) -> Vec3 {
        (self.momentum)(t)
    }
}

/// Separable synthetic field E = f(t)g(s)h(q)x̂, B = f_B(t)g(s)h(q)ŷ with
/// g(s) = exp(−|s|²/2) and h(q) = exp(−|q|²/(2ℓ²)).
pub struct SeparableField<F, FB> {
    pub f: F,
    pub f_b: FB,
    pub length: f64,
}

impl<F, FB> SeparableField<F, FB> {
    // ∫g² d³s = π^{3/2}
    const G2: f64 = 5.568_327_996_831_708;

    fn h(&self, q: &Vec3) -> f64 {
        (-q.norm_squared() / (2.0 * self.length * self.length)).exp()
    }
}

impl<F, FB> SharpFieldModel for SeparableField<F, FB>
where
    F: Fn(f64) -> f64 + Sync,
    FB: Fn(f64) -> f64 + Sync,
{
    fn fields(&self, t: f64, s: &Vec3, q: &Vec3) -> (Vec3, Vec3) {
        let gh = (-0.5 * s.norm_squared()).exp() * self.h(q);
        (Vec3::new((self.f)(t) * gh, 0.0, 0.0), Vec3::new(0.0, (self.f_b)(t) * gh, 0.0))
    }
    fn overlap_energy(&self, t: f64, q: &Vec3, q2: &Vec3) -> f64 {
        let (f, fb) = ((self.f)(t), (self.f_b)(t));
        (f * f + fb * fb) * self.h(q) * self.h(q2) * Self::G2 / (8.0 * PI)
    }
    fn momentum(&self, t: f64, q: &Vec3) -> Vec3 {
        Vec3::new(0.0, 0.0, (self.f)(t) * (self.f_b)(t) * self.h(q).powi(2) * Self::G2 / (4.0 * PI * C_LIGHT))
    }
}

/// Density, fields, q-grid and charge radius for the averages.
pub struct ExpectationContext<'a> {
    pub density: &'a dyn DensityModel,
    pub field: &'a dyn SharpFieldModel,
    pub grid: SpatialGrid,
    pub radius: f64,
}

impl<'a> ExpectationContext<'a> {
    /// Checks ∫ρ over the grid at time `t_check` lies in [0.999, 1] up to quadrature overshoot of 1e-4.
    pub fn new(density: &'a dyn DensityModel, field: &'a dyn SharpFieldModel, grid: SpatialGrid, radius: f64, t_check: f64) -> Result<Self> {
        let ctx = Self { density, field, grid, radius };
        let mass = ctx.mass(t_check);
        if !(0.999..=1.0 + 1e-4).contains(&mass) {
            return Err(Error::Precondition(format!("∫ρ over the q-grid is {mass}, outside [0.999, 1.0001]")));
        }
        Ok(ctx)
    }

    /// Default grid: radial panels to 40 a.u. scaled to the state's extent.
    pub fn default_grid(n_max: u32) -> SpatialGrid {
        let scale = (n_max as f64).powi(2).max(1.0);
        let mut breaks: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|r| r * scale).filter(|r| *r < 40.0).collect();
        breaks.push(40.0);
        SpatialGrid::product(&breaks, 8, 12, 24)
    }

    pub fn mass(&self, t: f64) -> f64 {
        self.grid.points.par_iter().zip(&self.grid.weights).map(|(q, w)| w * self.density.density_current(t, q).0).sum()
    }

    /// ⟨f⟩ = Σ w ρ f.
    fn average<V>(&self, t: f64, f: impl Fn(&Vec3, f64, &Vec3) -> V + Sync) -> V
    where
        V: Send + std::iter::Sum<V>,
    {
        self.grid
            .points
            .par_iter()
            .zip(&self.grid.weights)
            .map(|(q, &w)| {
                let (rho, j) = self.density.density_current(t, q);
                f(q, w * rho, &(j * w))
            })
            .sum()
    }

    fn check_radius(&self) -> Result<()> {
        if self.radius == 0.0 {
            return Err(Error::Unsupported("the a → 0 limit of the ball average is not well defined".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Domain(format!("ball radius {}", self.radius)));
        }
        Ok(())
    }
}

/// Fourth-order central difference.
fn d4<V>(f: impl Fn(f64) -> V, t: f64, dt: f64) -> V
where
    V: std::ops::Sub<Output = V> + std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V>,
{
    (f(t - 2.0 * dt) - f(t + 2.0 * dt) + (f(t + dt) - f(t - dt)) * 8.0) * (1.0 / (12.0 * dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// d⟨E♯⟩/dt
    pub lhs: f64,
    /// e⟨{[E♯]}_a·v⟩
    pub rhs: f64,
    pub residual: f64,
}

pub fn energy_identity_residual(ctx: &ExpectationContext<'_>, t: f64, dt: f64) -> Result<EnergyIdentity> {
    ctx.check_radius()?;
    let lhs = d4(|s| ctx.average(s, |q, wr, _| wr * ctx.field.energy(s, q)), t, dt);
    let rhs = E_CHARGE
        * ctx.average(t, |q, _, wj| {
            if *wj == Vec3::zeros() {
                return 0.0;
            }
            ctx.field.ball_fields(t, q, ctx.radius).0.dot(wj)
        });
    Ok(EnergyIdentity { lhs, rhs, residual: (lhs - rhs).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumIdentities {
    /// d⟨P♯⟩/dt
    pub lhs: Vec3,
    /// e(⟨{[E♯]}_a⟩ + ⟨v×{[B♯]}_a⟩/c)
    pub rhs: Vec3,
    pub residual: f64,
    /// d⟨½|P♯|²⟩/dt
    pub lhs_square: f64,
    /// e(⟨P♯·{[E♯]}_a⟩ + ⟨P♯·(v×{[B♯]}_a)⟩/c)
    pub rhs_square: f64,
    pub residual_square: f64,
}

pub fn momentum_identity_residuals(ctx: &ExpectationContext<'_>, t: f64, dt: f64) -> Result<MomentumIdentities> {
    ctx.check_radius()?;
    let lhs = d4(|s| ctx.average(s, |q, wr, _| ctx.field.momentum(s, q) * wr), t, dt);
    let lhs_square = d4(|s| ctx.average(s, |q, wr, _| 0.5 * wr * ctx.field.momentum(s, q).norm_squared()), t, dt);
    let (rhs, rhs_square) = ctx.average(t, |q, wr, wj| {
        let (e, b) = ctx.field.ball_fields(t, q, ctx.radius);
        let force = e * wr + wj.cross(&b) / C_LIGHT;
        let p = ctx.field.momentum(t, q);
        Pair(force * E_CHARGE, E_CHARGE * p.dot(&force))
    })
    .into();
    Ok(MomentumIdentities {
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
        lhs_square,
        rhs_square,
        residual_square: (lhs_square - rhs_square).abs(),
    })
}

// summable (vector, scalar) pair
struct Pair(Vec3, f64);

impl std::iter::Sum for Pair {
    fn sum<I: Iterator<Item = Pair>>(iter: I) -> Self {
        iter.fold(Pair(Vec3::zeros(), 0.0), |a, b| Pair(a.0 + b.0, a.1 + b.1))
    }
}

impl From<Pair> for (Vec3, f64) {
    fn from(p: Pair) -> Self {
        (p.0, p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenGap {
    /// ⟨E♯⟩
    pub expected_energy: f64,
    /// (1/8π)∫(|⟨E♯⟩|² + |⟨B♯⟩|²)
    pub energy_of_expected: f64,
    pub gap: f64,
}

/// Uses the overlap form: the energy of the averaged field is ⟨⟨overlap(q, q')⟩⟩.
/// Weights are normalized to unit mass so that q-independent fields give a zero gap.
pub fn jensen_gap(ctx: &ExpectationContext<'_>, t: f64) -> JensenGap {
    let weighted: Vec<(Vec3, f64)> = ctx
        .grid
        .points
        .iter()
        .zip(&ctx.grid.weights)
        .map(|(q, w)| (*q, w * ctx.density.density_current(t, q).0))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let mass: f64 = weighted.iter().map(|(_, w)| w).sum();
    let expected_energy = weighted.par_iter().map(|(q, w)| w * ctx.field.energy(t, q)).sum::<f64>() / mass;
    let energy_of_expected = weighted
        .par_iter()
        .map(|(q, w)| w * weighted.iter().map(|(q2, w2)| w2 * ctx.field.overlap_energy(t, q, q2)).sum::<f64>())
        .sum::<f64>()
        / (mass * mass);
    JensenGap { expected_energy, energy_of_expected, gap: expected_energy - energy_of_expected }
}

pub type VectorPotentialFn = dyn Fn(f64, &Vec3) -> Vec3 + Sync;
pub type ScalarFieldFn = dyn Fn(f64, &Vec3) -> f64 + Sync;

/// H_int = (1/2c)(p·A + A·p) + |A|²/2c² for a divergence-free A, and H_rad as a
/// multiplication operator.
#[derive(Default, Clone, Copy)]
pub struct Interaction<'a> {
    pub vector_potential: Option<&'a VectorPotentialFn>,
    pub radiation_energy: Option<&'a ScalarFieldFn>,
}

/// ⟨(1/i)[H_hyd, V]⟩ = 2 Im⟨H_hydΨ|VΨ⟩ on the atomic grid, with Ψ evolved freely to t.
pub fn commutator_diagnostic(state: &BoundSuperposition, inter: &Interaction<'_>, t: f64, grid: &SpatialGrid) -> Result<f64> {
    if state.max_n() > 3 {
        return Err(Error::Precondition("commutator diagnostic supports states with n ≤ 3".into()));
    }
    if inter.vector_potential.is_none() && inter.radiation_energy.is_none() {
        return Ok(0.0);
    }
    let cs = state.coefficients_at(t);
    let i = Complex64::new(0.0, 1.0);
    let a: Complex64 = grid
        .points
        .par_iter()
        .zip(&grid.weights)
        .map(|(q, &w)| {
            let mut h_psi = Complex64::new(0.0, 0.0);
            for ((qn, _), c) in state.terms.iter().zip(&cs) {
                h_psi += c * (qn.energy() * crate::hydrogen::real_eigenfunction(qn, [q.x, q.y, q.z]));
            }
            let (psi, grad) = state.value_gradient(t, q);
            let mut v_psi = Complex64::new(0.0, 0.0);
            if let Some(a) = inter.vector_potential {
                let av = a(t, q);
                let a_grad = grad[0] * av.x + grad[1] * av.y + grad[2] * av.z;
                v_psi += -i * a_grad / C_LIGHT + psi * (av.norm_squared() / (2.0 * C_LIGHT * C_LIGHT));
            }
            if let Some(e) = inter.radiation_energy {
                v_psi += psi * e(t, q);
            }
            h_psi.conj() * v_psi * w
        })
        .sum();
    Ok(2.0 * a.im)
}

pub fn commutator_series(state: &BoundSuperposition, inter: &Interaction<'_>, times: &[f64], grid: &SpatialGrid) -> Result<Vec<(f64, f64)>> {
    times.iter().map(|&t| Ok((t, commutator_diagnostic(state, inter, t, grid)?))).collect()
}

/// Combined JSON-ready audit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub energy: EnergyIdentity,
    pub momentum: MomentumIdentities,
    pub jensen: JensenGap,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydrogen::{Parity, QuantumNumbers};
    use crate::acceptance::{gaussian_overlap, nested_ball_average};
    use proptest::prelude::*;

    fn s1() -> QuantumNumbers {
        QuantumNumbers::nlm(1, 0, 0, Parity::Plus)
    }

    fn coarse_grid() -> SpatialGrid {
        SpatialGrid::product(&[0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0], 4, 6, 12)
    }

    fn gaussian() -> DriftingGaussian {
        DriftingGaussian { center: [0.3, -0.2, 0.1], drift: [0.4, 0.1, -0.2], spread: 1.0 }
    }

    #[test]
    fn static_coulomb_eigenstate_balances() {
        let state = BoundSuperposition::eigenstate(s1());
        let field = CoulombSharp { z: 1.0, radius: 0.5 };
        let ctx = ExpectationContext::new(&state, &field, ExpectationContext::default_grid(1), 0.5, 0.0).unwrap();
        let e = energy_identity_residual(&ctx, 0.0, 1e-3).unwrap();
        assert!(e.residual < 1e-8, "{e:?}");
        let m = momentum_identity_residuals(&ctx, 0.0, 1e-3).unwrap();
        assert!(m.residual < 1e-8 && m.residual_square < 1e-8, "{m:?}");
    }

    #[test]
    fn point_limit_is_unsupported() {
        let state = BoundSuperposition::eigenstate(s1());
        let field = CoulombSharp { z: 1.0, radius: 0.5 };
        let ctx = ExpectationContext::new(&state, &field, ExpectationContext::default_grid(1), 0.0, 0.0).unwrap();
        assert!(matches!(energy_identity_residual(&ctx, 0.0, 1e-3), Err(Error::Unsupported(_))));
        assert!(matches!(momentum_identity_residuals(&ctx, 0.0, 1e-3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn grid_mass_checked() {
        let state = BoundSuperposition::eigenstate(QuantumNumbers::nlm(3, 0, 0, Parity::Plus));
        let field = CoulombSharp { z: 1.0, radius: 0.5 };
        let tiny = SpatialGrid::product(&[0.0, 1.0, 2.0], 4, 4, 8);
        assert!(matches!(ExpectationContext::new(&state, &field, tiny, 0.5, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn separable_field_sides_match_oracles() {
        let g = gaussian();
        let field = SeparableField { f: |t: f64| 1.0 + 0.5 * t.sin(), f_b: |t: f64| 0.7 * (2.0 * t).cos(), length: 2.0 };
        let ctx = ExpectationContext::new(&g, &field, ExpectationContext::default_grid(1), 0.4, 0.3).unwrap();
        let t: f64 = 0.3;
        let (f, df) = (1.0 + 0.5 * t.sin(), 0.5 * t.cos());
        let (fb, dfb) = (0.7 * (2.0 * t).cos(), -1.4 * (2.0 * t).sin());
        let g2 = PI.powf(1.5);
        // h² = exp(−|q|²/ℓ²), h⁴ = exp(−2|q|²/ℓ²)
        let (k, dk) = gaussian_overlap(&g, 2.0, t);
        let (k4, dk4) = gaussian_overlap(&g, 1.0, t);

        let e = energy_identity_residual(&ctx, t, 1e-3).unwrap();
        let lhs = g2 / (8.0 * PI) * (2.0 * (f * df + fb * dfb) * k + (f * f + fb * fb) * dk);
        let rhs = nested_ball_average(&field, &g, t, 0.4, |e, _, _, j| Vec3::new(e.dot(&j), 0.0, 0.0)).x;
        assert!((e.lhs - lhs).abs() < 1e-5, "{} vs {lhs}", e.lhs);
        assert!((e.rhs - rhs).abs() < 1e-5, "{} vs {rhs}", e.rhs);

        let m = momentum_identity_residuals(&ctx, t, 1e-3).unwrap();
        let pz = g2 / (4.0 * PI * C_LIGHT);
        let lhs = Vec3::new(0.0, 0.0, pz * ((df * fb + f * dfb) * k + f * fb * dk));
        let rhs = nested_ball_average(&field, &g, t, 0.4, |e, b, rho, j| e * rho + j.cross(&b) / C_LIGHT);
        assert!((m.lhs - lhs).norm() < 1e-5, "{:?} vs {lhs:?}", m.lhs);
        assert!((m.rhs - rhs).norm() < 1e-5, "{:?} vs {rhs:?}", m.rhs);
        let p2 = 0.5 * pz * pz;
        let lhs_sq = p2 * (2.0 * f * fb * (df * fb + f * dfb) * k4 + (f * fb).powi(2) * dk4);
        assert!((m.lhs_square - lhs_sq).abs() < 1e-5);
    }

    #[test]
    fn derivative_error_shrinks_with_dt() {
        let g = gaussian();
        let field = SeparableField { f: |t: f64| 1.0 + 0.5 * (3.0 * t).sin(), f_b: |_| 0.0, length: 2.0 };
        let ctx = ExpectationContext::new(&g, &field, ExpectationContext::default_grid(1), 0.4, 0.0).unwrap();
        let t: f64 = 0.2;
        let (k, dk) = gaussian_overlap(&g, 2.0, t);
        let f = 1.0 + 0.5 * (3.0 * t).sin();
        let exact = PI.powf(1.5) / (8.0 * PI) * (2.0 * f * 1.5 * (3.0 * t).cos() * k + f * f * dk);
        let errs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&dt| (energy_identity_residual(&ctx, t, dt).unwrap().lhs - exact).abs()).collect();
        assert!(errs[1] <= 0.5 * errs[0] && errs[2] <= 0.5 * errs[1], "{errs:?}");
    }

    #[test]
    fn plane_wave_energy_balances_over_a_period() {
        // linearly polarized wave with k = 1, energy and momentum counted in the unit cube
        let omega = C_LIGHT;
        let box_energy = move |t: f64| (0.5 + ((2.0 * (1.0 - omega * t)).sin() + (2.0 * omega * t).sin()) / 4.0) / (4.0 * PI);
        let field = FreeField {
            fields: move |t: f64, s: &Vec3| {
                let c = (s.z - omega * t).cos();
                (Vec3::new(c, 0.0, 0.0), Vec3::new(0.0, c, 0.0))
            },
            energy: box_energy,
            momentum: move |t: f64| Vec3::new(0.0, 0.0, box_energy(t) / C_LIGHT),
        };
        let state = BoundSuperposition::eigenstate(s1());
        let ctx = ExpectationContext::new(&state, &field, ExpectationContext::default_grid(1), 0.5, 0.0).unwrap();
        let period = 2.0 * PI / omega;
        let n = 32;
        let mut mean = 0.0;
        for i in 0..n {
            let e = energy_identity_residual(&ctx, period * i as f64 / n as f64, period * 1e-3).unwrap();
            assert!(e.rhs.abs() < 1e-15);
            mean += e.lhs / n as f64;
        }
        assert!(mean.abs() < 1e-5, "{mean}");
    }

    #[test]
    fn square_identity_follows_chain_rule() {
        let field = FreeField {
            fields: |_: f64, _: &Vec3| (Vec3::zeros(), Vec3::zeros()),
            energy: |_: f64| 0.0,
            momentum: |t: f64| Vec3::new(t.sin(), (2.0 * t).cos(), 0.3),
        };
        let state = BoundSuperposition::eigenstate(s1());
        let ctx = ExpectationContext::new(&state, &field, ExpectationContext::default_grid(1), 0.5, 0.0).unwrap();
        let t: f64 = 0.7;
        let m = momentum_identity_residuals(&ctx, t, 1e-3).unwrap();
        let p = Vec3::new(t.sin(), (2.0 * t).cos(), 0.3);
        assert!((m.lhs_square - p.dot(&m.lhs)).abs() < 1e-5);
    }

    #[test]
    fn jensen_gap_cases() {
        let state = BoundSuperposition::eigenstate(s1());
        let free = FreeField { fields: |_: f64, _: &Vec3| (Vec3::zeros(), Vec3::zeros()), energy: |t: f64| 2.0 + t, momentum: |_: f64| Vec3::zeros() };
        let ctx = ExpectationContext::new(&state, &free, coarse_grid(), 0.5, 0.0).unwrap();
        assert!(jensen_gap(&ctx, 0.4).gap.abs() < 1e-12);
        let coulomb = CoulombSharp { z: 1.0, radius: 0.5 };
        let ctx = ExpectationContext::new(&state, &coulomb, coarse_grid(), 0.5, 0.0).unwrap();
        let j = jensen_gap(&ctx, 0.0);
        assert!(j.gap > 0.1, "{j:?}");
    }

    #[test]
    fn jensen_gap_grows_with_spread() {
        let coulomb = CoulombSharp { z: 1.0, radius: 0.5 };
        let mut last = -1.0;
        for s in [0.4, 0.6, 0.9, 1.3, 1.8] {
            let g = DriftingGaussian { center: [0.0; 3], drift: [0.0; 3], spread: s };
            let ctx = ExpectationContext::new(&g, &coulomb, coarse_grid(), 0.5, 0.0).unwrap();
            let gap = jensen_gap(&ctx, 0.0).gap;
            assert!(gap > last, "spread {s}: {gap} after {last}");
            last = gap;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn jensen_gap_non_negative(cx in -1.0f64..1.0, cz in -1.0f64..1.0, s in 0.5f64..1.5, a in 0.2f64..1.0) {
            let g = DriftingGaussian { center: [cx, 0.0, cz], drift: [0.0; 3], spread: s };
            let coulomb = CoulombSharp { z: 1.0, radius: a };
            let grid = SpatialGrid::product(&[0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0], 4, 8, 16);
            let ctx = ExpectationContext::new(&g, &coulomb, grid, a, 0.0).unwrap();
            prop_assert!(jensen_gap(&ctx, 0.0).gap >= -1e-10);
        }
    }

    fn superposition() -> BoundSuperposition {
        BoundSuperposition::new(vec![
            (s1(), Complex64::new(1.0, 0.0)),
            (QuantumNumbers::nlm(2, 1, 1, Parity::Plus), Complex64::new(0.6, 0.3)),
            (QuantumNumbers::nlm(3, 2, 1, Parity::Minus), Complex64::new(0.0, 0.5)),
        ])
        .unwrap()
    }

    #[test]
    fn commutator_trivial_cases() {
        let grid = SpatialGrid::atomic(1);
        let state = superposition();
        assert_eq!(commutator_diagnostic(&state, &Interaction::default(), 0.3, &grid).unwrap(), 0.0);
        let constant = |_: f64, _: &Vec3| 5.0;
        let inter = Interaction { vector_potential: None, radiation_energy: Some(&constant) };
        assert!(commutator_diagnostic(&state, &inter, 0.3, &grid).unwrap().abs() < 1e-10);
        let too_high = BoundSuperposition::eigenstate(QuantumNumbers::nlm(4, 0, 0, Parity::Plus));
        assert!(commutator_diagnostic(&too_high, &inter, 0.0, &grid).is_err());
    }

    // d⟨H_hyd⟩/dt by finite differences of a basis evolution i c' = (E + V(t)) c
    fn ehrenfest_oracle(state: &BoundSuperposition, a_of_t: &dyn Fn(f64) -> Vec3, t0: f64, grid: &SpatialGrid) -> f64 {
        let basis = QuantumNumbers::up_to(3).unwrap();
        let n = basis.len();
        // D[k][m][n] = ⟨m|∂_k|n⟩
        let mut d = vec![vec![vec![0.0; n]; n]; 3];
        for (p, w) in grid.points.iter().zip(&grid.weights) {
            let vals: Vec<(f64, Vec3)> = basis.iter().map(|q| crate::hydrogen::eigenfunction_with_gradient(q, p)).collect();
            for m in 0..n {
                for k in 0..n {
                    for (c, dc) in d.iter_mut().enumerate() {
                        dc[m][k] += w * vals[m].0 * vals[k].1[c];
                    }
                }
            }
        }
        let energies: Vec<f64> = basis.iter().map(|q| q.energy()).collect();
        let mut c0 = vec![Complex64::new(0.0, 0.0); n];
        for ((q, _), c) in state.terms.iter().zip(state.coefficients_at(t0)) {
            c0[basis.iter().position(|b| b == q).unwrap()] = c;
        }
        let i = Complex64::new(0.0, 1.0);
        let rhs = |t: f64, c: &[Complex64]| -> Vec<Complex64> {
            let a = a_of_t(t);
            (0..n)
                .map(|m| {
                    let mut s = c[m] * (energies[m] + a.norm_squared() / (2.0 * C_LIGHT * C_LIGHT));
                    for k in 0..n {
                        let grad = a.x * d[0][m][k] + a.y * d[1][m][k] + a.z * d[2][m][k];
                        s += -i * grad / C_LIGHT * c[k];
                    }
                    -i * s
                })
                .collect()
        };
        let evolve = |t1: f64| -> f64 {
            let steps = 200;
            let h = (t1 - t0) / steps as f64;
            let mut c = c0.clone();
            let mut t = t0;
            let axpy = |c: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> { c.iter().zip(k).map(|(a, b)| a + b * s).collect() };
            for _ in 0..steps {
                let k1 = rhs(t, &c);
                let k2 = rhs(t + h / 2.0, &axpy(&c, &k1, h / 2.0));
                let k3 = rhs(t + h / 2.0, &axpy(&c, &k2, h / 2.0));
                let k4 = rhs(t + h, &axpy(&c, &k3, h));
                for j in 0..n {
                    c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
                }
                t += h;
            }
            c.iter().zip(&energies).map(|(c, e)| c.norm_sqr() * e).sum()
        };
        let h = 1e-2;
        (evolve(t0 - 2.0 * h) - evolve(t0 + 2.0 * h) + 8.0 * (evolve(t0 + h) - evolve(t0 - h))) / (12.0 * h)
    }

    #[test]
    fn commutator_matches_ehrenfest_oracle() {
        let grid = SpatialGrid::atomic(1);
        let a_of_t = |t: f64| Vec3::new(0.5 * C_LIGHT * (0.3 * t).cos(), 0.2 * C_LIGHT * (0.3 * t).sin(), 0.1 * C_LIGHT);
        let a_field = move |t: f64, _: &Vec3| a_of_t(t);
        let inter = Interaction { vector_potential: Some(&a_field), radiation_energy: None };
        let t0 = 0.4;
        let eigen = BoundSuperposition::eigenstate(QuantumNumbers::nlm(2, 1, 0, Parity::Plus));
        for state in [eigen, superposition()] {
            let value = commutator_diagnostic(&state, &inter, t0, &grid).unwrap();
            let oracle = ehrenfest_oracle(&state, &a_of_t, t0, &grid);
            assert!((value - oracle).abs() < 1e-5, "{value} vs {oracle}");
        }
    }
}
