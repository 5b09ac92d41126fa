//! Weber fields Ψ = E♯ + iB♯ as photon guiding fields.
//!
//! With Ψ = E + iB the Maxwell–Lorentz equations read
//! `i(∂_t + v·∇_el)Ψ − c∇×Ψ = −4πi j` and `∇·Ψ = 4πρ`, where for electrons
//! of charge −1 the current is `j = −Σ v_n δ^(a)_{q_n}`.

use crate::bohm::VelocityField;
use crate::electrostatics::{ball_field, BallCharge, ChargeConfiguration, Nucleus};
use crate::ode::{dopri5, OdeOptions};
use crate::quadrature::whole_space_integral;
use crate::radiation::{apot_position, Path, SourceContext};
use crate::{CVec3, Complex64, Error, Result, Vec3, C_LIGHT};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_NODE_FLOOR: f64 = 1e-24;

pub fn to_weber(e: &Vec3, b: &Vec3) -> CVec3 {
    CVec3::new(Complex64::new(e.x, b.x), Complex64::new(e.y, b.y), Complex64::new(e.z, b.z))
}

/// (E, B) = (Re Ψ, Im Ψ).
pub fn from_weber(psi: &CVec3) -> (Vec3, Vec3) {
    (psi.map(|z| z.re), psi.map(|z| z.im))
}

/// v = c·Im(ψ*×ψ)/(ψ*·ψ), which equals 2cE×B/(E² + B²).
pub fn photon_velocity(psi: &CVec3, node_floor: f64) -> Result<Vec3> {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if !(norm2 > node_floor) {
        return Err(Error::NodeProximity { t: f64::NAN, q: [f64::NAN; 3], rho: norm2 });
    }
    let conj = psi.map(|z| z.conj());
    let cross = conj.cross(psi);
    Ok(cross.map(|z| z.im) * (C_LIGHT / norm2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeberSource {
    Radiation,
    PlaneWave,
    Coulomb,
    Synthetic,
}

type Evaluator<'a> = dyn Fn(f64, &Vec3, &[Vec3]) -> Result<CVec3> + Send + Sync + 'a;

/// Ψ(t, q_ph; q_el) with a tag recording where it came from.
pub struct WeberField<'a> {
    eval: Box<Evaluator<'a>>,
    pub source: WeberSource,
    /// Centres and radius of the static charges, used to place quadrature kinks.
    kinks: Option<(Vec<Vec3>, f64)>,
}

impl std::fmt::Debug for WeberField<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeberField").field("source", &self.source).finish_non_exhaustive()
    }
}

/// Monochromatic plane wave with wave vector along `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
    pub omega: f64,
    #[serde(default)]
    pub circular: bool,
}

impl PlaneWave {
    fn frame(&self) -> Result<(Vec3, Vec3, Vec3)> {
        let k = Vec3::from(self.direction);
        let e = Vec3::from(self.polarization);
        if k.norm() == 0.0 || e.norm() == 0.0 || k.normalize().dot(&e.normalize()).abs() > 1e-12 {
            return Err(Error::Domain("plane wave needs a nonzero polarization orthogonal to the direction".into()));
        }
        let (k, e1) = (k.normalize(), e.normalize());
        Ok((k, e1, k.cross(&e1)))
    }

    pub fn fields(&self, t: f64, q: &Vec3) -> Result<(Vec3, Vec3)> {
        let (k, e1, e2) = self.frame()?;
        let phase = self.omega * (k.dot(q) / C_LIGHT - t);
        let mut e = e1 * phase.cos();
        if self.circular {
            e += e2 * phase.sin();
        }
        let e = e * self.amplitude;
        Ok((e, k.cross(&e)))
    }
}

fn point_or_ball_field(center: &Vec3, radius: f64, charge: f64, s: &Vec3) -> Vec3 {
    if radius > 0.0 {
        ball_field(&BallCharge { center: (*center).into(), radius, charge }, s)
    } else {
        let d = s - center;
        d * (charge / d.norm().powi(3))
    }
}

impl<'a> WeberField<'a> {
    pub fn new(source: WeberSource, f: impl Fn(f64, &Vec3, &[Vec3]) -> Result<CVec3> + Send + Sync + 'a) -> Self {
        Self { eval: Box::new(f), source, kinks: None }
    }

    pub fn synthetic(f: impl Fn(f64, &Vec3, &[Vec3]) -> Result<CVec3> + Send + Sync + 'a) -> Self {
        Self::new(WeberSource::Synthetic, f)
    }

    pub fn plane_wave(wave: PlaneWave) -> Result<Self> {
        wave.frame()?;
        Ok(Self::new(WeberSource::PlaneWave, move |t, q, _| {
            let (e, b) = wave.fields(t, q)?;
            Ok(to_weber(&e, &b))
        }))
    }

    /// Electrostatic field of the nuclei and of electrons (charge −1) at the generic positions q_el.
    pub fn coulomb(nuclei: Vec<Nucleus>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain("charge radius must be positive".into()));
        }
        let centers: Vec<Vec3> = nuclei.iter().map(|n| Vec3::from(n.position)).collect();
        let mut field = Self::new(WeberSource::Coulomb, move |_, q, q_el| {
            let mut e: Vec3 = nuclei.iter().map(|n| point_or_ball_field(&Vec3::from(n.position), radius, n.z, q)).sum();
            for p in q_el {
                e += point_or_ball_field(p, radius, -1.0, q);
            }
            Ok(to_weber(&e, &Vec3::zeros()))
        });
        field.kinks = Some((centers, radius));
        Ok(field)
    }

    /// Full sharp field of a charge moving along `ctx.path` plus static nuclei:
    /// E = E_Coulomb − (1/c)∂_tA, B = ∇×A, with A from the position-space kernel.
    /// Derivatives of A use fourth-order central differences with step `h`.
    pub fn sharp(ctx: &'a SourceContext<'a>, nuclei: Vec<Nucleus>, h: f64) -> Self {
        Self::new(WeberSource::Radiation, move |t, q, _| {
            let a = |t: f64, s: &Vec3| apot_position(ctx, t, s);
            let d5 = |f: &dyn Fn(f64) -> Result<Vec3>| -> Result<Vec3> {
                Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h))
            };
            let dt = d5(&|s| a(t + s, q))?;
            let mut grad = [Vec3::zeros(); 3];
            for (i, g) in grad.iter_mut().enumerate() {
                let mut e = Vec3::zeros();
                e[i] = 1.0;
                *g = d5(&|s| a(t, &(q + e * s)))?;
            }
            // grad[i][j] = ∂_i A_j
            let curl = Vec3::new(grad[1].z - grad[2].y, grad[2].x - grad[0].z, grad[0].y - grad[1].x);
            let mut e: Vec3 = nuclei.iter().map(|n| point_or_ball_field(&Vec3::from(n.position), ctx.radius, n.z, q)).sum();
            e += point_or_ball_field(&ctx.path.position(t)?, ctx.radius, ctx.charge, q);
            e -= dt / C_LIGHT;
            Ok(to_weber(&e, &curl))
        })
    }

    pub fn eval(&self, t: f64, q_ph: &Vec3, q_el: &[Vec3]) -> Result<CVec3> {
        (self.eval)(t, q_ph, q_el)
    }

    fn quadrature_centers(&self, q_el: &[Vec3]) -> (Vec<Vec3>, f64) {
        match &self.kinks {
            Some((c, a)) => {
                let mut c = c.clone();
                c.extend_from_slice(q_el);
                (c, *a)
            }
            None => (vec![Vec3::zeros()], 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonTrajectory {
    pub t: Vec<f64>,
    pub q: Vec<Vec3>,
    pub speed: Vec<f64>,
    pub max_speed: f64,
}

/// dq_ph/dt = v(Ψ(t, q_ph; q_el(t))) with the electron at its actual position.
pub fn integrate_photon(
    field: &WeberField<'_>,
    start: &Vec3,
    electron: Option<&dyn Path>,
    t_span: (f64, f64),
    opts: &OdeOptions,
) -> Result<PhotonTrajectory> {
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let q = Vec3::from(*y);
        let q_el = match electron {
            Some(p) => vec![p.position(t)?],
            None => vec![],
        };
        let psi = field.eval(t, &q, &q_el)?;
        let v = photon_velocity(&psi, DEFAULT_NODE_FLOOR).map_err(|e| match e {
            Error::NodeProximity { rho, .. } => Error::NodeProximity { t, q: *y, rho },
            other => other,
        })?;
        Ok(v.into())
    };
    let sol = dopri5(rhs, t_span.0, (*start).into(), t_span.1, opts).map_err(|inc| inc.error)?;
    let speed: Vec<f64> = sol.dy.iter().map(|d| Vec3::from(*d).norm()).collect();
    let max_speed = speed.iter().copied().fold(0.0, f64::max);
    Ok(PhotonTrajectory { t: sol.t, q: sol.y.iter().map(|y| Vec3::from(*y)).collect(), speed, max_speed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StencilOptions {
    /// Finite-difference step in time, photon and electron coordinates.
    pub h: f64,
    /// Residuals below this on both stencils count as converged.
    pub floor: f64,
}

impl Default for StencilOptions {
    fn default() -> Self {
        Self { h: 2e-3, floor: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonResidual {
    pub evolution: CVec3,
    pub divergence: Complex64,
    pub evolution_norm: f64,
    pub divergence_abs: f64,
    /// Change of the residual norms when the stencil is halved.
    pub stencil_change: f64,
    pub converged: bool,
}

struct LocalTerms {
    psi: CVec3,
    /// i(∂_t + v·∇_el)Ψ − c∇×Ψ
    evolution: CVec3,
    divergence: Complex64,
    /// Σ_n v_n δ^(a)_{q_n}(q)
    current: Vec3,
    /// Σ_k Z_k δ^(a)_k(q) − Σ_n δ^(a)_{q_n}(q)
    density: f64,
}

fn ball_indicator(center: &Vec3, radius: f64, q: &Vec3) -> f64 {
    if (q - center).norm() <= radius {
        3.0 / (4.0 * PI * radius.powi(3))
    } else {
        0.0
    }
}

fn local_terms(
    field: &WeberField<'_>,
    vfield: &dyn VelocityField,
    cfg: &ChargeConfiguration,
    t: f64,
    q: &Vec3,
    h: f64,
) -> Result<LocalTerms> {
    let q_el: Vec<Vec3> = cfg.electrons.iter().map(|p| Vec3::from(*p)).collect();
    let d5 = |f: &dyn Fn(f64) -> Result<CVec3>| -> Result<CVec3> {
        Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * Complex64::new(8.0, 0.0)) / Complex64::new(12.0 * h, 0.0))
    };
    let psi = field.eval(t, q, &q_el)?;
    let mut total = d5(&|s| field.eval(t + s, q, &q_el))?;
    let mut current = Vec3::zeros();
    let mut density: f64 = cfg.nuclei.iter().map(|n| n.z * ball_indicator(&Vec3::from(n.position), cfg.radius, q)).sum();
    for (n, p) in q_el.iter().enumerate() {
        let v = vfield.velocity(t, p)?;
        for i in 0..3 {
            if v[i] == 0.0 {
                continue;
            }
            let mut e = Vec3::zeros();
            e[i] = 1.0;
            let g = d5(&|s| {
                let mut moved = q_el.clone();
                moved[n] = p + e * s;
                field.eval(t, q, &moved)
            })?;
            total += g * Complex64::new(v[i], 0.0);
        }
        let w = ball_indicator(p, cfg.radius, q);
        current += v * w;
        density -= w;
    }
    let mut grad = [CVec3::zeros(); 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut e = Vec3::zeros();
        e[i] = 1.0;
        *g = d5(&|s| field.eval(t, &(q + e * s), &q_el))?;
    }
    let curl = CVec3::new(grad[1].z - grad[2].y, grad[2].x - grad[0].z, grad[0].y - grad[1].x);
    let divergence = grad[0].x + grad[1].y + grad[2].z;
    let i = Complex64::new(0.0, 1.0);
    let evolution = total * i - curl * Complex64::new(C_LIGHT, 0.0);
    Ok(LocalTerms { psi, evolution, divergence, current, density })
}

fn single_at(
    field: &WeberField<'_>,
    vfield: &dyn VelocityField,
    cfg: &ChargeConfiguration,
    t: f64,
    q: &Vec3,
    h: f64,
) -> Result<(CVec3, Complex64)> {
    let lt = local_terms(field, vfield, cfg, t, q, h)?;
    let i4pi = Complex64::new(0.0, 4.0 * PI);
    let evo = lt.evolution - lt.current.map(|x| i4pi * x);
    let div = lt.divergence - 4.0 * PI * lt.density;
    Ok((evo, div))
}

/// Residuals of the single-photon evolution and divergence equations at (t, q_ph),
/// with the electrons at `cfg.electrons` moving with `vfield`.
pub fn single_photon_residual(
    field: &WeberField<'_>,
    vfield: &dyn VelocityField,
    cfg: &ChargeConfiguration,
    t: f64,
    q_ph: &Vec3,
    opts: &StencilOptions,
) -> Result<PhotonResidual> {
    cfg.validate()?;
    let (e1, d1) = single_at(field, vfield, cfg, t, q_ph, opts.h)?;
    let (e2, d2) = single_at(field, vfield, cfg, t, q_ph, 0.5 * opts.h)?;
    let norm = |v: &CVec3| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let change = norm(&(e1 - e2)) + (d1 - d2).norm();
    let fine = norm(&e2) + d2.norm();
    let coarse = norm(&e1) + d1.norm();
    let converged = change <= 0.1 * fine || fine.max(coarse) <= opts.floor;
    Ok(PhotonResidual {
        evolution: e2,
        divergence: d2,
        evolution_norm: norm(&e2),
        divergence_abs: d2.norm(),
        stencil_change: change,
        converged,
    })
}

/// Hartree product Ψ^L = ψ_1 ⊗ … ⊗ ψ_L. `weights[k]` is the weight of the
/// (k+1)-photon product formed by the first k+1 factors.
pub struct LPhotonProduct<'a> {
    pub factors: Vec<WeberField<'a>>,
    pub weights: Vec<f64>,
}

impl<'a> LPhotonProduct<'a> {
    /// All weight on the full product.
    pub fn new(factors: Vec<WeberField<'a>>) -> Result<Self> {
        let mut weights = vec![0.0; factors.len()];
        if let Some(w) = weights.last_mut() {
            *w = 1.0;
        }
        Self::with_weights(factors, weights)
    }

    pub fn with_weights(factors: Vec<WeberField<'a>>, weights: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("an L-photon state needs L ≥ 1".into()));
        }
        if weights.len() != factors.len() || weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("weights must be non-negative, one per L, summing to 1".into()));
        }
        Ok(Self { factors, weights })
    }

    pub fn photons(&self) -> usize {
        self.factors.len()
    }
}

pub enum LPhotonState<'a> {
    HartreeProduct(LPhotonProduct<'a>),
    /// Symmetrized sum of products; carried so callers get a clear rejection.
    Entangled { terms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyVariant {
    PerFactor,
    Geometric,
    Weighted,
}

fn product_of<'s, 'a>(state: &'s LPhotonState<'a>) -> Result<&'s LPhotonProduct<'a>> {
    match state {
        LPhotonState::HartreeProduct(p) => Ok(p),
        LPhotonState::Entangled { terms } => Err(Error::Unsupported(format!(
            "only Hartree-product photon states are supported ({terms}-term symmetrized state given)"
        ))),
    }
}

/// ∫|ψ|² over photon space.
pub fn weber_norm2(field: &WeberField<'_>, t: f64, q_el: &[Vec3], resolution: usize) -> f64 {
    let (centers, a) = field.quadrature_centers(q_el);
    let f = |q: &Vec3| field.eval(t, q, q_el).map(|p| p.iter().map(|z| z.norm_sqr()).sum()).unwrap_or(f64::NAN);
    whole_space_integral(&f, &centers, a, a, resolution)
}

pub fn lphoton_energy(state: &LPhotonState<'_>, variant: EnergyVariant, t: f64, q_el: &[Vec3], resolution: usize) -> Result<f64> {
    let p = product_of(state)?;
    let norms: Vec<f64> = p.factors.iter().map(|f| weber_norm2(f, t, q_el, resolution)).collect();
    if norms.iter().any(|n| !n.is_finite()) {
        return Err(Error::Domain("photon factor is not square integrable or failed to evaluate".into()));
    }
    let per_factor = |l: usize| norms[..l].iter().sum::<f64>() / (8.0 * PI * l as f64);
    Ok(match variant {
        EnergyVariant::PerFactor => per_factor(norms.len()),
        EnergyVariant::Geometric => {
            let l = norms.len() as f64;
            norms.iter().map(|n| n.powf(1.0 / l)).product::<f64>() / (8.0 * PI)
        }
        EnergyVariant::Weighted => p.weights.iter().enumerate().map(|(k, w)| w * per_factor(k + 1)).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPhotonResidual {
    /// 3^L components, first factor most significant.
    pub evolution: Vec<Complex64>,
    /// 3^{L−1} components.
    pub divergence: Vec<Complex64>,
}

fn tensor(factors: &[CVec3]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        out = out.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
    }
    out
}

// inserts `slot` as the ℓ-th factor of the product of `others`
fn insert_slot(others: &[CVec3], l: usize, slot: &CVec3) -> Vec<Complex64> {
    let mut f = others.to_vec();
    f.insert(l, *slot);
    tensor(&f)
}

/// Residuals of the L-photon equations for a Hartree product at photon
/// configuration `q_ph`, with the 1/√L source normalization taken as given.
pub fn lphoton_residual(
    state: &LPhotonState<'_>,
    vfield: &dyn VelocityField,
    cfg: &ChargeConfiguration,
    t: f64,
    q_ph: &[Vec3],
    h: f64,
) -> Result<LPhotonResidual> {
    let p = product_of(state)?;
    let l = p.photons();
    if q_ph.len() != l {
        return Err(Error::Domain(format!("{l} photons but {} positions", q_ph.len())));
    }
    let terms: Vec<LocalTerms> =
        p.factors.iter().zip(q_ph).map(|(f, q)| local_terms(f, vfield, cfg, t, q, h)).collect::<Result<_>>()?;
    let psis: Vec<CVec3> = terms.iter().map(|x| x.psi).collect();
    let inv = 1.0 / (l as f64).sqrt();
    let i4pi = Complex64::new(0.0, 4.0 * PI * inv);
    let mut evolution = vec![Complex64::new(0.0, 0.0); 3usize.pow(l as u32)];
    let mut divergence = vec![Complex64::new(0.0, 0.0); 3usize.pow(l as u32 - 1)];
    for (k, term) in terms.iter().enumerate() {
        let mut others = psis.clone();
        others.remove(k);
        let source = term.current.map(|x| i4pi * x);
        let lhs = insert_slot(&others, k, &term.evolution);
        let rhs = insert_slot(&others, k, &source);
        for (acc, (a, b)) in evolution.iter_mut().zip(lhs.iter().zip(&rhs)) {
            *acc += a - b;
        }
        let rest = tensor(&others);
        let coef = term.divergence - 4.0 * PI * inv * term.density;
        for (acc, r) in divergence.iter_mut().zip(&rest) {
            *acc += coef * r;
        }
    }
    Ok(LPhotonResidual { evolution, divergence })
}
