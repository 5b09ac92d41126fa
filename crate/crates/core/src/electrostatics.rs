//! Ball-regularized charges, their Coulomb potentials, and electrostatic field energies.

use crate::hydrogen::{Parity, QuantumNumbers};
use crate::special::{assoc_legendre_cs, spherical_norm};
use crate::{Error, Real, Result, Vec3, C_LIGHT};
use serde::{Deserialize, Serialize};

/// Uniformly charged ball: δ^(a) centered at `center` times `charge`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCharge<T = f64> {
    pub center: [T; 3],
    pub radius: T,
    pub charge: T,
}

impl<T: Real> BallCharge<T> {
    pub fn new(center: [T; 3], radius: T, charge: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        Ok(Self { center, radius, charge })
    }

    fn distance_to(&self, s: [T; 3]) -> T {
        let d = [s[0] - self.center[0], s[1] - self.center[1], s[2] - self.center[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Normalized indicator δ^(a)(s) (without the charge).
    pub fn density(&self, s: [T; 3]) -> T {
        if self.distance_to(s) <= self.radius {
            T::lit(3.0) / (T::lit(4.0) * T::PI() * self.radius.powi(3))
        } else {
            T::zero()
        }
    }

    /// Self-energy (3/5)q²/a of the ball's own field.
    pub fn self_energy(&self) -> T {
        T::lit(0.6) * self.charge * self.charge / self.radius
    }
}

/// Potential of a uniformly charged ball: q/r outside, q(3a² − r²)/(2a³) inside.
pub fn ball_potential<T: Real>(b: &BallCharge<T>, s: [T; 3]) -> T {
    let r = b.distance_to(s);
    let a = b.radius;
    if r >= a {
        b.charge / r
    } else {
        b.charge * (T::lit(3.0) * a * a - r * r) / (T::lit(2.0) * a * a * a)
    }
}

/// Electric field −∇φ of a uniformly charged ball.
pub fn ball_field(b: &BallCharge<f64>, s: &Vec3) -> Vec3 {
    let d = s - Vec3::from(b.center);
    let r = d.norm();
    if r >= b.radius {
        d * (b.charge / (r * r * r))
    } else {
        d * (b.charge / b.radius.powi(3))
    }
}

/// Interaction energy of two uniform balls of equal radius at center distance d.
///
/// Coulomb for d ≥ 2a; inside, the overlap polynomial
/// (q₁q₂/a)[6/5 − x²/2 + 3x³/16 − x⁵/160] with x = d/a.
pub fn pair_interaction<T: Real>(b1: &BallCharge<T>, b2: &BallCharge<T>) -> Result<T> {
    if (b1.radius - b2.radius).abs() > T::lit(1e-12) * b1.radius {
        return Err(Error::Precondition("pair_interaction needs equal radii".into()));
    }
    let a = b1.radius;
    let d = b1.distance_to(b2.center);
    let qq = b1.charge * b2.charge;
    if d >= T::lit(2.0) * a {
        return Ok(qq / d);
    }
    let x = d / a;
    let poly = T::lit(1.2) - x * x / T::lit(2.0) + T::lit(3.0) * x.powi(3) / T::lit(16.0) - x.powi(5) / T::lit(160.0);
    Ok(qq / a * poly)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nucleus {
    pub position: [f64; 3],
    pub z: f64,
}

/// N electrons (charge −1) and K nuclei (charge +Z_k), all with the same radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeConfiguration {
    pub radius: f64,
    #[serde(default)]
    pub electrons: Vec<[f64; 3]>,
    #[serde(default)]
    pub nuclei: Vec<Nucleus>,
}

impl ChargeConfiguration {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Domain("charge radius must be positive".into()));
        }
        if self.nuclei.iter().any(|n| !(n.z > 0.0)) {
            return Err(Error::Domain("nuclear charges must be positive".into()));
        }
        Ok(())
    }

    /// Hydrogen-like pair: a nucleus of charge Z at the origin and one electron at `q`.
    pub fn atom(z: f64, q: [f64; 3], radius: f64) -> Self {
        Self { radius, electrons: vec![q], nuclei: vec![Nucleus { position: [0.0; 3], z }] }
    }

    pub fn electron_balls(&self) -> Vec<BallCharge> {
        self.electrons.iter().map(|&c| BallCharge { center: c, radius: self.radius, charge: -1.0 }).collect()
    }

    pub fn nuclear_balls(&self) -> Vec<BallCharge> {
        self.nuclei.iter().map(|n| BallCharge { center: n.position, radius: self.radius, charge: n.z }).collect()
    }

    pub fn balls(&self) -> Vec<BallCharge> {
        let mut v = self.nuclear_balls();
        v.extend(self.electron_balls());
        v
    }

    /// Total electrostatic field at s.
    pub fn field(&self, s: &Vec3) -> Vec3 {
        self.balls().iter().map(|b| ball_field(b, s)).sum()
    }

    pub fn potential(&self, s: &Vec3) -> f64 {
        self.balls().iter().map(|b| ball_potential(b, [s.x, s.y, s.z])).sum()
    }

    pub fn translated(&self, shift: [f64; 3]) -> Self {
        let mv = |p: [f64; 3]| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]];
        Self {
            radius: self.radius,
            electrons: self.electrons.iter().map(|&p| mv(p)).collect(),
            nuclei: self.nuclei.iter().map(|n| Nucleus { position: mv(n.position), z: n.z }).collect(),
        }
    }
}

/// Labeled components of the electrostatic field energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldEnergy {
    pub self_energy: f64,
    pub nucleus_nucleus: f64,
    pub nucleus_electron: f64,
    pub electron_electron: f64,
    pub total: f64,
}

impl FieldEnergy {
    /// Everything except the configuration-independent self-energy.
    pub fn interaction(&self) -> f64 {
        self.nucleus_nucleus + self.nucleus_electron + self.electron_electron
    }
}

fn pair_sum(a: &[BallCharge], b: Option<&[BallCharge]>) -> f64 {
    let mut s = 0.0;
    match b {
        None => {
            for i in 0..a.len() {
                for j in (i + 1)..a.len() {
                    s += pair_interaction(&a[i], &a[j]).expect("uniform radius");
                }
            }
        }
        Some(b) => {
            for x in a {
                for y in b {
                    s += pair_interaction(x, y).expect("uniform radius");
                }
            }
        }
    }
    s
}

/// (1/8π)∫|E|² for the configuration, via closed forms.
pub fn field_energy(cfg: &ChargeConfiguration) -> Result<FieldEnergy> {
    cfg.validate()?;
    let el = cfg.electron_balls();
    let nu = cfg.nuclear_balls();
    let self_energy = el.iter().chain(&nu).map(|b| b.self_energy()).sum();
    let nn = pair_sum(&nu, None);
    let ne = pair_sum(&nu, Some(&el));
    let ee = pair_sum(&el, None);
    Ok(FieldEnergy {
        self_energy,
        nucleus_nucleus: nn,
        nucleus_electron: ne,
        electron_electron: ee,
        total: self_energy + nn + ne + ee,
    })
}

/// Real solid harmonic r^l·Y_{lmς}, harmonic everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidHarmonic {
    pub l: u32,
    pub m: u32,
    #[serde(default = "default_parity")]
    pub parity: Parity,
    pub coefficient: f64,
}

fn default_parity() -> Parity {
    Parity::Plus
}

impl SolidHarmonic {
    pub fn value(&self, s: &Vec3) -> f64 {
        let r = s.norm();
        if r == 0.0 {
            return if self.l == 0 { self.coefficient * spherical_norm::<f64>(0, 0) } else { 0.0 };
        }
        // Reuse the eigenfunction angular part through a label with n = l + 1.
        let qn = QuantumNumbers::new(self.l + 1, self.l, self.m, self.parity);
        match qn {
            Ok(_) => {
                let sph = crate::hydrogen::Spherical::from_cartesian([s.x, s.y, s.z]);
                let (st, ct) = sph.theta.sin_cos();
                let mut norm = spherical_norm::<f64>(self.l, self.m);
                if self.m > 0 {
                    norm *= std::f64::consts::SQRT_2;
                }
                let mphi = self.m as f64 * sph.phi;
                let trig = if self.parity == Parity::Plus { mphi.cos() } else { mphi.sin() };
                self.coefficient * r.powi(self.l as i32) * norm * assoc_legendre_cs(self.l, self.m, ct, st) * trig
            }
            Err(_) => 0.0,
        }
    }
}

/// Static external fields: uniform E, uniform B (A = ½B×s), and harmonic multipoles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalStaticField {
    #[serde(default)]
    pub uniform_e: [f64; 3],
    #[serde(default)]
    pub uniform_b: [f64; 3],
    #[serde(default)]
    pub multipoles: Vec<SolidHarmonic>,
    /// Radius of the ball around the origin free of external sources.
    #[serde(default)]
    pub source_free_radius: Option<f64>,
}

impl ExternalStaticField {
    pub fn validate(&self) -> Result<()> {
        for m in &self.multipoles {
            if m.m > m.l || (m.m == 0 && m.parity == Parity::Minus) || m.l >= crate::special::MAX_N {
                return Err(Error::Domain(format!("invalid multipole l={} m={}", m.l, m.m)));
            }
        }
        Ok(())
    }

    pub fn phi(&self, s: &Vec3) -> f64 {
        -Vec3::from(self.uniform_e).dot(s) + self.multipoles.iter().map(|m| m.value(s)).sum::<f64>()
    }

    pub fn vector_potential(&self, s: &Vec3) -> Vec3 {
        0.5 * Vec3::from(self.uniform_b).cross(s)
    }

    /// External field energy constant; not finite for any supported descriptor.
    pub fn energy_constant(&self) -> Option<f64> {
        let trivial = self.uniform_e == [0.0; 3] && self.uniform_b == [0.0; 3] && self.multipoles.is_empty();
        trivial.then_some(0.0)
    }

    fn check_support(&self, cfg: &ChargeConfiguration) -> Result<()> {
        if let Some(rs) = self.source_free_radius {
            for b in cfg.balls() {
                if Vec3::from(b.center).norm() + b.radius > rs {
                    return Err(Error::Precondition(format!(
                        "charge at {:?} overlaps the external source region (radius {rs})",
                        b.center
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalFieldEnergy {
    pub internal: FieldEnergy,
    /// Σ charge × φ_ext at each center (equal to the ball average for harmonic φ_ext).
    pub external_coupling: f64,
    /// Reported separately and never folded into `total`.
    pub external_constant: Option<f64>,
    pub total: f64,
}

pub fn field_energy_with_external(cfg: &ChargeConfiguration, ext: &ExternalStaticField) -> Result<ExternalFieldEnergy> {
    ext.validate()?;
    ext.check_support(cfg)?;
    let internal = field_energy(cfg)?;
    let coupling: f64 = cfg.balls().iter().map(|b| b.charge * ext.phi(&Vec3::from(b.center))).sum();
    Ok(ExternalFieldEnergy {
        internal,
        external_coupling: coupling,
        external_constant: ext.energy_constant(),
        total: internal.total + coupling,
    })
}

/// P♯_n = −(1/c)A_ext(q_n) for every electron.
pub fn external_momentum_coupling(cfg: &ChargeConfiguration, ext: &ExternalStaticField) -> Vec<Vec3> {
    cfg.electrons.iter().map(|&q| -ext.vector_potential(&Vec3::from(q)) / C_LIGHT).collect()
}

/// Direct quadrature of (1/8π)∫|E|² over all space, independent of the closed forms.
pub fn field_energy_quadrature(cfg: &ChargeConfiguration, resolution: usize) -> f64 {
    let balls = cfg.balls();
    let centers: Vec<Vec3> = balls.iter().map(|b| Vec3::from(b.center)).collect();
    let f = |s: &Vec3| balls.iter().map(|b| ball_field(b, s)).sum::<Vec3>().norm_squared();
    crate::quadrature::whole_space_integral(&f, &centers, cfg.radius, cfg.radius, resolution)
        / (8.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{ball_average, Rule};
    use approx::assert_relative_eq;

    fn unit(a: f64) -> BallCharge {
        BallCharge::new([0.0; 3], a, 1.0).unwrap()
    }

    #[test]
    fn potential_examples() {
        let b = unit(0.1);
        assert_relative_eq!(ball_potential(&b, [0.2, 0.0, 0.0]), 5.0, epsilon = 1e-14);
        assert_relative_eq!(ball_potential(&b, [0.0, 0.0, 0.0]), 15.0, epsilon = 1e-13);
        assert_relative_eq!(ball_potential(&b, [0.1, 0.0, 0.0]), 10.0, epsilon = 1e-13);
        assert_relative_eq!(ball_potential(&b, [0.1 - 1e-12, 0.0, 0.0]), 10.0, epsilon = 1e-9);
        let b32 = BallCharge::<f32>::new([0.0; 3], 0.1, 1.0).unwrap();
        assert!((ball_potential(&b32, [0.0; 3]) - 15.0).abs() < 1e-4);
    }

    #[test]
    fn potential_center_by_quadrature() {
        // φ(0) = ∫ δ^(a)(s)/|s| d³s = (3/a³)∫₀^a r dr = 3/(2a)
        let a = 0.1;
        let rule = Rule::uniform_panels(0.0, a, 4, 8);
        let v = rule.integrate(|r| 3.0 / a.powi(3) * r);
        assert_relative_eq!(v, ball_potential(&unit(a), [0.0; 3]), epsilon = 1e-12);
    }

    // Independent oracle: 1D radial convolution of ball 1 against the potential of ball 2.
    fn overlap_oracle(q1: f64, q2: f64, a: f64, d: f64) -> f64 {
        let b2 = BallCharge::new([0.0, 0.0, d], a, q2).unwrap();
        let rr = Rule::uniform_panels(0.0, a, 8, 12);
        rr.nodes
            .iter()
            .zip(&rr.weights)
            .map(|(&r, &w)| {
                // break the angular rule where the shell crosses the surface of ball 2
                let mut br = vec![-1.0];
                if d > 0.0 {
                    let u = (r * r + d * d - a * a) / (2.0 * r * d);
                    if u > -1.0 && u < 1.0 {
                        br.push(u);
                    }
                }
                br.push(1.0);
                let ang = Rule::composite(&br, 24);
                let avg = 0.5 * ang.integrate(|u| ball_potential(&b2, [r * (1.0 - u * u).sqrt(), 0.0, r * u]));
                w * q1 * 3.0 * r * r / a.powi(3) * avg
            })
            .sum()
    }

    #[test]
    fn pair_interaction_examples() {
        let a = 0.1;
        let p = BallCharge::new([0.0; 3], a, 1.0).unwrap();
        let e = BallCharge::new([1.0, 0.0, 0.0], a, -1.0).unwrap();
        assert_relative_eq!(pair_interaction(&p, &e).unwrap(), -1.0, epsilon = 1e-15);
        let e0 = BallCharge::new([0.0; 3], a, -1.0).unwrap();
        assert_relative_eq!(pair_interaction(&p, &e0).unwrap(), -12.0, epsilon = 1e-12);
        let p2 = BallCharge::new([0.15, 0.0, 0.0], a, 1.0).unwrap();
        let v = pair_interaction(&p, &p2).unwrap();
        // overlap softens the repulsion: between the touching value 1/(2a) and Coulomb 1/d
        assert!(v > 1.0 / 0.2 && v < 1.0 / 0.15);
        for d in [0.0, 0.03, 0.1, 0.15, 0.19] {
            let b2 = BallCharge::new([0.0, 0.0, d], a, 1.0).unwrap();
            let closed = pair_interaction(&p, &b2).unwrap();
            assert_relative_eq!(closed, overlap_oracle(1.0, 1.0, a, d), max_relative = 1e-9);
        }
        let wrong = BallCharge::new([0.0; 3], 0.2, 1.0).unwrap();
        assert!(pair_interaction(&p, &wrong).is_err());
    }

    #[test]
    fn field_energy_examples() {
        let cfg = ChargeConfiguration::atom(1.0, [1.0, 0.0, 0.0], 0.1);
        let e = field_energy(&cfg).unwrap();
        assert_relative_eq!(e.total, 11.0, epsilon = 1e-12);
        assert_relative_eq!(e.self_energy, 12.0, epsilon = 1e-12);
        let lone = ChargeConfiguration { radius: 0.1, electrons: vec![], nuclei: vec![Nucleus { position: [0.0; 3], z: 1.0 }] };
        assert_relative_eq!(field_energy(&lone).unwrap().total, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn external_uniform_e_coupling() {
        let cfg = ChargeConfiguration { radius: 0.1, electrons: vec![[0.3, -0.5, 0.2]], nuclei: vec![] };
        let e0 = [0.2, 0.1, -0.4];
        let ext = ExternalStaticField { uniform_e: e0, ..Default::default() };
        let with = field_energy_with_external(&cfg, &ext).unwrap();
        let without = field_energy(&cfg).unwrap();
        let eq = Vec3::from(e0).dot(&Vec3::new(0.3, -0.5, 0.2));
        assert_relative_eq!(with.total - without.total, eq, epsilon = 1e-15);
        assert_eq!(with.external_constant, None);
        let none = field_energy_with_external(&cfg, &ExternalStaticField::default()).unwrap();
        assert_eq!(none.total, without.total);
        assert_eq!(none.external_constant, Some(0.0));
    }

    #[test]
    fn external_support_overlap_rejected() {
        let cfg = ChargeConfiguration::atom(1.0, [3.0, 0.0, 0.0], 0.1);
        let ext = ExternalStaticField { source_free_radius: Some(2.0), ..Default::default() };
        assert!(matches!(field_energy_with_external(&cfg, &ext), Err(Error::Precondition(_))));
    }

    #[test]
    fn harmonic_ball_average_identity() {
        let ext = ExternalStaticField {
            uniform_e: [0.1, 0.0, 0.3],
            multipoles: vec![
                SolidHarmonic { l: 2, m: 1, parity: Parity::Plus, coefficient: 0.7 },
                SolidHarmonic { l: 3, m: 2, parity: Parity::Minus, coefficient: -0.4 },
            ],
            ..Default::default()
        };
        let q = Vec3::new(0.4, -0.3, 0.8);
        let avg = ball_average(&q, 0.2, 8, |s| ext.phi(s));
        assert!((avg - ext.phi(&q)).abs() < 1e-9);
        // sampled Laplacian
        let h = 1e-3;
        for p in [Vec3::new(0.2, 0.5, -0.1), Vec3::new(-1.0, 0.3, 0.7)] {
            let mut lap = -6.0 * ext.phi(&p);
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                lap += ext.phi(&(p + e)) + ext.phi(&(p - e));
            }
            assert!((lap / (h * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn momentum_coupling() {
        let b = [0.0, 0.0, 2.0];
        let ext = ExternalStaticField { uniform_b: b, ..Default::default() };
        let cfg = ChargeConfiguration { radius: 0.1, electrons: vec![[1.0, 0.0, 0.0], [0.0, 3.0, 0.0]], nuclei: vec![] };
        let p = external_momentum_coupling(&cfg, &ext);
        for (pn, q) in p.iter().zip(&cfg.electrons) {
            let want = -Vec3::from(b).cross(&Vec3::from(*q)) / (2.0 * C_LIGHT);
            assert!((pn - want).norm() < 1e-16);
        }
        let zero = external_momentum_coupling(&cfg, &ExternalStaticField::default());
        assert!(zero.iter().all(|v| v.norm() == 0.0));
    }

    proptest::proptest! {
        #[test]
        fn translation_invariance(dx in -5.0f64..5.0, dy in -5.0f64..5.0, dz in -5.0f64..5.0, sep in 0.0f64..1.0) {
            let cfg = ChargeConfiguration {
                radius: 0.1,
                electrons: vec![[sep, 0.0, 0.0], [0.0, 0.5, 0.1]],
                nuclei: vec![Nucleus { position: [0.0; 3], z: 2.0 }],
            };
            let a = field_energy(&cfg).unwrap().total;
            let b = field_energy(&cfg.translated([dx, dy, dz])).unwrap().total;
            proptest::prop_assert!((a - b).abs() < 1e-10 * a.abs());
        }

        #[test]
        fn opposite_charges_monotone(d1 in 0.0f64..0.3, d2 in 0.0f64..0.3) {
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let p = BallCharge::new([0.0; 3], 0.1, 1.0).unwrap();
            let e = |d: f64| pair_interaction(&p, &BallCharge::new([d, 0.0, 0.0], 0.1, -1.0).unwrap()).unwrap();
            proptest::prop_assert!(e(lo) <= e(hi) + 1e-14);
        }

        #[test]
        fn decomposition_matches_coulomb(x in 0.5f64..3.0, y in -2.0f64..2.0) {
            // non-overlapping: interaction part equals the point-charge Coulomb sum
            let cfg = ChargeConfiguration {
                radius: 0.1,
                electrons: vec![[x, y, 0.0], [-x, 0.0, 1.0]],
                nuclei: vec![Nucleus { position: [0.0; 3], z: 1.0 }],
            };
            let e = field_energy(&cfg).unwrap();
            let p = Vec3::zeros();
            let e1 = Vec3::new(x, y, 0.0);
            let e2 = Vec3::new(-x, 0.0, 1.0);
            let coulomb = -1.0 / e1.norm() - 1.0 / e2.norm() + 1.0 / (e1 - e2).norm() + 0.0 * p.x;
            proptest::prop_assert!((e.interaction() - coulomb).abs() < 1e-12);
        }
    }
}
