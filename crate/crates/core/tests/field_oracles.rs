//! Cross-checks of the sharp radiation fields against independent constructions.

use sharpfield::bohm::FnField;
use sharpfield::electrostatics::ChargeConfiguration;
use sharpfield::photon::{single_photon_residual, StencilOptions, WeberField};
use sharpfield::radiation::{apot_from_fourier, apot_position, FnPath, KGrid, Path, SourceContext};
use sharpfield::Vec3;
use std::f64::consts::PI;

// velocity bump 0.5·sin⁴(π(t − t0)/w) along x, with its closed-form primitive
const T0: f64 = 0.01;
const W: f64 = 0.03;

fn bump(t: f64) -> f64 {
    if t <= T0 || t >= T0 + W {
        0.0
    } else {
        0.5 * (PI * (t - T0) / W).sin().powi(4)
    }
}

fn bump_primitive(t: f64) -> f64 {
    let x = (t.clamp(T0, T0 + W) - T0) * PI / W;
    0.5 * (3.0 * x / 8.0 - (2.0 * x).sin() / 4.0 + (4.0 * x).sin() / 32.0) * W / PI
}

fn bump_path() -> impl Path {
    FnPath {
        position: |t: f64| Vec3::new(bump_primitive(t), 0.0, 0.0),
        velocity: |t: f64| Vec3::new(bump(t), 0.0, 0.0),
        span: (0.0, 1.0),
    }
}

#[test]
fn position_kernel_matches_inverse_fourier_transform() {
    let path = bump_path();
    let ctx = SourceContext::new(&path, 1.5).unwrap();
    let t = 0.06;
    let probes = [
        Vec3::new(0.0, 3.0, 0.0),
        Vec3::new(2.0, 2.0, 1.0),
        Vec3::new(0.0, 0.0, 5.0),
        Vec3::new(4.0, 0.0, 0.0),
        Vec3::new(-1.0, 3.0, -3.0),
    ];
    let grid = KGrid::new(64, 16, 10.0).unwrap();
    let fourier = apot_from_fourier(&ctx, &grid, t, &probes).unwrap();
    for (p, af) in probes.iter().zip(&fourier) {
        let ap = apot_position(&ctx, t, p).unwrap();
        let rel = (ap - af).norm() / ap.norm();
        assert!(rel < 0.02, "probe {p:?}: position {ap:?} vs fourier {af:?} ({rel:.2e})");
    }
}

#[test]
fn sharp_weber_field_solves_its_own_equations() {
    let path = bump_path();
    let ctx = SourceContext::new(&path, 0.5).unwrap();
    let field = WeberField::sharp(&ctx, vec![], 2.5e-4);
    let vfield = FnField::synthetic(|t: f64, _: &Vec3| Vec3::new(bump(t), 0.0, 0.0));
    let t = 0.06;
    let cfg = ChargeConfiguration { radius: 0.5, electrons: vec![path.position(t).unwrap().into()], nuclei: vec![] };
    // truncation dominates down to ~1e-5; below that the stencils only see rounding
    let opts = StencilOptions { h: 5e-4, floor: 1e-4 };
    for q in [Vec3::new(0.0, 3.0, 0.0), Vec3::new(2.0, 1.0, 1.0)] {
        let r = single_photon_residual(&field, &vfield, &cfg, t, &q, &opts).unwrap();
        assert!(r.evolution_norm < 1e-4 && r.divergence_abs < 1e-4, "{q:?}: {r:?}");
        assert!(r.converged);
    }
}
