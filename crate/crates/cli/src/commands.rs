use crate::config::*;
use crate::output::{num, Outputs};
use serde::Serialize;
use serde_json::{json, Value};
use sharpfield::acceptance;
use sharpfield::audit::{
    commutator_series, energy_identity_residual, jensen_gap, momentum_identity_residuals, AuditReport, CoulombSharp,
    ExpectationContext, Interaction,
};
use sharpfield::bohm::{integrate_trajectory, pushforward_density, OdeTolerance, PushforwardOptions, WavefunctionField};
use sharpfield::electrostatics::{field_energy, field_energy_quadrature};
use sharpfield::hartree::{energy_relations, scf_ground_state, RadialGrid, ScfOptions};
use sharpfield::hydrogen::{bohr_energy, omega};
use sharpfield::ode::OdeOptions;
use sharpfield::perturbation::{amplitude_evolution, default_basis, SpatialGrid};
use sharpfield::photon::{integrate_photon, WeberField};
use sharpfield::radiation::{apot_position, fourier_fields, radial_kernel, BornPath, Path, SourceContext, UniformPath};
use sharpfield::units::{PhysicalScale, Quantity};
use sharpfield::{Vec3, C_LIGHT};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(anyhow::Error),
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::ChecksFailed(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "non_convergence",
            CliError::Io(_) => "io",
            CliError::ChecksFailed(_) => "checks_failed",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::ChecksFailed(m) => m.clone(),
            CliError::Io(e) => format!("{e:#}"),
        }
    }
}

impl From<sharpfield::Error> for CliError {
    fn from(e: sharpfield::Error) -> Self {
        use sharpfield::Error as E;
        match e {
            E::Domain(_) | E::Precondition(_) | E::Unsupported(_) | E::InvariantViolation(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Io(e)
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> ManifestCheck {
    ManifestCheck { name: name.into(), passed, detail: detail.into() }
}

pub struct Outcome {
    pub config: Value,
    pub outputs: Outputs,
    pub checks: Vec<ManifestCheck>,
}

pub struct Context<'a> {
    pub run: &'a RunConfig,
    pub scale: PhysicalScale,
    pub seed: u64,
}

impl Context<'_> {
    fn out(&self, q: Quantity, v: f64) -> String {
        num(self.scale.output(q, v))
    }

    fn block<T: serde::de::DeserializeOwned>(&self, name: &str, overrides: &[(&str, Value)]) -> Result<T, CliError> {
        resolve(self.run.block(name), overrides).map_err(|e| invalid(format!("{name} config: {e}")))
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn vec3(p: &[f64; 3]) -> Vec3 {
    Vec3::from(*p)
}

pub fn spectrum(ctx: &Context, n_max: Option<u32>) -> Result<Outcome, CliError> {
    let overrides: Vec<(&str, Value)> = n_max.map(|n| ("n_max", json!(n))).into_iter().collect();
    let cfg: SpectrumConfig = ctx.block("spectrum", &overrides)?;
    if cfg.n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    let mut levels = Vec::new();
    let mut lines = Vec::new();
    for n in 1..=cfg.n_max as i64 {
        levels.push(vec![n.to_string(), ctx.out(Quantity::Energy, bohr_energy::<f64>(n)?)]);
        for m in 1..n {
            lines.push(vec![n.to_string(), m.to_string(), ctx.out(Quantity::Frequency, omega(n, m)?)]);
        }
    }
    let mut outputs = Outputs::default();
    outputs.csv("levels.csv", &["n", "energy"], levels)?;
    outputs.csv("transitions.csv", &["n", "n_prime", "omega"], lines)?;
    Ok(Outcome { config: to_value(&cfg), outputs, checks: vec![check("omega_21", omega(2, 1)? == 0.375, "0.375 exactly")] })
}

pub fn hartree(ctx: &Context, z: Option<f64>) -> Result<Outcome, CliError> {
    let mut overrides: Vec<(&str, Value)> = z.map(|z| ("z", json!(z))).into_iter().collect();
    if z.is_none() && ctx.run.hartree.as_ref().and_then(|b| b.get("z")).is_none() {
        overrides.push(("z", json!(1.0)));
    }
    let opts: ScfOptions = ctx.block("hartree", &overrides)?;
    let res = scf_ground_state(&opts)?;
    let rel = energy_relations(&res);
    let mut outputs = Outputs::default();
    outputs.json("hartree.json", &json!({ "units": "hartree", "result": res, "relations": rel }))?;
    let log = res.log.iter().map(|r| vec![r.iteration.to_string(), num(r.eigenvalue), num(r.functional), num(r.delta_e)]).collect();
    outputs.csv("scf_log.csv", &["iteration", "eigenvalue", "functional", "delta_e"], log)?;
    let grid = RadialGrid::new(opts.grid)?;
    let u = res.state.as_ref().map(|s| s.u.clone()).unwrap_or_default();
    let rows = grid.r.iter().zip(&u).map(|(r, u)| vec![ctx.out(Quantity::Length, *r), num(*u)]).collect();
    outputs.csv("radial.csv", &["r", "u"], rows)?;
    let checks = vec![
        check("converged", rel.converged, format!("{} iterations", res.log.len())),
        check("E_g > F > E1", rel.eg_above_f && rel.f_above_bohr, format!("E_g = {:.8}, F = {:.8}", rel.eigenvalue, rel.functional)),
        check("virial", rel.virial_residual < 1e-3, format!("{:.3e}", rel.virial_residual)),
    ];
    Ok(Outcome { config: to_value(&opts), outputs, checks })
}

pub fn fields(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: FieldsConfig = ctx.block("fields", &[])?;
    let energy = field_energy(&cfg.configuration)?;
    let quadrature = cfg.quadrature_resolution.map(|r| field_energy_quadrature(&cfg.configuration, r.max(1)));
    let mut outputs = Outputs::default();
    outputs.json("fields.json", &json!({ "units": "hartree", "energy": energy, "quadrature_total": quadrature }))?;
    let rows = cfg
        .probes
        .iter()
        .map(|p| {
            let s = vec3(p);
            let e = cfg.configuration.field(&s);
            vec![num(p[0]), num(p[1]), num(p[2]), num(cfg.configuration.potential(&s)), num(e.x), num(e.y), num(e.z)]
        })
        .collect();
    outputs.csv("fields.csv", &["x", "y", "z", "phi", "ex", "ey", "ez"], rows)?;
    let mut checks = Vec::new();
    if let Some(q) = quadrature {
        let rel = (q / energy.total - 1.0).abs();
        checks.push(check("quadrature agrees with closed form", rel < 5e-3, format!("relative {rel:.3e}")));
    }
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}

pub fn trajectory(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: TrajectoryConfig = ctx.block("trajectory", &[])?;
    cfg.tolerance.validate().map_err(invalid)?;
    if cfg.starts.is_empty() {
        return Err(invalid("trajectory needs at least one start point"));
    }
    let state = superposition(&cfg.state)?;
    let field = WavefunctionField { node_floor: cfg.node_floor, ..WavefunctionField::new(&state) };
    let opts = OdeOptions { atol: cfg.tolerance.atol, rtol: cfg.tolerance.rtol, ..Default::default() };
    let mut outputs = Outputs::default();
    for (i, start) in cfg.starts.iter().enumerate() {
        let tr = integrate_trajectory(&field, (cfg.t0, vec3(start)), cfg.t1, &opts).map_err(|e| CliError::from(e.error))?;
        let rows = tr
            .tau
            .iter()
            .zip(&tr.q)
            .zip(&tr.v)
            .map(|((t, q), v)| {
                let rho = state.density_current(*t, q).0;
                let mut row = vec![ctx.out(Quantity::Time, *t)];
                row.extend(q.iter().map(|x| ctx.out(Quantity::Length, *x)));
                row.push(ctx.out(Quantity::Velocity, v.norm()));
                row.push(num(rho));
                row
            })
            .collect();
        outputs.csv(&format!("trajectory_{i}.csv"), &["tau", "qx", "qy", "qz", "speed", "rho"], rows)?;
    }
    let mut checks = Vec::new();
    if let Some(pf) = &cfg.pushforward {
        let opts = PushforwardOptions {
            samples: pf.samples,
            seed: ctx.seed,
            ode: OdeTolerance { atol: cfg.tolerance.atol, rtol: cfg.tolerance.rtol },
            return_check: 100.min(pf.samples),
        };
        let rep = pushforward_density(&state, pf.t, &opts)?;
        checks.push(check("pushforward chi-square", rep.p_value > 0.01, format!("p = {:.4}", rep.p_value)));
        outputs.json("pushforward.json", &rep)?;
    }
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}

pub fn radiate(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: RadiateConfig = ctx.block("radiate", &[])?;
    let path: Box<dyn Path> = match &cfg.source {
        SourceSpec::Uniform { start, velocity } => Box::new(UniformPath { start: vec3(start), velocity: vec3(velocity) }),
        SourceSpec::Born { q, t_anchor, pulse, epsilon } => Box::new(BornPath::new(vec3(q), *t_anchor, &pulse.build()?, *epsilon)),
    };
    let source = SourceContext::new(path.as_ref(), cfg.radius)?;
    let mut potential = Vec::new();
    let mut fourier = Vec::new();
    for &t in &cfg.times {
        for p in &cfg.probes {
            let a = apot_position(&source, t, &vec3(p))?;
            potential.push(vec![num(t), num(p[0]), num(p[1]), num(p[2]), num(a.x), num(a.y), num(a.z)]);
        }
        for k in &cfg.wave_vectors {
            let s = fourier_fields(&source, t, &vec3(k))?;
            let norm = |v: &sharpfield::CVec3| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            fourier.push(vec![
                num(t),
                num(k[0]),
                num(k[1]),
                num(k[2]),
                num(norm(&s.e)),
                num(norm(&s.b)),
                num(norm(&s.a)),
                num(s.div_e.max(s.div_b).max(s.div_a)),
            ]);
        }
    }
    let mut outputs = Outputs::default();
    outputs.csv("potential.csv", &["t", "x", "y", "z", "ax", "ay", "az"], potential)?;
    outputs.csv("fourier.csv", &["t", "kx", "ky", "kz", "e_norm", "b_norm", "a_norm", "max_rel_divergence"], fourier)?;
    if let Some(table) = &cfg.kernel {
        let rows = table.r.iter().map(|&r| Ok(vec![num(r), num(table.ct), num(radial_kernel(r, table.ct)?)])).collect::<sharpfield::Result<_>>()?;
        outputs.csv("kernel.csv", &["r", "ct", "kernel"], rows)?;
    }
    Ok(Outcome { config: to_value(&cfg), outputs, checks: Vec::new() })
}

pub fn perturb(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: PerturbConfig = ctx.block("perturb", &[])?;
    let pulse = cfg.pulse.build()?;
    let basis = cfg.basis.clone().unwrap_or_else(default_basis);
    let times = match &cfg.times {
        Some(t) => t.clone(),
        None => {
            if cfg.steps == 0 {
                return Err(invalid("steps must be positive"));
            }
            let t_end = (-pulse.z0 + 20.0 * pulse.sigma_z) / C_LIGHT;
            (0..=cfg.steps).map(|i| t_end * i as f64 / cfg.steps as f64).collect()
        }
    };
    let set = amplitude_evolution(&cfg.initial, &pulse, &basis, &times, cfg.sourced.as_ref())?;
    let mut outputs = Outputs::default();
    outputs.json("amplitudes.json", &set)?;
    for (label, series) in set.labels.iter().zip(&set.free) {
        let rows = set.times.iter().zip(series).map(|(t, c)| vec![ctx.out(Quantity::Time, *t), num(c.norm_sqr())]).collect();
        outputs.csv(&format!("population_{}.csv", label.to_string().replace('+', "p").replace('-', "m")), &["t", "value"], rows)?;
    }
    let checks = vec![check("first-order regime", set.unitarity_budget <= 0.1, format!("max sum |c|^2 = {:.3e}", set.unitarity_budget))];
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}

pub fn photon(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: PhotonConfig = ctx.block("photon", &[])?;
    cfg.tolerance.validate().map_err(invalid)?;
    let field = match &cfg.field {
        PhotonFieldSpec::PlaneWave { wave } => WeberField::plane_wave(*wave)?,
        PhotonFieldSpec::Coulomb { nuclei, radius } => WeberField::coulomb(nuclei.clone(), *radius)?,
    };
    let opts = OdeOptions { atol: cfg.tolerance.atol, rtol: cfg.tolerance.rtol, ..Default::default() };
    let mut outputs = Outputs::default();
    let mut fastest: f64 = 0.0;
    for (i, start) in cfg.starts.iter().enumerate() {
        let tr = integrate_photon(&field, &vec3(start), None, (cfg.t_span[0], cfg.t_span[1]), &opts)?;
        fastest = fastest.max(tr.max_speed);
        let rows = tr
            .t
            .iter()
            .zip(&tr.q)
            .zip(&tr.speed)
            .map(|((t, q), s)| {
                let mut row = vec![ctx.out(Quantity::Time, *t)];
                row.extend(q.iter().map(|x| ctx.out(Quantity::Length, *x)));
                row.push(ctx.out(Quantity::Velocity, *s));
                row
            })
            .collect();
        outputs.csv(&format!("photon_{i}.csv"), &["t", "x", "y", "z", "speed"], rows)?;
    }
    let checks = vec![check("speed bound", fastest <= C_LIGHT * (1.0 + 1e-9), format!("max |v|/c = {:.12}", fastest / C_LIGHT))];
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}

pub fn audit(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: AuditConfig = ctx.block("audit", &[])?;
    let state = superposition(&cfg.state)?;
    let field = CoulombSharp { z: cfg.z, radius: cfg.radius };
    let grid = ExpectationContext::default_grid(state.max_n());
    let exp = ExpectationContext::new(&state, &field, grid, cfg.radius, cfg.t)?;
    let energy = energy_identity_residual(&exp, cfg.t, cfg.dt)?;
    let momentum = momentum_identity_residuals(&exp, cfg.t, cfg.dt)?;
    // the Jensen double sum is quadratic in the grid size
    let scale = (state.max_n() as f64).powi(2);
    let coarse = SpatialGrid::product(&[0.0, 0.5 * scale, scale, 2.0 * scale, 4.0 * scale, 8.0 * scale, 16.0 * scale], 4, 6, 12);
    let jensen = jensen_gap(&ExpectationContext::new(&state, &field, coarse, cfg.radius, cfg.t)?, cfg.t);
    let report = AuditReport { energy, momentum, jensen };
    let mut outputs = Outputs::default();
    let mut series = None;
    if let Some(c) = &cfg.commutator {
        let pulse = c.pulse.build()?;
        let a_field = move |t: f64, q: &Vec3| pulse.vector_potential(t, q.z);
        let inter = Interaction { vector_potential: Some(&a_field), radiation_energy: None };
        let s = commutator_series(&state, &inter, &c.times, &SpatialGrid::atomic(1))?;
        outputs.csv("commutator.csv", &["t", "value"], s.iter().map(|(t, v)| vec![num(*t), num(*v)]).collect())?;
        series = Some(s);
    }
    outputs.json("audit.json", &json!({ "units": "hartree", "report": report, "commutator": series }))?;
    let checks = vec![
        check("energy identity", report.energy.residual < 1e-5, format!("{:.3e}", report.energy.residual)),
        check("momentum identity", report.momentum.residual < 1e-5, format!("{:.3e}", report.momentum.residual)),
        check("Jensen gap non-negative", report.jensen.gap >= -1e-10, format!("{:.6e}", report.jensen.gap)),
    ];
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}

pub fn selftest(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg: SelftestConfig = ctx.block("selftest", &[])?;
    let ids: Vec<u32> = if cfg.only.is_empty() { acceptance::CRITERIA.iter().map(|c| c.0).collect() } else { cfg.only.clone() };
    let mut reports = Vec::new();
    for id in ids {
        let r = acceptance::run(id).ok_or_else(|| invalid(format!("unknown criterion {id}")))?;
        let tag = if r.passed() { "PASS" } else if r.only_known_failures() { "FAIL (documented)" } else { "FAIL" };
        println!("{:>2}  {:<28} {:>8.2} s  {tag}", r.id, r.title, r.seconds);
        reports.push(r);
    }
    let checks = reports
        .iter()
        .map(|r| check(&format!("criterion {}", r.id), r.passed(), if r.passed() { "pass".to_string() } else { format!("{:?}", r.error) }))
        .collect();
    let mut outputs = Outputs::default();
    outputs.json("selftest.json", &reports)?;
    let unexpected: Vec<u32> = reports.iter().filter(|r| !r.only_known_failures()).map(|r| r.id).collect();
    if !unexpected.is_empty() {
        return Err(CliError::ChecksFailed(format!("criteria {unexpected:?} failed")));
    }
    Ok(Outcome { config: to_value(&cfg), outputs, checks })
}
