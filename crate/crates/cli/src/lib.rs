//! Job-file driven verification runs.
//!
//! A job is one JSON document naming a command and its inputs. Running it
//! yields a [`Report`] that echoes the job, carries the computed values under
//! `results`, and ends with a [`Verdict`] made of named threshold checks.
//! Everything except `wall_clock_seconds` is a pure function of the job.

use std::time::Instant;

use convexhodge::exterior::timorin_suite;
use convexhodge::mixed::{ball_mixed_volume, default_resolution, default_tolerance};
use convexhodge::random::{af_family, k2_family, probe_bodies, random_smooth_body, rng};
use convexhodge::spectral::{spectral_row, spectral_sweep};
use convexhodge::sphere::{build_grid, sphere_volume};
use convexhodge::valuation::{af_signature, convolve, e_norm, f_norm, hr_check, hr_primitive_certificate};
use convexhodge::{
    Body, BodySpec, Error, FormalValuation, HrOptions, MixedVolumes, Regularity, Result, SphereGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use convexhodge::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Mixvol,
    Af,
    Hr,
    Timorin,
    Spectral,
    Norms,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mixvol => "mixvol",
            Command::Af => "af",
            Command::Hr => "hr",
            Command::Timorin => "timorin",
            Command::Spectral => "spectral",
            Command::Norms => "norms",
            Command::Selftest => "selftest",
        }
    }
}

/// Threshold overrides. Unset fields fall back to the documented defaults,
/// which may depend on the dimension and on the regularity of the bodies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative quadrature vs. oracle difference (mixvol).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    /// Relative primitivity residual (hr, af).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primitivity: Option<f64>,
    /// Admissible negative part of the Hodge–Riemann value, relative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<f64>,
    /// Eigenvalue cutoff relative to the Gram norm (af).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null: Option<f64>,
    /// Required certificate margin (hr).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Identical-tuple equality case, relative to scale (hr).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<f64>,
}

/// Input document. Which fields are read depends on `command`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// mixvol: the `n` arguments; af: the bodies `A_i`; norms: `[A, C]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bodies: Vec<BodySpec>,
    /// hr: the tuples `A^i`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuples: Vec<Vec<BodySpec>>,
    /// af, hr: the Lefschetz bodies `C_0, …, C_{n-2k}`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<BodySpec>,
    /// hr: coefficients to check instead of searching for a certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// norms: translation used for the invariance check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// af: bodies per random trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    /// timorin: complex dimensions to sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tolerances: Tolerances,
    /// Accept bodies without convexity certification.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn is_default(t: &Tolerances) -> bool {
    *t == Tolerances::default()
}

impl JobSpec {
    pub fn new(command: Command) -> Self {
        Self {
            command: Some(command),
            ..Self::default()
        }
    }

    /// Parses a job document; the message carries serde's line and column.
    pub fn parse(text: &str) -> std::result::Result<JobSpec, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed job: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// `value relation threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Le, threshold, value <= threshold)
    }

    pub fn ge(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Ge, threshold, value >= threshold)
    }

    pub fn eq(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Eq, threshold, value == threshold)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::eq(name, ok as u8 as f64, 1.0)
    }

    fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            pass: pass && value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        Self {
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub job: JobSpec,
    pub version: String,
    pub seed: u64,
    pub results: Value,
    pub verdict: Verdict,
    pub wall_clock_seconds: f64,
}

impl Report {
    /// The deterministic part: everything but the wall clock.
    pub fn payload(&self) -> Value {
        json!({
            "job": self.job,
            "version": self.version,
            "seed": self.seed,
            "results": self.results,
            "verdict": self.verdict,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.pass {
            0
        } else {
            1
        }
    }
}

/// Runs a job. `Err` means the input was unusable (exit code 2); a failed
/// mathematical check is reported in the verdict instead.
pub fn run(job: &JobSpec) -> Result<Report> {
    let command = job
        .command
        .ok_or_else(|| Error::InvalidInput("field `command` is required".into()))?;
    let start = Instant::now();
    let (results, checks) = match command {
        Command::Mixvol => mixvol(job)?,
        Command::Af => af(job)?,
        Command::Hr => hr(job)?,
        Command::Timorin => timorin(job)?,
        Command::Spectral => spectral(job)?,
        Command::Norms => norms(job)?,
        Command::Selftest => selftest(job)?,
    };
    Ok(Report {
        job: job.clone(),
        version: VERSION.to_string(),
        seed: job.seed,
        results,
        verdict: Verdict::from_checks(checks),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

type Outcome = Result<(Value, Vec<Check>)>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn require_n(job: &JobSpec) -> Result<usize> {
    let n = job
        .n
        .ok_or_else(|| Error::InvalidInput("field `n` is required".into()))?;
    if !(2..=8).contains(&n) {
        return Err(Error::UnsupportedDimension { n, min: 2, max: 8 });
    }
    Ok(n)
}

fn grid_for(job: &JobSpec, n: usize, default: usize) -> Result<SphereGrid> {
    build_grid(n, job.grid.unwrap_or(default))
}

/// Builds a body and certifies it on `grid` unless it is convex by
/// construction or `force` is set.
fn load(n: usize, spec: &BodySpec, grid: &SphereGrid, force: bool) -> Result<Body> {
    let body = Body::from_spec(n, spec)?;
    if body.is_admissible() {
        Ok(body)
    } else if force {
        Ok(body.force())
    } else {
        body.certify(grid)
    }
}

fn load_all(n: usize, specs: &[BodySpec], grid: &SphereGrid, force: bool) -> Result<Vec<Body>> {
    specs.iter().map(|s| load(n, s, grid, force)).collect()
}

fn any_c11(bodies: &[Body]) -> bool {
    bodies.iter().any(|b| b.regularity() == Regularity::C11)
}

fn hr_options(tol: &Tolerances, relaxed: bool) -> HrOptions {
    let d = HrOptions::default();
    let sign_default = if relaxed { 1e-4 } else { d.sign_tol };
    HrOptions {
        primitivity_tol: tol.primitivity.unwrap_or(d.primitivity_tol),
        sign_tol: tol.sign.unwrap_or(sign_default),
        zero_tol: tol.zero.unwrap_or(d.zero_tol),
        null_tol: tol.null.unwrap_or(d.null_tol),
        ..d
    }
}

fn ball_radius(spec: &BodySpec) -> Option<f64> {
    match spec {
        BodySpec::Ball { radius, .. } => Some(*radius),
        _ => None,
    }
}

fn mixvol(job: &JobSpec) -> Outcome {
    let n = require_n(job)?;
    if job.bodies.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: job.bodies.len(),
        });
    }
    let grid = grid_for(job, n, default_resolution(n))?;
    let bodies = load_all(n, &job.bodies, &grid, job.force)?;
    let mv = MixedVolumes::new(&grid);
    let value = mv.mixed_volume(&bodies)?;
    let oracle = mv.polarization_oracle(&bodies)?;
    let regularity = if any_c11(&bodies) {
        Regularity::C11
    } else {
        Regularity::Smooth
    };
    let tol = job.tolerances.oracle.unwrap_or(default_tolerance(n, regularity));
    let delta = rel(value, oracle);
    let mut checks = vec![Check::le("oracle_relative_delta", delta, tol)];

    let radii: Option<Vec<f64>> = job.bodies.iter().map(ball_radius).collect();
    let closed_form = match radii {
        Some(r) => {
            let exact = ball_mixed_volume(&r)?;
            checks.push(Check::le("ball_closed_form_relative_delta", rel(value, exact), tol));
            Some(exact)
        }
        None => None,
    };
    let margins: Vec<Option<f64>> = bodies.iter().map(Body::certified_margin).collect();
    let results = json!({
        "n": n,
        "grid_resolution": grid.resolution(),
        "value": value,
        "oracle": oracle,
        "oracle_relative_delta": delta,
        "closed_form": closed_form,
        "regularity": regularity,
        "certified_margins": margins,
    });
    Ok((results, checks))
}

fn af(job: &JobSpec) -> Outcome {
    let n = require_n(job)?;
    if n < 3 {
        return Err(Error::InvalidParameter("the signature test needs n >= 3".into()));
    }
    let grid = grid_for(job, n, default_resolution(n))?;
    let mut reports = Vec::new();
    let sign_tol;
    if !job.bodies.is_empty() {
        if job.reference.len() != n - 1 {
            return Err(Error::Arity {
                expected: n - 1,
                got: job.reference.len(),
            });
        }
        let tuples: Vec<Vec<Body>> = load_all(n, &job.bodies, &grid, job.force)?
            .into_iter()
            .map(|b| vec![b])
            .collect();
        let c_full = load_all(n, &job.reference, &grid, job.force)?;
        let relaxed = any_c11(&c_full) || tuples.iter().any(|t| any_c11(t));
        let opts = hr_options(&job.tolerances, relaxed);
        let sig = job.tolerances.signature.unwrap_or(if relaxed { 1e-4 } else { 1e-8 });
        let mv = MixedVolumes::new(&grid);
        reports.push(af_signature(&mv, &c_full, &tuples, &opts, sig, job.seed)?);
        sign_tol = opts.sign_tol;
    } else {
        let count = job.count.unwrap_or(5);
        let opts = hr_options(&job.tolerances, false);
        let sig = job.tolerances.signature.unwrap_or(1e-8);
        for t in 0..job.trials.unwrap_or(1) as u64 {
            let seed = job.seed.wrapping_add(t);
            let fam = af_family(n, seed, count, &grid)?;
            let mv = MixedVolumes::new(&grid);
            reports.push(af_signature(&mv, &fam.c_full, &fam.tuples, &opts, sig, seed)?);
        }
        sign_tol = opts.sign_tol;
    }
    let mut checks = Vec::new();
    for (t, r) in reports.iter().enumerate() {
        checks.push(Check::eq(format!("trial {t}: positive eigenvalues"), r.positive_count as f64, 1.0));
        checks.push(Check::ge(format!("trial {t}: certificate margin"), r.certificate.margin, -sign_tol));
        checks.push(Check::flag(format!("trial {t}: certificate"), r.certificate.pass));
        checks.push(Check::flag(format!("trial {t}: random primitive"), r.random_primitive.pass));
    }
    let results = json!({
        "n": n,
        "grid_resolution": grid.resolution(),
        "trials": reports,
    });
    Ok((results, checks))
}

fn hr(job: &JobSpec) -> Outcome {
    let n = require_n(job)?;
    let tol = &job.tolerances;
    let margin_tol = tol.margin.unwrap_or(1e-8);
    let equality_tol = tol.equality.unwrap_or(1e-10);
    let mut checks = Vec::new();

    if !job.tuples.is_empty() {
        let k = job.tuples[0].len();
        if job.k.is_some_and(|jk| jk != k) {
            return Err(Error::InvalidInput(format!("k = {} but tuples have length {k}", job.k.unwrap())));
        }
        let grid = grid_for(job, n, default_resolution(n))?;
        let tuples = job
            .tuples
            .iter()
            .map(|t| load_all(n, t, &grid, job.force))
            .collect::<Result<Vec<_>>>()?;
        let c_full = load_all(n, &job.reference, &grid, job.force)?;
        let relaxed = any_c11(&c_full) || tuples.iter().any(|t| any_c11(t));
        let opts = hr_options(tol, relaxed);
        let mv = MixedVolumes::new(&grid);
        let results = match &job.x {
            Some(x) => {
                let report = hr_check(&mv, &c_full, &tuples, x, &opts)?;
                checks.push(Check::le(
                    "primitivity (relative)",
                    report.primitivity.relative(),
                    opts.primitivity_tol,
                ));
                checks.push(Check::flag("hodge-riemann sign", report.pass));
                to_value(&report)
            }
            None => {
                let cert = hr_primitive_certificate(&mv, &c_full, &tuples, &opts)?;
                certificate_checks("", &cert, &opts, margin_tol, &mut checks);
                to_value(&cert)
            }
        };
        return Ok((json!({ "n": n, "k": k, "grid_resolution": grid.resolution(), "certificate": results }), checks));
    }

    let k = job.k.unwrap_or(2);
    let (default_grid, relaxed) = match k {
        1 => (default_resolution(n), false),
        2 if n >= 4 => (12, false),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "seeded families exist for k = 1 (n >= 3) and k = 2 (n >= 4); got k = {k}, n = {n}"
            )))
        }
    };
    let grid = grid_for(job, n, default_grid)?;
    let opts = hr_options(tol, relaxed);
    let mut trials = Vec::new();
    for t in 0..job.trials.unwrap_or(1) as u64 {
        let seed = job.seed.wrapping_add(t);
        let fam = match k {
            1 => af_family(n, seed, job.count.unwrap_or(5), &grid)?,
            _ => k2_family(n, seed, &grid)?,
        };
        let mv = MixedVolumes::new(&grid);
        let cert = hr_primitive_certificate(&mv, &fam.c_full, &fam.tuples, &opts)?;
        certificate_checks(&format!("family {t}: "), &cert, &opts, margin_tol, &mut checks);

        let same = fam.tuples[3.min(fam.tuples.len() - 1)].clone();
        let eq = hr_check(&mv, &fam.c_full, &[same.clone(), same], &[1.0, -1.0], &opts)?;
        checks.push(Check::le(
            format!("family {t}: equality |q|/scale"),
            if eq.scale > 0.0 { eq.q_value.abs() / eq.scale } else { eq.q_value.abs() },
            equality_tol,
        ));
        trials.push(json!({
            "seed": seed,
            "tuples": fam.tuples.len(),
            "certificate": cert,
            "equality": { "q_value": eq.q_value, "scale": eq.scale, "pass": eq.pass },
        }));
    }
    Ok((json!({ "n": n, "k": k, "grid_resolution": grid.resolution(), "families": trials }), checks))
}

fn certificate_checks(
    prefix: &str,
    cert: &convexhodge::Certificate,
    opts: &HrOptions,
    margin_tol: f64,
    checks: &mut Vec<Check>,
) {
    checks.push(Check::ge(format!("{prefix}null dimension"), cert.null_dimension as f64, 1.0));
    let Some(report) = &cert.report else { return };
    checks.push(Check::le(
        format!("{prefix}primitivity (relative)"),
        report.primitivity.relative(),
        opts.primitivity_tol,
    ));
    checks.push(Check::ge(format!("{prefix}hodge-riemann margin"), report.margin, margin_tol));
    checks.push(Check::flag(format!("{prefix}hodge-riemann sign"), report.pass));
}

fn timorin(job: &JobSpec) -> Outcome {
    let dims = job.dims.clone().unwrap_or_else(|| vec![2, 3]);
    let trials = job.trials.unwrap_or(100);
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    for &m in &dims {
        for p in 0..=m {
            for q in 0..=m - p {
                let seed = job.seed.wrapping_mul(1_000).wrapping_add((100 * m + 10 * p + q) as u64);
                let s = timorin_suite(m, p, q, trials, seed)?;
                let tag = format!("m={m} p={p} q={q}");
                checks.push(Check::eq(format!("{tag}: passed trials"), s.passed as f64, trials as f64));
                checks.push(Check::eq(
                    format!("{tag}: primitive dimension matches"),
                    s.primitive_dimension_matches as f64,
                    trials as f64,
                ));
                checks.push(Check::eq(format!("{tag}: GL invariant"), s.gl_invariant as f64, trials as f64));
                summaries.push(s);
            }
        }
    }
    Ok((json!({ "dims": dims, "trials": trials, "suites": summaries }), checks))
}

fn spectral(job: &JobSpec) -> Outcome {
    let tol = job.tolerances.spectral.unwrap_or(1e-11);
    let rows = match (job.n, job.r, job.m) {
        (Some(n), Some(r), Some(m)) => vec![spectral_row(n, r, m)?],
        (None, None, None) => spectral_sweep(job.n_max.unwrap_or(12), job.m_max.unwrap_or(60))?,
        _ => return Err(Error::InvalidInput("give all of n, r, m for one row, or none for a sweep".into())),
    };
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_consistency = rows.iter().map(|r| r.consistency).fold(0.0f64, f64::max);
    let checks = vec![
        Check::ge("min ratio", min_ratio, 1.0),
        Check::le("max consistency", max_consistency, tol),
    ];
    Ok((json!({ "rows": rows }), checks))
}

fn norms(job: &JobSpec) -> Outcome {
    let n = require_n(job)?;
    let tol = job.tolerances.norms.unwrap_or(1e-10);
    let specs = if job.bodies.is_empty() {
        vec![BodySpec::ball(1.0), BodySpec::ball(2.0)]
    } else {
        job.bodies.clone()
    };
    if specs.len() != 2 {
        return Err(Error::Arity {
            expected: 2,
            got: specs.len(),
        });
    }
    let grid = grid_for(job, n, default_resolution(n))?;
    let bodies = load_all(n, &specs, &grid, job.force)?;
    let (a, c) = (&bodies[0], &bodies[1]);
    let e = e_norm(&grid, a, c)?;
    let f = f_norm(&grid, a, c)?;
    let offset = job
        .offset
        .clone()
        .unwrap_or_else(|| (0..n).map(|i| 0.3 - 0.2 * i as f64).collect());
    let translated = e_norm(&grid, &c.translate(&offset)?, c)?;
    let mut checks = vec![Check::le("e_norm(C + offset, C)", translated, tol)];
    let mut closed = Value::Null;
    if let (Some(r), Some(s)) = (ball_radius(&specs[0]), ball_radius(&specs[1])) {
        let area = sphere_volume(n as i64 - 1)?;
        let e_exact = (r - s).abs() * area.sqrt();
        let f_exact = (r - s).abs() * ((n - 1) as f64 * area).sqrt();
        checks.push(Check::le("e_norm closed form", (e - e_exact).abs(), tol));
        checks.push(Check::le("f_norm closed form", (f - f_exact).abs(), tol));
        closed = json!({ "e_norm": e_exact, "f_norm": f_exact });
    }
    let results = json!({
        "n": n,
        "grid_resolution": grid.resolution(),
        "e_norm": e,
        "f_norm": f,
        "offset": offset,
        "translated_e_norm": translated,
        "closed_form": closed,
    });
    Ok((results, checks))
}

/// A quick battery touching every module.
fn selftest(job: &JobSpec) -> Outcome {
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();

    for n in 2..=3 {
        let grid = build_grid(n, default_resolution(n))?;
        let mv = MixedVolumes::new(&grid);
        let radii: Vec<f64> = (0..n).map(|i| 0.5 + 0.75 * i as f64).collect();
        let balls = radii.iter().map(|&r| Body::ball(n, r)).collect::<Result<Vec<_>>>()?;
        let v = mv.mixed_volume(&balls)?;
        checks.push(Check::le(format!("n={n}: ball mixed volume"), rel(v, ball_mixed_volume(&radii)?), 1e-9));

        let mut r = rng(job.seed);
        let bodies = (0..n)
            .map(|_| random_smooth_body(n, &mut r, &grid))
            .collect::<Result<Vec<_>>>()?;
        let v = mv.mixed_volume(&bodies)?;
        let o = mv.polarization_oracle(&bodies)?;
        checks.push(Check::le(format!("n={n}: oracle"), rel(v, o), 1e-7));
        let mut rotated = bodies.clone();
        rotated.rotate_left(1);
        let s = mv.mixed_volume_ordered(&rotated)?;
        checks.push(Check::le(format!("n={n}: symmetry"), rel(mv.mixed_volume_ordered(&bodies)?, s), 1e-9));
        checks.push(Check::le(
            format!("n={n}: steiner"),
            mv.steiner_check(&bodies[0], &[0.0, 0.4, 1.3])?,
            1e-9,
        ));

        let lhs = convolve(
            &FormalValuation::translated_volume(&bodies[0])?,
            &FormalValuation::translated_volume(&bodies[1])?,
        )?;
        let rhs = FormalValuation::translated_volume(&Body::minkowski_sum(&bodies[..2])?)?;
        let worst = probe_bodies(n, job.seed, &grid)?
            .iter()
            .map(|p| Ok(rel(lhs.evaluate(&mv, p)?.re, rhs.evaluate(&mv, p)?.re)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        checks.push(Check::le(format!("n={n}: convolution identity"), worst, 1e-8));
    }

    for (name, sub) in [
        ("spectral", JobSpec { n: Some(4), r: Some(2), m: Some(2), ..JobSpec::new(Command::Spectral) }),
        ("norms", JobSpec { n: Some(3), ..JobSpec::new(Command::Norms) }),
        ("timorin", JobSpec { dims: Some(vec![2]), trials: Some(10), seed: job.seed, ..JobSpec::new(Command::Timorin) }),
        ("af", JobSpec { n: Some(3), seed: job.seed, ..JobSpec::new(Command::Af) }),
        ("hr", JobSpec { n: Some(4), k: Some(2), seed: job.seed, ..JobSpec::new(Command::Hr) }),
    ] {
        let report = run(&sub)?;
        checks.extend(report.verdict.checks.into_iter().map(|mut c| {
            c.name = format!("{name}: {}", c.name);
            c
        }));
        results.insert(name.to_string(), json!({ "pass": report.verdict.pass }));
    }
    let row = spectral_row(4, 2, 2)?;
    checks.push(Check::le("spectral: hw(4,2,2)", (row.hw - 1.0).abs(), 1e-13));
    checks.push(Check::le("spectral: bound(2,2,2,4)", (row.bound - 0.25).abs(), 1e-15));
    checks.push(Check::eq("spectral: ratio(4,2,2)", row.ratio, 4.0));
    Ok((Value::Object(results), checks))
}
