//! Path actions, least actions and the verification experiments built on
//! them.
//!
//! The least action between two potentials is the action of the connecting
//! weak geodesic. Every verification suite returns a [`VerificationReport`]
//! whose checks include at least one negative control: a deliberately false
//! instance that the check must flag.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixtures::random_band_limited;
use crate::geodesic::{
    jacobi_field, solve_epsilon_geodesic, weak_geodesic, ContinuationSettings, EpsGeodesicProblem,
    WeakGeodesic,
};
use crate::grid::{compensated_sum, DerivativeScheme, GridField, Potential};
use crate::lagrangian::LagrangianSpec;
use crate::rearrangement::{equidistribution_discrepancy, DEFAULT_TOLERANCE};
use crate::transport::{velocity, Interpolation, PotentialPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// `L` at the right end of each interval, velocity the interval quotient.
    RightEndpoint,
    /// `L` at the interval midpoint, velocity the interval quotient.
    Midpoint,
    /// Four-point Gauss–Legendre in each interval, velocity the interval
    /// quotient.
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionReport {
    pub value: f64,
    pub per_interval_contributions: Vec<f64>,
    pub quadrature: Quadrature,
}

const GAUSS_NODES: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// The quadrature `path_action` uses: midpoint on solver-native paths and
/// for Orlicz Lagrangians on piecewise-linear paths (the integrand is then
/// affine in time), Gauss–Legendre otherwise.
pub fn default_quadrature(spec: &LagrangianSpec, path: &PotentialPath) -> Quadrature {
    match (path.interpolation(), spec) {
        (Interpolation::SolverNative, _) => Quadrature::Midpoint,
        (Interpolation::PiecewiseLinear, LagrangianSpec::Orlicz(_)) => Quadrature::Midpoint,
        (Interpolation::PiecewiseLinear, _) => Quadrature::GaussLegendre,
    }
}

/// `∫ L(u̇(t)) dt` with the default quadrature.
pub fn path_action(spec: &LagrangianSpec, path: &PotentialPath) -> ActionReport {
    path_action_with(spec, path, default_quadrature(spec, path))
}

pub fn path_action_with(spec: &LagrangianSpec, path: &PotentialPath, quadrature: Quadrature) -> ActionReport {
    let v = velocity(path);
    let times = path.times();
    let contributions: Vec<f64> = (0..path.intervals())
        .into_par_iter()
        .map(|k| {
            let dt = times[k + 1] - times[k];
            let (a, b) = (path.knot(k), path.knot(k + 1));
            let xi = &v.intervals[k];
            match quadrature {
                Quadrature::RightEndpoint => dt * spec.evaluate(b, xi),
                Quadrature::Midpoint => dt * spec.evaluate(&a.lerp(b, 0.5), xi),
                Quadrature::GaussLegendre => {
                    0.5 * dt
                        * GAUSS_NODES
                            .iter()
                            .map(|&(x, w)| w * spec.evaluate(&a.lerp(b, 0.5 * (1.0 + x)), xi))
                            .sum::<f64>()
                }
            }
        })
        .collect();
    ActionReport {
        value: compensated_sum(contributions.iter().copied()),
        per_interval_contributions: contributions,
        quadrature,
    }
}

/// How weak geodesics are computed inside the action experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSettings {
    /// Stop the ε-continuation once successive solutions differ by less.
    pub limit_tol: f64,
    pub continuation: ContinuationSettings,
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self {
            limit_tol: 1e-5,
            continuation: ContinuationSettings::default(),
        }
    }
}

impl GeodesicSettings {
    pub fn connect(&self, start: &Potential, end: &Potential, horizon: f64) -> Result<WeakGeodesic> {
        weak_geodesic(start, end, (0.0, horizon), self.limit_tol, &self.continuation)
    }
}

#[derive(Debug, Clone)]
pub struct LeastActionQuery {
    pub start: Potential,
    pub end: Potential,
    pub horizon: f64,
    pub spec: LagrangianSpec,
    pub settings: GeodesicSettings,
}

#[derive(Debug, Clone)]
pub struct LeastAction {
    pub value: f64,
    pub report: ActionReport,
    pub geodesic: WeakGeodesic,
}

/// The action of the weak geodesic connecting the query endpoints.
pub fn least_action(q: &LeastActionQuery) -> Result<f64> {
    least_action_detailed(q).map(|l| l.value)
}

pub fn least_action_detailed(q: &LeastActionQuery) -> Result<LeastAction> {
    if !(q.horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon {} must be positive", q.horizon)));
    }
    let geodesic = q.settings.connect(&q.start, &q.end, q.horizon)?;
    let report = path_action(&q.spec, &geodesic.path);
    Ok(LeastAction {
        value: report.value,
        report,
        geodesic,
    })
}

const MAX_SHRINKAGES: usize = 50;

/// Random piecewise-linear paths from `start` to `end` on `[0, horizon]`.
/// Each path has between one and `knot_budget` interior knots at random
/// times; a knot is the linear interpolant plus a random band-limited field,
/// whose amplitude is halved until the knot is a potential. A zero budget
/// yields the single linear path.
pub fn competitor_paths(
    start: &Potential,
    end: &Potential,
    horizon: f64,
    count: usize,
    seed: u64,
    knot_budget: usize,
) -> Result<Vec<PotentialPath>> {
    if count == 0 {
        return Err(Error::InvalidInput("competitor count must be at least 1".into()));
    }
    if knot_budget == 0 {
        return Ok(vec![PotentialPath::linear(start, end, 0.0, horizon, 1)?]);
    }
    let grid = start.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.5 * start.field().sup_distance(end.field()).max(0.02);
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let interior = rng.gen_range(1..=knot_budget);
        let mut fractions: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.02..0.98)).collect();
        fractions.sort_by(f64::total_cmp);
        fractions.dedup();
        let mut times = vec![0.0];
        let mut knots = vec![start.clone()];
        for &s in &fractions {
            let base = start.field().lerp(end.field(), s);
            let bump = random_band_limited(grid, &mut rng, 1.0);
            let offset = rng.gen_range(-1.0..1.0);
            let mut amplitude = scale * rng.gen_range(0.0..1.0);
            let mut shrinkages = 0;
            let knot = loop {
                let field = base.zip_map(&bump, |b, d| b + amplitude * (d + offset));
                if let Ok(p) = Potential::new(field, grid) {
                    break p;
                }
                shrinkages += 1;
                if shrinkages >= MAX_SHRINKAGES {
                    return Err(Error::GenerationFailed { shrinkages });
                }
                amplitude *= 0.5;
            };
            times.push(s * horizon);
            knots.push(knot);
        }
        times.push(horizon);
        knots.push(end.clone());
        paths.push(PotentialPath::new(times, knots, Interpolation::PiecewiseLinear)?);
    }
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Passes when `value ≤ tolerance`.
    Bound,
    /// A negative control: passes when `value > tolerance`.
    Control,
    /// Reported without a verdict.
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seeds: Vec<u64>,
    pub n: usize,
    pub scheme: DerivativeScheme,
    pub time_steps: usize,
    pub epsilon: f64,
}

impl Provenance {
    pub fn of_path(path: &PotentialPath, epsilon: f64) -> Self {
        Self {
            seeds: Vec::new(),
            n: path.grid().n(),
            scheme: path.grid().scheme(),
            time_steps: path.intervals(),
            epsilon,
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }
}

/// `pass` holds when the worst bound violation is within `tolerance` and
/// every negative control was flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub experiment: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub controls_detected: bool,
    pub provenance: Provenance,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn bounds(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.kind == CheckKind::Bound)
    }

    pub fn controls(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.kind == CheckKind::Control)
    }
}

struct ReportBuilder {
    experiment: String,
    tolerance: f64,
    provenance: Provenance,
    checks: Vec<Check>,
}

impl ReportBuilder {
    fn new(experiment: impl Into<String>, tolerance: f64, provenance: Provenance) -> Self {
        Self {
            experiment: experiment.into(),
            tolerance,
            provenance,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, value: f64, tolerance: f64, kind: CheckKind) {
        let pass = match kind {
            CheckKind::Bound => value <= tolerance,
            CheckKind::Control => value > tolerance,
            CheckKind::Report => true,
        };
        self.checks.push(Check {
            name: name.into(),
            value,
            tolerance,
            kind,
            pass,
        });
    }

    fn bound(&mut self, name: impl Into<String>, value: f64) {
        let tol = self.tolerance;
        self.push(name, value, tol, CheckKind::Bound);
    }

    fn control(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name, value, threshold, CheckKind::Control);
    }

    fn report(&mut self, name: impl Into<String>, value: f64) {
        self.push(name, value, f64::NAN, CheckKind::Report);
    }

    fn finish(self) -> VerificationReport {
        let worst_violation = self
            .checks
            .iter()
            .filter(|c| c.kind == CheckKind::Bound)
            .map(|c| if c.value.is_nan() { f64::INFINITY } else { c.value })
            .fold(f64::NEG_INFINITY, f64::max);
        let controls_detected = self.checks.iter().filter(|c| c.kind == CheckKind::Control).all(|c| c.pass);
        VerificationReport {
            experiment: self.experiment,
            pass: worst_violation <= self.tolerance && controls_detected,
            worst_violation,
            tolerance: self.tolerance,
            controls_detected,
            provenance: self.provenance,
            checks: self.checks,
        }
    }
}

/// Default number of interior knots for generated competitors.
pub const DEFAULT_KNOT_BUDGET: usize = 4;

/// Least action against `count` random competitors (plus the linear path):
/// the geodesic action must not exceed any competitor action by more than
/// `tol`. Control: the geodesic shifted by the spatial constant
/// `0.5·sin(π t/T)`, offered as if it were the minimizer; its excess over
/// the geodesic action must be flagged.
#[allow(clippy::too_many_arguments)]
pub fn verify_least_action(
    spec: &LagrangianSpec,
    start: &Potential,
    end: &Potential,
    horizon: f64,
    count: usize,
    seed: u64,
    tol: f64,
    settings: &GeodesicSettings,
) -> Result<VerificationReport> {
    let geodesic = settings.connect(start, end, horizon)?;
    let competitors = competitor_paths(start, end, horizon, count, seed, DEFAULT_KNOT_BUDGET)?;
    let mut reports = least_action_reports(std::slice::from_ref(spec), &geodesic, &competitors, tol)?;
    let mut report = reports.remove(0);
    report.provenance.seeds = vec![seed];
    Ok(report)
}

/// [`verify_least_action`] for several Lagrangians sharing one geodesic and
/// one competitor set.
pub fn least_action_reports(
    specs: &[LagrangianSpec],
    geodesic: &WeakGeodesic,
    competitors: &[PotentialPath],
    tol: f64,
) -> Result<Vec<VerificationReport>> {
    let path = &geodesic.path;
    let (start, end) = (path.knot(0), path.knot(path.len() - 1));
    let linear = PotentialPath::linear(start, end, path.start(), path.end(), 1)?;
    let detour = shifted_path(path, |tau| 0.5 * (std::f64::consts::PI * tau).sin())?;
    Ok(specs
        .iter()
        .map(|spec| {
            let g = path_action(spec, path).value;
            let mut b = ReportBuilder::new(
                format!("least-action[{spec}]"),
                tol,
                Provenance::of_path(path, geodesic.epsilon),
            );
            b.report("geodesic-action", g);
            b.bound("linear-competitor", g - path_action(spec, &linear).value);
            let margins: Vec<f64> = competitors.par_iter().map(|c| path_action(spec, c).value - g).collect();
            for (i, m) in margins.iter().enumerate() {
                b.bound(format!("competitor-{i}"), -m);
            }
            if !margins.is_empty() {
                b.report("min-margin", margins.iter().copied().fold(f64::INFINITY, f64::min));
                b.report("mean-margin", margins.iter().sum::<f64>() / margins.len() as f64);
            }
            b.control("control:detour-as-minimizer", path_action(spec, &detour).value - g, tol);
            b.finish()
        })
        .collect())
}

/// The path with each knot shifted by the spatial constant `bump(τ)`,
/// `τ = (t − a)/(b − a)`.
fn shifted_path<F: Fn(f64) -> f64>(path: &PotentialPath, bump: F) -> Result<PotentialPath> {
    let (a, b) = (path.start(), path.end());
    let knots = path
        .knots()
        .iter()
        .zip(path.times())
        .map(|(k, &t)| k.shifted(bump((t - a) / (b - a))))
        .collect();
    PotentialPath::new(path.times().to_vec(), knots, path.interpolation())
}

/// One-sided second-order velocity at the start of a path.
fn initial_velocity(path: &PotentialPath) -> GridField {
    velocity(&path.clone().with_interpolation(Interpolation::SolverNative)).knots.swap_remove(0)
}

/// The triangle inequality: legs `v_a, v_b` are ε-geodesics on `[0, horizon]`
/// from `apex` to the ends of `u_path`, and
/// `(1/T)∫L∘u̇ ≥ L(v̇_b(0)) − L(v̇_a(0))` must hold within `tol`. The
/// degenerate triangle with apex `u(a)` is checked too. Control: the
/// constant path at `u(a)` against the degenerate legs.
pub fn verify_comparison_inequality(
    spec: &LagrangianSpec,
    u_path: &PotentialPath,
    apex: &Potential,
    horizon: f64,
    epsilon: f64,
    time_steps: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if !spec.is_positively_homogeneous() {
        return Err(Error::HomogeneityRequired { spec: spec.to_string() });
    }
    let (ua, ub) = (u_path.knot(0), u_path.knot(u_path.len() - 1));
    let leg = |from: &Potential, to: &Potential| -> Result<PotentialPath> {
        let p = EpsGeodesicProblem::new(from.clone(), to.clone(), (0.0, horizon), epsilon, time_steps)?;
        Ok(solve_epsilon_geodesic(&p)?.path)
    };
    let legs: Vec<PotentialPath> = [(apex, ua), (apex, ub), (ua, ua), (ua, ub)]
        .par_iter()
        .map(|(a, b)| leg(a, b))
        .collect::<Result<_>>()?;
    let speed = |leg: &PotentialPath| spec.evaluate(leg.knot(0), &initial_velocity(leg));
    let mean_action = path_action(spec, u_path).value / horizon;
    let mut b = ReportBuilder::new(
        format!("comparison[{spec}]"),
        tol,
        Provenance::of_path(&legs[0], epsilon),
    );
    let rhs = speed(&legs[1]) - speed(&legs[0]);
    b.report("mean-action", mean_action);
    b.report("leg-difference", rhs);
    b.bound("triangle", rhs - mean_action);
    let degenerate = speed(&legs[3]) - speed(&legs[2]);
    b.bound("degenerate-triangle", degenerate - mean_action);
    let constant = PotentialPath::linear(ua, ua, u_path.start(), u_path.end(), 1)?;
    let constant_mean = path_action(spec, &constant).value / horizon;
    b.control("control:constant-path", degenerate - constant_mean, tol);
    Ok(b.finish())
}

/// Values of `L(u̇)` per interval, at the interval midpoints.
pub fn lagrangian_along(spec: &LagrangianSpec, path: &PotentialPath) -> Vec<f64> {
    let v = velocity(path);
    (0..path.intervals())
        .into_par_iter()
        .map(|k| spec.evaluate(&path.knot(k).lerp(path.knot(k + 1), 0.5), &v.intervals[k]))
        .collect()
}

fn max_deviation_from_mean(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}

/// Largest equidistribution discrepancy between the velocity on the first
/// interval and those on the others (each with the midpoint measure).
pub fn velocity_equidistribution(path: &PotentialPath) -> Result<f64> {
    let v = velocity(path);
    let weighted: Vec<_> = (0..path.intervals())
        .map(|k| path.knot(k).lerp(path.knot(k + 1), 0.5).weighted(&v.intervals[k]))
        .collect();
    weighted[1..]
        .par_iter()
        .map(|w| equidistribution_discrepancy(&weighted[0], w, DEFAULT_TOLERANCE))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Noether constancy of `L∘u̇` along a weak geodesic. The equidistribution
/// discrepancy of the velocities is reported without a verdict. Control:
/// the path shifted by the spatial constant `0.1·sin(π(t − a)/(b − a))`.
pub fn verify_noether(spec: &LagrangianSpec, path: &PotentialPath, tol: f64) -> Result<VerificationReport> {
    let mut b = ReportBuilder::new(format!("noether[{spec}]"), tol, Provenance::of_path(path, 0.0));
    let values = lagrangian_along(spec, path);
    b.report("mean", values.iter().sum::<f64>() / values.len() as f64);
    b.bound("max-deviation", max_deviation_from_mean(&values));
    b.report("equidistribution-discrepancy", velocity_equidistribution(path)?);
    let control = shifted_path(path, |tau| 0.1 * (std::f64::consts::PI * tau).sin())?;
    b.control(
        "control:perturbed-path",
        max_deviation_from_mean(&lagrangian_along(spec, &control)),
        tol,
    );
    Ok(b.finish())
}

/// Largest midpoint-convexity defect `g_k − (g_{k−1} + g_{k+1})/2` of a
/// sequence sampled at the given times (weighted for nonuniform spacing).
pub fn convexity_defect(times: &[f64], values: &[f64]) -> f64 {
    (1..values.len() - 1)
        .map(|k| {
            let (h1, h2) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            values[k] - (h2 * values[k - 1] + h1 * values[k + 1]) / (h1 + h2)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Threshold the Jacobi control must exceed.
pub const JACOBI_CONTROL_THRESHOLD: f64 = 1e-2;

/// Convexity of `t ↦ L(ξ(t))` along the ε-Jacobi field with the given end
/// directions. Control: the tent-shaped non-Jacobi field
/// `(1 + 8·min(τ, 1 − τ))·1`, `τ = (t − a)/(b − a)`.
pub fn verify_jacobi_convexity(
    spec: &LagrangianSpec,
    p: &EpsGeodesicProblem,
    direction_start: &GridField,
    direction_end: &GridField,
    delta: f64,
    tol: f64,
) -> Result<VerificationReport> {
    let mut r = jacobi_convexity_reports(std::slice::from_ref(spec), p, direction_start, direction_end, delta, tol)?;
    Ok(r.remove(0))
}

/// [`verify_jacobi_convexity`] for several Lagrangians sharing one field.
pub fn jacobi_convexity_reports(
    specs: &[LagrangianSpec],
    p: &EpsGeodesicProblem,
    direction_start: &GridField,
    direction_end: &GridField,
    delta: f64,
    tol: f64,
) -> Result<Vec<VerificationReport>> {
    let jf = jacobi_field(p, direction_start, direction_end, delta)?;
    let path = &jf.base.path;
    let times = path.times();
    let (a, b) = p.interval;
    let grid = p.grid();
    let control: Vec<GridField> = times
        .iter()
        .map(|&t| {
            let tau = (t - a) / (b - a);
            grid.constant(1.0 + 8.0 * tau.min(1.0 - tau))
        })
        .collect();
    Ok(specs
        .iter()
        .map(|spec| {
            let along = |fields: &[GridField]| -> Vec<f64> {
                fields
                    .par_iter()
                    .enumerate()
                    .map(|(k, xi)| spec.evaluate(path.knot(k), xi))
                    .collect()
            };
            let mut rb = ReportBuilder::new(
                format!("jacobi-convexity[{spec}]"),
                tol,
                Provenance::of_path(path, p.epsilon),
            );
            let g = along(&jf.field);
            rb.bound("midpoint-convexity", convexity_defect(times, &g));
            rb.report("max-L", g.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            rb.control(
                "control:non-jacobi-field",
                convexity_defect(times, &along(&control)),
                JACOBI_CONTROL_THRESHOLD,
            );
            rb.finish()
        })
        .collect())
}

/// A sampled triple `t − half_width, t, t + half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTriple {
    pub center: f64,
    pub half_width: f64,
}

impl SampleTriple {
    fn times(&self) -> [f64; 3] {
        [self.center - self.half_width, self.center, self.center + self.half_width]
    }
}

/// Least actions `ℒ_S(u(t), v(t))` for all specs at the given times.
fn least_actions_between(
    specs: &[LagrangianSpec],
    pairs: &[(Potential, Potential)],
    horizon: f64,
    settings: &GeodesicSettings,
) -> Result<Vec<Vec<f64>>> {
    let paths: Vec<PotentialPath> = pairs
        .par_iter()
        .map(|(a, b)| settings.connect(a, b, horizon).map(|w| w.path))
        .collect::<Result<_>>()?;
    Ok(paths
        .iter()
        .map(|p| specs.iter().map(|s| path_action(s, p).value).collect())
        .collect())
}

/// Midpoint convexity of `t ↦ ℒ_S(u(t), v(t))` on sampled triples, for
/// weak geodesics `u, v` on the same interval. Control: on the first
/// triple, the pair `u(t), u(t) + c(t)` with `c` a spatial constant equal
/// to `0.5` at the center and `0` at the outer times; its least action
/// peaks in the middle.
pub fn verify_action_convexity(
    spec: &LagrangianSpec,
    u_path: &PotentialPath,
    v_path: &PotentialPath,
    horizon: f64,
    triples: &[SampleTriple],
    tol: f64,
    settings: &GeodesicSettings,
) -> Result<VerificationReport> {
    let mut r = action_convexity_reports(std::slice::from_ref(spec), u_path, v_path, horizon, triples, tol, settings)?;
    Ok(r.remove(0))
}

/// [`verify_action_convexity`] for several Lagrangians sharing the solves.
pub fn action_convexity_reports(
    specs: &[LagrangianSpec],
    u_path: &PotentialPath,
    v_path: &PotentialPath,
    horizon: f64,
    triples: &[SampleTriple],
    tol: f64,
    settings: &GeodesicSettings,
) -> Result<Vec<VerificationReport>> {
    if u_path.start() != v_path.start() || u_path.end() != v_path.end() {
        return Err(Error::InvalidInput("paths must share their time interval".into()));
    }
    if triples.is_empty() {
        return Err(Error::InvalidInput("at least one sample triple is required".into()));
    }
    let (a, b) = (u_path.start(), u_path.end());
    for t in triples.iter().flat_map(SampleTriple::times) {
        if !(a..=b).contains(&t) {
            return Err(Error::InvalidInput(format!("sample time {t} outside [{a}, {b}]")));
        }
    }
    let mut pairs: Vec<(Potential, Potential)> = triples
        .iter()
        .flat_map(SampleTriple::times)
        .map(|t| (u_path.potential_at(t), v_path.potential_at(t)))
        .collect();
    pairs.extend(triples[0].times().iter().zip([0.0, 0.5, 0.0]).map(|(&t, c)| {
        let u = u_path.potential_at(t);
        let shifted = u.shifted(c);
        (u, shifted)
    }));
    let values = least_actions_between(specs, &pairs, horizon, settings)?;
    let grid = u_path.grid();
    Ok(specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let mut rb = ReportBuilder::new(
                format!("action-convexity[{spec}]"),
                tol,
                Provenance {
                    seeds: Vec::new(),
                    n: grid.n(),
                    scheme: grid.scheme(),
                    time_steps: settings.continuation.time_steps,
                    epsilon: 0.0,
                },
            );
            for (i, tr) in triples.iter().enumerate() {
                let v = [values[3 * i][s], values[3 * i + 1][s], values[3 * i + 2][s]];
                rb.bound(format!("triple-{i}@{}", tr.center), v[1] - 0.5 * (v[0] + v[2]));
            }
            let c = &values[3 * triples.len()..];
            rb.control("control:shifted-pair", c[1][s] - 0.5 * (c[0][s] + c[2][s]), tol);
            rb.finish()
        })
        .collect())
}

/// Convergence of `ℒ_T(w_j, w'_j)` to `ℒ_T(w, w')` along decreasing
/// sequences: the last discrepancy must be within `tol` and the values must
/// be monotone within `tol`. Control: the discrepancy to the wrong limit
/// `ℒ_T(w, w' + 0.25)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_least_action_continuity(
    spec: &LagrangianSpec,
    starts: &[Potential],
    ends: &[Potential],
    limit_start: &Potential,
    limit_end: &Potential,
    horizon: f64,
    tol: f64,
    settings: &GeodesicSettings,
) -> Result<VerificationReport> {
    if starts.len() != ends.len() || starts.is_empty() {
        return Err(Error::InvalidInput("endpoint sequences must be nonempty and equally long".into()));
    }
    let mut pairs: Vec<(Potential, Potential)> =
        starts.iter().cloned().zip(ends.iter().cloned()).collect();
    pairs.push((limit_start.clone(), limit_end.clone()));
    pairs.push((limit_start.clone(), limit_end.shifted(0.25)));
    let values: Vec<f64> = least_actions_between(std::slice::from_ref(spec), &pairs, horizon, settings)?
        .into_iter()
        .map(|v| v[0])
        .collect();
    let j = starts.len();
    let (seq, limit, wrong) = (&values[..j], values[j], values[j + 1]);
    let grid = limit_start.grid();
    let mut rb = ReportBuilder::new(
        format!("least-action-continuity[{spec}]"),
        tol,
        Provenance {
            seeds: Vec::new(),
            n: grid.n(),
            scheme: grid.scheme(),
            time_steps: settings.continuation.time_steps,
            epsilon: 0.0,
        },
    );
    let discrepancies: Vec<f64> = seq.iter().map(|v| (v - limit).abs()).collect();
    for (i, d) in discrepancies.iter().enumerate() {
        rb.report(format!("discrepancy-{i}"), *d);
    }
    rb.bound("tail-discrepancy", *discrepancies.last().unwrap());
    let rise = seq.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let fall = seq.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    rb.bound("monotone-values", rise.min(fall));
    rb.control("control:wrong-limit", (seq[j - 1] - wrong).abs(), tol);
    Ok(rb.finish())
}
