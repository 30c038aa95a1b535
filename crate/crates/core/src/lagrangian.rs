//! Rearrangement-invariant convex Lagrangians on tangent vectors `ξ` at a
//! potential `u`, i.e. functions of the pair `(ξ, μ_u)` that only see its
//! distribution:
//!
//! * Orlicz integrals `∫ χ(ξ) dμ_u` with a convex Young weight `χ`;
//! * the weak `L^{1/α}` Lorentz norm `sup_E μ_u(E)^{-α} ∫_E |ξ| dμ_u`;
//! * `L^p` norms;
//! * suprema of affine families `max_j a_j + sup_{f ∼ f_j} ∫ f ξ dμ_u`, each
//!   member given by its rearrangement class `f_j*`.
//!
//! Everything is evaluated on a [`WeightedValues`], so the same code serves
//! grid fields and the refined atom sets produced by θ-transfer.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::grid::{compensated_sum, Grid, GridField, Potential, WeightedValues};
use crate::rearrangement::{
    decreasing_rearrangement, equidistribution_discrepancy, hardy_littlewood_sup, StepFunction,
    DEFAULT_TOLERANCE,
};

/// A finite convex function `χ: R → R`, checked for convexity on a probe
/// grid at construction.
#[derive(Clone)]
pub struct YoungWeight {
    label: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for YoungWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YoungWeight({})", self.label)
    }
}

const PROBE_RADIUS: f64 = 10.0;
const PROBE_STEP: f64 = 0.05;

impl YoungWeight {
    pub fn new<F>(label: impl Into<String>, func: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        let steps = (2.0 * PROBE_RADIUS / PROBE_STEP).round() as i64;
        for k in 0..=steps {
            let t = -PROBE_RADIUS + k as f64 * PROBE_STEP;
            let c = func(t);
            if !c.is_finite() {
                return Err(Error::NotConvex { label, at: t });
            }
            for h in [PROBE_STEP, 0.5, 2.0] {
                let (a, b) = (func(t - h), func(t + h));
                let slack = 1e-12 * (a.abs() + b.abs() + c.abs()).max(1.0);
                if c > 0.5 * (a + b) + slack {
                    return Err(Error::NotConvex { label, at: t });
                }
            }
        }
        Ok(Self {
            label,
            func: Arc::new(func),
        })
    }

    /// `χ(t) = |t|^p`, `p ≥ 1`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("Young weight exponent {p} must be >= 1")));
        }
        if p == 2.0 {
            return Self::new("p2", |t| t * t);
        }
        Self::new(format!("p{p}"), move |t: f64| t.abs().powf(p))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }
}

/// One affine member `ξ ↦ offset + sup_{f ∼ profile} ∫ f ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupMember {
    pub offset: f64,
    pub profile: StepFunction,
}

#[derive(Debug, Clone)]
pub enum LagrangianSpec {
    Orlicz(YoungWeight),
    LorentzWeak { alpha: f64 },
    Power { p: f64 },
    SupFamily(Vec<SupMember>),
}

impl fmt::Display for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagrangianSpec::Orlicz(w) => write!(f, "orlicz:{}", w.label()),
            LagrangianSpec::LorentzWeak { alpha } => write!(f, "lorentz:a{alpha}"),
            LagrangianSpec::Power { p } => write!(f, "power:p{p}"),
            LagrangianSpec::SupFamily(m) => write!(f, "supfam:{}-members", m.len()),
        }
    }
}

fn parse_number(text: &str, prefix: char, full: &str) -> Result<f64> {
    text.strip_prefix(prefix)
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::InvalidInput(format!("cannot parse Lagrangian `{full}`")))
}

impl LagrangianSpec {
    pub fn orlicz(weight: YoungWeight) -> Self {
        LagrangianSpec::Orlicz(weight)
    }

    pub fn lorentz_weak(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("Lorentz exponent {alpha} not in (0,1)")));
        }
        Ok(LagrangianSpec::LorentzWeak { alpha })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("power exponent {p} must be >= 1")));
        }
        Ok(LagrangianSpec::Power { p })
    }

    /// Members must be nonempty and carry unit mass.
    pub fn sup_family(members: Vec<SupMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("empty sup family".into()));
        }
        for m in &members {
            if (m.profile.total_mass() - 1.0).abs() > DEFAULT_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "sup family member has mass {}",
                    m.profile.total_mass()
                )));
            }
            if !m.offset.is_finite() {
                return Err(Error::InvalidInput("non-finite sup family offset".into()));
            }
        }
        Ok(LagrangianSpec::SupFamily(members))
    }

    /// Parses `orlicz:p<q>`, `lorentz:a<α>`, `power:p<p>` or
    /// `supfam:<file>` (see [`parse_sup_family`] for the file format).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("cannot parse Lagrangian `{text}`")))?;
        match kind {
            "orlicz" => Ok(Self::orlicz(YoungWeight::power(parse_number(arg, 'p', text)?)?)),
            "lorentz" => Self::lorentz_weak(parse_number(arg, 'a', text)?),
            "power" => Self::power(parse_number(arg, 'p', text)?),
            "supfam" => {
                let content = std::fs::read_to_string(arg)
                    .map_err(|e| Error::InvalidInput(format!("cannot read {arg}: {e}")))?;
                Self::sup_family(parse_sup_family(&content)?)
            }
            _ => Err(Error::InvalidInput(format!("unknown Lagrangian kind `{kind}`"))),
        }
    }

    /// True when `L(cξ) = c L(ξ)` for all `c > 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        match self {
            LagrangianSpec::Orlicz(_) => false,
            LagrangianSpec::LorentzWeak { .. } | LagrangianSpec::Power { .. } => true,
            LagrangianSpec::SupFamily(m) => m.iter().all(|m| m.offset == 0.0),
        }
    }

    /// `L(ξ)` at the potential `u`.
    pub fn evaluate(&self, u: &Potential, xi: &GridField) -> f64 {
        self.evaluate_weighted(&u.weighted(xi))
    }

    /// `L` on an arbitrary finite weighted set.
    pub fn evaluate_weighted(&self, wv: &WeightedValues) -> f64 {
        match self {
            LagrangianSpec::Orlicz(chi) => compensated_sum(
                wv.values()
                    .iter()
                    .zip(wv.weights())
                    .map(|(&v, &w)| chi.eval(v) * w),
            ),
            LagrangianSpec::Power { p } => power_norm(wv, *p),
            LagrangianSpec::LorentzWeak { alpha } => lorentz_weak(wv, *alpha),
            LagrangianSpec::SupFamily(members) => members
                .iter()
                .map(|m| {
                    m.offset
                        + hardy_littlewood_sup(&m.profile, wv)
                            .expect("sup family member mass differs from the measure")
                })
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// A constant `A` with `|L(ξ) − L(η)| ≤ A ‖ξ − η‖_sup` whenever
    /// `‖ξ‖, ‖η‖ ≤ radius` on unit-mass spaces.
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        match self {
            LagrangianSpec::Power { .. } | LagrangianSpec::LorentzWeak { .. } => 1.0,
            LagrangianSpec::SupFamily(members) => members
                .iter()
                .map(|m| m.profile.integral_of(f64::abs))
                .fold(0.0, f64::max),
            LagrangianSpec::Orlicz(chi) => {
                // slopes of a convex function on [−R, R] are bounded by the
                // outer secant slopes
                let d = 1e-3 * radius.max(1.0);
                let right = (chi.eval(radius + d) - chi.eval(radius)) / d;
                let left = (chi.eval(-radius - d) - chi.eval(-radius)) / d;
                right.abs().max(left.abs())
            }
        }
    }
}

fn power_norm(wv: &WeightedValues, p: f64) -> f64 {
    let terms = wv.values().iter().zip(wv.weights());
    if p == 1.0 {
        compensated_sum(terms.map(|(v, w)| v.abs() * w))
    } else if p == 2.0 {
        compensated_sum(terms.map(|(v, w)| v * v * w)).sqrt()
    } else {
        compensated_sum(terms.map(|(v, w)| v.abs().powf(p) * w)).powf(1.0 / p)
    }
}

/// `sup_s s^{-α} ∫_0^s |ξ|*(σ) dσ`, taken over the breakpoints of `|ξ|*` and
/// the interior critical point of each linear piece of the prefix integral.
fn lorentz_weak(wv: &WeightedValues, alpha: f64) -> f64 {
    let r = decreasing_rearrangement(&wv.map_values(f64::abs));
    let b = r.breakpoints();
    let mut best = 0.0f64;
    let mut prefix = 0.0;
    for (j, &v) in r.levels().iter().enumerate() {
        let (s0, s1) = (b[j], b[j + 1]);
        if v > 0.0 && j > 0 {
            let s = alpha * (prefix - v * s0) / ((1.0 - alpha) * v);
            if s > s0 && s < s1 {
                best = best.max((prefix + v * (s - s0)) / s.powf(alpha));
            }
        }
        prefix += v * (s1 - s0);
        best = best.max(prefix / s1.powf(alpha));
    }
    best
}

/// Reads sup-family members, one per line: `offset, level, length, level,
/// length, ...`. Blank lines and lines starting with `#` are skipped.
pub fn parse_sup_family(content: &str) -> Result<Vec<SupMember>> {
    let mut members = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::InvalidInput(format!("line {}: {what}", lineno + 1));
        let nums = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("not a list of numbers"))?;
        if nums.len() < 3 || nums.len() % 2 == 0 {
            return Err(bad("expected offset followed by level,length pairs"));
        }
        let pairs: Vec<(f64, f64)> = nums[1..].chunks(2).map(|c| (c[0], c[1])).collect();
        let profile = StepFunction::from_levels_and_lengths(&pairs).map_err(|e| bad(&e.to_string()))?;
        members.push(SupMember {
            offset: nums[0],
            profile,
        });
    }
    Ok(members)
}

/// Outcome of comparing `L` on two equidistributed inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub discrepancy: f64,
    pub equidistribution: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `|L(ξ) − L(η)|` for `(ξ, μ_u) ∼ (η, μ_v)`.
pub fn check_invariance(
    spec: &LagrangianSpec,
    u: &Potential,
    xi: &GridField,
    v: &Potential,
    eta: &GridField,
    tol: f64,
) -> Result<InvarianceReport> {
    check_invariance_weighted(spec, &u.weighted(xi), &v.weighted(eta), tol)
}

/// [`check_invariance`] on arbitrary weighted sets, e.g. a grid field and
/// its θ-transfer to another potential.
pub fn check_invariance_weighted(
    spec: &LagrangianSpec,
    a: &WeightedValues,
    b: &WeightedValues,
    tol: f64,
) -> Result<InvarianceReport> {
    let equidistribution = equidistribution_discrepancy(a, b, tol)?;
    if equidistribution > tol {
        return Err(Error::NotEquidistributed {
            discrepancy: equidistribution,
        });
    }
    let la = spec.evaluate_weighted(a);
    let lb = spec.evaluate_weighted(b);
    let radius = a.sup_norm().max(b.sup_norm());
    let tolerance = tol * spec.lipschitz_bound(radius).max(1.0) * la.abs().max(lb.abs()).max(1.0);
    let discrepancy = (la - lb).abs();
    Ok(InvarianceReport {
        discrepancy,
        equidistribution,
        tolerance,
        pass: discrepancy <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    /// Largest `L((1−λ)ξ + λη) − (1−λ)L(ξ) − λL(η)` seen; negative when
    /// every sample is strictly convex.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Tests the convexity inequality at the midpoint and at `samples` random
/// convex combinations of `ξ` and `η`.
pub fn check_fiber_convexity(
    spec: &LagrangianSpec,
    u: &Potential,
    xi: &GridField,
    eta: &GridField,
    samples: usize,
    seed: u64,
) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lx = spec.evaluate(u, xi);
    let le = spec.evaluate(u, eta);
    let tolerance = 1e-10 * lx.abs().max(le.abs()).max(1.0);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=samples {
        let lambda = if k == 0 { 0.5 } else { rng.gen::<f64>() };
        let mix = xi.lerp(eta, lambda);
        let gap = spec.evaluate(u, &mix) - ((1.0 - lambda) * lx + lambda * le);
        worst = worst.max(gap);
    }
    ConvexityReport {
        worst_violation: worst,
        tolerance,
        samples: samples + 1,
        pass: worst <= tolerance,
    }
}

/// Empirical Lipschitz constant in the sup norm: the largest
/// `|L(ξ) − L(η)| / ‖ξ − η‖_sup` over `trials` random potentials and random
/// pairs with `‖ξ‖, ‖η‖ ≤ radius`.
pub fn estimate_lipschitz(
    spec: &LagrangianSpec,
    grid: &Grid,
    radius: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..trials {
        let u = fixtures::random_potential(grid, &mut rng, 0.5);
        let xi = grid.zeros().map(|_| radius * (2.0 * rng.gen::<f64>() - 1.0));
        let eta = if rng.gen_bool(0.5) {
            grid.zeros().map(|_| radius * (2.0 * rng.gen::<f64>() - 1.0))
        } else {
            // small perturbations probe the local slope
            let scale = radius * 10f64.powf(-rng.gen_range(1.0..4.0));
            xi.map(|v| (v + scale * (2.0 * rng.gen::<f64>() - 1.0)).clamp(-radius, radius))
        };
        let d = xi.sup_distance(&eta);
        if d == 0.0 {
            continue;
        }
        let ratio = (spec.evaluate(&u, &xi) - spec.evaluate(&u, &eta)).abs() / d;
        best = best.max(ratio);
    }
    best
}

/// One entry of a strong-continuity schedule: a base field and a perturbed
/// copy on some potential (the resolution may change from step to step).
#[derive(Debug, Clone)]
pub struct ContinuityStep {
    pub potential: Potential,
    pub base: GridField,
    pub perturbed: GridField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// `μ_u` mass of the cells where the perturbed field differs.
    pub masses: Vec<f64>,
    pub discrepancies: Vec<f64>,
    pub pass: bool,
}

/// Reports `|L(ξ_k) − L(ξ)|` along the schedule; passes when every step
/// whose perturbation mass is below `tol_mass` has discrepancy below `tol`.
pub fn check_strong_continuity(
    spec: &LagrangianSpec,
    schedule: &[ContinuityStep],
    tol: f64,
    tol_mass: f64,
) -> ContinuityReport {
    let mut masses = Vec::with_capacity(schedule.len());
    let mut discrepancies = Vec::with_capacity(schedule.len());
    let mut pass = true;
    for step in schedule {
        let u = &step.potential;
        let inv = 1.0 / u.grid().cells() as f64;
        let mass = compensated_sum(
            step.base
                .values()
                .iter()
                .zip(step.perturbed.values())
                .zip(u.density().values())
                .filter(|((a, b), _)| a != b)
                .map(|(_, r)| r * inv),
        );
        let d = (spec.evaluate(u, &step.perturbed) - spec.evaluate(u, &step.base)).abs();
        if mass < tol_mass && d >= tol {
            pass = false;
        }
        masses.push(mass);
        discrepancies.push(d);
    }
    ContinuityReport {
        masses,
        discrepancies,
        pass,
    }
}
