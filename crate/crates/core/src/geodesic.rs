//! ε-geodesics, weak geodesics and ε-Jacobi fields.
//!
//! An ε-geodesic solves `∇_t u̇ = ε F(u)`, which on the flat torus reads
//! `ü − ½|∇u̇|²/ρ_u = ε/ρ_u`. With `m` uniform time steps and interior knots
//! `u_1 … u_{m−1}` the discrete system is, at every interior knot,
//!
//! ```text
//! (u_{k+1} − 2u_k + u_{k−1})/Δt² − (½|∇w_k|² + ε)/ρ_k = 0,   w_k = (u_{k+1} − u_{k−1})/(2Δt),
//! ```
//!
//! solved by damped Newton. Each Newton correction comes from restarted
//! GMRES on the exact Jacobian, preconditioned slice by slice with
//! `D_t² + c̄_k Δ`, which is diagonal in space after a Fourier transform and
//! tridiagonal in time. Weak geodesics are the limits of ε-geodesics as ε
//! is halved from 1 with warm starts.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Potential};
use crate::linalg::{gmres, solve_tridiagonal};
use crate::transport::{Interpolation, PotentialPath};

/// Data of the two-point problem for `∇_t u̇ = ε F(u)` on `[a, b]`.
#[derive(Debug, Clone)]
pub struct EpsGeodesicProblem {
    pub start: Potential,
    pub end: Potential,
    pub interval: (f64, f64),
    pub epsilon: f64,
    pub time_steps: usize,
    pub solver_tol: f64,
    pub max_iter: usize,
}

pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 60;
const JACOBI_SOLVER_TOL: f64 = 1e-12;

impl EpsGeodesicProblem {
    pub fn new(
        start: Potential,
        end: Potential,
        interval: (f64, f64),
        epsilon: f64,
        time_steps: usize,
    ) -> Result<Self> {
        let p = Self {
            start,
            end,
            interval,
            epsilon,
            time_steps,
            solver_tol: DEFAULT_SOLVER_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tolerance(mut self, solver_tol: f64) -> Self {
        self.solver_tol = solver_tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.start.grid() != self.end.grid() {
            return Err(Error::GridMismatch("endpoints live on different grids".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.time_steps < 2 {
            return Err(Error::InvalidInput("at least two time steps are required".into()));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::InvalidInput("solver tolerance must be positive".into()));
        }
        if !(self.interval.1 > self.interval.0) {
            return Err(Error::InvalidInput("time interval must have b > a".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.start.grid()
    }

    fn dt(&self) -> f64 {
        (self.interval.1 - self.interval.0) / self.time_steps as f64
    }

    fn times(&self) -> Vec<f64> {
        let (a, b) = self.interval;
        (0..=self.time_steps)
            .map(|k| {
                if k == self.time_steps {
                    b
                } else {
                    a + (b - a) * k as f64 / self.time_steps as f64
                }
            })
            .collect()
    }

    /// The same problem with the endpoints exchanged.
    pub fn reversed(&self) -> Self {
        Self {
            start: self.end.clone(),
            end: self.start.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicSolution {
    pub path: PotentialPath,
    /// Sup norm of the discrete equation over interior space-time nodes.
    pub residual_norm: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Residual after each Newton iteration, starting with the initial guess.
    pub history: Vec<f64>,
    pub linear_iterations: usize,
}

/// Per-slice coefficients of the residual and its Jacobian.
struct Slice {
    wx: GridField,
    wy: GridField,
    rho: GridField,
    /// `(½|∇w|² + ε)/ρ²`
    stiffness: GridField,
}

struct Evaluation {
    residual: Vec<GridField>,
    sup: f64,
    slices: Vec<Slice>,
}

struct Positivity {
    time_index: usize,
    cell: usize,
}

fn evaluate(grid: &Grid, state: &[GridField], dt: f64, eps: f64) -> std::result::Result<Evaluation, Positivity> {
    let m = state.len() - 1;
    let inv_dt2 = 1.0 / (dt * dt);
    let inv_2dt = 0.5 / dt;
    let parts: Vec<std::result::Result<(GridField, Slice), Positivity>> = (1..m)
        .into_par_iter()
        .map(|k| {
            let lap = grid.laplacian(&state[k]);
            let rho = lap.map(|l| 1.0 + 0.5 * l);
            if let Some(cell) = rho.values().iter().position(|&r| r <= 0.0) {
                return Err(Positivity { time_index: k, cell });
            }
            let w = state[k + 1].zip_map(&state[k - 1], |a, b| (a - b) * inv_2dt);
            let (wx, wy) = grid.gradient(&w);
            let n2 = rho.len();
            let mut res = Vec::with_capacity(n2);
            let mut stiff = Vec::with_capacity(n2);
            let (up, mid, down) = (state[k + 1].values(), state[k].values(), state[k - 1].values());
            for c in 0..n2 {
                let r = rho.values()[c];
                let forcing = 0.5 * (wx.values()[c].powi(2) + wy.values()[c].powi(2)) + eps;
                res.push((up[c] - 2.0 * mid[c] + down[c]) * inv_dt2 - forcing / r);
                stiff.push(forcing / (r * r));
            }
            let n = grid.n();
            Ok((
                GridField::from_vec(n, res),
                Slice {
                    wx,
                    wy,
                    rho,
                    stiffness: GridField::from_vec(n, stiff),
                },
            ))
        })
        .collect();
    let mut residual = Vec::with_capacity(m - 1);
    let mut slices = Vec::with_capacity(m - 1);
    for p in parts {
        let (r, s) = p?;
        residual.push(r);
        slices.push(s);
    }
    let sup = residual.iter().map(GridField::sup_norm).fold(0.0, f64::max);
    Ok(Evaluation {
        residual,
        sup,
        slices,
    })
}

/// Jacobian-vector product of the discrete system at the evaluated state.
fn apply_jacobian(grid: &Grid, slices: &[Slice], dt: f64, x: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let n2 = n * n;
    let interior = slices.len();
    let derivs: Vec<(GridField, GridField, GridField)> = (0..interior)
        .into_par_iter()
        .map(|j| grid.derivatives(&GridField::from_vec(n, x[j * n2..(j + 1) * n2].to_vec())))
        .collect();
    let inv_dt2 = 1.0 / (dt * dt);
    let inv_2dt = 0.5 / dt;
    out.par_chunks_mut(n2).enumerate().for_each(|(k, o)| {
        let s = &slices[k];
        let mid = &x[k * n2..(k + 1) * n2];
        let (lapx, (upx, upy), (dnx, dny)) = {
            let lap = derivs[k].2.values();
            let up = if k + 1 < interior {
                (Some(derivs[k + 1].0.values()), Some(derivs[k + 1].1.values()))
            } else {
                (None, None)
            };
            let dn = if k > 0 {
                (Some(derivs[k - 1].0.values()), Some(derivs[k - 1].1.values()))
            } else {
                (None, None)
            };
            (lap, up, dn)
        };
        for c in 0..n2 {
            let above = if k + 1 < interior { x[(k + 1) * n2 + c] } else { 0.0 };
            let below = if k > 0 { x[(k - 1) * n2 + c] } else { 0.0 };
            let dtx = upx.map_or(0.0, |v| v[c]) - dnx.map_or(0.0, |v| v[c]);
            let dty = upy.map_or(0.0, |v| v[c]) - dny.map_or(0.0, |v| v[c]);
            let advect = (s.wx.values()[c] * dtx + s.wy.values()[c] * dty) * inv_2dt / s.rho.values()[c];
            o[c] = (above - 2.0 * mid[c] + below) * inv_dt2 - advect + 0.5 * s.stiffness.values()[c] * lapx[c];
        }
    });
}

/// Approximate inverse of `D_t² + ½ c̄_k Δ` with `c̄_k` the slice mean of the
/// stiffness.
struct Preconditioner {
    grid: Grid,
    interior: usize,
    inv_dt2: f64,
    mean_stiffness: Vec<f64>,
}

impl Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.grid.n();
        let n2 = n * n;
        let spectral = self.grid.spectral();
        let hats: Vec<Vec<Complex64>> = (0..self.interior)
            .into_par_iter()
            .map(|k| spectral.forward_real(&r[k * n2..(k + 1) * n2]))
            .collect();
        let mut modes = vec![Vec::new(); n2];
        modes.par_iter_mut().enumerate().for_each(|(mode, column)| {
            let lambda = self.grid.laplacian_symbol(mode / n, mode % n);
            let diag: Vec<f64> = self
                .mean_stiffness
                .iter()
                .map(|s| -2.0 * self.inv_dt2 + 0.5 * s * lambda)
                .collect();
            let mut rhs: Vec<Complex64> = hats.iter().map(|h| h[mode]).collect();
            let mut scratch = Vec::new();
            solve_tridiagonal(&diag, self.inv_dt2, &mut rhs, &mut scratch);
            *column = rhs;
        });
        let slices: Vec<Vec<f64>> = (0..self.interior)
            .into_par_iter()
            .map(|k| spectral.inverse_real(modes.iter().map(|c| c[k]).collect()))
            .collect();
        for (k, s) in slices.into_iter().enumerate() {
            z[k * n2..(k + 1) * n2].copy_from_slice(&s);
        }
    }
}

/// Linear interpolation of the endpoints plus the scalar ε-correction
/// `(ε/2)(t − a)(t − b)`.
fn initial_guess(p: &EpsGeodesicProblem) -> Vec<GridField> {
    let times = p.times();
    let (a, b) = p.interval;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if k == 0 {
                return p.start.field().clone();
            }
            if k == p.time_steps {
                return p.end.field().clone();
            }
            let lambda = (t - a) / (b - a);
            let bump = 0.5 * p.epsilon * (t - a) * (t - b);
            p.start
                .field()
                .zip_map(p.end.field(), |x, y| (1.0 - lambda) * x + lambda * y + bump)
        })
        .collect()
}

/// Solves the ε-geodesic problem from the default initial guess.
pub fn solve_epsilon_geodesic(p: &EpsGeodesicProblem) -> Result<GeodesicSolution> {
    solve_epsilon_geodesic_from(p, None)
}

/// Solves the ε-geodesic problem, optionally warm-started from a path with
/// the same knot count (its endpoints are replaced by the problem's).
pub fn solve_epsilon_geodesic_from(
    p: &EpsGeodesicProblem,
    warm_start: Option<&PotentialPath>,
) -> Result<GeodesicSolution> {
    p.validate()?;
    if p.epsilon <= 0.0 {
        return Err(Error::InvalidInput(
            "ε-geodesics need ε > 0; use weak_geodesic for the limit".into(),
        ));
    }
    let grid = p.grid().clone();
    let m = p.time_steps;
    let n2 = grid.cells();
    let dt = p.dt();
    let mut state = match warm_start {
        Some(path) if path.len() == m + 1 && path.grid() == &grid => {
            let mut s: Vec<GridField> = path.knots().iter().map(|k| k.field().clone()).collect();
            s[0] = p.start.field().clone();
            s[m] = p.end.field().clone();
            s
        }
        Some(_) => {
            return Err(Error::InvalidInput("warm start does not match the problem".into()));
        }
        None => initial_guess(p),
    };
    let positivity_error = |e: Positivity| Error::PositivityLoss {
        time: p.interval.0 + e.time_index as f64 * dt,
        cell: e.cell,
    };
    let mut eval = evaluate(&grid, &state, dt, p.epsilon).map_err(positivity_error)?;
    let mut history = vec![eval.sup];
    let mut linear_iterations = 0;
    let mut iterations = 0;
    while eval.sup > p.solver_tol {
        if iterations >= p.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: eval.sup,
            });
        }
        iterations += 1;
        let rhs: Vec<f64> = eval
            .residual
            .iter()
            .flat_map(|r| r.values().iter().map(|v| -v))
            .collect();
        let pre = Preconditioner {
            grid: grid.clone(),
            interior: m - 1,
            inv_dt2: 1.0 / (dt * dt),
            mean_stiffness: eval.slices.iter().map(|s| s.stiffness.mean()).collect(),
        };
        let mut step = vec![0.0; (m - 1) * n2];
        let rtol = eval.sup.clamp(1e-10, 1e-2);
        let outcome = gmres(
            |x, y| apply_jacobian(&grid, &eval.slices, dt, x, y),
            |r, z| pre.apply(r, z),
            &rhs,
            &mut step,
            rtol,
            40,
            400,
        );
        linear_iterations += outcome.iterations;

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut last_failure = None;
        for _ in 0..=30 {
            let trial: Vec<GridField> = state
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    if k == 0 || k == m {
                        s.clone()
                    } else {
                        let d = &step[(k - 1) * n2..k * n2];
                        let mut v = s.clone();
                        v.values_mut().iter_mut().zip(d).for_each(|(a, b)| *a += lambda * b);
                        v
                    }
                })
                .collect();
            match evaluate(&grid, &trial, dt, p.epsilon) {
                Ok(e) if e.sup < eval.sup => {
                    accepted = Some((trial, e));
                    break;
                }
                Ok(_) => last_failure = None,
                Err(pos) => last_failure = Some(pos),
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((s, e)) => {
                state = s;
                eval = e;
                history.push(eval.sup);
            }
            None => {
                return Err(match last_failure {
                    Some(pos) => positivity_error(pos),
                    None => Error::NonConvergence {
                        iterations,
                        residual: eval.sup,
                    },
                });
            }
        }
    }
    let mut knots = Vec::with_capacity(m + 1);
    knots.push(p.start.clone());
    for field in state.into_iter().take(m).skip(1) {
        knots.push(Potential::new(field, &grid)?);
    }
    knots.push(p.end.clone());
    let path = PotentialPath::new(p.times(), knots, Interpolation::SolverNative)?;
    Ok(GeodesicSolution {
        path,
        residual_norm: eval.sup,
        epsilon: p.epsilon,
        iterations,
        history,
        linear_iterations,
    })
}

/// `c = ü ρ_u − ½|∇u̇|²` at the interior knots of a path, with second-order
/// differences in time. Equals ε along an ε-geodesic and 0 along a
/// geodesic.
#[derive(Debug, Clone)]
pub struct HcmaResidual {
    pub times: Vec<f64>,
    pub fields: Vec<GridField>,
}

impl HcmaResidual {
    /// `sup |c − target|`
    pub fn deviation_from(&self, target: f64) -> f64 {
        self.fields
            .iter()
            .flat_map(|f| f.values().iter())
            .fold(0.0, |m, v| m.max((v - target).abs()))
    }
}

pub fn hcma_residual(path: &PotentialPath) -> Result<HcmaResidual> {
    if path.len() < 3 {
        return Err(Error::InvalidInput("the residual needs at least three knots".into()));
    }
    let t = path.times();
    let grid = path.grid();
    let fields = (1..path.len() - 1)
        .into_par_iter()
        .map(|k| {
            let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
            let (a, b, c) = (path.knot(k - 1).field(), path.knot(k).field(), path.knot(k + 1).field());
            let second = a.zip_map(b, |x, y| 2.0 * (x / h1 - y / h1 - y / h2) / (h1 + h2))
                .zip_map(c, |s, z| s + 2.0 * z / (h2 * (h1 + h2)));
            let first = a
                .zip_map(b, |x, y| -h2 / (h1 * (h1 + h2)) * x + (h2 - h1) / (h1 * h2) * y)
                .zip_map(c, |s, z| s + h1 / (h2 * (h1 + h2)) * z);
            let (gx, gy) = grid.gradient(&first);
            let rho = path.knot(k).density();
            let n = grid.n();
            GridField::from_vec(
                n,
                (0..n * n)
                    .map(|i| {
                        second.values()[i] * rho.values()[i]
                            - 0.5 * (gx.values()[i].powi(2) + gy.values()[i].powi(2))
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(HcmaResidual {
        times: t[1..t.len() - 1].to_vec(),
        fields,
    })
}

/// Discretization and stopping parameters for weak geodesics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    pub time_steps: usize,
    pub solver_tol: f64,
    pub max_iter: usize,
    /// Continuation gives up below this ε.
    pub min_epsilon: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            time_steps: 32,
            solver_tol: DEFAULT_SOLVER_TOL,
            max_iter: DEFAULT_MAX_ITER,
            min_epsilon: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep {
    pub epsilon: f64,
    /// Sup distance to the previous ε-solution (infinite for the first).
    pub change: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct WeakGeodesic {
    pub path: PotentialPath,
    /// The last ε of the continuation.
    pub epsilon: f64,
    pub history: Vec<ContinuationStep>,
}

/// Sup distance between two paths with the same knots.
pub fn path_distance(a: &PotentialPath, b: &PotentialPath) -> f64 {
    a.knots()
        .iter()
        .zip(b.knots())
        .map(|(x, y)| x.field().sup_distance(y.field()))
        .fold(0.0, f64::max)
}

/// ε-continuation `ε = 1, ½, ¼, …` with warm starts, stopped when two
/// successive solutions are within `tol` in sup norm.
pub fn weak_geodesic(
    start: &Potential,
    end: &Potential,
    interval: (f64, f64),
    tol: f64,
    settings: &ContinuationSettings,
) -> Result<WeakGeodesic> {
    let mut problem = EpsGeodesicProblem::new(start.clone(), end.clone(), interval, 1.0, settings.time_steps)?
        .with_tolerance(settings.solver_tol)
        .with_max_iter(settings.max_iter);
    let first = solve_epsilon_geodesic(&problem)?;
    let mut history = vec![ContinuationStep {
        epsilon: 1.0,
        change: f64::INFINITY,
        iterations: first.iterations,
        residual: first.residual_norm,
    }];
    let mut current = first;
    loop {
        let epsilon = current.epsilon * 0.5;
        if epsilon < settings.min_epsilon {
            return Err(Error::NonConvergence {
                iterations: history.len(),
                residual: history.last().unwrap().change,
            });
        }
        problem = problem.with_epsilon(epsilon);
        let next = solve_epsilon_geodesic_from(&problem, Some(&current.path))?;
        let change = path_distance(&next.path, &current.path);
        history.push(ContinuationStep {
            epsilon,
            change,
            iterations: next.iterations,
            residual: next.residual_norm,
        });
        current = next;
        if change < tol {
            break;
        }
    }
    Ok(WeakGeodesic {
        path: current.path,
        epsilon: current.epsilon,
        history,
    })
}

/// An ε-Jacobi field sampled at the knots of the base solution.
#[derive(Debug, Clone)]
pub struct JacobiField {
    pub base: GeodesicSolution,
    pub field: Vec<GridField>,
}

fn perturbed(u: &Potential, direction: &GridField, delta: f64) -> Result<Potential> {
    Potential::new(u.field().axpy(delta, direction), u.grid()).map_err(|e| match e {
        Error::NotKahler { min_density } => Error::PerturbationTooLarge { min_density },
        other => other,
    })
}

/// `ξ ≈ (u^{+δ} − u^{−δ})/(2δ)`, where `u^{±δ}` solve the problem with
/// endpoints moved by `±δ` times the given directions. The perturbed solves
/// are warm-started from the base solution, and all three solves use a
/// tolerance of at most `1e-12` so the difference quotient is meaningful.
pub fn jacobi_field(
    p: &EpsGeodesicProblem,
    direction_start: &GridField,
    direction_end: &GridField,
    delta: f64,
) -> Result<JacobiField> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("δ must be positive".into()));
    }
    let tight = p.clone().with_tolerance(p.solver_tol.min(JACOBI_SOLVER_TOL));
    let shifted = |sign: f64| -> Result<EpsGeodesicProblem> {
        Ok(EpsGeodesicProblem {
            start: perturbed(&p.start, direction_start, sign * delta)?,
            end: perturbed(&p.end, direction_end, sign * delta)?,
            ..tight.clone()
        })
    };
    let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
    let base = solve_epsilon_geodesic(&tight)?;
    let (up, down) = rayon::join(
        || solve_epsilon_geodesic_from(&plus, Some(&base.path)),
        || solve_epsilon_geodesic_from(&minus, Some(&base.path)),
    );
    let (up, down) = (up?, down?);
    let field = up
        .path
        .knots()
        .iter()
        .zip(down.path.knots())
        .map(|(a, b)| a.field().zip_map(b.field(), |x, y| (x - y) / (2.0 * delta)))
        .collect();
    Ok(JacobiField { base, field })
}

/// Sup norm over knots `2 … m−2` of
/// `ρ ∇_t²ξ − ¼{{u̇, ξ}, u̇} ρ + (ε/2) ∇·(F(u) ∇ξ)`, with `∇_t` the
/// covariant derivative taken twice by centered differences.
pub fn jacobi_residual(sol: &GeodesicSolution, xi: &[GridField]) -> Result<f64> {
    let path = &sol.path;
    let m = path.len() - 1;
    if xi.len() != m + 1 {
        return Err(Error::InvalidInput(format!("{} field samples for {} knots", xi.len(), m + 1)));
    }
    if m < 4 {
        return Err(Error::InvalidInput("the Jacobi residual needs at least four steps".into()));
    }
    let t = path.times();
    let grid = path.grid();
    let centered = |f: &[GridField], k: usize| {
        let h = t[k + 1] - t[k - 1];
        f[k + 1].zip_map(&f[k - 1], |a, b| (a - b) / h)
    };
    let fields: Vec<GridField> = path.knots().iter().map(|k| k.field().clone()).collect();
    let udot: Vec<Option<GridField>> = (0..=m)
        .map(|k| (k > 0 && k < m).then(|| centered(&fields, k)))
        .collect();
    let covariant = |f: &[GridField], k: usize, ud: &GridField| {
        let u = path.knot(k);
        centered(f, k).axpy(-0.5, &u.inner_product_du(ud, &f[k]))
    };
    // ∇_t ξ at knots 1..m−1; padded so indices match knots
    let mut first = vec![grid.zeros(); m + 1];
    for k in 1..m {
        first[k] = covariant(xi, k, udot[k].as_ref().unwrap());
    }
    let worst = (2..m - 1)
        .into_par_iter()
        .map(|k| {
            let u = path.knot(k);
            let ud = udot[k].as_ref().unwrap();
            let second = covariant(&first, k, ud);
            let rho = u.density();
            let bracket = u.poisson_bracket(&u.poisson_bracket(ud, &xi[k]), ud);
            let f = u.f_density();
            let (gx, gy) = grid.gradient(&xi[k]);
            let (fx, _) = grid.gradient(&gx.zip_map(&f, |a, b| a * b));
            let (_, fy) = grid.gradient(&gy.zip_map(&f, |a, b| a * b));
            let n = grid.n();
            (0..n * n)
                .map(|c| {
                    let r = rho.values()[c];
                    let div = fx.values()[c] + fy.values()[c];
                    (r * second.values()[c] - 0.25 * bracket.values()[c] * r + 0.5 * sol.epsilon * div).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Outcome of [`monotone_limit_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    /// Per sequence index `j ≥ 1`: largest `v_j − v_{j−1}` over knots and
    /// cells (positive values break monotonicity).
    pub increases: Vec<f64>,
    /// Largest `v_lim − v_j` (the sequence must stay above its limit).
    pub undershoot: f64,
    /// Sup distance from each `v_j` to the limit path.
    pub distances: Vec<f64>,
    pub violations: usize,
    pub pass: bool,
}

/// Solves weak geodesics for decreasing endpoint sequences and their
/// limits, and checks that the paths decrease knot by knot towards the
/// limit path.
pub fn monotone_limit_check(
    starts: &[Potential],
    ends: &[Potential],
    limit_start: &Potential,
    limit_end: &Potential,
    interval: (f64, f64),
    tol: f64,
    settings: &ContinuationSettings,
) -> Result<MonotoneReport> {
    if starts.len() != ends.len() || starts.is_empty() {
        return Err(Error::InvalidInput("endpoint sequences must be nonempty and equally long".into()));
    }
    let paths = starts
        .par_iter()
        .zip(ends)
        .map(|(a, b)| weak_geodesic(a, b, interval, tol, settings).map(|w| w.path))
        .collect::<Result<Vec<_>>>()?;
    let limit = weak_geodesic(limit_start, limit_end, interval, tol, settings)?.path;
    let largest_gap = |upper: &PotentialPath, lower: &PotentialPath| {
        upper
            .knots()
            .iter()
            .zip(lower.knots())
            .map(|(a, b)| a.field().zip_map(b.field(), |x, y| y - x).max())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let increases: Vec<f64> = paths.windows(2).map(|w| largest_gap(&w[0], &w[1])).collect();
    let undershoot = paths.iter().map(|p| largest_gap(p, &limit)).fold(f64::NEG_INFINITY, f64::max);
    let distances: Vec<f64> = paths.iter().map(|p| path_distance(p, &limit)).collect();
    let violations = increases.iter().filter(|&&d| d > tol).count() + usize::from(undershoot > tol);
    let pass = violations == 0 && distances.last().is_some_and(|&d| d <= distances[0] + tol);
    Ok(MonotoneReport {
        increases,
        undershoot,
        distances,
        violations,
        pass,
    })
}
