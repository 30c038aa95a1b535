//! Paths of potentials, their velocities, and the flows that realize Mabuchi
//! parallel transport and Hamiltonian diffeomorphisms.
//!
//! Along a path `u(t)` the time dependent vector field
//! `V(t) = −½ grad_{u(t)} u̇(t) = −½ ∇u̇ / ρ_{u(t)}` generates maps `φ(t)`
//! carrying `μ_{u(0)}` to `μ_{u(t)}`. A tangent vector `η` at `u(0)` is
//! transported to `η ∘ φ(t)⁻¹`, which is covariantly constant for
//! `∇_t ξ = ξ̇ − ½ (du̇, dξ)_u`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Potential};

/// How a path is read between its knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Linear between knots; the velocity is the difference quotient.
    PiecewiseLinear,
    /// Knots of a solver run; velocities use second-order differences.
    SolverNative,
}

/// A time-sampled path `t_0 < … < t_m` of potentials on one grid.
#[derive(Debug, Clone)]
pub struct PotentialPath {
    times: Vec<f64>,
    knots: Vec<Potential>,
    interpolation: Interpolation,
}

impl PotentialPath {
    pub fn new(times: Vec<f64>, knots: Vec<Potential>, interpolation: Interpolation) -> Result<Self> {
        if knots.len() < 2 || times.len() != knots.len() {
            return Err(Error::InvalidInput(format!(
                "a path needs at least two knots with one time each ({} times, {} knots)",
                times.len(),
                knots.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("knot times must increase strictly".into()));
        }
        let grid = knots[0].grid();
        if knots.iter().any(|k| k.grid() != grid) {
            return Err(Error::GridMismatch("path knots live on different grids".into()));
        }
        if interpolation == Interpolation::PiecewiseLinear {
            for (k, w) in knots.windows(2).enumerate() {
                let mid = w[0].density().lerp(w[1].density(), 0.5).min();
                if mid <= 0.0 {
                    return Err(Error::PositivityLoss {
                        time: 0.5 * (times[k] + times[k + 1]),
                        cell: 0,
                    });
                }
            }
        }
        Ok(Self {
            times,
            knots,
            interpolation,
        })
    }

    /// Knots at `m + 1` equally spaced times on `[a, b]`.
    pub fn uniform(a: f64, b: f64, knots: Vec<Potential>, interpolation: Interpolation) -> Result<Self> {
        let m = knots.len().saturating_sub(1).max(1);
        let times = (0..knots.len())
            .map(|k| if k == m { b } else { a + (b - a) * k as f64 / m as f64 })
            .collect();
        Self::new(times, knots, interpolation)
    }

    /// The straight segment from `start` to `end` with `segments` pieces.
    pub fn linear(start: &Potential, end: &Potential, a: f64, b: f64, segments: usize) -> Result<Self> {
        let segments = segments.max(1);
        let knots = (0..=segments)
            .map(|k| match k {
                0 => start.clone(),
                k if k == segments => end.clone(),
                k => start.lerp(end, k as f64 / segments as f64),
            })
            .collect();
        Self::uniform(a, b, knots, Interpolation::PiecewiseLinear)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knots(&self) -> &[Potential] {
        &self.knots
    }

    pub fn knot(&self, k: usize) -> &Potential {
        &self.knots[k]
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn grid(&self) -> &Grid {
        self.knots[0].grid()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    /// The path run backwards over the same time interval.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.start(), self.end());
        Self {
            times: self.times.iter().rev().map(|t| a + b - t).collect(),
            knots: self.knots.iter().rev().cloned().collect(),
            interpolation: self.interpolation,
        }
    }

    /// Index `k` of the interval `[t_k, t_{k+1}]` containing `t`.
    pub fn interval_of(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.intervals() - 1)
    }

    /// The potential at time `t`, linear between knots.
    pub fn potential_at(&self, t: f64) -> Potential {
        let k = self.interval_of(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let lambda = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        if lambda == 0.0 {
            return self.knots[k].clone();
        }
        if lambda == 1.0 {
            return self.knots[k + 1].clone();
        }
        self.knots[k].lerp(&self.knots[k + 1], lambda)
    }
}

/// Velocities of a path: difference quotients per interval and
/// representative values at the knots.
#[derive(Debug, Clone)]
pub struct PathVelocity {
    /// `(u_{k+1} − u_k)/(t_{k+1} − t_k)`, one per interval.
    pub intervals: Vec<GridField>,
    /// Right derivatives (piecewise-linear; the last knot takes the left
    /// one) or second-order differences (solver-native), one per knot.
    pub knots: Vec<GridField>,
}

/// Second-order derivative estimates at the knots of a nonuniform sequence.
pub(crate) fn knot_derivatives(times: &[f64], values: &[&GridField]) -> Vec<GridField> {
    let m = values.len() - 1;
    if m == 1 {
        let q = values[1].axpy(-1.0, values[0]).map(|v| v / (times[1] - times[0]));
        return vec![q.clone(), q];
    }
    let three_point = |k0: usize, at: usize| {
        // derivative at times[at] of the quadratic through k0, k0+1, k0+2
        let (a, b, c) = (times[k0], times[k0 + 1], times[k0 + 2]);
        let x = times[at];
        let wa = ((x - b) + (x - c)) / ((a - b) * (a - c));
        let wb = ((x - a) + (x - c)) / ((b - a) * (b - c));
        let wc = ((x - a) + (x - b)) / ((c - a) * (c - b));
        let (fa, fb, fc) = (values[k0], values[k0 + 1], values[k0 + 2]);
        fa.zip_map(fb, |p, q| wa * p + wb * q).zip_map(fc, |s, r| s + wc * r)
    };
    (0..=m)
        .map(|k| match k {
            0 => three_point(0, 0),
            k if k == m => three_point(m - 2, m),
            k => three_point(k - 1, k),
        })
        .collect()
}

pub fn velocity(path: &PotentialPath) -> PathVelocity {
    let intervals: Vec<GridField> = (0..path.intervals())
        .map(|k| {
            let dt = path.times[k + 1] - path.times[k];
            path.knots[k + 1]
                .field()
                .zip_map(path.knots[k].field(), |b, a| (b - a) / dt)
        })
        .collect();
    let knots = match path.interpolation {
        Interpolation::PiecewiseLinear => {
            let mut v = intervals.clone();
            v.push(intervals.last().unwrap().clone());
            v
        }
        Interpolation::SolverNative => {
            let fields: Vec<&GridField> = path.knots.iter().map(Potential::field).collect();
            knot_derivatives(&path.times, &fields)
        }
    };
    PathVelocity { intervals, knots }
}

/// A map of the torus sampled at the grid points: `x ↦ x + displacement(x)`
/// with unwrapped displacements, plus the determinant of its differential.
#[derive(Debug, Clone)]
pub struct TransportMap {
    grid: Grid,
    dx: GridField,
    dy: GridField,
    jacobian: GridField,
}

impl TransportMap {
    pub fn identity(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            dx: grid.zeros(),
            dy: grid.zeros(),
            jacobian: grid.constant(1.0),
        }
    }

    fn from_positions(grid: &Grid, points: &[(f64, f64)]) -> Self {
        let n = grid.n();
        let h = grid.cell_width();
        let mut dx = Vec::with_capacity(n * n);
        let mut dy = Vec::with_capacity(n * n);
        for (c, &(x, y)) in points.iter().enumerate() {
            dx.push(x - (c / n) as f64 * h);
            dy.push(y - (c % n) as f64 * h);
        }
        let dx = GridField::from_vec(n, dx);
        let dy = GridField::from_vec(n, dy);
        let (dxx, dxy) = grid.gradient(&dx);
        let (dyx, dyy) = grid.gradient(&dy);
        let jacobian = GridField::from_vec(
            n,
            (0..n * n)
                .map(|k| {
                    (1.0 + dxx.values()[k]) * (1.0 + dyy.values()[k])
                        - dxy.values()[k] * dyx.values()[k]
                })
                .collect(),
        );
        Self {
            grid: grid.clone(),
            dx,
            dy,
            jacobian,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unwrapped displacement components.
    pub fn displacement(&self) -> (&GridField, &GridField) {
        (&self.dx, &self.dy)
    }

    pub fn jacobian(&self) -> &GridField {
        &self.jacobian
    }

    /// Image of grid point `(i, j)`, reduced to `[0, 1)²`.
    pub fn target(&self, i: usize, j: usize) -> (f64, f64) {
        let (x, y) = self.unwrapped(i * self.grid.n() + j);
        (x.rem_euclid(1.0), y.rem_euclid(1.0))
    }

    fn unwrapped(&self, c: usize) -> (f64, f64) {
        let n = self.grid.n();
        let h = self.grid.cell_width();
        (
            (c / n) as f64 * h + self.dx.values()[c],
            (c % n) as f64 * h + self.dy.values()[c],
        )
    }

    fn positions(&self) -> Vec<(f64, f64)> {
        (0..self.grid.cells()).map(|c| self.unwrapped(c)).collect()
    }

    /// Largest torus distance between the images of the same grid point.
    pub fn distance(&self, other: &TransportMap) -> f64 {
        let wrap = |d: f64| (d + 0.5).rem_euclid(1.0) - 0.5;
        (0..self.grid.cells())
            .map(|c| {
                let (ax, ay) = self.unwrapped(c);
                let (bx, by) = other.unwrapped(c);
                wrap(ax - bx).hypot(wrap(ay - by))
            })
            .fold(0.0, f64::max)
    }

    /// `max |ρ_after(φ(x))·J(x) − ρ_before(x)|`, the defect of `φ` as a map
    /// from `μ_before` to `μ_after`.
    pub fn density_defect(&self, before: &Potential, after: &Potential) -> f64 {
        let moved = pullback(after.density(), self);
        let n = self.grid.n();
        (0..n * n)
            .map(|k| (moved.values()[k] * self.jacobian.values()[k] - before.density().values()[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// `ξ ∘ φ`: trigonometric interpolation on spectral grids, periodic
/// bilinear otherwise. Points that do not move keep their value exactly.
pub fn pullback(xi: &GridField, phi: &TransportMap) -> GridField {
    let interp = phi.grid.interpolator(xi);
    let n = phi.grid.n();
    let data = (0..n * n)
        .into_par_iter()
        .map(|c| {
            if phi.dx.values()[c] == 0.0 && phi.dy.values()[c] == 0.0 {
                xi.values()[c]
            } else {
                let (x, y) = phi.unwrapped(c);
                interp.eval(x, y)
            }
        })
        .collect();
    GridField::from_vec(n, data)
}

/// Velocity field sampled on the grid.
type GridVelocity = (GridField, GridField);

/// Classical RK4 for `ẋ = v(t, x)` on every point, with `v` sampled on the
/// grid by `field(t)` and interpolated with periodic cubics. A substep that moves any
/// point by more than one cell is rejected.
fn integrate<F>(grid: &Grid, points: &mut [(f64, f64)], t0: f64, t1: f64, substeps: usize, mut field: F) -> Result<()>
where
    F: FnMut(f64) -> GridVelocity,
{
    let substeps = substeps.max(1);
    let dt = (t1 - t0) / substeps as f64;
    let h = grid.cell_width();
    let mut start = field(t0);
    for s in 0..substeps {
        let t = t0 + s as f64 * dt;
        let mid = field(t + 0.5 * dt);
        let end = field(if s + 1 == substeps { t1 } else { t + dt });
        let sample = |v: &GridVelocity, x: f64, y: f64| (v.0.cubic(x, y), v.1.cubic(x, y));
        let worst = points
            .par_iter_mut()
            .map(|p| {
                let (x, y) = *p;
                let k1 = sample(&start, x, y);
                let k2 = sample(&mid, x + 0.5 * dt * k1.0, y + 0.5 * dt * k1.1);
                let k3 = sample(&mid, x + 0.5 * dt * k2.0, y + 0.5 * dt * k2.1);
                let k4 = sample(&end, x + dt * k3.0, y + dt * k3.1);
                let mx = dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                let my = dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                *p = (x + mx, y + my);
                mx.hypot(my)
            })
            .reduce(|| 0.0, f64::max);
        if worst > h {
            return Err(Error::StepUnstable {
                displacement: worst,
                cell_width: h,
            });
        }
        start = end;
    }
    Ok(())
}

fn grid_points(grid: &Grid) -> Vec<(f64, f64)> {
    let n = grid.n();
    let h = grid.cell_width();
    (0..n * n).map(|c| ((c / n) as f64 * h, (c % n) as f64 * h)).collect()
}

/// Grid velocity of `−½ ∇u̇/ρ_{u(t)}` on interval `k`, with `ρ` linear in time.
struct TransportField<'a> {
    path: &'a PotentialPath,
    gradients: Vec<(GridField, GridField)>,
}

impl<'a> TransportField<'a> {
    fn new(path: &'a PotentialPath) -> Self {
        let grid = path.grid();
        let gradients = velocity(path)
            .intervals
            .iter()
            .map(|q| grid.gradient(q))
            .collect();
        Self { path, gradients }
    }

    fn at(&self, k: usize, t: f64) -> GridVelocity {
        let (t0, t1) = (self.path.times[k], self.path.times[k + 1]);
        let lambda = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let rho = self.path.knots[k]
            .density()
            .lerp(self.path.knots[k + 1].density(), lambda);
        let (gx, gy) = &self.gradients[k];
        (
            gx.zip_map(&rho, |g, r| -0.5 * g / r),
            gy.zip_map(&rho, |g, r| -0.5 * g / r),
        )
    }
}

/// `φ(t_k)` at every knot, `φ(t_0)` being the identity. Each knot interval
/// is integrated with `substeps` RK4 steps.
pub fn transport_flow(path: &PotentialPath, substeps: usize) -> Result<Vec<TransportMap>> {
    let grid = path.grid();
    let field = TransportField::new(path);
    let mut points = grid_points(grid);
    let mut maps = vec![TransportMap::identity(grid)];
    for k in 0..path.intervals() {
        integrate(grid, &mut points, path.times[k], path.times[k + 1], substeps, |t| field.at(k, t))?;
        maps.push(TransportMap::from_positions(grid, &points));
    }
    Ok(maps)
}

/// `φ(t_k)⁻¹` at every knot, obtained by integrating the transport field
/// backwards from `t_k` to `t_0`.
pub fn inverse_transport_flow(path: &PotentialPath, substeps: usize) -> Result<Vec<TransportMap>> {
    let grid = path.grid();
    let field = TransportField::new(path);
    let mut maps = vec![TransportMap::identity(grid)];
    for target in 1..path.len() {
        let mut points = grid_points(grid);
        for k in (0..target).rev() {
            integrate(grid, &mut points, path.times[k + 1], path.times[k], substeps, |t| field.at(k, t))?;
        }
        maps.push(TransportMap::from_positions(grid, &points));
    }
    Ok(maps)
}

/// Parallel transport of `η ∈ T_{u(t_0)}` to every knot: `η ∘ φ(t_k)⁻¹`.
pub fn parallel_transport(path: &PotentialPath, eta: &GridField, substeps: usize) -> Result<Vec<GridField>> {
    Ok(inverse_transport_flow(path, substeps)?
        .iter()
        .map(|inv| pullback(eta, inv))
        .collect())
}

/// `∇_t ξ = ξ̇ − ½ (du̇, dξ)_u` at every knot, with `ξ̇` and `u̇` from the
/// same differencing as [`velocity`].
pub fn covariant_derivative(path: &PotentialPath, field: &[GridField]) -> Result<Vec<GridField>> {
    if field.len() != path.len() {
        return Err(Error::InvalidInput(format!(
            "{} field samples for {} knots",
            field.len(),
            path.len()
        )));
    }
    let udot = velocity(path).knots;
    let xi_dot = match path.interpolation {
        Interpolation::PiecewiseLinear => {
            let mut q: Vec<GridField> = (0..path.intervals())
                .map(|k| {
                    let dt = path.times[k + 1] - path.times[k];
                    field[k + 1].zip_map(&field[k], |b, a| (b - a) / dt)
                })
                .collect();
            q.push(q.last().unwrap().clone());
            q
        }
        Interpolation::SolverNative => {
            let refs: Vec<&GridField> = field.iter().collect();
            knot_derivatives(&path.times, &refs)
        }
    };
    Ok((0..path.len())
        .map(|k| {
            let metric = path.knots[k].inner_product_du(&udot[k], &field[k]);
            xi_dot[k].axpy(-0.5, &metric)
        })
        .collect())
}

/// `sgrad ζ = (−∂_y ζ, ∂_x ζ)/ρ_u` on the grid.
fn symplectic_gradient(u: &Potential, zeta: &GridField) -> GridVelocity {
    let (zx, zy) = u.grid().gradient(zeta);
    (
        zy.zip_map(u.density(), |g, r| -g / r),
        zx.zip_map(u.density(), |g, r| g / r),
    )
}

/// Time-1 map of the Hamiltonian flow of `sgrad ζ_t` for `ω_u`, with `ζ_t`
/// supplied as a function of `t ∈ [0, 1]`.
pub fn symplectic_flow_with<Z>(zeta: Z, u: &Potential, substeps: usize) -> Result<TransportMap>
where
    Z: Fn(f64) -> GridField,
{
    let grid = u.grid();
    let mut points = grid_points(grid);
    integrate(grid, &mut points, 0.0, 1.0, substeps, |t| symplectic_gradient(u, &zeta(t)))?;
    Ok(TransportMap::from_positions(grid, &points))
}

/// [`symplectic_flow_with`] for `ζ` sampled at equally spaced times on
/// `[0, 1]` and read linearly in between. A single sample is autonomous.
pub fn symplectic_flow(zeta: &[GridField], u: &Potential, substeps: usize) -> Result<TransportMap> {
    if zeta.is_empty() {
        return Err(Error::InvalidInput("empty Hamiltonian family".into()));
    }
    let last = zeta.len() - 1;
    symplectic_flow_with(
        |t| {
            if last == 0 {
                return zeta[0].clone();
            }
            let s = (t * last as f64).clamp(0.0, last as f64);
            let k = (s.floor() as usize).min(last - 1);
            zeta[k].lerp(&zeta[k + 1], s - k as f64)
        },
        u,
        substeps,
    )
}

/// The `k`-step composition `φ^{(k−1)/k}_{1/k} ∘ … ∘ φ^0_{1/k}`, where
/// `φ^s_{1/k}` is the time-`1/k` map of the autonomous flow of `sgrad ζ_s`.
pub fn composition_scheme<Z>(zeta: Z, u: &Potential, k: usize, substeps_per_step: usize) -> Result<TransportMap>
where
    Z: Fn(f64) -> GridField,
{
    if k == 0 {
        return Err(Error::InvalidInput("composition needs k >= 1".into()));
    }
    let grid = u.grid();
    let mut points = grid_points(grid);
    for j in 0..k {
        let frozen = symplectic_gradient(u, &zeta(j as f64 / k as f64));
        let (t0, t1) = (j as f64 / k as f64, (j + 1) as f64 / k as f64);
        integrate(grid, &mut points, t0, t1, substeps_per_step, |_| frozen.clone())?;
    }
    Ok(TransportMap::from_positions(grid, &points))
}

impl TransportMap {
    /// Composition `other ∘ self`.
    pub fn then(&self, other: &TransportMap) -> TransportMap {
        let pts: Vec<(f64, f64)> = self
            .positions()
            .into_iter()
            .map(|(x, y)| (x + other.dx.cubic(x, y), y + other.dy.cubic(x, y)))
            .collect();
        TransportMap::from_positions(&self.grid, &pts)
    }
}
