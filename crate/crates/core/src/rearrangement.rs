//! Decreasing rearrangements of functions on finite weighted sets.
//!
//! For `ξ` on `(Y, ν)` the decreasing rearrangement `ξ*` is the decreasing,
//! left-continuous function on `(0, ν(Y)]` with `|{ξ* ≥ t}| = ν(ξ ≥ t)` for
//! every level `t`. On a finite set it is a step function whose steps are the
//! distinct values of `ξ`, each held for the total mass carrying that value.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::WeightedValues;

/// Default relative tolerance for distribution comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A left-continuous decreasing step function on `(0, M]`: value `levels[j]`
/// on `(breakpoints[j], breakpoints[j + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    /// `breakpoints` must start at 0 and increase strictly; `levels` must
    /// decrease strictly and have one entry fewer.
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || breakpoints.len() != levels.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints cannot carry {} levels",
                breakpoints.len(),
                levels.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidInput("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidInput("breakpoints must increase strictly".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) || levels.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("levels must decrease strictly".into()));
        }
        Ok(Self { breakpoints, levels })
    }

    /// Builds a step function from levels paired with interval lengths, in
    /// any order; equal levels are merged.
    pub fn from_levels_and_lengths(pairs: &[(f64, f64)]) -> Result<Self> {
        let values = pairs.iter().map(|p| p.0).collect();
        let weights = pairs.iter().map(|p| p.1).collect();
        Ok(decreasing_rearrangement(&WeightedValues::new(values, weights)?))
    }

    /// The constant `c` on `(0, mass]`.
    pub fn constant(c: f64, mass: f64) -> Result<Self> {
        Self::new(vec![0.0, mass], vec![c])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn steps(&self) -> usize {
        self.levels.len()
    }

    pub fn total_mass(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// `(level, length)` of every step, largest level first.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&v, w)| (v, w[1] - w[0]))
    }

    /// Value at `s ∈ [0, M]`. At a breakpoint the value of the step ending
    /// there is returned; `s = 0` yields the largest level.
    pub fn eval(&self, s: f64) -> f64 {
        // first step whose right end is >= s
        let j = self.breakpoints[1..].partition_point(|&b| b < s);
        self.levels[j.min(self.levels.len() - 1)]
    }

    /// `|{ξ* ≥ t}|`
    pub fn superlevel_measure(&self, t: f64) -> f64 {
        let j = self.levels.partition_point(|&v| v >= t);
        self.breakpoints[j]
    }

    /// `∫_0^M ξ*(s) ds`
    pub fn integral(&self) -> f64 {
        crate::grid::compensated_sum(self.pieces().map(|(v, l)| v * l))
    }

    /// `∫_0^M g(ξ*(s)) ds`
    pub fn integral_of<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        crate::grid::compensated_sum(self.pieces().map(|(v, l)| g(v) * l))
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels[0].abs().max(self.levels[self.levels.len() - 1].abs())
    }
}

/// Cells ordered by value, largest first; ties keep index order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    order
}

/// Running sums with Neumaier compensation; the same prefix always yields
/// the same value.
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    fn add(&mut self, v: f64) -> f64 {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.sum + self.comp
    }
}

/// The decreasing rearrangement of `wv`. Equal values are merged into one
/// step, so the result is canonical.
pub fn decreasing_rearrangement(wv: &WeightedValues) -> StepFunction {
    let values = wv.values();
    let weights = wv.weights();
    let order = descending_order(values);
    let mut breakpoints = vec![0.0];
    let mut levels = Vec::new();
    let mut acc = Accumulator::new();
    let mut k = 0;
    while k < order.len() {
        let level = values[order[k]];
        let mut end = 0.0;
        while k < order.len() && values[order[k]] == level {
            end = acc.add(weights[order[k]]);
            k += 1;
        }
        levels.push(level);
        breakpoints.push(end);
    }
    StepFunction {
        breakpoints,
        levels,
    }
}

fn check_masses(left: f64, right: f64, tol: f64) -> Result<()> {
    if (left - right).abs() > tol * left.abs().max(right.abs()).max(1.0) {
        return Err(Error::MassMismatch { left, right });
    }
    Ok(())
}

/// `∫_0^M f(s) g(s) ds` over the common refinement of both breakpoint sets,
/// truncated at the smaller total mass.
fn product_integral(f: &StepFunction, g: &StepFunction) -> f64 {
    pairwise_integral(f, g, |a, b| a * b)
}

fn pairwise_integral<F: Fn(f64, f64) -> f64>(f: &StepFunction, g: &StepFunction, op: F) -> f64 {
    let end = f.total_mass().min(g.total_mass());
    let (mut i, mut j) = (0, 0);
    let mut lo = 0.0;
    let mut terms = Vec::with_capacity(f.steps() + g.steps());
    while i < f.steps() && j < g.steps() && lo < end {
        let hi = f.breakpoints[i + 1].min(g.breakpoints[j + 1]).min(end);
        terms.push(op(f.levels[i], g.levels[j]) * (hi - lo));
        lo = hi;
        if f.breakpoints[i + 1] <= hi {
            i += 1;
        }
        if g.breakpoints[j + 1] <= hi {
            j += 1;
        }
    }
    crate::grid::compensated_sum(terms)
}

/// `∫|a* − b*| ds`, the transport distance between the two distributions.
pub fn rearrangement_distance(a: &StepFunction, b: &StepFunction) -> f64 {
    pairwise_integral(a, b, |x, y| (x - y).abs())
}

/// Relative distance between the distributions of `a` and `b`: the
/// `L¹` distance of their decreasing rearrangements divided by
/// `M·max(1, sup|values|)`.
pub fn equidistribution_discrepancy(
    a: &WeightedValues,
    b: &WeightedValues,
    tol: f64,
) -> Result<f64> {
    let ra = decreasing_rearrangement(a);
    let rb = decreasing_rearrangement(b);
    check_masses(ra.total_mass(), rb.total_mass(), tol)?;
    let scale = ra.total_mass() * ra.sup_norm().max(rb.sup_norm()).max(1.0);
    Ok(rearrangement_distance(&ra, &rb) / scale)
}

/// Whether `a` and `b` are strict rearrangements of each other, up to a
/// relative tolerance. Fails with [`Error::MassMismatch`] when the total
/// masses differ by more than `tol`.
pub fn equidistributed(a: &WeightedValues, b: &WeightedValues, tol: f64) -> Result<bool> {
    Ok(equidistribution_discrepancy(a, b, tol)? <= tol)
}

/// A measure-preserving assignment of disjoint subintervals of `(0, M]` to
/// cells: the cell at position `k` of `ordering` receives
/// `(bounds[k], bounds[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMap {
    ordering: Vec<usize>,
    bounds: Vec<f64>,
}

/// Orders cells by value descending (ties by cell index) and lays their
/// weights end to end, so that `ξ* ∘ θ = ξ`.
pub fn theta_map(wv: &WeightedValues) -> ThetaMap {
    let ordering = descending_order(wv.values());
    let mut bounds = Vec::with_capacity(ordering.len() + 1);
    bounds.push(0.0);
    let mut acc = Accumulator::new();
    for &c in &ordering {
        bounds.push(acc.add(wv.weights()[c]));
    }
    ThetaMap { ordering, bounds }
}

impl ThetaMap {
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn interval_bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn total_mass(&self) -> f64 {
        *self.bounds.last().unwrap()
    }

    /// Composes `f` with the map. Each cell's interval is split at the
    /// breakpoints of `f`, so the result lives on a refinement of the cells:
    /// atom `(f level, overlap length)`, listed cell by cell in `ordering`.
    /// The last atom absorbs any rounding-level mass difference between the
    /// two sides.
    pub fn pull_back(&self, f: &StepFunction) -> Result<WeightedValues> {
        check_masses(self.total_mass(), f.total_mass(), DEFAULT_TOLERANCE)?;
        let mut values = Vec::with_capacity(self.ordering.len() + f.steps());
        let mut weights = Vec::with_capacity(values.capacity());
        let mut j = 0;
        for k in 0..self.ordering.len() {
            let (lo, hi) = (self.bounds[k], self.bounds[k + 1]);
            let mut a = lo;
            loop {
                while j + 1 < f.steps() && f.breakpoints[j + 1] <= a {
                    j += 1;
                }
                let b = if j + 1 < f.steps() {
                    f.breakpoints[j + 1].min(hi)
                } else {
                    hi
                };
                if b > a {
                    values.push(f.levels[j]);
                    weights.push(b - a);
                }
                a = b;
                if a >= hi {
                    break;
                }
            }
        }
        WeightedValues::new(values, weights)
    }

    /// Cellwise composition `ξ*(θ(x))`, available when every cell interval
    /// lies inside a single step of `f` (up to `tol` relative overlap).
    pub fn pull_back_cellwise(&self, f: &StepFunction, n_cells: usize, tol: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; n_cells];
        for (k, &c) in self.ordering.iter().enumerate() {
            let (lo, hi) = (self.bounds[k], self.bounds[k + 1]);
            let slack = tol * (hi - lo);
            let v_lo = f.eval(lo + slack);
            let v_hi = f.eval(hi - slack);
            if v_lo != v_hi {
                return None;
            }
            out[c] = v_lo;
        }
        Some(out)
    }
}

/// Whether `(g(x) − g(y))(h(x) − h(y)) ≥ 0` for every pair of cells.
/// Runs in `O(k log k)`: cells are grouped by `g`, and every `h` in a group
/// must dominate every `h` in the groups with smaller `g`.
pub fn similarly_ordered(g: &WeightedValues, h: &WeightedValues) -> Result<bool> {
    similarly_ordered_values(g.values(), h.values())
}

pub fn similarly_ordered_values(g: &[f64], h: &[f64]) -> Result<bool> {
    if g.len() != h.len() {
        return Err(Error::InvalidInput(format!(
            "cell counts differ: {} vs {}",
            g.len(),
            h.len()
        )));
    }
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap_or(Ordering::Equal));
    let mut below_max = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let level = g[order[k]];
        let start = k;
        let mut group_min = f64::INFINITY;
        let mut group_max = f64::NEG_INFINITY;
        while k < order.len() && g[order[k]] == level {
            group_min = group_min.min(h[order[k]]);
            group_max = group_max.max(h[order[k]]);
            k += 1;
        }
        if start > 0 && group_min < below_max {
            return Ok(false);
        }
        below_max = below_max.max(group_max);
    }
    Ok(true)
}

/// `sup ∫ f η dμ` over all `f` equidistributed with `f0`, which equals
/// `∫_0^M f0*(s) η*(s) ds`.
pub fn hardy_littlewood_sup(f0: &StepFunction, eta: &WeightedValues) -> Result<f64> {
    let eta_star = decreasing_rearrangement(eta);
    check_masses(f0.total_mass(), eta_star.total_mass(), DEFAULT_TOLERANCE)?;
    Ok(product_integral(f0, &eta_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wv(values: &[f64], weights: &[f64]) -> WeightedValues {
        WeightedValues::new(values.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn constant_has_one_step() {
        let r = decreasing_rearrangement(&wv(&[2.0, 2.0, 2.0], &[0.25, 0.5, 0.25]));
        assert_eq!(r.levels(), &[2.0]);
        assert_eq!(r.breakpoints(), &[0.0, 1.0]);
    }

    #[test]
    fn three_cell_example() {
        let r = decreasing_rearrangement(&wv(&[1.0, 3.0, 2.0], &[0.5, 0.3, 0.2]));
        assert_eq!(r.levels(), &[3.0, 2.0, 1.0]);
        assert!((r.breakpoints()[1] - 0.3).abs() < 1e-15);
        assert!((r.breakpoints()[2] - 0.5).abs() < 1e-15);
        assert!((r.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(r.eval(0.3), 3.0);
        assert_eq!(r.eval(0.30001), 2.0);
        assert_eq!(r.eval(1.0), 1.0);
    }

    #[test]
    fn permutation_with_equal_weights_is_invisible() {
        let w = [0.25; 4];
        let a = decreasing_rearrangement(&wv(&[4.0, -1.0, 2.0, 2.0], &w));
        let b = decreasing_rearrangement(&wv(&[2.0, 4.0, 2.0, -1.0], &w));
        assert_eq!(a, b);
    }

    #[test]
    fn superlevel_measure_matches_distribution() {
        let r = decreasing_rearrangement(&wv(&[1.0, 3.0, 2.0], &[0.5, 0.25, 0.25]));
        assert_eq!(r.superlevel_measure(3.0), 0.25);
        assert_eq!(r.superlevel_measure(2.5), 0.25);
        assert_eq!(r.superlevel_measure(2.0), 0.5);
        assert_eq!(r.superlevel_measure(0.0), 1.0);
        assert_eq!(r.superlevel_measure(4.0), 0.0);
    }

    #[test]
    fn equidistributed_examples() {
        let a = wv(&[1.0, 2.0], &[0.5, 0.5]);
        assert!(equidistributed(&a, &a, DEFAULT_TOLERANCE).unwrap());
        assert!(equidistributed(&a, &wv(&[2.0, 1.0], &[0.5, 0.5]), DEFAULT_TOLERANCE).unwrap());
        assert!(!equidistributed(&wv(&[1.0, 2.0], &[0.7, 0.3]), &a, DEFAULT_TOLERANCE).unwrap());
        assert!(matches!(
            equidistributed(&a, &wv(&[1.0, 2.0], &[0.5, 0.6]), DEFAULT_TOLERANCE),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn theta_map_examples() {
        let single = theta_map(&wv(&[7.0], &[1.0]));
        assert_eq!(single.ordering(), &[0]);
        assert_eq!(single.interval_bounds(), &[0.0, 1.0]);

        let x = wv(&[1.0, 3.0, 3.0, 2.0], &[0.125, 0.25, 0.5, 0.125]);
        let t = theta_map(&x);
        assert_eq!(t.ordering(), &[1, 2, 3, 0]);
        assert_eq!(t, theta_map(&x));
        let back = t
            .pull_back_cellwise(&decreasing_rearrangement(&x), 4, 1e-9)
            .unwrap();
        assert_eq!(back, x.values());
        let refined = t.pull_back(&decreasing_rearrangement(&x)).unwrap();
        assert!(equidistributed(&refined, &x, 0.0).unwrap());
    }

    #[test]
    fn pull_back_splits_straddling_cells() {
        let f = StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        let t = theta_map(&wv(&[0.0, 0.0, 0.0], &[0.25, 0.5, 0.25]));
        assert!(t.pull_back_cellwise(&f, 3, 1e-9).is_none());
        let refined = t.pull_back(&f).unwrap();
        assert_eq!(refined.values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(refined.weights(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn similarly_ordered_examples() {
        let s = |g: &[f64], h: &[f64]| similarly_ordered_values(g, h).unwrap();
        assert!(s(&[3.0, -1.0, 2.0], &[4.0, 4.0, 4.0]));
        assert!(s(&[1.0, 2.0, 3.0], &[5.0, 5.0, 7.0]));
        assert!(!s(&[1.0, 2.0], &[2.0, 1.0]));
        assert!(s(&[1.0, 1.0, 2.0], &[3.0, 0.0, 3.0]));
        assert!(!s(&[1.0, 1.0, 2.0], &[3.0, 0.0, 2.0]));
    }

    #[test]
    fn hardy_littlewood_examples() {
        let third = [1.0 / 3.0; 3];
        let eta = wv(&[5.0, 4.0, 6.0], &third);
        let f0 = decreasing_rearrangement(&wv(&[0.0, 1.0, 2.0], &third));
        let v = hardy_littlewood_sup(&f0, &eta).unwrap();
        assert!((v - 17.0 / 3.0).abs() < 1e-14);

        let one = StepFunction::constant(1.0, 1.0).unwrap();
        let e = wv(&[1.0, -2.0, 0.5], &[0.25, 0.25, 0.5]);
        assert!((hardy_littlewood_sup(&one, &e).unwrap() - e.integral()).abs() < 1e-15);
        let ones = wv(&[1.0; 3], &third);
        let g = decreasing_rearrangement(&wv(&[3.0, 1.0, -1.0], &[0.5, 0.25, 0.25]));
        assert!((hardy_littlewood_sup(&g, &ones).unwrap() - g.integral()).abs() < 1e-15);
    }

    #[test]
    fn step_function_validation() {
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(StepFunction::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 0.5], vec![2.0, 1.0]).is_err());
    }

    fn dyadic_set(max_len: usize) -> impl Strategy<Value = WeightedValues> {
        prop::collection::vec((-4i32..=4, 1u32..=8), 1..=max_len).prop_map(|cells| {
            let values = cells.iter().map(|c| c.0 as f64).collect();
            let weights = cells.iter().map(|c| c.1 as f64 / 64.0).collect();
            WeightedValues::new(values, weights).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rearrangement_preserves_distribution(x in dyadic_set(12), t in -5i32..=5) {
            let r = decreasing_rearrangement(&x);
            let t = t as f64;
            let direct: f64 = x.values().iter().zip(x.weights())
                .filter(|(v, _)| **v >= t).map(|(_, w)| w).sum();
            prop_assert_eq!(r.superlevel_measure(t), direct);
        }

        #[test]
        fn level_set_implications(x in dyadic_set(12), t in -5i32..=5, tau in 1u32..64) {
            // μ(ξ ≥ t) ≤ τ ⇒ ξ*(τ) ≤ t and μ(ξ ≥ t) ≥ τ ⇒ ξ*(τ) ≥ t
            let r = decreasing_rearrangement(&x);
            let t = t as f64;
            let tau = tau as f64 / 64.0 * r.total_mass();
            let m: f64 = x.values().iter().zip(x.weights())
                .filter(|(v, _)| **v >= t).map(|(_, w)| w).sum();
            if m <= tau { prop_assert!(r.eval(tau) <= t); }
            if m >= tau { prop_assert!(r.eval(tau) >= t); }
        }

        #[test]
        fn theta_pull_back_is_equidistributed(x in dyadic_set(12)) {
            let refined = theta_map(&x).pull_back(&decreasing_rearrangement(&x)).unwrap();
            prop_assert!(equidistributed(&refined, &x, 0.0).unwrap());
        }

        #[test]
        fn hardy_littlewood_dominates_permutations(
            values in prop::collection::vec(-10.0f64..10.0, 2..8),
            eta in prop::collection::vec(-10.0f64..10.0, 8),
            seed in any::<u64>(),
        ) {
            let k = values.len();
            let w = vec![1.0 / k as f64; k];
            let f = WeightedValues::new(values.clone(), w.clone()).unwrap();
            let e = WeightedValues::new(eta[..k].to_vec(), w.clone()).unwrap();
            let sup = hardy_littlewood_sup(&decreasing_rearrangement(&f), &e).unwrap();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut s = seed;
            for i in (1..k).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let paired: f64 = perm.iter().enumerate().map(|(i, &p)| values[p] * eta[i] * w[i]).sum();
            prop_assert!(paired <= sup + 1e-12);
        }

        #[test]
        fn similarly_ordered_matches_pairwise(
            g in prop::collection::vec(-3i32..3, 1..9),
            h in prop::collection::vec(-3i32..3, 9),
        ) {
            let g: Vec<f64> = g.iter().map(|&v| v as f64).collect();
            let h: Vec<f64> = h[..g.len()].iter().map(|&v| v as f64).collect();
            let mut brute = true;
            for x in 0..g.len() {
                for y in 0..g.len() {
                    if (g[x] - g[y]) * (h[x] - h[y]) < 0.0 { brute = false; }
                }
            }
            prop_assert_eq!(similarly_ordered_values(&g, &h).unwrap(), brute);
        }

        #[test]
        fn equidistribution_is_symmetric_and_transitive(
            x in dyadic_set(6), p in any::<u64>(), q in any::<u64>()
        ) {
            let shuffle = |seed: u64| {
                let mut v: Vec<(f64, f64)> = x.values().iter().copied().zip(x.weights().iter().copied()).collect();
                let mut s = seed;
                for i in (1..v.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    v.swap(i, (s >> 33) as usize % (i + 1));
                }
                WeightedValues::new(v.iter().map(|c| c.0).collect(), v.iter().map(|c| c.1).collect()).unwrap()
            };
            let (a, b) = (shuffle(p), shuffle(q));
            prop_assert!(equidistributed(&x, &a, 0.0).unwrap());
            prop_assert!(equidistributed(&a, &x, 0.0).unwrap());
            prop_assert!(equidistributed(&a, &b, 0.0).unwrap());
        }
    }
}
