//! Symmetry and equivariance oracles for the ε-geodesic solver.

use mal_core::fixtures::{standard_pairs, trig_potential, TrigMode};
use mal_core::geodesic::{
    jacobi_field, path_distance, solve_epsilon_geodesic, weak_geodesic, ContinuationSettings, EpsGeodesicProblem,
};
use mal_core::{DerivativeScheme, Grid, GridField};

fn grid16() -> Grid {
    Grid::new(16, DerivativeScheme::Spectral).unwrap()
}

fn mixture(g: &Grid) -> EpsGeodesicProblem {
    let pair = standard_pairs(g).into_iter().find(|p| p.name == "mixture").unwrap();
    EpsGeodesicProblem::new(pair.start, pair.end, (0.0, 1.0), 0.05, 16).unwrap()
}

#[test]
fn reversing_endpoints_reverses_the_path() {
    let p = mixture(&grid16());
    let forward = solve_epsilon_geodesic(&p).unwrap().path;
    let backward = solve_epsilon_geodesic(&p.reversed()).unwrap().path;
    let m = forward.intervals();
    let worst = (0..=m)
        .map(|k| forward.knot(k).field().sup_distance(backward.knot(m - k).field()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn constant_shifts_add_their_linear_interpolant() {
    let g = grid16();
    let p = mixture(&g);
    let base = solve_epsilon_geodesic(&p).unwrap().path;
    let (c0, c1) = (0.3, -0.7);
    let shifted = EpsGeodesicProblem {
        start: p.start.shifted(c0),
        end: p.end.shifted(c1),
        ..p.clone()
    };
    let moved = solve_epsilon_geodesic(&shifted).unwrap().path;
    for (k, &t) in base.times().iter().enumerate() {
        let expect = base.knot(k).field().map(|v| v + c0 + (c1 - c0) * t);
        let err = moved.knot(k).field().sup_distance(&expect);
        assert!(err < 1e-9, "knot {k}: {err}");
    }
}

#[test]
fn interval_translation_leaves_knots_unchanged() {
    let g = grid16();
    let p = mixture(&g);
    let base = solve_epsilon_geodesic(&p).unwrap().path;
    let later = EpsGeodesicProblem {
        interval: (2.0, 3.0),
        ..p.clone()
    };
    let moved = solve_epsilon_geodesic(&later).unwrap().path;
    assert!(path_distance(&base, &moved) < 1e-10);
    assert_eq!(moved.start(), 2.0);
}

#[test]
fn constant_directions_give_affine_jacobi_fields() {
    let g = grid16();
    let p = mixture(&g);
    let (alpha, beta) = (1.0, -2.0);
    let jf = jacobi_field(&p, &g.constant(alpha), &g.constant(beta), 1e-4).unwrap();
    for (k, &t) in jf.base.path.times().iter().enumerate() {
        let expect = GridField::constant(16, alpha + (beta - alpha) * t);
        let err = jf.field[k].sup_distance(&expect);
        assert!(err < 1e-6, "knot {k}: {err}");
    }
}

#[test]
fn continuation_changes_shrink_towards_the_limit() {
    let g = grid16();
    let u0 = trig_potential(&g, 0.0, &[TrigMode::cos(1, 0, 0.01)]).unwrap();
    let u1 = trig_potential(&g, 0.1, &[TrigMode::sin(0, 1, 0.01)]).unwrap();
    let settings = ContinuationSettings {
        time_steps: 16,
        ..Default::default()
    };
    let w = weak_geodesic(&u0, &u1, (0.0, 1.0), 1e-5, &settings).unwrap();
    let changes: Vec<f64> = w.history.iter().skip(1).map(|s| s.change).collect();
    assert!(*changes.last().unwrap() < 1e-5);
    // halving ε should roughly halve the change once the iteration settles
    for pair in changes.windows(2).skip(2) {
        assert!(pair[1] < 0.75 * pair[0], "{changes:?}");
    }
    assert!(w.history.iter().all(|s| s.residual < 1e-6));
}
