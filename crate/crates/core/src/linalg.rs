//! Restarted GMRES and a tridiagonal solver, the two kernels of the geodesic
//! Newton iteration.

use rustfft::num_complex::Complex64;

pub(crate) struct GmresOutcome {
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with right preconditioning `A M⁻¹ y = b, x = M⁻¹ y`,
/// starting from `x = 0`. Stops once `‖b − A x‖₂ ≤ rtol ‖b‖₂` or after
/// `max_iter` inner iterations in total.
pub(crate) fn gmres<A, P>(
    mut apply: A,
    mut precondition: P,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return GmresOutcome { iterations: 0 };
    }
    let mut total = 0;
    let mut r = b.to_vec();
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];
    while total < max_iter {
        let beta = norm(&r);
        if beta / b_norm <= rtol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hessenberg: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut steps = 0;
        for j in 0..restart {
            if total >= max_iter {
                break;
            }
            precondition(&basis[j], &mut z);
            apply(&z, &mut work);
            let mut h = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                h[i] = dot(&work, v);
                for (w, vi) in work.iter_mut().zip(v) {
                    *w -= h[i] * vi;
                }
            }
            h[j + 1] = norm(&work);
            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = h[j].hypot(h[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[j] / denom, h[j + 1] / denom) };
            let next_basis = h[j + 1];
            h[j] = denom;
            h[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[j]);
            g[j] *= c;
            hessenberg.push(h);
            steps = j + 1;
            total += 1;
            if g[j + 1].abs() / b_norm <= rtol || next_basis == 0.0 {
                break;
            }
            basis.push(work.iter().map(|v| v / next_basis).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in (i + 1)..steps {
                s -= hessenberg[k][i] * y[k];
            }
            y[i] = s / hessenberg[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vi) in update.iter_mut().zip(v) {
                *u += yi * vi;
            }
        }
        precondition(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        apply(x, &mut work);
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&work) {
            *ri = bi - wi;
        }
        if norm(&r) / b_norm <= rtol || steps == 0 {
            break;
        }
    }
    GmresOutcome { iterations: total }
}

/// Solves the tridiagonal system with constant off-diagonals `off` and
/// diagonal `diag` in place of `rhs` (Thomas algorithm).
pub(crate) fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &mut [Complex64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag[0];
    scratch[0] = off / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - off * scratch[i - 1];
        scratch[i] = off / denom;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * off) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * scratch[i];
    }
}
