use super::surface::PolySurface;
use crate::domain::ExecutionStrategy;
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

const ARMIJO_C: f64 = 1e-4;
const STEP_TOL: f64 = 1e-10;
const MAX_STEP: f64 = 1e6;
pub(crate) const MAX_ITERS: usize = 10_000;
const STARTS: usize = 8;

/// Euclidean projection onto `{y ≥ 0, Σ y ≤ cap}`.
pub fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    // Projection onto the face Σ y = cap: y = max(v - θ, 0).
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        acc += uj;
        let t = (acc - cap) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Projected gradient descent with Armijo backtracking (`c = 1e-4`, step
/// halving). Stops once an accepted step moves less than `1e-10` or after
/// `max_iters` iterations.
pub(crate) fn projected_descent<F, G>(f: F, grad: G, x0: &[f64], cap: f64, max_iters: usize) -> Descent
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    let mut x = project_capped_simplex(x0, cap);
    let mut fx = f(&x);
    let mut g = vec![0.0; x.len()];
    let mut t: f64 = 1.0;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        grad(&x, &mut g);
        let mut step = (2.0 * t).min(MAX_STEP);
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let y = project_capped_simplex(&trial, cap);
            let slope: f64 = g
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(gi, (yi, xi))| gi * (yi - xi))
                .sum();
            let moved = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if moved == 0.0 {
                break None;
            }
            let fy = f(&y);
            if fy <= fx + ARMIJO_C * slope {
                break Some((y, fy, moved));
            }
            step *= 0.5;
            if step < 1e-30 {
                break None;
            }
        };
        match accepted {
            Some((y, fy, moved)) => {
                x = y;
                fx = fy;
                t = step;
                if moved < STEP_TOL {
                    break;
                }
            }
            None => break,
        }
    }
    Descent {
        x,
        value: fx,
        iterations,
    }
}

/// Up to eight deterministic starts in `{n ≥ 0, Σ n ≤ cap}`: the centroid,
/// then the vertices, then edge midpoints.
pub(crate) fn start_points(dim: usize, cap: f64) -> Vec<Vec<f64>> {
    let mut vertices = vec![vec![0.0; dim]];
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = cap;
        vertices.push(v);
    }
    let mut out = vec![vec![cap / (dim + 1) as f64; dim]];
    out.extend(vertices.iter().cloned());
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            out.push(
                vertices[a]
                    .iter()
                    .zip(&vertices[b])
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect(),
            );
        }
    }
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for p in out {
        if !unique.contains(&p) {
            unique.push(p);
        }
        if unique.len() == STARTS {
            break;
        }
    }
    unique
}

/// Multi-start projected descent; the first start wins ties.
pub(crate) fn multistart<F, G>(f: F, grad: G, dim: usize, cap: f64) -> Descent
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    let mut best: Option<Descent> = None;
    let mut total = 0;
    for s in start_points(dim, cap) {
        let d = projected_descent(&f, &grad, &s, cap, MAX_ITERS);
        total += d.iterations;
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let mut best = best.expect("at least one start point");
    best.iterations = total;
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMinimum<T> {
    pub strategy: ExecutionStrategy<T>,
    /// Surface value at the minimiser.
    pub predicted: f64,
    /// Descent iterations summed over all starts.
    pub iterations: usize,
}

/// Minimiser of `surface` over the free coordinates `n_1..n_{K-1}` subject to
/// `n_k ≥ 0` and `Σ n_k ≤ N`; `n_K` takes up the remainder.
pub fn minimize_surface<T: Scalar>(surface: &PolySurface, total_shares: T) -> Result<SurfaceMinimum<T>> {
    if !(total_shares > T::zero()) {
        return Err(TcaError::invalid(format!(
            "order size must be positive, got {total_shares}"
        )));
    }
    let cap = total_shares.as_f64();
    let d = multistart(|x| surface.value(x), |x, g| surface.gradient(x, g), surface.dim, cap);
    let free: Vec<T> = d.x.iter().map(|&v| T::of(v)).collect();
    Ok(SurfaceMinimum {
        strategy: ExecutionStrategy::from_free_coords(&free, total_shares),
        predicted: d.value,
        iterations: d.iterations,
    })
}
