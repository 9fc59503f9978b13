//! Deterministic quadrature for expectations over the uniform square
//! `[-1, 1]²`.
//!
//! The square is cut into a `k × k` grid with `k` even and each cell is
//! split along its `x = y` diagonal, so the lines `x = 0`, `y = 0` and
//! `x = y` never cross a triangle's interior. Each triangle is integrated
//! with a collapsed tensor Gauss-Legendre rule. Piecewise polynomials with
//! kinks only on those lines are therefore integrated exactly up to
//! rounding.

/// Nodes and weights of the `k`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k > 0);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_k(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 1 { x } else { p1 };
            let pkm1 = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (x * pk - pkm1) / (x * x - 1.0);
            let step = pk / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

type Point = (f64, f64);

/// `∫_T f` over the triangle `(v0, v1, v2)` via the map
/// `(u, w) ↦ v0 + u (v1 - v0) + u w (v2 - v1)` with Jacobian `u |det|`.
fn triangle_integral(f: &impl Fn(f64, f64) -> f64, v: [Point; 3], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let e1 = (v[1].0 - v[0].0, v[1].1 - v[0].1);
    let e2 = (v[2].0 - v[1].0, v[2].1 - v[1].1);
    let det = (e1.0 * e2.1 - e1.1 * e2.0).abs();
    let mut total = 0.0;
    for (nu, wu) in nodes.iter().zip(weights) {
        let u = 0.5 * (nu + 1.0);
        for (nw, ww) in nodes.iter().zip(weights) {
            let w = 0.5 * (nw + 1.0);
            let x = v[0].0 + u * e1.0 + u * w * e2.0;
            let y = v[0].1 + u * e1.1 + u * w * e2.1;
            total += wu * ww * 0.25 * u * f(x, y);
        }
    }
    total * det
}

/// `E[f(x, y)]` for `(x, y)` uniform on `[-1, 1]²` on a `k × k` grid.
pub fn square_expectation(f: impl Fn(f64, f64) -> f64, k: usize, order: usize) -> f64 {
    assert!(
        k > 0 && k.is_multiple_of(2),
        "grid must be even so that 0 is a grid line"
    );
    let rule = gauss_legendre(order);
    let h = 2.0 / k as f64;
    let mut total = 0.0;
    for i in 0..k {
        let x0 = -1.0 + i as f64 * h;
        for j in 0..k {
            let y0 = -1.0 + j as f64 * h;
            let (x1, y1) = (x0 + h, y0 + h);
            total += triangle_integral(&f, [(x0, y0), (x1, y0), (x1, y1)], &rule);
            total += triangle_integral(&f, [(x0, y0), (x1, y1), (x0, y1)], &rule);
        }
    }
    total / 4.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// `(cells per side, estimate)` for every refinement performed.
    pub levels: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Refines `k = 2, 4, 8, …` until two successive estimates agree to `tol`
/// or `max_k` is exceeded.
pub fn refined_square_expectation(f: impl Fn(f64, f64) -> f64, tol: f64, max_k: usize) -> Quadrature {
    const ORDER: usize = 6;
    let mut levels = vec![(2, square_expectation(&f, 2, ORDER))];
    let mut k = 4;
    while k <= max_k {
        let v = square_expectation(&f, k, ORDER);
        let prev = levels.last().expect("nonempty").1;
        levels.push((k, v));
        if (v - prev).abs() <= tol {
            return Quadrature {
                value: v,
                levels,
                converged: true,
            };
        }
        k *= 2;
    }
    Quadrature {
        value: levels.last().expect("nonempty").1,
        levels,
        converged: false,
    }
}
