//! Full-dimensional cells of a central hyperplane arrangement.
//!
//! Cells are built incrementally: inserting a hyperplane `H` splits exactly
//! the cells that meet `H`, and those are in bijection with the cells of the
//! arrangement restricted to `H`, which is again central and one dimension
//! lower. Each cell is represented by a rational point in its interior.

use std::collections::{HashMap, HashSet};

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};

use crate::linalg::{dot, line_form, q, Rational};

/// Distinct hyperplanes (by line form) among the nonzero normals.
pub fn distinct_normals(normals: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut seen: HashSet<Vec<BigInt>> = HashSet::new();
    normals
        .iter()
        .filter(|v| line_form(v).is_some_and(|k| seen.insert(k)))
        .cloned()
        .collect()
}

/// One interior point per full-dimensional cell of the arrangement
/// `{x : ⟨a, x⟩ = 0}` over `normals` in `ℝ^dim`. Every returned point has
/// `⟨a, x⟩ ≠ 0` for every nonzero normal.
pub fn cell_witnesses(dim: usize, normals: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    assert!(dim > 0, "arrangement in dimension 0");
    let planes = distinct_normals(normals);
    let mut start = vec![Rational::zero(); dim];
    start[0] = Rational::one();
    if planes.is_empty() {
        return vec![start];
    }
    if dim == 1 {
        return vec![vec![q(1)], vec![q(-1)]];
    }

    let mut cells: Vec<Vec<Rational>> = vec![start];
    for k in 0..planes.len() {
        let (placed, u) = (&planes[..k], &planes[k]);
        let restricted_points = restricted_witnesses(dim, placed, u);

        let by_sign: HashMap<Vec<bool>, usize> = cells
            .iter()
            .enumerate()
            .map(|(i, w)| (sign_vector(placed, w), i))
            .collect();
        let mut split = vec![false; cells.len()];
        let mut fresh = Vec::with_capacity(2 * restricted_points.len());
        for p in restricted_points {
            let key = sign_vector(placed, &p);
            let idx = by_sign[&key];
            split[idx] = true;
            let eps = step_within_cell(placed, &p, u);
            fresh.push(axpy(&p, &eps, u));
            fresh.push(axpy(&p, &-eps, u));
        }
        let mut next: Vec<Vec<Rational>> = cells
            .into_iter()
            .zip(split)
            .filter_map(|(w, s)| (!s).then_some(w))
            .collect();
        next.extend(fresh);
        cells = next;
    }
    cells
}

fn sign_vector(normals: &[Vec<Rational>], x: &[Rational]) -> Vec<bool> {
    normals
        .iter()
        .map(|a| {
            let s = dot(a, x);
            debug_assert!(!s.is_zero(), "witness on a hyperplane");
            s.is_positive()
        })
        .collect()
}

fn axpy(x: &[Rational], t: &Rational, u: &[Rational]) -> Vec<Rational> {
    x.iter().zip(u).map(|(xi, ui)| xi + t * ui).collect()
}

/// Largest power of two `ε` such that `x ± ε u` crosses none of `normals`.
pub(crate) fn step_within_cell(normals: &[Vec<Rational>], x: &[Rational], u: &[Rational]) -> Rational {
    let bound = normals
        .iter()
        .filter_map(|a| {
            let au = dot(a, u);
            (!au.is_zero()).then(|| (dot(a, x) / au).abs())
        })
        .min();
    let mut eps = Rational::one();
    if let Some(b) = bound {
        let two = q(2);
        while eps >= b {
            eps /= &two;
        }
    }
    eps
}

/// Cells of the arrangement `placed` restricted to the hyperplane `u^⊥`,
/// returned as points of `ℝ^dim` lying on `u^⊥`.
fn restricted_witnesses(dim: usize, placed: &[Vec<Rational>], u: &[Rational]) -> Vec<Vec<Rational>> {
    // Basis of u^⊥: b_j = e_j - (u_j / u_p) e_p for j != p.
    let p = u.iter().position(|x| !x.is_zero()).expect("nonzero normal");
    let coords: Vec<usize> = (0..dim).filter(|&j| j != p).collect();
    let ratio: Vec<Rational> = coords.iter().map(|&j| &u[j] / &u[p]).collect();

    let restricted: Vec<Vec<Rational>> = placed
        .iter()
        .map(|a| coords.iter().zip(&ratio).map(|(&j, r)| &a[j] - r * &a[p]).collect())
        .collect();
    cell_witnesses(dim - 1, &restricted)
        .into_iter()
        .map(|y| {
            let mut x = vec![Rational::zero(); dim];
            for ((&j, r), yj) in coords.iter().zip(&ratio).zip(&y) {
                x[j] = yj.clone();
                x[p] -= r * yj;
            }
            x
        })
        .collect()
}

/// Number of regions of a central arrangement in general position, used
/// only to sanity-check the enumeration.
#[cfg(test)]
fn general_position_regions(dim: usize, k: usize) -> usize {
    // 2 * sum_{i<dim} C(k-1, i)
    let binom = |n: usize, r: usize| -> usize {
        if r > n {
            return 0;
        }
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    };
    2 * (0..dim).map(|i| binom(k - 1, i)).sum::<usize>()
}
