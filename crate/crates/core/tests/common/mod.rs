//! Independent oracles and random generators shared by the integration
//! tests and the acceptance suite. Nothing here calls into the decision
//! procedures under test.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use equivar::linalg::{q, Rational};
use equivar::{ExactNet, FiniteGroup, Matrix, Representation};
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn relu(x: &Rational) -> Rational {
    if x.is_positive() {
        x.clone()
    } else {
        Rational::zero()
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ β_i σ(α_i·x)` evaluated from scratch.
pub fn eval(net: &ExactNet, x: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); net.output_dim()];
    for (a, b) in net.alphas().iter().zip(net.betas()) {
        let h = relu(&dot(a, x));
        for (o, bk) in out.iter_mut().zip(b) {
            *o += &h * bk;
        }
    }
    out
}

pub fn mat_vec(m: &Matrix<Rational>, x: &[Rational]) -> Vec<Rational> {
    (0..m.rows()).map(|i| dot(m.row(i), x)).collect()
}

pub fn mat_t_vec(m: &Matrix<Rational>, x: &[Rational]) -> Vec<Rational> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j) * &x[i]).sum())
        .collect()
}

/// Writes `F - G` as `Σ_u γ_u σ(u·x) + L x` with one `u` per line through
/// the origin (first nonzero coordinate scaled to 1), using
/// `σ(-t) = σ(t) - t`. The kinks along distinct lines are linearly
/// independent, so `F = G` iff every `γ_u` and `L` vanish.
pub fn kink_decomposition(a: &ExactNet, b: &ExactNet) -> (BTreeMap<Vec<Rational>, Vec<Rational>>, Matrix<Rational>) {
    let (n, d) = (a.input_dim(), a.output_dim());
    let mut gamma: BTreeMap<Vec<Rational>, Vec<Rational>> = BTreeMap::new();
    let mut lin = Matrix::zeros(d, n);
    let terms = a
        .alphas()
        .iter()
        .zip(a.betas())
        .map(|(al, be)| (al.clone(), be.clone()))
        .chain(
            b.alphas()
                .iter()
                .zip(b.betas())
                .map(|(al, be)| (al.clone(), be.iter().map(|x| -x).collect::<Vec<_>>())),
        );
    for (alpha, beta) in terms {
        let Some(lead) = alpha.iter().find(|x| !x.is_zero()).cloned() else {
            continue;
        };
        let scale = lead.abs();
        let u: Vec<Rational> = alpha.iter().map(|x| x / &lead).collect();
        let weight: Vec<Rational> = beta.iter().map(|x| x * &scale).collect();
        let g = gamma.entry(u.clone()).or_insert_with(|| vec![Rational::zero(); d]);
        for (gk, wk) in g.iter_mut().zip(&weight) {
            *gk += wk;
        }
        if lead.is_negative() {
            for r in 0..d {
                for c in 0..n {
                    let v = lin.get(r, c) - &weight[r] * &u[c];
                    lin.set(r, c, v);
                }
            }
        }
    }
    gamma.retain(|_, g| g.iter().any(|x| !x.is_zero()));
    (gamma, lin)
}

pub fn oracle_equal(a: &ExactNet, b: &ExactNet) -> bool {
    let (gamma, lin) = kink_decomposition(a, b);
    gamma.is_empty() && lin.is_zero()
}

/// Lines (normalized as in [`kink_decomposition`]) along which `F` kinks.
pub fn oracle_kink_lines(net: &ExactNet) -> Vec<Vec<Rational>> {
    let zero = ExactNet::zero(net.input_dim(), net.output_dim());
    kink_decomposition(net, &zero).0.into_keys().collect()
}

/// `(1/|G|) Σ_g φ_g⁻¹ F(ρ_g x)` for any evaluator `F`.
pub fn group_average(
    f: impl Fn(&[Rational]) -> Vec<Rational>,
    rho: &Representation,
    phi: &Representation,
    x: &[Rational],
) -> Vec<Rational> {
    let order = rho.group().order();
    let mut acc = vec![Rational::zero(); phi.dim()];
    for g in 0..order {
        let y = f(&mat_vec(rho.matrix(g), x));
        let inv = phi.matrix(g).inverse().expect("invertible");
        for (a, v) in acc.iter_mut().zip(mat_vec(&inv, &y)) {
            *a += v;
        }
    }
    let n = Rational::from_integer((order as i64).into());
    acc.iter().map(|v| v / &n).collect()
}

pub fn target_closed_form(a: &Rational, b: &Rational) -> Rational {
    let d = a - b;
    a.abs().max(b.abs()).max(d.abs())
}

/// `E[s²]` on the uniform square, exactly. The rays to the eight boundary
/// points `(±1, 0), (±1, ±1), (0, ±1)` cut the square into triangles on
/// which `s` is linear, and the edge-midpoint rule is exact for quadratics.
pub fn exact_target_energy() -> Rational {
    let pts: Vec<(Rational, Rational)> = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
        .iter()
        .map(|&(a, b)| (q(a), q(b)))
        .collect();
    let s2 = |p: &(Rational, Rational)| {
        let v = target_closed_form(&p.0, &p.1);
        &v * &v
    };
    let half = Rational::new(1.into(), 2.into());
    let mid = |p: &(Rational, Rational), r: &(Rational, Rational)| ((&p.0 + &r.0) * &half, (&p.1 + &r.1) * &half);
    let o = (q(0), q(0));
    let mut total = Rational::zero();
    for k in 0..8 {
        let (p, r) = (&pts[k], &pts[(k + 1) % 8]);
        let area = ((&p.0 * &r.1 - &p.1 * &r.0) * &half).abs();
        let m = s2(&mid(&o, p)) + s2(&mid(p, r)) + s2(&mid(&o, r));
        total += area * m / q(3);
    }
    total / q(4)
}

pub fn random_rational(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    Rational::new(rng.random_range(-num..=num).into(), rng.random_range(1..=den).into())
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, num: i64, den: i64) -> Vec<Rational> {
    (0..n).map(|_| random_rational(rng, num, den)).collect()
}

pub fn random_net(rng: &mut ChaCha8Rng, n: usize, m: usize, d: usize) -> ExactNet {
    let alphas = (0..m).map(|_| random_vector(rng, n, 4, 3)).collect();
    let betas = (0..m).map(|_| random_vector(rng, d, 4, 3)).collect();
    ExactNet::new(n, d, alphas, betas).expect("dimensions")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<Rational> {
    Matrix::from_rows((0..rows).map(|_| random_vector(rng, cols, 3, 2)).collect()).expect("rectangular")
}

pub fn example_rho() -> Representation {
    equivar::fixtures::example_rho()
}

/// `C3` cyclically permuting the coordinates of `ℝ³`.
pub fn cyclic_shift_rho() -> Representation {
    let group = Arc::new(FiniteGroup::cyclic(3));
    let shift = Matrix::from_int_rows(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]]);
    let mats = vec![Matrix::identity(3), shift.clone(), shift.mul(&shift)];
    Representation::new(group, mats).expect("representation")
}

/// `T⁻¹ ρ_g T` written out by hand.
pub fn conjugated(rho: &Representation, t: &Matrix<Rational>) -> Representation {
    let t_inv = t.inverse().expect("invertible");
    let mats = rho.matrices().iter().map(|m| t_inv.mul(m).mul(t)).collect();
    Representation::new(rho.group().clone(), mats).expect("representation")
}

/// The example representation conjugated to a non-orthogonal one.
pub fn skewed_example_rho() -> Representation {
    let t = Matrix::from_rows(vec![vec![q(2), q(1)], vec![q(1), Rational::new(3.into(), 2.into())]]).unwrap();
    conjugated(&example_rho(), &t)
}

pub fn skewed_shift_rho() -> Representation {
    let t = Matrix::from_int_rows(&[&[1, 2, 0], &[0, 1, -1], &[1, 0, 3]]);
    conjugated(&cyclic_shift_rho(), &t)
}

pub fn is_orthogonal(m: &Matrix<Rational>) -> bool {
    m.transpose().mul(m).is_identity()
}

/// `m σ(x) = σ(m x)` computed from scratch.
pub fn relu_commutes(m: &Matrix<Rational>, x: &[Rational]) -> bool {
    let rx: Vec<Rational> = x.iter().map(relu).collect();
    let lhs = mat_vec(m, &rx);
    let rhs: Vec<Rational> = mat_vec(m, x).iter().map(relu).collect();
    lhs == rhs
}

/// Random permutation matrix with positive rational scales.
pub fn random_positive_permutation(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Rational> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut m = Matrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        m.set(
            i,
            j,
            Rational::new(rng.random_range(1..=5).into(), rng.random_range(1..=4).into()),
        );
    }
    m
}

pub fn one() -> Rational {
    Rational::one()
}
