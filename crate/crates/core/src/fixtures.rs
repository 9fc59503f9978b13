//! The running example: the four-element group acting on the plane by
//! coordinate swap and negation, the invariant target
//! `s(a, b) = max(|a|, |b|, |a - b|)`, and its six-neuron layer-wise
//! equivariant form.

use std::sync::Arc;

use crate::group::{FiniteGroup, Representation};
use crate::linalg::{frac, Matrix};
use crate::relu_net::ExactNet;

pub fn example_group() -> Arc<FiniteGroup> {
    Arc::new(FiniteGroup::klein_four())
}

/// `ρ_e = I`, `ρ_g` swaps coordinates, `ρ_h = -I`, `ρ_gh = ρ_g ρ_h`.
pub fn example_rho() -> Representation {
    let matrices = vec![
        Matrix::from_int_rows(&[&[1, 0], &[0, 1]]),
        Matrix::from_int_rows(&[&[0, 1], &[1, 0]]),
        Matrix::from_int_rows(&[&[-1, 0], &[0, -1]]),
        Matrix::from_int_rows(&[&[0, -1], &[-1, 0]]),
    ];
    Representation::new(example_group(), matrices).expect("valid representation")
}

/// `σ(a) + σ(-b) + σ(b - a)`.
pub fn target_s() -> ExactNet {
    ExactNet::from_ints(2, 1, &[&[1, 0], &[0, -1], &[-1, 1]], &[&[1], &[1], &[1]])
}

/// `½[σ(a) + σ(b) + σ(-a) + σ(-b) + σ(b - a) + σ(a - b)]`, neurons ordered to
/// match [`example_psi6`].
pub fn len6() -> ExactNet {
    let half = vec![frac(1, 2)];
    ExactNet::new(
        2,
        1,
        [[1, 0], [0, 1], [-1, 0], [0, -1], [-1, 1], [1, -1]]
            .iter()
            .map(|v| crate::linalg::qvec(v))
            .collect(),
        vec![half; 6],
    )
    .expect("consistent dimensions")
}

/// The 6×6 permutation representation on the hidden layer of [`len6`]:
/// `g` swaps (1 2)(3 4)(5 6), `h` swaps (1 3)(2 4)(5 6).
pub fn example_psi6() -> Representation {
    let perm = |p: [usize; 6]| {
        let mut m = Matrix::zeros(6, 6);
        for (i, &j) in p.iter().enumerate() {
            m.set(i, j, crate::linalg::q(1));
        }
        m
    };
    let g = perm([1, 0, 3, 2, 5, 4]);
    let h = perm([2, 3, 0, 1, 5, 4]);
    let gh = g.mul(&h);
    Representation::new(example_group(), vec![Matrix::identity(6), g, h, gh]).expect("valid representation")
}

/// The one-neuron net `σ(a)`.
pub fn sigma_a() -> ExactNet {
    ExactNet::from_ints(2, 1, &[&[1, 0]], &[&[1]])
}
