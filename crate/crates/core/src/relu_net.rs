//! Bias-free ReLU networks.
//!
//! A two-layer net computes `F(x) = Σ_i β_i σ(⟨α_i, x⟩)` where `α_i` are the
//! channel vectors (rows of the first weight matrix) and `β_i` the output
//! weights (columns of the second).

use num::traits::{One, Zero};

use crate::arrangement::{cell_witnesses, step_within_cell};
use crate::error::{malformed, Error, Result};
use crate::group::Representation;
use crate::linalg::{dot, is_zero_vec, relu, scale, Matrix, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet<S> {
    n: usize,
    d: usize,
    alphas: Vec<Vec<S>>,
    betas: Vec<Vec<S>>,
}

pub type ExactNet = TwoLayerNet<Rational>;
pub type FloatNet = TwoLayerNet<f64>;

impl<S: Scalar> TwoLayerNet<S> {
    pub fn new(n: usize, d: usize, alphas: Vec<Vec<S>>, betas: Vec<Vec<S>>) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(malformed(format!(
                "{} channel vectors but {} output weights",
                alphas.len(),
                betas.len()
            )));
        }
        if let Some(i) = alphas.iter().position(|a| a.len() != n) {
            return Err(malformed(format!(
                "channel {i} has length {}, expected {n}",
                alphas[i].len()
            )));
        }
        if let Some(i) = betas.iter().position(|b| b.len() != d) {
            return Err(malformed(format!(
                "output weight {i} has length {}, expected {d}",
                betas[i].len()
            )));
        }
        Ok(TwoLayerNet { n, d, alphas, betas })
    }

    pub fn zero(n: usize, d: usize) -> Self {
        TwoLayerNet {
            n,
            d,
            alphas: Vec::new(),
            betas: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.d
    }

    pub fn neurons(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Vec<S>] {
        &self.alphas
    }

    pub fn betas(&self) -> &[Vec<S>] {
        &self.betas
    }

    pub fn alpha(&self, i: usize) -> &[S] {
        &self.alphas[i]
    }

    pub fn beta(&self, i: usize) -> &[S] {
        &self.betas[i]
    }

    /// First-layer weights, `m × n`.
    pub fn first_layer(&self) -> Matrix<S> {
        if self.alphas.is_empty() {
            return Matrix::zeros(0, self.n);
        }
        Matrix::from_rows(self.alphas.clone()).expect("rows share the input dimension")
    }

    /// Second-layer weights, `d × m`.
    pub fn second_layer(&self) -> Matrix<S> {
        Matrix::from_columns(self.d, &self.betas)
    }

    pub fn push(&mut self, alpha: Vec<S>, beta: Vec<S>) {
        assert_eq!(alpha.len(), self.n);
        assert_eq!(beta.len(), self.d);
        self.alphas.push(alpha);
        self.betas.push(beta);
    }

    fn check_input(&self, x: &[S]) -> Result<()> {
        if x.len() != self.n {
            return Err(malformed(format!("input of length {}, expected {}", x.len(), self.n)));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_input(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.d];
        for (a, b) in self.alphas.iter().zip(&self.betas) {
            let act = relu(&dot(a, x));
            if act.is_zero() {
                continue;
            }
            for (o, bj) in out.iter_mut().zip(b) {
                *o = o.clone() + bj.clone() * act.clone();
            }
        }
        out
    }

    /// `Σ_{i : ⟨α_i,x⟩ > 0} α_i β_iᵀ`, an `n × d` matrix. Zero channels are
    /// ignored; any other channel vanishing at `x` is an error.
    pub fn feature_at(&self, x: &[S]) -> Result<Matrix<S>> {
        self.check_input(x)?;
        let mut f = Matrix::zeros(self.n, self.d);
        for (i, (a, b)) in self.alphas.iter().zip(&self.betas).enumerate() {
            if is_zero_vec(a) {
                continue;
            }
            let s = dot(a, x);
            if s.is_zero() {
                return Err(Error::NotGeneric { index: i });
            }
            if s.is_positive() {
                add_outer(&mut f, a, b);
            }
        }
        Ok(f)
    }

    /// `x ↦ F(M x)`: channel vectors become `Mᵀ α_i`.
    pub fn precompose(&self, m: &Matrix<S>) -> Self {
        assert_eq!(m.rows(), self.n);
        TwoLayerNet {
            n: m.cols(),
            d: self.d,
            alphas: self.alphas.iter().map(|a| m.tr_mul_vec(a)).collect(),
            betas: self.betas.clone(),
        }
    }

    /// `x ↦ M F(x)`.
    pub fn postcompose(&self, m: &Matrix<S>) -> Self {
        assert_eq!(m.cols(), self.d);
        TwoLayerNet {
            n: self.n,
            d: m.rows(),
            alphas: self.alphas.clone(),
            betas: self.betas.iter().map(|b| m.mul_vec(b)).collect(),
        }
    }

    pub fn scale_output(&self, c: &S) -> Self {
        let mut out = self.clone();
        out.betas = self.betas.iter().map(|b| scale(b, c)).collect();
        out
    }

    /// Concatenates the neurons of two nets, i.e. computes `F + G`.
    pub fn sum(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.d), (other.n, other.d));
        let mut out = self.clone();
        out.alphas.extend(other.alphas.iter().cloned());
        out.betas.extend(other.betas.iter().cloned());
        out
    }

    pub fn negate(&self) -> Self {
        self.scale_output(&-S::one())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TwoLayerNet<T> {
        let conv = |vs: &Vec<Vec<S>>| -> Vec<Vec<T>> { vs.iter().map(|v| v.iter().map(&f).collect()).collect() };
        TwoLayerNet {
            n: self.n,
            d: self.d,
            alphas: conv(&self.alphas),
            betas: conv(&self.betas),
        }
    }

    pub fn to_f64(&self) -> FloatNet {
        self.map(Scalar::to_f64)
    }
}

/// `β₁ σ(α₁·x) + β₂ σ(α₂·x) + …`, with vectors in parentheses.
impl std::fmt::Display for ExactNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &[Rational]| {
            let parts: Vec<String> = v.iter().map(crate::linalg::format_rational).collect();
            parts.join(", ")
        };
        if self.alphas.is_empty() {
            return write!(f, "0");
        }
        for (i, (a, b)) in self.alphas.iter().zip(&self.betas).enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if b.len() == 1 {
                write!(f, "{}", crate::linalg::format_rational(&b[0]))?;
            } else {
                write!(f, "({})", show(b))?;
            }
            write!(f, "·σ(({})·x)", show(a))?;
        }
        Ok(())
    }
}

fn add_outer<S: Scalar>(f: &mut Matrix<S>, a: &[S], b: &[S]) {
    for (r, ar) in a.iter().enumerate() {
        for (c, bc) in b.iter().enumerate() {
            let v = f.get(r, c).clone() + ar.clone() * bc.clone();
            f.set(r, c, v);
        }
    }
}

impl ExactNet {
    pub fn from_ints(n: usize, d: usize, alphas: &[&[i64]], betas: &[&[i64]]) -> Self {
        let conv = |vs: &[&[i64]]| vs.iter().map(|v| crate::linalg::qvec(v)).collect();
        Self::new(n, d, conv(alphas), conv(betas)).expect("consistent dimensions")
    }

    /// Exact conversion of a float net.
    pub fn from_f64(net: &FloatNet) -> Self {
        net.map(|x| crate::linalg::rational_from_f64(*x))
    }

    /// `x ↦ F(ρ_g x)`.
    pub fn compose_rep(&self, rho: &Representation, g: usize) -> Self {
        self.precompose(rho.matrix(g))
    }

    /// Drops zero channels and zero output weights; the function is unchanged.
    pub fn prune(&self) -> Self {
        let mut out = Self::zero(self.n, self.d);
        for (a, b) in self.alphas.iter().zip(&self.betas) {
            if !is_zero_vec(a) && !is_zero_vec(b) {
                out.push(a.clone(), b.clone());
            }
        }
        out
    }
}

/// A point where two nets differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub point: Vec<Rational>,
    pub left: Vec<Rational>,
    pub right: Vec<Rational>,
}

/// Decides `a(x) = b(x)` for all `x` exactly.
///
/// Both nets are positively homogeneous and piecewise linear on the cells of
/// the central arrangement formed by all their channel hyperplanes, so they
/// agree everywhere iff their feature matrices agree on every cell.
pub fn nets_equal_exact(a: &ExactNet, b: &ExactNet) -> Result<bool> {
    Ok(find_discrepancy(a, b)?.is_none())
}

/// Like [`nets_equal_exact`] but returns a point where the nets differ.
pub fn find_discrepancy(a: &ExactNet, b: &ExactNet) -> Result<Option<Discrepancy>> {
    if a.n != b.n || a.d != b.d {
        return Err(malformed(format!(
            "comparing nets of shape {}->{} and {}->{}",
            a.n, a.d, b.n, b.d
        )));
    }
    if a.n == 0 {
        return Ok(None);
    }
    let normals: Vec<Vec<Rational>> = a
        .alphas
        .iter()
        .chain(&b.alphas)
        .filter(|v| !is_zero_vec(v))
        .cloned()
        .collect();
    for w in cell_witnesses(a.n, &normals) {
        let fa = a.feature_at(&w)?;
        let fb = b.feature_at(&w)?;
        if fa == fb {
            continue;
        }
        // The difference is linear with nonzero matrix on this open cell; a
        // small step along some axis exposes it if w itself does not.
        let diff = fa.sub(&fb);
        let mut candidates = vec![w.clone()];
        for k in 0..a.n {
            let mut e = vec![Rational::zero(); a.n];
            e[k] = Rational::one();
            let eps = step_within_cell(&normals, &w, &e);
            candidates.push(w.iter().zip(&e).map(|(x, ek)| x + &eps * ek).collect());
        }
        let point = candidates
            .into_iter()
            .find(|p| !is_zero_vec(&diff.tr_mul_vec(p)))
            .expect("nonzero linear map vanishes on an open set");
        return Ok(Some(Discrepancy {
            left: a.eval_unchecked(&point),
            right: b.eval_unchecked(&point),
            point,
        }));
    }
    Ok(None)
}

/// `W^(L) σ(… σ(W^(1) x))`, no activation after the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerNet<S> {
    weights: Vec<Matrix<S>>,
}

impl<S: Scalar> MultiLayerNet<S> {
    pub fn new(weights: Vec<Matrix<S>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(malformed("multilayer net needs at least one layer"));
        }
        for (l, pair) in weights.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(malformed(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    l + 1,
                    pair[0].rows(),
                    l + 2,
                    pair[1].cols()
                )));
            }
        }
        Ok(MultiLayerNet { weights })
    }

    pub fn weights(&self) -> &[Matrix<S>] {
        &self.weights
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().expect("nonempty").rows()
    }

    pub fn evaluate(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.input_dim() {
            return Err(malformed(format!(
                "input of length {}, expected {}",
                x.len(),
                self.input_dim()
            )));
        }
        let (last, hidden) = self.weights.split_last().expect("nonempty");
        let mut h = x.to_vec();
        for w in hidden {
            h = w.mul_vec(&h).iter().map(relu).collect();
        }
        Ok(last.mul_vec(&h))
    }

    pub fn to_f64(&self) -> MultiLayerNet<f64> {
        MultiLayerNet {
            weights: self.weights.iter().map(|w| w.map(Scalar::to_f64)).collect(),
        }
    }
}

impl<S: Scalar> From<&TwoLayerNet<S>> for MultiLayerNet<S> {
    fn from(net: &TwoLayerNet<S>) -> Self {
        MultiLayerNet {
            weights: vec![net.first_layer(), net.second_layer()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{len6, target_s};
    use crate::linalg::{frac, q, qvec};

    #[test]
    fn evaluate_target_at_witness_point() {
        let s = target_s();
        assert_eq!(s.evaluate(&qvec(&[1, -1])).unwrap(), vec![q(2)]);
        assert_eq!(s.evaluate(&qvec(&[0, 0])).unwrap(), vec![q(0)]);
        assert!(s.evaluate(&qvec(&[1])).is_err());
        let empty = ExactNet::zero(2, 3);
        assert_eq!(empty.evaluate(&qvec(&[4, 5])).unwrap(), qvec(&[0, 0, 0]));
    }

    #[test]
    fn feature_function() {
        let s = target_s();
        let f = s.feature_at(&qvec(&[1, -1])).unwrap();
        assert_eq!(f, Matrix::from_int_rows(&[&[1], &[-1]]));
        assert!(matches!(
            s.feature_at(&qvec(&[0, 1])),
            Err(Error::NotGeneric { index: 0 })
        ));
        let empty = ExactNet::zero(2, 1);
        assert!(empty.feature_at(&qvec(&[0, 1])).unwrap().is_zero());
    }

    #[test]
    fn zero_channels_are_ignored_by_features() {
        let net = ExactNet::from_ints(2, 1, &[&[0, 0], &[1, 1]], &[&[5], &[1]]);
        assert_eq!(
            net.feature_at(&qvec(&[1, 0])).unwrap(),
            Matrix::from_int_rows(&[&[1], &[1]])
        );
    }

    #[test]
    fn target_equals_six_neuron_form() {
        assert!(nets_equal_exact(&target_s(), &len6()).unwrap());
    }

    #[test]
    fn equality_basics() {
        let s = target_s();
        assert!(nets_equal_exact(&s, &s).unwrap());
        let pos = ExactNet::from_ints(1, 1, &[&[1]], &[&[1]]);
        let negd = ExactNet::from_ints(1, 1, &[&[-1]], &[&[1]]);
        let d = find_discrepancy(&pos, &negd).unwrap().unwrap();
        assert_ne!(d.left, d.right);
        // σ(a) - σ(-a) written with rescaled channels.
        let lin = ExactNet::from_ints(1, 1, &[&[1], &[-1]], &[&[1], &[-1]]);
        let lin2 = ExactNet::new(
            1,
            1,
            vec![vec![q(2)], vec![q(-2)]],
            vec![vec![frac(1, 2)], vec![frac(-1, 2)]],
        )
        .unwrap();
        assert!(nets_equal_exact(&lin, &lin2).unwrap());
        assert!(nets_equal_exact(&s, &ExactNet::zero(3, 1)).is_err());
    }

    #[test]
    fn discrepancy_found_when_value_vanishes_at_cell_witness() {
        // a(x) = σ(x1) + σ(-x1), b(x) = σ(x1) + σ(-x1) + (σ(x2) - σ(-x2)):
        // they differ by x2, which vanishes on the x1 axis.
        let a = ExactNet::from_ints(2, 1, &[&[1, 0], &[-1, 0]], &[&[1], &[1]]);
        let b = a.sum(&ExactNet::from_ints(2, 1, &[&[0, 1], &[0, -1]], &[&[1], &[-1]]));
        let d = find_discrepancy(&a, &b).unwrap().unwrap();
        assert_ne!(d.left, d.right);
    }

    #[test]
    fn multilayer_matches_two_layer() {
        let s = target_s();
        let ml = MultiLayerNet::from(&s);
        for x in [qvec(&[1, -1]), qvec(&[3, 2]), qvec(&[-5, 7])] {
            assert_eq!(ml.evaluate(&x).unwrap(), s.evaluate(&x).unwrap());
        }
        let zero = MultiLayerNet::new(vec![Matrix::<Rational>::zeros(3, 2), Matrix::zeros(1, 3)]).unwrap();
        assert_eq!(zero.evaluate(&qvec(&[1, 2])).unwrap(), qvec(&[0]));
        assert!(MultiLayerNet::new(vec![Matrix::<Rational>::zeros(3, 2), Matrix::zeros(1, 2)]).is_err());
    }

    #[test]
    fn identity_middle_layer_is_transparent() {
        let s = target_s();
        let three = MultiLayerNet::new(vec![s.first_layer(), Matrix::identity(3), s.second_layer()]).unwrap();
        for x in [qvec(&[1, -1]), qvec(&[3, 2]), qvec(&[-5, 7])] {
            assert_eq!(three.evaluate(&x).unwrap(), s.evaluate(&x).unwrap());
        }
    }
}
