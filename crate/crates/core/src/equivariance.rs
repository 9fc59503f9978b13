//! Exact decision procedures for equivariance of the end-to-end map, for
//! layer-wise equivariance, and for ReLU-admissible hidden representations,
//! plus the group-averaging projection.

use std::fmt;

use num::traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{invalid, malformed, Result};
use crate::group::Representation;
use crate::linalg::{relu, Matrix, Rational, Scalar};
use crate::relu_net::{find_discrepancy, ExactNet, TwoLayerNet};

/// Outcome of a decision procedure: either the property holds or a witness
/// of its failure is returned.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails(w) => Some(w),
        }
    }
}

/// The input, hidden and output representations of a layer-wise
/// equivariant network, all over the same group.
#[derive(Debug, Clone)]
pub struct EquivarianceTriple {
    pub rho: Representation,
    pub psi: Representation,
    pub phi: Representation,
}

impl EquivarianceTriple {
    pub fn new(rho: Representation, psi: Representation, phi: Representation) -> Result<Self> {
        if !rho.same_group(&psi) || !rho.same_group(&phi) {
            return Err(malformed("representations are over different groups"));
        }
        Ok(EquivarianceTriple { rho, psi, phi })
    }

    /// Triple with trivial output representation of dimension `d`.
    pub fn invariant(rho: Representation, psi: Representation, d: usize) -> Result<Self> {
        let phi = Representation::trivial(rho.group().clone(), d);
        Self::new(rho, psi, phi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivarianceWitness {
    pub element: usize,
    pub element_name: String,
    pub point: Vec<Rational>,
    /// `F(ρ_g x)`.
    pub transformed_input: Vec<Rational>,
    /// `φ_g F(x)`.
    pub transformed_output: Vec<Rational>,
}

fn check_dims(net: &ExactNet, rho: &Representation, phi: &Representation) -> Result<()> {
    if rho.dim() != net.input_dim() || phi.dim() != net.output_dim() {
        return Err(malformed(format!(
            "net maps {} -> {} but representations have dims {} and {}",
            net.input_dim(),
            net.output_dim(),
            rho.dim(),
            phi.dim()
        )));
    }
    if !rho.same_group(phi) {
        return Err(malformed("input and output representations are over different groups"));
    }
    Ok(())
}

/// Decides `F ∘ ρ_g = φ_g ∘ F` for every group element exactly. The first
/// failing element (in group order) is reported with a point where the two
/// sides differ.
pub fn is_equivariant(
    net: &ExactNet,
    rho: &Representation,
    phi: &Representation,
) -> Result<Verdict<EquivarianceWitness>> {
    check_dims(net, rho, phi)?;
    let net = net.prune();
    let n = net.input_dim();
    for g in 0..rho.group().order() {
        let lhs = net.compose_rep(rho, g);
        let rhs = net.postcompose(phi.matrix(g));
        let axis_points = (0..n).flat_map(|k| {
            [Rational::one(), -Rational::one()].into_iter().map(move |s| {
                let mut e = vec![Rational::zero(); n];
                e[k] = s;
                e
            })
        });
        let point = match axis_points
            .into_iter()
            .find(|x| lhs.eval_unchecked(x) != rhs.eval_unchecked(x))
        {
            Some(x) => Some(x),
            None => find_discrepancy(&lhs, &rhs)?.map(|d| d.point),
        };
        if let Some(point) = point {
            return Ok(Verdict::Fails(EquivarianceWitness {
                element: g,
                element_name: rho.group().name(g).to_string(),
                transformed_input: lhs.eval_unchecked(&point),
                transformed_output: rhs.eval_unchecked(&point),
                point,
            }));
        }
    }
    Ok(Verdict::Holds)
}

pub fn is_invariant(net: &ExactNet, rho: &Representation) -> Result<Verdict<EquivarianceWitness>> {
    let phi = Representation::trivial(rho.group().clone(), net.output_dim());
    is_equivariant(net, rho, &phi)
}

/// Why a single matrix fails to commute with ReLU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdmissionDefect {
    /// Row `row` has `count` nonzero entries instead of one.
    RowNonzeros { row: usize, count: usize },
    /// Entry `(row, col)` is negative.
    NegativeEntry { row: usize, col: usize },
    /// Column `col` has `count` nonzero entries instead of one.
    ColumnNonzeros { col: usize, count: usize },
}

impl fmt::Display for AdmissionDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissionDefect::RowNonzeros { row, count } => {
                write!(f, "row {row} has {count} nonzero entries")
            }
            AdmissionDefect::NegativeEntry { row, col } => {
                write!(f, "entry ({row}, {col}) is negative")
            }
            AdmissionDefect::ColumnNonzeros { col, count } => {
                write!(f, "column {col} has {count} nonzero entries")
            }
        }
    }
}

/// Checks that `m` is a generalized permutation matrix with positive
/// nonzero entries.
pub fn admitted_matrix(m: &Matrix<Rational>) -> std::result::Result<(), AdmissionDefect> {
    for row in 0..m.rows() {
        let nz: Vec<usize> = (0..m.cols()).filter(|&j| !m.get(row, j).is_zero()).collect();
        if nz.len() != 1 {
            return Err(AdmissionDefect::RowNonzeros { row, count: nz.len() });
        }
        if m.get(row, nz[0]).is_negative() {
            return Err(AdmissionDefect::NegativeEntry { row, col: nz[0] });
        }
    }
    for col in 0..m.cols() {
        let count = (0..m.rows()).filter(|&i| !m.get(i, col).is_zero()).count();
        if count != 1 {
            return Err(AdmissionDefect::ColumnNonzeros { col, count });
        }
    }
    Ok(())
}

/// An input on which `m σ(x) ≠ σ(m x)`, derived from the defect: `e_j - e_k`
/// for a row with two nonzeros `m_ij ≤ m_ik`, and `e_j` for a negative entry
/// in column `j`. Column defects of singular matrices have no such witness.
pub fn commutation_witness(m: &Matrix<Rational>, defect: &AdmissionDefect) -> Option<Vec<Rational>> {
    let mut x = vec![Rational::zero(); m.cols()];
    match *defect {
        AdmissionDefect::RowNonzeros { row, count } if count >= 2 => {
            let nz: Vec<usize> = (0..m.cols()).filter(|&j| !m.get(row, j).is_zero()).collect();
            let (mut j, mut k) = (nz[0], nz[1]);
            if m.get(row, j) > m.get(row, k) {
                std::mem::swap(&mut j, &mut k);
            }
            x[j] = Rational::one();
            x[k] = -Rational::one();
            Some(x)
        }
        AdmissionDefect::NegativeEntry { col, .. } => {
            x[col] = Rational::one();
            Some(x)
        }
        _ => None,
    }
}

/// `m σ(x) = σ(m x)`.
pub fn commutes_with_relu<S: Scalar>(m: &Matrix<S>, x: &[S]) -> bool {
    let relu_x: Vec<S> = x.iter().map(relu).collect();
    let lhs = m.mul_vec(&relu_x);
    let rhs: Vec<S> = m.mul_vec(x).iter().map(relu).collect();
    lhs == rhs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissionFailure {
    pub element: String,
    pub defect: AdmissionDefect,
}

/// Whether every `ψ_g` commutes with ReLU.
pub fn is_admitted(psi: &Representation) -> Verdict<AdmissionFailure> {
    for g in 0..psi.group().order() {
        if let Err(defect) = admitted_matrix(psi.matrix(g)) {
            return Verdict::Fails(AdmissionFailure {
                element: psi.group().name(g).to_string(),
                defect,
            });
        }
    }
    Verdict::Holds
}

/// `ψ = diag(λ) P`: row `i` has its single nonzero `scales[i]` in column
/// `perm[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPermutation {
    pub perm: Vec<usize>,
    pub scales: Vec<Rational>,
}

impl ScaledPermutation {
    pub fn is_permuting(&self) -> bool {
        self.scales.iter().all(One::is_one)
    }

    /// Cycle notation with 1-based indices, fixed points omitted.
    pub fn cycles(&self) -> String {
        let mut seen = vec![false; self.perm.len()];
        let mut out = String::new();
        for start in 0..self.perm.len() {
            if seen[start] || self.perm[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push((i + 1).to_string());
                i = self.perm[i];
            }
            out.push_str(&format!("({})", cycle.join(" ")));
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }
}

pub fn permutation_of(m: &Matrix<Rational>) -> Result<ScaledPermutation> {
    admitted_matrix(m).map_err(|d| invalid(format!("matrix is not admitted: {d}")))?;
    let (perm, scales) = (0..m.rows())
        .map(|i| {
            let j = (0..m.cols()).find(|&j| !m.get(i, j).is_zero()).expect("one nonzero");
            (j, m.get(i, j).clone())
        })
        .unzip();
    Ok(ScaledPermutation { perm, scales })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LenCondition {
    /// `W⁽¹⁾ ρ_g = ψ_g W⁽¹⁾`.
    FirstLayer,
    /// `φ_g W⁽²⁾ = W⁽²⁾ ψ_g`.
    SecondLayer,
    /// `ψ_g σ = σ ψ_g`.
    Admitted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LenFailure {
    pub condition: LenCondition,
    pub element: String,
}

/// Checks the three layer-wise conditions exactly, for every element, in
/// the order first layer, second layer, admissibility.
pub fn is_len(net: &ExactNet, triple: &EquivarianceTriple) -> Result<Verdict<LenFailure>> {
    let EquivarianceTriple { rho, psi, phi } = triple;
    check_dims(net, rho, phi)?;
    if psi.dim() != net.neurons() {
        return Err(malformed(format!(
            "hidden representation has dim {} but the net has {} neurons",
            psi.dim(),
            net.neurons()
        )));
    }
    let w1 = net.first_layer();
    let w2 = net.second_layer();
    let group = rho.group();
    let fail = |condition, g: usize| {
        Ok(Verdict::Fails(LenFailure {
            condition,
            element: group.name(g).to_string(),
        }))
    };
    for g in 0..group.order() {
        if w1.mul(rho.matrix(g)) != psi.matrix(g).mul(&w1) {
            return fail(LenCondition::FirstLayer, g);
        }
    }
    for g in 0..group.order() {
        if phi.matrix(g).mul(&w2) != w2.mul(psi.matrix(g)) {
            return fail(LenCondition::SecondLayer, g);
        }
    }
    for g in 0..group.order() {
        if admitted_matrix(psi.matrix(g)).is_err() {
            return fail(LenCondition::Admitted, g);
        }
    }
    Ok(Verdict::Holds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlignmentViolation {
    /// `β_j ≠ (ψ_g)_{ij} β_i` although `P_g(i) = j`.
    NotProportional { element: String, i: usize, j: usize },
    /// Two elements move `i` to `j` with different scale factors.
    InconsistentScale {
        first: String,
        second: String,
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    /// Neuron indices grouped by the hidden permutation action.
    pub components: Vec<Vec<usize>>,
    pub violations: Vec<AlignmentViolation>,
    /// All nonzero entries of every `ψ_g` equal one.
    pub permuting: bool,
    /// `β_i = scales[i] · β_root` with `root` the smallest index of the
    /// component; only meaningful when there are no violations.
    pub scales: Vec<Rational>,
    pub roots: Vec<usize>,
}

impl AlignmentReport {
    pub fn aligned(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For an invariant layer-wise net, checks that output weights connected by
/// the hidden permutation action are positive multiples of one another,
/// with a multiplier that depends only on the index pair.
pub fn check_orbit_alignment(net: &ExactNet, psi: &Representation, phi: &Representation) -> Result<AlignmentReport> {
    if let Verdict::Fails(f) = is_admitted(psi) {
        return Err(invalid(format!(
            "hidden representation is not admitted at {}: {}",
            f.element, f.defect
        )));
    }
    if !phi.is_trivial() {
        return Err(invalid(
            "orbit alignment applies to invariant nets (trivial output representation)",
        ));
    }
    let m = net.neurons();
    if psi.dim() != m {
        return Err(malformed("hidden representation does not match neuron count"));
    }
    let group = psi.group();
    let perms: Vec<ScaledPermutation> = psi
        .matrices()
        .iter()
        .map(|p| permutation_of(p).expect("admitted"))
        .collect();

    let mut violations = Vec::new();
    // scale_seen[(i, j)] = (element, λ) of the first element moving i to j.
    let mut scale_seen: std::collections::HashMap<(usize, usize), (usize, Rational)> = std::collections::HashMap::new();
    for (g, p) in perms.iter().enumerate() {
        for i in 0..m {
            let j = p.perm[i];
            let lambda = &p.scales[i];
            let expected: Vec<Rational> = net.beta(i).iter().map(|b| b * lambda).collect();
            if net.beta(j) != expected.as_slice() {
                violations.push(AlignmentViolation::NotProportional {
                    element: group.name(g).into(),
                    i,
                    j,
                });
            }
            match scale_seen.get(&(i, j)) {
                Some((h, mu)) if mu != lambda => violations.push(AlignmentViolation::InconsistentScale {
                    first: group.name(*h).into(),
                    second: group.name(g).into(),
                    i,
                    j,
                }),
                Some(_) => {}
                None => {
                    scale_seen.insert((i, j), (g, lambda.clone()));
                }
            }
        }
    }

    // Components and scales by traversal from the smallest index.
    let mut roots = vec![usize::MAX; m];
    let mut scales = vec![Rational::zero(); m];
    let mut components = Vec::new();
    for r in 0..m {
        if roots[r] != usize::MAX {
            continue;
        }
        roots[r] = r;
        scales[r] = Rational::one();
        let mut comp = vec![r];
        let mut stack = vec![r];
        while let Some(i) = stack.pop() {
            for p in &perms {
                let j = p.perm[i];
                if roots[j] == usize::MAX {
                    roots[j] = r;
                    scales[j] = &scales[i] * &p.scales[i];
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    Ok(AlignmentReport {
        components,
        violations,
        permuting: perms.iter().all(ScaledPermutation::is_permuting),
        scales,
        roots,
    })
}

/// `x ↦ (1/|G|) Σ_g φ_g⁻¹ F(ρ_g x)` as an `m·|G|`-neuron net with channels
/// `ρ_gᵀ α_i` and output weights `φ_g⁻¹ β_i / |G|`, neuron-major.
pub fn project_equivariant(net: &ExactNet, rho: &Representation, phi: &Representation) -> Result<ExactNet> {
    check_dims(net, rho, phi)?;
    Ok(project_generic(net, rho, phi))
}

pub(crate) fn project_generic<S: Scalar>(
    net: &TwoLayerNet<S>,
    rho: &Representation,
    phi: &Representation,
) -> TwoLayerNet<S> {
    let order = rho.group().order();
    let inv_order = S::from_rational(&Rational::new(1.into(), (order as i64).into()));
    let rho_t: Vec<Matrix<S>> = (0..order)
        .map(|g| rho.matrix(g).map(S::from_rational).transpose())
        .collect();
    let phi_inv: Vec<Matrix<S>> = (0..order)
        .map(|g| phi.inverse_matrix(g).map(S::from_rational))
        .collect();
    let mut out = TwoLayerNet::zero(net.input_dim(), net.output_dim());
    for (a, b) in net.alphas().iter().zip(net.betas()) {
        for g in 0..order {
            let beta: Vec<S> = phi_inv[g]
                .mul_vec(b)
                .into_iter()
                .map(|x| x * inv_order.clone())
                .collect();
            out.push(rho_t[g].mul_vec(a), beta);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::linalg::{frac, q, qvec};
    use crate::relu_net::nets_equal_exact;
    use std::sync::Arc;

    #[test]
    fn target_is_invariant() {
        assert!(is_invariant(&target_s(), &example_rho()).unwrap().holds());
    }

    #[test]
    fn single_relu_is_not_invariant() {
        let v = is_invariant(&sigma_a(), &example_rho()).unwrap();
        let w = v.witness().unwrap();
        assert_ne!(w.transformed_input, w.transformed_output);
        assert_eq!(w.point, qvec(&[1, 0]));
        // The swap is the first element to fail in group order.
        assert_eq!(w.element_name, "g");
    }

    #[test]
    fn empty_net_is_equivariant_for_any_reps() {
        let rho = example_rho();
        assert!(is_equivariant(&ExactNet::zero(2, 2), &rho, &rho).unwrap().holds());
    }

    #[test]
    fn dimension_mismatch_is_malformed() {
        let rho = example_rho();
        let net = ExactNet::zero(3, 1);
        assert!(is_invariant(&net, &rho).is_err());
    }

    #[test]
    fn admitted_examples() {
        assert!(is_admitted(&example_psi6()).holds());
        let z2 = Arc::new(crate::FiniteGroup::cyclic(2));
        let neg =
            Representation::new(z2.clone(), vec![Matrix::identity(2), Matrix::identity(2).scale(&q(-1))]).unwrap();
        assert!(matches!(
            is_admitted(&neg),
            Verdict::Fails(AdmissionFailure {
                defect: AdmissionDefect::NegativeEntry { .. },
                ..
            })
        ));
        let shear = Matrix::from_int_rows(&[&[1, 1], &[0, 1]]);
        assert_eq!(
            admitted_matrix(&shear),
            Err(AdmissionDefect::RowNonzeros { row: 0, count: 2 })
        );
        let x = commutation_witness(&shear, &admitted_matrix(&shear).unwrap_err()).unwrap();
        assert!(!commutes_with_relu(&shear, &x));
    }

    #[test]
    fn permutation_read_off() {
        let psi = example_psi6();
        let pg = permutation_of(psi.matrix(1)).unwrap();
        assert_eq!(pg.cycles(), "(1 2)(3 4)(5 6)");
        assert!(pg.is_permuting());
        let id = permutation_of(&Matrix::identity(3)).unwrap();
        assert_eq!(id.perm, vec![0, 1, 2]);
        assert_eq!(id.cycles(), "()");
        let m = Matrix::from_diagonal(&qvec(&[2, 3])).mul(&Matrix::from_int_rows(&[&[0, 1], &[1, 0]]));
        let p = permutation_of(&m).unwrap();
        assert_eq!(p.cycles(), "(1 2)");
        assert_eq!(p.scales, qvec(&[2, 3]));
        assert!(permutation_of(&Matrix::from_int_rows(&[&[1, 1], &[0, 1]])).is_err());
    }

    #[test]
    fn six_neuron_net_is_layerwise() {
        let triple = EquivarianceTriple::invariant(example_rho(), example_psi6(), 1).unwrap();
        assert!(is_len(&len6(), &triple).unwrap().holds());
        let mut alphas = len6().alphas().to_vec();
        let mut betas = len6().betas().to_vec();
        betas[0] = vec![frac(-1, 2)];
        alphas.truncate(6);
        let flipped = ExactNet::new(2, 1, alphas, betas).unwrap();
        let v = is_len(&flipped, &triple).unwrap();
        assert_eq!(v.witness().unwrap().condition, LenCondition::SecondLayer);
    }

    #[test]
    fn alignment_of_six_neuron_net() {
        let rho = example_rho();
        let phi = Representation::trivial(rho.group().clone(), 1);
        let r = check_orbit_alignment(&len6(), &example_psi6(), &phi).unwrap();
        assert!(r.aligned());
        assert!(r.permuting);
        assert_eq!(r.components, vec![vec![0, 1, 2, 3], vec![4, 5]]);
    }

    #[test]
    fn alignment_trivial_group_and_violation() {
        let g = Arc::new(crate::FiniteGroup::trivial());
        let psi = Representation::trivial(g.clone(), 3);
        let phi = Representation::trivial(g.clone(), 1);
        let net = ExactNet::from_ints(1, 1, &[&[1], &[2], &[3]], &[&[1], &[-1], &[5]]);
        let r = check_orbit_alignment(&net, &psi, &phi).unwrap();
        assert_eq!(r.components.len(), 3);
        assert!(r.aligned());

        let z2 = Arc::new(crate::FiniteGroup::cyclic(2));
        let swap = Matrix::from_int_rows(&[&[0, 1], &[1, 0]]);
        let psi = Representation::new(z2.clone(), vec![Matrix::identity(2), swap]).unwrap();
        let phi = Representation::trivial(z2, 1);
        let net = ExactNet::from_ints(1, 1, &[&[1], &[-1]], &[&[1], &[-1]]);
        let r = check_orbit_alignment(&net, &psi, &phi).unwrap();
        assert!(!r.aligned());
    }

    #[test]
    fn projection_of_single_relu() {
        let rho = example_rho();
        let phi = Representation::trivial(rho.group().clone(), 1);
        let p = project_equivariant(&sigma_a(), &rho, &phi).unwrap();
        assert_eq!(p.neurons(), 4);
        let quarter = vec![frac(1, 4)];
        let expected = ExactNet::new(
            2,
            1,
            vec![qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[-1, 0]), qvec(&[0, -1])],
            vec![quarter; 4],
        )
        .unwrap();
        assert!(nets_equal_exact(&p, &expected).unwrap());
        assert_eq!(p.evaluate(&qvec(&[3, -5])).unwrap(), vec![q(2)]);
        assert!(nets_equal_exact(&project_equivariant(&target_s(), &rho, &phi).unwrap(), &target_s()).unwrap());
        assert_eq!(
            project_equivariant(&ExactNet::zero(2, 1), &rho, &phi)
                .unwrap()
                .neurons(),
            0
        );
    }
}
