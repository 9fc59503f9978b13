//! Finite groups given by multiplication tables, rational matrix
//! representations, and transposed-action orbits.

use std::collections::HashMap;
use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::Zero;
use thiserror::Error;

use crate::error::{invalid, malformed, Result};
use crate::linalg::{proportionality, ray_form, Matrix, Rational};

/// First group axiom found to fail, with the witnessing indices.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupViolation {
    #[error("closure: table[{row}][{col}] = {value} is not an element index")]
    Closure { row: usize, col: usize, value: usize },
    #[error("identity: index {identity} is not a two-sided identity (fails at {element})")]
    Identity { identity: usize, element: usize },
    #[error("inverse: element {element} has no two-sided inverse")]
    Inverse { element: usize },
    #[error("associativity: ({a}*{b})*{c} != {a}*({b}*{c})")]
    Associativity { a: usize, b: usize, c: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, serde::Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RepViolation {
    #[error("matrix of element {element} is singular")]
    Singular { element: String },
    #[error("matrix of the identity {element} is not the identity matrix")]
    IdentityNotIdentity { element: String },
    #[error("not a homomorphism: rho({g}) rho({h}) != rho({g}{h})")]
    NotHomomorphic { g: String, h: String },
}

/// Checks the group axioms on a Cayley table.
///
/// Returns `Ok(Err(_))` when the table is well-formed but violates an
/// axiom, and `Err(_)` when it is not even square.
pub fn verify_group(table: &[Vec<usize>], identity: usize) -> Result<std::result::Result<Vec<usize>, GroupViolation>> {
    let n = table.len();
    if n == 0 || table.iter().any(|r| r.len() != n) {
        return Err(malformed("group table must be square and nonempty"));
    }
    if identity >= n {
        return Err(malformed(format!("identity index {identity} out of range")));
    }
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v >= n {
                return Ok(Err(GroupViolation::Closure {
                    row: i,
                    col: j,
                    value: v,
                }));
            }
        }
    }
    for i in 0..n {
        if table[identity][i] != i || table[i][identity] != i {
            return Ok(Err(GroupViolation::Identity { identity, element: i }));
        }
    }
    let mut inverse = vec![0; n];
    for (i, inv) in inverse.iter_mut().enumerate() {
        match (0..n).find(|&j| table[i][j] == identity && table[j][i] == identity) {
            Some(j) => *inv = j,
            None => return Ok(Err(GroupViolation::Inverse { element: i })),
        }
    }
    for a in 0..n {
        for b in 0..n {
            let ab = table[a][b];
            for c in 0..n {
                if table[ab][c] != table[a][table[b][c]] {
                    return Ok(Err(GroupViolation::Associativity { a, b, c }));
                }
            }
        }
    }
    Ok(Ok(inverse))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    pub fn new(elements: Vec<String>, table: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        if elements.len() != table.len() {
            return Err(malformed("element list and table sizes differ"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = elements.iter().find(|e| !seen.insert(e.as_str())) {
            return Err(malformed(format!("duplicate element name {dup:?}")));
        }
        let inverse = verify_group(&table, identity)??;
        Ok(FiniteGroup {
            elements,
            table,
            identity,
            inverse,
        })
    }

    pub fn trivial() -> Self {
        Self::new(vec!["e".into()], vec![vec![0]], 0).expect("trivial group")
    }

    /// Cyclic group with elements `e, r, r2, ...`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0);
        let elements = (0..n)
            .map(|k| match k {
                0 => "e".to_string(),
                1 => "r".to_string(),
                _ => format!("r{k}"),
            })
            .collect();
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::new(elements, table, 0).expect("cyclic group")
    }

    /// The four-element group `{e, g, h, gh}` with `g² = h² = e`, `gh = hg`.
    pub fn klein_four() -> Self {
        // Bit 0 is g, bit 1 is h; multiplication is xor.
        let elements = ["e", "g", "h", "gh"].map(String::from).to_vec();
        let table = (0..4).map(|i| (0..4).map(|j| i ^ j).collect()).collect();
        Self::new(elements, table, 0).expect("klein four group")
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == name)
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_subgroup(&self, subset: &[usize]) -> bool {
        !subset.is_empty()
            && subset.contains(&self.identity)
            && subset
                .iter()
                .all(|&a| subset.iter().all(|&b| subset.contains(&self.mul(a, self.inverse(b)))))
    }
}

/// A homomorphism `G -> GL(dim)` over the rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    group: Arc<FiniteGroup>,
    dim: usize,
    matrices: Vec<Matrix<Rational>>,
}

/// Checks that `matrices` (indexed like the group's elements) form a
/// representation.
pub fn verify_representation(
    group: &FiniteGroup,
    matrices: &[Matrix<Rational>],
) -> Result<std::result::Result<(), RepViolation>> {
    if matrices.len() != group.order() {
        return Err(malformed(format!(
            "expected {} matrices, got {}",
            group.order(),
            matrices.len()
        )));
    }
    let dim = matrices[0].rows();
    if matrices.iter().any(|m| m.rows() != dim || m.cols() != dim) {
        return Err(malformed("representation matrices must be square of equal size"));
    }
    for (g, m) in matrices.iter().enumerate() {
        if dim > 0 && m.determinant().is_zero() {
            return Ok(Err(RepViolation::Singular {
                element: group.name(g).into(),
            }));
        }
    }
    if !matrices[group.identity()].is_identity() {
        return Ok(Err(RepViolation::IdentityNotIdentity {
            element: group.name(group.identity()).into(),
        }));
    }
    for g in 0..group.order() {
        for h in 0..group.order() {
            if matrices[g].mul(&matrices[h]) != matrices[group.mul(g, h)] {
                return Ok(Err(RepViolation::NotHomomorphic {
                    g: group.name(g).into(),
                    h: group.name(h).into(),
                }));
            }
        }
    }
    Ok(Ok(()))
}

impl Representation {
    pub fn new(group: Arc<FiniteGroup>, matrices: Vec<Matrix<Rational>>) -> Result<Self> {
        verify_representation(&group, &matrices)??;
        let dim = matrices[0].rows();
        Ok(Representation { group, dim, matrices })
    }

    pub fn trivial(group: Arc<FiniteGroup>, dim: usize) -> Self {
        let matrices = vec![Matrix::identity(dim); group.order()];
        Representation { group, dim, matrices }
    }

    /// `g ↦ T ρ_g T⁻¹`; non-orthogonal whenever `T` is not.
    pub fn conjugate(&self, t: &Matrix<Rational>) -> Result<Self> {
        let t_inv = t.inverse().ok_or_else(|| invalid("conjugating matrix is singular"))?;
        let matrices = self.matrices.iter().map(|m| t.mul(m).mul(&t_inv)).collect();
        Self::new(self.group.clone(), matrices)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, g: usize) -> &Matrix<Rational> {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[Matrix<Rational>] {
        &self.matrices
    }

    pub fn inverse_matrix(&self, g: usize) -> &Matrix<Rational> {
        &self.matrices[self.group.inverse(g)]
    }

    pub fn is_trivial(&self) -> bool {
        self.matrices.iter().all(Matrix::is_identity)
    }

    /// `ρ_gᵀ v`.
    pub fn act_transposed(&self, g: usize, v: &[Rational]) -> Vec<Rational> {
        self.matrices[g].tr_mul_vec(v)
    }

    /// Indices of elements whose matrix is `-I`.
    pub fn negation_elements(&self) -> Vec<usize> {
        let neg = Matrix::<Rational>::identity(self.dim).scale(&crate::linalg::q(-1));
        (0..self.group.order())
            .filter(|&g| self.dim > 0 && self.matrices[g] == neg)
            .collect()
    }

    pub(crate) fn same_group(&self, other: &Representation) -> bool {
        Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group
    }
}

/// `{ρ_gᵀ v : g ∈ G}` with its stabilizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitClass {
    pub representative: Vec<Rational>,
    /// Distinct members, in order of the first element producing them.
    pub members: Vec<Vec<Rational>>,
    /// `coset_elements[k]` is the first group element mapping the
    /// representative to `members[k]`.
    pub coset_elements: Vec<usize>,
    pub stabilizer: Vec<usize>,
}

impl OrbitClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.members.iter().any(|m| m.as_slice() == v)
    }
}

pub fn orbit_transposed(rep: &Representation, v: &[Rational]) -> Result<OrbitClass> {
    if v.len() != rep.dim() {
        return Err(malformed(format!(
            "vector of length {} for representation of dim {}",
            v.len(),
            rep.dim()
        )));
    }
    let mut members: Vec<Vec<Rational>> = Vec::new();
    let mut coset_elements = Vec::new();
    let mut stabilizer = Vec::new();
    for g in 0..rep.group().order() {
        let w = rep.act_transposed(g, v);
        if w.as_slice() == v {
            stabilizer.push(g);
        }
        if !members.contains(&w) {
            members.push(w);
            coset_elements.push(g);
        }
    }
    assert_eq!(
        members.len() * stabilizer.len(),
        rep.group().order(),
        "orbit-stabilizer identity"
    );
    Ok(OrbitClass {
        representative: v.to_vec(),
        members,
        coset_elements,
        stabilizer,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitRelation {
    /// `orbit(u) = factor · orbit(v)` with `factor > 0`.
    Equal {
        factor: Rational,
    },
    Disjoint,
}

/// Compares the normalized orbits `{ρ_gᵀ u / |ρ_gᵀ u|}` and
/// `{ρ_gᵀ v / |ρ_gᵀ v|}` exactly through primitive integer ray forms.
pub fn normalized_orbits_relation(rep: &Representation, u: &[Rational], v: &[Rational]) -> Result<OrbitRelation> {
    if u.len() != rep.dim() || v.len() != rep.dim() {
        return Err(malformed("vector length does not match representation"));
    }
    let target = ray_form(v).ok_or_else(|| invalid("zero vector has no normalized orbit"))?;
    ray_form(u).ok_or_else(|| invalid("zero vector has no normalized orbit"))?;
    for g in 0..rep.group().order() {
        let w = rep.act_transposed(g, u);
        if ray_form(&w).as_ref() == Some(&target) {
            let factor = proportionality(&w, v).expect("same ray");
            return Ok(OrbitRelation::Equal { factor });
        }
    }
    Ok(OrbitRelation::Disjoint)
}

/// Groups nonzero vectors by normalized orbit. Returns, per class, the
/// indices of its vectors and each vector's factor relative to the class's
/// first vector (`orbit(v_i) = k_i · orbit(v_first)`).
pub(crate) fn orbit_classes(rep: &Representation, vectors: &[Vec<Rational>]) -> Vec<Vec<(usize, Rational)>> {
    let mut keyed: HashMap<Vec<BigInt>, (usize, Vec<Rational>)> = HashMap::new();
    let mut classes: Vec<Vec<(usize, Rational)>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let key = ray_form(v).expect("nonzero vector");
        if let Some((class, member)) = keyed.get(&key) {
            let k = proportionality(v, member).expect("same ray");
            let base = classes[*class][0].1.clone();
            classes[*class].push((i, k * base));
            continue;
        }
        let class = classes.len();
        classes.push(vec![(i, crate::linalg::q(1))]);
        // Register every member of the orbit, scaled relative to v.
        for g in 0..rep.group().order() {
            let w = rep.act_transposed(g, v);
            let key = ray_form(&w).expect("invertible action keeps vectors nonzero");
            keyed.entry(key).or_insert((class, w));
        }
    }
    classes
}
