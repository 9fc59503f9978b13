//! Boundary hyperplanes of two-layer nets, their symmetry under a group,
//! and the resulting lower bound on layer-wise equivariant widths.
//!
//! Only hyperplanes through the origin are modeled.

use std::fmt;

use num::bigint::BigInt;
use num::traits::Signed;

use crate::equivariance::Verdict;
use crate::error::{invalid, malformed, Result};
use crate::group::{orbit_transposed, Representation};
use crate::linalg::{dot, ints_to_rational, line_form, Matrix, Rational};
use crate::relu_net::ExactNet;

/// `{x : ⟨normal, x⟩ = 0}` with the normal kept as coprime integers whose
/// first nonzero entry is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperplane {
    normal: Vec<BigInt>,
}

impl Hyperplane {
    pub fn new(normal: &[Rational]) -> Result<Self> {
        line_form(normal)
            .map(|normal| Hyperplane { normal })
            .ok_or_else(|| malformed("hyperplane normal is zero"))
    }

    pub fn from_ints(normal: &[i64]) -> Result<Self> {
        let v: Vec<Rational> = normal.iter().map(|&x| Rational::from_integer(x.into())).collect();
        Self::new(&v)
    }

    pub fn normal(&self) -> &[BigInt] {
        &self.normal
    }

    pub fn normal_rational(&self) -> Vec<Rational> {
        ints_to_rational(&self.normal)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn contains_direction(&self, alpha: &[Rational]) -> bool {
        line_form(alpha).as_deref() == Some(self.normal.as_slice())
    }
}

impl fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.normal.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Distinct hyperplanes in insertion order, optionally annotated with the
/// jump of the feature matrix across each one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HyperplaneSet {
    planes: Vec<Hyperplane>,
    jumps: Vec<Option<Matrix<Rational>>>,
}

impl HyperplaneSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_planes(planes: impl IntoIterator<Item = Hyperplane>) -> Self {
        let mut set = Self::new();
        for p in planes {
            set.insert(p, None);
        }
        set
    }

    /// Inserts `plane` unless already present; returns whether it was new.
    pub fn insert(&mut self, plane: Hyperplane, jump: Option<Matrix<Rational>>) -> bool {
        if self.contains(&plane) {
            return false;
        }
        self.planes.push(plane);
        self.jumps.push(jump);
        true
    }

    pub fn contains(&self, plane: &Hyperplane) -> bool {
        self.planes.contains(plane)
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn jump(&self, i: usize) -> Option<&Matrix<Rational>> {
        self.jumps[i].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Hyperplane, Option<&Matrix<Rational>>)> {
        self.planes.iter().zip(self.jumps.iter().map(Option::as_ref))
    }
}

/// The hyperplanes `⟨α_i, x⟩ = 0` over the nonzero channel vectors.
pub fn candidate_hyperplanes(net: &ExactNet) -> HyperplaneSet {
    HyperplaneSet::from_planes(net.alphas().iter().filter_map(|a| Hyperplane::new(a).ok()))
}

/// Jump of the feature matrix when crossing `plane` in the direction of its
/// normal: `Σ_{α_i ∥ n, ⟨α_i,n⟩>0} α_i β_iᵀ - Σ_{α_i ∥ n, ⟨α_i,n⟩<0} α_i β_iᵀ`.
pub fn is_boundary(net: &ExactNet, plane: &Hyperplane) -> (bool, Matrix<Rational>) {
    let v = plane.normal_rational();
    let mut jump = Matrix::zeros(net.input_dim(), net.output_dim());
    for (a, b) in net.alphas().iter().zip(net.betas()) {
        if !plane.contains_direction(a) {
            continue;
        }
        let outer = Matrix::from_columns(a.len(), std::slice::from_ref(a))
            .mul(&Matrix::from_rows(vec![b.clone()]).expect("row"));
        jump = if dot(a, &v).is_positive() {
            jump.add(&outer)
        } else {
            jump.sub(&outer)
        };
    }
    (!jump.is_zero(), jump)
}

/// The candidate hyperplanes with nonzero jump, annotated with the jump.
pub fn boundary_hyperplanes(net: &ExactNet) -> HyperplaneSet {
    let mut set = HyperplaneSet::new();
    for plane in candidate_hyperplanes(net).planes {
        let (boundary, jump) = is_boundary(net, &plane);
        if boundary {
            set.insert(plane, Some(jump));
        }
    }
    set
}

/// Image of `plane` under `ρ_g`: the normal becomes `ρ_{g⁻¹}ᵀ n`.
pub fn image_hyperplane(plane: &Hyperplane, rho: &Representation, g: usize) -> Hyperplane {
    let g_inv = rho.group().inverse(g);
    Hyperplane::new(&rho.act_transposed(g_inv, &plane.normal_rational())).expect("invertible action")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryWitness {
    pub element: String,
    pub plane: Hyperplane,
    pub image: Hyperplane,
}

/// Whether `ρ_g M` lies in the set for every plane `M` and element `g`.
pub fn is_hyperplane_set_symmetric(planes: &HyperplaneSet, rho: &Representation) -> Result<Verdict<SymmetryWitness>> {
    if let Some(p) = planes.planes().iter().find(|p| p.dim() != rho.dim()) {
        return Err(malformed(format!("hyperplane {p} has the wrong dimension")));
    }
    for g in 0..rho.group().order() {
        for plane in planes.planes() {
            let image = image_hyperplane(plane, rho, g);
            if !planes.contains(&image) {
                return Ok(Verdict::Fails(SymmetryWitness {
                    element: rho.group().name(g).to_string(),
                    plane: plane.clone(),
                    image,
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneOrbit {
    pub planes: Vec<Hyperplane>,
    /// Size of the `ρᵀ`-orbit of the first plane's normal.
    pub channel_orbit_size: usize,
}

/// A lower bound on the width of any layer-wise equivariant net with the
/// given boundary set, one plane orbit at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub bound: usize,
    pub orbits: Vec<PlaneOrbit>,
}

pub fn len_neuron_lower_bound(planes: &HyperplaneSet, rho: &Representation) -> Result<LowerBound> {
    if let Verdict::Fails(w) = is_hyperplane_set_symmetric(planes, rho)? {
        return Err(invalid(format!(
            "hyperplane set is not symmetric: {} maps {} to {}",
            w.element, w.plane, w.image
        )));
    }
    let mut assigned = vec![false; planes.len()];
    let mut orbits = Vec::new();
    for (i, plane) in planes.planes().iter().enumerate() {
        if assigned[i] {
            continue;
        }
        let mut members: Vec<Hyperplane> = Vec::new();
        for g in 0..rho.group().order() {
            let image = image_hyperplane(plane, rho, g);
            if !members.contains(&image) {
                let k = planes.planes().iter().position(|p| *p == image).expect("symmetric set");
                assigned[k] = true;
                members.push(image);
            }
        }
        let channel_orbit_size = orbit_transposed(rho, &plane.normal_rational())?.len();
        orbits.push(PlaneOrbit {
            planes: members,
            channel_orbit_size,
        });
    }
    Ok(LowerBound {
        bound: orbits.iter().map(|o| o.channel_orbit_size).sum(),
        orbits,
    })
}

/// Number of distinct nonzero channel hyperplanes; zero for the empty net.
pub fn boundary_count(net: &ExactNet) -> usize {
    boundary_hyperplanes(net).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::linalg::{frac, q, qvec};

    fn hp(v: &[i64]) -> Hyperplane {
        Hyperplane::from_ints(v).unwrap()
    }

    #[test]
    fn canonical_normals() {
        assert_eq!(hp(&[-2, 2]), hp(&[1, -1]));
        assert_eq!(hp(&[0, -3]).normal(), &[BigInt::from(0), BigInt::from(1)]);
        assert!(Hyperplane::from_ints(&[0, 0]).is_err());
    }

    #[test]
    fn candidates() {
        let expected = vec![hp(&[1, 0]), hp(&[0, 1]), hp(&[1, -1])];
        assert_eq!(candidate_hyperplanes(&target_s()).planes(), expected.as_slice());
        let mut six: Vec<_> = candidate_hyperplanes(&len6()).planes().to_vec();
        six.sort();
        let mut e = expected;
        e.sort();
        assert_eq!(six, e);
        assert!(candidate_hyperplanes(&ExactNet::zero(2, 1)).is_empty());
    }

    #[test]
    fn boundary_tests() {
        let (b, j) = is_boundary(&target_s(), &hp(&[1, 0]));
        assert!(b);
        assert_eq!(j, Matrix::from_int_rows(&[&[1], &[0]]));
        assert!(!is_boundary(&target_s(), &hp(&[1, 1])).0);

        let linear = ExactNet::from_ints(1, 1, &[&[1], &[-1]], &[&[1], &[-1]]);
        let (b, j) = is_boundary(&linear, &hp(&[1]));
        assert!(!b);
        assert!(j.is_zero());
        assert!(boundary_hyperplanes(&linear).is_empty());
        assert!(boundary_hyperplanes(&ExactNet::zero(2, 1)).is_empty());
    }

    #[test]
    fn boundary_set_of_target() {
        let set = boundary_hyperplanes(&target_s());
        assert_eq!(set.planes(), &[hp(&[1, 0]), hp(&[0, 1]), hp(&[1, -1])]);
        assert_eq!(set.jump(2).unwrap(), &Matrix::from_int_rows(&[&[1], &[-1]]));
    }

    #[test]
    fn symmetry() {
        let rho = example_rho();
        assert!(is_hyperplane_set_symmetric(&boundary_hyperplanes(&target_s()), &rho)
            .unwrap()
            .holds());
        let single = HyperplaneSet::from_planes([hp(&[1, 0])]);
        let v = is_hyperplane_set_symmetric(&single, &rho).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.element, "g");
        assert_eq!(w.image, hp(&[0, 1]));
        assert!(is_hyperplane_set_symmetric(&HyperplaneSet::new(), &rho)
            .unwrap()
            .holds());
    }

    #[test]
    fn lower_bounds() {
        let rho = example_rho();
        let lb = len_neuron_lower_bound(&boundary_hyperplanes(&target_s()), &rho).unwrap();
        assert_eq!(lb.bound, 6);
        assert_eq!(lb.orbits.len(), 2);
        assert_eq!(lb.orbits[0].channel_orbit_size, 4);
        assert_eq!(lb.orbits[1].channel_orbit_size, 2);
        let diag = HyperplaneSet::from_planes([hp(&[1, 1])]);
        assert_eq!(len_neuron_lower_bound(&diag, &rho).unwrap().bound, 2);
        assert_eq!(len_neuron_lower_bound(&HyperplaneSet::new(), &rho).unwrap().bound, 0);
        let single = HyperplaneSet::from_planes([hp(&[1, 0])]);
        assert!(len_neuron_lower_bound(&single, &rho).is_err());
        assert_eq!(
            len_neuron_lower_bound(&boundary_hyperplanes(&len6()), &rho)
                .unwrap()
                .bound,
            len6().neurons()
        );
    }

    #[test]
    fn jump_matches_feature_difference() {
        let s = target_s();
        for (plane, jump) in boundary_hyperplanes(&s).iter() {
            let n = plane.normal_rational();
            // A point on the plane away from the other lines.
            let on = if n == qvec(&[1, -1]) {
                qvec(&[1, 1])
            } else {
                vec![n[1].clone(), -n[0].clone() * q(3)]
            };
            let delta = frac(1, 100);
            let plus: Vec<Rational> = on.iter().zip(&n).map(|(x, v)| x + &delta * v).collect();
            let minus: Vec<Rational> = on.iter().zip(&n).map(|(x, v)| x - &delta * v).collect();
            let diff = s.feature_at(&plus).unwrap().sub(&s.feature_at(&minus).unwrap());
            assert_eq!(&diff, jump.unwrap());
        }
    }
}
