//! Constructive rewrites between general, group-averaged and layer-wise
//! equivariant nets.

use std::collections::HashMap;

use num::bigint::BigInt;
use num::traits::{One, Zero};
use rayon::prelude::*;

use crate::equivariance::{
    check_orbit_alignment, is_invariant, is_len, permutation_of, project_generic, EquivarianceTriple,
    ScaledPermutation, Verdict,
};
use crate::error::{invalid, malformed, Result};
use crate::geometry::boundary_count;
use crate::group::{orbit_classes, orbit_transposed, Representation};
use crate::linalg::{ints_to_rational, is_zero_vec, proportionality, ray_form, scale, Matrix, Rational};
use crate::relu_net::{nets_equal_exact, ExactNet, MultiLayerNet};

fn permutation_matrix(perm: &[usize]) -> Matrix<Rational> {
    let mut m = Matrix::zeros(perm.len(), perm.len());
    for (i, &j) in perm.iter().enumerate() {
        m.set(i, j, Rational::one());
    }
    m
}

fn inv_order(order: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(order))
}

/// Where a neuron of a symmetrized net came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Index of the neuron's orbit under the hidden permutation action.
    pub orbit: usize,
    /// Index of the neuron in the input net.
    pub source: usize,
    /// First group element carrying the orbit's root to this neuron.
    pub element: usize,
}

/// A layer-wise invariant net whose channel multiset is closed under `ρᵀ`
/// and whose hidden representation is a plain permutation.
#[derive(Debug, Clone)]
pub struct SymmetrizedLen {
    pub net: ExactNet,
    pub psi: Representation,
    pub provenance: Vec<Provenance>,
}

impl SymmetrizedLen {
    /// Whether `ρ_gᵀ α_i` is a channel of the net for every `i` and `g`.
    pub fn is_closed(&self, rho: &Representation) -> bool {
        channels_closed(&self.net, rho)
    }
}

pub(crate) fn channels_closed(net: &ExactNet, rho: &Representation) -> bool {
    let alphas = net.alphas();
    (0..rho.group().order()).all(|g| alphas.iter().all(|a| alphas.contains(&rho.act_transposed(g, a))))
}

/// Rewrites a layer-wise invariant net so that output weights are constant
/// on hidden orbits and channels are permuted by `ρᵀ` exactly. Neurons with
/// zero output weight or zero channel are dropped first.
///
/// Each neuron is rescaled by the positive constant relating its output
/// weight to that of its orbit root, then the channels are averaged over
/// the group.
pub fn symmetrize_len(net: &ExactNet, rho: &Representation, psi: &Representation) -> Result<SymmetrizedLen> {
    let triple = EquivarianceTriple::invariant(rho.clone(), psi.clone(), net.output_dim())?;
    if let Verdict::Fails(f) = is_len(net, &triple)? {
        return Err(invalid(format!(
            "not a layer-wise invariant net: condition {:?} fails at {}",
            f.condition, f.element
        )));
    }
    let group = rho.group().clone();
    let order = group.order();

    let keep: Vec<usize> = (0..net.neurons())
        .filter(|&i| !is_zero_vec(net.alpha(i)) && !is_zero_vec(net.beta(i)))
        .collect();
    let mut new_index = vec![usize::MAX; net.neurons()];
    for (k, &i) in keep.iter().enumerate() {
        new_index[i] = k;
    }
    let full: Vec<ScaledPermutation> = psi
        .matrices()
        .iter()
        .map(|m| permutation_of(m).expect("admitted"))
        .collect();
    let restricted: Vec<Matrix<Rational>> = full
        .iter()
        .map(|p| {
            let mut m = Matrix::zeros(keep.len(), keep.len());
            for (k, &i) in keep.iter().enumerate() {
                let j = new_index[p.perm[i]];
                debug_assert_ne!(j, usize::MAX, "kept neurons are closed under the action");
                m.set(k, j, p.scales[i].clone());
            }
            m
        })
        .collect();
    let kept_net = ExactNet::new(
        net.input_dim(),
        net.output_dim(),
        keep.iter().map(|&i| net.alpha(i).to_vec()).collect(),
        keep.iter().map(|&i| net.beta(i).to_vec()).collect(),
    )?;
    let kept_psi = Representation::new(group.clone(), restricted)?;
    let phi = Representation::trivial(group.clone(), net.output_dim());
    let report = check_orbit_alignment(&kept_net, &kept_psi, &phi)?;
    if !report.aligned() {
        return Err(invalid("output weights are not aligned along hidden orbits"));
    }

    let m = keep.len();
    let rescaled: Vec<Vec<Rational>> = (0..m).map(|i| scale(kept_net.alpha(i), &report.scales[i])).collect();
    let perms: Vec<Vec<usize>> = kept_psi
        .matrices()
        .iter()
        .map(|p| permutation_of(p).expect("admitted").perm)
        .collect();

    // α̃_i = (1/|G|) Σ_g ρ_{g⁻¹}ᵀ α'_{P_g(i)}
    let weight = inv_order(order);
    let alphas: Vec<Vec<Rational>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![Rational::zero(); net.input_dim()];
            for (g, perm) in perms.iter().enumerate() {
                let term = rho.act_transposed(group.inverse(g), &rescaled[perm[i]]);
                for (a, t) in acc.iter_mut().zip(term) {
                    *a += t;
                }
            }
            scale(&acc, &weight)
        })
        .collect();
    let betas: Vec<Vec<Rational>> = (0..m).map(|i| kept_net.beta(report.roots[i]).to_vec()).collect();

    let component_of: HashMap<usize, usize> = report
        .components
        .iter()
        .enumerate()
        .flat_map(|(c, comp)| comp.iter().map(move |&i| (i, c)))
        .collect();
    let provenance = (0..m)
        .map(|i| {
            let root = report.roots[i];
            let element = (0..order).find(|&g| perms[g][root] == i).expect("same orbit");
            Provenance {
                orbit: component_of[&i],
                source: keep[i],
                element,
            }
        })
        .collect();

    let net = ExactNet::new(net.input_dim(), net.output_dim(), alphas, betas)?;
    let psi = Representation::new(group, perms.iter().map(|p| permutation_matrix(p)).collect())?;
    Ok(SymmetrizedLen { net, psi, provenance })
}

/// The `m·|G|`-neuron layer-wise net `(1/|G|) Σ_g F(ρ_g x)` with channels
/// `ρ_gᵀ α_i`, neuron-major, together with the hidden permutation action
/// `(i, g) ↦ (i, g·h)`.
pub fn expand_to_len(net: &ExactNet, rho: &Representation) -> Result<(ExactNet, Representation)> {
    if rho.dim() != net.input_dim() {
        return Err(malformed(format!(
            "net has input dim {} but the representation has dim {}",
            net.input_dim(),
            rho.dim()
        )));
    }
    let group = rho.group();
    let order = group.order();
    let phi = Representation::trivial(group.clone(), net.output_dim());
    let expanded = project_generic(net, rho, &phi);
    let psi = (0..order)
        .map(|h| {
            let perm: Vec<usize> = (0..net.neurons() * order)
                .map(|k| (k / order) * order + group.mul(k % order, h))
                .collect();
            permutation_matrix(&perm)
        })
        .collect();
    Ok((expanded, Representation::new(group.clone(), psi)?))
}

/// `Σ_k b_k Σ_{g∈G} σ(⟨ρ_gᵀ a_k, x⟩)`, an invariant function kept in terms
/// of orbit sums.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitForm {
    pub input_dim: usize,
    pub output_dim: usize,
    pub terms: Vec<(Vec<Rational>, Vec<Rational>)>,
}

impl OrbitForm {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        OrbitForm {
            input_dim,
            output_dim,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, alpha: Vec<Rational>, beta: Vec<Rational>) {
        assert_eq!(alpha.len(), self.input_dim);
        assert_eq!(beta.len(), self.output_dim);
        self.terms.push((alpha, beta));
    }

    /// Expands every orbit sum into `|G|` neurons.
    pub fn to_net(&self, rho: &Representation) -> ExactNet {
        let mut net = ExactNet::zero(self.input_dim, self.output_dim);
        for (a, b) in &self.terms {
            for g in 0..rho.group().order() {
                net.push(rho.act_transposed(g, a), b.clone());
            }
        }
        net
    }

    /// Reads a symmetrized net as one orbit sum per hidden orbit. A hidden
    /// orbit of size `C` visited by all of `G` counts every neuron
    /// `|G| / C` times, so its coefficient is `β · C / |G|`.
    pub fn from_symmetrized(sym: &SymmetrizedLen, rho: &Representation) -> Result<Self> {
        let net = &sym.net;
        let order = rho.group().order();
        let perms: Vec<Vec<usize>> = sym
            .psi
            .matrices()
            .iter()
            .map(|p| permutation_of(p).map(|p| p.perm))
            .collect::<Result<_>>()?;
        for (g, perm) in perms.iter().enumerate() {
            for (i, &j) in perm.iter().enumerate() {
                if rho.act_transposed(g, net.alpha(i)) != net.alpha(j) || net.beta(i) != net.beta(j) {
                    return Err(invalid("net is not in closed orbit form"));
                }
            }
        }
        let mut form = OrbitForm::new(net.input_dim(), net.output_dim());
        let mut seen = vec![false; net.neurons()];
        for r in 0..net.neurons() {
            if seen[r] {
                continue;
            }
            let mut size = 0;
            for perm in &perms {
                if !seen[perm[r]] {
                    seen[perm[r]] = true;
                    size += 1;
                }
            }
            let c = Rational::new(BigInt::from(size), BigInt::from(order));
            form.push(net.alpha(r).to_vec(), scale(net.beta(r), &c));
        }
        Ok(form)
    }
}

/// One orbit of channels in a compressed net.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedOrbit {
    /// Lexicographically least primitive integer vector on the orbit's rays.
    pub representative: Vec<Rational>,
    /// Coefficient of `Σ_{g∈G} σ(⟨ρ_gᵀ r, x⟩)`.
    pub coefficient: Vec<Rational>,
    pub size: usize,
    pub stabilizer_order: usize,
}

#[derive(Debug, Clone)]
pub struct Compression {
    pub net: ExactNet,
    pub orbits: Vec<CompressedOrbit>,
    /// Antipodal channel pairs whose kinks cancel; their sum is linear.
    pub linear_pairs_removed: usize,
    /// Fixed channel vectors `f` re-representing the removed linear part as
    /// `c (σ(⟨f,x⟩) - σ(⟨-f,x⟩))`.
    pub linear_channels: Vec<Vec<Rational>>,
}

/// Rewrites an invariant net given by orbit sums so that no two channels
/// share a ray, with one neuron per distinct orbit member.
pub fn compress_orbit_form(form: &OrbitForm, rho: &Representation) -> Result<Compression> {
    if rho.dim() != form.input_dim {
        return Err(malformed("orbit form and representation dimensions differ"));
    }
    let terms: Vec<&(Vec<Rational>, Vec<Rational>)> = form
        .terms
        .iter()
        .filter(|(a, b)| !is_zero_vec(a) && !is_zero_vec(b))
        .collect();
    let alphas: Vec<Vec<Rational>> = terms.iter().map(|(a, _)| a.clone()).collect();
    let classes = orbit_classes(rho, &alphas);

    let mut orbits: Vec<CompressedOrbit> = classes
        .par_iter()
        .map(|class| {
            let first = &alphas[class[0].0];
            let mut coefficient = vec![Rational::zero(); form.output_dim];
            for (idx, k) in class {
                for (c, b) in coefficient.iter_mut().zip(&terms[*idx].1) {
                    *c += k * b;
                }
            }
            let (key, member) = (0..rho.group().order())
                .map(|g| {
                    let w = rho.act_transposed(g, first);
                    (ray_form(&w).expect("nonzero"), w)
                })
                .min_by(|a, b| a.0.cmp(&b.0))
                .expect("nonempty group");
            let representative = ints_to_rational(&key);
            // representative = c · member, so the orbit sum scales by 1/c.
            let c = proportionality(&representative, &member).expect("same ray");
            let coefficient = scale(&coefficient, &(Rational::one() / c));
            let orbit = orbit_transposed(rho, &representative).expect("dimension checked");
            CompressedOrbit {
                representative,
                coefficient,
                size: orbit.len(),
                stabilizer_order: orbit.stabilizer.len(),
            }
        })
        .filter(|o| !is_zero_vec(&o.coefficient))
        .collect();
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));

    let mut channels: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
    for o in &orbits {
        let stab = Rational::from_integer(BigInt::from(o.stabilizer_order));
        let beta = scale(&o.coefficient, &stab);
        for member in orbit_transposed(rho, &o.representative)?.members {
            channels.push((member, beta.clone()));
        }
    }

    let (channels, linear_pairs_removed, linear) = remove_linear_pairs(channels, form.output_dim);
    let (channels, linear_channels) = fold_linear(channels, linear);
    let mut net = ExactNet::zero(form.input_dim, form.output_dim);
    for (a, b) in channels {
        net.push(a, b);
    }
    orbits.retain(|o| net.alphas().contains(&o.representative));
    Ok(Compression {
        net,
        orbits,
        linear_pairs_removed,
        linear_channels,
    })
}

/// Compresses a symmetrized net through its orbit form.
pub fn compress_orbits(sym: &SymmetrizedLen, rho: &Representation) -> Result<Compression> {
    compress_orbit_form(&OrbitForm::from_symmetrized(sym, rho)?, rho)
}

type Channels = Vec<(Vec<Rational>, Vec<Rational>)>;

/// Removes pairs `u`, `-c·u` whose coefficients satisfy `p + c q = 0`: such a
/// pair computes the linear map `x ↦ p ⟨u, x⟩`. Returns the remaining
/// channels, the number of pairs removed and the `n × d` matrix `L` of the
/// removed linear part `x ↦ Lᵀ x`.
fn remove_linear_pairs(channels: Channels, d: usize) -> (Channels, usize, Matrix<Rational>) {
    let n = channels.first().map_or(0, |(a, _)| a.len());
    let by_ray: HashMap<Vec<BigInt>, usize> = channels
        .iter()
        .enumerate()
        .map(|(i, (a, _))| (ray_form(a).expect("nonzero"), i))
        .collect();
    let mut removed = vec![false; channels.len()];
    let mut linear = Matrix::zeros(n, d);
    let mut pairs = 0;
    for (i, (u, p)) in channels.iter().enumerate() {
        if removed[i] {
            continue;
        }
        let neg: Vec<Rational> = u.iter().map(|x| -x).collect();
        let Some(&j) = by_ray.get(&ray_form(&neg).expect("nonzero")) else {
            continue;
        };
        let (w, q) = &channels[j];
        let c = proportionality(w, &neg).expect("same ray");
        if p.iter().zip(q).all(|(pi, qi)| (pi + &c * qi).is_zero()) {
            removed[i] = true;
            removed[j] = true;
            pairs += 1;
            for r in 0..n {
                for k in 0..d {
                    let v = linear.get(r, k) + &u[r] * &p[k];
                    linear.set(r, k, v);
                }
            }
        }
    }
    let kept = channels
        .into_iter()
        .zip(removed)
        .filter_map(|(ch, r)| (!r).then_some(ch))
        .collect();
    (kept, pairs, linear)
}

/// Writes `x ↦ Lᵀ x` as `Σ_k (σ(⟨f_k,x⟩) - σ(⟨-f_k,x⟩)) m_k` over a column
/// basis `f_k` of `L`, merging into channels already on the same rays.
fn fold_linear(mut channels: Channels, linear: Matrix<Rational>) -> (Channels, Vec<Vec<Rational>>) {
    if linear.is_zero() {
        return (channels, Vec::new());
    }
    let pivots = linear.pivot_columns();
    let basis: Vec<Vec<Rational>> = pivots
        .iter()
        .map(|&j| ints_to_rational(&ray_form(&linear.column(j)).expect("pivot column")))
        .collect();
    // L = F M with F = [f_1 … f_r] of full column rank: M = (FᵀF)⁻¹ Fᵀ L.
    let f = Matrix::from_columns(linear.rows(), &basis);
    let gram_inv = f.transpose().mul(&f).inverse().expect("independent columns");
    let m = gram_inv.mul(&f.transpose()).mul(&linear);
    for (k, fk) in basis.iter().enumerate() {
        let coeff = m.row(k).to_vec();
        let neg_fk: Vec<Rational> = fk.iter().map(|x| -x).collect();
        let neg_coeff: Vec<Rational> = coeff.iter().map(|x| -x).collect();
        add_channel(&mut channels, fk.clone(), coeff);
        add_channel(&mut channels, neg_fk, neg_coeff);
    }
    channels.retain(|(_, b)| !is_zero_vec(b));
    (channels, basis)
}

fn add_channel(channels: &mut Channels, alpha: Vec<Rational>, beta: Vec<Rational>) {
    let key = ray_form(&alpha);
    if let Some((a, b)) = channels.iter_mut().find(|(a, _)| ray_form(a) == key) {
        // a = c · alpha, so beta σ(⟨alpha,x⟩) = (beta / c) σ(⟨a,x⟩).
        let c = proportionality(a, &alpha).expect("same ray");
        for (bi, x) in b.iter_mut().zip(&beta) {
            *bi += x / &c;
        }
    } else {
        channels.push((alpha, beta));
    }
}

/// The equivariant expansion of a deep net together with the hidden
/// permutation actions, one per hidden layer.
#[derive(Debug, Clone)]
pub struct ExpandedMultilayer {
    pub net: MultiLayerNet<Rational>,
    pub hidden: Vec<Representation>,
}

/// Block permutation on `|G|` copies of `ℝ^width`: block `i` receives block
/// `j` with `g_j = g_i g`.
fn block_permutation(rho: &Representation, g: usize, width: usize) -> Matrix<Rational> {
    let group = rho.group();
    let order = group.order();
    let mut m = Matrix::zeros(order * width, order * width);
    for i in 0..order {
        let j = group.mul(i, g);
        for k in 0..width {
            m.set(i * width + k, j * width + k, Rational::one());
        }
    }
    m
}

/// `(1/|G|) Σ_g φ_g⁻¹ F(ρ_g x)` realized layer by layer: the first layer
/// stacks `W⁽¹⁾ ρ_g`, hidden layers repeat `W⁽ˡ⁾` block-diagonally and the
/// last layer concatenates `φ_g⁻¹ W⁽ᴸ⁾ / |G|`.
pub fn expand_multilayer(
    net: &MultiLayerNet<Rational>,
    rho: &Representation,
    phi: &Representation,
) -> Result<ExpandedMultilayer> {
    if net.input_dim() != rho.dim() || net.output_dim() != phi.dim() {
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
    let group = rho.group();
    let order = group.order();
    let w = net.weights();
    let weight = inv_order(order);
    if w.len() == 1 {
        let mut avg = Matrix::zeros(phi.dim(), rho.dim());
        for g in 0..order {
            avg = avg.add(&phi.inverse_matrix(g).mul(&w[0]).mul(rho.matrix(g)));
        }
        return Ok(ExpandedMultilayer {
            net: MultiLayerNet::new(vec![avg.scale(&weight)])?,
            hidden: Vec::new(),
        });
    }
    let last = w.len() - 1;
    let mut layers = Vec::with_capacity(w.len());
    layers.push(Matrix::vstack(
        &(0..order).map(|g| w[0].mul(rho.matrix(g))).collect::<Vec<_>>(),
    ));
    for layer in &w[1..last] {
        layers.push(Matrix::block_diag(&vec![layer.clone(); order]));
    }
    layers.push(
        Matrix::hstack(
            &(0..order)
                .map(|g| phi.inverse_matrix(g).mul(&w[last]))
                .collect::<Vec<_>>(),
        )
        .scale(&weight),
    );
    let hidden = w[..last]
        .iter()
        .map(|layer| {
            let mats = (0..order).map(|g| block_permutation(rho, g, layer.rows())).collect();
            Representation::new(group.clone(), mats)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpandedMultilayer {
        net: MultiLayerNet::new(layers)?,
        hidden,
    })
}

impl ExpandedMultilayer {
    /// Checks `W̃⁽¹⁾ρ_g = ψ⁽¹⁾_g W̃⁽¹⁾`, `W̃⁽ˡ⁾ψ⁽ˡ⁻¹⁾_g = ψ⁽ˡ⁾_g W̃⁽ˡ⁾` and
    /// `W̃⁽ᴸ⁾ψ⁽ᴸ⁻¹⁾_g = φ_g W̃⁽ᴸ⁾` for every element.
    pub fn intertwines(&self, rho: &Representation, phi: &Representation) -> bool {
        let w = self.net.weights();
        (0..rho.group().order()).all(|g| {
            let inputs: Vec<&Matrix<Rational>> = std::iter::once(rho.matrix(g))
                .chain(self.hidden.iter().map(|h| h.matrix(g)))
                .collect();
            let outputs: Vec<&Matrix<Rational>> = self
                .hidden
                .iter()
                .map(|h| h.matrix(g))
                .chain(std::iter::once(phi.matrix(g)))
                .collect();
            w.iter()
                .zip(inputs.iter().zip(&outputs))
                .all(|(layer, (a, b))| layer.mul(a) == b.mul(layer))
        })
    }
}

/// Outcome of rewriting an invariant net into a compressed layer-wise one.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub compressed: Compression,
    pub input_neurons: usize,
    pub output_neurons: usize,
    pub boundary_hyperplanes: usize,
    /// `m′ ≤ 2N + 2`.
    pub within_boundary_bound: bool,
    /// `m′ ≤ 2m`.
    pub within_double: bool,
    pub function_equal: bool,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.within_boundary_bound && self.within_double && self.function_equal
    }
}

/// Expands an invariant net to a layer-wise one, symmetrizes and compresses
/// it, and reports the resulting width against `2N + 2` and `2m`.
pub fn double_size_bound_check(net: &ExactNet, rho: &Representation) -> Result<BoundReport> {
    if let Verdict::Fails(w) = is_invariant(net, rho)? {
        return Err(invalid(format!("net is not invariant: fails at {}", w.element_name)));
    }
    let (len, psi) = expand_to_len(net, rho)?;
    let sym = symmetrize_len(&len, rho, &psi)?;
    let compressed = compress_orbits(&sym, rho)?;
    let m = net.neurons();
    let n_planes = boundary_count(net);
    let m_prime = compressed.net.neurons();
    let function_equal = nets_equal_exact(&compressed.net, net)?;
    Ok(BoundReport {
        input_neurons: m,
        output_neurons: m_prime,
        boundary_hyperplanes: n_planes,
        within_boundary_bound: m_prime <= 2 * n_planes + 2,
        within_double: m_prime <= 2 * m,
        function_equal,
        compressed,
    })
}
