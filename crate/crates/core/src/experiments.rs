//! Desk-scale experiments on the running example: exact identity checks,
//! gradient-descent fits under the three architecture classes, the
//! one-neuron invariant certificate, the ordering comparison, the
//! projection-compensation check and hypothesis dimensions.
//!
//! Inputs are drawn uniformly from `[-1, 1]ⁿ`. Every random stream is a
//! ChaCha generator keyed by the seed and a stream index, so results are
//! reproducible regardless of thread scheduling.

use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::equivariance::{is_invariant, EquivarianceWitness, Verdict};
use crate::error::{invalid, malformed, Result};
use crate::fixtures;
use crate::geometry::{boundary_hyperplanes, len_neuron_lower_bound, LowerBound};
use crate::group::{FiniteGroup, Representation};
use crate::linalg::{rational_from_f64, Matrix, Rational};
use crate::quadrature::{refined_square_expectation, Quadrature};
use crate::relu_net::{nets_equal_exact, ExactNet, FloatNet};

const STREAM_SAMPLES: u64 = 0;
const STREAM_RESTART: u64 = 1 << 32;
const STREAM_TRIAL: u64 = 2 << 32;
const STREAM_AGREEMENT: u64 = 3 << 32;
const STREAM_MC: u64 = 4 << 32;
const STREAM_REFERENCE: u64 = 5 << 32;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform_cube(rng: &mut impl Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// The running example's group, input representation, target, six-neuron
/// layer-wise form and its hidden representation.
#[derive(Debug, Clone)]
pub struct Example {
    pub group: Arc<FiniteGroup>,
    pub rho: Representation,
    pub s: ExactNet,
    pub len6: ExactNet,
    pub psi6: Representation,
}

pub fn make_example() -> Example {
    let rho = fixtures::example_rho();
    Example {
        group: rho.group().clone(),
        rho,
        s: fixtures::target_s(),
        len6: fixtures::len6(),
        psi6: fixtures::example_psi6(),
    }
}

/// `max(|a|, |b|, |a - b|)`.
pub fn target_closed_form(a: &Rational, b: &Rational) -> Rational {
    let d = a - b;
    a.abs().max(b.abs()).max(d.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub checked: usize,
    pub mismatches: Vec<(Rational, Rational)>,
}

/// Compares the closed form with the three-neuron net exactly at `(0, 0)`,
/// `(2, -1)` and `samples` random rationals with denominators up to 1000.
pub fn target_agreement_check(samples: usize, seed: u64) -> Result<AgreementReport> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let s = fixtures::target_s();
    let mut rng = stream(seed, STREAM_AGREEMENT);
    let mut random_rational = || {
        let num: i64 = rng.random_range(-5000..=5000);
        let den: i64 = rng.random_range(1..=1000);
        Rational::new(BigInt::from(num), BigInt::from(den))
    };
    let mut points: Vec<(Rational, Rational)> = vec![
        (Rational::zero(), Rational::zero()),
        (Rational::from_integer(2.into()), Rational::from_integer((-1).into())),
    ];
    points.extend((0..samples).map(|_| (random_rational(), random_rational())));
    let mismatches = points
        .iter()
        .filter(|(a, b)| s.evaluate(&[a.clone(), b.clone()]).expect("dim 2")[0] != target_closed_form(a, b))
        .cloned()
        .collect();
    Ok(AgreementReport {
        checked: points.len(),
        mismatches,
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

fn squared_error(f: &FloatNet, target: &FloatNet, x: &[f64]) -> f64 {
    let fx = f.evaluate(x).expect("dims checked");
    let sx = target.evaluate(x).expect("dims checked");
    fx.iter().zip(&sx).map(|(a, b)| (a - b).powi(2)).sum()
}

/// `E‖f(x) - s(x)‖²` estimated from `samples` uniform points.
pub fn monte_carlo_loss(f: &FloatNet, target: &FloatNet, samples: usize, seed: u64) -> Result<Estimate> {
    if f.input_dim() != target.input_dim() || f.output_dim() != target.output_dim() {
        return Err(malformed("net and target dimensions differ"));
    }
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let xs = uniform_cube(&mut stream(seed, STREAM_MC), f.input_dim(), samples);
    let values: Vec<f64> = xs.par_iter().map(|x| squared_error(f, target, x)).collect();
    Ok(Estimate::from_values(&values))
}

/// `E‖f(x) - s(x)‖²` over the uniform square by refined quadrature; only
/// for scalar nets on the plane.
pub fn quadrature_loss(f: &FloatNet, target: &FloatNet) -> Result<Quadrature> {
    if f.input_dim() != 2 || target.input_dim() != 2 {
        return Err(invalid("quadrature is implemented for two inputs"));
    }
    Ok(refined_square_expectation(
        |a, b| squared_error(f, target, &[a, b]),
        1e-8,
        256,
    ))
}

/// Free channel vectors spanning a subspace, repeated over the group.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBlock {
    pub basis: Vec<Vec<Rational>>,
}

impl OrbitBlock {
    pub fn new(basis: Vec<Vec<Rational>>) -> Self {
        OrbitBlock { basis }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BlockLayout {
    basis: Vec<Vec<Rational>>,
    /// Elements fixing every basis vector under `ρᵀ`.
    stabilizer: Vec<usize>,
    /// One element per right coset `H g`.
    transversal: Vec<usize>,
}

fn layout_block(rho: &Representation, block: &OrbitBlock) -> Result<BlockLayout> {
    if block.basis.is_empty() {
        return Err(invalid("orbit block needs at least one basis vector"));
    }
    if block.basis.iter().any(|b| b.len() != rho.dim()) {
        return Err(malformed("orbit block basis has the wrong dimension"));
    }
    let group = rho.group();
    let stabilizer: Vec<usize> = (0..group.order())
        .filter(|&g| block.basis.iter().all(|b| rho.act_transposed(g, b) == *b))
        .collect();
    let mut covered = vec![false; group.order()];
    let mut transversal = Vec::new();
    for g in 0..group.order() {
        if covered[g] {
            continue;
        }
        transversal.push(g);
        for &h in &stabilizer {
            covered[group.mul(h, g)] = true;
        }
    }
    Ok(BlockLayout {
        basis: block.basis.clone(),
        stabilizer,
        transversal,
    })
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// Unconstrained weights.
    Gn,
    /// Group-averaged base net: `m` base neurons, width `m·|G|`.
    Gen { rho: Representation },
    /// Layer-wise invariant with the given orbit blocks.
    Len {
        rho: Representation,
        blocks: Vec<OrbitBlock>,
    },
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::Gn => "GN",
            Constraint::Gen { .. } => "GEN",
            Constraint::Len { .. } => "LEN",
        }
    }
}

/// A parameter set `Θ_m` of two-layer nets `ℝⁿ → ℝᵈ`. Equivariant classes
/// are invariant: the output representation is trivial.
#[derive(Debug, Clone)]
pub struct ArchitectureSpec {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub constraint: Constraint,
}

impl ArchitectureSpec {
    pub fn gn(n: usize, m: usize, d: usize) -> Self {
        ArchitectureSpec {
            n,
            d,
            m,
            constraint: Constraint::Gn,
        }
    }

    pub fn gen(rho: Representation, m: usize, d: usize) -> Self {
        ArchitectureSpec {
            n: rho.dim(),
            d,
            m,
            constraint: Constraint::Gen { rho },
        }
    }

    /// Width is the total number of cosets over all blocks.
    pub fn len(rho: Representation, blocks: Vec<OrbitBlock>, d: usize) -> Result<Self> {
        let m = blocks
            .iter()
            .map(|b| layout_block(&rho, b).map(|l| l.transversal.len()))
            .sum::<Result<usize>>()?;
        Ok(ArchitectureSpec {
            n: rho.dim(),
            d,
            m,
            constraint: Constraint::Len { rho, blocks },
        })
    }

    /// The six-neuron structure on the running example: a free channel in
    /// the plane repeated over the whole group, and a channel on the line
    /// spanned by `(1, -1)` repeated over the two cosets of its stabilizer.
    pub fn example_len6() -> Self {
        let one = |v: [i64; 2]| crate::linalg::qvec(&v);
        Self::len(
            fixtures::example_rho(),
            vec![
                OrbitBlock::new(vec![one([1, 0]), one([0, 1])]),
                OrbitBlock::new(vec![one([1, -1])]),
            ],
            1,
        )
        .expect("valid blocks")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.constraint {
            Constraint::Gn => Ok(()),
            Constraint::Gen { rho } => {
                if rho.dim() != self.n {
                    return Err(invalid("representation dimension differs from n"));
                }
                Ok(())
            }
            Constraint::Len { rho, blocks } => {
                if rho.dim() != self.n {
                    return Err(invalid("representation dimension differs from n"));
                }
                let width: usize = blocks
                    .iter()
                    .map(|b| layout_block(rho, b).map(|l| l.transversal.len()))
                    .sum::<Result<usize>>()?;
                if width != self.m {
                    return Err(invalid(format!(
                        "orbit blocks give width {width}, architecture says {}",
                        self.m
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of neurons of the nets in the class.
    pub fn realized_width(&self) -> usize {
        match &self.constraint {
            Constraint::Gen { rho } => self.m * rho.group().order(),
            _ => self.m,
        }
    }

    /// Hidden permutation action of a layer-wise class: neuron `(block, t)`
    /// is sent by `k` to the coset representative of `H t k`.
    pub fn len_psi(&self) -> Result<Representation> {
        let Constraint::Len { rho, blocks } = &self.constraint else {
            return Err(invalid("hidden representation only exists for LEN specs"));
        };
        let group = rho.group();
        let layouts: Vec<BlockLayout> = blocks.iter().map(|b| layout_block(rho, b)).collect::<Result<_>>()?;
        let mut offsets = Vec::new();
        let mut total = 0;
        for l in &layouts {
            offsets.push(total);
            total += l.transversal.len();
        }
        let matrices = (0..group.order())
            .map(|k| {
                let mut m = Matrix::zeros(total, total);
                for (l, off) in layouts.iter().zip(&offsets) {
                    for (i, &t) in l.transversal.iter().enumerate() {
                        let tk = group.mul(t, k);
                        let j = l
                            .transversal
                            .iter()
                            .position(|&r| l.stabilizer.iter().any(|&h| group.mul(h, r) == tk))
                            .expect("cosets cover the group");
                        m.set(off + i, off + j, Rational::from_integer(1.into()));
                    }
                }
                m
            })
            .collect();
        Representation::new(group.clone(), matrices)
    }

    /// The linear map from parameters to the weights of every neuron.
    pub fn parameterization(&self) -> Result<Parameterization> {
        self.validate()?;
        let (n, d, m) = (self.n, self.d, self.m);
        let select = |rows: usize, total: usize, offset: usize| {
            let mut s = Matrix::<f64>::zeros(rows, total);
            for r in 0..rows {
                s.set(r, offset + r, 1.0);
            }
            s
        };
        let mut p = Parameterization {
            n,
            d,
            alpha_params: 0,
            beta_params: 0,
            alpha_maps: Vec::new(),
            beta_maps: Vec::new(),
        };
        match &self.constraint {
            Constraint::Gn => {
                p.alpha_params = n * m;
                p.beta_params = d * m;
                for i in 0..m {
                    p.alpha_maps.push(select(n, n * m, n * i));
                    p.beta_maps.push(select(d, d * m, d * i));
                }
            }
            Constraint::Gen { rho } => {
                let order = rho.group().order();
                p.alpha_params = n * m;
                p.beta_params = d * m;
                for i in 0..m {
                    for g in 0..order {
                        let rho_t = rho.matrix(g).to_f64().transpose();
                        p.alpha_maps.push(rho_t.mul(&select(n, n * m, n * i)));
                        p.beta_maps.push(select(d, d * m, d * i).scale(&(1.0 / order as f64)));
                    }
                }
            }
            Constraint::Len { rho, blocks } => {
                let layouts: Vec<BlockLayout> = blocks.iter().map(|b| layout_block(rho, b)).collect::<Result<_>>()?;
                let total_alpha: usize = layouts.iter().map(|l| l.basis.len()).sum();
                p.alpha_params = total_alpha;
                p.beta_params = d * layouts.len();
                let mut offset = 0;
                for (b, l) in layouts.iter().enumerate() {
                    let k = l.basis.len();
                    let mut basis = Matrix::<f64>::zeros(n, total_alpha);
                    for (c, v) in l.basis.iter().enumerate() {
                        for (r, x) in v.iter().enumerate() {
                            basis.set(r, offset + c, crate::linalg::Scalar::to_f64(x));
                        }
                    }
                    for &t in &l.transversal {
                        p.alpha_maps.push(rho.matrix(t).to_f64().transpose().mul(&basis));
                        p.beta_maps.push(select(d, d * layouts.len(), d * b));
                    }
                    offset += k;
                }
            }
        }
        Ok(p)
    }
}

/// Number of free parameters of the class.
pub fn hypothesis_dimension(spec: &ArchitectureSpec) -> Result<usize> {
    spec.validate()?;
    Ok(match &spec.constraint {
        Constraint::Gn | Constraint::Gen { .. } => spec.n * spec.m + spec.m * spec.d,
        Constraint::Len { blocks, .. } => blocks.iter().map(|b| b.basis.len() + spec.d).sum(),
    })
}

/// Neuron `j` has channel `A_j θ_α` and output weight `B_j θ_β`.
#[derive(Debug, Clone)]
pub struct Parameterization {
    pub n: usize,
    pub d: usize,
    pub alpha_params: usize,
    pub beta_params: usize,
    pub alpha_maps: Vec<Matrix<f64>>,
    pub beta_maps: Vec<Matrix<f64>>,
}

impl Parameterization {
    pub fn net(&self, theta_alpha: &[f64], theta_beta: &[f64]) -> FloatNet {
        let alphas = self.alpha_maps.iter().map(|a| a.mul_vec(theta_alpha)).collect();
        let betas = self.beta_maps.iter().map(|b| b.mul_vec(theta_beta)).collect();
        FloatNet::new(self.n, self.d, alphas, betas).expect("consistent maps")
    }

    /// Mean squared error over `xs` and its gradient in `(θ_α, θ_β)`. The
    /// ReLU derivative at zero is taken as zero.
    fn loss_and_gradient(
        &self,
        theta_alpha: &[f64],
        theta_beta: &[f64],
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
    ) -> (f64, Vec<f64>, Vec<f64>) {
        let net = self.net(theta_alpha, theta_beta);
        let m = net.neurons();
        let mut g_alpha = vec![vec![0.0; self.n]; m];
        let mut g_beta = vec![vec![0.0; self.d]; m];
        let mut loss = 0.0;
        let mut pre = vec![0.0; m];
        for (x, y) in xs.iter().zip(ys) {
            let mut out = vec![0.0; self.d];
            for j in 0..m {
                pre[j] = crate::linalg::dot(net.alpha(j), x);
                let a = pre[j].max(0.0);
                for (o, b) in out.iter_mut().zip(net.beta(j)) {
                    *o += b * a;
                }
            }
            let r: Vec<f64> = out.iter().zip(y).map(|(o, t)| o - t).collect();
            loss += r.iter().map(|v| v * v).sum::<f64>();
            for j in 0..m {
                if pre[j] <= 0.0 {
                    continue;
                }
                for (gb, rv) in g_beta[j].iter_mut().zip(&r) {
                    *gb += 2.0 * rv * pre[j];
                }
                let br: f64 = net.beta(j).iter().zip(&r).map(|(b, rv)| b * rv).sum();
                for (ga, xi) in g_alpha[j].iter_mut().zip(x) {
                    *ga += 2.0 * br * xi;
                }
            }
        }
        let scale = 1.0 / xs.len() as f64;
        let mut d_alpha = vec![0.0; self.alpha_params];
        let mut d_beta = vec![0.0; self.beta_params];
        for j in 0..m {
            for (t, v) in self.alpha_maps[j].tr_mul_vec(&g_alpha[j]).into_iter().enumerate() {
                d_alpha[t] += v * scale;
            }
            for (t, v) in self.beta_maps[j].tr_mul_vec(&g_beta[j]).into_iter().enumerate() {
                d_beta[t] += v * scale;
            }
        }
        (loss * scale, d_alpha, d_beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub samples: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            samples: 10_000,
            restarts: 50,
            iterations: 10_000,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub spec: ArchitectureSpec,
    /// Empirical mean squared error of the best restart.
    pub loss: f64,
    pub stderr: f64,
    pub restarts: usize,
    pub best_params: FloatNet,
    pub seed: u64,
    pub realized_width: usize,
    /// Final loss of every restart, in restart order.
    pub restart_losses: Vec<f64>,
}

/// Full-batch gradient descent with a fixed step from `restarts` random
/// initializations; the restart with the lowest final loss wins, ties going
/// to the lower index.
pub fn fit_network(spec: &ArchitectureSpec, target: &FloatNet, config: &FitConfig) -> Result<FitReport> {
    if target.input_dim() != spec.n || target.output_dim() != spec.d {
        return Err(invalid("target dimensions do not match the architecture"));
    }
    if config.samples == 0 || config.restarts == 0 {
        return Err(invalid("samples and restarts must be positive"));
    }
    let param = spec.parameterization()?;
    let xs = uniform_cube(&mut stream(config.seed, STREAM_SAMPLES), spec.n, config.samples);
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| target.evaluate(x).expect("dims")).collect();
    let normal = Normal::new(0.0, 1.0).expect("valid normal");

    let runs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, STREAM_RESTART + r as u64);
            let mut ta: Vec<f64> = (0..param.alpha_params).map(|_| normal.sample(&mut rng)).collect();
            let mut tb: Vec<f64> = (0..param.beta_params).map(|_| normal.sample(&mut rng)).collect();
            for _ in 0..config.iterations {
                let (_, ga, gb) = param.loss_and_gradient(&ta, &tb, &xs, &ys);
                for (t, g) in ta.iter_mut().zip(&ga) {
                    *t -= config.learning_rate * g;
                }
                for (t, g) in tb.iter_mut().zip(&gb) {
                    *t -= config.learning_rate * g;
                }
            }
            let (loss, _, _) = param.loss_and_gradient(&ta, &tb, &xs, &ys);
            (loss, ta, tb)
        })
        .collect();

    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0).then(a.cmp(&b)))
        .expect("at least one restart");
    let best_params = param.net(&runs[best].1, &runs[best].2);
    let errors: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fx = best_params.evaluate(x).expect("dims");
            fx.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
        })
        .collect();
    let estimate = Estimate::from_values(&errors);
    Ok(FitReport {
        spec: spec.clone(),
        loss: estimate.mean,
        stderr: estimate.stderr,
        restarts: config.restarts,
        best_params,
        seed: config.seed,
        realized_width: spec.realized_width(),
        restart_losses: runs.iter().map(|r| r.0).collect(),
    })
}

/// Shows that a single-neuron invariant net must vanish.
#[derive(Debug, Clone)]
pub struct GenCertificate {
    /// The element acting as `-I`, when there is one.
    pub negation_element: Option<String>,
    /// True when the argument is the exact `-I` argument; false for the
    /// grid-scan fallback.
    pub symbolic: bool,
    /// Exact checks of `F(α) - F(-α) = β ⟨α, α⟩` on sample channels.
    pub identity_checks: usize,
    /// Nonzero one-neuron invariant nets found by the fallback scan.
    pub counterexamples: Vec<ExactNet>,
    /// `σ(a)` fails invariance, with the witness at the negation element.
    pub single_relu_witness: Option<EquivarianceWitness>,
    /// `E‖s‖²`, the loss of the zero net.
    pub zero_net_loss: Option<Quadrature>,
    pub zero_net_loss_mc: Estimate,
}

impl GenCertificate {
    pub fn valid(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// If `ρ_h = -I`, an invariant `β σ(⟨α, x⟩)` satisfies
/// `β σ(⟨α, α⟩) = β σ(-⟨α, α⟩) = 0` at `x = α`, so `β ⟨α, α⟩ = 0` and the
/// net is zero. Otherwise channels on a small integer grid are scanned.
pub fn one_neuron_gen_certificate(
    rho: &Representation,
    target: &ExactNet,
    samples: usize,
    seed: u64,
) -> Result<GenCertificate> {
    let n = rho.dim();
    if target.input_dim() != n {
        return Err(malformed("target input dimension differs from the representation"));
    }
    let negation = rho.negation_elements().first().copied();
    let zero = FloatNet::zero(n, target.output_dim());
    let target_f = target.to_f64();
    let zero_net_loss = (n == 2).then(|| quadrature_loss(&zero, &target_f)).transpose()?;
    let zero_net_loss_mc = monte_carlo_loss(&zero, &target_f, samples, seed)?;

    let mut identity_checks = 0;
    let mut counterexamples = Vec::new();
    let mut single_relu_witness = None;
    let d = target.output_dim();
    let grid = integer_grid(n, 2);
    match negation {
        Some(h) => {
            for alpha in &grid {
                let beta: Vec<Rational> = (0..d).map(|k| Rational::from_integer((k as i64 + 1).into())).collect();
                let net = ExactNet::new(n, d, vec![alpha.clone()], vec![beta.clone()])?;
                let neg: Vec<Rational> = rho.matrix(h).mul_vec(alpha);
                let diff: Vec<Rational> = net
                    .evaluate(alpha)?
                    .iter()
                    .zip(net.evaluate(&neg)?)
                    .map(|(a, b)| a - b)
                    .collect();
                let norm2 = crate::linalg::dot(alpha, alpha);
                let expected: Vec<Rational> = beta.iter().map(|b| b * &norm2).collect();
                if diff != expected {
                    return Err(invalid("negation identity failed; representation is not -I"));
                }
                identity_checks += 1;
            }
            let mut e1 = vec![Rational::zero(); n];
            e1[0] = Rational::from_integer(1.into());
            let mut betas = vec![Rational::zero(); d];
            betas[0] = Rational::from_integer(1.into());
            let single = ExactNet::new(n, d, vec![e1.clone()], vec![betas])?;
            let rhs = single.evaluate(&e1)?;
            let lhs = single.evaluate(&rho.matrix(h).mul_vec(&e1))?;
            single_relu_witness = Some(EquivarianceWitness {
                element: h,
                element_name: rho.group().name(h).to_string(),
                point: e1,
                transformed_input: lhs,
                transformed_output: rhs,
            });
        }
        None => {
            for alpha in &grid {
                let beta = vec![Rational::from_integer(1.into()); d];
                let net = ExactNet::new(n, d, vec![alpha.clone()], vec![beta])?;
                if is_invariant(&net, rho)?.holds() {
                    counterexamples.push(net);
                }
            }
        }
    }
    Ok(GenCertificate {
        negation_element: negation.map(|h| rho.group().name(h).to_string()),
        symbolic: negation.is_some(),
        identity_checks,
        counterexamples,
        single_relu_witness,
        zero_net_loss,
        zero_net_loss_mc,
    })
}

/// Nonzero vectors of `{-r, …, r}ⁿ`.
fn integer_grid(n: usize, r: i64) -> Vec<Vec<Rational>> {
    let side = (2 * r + 1) as usize;
    (0..side.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let v = (k % side) as i64 - r;
                    k /= side;
                    Rational::from_integer(v.into())
                })
                .collect::<Vec<_>>()
        })
        .filter(|v: &Vec<Rational>| v.iter().any(|x| !x.is_zero()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingConfig {
    pub fit: FitConfig,
    /// Samples for the Monte Carlo estimates of fixed nets.
    pub mc_samples: usize,
}

impl Default for OrderingConfig {
    fn default() -> Self {
        OrderingConfig {
            fit: FitConfig::default(),
            mc_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderingReport {
    /// `E[s²]` by quadrature and Monte Carlo.
    pub target_energy: Quadrature,
    pub target_energy_mc: Estimate,
    /// `E[(σ(a) - s)²]`, a one-neuron general net.
    pub single_relu_loss: Estimate,
    pub single_relu_loss_quadrature: Quadrature,
    pub single_relu_gap_stderrs: f64,
    pub gn1: FitReport,
    pub gn1_gap_stderrs: f64,
    pub gen1: GenCertificate,
    /// `s` is itself a three-neuron invariant net.
    pub gen3_exact: bool,
    pub len_lower_bound: LowerBound,
    pub no_three_neuron_len: bool,
    /// Best fit over the layer-wise structures with at most three neurons.
    pub len3_best: FitReport,
    pub len3_gap_stderrs: f64,
    pub len6_exact: bool,
    pub notes: Vec<String>,
}

impl OrderingReport {
    /// Both strict inequalities hold with a margin of five standard errors.
    pub fn holds(&self) -> bool {
        self.single_relu_gap_stderrs > 5.0
            && self.gn1_gap_stderrs > 5.0
            && self.gen1.valid()
            && self.gen3_exact
            && self.no_three_neuron_len
            && self.len3_gap_stderrs > 5.0
            && self.len6_exact
    }
}

fn gap_in_stderrs(high: f64, low: f64, se_high: f64, se_low: f64) -> f64 {
    let se = (se_high.powi(2) + se_low.powi(2)).sqrt();
    if se == 0.0 {
        return if high > low { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    (high - low) / se
}

/// Reproduces the two strict orderings on the running example:
/// one neuron (general beats group-averaged, which is forced to zero) and
/// three neurons (group-averaged is exact, layer-wise needs six).
pub fn ordering_experiment(config: &OrderingConfig) -> Result<OrderingReport> {
    let ex = make_example();
    let seed = config.fit.seed;
    let s_f = ex.s.to_f64();
    let zero = FloatNet::zero(2, 1);
    let target_energy = quadrature_loss(&zero, &s_f)?;
    let target_energy_mc = monte_carlo_loss(&zero, &s_f, config.mc_samples, seed)?;

    let sigma_a = fixtures::sigma_a().to_f64();
    let single_relu_loss = monte_carlo_loss(&sigma_a, &s_f, config.mc_samples, seed)?;
    let single_relu_loss_quadrature = quadrature_loss(&sigma_a, &s_f)?;
    let single_relu_gap_stderrs =
        gap_in_stderrs(target_energy.value, single_relu_loss.mean, 0.0, single_relu_loss.stderr);

    let gn1 = fit_network(&ArchitectureSpec::gn(2, 1, 1), &s_f, &config.fit)?;
    let gen1 = one_neuron_gen_certificate(&ex.rho, &ex.s, config.mc_samples, seed)?;
    let gn1_gap_stderrs = gap_in_stderrs(target_energy_mc.mean, gn1.loss, target_energy_mc.stderr, gn1.stderr);

    let gen3_exact = is_invariant(&ex.s, &ex.rho)?.holds() && nets_equal_exact(&ex.s, &ex.s)?;
    let len_lower_bound = len_neuron_lower_bound(&boundary_hyperplanes(&ex.s), &ex.rho)?;
    let no_three_neuron_len = len_lower_bound.bound > 3;

    let diagonals = [[1, 1], [1, -1]];
    let mut len3: Option<FitReport> = None;
    for v in diagonals {
        let spec = ArchitectureSpec::len(ex.rho.clone(), vec![OrbitBlock::new(vec![crate::linalg::qvec(&v)])], 1)?;
        let fit = fit_network(&spec, &s_f, &config.fit)?;
        if len3.as_ref().is_none_or(|best| fit.loss < best.loss) {
            len3 = Some(fit);
        }
    }
    let len3_best = len3.expect("two candidates");
    let len3_gap_stderrs = gap_in_stderrs(len3_best.loss, 0.0, len3_best.stderr, 0.0);
    let len6_exact = nets_equal_exact(&ex.s, &ex.len6)?;

    let notes = vec![
        "the x - y = 0 kink is carried by channels along (1, -1); an orbit along (1, 1) cannot produce it".to_string(),
        "the group-averaged one-neuron class contains only the zero net, so its loss is E[s^2]".to_string(),
        format!(
            "group-averaged fits realize width m*|G| = {} for m = 1",
            ex.group.order()
        ),
    ];

    Ok(OrderingReport {
        target_energy,
        target_energy_mc,
        single_relu_loss,
        single_relu_loss_quadrature,
        single_relu_gap_stderrs,
        gn1,
        gn1_gap_stderrs,
        gen1,
        gen3_exact,
        len_lower_bound,
        no_three_neuron_len,
        len3_best,
        len3_gap_stderrs,
        len6_exact,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationConfig {
    pub base_nets: usize,
    pub points_per_net: usize,
    pub max_width: usize,
    pub seed: u64,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        CompensationConfig {
            base_nets: 100,
            points_per_net: 256,
            max_width: 5,
            seed: 0,
        }
    }
}

/// Per-orbit losses of a base net and of its group average.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitComparison {
    pub loss_f: Rational,
    pub loss_qf: Rational,
}

impl OrbitComparison {
    pub fn holds(&self) -> bool {
        self.loss_qf <= self.loss_f
    }
}

/// Compares `(1/|G|) Σ_g ‖f(ρ_g x) - s(x)‖²` with `‖Qf(x) - s(x)‖²` exactly
/// on the orbit of `x`. The target is invariant, so `Qf(x)` is the orbit
/// mean of `f`.
pub fn orbit_comparison(
    f: &ExactNet,
    target: &ExactNet,
    rho: &Representation,
    x: &[Rational],
) -> Result<OrbitComparison> {
    let order = rho.group().order();
    let inv = Rational::new(1.into(), BigInt::from(order));
    let s = target.evaluate(x)?;
    let values: Vec<Vec<Rational>> = (0..order)
        .map(|g| f.evaluate(&rho.matrix(g).mul_vec(x)))
        .collect::<Result<_>>()?;
    let sq = |v: &[Rational]| -> Rational { v.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum() };
    let loss_f = values.iter().map(|v| sq(v)).sum::<Rational>() * &inv;
    let mean: Vec<Rational> = (0..s.len())
        .map(|k| values.iter().map(|v| v[k].clone()).sum::<Rational>() * &inv)
        .collect();
    Ok(OrbitComparison {
        loss_f,
        loss_qf: sq(&mean),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationTrial {
    pub index: usize,
    pub width: usize,
    pub realized_width: usize,
    pub loss_f: f64,
    pub loss_qf: f64,
    pub violations: usize,
    pub strict_orbits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationReport {
    pub trials: Vec<CompensationTrial>,
    pub orbit_checks: usize,
    pub violations: usize,
    /// `Qs = s`, so both losses vanish on every orbit.
    pub target_equality: bool,
    /// `σ(a)` loses strictly on some orbit after averaging.
    pub single_relu_strict: bool,
}

/// The uniform cube is preserved exactly by signed permutation matrices.
fn preserves_cube(rho: &Representation) -> bool {
    rho.matrices().iter().all(|m| {
        (0..m.rows()).all(|i| {
            let nz: Vec<&Rational> = m.row(i).iter().filter(|x| !x.is_zero()).collect();
            nz.len() == 1 && nz[0].abs() == Rational::from_integer(1.into())
        })
    })
}

/// Draws random base nets and checks, orbit by orbit and in exact
/// arithmetic, that group averaging never increases the loss against an
/// invariant target.
pub fn compensation_experiment(
    rho: &Representation,
    target: &ExactNet,
    config: &CompensationConfig,
) -> Result<CompensationReport> {
    if !preserves_cube(rho) {
        return Err(invalid("the uniform cube is not preserved by this representation"));
    }
    if target.input_dim() != rho.dim() {
        return Err(malformed("target input dimension differs from the representation"));
    }
    if let Verdict::Fails(w) = is_invariant(target, rho)? {
        return Err(invalid(format!("target is not invariant: fails at {}", w.element_name)));
    }
    let (n, d) = (target.input_dim(), target.output_dim());
    let order = rho.group().order();
    let normal = Normal::new(0.0, 1.0).expect("valid normal");

    let run = |f: &ExactNet, xs: &[Vec<f64>]| -> Result<(f64, f64, usize, usize)> {
        let (mut lf, mut lq, mut bad, mut strict) = (0.0, 0.0, 0, 0);
        for x in xs {
            let xq: Vec<Rational> = x.iter().map(|v| rational_from_f64(*v)).collect();
            let c = orbit_comparison(f, target, rho, &xq)?;
            if !c.holds() {
                bad += 1;
            }
            if c.loss_qf < c.loss_f {
                strict += 1;
            }
            lf += crate::linalg::Scalar::to_f64(&c.loss_f);
            lq += crate::linalg::Scalar::to_f64(&c.loss_qf);
        }
        let k = xs.len() as f64;
        Ok((lf / k, lq / k, bad, strict))
    };

    let trials: Vec<CompensationTrial> = (0..config.base_nets)
        .into_par_iter()
        .map(|t| -> Result<CompensationTrial> {
            let mut rng = stream(config.seed, STREAM_TRIAL + t as u64);
            let width = rng.random_range(1..=config.max_width.max(1));
            let alphas = (0..width)
                .map(|_| (0..n).map(|_| normal.sample(&mut rng)).collect())
                .collect();
            let betas = (0..width)
                .map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect())
                .collect();
            let f = ExactNet::from_f64(&FloatNet::new(n, d, alphas, betas)?);
            let xs = uniform_cube(&mut rng, n, config.points_per_net);
            let (loss_f, loss_qf, violations, strict_orbits) = run(&f, &xs)?;
            Ok(CompensationTrial {
                index: t,
                width,
                realized_width: width * order,
                loss_f,
                loss_qf,
                violations,
                strict_orbits,
            })
        })
        .collect::<Result<_>>()?;

    let xs = uniform_cube(
        &mut stream(config.seed, STREAM_REFERENCE),
        n,
        config.points_per_net.max(1),
    );
    let (lf, lq, bad_s, _) = run(target, &xs)?;
    let target_equality = bad_s == 0 && lf == 0.0 && lq == 0.0;
    let single_relu_strict = if n == 2 && d == 1 {
        run(&fixtures::sigma_a(), &xs)?.3 > 0
    } else {
        false
    };

    Ok(CompensationReport {
        orbit_checks: trials.len() * config.points_per_net,
        violations: trials.iter().map(|t| t.violations).sum(),
        trials,
        target_equality,
        single_relu_strict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::{is_len, EquivarianceTriple};
    use crate::linalg::{frac, q, qvec};

    #[test]
    fn example_pieces() {
        let ex = make_example();
        assert_eq!(ex.s.evaluate(&qvec(&[1, -1])).unwrap(), vec![q(2)]);
        assert_eq!(target_closed_form(&q(1), &q(-1)), q(2));
        assert!(nets_equal_exact(&ex.s, &ex.len6).unwrap());
        assert!(is_invariant(&ex.s, &ex.rho).unwrap().holds());
    }

    #[test]
    fn agreement() {
        let r = target_agreement_check(500, 3).unwrap();
        assert_eq!(r.checked, 502);
        assert!(r.mismatches.is_empty());
        assert!(target_agreement_check(0, 3).is_err());
        assert_eq!(target_closed_form(&q(2), &q(-1)), q(3));
    }

    #[test]
    fn dimensions() {
        assert_eq!(hypothesis_dimension(&ArchitectureSpec::gn(2, 3, 1)).unwrap(), 9);
        assert_eq!(hypothesis_dimension(&ArchitectureSpec::example_len6()).unwrap(), 5);
        assert_eq!(hypothesis_dimension(&ArchitectureSpec::gn(4, 0, 2)).unwrap(), 0);
        assert_eq!(ArchitectureSpec::example_len6().m, 6);
    }

    #[test]
    fn len_structure_produces_layerwise_nets() {
        let spec = ArchitectureSpec::example_len6();
        let psi = spec.len_psi().unwrap();
        let p = spec.parameterization().unwrap();
        let net = p.net(&[0.5, -2.0, 0.25], &[1.5, -0.75]);
        let exact = ExactNet::from_f64(&net);
        let rho = fixtures::example_rho();
        let triple = EquivarianceTriple::invariant(rho.clone(), psi, 1).unwrap();
        assert!(is_len(&exact, &triple).unwrap().holds());

        // With c = (1, 0), c3 = 1 and both output weights ½ the class
        // contains the six-neuron net itself.
        let half = p.net(&[1.0, 0.0, 1.0], &[0.5, 0.5]);
        assert!(nets_equal_exact(&ExactNet::from_f64(&half), &fixtures::len6()).unwrap());
    }

    #[test]
    fn gen_parameterization_is_invariant() {
        let rho = fixtures::example_rho();
        let p = ArchitectureSpec::gen(rho.clone(), 2, 1).parameterization().unwrap();
        let net = ExactNet::from_f64(&p.net(&[0.3, -1.0, 2.0, 0.5], &[1.0, -0.25]));
        assert_eq!(net.neurons(), 8);
        assert!(is_invariant(&net, &rho).unwrap().holds());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ArchitectureSpec::example_len6().parameterization().unwrap();
        let xs = uniform_cube(&mut stream(1, 0), 2, 64);
        let target = fixtures::target_s().to_f64();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| target.evaluate(x).unwrap()).collect();
        let (ta, tb) = (vec![0.7, -0.3, 0.4], vec![0.2, -0.9]);
        let (_, ga, gb) = p.loss_and_gradient(&ta, &tb, &xs, &ys);
        let h = 1e-6;
        for k in 0..3 {
            let (mut up, mut down) = (ta.clone(), ta.clone());
            up[k] += h;
            down[k] -= h;
            let fd =
                (p.loss_and_gradient(&up, &tb, &xs, &ys).0 - p.loss_and_gradient(&down, &tb, &xs, &ys).0) / (2.0 * h);
            assert!((fd - ga[k]).abs() < 1e-5, "alpha {k}: {fd} vs {}", ga[k]);
        }
        for k in 0..2 {
            let (mut up, mut down) = (tb.clone(), tb.clone());
            up[k] += h;
            down[k] -= h;
            let fd =
                (p.loss_and_gradient(&ta, &up, &xs, &ys).0 - p.loss_and_gradient(&ta, &down, &xs, &ys).0) / (2.0 * h);
            assert!((fd - gb[k]).abs() < 1e-5, "beta {k}");
        }
    }

    fn small_fit(seed: u64) -> FitConfig {
        FitConfig {
            samples: 400,
            restarts: 8,
            iterations: 1500,
            learning_rate: 0.1,
            seed,
        }
    }

    #[test]
    fn fits_are_deterministic_and_realizable_targets_vanish() {
        let s = fixtures::target_s().to_f64();
        let spec = ArchitectureSpec::example_len6();
        let a = fit_network(&spec, &s, &small_fit(5)).unwrap();
        let b = fit_network(&spec, &s, &small_fit(5)).unwrap();
        assert_eq!(a.restart_losses, b.restart_losses);
        assert_eq!(a.best_params, b.best_params);
        assert!(a.loss < 1e-4, "loss {}", a.loss);
        assert!(fit_network(&ArchitectureSpec::gn(3, 1, 1), &s, &small_fit(5)).is_err());
    }

    #[test]
    fn certificate() {
        let ex = make_example();
        let c = one_neuron_gen_certificate(&ex.rho, &ex.s, 20_000, 1).unwrap();
        assert!(c.symbolic && c.valid());
        assert_eq!(c.negation_element.as_deref(), Some("h"));
        let w = c.single_relu_witness.as_ref().unwrap();
        assert_eq!(w.point, qvec(&[1, 0]));
        assert_ne!(w.transformed_input, w.transformed_output);
        let quad = c.zero_net_loss.as_ref().unwrap();
        assert!(quad.converged);
        assert!((quad.value - c.zero_net_loss_mc.mean).abs() < 5.0 * c.zero_net_loss_mc.stderr);

        // Without a negation element the scan runs, and σ(a + b) is
        // invariant under the swap alone.
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let swap = Representation::new(
            z2,
            vec![Matrix::identity(2), Matrix::from_int_rows(&[&[0, 1], &[1, 0]])],
        )
        .unwrap();
        let c = one_neuron_gen_certificate(&swap, &ex.s, 100, 1).unwrap();
        assert!(!c.symbolic);
        assert!(!c.valid());
    }

    #[test]
    fn orbit_comparisons() {
        let rho = fixtures::example_rho();
        let s = fixtures::target_s();
        let x = vec![frac(1, 3), frac(-1, 2)];
        let c = orbit_comparison(&s, &s, &rho, &x).unwrap();
        assert_eq!((c.loss_f.clone(), c.loss_qf.clone()), (q(0), q(0)));
        let c = orbit_comparison(&fixtures::sigma_a(), &s, &rho, &x).unwrap();
        assert!(c.loss_qf < c.loss_f);
    }

    #[test]
    fn compensation() {
        let ex = make_example();
        let cfg = CompensationConfig {
            base_nets: 10,
            points_per_net: 32,
            max_width: 4,
            seed: 9,
        };
        let r = compensation_experiment(&ex.rho, &ex.s, &cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.orbit_checks, 320);
        assert!(r.target_equality);
        assert!(r.single_relu_strict);
        assert!(r.trials.iter().all(|t| t.realized_width == 4 * t.width));

        let shear = Representation::new(
            Arc::new(FiniteGroup::cyclic(2)),
            vec![Matrix::identity(2), Matrix::from_int_rows(&[&[1, 0], &[-1, -1]])],
        )
        .unwrap();
        assert!(compensation_experiment(&shear, &ex.s, &cfg).is_err());
    }
}
