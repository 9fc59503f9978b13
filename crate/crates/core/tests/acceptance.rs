//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use common::*;
use equivar::equivariance::EquivarianceTriple;
use equivar::equivariance::{admitted_matrix, commutation_witness, is_equivariant, is_len, project_equivariant};
use equivar::experiments::{
    compensation_experiment, hypothesis_dimension, monte_carlo_loss, quadrature_loss, target_agreement_check,
    ArchitectureSpec, CompensationConfig,
};
use equivar::fixtures::{example_psi6, len6, sigma_a, target_s};
use equivar::geometry::{boundary_hyperplanes, is_hyperplane_set_symmetric, len_neuron_lower_bound};
use equivar::linalg::{format_vector, q, Rational};
use equivar::relu_net::nets_equal_exact;
use equivar::transforms::{double_size_bound_check, expand_multilayer, expand_to_len, symmetrize_len};
use equivar::{ExactNet, Matrix, MultiLayerNet, Representation};
use num::Zero;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: equivar::Error) -> String {
    e.to_string()
}

fn trivial(rho: &Representation, d: usize) -> Representation {
    Representation::trivial(rho.group().clone(), d)
}

fn c1_target_identity() -> Check {
    let start = Instant::now();
    let report = target_agreement_check(10_000, 1).map_err(err)?;
    ensure(report.mismatches.is_empty(), || {
        format!("{} mismatches", report.mismatches.len())
    })?;
    let s = target_s();
    let mut r = rng(101);
    for _ in 0..10_000 {
        let x = random_vector(&mut r, 2, 50, 17);
        let closed = target_closed_form(&x[0], &x[1]);
        ensure(eval(&s, &x) == vec![closed.clone()], || {
            format!("oracle mismatch at {x:?}")
        })?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("{} library + 10000 oracle points, {t:.2?}", report.checked))
}

fn c2_invariance() -> Check {
    let start = Instant::now();
    let rho = example_rho();
    let triv = trivial(&rho, 1);
    let s = target_s();
    ensure(is_equivariant(&s, &rho, &triv).map_err(err)?.holds(), || {
        "s reported non-invariant".into()
    })?;
    for g in 0..4 {
        ensure(oracle_equal(&s.precompose(rho.matrix(g)), &s), || {
            format!("oracle: s∘ρ_{g} ≠ s")
        })?;
    }
    let verdict = is_equivariant(&sigma_a(), &rho, &triv).map_err(err)?;
    let w = verdict.witness().ok_or("σ(a) reported invariant")?;
    let x = &w.point;
    let moved = eval(&sigma_a(), &mat_vec(rho.matrix(w.element), x));
    ensure(moved != eval(&sigma_a(), x), || "witness does not separate".into())?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!(
        "σ(a) witness element {} at {}, {t:.2?}",
        w.element_name,
        format_vector(x)
    ))
}

fn c3_boundary() -> Check {
    let rho = example_rho();
    let planes = boundary_hyperplanes(&target_s());
    let mut found: Vec<Vec<Rational>> = planes.planes().iter().map(|p| p.normal_rational()).collect();
    let mut expected = oracle_kink_lines(&target_s());
    // Lines only matter up to scale; compare in a common normalization.
    let normalize = |v: &Vec<Rational>| {
        let lead = v.iter().find(|x| !x.is_zero()).unwrap().clone();
        v.iter().map(|x| x / &lead).collect::<Vec<_>>()
    };
    found = found.iter().map(normalize).collect();
    expected = expected.iter().map(normalize).collect();
    found.sort();
    expected.sort();
    ensure(found.len() == 3 && found == expected, || {
        format!("found {found:?}, oracle {expected:?}")
    })?;
    let want: Vec<Vec<Rational>> = vec![vec![q(0), q(1)], vec![q(1), q(-1)], vec![q(1), q(0)]];
    ensure(found == want, || format!("expected x=0, y=0, x=y, got {found:?}"))?;
    ensure(is_hyperplane_set_symmetric(&planes, &rho).map_err(err)?.holds(), || {
        "not symmetric".into()
    })?;
    Ok("{x=0, y=0, x-y=0}, symmetric".into())
}

fn c4_six_neurons() -> Check {
    let rho = example_rho();
    let planes = boundary_hyperplanes(&target_s());
    let lb = len_neuron_lower_bound(&planes, &rho).map_err(err)?;
    ensure(lb.bound == 6, || format!("bound {}", lb.bound))?;
    ensure(nets_equal_exact(&target_s(), &len6()).map_err(err)?, || {
        "s ≠ len6".into()
    })?;
    ensure(oracle_equal(&target_s(), &len6()), || "oracle: s ≠ len6".into())?;
    let triple = EquivarianceTriple::invariant(rho, example_psi6(), 1).map_err(err)?;
    ensure(is_len(&len6(), &triple).map_err(err)?.holds(), || "len6 not LEN".into())?;
    Ok("bound 6, len6 = s, len6 is LEN".into())
}

fn c5_one_neuron_ordering() -> Check {
    let start = Instant::now();
    let s = target_s().to_f64();
    let zero = ExactNet::zero(2, 1).to_f64();
    let energy = quadrature_loss(&zero, &s).map_err(err)?;
    ensure(energy.converged, || {
        format!("quadrature did not converge: {:?}", energy.levels)
    })?;
    let (_, last) = energy.levels[energy.levels.len() - 1];
    let (_, prev) = energy.levels[energy.levels.len() - 2];
    ensure((last - prev).abs() <= 1e-8, || "refinements disagree".into())?;
    let exact = equivar::linalg::Scalar::to_f64(&exact_target_energy());
    ensure((energy.value - exact).abs() < 1e-10, || {
        format!("quadrature {} vs exact {exact}", energy.value)
    })?;
    let mc = monte_carlo_loss(&sigma_a().to_f64(), &s, 1_000_000, 5).map_err(err)?;
    let qs = quadrature_loss(&sigma_a().to_f64(), &s).map_err(err)?;
    // The quadrature value of E[s²] carries no sampling error.
    let gap = (energy.value - mc.mean) / mc.stderr;
    ensure(gap > 5.0, || format!("gap only {gap:.2} standard errors"))?;
    ensure((qs.value - mc.mean).abs() < 5.0 * mc.stderr, || {
        format!("MC {} disagrees with quadrature {}", mc.mean, qs.value)
    })?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!(
        "E[s²] = {:.6} (exact {exact:.6}), E[(σ(a)-s)²] ≈ {:.6} ± {:.6}, gap {gap:.0} s.e., {t:.1?}",
        energy.value, mc.mean, mc.stderr
    ))
}

/// Every channel vector's image under every `ρ_g^T` occurs in the net with
/// the same multiplicity.
fn channels_closed(net: &ExactNet, rho: &Representation) -> bool {
    let mut base: Vec<Vec<Rational>> = net.alphas().to_vec();
    base.sort();
    (0..rho.group().order()).all(|g| {
        let mut moved: Vec<Vec<Rational>> = net.alphas().iter().map(|a| mat_t_vec(rho.matrix(g), a)).collect();
        moved.sort();
        moved == base
    })
}

fn c6_symmetrization() -> Check {
    let reps = [
        example_rho(),
        skewed_example_rho(),
        cyclic_shift_rho(),
        skewed_shift_rho(),
    ];
    ensure(!reps[1].matrices().iter().all(is_orthogonal), || {
        "skewed rep is orthogonal".into()
    })?;
    let mut r = rng(606);
    let mut failures = Vec::new();
    for trial in 0..100 {
        let rho = &reps[trial % reps.len()];
        let m = r.random_range(1..=5);
        let d = r.random_range(1..=2);
        let f = random_net(&mut r, rho.dim(), m, d);
        let (len, psi) = expand_to_len(&f, rho).map_err(err)?;
        let sym = symmetrize_len(&len, rho, &psi).map_err(err)?;
        if !oracle_equal(&sym.net, &len) || !channels_closed(&sym.net, rho) {
            failures.push(trial);
        }
    }
    ensure(failures.is_empty(), || format!("failed trials {failures:?}"))?;
    Ok("100 random LENs over 4 representations (2 non-orthogonal)".into())
}

fn c7_compression() -> Check {
    let rho = example_rho();
    let triv = trivial(&rho, 1);
    let mut r = rng(707);
    for trial in 0..50 {
        let m = r.random_range(1..=4);
        let f = project_equivariant(&random_net(&mut r, 2, m, 1), &rho, &triv).map_err(err)?;
        let report = double_size_bound_check(&f, &rho).map_err(err)?;
        let n = report.boundary_hyperplanes;
        ensure(report.holds(), || format!("trial {trial}: check failed"))?;
        ensure(report.output_neurons <= 2 * n + 2, || {
            format!("trial {trial}: m' > 2N+2")
        })?;
        ensure(oracle_equal(&report.compressed.net, &f), || {
            format!("trial {trial}: oracle says unequal")
        })?;
    }
    let s = double_size_bound_check(&target_s(), &rho).map_err(err)?;
    ensure(s.output_neurons == 6 && s.boundary_hyperplanes == 3, || {
        format!("on s: m' = {}, N = {}", s.output_neurons, s.boundary_hyperplanes)
    })?;
    Ok("50 invariant nets; s gives m' = 6, N = 3".into())
}

fn c8_projection_monotonicity() -> Check {
    let rho = example_rho();
    let config = CompensationConfig {
        base_nets: 100,
        points_per_net: 64,
        ..CompensationConfig::default()
    };
    let r = compensation_experiment(&rho, &target_s(), &config).map_err(err)?;
    ensure(r.trials.len() == 100, || format!("{} trials", r.trials.len()))?;
    ensure(r.violations == 0, || format!("{} violations", r.violations))?;
    ensure(r.target_equality, || "f = s does not give equality".into())?;
    // Spot-check the per-orbit inequality for one trial by hand.
    let f = ExactNet::from_ints(2, 1, &[&[2, -1], &[1, 3]], &[&[1], &[-2]]);
    let s = target_s();
    let mut x_rng = rng(808);
    for _ in 0..50 {
        let x = random_vector(&mut x_rng, 2, 9, 7);
        let orbit: Vec<Vec<Rational>> = (0..4).map(|g| mat_vec(rho.matrix(g), &x)).collect();
        let qf = |y: &[Rational]| group_average(|z| eval(&f, z), &rho, &trivial(&rho, 1), y);
        let loss = |h: &dyn Fn(&[Rational]) -> Vec<Rational>| -> Rational {
            orbit
                .iter()
                .map(|y| {
                    let e = &h(y)[0] - &eval(&s, y)[0];
                    &e * &e
                })
                .sum()
        };
        ensure(loss(&qf) <= loss(&|y| eval(&f, y)), || {
            format!("oracle violation at {x:?}")
        })?;
    }
    Ok(format!(
        "{} orbit checks, 0 violations, s gives equality",
        r.orbit_checks
    ))
}

fn c9_dimensions() -> Check {
    let len = hypothesis_dimension(&ArchitectureSpec::example_len6()).map_err(err)?;
    let gn = hypothesis_dimension(&ArchitectureSpec::gn(2, 3, 1)).map_err(err)?;
    ensure(len == 5 && gn == 9, || format!("LEN {len}, GN {gn}"))?;
    for n in 1..5 {
        for m in 0..6 {
            for d in 1..4 {
                let k = hypothesis_dimension(&ArchitectureSpec::gn(n, m, d)).map_err(err)?;
                ensure(k == n * m + m * d, || format!("GN({n},{m},{d}) = {k}"))?;
            }
        }
    }
    Ok("LEN 5, GN 9, nm+md on 60 shapes".into())
}

/// Checks `W⁽¹⁾ρ_g = ψ¹_g W⁽¹⁾`, `W⁽ˡ⁾ψˡ⁻¹_g = ψˡ_g W⁽ˡ⁾` and
/// `W⁽ᴸ⁾ψᴸ⁻¹_g = φ_g W⁽ᴸ⁾` directly.
fn intertwining_identities(
    w: &[Matrix<Rational>],
    rho: &Representation,
    hidden: &[Representation],
    phi: &Representation,
) -> bool {
    (0..rho.group().order()).all(|g| {
        let ins: Vec<&Matrix<Rational>> = std::iter::once(rho.matrix(g))
            .chain(hidden.iter().map(|h| h.matrix(g)))
            .collect();
        let outs: Vec<&Matrix<Rational>> = hidden
            .iter()
            .map(|h| h.matrix(g))
            .chain(std::iter::once(phi.matrix(g)))
            .collect();
        w.iter().zip(ins).zip(outs).all(|((wl, a), b)| wl.mul(a) == b.mul(wl))
    })
}

fn ml_eval(w: &[Matrix<Rational>], x: &[Rational]) -> Vec<Rational> {
    let mut h = x.to_vec();
    for (l, wl) in w.iter().enumerate() {
        h = mat_vec(wl, &h);
        if l + 1 < w.len() {
            h = h.iter().map(relu).collect();
        }
    }
    h
}

fn c10_multilayer() -> Check {
    let rho = example_rho();
    let mut r = rng(1010);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let (h1, h2) = (r.random_range(1..=4), r.random_range(1..=4));
        let d = r.random_range(1..=2);
        let phi = if d == 2 { example_rho() } else { trivial(&rho, 1) };
        let w = vec![
            random_matrix(&mut r, h1, 2),
            random_matrix(&mut r, h2, h1),
            random_matrix(&mut r, d, h2),
        ];
        let net = MultiLayerNet::new(w.clone()).map_err(err)?;
        let e = expand_multilayer(&net, &rho, &phi).map_err(err)?;
        ensure(e.intertwines(&rho, &phi), || {
            format!("trial {trial}: library check failed")
        })?;
        ensure(intertwining_identities(e.net.weights(), &rho, &e.hidden, &phi), || {
            format!("trial {trial}: identities fail")
        })?;
        ensure(
            e.hidden
                .iter()
                .all(|h| h.matrices().iter().all(|m| admitted_matrix(m).is_ok())),
            || format!("trial {trial}: hidden representation not admitted"),
        )?;
        let float = e.net.to_f64();
        for _ in 0..1000 {
            let x = random_vector(&mut r, 2, 20, 9);
            let want = group_average(|y| ml_eval(&w, y), &rho, &phi, &x);
            let got = e.net.evaluate(&x).map_err(err)?;
            ensure(got == want, || format!("trial {trial}: exact mismatch at {x:?}"))?;
            let xf: Vec<f64> = x.iter().map(equivar::linalg::Scalar::to_f64).collect();
            let gf = float.evaluate(&xf).map_err(err)?;
            for (a, b) in gf.iter().zip(&want) {
                worst = worst.max((a - equivar::linalg::Scalar::to_f64(b)).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("float error {worst:e}"))?;
    Ok(format!("20 nets x 1000 points, exact match, float error {worst:.1e}"))
}

fn c11_admitted() -> Check {
    let mut r = rng(1111);
    let mut misclassified = 0;
    for k in 0..200 {
        let n = 1 + k % 5;
        let m = random_positive_permutation(&mut r, n);
        if admitted_matrix(&m).is_err() {
            misclassified += 1;
        }
        for _ in 0..20 {
            let x = random_vector(&mut r, n, 5, 3);
            if !relu_commutes(&m, &x) {
                misclassified += 1;
            }
        }
    }
    for k in 0..200 {
        let n = 2 + k % 4;
        let mut m = random_positive_permutation(&mut r, n);
        let i = r.random_range(0..n);
        let j = (0..n).find(|&j| !m.get(i, j).is_zero()).unwrap();
        if k % 2 == 0 {
            // Flip the sign of the nonzero in row i.
            let v = -m.get(i, j).clone();
            m.set(i, j, v);
        } else {
            // Add a second nonzero to row i.
            let other = (j + 1 + r.random_range(0..n - 1)) % n;
            m.set(
                i,
                other,
                Rational::new(r.random_range(1..=3).into(), 2.into()) * q(if k % 4 == 1 { 1 } else { -1 }),
            );
        }
        match admitted_matrix(&m) {
            Ok(()) => misclassified += 1,
            Err(defect) => match commutation_witness(&m, &defect) {
                Some(x) if !relu_commutes(&m, &x) => {}
                _ => misclassified += 1,
            },
        }
    }
    ensure(misclassified == 0, || format!("{misclassified} misclassifications"))?;
    Ok("200 admitted + 200 perturbed, 0 misclassified".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("1 example-target identity", c1_target_identity),
        ("2 invariance of s", c2_invariance),
        ("3 boundary extraction", c3_boundary),
        ("4 six-neuron certificate", c4_six_neurons),
        ("5 one-neuron ordering", c5_one_neuron_ordering),
        ("6 symmetrization", c6_symmetrization),
        ("7 compression bound", c7_compression),
        ("8 projection monotonicity", c8_projection_monotonicity),
        ("9 hypothesis dimensions", c9_dimensions),
        ("10 multilayer construction", c10_multilayer),
        ("11 admitted representations", c11_admitted),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
