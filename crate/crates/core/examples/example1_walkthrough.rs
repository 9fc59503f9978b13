//! The running example end to end: the target is equivariant, a single
//! ReLU is not, and the smallest layer-wise equivariant form needs six
//! neurons where three suffice without the constraint.

use equivar::equivariance::{is_equivariant, is_len, EquivarianceTriple};
use equivar::experiments::make_example;
use equivar::fixtures::sigma_a;
use equivar::geometry::{boundary_hyperplanes, len_neuron_lower_bound};
use equivar::linalg::format_vector;
use equivar::relu_net::nets_equal_exact;
use equivar::Representation;

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let trivial = Representation::trivial(ex.group.clone(), 1);

    println!("s    = {}", ex.s);
    println!("len6 = {}", ex.len6);

    let s_eq = is_equivariant(&ex.s, &ex.rho, &trivial)?;
    println!("s is invariant: {}", s_eq.holds());

    let single = sigma_a();
    if let Some(w) = is_equivariant(&single, &ex.rho, &trivial)?.witness() {
        println!(
            "σ(a) fails at element {} with x = {}",
            w.element_name,
            format_vector(&w.point)
        );
    }

    let triple = EquivarianceTriple::invariant(ex.rho.clone(), ex.psi6.clone(), 1)?;
    println!("len6 is layer-wise equivariant: {}", is_len(&ex.len6, &triple)?.holds());
    println!("len6 computes s: {}", nets_equal_exact(&ex.s, &ex.len6)?);

    let planes = boundary_hyperplanes(&ex.s);
    let bound = len_neuron_lower_bound(&planes, &ex.rho)?;
    println!(
        "{} boundary hyperplanes, LEN width at least {}",
        planes.len(),
        bound.bound
    );
    Ok(())
}
