//! Exact equivariance checks and the admitted-representation test.

use equivar::equivariance::{is_admitted, is_equivariant, permutation_of};
use equivar::experiments::make_example;
use equivar::linalg::format_vector;
use equivar::{ExactNet, Matrix, Representation};

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let trivial = Representation::trivial(ex.group.clone(), 1);

    // σ(a) + σ(b) is swap-invariant but not negation-invariant.
    let net = ExactNet::from_ints(2, 1, &[&[1, 0], &[0, 1]], &[&[1], &[1]]);
    match is_equivariant(&net, &ex.rho, &trivial)?.witness() {
        Some(w) => println!(
            "not invariant under {}: F(ρx) = {}, F(x) = {} at x = {}",
            w.element_name,
            format_vector(&w.transformed_input),
            format_vector(&w.transformed_output),
            format_vector(&w.point)
        ),
        None => println!("invariant"),
    }

    println!("ψ admitted: {}", is_admitted(&ex.psi6).holds());
    for g in 0..ex.group.order() {
        let p = permutation_of(ex.psi6.matrix(g))?;
        println!("ψ_{} = {}", ex.group.name(g), p.cycles());
    }

    // A negated swap does not commute with ReLU.
    let c2 = std::sync::Arc::new(equivar::FiniteGroup::cyclic(2));
    let neg_swap = Matrix::from_int_rows(&[&[0, -1], &[-1, 0]]);
    let psi = Representation::new(c2, vec![Matrix::identity(2), neg_swap])?;
    if let Some(f) = is_admitted(&psi).witness() {
        println!("not admitted at {}: {}", f.element, f.defect);
    }
    Ok(())
}
