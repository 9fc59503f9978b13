//! Group averaging a deep net and checking the layer-wise intertwining
//! identities of the result.

use equivar::experiments::make_example;
use equivar::transforms::expand_multilayer;
use equivar::{Matrix, MultiLayerNet, Representation};

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let phi = Representation::trivial(ex.group.clone(), 1);
    let net = MultiLayerNet::new(vec![
        Matrix::from_int_rows(&[&[1, -2], &[3, 1]]),
        Matrix::from_int_rows(&[&[1, 1], &[-1, 2], &[0, 1]]),
        Matrix::from_int_rows(&[&[2, -1, 1]]),
    ])?;
    let e = expand_multilayer(&net, &ex.rho, &phi)?;
    let widths: Vec<usize> = e.net.weights().iter().map(|w| w.rows()).collect();
    println!("layer widths after expansion: {widths:?}");
    println!("intertwines: {}", e.intertwines(&ex.rho, &phi));

    // The expanded net is invariant under every group element.
    let x = equivar::linalg::qvec(&[2, -5]);
    for g in 0..ex.group.order() {
        let y = e.net.evaluate(&ex.rho.matrix(g).mul_vec(&x))?;
        println!("F(ρ_{} x) = {}", ex.group.name(g), y[0]);
    }
    Ok(())
}
