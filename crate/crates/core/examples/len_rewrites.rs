//! Orbit expansion, symmetrization and compression of layer-wise
//! equivariant nets.

use equivar::experiments::make_example;
use equivar::linalg::format_vector;
use equivar::relu_net::nets_equal_exact;
use equivar::transforms::{compress_orbits, double_size_bound_check, expand_to_len, symmetrize_len};

fn main() -> equivar::Result<()> {
    let ex = make_example();

    let (expanded, psi) = expand_to_len(&ex.s, &ex.rho)?;
    println!("expanded to {} neurons (ψ of dim {})", expanded.neurons(), psi.dim());

    let sym = symmetrize_len(&expanded, &ex.rho, &psi)?;
    println!(
        "symmetrized: closed = {}, equal = {}",
        sym.is_closed(&ex.rho),
        nets_equal_exact(&sym.net, &ex.s)?
    );

    let c = compress_orbits(&sym, &ex.rho)?;
    println!("compressed: {}", c.net);
    for o in &c.orbits {
        println!(
            "  orbit of {}: size {}, stabilizer {}",
            format_vector(&o.representative),
            o.size,
            o.stabilizer_order
        );
    }

    let report = double_size_bound_check(&ex.s, &ex.rho)?;
    println!(
        "m = {}, m' = {}, boundary planes = {}, bounds hold = {}",
        report.input_neurons,
        report.output_neurons,
        report.boundary_hyperplanes,
        report.holds()
    );
    Ok(())
}
