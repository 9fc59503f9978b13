//! Boundary hyperplanes: cancellation, symmetry and the width bound.

use equivar::experiments::make_example;
use equivar::geometry::{
    boundary_hyperplanes, candidate_hyperplanes, is_hyperplane_set_symmetric, len_neuron_lower_bound,
};
use equivar::linalg::format_vector;
use equivar::ExactNet;

fn main() -> equivar::Result<()> {
    let ex = make_example();

    // σ(a) - σ(-a) = a is linear, so its kink cancels.
    let linear = ExactNet::from_ints(2, 1, &[&[1, 0], &[-1, 0]], &[&[1], &[-1]]);
    println!(
        "σ(a) - σ(-a): {} candidate, {} boundary",
        candidate_hyperplanes(&linear).len(),
        boundary_hyperplanes(&linear).len()
    );

    let planes = boundary_hyperplanes(&ex.s);
    for (p, jump) in planes.iter() {
        let rows: Vec<String> = jump
            .map(|j| j.to_rows().iter().map(|r| format_vector(r)).collect())
            .unwrap_or_default();
        println!("plane {p} with jump rows {}", rows.join(" "));
    }
    println!("symmetric: {}", is_hyperplane_set_symmetric(&planes, &ex.rho)?.holds());
    let bound = len_neuron_lower_bound(&planes, &ex.rho)?;
    for o in &bound.orbits {
        let names: Vec<String> = o.planes.iter().map(|p| p.to_string()).collect();
        println!("plane orbit {} needs {} neurons", names.join(" "), o.channel_orbit_size);
    }
    println!("lower bound: {}", bound.bound);
    Ok(())
}
