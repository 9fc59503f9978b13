//! Parameter counts of constrained architectures.

use equivar::experiments::{hypothesis_dimension, make_example, ArchitectureSpec, OrbitBlock};
use equivar::linalg::qvec;

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let specs = [
        ArchitectureSpec::gn(2, 3, 1),
        ArchitectureSpec::gen(ex.rho.clone(), 1, 1),
        ArchitectureSpec::example_len6(),
        ArchitectureSpec::len(ex.rho.clone(), vec![OrbitBlock::new(vec![qvec(&[1, 1])])], 1)?,
    ];
    for spec in &specs {
        println!(
            "{:<4} width {:>2}: {} parameters",
            spec.constraint.name(),
            spec.realized_width(),
            hypothesis_dimension(spec)?
        );
    }
    Ok(())
}
