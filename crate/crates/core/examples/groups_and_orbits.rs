//! Groups from tables, representations, and transposed-action orbits.

use equivar::linalg::format_vector;
use std::sync::Arc;

use equivar::group::orbit_transposed;
use equivar::linalg::qvec;
use equivar::{FiniteGroup, Matrix, Representation};

fn main() -> equivar::Result<()> {
    let c4 = Arc::new(FiniteGroup::cyclic(4));
    // Rotation by a quarter turn generates the plane representation of C4.
    let r = Matrix::from_int_rows(&[&[0, -1], &[1, 0]]);
    let mut mats = vec![Matrix::identity(2)];
    for k in 1..4 {
        let prev: &Matrix<_> = &mats[k - 1];
        mats.push(prev.mul(&r));
    }
    let rho = Representation::new(c4.clone(), mats)?;
    println!("C4 of order {} acting on R^{}", c4.order(), rho.dim());

    for v in [qvec(&[1, 0]), qvec(&[1, 1]), qvec(&[0, 0])] {
        let orbit = orbit_transposed(&rho, &v)?;
        println!(
            "orbit of {}: {} members, stabilizer order {}",
            format_vector(&v),
            orbit.len(),
            orbit.stabilizer.len()
        );
    }

    // A malformed table is rejected with the failing axiom.
    let bad = FiniteGroup::new(vec!["e".into(), "a".into()], vec![vec![0, 1], vec![1, 1]], 0);
    println!("bad table: {}", bad.unwrap_err());
    Ok(())
}
