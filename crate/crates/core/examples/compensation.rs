//! Replacing a net by its group average never increases the loss on any
//! orbit when the target is invariant.

use equivar::experiments::{compensation_experiment, make_example, CompensationConfig};

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let config = CompensationConfig {
        base_nets: 20,
        points_per_net: 64,
        ..CompensationConfig::default()
    };
    let r = compensation_experiment(&ex.rho, &ex.s, &config)?;
    for t in r.trials.iter().take(5) {
        println!(
            "net {:>2} (width {}): L(f) = {:.5}, L(Qf) = {:.5}",
            t.index, t.width, t.loss_f, t.loss_qf
        );
    }
    println!("{} orbit checks, {} violations", r.orbit_checks, r.violations);
    println!("σ(a) strictly improved on some orbit: {}", r.single_relu_strict);
    Ok(())
}
