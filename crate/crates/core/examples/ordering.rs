//! Fits one- and three-neuron models of each architecture class to the
//! target and prints the resulting loss gaps. Pass a restart count as the
//! first argument (default 5; the full experiment uses 50).

use equivar::experiments::{ordering_experiment, FitConfig, OrderingConfig};

fn main() -> equivar::Result<()> {
    let restarts = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = OrderingConfig {
        fit: FitConfig {
            restarts,
            iterations: 2000,
            samples: 4000,
            ..FitConfig::default()
        },
        mc_samples: 100_000,
    };
    let r = ordering_experiment(&config)?;
    println!("E[s²]            = {:.6}", r.target_energy.value);
    println!(
        "loss of σ(a)      = {:.6} ± {:.6}",
        r.single_relu_loss.mean, r.single_relu_loss.stderr
    );
    println!("best GN, m = 1    = {:.6}", r.gn1.loss);
    println!("GEN, m = 1        : only the zero net ({})", r.gen1.valid());
    println!("GEN, m = 3 exact  : {}", r.gen3_exact);
    println!("LEN width bound   = {}", r.len_lower_bound.bound);
    println!("best LEN, m <= 3  = {:.6}", r.len3_best.loss);
    println!("LEN, m = 6 exact  : {}", r.len6_exact);
    println!("ordering holds    : {}", r.holds());
    Ok(())
}
