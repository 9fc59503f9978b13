//! Reading and writing the JSON file formats.

use equivar::experiments::make_example;
use equivar::io::{load_net, load_representation, net_to_json, representation_to_json, to_json_string, write_json};

fn main() -> equivar::Result<()> {
    let ex = make_example();
    let dir = std::env::temp_dir().join("equivar-json-example");
    std::fs::create_dir_all(&dir).map_err(|source| equivar::Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let net_path = dir.join("len6.json");
    let rho_path = dir.join("rho.json");
    write_json(&net_path, &net_to_json(&ex.len6))?;
    write_json(&rho_path, &representation_to_json(&ex.rho))?;

    let net = load_net(&net_path)?;
    let rho = load_representation(&rho_path)?;
    println!("{}", to_json_string(&net_to_json(&net)));
    println!(
        "round trip equal: {}",
        net == ex.len6 && rho.matrices() == ex.rho.matrices()
    );
    Ok(())
}
