//! Loading a model from JSON, validating it and writing the results as JSON.
//!
//!     cargo run --example load_json [model.json]

use wimc::cli::{cmd_solve, DirectionArg, MethodArg, SolveArgs};
use wimc::model::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/routing.json").into());
    let m = Model::from_json_str(&std::fs::read_to_string(&path)?)?;
    println!("{m}");
    println!("validated form:\n{}", m.to_json_pretty());

    let result = cmd_solve(&SolveArgs {
        model: path.into(),
        direction: DirectionArg::Both,
        method: MethodArg::Policy,
        tol: 1e-10,
        max_iters: None,
        with_matrix: false,
        out: None,
    })?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}
