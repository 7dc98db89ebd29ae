//! Checking the solver against exhaustive enumeration of extreme matrices.
//!
//!     cargo run --example brute_force_oracle [model.json]

use wimc::credal::Direction;
use wimc::model::Model;
use wimc::oracle::brute_force_bounds;
use wimc::solvers::{solve, Method, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/courier.json").into());
    let m = Model::from_json_str(&std::fs::read_to_string(&path)?)?;

    let bf = brute_force_bounds(&m)?;
    println!("{} vertex selections enumerated", bf.selections);
    for (dir, oracle) in [(Direction::Lower, &bf.lower), (Direction::Upper, &bf.upper)] {
        let pi = solve(&m, &SolveOptions::new(Method::PolicyIteration, dir))?;
        println!("{:>5}: oracle    {:?}", dir.as_str(), oracle.as_slice());
        println!("       solver    {:?}", pi.h.as_slice());
        println!("       max gap   {:.1e}", pi.h.max_abs_diff(oracle));
    }
    Ok(())
}
