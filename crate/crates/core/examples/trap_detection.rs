//! Detecting models where some admissible behaviour never reaches the target.
//!
//!     cargo run --example trap_detection

use wimc::credal::Direction;
use wimc::model::{Model, RowCredalSet};
use wimc::precise::hitting_times_precise;
use wimc::solvers::{check_r1, solve, Method, SolveOptions};

fn main() -> wimc::Result<()> {
    // "loop" may keep all of its mass on itself: its upper bound on the
    // self-transition is 1 and nothing forces it towards "exit".
    let m = Model::new(
        ["start", "loop", "exit"].map(String::from).to_vec(),
        &[2],
        None,
        vec![
            RowCredalSet::precise(vec![0.0, 0.5, 0.5]),
            RowCredalSet::interval(vec![0.0, 0.2, 0.0], vec![0.0, 1.0, 0.8]),
            RowCredalSet::precise(vec![0.0, 0.0, 1.0]),
        ],
    )?;

    let cert = check_r1(&m);
    println!("R1 holds: {}, trap: {:?}", cert.satisfied, cert.trap_names(&m));
    let witness = cert.witness_matrix(&m)?;
    println!("witness matrix: {:?}", witness.to_rows());
    let h = hitting_times_precise(&witness, m.target(), m.weights())?;
    println!("hitting times under the witness: {:?}", h.as_slice());

    match solve(&m, &SolveOptions::new(Method::PolicyIteration, Direction::Upper)) {
        Ok(_) => println!("solved?"),
        Err(e) => println!("solver refuses: {e}"),
    }
    Ok(())
}
