//! Lower and upper expected delivery cost for a courier with imprecisely
//! known routing behaviour, computed by both solvers.
//!
//!     cargo run --example lower_upper_bounds

use wimc::credal::Direction;
use wimc::model::{Model, RowCredalSet, WeightMatrix};
use wimc::solvers::{solve, Method, SolveOptions};

fn main() -> wimc::Result<()> {
    let states = ["depot", "hub", "detour", "door"].map(String::from).to_vec();
    let weights = WeightMatrix::from_rows(vec![
        vec![1.0, 2.0, 4.5, 9.0],
        vec![3.0, 1.0, 2.0, 1.5],
        vec![1.0, 2.5, 1.0, 3.0],
        vec![1.0; 4],
    ])?;
    let rows = vec![
        // the depot dispatches to the hub 50-80% of the time
        RowCredalSet::interval(vec![0.0, 0.5, 0.1, 0.0], vec![0.0, 0.8, 0.4, 0.2]),
        // two plausible hub behaviours and anything in between
        RowCredalSet::vertices(vec![vec![0.0, 0.0, 0.3, 0.7], vec![0.2, 0.0, 0.0, 0.8]]),
        RowCredalSet::precise(vec![0.0, 0.5, 0.0, 0.5]),
        RowCredalSet::precise(vec![0.0, 0.0, 0.0, 1.0]),
    ];
    let m = Model::new(states, &[3], Some(weights), rows)?;
    println!("{m}");

    for dir in [Direction::Lower, Direction::Upper] {
        let pi = solve(&m, &SolveOptions::new(Method::PolicyIteration, dir))?;
        let vi = solve(&m, &SolveOptions::new(Method::ValueIteration, dir))?;
        println!(
            "{:>5}: {:?}\n       policy iteration {} iterations, value iteration {} iterations, gap {:.1e}",
            dir.as_str(),
            pi.h.as_slice(),
            pi.iterations,
            vi.iterations,
            pi.h.max_abs_diff(&vi.h)
        );
        println!("       attained by {:?}", pi.argopt.to_rows());
    }
    Ok(())
}
