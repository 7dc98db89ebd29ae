//! Simulating trajectories under the matrix that attains the upper bound.
//!
//!     cargo run --release --example monte_carlo

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wimc::credal::Direction;
use wimc::model::Model;
use wimc::oracle::{sample_trajectory, simulate_hitting, DEFAULT_STEP_CAP};
use wimc::solvers::{solve, Method, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/courier.json"))?;
    let m = Model::from_json_str(&text)?;
    let upper = solve(&m, &SolveOptions::new(Method::PolicyIteration, Direction::Upper))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trip = sample_trajectory(&m, &upper.argopt, 0, &mut rng, 100);
    let names: Vec<&str> = trip.path.iter().map(|&x| m.space().name(x)).collect();
    println!("one trip: {} (cost {:.2})", names.join(" -> "), trip.accumulated_weight);

    for x in m.transient_states() {
        let s = simulate_hitting(&m, &upper.argopt, x, 200_000, 42, DEFAULT_STEP_CAP);
        println!(
            "{:>7}: simulated {:.4} +- {:.4}, exact {:.4}",
            m.space().name(x),
            s.mean,
            s.stderr,
            upper.h[x]
        );
    }
    Ok(())
}
