//! Turning weights into extra steps: the unweighted augmented chain.
//!
//!     cargo run --example augmented_chain

use wimc::augment::{augment, solve_via_augmentation};
use wimc::credal::Direction;
use wimc::model::{Model, RowCredalSet, WeightMatrix};
use wimc::solvers::{solve, Method, SolveOptions};

fn main() -> wimc::Result<()> {
    let weights = WeightMatrix::from_rows(vec![vec![0.5, 3.0], vec![1.0, 1.0]])?;
    let m = Model::numbered(
        &[1],
        Some(weights),
        vec![
            RowCredalSet::interval(vec![0.3, 0.4], vec![0.6, 0.7]),
            RowCredalSet::precise(vec![0.0, 1.0]),
        ],
    )?;

    let aug = augment(&m)?;
    println!("scale c = {} (smallest weight 0.5 becomes 2)", aug.scale());
    for (name, row) in aug.model().space().names().iter().zip(aug.model().rows()) {
        println!("  {name:>8}: {:?}", row.representative());
    }

    for dir in [Direction::Lower, Direction::Upper] {
        let opts = SolveOptions::new(Method::PolicyIteration, dir);
        let direct = solve(&m, &opts)?;
        let via = solve_via_augmentation(&m, &opts)?;
        println!(
            "{:>5}: direct {:?}, through the augmented chain {:?}",
            dir.as_str(),
            direct.h.as_slice(),
            via.h.as_slice()
        );
    }
    Ok(())
}
