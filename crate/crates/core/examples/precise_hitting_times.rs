//! Expected weighted hitting times of one ordinary Markov chain.
//!
//!     cargo run --example precise_hitting_times

use wimc::model::{TargetSet, WeightMatrix};
use wimc::precise::{hitting_times_precise, hitting_times_unweighted, TransitionMatrix};

fn main() -> wimc::Result<()> {
    // A walker on a path 0 - 1 - 2 - 3 that wants to reach 3. From 0 it
    // always steps right; elsewhere it steps left or right with equal odds.
    let t = TransitionMatrix::from_rows(vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.0],
        vec![0.0, 0.5, 0.0, 0.5],
        vec![0.0, 0.0, 0.0, 1.0],
    ])?;
    let target = TargetSet::new(4, &[3])?;

    let steps = hitting_times_unweighted(&t, &target)?;
    println!("expected steps:      {:?}", steps.as_slice());

    // Moving right is uphill and costs three times as much as moving left.
    let mut w = vec![vec![1.0; 4]; 4];
    for (x, row) in w.iter_mut().enumerate().take(3) {
        row[x + 1] = 3.0;
    }
    let cost = hitting_times_precise(&t, &target, &WeightMatrix::from_rows(w)?)?;
    println!("expected total cost: {:?}", cost.as_slice());

    // Without the right edge at 2, state 2 can never get to the target.
    let stuck = TransitionMatrix::from_rows(vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])?;
    let h = hitting_times_unweighted(&stuck, &target)?;
    println!("cut-off chain:       {:?} (infinite at {:?})", h.as_slice(), h.infinite_states());
    Ok(())
}
