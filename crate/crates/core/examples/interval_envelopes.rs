//! Lower and upper expectations over one row of probability intervals.
//!
//!     cargo run --example interval_envelopes

use wimc::credal::{row_lower_expectation, row_upper_expectation};
use wimc::model::{tighten_interval, RowCredalSet};
use wimc::oracle::enumerate_row_extremes;

fn main() -> wimc::Result<()> {
    let lower = vec![0.1, 0.2, 0.0];
    let upper = vec![0.9, 0.5, 0.3];

    // Not every bound is reachable. The first coordinate has to make up what
    // the others cannot carry, so it is at least 1 - 0.5 - 0.3 = 0.2, and it
    // can never exceed 1 - 0.2 - 0.0 = 0.8.
    let (tl, tu) = tighten_interval(&lower, &upper);
    println!("tightened lower {tl:?}");
    println!("tightened upper {tu:?}");

    let row = RowCredalSet::interval(lower, upper);
    let costs = [4.0, 1.0, 10.0];
    let lo = row_lower_expectation(&row, &costs)?;
    let hi = row_upper_expectation(&row, &costs)?;
    println!("costs {costs:?}");
    println!("  lower expectation {:.3} at {:?}", lo.value, lo.distribution);
    println!("  upper expectation {:.3} at {:?}", hi.value, hi.distribution);

    println!("extreme points of the row:");
    for p in enumerate_row_extremes(&row)? {
        let v: f64 = p.iter().zip(&costs).map(|(p, c)| p * c).sum();
        println!("  {p:?} -> {v:.3}");
    }
    Ok(())
}
