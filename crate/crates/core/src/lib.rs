//! Lower and upper expected hitting times for weighted imprecise Markov chains.
//!
//! A model assigns each state a credal row (a precise distribution, a box of
//! probability intervals, or the convex hull of a few distributions) and each
//! transition a positive cost. The expected accumulated cost until the chain
//! first enters a target set is then only known up to an interval, and this
//! crate computes both ends of it.
//!
//! ```
//! use wimc::{solve, Direction, Method, Model, SolveOptions};
//!
//! let m = Model::from_json_str(r#"{
//!     "states": ["s", "t"],
//!     "target": ["t"],
//!     "rows": [
//!         {"type": "interval", "lower": [0.2, 0.5], "upper": [0.5, 0.8]},
//!         {"type": "precise", "p": [0.0, 1.0]}
//!     ]
//! }"#).unwrap();
//! let lo = solve(&m, &SolveOptions::new(Method::PolicyIteration, Direction::Lower)).unwrap();
//! let hi = solve(&m, &SolveOptions::new(Method::PolicyIteration, Direction::Upper)).unwrap();
//! assert!((lo.h[0] - 1.25).abs() < 1e-9);
//! assert!((hi.h[0] - 2.0).abs() < 1e-9);
//! ```

pub mod error;
mod linalg;
pub mod model;
pub mod precise;
pub mod credal;
pub mod solvers;
pub mod augment;
pub mod oracle;
pub mod cli;

pub use augment::{augment, solve_via_augmentation, AugmentedModel};
pub use credal::{apply_lower_operator, apply_upper_operator, Direction};
pub use error::{Error, Result};
pub use model::{Model, RowCredalSet, StateSpace, TargetSet, WeightMatrix};
pub use oracle::{brute_force_bounds, simulate_hitting, BruteForceBounds};
pub use precise::{hitting_times_precise, HittingTimeVector, TransitionMatrix};
pub use solvers::{check_r1, solve, Method, SolveOptions, SolveReport};
