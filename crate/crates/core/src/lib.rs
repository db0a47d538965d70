//! Fixed-confidence Top-m arm identification in linear bandits.
//!
//! The crate is organised around the gap-index focused algorithm family:
//! a regularized least-squares [`estimator`] feeds pairwise gap [`indices`],
//! the [`engine`] turns those into candidate sets, challengers and sampling
//! decisions, and [`complexity`] evaluates the sample-complexity constants.
//! [`harness`] runs seeded Monte-Carlo campaigns on top of all of it.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}

pub mod complexity;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod indices;
pub mod instances;
pub mod linalg;
pub mod seeding;

pub use error::{Error, Result};
