//! Desk-scale algorithmic information theory.
//!
//! A concrete prefix-free machine, exhaustive enumeration of its halting
//! domain within budgets, and the exact resource-bounded quantities built on
//! top of it: `K_t`, `m_t`, `Ω_t`, the halting-sequence prefix `H_t`,
//! randomness deficiencies, tests and the conservation checks relating them.
//! A separate finite-depth layer handles semi-measures on Cantor space.
//!
//! All measure arithmetic is exact ([`num_rational::BigRational`]).

pub mod bits;
pub mod cache;
pub mod continuous;
pub mod enumeration;
pub mod error;
pub mod exact;
pub mod harness;
pub mod machine;
pub mod measures;
pub mod staged;

pub use bits::BitString;
pub use error::{Error, Result};
