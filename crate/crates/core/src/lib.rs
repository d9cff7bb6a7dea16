//! Bregman families over a finite set, reverse Bregman projections, and the
//! two maximization problems: the divergence from a family over all pms, and
//! the auxiliary function `B̄` over kernel directions.
//!
//! ```
//! use bregmax::{beta::BetaSystem, family::{Instance, Pm}, projection::rb_project};
//!
//! // independence model of two bits
//! let inst = Instance::new(
//!     ["00", "01", "10", "11"].map(String::from).to_vec(),
//!     &[vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
//!     BetaSystem::make_classical(&[1.0; 4]).unwrap(),
//! )
//! .unwrap();
//! let p = Pm::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
//! let proj = rb_project(&inst, &p).unwrap();
//! assert!((proj.value - 2f64.ln()).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bbar;
pub mod beta;
pub mod error;
pub mod family;
pub mod maximize;
pub mod numerics;
pub mod projection;
pub mod rng;

mod ascent;

pub use error::{Error, Result};
