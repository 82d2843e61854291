//! Numerical toolkit for single-shot quantum thermodynamics on small dense
//! systems: free energies and work quantities, a work-from-coherence
//! protocol driven by a ladder reference, collision-model homogenization
//! with reservoir reuse, and audits of universal work-extractor no-go
//! bounds.

pub mod error;
pub mod homogenizer;
pub mod linalg;
pub mod nogo;
pub mod protocol;
pub mod sample;
pub mod thermo;

pub use error::{Error, Result};
