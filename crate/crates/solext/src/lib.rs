//! Divergence-free extension of vector fields on 2D/3D domains.
//!
//! The library builds double Whitney covers of a domain and its exterior,
//! matches them with a reflection map, and assembles extension operators
//! that preserve the solenoidality constraint: an L¹-type operator built
//! from simplex flux functionals, and a W^{1,1}-type operator built from a
//! Jones average extension plus telescoping correctors. A verification
//! suite checks the operators' structural properties and reproduces the
//! cuspidal-domain impossibility computations.

pub mod domain;
pub mod extend;
pub mod exterior;
pub mod field;
pub mod geom;
pub mod partition;
pub mod quadrature;
pub mod verify;
pub mod whitney;

pub use domain::{Domain, DomainDescriptor};
pub use geom::{Aabb, Pt};
