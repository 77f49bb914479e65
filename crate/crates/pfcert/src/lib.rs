//! Certified upper bounds for Poincaré–Friedrichs constants of the exterior
//! derivative — gradient, curl, and divergence as special cases — over
//! simplicial meshes with shellable triangulations, validated against a
//! built-in finite element eigenvalue reference oracle.
//!
//! The numeric core is generic over the scalar type via [`scalar::Real`]
//! (implemented for `f32` and `f64`); the finite element oracle in
//! [`feec`] is `f64`-only. Concrete `f64` type aliases for the central
//! types live at the crate root.

pub mod bounds;
pub mod constants;
pub mod examples;
pub mod feec;
pub mod geometry;
pub mod mesh;
pub mod meshio;
pub mod report;
pub mod scalar;
pub mod shelling;
pub mod starmap;

/// A simplicial complex with `f64` coordinates.
pub type Complex = mesh::SimplicialComplex<f64>;
/// Simplex metric data at `f64` precision.
pub type Geometry = geometry::SimplexGeometry<f64>;
/// An affine map at `f64` precision.
pub type Map = geometry::AffineMap<f64>;
/// A Lebesgue exponent at `f64` precision.
pub type Exponent = constants::LebesgueExponent<f64>;
