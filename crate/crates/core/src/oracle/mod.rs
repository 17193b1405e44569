//! Independent checks on the series machinery: discrete Fourier quadrature
//! of the vertex expectation evaluated pointwise, Wick's theorem for free
//! fermions, and exact evolution of the collective mode coupled to a small
//! explicit bath.

pub mod finite_bath;
pub mod quadrature;
pub mod wick;

pub use finite_bath::{finite_bath_evolution, FiniteBathConfig, FiniteBathResult};
pub use quadrature::{
    contour_coefficient, four_point_quadrature, hole_propagator_quadrature,
    particle_propagator_quadrature, quadrature_coefficient, vertex_expectation_quadrature,
};
pub use wick::{wick_density, wick_four_point};
