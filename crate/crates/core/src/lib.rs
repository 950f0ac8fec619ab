//! Spectral tools for the intermediate long wave (ILW) equation on the torus,
//! treated as a perturbation of the Benjamin-Ono (BO) equation.
//!
//! Fields are stored by their Fourier coefficients
//! `u_hat(xi) = int_0^L u(x) e^{-i xi x} dx`, `xi = 2 pi k / L`.

pub mod dispersive;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod experiments;
pub mod lax;
pub mod quadrature;
pub mod spectral;
pub mod waves;

pub use dispersive::Depth;
pub use error::{Error, Result};
pub use spectral::{HardyVector, RealField, SobolevIndex, SpectralGrid, SymbolTable};
