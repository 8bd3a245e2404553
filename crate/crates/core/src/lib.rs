//! Numerical workbench for Ritt operators induced by probability measures
//! on ℤ.
//!
//! The crate realizes convolution operators `T_μ f = Σ_k μ(k) Tᵏ f` on
//! ℓ¹(ℤ) windows and on the cyclic group ℤ_N, together with the objects
//! used to study their boundedness in L¹:
//!
//! * [`zmeasure`]: exact convolution algebra, fractional differences `ν_α`,
//!   kernels of `Tⁿ(I - T)^r`, Ritt traces.
//! * [`spectral`]: symbols `μ̂, μ̂′, μ̂″` and the BA / BA₁ / BA₂ / Dungey
//!   regularity checks.
//! * [`sqfun`]: square functions `Q_{α,s,r}`, weighted maximal orbits and
//!   the Abel-summation domination.
//! * [`varosc`]: exact s-variation, oscillation norms and block sequences.
//! * [`czdecomp`]: ergodic Calderón–Zygmund decomposition on ℤ_N and
//!   weak-(1,1) profiles.
//! * [`lemmalab`]: Fourier-side quantities `A, B, C, D` with refinement
//!   ladders, and envelope estimates.

pub mod czdecomp;
pub mod error;
pub mod lemmalab;
pub mod numeric;
pub mod output;
mod par;
pub mod signal;
pub mod spectral;
pub mod sqfun;
pub mod varosc;
pub mod zmeasure;

pub use error::{Error, Result};
pub use signal::{Domain, Signal};
pub use spectral::Symbol;
pub use zmeasure::{ProbabilityMeasure, SignedMeasure};
