//! Numerical workbench for wave operators on compactly perturbed static
//! spacetimes `M = ℝ × Y`.
//!
//! * [`geometry`]: spatial manifolds, Laplace–Beltrami assembly, spectra, curvature.
//! * [`spacetime`]: static backgrounds `β dt² − h`, compact perturbations, causal relation.
//! * [`waveop`]: the discrete d'Alembertian and its conjugated form `P`.
//! * [`resolvent`]: `(P − z)⁻¹` by mode sums, accretive square roots and direct solves.
//! * [`microlocal`]: bicharacteristics, Feynman pairs and wave-packet probes.
//! * [`zeta`]: on-diagonal complex powers and the residue at `α = n/2 − 1`.
//! * [`runner`]: config-driven experiments behind the `lorentzian-lab` binary.

pub mod curvature;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod microlocal;
pub mod quad;
pub mod resolvent;
pub mod runner;
pub mod sparse;
pub mod spacetime;
pub mod special;
pub mod waveop;
pub mod zeta;

pub use error::{Error, Result};
