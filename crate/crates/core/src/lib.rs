//! Energies, degrees and degree-class distances for circle-valued maps in the
//! fractional Sobolev space `W^{1/p,p}(S¹; S¹)`.
//!
//! Module map:
//!
//! - [`geometry`]: chord and geodesic metrics, arcs, torus regions.
//! - [`maps`]: sampled phase liftings and the standard map families.
//! - [`energy`]: Gagliardo energies by staggered quadrature, spectral `p = 2` energy.
//! - [`degree`]: winding and Fourier degrees.
//! - [`optimize`]: class energies, distances to degree classes, explicit competitors.
//! - [`lemma_checks`]: randomized checks of the supporting inequalities.
//! - [`experiments`]: configs, experiment runners and their CSV/JSON/SVG output.
//! - [`battery`]: fixed seeded collections of test maps.
//! - [`plot`]: static SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod degree;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod lemma_checks;
pub mod maps;
pub mod optimize;
pub mod plot;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/maps.md")]
    struct Maps;
    #[doc = include_str!("../../../book/src/energy.md")]
    struct Energy;
    #[doc = include_str!("../../../book/src/degree.md")]
    struct Degree;
    #[doc = include_str!("../../../book/src/class-energy.md")]
    struct ClassEnergy;
    #[doc = include_str!("../../../book/src/distances.md")]
    struct Distances;
    #[doc = include_str!("../../../book/src/lemma-checks.md")]
    struct LemmaChecks;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
