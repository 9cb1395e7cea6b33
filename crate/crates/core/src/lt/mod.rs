//! A small analytic renderer hosting the bidirectional techniques: scene,
//! camera, materials, path densities, a reference path tracer and the
//! Metropolis integrators.

pub mod bdpt;
pub mod camera;
pub mod image;
pub mod material;
pub mod math;
pub mod mlt;
pub mod path;
pub mod pt;
pub mod scene;
