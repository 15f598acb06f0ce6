//! Core algorithms for crafting adversarial voxel radiance fields.
//!
//! A reinforcement-learning agent perturbs the flat parameter vector of a
//! dense voxel radiance field so that images rendered from many viewpoints
//! are misclassified by a black-box image classifier, while a pixel-space
//! penalty keeps the perturbation bounded. This crate holds the pure
//! algorithmic pieces:
//!
//! - [`imaging`]: image and mask value types plus pixel-space metrics
//! - [`scene`]: cameras, orbit rigs, ray generation, and fixture scenes
//! - [`field`]: the voxel radiance field, volumetric rendering, and
//!   photometric fitting with hand-derived gradients
//! - [`classifier`]: the black-box classifier boundary and built-in toy models
//! - [`env`]: the attack environment (perturb, render, classify, reward)
//! - [`agent`]: proximal policy optimization over full-parameter actions
//!
//! File formats, image codecs, and the command-line harness live in the
//! companion `advrf` crate. Everything here is `no_std` + `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod classifier;
pub mod env;
pub mod field;
pub mod imaging;
pub(crate) mod math;
pub mod rng;
pub mod scene;
