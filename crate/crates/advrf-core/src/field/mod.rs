//! Dense voxel radiance field: the scene representation whose flat parameter
//! vector is the attack surface.
//!
//! Each voxel stores four raw values (a density logit and three color
//! logits). Evaluation trilinearly interpolates the raw values and then
//! applies activations (softplus for density, sigmoid per color channel), so
//! any real-valued perturbation keeps density nonnegative and colors in
//! range. Parameters are stored as `f32` so snapshots round-trip bitwise;
//! all arithmetic runs in `f64`.

mod fit;
mod render;

pub use fit::{fit, photometric_gradient, photometric_loss, FitResult};
pub use render::{composite_stats, render, render_rig, CompositeStats};

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Channels stored per voxel: density logit plus three color logits.
pub const CHANNELS_PER_VOXEL: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// Resolution or sample count below the minimum of 2, or an empty box.
    BadGeometry,
    /// Background color must be finite RGB in [0, 1].
    BadBackground,
    /// Parameter vector length does not match the geometry.
    ParamCount { expected: usize, got: usize },
    /// A parameter, action entry, or clamp bound was not finite.
    NonFinite,
    /// Action length differs from the parameter count.
    ActionLength { expected: usize, got: usize },
    /// Negative clamp bound.
    NegativeBound,
    /// Number of target images differs from the rig size.
    ViewCountMismatch { images: usize, cameras: usize },
    /// Target image resolution differs from the rig resolution.
    ResolutionMismatch {
        image: (usize, usize),
        camera: (usize, usize),
    },
    /// Camera error while generating rays.
    Scene(crate::scene::SceneError),
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::BadGeometry => write!(
                f,
                "geometry needs resolution >= 2, samples_per_ray >= 2, and aabb_min < aabb_max"
            ),
            FieldError::BadBackground => {
                write!(f, "background must be finite RGB in [0, 1]")
            }
            FieldError::ParamCount { expected, got } => {
                write!(f, "parameter vector has {got} entries, geometry needs {expected}")
            }
            FieldError::NonFinite => write!(f, "encountered a non-finite value"),
            FieldError::ActionLength { expected, got } => {
                write!(f, "action has {got} entries, parameter vector has {expected}")
            }
            FieldError::NegativeBound => write!(f, "clamp bound must be nonnegative"),
            FieldError::ViewCountMismatch { images, cameras } => {
                write!(f, "{images} images for {cameras} cameras")
            }
            FieldError::ResolutionMismatch { image, camera } => write!(
                f,
                "image is {}x{} but camera renders {}x{}",
                image.0, image.1, camera.0, camera.1
            ),
            FieldError::Scene(e) => write!(f, "scene error: {e}"),
        }
    }
}

impl core::error::Error for FieldError {}

impl From<crate::scene::SceneError> for FieldError {
    fn from(e: crate::scene::SceneError) -> Self {
        FieldError::Scene(e)
    }
}

/// Grid shape, spatial extent, sampling density, and background color.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGeometry {
    resolution: usize,
    aabb_min: [f64; 3],
    aabb_max: [f64; 3],
    samples_per_ray: usize,
    background: [f64; 3],
}

impl FieldGeometry {
    pub fn new(
        resolution: usize,
        aabb_min: [f64; 3],
        aabb_max: [f64; 3],
        samples_per_ray: usize,
        background: [f64; 3],
    ) -> Result<Self, FieldError> {
        if resolution < 2 || samples_per_ray < 2 {
            return Err(FieldError::BadGeometry);
        }
        for axis in 0..3 {
            if !aabb_min[axis].is_finite()
                || !aabb_max[axis].is_finite()
                || aabb_min[axis] >= aabb_max[axis]
            {
                return Err(FieldError::BadGeometry);
            }
        }
        for &c in &background {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(FieldError::BadBackground);
            }
        }
        Ok(Self {
            resolution,
            aabb_min,
            aabb_max,
            samples_per_ray,
            background,
        })
    }

    /// Geometry over the unit cube `[0,1]^3`, the default scene domain.
    pub fn unit_cube(
        resolution: usize,
        samples_per_ray: usize,
        background: [f64; 3],
    ) -> Result<Self, FieldError> {
        Self::new(
            resolution,
            [0.0; 3],
            [1.0; 3],
            samples_per_ray,
            background,
        )
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn aabb_min(&self) -> [f64; 3] {
        self.aabb_min
    }

    pub fn aabb_max(&self) -> [f64; 3] {
        self.aabb_max
    }

    pub fn samples_per_ray(&self) -> usize {
        self.samples_per_ray
    }

    pub fn background(&self) -> [f64; 3] {
        self.background
    }

    /// Total parameter count: 4 channels per voxel of an R^3 grid.
    pub fn param_count(&self) -> usize {
        CHANNELS_PER_VOXEL * self.resolution * self.resolution * self.resolution
    }

    /// Trilinear stencil (8 parameter base offsets plus weights) for a point,
    /// or `None` outside the box. Grid values are clamped to the edge.
    pub(crate) fn stencil(&self, p: [f64; 3]) -> Option<Stencil> {
        let r = self.resolution;
        let mut g = [0.0; 3];
        for axis in 0..3 {
            if p[axis] < self.aabb_min[axis] || p[axis] > self.aabb_max[axis] {
                return None;
            }
            let u = (p[axis] - self.aabb_min[axis]) / (self.aabb_max[axis] - self.aabb_min[axis]);
            g[axis] = (u * r as f64 - 0.5).clamp(0.0, (r - 1) as f64);
        }
        let mut i0 = [0usize; 3];
        let mut t = [0.0; 3];
        for axis in 0..3 {
            let f = math::floor(g[axis]);
            let idx = (f as usize).min(r - 2);
            i0[axis] = idx;
            t[axis] = g[axis] - idx as f64;
        }
        let (tx, ty, tz) = (t[0], t[1], t[2]);
        let (sx, sy, sz) = (1.0 - tx, 1.0 - ty, 1.0 - tz);
        let voxel = |x: usize, y: usize, z: usize| CHANNELS_PER_VOXEL * ((z * r + y) * r + x);
        let (x0, y0, z0) = (i0[0], i0[1], i0[2]);
        Some(Stencil {
            base: [
                voxel(x0, y0, z0),
                voxel(x0 + 1, y0, z0),
                voxel(x0, y0 + 1, z0),
                voxel(x0 + 1, y0 + 1, z0),
                voxel(x0, y0, z0 + 1),
                voxel(x0 + 1, y0, z0 + 1),
                voxel(x0, y0 + 1, z0 + 1),
                voxel(x0 + 1, y0 + 1, z0 + 1),
            ],
            weights: [
                sx * sy * sz,
                tx * sy * sz,
                sx * ty * sz,
                tx * ty * sz,
                sx * sy * tz,
                tx * sy * tz,
                sx * ty * tz,
                tx * ty * tz,
            ],
        })
    }
}

/// Eight-corner trilinear interpolation stencil in parameter space.
pub(crate) struct Stencil {
    pub base: [usize; 8],
    pub weights: [f64; 8],
}

/// Flat parameter array of a radiance field: per voxel a raw density logit
/// followed by three raw color logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f32>,
}

impl ParameterVector {
    pub fn from_values(values: Vec<f32>) -> Result<Self, FieldError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: alloc::vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// A geometry plus a parameter vector of matching length.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceField {
    geometry: FieldGeometry,
    params: ParameterVector,
}

impl RadianceField {
    pub fn new(geometry: FieldGeometry, params: ParameterVector) -> Result<Self, FieldError> {
        if params.len() != geometry.param_count() {
            return Err(FieldError::ParamCount {
                expected: geometry.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { geometry, params })
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.geometry
    }

    pub fn params(&self) -> &ParameterVector {
        &self.params
    }

    /// Replaces the parameter vector, keeping the geometry.
    pub fn with_params(&self, params: ParameterVector) -> Result<Self, FieldError> {
        Self::new(self.geometry.clone(), params)
    }

    /// Raw interpolated channel values at a stencil.
    #[inline]
    pub(crate) fn raw_at(&self, st: &Stencil) -> [f64; 4] {
        let v = &self.params.values;
        let mut out = [0.0; 4];
        for corner in 0..8 {
            let b = st.base[corner];
            let w = st.weights[corner];
            out[0] += w * v[b] as f64;
            out[1] += w * v[b + 1] as f64;
            out[2] += w * v[b + 2] as f64;
            out[3] += w * v[b + 3] as f64;
        }
        out
    }

    /// Density and color at a world-space point. Points outside the box have
    /// zero density and the background color.
    pub fn sample(&self, point: [f64; 3]) -> (f64, [f64; 3]) {
        match self.geometry.stencil(point) {
            None => (0.0, self.geometry.background),
            Some(st) => {
                let raw = self.raw_at(&st);
                (
                    math::softplus(raw[0]),
                    [
                        math::sigmoid(raw[1]),
                        math::sigmoid(raw[2]),
                        math::sigmoid(raw[3]),
                    ],
                )
            }
        }
    }
}

/// Adds a clamped action to a parameter vector: each action entry is clamped
/// to `[-bound, bound]` and added to the corresponding parameter.
pub fn apply_delta(
    p_old: &ParameterVector,
    action: &[f64],
    bound: f64,
) -> Result<ParameterVector, FieldError> {
    if !bound.is_finite() {
        return Err(FieldError::NonFinite);
    }
    if bound < 0.0 {
        return Err(FieldError::NegativeBound);
    }
    if action.len() != p_old.len() {
        return Err(FieldError::ActionLength {
            expected: p_old.len(),
            got: action.len(),
        });
    }
    let mut values = Vec::with_capacity(p_old.len());
    for (&p, &a) in p_old.values.iter().zip(action) {
        if !a.is_finite() {
            return Err(FieldError::NonFinite);
        }
        let next = (p as f64 + a.clamp(-bound, bound)) as f32;
        if !next.is_finite() {
            return Err(FieldError::NonFinite);
        }
        values.push(next);
    }
    Ok(ParameterVector { values })
}
