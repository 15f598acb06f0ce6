//! Volumetric rendering by emission-absorption compositing.
//!
//! Every ray marches `samples_per_ray` equally spaced points through its
//! intersection with the field's bounding box. Sampling is deterministic, so
//! renders are pure functions of the parameter vector and the camera.

use alloc::vec::Vec;

use crate::imaging::Image;
use crate::math;
use crate::scene::{generate_ray, Camera, CameraRig, Ray};

use super::{FieldError, FieldGeometry, RadianceField};

// Once transmittance drops below this the remaining samples cannot move any
// channel by more than the cutoff itself.
const TRANSMITTANCE_CUTOFF: f64 = 1e-12;

/// Entry/exit distances of a ray through the box, or `None` on a miss.
/// The entry distance is clamped to zero so marching starts at the origin
/// when it lies inside the box.
pub(crate) fn clip_to_box(geom: &FieldGeometry, ray: &Ray) -> Option<(f64, f64)> {
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let o = ray.origin[axis];
        let d = ray.direction[axis];
        let lo = geom.aabb_min()[axis];
        let hi = geom.aabb_max()[axis];
        if math::abs(d) < 1e-15 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (t0, t1) = if inv >= 0.0 {
            ((lo - o) * inv, (hi - o) * inv)
        } else {
            ((hi - o) * inv, (lo - o) * inv)
        };
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
    }
    if t_exit > t_enter {
        Some((t_enter, t_exit))
    } else {
        None
    }
}

/// Composites one ray and returns the pixel color (unclamped).
#[inline]
fn march(field: &RadianceField, ray: &Ray) -> [f64; 3] {
    let geom = field.geometry();
    let bg = geom.background();
    let Some((t0, t1)) = clip_to_box(geom, ray) else {
        return bg;
    };
    let n = geom.samples_per_ray();
    let delta = (t1 - t0) / n as f64;
    let mut acc = [0.0f64; 3];
    let mut transmittance = 1.0f64;
    for i in 0..n {
        let t = t0 + (i as f64 + 0.5) * delta;
        let p = [
            ray.origin[0] + t * ray.direction[0],
            ray.origin[1] + t * ray.direction[1],
            ray.origin[2] + t * ray.direction[2],
        ];
        // Sample points lie strictly inside the clipped segment, but fp
        // rounding can push one past a face; treat that as empty space.
        let Some(st) = geom.stencil(p) else {
            continue;
        };
        let raw = field.raw_at(&st);
        let sigma = math::softplus(raw[0]);
        let alpha = -math::exp_m1(-sigma * delta);
        let weight = transmittance * alpha;
        acc[0] += weight * math::sigmoid(raw[1]);
        acc[1] += weight * math::sigmoid(raw[2]);
        acc[2] += weight * math::sigmoid(raw[3]);
        transmittance *= 1.0 - alpha;
        if transmittance < TRANSMITTANCE_CUTOFF {
            break;
        }
    }
    [
        acc[0] + transmittance * bg[0],
        acc[1] + transmittance * bg[1],
        acc[2] + transmittance * bg[2],
    ]
}

/// Renders one camera view. Rays that miss the box get the background color.
pub fn render(field: &RadianceField, cam: &Camera) -> Result<Image, FieldError> {
    let mut pixels = Vec::with_capacity(cam.width() * cam.height());
    for py in 0..cam.height() {
        for px in 0..cam.width() {
            let ray = generate_ray(cam, px, py)?;
            let c = march(field, &ray);
            pixels.push([
                c[0].clamp(0.0, 1.0),
                c[1].clamp(0.0, 1.0),
                c[2].clamp(0.0, 1.0),
            ]);
        }
    }
    Image::new(cam.width(), cam.height(), pixels).map_err(|_| FieldError::NonFinite)
}

/// Renders every camera of a rig in order.
pub fn render_rig(field: &RadianceField, rig: &CameraRig) -> Result<Vec<Image>, FieldError> {
    rig.cameras().iter().map(|cam| render(field, cam)).collect()
}

/// Compositing diagnostics for one ray, marched without the transmittance
/// cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeStats {
    /// Sum of the per-sample compositing weights `T_i * alpha_i`.
    pub weight_sum: f64,
    /// Transmittance left after the last sample.
    pub t_final: f64,
}

/// Exact per-ray compositing bookkeeping, for verifying the partition of
/// unity and transmittance monotonicity.
pub fn composite_stats(field: &RadianceField, ray: &Ray) -> CompositeStats {
    let geom = field.geometry();
    let Some((t0, t1)) = clip_to_box(geom, ray) else {
        return CompositeStats {
            weight_sum: 0.0,
            t_final: 1.0,
        };
    };
    let n = geom.samples_per_ray();
    let delta = (t1 - t0) / n as f64;
    let mut weight_sum = 0.0f64;
    let mut transmittance = 1.0f64;
    for i in 0..n {
        let t = t0 + (i as f64 + 0.5) * delta;
        let p = [
            ray.origin[0] + t * ray.direction[0],
            ray.origin[1] + t * ray.direction[1],
            ray.origin[2] + t * ray.direction[2],
        ];
        let Some(st) = geom.stencil(p) else {
            continue;
        };
        let raw = field.raw_at(&st);
        let sigma = math::softplus(raw[0]);
        let alpha = -math::exp_m1(-sigma * delta);
        weight_sum += transmittance * alpha;
        transmittance *= 1.0 - alpha;
    }
    CompositeStats {
        weight_sum,
        t_final: transmittance,
    }
}
