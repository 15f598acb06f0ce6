//! Photometric fitting: recovers field parameters from posed images by
//! gradient descent on the mean squared render error, with gradients derived
//! by hand through compositing, trilinear interpolation, and the activations.

use alloc::vec;
use alloc::vec::Vec;

use crate::imaging::Image;
use crate::math;
use crate::rng;
use crate::scene::{generate_ray, CameraRig};

use super::render::clip_to_box;
use super::{FieldError, FieldGeometry, ParameterVector, RadianceField};

/// Fitted field plus the loss trajectory. `loss_history[k]` is the
/// photometric MSE (unit pixel scale) after `k` gradient steps, so it has
/// `steps + 1` entries.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub field: RadianceField,
    pub loss_history: Vec<f64>,
}

fn check_targets(images: &[Image], rig: &CameraRig) -> Result<(), FieldError> {
    if images.len() != rig.len() {
        return Err(FieldError::ViewCountMismatch {
            images: images.len(),
            cameras: rig.len(),
        });
    }
    let (w, h) = rig.resolution();
    for img in images {
        if img.width() != w || img.height() != h {
            return Err(FieldError::ResolutionMismatch {
                image: (img.width(), img.height()),
                camera: (w, h),
            });
        }
    }
    Ok(())
}

/// Mean squared photometric error (unit pixel scale) between the renders of
/// `field` and the target images, over all views, pixels, and channels.
pub fn photometric_loss(
    field: &RadianceField,
    images: &[Image],
    rig: &CameraRig,
) -> Result<f64, FieldError> {
    check_targets(images, rig)?;
    let mut pass = Pass::new(field.geometry());
    let mut loss = 0.0;
    for (img, cam) in images.iter().zip(rig.cameras()) {
        for py in 0..cam.height() {
            for px in 0..cam.width() {
                let ray = generate_ray(cam, px, py)?;
                let pixel = pass.forward(field, &ray);
                let target = img.pixel(px, py);
                for ch in 0..3 {
                    let d = pixel[ch] - target[ch];
                    loss += d * d;
                }
            }
        }
    }
    let count = (images.len() * rig.resolution().0 * rig.resolution().1 * 3) as f64;
    Ok(loss / count)
}

/// Loss together with its gradient with respect to every raw parameter.
/// Accumulation order is fixed (view, pixel row-major, sample, corner), so
/// results are deterministic.
pub fn photometric_gradient(
    field: &RadianceField,
    images: &[Image],
    rig: &CameraRig,
) -> Result<(f64, Vec<f64>), FieldError> {
    check_targets(images, rig)?;
    let mut grad = vec![0.0f64; field.params().len()];
    let count = (images.len() * rig.resolution().0 * rig.resolution().1 * 3) as f64;
    let scale = 2.0 / count;
    let mut pass = Pass::new(field.geometry());
    let mut loss = 0.0;
    for (img, cam) in images.iter().zip(rig.cameras()) {
        for py in 0..cam.height() {
            for px in 0..cam.width() {
                let ray = generate_ray(cam, px, py)?;
                let pixel = pass.forward(field, &ray);
                let target = img.pixel(px, py);
                let mut g_pixel = [0.0; 3];
                for ch in 0..3 {
                    let d = pixel[ch] - target[ch];
                    loss += d * d;
                    g_pixel[ch] = scale * d;
                }
                pass.backward(g_pixel, &mut grad);
            }
        }
    }
    Ok((loss / count, grad))
}

/// Fits a field to posed images by full-batch gradient descent.
///
/// Initialization is a mild uniform fog (density logit -1, mid-gray colors)
/// plus seeded jitter of magnitude 1e-3; the run is deterministic given the
/// seed. Parameters are stored as `f32` after every step, matching what a
/// snapshot can represent.
pub fn fit(
    geom: &FieldGeometry,
    images: &[Image],
    rig: &CameraRig,
    steps: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<FitResult, FieldError> {
    check_targets(images, rig)?;
    if !learning_rate.is_finite() {
        return Err(FieldError::NonFinite);
    }
    let mut rng = rng::seeded(seed);
    let mut values = Vec::with_capacity(geom.param_count());
    for i in 0..geom.param_count() {
        let base = if i % 4 == 0 { -1.0 } else { 0.0 };
        values.push((base + rng::uniform_in(&mut rng, -1e-3, 1e-3)) as f32);
    }
    let mut field = RadianceField::new(geom.clone(), ParameterVector::from_values(values)?)?;
    let mut loss_history = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let (loss, grad) = photometric_gradient(&field, images, rig)?;
        loss_history.push(loss);
        let updated: Vec<f32> = field
            .params()
            .values()
            .iter()
            .zip(&grad)
            .map(|(&p, &g)| (p as f64 - learning_rate * g) as f32)
            .collect();
        field = field.with_params(ParameterVector::from_values(updated)?)?;
    }
    loss_history.push(photometric_loss(&field, images, rig)?);
    Ok(FitResult {
        field,
        loss_history,
    })
}

/// Per-sample record kept by the forward pass for the backward sweep.
#[derive(Clone, Copy, Default)]
struct SampleRecord {
    base: [usize; 8],
    weights: [f64; 8],
    /// Compositing weight `T_i * alpha_i`.
    weight: f64,
    /// Transmittance after this sample, `T_{i+1}`.
    t_next: f64,
    /// Activated color.
    color: [f64; 3],
    /// sigmoid of the raw density logit (softplus derivative).
    d_sigma: f64,
    /// Step length along the ray.
    delta: f64,
}

/// Reusable forward/backward scratch for one ray at a time.
struct Pass {
    records: Vec<SampleRecord>,
    live: usize,
    t_final: f64,
    background: [f64; 3],
}

impl Pass {
    fn new(geom: &FieldGeometry) -> Self {
        Self {
            records: vec![SampleRecord::default(); geom.samples_per_ray()],
            live: 0,
            t_final: 1.0,
            background: geom.background(),
        }
    }

    /// Marches a ray without the render cutoff, recording everything the
    /// backward sweep needs. Returns the composited pixel.
    fn forward(&mut self, field: &RadianceField, ray: &crate::scene::Ray) -> [f64; 3] {
        let geom = field.geometry();
        self.live = 0;
        self.t_final = 1.0;
        let Some((t0, t1)) = clip_to_box(geom, ray) else {
            return self.background;
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
            let Some(st) = geom.stencil(p) else {
                continue;
            };
            let raw = field.raw_at(&st);
            let sigma = math::softplus(raw[0]);
            let alpha = -math::exp_m1(-sigma * delta);
            let weight = transmittance * alpha;
            let color = [
                math::sigmoid(raw[1]),
                math::sigmoid(raw[2]),
                math::sigmoid(raw[3]),
            ];
            acc[0] += weight * color[0];
            acc[1] += weight * color[1];
            acc[2] += weight * color[2];
            transmittance *= 1.0 - alpha;
            self.records[self.live] = SampleRecord {
                base: st.base,
                weights: st.weights,
                weight,
                t_next: transmittance,
                color,
                d_sigma: math::sigmoid(raw[0]),
                delta,
            };
            self.live += 1;
        }
        self.t_final = transmittance;
        [
            acc[0] + transmittance * self.background[0],
            acc[1] + transmittance * self.background[1],
            acc[2] + transmittance * self.background[2],
        ]
    }

    /// Scatters `d loss / d pixel` back to the raw parameters touched by the
    /// last forward pass.
    ///
    /// With weights `w_i = T_i alpha_i` and suffix light
    /// `S_i = sum_{j>=i} w_j c_j + T_N bg`, the density derivative is
    /// `d pixel / d sigma_i = delta * (T_{i+1} c_i - S_{i+1})`.
    fn backward(&self, g_pixel: [f64; 3], grad: &mut [f64]) {
        let mut suffix = [
            self.t_final * self.background[0],
            self.t_final * self.background[1],
            self.t_final * self.background[2],
        ];
        for rec in self.records[..self.live].iter().rev() {
            let mut d_sigma_raw = 0.0;
            for ch in 0..3 {
                let g = g_pixel[ch];
                let c = rec.color[ch];
                // Color path: d pixel / d c = w_i, then sigmoid'.
                let d_logit = g * rec.weight * c * (1.0 - c);
                for corner in 0..8 {
                    grad[rec.base[corner] + 1 + ch] += d_logit * rec.weights[corner];
                }
                d_sigma_raw += g * rec.delta * (rec.t_next * c - suffix[ch]);
                suffix[ch] += rec.weight * c;
            }
            let d_density_logit = d_sigma_raw * rec.d_sigma;
            for corner in 0..8 {
                grad[rec.base[corner]] += d_density_logit * rec.weights[corner];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::render;
    use crate::scene::{fixture_scene, orbit_rig, FixtureKind};

    fn tiny_scene() -> (FieldGeometry, Vec<Image>, CameraRig) {
        let geom = FieldGeometry::unit_cube(4, 12, [0.0; 3]).unwrap();
        let truth = fixture_scene(FixtureKind::Sphere, &geom).unwrap();
        let rig = orbit_rig(3, 1.3, 0.25, [0.5; 3], 12, 12, 9.0).unwrap();
        let images = render::render_rig(&truth, &rig).unwrap();
        (geom, images, rig)
    }

    #[test]
    fn zero_step_fit_returns_initial_field() {
        let (geom, images, rig) = tiny_scene();
        let a = fit(&geom, &images, &rig, 0, 0.5, 11).unwrap();
        let b = fit(&geom, &images, &rig, 0, 123.0, 11).unwrap();
        assert_eq!(a.field.params().values(), b.field.params().values());
        assert_eq!(a.loss_history.len(), 1);
    }

    #[test]
    fn fit_is_deterministic_given_seed() {
        let (geom, images, rig) = tiny_scene();
        let a = fit(&geom, &images, &rig, 5, 200.0, 42).unwrap();
        let b = fit(&geom, &images, &rig, 5, 200.0, 42).unwrap();
        assert_eq!(a.field.params().values(), b.field.params().values());
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn loss_matches_render_mse() {
        let (geom, images, rig) = tiny_scene();
        let run = fit(&geom, &images, &rig, 3, 200.0, 7).unwrap();
        let loss = photometric_loss(&run.field, &images, &rig).unwrap();
        let mut acc = 0.0;
        for (img, cam) in images.iter().zip(rig.cameras()) {
            let rendered = render::render(&run.field, cam).unwrap();
            acc += crate::imaging::mse(&rendered, img).unwrap();
        }
        let unit_scale = acc / images.len() as f64 / (255.0 * 255.0);
        assert!(
            (loss - unit_scale).abs() < 1e-12,
            "loss {loss} vs render mse {unit_scale}"
        );
    }

    #[test]
    fn fit_rejects_count_mismatch() {
        let (geom, images, rig) = tiny_scene();
        assert!(matches!(
            fit(&geom, &images[..2], &rig, 1, 1.0, 0),
            Err(FieldError::ViewCountMismatch { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (geom, images, rig) = tiny_scene();
        // Check at a partially fitted state so gradients are non-degenerate.
        let run = fit(&geom, &images, &rig, 10, 200.0, 3).unwrap();
        let field = run.field;
        let (_, grad) = photometric_gradient(&field, &images, &rig).unwrap();

        let mut rng = crate::rng::seeded(17);
        let h = 1e-3;
        for _ in 0..20 {
            let idx =
                (rand_core::RngCore::next_u64(&mut rng) % field.params().len() as u64) as usize;
            let mut plus = field.params().values().to_vec();
            let mut minus = plus.clone();
            plus[idx] = (plus[idx] as f64 + h) as f32;
            minus[idx] = (minus[idx] as f64 - h) as f32;
            // f32 storage quantizes the perturbation; measure the step that
            // was actually applied.
            let h_real = plus[idx] as f64 - minus[idx] as f64;
            let f_plus = photometric_loss(
                &field
                    .with_params(ParameterVector::from_values(plus).unwrap())
                    .unwrap(),
                &images,
                &rig,
            )
            .unwrap();
            let f_minus = photometric_loss(
                &field
                    .with_params(ParameterVector::from_values(minus).unwrap())
                    .unwrap(),
                &images,
                &rig,
            )
            .unwrap();
            let fd = (f_plus - f_minus) / h_real;
            let denom = math::abs(grad[idx]).max(math::abs(fd)).max(1e-12);
            let rel = math::abs(grad[idx] - fd) / denom;
            assert!(
                rel < 1e-3,
                "param {idx}: analytic {} vs fd {fd} (rel {rel})",
                grad[idx]
            );
        }
    }

    #[test]
    fn fit_reduces_loss_on_small_scene() {
        let (geom, images, rig) = tiny_scene();
        let run = fit(&geom, &images, &rig, 60, 400.0, 5).unwrap();
        let first = run.loss_history[0];
        let last = *run.loss_history.last().unwrap();
        assert!(
            last < first * 0.5,
            "loss went {first} -> {last}, expected a clear decrease"
        );
    }
}
