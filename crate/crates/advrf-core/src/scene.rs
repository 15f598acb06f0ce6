//! Cameras, multi-view rigs, ray generation, and procedural ground-truth
//! scenes used as test fixtures and demo content.
//!
//! Camera convention: camera space has x pointing right, y pointing down
//! (image rows grow downward), z pointing into the scene. `cam_to_world` is a
//! rigid transform whose rotation columns are those three axes expressed in
//! world coordinates. Scene content lives in the axis-aligned unit cube by
//! default, with world z up.

use alloc::vec::Vec;
use core::fmt;

use crate::field::{FieldError, FieldGeometry, ParameterVector, RadianceField};
use crate::math;

const ROTATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SceneError {
    /// Focal lengths must be positive and the principal point inside the image.
    BadIntrinsics,
    /// Rotation block of `cam_to_world` is not orthonormal within 1e-6.
    NotRigid,
    /// Bottom row of `cam_to_world` must be (0, 0, 0, 1).
    BadHomogeneousRow,
    /// Rig needs at least one camera.
    EmptyRig,
    /// All cameras in a rig must share one resolution.
    MixedResolutions {
        first: (usize, usize),
        other: (usize, usize),
    },
    /// Orbit radius must be positive.
    BadRadius,
    /// View direction parallel to the world up axis; look-at is undefined.
    DegenerateLookAt,
    /// Pixel coordinate outside the image.
    PixelOutOfBounds {
        px: usize,
        py: usize,
        width: usize,
        height: usize,
    },
    /// Ray direction had zero length.
    ZeroDirection,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::BadIntrinsics => write!(
                f,
                "intrinsics invalid: need fx, fy > 0 and principal point inside the image"
            ),
            SceneError::NotRigid => write!(
                f,
                "camera rotation is not orthonormal within {ROTATION_TOLERANCE}"
            ),
            SceneError::BadHomogeneousRow => {
                write!(f, "cam_to_world bottom row must be (0, 0, 0, 1)")
            }
            SceneError::EmptyRig => write!(f, "camera rig needs at least one camera"),
            SceneError::MixedResolutions { first, other } => write!(
                f,
                "rig resolutions differ: {}x{} vs {}x{}",
                first.0, first.1, other.0, other.1
            ),
            SceneError::BadRadius => write!(f, "orbit radius must be positive"),
            SceneError::DegenerateLookAt => {
                write!(f, "camera looks along the world up axis; orientation undefined")
            }
            SceneError::PixelOutOfBounds {
                px,
                py,
                width,
                height,
            } => write!(f, "pixel ({px}, {py}) outside {width}x{height} image"),
            SceneError::ZeroDirection => write!(f, "ray direction has zero length"),
        }
    }
}

impl core::error::Error for SceneError {}

/// Pinhole camera: intrinsics plus a rigid camera-to-world transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    width: usize,
    height: usize,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    cam_to_world: [[f64; 4]; 4],
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        cam_to_world: [[f64; 4]; 4],
    ) -> Result<Self, SceneError> {
        if width == 0
            || height == 0
            || !(fx > 0.0)
            || !(fy > 0.0)
            || !(0.0..width as f64).contains(&cx)
            || !(0.0..height as f64).contains(&cy)
        {
            return Err(SceneError::BadIntrinsics);
        }
        let bottom = cam_to_world[3];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(SceneError::BadHomogeneousRow);
        }
        // R * R^T must equal the identity within tolerance.
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for (k, row) in cam_to_world.iter().take(3).enumerate() {
                    let _ = row;
                    dot += cam_to_world[i][k] * cam_to_world[j][k];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                if math::abs(dot - want) > ROTATION_TOLERANCE {
                    return Err(SceneError::NotRigid);
                }
            }
        }
        Ok(Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            cam_to_world,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn cam_to_world(&self) -> &[[f64; 4]; 4] {
        &self.cam_to_world
    }

    /// Camera position in world coordinates.
    pub fn position(&self) -> [f64; 3] {
        [
            self.cam_to_world[0][3],
            self.cam_to_world[1][3],
            self.cam_to_world[2][3],
        ]
    }

    /// World-space optical axis (third rotation column).
    pub fn forward(&self) -> [f64; 3] {
        [
            self.cam_to_world[0][2],
            self.cam_to_world[1][2],
            self.cam_to_world[2][2],
        ]
    }

    fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.cam_to_world;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

/// Ordered list of same-resolution cameras; its length is the attack's view
/// count N.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    cameras: Vec<Camera>,
}

impl CameraRig {
    pub fn new(cameras: Vec<Camera>) -> Result<Self, SceneError> {
        let first = cameras.first().ok_or(SceneError::EmptyRig)?;
        let res = (first.width, first.height);
        for cam in &cameras {
            if (cam.width, cam.height) != res {
                return Err(SceneError::MixedResolutions {
                    first: res,
                    other: (cam.width, cam.height),
                });
            }
        }
        Ok(Self { cameras })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn get(&self, index: usize) -> Option<&Camera> {
        self.cameras.get(index)
    }

    /// Shared (width, height) of every camera.
    pub fn resolution(&self) -> (usize, usize) {
        (self.cameras[0].width, self.cameras[0].height)
    }

    /// Rig containing only the cameras at `indices`, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, SceneError> {
        let cams = indices
            .iter()
            .filter_map(|&i| self.cameras.get(i).cloned())
            .collect::<Vec<_>>();
        Self::new(cams)
    }
}

/// World-space ray with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

impl Ray {
    pub fn new(origin: [f64; 3], direction: [f64; 3]) -> Result<Self, SceneError> {
        let direction = math::normalize3(direction, 1e-12).ok_or(SceneError::ZeroDirection)?;
        Ok(Self { origin, direction })
    }
}

/// Rigid look-at transform: camera at `position` pointing its optical axis at
/// `target`, with world +z as the up reference.
fn look_at(position: [f64; 3], target: [f64; 3]) -> Result<[[f64; 4]; 4], SceneError> {
    let forward = math::normalize3(math::sub3(target, position), 1e-12)
        .ok_or(SceneError::DegenerateLookAt)?;
    let up = [0.0, 0.0, 1.0];
    let right =
        math::normalize3(math::cross3(forward, up), 1e-9).ok_or(SceneError::DegenerateLookAt)?;
    let down = math::cross3(forward, right);
    Ok([
        [right[0], down[0], forward[0], position[0]],
        [right[1], down[1], forward[1], position[1]],
        [right[2], down[2], forward[2], position[2]],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

/// Places `n_views` cameras at equal azimuth increments on a circle of the
/// given radius and elevation around `target`, all looking at `target`.
/// Camera 0 sits on the +x axis from the target.
#[allow(clippy::too_many_arguments)]
pub fn orbit_rig(
    n_views: usize,
    radius: f64,
    elevation: f64,
    target: [f64; 3],
    width: usize,
    height: usize,
    focal: f64,
) -> Result<CameraRig, SceneError> {
    if n_views == 0 {
        return Err(SceneError::EmptyRig);
    }
    if !(radius > 0.0) {
        return Err(SceneError::BadRadius);
    }
    let mut cameras = Vec::with_capacity(n_views);
    for k in 0..n_views {
        let azimuth = core::f64::consts::TAU * k as f64 / n_views as f64;
        let position = math::add3(
            target,
            [
                radius * math::cos(elevation) * math::cos(azimuth),
                radius * math::cos(elevation) * math::sin(azimuth),
                radius * math::sin(elevation),
            ],
        );
        let pose = look_at(position, target)?;
        cameras.push(Camera::new(
            width,
            height,
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            pose,
        )?);
    }
    CameraRig::new(cameras)
}

/// Pinhole ray through the center of pixel `(px, py)`.
pub fn generate_ray(cam: &Camera, px: usize, py: usize) -> Result<Ray, SceneError> {
    if px >= cam.width || py >= cam.height {
        return Err(SceneError::PixelOutOfBounds {
            px,
            py,
            width: cam.width,
            height: cam.height,
        });
    }
    let dir_cam = [
        (px as f64 + 0.5 - cam.cx) / cam.fx,
        (py as f64 + 0.5 - cam.cy) / cam.fy,
        1.0,
    ];
    Ray::new(cam.position(), cam.rotate(dir_cam))
}

/// Procedural ground-truth scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// Opaque red sphere centered in the domain, radius 0.3 of the smallest
    /// extent.
    Sphere,
    /// Two disjoint axis-aligned boxes, red and blue, separated along x.
    TwoBoxes,
}

// Saturating logits: sigmoid(+-40) is within 4.3e-18 of {1, 0} and
// softplus(-40) is a visually empty 4.3e-18 density.
const LOGIT_ON: f32 = 40.0;
const LOGIT_OFF: f32 = -40.0;

/// Deterministic ground-truth radiance field for tests and demos.
pub fn fixture_scene(kind: FixtureKind, geom: &FieldGeometry) -> Result<RadianceField, FieldError> {
    let r = geom.resolution();
    let mut values = alloc::vec![0.0f32; geom.param_count()];
    let extent = math::sub3(geom.aabb_max(), geom.aabb_min());
    let min_extent = extent[0].min(extent[1]).min(extent[2]);
    for z in 0..r {
        for y in 0..r {
            for x in 0..r {
                // Voxel center in normalized [0, 1]^3 domain coordinates.
                let u = [
                    (x as f64 + 0.5) / r as f64,
                    (y as f64 + 0.5) / r as f64,
                    (z as f64 + 0.5) / r as f64,
                ];
                let (occupied, color_logits) = match kind {
                    FixtureKind::Sphere => {
                        let world = [
                            geom.aabb_min()[0] + u[0] * extent[0],
                            geom.aabb_min()[1] + u[1] * extent[1],
                            geom.aabb_min()[2] + u[2] * extent[2],
                        ];
                        let center = math::scale3(
                            math::add3(geom.aabb_min(), geom.aabb_max()),
                            0.5,
                        );
                        let d = math::sub3(world, center);
                        let radius = 0.3 * min_extent;
                        (
                            math::dot3(d, d) < radius * radius,
                            [LOGIT_ON, LOGIT_OFF, LOGIT_OFF],
                        )
                    }
                    FixtureKind::TwoBoxes => {
                        let in_red = (0.10..0.40).contains(&u[0])
                            && (0.30..0.70).contains(&u[1])
                            && (0.30..0.70).contains(&u[2]);
                        let in_blue = (0.60..0.90).contains(&u[0])
                            && (0.30..0.70).contains(&u[1])
                            && (0.30..0.70).contains(&u[2]);
                        if in_red {
                            (true, [LOGIT_ON, LOGIT_OFF, LOGIT_OFF])
                        } else if in_blue {
                            (true, [LOGIT_OFF, LOGIT_OFF, LOGIT_ON])
                        } else {
                            (false, [0.0, 0.0, 0.0])
                        }
                    }
                };
                let base = 4 * ((z * r + y) * r + x);
                if occupied {
                    values[base] = LOGIT_ON;
                    values[base + 1] = color_logits[0];
                    values[base + 2] = color_logits[1];
                    values[base + 3] = color_logits[2];
                } else {
                    values[base] = LOGIT_OFF;
                    // Color logits stay 0 (mid gray); empty space is invisible.
                }
            }
        }
    }
    RadianceField::new(geom.clone(), ParameterVector::from_values(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EYE: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        math::abs(a - b) <= tol
    }

    #[test]
    fn camera_rejects_bad_rotation() {
        let mut m = EYE;
        m[0][0] = 2.0;
        assert_eq!(
            Camera::new(8, 8, 4.0, 4.0, 4.0, 4.0, m).unwrap_err(),
            SceneError::NotRigid
        );
    }

    #[test]
    fn camera_rejects_bad_intrinsics() {
        assert_eq!(
            Camera::new(8, 8, 0.0, 4.0, 4.0, 4.0, EYE).unwrap_err(),
            SceneError::BadIntrinsics
        );
        assert_eq!(
            Camera::new(8, 8, 4.0, 4.0, 8.0, 4.0, EYE).unwrap_err(),
            SceneError::BadIntrinsics
        );
    }

    #[test]
    fn single_view_orbit_sits_on_x_axis() {
        let target = [0.5, 0.5, 0.5];
        let rig = orbit_rig(1, 2.0, 0.0, target, 16, 16, 16.0).unwrap();
        let pos = rig.cameras()[0].position();
        assert!(close(pos[0], 2.5, 1e-12));
        assert!(close(pos[1], 0.5, 1e-12));
        assert!(close(pos[2], 0.5, 1e-12));
    }

    #[test]
    fn four_view_orbit_spacing() {
        let target = [0.0, 0.0, 0.0];
        let rig = orbit_rig(4, 3.0, 0.0, target, 16, 16, 16.0).unwrap();
        let expected = [[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]];
        for (cam, exp) in rig.cameras().iter().zip(expected) {
            let p = cam.position();
            assert!(close(p[0], exp[0], 1e-9) && close(p[1], exp[1], 1e-9), "{p:?}");
            let d = math::norm3(math::sub3(p, target));
            assert!(close(d, 3.0, 1e-9));
        }
    }

    #[test]
    fn orbit_cameras_look_at_target() {
        let target = [0.5, 0.5, 0.5];
        let rig = orbit_rig(7, 1.7, 0.4, target, 32, 32, 24.0).unwrap();
        for cam in rig.cameras() {
            let to_target = math::normalize3(math::sub3(target, cam.position()), 1e-12).unwrap();
            let fwd = cam.forward();
            let misalign = math::norm3(math::sub3(to_target, fwd));
            assert!(misalign < 1e-6, "misalignment {misalign}");
        }
    }

    #[test]
    fn orbit_positions_shift_under_relabeling() {
        // Rotating the whole rig by one azimuth increment maps camera k onto
        // camera k+1.
        let n = 6;
        let rig = orbit_rig(n, 2.0, 0.25, [0.0; 3], 8, 8, 8.0).unwrap();
        let step = core::f64::consts::TAU / n as f64;
        let (s, c) = (math::sin(step), math::cos(step));
        for k in 0..n - 1 {
            let p = rig.cameras()[k].position();
            let rotated = [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
            let next = rig.cameras()[k + 1].position();
            assert!(math::norm3(math::sub3(rotated, next)) < 1e-9);
        }
    }

    #[test]
    fn orbit_rejects_zero_radius() {
        assert_eq!(
            orbit_rig(4, 0.0, 0.0, [0.0; 3], 8, 8, 8.0).unwrap_err(),
            SceneError::BadRadius
        );
    }

    #[test]
    fn principal_point_ray_is_on_axis() {
        let cam = Camera::new(8, 8, 4.0, 4.0, 4.5, 4.5, EYE).unwrap();
        let ray = generate_ray(&cam, 4, 4).unwrap();
        assert_eq!(ray.direction, [0.0, 0.0, 1.0]);
        assert_eq!(ray.origin, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn off_axis_ray_is_45_degrees() {
        // px + 0.5 - cx == fx makes the camera-space direction (1, 0, 1).
        let cam = Camera::new(16, 16, 4.0, 4.0, 3.5, 7.5, EYE).unwrap();
        let ray = generate_ray(&cam, 7, 7).unwrap();
        let inv_sqrt2 = 1.0 / math::sqrt(2.0);
        assert!(close(ray.direction[0], inv_sqrt2, 1e-12));
        assert!(close(ray.direction[1], 0.0, 1e-12));
        assert!(close(ray.direction[2], inv_sqrt2, 1e-12));
    }

    #[test]
    fn rays_are_unit_and_span_a_frustum() {
        let rig = orbit_rig(3, 2.0, 0.3, [0.5, 0.5, 0.5], 9, 7, 6.0).unwrap();
        for cam in rig.cameras() {
            let fwd = cam.forward();
            for py in 0..cam.height() {
                for px in 0..cam.width() {
                    let ray = generate_ray(cam, px, py).unwrap();
                    assert!(close(math::norm3(ray.direction), 1.0, 1e-9));
                    assert!(math::dot3(ray.direction, fwd) > 0.0);
                }
            }
        }
    }

    #[test]
    fn ray_rejects_out_of_bounds_pixel() {
        let cam = Camera::new(8, 8, 4.0, 4.0, 4.0, 4.0, EYE).unwrap();
        assert!(matches!(
            generate_ray(&cam, 8, 0),
            Err(SceneError::PixelOutOfBounds { .. })
        ));
    }

    #[test]
    fn rig_rejects_mixed_resolutions() {
        let a = Camera::new(8, 8, 4.0, 4.0, 4.0, 4.0, EYE).unwrap();
        let b = Camera::new(16, 16, 4.0, 4.0, 4.0, 4.0, EYE).unwrap();
        assert!(matches!(
            CameraRig::new(alloc::vec![a, b]),
            Err(SceneError::MixedResolutions { .. })
        ));
    }

    #[test]
    fn sphere_fixture_occupancy_matches_geometry() {
        let geom = FieldGeometry::unit_cube(8, 16, [0.0; 3]).unwrap();
        let field = fixture_scene(FixtureKind::Sphere, &geom).unwrap();
        for z in 0..8 {
            for y in 0..8 {
                for x in 0..8 {
                    let center = [
                        (x as f64 + 0.5) / 8.0,
                        (y as f64 + 0.5) / 8.0,
                        (z as f64 + 0.5) / 8.0,
                    ];
                    let d = math::sub3(center, [0.5, 0.5, 0.5]);
                    let inside = math::dot3(d, d) < 0.09;
                    let (density, _) = field.sample(center);
                    if inside {
                        assert!(density > 1.0, "expected occupied voxel at {center:?}");
                    } else {
                        assert!(density < 1e-15, "expected empty voxel at {center:?}");
                    }
                }
            }
        }
    }
}
