use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Orthographic camera orbiting the world origin.
///
/// World up is +y. The camera-space frame is obtained by rotating world
/// points about +y by the azimuth, then about the camera x-axis by the
/// elevation. The camera looks down camera -z, so front-facing surfaces have
/// camera-space normals with positive z and depth is `-z`. The square
/// `[-ortho_scale/2, ortho_scale/2]²` of the image plane spans the whole
/// image, row 0 at the top. Pixel `(r, c)` has its center at
/// `(r + 0.5, c + 0.5)` in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub height: usize,
    pub width: usize,
    /// World extent (cm) covered by the image along both axes.
    pub ortho_scale: f64,
}

/// Continuous pixel position plus depth along the viewing axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub row: f64,
    pub col: f64,
    pub depth: f64,
}

impl Projection {
    /// The pixel containing this position, if inside the image.
    pub fn pixel(&self, height: usize, width: usize) -> Option<(usize, usize)> {
        let r = self.row.floor();
        let c = self.col.floor();
        if r >= 0.0 && c >= 0.0 && r < height as f64 && c < width as f64 {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }
}

impl CameraPose {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, height: usize, width: usize, ortho_scale: f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "image size must be positive, got {height}x{width}"
            )));
        }
        if !(ortho_scale > 0.0 && ortho_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ortho_scale must be positive, got {ortho_scale}"
            )));
        }
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::InvalidArgument("camera angles must be finite".into()));
        }
        Ok(Self {
            azimuth_deg,
            elevation_deg,
            height,
            width,
            ortho_scale,
        })
    }

    /// World-to-camera rotation.
    pub fn rotation(&self) -> Matrix3<f64> {
        let (sa, ca) = self.azimuth_deg.to_radians().sin_cos();
        let (se, ce) = self.elevation_deg.to_radians().sin_cos();
        let azimuth = Matrix3::new(ca, 0.0, sa, 0.0, 1.0, 0.0, -sa, 0.0, ca);
        let elevation = Matrix3::new(1.0, 0.0, 0.0, 0.0, ce, -se, 0.0, se, ce);
        elevation * azimuth
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p
    }

    /// Projects a camera-space point.
    pub fn project_camera(&self, pc: &Vec3) -> Projection {
        Projection {
            row: (0.5 - pc.y / self.ortho_scale) * self.height as f64,
            col: (pc.x / self.ortho_scale + 0.5) * self.width as f64,
            depth: -pc.z,
        }
    }

    /// Camera-plane (x, y) of a continuous pixel position.
    pub fn plane_position(&self, row: f64, col: f64) -> (f64, f64) {
        (
            (col / self.width as f64 - 0.5) * self.ortho_scale,
            (0.5 - row / self.height as f64) * self.ortho_scale,
        )
    }

    /// Camera-plane (x, y) of the center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        self.plane_position(row as f64 + 0.5, col as f64 + 0.5)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// Same orientation with a different image size.
    pub fn with_size(&self, height: usize, width: usize) -> Self {
        Self { height, width, ..*self }
    }
}

/// Orthographic projection of a world point; out-of-frame positions are
/// returned as-is.
pub fn project_point(p: &Vec3, cam: &CameraPose) -> Projection {
    cam.project_camera(&cam.to_camera(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cam(az: f64, el: f64) -> CameraPose {
        CameraPose::new(az, el, 4, 4, 2.0).unwrap()
    }

    #[test]
    fn origin_maps_to_center() {
        let p = project_point(&Vec3::zeros(), &cam(0.0, 0.0));
        assert_eq!((p.row, p.col, p.depth), (2.0, 2.0, 0.0));
    }

    #[test]
    fn half_unit_is_one_pixel() {
        let p = project_point(&Vec3::new(0.5, 0.0, 0.0), &cam(0.0, 0.0));
        assert_eq!((p.row, p.col), (2.0, 3.0));
        let up = project_point(&Vec3::new(0.0, 0.5, 0.0), &cam(0.0, 0.0));
        assert_eq!((up.row, up.col), (1.0, 2.0));
    }

    #[test]
    fn azimuth_quarter_turn() {
        let a = project_point(&Vec3::new(1.0, 0.0, 0.0), &cam(90.0, 0.0));
        let b = project_point(&Vec3::new(0.0, 0.0, -1.0), &cam(0.0, 0.0));
        assert!((a.row - b.row).abs() < 1e-9);
        assert!((a.col - b.col).abs() < 1e-9);
        assert!((a.depth - b.depth).abs() < 1e-9);
    }

    #[test]
    fn depth_grows_away_from_front_camera() {
        let near = project_point(&Vec3::new(0.0, 0.0, 1.0), &cam(0.0, 0.0));
        let far = project_point(&Vec3::new(0.0, 0.0, -1.0), &cam(0.0, 0.0));
        assert!(near.depth < far.depth);
        // Positive elevation looks down from above.
        let top = project_point(&Vec3::new(0.0, 1.0, 0.0), &cam(0.0, 90.0));
        assert!((top.depth + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pixel_center_inverts_projection() {
        let c = CameraPose::new(30.0, 10.0, 7, 9, 3.0).unwrap();
        let (x, y) = c.pixel_center(2, 5);
        let p = c.project_camera(&Vec3::new(x, y, 0.0));
        assert!((p.row - 2.5).abs() < 1e-12 && (p.col - 5.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_cameras() {
        assert!(CameraPose::new(0.0, 0.0, 0, 4, 1.0).is_err());
        assert!(CameraPose::new(0.0, 0.0, 4, 4, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_affine(
            p in prop::array::uniform3(-50.0f64..50.0),
            q in prop::array::uniform3(-50.0f64..50.0),
            t in 0.0f64..1.0,
            az in -180.0f64..180.0,
            el in -90.0f64..90.0,
        ) {
            let c = CameraPose::new(az, el, 64, 48, 120.0).unwrap();
            let p = Vec3::from(p);
            let q = Vec3::from(q);
            let mid = project_point(&(p * t + q * (1.0 - t)), &c);
            let a = project_point(&p, &c);
            let b = project_point(&q, &c);
            prop_assert!((mid.row - (t * a.row + (1.0 - t) * b.row)).abs() < 1e-9);
            prop_assert!((mid.col - (t * a.col + (1.0 - t) * b.col)).abs() < 1e-9);
            prop_assert!((mid.depth - (t * a.depth + (1.0 - t) * b.depth)).abs() < 1e-9);
        }
    }
}
