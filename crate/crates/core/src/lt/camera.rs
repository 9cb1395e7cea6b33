//! Pinhole camera with a virtual film at unit distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lt::math::Vec3;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDesc {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view.
    pub fov_degrees: f64,
    /// `[width, height]` in pixels.
    pub resolution: [usize; 2],
}

/// Film coordinates `(fx, fy) ∈ [0,1)²` run left to right and top to bottom.
#[derive(Clone, Debug)]
pub struct Camera {
    pub position: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub width: usize,
    pub height: usize,
    half_h: f64,
    half_w: f64,
    /// Film area at unit distance.
    film_area: f64,
}

impl Camera {
    pub fn new(desc: &CameraDesc) -> Result<Camera> {
        let [width, height] = desc.resolution;
        if width == 0 || height == 0 {
            return Err(Error::Scene("camera resolution must be positive".into()));
        }
        if !(desc.fov_degrees > 0.0 && desc.fov_degrees < 180.0) {
            return Err(Error::Scene(format!("field of view {} out of (0, 180)", desc.fov_degrees)));
        }
        if !desc.position.is_finite() || !desc.look_at.is_finite() || !desc.up.is_finite() {
            return Err(Error::Scene("camera vectors must be finite".into()));
        }
        let forward = desc.look_at - desc.position;
        if !(forward.length() > 0.0) {
            return Err(Error::Scene("camera looks at its own position".into()));
        }
        let forward = forward.normalized();
        let right = forward.cross(desc.up);
        if !(right.length() > 1e-9) {
            return Err(Error::Scene("camera up vector is parallel to the view direction".into()));
        }
        let right = right.normalized();
        let up = right.cross(forward);
        let half_h = (desc.fov_degrees.to_radians() / 2.0).tan();
        let half_w = half_h * width as f64 / height as f64;
        Ok(Camera {
            position: desc.position,
            forward,
            right,
            up,
            width,
            height,
            half_h,
            half_w,
            film_area: 4.0 * half_w * half_h,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn film_area(&self) -> f64 {
        self.film_area
    }

    /// Unit direction through film point `(fx, fy)`.
    pub fn direction(&self, fx: f64, fy: f64) -> Vec3 {
        let x = (2.0 * fx - 1.0) * self.half_w;
        let y = (1.0 - 2.0 * fy) * self.half_h;
        (self.forward + self.right * x + self.up * y).normalized()
    }

    /// Film point seen along `dir` (any length), if it lies on the film.
    pub fn project(&self, dir: Vec3) -> Option<(f64, f64)> {
        let c = dir.dot(self.forward);
        if !(c > 0.0) {
            return None;
        }
        let x = dir.dot(self.right) / c;
        let y = dir.dot(self.up) / c;
        let fx = 0.5 * (x / self.half_w + 1.0);
        let fy = 0.5 * (1.0 - y / self.half_h);
        if (0.0..1.0).contains(&fx) && (0.0..1.0).contains(&fy) {
            Some((fx, fy))
        } else {
            None
        }
    }

    pub fn pixel(&self, fx: f64, fy: f64) -> usize {
        let px = ((fx * self.width as f64) as usize).min(self.width - 1);
        let py = ((fy * self.height as f64) as usize).min(self.height - 1);
        py * self.width + px
    }

    /// Solid-angle density of uniform film sampling towards unit `dir`.
    pub fn direction_pdf(&self, dir: Vec3) -> f64 {
        match self.project(dir) {
            Some(_) => {
                let c = dir.dot(self.forward);
                1.0 / (self.film_area * c * c * c)
            }
            None => 0.0,
        }
    }

    /// Importance towards unit `dir`, normalized so that each pixel
    /// integrates to one over the image.
    pub fn importance(&self, dir: Vec3) -> f64 {
        match self.project(dir) {
            Some(_) => {
                let c = dir.dot(self.forward);
                self.pixel_count() as f64 / (self.film_area * c * c * c * c)
            }
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera() -> Camera {
        Camera::new(&CameraDesc {
            position: Vec3::new(0.0, 0.0, 0.0),
            look_at: Vec3::new(0.0, 0.0, 1.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            fov_degrees: 60.0,
            resolution: [8, 4],
        })
        .unwrap()
    }

    #[test]
    fn direction_projection_round_trip() {
        let cam = camera();
        for &(fx, fy) in &[(0.5, 0.5), (0.01, 0.99), (0.7, 0.2)] {
            let (gx, gy) = cam.project(cam.direction(fx, fy)).unwrap();
            assert!((gx - fx).abs() < 1e-12 && (gy - fy).abs() < 1e-12);
        }
        assert!(cam.project(-cam.forward).is_none());
        assert_eq!(cam.pixel(0.0, 0.0), 0);
        assert_eq!(cam.pixel(0.999, 0.999), 31);
    }

    #[test]
    fn top_of_film_looks_up() {
        let cam = camera();
        assert!(cam.direction(0.5, 0.0).dot(cam.up) > 0.0);
    }

    #[test]
    fn direction_pdf_integrates_to_one() {
        // midpoint rule over the film: dω = cos³θ dA
        let cam = camera();
        let n = 400;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (fx, fy) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                let d = cam.direction(fx, fy);
                let c = d.dot(cam.forward);
                sum += cam.direction_pdf(d) * c * c * c * cam.film_area() / (n * n) as f64;
            }
        }
        assert!((sum - 1.0).abs() < 1e-9, "{sum}");
    }

    #[test]
    fn rejects_degenerate_cameras() {
        let mut desc = CameraDesc {
            position: Vec3::ZERO,
            look_at: Vec3::new(0.0, 1.0, 0.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            fov_degrees: 40.0,
            resolution: [4, 4],
        };
        assert!(Camera::new(&desc).is_err());
        desc.up = Vec3::new(0.0, 0.0, 1.0);
        assert!(Camera::new(&desc).is_ok());
        desc.resolution = [0, 4];
        assert!(Camera::new(&desc).is_err());
    }
}
