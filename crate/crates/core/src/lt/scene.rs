//! Analytic scenes: spheres, rectangles and rectangular area emitters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lt::camera::{Camera, CameraDesc};
use crate::lt::material::{Material, MaterialDesc};
use crate::lt::math::{Rgb, Vec3};

/// Self-intersection offset along rays and shadow rays.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    /// `corner + s·edge_u + t·edge_v`, `s,t ∈ [0,1]`, orthogonal edges.
    Rectangle { corner: Vec3, edge_u: Vec3, edge_v: Vec3 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Material(usize),
    Emitter(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub surface: Surface,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub dir: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub p: Vec3,
    /// Unit geometric normal (outward for spheres, `edge_u × edge_v` for
    /// rectangles).
    pub n: Vec3,
    pub prim: usize,
}

/// One-sided rectangular emitter radiating along `edge_u × edge_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Emitter {
    pub prim: usize,
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub normal: Vec3,
    pub area: f64,
    pub radiance: Rgb,
}

impl Emitter {
    pub fn point(&self, s: f64, t: f64) -> Vec3 {
        self.corner + self.edge_u * s + self.edge_v * t
    }

    /// Rectangle parameters of a point on the emitter.
    pub fn params(&self, p: Vec3) -> (f64, f64) {
        let d = p - self.corner;
        (
            d.dot(self.edge_u) / self.edge_u.length_squared(),
            d.dot(self.edge_v) / self.edge_v.length_squared(),
        )
    }

    /// Emitted radiance towards `dir` (unit, pointing away from the light).
    pub fn le(&self, dir: Vec3) -> Rgb {
        if self.normal.dot(dir) > 0.0 {
            self.radiance
        } else {
            Rgb::BLACK
        }
    }

    pub fn power(&self) -> f64 {
        std::f64::consts::PI * self.area * self.radiance.luminance()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveDesc {
    Sphere {
        center: Vec3,
        radius: f64,
        material: String,
    },
    Rectangle {
        corner: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        material: String,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterDesc {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub radiance: Rgb,
}

/// Scene file contents.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDesc {
    pub camera: CameraDesc,
    pub materials: Vec<MaterialDesc>,
    pub primitives: Vec<PrimitiveDesc>,
    pub emitters: Vec<EmitterDesc>,
}

/// Immutable scene; shareable across threads.
#[derive(Clone, Debug)]
pub struct Scene {
    pub camera: Camera,
    pub materials: Vec<Material>,
    pub primitives: Vec<Primitive>,
    pub emitters: Vec<Emitter>,
    /// Emitter selection CDF, proportional to power.
    light_cdf: Vec<f64>,
}

fn finite(v: Vec3, what: &str) -> Result<Vec3> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Scene(format!("{what} is not finite")))
    }
}

fn rectangle(corner: Vec3, edge_u: Vec3, edge_v: Vec3, what: &str) -> Result<Shape> {
    finite(corner, what)?;
    finite(edge_u, what)?;
    finite(edge_v, what)?;
    let (lu, lv) = (edge_u.length(), edge_v.length());
    if !(lu > 0.0) || !(lv > 0.0) {
        return Err(Error::Scene(format!("{what} has a zero-length edge")));
    }
    if edge_u.dot(edge_v).abs() > 1e-9 * lu * lv {
        return Err(Error::Scene(format!("{what} edges must be orthogonal")));
    }
    Ok(Shape::Rectangle { corner, edge_u, edge_v })
}

impl Scene {
    pub fn from_desc(desc: &SceneDesc) -> Result<Scene> {
        let camera = Camera::new(&desc.camera)?;
        let mut materials = Vec::with_capacity(desc.materials.len());
        let mut ids: Vec<&str> = Vec::new();
        for m in &desc.materials {
            if ids.contains(&m.id.as_str()) {
                return Err(Error::Scene(format!("duplicate material id `{}`", m.id)));
            }
            ids.push(&m.id);
            materials.push(Material::new(m)?);
        }
        let material = |id: &str| {
            ids.iter()
                .position(|m| *m == id)
                .ok_or_else(|| Error::Scene(format!("unknown material id `{id}`")))
        };

        let mut primitives = Vec::new();
        for (i, p) in desc.primitives.iter().enumerate() {
            let what = format!("primitive {i}");
            let (shape, m) = match p {
                PrimitiveDesc::Sphere { center, radius, material: m } => {
                    finite(*center, &what)?;
                    if !(*radius > 0.0) || !radius.is_finite() {
                        return Err(Error::Scene(format!("{what} has radius {radius}")));
                    }
                    (
                        Shape::Sphere {
                            center: *center,
                            radius: *radius,
                        },
                        m,
                    )
                }
                PrimitiveDesc::Rectangle { corner, edge_u, edge_v, material: m } => {
                    (rectangle(*corner, *edge_u, *edge_v, &what)?, m)
                }
            };
            primitives.push(Primitive {
                shape,
                surface: Surface::Material(material(m)?),
            });
        }

        if desc.emitters.is_empty() {
            return Err(Error::Scene("scene needs at least one emitter".into()));
        }
        let mut emitters = Vec::new();
        for (i, e) in desc.emitters.iter().enumerate() {
            let what = format!("emitter {i}");
            let shape = rectangle(e.corner, e.edge_u, e.edge_v, &what)?;
            if e.radiance.0.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(Error::Scene(format!("{what} radiance must be finite and nonnegative")));
            }
            let cross = e.edge_u.cross(e.edge_v);
            emitters.push(Emitter {
                prim: primitives.len(),
                corner: e.corner,
                edge_u: e.edge_u,
                edge_v: e.edge_v,
                normal: cross.normalized(),
                area: cross.length(),
                radiance: e.radiance,
            });
            primitives.push(Primitive {
                shape,
                surface: Surface::Emitter(i),
            });
        }

        for p in &primitives {
            if let Shape::Sphere { center, radius } = p.shape {
                if (camera.position - center).length() <= radius {
                    return Err(Error::Scene("camera is inside a sphere".into()));
                }
            }
        }

        let powers: Vec<f64> = emitters.iter().map(Emitter::power).collect();
        let total: f64 = powers.iter().sum();
        let mut light_cdf = Vec::with_capacity(emitters.len());
        let mut acc = 0.0;
        for (i, p) in powers.iter().enumerate() {
            // all-black scenes fall back to uniform selection
            acc += if total > 0.0 { p / total } else { 1.0 / emitters.len() as f64 };
            light_cdf.push(if i + 1 == emitters.len() { 1.0 } else { acc });
        }

        Ok(Scene {
            camera,
            materials,
            primitives,
            emitters,
            light_cdf,
        })
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let desc: SceneDesc = serde_json::from_str(text)?;
        Scene::from_desc(&desc)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Scene::from_json(&text)
    }

    pub fn surface(&self, prim: usize) -> Surface {
        self.primitives[prim].surface
    }

    pub fn material_of(&self, prim: usize) -> Option<&Material> {
        match self.primitives[prim].surface {
            Surface::Material(m) => Some(&self.materials[m]),
            Surface::Emitter(_) => None,
        }
    }

    pub fn emitter_of(&self, prim: usize) -> Option<&Emitter> {
        match self.primitives[prim].surface {
            Surface::Emitter(e) => Some(&self.emitters[e]),
            Surface::Material(_) => None,
        }
    }

    /// Selection probability of emitter `l`.
    pub fn light_probability(&self, l: usize) -> f64 {
        let (a, b) = self.light_interval(l);
        b - a
    }

    /// CDF interval of emitter `l` on the light-selection dimension.
    pub fn light_interval(&self, l: usize) -> (f64, f64) {
        let lo = if l == 0 { 0.0 } else { self.light_cdf[l - 1] };
        (lo, self.light_cdf[l])
    }

    pub fn select_light(&self, u: f64) -> usize {
        self.light_cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.emitters.len() - 1)
    }

    /// Area density of sampling `p` on emitter `l` (selection included).
    pub fn light_area_pdf(&self, l: usize) -> f64 {
        self.light_probability(l) / self.emitters[l].area
    }

    pub fn max_radiance(&self) -> f64 {
        self.emitters
            .iter()
            .map(|e| e.radiance.max_component())
            .fold(0.0, f64::max)
    }

    /// Nearest intersection with `t > RAY_EPSILON`.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_within(ray, f64::INFINITY)
    }

    fn intersect_within(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some(h) = intersect_shape(&p.shape, ray, i, limit) {
                limit = h.t;
                best = Some(h);
            }
        }
        best
    }

    /// True when the open segment between `a` and `b` is unobstructed.
    pub fn visible(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let dist = d.length();
        // same acceptance as a traced hit; no blocker fits in a shorter gap
        if !(dist > RAY_EPSILON) {
            return false;
        }
        if dist <= 2.0 * RAY_EPSILON {
            return true;
        }
        let ray = Ray {
            origin: a,
            dir: d / dist,
        };
        self.intersect_within(&ray, dist - RAY_EPSILON).is_none()
    }
}

/// Hit with `RAY_EPSILON < t < t_max`.
pub fn intersect_shape(shape: &Shape, ray: &Ray, prim: usize, t_max: f64) -> Option<Hit> {
    match *shape {
        Shape::Sphere { center, radius } => {
            let oc = ray.origin - center;
            let b = oc.dot(ray.dir);
            let c = oc.length_squared() - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t0 = -b - sq;
            let t1 = -b + sq;
            let t = if t0 > RAY_EPSILON { t0 } else if t1 > RAY_EPSILON { t1 } else { return None };
            if t >= t_max {
                return None;
            }
            let p = ray.origin + ray.dir * t;
            Some(Hit {
                t,
                p,
                n: (p - center) / radius,
                prim,
            })
        }
        Shape::Rectangle { corner, edge_u, edge_v } => {
            let n = edge_u.cross(edge_v);
            let denom = ray.dir.dot(n);
            if denom.abs() < 1e-12 * n.length() {
                return None;
            }
            let t = (corner - ray.origin).dot(n) / denom;
            if !(t > RAY_EPSILON) || t >= t_max {
                return None;
            }
            let p = ray.origin + ray.dir * t;
            let d = p - corner;
            let s = d.dot(edge_u) / edge_u.length_squared();
            let r = d.dot(edge_v) / edge_v.length_squared();
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&r) {
                return None;
            }
            Some(Hit {
                t,
                p,
                n: n.normalized(),
                prim,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SampleStream;

    pub(crate) fn sphere_scene() -> Scene {
        Scene::from_json(
            r#"{
            "camera": {"position": [0, 0, -3], "look_at": [0, 0, 0], "up": [0, 1, 0], "fov_degrees": 40, "resolution": [4, 4]},
            "materials": [{"id": "w", "kind": "lambert", "albedo": [0.5, 0.5, 0.5]}],
            "primitives": [
                {"type": "sphere", "center": [0, 0, 0], "radius": 1, "material": "w"},
                {"type": "sphere", "center": [1.5, 0.3, 0.5], "radius": 0.4, "material": "w"},
                {"type": "rectangle", "corner": [-2, -1, -2], "edge_u": [4, 0, 0], "edge_v": [0, 0, 4], "material": "w"}
            ],
            "emitters": [{"corner": [-0.5, 2, -0.5], "edge_u": [1, 0, 0], "edge_v": [0, 0, 1], "radiance": [1, 1, 1]}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn unit_sphere_hit() {
        let scene = sphere_scene();
        let h = scene
            .intersect(&Ray {
                origin: Vec3::new(0.0, 0.0, -2.0),
                dir: Vec3::new(0.0, 0.0, 1.0),
            })
            .unwrap();
        assert!((h.t - 1.0).abs() < 1e-12);
        assert!(h.p.max_abs_diff(Vec3::new(0.0, 0.0, -1.0)) < 1e-12);
        assert!(h.n.max_abs_diff(Vec3::new(0.0, 0.0, -1.0)) < 1e-12);
    }

    #[test]
    fn parallel_ray_misses_rectangle() {
        let shape = Shape::Rectangle {
            corner: Vec3::new(-1.0, 0.0, -1.0),
            edge_u: Vec3::new(2.0, 0.0, 0.0),
            edge_v: Vec3::new(0.0, 0.0, 2.0),
        };
        let ray = Ray {
            origin: Vec3::new(0.0, 0.0, -3.0),
            dir: Vec3::new(0.0, 0.0, 1.0),
        };
        assert!(intersect_shape(&shape, &ray, 0, f64::INFINITY).is_none());
    }

    #[test]
    fn nearest_hit_matches_brute_force() {
        let scene = sphere_scene();
        let mut rng = SampleStream::new(17);
        for _ in 0..10_000 {
            let origin = Vec3::new(rng.uniform() * 6.0 - 3.0, rng.uniform() * 6.0 - 3.0, rng.uniform() * 6.0 - 3.0);
            let dir = Vec3::new(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
            let ray = Ray { origin, dir };
            let fast = scene.intersect(&ray);
            let mut all: Vec<Hit> = scene
                .primitives
                .iter()
                .enumerate()
                .filter_map(|(i, p)| intersect_shape(&p.shape, &ray, i, f64::INFINITY))
                .collect();
            all.sort_by(|a, b| a.t.total_cmp(&b.t));
            assert_eq!(fast.map(|h| h.prim), all.first().map(|h| h.prim));
            if let (Some(a), Some(b)) = (fast, all.first()) {
                assert_eq!(a.t, b.t);
            }
        }
    }

    #[test]
    fn validation_errors() {
        let base = |prims: &str, emitters: &str| {
            format!(
                r#"{{"camera": {{"position": [0, 0, -3], "look_at": [0, 0, 0], "up": [0, 1, 0], "fov_degrees": 40, "resolution": [4, 4]}},
                "materials": [{{"id": "w", "kind": "lambert", "albedo": [0.5, 0.5, 0.5]}}],
                "primitives": [{prims}], "emitters": [{emitters}]}}"#
            )
        };
        let light = r#"{"corner": [0, 2, 0], "edge_u": [1, 0, 0], "edge_v": [0, 0, 1], "radiance": [1, 1, 1]}"#;
        assert!(Scene::from_json(&base("", light)).is_ok());
        assert!(Scene::from_json(&base("", "")).is_err());
        let inside = r#"{"type": "sphere", "center": [0, 0, -3], "radius": 1, "material": "w"}"#;
        assert!(Scene::from_json(&base(inside, light)).is_err());
        let unknown = r#"{"type": "sphere", "center": [0, 0, 0], "radius": 1, "material": "x"}"#;
        assert!(Scene::from_json(&base(unknown, light)).is_err());
        let skew = r#"{"type": "rectangle", "corner": [0, 0, 0], "edge_u": [1, 0, 0], "edge_v": [1, 1, 0], "material": "w"}"#;
        assert!(Scene::from_json(&base(skew, light)).is_err());
        assert!(Scene::from_json("{not json").is_err());
    }

    #[test]
    fn light_selection_follows_power() {
        let scene = sphere_scene();
        assert_eq!(scene.light_interval(0), (0.0, 1.0));
        assert_eq!(scene.select_light(0.7), 0);
        assert!((scene.light_area_pdf(0) - 1.0).abs() < 1e-12);
    }
}
