//! Light paths, their measurement contribution and per-technique densities.

use std::f64::consts::PI;

use crate::lt::math::{Rgb, Vec3};
use crate::lt::scene::{Scene, Surface};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub p: Vec3,
    /// Unit geometric normal.
    pub n: Vec3,
    pub prim: usize,
}

/// Vertices `x_1…x_k` of a path that starts at the camera `x_0` and ends on
/// an emitter `x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LightPath {
    pub vertices: Vec<Vertex>,
    /// Film coordinates of `x_1`.
    pub film: (f64, f64),
    pub pixel: usize,
    pub contribution: Rgb,
}

impl LightPath {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Returns `(unit direction a→b, distance²)`.
fn segment(a: Vec3, b: Vec3) -> (Vec3, f64) {
    let d = b - a;
    let d2 = d.length_squared();
    (d / d2.sqrt(), d2)
}

/// `|cos|` at `b` over the squared distance: the solid angle to area
/// conversion for a direction sampled at `a`.
fn to_area(a: Vec3, b: &Vertex) -> f64 {
    let (w, d2) = segment(a, b.p);
    b.n.dot(w).abs() / d2
}

fn position(scene: &Scene, vertices: &[Vertex], m: usize) -> Vec3 {
    if m == 0 {
        scene.camera.position
    } else {
        vertices[m - 1].p
    }
}

/// `f(x̄)` assuming all segments are unoccluded.
pub fn unoccluded_contribution(scene: &Scene, vertices: &[Vertex]) -> Rgb {
    let k = vertices.len();
    if k == 0 {
        return Rgb::BLACK;
    }
    let cam = &scene.camera;
    let (w0, d2) = segment(cam.position, vertices[0].p);
    let we = cam.importance(w0);
    if we == 0.0 {
        return Rgb::BLACK;
    }
    let mut scalar = we * w0.dot(cam.forward) * vertices[0].n.dot(w0).abs() / d2;
    let mut color = Rgb::splat(1.0);
    for m in 1..k {
        let x = &vertices[m - 1];
        let Some(mat) = scene.material_of(x.prim) else {
            return Rgb::BLACK;
        };
        let prev = position(scene, vertices, m - 1);
        let next = &vertices[m];
        let wo = (prev - x.p).normalized();
        let (wi, d2) = segment(x.p, next.p);
        let fs = mat.eval(x.n, wo, wi);
        if fs.is_black() {
            return Rgb::BLACK;
        }
        color = color * fs;
        scalar *= x.n.dot(wi).abs() * next.n.dot(wi).abs() / d2;
    }
    let last = &vertices[k - 1];
    let Some(emitter) = scene.emitter_of(last.prim) else {
        return Rgb::BLACK;
    };
    let prev = position(scene, vertices, k - 1);
    let le = emitter.le((prev - last.p).normalized());
    color * le * scalar
}

/// True when every segment, including the camera segment, is unoccluded.
pub fn path_visible(scene: &Scene, vertices: &[Vertex]) -> bool {
    (0..vertices.len()).all(|m| scene.visible(position(scene, vertices, m), vertices[m].p))
}

/// `f(x̄)` including visibility.
pub fn path_contribution(scene: &Scene, vertices: &[Vertex]) -> Rgb {
    if !path_visible(scene, vertices) {
        return Rgb::BLACK;
    }
    unoccluded_contribution(scene, vertices)
}

/// Area densities of sampling each vertex from the eye side (`pe[m]`,
/// `m = 1..k`) and from the light side (`pl[m]`, `m = 0..k`; `pl[0] = 0`
/// for a pinhole camera).
pub fn vertex_pdfs(scene: &Scene, vertices: &[Vertex]) -> (Vec<f64>, Vec<f64>) {
    let k = vertices.len();
    let mut pe = vec![0.0; k + 1];
    let mut pl = vec![0.0; k + 1];
    if k == 0 {
        return (pe, pl);
    }
    let cam = &scene.camera;
    let (w0, _) = segment(cam.position, vertices[0].p);
    pe[1] = cam.direction_pdf(w0) * to_area(cam.position, &vertices[0]);
    for m in 1..k {
        let x = &vertices[m - 1];
        if let Some(mat) = scene.material_of(x.prim) {
            let wo = (position(scene, vertices, m - 1) - x.p).normalized();
            let wi = (vertices[m].p - x.p).normalized();
            pe[m + 1] = mat.pdf(x.n, wo, wi) * to_area(x.p, &vertices[m]);
        }
    }

    let last = &vertices[k - 1];
    if let Surface::Emitter(l) = scene.surface(last.prim) {
        pl[k] = scene.light_area_pdf(l);
        if k >= 2 {
            let y1 = &vertices[k - 2];
            let c = scene.emitters[l].normal.dot((y1.p - last.p).normalized());
            if c > 0.0 {
                pl[k - 1] = c / PI * to_area(last.p, y1);
            }
        }
    }
    // light-side scattering at x_{m+1} towards x_m
    for m in (1..k.saturating_sub(1)).rev() {
        let x = &vertices[m];
        if let Some(mat) = scene.material_of(x.prim) {
            let wo = (vertices[m + 1].p - x.p).normalized();
            let wi = (vertices[m - 1].p - x.p).normalized();
            pl[m] = mat.pdf(x.n, wo, wi) * to_area(x.p, &vertices[m - 1]);
        }
    }
    (pe, pl)
}

/// `p_i` for `i = 0..=k+1` light-subpath vertices, without visibility.
pub fn technique_pdfs_unoccluded(scene: &Scene, vertices: &[Vertex]) -> Vec<f64> {
    let k = vertices.len();
    let (pe, pl) = vertex_pdfs(scene, vertices);
    (0..=k + 1)
        .map(|i| {
            if i > k {
                return 0.0;
            }
            let eye: f64 = pe[1..=k - i].iter().product();
            let light: f64 = pl[k - i + 1..=k].iter().product();
            eye * light
        })
        .collect()
}

/// `p_i` for every technique; all zero when any segment is occluded.
pub fn technique_pdfs(scene: &Scene, vertices: &[Vertex]) -> Vec<f64> {
    if !path_visible(scene, vertices) {
        return vec![0.0; vertices.len() + 2];
    }
    technique_pdfs_unoccluded(scene, vertices)
}

pub fn technique_pdf(scene: &Scene, vertices: &[Vertex], i: usize) -> f64 {
    technique_pdfs(scene, vertices).get(i).copied().unwrap_or(0.0)
}

/// Balance-heuristic weights `p_i / Σ_s p_s`; all zero when no technique
/// can produce the path.
pub fn balance_weights(pdfs: &[f64]) -> Vec<f64> {
    let total: f64 = pdfs.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return vec![0.0; pdfs.len()];
    }
    pdfs.iter().map(|p| p / total).collect()
}

pub fn mis_weight(scene: &Scene, vertices: &[Vertex], i: usize) -> f64 {
    balance_weights(&technique_pdfs(scene, vertices))
        .get(i)
        .copied()
        .unwrap_or(0.0)
}
