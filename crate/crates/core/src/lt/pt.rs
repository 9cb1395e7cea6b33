//! Unidirectional reference path tracer with next-event estimation.
//!
//! Emitter hits by BSDF sampling and explicit light samples are combined
//! with the balance heuristic. Paths have at most `k_max` vertices after
//! the camera, the same length range as the Metropolis renderers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lt::image::Image;
use crate::lt::material::Material;
use crate::lt::math::{Rgb, Vec3};
use crate::lt::scene::{Hit, Ray, Scene, Surface};
use crate::rng::SampleStream;

/// Solid-angle density of next-event sampling `hit` on emitter `l` from `from`.
fn light_solid_angle_pdf(scene: &Scene, l: usize, from: Vec3, hit: &Hit) -> f64 {
    let e = &scene.emitters[l];
    let d = hit.p - from;
    let d2 = d.length_squared();
    let cos = e.normal.dot(-d / d2.sqrt());
    if cos <= 0.0 {
        return 0.0;
    }
    scene.light_area_pdf(l) * d2 / cos
}

fn next_event(scene: &Scene, mat: &Material, hit: &Hit, wo: Vec3, rng: &mut SampleStream) -> Rgb {
    let l = scene.select_light(rng.uniform());
    let e = &scene.emitters[l];
    let y = e.point(rng.uniform(), rng.uniform());
    let d = y - hit.p;
    let d2 = d.length_squared();
    let wi = d / d2.sqrt();
    let cos_e = e.normal.dot(-wi);
    if cos_e <= 0.0 {
        return Rgb::BLACK;
    }
    let f = mat.eval(hit.n, wo, wi);
    if f.is_black() || !scene.visible(hit.p, y) {
        return Rgb::BLACK;
    }
    let p_area = scene.light_area_pdf(l);
    let p_light = p_area * d2 / cos_e;
    let p_bsdf = mat.pdf(hit.n, wo, wi);
    let weight = p_light / (p_light + p_bsdf);
    f * e.radiance * (hit.n.dot(wi).abs() * cos_e / d2 / p_area * weight)
}

/// Radiance estimate along a camera ray.
pub fn radiance(scene: &Scene, ray: Ray, k_max: usize, rng: &mut SampleStream) -> Rgb {
    let mut l = Rgb::BLACK;
    let mut throughput = Rgb::splat(1.0);
    let mut ray = ray;
    // solid-angle density of the direction that produced `ray`; None for
    // the camera ray
    let mut bsdf_pdf: Option<f64> = None;
    for depth in 1..=k_max {
        let Some(hit) = scene.intersect(&ray) else { break };
        let wo = -ray.dir;
        match scene.surface(hit.prim) {
            Surface::Emitter(e) => {
                let le = scene.emitters[e].le(wo);
                let w = match bsdf_pdf {
                    None => 1.0,
                    Some(pb) => {
                        let pl = light_solid_angle_pdf(scene, e, ray.origin, &hit);
                        pb / (pb + pl)
                    }
                };
                l += throughput * le * w;
                break;
            }
            Surface::Material(m) => {
                let mat = &scene.materials[m];
                if depth < k_max {
                    l += throughput * next_event(scene, mat, &hit, wo, rng);
                }
                if depth + 1 > k_max {
                    break;
                }
                let u = [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()];
                let Some(s) = mat.sample(hit.n, wo, &u) else { break };
                let pdf = mat.pdf(hit.n, wo, s.wi);
                let f = mat.eval(hit.n, wo, s.wi);
                if !(pdf > 0.0) || f.is_black() {
                    break;
                }
                throughput = throughput * f * (hit.n.dot(s.wi).abs() / pdf);
                bsdf_pdf = Some(pdf);
                ray = Ray { origin: hit.p, dir: s.wi };
            }
        }
    }
    l
}

/// Mean radiance per pixel over `spp` jittered samples. Row `y` draws from
/// stream `pt-row-y`, so the image does not depend on the thread count.
pub fn path_trace_reference(scene: &Scene, spp: usize, seed: u64, k_max: usize) -> Result<Image> {
    if spp == 0 {
        return Err(Error::InvalidArgument("spp must be at least 1".into()));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let cam = &scene.camera;
    let (w, h) = (cam.width, cam.height);
    let rows: Vec<Vec<Rgb>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rng = SampleStream::named(seed, &format!("pt-row-{y}"));
            (0..w)
                .map(|x| {
                    let mut sum = Rgb::BLACK;
                    for _ in 0..spp {
                        let fx = (x as f64 + rng.uniform()) / w as f64;
                        let fy = (y as f64 + rng.uniform()) / h as f64;
                        let ray = Ray {
                            origin: cam.position,
                            dir: cam.direction(fx, fy),
                        };
                        sum += radiance(scene, ray, k_max, &mut rng);
                    }
                    sum * (1.0 / spp as f64)
                })
                .collect()
        })
        .collect();
    Ok(Image {
        width: w,
        height: h,
        pixels: rows.into_iter().flatten().collect(),
    })
}
