//! Two-sided reflection models and their invertible direction samplers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invmap::{
    mixture_forward, mixture_inverse_with, mixture_selection_distribution, InvertibleBlock, MixtureSpec,
};
use crate::lt::math::{Frame, Rgb, Vec3};
use crate::pss::clamp_unit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Lambert,
    LambertPhongMixture,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDesc {
    pub id: String,
    pub kind: MaterialKind,
    pub albedo: Rgb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_albedo: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Probability of sampling the diffuse lobe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_diffuse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Material {
    Lambert {
        albedo: Rgb,
    },
    /// `ρd/π + ρs·(n+2)/(2π)·cosⁿα`, sampled as a two-component mixture of
    /// cosine and Phong lobes with weights `[α_d, 1−α_d]`.
    LambertPhong {
        albedo: Rgb,
        spec_albedo: Rgb,
        exponent: f64,
        mixture: MixtureSpec,
    },
}

fn check_albedo(c: Rgb, what: &str) -> Result<()> {
    if c.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Scene(format!("{what} must lie in [0,1] per channel")));
    }
    Ok(())
}

impl Material {
    pub fn new(desc: &MaterialDesc) -> Result<Material> {
        let what = format!("material `{}`", desc.id);
        check_albedo(desc.albedo, &what)?;
        match desc.kind {
            MaterialKind::Lambert => Ok(Material::Lambert { albedo: desc.albedo }),
            MaterialKind::LambertPhongMixture => {
                let missing = |f: &str| Error::Scene(format!("{what} needs `{f}`"));
                let spec_albedo = desc.spec_albedo.ok_or_else(|| missing("spec_albedo"))?;
                let exponent = desc.exponent.ok_or_else(|| missing("exponent"))?;
                let alpha = desc.alpha_diffuse.ok_or_else(|| missing("alpha_diffuse"))?;
                check_albedo(spec_albedo, &what)?;
                if (desc.albedo + spec_albedo).0.iter().any(|v| *v > 1.0) {
                    return Err(Error::Scene(format!("{what} reflects more energy than it receives")));
                }
                if !(exponent >= 0.0) || !exponent.is_finite() {
                    return Err(Error::Scene(format!("{what} has exponent {exponent}")));
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Scene(format!("{what} needs 0 < alpha_diffuse < 1")));
                }
                Ok(Material::LambertPhong {
                    albedo: desc.albedo,
                    spec_albedo,
                    exponent,
                    mixture: MixtureSpec::new(vec![alpha, 1.0 - alpha], 0)?,
                })
            }
        }
    }

    /// BSDF value for unit `wo`, `wi` around geometric normal `n`; zero when
    /// they lie on opposite sides.
    pub fn eval(&self, n: Vec3, wo: Vec3, wi: Vec3) -> Rgb {
        let (co, ci) = (n.dot(wo), n.dot(wi));
        if !(co * ci > 0.0) {
            return Rgb::BLACK;
        }
        match self {
            Material::Lambert { albedo } => *albedo * (1.0 / PI),
            Material::LambertPhong {
                albedo,
                spec_albedo,
                exponent,
                ..
            } => {
                let ns = if co > 0.0 { n } else { -n };
                let c = reflect(wo, ns).dot(wi);
                let lobe = if c > 0.0 {
                    (exponent + 2.0) / (2.0 * PI) * c.powf(*exponent)
                } else {
                    0.0
                };
                *albedo * (1.0 / PI) + *spec_albedo * lobe
            }
        }
    }

    /// Direction blocks used to sample `wi` given `wo`; one per mixture
    /// component.
    pub fn blocks(&self, n: Vec3, wo: Vec3) -> Option<Blocks> {
        let co = n.dot(wo);
        if co == 0.0 {
            return None;
        }
        let ns = if co > 0.0 { n } else { -n };
        let cosine = DirBlock::Cosine {
            frame: Frame::from_normal(ns),
        };
        Some(match self {
            Material::Lambert { .. } => Blocks::Single(cosine),
            Material::LambertPhong { exponent, .. } => Blocks::Mixture([
                cosine,
                DirBlock::Phong {
                    frame: Frame::from_normal(reflect(wo, ns)),
                    normal: ns,
                    exponent: *exponent,
                },
            ]),
        })
    }

    pub fn mixture(&self) -> Option<&MixtureSpec> {
        match self {
            Material::Lambert { .. } => None,
            Material::LambertPhong { mixture, .. } => Some(mixture),
        }
    }

    /// Solid-angle density of sampling `wi` given `wo`.
    pub fn pdf(&self, n: Vec3, wo: Vec3, wi: Vec3) -> f64 {
        if !(n.dot(wo) * n.dot(wi) > 0.0) {
            return 0.0;
        }
        match self.blocks(n, wo) {
            None => 0.0,
            Some(Blocks::Single(b)) => b.pdf(&wi),
            Some(Blocks::Mixture(bs)) => {
                let spec = self.mixture().expect("mixture material");
                spec.weights().iter().zip(&bs).map(|(a, b)| a * b.pdf(&wi)).sum()
            }
        }
    }

    /// Samples `wi` from the slot uniforms `[lobe, d1, d2, spare]`.
    pub fn sample(&self, n: Vec3, wo: Vec3, u: &[f64]) -> Option<ScatterSample> {
        match self.blocks(n, wo)? {
            Blocks::Single(b) => {
                let (wi, p) = b.sample(&u[1..3])?;
                Some(ScatterSample {
                    wi,
                    jac_inv_det: p,
                    selection_prob: 1.0,
                    component: 0,
                })
            }
            Blocks::Mixture(bs) => {
                let spec = self.mixture().expect("mixture material");
                let m = mixture_forward(spec, &bs, &u[0..3])?;
                let total: f64 = spec.weights().iter().zip(&bs).map(|(a, b)| a * b.pdf(&m.result.sample)).sum();
                Some(ScatterSample {
                    wi: m.result.sample,
                    jac_inv_det: m.result.jac_inv_det,
                    selection_prob: m.result.jac_inv_det / total,
                    component: m.t,
                })
            }
        }
    }

    /// Component choice probabilities `T(t)` for inverting `wi`.
    pub fn selection(&self, n: Vec3, wo: Vec3, wi: Vec3) -> Result<Vec<f64>> {
        match self.blocks(n, wo) {
            None => Err(Error::NonInvertible("grazing outgoing direction".into())),
            Some(Blocks::Single(b)) => {
                if b.pdf(&wi) > 0.0 {
                    Ok(vec![1.0])
                } else {
                    Err(Error::NonInvertible("direction outside the sampled hemisphere".into()))
                }
            }
            Some(Blocks::Mixture(bs)) => {
                mixture_selection_distribution(self.mixture().expect("mixture material"), &bs, &wi)
            }
        }
    }

    /// Slot uniforms reproducing `wi` with component `t`; `gammas` place the
    /// ambiguous lobe and spare dimensions inside their intervals.
    pub fn invert(&self, n: Vec3, wo: Vec3, wi: Vec3, t: usize, gammas: [f64; 2]) -> Result<ScatterInverse> {
        let blocks = self
            .blocks(n, wo)
            .ok_or_else(|| Error::NonInvertible("grazing outgoing direction".into()))?;
        let mut u = [0.0; 4];
        u[3] = clamp_unit(gammas[1]);
        match blocks {
            Blocks::Single(b) => {
                u[0] = clamp_unit(gammas[0]);
                let p = b.invert(&wi, &mut u[1..3])?;
                Ok(ScatterInverse {
                    u,
                    jac_inv_det: p,
                    selection_prob: 1.0,
                })
            }
            Blocks::Mixture(bs) => {
                let spec = self.mixture().expect("mixture material");
                let inv = mixture_inverse_with(spec, &bs, &wi, t, gammas[0])?;
                u[..3].copy_from_slice(&inv.u);
                Ok(ScatterInverse {
                    u,
                    jac_inv_det: inv.jac_inv_det,
                    selection_prob: inv.selection_prob,
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterSample {
    pub wi: Vec3,
    /// Solid-angle `|J g⁻¹|` of this component (`α_t·p_t` for mixtures).
    pub jac_inv_det: f64,
    /// `T(t)` of the chosen component.
    pub selection_prob: f64,
    pub component: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterInverse {
    pub u: [f64; 4],
    pub jac_inv_det: f64,
    pub selection_prob: f64,
}

pub enum Blocks {
    Single(DirBlock),
    Mixture([DirBlock; 2]),
}

/// Mirror of `w` about unit `n`.
pub fn reflect(w: Vec3, n: Vec3) -> Vec3 {
    n * (2.0 * n.dot(w)) - w
}

fn azimuth(local: Vec3) -> f64 {
    let mut phi = local.y.atan2(local.x) / (2.0 * PI);
    if phi < 0.0 {
        phi += 1.0;
    }
    clamp_unit(phi)
}

/// Direction sampler on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DirBlock {
    /// Cosine-weighted hemisphere: `r = √u1`, `φ = 2πu2`.
    Cosine { frame: Frame },
    /// Phong lobe around `frame.n`: `cos α = u1^{1/(n+1)}`, `φ = 2πu2`;
    /// directions below `normal` are outside the support.
    Phong { frame: Frame, normal: Vec3, exponent: f64 },
}

impl InvertibleBlock for DirBlock {
    type Sample = Vec3;

    fn dims(&self) -> usize {
        2
    }

    fn sample(&self, u: &[f64]) -> Option<(Vec3, f64)> {
        let phi = 2.0 * PI * u[1];
        let (sin_phi, cos_phi) = phi.sin_cos();
        match self {
            DirBlock::Cosine { frame } => {
                let r = u[0].sqrt();
                let z = (1.0 - u[0]).max(0.0).sqrt();
                if !(z > 0.0) {
                    return None;
                }
                let d = frame.to_world(Vec3::new(r * cos_phi, r * sin_phi, z));
                Some((d, z / PI))
            }
            DirBlock::Phong { frame, normal, exponent } => {
                let c = u[0].powf(1.0 / (exponent + 1.0));
                let s = (1.0 - c * c).max(0.0).sqrt();
                let d = frame.to_world(Vec3::new(s * cos_phi, s * sin_phi, c));
                if !(d.dot(*normal) > 0.0) || !(c > 0.0) {
                    return None;
                }
                Some((d, (exponent + 1.0) / (2.0 * PI) * c.powf(*exponent)))
            }
        }
    }

    fn invert(&self, d: &Vec3, out: &mut [f64]) -> Result<f64> {
        let p = self.pdf(d);
        if !(p > 0.0) {
            return Err(Error::NonInvertible("direction outside the lobe support".into()));
        }
        match self {
            DirBlock::Cosine { frame } => {
                let l = frame.to_local(*d);
                out[0] = clamp_unit(l.x * l.x + l.y * l.y);
                out[1] = azimuth(l);
            }
            DirBlock::Phong { frame, exponent, .. } => {
                let l = frame.to_local(*d);
                out[0] = clamp_unit(l.z.powf(exponent + 1.0));
                out[1] = azimuth(l);
            }
        }
        Ok(p)
    }

    fn pdf(&self, d: &Vec3) -> f64 {
        match self {
            DirBlock::Cosine { frame } => {
                let z = d.dot(frame.n);
                if z > 0.0 {
                    z / PI
                } else {
                    0.0
                }
            }
            DirBlock::Phong { frame, normal, exponent } => {
                let c = d.dot(frame.n);
                if c > 0.0 && d.dot(*normal) > 0.0 {
                    (exponent + 1.0) / (2.0 * PI) * c.powf(*exponent)
                } else {
                    0.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SampleStream;

    fn glossy() -> Material {
        Material::new(&MaterialDesc {
            id: "g".into(),
            kind: MaterialKind::LambertPhongMixture,
            albedo: Rgb::splat(0.3),
            spec_albedo: Some(Rgb::splat(0.6)),
            exponent: Some(20.0),
            alpha_diffuse: Some(0.4),
        })
        .unwrap()
    }

    fn lambert() -> Material {
        Material::Lambert {
            albedo: Rgb([0.8, 0.5, 0.2]),
        }
    }

    #[test]
    fn lambert_value_and_sides() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let wo = Vec3::new(0.0, 0.6, 0.8);
        let f = lambert().eval(n, wo, Vec3::new(0.6, 0.0, 0.8));
        assert!((f[0] - 0.8 / PI).abs() < 1e-15);
        assert!(lambert().eval(n, wo, Vec3::new(0.6, 0.0, -0.8)).is_black());
        // two-sided: the back side reflects as well
        assert!(!lambert().eval(n, -wo, Vec3::new(0.6, 0.0, -0.8)).is_black());
    }

    #[test]
    fn mixture_weights_are_validated() {
        let mut desc = MaterialDesc {
            id: "g".into(),
            kind: MaterialKind::LambertPhongMixture,
            albedo: Rgb::splat(0.5),
            spec_albedo: Some(Rgb::splat(0.6)),
            exponent: Some(10.0),
            alpha_diffuse: Some(0.5),
        };
        assert!(Material::new(&desc).is_err());
        desc.spec_albedo = Some(Rgb::splat(0.4));
        assert!(Material::new(&desc).is_ok());
        desc.alpha_diffuse = None;
        assert!(Material::new(&desc).is_err());
    }

    #[test]
    fn pdfs_integrate_to_at_most_one() {
        // Monte Carlo over the sphere with uniform directions
        let n = Vec3::new(0.0, 0.0, 1.0);
        let wo = Vec3::new(0.3, 0.0, 1.0).normalized();
        let mut rng = SampleStream::new(3);
        let m = 400_000;
        for mat in [lambert(), glossy()] {
            let mut sum = 0.0;
            for _ in 0..m {
                let z = 2.0 * rng.uniform() - 1.0;
                let phi = 2.0 * PI * rng.uniform();
                let r = (1.0 - z * z).sqrt();
                let wi = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                sum += mat.pdf(n, wo, wi) * 4.0 * PI;
            }
            let mean = sum / m as f64;
            assert!(mean < 1.01, "{mean}");
            assert!(mean > 0.9, "{mean}");
        }
    }

    #[test]
    fn sample_and_invert_round_trip() {
        let n = Vec3::new(0.0, 1.0, 0.0);
        let wo = Vec3::new(0.5, 0.7, -0.2).normalized();
        let mut rng = SampleStream::new(9);
        for mat in [lambert(), glossy()] {
            for _ in 0..10_000 {
                let u = [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()];
                let Some(s) = mat.sample(n, wo, &u) else { continue };
                assert!((s.wi.length() - 1.0).abs() < 1e-12);
                assert!((s.jac_inv_det / s.selection_prob - mat.pdf(n, wo, s.wi)).abs() < 1e-9 * mat.pdf(n, wo, s.wi));
                let sel = mat.selection(n, wo, s.wi).unwrap();
                assert!((sel[s.component] - s.selection_prob).abs() < 1e-12);
                let inv = mat.invert(n, wo, s.wi, s.component, [0.5, 0.5]).unwrap();
                let again = mat.sample(n, wo, &inv.u).unwrap();
                assert!(again.wi.max_abs_diff(s.wi) < 1e-9);
                assert_eq!(again.component, s.component);
                assert!((inv.jac_inv_det - s.jac_inv_det).abs() < 1e-9 * s.jac_inv_det);
            }
        }
    }

    #[test]
    fn phong_below_surface_is_invalid() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let wo = Vec3::new(1.0, 0.0, 0.05).normalized();
        let b = DirBlock::Phong {
            frame: Frame::from_normal(reflect(wo, n)),
            normal: n,
            exponent: 1.0,
        };
        let mut below = 0;
        let mut rng = SampleStream::new(1);
        for _ in 0..1000 {
            match b.sample(&[rng.uniform(), rng.uniform()]) {
                Some((d, _)) => assert!(d.z > 0.0),
                None => below += 1,
            }
        }
        assert!(below > 100);
    }

    #[test]
    fn energy_is_conserved() {
        // albedo = ∫ f cos dω estimated by importance sampling
        let n = Vec3::new(0.0, 0.0, 1.0);
        let mut rng = SampleStream::new(5);
        for wo in [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.8, 0.0, 0.6)] {
            let mat = glossy();
            let m = 200_000;
            let mut sum = 0.0;
            for _ in 0..m {
                let u = [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()];
                if let Some(s) = mat.sample(n, wo, &u) {
                    let p = mat.pdf(n, wo, s.wi);
                    sum += mat.eval(n, wo, s.wi)[0] * s.wi.z / p;
                }
            }
            let albedo = sum / m as f64;
            assert!(albedo <= 0.9 + 0.01, "{albedo}");
        }
    }
}
