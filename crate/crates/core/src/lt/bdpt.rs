//! Bidirectional sampling techniques `S_0…S_{k+1}` for a fixed path length
//! and their inverse random walks.
//!
//! Primary sample layout for length `k` (`o_k = 4(k+1) + 2`):
//!
//! * dims `0..2`: film position of the eye subpath;
//! * slot `v` (`4` dims at `2 + 4v`, `v = 0..=k`): the direction sampled at
//!   vertex `x_v` as `[lobe, d1, d2, spare]`, by whichever subpath leaves
//!   `x_v`;
//! * slot `0` is never scattered from (pinhole camera) and holds the light
//!   start `[light index, s, t, spare]`; the emitter direction uses slot `k`.
//!
//! In selector mode an extra leading dimension picks the technique with
//! equal probabilities.

use crate::error::{Error, Result};
use crate::invmap::{interval_inverse, AuxVector, BlockResult, InvertibleBlock};
use crate::lt::material::DirBlock;
use crate::lt::math::{Frame, Vec3};
use crate::lt::path::{balance_weights, technique_pdfs_unoccluded, unoccluded_contribution, LightPath, Vertex};
use crate::lt::scene::{Ray, Scene, Surface};
use crate::pss::{clamp_unit, large_step, RandomVector, SmallStepKernel};
use crate::rjump::{IntervalMode, Inversion, PathRecord, TechniqueFamily, TechniqueState};
use crate::rng::SampleStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub k: usize,
    /// Technique chosen by a leading primary-sample dimension.
    pub selector: bool,
}

impl Layout {
    pub fn new(k: usize, selector: bool) -> Result<Layout> {
        if k == 0 {
            return Err(Error::InvalidArgument("path length must be at least 1".into()));
        }
        Ok(Layout { k, selector })
    }

    pub fn techniques(&self) -> usize {
        self.k + 2
    }

    fn base(&self) -> usize {
        usize::from(self.selector)
    }

    pub fn dim(&self) -> usize {
        self.base() + 4 * (self.k + 1) + 2
    }

    pub fn film(&self) -> usize {
        self.base()
    }

    pub fn slot(&self, v: usize) -> usize {
        self.base() + 2 + 4 * v
    }

    /// Technique encoded by the selector dimension.
    pub fn select(&self, u0: f64) -> usize {
        ((u0 * self.techniques() as f64) as usize).min(self.k + 1)
    }

    pub fn selector_interval(&self, i: usize) -> (f64, f64) {
        let n = self.techniques() as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }
}

/// Which sampling step produced a ledger entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Selector,
    Film,
    LightIndex,
    LightPosition,
    EmitterDirection,
    /// Direction sampled at `x_vertex`.
    Scatter { vertex: usize },
    Unused,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerItem {
    pub kind: BlockKind,
    pub dims: Vec<usize>,
}

pub type Ledger = Vec<BlockResult<LedgerItem>>;

/// A traced technique sample before contribution and MIS evaluation.
#[derive(Clone, Debug)]
pub struct Traced {
    pub technique: usize,
    pub vertices: Vec<Vertex>,
    /// Product of all block inverse Jacobians in area measure.
    pub jacobian: f64,
    /// `Π T(t)` over mixture components used.
    pub selection_prob: f64,
}

struct Recorder<'a> {
    ledger: Option<&'a mut Ledger>,
    used: Vec<bool>,
    jacobian: f64,
    selection: f64,
}

impl Recorder<'_> {
    fn push(&mut self, kind: BlockKind, dims: &[usize], jac: f64, interval: Option<(f64, f64)>) {
        self.jacobian *= jac;
        if let Some(ledger) = self.ledger.as_deref_mut() {
            for &d in dims {
                self.used[d] = true;
            }
            ledger.push(BlockResult {
                sample: LedgerItem {
                    kind,
                    dims: dims.to_vec(),
                },
                jac_inv_det: jac,
                consumed: dims.len(),
                interval,
            });
        }
    }

    fn finish(&mut self) {
        if let Some(ledger) = self.ledger.as_deref_mut() {
            for (d, used) in self.used.iter().enumerate() {
                if !used {
                    ledger.push(BlockResult {
                        sample: LedgerItem {
                            kind: BlockKind::Unused,
                            dims: vec![d],
                        },
                        jac_inv_det: 1.0,
                        consumed: 1,
                        interval: Some((0.0, 1.0)),
                    });
                }
            }
        }
    }
}

fn trace_ray(scene: &Scene, from: Vec3, dir: Vec3) -> Option<(Vertex, f64)> {
    let hit = scene.intersect(&Ray { origin: from, dir })?;
    let g = hit.n.dot(dir).abs() / (hit.t * hit.t);
    Some((
        Vertex {
            p: hit.p,
            n: hit.n,
            prim: hit.prim,
        },
        g,
    ))
}

fn emitter_block(n: Vec3) -> DirBlock {
    DirBlock::Cosine {
        frame: Frame::from_normal(n),
    }
}

/// Runs technique `i` on `u`. `None` when the random walk misses, leaves
/// the support of a block, or the connection is blocked. With `ledger`,
/// every block (and every unused dimension) is recorded.
pub fn trace(scene: &Scene, layout: &Layout, i: usize, u: &[f64], ledger: Option<&mut Ledger>) -> Option<Traced> {
    let k = layout.k;
    debug_assert_eq!(u.len(), layout.dim());
    if i > k {
        return None;
    }
    let record = ledger.is_some();
    let mut rec = Recorder {
        ledger,
        used: if record { vec![false; layout.dim()] } else { Vec::new() },
        jacobian: 1.0,
        selection: 1.0,
    };
    if layout.selector {
        rec.push(
            BlockKind::Selector,
            &[0],
            1.0 / layout.techniques() as f64,
            Some(layout.selector_interval(i)),
        );
    }

    let cam = &scene.camera;
    let mut vertices = Vec::with_capacity(k);
    if k > i {
        let f = layout.film();
        let dir = cam.direction(u[f], u[f + 1]);
        let pdf = cam.direction_pdf(dir);
        if !(pdf > 0.0) {
            return None;
        }
        let (v, g) = trace_ray(scene, cam.position, dir)?;
        rec.push(BlockKind::Film, &[f, f + 1], pdf * g, None);
        vertices.push(v);
        for m in 1..k - i {
            let x = vertices[m - 1];
            let mat = scene.material_of(x.prim)?;
            let prev = if m == 1 { cam.position } else { vertices[m - 2].p };
            let wo = (prev - x.p).normalized();
            let s = layout.slot(m);
            let sample = mat.sample(x.n, wo, &u[s..s + 4])?;
            let (v, g) = trace_ray(scene, x.p, sample.wi)?;
            let dims: &[usize] = if mat.mixture().is_some() { &[s, s + 1, s + 2] } else { &[s + 1, s + 2] };
            rec.push(
                BlockKind::Scatter { vertex: m },
                dims,
                sample.jac_inv_det * g,
                mat.mixture().map(|spec| spec.interval(sample.component)),
            );
            rec.selection *= sample.selection_prob;
            vertices.push(v);
        }
    }

    let mut light: Vec<Vertex> = Vec::with_capacity(i);
    if i >= 1 {
        let s0 = layout.slot(0);
        let l = scene.select_light(u[s0]);
        let interval = scene.light_interval(l);
        rec.push(BlockKind::LightIndex, &[s0], interval.1 - interval.0, Some(interval));
        let e = &scene.emitters[l];
        rec.push(BlockKind::LightPosition, &[s0 + 1, s0 + 2], 1.0 / e.area, None);
        light.push(Vertex {
            p: e.point(u[s0 + 1], u[s0 + 2]),
            n: e.normal,
            prim: e.prim,
        });
        if i >= 2 {
            let sk = layout.slot(k);
            let (wi, pdf) = emitter_block(e.normal).sample(&u[sk + 1..sk + 3])?;
            let (v, g) = trace_ray(scene, light[0].p, wi)?;
            rec.push(BlockKind::EmitterDirection, &[sk + 1, sk + 2], pdf * g, None);
            light.push(v);
            for r in 1..i - 1 {
                let y = light[r];
                let mat = scene.material_of(y.prim)?;
                let wo = (light[r - 1].p - y.p).normalized();
                let s = layout.slot(k - r);
                let sample = mat.sample(y.n, wo, &u[s..s + 4])?;
                let (v, g) = trace_ray(scene, y.p, sample.wi)?;
                let dims: &[usize] = if mat.mixture().is_some() { &[s, s + 1, s + 2] } else { &[s + 1, s + 2] };
                rec.push(
                    BlockKind::Scatter { vertex: k - r },
                    dims,
                    sample.jac_inv_det * g,
                    mat.mixture().map(|spec| spec.interval(sample.component)),
                );
                rec.selection *= sample.selection_prob;
                light.push(v);
            }
        }
    }

    // connection
    if i >= 1 {
        let a = vertices.last().map_or(cam.position, |v| v.p);
        let b = light[i - 1].p;
        if !scene.visible(a, b) {
            return None;
        }
    }
    vertices.extend(light.into_iter().rev());
    rec.finish();
    Some(Traced {
        technique: i,
        vertices,
        jacobian: rec.jacobian,
        selection_prob: rec.selection,
    })
}

/// Resolves the ambiguities of an inverse random walk.
pub trait Resolver {
    /// Relative position inside an ambiguous interval.
    fn gamma(&mut self) -> f64;

    /// Mixture component given the selection distribution `T`.
    fn component(&mut self, selection: &[f64]) -> Result<usize>;
}

/// Draws positions and components from a stream, recording every draw.
pub struct RandomResolver<'a> {
    pub intervals: IntervalMode,
    pub rng: &'a mut SampleStream,
    pub aux: Vec<f64>,
}

impl<'a> RandomResolver<'a> {
    pub fn new(intervals: IntervalMode, rng: &'a mut SampleStream) -> Self {
        Self {
            intervals,
            rng,
            aux: Vec::new(),
        }
    }
}

impl Resolver for RandomResolver<'_> {
    fn gamma(&mut self) -> f64 {
        let g = self.intervals.gamma(self.rng);
        self.aux.push(g);
        g
    }

    fn component(&mut self, selection: &[f64]) -> Result<usize> {
        let u = self.rng.uniform();
        self.aux.push(u);
        let mut acc = 0.0;
        let mut last = None;
        for (t, &p) in selection.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = Some(t);
                if u < acc {
                    return Ok(t);
                }
            }
        }
        last.ok_or_else(|| Error::NonInvertible("empty selection distribution".into()))
    }
}

/// Fixed positions and a scripted sequence of components, for enumerating
/// every admissible inversion.
pub struct ScriptedResolver {
    pub gamma: f64,
    pub components: Vec<usize>,
    next: usize,
}

impl ScriptedResolver {
    pub fn new(gamma: f64, components: Vec<usize>) -> Self {
        Self {
            gamma,
            components,
            next: 0,
        }
    }
}

impl Resolver for ScriptedResolver {
    fn gamma(&mut self) -> f64 {
        self.gamma
    }

    fn component(&mut self, selection: &[f64]) -> Result<usize> {
        let t = self.components.get(self.next).copied().unwrap_or(0);
        self.next += 1;
        if selection.get(t).is_some_and(|p| *p > 0.0) {
            Ok(t)
        } else {
            Err(Error::NonInvertible(format!("component {t} cannot produce the direction")))
        }
    }
}

/// Random numbers reproducing a path under technique `i`.
#[derive(Clone, Debug)]
pub struct PathInversion {
    pub u: Vec<f64>,
    /// Product of the block inverse Jacobians in area measure.
    pub jacobian: f64,
    pub selection_prob: f64,
    /// Components chosen at mixture vertices, in walk order.
    pub components: Vec<usize>,
}

fn area_factor(from: Vec3, to: &Vertex) -> (Vec3, f64) {
    let d = to.p - from;
    let d2 = d.length_squared();
    let w = d / d2.sqrt();
    (w, to.n.dot(w).abs() / d2)
}

struct InverseScatter<'a> {
    scene: &'a Scene,
    u: &'a mut [f64],
    jacobian: f64,
    selection: f64,
    components: Vec<usize>,
}

impl InverseScatter<'_> {
    /// Inverts the direction sampled at `x` (coming from `prev`) that reached
    /// `next`, writing slot `s`.
    fn scatter(&mut self, x: &Vertex, prev: Vec3, next: &Vertex, s: usize, res: &mut dyn Resolver) -> Result<()> {
        let mat = self
            .scene
            .material_of(x.prim)
            .ok_or_else(|| Error::NonInvertible("path scatters at an emitter".into()))?;
        let wo = (prev - x.p).normalized();
        let (wi, g) = area_factor(x.p, next);
        let selection = mat.selection(x.n, wo, wi)?;
        let t = if selection.len() == 1 { 0 } else { res.component(&selection)? };
        let gammas = [res.gamma(), res.gamma()];
        let inv = mat.invert(x.n, wo, wi, t, gammas)?;
        self.u[s..s + 4].copy_from_slice(&inv.u);
        self.jacobian *= inv.jac_inv_det * g;
        self.selection *= inv.selection_prob;
        self.components.push(t);
        Ok(())
    }
}

/// Inverse random walk of technique `i`: random numbers `u` with
/// `trace(i, u)` reproducing `path`.
pub fn invert(scene: &Scene, layout: &Layout, i: usize, path: &[Vertex], res: &mut dyn Resolver) -> Result<PathInversion> {
    let k = layout.k;
    if path.len() != k {
        return Err(Error::DimensionMismatch(format!("path of length {} for layout {k}", path.len())));
    }
    if i > k {
        return Err(Error::NonInvertible(format!("technique {i} cannot produce paths of length {k}")));
    }
    let cam = &scene.camera;
    let mut u = vec![f64::NAN; layout.dim()];
    let mut jacobian = 1.0;
    if layout.selector {
        let (a, b) = layout.selector_interval(i);
        let (u0, jac) = interval_inverse(a, b, res.gamma())?;
        u[0] = u0;
        jacobian *= jac;
    }

    // connection precondition
    if i >= 1 {
        let a = if k > i { path[k - i - 1].p } else { cam.position };
        if !scene.visible(a, path[k - i].p) {
            return Err(Error::NonInvertible(format!("connection of technique {i} is occluded")));
        }
    }

    let mut inv = InverseScatter {
        scene,
        u: &mut u,
        jacobian,
        selection: 1.0,
        components: Vec::new(),
    };
    if k > i {
        let (w, g) = area_factor(cam.position, &path[0]);
        let (fx, fy) = cam
            .project(w)
            .ok_or_else(|| Error::NonInvertible("first vertex is outside the film".into()))?;
        let f = layout.film();
        inv.u[f] = fx;
        inv.u[f + 1] = fy;
        inv.jacobian *= cam.direction_pdf(w) * g;
        for m in 1..k - i {
            let prev = if m == 1 { cam.position } else { path[m - 2].p };
            inv.scatter(&path[m - 1], prev, &path[m], layout.slot(m), res)?;
        }
    }

    if i >= 1 {
        let last = &path[k - 1];
        let Surface::Emitter(l) = scene.surface(last.prim) else {
            return Err(Error::NonInvertible("path does not end on an emitter".into()));
        };
        let e = &scene.emitters[l];
        let s0 = layout.slot(0);
        let (a, b) = scene.light_interval(l);
        let (ul, jac) = interval_inverse(a, b, res.gamma())?;
        let (s, t) = e.params(last.p);
        inv.u[s0] = ul;
        inv.u[s0 + 1] = clamp_unit(s);
        inv.u[s0 + 2] = clamp_unit(t);
        inv.jacobian *= jac / e.area;
        if i >= 2 {
            let sk = layout.slot(k);
            let (w, g) = area_factor(last.p, &path[k - 2]);
            let pdf = emitter_block(e.normal).invert(&w, &mut inv.u[sk + 1..sk + 3])?;
            inv.jacobian *= pdf * g;
            for r in 1..i - 1 {
                inv.scatter(&path[k - 1 - r], path[k - r].p, &path[k - 2 - r], layout.slot(k - r), res)?;
            }
        }
    }

    let (jacobian, selection_prob, components) = (inv.jacobian, inv.selection, inv.components);
    for v in u.iter_mut() {
        if v.is_nan() {
            *v = clamp_unit(res.gamma());
        }
    }
    if !(jacobian > 0.0) || !jacobian.is_finite() {
        return Err(Error::Numeric(format!("inverse Jacobian {jacobian}")));
    }
    Ok(PathInversion {
        u,
        jacobian,
        selection_prob,
        components,
    })
}

/// Number of mixture vertices technique `i` scatters from on `path`.
pub fn mixture_vertices(scene: &Scene, i: usize, path: &[Vertex]) -> usize {
    let k = path.len();
    let eye = (1..k.saturating_sub(i)).map(|m| &path[m - 1]);
    let light = (1..i.saturating_sub(1)).map(|r| &path[k - 1 - r]);
    eye.chain(light)
        .filter(|v| scene.material_of(v.prim).is_some_and(|m| m.mixture().is_some()))
        .count()
}

/// The techniques of one path length as a family over one primary sample
/// space.
#[derive(Clone, Copy, Debug)]
pub struct BdptFamily<'a> {
    pub scene: &'a Scene,
    pub layout: Layout,
}

impl<'a> BdptFamily<'a> {
    pub fn new(scene: &'a Scene, layout: Layout) -> Self {
        Self { scene, layout }
    }

    fn invalid(&self, technique: usize, u: RandomVector) -> TechniqueState<LightPath> {
        TechniqueState {
            technique,
            u,
            path: PathRecord::invalid(),
            target_value: 0.0,
            mis_weights: vec![0.0; self.layout.techniques()],
        }
    }

    /// Technique, contribution and MIS bookkeeping for `u`.
    pub fn evaluate_vector(&self, technique: usize, u: RandomVector) -> TechniqueState<LightPath> {
        let technique = if self.layout.selector { self.layout.select(u[0]) } else { technique };
        let Some(traced) = trace(self.scene, &self.layout, technique, u.as_slice(), None) else {
            return self.invalid(technique, u);
        };
        let f = unoccluded_contribution(self.scene, &traced.vertices);
        let lum = f.luminance();
        let pdfs = technique_pdfs_unoccluded(self.scene, &traced.vertices);
        let total: f64 = pdfs.iter().sum();
        if !(lum > 0.0) || !(pdfs[technique] > 0.0) || !total.is_finite() || !(traced.jacobian > 0.0) {
            return self.invalid(technique, u);
        }
        let cam = &self.scene.camera;
        let Some(film) = cam.project(traced.vertices[0].p - cam.position) else {
            return self.invalid(technique, u);
        };
        let path = LightPath {
            vertices: traced.vertices,
            film,
            pixel: cam.pixel(film.0, film.1),
            contribution: f,
        };
        TechniqueState {
            technique,
            u,
            path: PathRecord {
                path: Some(path),
                inverse_jacobian: traced.jacobian,
                selection_prob: traced.selection_prob,
            },
            target_value: lum / total,
            mis_weights: balance_weights(&pdfs),
        }
    }
}

impl TechniqueFamily for BdptFamily<'_> {
    type Path = LightPath;

    fn technique_count(&self) -> usize {
        self.layout.techniques()
    }

    fn evaluate(&self, technique: usize, u: RandomVector) -> TechniqueState<LightPath> {
        self.evaluate_vector(technique, u)
    }

    fn invert(&self, technique: usize, path: &LightPath, intervals: IntervalMode, rng: &mut SampleStream) -> Result<Inversion> {
        let mut res = RandomResolver::new(intervals, rng);
        let inv = invert(self.scene, &self.layout, technique, &path.vertices, &mut res)?;
        Ok(Inversion {
            u: RandomVector::from_clamped(inv.u),
            jac_inv_det: inv.jacobian,
            selection_prob: inv.selection_prob,
            aux: AuxVector(res.aux),
        })
    }

    fn max_deviation(&self, a: &LightPath, b: &LightPath) -> f64 {
        if a.vertices.len() != b.vertices.len() {
            return f64::INFINITY;
        }
        let mut dev = 0.0f64;
        for (x, y) in a.vertices.iter().zip(&b.vertices) {
            if x.prim != y.prim {
                return f64::INFINITY;
            }
            dev = dev.max(x.p.max_abs_diff(y.p));
        }
        dev
    }

    fn random_state(&self, rng: &mut SampleStream) -> TechniqueState<LightPath> {
        let technique = if self.layout.selector { 0 } else { rng.below(self.layout.techniques()) };
        let u = large_step(rng, self.layout.dim()).expect("layout has positive dimension");
        self.evaluate_vector(technique, u)
    }

    fn small_step(
        &self,
        current: &TechniqueState<LightPath>,
        kernel: &SmallStepKernel,
        rng: &mut SampleStream,
    ) -> (TechniqueState<LightPath>, bool) {
        let u = kernel.perturb(&current.u, rng);
        let next = self.evaluate_vector(current.technique, u);
        let changed = next.technique != current.technique;
        (next, changed)
    }
}
