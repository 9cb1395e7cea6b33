//! C ABI over the rjmlt library.
//!
//! Every function returns an [`RjmltStatus`]; on failure a message is kept
//! per thread and can be fetched with [`rjmlt_last_error`]. Handles are
//! opaque and owned by the caller until passed to their `_free` function.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rjmlt::lt::image::{mse, Image};
use rjmlt::lt::mlt::{mlt_render, with_threads, Algorithm, RenderOptions};
use rjmlt::lt::pt::path_trace_reference;
use rjmlt::lt::scene::Scene;
use rjmlt::oned::{evaluate_variant, Variant};
use rjmlt::stats::chi_square;
use rjmlt::Error;

/// Result codes of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RjmltStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Scene = 3,
    Io = 4,
    Numeric = 5,
    DimensionMismatch = 6,
    Initialization = 7,
    Panic = 8,
}

/// Integrators accepted by [`rjmlt_render`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RjmltIntegrator {
    Mmlt = 0,
    Rjmlt = 1,
    Pt = 2,
}

/// A loaded scene.
pub struct RjmltScene(Scene);

/// An RGB image with `f32` channels, top row first.
pub struct RjmltImage(Image);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RjmltStatus {
    match e {
        Error::InvalidArgument(_) | Error::Unsupported(_) | Error::InvalidState(_) | Error::DegenerateInterval(..) => {
            RjmltStatus::InvalidArgument
        }
        Error::Scene(_) | Error::Json(_) => RjmltStatus::Scene,
        Error::Io(_) => RjmltStatus::Io,
        Error::Numeric(_) | Error::NonInvertible(_) => RjmltStatus::Numeric,
        Error::DimensionMismatch(_) => RjmltStatus::DimensionMismatch,
        Error::Initialization(_) => RjmltStatus::Initialization,
    }
}

/// Runs `f`, mapping errors and panics to a status with a stored message.
fn guard(f: impl FnOnce() -> Result<(), (RjmltStatus, String)>) -> RjmltStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RjmltStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RjmltStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RjmltStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RjmltStatus, String) {
    (RjmltStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: &str) -> (RjmltStatus, String) {
    (RjmltStatus::InvalidArgument, msg.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RjmltStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rjmlt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a scene from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_scene_load(path: *const c_char, out: *mut *mut RjmltScene) -> RjmltStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let scene = Scene::load(std::path::Path::new(path)).map_err(lib)?;
        *out = Box::into_raw(Box::new(RjmltScene(scene)));
        Ok(())
    })
}

/// Parses a scene from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_scene_from_json(json: *const c_char, out: *mut *mut RjmltScene) -> RjmltStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let json = str_arg(json, "json")?;
        let scene = Scene::from_json(json).map_err(lib)?;
        *out = Box::into_raw(Box::new(RjmltScene(scene)));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from a scene constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_scene_free(scene: *mut RjmltScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Renders `scene`. `budget` is the total mutation count for the
/// Metropolis integrators and samples per pixel for the path tracer.
/// `threads == 0` uses the default pool; the image does not depend on it.
///
/// # Safety
/// `scene` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_render(
    scene: *const RjmltScene,
    integrator: RjmltIntegrator,
    budget: u64,
    seed: u64,
    k_max: u32,
    threads: u32,
    out: *mut *mut RjmltImage,
) -> RjmltStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scene = &scene.as_ref().ok_or_else(|| null("scene"))?.0;
        let threads = (threads > 0).then_some(threads as usize);
        let k_max = k_max as usize;
        let image = with_threads(threads, || match integrator {
            RjmltIntegrator::Pt => path_trace_reference(scene, budget as usize, seed, k_max),
            RjmltIntegrator::Mmlt | RjmltIntegrator::Rjmlt => {
                let alg = if integrator == RjmltIntegrator::Mmlt { Algorithm::Mmlt } else { Algorithm::Rjmlt };
                let mut options = RenderOptions::new(alg, budget, seed);
                options.k_max = k_max;
                mlt_render(scene, &options).map(|r| r.image)
            }
        })
        .and_then(|r| r)
        .map_err(lib)?;
        *out = Box::into_raw(Box::new(RjmltImage(image)));
        Ok(())
    })
}

/// Reads a colour PFM file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_image_read_pfm(path: *const c_char, out: *mut *mut RjmltImage) -> RjmltStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let file = std::fs::File::open(path).map_err(|e| lib(e.into()))?;
        let image = Image::read_pfm(file).map_err(lib)?;
        *out = Box::into_raw(Box::new(RjmltImage(image)));
        Ok(())
    })
}

/// Writes `image` as little-endian PFM.
///
/// # Safety
/// `image` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_image_write_pfm(image: *const RjmltImage, path: *const c_char) -> RjmltStatus {
    guard(|| {
        let image = &image.as_ref().ok_or_else(|| null("image"))?.0;
        let path = str_arg(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| lib(e.into()))?;
        image.write_pfm(std::io::BufWriter::new(file)).map_err(lib)
    })
}

/// Image dimensions.
///
/// # Safety
/// `image` must be a live handle; `width` and `height` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_image_size(image: *const RjmltImage, width: *mut u32, height: *mut u32) -> RjmltStatus {
    guard(|| {
        let image = &image.as_ref().ok_or_else(|| null("image"))?.0;
        if width.is_null() || height.is_null() {
            return Err(null("width/height"));
        }
        *width = image.width as u32;
        *height = image.height as u32;
        Ok(())
    })
}

/// Copies the pixels as interleaved RGB into `data`, which must hold
/// `3 * width * height` floats (`len`).
///
/// # Safety
/// `image` must be a live handle and `data` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_image_copy_rgb(image: *const RjmltImage, data: *mut f32, len: usize) -> RjmltStatus {
    guard(|| {
        let image = &image.as_ref().ok_or_else(|| null("image"))?.0;
        if data.is_null() {
            return Err(null("data"));
        }
        let n = image.pixels.len() * 3;
        if len < n {
            return Err(invalid(&format!("buffer holds {len} floats, need {n}")));
        }
        let dst = std::slice::from_raw_parts_mut(data, n);
        for (d, v) in dst.iter_mut().zip(image.pixels.iter().flat_map(|p| p.0)) {
            *d = v as f32;
        }
        Ok(())
    })
}

/// # Safety
/// `image` must come from an image constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_image_free(image: *mut RjmltImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Mean squared error over pixels and channels.
///
/// # Safety
/// `a` and `b` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_mse(a: *const RjmltImage, b: *const RjmltImage, out: *mut f64) -> RjmltStatus {
    guard(|| {
        let a = &a.as_ref().ok_or_else(|| null("a"))?.0;
        let b = &b.as_ref().ok_or_else(|| null("b"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = mse(a, b).map_err(lib)?;
        Ok(())
    })
}

/// Pearson chi-square of `observed` against `expected` (both `bins` long),
/// scaled to `samples` effective counts.
///
/// # Safety
/// `observed` and `expected` must be valid for `bins` reads; `statistic`,
/// `dof` and `p_value` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_chi_square(
    observed: *const f64,
    expected: *const f64,
    bins: usize,
    samples: f64,
    statistic: *mut f64,
    dof: *mut u32,
    p_value: *mut f64,
) -> RjmltStatus {
    guard(|| {
        if observed.is_null() || expected.is_null() {
            return Err(null("histogram"));
        }
        if statistic.is_null() || dof.is_null() || p_value.is_null() {
            return Err(null("output"));
        }
        let o = std::slice::from_raw_parts(observed, bins);
        let e = std::slice::from_raw_parts(expected, bins);
        let chi = chi_square(o, e, samples).map_err(lib)?;
        *statistic = chi.statistic;
        *dof = chi.dof as u32;
        *p_value = chi.p_value;
        Ok(())
    })
}

/// Runs the 1D experiment for `variant` ("baseline", "nojacobian",
/// "fixedpoint" or "full") over seeds `seed .. seed + seeds` and returns
/// the pooled chi-square p-value against the target.
///
/// # Safety
/// `variant` must be a NUL-terminated string and `p_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rjmlt_validate1d(
    variant: *const c_char,
    steps: u64,
    seed: u64,
    seeds: u32,
    bins: u32,
    p_value: *mut f64,
) -> RjmltStatus {
    guard(|| {
        if p_value.is_null() {
            return Err(null("p_value"));
        }
        let variant: Variant = str_arg(variant, "variant")?.parse().map_err(lib)?;
        let seeds: Vec<u64> = (0..u64::from(seeds)).map(|i| seed + i).collect();
        let verdict = evaluate_variant(variant, steps, &seeds, bins as usize).map_err(lib)?;
        *p_value = verdict.chi.p_value;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_set_and_clear_the_message() {
        let mut out = ptr::null_mut();
        let s = unsafe { rjmlt_scene_from_json(c"{".as_ptr(), &mut out) };
        assert_eq!(s, RjmltStatus::Scene);
        assert!(out.is_null());
        assert!(!rjmlt_last_error().is_null());
        let mut v = 0.0;
        let o = [1.0, 2.0];
        let s = unsafe { rjmlt_chi_square(o.as_ptr(), o.as_ptr(), 2, 100.0, &mut v, &mut 0, &mut 0.0) };
        assert_eq!(s, RjmltStatus::Ok);
        assert!(rjmlt_last_error().is_null());
    }

    #[test]
    fn panics_are_caught() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, RjmltStatus::Panic);
        let msg = unsafe { CStr::from_ptr(rjmlt_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
