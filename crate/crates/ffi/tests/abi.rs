use std::ffi::{CStr, CString};
use std::ptr;

use rjmlt::lt::mlt::{mlt_render, Algorithm, RenderOptions};
use rjmlt::lt::scene::Scene;
use rjmlt_ffi::*;

const SCENE: &str = include_str!("../../../scenes/cornell.json");

fn load() -> *mut RjmltScene {
    let json = CString::new(SCENE).unwrap();
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { rjmlt_scene_from_json(json.as_ptr(), &mut scene) }, RjmltStatus::Ok);
    scene
}

fn pixels(image: *const RjmltImage) -> Vec<f32> {
    let (mut w, mut h) = (0, 0);
    assert_eq!(unsafe { rjmlt_image_size(image, &mut w, &mut h) }, RjmltStatus::Ok);
    let mut data = vec![0.0f32; (3 * w * h) as usize];
    assert_eq!(
        unsafe { rjmlt_image_copy_rgb(image, data.as_mut_ptr(), data.len()) },
        RjmltStatus::Ok
    );
    data
}

#[test]
fn render_through_the_abi_matches_the_library() {
    let scene = load();
    let mut image = ptr::null_mut();
    let s = unsafe { rjmlt_render(scene, RjmltIntegrator::Rjmlt, 20_000, 3, 4, 2, &mut image) };
    assert_eq!(s, RjmltStatus::Ok);
    let got = pixels(image);

    let mut options = RenderOptions::new(Algorithm::Rjmlt, 20_000, 3);
    options.k_max = 4;
    let want = mlt_render(&Scene::from_json(SCENE).unwrap(), &options).unwrap().image;
    let want: Vec<f32> = want.pixels.iter().flat_map(|p| p.0).map(|v| v as f32).collect();
    assert_eq!(got, want);

    let mut e = -1.0;
    assert_eq!(unsafe { rjmlt_mse(image, image, &mut e) }, RjmltStatus::Ok);
    assert_eq!(e, 0.0);

    let mut short = vec![0.0f32; 3];
    let s = unsafe { rjmlt_image_copy_rgb(image, short.as_mut_ptr(), short.len()) };
    assert_eq!(s, RjmltStatus::InvalidArgument);
    unsafe {
        rjmlt_image_free(image);
        rjmlt_scene_free(scene);
    }
}

#[test]
fn pfm_round_trip_and_error_reporting() {
    let scene = load();
    let mut image = ptr::null_mut();
    let s = unsafe { rjmlt_render(scene, RjmltIntegrator::Pt, 2, 1, 10, 0, &mut image) };
    assert_eq!(s, RjmltStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("a.pfm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rjmlt_image_write_pfm(image, path.as_ptr()) }, RjmltStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { rjmlt_image_read_pfm(path.as_ptr(), &mut back) }, RjmltStatus::Ok);
    assert_eq!(pixels(image), pixels(back));

    let missing = CString::new(dir.path().join("none.pfm").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { rjmlt_image_read_pfm(missing.as_ptr(), &mut none) }, RjmltStatus::Io);
    assert!(none.is_null());
    let msg = unsafe { CStr::from_ptr(rjmlt_last_error()) };
    assert!(!msg.to_bytes().is_empty());

    let s = unsafe { rjmlt_render(scene, RjmltIntegrator::Pt, 0, 1, 10, 0, &mut none) };
    assert_eq!(s, RjmltStatus::InvalidArgument);
    let s = unsafe { rjmlt_render(ptr::null(), RjmltIntegrator::Pt, 1, 1, 10, 0, &mut none) };
    assert_eq!(s, RjmltStatus::NullPointer);
    unsafe {
        rjmlt_image_free(image);
        rjmlt_image_free(back);
        rjmlt_scene_free(scene);
    }
}

#[test]
fn chi_square_and_validate1d() {
    let (mut stat, mut dof, mut p) = (0.0, 0u32, 0.0);
    let o = [10.0, 10.0, 10.0, 10.0];
    let s = unsafe { rjmlt_chi_square(o.as_ptr(), o.as_ptr(), 4, 400.0, &mut stat, &mut dof, &mut p) };
    assert_eq!(s, RjmltStatus::Ok);
    assert_eq!((stat, dof, p), (0.0, 3, 1.0));

    let variant = CString::new("baseline").unwrap();
    let s = unsafe { rjmlt_validate1d(variant.as_ptr(), 20_000, 1, 2, 20, &mut p) };
    assert_eq!(s, RjmltStatus::Ok);
    assert!((0.0..=1.0).contains(&p));
    let bad = CString::new("sideways").unwrap();
    let s = unsafe { rjmlt_validate1d(bad.as_ptr(), 20_000, 1, 2, 20, &mut p) };
    assert_eq!(s, RjmltStatus::InvalidArgument);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/rjmlt.h");
    for f in [
        "rjmlt_last_error",
        "rjmlt_scene_load",
        "rjmlt_scene_from_json",
        "rjmlt_scene_free",
        "rjmlt_render",
        "rjmlt_image_read_pfm",
        "rjmlt_image_write_pfm",
        "rjmlt_image_size",
        "rjmlt_image_copy_rgb",
        "rjmlt_image_free",
        "rjmlt_mse",
        "rjmlt_chi_square",
        "rjmlt_validate1d",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}
