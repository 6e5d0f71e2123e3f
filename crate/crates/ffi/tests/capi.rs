use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dcstyle_ffi::*;

fn last_error() -> String {
    let p = dcs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn image(h: usize, w: usize, seed: u8) -> *mut DcsImage {
    let rgb: Vec<u8> = (0..h * w * 3).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
    let mut out = ptr::null_mut();
    let status = unsafe { dcs_image_from_rgb(h, w, rgb.as_ptr(), rgb.len(), &mut out) };
    assert_eq!(status, DcsStatus::Ok);
    out
}

fn pixels(img: *const DcsImage) -> Vec<u8> {
    let mut len = 0;
    let p = unsafe { dcs_image_pixels(img, &mut len) };
    unsafe { std::slice::from_raw_parts(p, len) }.to_vec()
}

#[test]
fn stylize_and_reconstruct_round_trip() {
    unsafe {
        let mut engine = ptr::null_mut();
        assert_eq!(dcs_engine_synthetic(3, &mut engine), DcsStatus::Ok);
        let content = image(16, 16, 1);
        let style = image(24, 16, 2);

        let mut recon = ptr::null_mut();
        assert_eq!(dcs_reconstruct(engine, content, &mut recon), DcsStatus::Ok);
        assert_eq!((dcs_image_height(recon), dcs_image_width(recon)), (16, 16));

        let mut params = dcs_params_default();
        params.alpha = 0.0;
        let styles = [style as *const DcsImage];
        let mut out = ptr::null_mut();
        let status = dcs_stylize(
            engine,
            content,
            styles.as_ptr(),
            ptr::null(),
            1,
            ptr::null(),
            ptr::null(),
            &params,
            &mut out,
        );
        assert_eq!(status, DcsStatus::Ok);
        assert_eq!(pixels(out), pixels(recon));

        let mut styled = ptr::null_mut();
        let weights = [1.0f32];
        let status = dcs_stylize(
            engine,
            content,
            styles.as_ptr(),
            weights.as_ptr(),
            1,
            ptr::null(),
            ptr::null(),
            ptr::null(),
            &mut styled,
        );
        assert_eq!(status, DcsStatus::Ok);
        assert_ne!(pixels(styled), pixels(recon));

        for img in [content, style, recon, out, styled] {
            dcs_image_free(img);
        }
        dcs_engine_free(engine);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        let data = [0u8; 5];
        assert_eq!(dcs_image_from_rgb(2, 2, data.as_ptr(), 5, &mut out), DcsStatus::InvalidInput);
        assert!(out.is_null());
        assert!(last_error().contains("invalid input"));

        assert_eq!(dcs_engine_synthetic(0, ptr::null_mut()), DcsStatus::NullPointer);
        assert!(last_error().contains("out"));

        let missing = CString::new("/nonexistent/weights").unwrap();
        let mut engine = ptr::null_mut();
        assert_eq!(dcs_engine_open(missing.as_ptr(), &mut engine), DcsStatus::Io);
        assert!(engine.is_null());

        let mut engine = ptr::null_mut();
        dcs_engine_synthetic(1, &mut engine);
        let content = image(16, 16, 0);
        let depth = CString::new("d.png").unwrap();
        let styles = [content as *const DcsImage];
        let mut res = ptr::null_mut();
        let status = dcs_stylize(
            engine,
            content,
            styles.as_ptr(),
            ptr::null(),
            1,
            depth.as_ptr(),
            depth.as_ptr(),
            ptr::null(),
            &mut res,
        );
        assert_eq!(status, DcsStatus::InvalidInput);
        assert!(last_error().contains("mutually exclusive"));

        let mut params = dcs_params_default();
        params.depth_min = 0.9;
        params.depth_max = 0.1;
        let status = dcs_stylize(
            engine,
            content,
            styles.as_ptr(),
            ptr::null(),
            1,
            ptr::null(),
            ptr::null(),
            &params,
            &mut res,
        );
        assert_eq!(status, DcsStatus::InvalidInput);

        dcs_image_free(content);
        dcs_engine_free(engine);
        dcs_engine_free(ptr::null_mut());
        dcs_image_free(ptr::null_mut());
    }
}

#[test]
fn engine_from_weight_dir_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = dcstyle::nn::Manifest::builtin();
    dcstyle::nn::synthetic_store(m, dcstyle::nn::Section::Encoder, 1)
        .write_file(dir.path().join("encoder.adsw"))
        .unwrap();
    dcstyle::nn::synthetic_store(m, dcstyle::nn::Section::Decoder, 2)
        .write_file(dir.path().join("decoder.adsw"))
        .unwrap();
    let depth_path = dir.path().join("depth.png");
    let ramp: Vec<u8> = (0..16 * 16).map(|p| (p % 16 * 17) as u8).collect();
    image::GrayImage::from_raw(16, 16, ramp).unwrap().save(&depth_path).unwrap();

    unsafe {
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        let mut engine = ptr::null_mut();
        assert_eq!(dcs_engine_open(d.as_ptr(), &mut engine), DcsStatus::Ok);

        let content = image(16, 16, 9);
        let out_path = CString::new(dir.path().join("c.png").to_str().unwrap()).unwrap();
        assert_eq!(dcs_image_save(content, out_path.as_ptr()), DcsStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(dcs_image_load(out_path.as_ptr(), &mut loaded), DcsStatus::Ok);
        assert_eq!(pixels(loaded), pixels(content));

        let depth = CString::new(depth_path.to_str().unwrap()).unwrap();
        let styles = [content as *const DcsImage];
        let mut out = ptr::null_mut();
        let status = dcs_stylize(
            engine,
            loaded,
            styles.as_ptr(),
            ptr::null(),
            1,
            depth.as_ptr(),
            ptr::null(),
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, DcsStatus::Ok, "{}", last_error());
        assert_eq!(dcs_image_width(out), 16);

        for img in [content, loaded, out] {
            dcs_image_free(img);
        }
        dcs_engine_free(engine);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/capi-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

/// Compiles tests/c/smoke.c against the generated header and static library.
#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = target_dir();
    // `cargo test` builds only the rlib; produce the staticlib explicitly.
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--lib", "--manifest-path"])
        .arg(crate_dir.join("Cargo.toml"))
        .arg("--target-dir")
        .arg(profile_dir.parent().unwrap())
        .status()
        .unwrap();
    assert!(status.success(), "building the static library failed");
    let lib = profile_dir.join("libdcstyle_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C smoke test failed to compile");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
