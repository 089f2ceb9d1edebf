use std::ffi::{c_char, CString};
use std::ptr;

use pano_depth_ffi::*;

const W: usize = 16;
const H: usize = 8;

fn ramp(offset: f64) -> Vec<f64> {
    (0..W * H).map(|k| 2.0 + offset + 0.05 * (k % W) as f64 + 0.1 * (k / W) as f64).collect()
}

unsafe fn depth(values: &[f64]) -> *mut PdDepth {
    let mut d = ptr::null_mut();
    assert_eq!(pd_depth_new(values.as_ptr(), ptr::null(), W, H, 10.0, &mut d), PdStatus::Ok);
    d
}

fn last_error() -> String {
    unsafe {
        let n = pd_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        pd_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn identical_maps_are_perfect() {
    unsafe {
        // a near box against a far background so both maps have edges
        let v: Vec<f64> = (0..W * H).map(|k| if (4..9).contains(&(k % W)) && (2..6).contains(&(k / W)) { 1.0 } else { 9.0 }).collect();
        let (p, g) = (depth(&v), depth(&v));
        let mut e = PdDirectErrors { rmse: 1.0, ..Default::default() };
        assert_eq!(pd_direct_errors(p, g, 1, &mut e), PdStatus::Ok);
        assert_eq!(e, PdDirectErrors::default());
        let mut acc = 0.0;
        assert_eq!(pd_delta_accuracy(p, g, 1.05, 0, &mut acc), PdStatus::Ok);
        assert_eq!(acc, 1.0);
        let mut ico = ptr::null_mut();
        assert_eq!(pd_icosphere_new(2, &mut ico), PdStatus::Ok);
        assert_eq!(pd_ico_delta_accuracy(p, g, ico, 1.05, &mut acc), PdStatus::Ok);
        assert_eq!(acc, 1.0);
        let mut b = PdBoundaryReport::default();
        assert_eq!(pd_boundary_metrics(p, g, 10.0, &mut b), PdStatus::Ok);
        assert_eq!((b.dbe_acc, b.dbe_comp), (0.0, 0.0));
        assert_eq!((b.precision, b.recall, b.f1), ([1.0; 3], [1.0; 3], [1.0; 3]));
        pd_icosphere_free(ico);
        pd_depth_free(p);
        pd_depth_free(g);
    }
}

#[test]
fn offset_prediction_errors() {
    unsafe {
        let (p, g) = (depth(&ramp(0.5)), depth(&ramp(0.0)));
        let mut e = PdDirectErrors::default();
        assert_eq!(pd_direct_errors(p, g, 0, &mut e), PdStatus::Ok);
        assert!((e.rmse - 0.5).abs() < 1e-12);
        pd_depth_free(p);
        pd_depth_free(g);
    }
}

#[test]
fn icosphere_vertices() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(pd_icosphere_new(1, &mut s), PdStatus::Ok);
        assert_eq!(pd_icosphere_vertex_count(s), 42);
        let mut xyz = vec![0.0; 3 * 42];
        assert_eq!(pd_icosphere_vertices(s, xyz.as_mut_ptr(), xyz.len()), PdStatus::Ok);
        for v in xyz.chunks(3) {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-9);
        }
        assert_eq!(pd_icosphere_vertices(s, xyz.as_mut_ptr(), 3), PdStatus::InvalidArgument);
        assert!(last_error().contains("126"));
        pd_icosphere_free(s);
    }
}

#[test]
fn loss_and_gradient() {
    unsafe {
        let (p, g) = (ramp(0.5), ramp(0.0));
        let mask = [1u8; W * H];
        let mut value = 0.0;
        let mut grad = vec![0.0; W * H];
        let st = pd_loss(PdLossKind::L1, p.as_ptr(), g.as_ptr(), mask.as_ptr(), W, H, 0, &mut value, grad.as_mut_ptr());
        assert_eq!(st, PdStatus::Ok);
        assert!((value - 0.5).abs() < 1e-12);
        assert!(grad.iter().all(|&x| (x - 1.0 / (W * H) as f64).abs() < 1e-15));
        let st = pd_loss(PdLossKind::Comb, p.as_ptr(), g.as_ptr(), mask.as_ptr(), W, H, 0, &mut value, ptr::null_mut());
        assert_eq!(st, PdStatus::Ok);
    }
}

#[test]
fn warp_one_column() {
    unsafe {
        let v = ramp(0.0);
        let d = depth(&v);
        let dphi = vec![std::f64::consts::TAU / W as f64; W * H];
        let dtheta = vec![0.0; W * H];
        let mut out = ptr::null_mut();
        assert_eq!(pd_warp(d, dphi.as_ptr(), dtheta.as_ptr(), &mut out), PdStatus::Ok);
        let (mut w, mut h) = (0, 0);
        assert_eq!(pd_depth_dims(out, &mut w, &mut h), PdStatus::Ok);
        assert_eq!((w, h), (W, H));
        let mut got = vec![0.0; W * H];
        let mut mask = vec![0u8; W * H];
        assert_eq!(pd_depth_copy(out, got.as_mut_ptr(), mask.as_mut_ptr()), PdStatus::Ok);
        for j in 0..H {
            for i in 0..W {
                assert_eq!(got[j * W + i], v[j * W + (i + 1) % W]);
            }
        }
        assert!(mask.iter().all(|&m| m == 1));
        pd_depth_free(out);
        pd_depth_free(d);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(pd_depth_new(ptr::null(), ptr::null(), W, H, 10.0, &mut d), PdStatus::NullPointer);
        assert!(last_error().contains("depth"));
        let v = [1.0; 12];
        assert_eq!(pd_depth_new(v.as_ptr(), ptr::null(), 4, 3, 10.0, &mut d), PdStatus::InvalidArgument);
        assert!(last_error().contains("2:1"));

        let (a, b) = (depth(&ramp(0.0)), {
            let small = vec![2.0; 8 * 4];
            let mut s = ptr::null_mut();
            assert_eq!(pd_depth_new(small.as_ptr(), ptr::null(), 8, 4, 10.0, &mut s), PdStatus::Ok);
            s
        });
        let mut e = PdDirectErrors::default();
        assert_eq!(pd_direct_errors(a, b, 0, &mut e), PdStatus::DimensionMismatch);
        pd_depth_free(a);
        pd_depth_free(b);

        let missing = CString::new("/nonexistent/x.pfm").unwrap();
        assert_eq!(pd_depth_load(missing.as_ptr(), 10.0, &mut d), PdStatus::Io);
    }
}

#[test]
fn masked_pixels_and_prediction_clamp() {
    unsafe {
        let v = ramp(0.0);
        let mut mask = vec![1u8; W * H];
        mask[3] = 0;
        let mut d = ptr::null_mut();
        assert_eq!(pd_depth_new(v.as_ptr(), mask.as_ptr(), W, H, 10.0, &mut d), PdStatus::Ok);
        let mut got = vec![9u8; W * H];
        assert_eq!(pd_depth_copy(d, ptr::null_mut(), got.as_mut_ptr()), PdStatus::Ok);
        assert_eq!(got, mask);
        pd_depth_free(d);

        let raw: Vec<f64> = (0..W * H).map(|k| if k == 0 { 50.0 } else if k == 1 { -1.0 } else { 2.0 }).collect();
        assert_eq!(pd_depth_from_prediction(raw.as_ptr(), W, H, 10.0, &mut d), PdStatus::Ok);
        let mut vals = vec![0.0; W * H];
        assert_eq!(pd_depth_copy(d, vals.as_mut_ptr(), ptr::null_mut()), PdStatus::Ok);
        assert_eq!((vals[0], vals[1]), (10.0, 1e-3));
        pd_depth_free(d);
    }
}

#[test]
fn evaluate_manifests_to_json() {
    let dir = tempfile::tempdir().unwrap();
    let grid = pano_depth::Grid::from_vec(W, H, ramp(0.0)).unwrap();
    pano_depth::io::save_pfm(&dir.path().join("a.pfm"), &grid).unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "{\"id\":\"a\",\"depth\":\"a.pfm\"}\n").unwrap();
    let path = CString::new(m.to_str().unwrap()).unwrap();
    unsafe {
        let mut opts = pd_eval_options_default();
        opts.ico_order = 1;
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(pd_evaluate_manifests(path.as_ptr(), path.as_ptr(), &opts, &mut json), PdStatus::Ok);
        let text = std::ffi::CStr::from_ptr(json).to_str().unwrap().to_owned();
        pd_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["samples"], 1);
        assert_eq!(v["direct"]["rmse"], 0.0);
        assert_eq!(v["direct"]["ico"]["order"], 1);
    }
    assert!((pd_indicator(0.8908, 0.3967) - 23.08).abs() < 0.05);
    assert_eq!(pd_indicator(1.0, 0.5), f64::INFINITY);
}
