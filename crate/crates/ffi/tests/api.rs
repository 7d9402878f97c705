use std::ffi::{CStr, CString};
use std::ptr;

use det_ffi::*;

fn gaussian_like(n: usize) -> Vec<f64> {
    // deterministic correlated pairs from a Weyl sequence
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        let u = (i as f64 * 0.618_033_988_749_894_9).fract();
        let v = (i as f64 * 0.754_877_666_246_692_7).fract();
        data.push(u);
        data.push(0.5 * u + 0.5 * v * v);
    }
    data
}

fn build(n: usize) -> *mut DetTree {
    let data = gaussian_like(n);
    let mut tree = ptr::null_mut();
    let s = unsafe { det_tree_build(data.as_ptr(), n, 2, ptr::null(), &mut tree) };
    assert_eq!(s, DetStatus::Ok);
    assert!(!tree.is_null());
    tree
}

fn last_error() -> String {
    let p = det_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn build_query_free() {
    let tree = build(5000);
    let (mut dims, mut leaves, mut n) = (0usize, 0usize, 0u64);
    unsafe {
        assert_eq!(det_tree_dims(tree, &mut dims), DetStatus::Ok);
        assert_eq!(det_tree_leaf_count(tree, &mut leaves), DetStatus::Ok);
        assert_eq!(det_tree_sample_size(tree, &mut n), DetStatus::Ok);
    }
    assert_eq!((dims, n), (2, 5000));
    assert!(leaves > 1);

    let mut rho = -1.0;
    let x = [0.5, 0.4];
    assert_eq!(
        unsafe { det_tree_density(tree, x.as_ptr(), 2, &mut rho) },
        DetStatus::Ok
    );
    assert!(rho > 0.0);
    let far = [10.0, 10.0];
    assert_eq!(
        unsafe { det_tree_density(tree, far.as_ptr(), 2, &mut rho) },
        DetStatus::Ok
    );
    assert_eq!(rho, 0.0);
    assert_eq!(
        unsafe { det_tree_density(tree, x.as_ptr(), 3, &mut rho) },
        DetStatus::Dimension
    );
    unsafe { det_tree_free(tree) };
}

#[test]
fn sampling_matches_core() {
    let tree = build(3000);
    let mut buf = vec![0.0; 2 * 100];
    let s = unsafe { det_tree_sample(tree, 9, 100, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(s, DetStatus::Ok);
    let mut again = vec![0.0; 2 * 100];
    unsafe { det_tree_sample(tree, 9, 100, again.as_mut_ptr(), again.len()) };
    assert_eq!(buf, again);

    let dims = [1usize];
    let vals = [0.4];
    let mut cbuf = vec![0.0; 2 * 50];
    let s = unsafe {
        det_tree_sample_conditional(
            tree,
            dims.as_ptr(),
            vals.as_ptr(),
            1,
            3,
            50,
            cbuf.as_mut_ptr(),
            cbuf.len(),
        )
    };
    assert_eq!(s, DetStatus::Ok);
    assert!(cbuf.chunks(2).all(|r| r[1] == 0.4));

    let mut m = 0.0;
    let s = unsafe { det_tree_marginal_estimate(tree, dims.as_ptr(), vals.as_ptr(), 1, &mut m) };
    assert_eq!(s, DetStatus::Ok);
    assert!(m > 0.0);

    let mut small = vec![0.0; 5];
    let s = unsafe { det_tree_sample(tree, 9, 100, small.as_mut_ptr(), small.len()) };
    assert_eq!(s, DetStatus::BufferTooSmall);
    assert!(last_error().contains("need 200"));

    let bad = [7usize];
    let s = unsafe {
        det_tree_sample_conditional(
            tree,
            bad.as_ptr(),
            vals.as_ptr(),
            1,
            3,
            50,
            cbuf.as_mut_ptr(),
            cbuf.len(),
        )
    };
    assert_eq!(s, DetStatus::Dimension);
    let outside = [50.0];
    let s = unsafe {
        det_tree_sample_conditional(
            tree,
            dims.as_ptr(),
            outside.as_ptr(),
            1,
            3,
            50,
            cbuf.as_mut_ptr(),
            cbuf.len(),
        )
    };
    assert_eq!(s, DetStatus::Domain);
    unsafe { det_tree_free(tree) };
}

#[test]
fn save_load_and_json() {
    let tree = build(2000);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { det_tree_save(tree, path.as_ptr()) }, DetStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { det_tree_load(path.as_ptr(), &mut loaded) },
        DetStatus::Ok
    );

    let mut len = 0usize;
    let s = unsafe { det_tree_to_json(tree, ptr::null_mut(), 0, &mut len) };
    assert_eq!(s, DetStatus::BufferTooSmall);
    let mut a = vec![0 as std::ffi::c_char; len + 1];
    assert_eq!(
        unsafe { det_tree_to_json(tree, a.as_mut_ptr(), a.len(), &mut len) },
        DetStatus::Ok
    );
    let mut b = vec![0 as std::ffi::c_char; len + 1];
    assert_eq!(
        unsafe { det_tree_to_json(loaded, b.as_mut_ptr(), b.len(), &mut len) },
        DetStatus::Ok
    );
    assert_eq!(a, b);

    let mut parsed = ptr::null_mut();
    assert_eq!(
        unsafe { det_tree_from_json(a.as_ptr(), &mut parsed) },
        DetStatus::Ok
    );
    let garbage = CString::new("{\"formatVersion\": 1").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { det_tree_from_json(garbage.as_ptr(), &mut none) },
        DetStatus::Format
    );
    assert!(none.is_null());

    let missing = CString::new(dir.path().join("missing.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { det_tree_load(missing.as_ptr(), &mut none) },
        DetStatus::Io
    );
    unsafe {
        det_tree_free(tree);
        det_tree_free(loaded);
        det_tree_free(parsed);
    }
}

#[test]
fn invalid_arguments() {
    let mut tree = ptr::null_mut();
    let s = unsafe { det_tree_build(ptr::null(), 10, 2, ptr::null(), &mut tree) };
    assert_eq!(s, DetStatus::NullPointer);
    let s = unsafe { det_tree_build(ptr::null(), 0, 2, ptr::null(), &mut tree) };
    assert_eq!(s, DetStatus::InvalidArgument);

    let data = gaussian_like(100);
    let mut cfg = det_build_config_default();
    cfg.alpha = 2.0;
    let s = unsafe { det_tree_build(data.as_ptr(), 100, 2, &cfg, &mut tree) };
    assert_eq!(s, DetStatus::InvalidArgument);
    cfg = det_build_config_default();
    cfg.order = 5;
    let s = unsafe { det_tree_build(data.as_ptr(), 100, 2, &cfg, &mut tree) };
    assert_eq!(s, DetStatus::InvalidArgument);
    assert!(last_error().contains("order"));
    assert!(tree.is_null());

    let mut dims = 0;
    assert_eq!(
        unsafe { det_tree_dims(ptr::null(), &mut dims) },
        DetStatus::NullPointer
    );
    unsafe { det_tree_free(ptr::null_mut()) };
}

#[test]
fn constant_order_config() {
    let data = gaussian_like(2000);
    let mut cfg = det_build_config_default();
    cfg.order = DetOrder::Constant as i32;
    cfg.fit_test = DetFitTest::HalfMass as i32;
    cfg.pairwise_independence = 0;
    let mut tree = ptr::null_mut();
    assert_eq!(
        unsafe { det_tree_build(data.as_ptr(), 2000, 2, &cfg, &mut tree) },
        DetStatus::Ok
    );
    unsafe { det_tree_free(tree) };
}
