use hybridyn_ffi::*;
use std::ffi::CString;
use std::ptr;

const BINS: HybGrid = HybGrid { q_min: -6.0, q_max: 6.0, p_min: -6.0, p_max: 6.0, n_q: 32, n_p: 32 };

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { hyb_last_error(buf.as_mut_ptr(), buf.len()) };
    let s: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(s).unwrap()
}

struct Op(*mut HybOperator);

impl Drop for Op {
    fn drop(&mut self) {
        unsafe { hyb_operator_free(self.0) }
    }
}

fn candidate_operator(model: *const HybModel, which: u32, t: f64) -> Op {
    let mut s = ptr::null_mut();
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(hyb_candidate(model, which, t, &mut s), HybStatus::Ok);
        assert_eq!(hyb_assemble(s, BINS, &mut a), HybStatus::Ok);
        hyb_state_free(s);
    }
    Op(a)
}

fn value(f: unsafe extern "C" fn(*const HybOperator, *mut f64) -> HybStatus, op: &Op) -> f64 {
    let mut x = f64::NAN;
    assert_eq!(unsafe { f(op.0, &mut x) }, HybStatus::Ok);
    x
}

#[test]
fn candidate_spectra() {
    let m = hyb_model_golden();
    let pure = candidate_operator(m, 7, 1.0);
    let mixed = candidate_operator(m, 9, 1.0);
    let mid = candidate_operator(m, 10, 1.0);
    assert_eq!(unsafe { hyb_operator_dim(pure.0) }, 2 * 32 * 32);
    assert!((value(hyb_purity, &pure) - 1.0).abs() < 1e-10);
    assert!(value(hyb_idempotency_residual, &pure) < 1e-10);
    assert!((value(hyb_purity, &mixed) - 0.5).abs() < 1e-9);
    assert!((value(hyb_linear_entropy, &mixed) - 0.5).abs() < 1e-9);
    assert!(value(hyb_min_eigenvalue, &mixed) >= -1e-10);
    assert!((value(hyb_min_eigenvalue, &mid) + 0.5).abs() < 1e-10);
    assert!(value(hyb_idempotency_residual, &mid) >= 0.1);

    let (mut s, mut ok) = (0.0, true);
    unsafe {
        assert_eq!(hyb_von_neumann_entropy(mixed.0, &mut s, &mut ok), HybStatus::Ok);
        assert!(ok && (s - 2f64.ln()).abs() < 1e-12);
        assert_eq!(hyb_von_neumann_entropy(mid.0, &mut s, &mut ok), HybStatus::Ok);
        assert!(!ok && s < 0.0);
        hyb_model_free(m);
    }
}

#[test]
fn residual_verdicts() {
    let m = hyb_model_golden();
    let mut r = [0.0; 3];
    unsafe {
        for (k, which) in [7, 9, 10].into_iter().enumerate() {
            assert_eq!(hyb_residual(m, which, 1.0, 1e-4, &mut r[k]), HybStatus::Ok);
        }
        assert_eq!(hyb_residual(m, 9, 0.05, 1e-4, &mut r[1]), HybStatus::Separation);
        assert!(last_error().contains("earliest"));
        hyb_model_free(m);
    }
    assert!(r[0] >= 1e-4);
    assert!(r[2] <= 1e-6);
}

#[test]
fn custom_model_and_errors() {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let (h, v, c0) = ([0.0, 0.5], [2.0, -2.0], [a, 0.0, 0.0, a]);
    let (h_cm, v_cm) = ([0.0, 0.0, 0.0, 0.5, 0.0, 0.5], [0.0, 1.0]);
    let mut m = ptr::null_mut();
    unsafe {
        let st = hyb_model_new(2, h.as_ptr(), v.as_ptr(), c0.as_ptr(), h_cm.as_ptr(), 6, v_cm.as_ptr(), 2, 1.0, 0.0, 1.0, 0.0, &mut m);
        assert_eq!(st, HybStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(hyb_candidate(m, 9, 0.5, &mut s), HybStatus::Ok);
        assert_eq!(hyb_state_dim(s), 2);
        let mut tr = 0.0;
        assert_eq!(hyb_state_trace(s, &mut tr), HybStatus::Ok);
        assert!((tr - 1.0).abs() < 1e-12);
        hyb_state_free(s);
        assert_eq!(hyb_candidate(m, 8, 0.5, &mut s), HybStatus::InvalidArgument);
        hyb_model_free(m);

        let bad = [1.0, 0.0, 1.0, 0.0];
        let st = hyb_model_new(2, h.as_ptr(), v.as_ptr(), bad.as_ptr(), h_cm.as_ptr(), 6, v_cm.as_ptr(), 2, 1.0, 0.0, 1.0, 0.0, &mut m);
        assert_eq!(st, HybStatus::InvalidModel);
        assert!(last_error().contains("expected 1"));
        assert_eq!(hyb_state_trace(ptr::null(), &mut tr), HybStatus::NullPointer);
        assert_eq!(hyb_operator_dim(ptr::null()), 0);
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.txt").to_str().unwrap()).unwrap();
    let m = hyb_model_golden();
    let (mut s, mut back) = (ptr::null_mut(), ptr::null_mut());
    let mut grid = HybGrid { q_min: 0.0, q_max: 0.0, p_min: 0.0, p_max: 0.0, n_q: 0, n_p: 0 };
    let mut t = 0.0;
    unsafe {
        assert_eq!(hyb_candidate(m, 10, 1.0, &mut s), HybStatus::Ok);
        assert_eq!(hyb_snapshot_write(s, BINS, 1.0, 1.0, path.as_ptr()), HybStatus::Ok);
        assert_eq!(hyb_snapshot_read(path.as_ptr(), &mut back, &mut grid, &mut t), HybStatus::Ok);
        assert_eq!(grid, BINS);
        assert_eq!(t, 1.0);
        let mut a = ptr::null_mut();
        assert_eq!(hyb_assemble(back, grid, &mut a), HybStatus::Ok);
        let op = Op(a);
        assert!((value(hyb_min_eigenvalue, &op) + 0.5).abs() < 1e-10);
        let missing = CString::new(dir.path().join("none.txt").to_str().unwrap()).unwrap();
        assert_eq!(hyb_snapshot_read(missing.as_ptr(), &mut back, ptr::null_mut(), ptr::null_mut()), HybStatus::Io);
        hyb_state_free(s);
        hyb_model_free(m);
    }
}

#[test]
fn identity_and_messages() {
    let mut r = 1.0;
    unsafe {
        assert_eq!(hyb_identity_check(3, 50, 7, &mut r), HybStatus::Ok);
        assert!(r <= 1e-12);
        assert_eq!(hyb_identity_check(0, 1, 0, &mut r), HybStatus::InvalidModel);
        let need = hyb_last_error(ptr::null_mut(), 0);
        assert!(need > 0);
        let mut small = [0 as std::ffi::c_char; 4];
        assert_eq!(hyb_last_error(small.as_mut_ptr(), 4), need);
        assert_eq!(small[3], 0);
    }
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hybridyn.h")).unwrap();
    for name in ["hyb_model_golden", "hyb_candidate", "hyb_assemble", "hyb_residual", "hyb_snapshot_read", "HYB_STATUS_PANIC", "HybGrid"] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"hybridyn.h\"\nint main(void) {\n  HybModel *m = hyb_model_golden();\n  double r;\n  \
         HybStatus s = hyb_residual(m, 9, 1.0, 1e-4, &r);\n  hyb_model_free(m);\n  return s == HYB_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output();
    match out {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
