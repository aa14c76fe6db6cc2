use std::ffi::{CStr, CString};
use std::ptr;

use smapy::evaluation::{make_synthetic, SyntheticKind};
use smapy_ffi::*;

fn params() -> SmapyParams {
    SmapyParams {
        r: 0.1,
        has_overlap: true,
        overlap: 0.5,
        exclusion: false,
        alpha: 0.1,
        f_plus: 1.0,
        f_minus: 1.0,
    }
}

fn learner() -> SmapyLearner {
    SmapyLearner {
        kind: SmapyLearnerKind::Pa1,
        alpha_reg: 0.0,
        penalty: SmapyPenalty::L2,
        l1_ratio: 0.0,
        c: 1.0,
    }
}

fn new_model() -> *mut SmapyModel {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { smapy_model_new(&params(), &learner(), 2, &mut m) },
        SmapyStatus::Ok
    );
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = smapy_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn predict(m: *const SmapyModel, x: &[f64]) -> Result<String, SmapyStatus> {
    let mut out = ptr::null_mut();
    let status = unsafe { smapy_model_predict(m, x.as_ptr(), x.len(), &mut out) };
    if status != SmapyStatus::Ok {
        return Err(status);
    }
    let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { smapy_string_free(out) };
    Ok(s)
}

#[test]
fn streaming_learn_predict_save_load() {
    let data = make_synthetic(SyntheticKind::Blobs, 300, 0.3, 4).unwrap();
    let m = new_model();
    assert_eq!(predict(m, &[0.0, 0.0]), Err(SmapyStatus::NoAgents));
    assert!(!last_error().is_empty());

    for (x, y) in data.features.iter().zip(&data.labels) {
        let label = CString::new(y.as_str()).unwrap();
        assert_eq!(
            unsafe { smapy_model_explore(m, x.as_ptr(), x.len(), label.as_ptr()) },
            SmapyStatus::Ok
        );
    }
    assert!(smapy_last_error_message().is_null());
    let mut n = 0usize;
    assert_eq!(unsafe { smapy_model_agent_count(m, &mut n) }, SmapyStatus::Ok);
    assert!(n >= 1);
    let mut dim = 0usize;
    assert_eq!(unsafe { smapy_model_dim(m, &mut dim) }, SmapyStatus::Ok);
    assert_eq!(dim, 2);

    let correct = data
        .features
        .iter()
        .zip(&data.labels)
        .filter(|(x, y)| predict(m, x).unwrap() == **y)
        .count();
    assert!(correct as f64 / data.len() as f64 > 0.8);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { smapy_model_save(m, path.as_ptr()) }, SmapyStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { smapy_model_load(path.as_ptr(), &mut loaded) }, SmapyStatus::Ok);
    for x in &data.features {
        assert_eq!(predict(loaded, x), predict(m, x));
    }
    unsafe {
        smapy_model_free(loaded);
        smapy_model_free(m);
    }
}

#[test]
fn errors_are_reported_as_codes() {
    let m = new_model();
    let label = CString::new("a").unwrap();
    let x = [0.1, 0.2, 0.3];
    assert_eq!(
        unsafe { smapy_model_explore(m, x.as_ptr(), 3, label.as_ptr()) },
        SmapyStatus::Data
    );
    assert!(last_error().contains('2'));
    let nan = [f64::NAN, 0.0];
    assert_eq!(
        unsafe { smapy_model_explore(m, nan.as_ptr(), 2, label.as_ptr()) },
        SmapyStatus::Data
    );
    assert_eq!(
        unsafe { smapy_model_explore(m, ptr::null(), 2, label.as_ptr()) },
        SmapyStatus::NullPointer
    );
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { smapy_model_explore(m, x.as_ptr(), 2, bad.as_ptr().cast()) },
        SmapyStatus::InvalidUtf8
    );

    let mut bad_params = params();
    bad_params.r = -1.0;
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { smapy_model_new(&bad_params, &learner(), 2, &mut out) },
        SmapyStatus::Config
    );
    assert!(out.is_null());
    let mut bad_learner = learner();
    bad_learner.c = 0.0;
    assert_eq!(
        unsafe { smapy_model_new(&params(), &bad_learner, 2, &mut out) },
        SmapyStatus::Config
    );

    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { smapy_model_load(missing.as_ptr(), &mut out) }, SmapyStatus::Io);
    assert_eq!(
        unsafe { smapy_model_load(ptr::null(), &mut out) },
        SmapyStatus::NullPointer
    );
    let mut n = 0usize;
    assert_eq!(
        unsafe { smapy_model_agent_count(ptr::null(), &mut n) },
        SmapyStatus::NullPointer
    );
    unsafe {
        smapy_model_free(ptr::null_mut());
        smapy_string_free(ptr::null_mut());
        smapy_model_free(m);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/smapy.h")).unwrap();
    for name in [
        "smapy_model_new",
        "smapy_model_load",
        "smapy_model_save",
        "smapy_model_free",
        "smapy_model_dim",
        "smapy_model_agent_count",
        "smapy_model_explore",
        "smapy_model_predict",
        "smapy_string_free",
        "smapy_last_error_message",
        "typedef struct SmapyModel SmapyModel",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"smapy.h\"\n\
         int main(void) {\n\
           SmapyParams p = {0.1, true, 0.5, false, 0.1, 1.0, 1.0};\n\
           SmapyLearner l = {SMAPY_LEARNER_KIND_PA1, 0.0, SMAPY_PENALTY_L2, 0.5, 1.0};\n\
           SmapyModel *m = 0;\n\
           SmapyStatus s = smapy_model_new(&p, &l, 2, &m);\n\
           smapy_model_free(m);\n\
           return s == SMAPY_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
