//! C ABI for the smapy classifier.
//!
//! Every function returns a [`SmapyStatus`]; on failure a description is
//! available from [`smapy_last_error_message`] on the same thread. Models are
//! opaque `SmapyModel` handles released with [`smapy_model_free`]. Strings
//! handed out by the library are released with [`smapy_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smapy::model_file::{ModelMeta, Provenance};
use smapy::{
    Error, LearnerKind, LearnerSettings, LoadedModel, ModelFile, Penalty, ScoreNormalization, SystemParams, SystemState,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmapyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Invalid parameters or learner settings.
    Config = 3,
    /// Bad input values, dimension mismatch or unusable model contents.
    Data = 4,
    Io = 5,
    /// Prediction requested from a model without agents.
    NoAgents = 6,
    /// The operation does not apply to this kind of model.
    Unsupported = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmapyLearnerKind {
    Logistic = 0,
    LinearSvm = 1,
    Pa1 = 2,
    Pa2 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmapyPenalty {
    L1 = 0,
    L2 = 1,
    ElasticNet = 2,
}

/// Learner settings. `alpha_reg`, `penalty` and `l1_ratio` apply to
/// logistic/linear SVM, `c` to the passive-aggressive kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmapyLearner {
    pub kind: SmapyLearnerKind,
    pub alpha_reg: f64,
    pub penalty: SmapyPenalty,
    pub l1_ratio: f64,
    pub c: f64,
}

/// Agent system parameters. `overlap` is ignored unless `has_overlap`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmapyParams {
    pub r: f64,
    pub has_overlap: bool,
    pub overlap: f64,
    pub exclusion: bool,
    pub alpha: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

/// Opaque model handle.
pub struct SmapyModel {
    inner: LoadedModel,
    meta: ModelMeta,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmapyStatus {
    match e {
        Error::Config(_) => SmapyStatus::Config,
        Error::Io { .. } => SmapyStatus::Io,
        Error::NoAgents => SmapyStatus::NoAgents,
        _ => SmapyStatus::Data,
    }
}

struct Fail(SmapyStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SmapyStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmapyStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SmapyStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SmapyStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SmapyStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail(SmapyStatus::NullPointer, "`features` is null".into()));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn model_ref<'a>(p: *const SmapyModel) -> Result<&'a SmapyModel, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(SmapyStatus::NullPointer, "`model` is null".into()))
}

fn learner_settings(l: &SmapyLearner) -> LearnerSettings {
    let kind = match l.kind {
        SmapyLearnerKind::Logistic => LearnerKind::Logistic,
        SmapyLearnerKind::LinearSvm => LearnerKind::LinearSvm,
        SmapyLearnerKind::Pa1 => LearnerKind::Pa1,
        SmapyLearnerKind::Pa2 => LearnerKind::Pa2,
    };
    if kind.is_passive_aggressive() {
        return LearnerSettings {
            kind: Some(kind),
            c: Some(l.c),
            ..Default::default()
        };
    }
    let penalty = match l.penalty {
        SmapyPenalty::L1 => Penalty::L1,
        SmapyPenalty::L2 => Penalty::L2,
        SmapyPenalty::ElasticNet => Penalty::ElasticNet,
    };
    LearnerSettings {
        kind: Some(kind),
        alpha_reg: Some(l.alpha_reg),
        penalty: Some(penalty),
        l1_ratio: (penalty == Penalty::ElasticNet).then_some(l.l1_ratio),
        c: None,
    }
}

/// Create an empty agent system for streaming use over `dim` features.
/// Feature extrema are tracked online.
///
/// # Safety
/// `params` and `learner` must point to valid structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_new(
    params: *const SmapyParams,
    learner: *const SmapyLearner,
    dim: usize,
    out: *mut *mut SmapyModel,
) -> SmapyStatus {
    guard(|| {
        let (Some(p), Some(l)) = (params.as_ref(), learner.as_ref()) else {
            return Err(Fail(SmapyStatus::NullPointer, "`params` or `learner` is null".into()));
        };
        if out.is_null() {
            return Err(Fail(SmapyStatus::NullPointer, "`out` is null".into()));
        }
        let params = SystemParams {
            r: p.r,
            overlap: p.has_overlap.then_some(p.overlap),
            exclusion: p.exclusion,
            normalization: ScoreNormalization::Sigmoid,
            alpha: p.alpha,
            f_plus: p.f_plus,
            f_minus: p.f_minus,
        };
        let config = learner_settings(l).validate()?;
        let state = SystemState::new(params, config, dim)?;
        let meta = ModelMeta {
            feature_names: (0..dim).map(|j| format!("x{}", j + 1)).collect(),
            label_name: "label".into(),
            classes: Vec::new(),
            provenance: Provenance {
                seed: 0,
                dataset_digest: String::new(),
                cycles: 0,
            },
        };
        *out = Box::into_raw(Box::new(SmapyModel {
            inner: LoadedModel::Smapy(state),
            meta,
        }));
        Ok(())
    })
}

/// Load a model file written by `smapy train` or [`smapy_model_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_load(path: *const c_char, out: *mut *mut SmapyModel) -> SmapyStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(Fail(SmapyStatus::NullPointer, "`out` is null".into()));
        }
        let file = ModelFile::load(Path::new(path))?;
        let meta = ModelMeta {
            feature_names: file.feature_names.clone(),
            label_name: file.label_name.clone(),
            classes: file.classes.clone(),
            provenance: file.provenance.clone(),
        };
        let inner = file.to_model()?;
        *out = Box::into_raw(Box::new(SmapyModel { inner, meta }));
        Ok(())
    })
}

/// Write the model to `path`. Only agent systems and linear models loaded
/// from files can be saved.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_save(model: *const SmapyModel, path: *const c_char) -> SmapyStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = str_arg(path, "path")?;
        let file = match &m.inner {
            LoadedModel::Smapy(state) => {
                let mut meta = m.meta.clone();
                meta.provenance.cycles = state.cycle();
                let mut classes: Vec<String> = state
                    .agents()
                    .iter()
                    .flat_map(|a| a.model.classes().iter().cloned())
                    .chain(meta.classes.iter().cloned())
                    .collect();
                classes.sort();
                classes.dedup();
                meta.classes = classes;
                ModelFile::from_system(state, meta)
            }
            LoadedModel::Linear(b) => ModelFile::from_baseline(b, m.meta.clone()),
        };
        file.save(Path::new(path))?;
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_free(model: *mut SmapyModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input features.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_dim(model: *const SmapyModel, out: *mut usize) -> SmapyStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(Fail(SmapyStatus::NullPointer, "`out` is null".into()));
        }
        *out = m.inner.dim();
        Ok(())
    })
}

/// Number of Context agents (0 for linear models).
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_agent_count(model: *const SmapyModel, out: *mut usize) -> SmapyStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(Fail(SmapyStatus::NullPointer, "`out` is null".into()));
        }
        *out = match &m.inner {
            LoadedModel::Smapy(s) => s.agents().len(),
            LoadedModel::Linear(_) => 0,
        };
        Ok(())
    })
}

/// One exploration (learning) cycle on a labelled observation.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `len` doubles and
/// `label` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_explore(
    model: *mut SmapyModel,
    features: *const f64,
    len: usize,
    label: *const c_char,
) -> SmapyStatus {
    guard(|| {
        let m = model
            .as_mut()
            .ok_or_else(|| Fail(SmapyStatus::NullPointer, "`model` is null".into()))?;
        let x = slice_arg(features, len)?;
        let label = str_arg(label, "label")?;
        match &mut m.inner {
            LoadedModel::Smapy(state) => {
                state.explore(x, label)?;
                Ok(())
            }
            LoadedModel::Linear(_) => Err(Fail(
                SmapyStatus::Unsupported,
                "linear models do not learn through this interface".into(),
            )),
        }
    })
}

/// Classify one observation. The label is returned as a new string that the
/// caller releases with [`smapy_string_free`].
///
/// # Safety
/// `model` must be a live handle, `features` must point to `len` doubles and
/// `out_label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smapy_model_predict(
    model: *const SmapyModel,
    features: *const f64,
    len: usize,
    out_label: *mut *mut c_char,
) -> SmapyStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = slice_arg(features, len)?;
        if out_label.is_null() {
            return Err(Fail(SmapyStatus::NullPointer, "`out_label` is null".into()));
        }
        let label = m.inner.predict(x)?;
        let c = CString::new(label).map_err(|_| Fail(SmapyStatus::Data, "label contains NUL".into()))?;
        *out_label = c.into_raw();
        Ok(())
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smapy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn smapy_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
