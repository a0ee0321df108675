//! C interface to `glocalx`.
//!
//! Objects cross the boundary as opaque handles released with their matching
//! `*_free` function. Every fallible call returns a [`GlxStatus`]; on failure
//! [`glx_last_error`] describes the problem for the calling thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`glx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use glocalx::aggregator::singleton_theories;
use glocalx::harness::{load_csv, rules_from_json, rules_to_json};
use glocalx::{run, Dataset, Error, ExplanationTheory, FeatureSchema, RunConfig, TheoryClassifier, TheoryId};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlxStatus {
    Ok = 0,
    Error = 1,
    InvalidInput = 2,
    Oracle = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Merge settings. `alpha == 0`, a negative or NaN `alpha_q` and
/// `max_iterations == 0` mean "unset".
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GlxRunConfig {
    pub batch_size: usize,
    pub alpha: usize,
    pub alpha_q: f64,
    pub seed: u64,
    pub max_iterations: usize,
}

pub struct GlxSchema(Arc<FeatureSchema>);

pub struct GlxDataset(Dataset);

pub struct GlxTheory {
    schema: Arc<FeatureSchema>,
    theory: ExplanationTheory,
}

pub struct GlxClassifier {
    schema: Arc<FeatureSchema>,
    classifier: TheoryClassifier,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> GlxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            GlxStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            GlxStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            match e.exit_code() {
                2 => GlxStatus::InvalidInput,
                3 => GlxStatus::Oracle,
                _ => GlxStatus::Error,
            }
        }
        Err(_) => {
            set_last_error("internal panic");
            GlxStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidInput(format!("{what} is not valid UTF-8"))))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no interior nul").into_raw()
}

fn schema_mismatch() -> Failure {
    Failure::Lib(Error::InvalidInput("handles were built from different schemas".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn glx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, released once.
#[no_mangle]
pub unsafe extern "C" fn glx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn glx_schema_from_json(json: *const c_char, out: *mut *mut GlxSchema) -> GlxStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let schema = FeatureSchema::from_json(text(json, "json")?)?;
        put(out, GlxSchema(Arc::new(schema)));
        Ok(())
    })
}

/// # Safety
/// `schema` must be null or a live handle, released once.
#[no_mangle]
pub unsafe extern "C" fn glx_schema_free(schema: *mut GlxSchema) {
    if !schema.is_null() {
        drop(Box::from_raw(schema));
    }
}

/// Number of features, 0 for a null handle.
///
/// # Safety
/// `schema` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glx_schema_len(schema: *const GlxSchema) -> usize {
    schema.as_ref().map_or(0, |s| s.0.len())
}

/// Loads a labelled CSV file (feature columns in schema order, then `bb_label`
/// and optionally `true_label`).
///
/// # Safety
/// Pointers must be valid; `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn glx_dataset_load_csv(
    schema: *const GlxSchema,
    path: *const c_char,
    out: *mut *mut GlxDataset,
) -> GlxStatus {
    guard(|| {
        let schema = deref(schema, "schema")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let data = load_csv(text(path, "path")?, schema.0.clone())?;
        put(out, GlxDataset(data));
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glx_dataset_len(data: *const GlxDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `data` must be null or a live handle, released once.
#[no_mangle]
pub unsafe extern "C" fn glx_dataset_free(data: *mut GlxDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Parses a JSON rule file.
///
/// # Safety
/// Pointers must be valid; `json` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn glx_theory_from_json(
    schema: *const GlxSchema,
    json: *const c_char,
    out: *mut *mut GlxTheory,
) -> GlxStatus {
    guard(|| {
        let schema = deref(schema, "schema")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let rules = rules_from_json(text(json, "json")?, &schema.0)?;
        let theory = ExplanationTheory::new(TheoryId(0), rules)?;
        put(out, GlxTheory { schema: schema.0.clone(), theory });
        Ok(())
    })
}

/// Serializes the rules in rule-file format. Free the result with
/// [`glx_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glx_theory_to_json(theory: *const GlxTheory, out: *mut *mut c_char) -> GlxStatus {
    guard(|| {
        let t = deref(theory, "theory")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = owned_string(rules_to_json(t.theory.rules(), &t.schema));
        Ok(())
    })
}

/// # Safety
/// `theory` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glx_theory_len(theory: *const GlxTheory) -> usize {
    theory.as_ref().map_or(0, |t| t.theory.len())
}

/// # Safety
/// `theory` must be null or a live handle, released once.
#[no_mangle]
pub unsafe extern "C" fn glx_theory_free(theory: *mut GlxTheory) {
    if !theory.is_null() {
        drop(Box::from_raw(theory));
    }
}

/// Defaults: batch size 128, no filter, seed 0, no iteration cap.
#[no_mangle]
pub extern "C" fn glx_run_config_default() -> GlxRunConfig {
    let d = RunConfig::default();
    GlxRunConfig { batch_size: d.batch_size, alpha: 0, alpha_q: -1.0, seed: d.seed, max_iterations: 0 }
}

impl From<&GlxRunConfig> for RunConfig {
    fn from(c: &GlxRunConfig) -> Self {
        RunConfig {
            batch_size: c.batch_size,
            alpha: (c.alpha > 0).then_some(c.alpha),
            alpha_q: (c.alpha_q >= 0.0).then_some(c.alpha_q),
            seed: c.seed,
            max_iterations: (c.max_iterations > 0).then_some(c.max_iterations),
        }
    }
}

/// Merges every rule of `local_rules` (each as its own starting theory) using
/// `data`. A null `config` uses [`glx_run_config_default`]. When
/// `out_dendrogram` is non-null it receives the merge history as JSON.
///
/// # Safety
/// Pointers must be valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn glx_run(
    local_rules: *const GlxTheory,
    data: *const GlxDataset,
    config: *const GlxRunConfig,
    out_theory: *mut *mut GlxTheory,
    out_dendrogram: *mut *mut c_char,
) -> GlxStatus {
    guard(|| {
        let rules = deref(local_rules, "local_rules")?;
        let data = deref(data, "data")?;
        if out_theory.is_null() {
            return Err(Failure::Null("out_theory"));
        }
        if *rules.schema != *data.0.schema() {
            return Err(schema_mismatch());
        }
        let cfg = config.as_ref().map_or_else(|| RunConfig::from(&glx_run_config_default()), RunConfig::from);
        let out = run(singleton_theories(rules.theory.rules().to_vec()), &data.0, &cfg)?;
        if !out_dendrogram.is_null() {
            *out_dendrogram = owned_string(out.dendrogram.to_json());
        }
        put(out_theory, GlxTheory { schema: rules.schema.clone(), theory: out.theory });
        Ok(())
    })
}

/// Scores the rules on `reference`, whose majority label also becomes the
/// default for uncovered rows.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glx_classifier_build(
    theory: *const GlxTheory,
    reference: *const GlxDataset,
    out: *mut *mut GlxClassifier,
) -> GlxStatus {
    guard(|| {
        let t = deref(theory, "theory")?;
        let reference = deref(reference, "reference")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if *t.schema != *reference.0.schema() {
            return Err(schema_mismatch());
        }
        let classifier = TheoryClassifier::build(t.theory.clone(), &reference.0)?;
        put(out, GlxClassifier { schema: t.schema.clone(), classifier });
        Ok(())
    })
}

/// Predicts the label index (0 or 1) of one row of `len` values in schema
/// order; categorical values are category indices.
///
/// # Safety
/// `row` must point to `len` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn glx_classifier_predict(
    clf: *const GlxClassifier,
    row: *const f64,
    len: usize,
    out_label: *mut u8,
) -> GlxStatus {
    guard(|| {
        let c = deref(clf, "classifier")?;
        if row.is_null() {
            return Err(Failure::Null("row"));
        }
        if out_label.is_null() {
            return Err(Failure::Null("out_label"));
        }
        let row = std::slice::from_raw_parts(row, len);
        c.schema.check_row(row)?;
        *out_label = c.classifier.predict(row);
        Ok(())
    })
}

/// Share of `data` rows whose prediction matches the stored black-box label.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn glx_classifier_fidelity(
    clf: *const GlxClassifier,
    data: *const GlxDataset,
    out: *mut f64,
) -> GlxStatus {
    guard(|| {
        let c = deref(clf, "classifier")?;
        let data = deref(data, "data")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if *c.schema != *data.0.schema() {
            return Err(schema_mismatch());
        }
        *out = c.classifier.fidelity(&data.0);
        Ok(())
    })
}

/// # Safety
/// `clf` must be null or a live handle, released once.
#[no_mangle]
pub unsafe extern "C" fn glx_classifier_free(clf: *mut GlxClassifier) {
    if !clf.is_null() {
        drop(Box::from_raw(clf));
    }
}
