//! C ABI over the biaslens scoring and agreement primitives.
//!
//! Every function communicates failure through [`BiaslensStatus`] and writes
//! results through out-pointers, so callers never need to interpret Rust
//! panics or unwinding. Aggregation state lives behind the opaque
//! [`BiaslensCompass`] handle; everything else is a pure function over plain
//! C types.

use std::ffi::{c_char, CStr};
use std::slice;

use biaslens::model::Axis;
use biaslens::stance::{
    aggregate_compass, bias_report, discretize, has_tied_max, stance_score, ScoredStatement,
    StanceConfidence, StanceError, StanceScore, Verdict,
};
use biaslens::stats::{bootstrap_stance, cohen_kappa, fleiss_kappa, AnnotationMatrix, StatsError};

/// Result of every call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiaslensStatus {
    /// The call succeeded and every out-pointer was written.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was outside its documented domain.
    InvalidArgument = 2,
    /// The input was too small or one-sided for the statistic.
    InsufficientData = 3,
    /// Chance agreement is exactly 1, so kappa is undefined.
    Degenerate = 4,
}

/// Classifier confidence over the four agreement levels. Components lie in
/// `[0, 1]` and need not sum to one.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BiaslensConfidence {
    pub strongly_agree: f64,
    pub agree: f64,
    pub disagree: f64,
    pub strongly_disagree: f64,
}

/// Compass position with its distance metrics and verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BiaslensBiasReport {
    pub economic: f64,
    pub social: f64,
    pub euclidean: f64,
    pub manhattan: f64,
    pub chebyshev: f64,
    /// 1 when the position counts as biased, 0 when neutral.
    pub biased: u8,
}

/// Bootstrap interval for a mean stance score.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BiaslensInterval {
    pub mean: f64,
    pub error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Accumulates scored statements for compass aggregation. Create with
/// `biaslens_compass_new`, populate with `biaslens_compass_add`, summarize
/// with `biaslens_compass_report`, release with `biaslens_compass_free`.
pub struct BiaslensCompass {
    statements: Vec<ScoredStatement>,
}

fn stance_status(error: &StanceError) -> BiaslensStatus {
    match error {
        StanceError::EmptyInput | StanceError::MissingAxis(_) => BiaslensStatus::InsufficientData,
        _ => BiaslensStatus::InvalidArgument,
    }
}

fn stats_status(error: &StatsError) -> BiaslensStatus {
    match error {
        StatsError::DegenerateChance => BiaslensStatus::Degenerate,
        StatsError::InsufficientData { .. }
        | StatsError::EmptyInput
        | StatsError::TooFewRaters(_)
        | StatsError::TooFewVariants { .. } => BiaslensStatus::InsufficientData,
        _ => BiaslensStatus::InvalidArgument,
    }
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn biaslens_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string contains no interior NUL"),
    };
    VERSION.as_ptr()
}

/// Returns a static description of a status code.
#[no_mangle]
pub extern "C" fn biaslens_status_message(status: BiaslensStatus) -> *const c_char {
    let message: &CStr = match status {
        BiaslensStatus::Ok => c"ok",
        BiaslensStatus::NullArgument => c"a required pointer argument was null",
        BiaslensStatus::InvalidArgument => c"an argument was outside its documented domain",
        BiaslensStatus::InsufficientData => c"not enough data for the statistic",
        BiaslensStatus::Degenerate => c"chance agreement is 1, kappa is undefined",
    };
    message.as_ptr()
}

/// Scores one classified statement, writing the signed score in `[-10, 10]`
/// and whether the confidence maximum was tied across levels.
///
/// # Safety
/// `confidence`, `out_score`, and `out_tied` must be valid, aligned pointers.
#[no_mangle]
pub unsafe extern "C" fn biaslens_stance_score(
    confidence: *const BiaslensConfidence,
    out_score: *mut f64,
    out_tied: *mut u8,
) -> BiaslensStatus {
    if confidence.is_null() || out_score.is_null() || out_tied.is_null() {
        return BiaslensStatus::NullArgument;
    }
    let raw = *confidence;
    let parsed = match StanceConfidence::new(
        raw.strongly_agree,
        raw.agree,
        raw.disagree,
        raw.strongly_disagree,
    ) {
        Ok(parsed) => parsed,
        Err(error) => return stance_status(&error),
    };
    *out_score = stance_score(&parsed).value();
    *out_tied = u8::from(has_tied_max(&parsed));
    BiaslensStatus::Ok
}

/// Maps a score onto the ordinal labels 0 (strongly disagree) through
/// 3 (strongly agree) using threshold `tau`.
///
/// # Safety
/// `out_label` must be a valid, aligned pointer.
#[no_mangle]
pub unsafe extern "C" fn biaslens_discretize(
    score: f64,
    tau: f64,
    out_label: *mut u8,
) -> BiaslensStatus {
    if out_label.is_null() {
        return BiaslensStatus::NullArgument;
    }
    let score = match StanceScore::new(score) {
        Ok(score) => score,
        Err(error) => return stance_status(&error),
    };
    match discretize(score, tau) {
        Ok(ordinal) => {
            *out_label = ordinal.label();
            BiaslensStatus::Ok
        }
        Err(error) => stance_status(&error),
    }
}

/// Allocates an empty compass accumulator. Never returns null; release the
/// handle with `biaslens_compass_free`.
#[no_mangle]
pub extern "C" fn biaslens_compass_new() -> *mut BiaslensCompass {
    Box::into_raw(Box::new(BiaslensCompass {
        statements: Vec::new(),
    }))
}

/// Releases a compass handle. Accepts null as a no-op.
///
/// # Safety
/// `handle` must be null or a pointer returned by `biaslens_compass_new`
/// that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn biaslens_compass_free(handle: *mut BiaslensCompass) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Adds one scored statement to the accumulator. `axis` is 0 for economic
/// and 1 for social; `direction` must be 1 or -1; `score` lies in
/// `[-10, 10]`.
///
/// # Safety
/// `handle` must be a live pointer from `biaslens_compass_new`.
#[no_mangle]
pub unsafe extern "C" fn biaslens_compass_add(
    handle: *mut BiaslensCompass,
    id: u32,
    axis: u8,
    direction: i8,
    score: f64,
) -> BiaslensStatus {
    let Some(compass) = handle.as_mut() else {
        return BiaslensStatus::NullArgument;
    };
    let axis = match axis {
        0 => Axis::Economic,
        1 => Axis::Social,
        _ => return BiaslensStatus::InvalidArgument,
    };
    if direction != 1 && direction != -1 {
        return BiaslensStatus::InvalidArgument;
    }
    let score = match StanceScore::new(score) {
        Ok(score) => score,
        Err(error) => return stance_status(&error),
    };
    compass.statements.push(ScoredStatement {
        id,
        axis,
        direction,
        score,
    });
    BiaslensStatus::Ok
}

/// Aggregates the accumulated statements into a compass position with
/// distance metrics. Requires at least one statement on each axis.
///
/// # Safety
/// `handle` must be a live pointer from `biaslens_compass_new` and `out`
/// a valid, aligned pointer.
#[no_mangle]
pub unsafe extern "C" fn biaslens_compass_report(
    handle: *const BiaslensCompass,
    out: *mut BiaslensBiasReport,
) -> BiaslensStatus {
    let Some(compass) = handle.as_ref() else {
        return BiaslensStatus::NullArgument;
    };
    if out.is_null() {
        return BiaslensStatus::NullArgument;
    }
    let report = match aggregate_compass(&compass.statements) {
        Ok(point) => bias_report(point),
        Err(error) => return stance_status(&error),
    };
    *out = BiaslensBiasReport {
        economic: report.point.economic(),
        social: report.point.social(),
        euclidean: report.euclidean,
        manhattan: report.manhattan,
        chebyshev: report.chebyshev,
        biased: u8::from(report.verdict == Verdict::Biased),
    };
    BiaslensStatus::Ok
}

/// Fleiss' kappa over a row-major `items x categories` count matrix where
/// every row sums to the same rater count.
///
/// # Safety
/// `counts` must point to `items * categories` readable `uint32_t` values
/// and `out` must be a valid, aligned pointer.
#[no_mangle]
pub unsafe extern "C" fn biaslens_fleiss_kappa(
    counts: *const u32,
    items: usize,
    categories: usize,
    out: *mut f64,
) -> BiaslensStatus {
    if counts.is_null() || out.is_null() {
        return BiaslensStatus::NullArgument;
    }
    let Some(total) = items.checked_mul(categories) else {
        return BiaslensStatus::InvalidArgument;
    };
    if total == 0 {
        return BiaslensStatus::InsufficientData;
    }
    let flat = slice::from_raw_parts(counts, total);
    let rows: Vec<Vec<u32>> = flat.chunks(categories).map(<[u32]>::to_vec).collect();
    let matrix = match AnnotationMatrix::new(rows) {
        Ok(matrix) => matrix,
        Err(error) => return stats_status(&error),
    };
    match fleiss_kappa(&matrix) {
        Ok(kappa) => {
            *out = kappa;
            BiaslensStatus::Ok
        }
        Err(error) => stats_status(&error),
    }
}

/// Cohen's kappa between two raters' label sequences.
///
/// # Safety
/// `a` and `b` must each point to `len` readable `uint32_t` labels and
/// `out` must be a valid, aligned pointer.
#[no_mangle]
pub unsafe extern "C" fn biaslens_cohen_kappa(
    a: *const u32,
    b: *const u32,
    len: usize,
    out: *mut f64,
) -> BiaslensStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return BiaslensStatus::NullArgument;
    }
    if len == 0 {
        return BiaslensStatus::InsufficientData;
    }
    let a = slice::from_raw_parts(a, len);
    let b = slice::from_raw_parts(b, len);
    match cohen_kappa(a, b) {
        Ok(kappa) => {
            *out = kappa;
            BiaslensStatus::Ok
        }
        Err(error) => stats_status(&error),
    }
}

/// Percentile bootstrap interval for the mean of `len` stance scores. The
/// same seed always produces bit-identical intervals.
///
/// # Safety
/// `scores` must point to `len` readable doubles and `out` must be a valid,
/// aligned pointer.
#[no_mangle]
pub unsafe extern "C" fn biaslens_bootstrap_stance(
    scores: *const f64,
    len: usize,
    resamples: u32,
    seed: u64,
    level: f64,
    out: *mut BiaslensInterval,
) -> BiaslensStatus {
    if scores.is_null() || out.is_null() {
        return BiaslensStatus::NullArgument;
    }
    if len == 0 {
        return BiaslensStatus::InsufficientData;
    }
    let raw = slice::from_raw_parts(scores, len);
    let mut parsed = Vec::with_capacity(len);
    for value in raw {
        match StanceScore::new(*value) {
            Ok(score) => parsed.push(score),
            Err(error) => return stance_status(&error),
        }
    }
    match bootstrap_stance(&parsed, resamples, seed, level) {
        Ok(result) => {
            *out = BiaslensInterval {
                mean: result.mean,
                error: result.error,
                ci_low: result.ci_low,
                ci_high: result.ci_high,
            };
            BiaslensStatus::Ok
        }
        Err(error) => stats_status(&error),
    }
}
