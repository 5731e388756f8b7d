//! Weights, count correction, meaning bounds and the verdicts built on them.
//!
//! Everything here is a pure function of its arguments. Counts are exact
//! integers; every derived quantity is an `f64` that is never rounded
//! internally. Rounding only happens through [`DisplayPrecision`].

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ModelError;

/// Number of documents matching some query. Always in `0..=i64::MAX`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Count(u64);

impl Count {
    pub const ZERO: Count = Count(0);
    pub const MAX: Count = Count(i64::MAX as u64);

    pub fn new(value: u64) -> Result<Self, ModelError> {
        if value > Self::MAX.0 {
            return Err(ModelError::Overflow("count construction"));
        }
        Ok(Count(value))
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, other: Count) -> Result<Count, ModelError> {
        self.0
            .checked_add(other.0)
            .filter(|v| *v <= Self::MAX.0)
            .map(Count)
            .ok_or(ModelError::Overflow("count addition"))
    }

    pub fn checked_mul(self, k: u64) -> Result<Count, ModelError> {
        self.0
            .checked_mul(k)
            .filter(|v| *v <= Self::MAX.0)
            .map(Count)
            .ok_or(ModelError::Overflow("count multiplication"))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u64> for Count {
    type Error = ModelError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Count::new(value)
    }
}

impl From<u32> for Count {
    fn from(value: u32) -> Self {
        Count(u64::from(value))
    }
}

impl From<Count> for u64 {
    fn from(c: Count) -> u64 {
        c.0
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = u64::deserialize(deserializer)?;
        Count::new(raw).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The five raw integers behind one cell of a study table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCellCounts {
    /// Documents containing the concept pattern A.
    pub n_a: Count,
    /// Documents containing A and the exemplar X.
    pub n_ax: Count,
    /// Documents containing A and not X.
    pub n_a_not_x: Count,
    /// Documents containing X.
    pub n_x: Count,
    /// Size of the whole collection.
    pub n_www: Count,
}

impl RawCellCounts {
    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Result<Self, ModelError> {
        Ok(RawCellCounts {
            n_a: self.n_a.checked_mul(k)?,
            n_ax: self.n_ax.checked_mul(k)?,
            n_a_not_x: self.n_a_not_x.checked_mul(k)?,
            n_x: self.n_x.checked_mul(k)?,
            n_www: self.n_www.checked_mul(k)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeaningBoundClass {
    Attractive,
    Repulsive,
    Neutral,
}

impl fmt::Display for MeaningBoundClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeaningBoundClass::Attractive => "Attractive",
            MeaningBoundClass::Repulsive => "Repulsive",
            MeaningBoundClass::Neutral => "Neutral",
        })
    }
}

/// How an exemplar's weight for a conjunction compares with its weights for
/// the two constituent concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConjunctionVerdict {
    /// `w_ab <= w_a` and `w_ab <= w_b`.
    Classical,
    /// Only `w_ab > w_a`.
    OverextendedOnFirst,
    /// Only `w_ab > w_b`.
    OverextendedOnSecond,
    /// Double overextension: `w_ab` exceeds both.
    GuppyEffect,
}

impl fmt::Display for ConjunctionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConjunctionVerdict::Classical => "Classical",
            ConjunctionVerdict::OverextendedOnFirst => "OverextendedOnFirst",
            ConjunctionVerdict::OverextendedOnSecond => "OverextendedOnSecond",
            ConjunctionVerdict::GuppyEffect => "GuppyEffect",
        })
    }
}

/// Fraction of the documents containing A that also contain X.
///
/// Not clamped: a noisy source can report `n_ax > n_a`, and the resulting
/// weight above 1 is passed through for the caller to flag.
pub fn relative_weight(n_ax: Count, n_a: Count) -> Result<f64, ModelError> {
    relative_weight_of(n_ax.as_f64(), n_a)
}

/// [`relative_weight`] for a real-valued (corrected) co-occurrence count.
pub fn relative_weight_of(n_ax: f64, n_a: Count) -> Result<f64, ModelError> {
    if n_a.is_zero() {
        return Err(ModelError::ZeroDenominator("relative weight"));
    }
    if n_ax.is_nan() || n_ax < 0.0 {
        return Err(ModelError::InvalidArgument(format!(
            "co-occurrence count must be non-negative, got {n_ax}"
        )));
    }
    Ok(n_ax / n_a.as_f64())
}

/// Fraction of the whole collection containing X.
pub fn absolute_weight(n_x: Count, n_www: Count) -> Result<f64, ModelError> {
    if n_www.is_zero() {
        return Err(ModelError::ZeroDenominator("absolute weight"));
    }
    if n_x > n_www {
        return Err(ModelError::InconsistentCounts(format!(
            "n(x) = {n_x} exceeds collection size {n_www}"
        )));
    }
    Ok(n_x.as_f64() / n_www.as_f64())
}

/// `n_a / (n_ax + n_a_not_x)`: rescales the two disjoint parts so that they
/// add up to the whole. Can be below, at, or above 1.
pub fn correction_factor(n_a: Count, n_ax: Count, n_a_not_x: Count) -> Result<f64, ModelError> {
    let parts = n_ax.checked_add(n_a_not_x)?;
    if parts.is_zero() {
        return Err(ModelError::ZeroDenominator("correction factor"));
    }
    if n_a.is_zero() {
        return Err(ModelError::InvalidArgument(
            "correction factor needs a positive n(a)".into(),
        ));
    }
    Ok(n_a.as_f64() / parts.as_f64())
}

/// A corrected co-occurrence count: the real value and the integer shown to
/// readers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedCount {
    pub value: f64,
    pub display: u64,
}

pub fn corrected_count(n_ax: Count, corr: f64) -> Result<CorrectedCount, ModelError> {
    if !corr.is_finite() || corr <= 0.0 {
        return Err(ModelError::InvalidArgument(format!(
            "correction factor must be positive and finite, got {corr}"
        )));
    }
    let value = corr * n_ax.as_f64();
    // f64::round is half-away-from-zero.
    Ok(CorrectedCount {
        value,
        display: value.round() as u64,
    })
}

/// Relative weight divided by absolute weight.
pub fn meaning_bound(rel_w: f64, abs_w: f64) -> Result<f64, ModelError> {
    if abs_w == 0.0 {
        return Err(ModelError::ZeroDenominator("meaning bound"));
    }
    if rel_w.is_nan() || rel_w < 0.0 || abs_w.is_nan() || abs_w < 0.0 {
        return Err(ModelError::InvalidArgument(format!(
            "weights must be non-negative (rel_w = {rel_w}, abs_w = {abs_w})"
        )));
    }
    Ok(rel_w / abs_w)
}

/// `(n_ax * n_www) / (n_a * n_x)` evaluated from the counts directly.
///
/// Both products are formed exactly in 128-bit integers, so the result is
/// bit-identical when `n_a` and `n_x` trade places.
pub fn meaning_bound_exact(
    n_ax: Count,
    n_a: Count,
    n_x: Count,
    n_www: Count,
) -> Result<f64, ModelError> {
    if n_a.is_zero() || n_x.is_zero() || n_www.is_zero() {
        return Err(ModelError::ZeroDenominator("meaning bound"));
    }
    let num = u128::from(n_ax.get()) * u128::from(n_www.get());
    let den = u128::from(n_a.get()) * u128::from(n_x.get());
    Ok(ratio_u128(num, den))
}

/// Quotient of two u128 values. The fraction is reduced first so that equal
/// rationals give identical results; the integer part is exact and only the
/// remainder goes through floating point.
fn ratio_u128(num: u128, den: u128) -> f64 {
    let g = gcd_u128(num, den);
    let (num, den) = (num / g, den / g);
    let q = num / den;
    let r = num % den;
    if r == 0 {
        return q as f64;
    }
    q as f64 + r as f64 / den as f64
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn classify_bound(m: f64, eps: f64) -> MeaningBoundClass {
    if m > 1.0 + eps {
        MeaningBoundClass::Attractive
    } else if m < 1.0 - eps {
        MeaningBoundClass::Repulsive
    } else {
        MeaningBoundClass::Neutral
    }
}

/// Ties go to the classical side: `w_ab == w_a` is not an overextension.
pub fn classify_conjunction(w_a: f64, w_b: f64, w_ab: f64) -> ConjunctionVerdict {
    match (w_ab > w_a, w_ab > w_b) {
        (true, true) => ConjunctionVerdict::GuppyEffect,
        (true, false) => ConjunctionVerdict::OverextendedOnFirst,
        (false, true) => ConjunctionVerdict::OverextendedOnSecond,
        (false, false) => ConjunctionVerdict::Classical,
    }
}

/// Everything derived from one [`RawCellCounts`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub corr: f64,
    pub n_ax_corrected: f64,
    pub n_ax_corrected_display: u64,
    pub rel_w: f64,
    pub abs_w: f64,
    pub m: f64,
    pub bound_class: MeaningBoundClass,
    pub inconsistent_flag: bool,
}

impl CellReport {
    /// Corrects the co-occurrence count, then derives the relative weight from
    /// the real-valued corrected count and the meaning bound from that.
    pub fn compute(raw: &RawCellCounts, eps: f64) -> Result<Self, ModelError> {
        let corr = correction_factor(raw.n_a, raw.n_ax, raw.n_a_not_x)?;
        let corrected = corrected_count(raw.n_ax, corr)?;
        let rel_w = relative_weight_of(corrected.value, raw.n_a)?;
        let abs_w = absolute_weight(raw.n_x, raw.n_www)?;
        let m = meaning_bound(rel_w, abs_w)?;
        Ok(CellReport {
            corr,
            n_ax_corrected: corrected.value,
            n_ax_corrected_display: corrected.display,
            rel_w,
            abs_w,
            m,
            bound_class: classify_bound(m, eps),
            inconsistent_flag: rel_w > 1.0,
        })
    }
}

/// Decimal places used when printing derived values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayPrecision {
    pub corr_dp: usize,
    pub relw_dp: usize,
    pub m_dp: usize,
    pub abs_w_dp: usize,
}

impl Default for DisplayPrecision {
    fn default() -> Self {
        DisplayPrecision {
            corr_dp: 7,
            relw_dp: 7,
            m_dp: 4,
            abs_w_dp: 9,
        }
    }
}

impl DisplayPrecision {
    pub fn corr(&self, v: f64) -> String {
        format!("{v:.*}", self.corr_dp)
    }

    pub fn rel_w(&self, v: f64) -> String {
        format!("{v:.*}", self.relw_dp)
    }

    pub fn m(&self, v: f64) -> String {
        format!("{v:.*}", self.m_dp)
    }

    pub fn abs_w(&self, v: f64) -> String {
        format!("{v:.*}", self.abs_w_dp)
    }
}
