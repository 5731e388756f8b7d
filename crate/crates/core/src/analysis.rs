//! Study orchestration: for every exemplar and each of the three concept
//! columns, fetch the raw counts, correct them, and derive weights, meaning
//! bounds and verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, ModelError};
use crate::model::{
    absolute_weight, classify_conjunction, CellReport, ConjunctionVerdict, Count, DisplayPrecision,
    MeaningBoundClass, RawCellCounts,
};
use crate::providers::CountProvider;
use crate::query::{Query, TermPattern};

/// Default collection size used when counts come from a web-scale source.
pub const DEFAULT_N_WWW: u64 = 55_000_000_000;

/// Two concepts and the pattern standing for their conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTriple {
    pub first: TermPattern,
    pub second: TermPattern,
    pub conjunction: TermPattern,
}

impl ConceptTriple {
    pub fn new(first: TermPattern, second: TermPattern, conjunction: TermPattern) -> Self {
        ConceptTriple {
            first,
            second,
            conjunction,
        }
    }

    /// Uses the exact phrase "first second" as the conjunction.
    pub fn with_phrase_conjunction(first: TermPattern, second: TermPattern) -> Self {
        let tokens: Vec<String> = first
            .tokens()
            .iter()
            .chain(second.tokens())
            .cloned()
            .collect();
        let conjunction = TermPattern::Phrase(tokens);
        Self::new(first, second, conjunction)
    }

    pub fn pattern(&self, column: Column) -> &TermPattern {
        match column {
            Column::First => &self.first,
            Column::Second => &self.second,
            Column::Conjunction => &self.conjunction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    First,
    Second,
    Conjunction,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::First, Column::Second, Column::Conjunction];

    pub fn name(self) -> &'static str {
        match self {
            Column::First => "first",
            Column::Second => "second",
            Column::Conjunction => "conjunction",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per column, in first/second/conjunction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerColumn<T> {
    pub first: T,
    pub second: T,
    pub conjunction: T,
}

impl<T> PerColumn<T> {
    pub fn get(&self, column: Column) -> &T {
        match column {
            Column::First => &self.first,
            Column::Second => &self.second,
            Column::Conjunction => &self.conjunction,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerColumn<U> {
        PerColumn {
            first: f(&self.first),
            second: f(&self.second),
            conjunction: f(&self.conjunction),
        }
    }

    pub fn to_array(&self) -> [&T; 3] {
        [&self.first, &self.second, &self.conjunction]
    }

    fn try_build<E>(mut f: impl FnMut(Column) -> Result<T, E>) -> Result<Self, E> {
        Ok(PerColumn {
            first: f(Column::First)?,
            second: f(Column::Second)?,
            conjunction: f(Column::Conjunction)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_www: Count,
    pub neutral_band_eps: f64,
    /// When false every correction factor is forced to 1.
    pub apply_correction: bool,
    pub display_precision: DisplayPrecision,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_www: Count::new(DEFAULT_N_WWW).unwrap(),
            neutral_band_eps: 0.0,
            apply_correction: true,
            display_precision: DisplayPrecision::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_www.is_zero() {
            return Err(ModelError::InvalidArgument("n_www must be positive".into()));
        }
        if !self.neutral_band_eps.is_finite() || self.neutral_band_eps < 0.0 {
            return Err(ModelError::InvalidArgument(format!(
                "neutral band must be a non-negative number, got {}",
                self.neutral_band_eps
            )));
        }
        Ok(())
    }
}

/// One column of one exemplar region: raw counts plus everything derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCell {
    pub pattern: TermPattern,
    pub n_a: Count,
    pub n_ax: Count,
    pub n_a_not_x: Count,
    #[serde(flatten)]
    pub report: CellReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarRegion {
    pub exemplar: TermPattern,
    pub n_x: Count,
    pub abs_w: f64,
    pub cells: PerColumn<ColumnCell>,
    pub verdict_weights: ConjunctionVerdict,
    pub verdict_bounds: ConjunctionVerdict,
    pub bound_classes: PerColumn<MeaningBoundClass>,
}

impl ExemplarRegion {
    pub fn m(&self) -> PerColumn<f64> {
        self.cells.map(|c| c.report.m)
    }

    pub fn rel_w(&self) -> PerColumn<f64> {
        self.cells.map(|c| c.report.rel_w)
    }
}

/// A cell whose counts could not be fetched or whose arithmetic failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFailure {
    pub exemplar: String,
    /// `None` for the exemplar's own total.
    pub column: Option<Column>,
    pub query: Option<String>,
    pub error: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exemplar {}", self.exemplar)?;
        if let Some(c) = self.column {
            write!(f, ", column {c}")?;
        }
        if let Some(q) = &self.query {
            write!(f, ", query `{q}`")?;
        }
        write!(f, ": {}", self.error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub triple: ConceptTriple,
    pub config: StudyConfig,
    pub totals: PerColumn<Count>,
    pub regions: Vec<ExemplarRegion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<CellFailure>,
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("study reports always serialize");
        s.push('\n');
        s
    }
}

/// Every query a study over `exemplars` will issue, in fetch order.
pub fn study_queries(triple: &ConceptTriple, exemplars: &[TermPattern]) -> Vec<Query> {
    let mut out: Vec<Query> = Column::ALL
        .iter()
        .map(|&c| Query::Pattern(triple.pattern(c).clone()))
        .collect();
    for x in exemplars {
        out.push(Query::Pattern(x.clone()));
        for c in Column::ALL {
            let a = triple.pattern(c).clone();
            out.push(Query::And(a.clone(), x.clone()));
            out.push(Query::AndNot(a, x.clone()));
        }
    }
    out
}

fn fetch_totals<P: CountProvider + ?Sized>(
    triple: &ConceptTriple,
    provider: &P,
) -> Result<PerColumn<Count>, AnalysisError> {
    PerColumn::try_build(|column| {
        let q = Query::Pattern(triple.pattern(column).clone());
        provider
            .get_count(&q)
            .map(|r| r.count)
            .map_err(|source| AnalysisError::Total {
                column: column.name(),
                query: q.canonical(),
                source,
            })
    })
}

/// Analyzes one exemplar against already-fetched column totals. Every cell is
/// attempted so that a failure report lists all failing cells of the region.
fn analyze_region<P: CountProvider + ?Sized>(
    triple: &ConceptTriple,
    totals: &PerColumn<Count>,
    exemplar: &TermPattern,
    provider: &P,
    config: &StudyConfig,
) -> Result<ExemplarRegion, Vec<CellFailure>> {
    let mut failures = Vec::new();
    let failure = |column: Option<Column>, query: Option<&Query>, error: String| CellFailure {
        exemplar: exemplar.to_string(),
        column,
        query: query.map(Query::canonical),
        error,
    };
    let mut fetch = |column: Option<Column>, q: Query| -> Option<Count> {
        match provider.get_count(&q) {
            Ok(r) => Some(r.count),
            Err(e) => {
                failures.push(failure(column, Some(&q), e.to_string()));
                None
            }
        }
    };

    let n_x = fetch(None, Query::Pattern(exemplar.clone()));
    let mut parts = Vec::with_capacity(3);
    for column in Column::ALL {
        let a = triple.pattern(column).clone();
        let n_ax = fetch(Some(column), Query::And(a.clone(), exemplar.clone()));
        let n_a_not_x = fetch(Some(column), Query::AndNot(a, exemplar.clone()));
        parts.push((column, n_ax, n_a_not_x));
    }

    let mut cells = Vec::with_capacity(3);
    if let Some(n_x) = n_x {
        for (column, n_ax, n_a_not_x) in parts {
            let (Some(n_ax), Some(n_a_not_x)) = (n_ax, n_a_not_x) else {
                continue;
            };
            let raw = RawCellCounts {
                n_a: *totals.get(column),
                n_ax,
                n_a_not_x,
                n_x,
                n_www: config.n_www,
            };
            match compute_cell(&raw, config) {
                Ok(report) => cells.push(ColumnCell {
                    pattern: triple.pattern(column).clone(),
                    n_a: raw.n_a,
                    n_ax,
                    n_a_not_x,
                    report,
                }),
                Err(e) => failures.push(failure(Some(column), None, e.to_string())),
            }
        }
    }
    if !failures.is_empty() {
        return Err(failures);
    }
    let n_x = n_x.expect("no failures implies the exemplar total was fetched");
    let abs_w =
        absolute_weight(n_x, config.n_www).map_err(|e| vec![failure(None, None, e.to_string())])?;

    let mut cells = cells.into_iter();
    let cells = PerColumn {
        first: cells.next().unwrap(),
        second: cells.next().unwrap(),
        conjunction: cells.next().unwrap(),
    };
    let w = cells.map(|c| c.report.rel_w);
    let m = cells.map(|c| c.report.m);
    Ok(ExemplarRegion {
        exemplar: exemplar.clone(),
        n_x,
        abs_w,
        verdict_weights: classify_conjunction(w.first, w.second, w.conjunction),
        verdict_bounds: classify_conjunction(m.first, m.second, m.conjunction),
        bound_classes: cells.map(|c| c.report.bound_class),
        cells,
    })
}

fn compute_cell(raw: &RawCellCounts, config: &StudyConfig) -> Result<CellReport, ModelError> {
    if config.apply_correction {
        return CellReport::compute(raw, config.neutral_band_eps);
    }
    // Uncorrected pipeline: feed the parts so that they sum to n_a exactly,
    // which pins the correction factor to 1.
    if raw.n_a.is_zero() {
        return Err(ModelError::ZeroDenominator("relative weight"));
    }
    let n_a_not_x = Count::new(raw.n_a.get().saturating_sub(raw.n_ax.get()))?;
    let consistent = RawCellCounts {
        n_a: raw.n_ax.checked_add(n_a_not_x)?,
        n_a_not_x,
        ..*raw
    };
    let mut report = CellReport::compute(&consistent, config.neutral_band_eps)?;
    if consistent.n_a != raw.n_a {
        // n_ax > n_a: keep the raw, unclamped weight.
        let rel_w = crate::model::relative_weight(raw.n_ax, raw.n_a)?;
        let m = crate::model::meaning_bound(rel_w, report.abs_w)?;
        report.rel_w = rel_w;
        report.m = m;
        report.bound_class = crate::model::classify_bound(m, config.neutral_band_eps);
        report.inconsistent_flag = rel_w > 1.0;
    }
    Ok(report)
}

pub fn analyze_exemplar<P: CountProvider + ?Sized>(
    triple: &ConceptTriple,
    exemplar: &TermPattern,
    provider: &P,
    config: &StudyConfig,
) -> Result<ExemplarRegion, AnalysisError> {
    config.validate()?;
    let totals = fetch_totals(triple, provider)?;
    analyze_region(triple, &totals, exemplar, provider, config).map_err(AnalysisError::Cells)
}

/// Builds the full table. Column totals are fetched once; a failing region
/// is left out of `regions` and its cells are listed in `failures`.
pub fn run_study<P: CountProvider + ?Sized>(
    triple: &ConceptTriple,
    exemplars: &[TermPattern],
    provider: &P,
    config: &StudyConfig,
) -> Result<StudyReport, AnalysisError> {
    config.validate()?;
    let totals = fetch_totals(triple, provider)?;
    let mut regions = Vec::with_capacity(exemplars.len());
    let mut failures = Vec::new();
    for x in exemplars {
        match analyze_region(triple, &totals, x, provider, config) {
            Ok(region) => regions.push(region),
            Err(mut f) => failures.append(&mut f),
        }
    }
    Ok(StudyReport {
        triple: triple.clone(),
        config: *config,
        totals,
        regions,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub exemplar: TermPattern,
    pub verdict: ConjunctionVerdict,
    pub m: PerColumn<f64>,
}

/// Ranks candidates: Guppy-effect exemplars first, then by the conjunction's
/// meaning bound (descending), then by exemplar.
pub fn guppy_scan<P: CountProvider + ?Sized>(
    triple: &ConceptTriple,
    candidates: &[TermPattern],
    provider: &P,
    config: &StudyConfig,
) -> Result<Vec<ScanEntry>, AnalysisError> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let report = run_study(triple, candidates, provider, config)?;
    if !report.failures.is_empty() {
        return Err(AnalysisError::Cells(report.failures));
    }
    Ok(rank_regions(&report.regions))
}

pub fn rank_regions(regions: &[ExemplarRegion]) -> Vec<ScanEntry> {
    let mut entries: Vec<ScanEntry> = regions
        .iter()
        .map(|r| ScanEntry {
            exemplar: r.exemplar.clone(),
            verdict: r.verdict_weights,
            m: r.m(),
        })
        .collect();
    entries.sort_by(|a, b| {
        let guppy = |e: &ScanEntry| e.verdict != ConjunctionVerdict::GuppyEffect;
        guppy(a)
            .cmp(&guppy(b))
            .then(b.m.conjunction.total_cmp(&a.m.conjunction))
            .then_with(|| a.exemplar.to_string().cmp(&b.exemplar.to_string()))
    });
    entries
}

impl AnalysisError {
    /// True when the failure came from a count source rather than the
    /// arithmetic or the configuration.
    pub fn is_provider_error(&self) -> bool {
        matches!(self, AnalysisError::Total { .. } | AnalysisError::Cells(_))
    }
}
