use petfish_core::analysis::{
    analyze_exemplar, guppy_scan, run_study, study_queries, Column, ConceptTriple, StudyConfig,
};
use petfish_core::corpus::{build_index, Document};
use petfish_core::error::AnalysisError;
use petfish_core::model::{ConjunctionVerdict, Count, MeaningBoundClass};
use petfish_core::providers::{CountProvider, FixtureProvider, FixtureTable, LocalProvider};
use petfish_core::query::{Query, TermPattern};
use petfish_core::table1_provider;

const EXEMPLARS: [&str; 6] = [
    "guppy",
    "world",
    "spelling",
    "house",
    "goldfish",
    "hierarchy",
];

fn p(s: &str) -> TermPattern {
    s.parse().unwrap()
}

fn pet_fish() -> ConceptTriple {
    ConceptTriple::with_phrase_conjunction(p("pet"), p("fish"))
}

fn exemplars() -> Vec<TermPattern> {
    EXEMPLARS.iter().map(|s| p(s)).collect()
}

fn local(texts: &[&str]) -> LocalProvider {
    LocalProvider::new(
        build_index(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Document::new(i.to_string(), *t)),
        )
        .unwrap(),
    )
}

#[test]
fn guppy_region_from_the_fixture() {
    let region = analyze_exemplar(
        &pet_fish(),
        &p("guppy"),
        &table1_provider(),
        &StudyConfig::default(),
    )
    .unwrap();
    let dp = StudyConfig::default().display_precision;
    let w = region.rel_w();
    let m = region.m();
    assert_eq!(
        [
            dp.rel_w(w.first),
            dp.rel_w(w.second),
            dp.rel_w(w.conjunction)
        ],
        ["0.0023588", "0.0040923", "0.0216832"]
    );
    assert_eq!(
        [dp.m(m.first), dp.m(m.second), dp.m(m.conjunction)],
        ["10.0567", "17.4477", "92.4476"]
    );
    assert_eq!(region.verdict_weights, ConjunctionVerdict::GuppyEffect);
}

#[test]
fn hierarchy_has_the_one_repulsive_bound() {
    let report = run_study(
        &pet_fish(),
        &exemplars(),
        &table1_provider(),
        &StudyConfig::default(),
    )
    .unwrap();
    assert!(report.failures.is_empty());
    for region in &report.regions {
        for column in Column::ALL {
            let expected = if region.exemplar == p("hierarchy") && column == Column::Conjunction {
                MeaningBoundClass::Repulsive
            } else {
                MeaningBoundClass::Attractive
            };
            assert_eq!(
                *region.bound_classes.get(column),
                expected,
                "{}",
                region.exemplar
            );
        }
        assert_eq!(region.verdict_weights, region.verdict_bounds);
    }
    let house = report
        .regions
        .iter()
        .find(|r| r.exemplar == p("house"))
        .unwrap();
    assert_eq!(
        house.verdict_weights,
        ConjunctionVerdict::OverextendedOnSecond
    );
}

#[test]
fn scan_puts_goldfish_then_guppy_first() {
    let entries = guppy_scan(
        &pet_fish(),
        &exemplars(),
        &table1_provider(),
        &StudyConfig::default(),
    )
    .unwrap();
    let order: Vec<String> = entries.iter().map(|e| e.exemplar.to_string()).collect();
    assert_eq!(order[..2], ["goldfish", "guppy"]);
    assert!(entries[2..]
        .iter()
        .all(|e| e.verdict != ConjunctionVerdict::GuppyEffect));
    assert!(entries[2..]
        .windows(2)
        .all(|w| w[0].m.conjunction >= w[1].m.conjunction));
}

#[test]
fn empty_exemplar_lists() {
    let report = run_study(
        &pet_fish(),
        &[],
        &table1_provider(),
        &StudyConfig::default(),
    )
    .unwrap();
    assert!(report.regions.is_empty());
    assert_eq!(report.totals.conjunction.get(), 1_760_000);
    assert!(guppy_scan(
        &pet_fish(),
        &[],
        &table1_provider(),
        &StudyConfig::default()
    )
    .unwrap()
    .is_empty());
}

#[test]
fn regions_keep_input_order_and_output_is_deterministic() {
    let mut xs = exemplars();
    xs.reverse();
    let config = StudyConfig::default();
    let a = run_study(&pet_fish(), &xs, &table1_provider(), &config).unwrap();
    let b = run_study(&pet_fish(), &xs, &table1_provider(), &config).unwrap();
    let order: Vec<&TermPattern> = a.regions.iter().map(|r| &r.exemplar).collect();
    assert_eq!(order, xs.iter().collect::<Vec<_>>());
    assert_eq!(a.to_json(), b.to_json());
}

/// Ten documents, counted by hand:
///
/// pet: 0 1 2 3 6 8 (6)      fish: 0 1 3 4 5 6 9 (7)
/// "pet fish": 0 3 6 (3)     guppy: 0 1 3 4 7 (5)
const TEN_DOCS: [&str; 10] = [
    "my pet fish is a guppy",
    "pet shop sells fish and a guppy",
    "pet dog",
    "pet-fish guppy",
    "fish guppy",
    "fish market",
    "Pet Fish tank",
    "guppy",
    "pet cat",
    "fish",
];

#[test]
fn ten_document_study_matches_hand_counts() {
    let provider = local(&TEN_DOCS);
    let config = StudyConfig {
        n_www: Count::new(10).unwrap(),
        ..StudyConfig::default()
    };
    let report = run_study(&pet_fish(), &[p("guppy")], &provider, &config).unwrap();
    assert_eq!(
        [
            report.totals.first,
            report.totals.second,
            report.totals.conjunction
        ]
        .map(Count::get),
        [6, 7, 3]
    );
    let region = &report.regions[0];
    assert_eq!(region.n_x.get(), 5);
    assert_eq!(region.abs_w, 0.5);

    // (n_a, n_ax) per column. With corr = 1 and abs_w = 1/2 the pipeline
    // must reproduce the plain quotients bit for bit.
    let expected = [(6u64, 3u64), (7, 4), (3, 2)];
    for (column, (n_a, n_ax)) in Column::ALL.into_iter().zip(expected) {
        let cell = region.cells.get(column);
        assert_eq!((cell.n_a.get(), cell.n_ax.get()), (n_a, n_ax), "{column}");
        assert_eq!(cell.n_a_not_x.get(), n_a - n_ax);
        assert_eq!(cell.report.corr, 1.0);
        assert_eq!(cell.report.n_ax_corrected_display, n_ax);
        let w = n_ax as f64 / n_a as f64;
        assert_eq!(cell.report.rel_w, w);
        assert_eq!(cell.report.m, w / 0.5);
    }
    // w = (1/2, 4/7, 2/3): the conjunction beats both constituents.
    assert_eq!(region.verdict_weights, ConjunctionVerdict::GuppyEffect);
    assert_eq!(
        region.bound_classes.to_array().map(|c| *c),
        [
            MeaningBoundClass::Neutral,
            MeaningBoundClass::Attractive,
            MeaningBoundClass::Attractive
        ]
    );
}

#[test]
fn correction_is_neutral_on_an_exact_source() {
    let provider = local(&TEN_DOCS);
    let xs = [p("guppy"), p("tank"), p("market"), p("\"a guppy\"")];
    let corrected = StudyConfig {
        n_www: Count::new(10).unwrap(),
        ..StudyConfig::default()
    };
    let uncorrected = StudyConfig {
        apply_correction: false,
        ..corrected
    };
    let a = run_study(&pet_fish(), &xs, &provider, &corrected).unwrap();
    let b = run_study(&pet_fish(), &xs, &provider, &uncorrected).unwrap();
    assert_eq!(a.regions, b.regions);
    assert!(a
        .regions
        .iter()
        .flat_map(|r| r.cells.to_array())
        .all(|c| c.report.corr == 1.0));
}

#[test]
fn conjunction_counts_never_exceed_constituent_counts() {
    let provider = local(&TEN_DOCS);
    let config = StudyConfig {
        n_www: Count::new(10).unwrap(),
        ..StudyConfig::default()
    };
    let xs = [p("guppy"), p("tank"), p("is"), p("shop"), p("a")];
    let report = run_study(&pet_fish(), &xs, &provider, &config).unwrap();
    assert_eq!(report.regions.len(), xs.len());
    for region in &report.regions {
        let n = region.cells.map(|c| c.n_ax.get());
        assert!(
            n.conjunction <= n.first.min(n.second),
            "{}",
            region.exemplar
        );
    }
    // The same holds for the word-level conjunction as a plain query.
    for x in &xs {
        let both = provider
            .get_count(&Query::And(p("pet"), x.clone()))
            .unwrap()
            .count;
        let phrase = provider
            .get_count(&Query::And(p("\"pet fish\""), x.clone()))
            .unwrap()
            .count;
        assert!(phrase <= both);
    }
}

#[test]
fn independent_words_give_unit_bounds() {
    // Rows decide the concept words, columns decide the exemplar, so every
    // concept is independent of every exemplar by construction.
    let rows = ["pet fish", "pet", "fish", "pet fish", "other", "fish pet"];
    let cols = ["guppy", "tank", "guppy tank", "", "water"];
    let mut texts = Vec::new();
    for r in rows {
        for c in cols {
            texts.push(format!("{r} . {c}"));
        }
    }
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let provider = local(&refs);
    let config = StudyConfig {
        n_www: Count::new(texts.len() as u64).unwrap(),
        ..StudyConfig::default()
    };
    let xs = [p("guppy"), p("tank"), p("water")];
    let report = run_study(&pet_fish(), &xs, &provider, &config).unwrap();
    for region in &report.regions {
        for m in region.m().to_array() {
            assert!((m - 1.0).abs() <= 1e-9, "{}: {m}", region.exemplar);
        }
    }
    let scan = guppy_scan(&pet_fish(), &xs, &provider, &config).unwrap();
    assert!(scan
        .iter()
        .all(|e| e.verdict != ConjunctionVerdict::GuppyEffect));
}

fn fixture_without(drop: &[&str]) -> FixtureProvider {
    let records = table1_provider()
        .table()
        .records()
        .filter(|r| !drop.contains(&r.canonical().as_str()))
        .cloned()
        .collect();
    FixtureProvider::new(FixtureTable::from_records(records).unwrap())
}

#[test]
fn a_failing_cell_only_drops_its_region() {
    let provider = fixture_without(&["fish -house", "\"pet fish\" house"]);
    let report = run_study(
        &pet_fish(),
        &exemplars(),
        &provider,
        &StudyConfig::default(),
    )
    .unwrap();
    let names: Vec<String> = report
        .regions
        .iter()
        .map(|r| r.exemplar.to_string())
        .collect();
    assert_eq!(
        names,
        ["guppy", "world", "spelling", "goldfish", "hierarchy"]
    );
    let failed: Vec<(Option<Column>, Option<String>)> = report
        .failures
        .iter()
        .map(|f| (f.column, f.query.clone()))
        .collect();
    assert_eq!(
        failed,
        [
            (Some(Column::Second), Some("fish -house".to_string())),
            (
                Some(Column::Conjunction),
                Some("\"pet fish\" house".to_string())
            ),
        ]
    );
    assert!(report.failures.iter().all(|f| f.exemplar == "house"));

    let scan = guppy_scan(
        &pet_fish(),
        &exemplars(),
        &provider,
        &StudyConfig::default(),
    );
    assert!(matches!(scan, Err(AnalysisError::Cells(ref f)) if f.len() == 2));
}

#[test]
fn a_missing_total_fails_the_study() {
    let provider = fixture_without(&["fish"]);
    let err = run_study(
        &pet_fish(),
        &exemplars(),
        &provider,
        &StudyConfig::default(),
    )
    .unwrap_err();
    assert!(err.is_provider_error());
    assert!(err.to_string().contains("fish"), "{err}");
}

#[test]
fn zero_collection_size_is_rejected() {
    let config = StudyConfig {
        n_www: Count::ZERO,
        ..StudyConfig::default()
    };
    assert!(run_study(&pet_fish(), &exemplars(), &table1_provider(), &config).is_err());
}

#[test]
fn study_queries_cover_every_fetch() {
    let qs = study_queries(&pet_fish(), &exemplars());
    assert_eq!(qs.len(), 3 + 6 * 7);
    let table = table1_provider();
    for q in &qs {
        table.get_count(q).unwrap();
    }
    assert_eq!(table.table().len(), qs.len());
}
