//! Renderers for [`StudyReport`]: a human table laid out like the printed
//! study table, CSV, and JSON.
//!
//! Table and CSV print derived values at the configured display precision;
//! JSON carries the full-precision values.

use std::fmt::Write as _;

use crate::analysis::{Column, ExemplarRegion, ScanEntry, StudyReport};

const LABEL_WIDTH: usize = 14;

pub const CSV_HEADER: [&str; 16] = [
    "row",
    "exemplar",
    "column",
    "pattern",
    "tot_n",
    "n_x",
    "abs_w",
    "rel_n",
    "rel_not_n",
    "corr",
    "rel_n_corr",
    "rel_w",
    "m",
    "bound_class",
    "verdict",
    "inconsistent",
];

fn row(out: &mut String, label: &str, values: &[String]) {
    let _ = writeln!(out, "{label:<LABEL_WIDTH$}{}", values.join("  "));
}

fn per_column<F: Fn(Column) -> String>(f: F) -> Vec<String> {
    Column::ALL.iter().map(|&c| f(c)).collect()
}

pub fn render_table(report: &StudyReport) -> String {
    let dp = &report.config.display_precision;
    let mut out = String::new();
    row(
        &mut out,
        "",
        &per_column(|c| report.triple.pattern(c).to_string()),
    );
    row(
        &mut out,
        "Tot. N",
        &per_column(|c| report.totals.get(c).to_string()),
    );
    for region in &report.regions {
        let cell = |c: Column| region.cells.get(c);
        out.push('\n');
        let _ = writeln!(out, "{}", region.exemplar);
        row(&mut out, "Tot. N", &[region.n_x.to_string()]);
        row(&mut out, "Abs. w", &[dp.abs_w(region.abs_w)]);
        row(
            &mut out,
            "Rel. N",
            &per_column(|c| cell(c).n_ax.to_string()),
        );
        row(
            &mut out,
            "Rel. -N",
            &per_column(|c| cell(c).n_a_not_x.to_string()),
        );
        row(
            &mut out,
            "Corr.",
            &per_column(|c| dp.corr(cell(c).report.corr)),
        );
        row(
            &mut out,
            "Rel. N corr.",
            &per_column(|c| cell(c).report.n_ax_corrected_display.to_string()),
        );
        row(
            &mut out,
            "Rel. w",
            &per_column(|c| dp.rel_w(cell(c).report.rel_w)),
        );
        row(&mut out, "M", &per_column(|c| dp.m(cell(c).report.m)));
        row(
            &mut out,
            "Bound",
            &per_column(|c| region.bound_classes.get(c).to_string()),
        );
        if region
            .cells
            .to_array()
            .iter()
            .any(|c| c.report.inconsistent_flag)
        {
            row(
                &mut out,
                "Rel. w > 1",
                &per_column(|c| cell(c).report.inconsistent_flag.to_string()),
            );
        }
        row(&mut out, "Verdict", &[region.verdict_weights.to_string()]);
    }
    out
}

fn region_rows(report: &StudyReport, region: &ExemplarRegion) -> Vec<[String; 16]> {
    let dp = &report.config.display_precision;
    Column::ALL
        .iter()
        .map(|&c| {
            let cell = region.cells.get(c);
            [
                "cell".to_string(),
                region.exemplar.to_string(),
                c.name().to_string(),
                cell.pattern.to_string(),
                cell.n_a.to_string(),
                region.n_x.to_string(),
                dp.abs_w(region.abs_w),
                cell.n_ax.to_string(),
                cell.n_a_not_x.to_string(),
                dp.corr(cell.report.corr),
                cell.report.n_ax_corrected_display.to_string(),
                dp.rel_w(cell.report.rel_w),
                dp.m(cell.report.m),
                cell.report.bound_class.to_string(),
                region.verdict_weights.to_string(),
                cell.report.inconsistent_flag.to_string(),
            ]
        })
        .collect()
}

/// Long-format CSV: three `total` rows, then one `cell` row per exemplar and
/// column.
pub fn render_csv(report: &StudyReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for c in Column::ALL {
        let mut rec: [String; 16] = Default::default();
        rec[0] = "total".into();
        rec[2] = c.name().into();
        rec[3] = report.triple.pattern(c).to_string();
        rec[4] = report.totals.get(c).to_string();
        w.write_record(&rec).expect("writing to memory");
    }
    for region in &report.regions {
        for rec in region_rows(report, region) {
            w.write_record(&rec).expect("writing to memory");
        }
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
}

pub fn render_json(report: &StudyReport) -> String {
    report.to_json()
}

/// One tab-separated line per candidate: exemplar, verdict, and the three
/// meaning bounds.
pub fn render_scan(entries: &[ScanEntry], m_dp: usize) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.*}\t{:.*}\t{:.*}",
            e.exemplar, e.verdict, m_dp, e.m.first, m_dp, e.m.second, m_dp, e.m.conjunction
        );
    }
    out
}
