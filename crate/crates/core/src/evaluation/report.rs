//! Plain-text renderings of evaluation results.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::cv::{CvReport, RoundReport};
use super::sweep::CurvePoint;
use crate::representation::{ModelConfig, SenseMode, Similarity, UsageMode};

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// Tab-separated per-round table: metric rows, an Average column pair and a
/// Training/Test column pair per fold.
pub fn render_round_table(round: &RoundReport) -> String {
    let mut header = vec!["".to_string(), "avg_train".into(), "avg_test".into()];
    for f in &round.folds {
        header.push(format!("fold{}_train", f.fold + 1));
        header.push(format!("fold{}_test", f.fold + 1));
    }
    let a = &round.average;
    let mut rows: Vec<Vec<String>> = vec![
        vec!["threshold".into(), num(Some(a.threshold)), String::new()],
        vec!["precision".into(), num(a.train_precision), num(a.test_precision)],
        vec!["recall".into(), num(a.train_recall), num(a.test_recall)],
        vec!["f_beta".into(), num(Some(a.train_f)), num(Some(a.test_f))],
        vec!["random_f_beta".into(), num(Some(a.random_train_f)), num(Some(a.random_test_f))],
        vec!["frequency_f_beta".into(), num(a.frequency_train_f), num(a.frequency_test_f)],
    ];
    for f in &round.folds {
        let cells = [
            (num(Some(f.threshold)), String::new()),
            (num(f.train.precision), num(f.test.precision)),
            (num(f.train.recall), num(f.test.recall)),
            (num(Some(f.train.f_beta)), num(Some(f.test.f_beta))),
            (num(Some(f.random.train.f_beta)), num(Some(f.random.test.f_beta))),
            (
                num(f.frequency.map(|s| s.train.f_beta)),
                num(f.frequency.map(|s| s.test.f_beta)),
            ),
        ];
        for (row, (tr, te)) in rows.iter_mut().zip(cells) {
            row.push(tr);
            row.push(te);
        }
    }
    let mut out = header.join("\t");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join("\t"));
        out.push('\n');
    }
    out
}

/// One-line summary of a full cross-validation run.
pub fn render_summary(name: &str, r: &CvReport) -> String {
    let mut s = format!(
        "{name}\tF={:.3}±{:.3}\ttrain_F={:.3}±{:.3}\trandom_F={:.3}\tthreshold={:.3}",
        r.test_f.mean, r.test_f.std, r.train_f.mean, r.train_f.std, r.random_test_f.mean, r.mean_threshold
    );
    if let Some(f) = r.frequency_test_f {
        let _ = write!(s, "\tfrequency_F={:.3}", f.mean);
    }
    s
}

/// Sense modes as rows, `{DEFAULT, SUB} × {COS, SPR}` as columns, mean test F in cells.
pub fn render_grid(cells: &[(ModelConfig, f64)]) -> String {
    let map: BTreeMap<(SenseMode, UsageMode, Similarity), f64> = cells
        .iter()
        .map(|(c, f)| ((c.sense_mode, c.usage_mode, c.similarity), *f))
        .collect();
    let cols = [
        (UsageMode::Default, Similarity::Cos),
        (UsageMode::Default, Similarity::Spr),
        (UsageMode::Sub, Similarity::Cos),
        (UsageMode::Sub, Similarity::Spr),
    ];
    let mut out = String::from("sense\tDEFAULT_COS\tDEFAULT_SPR\tSUB_COS\tSUB_SPR\n");
    for mode in SenseMode::ALL {
        if !cols.iter().any(|(u, s)| map.contains_key(&(mode, *u, *s))) {
            continue;
        }
        out.push_str(&mode.to_string());
        for (u, s) in cols {
            out.push('\t');
            if let Some(f) = map.get(&(mode, u, s)) {
                let _ = write!(out, "{f:.3}");
            }
        }
        out.push('\n');
    }
    out
}

/// Columnar precision/recall-vs-threshold records for plotting.
pub fn render_curve(series: &[(String, Vec<CurvePoint>)]) -> String {
    let mut out = String::from("series\tthreshold\tprecision\trecall\tf_beta\n");
    for (name, points) in series {
        for p in points {
            let _ = writeln!(
                out,
                "{name}\t{:.2}\t{}\t{}\t{:.6}",
                p.threshold,
                p.precision.map_or("".into(), |v| format!("{v:.6}")),
                p.recall.map_or("".into(), |v| format!("{v:.6}")),
                p.f_beta
            );
        }
    }
    out
}
