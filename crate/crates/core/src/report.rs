//! Report emission: a JSON envelope as the canonical output and CSV
//! projections of the individual tables.
//!
//! Every JSON report carries the tool name, version, the subcommand that
//! produced it, and an echo of the effective configuration (including any
//! seed), so a report alone suffices to rerun the experiment. Serialization
//! is deterministic: struct fields keep declaration order and `json!` maps
//! sort keys, so identical inputs give byte-identical files.

use serde::Serialize;
use serde_json::Value;

use crate::ensemble::EnsembleStats;
use crate::gauss::GaussianityReport;
use crate::geometry::FeatureTable;
use crate::tasks::{BaselineTable, ClassReport, Histogram, HyperLengthReport, RelationStat};
use crate::{Error, Result};

/// Canonical JSON report wrapper.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    /// Tool name.
    pub tool: &'static str,
    /// Tool version.
    pub version: &'static str,
    /// Subcommand that produced the report.
    pub command: String,
    /// Echo of the effective configuration, seeds included.
    pub config: Value,
    /// The payload table(s).
    pub result: Value,
}

/// Wraps a result payload in the standard envelope.
pub fn envelope(command: &str, config: Value, result: Value) -> Envelope {
    Envelope {
        tool: "pimo",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config,
        result,
    }
}

/// Serializes any payload to pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Formats a float with shortest round-trip precision.
fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Formats an optional float; `None` becomes an empty cell.
fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Quotes a CSV field only when it contains a comma, quote, or newline.
fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn csv_row(fields: &[String]) -> String {
    let mut row = fields
        .iter()
        .map(|f| csv_escape(f))
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}

/// CSV projection of per-observable ensemble statistics.
pub fn stats_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from("id,label,mean,std,second_moment,stderr\n");
    for k in 0..stats.labels.len() {
        out.push_str(&csv_row(&[
            stats.ids[k].to_string(),
            stats.labels[k].clone(),
            fmt(stats.mean[k]),
            fmt(stats.std[k]),
            fmt(stats.second_moment[k]),
            fmt(stats.stderr[k]),
        ]));
    }
    out
}

/// CSV projection of a Gaussianity report; an undefined normalized
/// difference is an empty cell.
pub fn gauss_csv(report: &GaussianityReport) -> String {
    let mut out = String::from("id,label,expt_mean,expt_std,expt_stderr,theor_mean,norm_diff\n");
    for row in &report.rows {
        out.push_str(&csv_row(&[
            row.id.to_string(),
            row.label.clone(),
            fmt(row.expt_mean),
            fmt(row.expt_std),
            fmt(row.expt_stderr),
            fmt(row.theor_mean),
            fmt_opt(row.norm_diff),
        ]));
    }
    out
}

/// CSV projection of relation-mean statistics.
pub fn relation_csv(stats: &[RelationStat]) -> String {
    let mut out = String::from("relation,count,mean,std,stderr\n");
    for s in stats {
        out.push_str(&csv_row(&[
            s.relation.as_str().to_string(),
            s.count.to_string(),
            fmt(s.mean),
            fmt(s.std),
            fmt(s.stderr),
        ]));
    }
    out
}

/// CSV projection of baseline tables: one row per (baseline, relation).
pub fn baselines_csv(tables: &[BaselineTable]) -> String {
    let mut out = String::from(
        "baseline,relation,count,mean,std,stderr,skipped_missing,skipped_undefined,\
         ant_none_syn_ordered,hyper_cohypo_ordered\n",
    );
    for t in tables {
        let fmt_check = |c: Option<bool>| c.map(|b| b.to_string()).unwrap_or_default();
        for s in &t.stats {
            out.push_str(&csv_row(&[
                t.name.clone(),
                s.relation.as_str().to_string(),
                s.count.to_string(),
                fmt(s.mean),
                fmt(s.std),
                fmt(s.stderr),
                t.skipped_missing_word.to_string(),
                t.skipped_undefined.to_string(),
                fmt_check(t.ordering.ant_none_syn),
                fmt_check(t.ordering.hyper_cohypo),
            ]));
        }
    }
    out
}

/// CSV projection of cosine histograms: one row per (relation, bin).
pub fn histogram_csv(histograms: &[Histogram]) -> String {
    let mut out = String::from("relation,count,bin_left,bin_right,density\n");
    for h in histograms {
        for &(left, right, density) in &h.bins {
            out.push_str(&csv_row(&[
                h.relation.as_str().to_string(),
                h.count.to_string(),
                fmt(left),
                fmt(right),
                fmt(density),
            ]));
        }
    }
    out
}

/// CSV projection of a classification report: one row per actual class with
/// the predicted-class counts; the balanced accuracy columns repeat on
/// every row. Empty classes leave the true-rate cell empty.
pub fn class_csv(report: &ClassReport) -> String {
    let mut header = vec!["class".to_string()];
    header.extend(report.class_labels.iter().map(|l| format!("pred_{l}")));
    header.extend(
        ["true_rate", "balanced_accuracy", "ba_stderr"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut out = csv_row(&header);
    for (k, label) in report.class_labels.iter().enumerate() {
        let mut fields = vec![label.clone()];
        fields.extend(report.confusion[k].iter().map(|c| c.to_string()));
        fields.push(fmt_opt(report.true_rates[k]));
        fields.push(fmt_opt(report.balanced_accuracy));
        fields.push(fmt_opt(report.ba_stderr));
        out.push_str(&csv_row(&fields));
    }
    out
}

/// CSV projection of a feature table: one row per word.
pub fn features_csv(table: &FeatureTable) -> String {
    let mut header = vec!["word".to_string()];
    header.extend(table.labels.iter().cloned());
    let mut out = csv_row(&header);
    for (word, row) in table.words.iter().zip(&table.rows) {
        let mut fields = vec![word.clone()];
        fields.extend(row.iter().map(|&x| fmt(x)));
        out.push_str(&csv_row(&fields));
    }
    out
}

/// CSV projection of a hypernym-length report: a single data row.
pub fn hyper_csv(report: &HyperLengthReport) -> String {
    let mut out = String::from(
        "total,wins,ties,ratio,skipped_missing_word,skipped_unknown_direction\n",
    );
    out.push_str(&csv_row(&[
        report.total.to_string(),
        report.wins.to_string(),
        report.ties.to_string(),
        fmt(report.ratio),
        report.skipped_missing_word.to_string(),
        report.skipped_unknown_direction.to_string(),
    ]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DeviationMode;
    use crate::tasks::{OrderingCheck, ProtocolMeta, Relation};
    use serde_json::json;

    #[test]
    fn envelope_round_trip_and_determinism() {
        let config = json!({"seed": 42, "set": "13"});
        let result = json!({"value": 1.5});
        let env = envelope("gaussianity", config.clone(), result.clone());
        let text = to_json_string(&env).unwrap();
        assert!(text.ends_with('\n'));
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["tool"], "pimo");
        assert_eq!(parsed["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(parsed["command"], "gaussianity");
        assert_eq!(parsed["config"]["seed"], 42);
        assert_eq!(parsed["result"]["value"], 1.5);
        // Byte-identical on re-serialization.
        let again = to_json_string(&envelope("gaussianity", config, result)).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn csv_escaping_rules() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_escape("two\nlines"), "\"two\nlines\"");
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let x = 0.1 + 0.2; // 0.30000000000000004
        let cell = fmt(x);
        assert_eq!(cell.parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn relation_and_histogram_projections() {
        let stats = vec![RelationStat {
            relation: Relation::Antonyms,
            count: 3,
            mean: -0.5,
            std: 0.25,
            stderr: 0.25 / 3f64.sqrt(),
        }];
        let csv = relation_csv(&stats);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "relation,count,mean,std,stderr");
        let row = lines.next().unwrap();
        assert!(row.starts_with("ANTONYMS,3,-0.5,0.25,"));

        let histograms = vec![Histogram {
            relation: Relation::Synonyms,
            count: 2,
            bins: vec![(-1.0, 0.0, 0.0), (0.0, 1.0, 1.0)],
        }];
        let hcsv = histogram_csv(&histograms);
        assert_eq!(hcsv.lines().count(), 3);
        assert!(hcsv.contains("SYNONYMS,2,0,1,1"));
    }

    #[test]
    fn class_projection_marks_empty_classes() {
        let report = ClassReport {
            class_labels: vec!["ANTONYMS".into(), "SYNONYMS".into()],
            confusion: vec![vec![3, 1], vec![0, 0]],
            true_rates: vec![Some(0.75), None],
            balanced_accuracy: Some(0.75),
            ba_stderr: None,
            divides: Some(vec![0.1]),
            skipped_pairs: 0,
            n_pairs: 4,
            protocol_meta: ProtocolMeta {
                protocol: "full".into(),
                train_frac: None,
                repetitions: None,
                seed: None,
                stratified: None,
            },
        };
        let csv = class_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "class,pred_ANTONYMS,pred_SYNONYMS,true_rate,balanced_accuracy,ba_stderr"
        );
        assert_eq!(lines[1], "ANTONYMS,3,1,0.75,0.75,");
        assert_eq!(lines[2], "SYNONYMS,0,0,,0.75,");
    }

    #[test]
    fn feature_and_baseline_projections() {
        let table = FeatureTable::assemble(
            "test".into(),
            vec!["M[0,0]".into(), "odd,label".into()],
            vec!["w".into()],
            vec![vec![1.5, -2.0]],
            DeviationMode::RawValue,
        );
        let csv = features_csv(&table);
        assert_eq!(csv, "word,\"M[0,0]\",\"odd,label\"\nw,1.5,-2\n");

        let tables = vec![BaselineTable {
            name: "matrix-flat-raw".into(),
            stats: vec![RelationStat {
                relation: Relation::Synonyms,
                count: 1,
                mean: 1.0,
                std: 0.0,
                stderr: 0.0,
            }],
            skipped_missing_word: 2,
            skipped_undefined: 0,
            ordering: OrderingCheck { ant_none_syn: None, hyper_cohypo: Some(true) },
        }];
        let bcsv = baselines_csv(&tables);
        assert!(bcsv.contains("matrix-flat-raw,SYNONYMS,1,1,0,0,2,0,,true"));
    }

    #[test]
    fn hyper_projection() {
        let report = HyperLengthReport {
            total: 8,
            wins: 5,
            ties: 1,
            ratio: 0.625,
            skipped_missing_word: 1,
            skipped_unknown_direction: 2,
        };
        let csv = hyper_csv(&report);
        assert_eq!(
            csv,
            "total,wins,ties,ratio,skipped_missing_word,skipped_unknown_direction\n\
             8,5,1,0.625,1,2\n"
        );
    }
}
