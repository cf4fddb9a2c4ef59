//! Self-describing plot specifications built from summary rows, one per
//! figure of the model results.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::error::{ChaiError, Result};
use crate::io::tables::SummaryRow;
use crate::stats::LevelClass;

/// Figure identifiers understood by [`emit_plotspec`].
pub const FIGURES: [&str; 7] = ["fig3a", "fig3b", "fig6a", "fig6b", "fig8a", "fig8b", "fig9"];

struct Figure {
    title: &'static str,
    y_label: &'static str,
    metrics: Vec<String>,
    mark: &'static str,
}

fn figure(id: &str) -> Result<Figure> {
    let one = |m: &str| vec![m.to_string()];
    Ok(match id {
        "fig3a" => Figure {
            title: "Listener accuracy per block",
            y_label: "accuracy",
            metrics: one("accuracy"),
            mark: "line",
        },
        "fig3b" => Figure {
            title: "Utterance length per block",
            y_label: "words per utterance",
            metrics: one("length"),
            mark: "line",
        },
        "fig6a" => Figure {
            title: "Probability of a two-word utterance across partners",
            y_label: "P(two-word utterance)",
            metrics: one("p_long"),
            mark: "line",
        },
        "fig6b" => Figure {
            title: "Within- and across-dyad alignment",
            y_label: "alignment",
            metrics: vec!["alignment_within".into(), "alignment_across".into()],
            mark: "line",
        },
        "fig8a" => Figure {
            title: "Accuracy per block by context condition",
            y_label: "accuracy",
            metrics: one("accuracy"),
            mark: "line",
        },
        "fig8b" => Figure {
            title: "Distinct words per block by context condition",
            y_label: "distinct words",
            metrics: one("vocabulary"),
            mark: "line",
        },
        "fig9" => Figure {
            title: "Level of each word's most probable meaning",
            y_label: "share of words",
            metrics: LevelClass::ALL
                .iter()
                .map(|l| format!("map_{}", l.as_str()))
                .collect(),
            mark: "area",
        },
        other => {
            return Err(ChaiError::domain(format!(
                "unknown figure `{other}` (expected one of {})",
                FIGURES.join(", ")
            )))
        }
    })
}

/// Builds the plot document for `figure_id`. One series per
/// (metric, sim, condition, model) present in `summary`; matching rows are
/// inlined under `data`. A summary without the figure's metrics yields a
/// document with no series and an empty `data` array.
pub fn emit_plotspec(summary: &[SummaryRow], figure_id: &str) -> Result<Value> {
    let fig = figure(figure_id)?;
    let rows: Vec<&SummaryRow> = summary
        .iter()
        .filter(|r| r.block.is_some() && fig.metrics.contains(&r.metric))
        .collect();
    let keys: BTreeSet<(usize, &str, &str, &str)> = rows
        .iter()
        .map(|r| {
            let order = fig
                .metrics
                .iter()
                .position(|m| *m == r.metric)
                .expect("filtered");
            (
                order,
                r.sim.as_str(),
                r.condition.as_str(),
                r.model.as_str(),
            )
        })
        .collect();
    let series: Vec<Value> = keys
        .iter()
        .map(|&(order, sim, condition, model)| {
            let metric = &fig.metrics[order];
            let name = [metric.as_str(), sim, condition, model]
                .iter()
                .filter(|s| **s != "-")
                .copied()
                .collect::<Vec<_>>()
                .join(" / ");
            json!({
                "name": name,
                "filter": {"metric": metric, "sim": sim, "condition": condition, "model": model},
            })
        })
        .collect();
    let data: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "sim": r.sim,
                "condition": r.condition,
                "model": r.model,
                "block": r.block,
                "metric": r.metric,
                "value": r.value,
                "ci_lo": r.ci_lo,
                "ci_hi": r.ci_hi,
            })
        })
        .collect();
    Ok(json!({
        "id": figure_id,
        "title": fig.title,
        "x": {"field": "block", "label": "block"},
        "y": {"field": "value", "label": fig.y_label},
        "series": series,
        "mark": fig.mark,
        "data": data,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, block: usize, model: &str) -> SummaryRow {
        SummaryRow {
            sim: "sim21".into(),
            condition: "-".into(),
            model: model.into(),
            block: Some(block),
            metric: metric.into(),
            value: 0.5,
            ci_lo: Some(0.4),
            ci_hi: Some(0.6),
        }
    }

    #[test]
    fn series_follow_the_summary() {
        let s = vec![
            row("alignment_within", 0, "partial"),
            row("alignment_across", 0, "partial"),
            row("alignment_within", 0, "complete"),
            row("accuracy", 0, "partial"),
        ];
        let doc = emit_plotspec(&s, "fig6b").unwrap();
        assert_eq!(doc["series"].as_array().unwrap().len(), 3);
        assert_eq!(doc["data"].as_array().unwrap().len(), 3);
        assert_eq!(doc["mark"], "line");
        assert_eq!(emit_plotspec(&s, "fig9").unwrap()["mark"], "area");
    }

    #[test]
    fn empty_and_unknown() {
        let doc = emit_plotspec(&[], "fig3a").unwrap();
        assert_eq!(doc["data"], json!([]));
        let text = serde_json::to_string(&doc).unwrap();
        assert!(serde_json::from_str::<Value>(&text).is_ok());
        assert!(matches!(
            emit_plotspec(&[], "fig4"),
            Err(ChaiError::Domain(_))
        ));
    }
}
