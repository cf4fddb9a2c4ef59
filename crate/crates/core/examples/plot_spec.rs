//! Summary tables and plot specifications straight from a batch.
//!
//! Summarizes a short batch into the long-format summary table (metric per
//! block with bootstrap intervals), then emits the accuracy and length
//! figures as JSON a plotting front end can render directly.
//!
//! ```bash
//! cargo run --release --example plot_spec
//! ```

use chai::agent::Pooling;
use chai::harness::{run_batch, Experiment, SimId};
use chai::io::plot::emit_plotspec;
use chai::io::tables::{summarize, SetLabels};

fn main() -> chai::Result<()> {
    let mut exp = Experiment::headline(SimId::Sim12, None, Pooling::Complete)?;
    exp.record_beliefs = true;
    let results = run_batch(&exp, 100, 5)?;
    let labels = SetLabels {
        sim: "sim12".into(),
        condition: "-".into(),
        model: "complete".into(),
    };
    let summary = summarize(&labels, &exp.world, &results, 5)?;
    println!("{} summary rows; first blocks of accuracy:", summary.len());
    for row in summary.iter().filter(|r| r.metric == "accuracy").take(3) {
        println!("  block {:?}: {:.3} [{:?}, {:?}]", row.block, row.value, row.ci_lo, row.ci_hi);
    }
    for figure in ["fig3a", "fig3b"] {
        let spec = emit_plotspec(&summary, figure)?;
        println!("{}", serde_json::to_string_pretty(&spec)?);
    }
    Ok(())
}
