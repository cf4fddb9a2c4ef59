//! How optimality, memory decay and utterance cost shape reduction.
//!
//! Runs a small grid over the dyadic four-word game and prints final-block
//! accuracy and utterance length for every cell.
//!
//! ```bash
//! cargo run --release --example parameter_sweep
//! ```

use chai::agent::Pooling;
use chai::harness::{sweep_grid, Experiment, SimId, SweepAxes};
use chai::io::tables::sweep_rows;

fn main() -> chai::Result<()> {
    let base = Experiment::headline(SimId::Sim12, None, Pooling::Complete)?;
    let axes = SweepAxes {
        alpha: vec![2.0, 8.0],
        beta: vec![0.5, 0.8, 1.0],
        w_c: vec![0.0, 0.24],
    };
    let cells = sweep_grid(&base, &axes, 40, 99)?;
    println!("alpha  beta   w_c  metric          mean");
    for row in sweep_rows(&cells)? {
        println!("{:>5} {:>5} {:>5}  {:<14} {:.3}", row.alpha, row.beta, row.w_c, row.metric, row.mean);
    }
    Ok(())
}
