//! Two agents with no shared words coordinate on a two-word lexicon.
//!
//! Plays the dyadic reference game (two objects, two words, 15 blocks) and
//! prints the mean listener accuracy per block with a bootstrap interval.
//!
//! ```bash
//! cargo run --release --example dyadic_conventions -- 500
//! ```

use chai::agent::Pooling;
use chai::harness::{run_batch, Experiment, SimId};
use chai::stats::{block_values, bootstrap_ci, mean};

fn main() -> chai::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let exp = Experiment::headline(SimId::Sim11, None, Pooling::Complete)?;
    let results = run_batch(&exp, n, 2024)?;
    let records: Vec<_> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();

    println!("block  accuracy  95% CI");
    for (block, values) in block_values(&records) {
        let acc: Vec<f64> = values.iter().map(|v| v.accuracy).collect();
        let (lo, hi) = bootstrap_ci(&acc, mean, 1000, 0.95, block as u64)?;
        println!("{:>5}  {:>8.3}  [{lo:.3}, {hi:.3}]", block + 1, mean(&acc));
    }
    Ok(())
}
