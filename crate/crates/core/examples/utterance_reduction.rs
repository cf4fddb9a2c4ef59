//! Speakers start with long, safe descriptions and shorten them as
//! common ground builds up.
//!
//! With four words over two objects and a small cost per word, speakers may
//! say one word or two. Two-word utterances hedge against lexical
//! uncertainty; once meanings are shared, the cheaper single word wins.
//!
//! ```bash
//! cargo run --release --example utterance_reduction
//! ```

use chai::agent::Pooling;
use chai::harness::{run_batch, Experiment, SimId};
use chai::stats::block_metrics;

fn main() -> chai::Result<()> {
    let exp = Experiment::headline(SimId::Sim12, None, Pooling::Complete)?;
    let results = run_batch(&exp, 300, 12)?;
    let records: Vec<_> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();

    println!("block  accuracy  words/utterance");
    for b in block_metrics(&records)? {
        let bar = "#".repeat((b.length * 20.0).round() as usize);
        println!("{:>5}  {:>8.3}  {:>5.2} {bar}", b.block + 1, b.accuracy, b.length);
    }
    Ok(())
}
