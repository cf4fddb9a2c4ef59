//! Which convention a dyad settles on depends on its first exchange.
//!
//! Runs many dyads and, for each, compares the word used on the very first
//! trial with the word the final speaker uses for the same object. Nearly
//! every dyad keeps whatever word happened to come first, so across dyads
//! both words end up as conventions for each object in equal measure.
//!
//! ```bash
//! cargo run --release --example path_dependence
//! ```

use std::collections::BTreeMap;

use chai::agent::Pooling;
use chai::harness::{run_batch, Experiment, SimId};

fn main() -> chai::Result<()> {
    let exp = Experiment::headline(SimId::Sim11, None, Pooling::Complete)?;
    let vocab = &exp.world.vocabulary;
    let results = run_batch(&exp, 300, 7)?;

    let mut kept = 0;
    let mut conventions: BTreeMap<(u8, String), usize> = BTreeMap::new();
    for r in &results {
        let first = &r.records[0];
        let last = r
            .records
            .iter()
            .rev()
            .find(|t| t.target == first.target)
            .expect("every object is a target in the last block");
        kept += usize::from(last.utterance == first.utterance);
        *conventions.entry((first.target, vocab.format(&last.utterance))).or_default() += 1;
    }
    println!(
        "{kept} of {} dyads still use their first word for the first target",
        results.len()
    );
    println!("final word for the first target, by object:");
    for ((target, word), count) in conventions {
        println!("  o{}  {word}  {count}", target + 1);
    }
    Ok(())
}
