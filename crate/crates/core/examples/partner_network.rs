//! Four agents meet each other in turn and form community conventions.
//!
//! Compares the three ways an agent can share evidence across partners:
//! pooling everything, keeping partners separate, or the hierarchical model
//! in between. Reports how a speaker's chance of a long utterance jumps
//! back up with a new partner (reversion) and how much shorter it starts
//! with the last partner than the first (generalization), plus within- and
//! across-dyad alignment at the end of each round.
//!
//! The hierarchical model runs a Gibbs sampler after every trial, so keep
//! the trajectory count small.
//!
//! ```bash
//! cargo run --release --example partner_network -- 8
//! ```

use chai::agent::Pooling;
use chai::harness::{run_batch, Experiment, SimId};
use chai::stats::{alignment, mean, network_swap_stats, one_sample_t};

fn main() -> chai::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    for pooling in [Pooling::Partial, Pooling::Complete, Pooling::None] {
        let exp = Experiment::headline(SimId::Sim21, None, pooling)?;
        let results = run_batch(&exp, n, 21)?;
        let swaps = results
            .iter()
            .map(|r| network_swap_stats(&r.probes))
            .collect::<chai::Result<Vec<_>>>()?;
        let rev = one_sample_t(&swaps.iter().map(|s| s.reversion).collect::<Vec<_>>())?;
        let gen = one_sample_t(&swaps.iter().map(|s| s.generalization).collect::<Vec<_>>())?;
        println!("{} pooling", pooling.as_str());
        println!("  reversion       {:+.3} (t = {:.2}, p = {:.3})", rev.mean, rev.t, rev.p);
        println!("  generalization  {:+.3} (t = {:.2}, p = {:.3})", gen.mean, gen.t, gen.p);

        // partners change after blocks 3 and 7
        let points: Vec<_> = results.iter().map(|r| alignment(&r.records)).collect();
        for block in [3, 7, 11] {
            let at = |f: fn(&chai::stats::AlignmentPoint) -> f64| {
                let xs: Vec<f64> = points
                    .iter()
                    .filter_map(|p| p.iter().find(|a| a.block == block).map(f))
                    .filter(|x| !x.is_nan())
                    .collect();
                mean(&xs)
            };
            println!(
                "  end of round {}: within {:.2}, across {:.2}",
                block / 4 + 1,
                at(|a| a.within),
                at(|a| a.across)
            );
        }
    }
    Ok(())
}
