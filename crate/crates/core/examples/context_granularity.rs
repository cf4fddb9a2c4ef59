//! Which distinctions a context demands shapes what words come to mean.
//!
//! Four squares in two colors and two shades. In the coarse condition the
//! distractor always has the other color; in the fine condition it is the
//! other shade of the same color. Prints effective vocabulary per block and
//! the final share of words whose most probable meaning sits at each level
//! of the taxonomy.
//!
//! ```bash
//! cargo run --release --example context_granularity -- 100
//! ```

use chai::agent::Pooling;
use chai::harness::{run_batch, Condition, Experiment, SimId};
use chai::stats::{block_metrics, map_levels, LevelClass};

fn main() -> chai::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    for condition in [Condition::Coarse, Condition::Fine, Condition::Mixed] {
        let mut exp = Experiment::headline(SimId::Sim31, Some(condition), Pooling::Complete)?;
        exp.record_beliefs = true;
        let results = run_batch(&exp, n, 31)?;
        let records: Vec<_> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
        println!("{} contexts", condition.as_str());
        for b in block_metrics(&records)? {
            println!(
                "  block {}  accuracy {:.2}  vocabulary {:.2}",
                b.block + 1,
                b.accuracy,
                b.vocabulary
            );
        }
        let snapshots: Vec<_> = results.iter().flat_map(|r| r.snapshots.iter().cloned()).collect();
        let world = &exp.world;
        let levels = map_levels(&snapshots, world.space.meanings(), &world.taxonomy)?;
        let last = levels.last().expect("at least one trial");
        let shares: Vec<String> = LevelClass::ALL
            .iter()
            .map(|&l| format!("{} {:.0}%", l.as_str(), 100.0 * last.get(l)))
            .collect();
        println!("  final word meanings: {}", shares.join(", "));
    }
    Ok(())
}
