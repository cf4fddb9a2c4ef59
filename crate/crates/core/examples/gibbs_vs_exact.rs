//! The hierarchical sampler against exact enumeration.
//!
//! With a single partner the community level integrates out analytically,
//! so the partner posterior can be computed exactly over the lexicon space.
//! The Gibbs estimate should agree up to Monte Carlo error, which shrinks
//! as the number of sweeps grows.
//!
//! ```bash
//! cargo run --release --example gibbs_vs_exact
//! ```

use std::sync::Arc;

use chai::domain::{Context, Role, TrialRecord, Utterance};
use chai::harness::{SimDefaults, SimId};
use chai::inference::{exact_posterior, gibbs_posterior, Observation, ObservationLog, SamplerConfig};
use chai::prior::{enumerate_space, HierarchicalPrior, LexiconBelief, DEFAULT_SPACE_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> chai::Result<()> {
    let d = SimDefaults::of(SimId::Sim21);
    let n_prims = d.vocabulary.len();
    let space = Arc::new(enumerate_space(&d.prior, n_prims, &d.taxonomy, DEFAULT_SPACE_CAP)?);
    let prior = Arc::new(HierarchicalPrior::new(&d.prior, n_prims, &d.taxonomy)?);
    let candidates = d.vocabulary.candidates(true);

    // partner 1 said "u1 u2" and then "u1" for object 1, as speaker
    let ctx = Context::new(vec![0, 1])?;
    let mut log = ObservationLog::new();
    for (trial, u) in [Utterance::pair(0, 1)?, Utterance::single(0)].into_iter().enumerate() {
        let record = TrialRecord {
            trajectory: 0,
            pair: (0, 1),
            speaker: 1,
            listener: 0,
            trial,
            block: 0,
            target: 0,
            utterance: u,
            response: 0,
            correct: true,
        };
        log.push(1, Observation { record, role: Role::Listener, context: ctx.clone() })?;
    }
    let exact = exact_posterior(space.clone(), log.partner(1), &d.params, &candidates)?;

    println!("sweeps  total variation from exact");
    for sweeps in [500, 2000, 8000, 32000] {
        let cfg = SamplerConfig { sweeps, burn_in: 200 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let post = gibbs_posterior(prior.clone(), space.clone(), &log, &d.params, &candidates, cfg, &mut rng)?;
        let k = post.partners.iter().position(|&p| p == 1).expect("partner 1 observed");
        let est = LexiconBelief::new(space.clone(), post.partner_probs[k].clone());
        println!("{sweeps:>6}  {:.4}", est.total_variation(&exact));
    }
    Ok(())
}
