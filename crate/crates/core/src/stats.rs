//! Metrics over simulated games: accuracy, utterance length and vocabulary
//! per block, MAP meaning levels, cross-partner alignment, partner-swap
//! statistics, t-tests and bootstrap intervals.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::domain::{
    extension, AgentId, Level, Meaning, PrimitiveId, ReferentId, Taxonomy, TrialRecord,
};
use crate::error::{ChaiError, Result};
use crate::harness::{BeliefSnapshot, SpeakerProbe};

/// Per-dyad metrics of one block of one trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockValues {
    pub accuracy: f64,
    pub length: f64,
    pub vocabulary: f64,
}

/// Block means over every dyad-block in the input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSummary {
    pub block: usize,
    pub n: usize,
    pub accuracy: f64,
    pub length: f64,
    pub vocabulary: f64,
}

fn values_of(trials: &[&TrialRecord]) -> BlockValues {
    let n = trials.len() as f64;
    let words: BTreeSet<PrimitiveId> = trials
        .iter()
        .flat_map(|t| t.utterance.primitives().iter().copied())
        .collect();
    BlockValues {
        accuracy: trials.iter().filter(|t| t.correct).count() as f64 / n,
        length: trials.iter().map(|t| t.utterance.len()).sum::<usize>() as f64 / n,
        vocabulary: words.len() as f64,
    }
}

/// Metrics of every (trajectory, dyad, block) group, keyed by block.
pub fn block_values(records: &[TrialRecord]) -> BTreeMap<usize, Vec<BlockValues>> {
    let mut groups: BTreeMap<(usize, usize, (AgentId, AgentId)), Vec<&TrialRecord>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((r.block, r.trajectory, r.pair))
            .or_default()
            .push(r);
    }
    let mut out: BTreeMap<usize, Vec<BlockValues>> = BTreeMap::new();
    for ((block, _, _), trials) in groups {
        out.entry(block).or_default().push(values_of(&trials));
    }
    out
}

/// Mean accuracy, utterance length and number of distinct words produced,
/// per block. Vocabulary is counted within each dyad's block, then averaged.
pub fn block_metrics(records: &[TrialRecord]) -> Result<Vec<BlockSummary>> {
    if records.is_empty() {
        return Err(ChaiError::domain("no trial records"));
    }
    Ok(block_values(records)
        .into_iter()
        .map(|(block, vals)| {
            let n = vals.len();
            let mean = |f: fn(&BlockValues) -> f64| vals.iter().map(f).sum::<f64>() / n as f64;
            BlockSummary {
                block,
                n,
                accuracy: mean(|v| v.accuracy),
                length: mean(|v| v.length),
                vocabulary: mean(|v| v.vocabulary),
            }
        })
        .collect())
}

/// Generality of a word's meaning; `Null` is the empty meaning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelClass {
    Subordinate,
    Basic,
    Superordinate,
    Null,
}

impl LevelClass {
    pub const ALL: [LevelClass; 4] = [
        LevelClass::Subordinate,
        LevelClass::Basic,
        LevelClass::Superordinate,
        LevelClass::Null,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LevelClass::Subordinate => "subordinate",
            LevelClass::Basic => "basic",
            LevelClass::Superordinate => "superordinate",
            LevelClass::Null => "null",
        }
    }

    pub fn of(m: Meaning, tax: &Taxonomy) -> Result<LevelClass> {
        Ok(match tax.level_of(m)? {
            None => LevelClass::Null,
            Some(Level::Subordinate) => LevelClass::Subordinate,
            Some(Level::Basic) => LevelClass::Basic,
            Some(Level::Superordinate) => LevelClass::Superordinate,
        })
    }
}

/// Most probable meaning; ties go to the smaller extension, then to the
/// lower node id (the empty meaning counts as the smallest).
pub fn map_meaning(marginal: &[f64], meanings: &[Meaning], tax: &Taxonomy) -> Result<Meaning> {
    if marginal.len() != meanings.len() || marginal.is_empty() {
        return Err(ChaiError::domain(
            "marginal and meaning list differ in length",
        ));
    }
    let key = |m: Meaning| -> Result<(usize, u32)> {
        let size = extension(m, tax)?.len();
        let id = match m {
            Meaning::Node(n) => n.0 as u32,
            Meaning::Empty => u32::MAX,
        };
        Ok((size, id))
    };
    let top = marginal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(Meaning, (usize, u32))> = None;
    for (&m, &p) in meanings.iter().zip(marginal) {
        if (top - p).abs() > 1e-12 {
            continue;
        }
        let k = key(m)?;
        if best.is_none_or(|(_, bk)| k < bk) {
            best = Some((m, k));
        }
    }
    Ok(best.expect("non-empty marginal").0)
}

/// Share of words at each level of generality, per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelProportions {
    pub trial: usize,
    pub n_words: usize,
    /// Indexed like [`LevelClass::ALL`].
    pub proportions: [f64; 4],
}

impl LevelProportions {
    pub fn get(&self, level: LevelClass) -> f64 {
        self.proportions[LevelClass::ALL
            .iter()
            .position(|&l| l == level)
            .expect("known level")]
    }
}

/// Classifies every word's MAP meaning in every snapshot and pools the
/// counts per trial.
pub fn map_levels(
    snapshots: &[BeliefSnapshot],
    meanings: &[Meaning],
    tax: &Taxonomy,
) -> Result<Vec<LevelProportions>> {
    let mut counts: BTreeMap<usize, [usize; 4]> = BTreeMap::new();
    for s in snapshots {
        let row = counts.entry(s.trial).or_default();
        for marginal in &s.marginals {
            let class = LevelClass::of(map_meaning(marginal, meanings, tax)?, tax)?;
            row[LevelClass::ALL
                .iter()
                .position(|&l| l == class)
                .expect("known level")] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(trial, c)| {
            let n: usize = c.iter().sum();
            let mut proportions = [0.0; 4];
            for (p, &k) in proportions.iter_mut().zip(&c) {
                *p = k as f64 / n.max(1) as f64;
            }
            LevelProportions {
                trial,
                n_words: n,
                proportions,
            }
        })
        .collect())
}

/// Alignment after one block: the share of referents for which two agents'
/// most recent descriptions share a word, averaged over currently paired
/// agents (`within`) and over everyone else (`across`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentPoint {
    pub block: usize,
    pub within: f64,
    pub across: f64,
}

/// Whether two agents' latest descriptions of each shared target overlap,
/// averaged over targets; `None` if they have no target in common.
fn pair_alignment(
    a: &BTreeMap<ReferentId, BTreeSet<PrimitiveId>>,
    b: &BTreeMap<ReferentId, BTreeSet<PrimitiveId>>,
) -> Option<f64> {
    let shared: Vec<f64> = a
        .iter()
        .filter_map(|(t, wa)| b.get(t).map(|wb| (!wa.is_disjoint(wb)) as u8 as f64))
        .collect();
    if shared.is_empty() {
        None
    } else {
        Some(shared.iter().sum::<f64>() / shared.len() as f64)
    }
}

/// Within- and across-dyad alignment after every block of one trajectory.
/// Blocks where a series has no comparable pair report `NaN` for it.
pub fn alignment(records: &[TrialRecord]) -> Vec<AlignmentPoint> {
    let mut by_block: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    let mut agents = BTreeSet::new();
    for r in records {
        by_block.entry(r.block).or_default().push(r);
        agents.insert(r.speaker);
        agents.insert(r.listener);
    }
    let agents: Vec<AgentId> = agents.into_iter().collect();
    let mut latest: BTreeMap<AgentId, BTreeMap<ReferentId, BTreeSet<PrimitiveId>>> =
        BTreeMap::new();
    let mut out = Vec::new();
    for (block, trials) in by_block {
        let mut sorted = trials.clone();
        sorted.sort_by_key(|r| r.trial);
        let mut paired = BTreeSet::new();
        for r in sorted {
            latest
                .entry(r.speaker)
                .or_default()
                .insert(r.target, r.utterance.primitives().iter().copied().collect());
            paired.insert(r.pair);
        }
        let (mut within, mut across) = (Vec::new(), Vec::new());
        for (i, &a) in agents.iter().enumerate() {
            for &b in &agents[i + 1..] {
                let (Some(la), Some(lb)) = (latest.get(&a), latest.get(&b)) else {
                    continue;
                };
                if let Some(v) = pair_alignment(la, lb) {
                    if paired.contains(&(a, b)) {
                        within.push(v);
                    } else {
                        across.push(v);
                    }
                }
            }
        }
        out.push(AlignmentPoint {
            block,
            within: mean_or_nan(&within),
            across: mean_or_nan(&across),
        });
    }
    out
}

fn mean_or_nan(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// How an agent's probability of a two-word utterance moves at partner
/// boundaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapStats {
    /// First trial with the second partner minus the moment of leaving the
    /// first partner: positive when the agent lengthens for the newcomer.
    pub reversion: f64,
    /// First trial with the first partner minus first trial with the last
    /// partner: positive when the agent starts shorter with later partners.
    pub generalization: f64,
}

/// Swap statistics of one agent from its speaker probes.
pub fn swap_stats(probes: &[SpeakerProbe], agent: AgentId) -> Result<SwapStats> {
    let entry = |round: usize| -> Result<f64> {
        probes
            .iter()
            .filter(|p| p.agent == agent && p.round == round && !p.exit)
            .min_by_key(|p| p.trial)
            .map(|p| p.p_long)
            .ok_or_else(|| {
                ChaiError::domain(format!("agent {agent} has no probe entering round {round}"))
            })
    };
    let exit = |round: usize| -> Result<f64> {
        probes
            .iter()
            .find(|p| p.agent == agent && p.round == round && p.exit)
            .map(|p| p.p_long)
            .ok_or_else(|| {
                ChaiError::domain(format!("agent {agent} has no probe leaving round {round}"))
            })
    };
    let last_round = probes
        .iter()
        .filter(|p| p.agent == agent)
        .map(|p| p.round)
        .max()
        .ok_or_else(|| ChaiError::domain(format!("no probes for agent {agent}")))?;
    if last_round < 1 {
        return Err(ChaiError::domain(
            "swap statistics need at least two partners",
        ));
    }
    Ok(SwapStats {
        reversion: entry(1)? - exit(0)?,
        generalization: entry(0)? - entry(last_round)?,
    })
}

/// Swap statistics averaged over every agent in one network.
pub fn network_swap_stats(probes: &[SpeakerProbe]) -> Result<SwapStats> {
    let agents: BTreeSet<AgentId> = probes.iter().map(|p| p.agent).collect();
    if agents.is_empty() {
        return Err(ChaiError::domain("no speaker probes"));
    }
    let stats = agents
        .iter()
        .map(|&a| swap_stats(probes, a))
        .collect::<Result<Vec<_>>>()?;
    let n = stats.len() as f64;
    Ok(SwapStats {
        reversion: stats.iter().map(|s| s.reversion).sum::<f64>() / n,
        generalization: stats.iter().map(|s| s.generalization).sum::<f64>() / n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    /// All values equal: `t` is infinite (or zero for all-zero data) and `p`
    /// is 0 (or 1).
    pub degenerate: bool,
}

impl TTest {
    /// Mean significantly above zero at level `alpha`.
    pub fn positive_at(&self, alpha: f64) -> bool {
        self.t > 0.0 && self.p < alpha
    }

    pub fn significant_at(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// One-sample t-test of mean zero.
pub fn one_sample_t(values: &[f64]) -> Result<TTest> {
    let n = values.len();
    if n < 2 {
        return Err(ChaiError::domain("a t-test needs at least two values"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(TTest {
            n,
            mean,
            t,
            p,
            degenerate: true,
        });
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist =
        StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| ChaiError::domain(e.to_string()))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest {
        n,
        mean,
        t,
        p,
        degenerate: false,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Percentile bootstrap interval for `statistic`.
pub fn bootstrap_ci(
    values: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(ChaiError::domain("cannot bootstrap an empty sample"));
    }
    if reps == 0 || !(0.0..1.0).contains(&level) {
        return Err(ChaiError::domain(
            "bootstrap needs reps >= 1 and level in [0, 1)",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; values.len()];
    let mut stats: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..values.len())];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let tail = (1.0 - level) / 2.0;
    Ok((quantile(&stats, tail), quantile(&stats, 1.0 - tail)))
}

// linear interpolation between order statistics
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{NodeId, Utterance};
    use approx::assert_relative_eq;

    fn rec(
        traj: usize,
        trial: usize,
        block: usize,
        speaker: AgentId,
        listener: AgentId,
        target: u8,
        u: Utterance,
        correct: bool,
    ) -> TrialRecord {
        TrialRecord {
            trajectory: traj,
            pair: (speaker.min(listener), speaker.max(listener)),
            speaker,
            listener,
            trial,
            block,
            target,
            utterance: u,
            response: if correct { target } else { 1 - target },
            correct,
        }
    }

    #[test]
    fn block_metrics_basics() {
        let u1 = Utterance::single(0);
        let both = Utterance::pair(0, 1).unwrap();
        let records = vec![
            rec(0, 0, 0, 0, 1, 0, both, true),
            rec(0, 1, 0, 0, 1, 1, u1, true),
            rec(0, 2, 1, 1, 0, 0, u1, false),
            rec(0, 3, 1, 1, 0, 1, u1, true),
        ];
        let m = block_metrics(&records).unwrap();
        assert_eq!(m[0].accuracy, 1.0);
        assert_eq!(m[0].length, 1.5);
        assert_eq!(m[0].vocabulary, 2.0);
        assert_eq!(m[1].vocabulary, 1.0);
        assert_eq!(m[1].accuracy, 0.5);
        let mut shuffled = records.clone();
        shuffled.swap(0, 1);
        assert_eq!(block_metrics(&shuffled).unwrap(), m);
        assert!(block_metrics(&[]).is_err());
    }

    #[test]
    fn map_atom_on_subordinate_lexicon() {
        let tax = Taxonomy::squares();
        let meanings = tax.meanings(true);
        // four words on the four leaves, four words empty
        let marginals: Vec<Vec<f64>> = (0..8)
            .map(|w| {
                let mut row = vec![0.0; meanings.len()];
                let idx = if w < 4 { w } else { meanings.len() - 1 };
                row[idx] = 1.0;
                row
            })
            .collect();
        let snap = BeliefSnapshot {
            trial: 0,
            agent: 0,
            partner: 1,
            marginals,
        };
        let levels = map_levels(&[snap], &meanings, &tax).unwrap();
        assert_eq!(levels[0].get(LevelClass::Subordinate), 0.5);
        assert_eq!(levels[0].get(LevelClass::Null), 0.5);
    }

    #[test]
    fn map_ties_prefer_smaller_extension() {
        let tax = Taxonomy::squares();
        let meanings = tax.meanings(true);
        let mut row = vec![0.0; meanings.len()];
        row[4] = 0.4; // basic "blue"
        row[0] = 0.4; // a leaf
        row[6] = 0.2;
        assert_eq!(
            map_meaning(&row, &meanings, &tax).unwrap(),
            Meaning::Node(NodeId(0))
        );
        let uniform = vec![1.0 / meanings.len() as f64; meanings.len()];
        assert_eq!(
            map_meaning(&uniform, &meanings, &tax).unwrap(),
            Meaning::Empty
        );
    }

    #[test]
    fn alignment_identical_and_disjoint() {
        let u1 = Utterance::single(0);
        let u2 = Utterance::single(1);
        // agents 0 and 1 agree, agents 2 and 3 use another word
        let records = vec![
            rec(0, 0, 0, 0, 1, 0, u1, true),
            rec(0, 0, 0, 2, 3, 0, u2, true),
            rec(0, 1, 1, 1, 0, 0, u1, true),
            rec(0, 1, 1, 3, 2, 0, u2, true),
        ];
        let a = alignment(&records);
        assert_eq!(a[1].within, 1.0);
        assert_eq!(a[1].across, 0.0);
        // symmetric in the agent pair
        let mut swapped = records.clone();
        for r in &mut swapped {
            std::mem::swap(&mut r.speaker, &mut r.listener);
        }
        let b = alignment(&swapped);
        assert_eq!(a[1], b[1]);
    }

    #[test]
    fn swap_sign_convention() {
        let probe = |trial, round, exit, p_long| SpeakerProbe {
            trial,
            round,
            agent: 0,
            partner: round + 1,
            exit,
            p_long,
        };
        let probes = vec![
            probe(0, 0, false, 0.6),
            probe(7, 0, true, 0.1),
            probe(8, 1, false, 0.4),
            probe(16, 2, false, 0.3),
        ];
        let s = swap_stats(&probes, 0).unwrap();
        assert_relative_eq!(s.reversion, 0.3, epsilon = 1e-12);
        assert_relative_eq!(s.generalization, 0.3, epsilon = 1e-12);
        assert!(swap_stats(&probes[..2], 0).is_err());
    }

    #[test]
    fn t_test_reference_values() {
        let t = one_sample_t(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_relative_eq!(t.t, 4.242640687119285, epsilon = 1e-12);
        assert_relative_eq!(t.p, 0.013236, epsilon = 1e-5);
        let sym = one_sample_t(&[-2.0, -1.0, 1.0, 2.0]).unwrap();
        assert_eq!(sym.t, 0.0);
        assert_relative_eq!(sym.p, 1.0, epsilon = 1e-12);
        assert!(one_sample_t(&[3.0, 3.0, 3.0]).unwrap().degenerate);
        let zeros = one_sample_t(&[0.0, 0.0]).unwrap();
        assert!(zeros.degenerate && !zeros.significant_at(0.05));
        assert!(one_sample_t(&[1.0]).is_err());
    }

    #[test]
    fn bootstrap_properties() {
        let constant = bootstrap_ci(&[2.5; 10], mean, 1000, 0.95, 1).unwrap();
        assert_eq!(constant, (2.5, 2.5));
        let data: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let (lo, hi) = bootstrap_ci(&data, mean, 1000, 0.95, 4).unwrap();
        assert!(lo <= mean(&data) && mean(&data) <= hi);
        assert_eq!((lo, hi), bootstrap_ci(&data, mean, 1000, 0.95, 4).unwrap());
    }
}
