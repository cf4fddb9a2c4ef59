//! CSV tables: per-trial records, belief marginals, speaker probes, block
//! summaries and sweep cells. Rows are written in a fixed order (trajectory,
//! then trial) so reruns with the same seed produce identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::agent::World;
use crate::domain::{AgentId, Meaning, ReferentId, TrialRecord};
use crate::error::{ChaiError, Result};
use crate::harness::{
    substream_seed, BeliefSnapshot, Purpose, SpeakerProbe, SweepCell, TrajectoryResult,
};
use crate::stats::{self, LevelClass};

pub const TRIALS_HEADER: &str =
    "sim,condition,model,trajectory,partner_pair,trial,block,speaker,listener,target,utterance,response,correct,utt_len";
pub const BELIEFS_HEADER: &str = "trajectory,trial,agent,primitive,meaning,prob";
pub const PROBES_HEADER: &str = "trajectory,trial,round,agent,partner,exit,p_long";
pub const SUMMARY_HEADER: &str = "sim,condition,model,block,metric,value,ci_lo,ci_hi";
pub const SWEEP_HEADER: &str = "alpha,beta,w_c,metric,mean,t,p";

/// Bootstrap resamples behind every summary interval.
pub const BOOTSTRAP_REPS: usize = 1000;

/// Labels identifying one result set in its rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetLabels {
    pub sim: String,
    /// `-` when the simulation has no conditions.
    pub condition: String,
    pub model: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub sim: String,
    pub condition: String,
    pub model: String,
    pub trajectory: usize,
    pub partner_pair: String,
    pub trial: usize,
    pub block: usize,
    pub speaker: AgentId,
    pub listener: AgentId,
    pub target: String,
    pub utterance: String,
    pub response: String,
    pub correct: u8,
    pub utt_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefRow {
    pub trajectory: usize,
    pub trial: usize,
    pub agent: AgentId,
    pub primitive: String,
    pub meaning: String,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub trajectory: usize,
    pub trial: usize,
    pub round: usize,
    pub agent: AgentId,
    pub partner: AgentId,
    pub exit: u8,
    pub p_long: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sim: String,
    pub condition: String,
    pub model: String,
    /// Empty for whole-run statistics.
    pub block: Option<usize>,
    pub metric: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub w_c: f64,
    pub metric: String,
    pub mean: f64,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

fn write_rows<T: Serialize>(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<&str> = r.headers()?.iter().collect();
    if found != header.split(',').collect::<Vec<_>>() {
        return Err(ChaiError::domain(format!(
            "{}: unexpected header {}",
            path.display(),
            found.join(",")
        )));
    }
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

fn leaf_name(world: &World, r: ReferentId) -> String {
    world.taxonomy.leaves()[r as usize].name.clone()
}

fn leaf_id(world: &World, name: &str) -> Result<ReferentId> {
    world
        .taxonomy
        .leaves()
        .iter()
        .position(|l| l.name == name)
        .map(|i| i as ReferentId)
        .ok_or_else(|| ChaiError::domain(format!("unknown object `{name}`")))
}

pub fn trial_rows(
    labels: &SetLabels,
    world: &World,
    results: &[TrajectoryResult],
) -> Vec<TrialRow> {
    results
        .iter()
        .flat_map(|res| &res.records)
        .map(|r| TrialRow {
            sim: labels.sim.clone(),
            condition: labels.condition.clone(),
            model: labels.model.clone(),
            trajectory: r.trajectory,
            partner_pair: format!("{}-{}", r.pair.0, r.pair.1),
            trial: r.trial,
            block: r.block,
            speaker: r.speaker,
            listener: r.listener,
            target: leaf_name(world, r.target),
            utterance: world.vocabulary.format(&r.utterance),
            response: leaf_name(world, r.response),
            correct: r.correct as u8,
            utt_len: r.utterance.len(),
        })
        .collect()
}

pub fn write_trials(
    path: &Path,
    labels: &SetLabels,
    world: &World,
    results: &[TrajectoryResult],
) -> Result<()> {
    write_rows(path, TRIALS_HEADER, trial_rows(labels, world, results))
}

pub fn read_trial_rows(path: &Path) -> Result<Vec<TrialRow>> {
    read_rows(path, TRIALS_HEADER)
}

/// Decodes one trials.csv row back into a record.
pub fn parse_trial(row: &TrialRow, world: &World) -> Result<TrialRecord> {
    let (a, b) = row
        .partner_pair
        .split_once('-')
        .ok_or_else(|| ChaiError::domain(format!("bad partner pair `{}`", row.partner_pair)))?;
    let agent = |s: &str| {
        s.parse::<AgentId>()
            .map_err(|_| ChaiError::domain(format!("bad partner pair `{}`", row.partner_pair)))
    };
    let utterance = world.vocabulary.parse(&row.utterance)?;
    if utterance.len() != row.utt_len {
        return Err(ChaiError::domain(format!(
            "utt_len {} disagrees with `{}`",
            row.utt_len, row.utterance
        )));
    }
    Ok(TrialRecord {
        trajectory: row.trajectory,
        pair: (agent(a)?, agent(b)?),
        speaker: row.speaker,
        listener: row.listener,
        trial: row.trial,
        block: row.block,
        target: leaf_id(world, &row.target)?,
        utterance,
        response: leaf_id(world, &row.response)?,
        correct: row.correct != 0,
    })
}

pub fn read_trials(path: &Path, world: &World) -> Result<Vec<TrialRecord>> {
    read_trial_rows(path)?
        .iter()
        .map(|r| parse_trial(r, world))
        .collect()
}

pub fn write_beliefs(path: &Path, world: &World, results: &[TrajectoryResult]) -> Result<()> {
    let meanings = world.space.meanings();
    let names: Vec<String> = meanings
        .iter()
        .map(|&m| world.taxonomy.meaning_name(m))
        .collect();
    let names = &names;
    let rows = results.iter().flat_map(|res| {
        res.snapshots.iter().flat_map(move |s| {
            s.marginals
                .iter()
                .enumerate()
                .flat_map(move |(p, marginal)| {
                    marginal
                        .iter()
                        .enumerate()
                        .map(move |(i, &prob)| BeliefRow {
                            trajectory: res.trajectory,
                            trial: s.trial,
                            agent: s.agent,
                            primitive: world.vocabulary.name(p as u8).to_string(),
                            meaning: names[i].clone(),
                            prob,
                        })
                })
        })
    });
    write_rows(path, BELIEFS_HEADER, rows)
}

pub fn write_probes(path: &Path, results: &[TrajectoryResult]) -> Result<()> {
    let rows = results.iter().flat_map(|res| {
        res.probes.iter().map(move |p| ProbeRow {
            trajectory: res.trajectory,
            trial: p.trial,
            round: p.round,
            agent: p.agent,
            partner: p.partner,
            exit: p.exit as u8,
            p_long: p.p_long,
        })
    });
    write_rows(path, PROBES_HEADER, rows)
}

/// Rebuilds trajectory results from the tables of one result set. Belief and
/// probe tables are optional; a snapshot's partner is recovered from the
/// trial it follows.
pub fn read_results(
    trials: &Path,
    beliefs: Option<&Path>,
    probes: Option<&Path>,
    world: &World,
) -> Result<Vec<TrajectoryResult>> {
    let mut out: BTreeMap<usize, TrajectoryResult> = BTreeMap::new();
    for r in read_trials(trials, world)? {
        out.entry(r.trajectory)
            .or_insert_with(|| empty_result(r.trajectory))
            .records
            .push(r);
    }
    if let Some(path) = beliefs {
        let meaning_index: BTreeMap<String, usize> = world
            .space
            .meanings()
            .iter()
            .enumerate()
            .map(|(i, &m)| (world.taxonomy.meaning_name(m), i))
            .collect();
        let n_meanings = world.space.meanings().len();
        let n_prims = world.vocabulary.len();
        for row in read_rows::<BeliefRow>(path, BELIEFS_HEADER)? {
            let res = out
                .entry(row.trajectory)
                .or_insert_with(|| empty_result(row.trajectory));
            let prim = world
                .vocabulary
                .names()
                .iter()
                .position(|n| *n == row.primitive)
                .ok_or_else(|| {
                    ChaiError::domain(format!("unknown primitive `{}`", row.primitive))
                })?;
            let m = *meaning_index
                .get(&row.meaning)
                .ok_or_else(|| ChaiError::domain(format!("unknown meaning `{}`", row.meaning)))?;
            let same = res
                .snapshots
                .last()
                .is_some_and(|s| s.trial == row.trial && s.agent == row.agent);
            if !same {
                let partner = res
                    .records
                    .iter()
                    .find(|r| {
                        r.trial == row.trial && (r.speaker == row.agent || r.listener == row.agent)
                    })
                    .map(|r| {
                        if r.speaker == row.agent {
                            r.listener
                        } else {
                            r.speaker
                        }
                    })
                    .ok_or_else(|| {
                        ChaiError::domain(format!(
                            "belief row for agent {} at unplayed trial {}",
                            row.agent, row.trial
                        ))
                    })?;
                res.snapshots.push(BeliefSnapshot {
                    trial: row.trial,
                    agent: row.agent,
                    partner,
                    marginals: vec![vec![0.0; n_meanings]; n_prims],
                });
            }
            res.snapshots.last_mut().expect("just pushed").marginals[prim][m] = row.prob;
        }
    }
    if let Some(path) = probes {
        for row in read_rows::<ProbeRow>(path, PROBES_HEADER)? {
            out.entry(row.trajectory)
                .or_insert_with(|| empty_result(row.trajectory))
                .probes
                .push(SpeakerProbe {
                    trial: row.trial,
                    round: row.round,
                    agent: row.agent,
                    partner: row.partner,
                    exit: row.exit != 0,
                    p_long: row.p_long,
                });
        }
    }
    Ok(out.into_values().collect())
}

fn empty_result(trajectory: usize) -> TrajectoryResult {
    TrajectoryResult {
        trajectory,
        records: Vec::new(),
        snapshots: Vec::new(),
        probes: Vec::new(),
    }
}

struct SummaryBuilder<'a> {
    labels: &'a SetLabels,
    seed: u64,
    rows: Vec<SummaryRow>,
}

impl SummaryBuilder<'_> {
    /// Mean of `values` with a bootstrap interval.
    fn mean_row(&mut self, block: Option<usize>, metric: &str, values: &[f64]) -> Result<()> {
        if values.is_empty() {
            return Ok(());
        }
        let boot_seed = substream_seed(self.seed, self.rows.len() as u64, 0, 0, Purpose::Bootstrap);
        let (lo, hi) = stats::bootstrap_ci(values, stats::mean, BOOTSTRAP_REPS, 0.95, boot_seed)?;
        self.push(block, metric, stats::mean(values), Some((lo, hi)));
        Ok(())
    }

    fn push(&mut self, block: Option<usize>, metric: &str, value: f64, ci: Option<(f64, f64)>) {
        self.rows.push(SummaryRow {
            sim: self.labels.sim.clone(),
            condition: self.labels.condition.clone(),
            model: self.labels.model.clone(),
            block,
            metric: metric.to_string(),
            value,
            ci_lo: ci.map(|c| c.0),
            ci_hi: ci.map(|c| c.1),
        });
    }
}

/// Block-level and whole-run metrics of one result set, each with a 95%
/// bootstrap interval over trajectories (or dyad-blocks).
///
/// Per block: `accuracy`, `length`, `vocabulary`; `p_long` (speakers'
/// probability of a two-word utterance before each trial); within- and
/// across-dyad alignment; and `map_<level>`, the share of words whose MAP
/// meaning is at each level after the block's last trial. Whole-run rows
/// (empty block) carry the partner-swap statistics and their t-tests.
pub fn summarize(
    labels: &SetLabels,
    world: &World,
    results: &[TrajectoryResult],
    seed: u64,
) -> Result<Vec<SummaryRow>> {
    let mut b = SummaryBuilder {
        labels,
        seed,
        rows: Vec::new(),
    };
    let records: Vec<TrialRecord> = results
        .iter()
        .flat_map(|r| r.records.iter().cloned())
        .collect();
    for (block, vals) in stats::block_values(&records) {
        for (metric, f) in [
            (
                "accuracy",
                (|v: &stats::BlockValues| v.accuracy) as fn(&stats::BlockValues) -> f64,
            ),
            ("length", |v| v.length),
            ("vocabulary", |v| v.vocabulary),
        ] {
            let xs: Vec<f64> = vals.iter().map(f).collect();
            b.mean_row(Some(block), metric, &xs)?;
        }
    }

    // trial -> block, shared by every trajectory of a schedule family
    let block_of: BTreeMap<usize, usize> = records.iter().map(|r| (r.trial, r.block)).collect();
    let mut last_of_block: BTreeMap<usize, usize> = BTreeMap::new();
    for (&trial, &block) in &block_of {
        let e = last_of_block.entry(block).or_insert(trial);
        *e = (*e).max(trial);
    }

    let mut p_long: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for res in results {
        let mut per_block: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for p in res.probes.iter().filter(|p| !p.exit) {
            if let Some(&block) = block_of.get(&p.trial) {
                per_block.entry(block).or_default().push(p.p_long);
            }
        }
        for (block, xs) in per_block {
            p_long.entry(block).or_default().push(stats::mean(&xs));
        }
    }
    for (block, xs) in &p_long {
        b.mean_row(Some(*block), "p_long", xs)?;
    }

    let mut within: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut across: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for res in results {
        for pt in stats::alignment(&res.records) {
            if pt.within.is_finite() {
                within.entry(pt.block).or_default().push(pt.within);
            }
            if pt.across.is_finite() {
                across.entry(pt.block).or_default().push(pt.across);
            }
        }
    }
    let blocks: BTreeSet<usize> = within.keys().chain(across.keys()).copied().collect();
    for block in blocks {
        if let Some(xs) = within.get(&block) {
            b.mean_row(Some(block), "alignment_within", xs)?;
        }
        if let Some(xs) = across.get(&block) {
            b.mean_row(Some(block), "alignment_across", xs)?;
        }
    }

    let meanings: &[Meaning] = world.space.meanings();
    let mut levels: BTreeMap<usize, Vec<[f64; 4]>> = BTreeMap::new();
    for res in results {
        for lp in stats::map_levels(&res.snapshots, meanings, &world.taxonomy)? {
            if let Some(&block) = block_of.get(&lp.trial) {
                if last_of_block.get(&block) == Some(&lp.trial) {
                    levels.entry(block).or_default().push(lp.proportions);
                }
            }
        }
    }
    for (block, rows) in &levels {
        for (i, level) in LevelClass::ALL.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            b.mean_row(Some(*block), &format!("map_{}", level.as_str()), &xs)?;
        }
    }

    if results.iter().any(|r| r.probes.iter().any(|p| p.round > 0)) {
        let swaps = results
            .iter()
            .map(|r| stats::network_swap_stats(&r.probes))
            .collect::<Result<Vec<_>>>()?;
        for (metric, xs) in [
            (
                "reversion",
                swaps.iter().map(|s| s.reversion).collect::<Vec<_>>(),
            ),
            (
                "generalization",
                swaps.iter().map(|s| s.generalization).collect(),
            ),
        ] {
            b.mean_row(None, metric, &xs)?;
            if xs.len() >= 2 {
                let t = stats::one_sample_t(&xs)?;
                b.push(None, &format!("{metric}_t"), t.t, None);
                b.push(None, &format!("{metric}_p"), t.p, None);
            }
        }
    }
    Ok(b.rows)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, SUMMARY_HEADER, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path, SUMMARY_HEADER)
}

/// Per-cell rows: final-block accuracy and length, and the partner-swap
/// statistics with one-sample t-tests when the runs have partner swaps.
pub fn sweep_rows(cells: &[SweepCell]) -> Result<Vec<SweepRow>> {
    let mut out = Vec::new();
    for cell in cells {
        let mut push = |metric: &str, xs: &[f64], test: bool| -> Result<()> {
            let (t, p) = if test && xs.len() >= 2 {
                let t = stats::one_sample_t(xs)?;
                (Some(t.t), Some(t.p))
            } else {
                (None, None)
            };
            out.push(SweepRow {
                alpha: cell.alpha,
                beta: cell.beta,
                w_c: cell.w_c,
                metric: metric.to_string(),
                mean: stats::mean(xs),
                t,
                p,
            });
            Ok(())
        };
        let records: Vec<TrialRecord> = cell
            .results
            .iter()
            .flat_map(|r| r.records.iter().cloned())
            .collect();
        let blocks = stats::block_values(&records);
        if let Some((_, last)) = blocks.iter().next_back() {
            push(
                "final_accuracy",
                &last.iter().map(|v| v.accuracy).collect::<Vec<_>>(),
                false,
            )?;
            push(
                "final_length",
                &last.iter().map(|v| v.length).collect::<Vec<_>>(),
                false,
            )?;
        }
        if cell
            .results
            .iter()
            .any(|r| r.probes.iter().any(|p| p.round > 0))
        {
            let swaps = cell
                .results
                .iter()
                .map(|r| stats::network_swap_stats(&r.probes))
                .collect::<Result<Vec<_>>>()?;
            push(
                "reversion",
                &swaps.iter().map(|s| s.reversion).collect::<Vec<_>>(),
                true,
            )?;
            push(
                "generalization",
                &swaps.iter().map(|s| s.generalization).collect::<Vec<_>>(),
                true,
            )?;
        }
    }
    Ok(out)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, SWEEP_HEADER, rows)
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path, SWEEP_HEADER)
}
