//! Trial schedules, trajectory execution, batches and parameter sweeps.
//!
//! Every random draw comes from its own counter-based substream, keyed by
//! the master seed, trajectory, agent, trial and purpose, so results do not
//! depend on how trajectories are spread over worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, Pooling, World};
use crate::domain::{AgentId, Context, ReferentId, Role, Taxonomy, TrialRecord, Vocabulary};
use crate::error::{ChaiError, Result};
use crate::inference::{Observation, SamplerConfig};
use crate::prior::{PriorSpec, DEFAULT_SPACE_CAP};
use crate::rsa::{CandidateSet, SimParams};

/// Environment variable capping worker threads; `0` or unset means one per
/// core.
pub const THREADS_ENV: &str = "CHAI_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimId {
    /// Two agents, two objects, two words.
    Sim11,
    /// Two agents, two objects, four words and two-word utterances.
    Sim12,
    /// Four agents meeting each other in turn.
    Sim21,
    /// Two agents, four objects in a taxonomy, eight words.
    Sim31,
}

impl SimId {
    pub const ALL: [SimId; 4] = [SimId::Sim11, SimId::Sim12, SimId::Sim21, SimId::Sim31];

    pub fn as_str(self) -> &'static str {
        match self {
            SimId::Sim11 => "sim11",
            SimId::Sim12 => "sim12",
            SimId::Sim21 => "sim21",
            SimId::Sim31 => "sim31",
        }
    }

    pub fn n_agents(self) -> usize {
        match self {
            SimId::Sim21 => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for SimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimId {
    type Err = ChaiError;

    fn from_str(s: &str) -> Result<Self> {
        SimId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ChaiError::config("sim", format!("unknown simulation '{s}'")))
    }
}

/// Which distractors appear alongside a target in the taxonomy game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Distractor always from the other basic-level category.
    Coarse,
    /// Distractor always shares the target's basic-level category.
    Fine,
    /// Fine or coarse with equal probability on each trial.
    Mixed,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Coarse, Condition::Fine, Condition::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Coarse => "coarse",
            Condition::Fine => "fine",
            Condition::Mixed => "mixed",
        }
    }
}

impl FromStr for Condition {
    type Err = ChaiError;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ChaiError::config("condition", format!("unknown condition '{s}'")))
    }
}

/// What a random draw is for; part of the substream key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Schedule = 1,
    Speak = 2,
    Listen = 3,
    Sampler = 4,
    Sweep = 5,
    Bootstrap = 6,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for the substream `(master, trajectory, agent, trial,
/// purpose)`: each key component is folded in with one SplitMix64 step.
pub fn substream_seed(
    master: u64,
    trajectory: u64,
    agent: u64,
    trial: u64,
    purpose: Purpose,
) -> u64 {
    [trajectory, agent, trial, purpose as u64]
        .into_iter()
        .fold(splitmix64(master), |h, part| {
            splitmix64(h ^ splitmix64(part))
        })
}

pub fn substream(
    master: u64,
    trajectory: u64,
    agent: u64,
    trial: u64,
    purpose: Purpose,
) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, trajectory, agent, trial, purpose))
}

/// One trial in a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledTrial {
    pub trial: usize,
    pub block: usize,
    /// Which partner rotation the trial belongs to; 0 outside networks.
    pub round: usize,
    pub speaker: AgentId,
    pub listener: AgentId,
    pub target: ReferentId,
    pub context: Context,
    /// Whether the distractor shares the target's basic-level category.
    pub fine: Option<bool>,
}

impl ScheduledTrial {
    pub fn pair(&self) -> (AgentId, AgentId) {
        (
            self.speaker.min(self.listener),
            self.speaker.max(self.listener),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub sim: SimId,
    pub condition: Option<Condition>,
    pub n_agents: usize,
    pub trials: Vec<ScheduledTrial>,
}

impl Schedule {
    pub fn n_blocks(&self) -> usize {
        self.trials.iter().map(|t| t.block + 1).max().unwrap_or(0)
    }
}

/// Partner rotations of the four-agent network.
pub const ROUND_ROBIN: [[(AgentId, AgentId); 2]; 3] =
    [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
pub const TRIALS_PER_PARTNER: usize = 8;
pub const DYAD_BLOCKS: usize = 15;
pub const TAXONOMY_BLOCKS: usize = 6;
pub const TAXONOMY_REPEATS: usize = 2;

fn shuffled<R: Rng + ?Sized>(items: &[ReferentId], rng: &mut R) -> Vec<ReferentId> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}

/// Builds the trial sequence of a simulation. `condition` must be given for
/// the taxonomy game and only there.
pub fn build_schedule<R: Rng + ?Sized>(
    sim: SimId,
    condition: Option<Condition>,
    taxonomy: &Taxonomy,
    rng: &mut R,
) -> Result<Schedule> {
    if condition.is_some() != (sim == SimId::Sim31) {
        return Err(ChaiError::config(
            "condition",
            format!("a condition is required for sim31 and not allowed for {sim}"),
        ));
    }
    let n = taxonomy.n_leaves();
    let objects: Vec<ReferentId> = (0..n as u8).collect();
    let mut trials = Vec::new();
    match sim {
        SimId::Sim11 | SimId::Sim12 => {
            let context = Context::new(objects.clone())?;
            for block in 0..DYAD_BLOCKS {
                let speaker = block % 2;
                for target in shuffled(&objects, rng) {
                    trials.push(ScheduledTrial {
                        trial: trials.len(),
                        block,
                        round: 0,
                        speaker,
                        listener: 1 - speaker,
                        target,
                        context: context.clone(),
                        fine: None,
                    });
                }
            }
        }
        SimId::Sim21 => {
            let context = Context::new(objects.clone())?;
            let blocks_per_partner = TRIALS_PER_PARTNER / n;
            for (round, pairs) in ROUND_ROBIN.iter().enumerate() {
                let mut first_speaker = [0; 2];
                for (slot, &(a, b)) in pairs.iter().enumerate() {
                    first_speaker[slot] = if rng.random::<bool>() { a } else { b };
                }
                for b in 0..blocks_per_partner {
                    let block = round * blocks_per_partner + b;
                    let orders: Vec<Vec<ReferentId>> =
                        pairs.iter().map(|_| shuffled(&objects, rng)).collect();
                    for pos in 0..n {
                        let trial = block * n + pos;
                        for (slot, &(a, c)) in pairs.iter().enumerate() {
                            let first = first_speaker[slot];
                            let other = if first == a { c } else { a };
                            let speaker = if b % 2 == 0 { first } else { other };
                            trials.push(ScheduledTrial {
                                trial,
                                block,
                                round,
                                speaker,
                                listener: if speaker == a { c } else { a },
                                target: orders[slot][pos],
                                context: context.clone(),
                                fine: None,
                            });
                        }
                    }
                }
            }
        }
        SimId::Sim31 => {
            let condition = condition.expect("checked above");
            let leaves_of = |node| -> Vec<ReferentId> {
                taxonomy
                    .node(node)
                    .map(|nd| nd.extension().iter().collect())
                    .unwrap_or_default()
            };
            for block in 0..TAXONOMY_BLOCKS {
                let mut targets: Vec<ReferentId> = Vec::new();
                for _ in 0..TAXONOMY_REPEATS {
                    targets.extend_from_slice(&objects);
                }
                targets.shuffle(rng);
                for target in targets {
                    let fine = match condition {
                        Condition::Fine => true,
                        Condition::Coarse => false,
                        Condition::Mixed => rng.random::<bool>(),
                    };
                    let parent = taxonomy.basic_parent(target).ok_or_else(|| {
                        ChaiError::domain("taxonomy leaf without a basic-level parent")
                    })?;
                    let siblings = leaves_of(parent);
                    let pool: Vec<ReferentId> = objects
                        .iter()
                        .copied()
                        .filter(|&o| o != target && siblings.contains(&o) == fine)
                        .collect();
                    if pool.is_empty() {
                        return Err(ChaiError::domain(format!(
                            "no {} distractor for referent {target}",
                            if fine { "fine" } else { "coarse" }
                        )));
                    }
                    let distractor = pool[rng.random_range(0..pool.len())];
                    let trial = trials.len();
                    let speaker = trial % 2;
                    trials.push(ScheduledTrial {
                        trial,
                        block,
                        round: 0,
                        speaker,
                        listener: 1 - speaker,
                        target,
                        context: Context::new(vec![
                            target.min(distractor),
                            target.max(distractor),
                        ])?,
                        fine: Some(fine),
                    });
                }
            }
        }
    }
    Ok(Schedule {
        sim,
        condition,
        n_agents: sim.n_agents(),
        trials,
    })
}

/// The default setup of each simulation.
#[derive(Clone, Debug)]
pub struct SimDefaults {
    pub taxonomy: Taxonomy,
    pub vocabulary: Vocabulary,
    pub prior: PriorSpec,
    pub params: SimParams,
}

impl SimDefaults {
    pub fn of(sim: SimId) -> Self {
        match sim {
            SimId::Sim11 => SimDefaults {
                taxonomy: Taxonomy::objects(2).expect("two objects"),
                vocabulary: Vocabulary::numbered(2),
                prior: PriorSpec::uniform(2, 2),
                params: SimParams::default(),
            },
            SimId::Sim12 => SimDefaults {
                taxonomy: Taxonomy::objects(2).expect("two objects"),
                vocabulary: Vocabulary::numbered(4),
                prior: PriorSpec::biased_pairs(0.05),
                params: SimParams {
                    w_c: 0.24,
                    candidates: CandidateSet::SinglesAndPairs,
                    ..SimParams::default()
                },
            },
            SimId::Sim21 => SimDefaults {
                taxonomy: Taxonomy::objects(2).expect("two objects"),
                vocabulary: Vocabulary::numbered(4),
                prior: PriorSpec::community(),
                params: SimParams {
                    alpha_s: 4.0,
                    alpha_l: 4.0,
                    w_c: 0.24,
                    candidates: CandidateSet::SinglesAndPairs,
                    ..SimParams::default()
                },
            },
            SimId::Sim31 => SimDefaults {
                taxonomy: Taxonomy::squares(),
                vocabulary: Vocabulary::numbered(8),
                prior: PriorSpec::TaxonomyPartition,
                params: SimParams::default(),
            },
        }
    }
}

/// A fully specified simulation: world, agent settings and what to record.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub sim: SimId,
    pub condition: Option<Condition>,
    pub world: Arc<World>,
    pub agent: AgentConfig,
    /// Record every agent's beliefs about its partner after each trial.
    pub record_beliefs: bool,
    /// Record speakers' probability of a two-word utterance.
    pub probe_speakers: bool,
}

impl Experiment {
    pub fn new(
        sim: SimId,
        condition: Option<Condition>,
        world: Arc<World>,
        agent: AgentConfig,
    ) -> Result<Self> {
        if condition.is_some() != (sim == SimId::Sim31) {
            return Err(ChaiError::config(
                "condition",
                format!("a condition is required for sim31 only, got {sim}"),
            ));
        }
        if sim == SimId::Sim31
            && world
                .taxonomy
                .leaves()
                .iter()
                .any(|l| world.taxonomy.basic_parent(l.id.0 as u8).is_none())
        {
            return Err(ChaiError::config(
                "taxonomy",
                "sim31 needs every leaf under a basic-level node",
            ));
        }
        let probe_speakers = agent_has_pairs(&agent);
        Ok(Experiment {
            sim,
            condition,
            world,
            agent,
            record_beliefs: false,
            probe_speakers,
        })
    }

    /// The simulation with its default world and parameters.
    pub fn headline(sim: SimId, condition: Option<Condition>, pooling: Pooling) -> Result<Self> {
        let d = SimDefaults::of(sim);
        Self::from_parts(
            sim,
            condition,
            pooling,
            d.taxonomy,
            d.vocabulary,
            d.prior,
            d.params,
            SamplerConfig::default(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        sim: SimId,
        condition: Option<Condition>,
        pooling: Pooling,
        taxonomy: Taxonomy,
        vocabulary: Vocabulary,
        prior: PriorSpec,
        params: SimParams,
        sampler: SamplerConfig,
    ) -> Result<Self> {
        let with_pairs = params.candidates.with_pairs();
        let world = Arc::new(World::new(
            taxonomy,
            vocabulary,
            prior,
            with_pairs,
            DEFAULT_SPACE_CAP,
        )?);
        Self::new(
            sim,
            condition,
            world,
            AgentConfig {
                params,
                pooling,
                sampler,
            },
        )
    }

    pub fn with_params(&self, params: SimParams) -> Self {
        let mut e = self.clone();
        e.agent.params = params;
        e
    }
}

fn agent_has_pairs(agent: &AgentConfig) -> bool {
    agent.params.candidates.with_pairs()
}

/// Agent's beliefs about its current partner after a trial, as per-primitive
/// marginals over `World::space.meanings()`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefSnapshot {
    pub trial: usize,
    pub agent: AgentId,
    pub partner: AgentId,
    pub marginals: Vec<Vec<f64>>,
}

/// A speaker's probability of producing some two-word utterance for the
/// current partner, averaged over the referents in context.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerProbe {
    pub trial: usize,
    pub round: usize,
    pub agent: AgentId,
    pub partner: AgentId,
    /// `false`: taken before `trial` is played; `true`: taken after the
    /// agent's last trial with this partner.
    pub exit: bool,
    pub p_long: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub trajectory: usize,
    pub records: Vec<TrialRecord>,
    pub snapshots: Vec<BeliefSnapshot>,
    pub probes: Vec<SpeakerProbe>,
}

fn probe(agent: &Agent, ctx: &Context, partner: AgentId) -> Result<f64> {
    let mut total = 0.0;
    for &o in ctx.real() {
        let d = agent.speaker_distribution(o, ctx, partner)?;
        total += d
            .support
            .iter()
            .zip(&d.probs)
            .filter(|(u, _)| u.len() == 2)
            .map(|(_, p)| p)
            .sum::<f64>();
    }
    Ok(total / ctx.len() as f64)
}

/// Plays one trajectory: for every scheduled trial the speaker produces, the
/// listener chooses, both see the outcome and update.
pub fn run_trajectory(
    exp: &Experiment,
    trajectory: usize,
    master: u64,
) -> Result<TrajectoryResult> {
    let tj = trajectory as u64;
    let mut sched_rng = substream(master, tj, 0, 0, Purpose::Schedule);
    let schedule = build_schedule(exp.sim, exp.condition, &exp.world.taxonomy, &mut sched_rng)?;
    run_schedule(exp, &schedule, trajectory, master)
}

/// As [`run_trajectory`], with a given schedule.
pub fn run_schedule(
    exp: &Experiment,
    schedule: &Schedule,
    trajectory: usize,
    master: u64,
) -> Result<TrajectoryResult> {
    let tj = trajectory as u64;
    let mut agents = (0..schedule.n_agents)
        .map(|id| Agent::new(id, exp.world.clone(), exp.agent.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(schedule.trials.len());
    let mut snapshots = Vec::new();
    let mut probes = Vec::new();
    for (idx, st) in schedule.trials.iter().enumerate() {
        let (s, l) = (st.speaker, st.listener);
        if s >= agents.len() || l >= agents.len() || s == l {
            return Err(ChaiError::domain(format!(
                "trial {} has an invalid pairing",
                st.trial
            )));
        }
        if exp.probe_speakers {
            for (me, them) in [(s, l), (l, s)] {
                probes.push(SpeakerProbe {
                    trial: st.trial,
                    round: st.round,
                    agent: me,
                    partner: them,
                    exit: false,
                    p_long: probe(&agents[me], &st.context, them)?,
                });
            }
        }
        let t = st.trial as u64;
        let u = agents[s].speak(
            st.target,
            &st.context,
            l,
            &mut substream(master, tj, s as u64, t, Purpose::Speak),
        )?;
        let response = agents[l].listen(
            &u,
            &st.context,
            s,
            &mut substream(master, tj, l as u64, t, Purpose::Listen),
        )?;
        let record = TrialRecord {
            trajectory,
            pair: st.pair(),
            speaker: s,
            listener: l,
            trial: st.trial,
            block: st.block,
            target: st.target,
            utterance: u,
            response,
            correct: response == st.target,
        };
        for (me, them, role) in [(s, l, Role::Speaker), (l, s, Role::Listener)] {
            let obs = Observation {
                record: record.clone(),
                role,
                context: st.context.clone(),
            };
            let mut rng = substream(master, tj, me as u64, t, Purpose::Sampler);
            agents[me].observe(obs, them, &mut rng)?;
        }
        if exp.record_beliefs {
            for (me, them) in [(s, l), (l, s)] {
                snapshots.push(BeliefSnapshot {
                    trial: st.trial,
                    agent: me,
                    partner: them,
                    marginals: agents[me].partner_belief(them)?.primitive_marginals(),
                });
            }
        }
        // leaving this partner: how would each agent now talk to them?
        let last_with_partner = !schedule.trials[idx + 1..]
            .iter()
            .any(|n| n.round == st.round && n.pair() == st.pair());
        if exp.probe_speakers && last_with_partner {
            for (me, them) in [(s, l), (l, s)] {
                probes.push(SpeakerProbe {
                    trial: st.trial,
                    round: st.round,
                    agent: me,
                    partner: them,
                    exit: true,
                    p_long: probe(&agents[me], &st.context, them)?,
                });
            }
        }
        records.push(record);
    }
    Ok(TrajectoryResult {
        trajectory,
        records,
        snapshots,
        probes,
    })
}

/// Worker count from the environment: `CHAI_THREADS`, where `0`, unset or
/// unparsable means one per core.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

/// Runs `f` inside a pool sized by [`thread_count`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| ChaiError::domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `n` independent trajectories, returned in trajectory order.
pub fn run_batch(exp: &Experiment, n: usize, master: u64) -> Result<Vec<TrajectoryResult>> {
    if n == 0 {
        return Err(ChaiError::config("trajectories", "must be at least 1"));
    }
    with_pool(|| {
        (0..n)
            .into_par_iter()
            .map(|t| run_trajectory(exp, t, master))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Values for each swept parameter. `alpha` sets both speaker and listener
/// optimality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub w_c: Vec<f64>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            alpha: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            beta: vec![0.5, 0.7, 0.8, 0.9, 1.0],
            w_c: vec![0.0, 0.12, 0.24, 0.48],
        }
    }
}

impl SweepAxes {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("sweep.alpha", &self.alpha),
            ("sweep.beta", &self.beta),
            ("sweep.w_c", &self.w_c),
        ] {
            if axis.is_empty() {
                return Err(ChaiError::config(name, "axis must not be empty"));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &a in &self.alpha {
            for &b in &self.beta {
                for &w in &self.w_c {
                    out.push((a, b, w));
                }
            }
        }
        out
    }
}

/// Results of one grid cell.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub w_c: f64,
    pub results: Vec<TrajectoryResult>,
}

/// Runs `n` trajectories at every cell of the grid. Cell `i` uses a master
/// seed derived from `(master, i)`.
pub fn sweep_grid(
    base: &Experiment,
    axes: &SweepAxes,
    n: usize,
    master: u64,
) -> Result<Vec<SweepCell>> {
    axes.validate()?;
    if n == 0 {
        return Err(ChaiError::config("trajectories", "must be at least 1"));
    }
    let cells = axes.cells();
    let mut exps = Vec::with_capacity(cells.len());
    for &(alpha, beta, w_c) in &cells {
        let params = SimParams {
            alpha_s: alpha,
            alpha_l: alpha,
            beta,
            w_c,
            ..base.agent.params.clone()
        };
        params.validate()?;
        exps.push(base.with_params(params));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..n).map(move |t| (c, t)))
        .collect();
    let flat = with_pool(|| {
        jobs.par_iter()
            .map(|&(c, t)| run_trajectory(&exps[c], t, cell_seed(master, c)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut it = flat.into_iter();
    Ok(cells
        .into_iter()
        .map(|(alpha, beta, w_c)| SweepCell {
            alpha,
            beta,
            w_c,
            results: it.by_ref().take(n).collect(),
        })
        .collect())
}

/// Master seed of sweep cell `cell`.
pub fn cell_seed(master: u64, cell: usize) -> u64 {
    substream_seed(master, cell as u64, 0, 0, Purpose::Sweep)
}
