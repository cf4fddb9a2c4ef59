//! Beliefs about partners' lexicons.
//!
//! Observations are linked to lexicons through the partner's behavior: when
//! the agent listened, the partner's utterance is scored under the pragmatic
//! speaker; when the agent spoke, the partner's choice is scored under the
//! literal listener. Older observations are down-weighted geometrically within
//! each partner's own stream.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, Context, Lexicon, Role, Taxonomy, TrialRecord, Utterance};
use crate::error::{ChaiError, Result};
use crate::prior::{dm_log_marginal, log_sum_exp, HierarchicalPrior, LexiconBelief, LexiconSpace};
use crate::rsa::{l0_prob, s1_probs_into, SimParams};

/// One trial as seen by one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub record: TrialRecord,
    /// The observing agent's role on that trial.
    pub role: Role,
    pub context: Context,
}

/// Per-partner observation streams, in trial order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationLog {
    streams: BTreeMap<AgentId, Vec<Observation>>,
    chronology: Vec<(AgentId, usize)>,
}

impl ObservationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, partner: AgentId, obs: Observation) -> Result<()> {
        let stream = self.streams.entry(partner).or_default();
        if let Some(last) = stream.last() {
            if obs.record.trial <= last.record.trial {
                return Err(ChaiError::domain(format!(
                    "trial {} does not follow trial {} for partner {partner}",
                    obs.record.trial, last.record.trial
                )));
            }
        }
        stream.push(obs);
        self.chronology.push((partner, stream.len() - 1));
        Ok(())
    }

    pub fn partner(&self, k: AgentId) -> &[Observation] {
        self.streams.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn partners(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.streams.keys().copied()
    }

    /// Every observation in the order it was recorded.
    pub fn chronological(&self) -> impl Iterator<Item = &Observation> + '_ {
        self.chronology.iter().map(|&(k, i)| &self.streams[&k][i])
    }

    pub fn len(&self) -> usize {
        self.chronology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chronology.is_empty()
    }
}

/// Log-likelihood of one observation under every lexicon of `space`.
pub fn observation_loglik(
    space: &LexiconSpace,
    obs: &Observation,
    params: &SimParams,
    candidates: &[Utterance],
) -> Result<Vec<f64>> {
    let universe = space.universe();
    let ctx = obs.context.set();
    let rec = &obs.record;
    if !ctx.contains(rec.target) || !ctx.contains(rec.response) {
        return Err(ChaiError::domain(
            "observation target or response outside its context",
        ));
    }
    let mut out = Vec::with_capacity(space.len());
    match obs.role {
        Role::Listener => {
            let ui = candidates
                .iter()
                .position(|c| *c == rec.utterance)
                .ok_or_else(|| ChaiError::domain("observed utterance is not a candidate"))?;
            let mut buf = vec![0.0; candidates.len()];
            for i in 0..space.len() {
                s1_probs_into(
                    space.exts(i),
                    rec.target,
                    ctx,
                    universe,
                    params,
                    candidates,
                    &mut buf,
                );
                out.push(buf[ui].ln());
            }
        }
        Role::Speaker => {
            for i in 0..space.len() {
                let p = l0_prob(
                    space.exts(i),
                    &rec.utterance,
                    Some(rec.response),
                    ctx,
                    universe,
                    params.epsilon,
                );
                out.push(p.ln());
            }
        }
    }
    Ok(out)
}

/// `sum_tau beta^tau * rows[T-1-tau]`, with the newest row undecayed.
pub fn decay_combine(rows: &[Vec<f64>], beta: f64, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut w = 1.0;
    for row in rows.iter().rev() {
        for (a, r) in acc.iter_mut().zip(row) {
            *a += w * r;
        }
        w *= beta;
    }
    acc
}

/// Decayed log-likelihood of a partner stream under a single lexicon.
pub fn decayed_loglik(
    lex: &Lexicon,
    partner_log: &[Observation],
    params: &SimParams,
    candidates: &[Utterance],
    tax: &Taxonomy,
) -> Result<f64> {
    if !(params.beta > 0.0 && params.beta <= 1.0) {
        return Err(ChaiError::domain("beta must lie in (0, 1]"));
    }
    let single = LexiconSpace::from_weighted(vec![lex.clone()], vec![0.0], tax)?;
    let rows = partner_log
        .iter()
        .map(|obs| observation_loglik(&single, obs, params, candidates))
        .collect::<Result<Vec<_>>>()?;
    Ok(decay_combine(&rows, params.beta, 1)[0])
}

/// Posterior from prior plus decayed log-likelihood, normalized.
pub fn posterior_from_loglik(space: Arc<LexiconSpace>, loglik: &[f64]) -> LexiconBelief {
    let lw: Vec<f64> = space
        .log_prior()
        .iter()
        .zip(loglik)
        .map(|(p, l)| p + l)
        .collect();
    let z = log_sum_exp(&lw);
    let probs = lw.iter().map(|w| (w - z).exp()).collect();
    LexiconBelief::new(space, probs)
}

/// Exact posterior over a single partner's lexicon by enumeration.
pub fn exact_posterior(
    space: Arc<LexiconSpace>,
    partner_log: &[Observation],
    params: &SimParams,
    candidates: &[Utterance],
) -> Result<LexiconBelief> {
    let rows = partner_log
        .iter()
        .map(|obs| observation_loglik(&space, obs, params, candidates))
        .collect::<Result<Vec<_>>>()?;
    let ll = decay_combine(&rows, params.beta, space.len());
    Ok(posterior_from_loglik(space, &ll))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub sweeps: usize,
    pub burn_in: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sweeps: 5000,
            burn_in: 1000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps > self.burn_in {
            Ok(())
        } else {
            Err(ChaiError::config("sampler.sweeps", "must exceed burn_in"))
        }
    }
}

/// Joint posterior over partner lexicons and community concentration.
#[derive(Clone, Debug)]
pub struct HierarchicalPosterior {
    pub space: Arc<LexiconSpace>,
    pub prior: Arc<HierarchicalPrior>,
    pub partners: Vec<AgentId>,
    /// Rao-Blackwellized marginal over each partner's lexicon.
    pub partner_probs: Vec<Vec<f64>>,
    /// Per primitive, marginal over alpha grid points.
    pub alpha_probs: Vec<Vec<f64>>,
    /// Predictive over an unseen partner's lexicon.
    pub stranger: Vec<f64>,
    /// Retained joint states, flattened `[sample][partner]`.
    pub sample_lexicons: Vec<u32>,
    /// Retained alpha grid indices, flattened `[sample][primitive]`.
    pub sample_alpha: Vec<u16>,
    pub n_samples: usize,
}

#[derive(Clone, Debug)]
pub enum Posterior {
    /// One lexicon shared by every partner.
    Flat(LexiconBelief),
    /// Independent lexicon per partner, each starting from the same prior.
    PerPartner {
        prior: LexiconBelief,
        partners: BTreeMap<AgentId, LexiconBelief>,
    },
    Hierarchical(HierarchicalPosterior),
}

/// Which partner a question is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartnerRef {
    Known(AgentId),
    /// Someone with no observations yet.
    New,
}

/// Beliefs about partner `k`'s lexicon.
pub fn partner_marginal(post: &Posterior, k: PartnerRef) -> Result<LexiconBelief> {
    match (post, k) {
        (Posterior::Flat(b), _) => Ok(b.clone()),
        (Posterior::PerPartner { prior, .. }, PartnerRef::New) => Ok(prior.clone()),
        (Posterior::PerPartner { partners, .. }, PartnerRef::Known(id)) => partners
            .get(&id)
            .cloned()
            .ok_or_else(|| ChaiError::domain(format!("no beliefs about partner {id}"))),
        (Posterior::Hierarchical(h), PartnerRef::New) => {
            Ok(LexiconBelief::new(h.space.clone(), h.stranger.clone()))
        }
        (Posterior::Hierarchical(h), PartnerRef::Known(id)) => {
            let i = h
                .partners
                .iter()
                .position(|&p| p == id)
                .ok_or_else(|| ChaiError::domain(format!("no beliefs about partner {id}")))?;
            Ok(LexiconBelief::new(
                h.space.clone(),
                h.partner_probs[i].clone(),
            ))
        }
    }
}

/// Beliefs about a stranger's lexicon.
pub fn stranger_predictive(post: &Posterior) -> LexiconBelief {
    match post {
        Posterior::Flat(b) => b.clone(),
        Posterior::PerPartner { prior, .. } => prior.clone(),
        Posterior::Hierarchical(h) => LexiconBelief::new(h.space.clone(), h.stranger.clone()),
    }
}

/// Systematic-scan Gibbs sampler over partner lexicons and per-primitive
/// alpha grid points, with the community distribution integrated out.
pub struct GibbsSampler<'a> {
    prior: &'a HierarchicalPrior,
    space: &'a LexiconSpace,
    logliks: &'a [Vec<f64>],
    leaves: Vec<u8>,
    n_prims: usize,
    n_leaves: usize,
    /// Current lexicon index of each partner.
    pub phi: Vec<usize>,
    /// Current alpha grid index of each primitive.
    pub alpha_idx: Vec<usize>,
    counts: Vec<usize>,
    lp_buf: Vec<f64>,
    pred_buf: Vec<f64>,
    grid_buf: Vec<f64>,
}

/// Running sums for the Rao-Blackwellized estimates.
struct Accumulators {
    partner: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    stranger: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// `logliks[k]` is partner `k`'s decayed log-likelihood over `space`,
    /// whose lexicons must assign a leaf to every primitive.
    pub fn new(
        prior: &'a HierarchicalPrior,
        space: &'a LexiconSpace,
        logliks: &'a [Vec<f64>],
    ) -> Result<Self> {
        let n_prims = space.n_prims();
        let n_leaves = prior.n_leaves;
        if prior.grids.len() != n_prims {
            return Err(ChaiError::domain(
                "hierarchical prior and space disagree on vocabulary size",
            ));
        }
        let mut leaves = Vec::with_capacity(space.len() * n_prims);
        for i in 0..space.len() {
            for p in 0..n_prims {
                let m = space.meaning_index(i, p as u8);
                if m >= n_leaves {
                    return Err(ChaiError::domain(
                        "hierarchical spaces map every primitive to a leaf",
                    ));
                }
                leaves.push(m as u8);
            }
        }
        if logliks.iter().any(|l| l.len() != space.len()) {
            return Err(ChaiError::domain(
                "log-likelihood length differs from space size",
            ));
        }
        let mut sampler = GibbsSampler {
            prior,
            space,
            logliks,
            leaves,
            n_prims,
            n_leaves,
            phi: vec![0; logliks.len()],
            alpha_idx: vec![0; n_prims],
            counts: vec![0; n_prims * n_leaves],
            lp_buf: vec![0.0; space.len()],
            pred_buf: vec![0.0; n_prims * n_leaves],
            grid_buf: Vec::new(),
        };
        // start each partner at its most likely lexicon under the marginal
        // prior, and alpha at its most probable grid point
        for (k, ll) in logliks.iter().enumerate() {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, (l, p)) in ll.iter().zip(space.log_prior()).enumerate() {
                if l + p > best_v {
                    best_v = l + p;
                    best = i;
                }
            }
            sampler.phi[k] = best;
        }
        for (p, grid) in prior.grids.iter().enumerate() {
            let mut best = 0;
            for (g, &w) in grid.probs().iter().enumerate() {
                if w > grid.probs()[best] {
                    best = g;
                }
            }
            sampler.alpha_idx[p] = best;
        }
        sampler.recount();
        Ok(sampler)
    }

    fn recount(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for &i in &self.phi {
            for p in 0..self.n_prims {
                self.counts[p * self.n_leaves + self.leaves[i * self.n_prims + p] as usize] += 1;
            }
        }
    }

    /// Overwrites the chain state.
    pub fn set_state(&mut self, phi: &[usize], alpha_idx: &[usize]) {
        self.phi.copy_from_slice(phi);
        self.alpha_idx.copy_from_slice(alpha_idx);
        self.recount();
    }

    fn adjust(&mut self, i: usize, delta: isize) {
        for p in 0..self.n_prims {
            let c =
                &mut self.counts[p * self.n_leaves + self.leaves[i * self.n_prims + p] as usize];
            *c = (*c as isize + delta) as usize;
        }
    }

    // log predictive of each leaf for each primitive, given current counts
    fn fill_predictive(&mut self, n_others: usize) {
        let lambda = self.prior.lambda;
        let denom = (lambda + n_others as f64).ln();
        for p in 0..self.n_prims {
            let alpha = &self.prior.grids[p].points()[self.alpha_idx[p]];
            for j in 0..self.n_leaves {
                let n = self.counts[p * self.n_leaves + j] as f64;
                self.pred_buf[p * self.n_leaves + j] = (lambda * alpha[j] + n).ln() - denom;
            }
        }
    }

    fn sweep_inner<R: Rng + ?Sized>(&mut self, rng: &mut R, mut acc: Option<&mut Accumulators>) {
        let n_partners = self.phi.len();
        let n_lex = self.space.len();
        for k in 0..n_partners {
            let current = self.phi[k];
            self.adjust(current, -1);
            self.fill_predictive(n_partners - 1);
            let ll = &self.logliks[k];
            for i in 0..n_lex {
                let mut v = ll[i];
                let row = &self.leaves[i * self.n_prims..(i + 1) * self.n_prims];
                for (p, &leaf) in row.iter().enumerate() {
                    v += self.pred_buf[p * self.n_leaves + leaf as usize];
                }
                self.lp_buf[i] = v;
            }
            normalize_in_place(&mut self.lp_buf);
            if let Some(acc) = acc.as_deref_mut() {
                for (a, p) in acc.partner[k].iter_mut().zip(&self.lp_buf) {
                    *a += p;
                }
            }
            let next = draw(&self.lp_buf, rng);
            self.phi[k] = next;
            self.adjust(next, 1);
        }
        for p in 0..self.n_prims {
            let grid = &self.prior.grids[p];
            let counts = &self.counts[p * self.n_leaves..(p + 1) * self.n_leaves];
            self.grid_buf.clear();
            for (g, alpha) in grid.points().iter().enumerate() {
                self.grid_buf
                    .push(grid.log_probs()[g] + dm_log_marginal(alpha, self.prior.lambda, counts));
            }
            normalize_in_place(&mut self.grid_buf);
            if let Some(acc) = acc.as_deref_mut() {
                for (a, w) in acc.alpha[p].iter_mut().zip(&self.grid_buf) {
                    *a += w;
                }
            }
            self.alpha_idx[p] = draw(&self.grid_buf, rng);
        }
        if let Some(acc) = acc {
            self.fill_predictive(n_partners);
            for i in 0..n_lex {
                let row = &self.leaves[i * self.n_prims..(i + 1) * self.n_prims];
                let lp: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(p, &leaf)| self.pred_buf[p * self.n_leaves + leaf as usize])
                    .sum();
                acc.stranger[i] += lp.exp();
            }
        }
    }

    /// One systematic scan: every partner lexicon, then every alpha.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.sweep_inner(rng, None);
    }

    /// Runs the chain and summarizes the retained sweeps.
    pub fn run<R: Rng + ?Sized>(
        mut self,
        partners: Vec<AgentId>,
        space: Arc<LexiconSpace>,
        prior: Arc<HierarchicalPrior>,
        cfg: SamplerConfig,
        rng: &mut R,
    ) -> Result<HierarchicalPosterior> {
        cfg.validate()?;
        let n_lex = self.space.len();
        let mut acc = Accumulators {
            partner: vec![vec![0.0; n_lex]; self.phi.len()],
            alpha: self
                .prior
                .grids
                .iter()
                .map(|g| vec![0.0; g.len()])
                .collect(),
            stranger: vec![0.0; n_lex],
        };
        let kept = cfg.sweeps - cfg.burn_in;
        let mut sample_lexicons = Vec::with_capacity(kept * self.phi.len());
        let mut sample_alpha = Vec::with_capacity(kept * self.n_prims);
        for s in 0..cfg.sweeps {
            if s < cfg.burn_in {
                self.sweep_inner(rng, None);
            } else {
                self.sweep_inner(rng, Some(&mut acc));
                sample_lexicons.extend(self.phi.iter().map(|&i| i as u32));
                sample_alpha.extend(self.alpha_idx.iter().map(|&g| g as u16));
            }
        }
        let scale = 1.0 / kept as f64;
        let finish = |v: Vec<f64>| -> Vec<f64> {
            let mut v: Vec<f64> = v.into_iter().map(|x| x * scale).collect();
            let z: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= z);
            v
        };
        Ok(HierarchicalPosterior {
            space,
            prior,
            partners,
            partner_probs: acc.partner.into_iter().map(finish).collect(),
            alpha_probs: acc.alpha.into_iter().map(finish).collect(),
            stranger: finish(acc.stranger),
            sample_lexicons,
            sample_alpha,
            n_samples: kept,
        })
    }
}

fn normalize_in_place(lw: &mut [f64]) {
    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in lw.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    lw.iter_mut().for_each(|x| *x /= z);
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Hierarchical posterior with no partner data: the analytic prior.
pub fn hierarchical_prior_posterior(
    space: Arc<LexiconSpace>,
    prior: Arc<HierarchicalPrior>,
) -> HierarchicalPosterior {
    HierarchicalPosterior {
        stranger: space.prior_probs(),
        alpha_probs: prior.grids.iter().map(|g| g.probs().to_vec()).collect(),
        space,
        prior,
        partners: Vec::new(),
        partner_probs: Vec::new(),
        sample_lexicons: Vec::new(),
        sample_alpha: Vec::new(),
        n_samples: 0,
    }
}

/// Hierarchical posterior from per-partner decayed log-likelihoods.
pub fn gibbs_from_logliks<R: Rng + ?Sized>(
    prior: Arc<HierarchicalPrior>,
    space: Arc<LexiconSpace>,
    partners: Vec<AgentId>,
    logliks: &[Vec<f64>],
    cfg: SamplerConfig,
    rng: &mut R,
) -> Result<HierarchicalPosterior> {
    cfg.validate()?;
    if partners.len() != logliks.len() {
        return Err(ChaiError::domain("one log-likelihood vector per partner"));
    }
    if partners.is_empty() {
        return Ok(hierarchical_prior_posterior(space, prior));
    }
    let sampler = GibbsSampler::new(&prior, &space, logliks)?;
    sampler.run(partners, space.clone(), prior.clone(), cfg, rng)
}

/// Hierarchical posterior given every partner's observations.
pub fn gibbs_posterior<R: Rng + ?Sized>(
    prior: Arc<HierarchicalPrior>,
    space: Arc<LexiconSpace>,
    log: &ObservationLog,
    params: &SimParams,
    candidates: &[Utterance],
    cfg: SamplerConfig,
    rng: &mut R,
) -> Result<HierarchicalPosterior> {
    let mut partners = Vec::new();
    let mut logliks = Vec::new();
    for k in log.partners() {
        let stream = log.partner(k);
        if stream.is_empty() {
            continue;
        }
        let rows = stream
            .iter()
            .map(|obs| observation_loglik(&space, obs, params, candidates))
            .collect::<Result<Vec<_>>>()?;
        partners.push(k);
        logliks.push(decay_combine(&rows, params.beta, space.len()));
    }
    gibbs_from_logliks(prior, space, partners, &logliks, cfg, rng)
}
