//! The adaptive agent: acts by marginalizing over its beliefs about the
//! current partner, and updates those beliefs from what the partner did.
//!
//! How evidence from different partners is shared is controlled by
//! [`Pooling`]: one lexicon for everybody, an independent lexicon per
//! partner, or per-partner lexicons tied together by a community layer.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, Context, ReferentId, Role, Taxonomy, Utterance, Vocabulary};
use crate::error::{ChaiError, Result};
use crate::inference::{
    decay_combine, gibbs_from_logliks, hierarchical_prior_posterior, observation_loglik,
    partner_marginal, posterior_from_loglik, stranger_predictive, Observation, ObservationLog,
    PartnerRef, Posterior, SamplerConfig,
};
use crate::prior::{enumerate_space, HierarchicalPrior, LexiconBelief, LexiconSpace, PriorSpec};
use crate::rsa::{marginal_listener, marginal_speaker, Distribution, SimParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// A single lexicon shared by every partner.
    Complete,
    /// An independent lexicon per partner.
    None,
    /// Per-partner lexicons drawn from a shared community distribution.
    Partial,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Complete => "complete",
            Pooling::None => "none",
            Pooling::Partial => "partial",
        }
    }

    pub fn parse(s: &str) -> Option<Pooling> {
        match s.trim() {
            "complete" => Some(Pooling::Complete),
            "none" => Some(Pooling::None),
            "partial" => Some(Pooling::Partial),
            _ => None,
        }
    }
}

/// Everything agents in one game share: referents, words and the hypothesis
/// space of lexicons.
#[derive(Debug)]
pub struct World {
    pub taxonomy: Taxonomy,
    pub vocabulary: Vocabulary,
    pub prior: PriorSpec,
    pub candidates: Vec<Utterance>,
    pub space: Arc<LexiconSpace>,
    pub hierarchical: Option<Arc<HierarchicalPrior>>,
}

impl World {
    pub fn new(
        taxonomy: Taxonomy,
        vocabulary: Vocabulary,
        prior: PriorSpec,
        with_pairs: bool,
        space_cap: usize,
    ) -> Result<Self> {
        prior.validate(vocabulary.len(), &taxonomy)?;
        let space = Arc::new(enumerate_space(
            &prior,
            vocabulary.len(),
            &taxonomy,
            space_cap,
        )?);
        let hierarchical = match prior {
            PriorSpec::HierarchicalDm { .. } => Some(Arc::new(HierarchicalPrior::new(
                &prior,
                vocabulary.len(),
                &taxonomy,
            )?)),
            _ => None,
        };
        let candidates = vocabulary.candidates(with_pairs);
        Ok(World {
            taxonomy,
            vocabulary,
            prior,
            candidates,
            space,
            hierarchical,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub params: SimParams,
    pub pooling: Pooling,
    pub sampler: SamplerConfig,
}

// stream key for evidence that is pooled across partners
const POOLED: AgentId = AgentId::MAX;

#[derive(Clone, Debug)]
pub struct Agent {
    pub id: AgentId,
    world: Arc<World>,
    config: AgentConfig,
    log: ObservationLog,
    // per-stream, per-observation log-likelihood rows over the space
    rows: BTreeMap<AgentId, Vec<Vec<f64>>>,
    posterior: Posterior,
}

impl Agent {
    pub fn new(id: AgentId, world: Arc<World>, config: AgentConfig) -> Result<Self> {
        config.params.validate()?;
        if config.params.candidates.with_pairs() != world.candidates.iter().any(|u| u.len() == 2) {
            return Err(ChaiError::config(
                "params.candidates",
                "candidate set disagrees with the world's utterances",
            ));
        }
        let prior_belief = LexiconBelief::prior(world.space.clone());
        let posterior = match config.pooling {
            Pooling::Complete => Posterior::Flat(prior_belief),
            Pooling::None => Posterior::PerPartner {
                prior: prior_belief,
                partners: BTreeMap::new(),
            },
            Pooling::Partial => {
                config.sampler.validate()?;
                let hier = world.hierarchical.clone().ok_or_else(|| {
                    ChaiError::config("pooling", "partial pooling needs a hierarchical_dm prior")
                })?;
                Posterior::Hierarchical(hierarchical_prior_posterior(world.space.clone(), hier))
            }
        };
        Ok(Agent {
            id,
            world,
            config,
            log: ObservationLog::new(),
            rows: BTreeMap::new(),
            posterior,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    fn partner_ref(&self, partner: AgentId) -> PartnerRef {
        let known = match &self.posterior {
            Posterior::Flat(_) => true,
            Posterior::PerPartner { partners, .. } => partners.contains_key(&partner),
            Posterior::Hierarchical(h) => h.partners.contains(&partner),
        };
        if known {
            PartnerRef::Known(partner)
        } else {
            PartnerRef::New
        }
    }

    /// Current beliefs about `partner`'s lexicon; a partner never observed
    /// is treated as a stranger.
    pub fn partner_belief(&self, partner: AgentId) -> Result<LexiconBelief> {
        partner_marginal(&self.posterior, self.partner_ref(partner))
    }

    /// Beliefs about the lexicon of someone the agent has never met.
    pub fn stranger_belief(&self) -> LexiconBelief {
        stranger_predictive(&self.posterior)
    }

    pub fn speaker_distribution(
        &self,
        target: ReferentId,
        ctx: &Context,
        partner: AgentId,
    ) -> Result<Distribution<Utterance>> {
        let belief = self.partner_belief(partner)?;
        marginal_speaker(
            &belief,
            target,
            ctx,
            &self.config.params,
            &self.world.candidates,
        )
    }

    pub fn listener_distribution(
        &self,
        u: &Utterance,
        ctx: &Context,
        partner: AgentId,
    ) -> Result<Distribution<ReferentId>> {
        let belief = self.partner_belief(partner)?;
        marginal_listener(&belief, u, ctx, &self.config.params, &self.world.candidates)
    }

    pub fn speak<R: Rng + ?Sized>(
        &self,
        target: ReferentId,
        ctx: &Context,
        partner: AgentId,
        rng: &mut R,
    ) -> Result<Utterance> {
        Ok(*self.speaker_distribution(target, ctx, partner)?.sample(rng))
    }

    pub fn listen<R: Rng + ?Sized>(
        &self,
        u: &Utterance,
        ctx: &Context,
        partner: AgentId,
        rng: &mut R,
    ) -> Result<ReferentId> {
        Ok(*self.listener_distribution(u, ctx, partner)?.sample(rng))
    }

    /// Conditions on a trial played with `partner`. `rng` is used only by
    /// the sampler under partial pooling.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        obs: Observation,
        partner: AgentId,
        rng: &mut R,
    ) -> Result<()> {
        let rec = &obs.record;
        let (me, them) = match obs.role {
            Role::Speaker => (rec.speaker, rec.listener),
            Role::Listener => (rec.listener, rec.speaker),
        };
        if me != self.id || them != partner {
            return Err(ChaiError::domain(format!(
                "agent {} cannot observe trial {} as {:?} with partner {partner}",
                self.id, rec.trial, obs.role
            )));
        }
        if rec.correct != (rec.target == rec.response) {
            return Err(ChaiError::domain(
                "record correctness disagrees with target and response",
            ));
        }
        let row = observation_loglik(
            &self.world.space,
            &obs,
            &self.config.params,
            &self.world.candidates,
        )?;
        self.log.push(partner, obs)?;
        let stream = match self.config.pooling {
            Pooling::Complete => POOLED,
            _ => partner,
        };
        self.rows.entry(stream).or_default().push(row);
        self.refresh(partner, rng)
    }

    fn stream_loglik(&self, stream: AgentId) -> Vec<f64> {
        decay_combine(
            &self.rows[&stream],
            self.config.params.beta,
            self.world.space.len(),
        )
    }

    fn refresh<R: Rng + ?Sized>(&mut self, partner: AgentId, rng: &mut R) -> Result<()> {
        let space = self.world.space.clone();
        match self.config.pooling {
            Pooling::Complete => {
                self.posterior =
                    Posterior::Flat(posterior_from_loglik(space, &self.stream_loglik(POOLED)));
            }
            Pooling::None => {
                let updated = posterior_from_loglik(space, &self.stream_loglik(partner));
                if let Posterior::PerPartner { partners, .. } = &mut self.posterior {
                    partners.insert(partner, updated);
                }
            }
            Pooling::Partial => {
                let partners: Vec<AgentId> = self.rows.keys().copied().collect();
                let logliks: Vec<Vec<f64>> =
                    partners.iter().map(|&k| self.stream_loglik(k)).collect();
                let hier = self
                    .world
                    .hierarchical
                    .clone()
                    .ok_or_else(|| ChaiError::domain("missing hierarchical prior"))?;
                let post =
                    gibbs_from_logliks(hier, space, partners, &logliks, self.config.sampler, rng)?;
                self.posterior = Posterior::Hierarchical(post);
            }
        }
        Ok(())
    }
}
