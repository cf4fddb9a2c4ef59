//! Literal listener, pragmatic speaker, and the speaker and listener that act
//! on expected utility under uncertainty about the partner's lexicon.
//!
//! Every level mixes in `epsilon` uniform noise over its own support, so all
//! likelihoods are bounded away from zero when `epsilon > 0`.

use serde::{Deserialize, Serialize};

use crate::domain::{
    conjoined, contradiction_in, utterance_cost, Context, Lexicon, ReferentId, ReferentSet,
    Taxonomy, Utterance,
};
use crate::error::{ChaiError, Result};
use crate::prior::LexiconBelief;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSet {
    Singles,
    SinglesAndPairs,
}

impl CandidateSet {
    pub fn with_pairs(self) -> bool {
        matches!(self, CandidateSet::SinglesAndPairs)
    }
}

/// Agent parameters shared by production, comprehension and learning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub alpha_s: f64,
    pub alpha_l: f64,
    pub w_c: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub candidates: CandidateSet,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            alpha_s: 8.0,
            alpha_l: 8.0,
            w_c: 0.0,
            beta: 0.8,
            epsilon: 0.01,
            candidates: CandidateSet::Singles,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ChaiError::config(format!("params.{field}"), msg))
            }
        };
        check(
            self.alpha_s >= 0.0 && self.alpha_s.is_finite(),
            "alpha_s",
            "must be finite and >= 0",
        )?;
        check(
            self.alpha_l >= 0.0 && self.alpha_l.is_finite(),
            "alpha_l",
            "must be finite and >= 0",
        )?;
        check((0.0..=1.0).contains(&self.w_c), "w_c", "must lie in [0, 1]")?;
        check(
            self.beta > 0.0 && self.beta <= 1.0,
            "beta",
            "must lie in (0, 1]",
        )?;
        check(
            (0.0..1.0).contains(&self.epsilon),
            "epsilon",
            "must lie in [0, 1)",
        )?;
        Ok(())
    }
}

/// A finite distribution with a parallel probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    pub support: Vec<T>,
    pub probs: Vec<f64>,
}

impl<T: PartialEq> Distribution<T> {
    pub fn prob(&self, x: &T) -> f64 {
        self.support
            .iter()
            .position(|s| s == x)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Inverse-CDF draw with a uniform `u` in `[0, 1)`.
    pub fn pick(&self, u: f64) -> &T {
        let mut acc = 0.0;
        for (x, p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return x;
            }
        }
        // rounding left a sliver above the last cumulative value
        let last = self
            .probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1);
        &self.support[last]
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> &T {
        self.pick(rng.random::<f64>())
    }
}

/// In-place softmax of `scale * x`, then an `epsilon` uniform mixture.
pub(crate) fn softmax_mix(xs: &mut [f64], scale: f64, epsilon: f64) {
    let n = xs.len() as f64;
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || scale == 0.0 {
        xs.iter_mut().for_each(|x| *x = 1.0 / n);
    } else {
        let mut z = 0.0;
        for x in xs.iter_mut() {
            *x = (scale * (*x - m)).exp();
            z += *x;
        }
        xs.iter_mut().for_each(|x| *x /= z);
    }
    if epsilon > 0.0 {
        xs.iter_mut()
            .for_each(|x| *x = epsilon / n + (1.0 - epsilon) * *x);
    }
}

/// `L0^eps(target | u)` over `ctx` plus the null object (`target = None`).
#[inline]
pub(crate) fn l0_prob(
    exts: &[ReferentSet],
    u: &Utterance,
    target: Option<ReferentId>,
    ctx: ReferentSet,
    universe: ReferentSet,
    epsilon: f64,
) -> f64 {
    let n = (ctx.len() + 1) as f64;
    let base = if contradiction_in(exts, u, universe) {
        1.0 / n
    } else {
        let truth = conjoined(exts, u).intersect(ctx);
        let z = (truth.len() + 1) as f64;
        match target {
            None => 1.0 / z,
            Some(o) if truth.contains(o) => 1.0 / z,
            Some(_) => 0.0,
        }
    };
    epsilon / n + (1.0 - epsilon) * base
}

/// Speaker utility `(1 - w_C) log L0(o|u) - w_C c(u)`.
#[inline]
pub(crate) fn utility(
    exts: &[ReferentSet],
    u: &Utterance,
    o: ReferentId,
    ctx: ReferentSet,
    universe: ReferentSet,
    params: &SimParams,
) -> f64 {
    let cost = params.w_c * utterance_cost(u);
    if params.w_c >= 1.0 {
        return -cost;
    }
    (1.0 - params.w_c) * l0_prob(exts, u, Some(o), ctx, universe, params.epsilon).ln() - cost
}

/// Fills `out` with `S1^eps(. | o)` over `candidates`.
pub(crate) fn s1_probs_into(
    exts: &[ReferentSet],
    o: ReferentId,
    ctx: ReferentSet,
    universe: ReferentSet,
    params: &SimParams,
    candidates: &[Utterance],
    out: &mut [f64],
) {
    for (slot, u) in out.iter_mut().zip(candidates) {
        *slot = utility(exts, u, o, ctx, universe, params);
    }
    softmax_mix(out, params.alpha_s, params.epsilon);
}

fn check_target(o: ReferentId, ctx: &Context) -> Result<()> {
    if ctx.contains(o) {
        Ok(())
    } else {
        Err(ChaiError::domain(format!("target {o} not in context")))
    }
}

fn check_context(ctx: &Context, universe: ReferentSet) -> Result<()> {
    if ctx.is_empty() {
        return Err(ChaiError::domain("empty context"));
    }
    if !universe.is_superset(ctx.set()) {
        return Err(ChaiError::domain(
            "context has referents outside the universe",
        ));
    }
    Ok(())
}

fn lexicon_exts(lex: &Lexicon, tax: &Taxonomy, u: Option<&Utterance>) -> Result<Vec<ReferentSet>> {
    if let Some(u) = u {
        for &p in u.primitives() {
            lex.meaning(p)?;
        }
    }
    lex.extensions(tax)
}

/// Literal listener with null object and noise. Support is the context's
/// real referents in order, then `None` for the null object.
pub fn literal_listener(
    u: &Utterance,
    lex: &Lexicon,
    ctx: &Context,
    universe: ReferentSet,
    epsilon: f64,
    tax: &Taxonomy,
) -> Result<Distribution<Option<ReferentId>>> {
    check_context(ctx, universe)?;
    let exts = lexicon_exts(lex, tax, Some(u))?;
    let cset = ctx.set();
    let mut support: Vec<Option<ReferentId>> = ctx.real().iter().map(|&r| Some(r)).collect();
    support.push(None);
    let probs = support
        .iter()
        .map(|&t| l0_prob(&exts, u, t, cset, universe, epsilon))
        .collect();
    Ok(Distribution { support, probs })
}

/// Pragmatic speaker for a fixed lexicon.
pub fn pragmatic_speaker(
    o: ReferentId,
    lex: &Lexicon,
    ctx: &Context,
    universe: ReferentSet,
    params: &SimParams,
    candidates: &[Utterance],
    tax: &Taxonomy,
) -> Result<Distribution<Utterance>> {
    check_context(ctx, universe)?;
    check_target(o, ctx)?;
    if candidates.is_empty() {
        return Err(ChaiError::domain("no candidate utterances"));
    }
    let exts = lexicon_exts(lex, tax, None)?;
    for u in candidates {
        for &p in u.primitives() {
            lex.meaning(p)?;
        }
    }
    let mut probs = vec![0.0; candidates.len()];
    s1_probs_into(
        &exts,
        o,
        ctx.set(),
        universe,
        params,
        candidates,
        &mut probs,
    );
    Ok(Distribution {
        support: candidates.to_vec(),
        probs,
    })
}

fn check_belief(belief: &LexiconBelief) -> Result<()> {
    if belief.probs.is_empty() || !belief.probs.iter().any(|&p| p > 0.0) {
        return Err(ChaiError::domain("posterior has empty support"));
    }
    Ok(())
}

/// Expected speaker utility of every candidate under `belief`.
pub fn expected_utilities(
    belief: &LexiconBelief,
    o: ReferentId,
    ctx: &Context,
    params: &SimParams,
    candidates: &[Utterance],
) -> Result<Vec<f64>> {
    check_belief(belief)?;
    let universe = belief.space.universe();
    check_context(ctx, universe)?;
    check_target(o, ctx)?;
    let cset = ctx.set();
    let mut eu = vec![0.0; candidates.len()];
    for (i, &w) in belief.probs.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let exts = belief.space.exts(i);
        for (acc, u) in eu.iter_mut().zip(candidates) {
            *acc += w * utility(exts, u, o, cset, universe, params);
        }
    }
    Ok(eu)
}

/// Speaker acting on expected utility over the partner's lexicon.
pub fn marginal_speaker(
    belief: &LexiconBelief,
    o: ReferentId,
    ctx: &Context,
    params: &SimParams,
    candidates: &[Utterance],
) -> Result<Distribution<Utterance>> {
    if candidates.is_empty() {
        return Err(ChaiError::domain("no candidate utterances"));
    }
    let mut probs = expected_utilities(belief, o, ctx, params, candidates)?;
    softmax_mix(&mut probs, params.alpha_s, params.epsilon);
    Ok(Distribution {
        support: candidates.to_vec(),
        probs,
    })
}

/// Listener choosing among the real referents by expected log speaker
/// likelihood. Never returns the null object.
pub fn marginal_listener(
    belief: &LexiconBelief,
    u: &Utterance,
    ctx: &Context,
    params: &SimParams,
    candidates: &[Utterance],
) -> Result<Distribution<ReferentId>> {
    check_belief(belief)?;
    let universe = belief.space.universe();
    check_context(ctx, universe)?;
    let ui = candidates
        .iter()
        .position(|c| c == u)
        .ok_or_else(|| ChaiError::domain(format!("utterance {u:?} is not a candidate")))?;
    let cset = ctx.set();
    let mut scores = vec![0.0; ctx.len()];
    let mut buf = vec![0.0; candidates.len()];
    for (i, &w) in belief.probs.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let exts = belief.space.exts(i);
        for (score, &o) in scores.iter_mut().zip(ctx.real()) {
            s1_probs_into(exts, o, cset, universe, params, candidates, &mut buf);
            *score += w * buf[ui].ln();
        }
    }
    softmax_mix(&mut scores, params.alpha_l, params.epsilon);
    Ok(Distribution {
        support: ctx.real().to_vec(),
        probs: scores,
    })
}
