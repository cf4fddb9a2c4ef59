//! Lexicon priors and the enumerated lexicon spaces they induce.
//!
//! Flat priors are turned into a [`LexiconSpace`]: an explicit list of
//! lexicons with normalized log weights. The hierarchical Dirichlet-Multinomial
//! prior is kept as a [`HierarchicalPrior`]; its enumerated space carries the
//! single-partner prior predictive, which is also what the pooling lesions use.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{extension, Lexicon, Meaning, NodeId, PrimitiveId, ReferentSet, Taxonomy};
use crate::error::{ChaiError, Result};

pub const DEFAULT_SPACE_CAP: usize = 100_000;

/// Hard ceiling on how many raw assignments the filtering enumerators will
/// walk before giving up.
const MAX_RAW_ASSIGNMENTS: u128 = 2_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Independent categorical over leaves for every primitive.
    BiasedCategorical { probs: Vec<Vec<f64>> },
    /// Lexicons whose words partition the referents into taxonomy cells,
    /// weighted by `exp(-number of non-empty words)`.
    TaxonomyPartition,
    /// Any node-or-empty meaning per word, weighted by
    /// `exp(-total extension size)`.
    UnconstrainedExtension,
    /// As `UnconstrainedExtension`, restricted to lexicons that cover every
    /// referent.
    FullCoverage,
    /// `phi_k(u) ~ Categorical(theta)`, `theta ~ Dirichlet(lambda * alpha)`,
    /// with `alpha` on a discrete simplex grid weighted by a per-primitive
    /// Dirichlet(hyper) density.
    HierarchicalDm {
        lambda: f64,
        hyper: Vec<Vec<f64>>,
        grid: usize,
    },
}

impl PriorSpec {
    pub fn uniform(n_prims: usize, n_leaves: usize) -> Self {
        PriorSpec::BiasedCategorical {
            probs: vec![vec![1.0 / n_leaves as f64; n_leaves]; n_prims],
        }
    }

    /// Four primitives over two objects: `u1,u2` lean toward `o1` with
    /// probability `0.5 + delta`, `u3,u4` toward `o2`.
    pub fn biased_pairs(delta: f64) -> Self {
        let toward_first = vec![0.5 + delta, 0.5 - delta];
        let toward_second = vec![0.5 - delta, 0.5 + delta];
        PriorSpec::BiasedCategorical {
            probs: vec![
                toward_first.clone(),
                toward_first,
                toward_second.clone(),
                toward_second,
            ],
        }
    }

    /// The community prior for four primitives over two objects:
    /// `lambda = 2`, Dirichlet(1.0, 1.5) hyper-prior for `u1,u2` and
    /// Dirichlet(1.5, 1.0) for `u3,u4`, on a 21-point grid.
    pub fn community() -> Self {
        let a = vec![1.0, 1.5];
        let b = vec![1.5, 1.0];
        PriorSpec::HierarchicalDm {
            lambda: 2.0,
            hyper: vec![a.clone(), a, b.clone(), b],
            grid: 21,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PriorSpec::BiasedCategorical { .. } => "categorical",
            PriorSpec::TaxonomyPartition => "partition",
            PriorSpec::UnconstrainedExtension => "unconstrained",
            PriorSpec::FullCoverage => "full_coverage",
            PriorSpec::HierarchicalDm { .. } => "hierarchical",
        }
    }

    pub fn validate(&self, n_prims: usize, tax: &Taxonomy) -> Result<()> {
        let k = tax.n_leaves();
        match self {
            PriorSpec::BiasedCategorical { probs } => {
                if probs.len() != n_prims {
                    return Err(ChaiError::config(
                        "prior.probs",
                        format!("expected {n_prims} rows, got {}", probs.len()),
                    ));
                }
                for row in probs {
                    if row.len() != k || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(ChaiError::config(
                            "prior.probs",
                            "row is not a distribution over leaves",
                        ));
                    }
                    if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                        return Err(ChaiError::config("prior.probs", "row does not sum to 1"));
                    }
                }
            }
            PriorSpec::HierarchicalDm {
                lambda,
                hyper,
                grid,
            } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(ChaiError::config("prior.lambda", "must be positive"));
                }
                if *grid < 3 {
                    return Err(ChaiError::config(
                        "prior.grid",
                        "resolution must be at least 3",
                    ));
                }
                if hyper.len() != n_prims
                    || hyper
                        .iter()
                        .any(|h| h.len() != k || h.iter().any(|&x| x <= 0.0))
                {
                    return Err(ChaiError::config(
                        "prior.hyper",
                        "need one positive pseudo-count vector over leaves per primitive",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Enumerated support of lexicons with normalized log prior weights.
#[derive(Clone, Debug)]
pub struct LexiconSpace {
    lexicons: Vec<Lexicon>,
    log_prior: Vec<f64>,
    n_prims: usize,
    universe: ReferentSet,
    meanings: Vec<Meaning>,
    // flattened [lexicon][primitive]
    exts: Vec<ReferentSet>,
    meaning_idx: Vec<u16>,
    index: HashMap<Lexicon, usize>,
}

impl LexiconSpace {
    /// Builds a space from explicit lexicons and unnormalized log weights.
    pub fn from_weighted(
        lexicons: Vec<Lexicon>,
        log_weights: Vec<f64>,
        tax: &Taxonomy,
    ) -> Result<Self> {
        if lexicons.is_empty() || lexicons.len() != log_weights.len() {
            return Err(ChaiError::domain(
                "lexicon space needs matching non-empty lists",
            ));
        }
        let n_prims = lexicons[0].len();
        let meanings = tax.meanings(true);
        let mut exts = Vec::with_capacity(lexicons.len() * n_prims);
        let mut meaning_idx = Vec::with_capacity(lexicons.len() * n_prims);
        let mut index = HashMap::with_capacity(lexicons.len());
        for (i, lex) in lexicons.iter().enumerate() {
            if lex.len() != n_prims {
                return Err(ChaiError::domain("lexicons differ in vocabulary size"));
            }
            for &m in lex.meanings() {
                exts.push(extension(m, tax)?);
                let mi = meanings
                    .iter()
                    .position(|x| *x == m)
                    .expect("meaning from taxonomy");
                meaning_idx.push(mi as u16);
            }
            if index.insert(lex.clone(), i).is_some() {
                return Err(ChaiError::domain("duplicate lexicon in space"));
            }
        }
        let z = log_sum_exp(&log_weights);
        if !z.is_finite() {
            return Err(ChaiError::domain("lexicon space has no prior mass"));
        }
        let log_prior = log_weights.iter().map(|w| w - z).collect();
        Ok(LexiconSpace {
            lexicons,
            log_prior,
            n_prims,
            universe: tax.universe(),
            meanings,
            exts,
            meaning_idx,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.lexicons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicons.is_empty()
    }

    pub fn n_prims(&self) -> usize {
        self.n_prims
    }

    pub fn universe(&self) -> ReferentSet {
        self.universe
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn lexicon(&self, i: usize) -> &Lexicon {
        &self.lexicons[i]
    }

    pub fn index_of(&self, lex: &Lexicon) -> Option<usize> {
        self.index.get(lex).copied()
    }

    /// Normalized log prior, parallel to [`lexicons`](Self::lexicons).
    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn prior_probs(&self) -> Vec<f64> {
        self.log_prior.iter().map(|w| w.exp()).collect()
    }

    /// Per-primitive extensions of lexicon `i`.
    pub fn exts(&self, i: usize) -> &[ReferentSet] {
        &self.exts[i * self.n_prims..(i + 1) * self.n_prims]
    }

    /// Candidate meanings, indexed as in [`primitive_marginals`](Self::primitive_marginals).
    pub fn meanings(&self) -> &[Meaning] {
        &self.meanings
    }

    pub fn meaning_index(&self, i: usize, p: PrimitiveId) -> usize {
        self.meaning_idx[i * self.n_prims + p as usize] as usize
    }

    /// Marginal distribution over meanings for every primitive, given
    /// lexicon probabilities.
    pub fn primitive_marginals(&self, probs: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.meanings.len()]; self.n_prims];
        for (i, &w) in probs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (p, row) in out.iter_mut().enumerate() {
                row[self.meaning_idx[i * self.n_prims + p] as usize] += w;
            }
        }
        out
    }

    /// Probability that primitive `p` means `m`.
    pub fn meaning_prob(&self, probs: &[f64], p: PrimitiveId, m: Meaning) -> f64 {
        probs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.lexicons[*i].meanings()[p as usize] == m)
            .map(|(_, w)| w)
            .sum()
    }
}

/// A probability distribution over the lexicons of a shared space.
#[derive(Clone, Debug)]
pub struct LexiconBelief {
    pub space: Arc<LexiconSpace>,
    pub probs: Vec<f64>,
}

impl LexiconBelief {
    pub fn new(space: Arc<LexiconSpace>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(space.len(), probs.len());
        LexiconBelief { space, probs }
    }

    /// The prior of `space`.
    pub fn prior(space: Arc<LexiconSpace>) -> Self {
        let probs = space.prior_probs();
        LexiconBelief { space, probs }
    }

    /// All mass on lexicon `i`.
    pub fn atom(space: Arc<LexiconSpace>, i: usize) -> Self {
        let mut probs = vec![0.0; space.len()];
        probs[i] = 1.0;
        LexiconBelief { space, probs }
    }

    pub fn primitive_marginals(&self) -> Vec<Vec<f64>> {
        self.space.primitive_marginals(&self.probs)
    }

    pub fn meaning_prob(&self, p: PrimitiveId, m: Meaning) -> f64 {
        self.space.meaning_prob(&self.probs, p, m)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// Index of the most probable lexicon (first on ties).
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Total-variation distance to another belief over the same space.
    pub fn total_variation(&self, other: &LexiconBelief) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// `ln sum exp(x)`, stable; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalizes log weights into probabilities.
pub fn normalize_log(xs: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(xs);
    xs.iter().map(|x| (x - z).exp()).collect()
}

/// Unnormalized log prior of one lexicon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPrior {
    pub value: f64,
    /// Whether `value` is already a normalized log probability.
    pub normalized: bool,
}

fn is_leaf(m: Meaning, tax: &Taxonomy) -> Option<usize> {
    match m {
        Meaning::Node(NodeId(i)) if (i as usize) < tax.n_leaves() => Some(i as usize),
        _ => None,
    }
}

fn partition_size(lex: &Lexicon, tax: &Taxonomy) -> Result<Option<usize>> {
    let mut covered = ReferentSet::EMPTY;
    let mut words = 0;
    for &m in lex.meanings() {
        if m == Meaning::Empty {
            continue;
        }
        let ext = extension(m, tax)?;
        if !covered.intersect(ext).is_empty() {
            return Ok(None);
        }
        covered = covered.union(ext);
        words += 1;
    }
    Ok((covered == tax.universe()).then_some(words))
}

fn total_extension(lex: &Lexicon, tax: &Taxonomy) -> Result<(usize, ReferentSet)> {
    let mut total = 0;
    let mut covered = ReferentSet::EMPTY;
    for &m in lex.meanings() {
        let ext = extension(m, tax)?;
        total += ext.len();
        covered = covered.union(ext);
    }
    Ok((total, covered))
}

/// Log prior of `lex` under `spec`; `-inf` outside the support.
pub fn log_prior(spec: &PriorSpec, lex: &Lexicon, tax: &Taxonomy) -> Result<LogPrior> {
    let value = match spec {
        PriorSpec::BiasedCategorical { probs } => {
            let mut acc = 0.0;
            for (p, &m) in lex.meanings().iter().enumerate() {
                match (is_leaf(m, tax), probs.get(p)) {
                    (Some(leaf), Some(row)) => acc += row[leaf].ln(),
                    _ => acc = f64::NEG_INFINITY,
                }
            }
            return Ok(LogPrior {
                value: acc,
                normalized: true,
            });
        }
        PriorSpec::TaxonomyPartition => match partition_size(lex, tax)? {
            Some(words) => -(words as f64),
            None => f64::NEG_INFINITY,
        },
        PriorSpec::UnconstrainedExtension => -(total_extension(lex, tax)?.0 as f64),
        PriorSpec::FullCoverage => {
            let (total, covered) = total_extension(lex, tax)?;
            if covered == tax.universe() {
                -(total as f64)
            } else {
                f64::NEG_INFINITY
            }
        }
        PriorSpec::HierarchicalDm { .. } => {
            let hier = HierarchicalPrior::new(spec, lex.len(), tax)?;
            let mut acc = 0.0;
            for (p, &m) in lex.meanings().iter().enumerate() {
                match (is_leaf(m, tax), hier.grids.get(p)) {
                    (Some(leaf), Some(grid)) => acc += grid.mean()[leaf].ln(),
                    _ => acc = f64::NEG_INFINITY,
                }
            }
            return Ok(LogPrior {
                value: acc,
                normalized: true,
            });
        }
    };
    Ok(LogPrior {
        value,
        normalized: false,
    })
}

/// Every lexicon in the support of `spec`, with its prior.
pub fn enumerate_space(
    spec: &PriorSpec,
    n_prims: usize,
    tax: &Taxonomy,
    cap: usize,
) -> Result<LexiconSpace> {
    spec.validate(n_prims, tax)?;
    if n_prims == 0 {
        return Err(ChaiError::domain("empty vocabulary"));
    }
    let lexicons = match spec {
        PriorSpec::BiasedCategorical { .. } | PriorSpec::HierarchicalDm { .. } => {
            let k = tax.n_leaves();
            check_cap((k as u128).checked_pow(n_prims as u32), cap)?;
            let leaves: Vec<Meaning> = (0..k).map(|i| Meaning::Node(NodeId(i as u16))).collect();
            product_space(&leaves, n_prims)
        }
        PriorSpec::TaxonomyPartition => partition_space(n_prims, tax, cap)?,
        PriorSpec::UnconstrainedExtension => {
            let meanings = tax.meanings(true);
            check_cap((meanings.len() as u128).checked_pow(n_prims as u32), cap)?;
            product_space(&meanings, n_prims)
        }
        PriorSpec::FullCoverage => {
            let meanings = tax.meanings(true);
            let raw = (meanings.len() as u128).checked_pow(n_prims as u32);
            if raw.is_none_or(|r| r > MAX_RAW_ASSIGNMENTS) {
                return Err(ChaiError::SpaceTooLarge {
                    size: usize::MAX,
                    cap,
                });
            }
            let exts: Vec<ReferentSet> = meanings
                .iter()
                .map(|&m| extension(m, tax))
                .collect::<Result<_>>()?;
            let universe = tax.universe();
            let mut out = Vec::new();
            let mut digits = vec![0usize; n_prims];
            loop {
                let covered = digits
                    .iter()
                    .fold(ReferentSet::EMPTY, |acc, &d| acc.union(exts[d]));
                if covered == universe {
                    if out.len() == cap {
                        return Err(ChaiError::SpaceTooLarge { size: cap + 1, cap });
                    }
                    out.push(Lexicon::new(digits.iter().map(|&d| meanings[d]).collect()));
                }
                if !advance(&mut digits, meanings.len()) {
                    break;
                }
            }
            out
        }
    };
    let log_weights = lexicons
        .iter()
        .map(|lex| log_prior(spec, lex, tax).map(|lp| lp.value))
        .collect::<Result<Vec<_>>>()?;
    LexiconSpace::from_weighted(lexicons, log_weights, tax)
}

fn check_cap(size: Option<u128>, cap: usize) -> Result<()> {
    match size {
        Some(s) if s <= cap as u128 => Ok(()),
        Some(s) => Err(ChaiError::SpaceTooLarge {
            size: usize::try_from(s).unwrap_or(usize::MAX),
            cap,
        }),
        None => Err(ChaiError::SpaceTooLarge {
            size: usize::MAX,
            cap,
        }),
    }
}

// mixed-radix increment, first digit fastest
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn product_space(meanings: &[Meaning], n_prims: usize) -> Vec<Lexicon> {
    let mut out = Vec::new();
    let mut digits = vec![0usize; n_prims];
    loop {
        out.push(Lexicon::new(digits.iter().map(|&d| meanings[d]).collect()));
        if !advance(&mut digits, meanings.len()) {
            break;
        }
    }
    out
}

/// All ways to tile the universe with disjoint taxonomy-node extensions.
pub fn node_partitions(tax: &Taxonomy) -> Vec<Vec<NodeId>> {
    fn go(
        tax: &Taxonomy,
        covered: ReferentSet,
        cells: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        let universe = tax.universe();
        let Some(first) = universe.iter().find(|r| !covered.contains(*r)) else {
            out.push(cells.clone());
            return;
        };
        for node in tax.nodes() {
            let ext = node.extension();
            if ext.contains(first) && ext.intersect(covered).is_empty() {
                cells.push(node.id);
                go(tax, covered.union(ext), cells, out);
                cells.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(tax, ReferentSet::EMPTY, &mut Vec::new(), &mut out);
    out
}

fn falling_factorial(n: usize, k: usize) -> u128 {
    (0..k).map(|i| (n - i) as u128).product()
}

fn partition_space(n_prims: usize, tax: &Taxonomy, cap: usize) -> Result<Vec<Lexicon>> {
    let partitions: Vec<Vec<NodeId>> = node_partitions(tax)
        .into_iter()
        .filter(|cells| cells.len() <= n_prims)
        .collect();
    let total: u128 = partitions
        .iter()
        .map(|cells| falling_factorial(n_prims, cells.len()))
        .sum();
    check_cap(Some(total), cap)?;

    let mut out = Vec::with_capacity(total as usize);
    for cells in &partitions {
        // injective word choice for each cell
        let mut chosen = vec![usize::MAX; cells.len()];
        let mut used = vec![false; n_prims];
        assign_words(cells, 0, &mut chosen, &mut used, &mut out);
    }
    Ok(out)
}

fn assign_words(
    cells: &[NodeId],
    next: usize,
    chosen: &mut [usize],
    used: &mut [bool],
    out: &mut Vec<Lexicon>,
) {
    if next == cells.len() {
        let mut meanings = vec![Meaning::Empty; used.len()];
        for (cell, &word) in cells.iter().zip(chosen.iter()) {
            meanings[word] = Meaning::Node(*cell);
        }
        out.push(Lexicon::new(meanings));
        return;
    }
    for w in 0..used.len() {
        if !used[w] {
            used[w] = true;
            chosen[next] = w;
            assign_words(cells, next + 1, chosen, used, out);
            used[w] = false;
        }
    }
}

/// Community-level concentration `alpha` on a discrete simplex grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGrid {
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl AlphaGrid {
    /// Interior points `(m + 1/2) / (M + K/2)` for all integer compositions
    /// `m` of `M = resolution - 1` into `K` parts, weighted by the
    /// Dirichlet(`hyper`) density. For `K = 2` there are `resolution` points.
    pub fn new(hyper: &[f64], resolution: usize) -> Result<Self> {
        let k = hyper.len();
        if k < 2 || resolution < 3 || hyper.iter().any(|&h| !(h > 0.0)) {
            return Err(ChaiError::domain(
                "alpha grid needs >= 2 positive pseudo-counts and resolution >= 3",
            ));
        }
        let m_total = resolution - 1;
        let denom = m_total as f64 + k as f64 / 2.0;
        let mut points = Vec::new();
        let mut comp = vec![0usize; k];
        compositions(m_total, 0, &mut comp, &mut |c| {
            points.push(
                c.iter()
                    .map(|&m| (m as f64 + 0.5) / denom)
                    .collect::<Vec<f64>>(),
            );
        });
        let log_w: Vec<f64> = points
            .iter()
            .map(|a| a.iter().zip(hyper).map(|(x, h)| (h - 1.0) * x.ln()).sum())
            .collect();
        let probs = normalize_log(&log_w);
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(AlphaGrid {
            points,
            probs,
            log_probs,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Hyper-prior mean of `alpha`, which is also the first-partner predictive.
    pub fn mean(&self) -> Vec<f64> {
        let k = self.points[0].len();
        let mut out = vec![0.0; k];
        for (a, w) in self.points.iter().zip(&self.probs) {
            for j in 0..k {
                out[j] += w * a[j];
            }
        }
        out
    }
}

fn compositions(remaining: usize, pos: usize, comp: &mut [usize], f: &mut impl FnMut(&[usize])) {
    if pos == comp.len() - 1 {
        comp[pos] = remaining;
        f(comp);
        return;
    }
    for m in 0..=remaining {
        comp[pos] = m;
        compositions(remaining - m, pos + 1, comp, f);
    }
}

/// The two-level community prior with per-primitive alpha grids.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalPrior {
    pub lambda: f64,
    pub grids: Vec<AlphaGrid>,
    pub n_leaves: usize,
}

impl HierarchicalPrior {
    pub fn new(spec: &PriorSpec, n_prims: usize, tax: &Taxonomy) -> Result<Self> {
        let PriorSpec::HierarchicalDm {
            lambda,
            hyper,
            grid,
        } = spec
        else {
            return Err(ChaiError::domain("not a hierarchical prior"));
        };
        spec.validate(n_prims, tax)?;
        let grids = hyper
            .iter()
            .map(|h| AlphaGrid::new(h, *grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(HierarchicalPrior {
            lambda: *lambda,
            grids,
            n_leaves: tax.n_leaves(),
        })
    }
}

/// `ln [B(lambda*alpha + counts) / B(lambda*alpha)]`: the Dirichlet-Multinomial
/// probability of a particular ordered sequence with the given leaf counts.
pub fn dm_log_marginal(alpha: &[f64], lambda: f64, counts: &[usize]) -> f64 {
    let mut acc = 0.0;
    let mut total = 0;
    for (a, &n) in alpha.iter().zip(counts) {
        let base = lambda * a;
        for m in 0..n {
            acc += (base + m as f64).ln();
        }
        total += n;
    }
    for m in 0..total {
        acc -= (lambda + m as f64).ln();
    }
    acc
}

/// Collapsed community prior for one primitive: the probability that the
/// listed partners chose the listed leaves, with `theta` integrated out.
pub fn collapsed_hier_logprior(alpha: &[f64], lambda: f64, assignments: &[usize]) -> Result<f64> {
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(ChaiError::domain("alpha must be strictly positive"));
    }
    if !(lambda > 0.0) {
        return Err(ChaiError::domain("lambda must be positive"));
    }
    let mut counts = vec![0usize; alpha.len()];
    for &a in assignments {
        *counts
            .get_mut(a)
            .ok_or_else(|| ChaiError::domain(format!("leaf {a} out of range")))? += 1;
    }
    Ok(dm_log_marginal(alpha, lambda, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_two_by_two() {
        let tax = Taxonomy::objects(2).unwrap();
        let space = enumerate_space(&PriorSpec::uniform(2, 2), 2, &tax, DEFAULT_SPACE_CAP).unwrap();
        assert_eq!(space.len(), 4);
        for p in space.prior_probs() {
            assert_relative_eq!(p, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn partition_space_matches_falling_factorials() {
        let tax = Taxonomy::squares();
        assert_eq!(node_partitions(&tax).len(), 5);
        let space =
            enumerate_space(&PriorSpec::TaxonomyPartition, 8, &tax, DEFAULT_SPACE_CAP).unwrap();
        // 8 + 8*7 + 2 * 8*7*6 + 8*7*6*5
        assert_eq!(space.len(), 8 + 56 + 336 + 336 + 1680);
        let uni = tax.universe();
        for i in 0..space.len() {
            for r in uni.iter() {
                assert_eq!(space.exts(i).iter().filter(|e| e.contains(r)).count(), 1);
            }
        }
    }

    #[test]
    fn unconstrained_one_word_two_leaves() {
        let names = ["o1".to_string(), "o2".to_string()];
        let tax = Taxonomy::new(&names, &[names.to_vec()], &[]).unwrap();
        let space = enumerate_space(
            &PriorSpec::UnconstrainedExtension,
            1,
            &tax,
            DEFAULT_SPACE_CAP,
        )
        .unwrap();
        assert_eq!(space.len(), 4);
        let sizes = [1.0, 1.0, 2.0, 0.0];
        let z: f64 = sizes.iter().map(|s: &f64| (-s).exp()).sum();
        for (i, s) in sizes.iter().enumerate() {
            assert_relative_eq!(space.log_prior()[i], -s - z.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn full_coverage_filters_degenerate() {
        let tax = Taxonomy::objects(2).unwrap();
        let space = enumerate_space(&PriorSpec::FullCoverage, 2, &tax, DEFAULT_SPACE_CAP).unwrap();
        // 3 meanings per word: (o1,o2),(o2,o1) only
        assert_eq!(space.len(), 2);
        let lp = log_prior(
            &PriorSpec::FullCoverage,
            &Lexicon::new(vec![Meaning::Empty; 2]),
            &tax,
        )
        .unwrap();
        assert_eq!(lp.value, f64::NEG_INFINITY);
    }

    #[test]
    fn partition_log_prior_counts_words() {
        let tax = Taxonomy::squares();
        let lex = Lexicon::new(vec![
            Meaning::Node(NodeId(0)),
            Meaning::Node(NodeId(1)),
            Meaning::Node(NodeId(2)),
            Meaning::Node(NodeId(3)),
            Meaning::Empty,
            Meaning::Empty,
            Meaning::Empty,
            Meaning::Empty,
        ]);
        let lp = log_prior(&PriorSpec::TaxonomyPartition, &lex, &tax).unwrap();
        assert_eq!(lp.value, -4.0);
        assert!(!lp.normalized);
        let overlapping = Lexicon::new(vec![
            Meaning::Node(NodeId(4)),
            Meaning::Node(NodeId(4)),
            Meaning::Node(NodeId(5)),
            Meaning::Empty,
        ]);
        let lp = log_prior(&PriorSpec::TaxonomyPartition, &overlapping, &tax).unwrap();
        assert_eq!(lp.value, f64::NEG_INFINITY);
    }

    #[test]
    fn biased_prior_contribution() {
        let tax = Taxonomy::objects(2).unwrap();
        let spec = PriorSpec::biased_pairs(0.05);
        let lex = Lexicon::from_leaves(&[0, 0, 1, 1]);
        let lp = log_prior(&spec, &lex, &tax).unwrap();
        assert_relative_eq!(lp.value, 4.0 * 0.55f64.ln(), epsilon = 1e-12);
        let space = enumerate_space(&spec, 4, &tax, DEFAULT_SPACE_CAP).unwrap();
        let probs = space.prior_probs();
        let marg = space.primitive_marginals(&probs);
        assert_relative_eq!(marg[0][0], 0.55, epsilon = 1e-12);
        assert_relative_eq!(marg[3][1], 0.55, epsilon = 1e-12);
    }

    #[test]
    fn cap_exceeded_reports_size() {
        let tax = Taxonomy::squares();
        let err = enumerate_space(
            &PriorSpec::UnconstrainedExtension,
            8,
            &tax,
            DEFAULT_SPACE_CAP,
        )
        .unwrap_err();
        assert!(matches!(err, ChaiError::SpaceTooLarge { .. }));
        assert!(err.to_string().contains("sampling"));
    }

    #[test]
    fn collapsed_prior_examples() {
        assert_eq!(collapsed_hier_logprior(&[0.5, 0.5], 2.0, &[]).unwrap(), 0.0);
        assert_relative_eq!(
            collapsed_hier_logprior(&[0.5, 0.5], 2.0, &[0]).unwrap(),
            0.5f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            collapsed_hier_logprior(&[1.0 / 2.5, 1.5 / 2.5], 2.0, &[0]).unwrap(),
            0.4f64.ln(),
            epsilon = 1e-12
        );
        assert!(collapsed_hier_logprior(&[0.0, 1.0], 2.0, &[0]).is_err());
    }

    #[test]
    fn collapsed_prior_against_monte_carlo_theta() {
        use rand::SeedableRng;
        use rand_distr::{Dirichlet, Distribution};
        let alpha = [0.4, 0.6];
        let lambda = 2.0;
        let dir = Dirichlet::new([lambda * alpha[0], lambda * alpha[1]]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let (mut first, mut seq) = (0.0, 0.0);
        for _ in 0..n {
            let theta = dir.sample(&mut rng);
            first += theta[0];
            // P(leaf 0, then leaf 1, then leaf 0 | theta)
            seq += theta[0] * theta[1] * theta[0];
        }
        let first = first / n as f64;
        let seq = seq / n as f64;
        assert!((first - 0.4).abs() < 0.003);
        let exact = collapsed_hier_logprior(&alpha, lambda, &[0, 1, 0])
            .unwrap()
            .exp();
        assert!((seq - exact).abs() < 0.002, "{seq} vs {exact}");
    }

    #[test]
    fn alpha_grid_shape() {
        let g = AlphaGrid::new(&[1.0, 1.5], 21).unwrap();
        assert_eq!(g.len(), 21);
        assert_relative_eq!(g.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // mean close to the continuous Dirichlet(1, 1.5) mean of 0.4
        assert!((g.mean()[0] - 0.4).abs() < 0.01);
        assert!(AlphaGrid::new(&[1.0, 1.0], 2).is_err());
        let g3 = AlphaGrid::new(&[1.0, 1.0, 1.0], 5).unwrap();
        assert_eq!(g3.len(), 15);
    }

    #[test]
    fn hierarchical_space_is_prior_predictive() {
        let tax = Taxonomy::objects(2).unwrap();
        let spec = PriorSpec::community();
        let space = enumerate_space(&spec, 4, &tax, DEFAULT_SPACE_CAP).unwrap();
        assert_eq!(space.len(), 16);
        let hier = HierarchicalPrior::new(&spec, 4, &tax).unwrap();
        let marg = space.primitive_marginals(&space.prior_probs());
        for p in 0..4 {
            assert_relative_eq!(marg[p][0], hier.grids[p].mean()[0], epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn every_space_normalizes(n_prims in 1usize..4, n_leaves in 2usize..4, variant in 0usize..4) {
            let tax = Taxonomy::objects(n_leaves).unwrap();
            // flat taxonomies have no node covering several leaves
            prop_assume!(variant == 0 || variant == 2 || n_prims >= n_leaves);
            let spec = match variant {
                0 => PriorSpec::uniform(n_prims, n_leaves),
                1 => PriorSpec::TaxonomyPartition,
                2 => PriorSpec::UnconstrainedExtension,
                _ => PriorSpec::FullCoverage,
            };
            match enumerate_space(&spec, n_prims, &tax, DEFAULT_SPACE_CAP) {
                Ok(space) => {
                    let total: f64 = space.prior_probs().iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                    for (lex, lp) in space.lexicons().iter().zip(space.log_prior()) {
                        let raw = log_prior(&spec, lex, &tax).unwrap();
                        prop_assert!(raw.value.is_finite());
                        // shared constant
                        let c = lp - raw.value;
                        let c0 = space.log_prior()[0] - log_prior(&spec, space.lexicon(0), &tax).unwrap().value;
                        prop_assert!((c - c0).abs() < 1e-9);
                    }
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn collapsed_prior_exchangeable(
            a in 0.05f64..0.95,
            lambda in 0.5f64..5.0,
            mut assign in proptest::collection::vec(0usize..2, 0..7),
            seed in any::<u64>(),
        ) {
            let alpha = [a, 1.0 - a];
            let before = collapsed_hier_logprior(&alpha, lambda, &assign).unwrap();
            // deterministic shuffle
            let n = assign.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                assign.swap(i, (s >> 33) as usize % (i + 1));
            }
            let after = collapsed_hier_logprior(&alpha, lambda, &assign).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }

        #[test]
        fn rich_get_richer(a in 0.05f64..0.95, lambda in 0.5f64..5.0, n0 in 0usize..5, n1 in 0usize..5, leaf in 0usize..2) {
            let alpha = [a, 1.0 - a];
            let mut counts = vec![n0, n1];
            let pred = |c: &[usize]| (lambda * alpha[leaf] + c[leaf] as f64) / (lambda + (c[0] + c[1]) as f64);
            let before = pred(&counts);
            counts[leaf] += 1;
            prop_assert!(pred(&counts) > before);
            // same quantity through the collapsed marginal
            let mut seq: Vec<usize> = std::iter::repeat_n(0, counts[0]).chain(std::iter::repeat_n(1, counts[1])).collect();
            let base = collapsed_hier_logprior(&alpha, lambda, &seq).unwrap();
            seq.push(leaf);
            let with = collapsed_hier_logprior(&alpha, lambda, &seq).unwrap();
            prop_assert!(((with - base).exp() - pred(&counts)).abs() < 1e-12);
        }
    }
}
