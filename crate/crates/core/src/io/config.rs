//! Run configuration: JSON on disk, per-simulation defaults, validation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, Pooling, World};
use crate::domain::{Level, NodeId, Taxonomy, Vocabulary};
use crate::error::{ChaiError, Result};
use crate::harness::{Condition, Experiment, SimDefaults, SimId, SweepAxes};
use crate::inference::SamplerConfig;
use crate::prior::{PriorSpec, DEFAULT_SPACE_CAP};
use crate::rsa::{CandidateSet, SimParams};

/// A group of leaves under one taxonomy node, optionally named.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeGroup {
    Leaves(Vec<String>),
    Named { name: String, leaves: Vec<String> },
}

impl NodeGroup {
    pub fn leaves(&self) -> &[String] {
        match self {
            NodeGroup::Leaves(l) | NodeGroup::Named { leaves: l, .. } => l,
        }
    }
}

/// A taxonomy and vocabulary as written in a JSON document:
/// `{"leaves": [...], "basic": [[leaf, leaf], ...], "super": [...], "primitives": [...]}`.
/// A group may also be written `{"name": "blue", "leaves": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomySpec {
    pub leaves: Vec<String>,
    #[serde(default)]
    pub basic: Vec<NodeGroup>,
    #[serde(default, rename = "super")]
    pub superordinate: Vec<NodeGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitives: Option<Vec<String>>,
}

impl TaxonomySpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn build(&self) -> Result<Taxonomy> {
        let basic: Vec<Vec<String>> = self.basic.iter().map(|g| g.leaves().to_vec()).collect();
        let sup: Vec<Vec<String>> = self
            .superordinate
            .iter()
            .map(|g| g.leaves().to_vec())
            .collect();
        let mut tax = Taxonomy::new(&self.leaves, &basic, &sup)?;
        let offset = self.leaves.len();
        for (i, g) in self.basic.iter().chain(&self.superordinate).enumerate() {
            if let NodeGroup::Named { name, .. } = g {
                tax.rename(NodeId((offset + i) as u16), name.clone())?;
            }
        }
        Ok(tax)
    }

    pub fn vocabulary(&self) -> Result<Option<Vocabulary>> {
        self.primitives.clone().map(Vocabulary::new).transpose()
    }

    pub fn from_parts(tax: &Taxonomy, vocab: Option<&Vocabulary>) -> Self {
        let groups = |level: Level| -> Vec<NodeGroup> {
            tax.nodes()
                .iter()
                .filter(|n| n.level == level && n.id.0 as usize >= tax.n_leaves())
                .map(|n| NodeGroup::Named {
                    name: n.name.clone(),
                    leaves: n
                        .extension()
                        .iter()
                        .map(|r| tax.leaves()[r as usize].name.clone())
                        .collect(),
                })
                .collect()
        };
        TaxonomySpec {
            leaves: tax.leaves().iter().map(|l| l.name.clone()).collect(),
            basic: groups(Level::Basic),
            superordinate: groups(Level::Superordinate),
            primitives: vocab.map(|v| v.names().to_vec()),
        }
    }
}

/// Partial parameter settings; unset fields take the simulation default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub alpha_s: Option<f64>,
    pub alpha_l: Option<f64>,
    pub w_c: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub candidates: Option<CandidateSet>,
}

impl ParamsOverride {
    pub fn apply(&self, base: &SimParams) -> SimParams {
        SimParams {
            alpha_s: self.alpha_s.unwrap_or(base.alpha_s),
            alpha_l: self.alpha_l.unwrap_or(base.alpha_l),
            w_c: self.w_c.unwrap_or(base.w_c),
            beta: self.beta.unwrap_or(base.beta),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            candidates: self.candidates.unwrap_or(base.candidates),
        }
    }

    pub fn full(p: &SimParams) -> Self {
        ParamsOverride {
            alpha_s: Some(p.alpha_s),
            alpha_l: Some(p.alpha_l),
            w_c: Some(p.w_c),
            beta: Some(p.beta),
            epsilon: Some(p.epsilon),
            candidates: Some(p.candidates),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default = "default_per_cell")]
    pub per_cell: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axes: SweepAxes::default(),
            per_cell: default_per_cell(),
        }
    }
}

fn default_per_cell() -> usize {
    10
}

/// Everything a run needs. Optional fields fall back to the simulation's
/// defaults when resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimId,
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub pooling: Vec<Pooling>,
    #[serde(default)]
    pub params: ParamsOverride,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub taxonomy: Option<TaxonomySpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub trajectories: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub record_beliefs: Option<bool>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn new(sim: SimId) -> Self {
        RunConfig {
            sim,
            conditions: Vec::new(),
            pooling: Vec::new(),
            params: ParamsOverride::default(),
            prior: None,
            taxonomy: None,
            sampler: SamplerConfig::default(),
            trajectories: None,
            seed: 0,
            output: None,
            record_beliefs: None,
            sweep: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            // serde names the offending key in its message; surface it as the field
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("config")
                .to_string();
            ChaiError::config(field, msg)
        })
    }

    /// Default trajectory count of each simulation.
    pub fn default_trajectories(sim: SimId) -> usize {
        match sim {
            SimId::Sim11 | SimId::Sim12 => 1000,
            SimId::Sim21 => 48,
            SimId::Sim31 => 400,
        }
    }

    /// Fills defaults and validates every field.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let d = SimDefaults::of(self.sim);
        let taxonomy = match &self.taxonomy {
            Some(spec) => spec
                .build()
                .map_err(|e| ChaiError::config("taxonomy", e.to_string()))?,
            None => d.taxonomy,
        };
        let vocabulary = match &self.taxonomy {
            Some(spec) => spec
                .vocabulary()
                .map_err(|e| ChaiError::config("taxonomy.primitives", e.to_string()))?
                .unwrap_or(d.vocabulary),
            None => d.vocabulary,
        };
        let params = self.params.apply(&d.params);
        params.validate()?;
        let prior = self.prior.clone().unwrap_or(d.prior);
        prior.validate(vocabulary.len(), &taxonomy)?;
        let conditions = if self.sim == SimId::Sim31 {
            if self.conditions.is_empty() {
                Condition::ALL.to_vec()
            } else {
                self.conditions.clone()
            }
        } else if self.conditions.is_empty() {
            Vec::new()
        } else {
            return Err(ChaiError::config(
                "conditions",
                format!("{} takes no condition", self.sim),
            ));
        };
        if self.sim == SimId::Sim31 {
            let ok = taxonomy
                .leaves()
                .iter()
                .all(|l| taxonomy.basic_parent(l.id.0 as u8).is_some());
            if !ok {
                return Err(ChaiError::config(
                    "taxonomy",
                    "sim31 needs every leaf under a basic-level node",
                ));
            }
        }
        let pooling = if self.pooling.is_empty() {
            match self.sim {
                SimId::Sim21 => vec![Pooling::Partial, Pooling::Complete, Pooling::None],
                _ => vec![Pooling::Complete],
            }
        } else {
            self.pooling.clone()
        };
        if pooling.contains(&Pooling::Partial) {
            if !matches!(prior, PriorSpec::HierarchicalDm { .. }) {
                return Err(ChaiError::config(
                    "pooling",
                    "partial pooling needs a hierarchical_dm prior",
                ));
            }
            self.sampler.validate()?;
        }
        let trajectories = self
            .trajectories
            .unwrap_or(Self::default_trajectories(self.sim));
        if trajectories == 0 {
            return Err(ChaiError::config("trajectories", "must be at least 1"));
        }
        if let Some(s) = &self.sweep {
            s.axes.validate()?;
            if s.per_cell == 0 {
                return Err(ChaiError::config("sweep.per_cell", "must be at least 1"));
            }
        }
        let space_cap_check = World::new(
            taxonomy.clone(),
            vocabulary.clone(),
            prior.clone(),
            params.candidates.with_pairs(),
            DEFAULT_SPACE_CAP,
        );
        let world = Arc::new(space_cap_check.map_err(|e| match e {
            ChaiError::Config { .. } => e,
            other => ChaiError::config("prior", other.to_string()),
        })?);
        Ok(ResolvedConfig {
            sim: self.sim,
            conditions,
            pooling,
            params,
            prior,
            taxonomy,
            vocabulary,
            sampler: self.sampler,
            trajectories,
            seed: self.seed,
            output: self.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            record_beliefs: self.record_beliefs.unwrap_or(true),
            sweep: self.sweep.clone(),
            world,
        })
    }
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub sim: SimId,
    pub conditions: Vec<Condition>,
    pub pooling: Vec<Pooling>,
    pub params: SimParams,
    pub prior: PriorSpec,
    pub taxonomy: Taxonomy,
    pub vocabulary: Vocabulary,
    pub sampler: SamplerConfig,
    pub trajectories: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub record_beliefs: bool,
    pub sweep: Option<SweepSpec>,
    pub world: Arc<World>,
}

/// One (condition, pooling) combination of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultSet {
    pub condition: Option<Condition>,
    pub pooling: Pooling,
}

impl ResultSet {
    /// Directory name of the set's outputs.
    pub fn name(&self, sim: SimId) -> String {
        match self.condition {
            Some(c) => format!("{sim}-{}-{}", c.as_str(), self.pooling.as_str()),
            None => format!("{sim}-{}", self.pooling.as_str()),
        }
    }
}

impl ResolvedConfig {
    pub fn sets(&self) -> Vec<ResultSet> {
        let conds: Vec<Option<Condition>> = if self.conditions.is_empty() {
            vec![None]
        } else {
            self.conditions.iter().copied().map(Some).collect()
        };
        conds
            .into_iter()
            .flat_map(|condition| {
                self.pooling
                    .iter()
                    .map(move |&pooling| ResultSet { condition, pooling })
            })
            .collect()
    }

    pub fn experiment(&self, set: &ResultSet) -> Result<Experiment> {
        let mut exp = Experiment::new(
            self.sim,
            set.condition,
            self.world.clone(),
            AgentConfig {
                params: self.params.clone(),
                pooling: set.pooling,
                sampler: self.sampler,
            },
        )?;
        exp.record_beliefs = self.record_beliefs;
        Ok(exp)
    }

    /// A configuration for exactly one result set, with nothing left to
    /// defaults; running it reproduces that set.
    pub fn echo(&self, set: &ResultSet) -> RunConfig {
        RunConfig {
            sim: self.sim,
            conditions: set.condition.into_iter().collect(),
            pooling: vec![set.pooling],
            params: ParamsOverride::full(&self.params),
            prior: Some(self.prior.clone()),
            taxonomy: Some(TaxonomySpec::from_parts(
                &self.taxonomy,
                Some(&self.vocabulary),
            )),
            sampler: self.sampler,
            trajectories: Some(self.trajectories),
            seed: self.seed,
            output: Some(self.output.clone()),
            record_beliefs: Some(self.record_beliefs),
            sweep: self.sweep.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_sim() {
        for sim in SimId::ALL {
            let r = RunConfig::new(sim).resolve().unwrap();
            assert_eq!(r.trajectories, RunConfig::default_trajectories(sim));
            assert!(!r.sets().is_empty());
        }
        let r = RunConfig::new(SimId::Sim21).resolve().unwrap();
        assert_eq!(r.sets().len(), 3);
        assert_eq!(r.params.alpha_s, 4.0);
    }

    #[test]
    fn bad_fields_are_named() {
        let mut c = RunConfig::new(SimId::Sim11);
        c.params.beta = Some(1.5);
        match c.resolve().unwrap_err() {
            ChaiError::Config { field, .. } => assert_eq!(field, "params.beta"),
            e => panic!("{e}"),
        }
        let mut c = RunConfig::new(SimId::Sim11);
        c.pooling = vec![Pooling::Partial];
        assert!(
            matches!(c.resolve().unwrap_err(), ChaiError::Config { ref field, .. } if field == "pooling")
        );
        let mut c = RunConfig::new(SimId::Sim11);
        c.conditions = vec![Condition::Fine];
        assert!(
            matches!(c.resolve().unwrap_err(), ChaiError::Config { ref field, .. } if field == "conditions")
        );
        let err = RunConfig::from_json(r#"{"sim":"sim11","bogus":1}"#).unwrap_err();
        assert!(
            matches!(err, ChaiError::Config { ref field, .. } if field == "bogus"),
            "{err}"
        );
    }

    #[test]
    fn taxonomy_spec_round_trips() {
        let tax = Taxonomy::squares();
        let spec = TaxonomySpec::from_parts(&tax, None);
        assert_eq!(spec.build().unwrap(), tax);
        let plain: TaxonomySpec = serde_json::from_str(
            r#"{"leaves":["a","b","c"],"basic":[["a","b"]],"super":[["a","b","c"]],"primitives":["x","y"]}"#,
        )
        .unwrap();
        let t = plain.build().unwrap();
        assert_eq!(t.nodes().len(), 5);
        assert_eq!(plain.vocabulary().unwrap().unwrap().len(), 2);
        let json = serde_json::to_string(&spec).unwrap();
        let back: TaxonomySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn echo_resolves_to_the_same_settings() {
        let r = RunConfig::new(SimId::Sim31).resolve().unwrap();
        let set = &r.sets()[1];
        let echo = r.echo(set);
        let json = serde_json::to_string_pretty(&echo).unwrap();
        let again = RunConfig::from_json(&json).unwrap().resolve().unwrap();
        assert_eq!(again.sets(), vec![set.clone()]);
        assert_eq!(again.params, r.params);
        assert_eq!(again.prior, r.prior);
        assert_eq!(again.taxonomy, r.taxonomy);
    }
}
