//! Referents, taxonomies, utterances and lexicons, plus the Boolean
//! conjunctive semantics evaluated over them.
//!
//! Referent ids double as leaf indices: referent `r` is the `r`-th leaf of the
//! taxonomy. Sets of referents are bitmasks, so a universe holds at most 64
//! objects.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ChaiError, Result};

pub type ReferentId = u8;
pub type PrimitiveId = u8;
pub type AgentId = usize;

pub const MAX_REFERENTS: usize = 64;

/// A set of referents stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Debug)]
pub struct ReferentSet(u64);

impl ReferentSet {
    pub const EMPTY: ReferentSet = ReferentSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ReferentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// The first `n` referents.
    pub fn first(n: usize) -> Self {
        if n >= 64 {
            ReferentSet(u64::MAX)
        } else {
            ReferentSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(r: ReferentId) -> Self {
        ReferentSet(1u64 << r)
    }

    pub fn contains(self, r: ReferentId) -> bool {
        (r as usize) < 64 && self.0 & (1u64 << r) != 0
    }

    pub fn insert(&mut self, r: ReferentId) {
        self.0 |= 1u64 << r;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ReferentSet(self.0 | other.0)
    }

    pub fn intersect(self, other: Self) -> Self {
        ReferentSet(self.0 & other.0)
    }

    pub fn is_superset(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn iter(self) -> impl Iterator<Item = ReferentId> {
        (0..64u8).filter(move |r| self.0 & (1u64 << r) != 0)
    }
}

impl FromIterator<ReferentId> for ReferentSet {
    fn from_iter<I: IntoIterator<Item = ReferentId>>(iter: I) -> Self {
        let mut set = ReferentSet::EMPTY;
        for r in iter {
            set.insert(r);
        }
        set
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Subordinate,
    Basic,
    Superordinate,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Subordinate => "subordinate",
            Level::Basic => "basic",
            Level::Superordinate => "superordinate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u16);

/// An object in the reference game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Referent {
    pub id: ReferentId,
    pub leaf: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaxonomyNode {
    pub id: NodeId,
    pub name: String,
    pub level: Level,
    pub children: Vec<NodeId>,
    extension: ReferentSet,
}

impl TaxonomyNode {
    pub fn extension(&self) -> ReferentSet {
        self.extension
    }
}

/// A tree of concepts over the referents. Leaves come first, so leaf `i` has
/// node id `i` and denotes referent `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Taxonomy {
    nodes: Vec<TaxonomyNode>,
    n_leaves: usize,
}

impl Taxonomy {
    /// Unrelated objects: every meaning is an individual leaf.
    pub fn flat(leaf_names: &[&str]) -> Result<Self> {
        Taxonomy::new(
            &leaf_names.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            &[],
            &[],
        )
    }

    /// `n` unrelated objects named `o1..on`.
    pub fn objects(n: usize) -> Result<Self> {
        let names: Vec<String> = (1..=n).map(|i| format!("o{i}")).collect();
        Taxonomy::new(&names, &[], &[])
    }

    /// The single four-square branch: two colors, two shades each.
    pub fn squares() -> Self {
        let leaves = ["light-blue", "dark-blue", "light-red", "dark-red"].map(String::from);
        let basic = vec![
            vec!["light-blue".to_string(), "dark-blue".to_string()],
            vec!["light-red".to_string(), "dark-red".to_string()],
        ];
        let sup = vec![leaves.to_vec()];
        let mut tax = Taxonomy::new(&leaves, &basic, &sup).expect("static taxonomy is valid");
        tax.nodes[4].name = "blue".into();
        tax.nodes[5].name = "red".into();
        tax.nodes[6].name = "square".into();
        tax
    }

    /// Builds a three-level tree. Each basic group lists its leaves; each
    /// superordinate group lists the leaves it dominates and must be a union
    /// of whole basic groups and ungrouped leaves.
    pub fn new(leaves: &[String], basic: &[Vec<String>], sup: &[Vec<String>]) -> Result<Self> {
        if leaves.is_empty() || leaves.len() > MAX_REFERENTS {
            return Err(ChaiError::domain(format!(
                "taxonomy needs 1..={MAX_REFERENTS} leaves, got {}",
                leaves.len()
            )));
        }
        let index_of = |name: &str| -> Result<usize> {
            leaves
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| ChaiError::domain(format!("unknown leaf `{name}`")))
        };
        for (i, name) in leaves.iter().enumerate() {
            if leaves[..i].contains(name) {
                return Err(ChaiError::domain(format!("duplicate leaf `{name}`")));
            }
        }
        let mut nodes: Vec<TaxonomyNode> = leaves
            .iter()
            .enumerate()
            .map(|(i, name)| TaxonomyNode {
                id: NodeId(i as u16),
                name: name.clone(),
                level: Level::Subordinate,
                children: Vec::new(),
                extension: ReferentSet::singleton(i as ReferentId),
            })
            .collect();

        let mut claimed = ReferentSet::EMPTY;
        for (g, group) in basic.iter().enumerate() {
            let mut ext = ReferentSet::EMPTY;
            let mut children = Vec::new();
            for name in group {
                let leaf = index_of(name)?;
                if claimed.contains(leaf as ReferentId) {
                    return Err(ChaiError::domain(format!(
                        "leaf `{name}` belongs to two basic nodes"
                    )));
                }
                claimed.insert(leaf as ReferentId);
                ext.insert(leaf as ReferentId);
                children.push(NodeId(leaf as u16));
            }
            if ext.is_empty() {
                return Err(ChaiError::domain("empty basic node"));
            }
            let id = NodeId(nodes.len() as u16);
            nodes.push(TaxonomyNode {
                id,
                name: format!("basic{g}"),
                level: Level::Basic,
                children,
                extension: ext,
            });
        }
        let basic_ids: Vec<usize> = (leaves.len()..nodes.len()).collect();

        let mut sup_claimed = ReferentSet::EMPTY;
        for (g, group) in sup.iter().enumerate() {
            let ext: ReferentSet = group
                .iter()
                .map(|n| index_of(n).map(|i| i as ReferentId))
                .collect::<Result<ReferentSet>>()?;
            if !ext.intersect(sup_claimed).is_empty() {
                return Err(ChaiError::domain("superordinate nodes overlap"));
            }
            sup_claimed = sup_claimed.union(ext);
            let mut children = Vec::new();
            let mut covered = ReferentSet::EMPTY;
            for &b in &basic_ids {
                let bext = nodes[b].extension;
                if ext.is_superset(bext) {
                    children.push(NodeId(b as u16));
                    covered = covered.union(bext);
                } else if !ext.intersect(bext).is_empty() {
                    return Err(ChaiError::domain(format!(
                        "superordinate group {g} splits a basic node"
                    )));
                }
            }
            for leaf in ext.iter() {
                if !claimed.contains(leaf) {
                    children.push(NodeId(leaf as u16));
                    covered.insert(leaf);
                }
            }
            debug_assert_eq!(covered, ext);
            let id = NodeId(nodes.len() as u16);
            nodes.push(TaxonomyNode {
                id,
                name: format!("super{g}"),
                level: Level::Superordinate,
                children,
                extension: ext,
            });
        }
        Ok(Taxonomy {
            nodes,
            n_leaves: leaves.len(),
        })
    }

    /// Gives node `id` a display name; names must stay unique.
    pub fn rename(&mut self, id: NodeId, name: impl Into<String>) -> Result<()> {
        let name = name.into();
        if self.nodes.iter().any(|n| n.id != id && n.name == name) {
            return Err(ChaiError::domain(format!("duplicate node name `{name}`")));
        }
        let node = self
            .nodes
            .get_mut(id.0 as usize)
            .ok_or_else(|| ChaiError::domain(format!("no taxonomy node {}", id.0)))?;
        node.name = name;
        Ok(())
    }

    /// Node with the given display name.
    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    pub fn nodes(&self) -> &[TaxonomyNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&TaxonomyNode> {
        self.nodes
            .get(id.0 as usize)
            .ok_or_else(|| ChaiError::domain(format!("unknown taxonomy node {}", id.0)))
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn leaves(&self) -> &[TaxonomyNode] {
        &self.nodes[..self.n_leaves]
    }

    pub fn referents(&self) -> Vec<Referent> {
        (0..self.n_leaves)
            .map(|i| Referent {
                id: i as ReferentId,
                leaf: NodeId(i as u16),
            })
            .collect()
    }

    /// Every referent of the taxonomy.
    pub fn universe(&self) -> ReferentSet {
        ReferentSet::first(self.n_leaves)
    }

    /// All candidate meanings: every node, then `Empty` when requested.
    pub fn meanings(&self, with_empty: bool) -> Vec<Meaning> {
        let mut out: Vec<Meaning> = self.nodes.iter().map(|n| Meaning::Node(n.id)).collect();
        if with_empty {
            out.push(Meaning::Empty);
        }
        out
    }

    /// The basic-level node dominating a leaf, if any.
    pub fn basic_parent(&self, leaf: ReferentId) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.level == Level::Basic && n.extension.contains(leaf))
            .map(|n| n.id)
    }

    pub fn level_of(&self, m: Meaning) -> Result<Option<Level>> {
        match m {
            Meaning::Empty => Ok(None),
            Meaning::Node(id) => Ok(Some(self.node(id)?.level)),
        }
    }

    pub fn meaning_name(&self, m: Meaning) -> String {
        match m {
            Meaning::Empty => "null".into(),
            Meaning::Node(id) => self
                .nodes
                .get(id.0 as usize)
                .map(|n| n.name.clone())
                .unwrap_or_else(|| format!("node{}", id.0)),
        }
    }
}

/// What a primitive label denotes: a taxonomy node or nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Meaning {
    Node(NodeId),
    Empty,
}

/// The set of referents a meaning is true of.
pub fn extension(m: Meaning, tax: &Taxonomy) -> Result<ReferentSet> {
    match m {
        Meaning::Empty => Ok(ReferentSet::EMPTY),
        Meaning::Node(id) => Ok(tax.node(id)?.extension),
    }
}

/// One or two distinct primitives. Pairs are stored sorted, so `u1u2` and
/// `u2u1` are the same utterance.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Utterance {
    prims: [PrimitiveId; 2],
    len: u8,
}

impl Utterance {
    pub fn single(p: PrimitiveId) -> Self {
        Utterance {
            prims: [p, 0],
            len: 1,
        }
    }

    pub fn pair(a: PrimitiveId, b: PrimitiveId) -> Result<Self> {
        Utterance::new(&[a, b])
    }

    pub fn new(prims: &[PrimitiveId]) -> Result<Self> {
        match *prims {
            [p] => Ok(Utterance::single(p)),
            [a, b] if a != b => Ok(Utterance {
                prims: [a.min(b), a.max(b)],
                len: 2,
            }),
            [_, _] => Err(ChaiError::domain("utterance repeats a primitive")),
            _ => Err(ChaiError::domain(format!(
                "utterances have 1 or 2 primitives, got {}",
                prims.len()
            ))),
        }
    }

    pub fn primitives(&self) -> &[PrimitiveId] {
        &self.prims[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: PrimitiveId) -> bool {
        self.primitives().contains(&p)
    }
}

impl fmt::Debug for Utterance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .primitives()
            .iter()
            .map(|p| format!("u{}", p + 1))
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Number of words: the production cost of an utterance.
pub fn utterance_cost(u: &Utterance) -> f64 {
    u.len() as f64
}

/// Primitive labels and their surface names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    names: Vec<String>,
}

impl Vocabulary {
    /// `u1..un`.
    pub fn numbered(n: usize) -> Self {
        Vocabulary {
            names: (1..=n).map(|i| format!("u{i}")).collect(),
        }
    }

    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() || names.len() > u8::MAX as usize {
            return Err(ChaiError::domain("vocabulary size out of range"));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains('+') || names[..i].contains(n) {
                return Err(ChaiError::domain(format!("bad primitive name `{n}`")));
            }
        }
        Ok(Vocabulary { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, p: PrimitiveId) -> &str {
        &self.names[p as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `u1+u2` style encoding.
    pub fn format(&self, u: &Utterance) -> String {
        u.primitives()
            .iter()
            .map(|&p| self.name(p))
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn parse(&self, s: &str) -> Result<Utterance> {
        let prims = s
            .split('+')
            .map(|part| {
                self.names
                    .iter()
                    .position(|n| n == part)
                    .map(|i| i as PrimitiveId)
                    .ok_or_else(|| ChaiError::domain(format!("unknown primitive `{part}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Utterance::new(&prims)
    }

    /// Single words, optionally followed by every unordered pair.
    pub fn candidates(&self, with_pairs: bool) -> Vec<Utterance> {
        let n = self.names.len() as PrimitiveId;
        let mut out: Vec<Utterance> = (0..n).map(Utterance::single).collect();
        if with_pairs {
            for a in 0..n {
                for b in (a + 1)..n {
                    out.push(Utterance {
                        prims: [a, b],
                        len: 2,
                    });
                }
            }
        }
        out
    }
}

/// A total assignment of meanings to primitives.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lexicon {
    meanings: Vec<Meaning>,
}

impl Lexicon {
    pub fn new(meanings: Vec<Meaning>) -> Self {
        Lexicon { meanings }
    }

    /// Every primitive maps to the given leaf.
    pub fn from_leaves(leaves: &[ReferentId]) -> Self {
        Lexicon {
            meanings: leaves
                .iter()
                .map(|&l| Meaning::Node(NodeId(l as u16)))
                .collect(),
        }
    }

    pub fn meanings(&self) -> &[Meaning] {
        &self.meanings
    }

    pub fn meaning(&self, p: PrimitiveId) -> Result<Meaning> {
        self.meanings
            .get(p as usize)
            .copied()
            .ok_or_else(|| ChaiError::domain(format!("primitive {p} not in lexicon")))
    }

    pub fn len(&self) -> usize {
        self.meanings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meanings.is_empty()
    }

    /// Extension of every primitive, in primitive order.
    pub fn extensions(&self, tax: &Taxonomy) -> Result<Vec<ReferentSet>> {
        self.meanings.iter().map(|&m| extension(m, tax)).collect()
    }
}

/// Set of referents an utterance is literally true of, given per-primitive
/// extensions.
pub(crate) fn conjoined(exts: &[ReferentSet], u: &Utterance) -> ReferentSet {
    u.primitives()
        .iter()
        .fold(ReferentSet(u64::MAX), |acc, &p| {
            acc.intersect(exts[p as usize])
        })
}

/// Multi-word utterance whose conjunction is false of every possible
/// referent even though each word alone applies to something. A single word
/// with an empty extension is not a contradiction: it fails to refer and is
/// absorbed by the null object.
pub(crate) fn contradiction_in(exts: &[ReferentSet], u: &Utterance, universe: ReferentSet) -> bool {
    u.len() >= 2
        && u.primitives()
            .iter()
            .all(|&p| !exts[p as usize].intersect(universe).is_empty())
        && conjoined(exts, u).intersect(universe).is_empty()
}

fn check_prims(lex: &Lexicon, u: &Utterance) -> Result<()> {
    for &p in u.primitives() {
        lex.meaning(p)?;
    }
    Ok(())
}

/// Boolean truth of `u` for referent `r` (`None` is the null object, which
/// every utterance is true of).
pub fn truth_value(
    lex: &Lexicon,
    u: &Utterance,
    r: Option<ReferentId>,
    tax: &Taxonomy,
) -> Result<bool> {
    check_prims(lex, u)?;
    let Some(r) = r else {
        return Ok(true);
    };
    for &p in u.primitives() {
        if !extension(lex.meaning(p)?, tax)?.contains(r) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// See [`contradiction_in`].
pub fn is_contradiction(
    lex: &Lexicon,
    u: &Utterance,
    universe: ReferentSet,
    tax: &Taxonomy,
) -> Result<bool> {
    check_prims(lex, u)?;
    let exts = lex.extensions(tax)?;
    Ok(contradiction_in(&exts, u, universe))
}

/// The real objects on screen. The null object is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Context {
    real: Vec<ReferentId>,
}

impl Context {
    pub fn new(real: Vec<ReferentId>) -> Result<Self> {
        if real.is_empty() {
            return Err(ChaiError::domain("empty context"));
        }
        for (i, r) in real.iter().enumerate() {
            if (*r as usize) >= MAX_REFERENTS || real[..i].contains(r) {
                return Err(ChaiError::domain(format!("bad referent {r} in context")));
            }
        }
        Ok(Context { real })
    }

    pub fn real(&self) -> &[ReferentId] {
        &self.real
    }

    pub fn set(&self) -> ReferentSet {
        self.real.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    pub fn contains(&self, r: ReferentId) -> bool {
        self.real.contains(&r)
    }
}

/// One played trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trajectory: usize,
    pub pair: (AgentId, AgentId),
    pub speaker: AgentId,
    pub listener: AgentId,
    pub trial: usize,
    pub block: usize,
    pub target: ReferentId,
    pub utterance: Utterance,
    pub response: ReferentId,
    pub correct: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Speaker,
    Listener,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Speaker => Role::Listener,
            Role::Listener => Role::Speaker,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_objects() -> Taxonomy {
        Taxonomy::objects(2).unwrap()
    }

    fn leaf(i: u16) -> Meaning {
        Meaning::Node(NodeId(i))
    }

    #[test]
    fn single_word_truth() {
        let tax = two_objects();
        let lex = Lexicon::new(vec![leaf(0)]);
        let u = Utterance::single(0);
        assert!(truth_value(&lex, &u, Some(0), &tax).unwrap());
        assert!(!truth_value(&lex, &u, Some(1), &tax).unwrap());
    }

    #[test]
    fn conjunction_with_false_conjunct() {
        let tax = two_objects();
        let lex = Lexicon::new(vec![leaf(0), leaf(1)]);
        let u = Utterance::pair(0, 1).unwrap();
        assert!(!truth_value(&lex, &u, Some(0), &tax).unwrap());
    }

    #[test]
    fn null_object_always_true() {
        let tax = two_objects();
        for lex in [
            Lexicon::new(vec![leaf(0), leaf(1)]),
            Lexicon::new(vec![Meaning::Empty, Meaning::Empty]),
        ] {
            for u in Vocabulary::numbered(2).candidates(true) {
                assert!(truth_value(&lex, &u, None, &tax).unwrap());
            }
        }
    }

    #[test]
    fn unknown_primitive_is_domain_error() {
        let tax = two_objects();
        let lex = Lexicon::new(vec![leaf(0)]);
        let u = Utterance::single(3);
        assert!(matches!(
            truth_value(&lex, &u, Some(0), &tax),
            Err(ChaiError::Domain(_))
        ));
    }

    #[test]
    fn extensions_of_square_taxonomy() {
        let tax = Taxonomy::squares();
        assert!(extension(Meaning::Empty, &tax).unwrap().is_empty());
        let sup = tax
            .nodes()
            .iter()
            .find(|n| n.level == Level::Superordinate)
            .unwrap();
        assert_eq!(
            extension(Meaning::Node(sup.id), &tax).unwrap(),
            ReferentSet::first(4)
        );
        let blue = tax.node(NodeId(4)).unwrap();
        assert_eq!(blue.level, Level::Basic);
        assert_eq!(
            extension(Meaning::Node(blue.id), &tax)
                .unwrap()
                .iter()
                .collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert!(extension(Meaning::Node(NodeId(99)), &tax).is_err());
    }

    #[test]
    fn extension_monotone_along_edges() {
        let tax = Taxonomy::squares();
        for n in tax.nodes() {
            for c in &n.children {
                assert!(n.extension().is_superset(tax.node(*c).unwrap().extension()));
            }
        }
    }

    #[test]
    fn contradictions() {
        let tax = two_objects();
        let uni = tax.universe();
        let mixed = Lexicon::new(vec![leaf(0), leaf(1)]);
        let same = Lexicon::new(vec![leaf(0), leaf(0)]);
        let pair = Utterance::pair(0, 1).unwrap();
        assert!(is_contradiction(&mixed, &pair, uni, &tax).unwrap());
        assert!(!is_contradiction(&same, &pair, uni, &tax).unwrap());
        let lex3 = Lexicon::new(vec![leaf(0), leaf(0), leaf(1)]);
        assert!(!is_contradiction(&lex3, &Utterance::single(2), uni, &tax).unwrap());
        // an empty word fails to refer; that is not a contradiction
        let empty = Lexicon::new(vec![Meaning::Empty]);
        assert!(!is_contradiction(&empty, &Utterance::single(0), uni, &tax).unwrap());
    }

    #[test]
    fn cost_counts_words() {
        assert_eq!(utterance_cost(&Utterance::single(0)), 1.0);
        assert_eq!(utterance_cost(&Utterance::pair(0, 1).unwrap()), 2.0);
        assert_eq!(
            Utterance::pair(0, 1).unwrap(),
            Utterance::pair(1, 0).unwrap()
        );
    }

    #[test]
    fn utterance_shape_rules() {
        assert!(Utterance::new(&[]).is_err());
        assert!(Utterance::new(&[1, 1]).is_err());
        assert!(Utterance::new(&[0, 1, 2]).is_err());
    }

    #[test]
    fn vocabulary_encoding() {
        let v = Vocabulary::numbered(4);
        let u = Utterance::pair(1, 0).unwrap();
        assert_eq!(v.format(&u), "u1+u2");
        assert_eq!(v.parse("u2+u1").unwrap(), u);
        assert_eq!(v.candidates(true).len(), 4 + 6);
        assert!(v.parse("u9").is_err());
    }

    #[test]
    fn taxonomy_rejects_split_basic() {
        let leaves: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let basic = vec![vec!["a".to_string(), "b".to_string()]];
        let sup = vec![vec!["b".to_string(), "c".to_string()]];
        assert!(Taxonomy::new(&leaves, &basic, &sup).is_err());
    }

    #[test]
    fn two_branch_universe_constructible() {
        let leaves: Vec<String> = (0..8).map(|i| format!("l{i}")).collect();
        let basic: Vec<Vec<String>> = (0..4)
            .map(|b| vec![leaves[2 * b].clone(), leaves[2 * b + 1].clone()])
            .collect();
        let sup = vec![leaves[..4].to_vec(), leaves[4..].to_vec()];
        let tax = Taxonomy::new(&leaves, &basic, &sup).unwrap();
        assert_eq!(tax.nodes().len(), 8 + 4 + 2);
        assert_eq!(tax.nodes()[12].children.len(), 2);
    }
}
