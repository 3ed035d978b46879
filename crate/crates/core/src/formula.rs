//! Epistemic formulas, knowledge-structure scenes, and benchmark records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An atomic proposition, identified by a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Proposition(u32);

impl Proposition {
    /// Returns `None` for id 0.
    pub fn new(id: u32) -> Option<Self> {
        (id >= 1).then_some(Proposition(id))
    }

    pub fn id(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Proposition {
    type Error = String;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        Proposition::new(id).ok_or_else(|| "proposition ids start at 1".to_string())
    }
}

impl From<Proposition> for u32 {
    fn from(p: Proposition) -> u32 {
        p.0
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Name of an agent: ASCII letters and digits, starting with a letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentName(String);

/// Words reserved by the scene language; they cannot name agents.
pub const KEYWORDS: &[&str] = &[
    "VARS", "LAW", "OBS", "VALID", "Top", "Bot", "AND", "OR", "knows", "whether", "that",
];

impl AgentName {
    pub fn new(name: impl Into<String>) -> Result<Self, SceneError> {
        let name = name.into();
        let mut chars = name.chars();
        let well_formed = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric());
        if !well_formed || KEYWORDS.contains(&name.as_str()) {
            return Err(SceneError::InvalidAgentName(name));
        }
        Ok(AgentName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for AgentName {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentName::new(s)
    }
}

impl TryFrom<String> for AgentName {
    type Error = SceneError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        AgentName::new(s)
    }
}

impl From<AgentName> for String {
    fn from(a: AgentName) -> String {
        a.0
    }
}

impl fmt::Display for AgentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Formula of public announcement logic with knowledge operators.
///
/// `Conj` and `Disj` hold at least two operands in source order. Use
/// [`Formula::conj`] and [`Formula::disj`] to build them from arbitrary lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Bot,
    Prop(Proposition),
    Neg(Box<Formula>),
    Conj(Vec<Formula>),
    Disj(Vec<Formula>),
    Impl(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    KnowsThat(AgentName, Box<Formula>),
    KnowsWhether(AgentName, Box<Formula>),
    /// `[! announced] continuation`
    Announce(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Atom with the given id. Panics on 0.
    pub fn prop(id: u32) -> Formula {
        Formula::Prop(Proposition::new(id).expect("proposition ids start at 1"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }

    /// Conjunction of `items`; an empty list is `Top`, a singleton is its element.
    pub fn conj(mut items: Vec<Formula>) -> Formula {
        match items.len() {
            0 => Formula::Top,
            1 => items.pop().unwrap(),
            _ => Formula::Conj(items),
        }
    }

    /// Disjunction of `items`; an empty list is `Bot`, a singleton is its element.
    pub fn disj(mut items: Vec<Formula>) -> Formula {
        match items.len() {
            0 => Formula::Bot,
            1 => items.pop().unwrap(),
            _ => Formula::Disj(items),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Impl(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Formula, b: Formula) -> Formula {
        Formula::Equiv(Box::new(a), Box::new(b))
    }

    pub fn knows_that(agent: AgentName, f: Formula) -> Formula {
        Formula::KnowsThat(agent, Box::new(f))
    }

    pub fn knows_whether(agent: AgentName, f: Formula) -> Formula {
        Formula::KnowsWhether(agent, Box::new(f))
    }

    pub fn announce(announced: Formula, continuation: Formula) -> Formula {
        Formula::Announce(Box::new(announced), Box::new(continuation))
    }

    /// Direct subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bot | Formula::Prop(_) => Vec::new(),
            Formula::Neg(g) | Formula::KnowsThat(_, g) | Formula::KnowsWhether(_, g) => vec![g],
            Formula::Conj(gs) | Formula::Disj(gs) => gs.iter().collect(),
            Formula::Impl(a, b) | Formula::Equiv(a, b) | Formula::Announce(a, b) => vec![a, b],
        }
    }

    /// True when no knowledge or announcement operator occurs.
    pub fn is_boolean(&self) -> bool {
        match self {
            Formula::KnowsThat(..) | Formula::KnowsWhether(..) | Formula::Announce(..) => false,
            _ => self.children().into_iter().all(Formula::is_boolean),
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::depth)
            .max()
            .unwrap_or(0)
    }
}

/// Propositions occurring anywhere in `f`.
pub fn free_props(f: &Formula) -> BTreeSet<Proposition> {
    let mut out = BTreeSet::new();
    collect_props(f, &mut out);
    out
}

fn collect_props(f: &Formula, out: &mut BTreeSet<Proposition>) {
    if let Formula::Prop(p) = f {
        out.insert(*p);
    }
    for g in f.children() {
        collect_props(g, out);
    }
}

/// Agents named by a knowledge operator in `f`.
pub fn agents_of(f: &Formula) -> BTreeSet<AgentName> {
    let mut out = BTreeSet::new();
    collect_agents(f, &mut out);
    out
}

fn collect_agents(f: &Formula, out: &mut BTreeSet<AgentName>) {
    if let Formula::KnowsThat(a, _) | Formula::KnowsWhether(a, _) = f {
        out.insert(a.clone());
    }
    for g in f.children() {
        collect_agents(g, out);
    }
}

/// Rewrites every `a knows whether g` into `a knows that g | a knows that ~g`.
pub fn expand_knows_whether(f: &Formula) -> Formula {
    use Formula::*;
    let go = |g: &Formula| Box::new(expand_knows_whether(g));
    match f {
        Top | Bot | Prop(_) => f.clone(),
        Neg(g) => Neg(go(g)),
        Conj(gs) => Conj(gs.iter().map(expand_knows_whether).collect()),
        Disj(gs) => Disj(gs.iter().map(expand_knows_whether).collect()),
        Impl(a, b) => Impl(go(a), go(b)),
        Equiv(a, b) => Equiv(go(a), go(b)),
        KnowsThat(ag, g) => KnowsThat(ag.clone(), go(g)),
        KnowsWhether(ag, g) => {
            let g = expand_knows_whether(g);
            Disj(vec![
                KnowsThat(ag.clone(), Box::new(g.clone())),
                KnowsThat(ag.clone(), Box::new(Neg(Box::new(g)))),
            ])
        }
        Announce(a, b) => Announce(go(a), go(b)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("proposition {0} is not declared in VARS")]
    UndeclaredProposition(Proposition),
    #[error("agent {0} has no OBS declaration")]
    UndeclaredAgent(AgentName),
    #[error("LAW must be a Boolean formula without knowledge or announcement operators")]
    EpistemicLaw,
    #[error("invalid agent name {0:?}")]
    InvalidAgentName(String),
}

/// A knowledge structure together with the formula queried for validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scene {
    pub vocabulary: BTreeSet<Proposition>,
    pub law: Formula,
    pub observations: BTreeMap<AgentName, BTreeSet<Proposition>>,
    pub query: Formula,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !self.law.is_boolean() {
            return Err(SceneError::EpistemicLaw);
        }
        let observed = self.observations.values().flatten();
        let mentioned = free_props(&self.law)
            .into_iter()
            .chain(observed.copied())
            .chain(free_props(&self.query));
        for p in mentioned {
            if !self.vocabulary.contains(&p) {
                return Err(SceneError::UndeclaredProposition(p));
            }
        }
        if let Some(a) = agents_of(&self.query)
            .into_iter()
            .find(|a| !self.observations.contains_key(a))
        {
            return Err(SceneError::UndeclaredAgent(a));
        }
        Ok(())
    }

    /// Same structure, different query.
    pub fn with_query(&self, query: Formula) -> Scene {
        Scene {
            query,
            ..self.clone()
        }
    }
}

/// Returns `scene` unchanged when every structural invariant holds.
pub fn validate_scene(scene: Scene) -> Result<Scene, SceneError> {
    scene.validate()?;
    Ok(scene)
}

/// One benchmark item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_formulation: Option<String>,
}

/// Three-way classification of a model answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    /// `Unknown` never matches.
    pub fn matches(self, label: bool) -> bool {
        matches!(
            (self, label),
            (Verdict::True, true) | (Verdict::False, false)
        )
    }

    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "TRUE",
            Verdict::False => "FALSE",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

/// Truth values for exactly the propositions of a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment(BTreeMap<Proposition, bool>);

impl Assignment {
    pub fn new(values: BTreeMap<Proposition, bool>) -> Self {
        Assignment(values)
    }

    /// Bit `i` of `bits` gives the value of the `i`-th smallest proposition.
    pub fn from_bits(vocabulary: &BTreeSet<Proposition>, bits: u64) -> Self {
        Assignment(
            vocabulary
                .iter()
                .enumerate()
                .map(|(i, p)| (*p, bits >> i & 1 == 1))
                .collect(),
        )
    }

    pub fn get(&self, p: Proposition) -> Option<bool> {
        self.0.get(&p).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = Proposition> + '_ {
        self.0.keys().copied()
    }

    pub fn covers_exactly(&self, vocabulary: &BTreeSet<Proposition>) -> bool {
        self.0.len() == vocabulary.len() && vocabulary.iter().all(|p| self.0.contains_key(p))
    }
}
