//! Validity checking for scenes.
//!
//! The symbolic path translates a formula into the BDD of the states where it
//! holds. Knowledge is universal quantification over the variables the agent
//! does not observe, relative to the current law; an announcement conjoins
//! the announced formula into the law for its continuation.
//!
//! The explicit path enumerates law-satisfying assignments and evaluates
//! formulas state by state. It shares nothing with the symbolic path beyond
//! the syntax tree and serves as its oracle.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdd::{BddError, BoolFn, Manager};
use crate::formula::{AgentName, Formula, Proposition, Scene, SceneError};
use crate::parser::{parse_scene, SceneParseError};

/// Largest vocabulary the explicit oracle will enumerate.
pub const MAX_EXPLICIT_PROPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Parse(#[from] SceneParseError),
    #[error(transparent)]
    Invalid(#[from] SceneError),
    #[error("vocabulary has {size} propositions; explicit checking supports at most {max}")]
    VocabularyTooLarge { size: usize, max: usize },
    #[error(transparent)]
    Bdd(#[from] BddError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub verdict: bool,
    /// Assignments satisfying the initial law (saturates at `u128::MAX`).
    pub state_count: u128,
    pub peak_node_count: usize,
    #[serde(with = "duration_micros")]
    pub elapsed: Duration,
}

mod duration_micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_micros)
    }
}

/// Symbolic knowledge structure: a manager, the scene, and the current law.
pub struct KnowledgeState<'s> {
    scene: &'s Scene,
    manager: Manager,
    initial_law: BoolFn,
    /// Per agent, the propositions it does not observe.
    unobserved: HashMap<AgentName, BTreeSet<Proposition>>,
}

impl<'s> KnowledgeState<'s> {
    /// Builds a fresh manager for `scene`, which must already be validated.
    pub fn new(scene: &'s Scene) -> Result<Self, CheckError> {
        let manager = Manager::new(&scene.vocabulary);
        let unobserved = scene
            .observations
            .iter()
            .map(|(a, seen)| (a.clone(), scene.vocabulary.difference(seen).copied().collect()))
            .collect();
        let mut ks = KnowledgeState {
            scene,
            initial_law: manager.constant(true),
            manager,
            unobserved,
        };
        let top = ks.manager.constant(true);
        ks.initial_law = ks.translate_under(top, &scene.law)?;
        Ok(ks)
    }

    pub fn manager(&self) -> &Manager {
        &self.manager
    }

    pub fn law(&self) -> BoolFn {
        self.initial_law
    }

    /// Local-truth function of `f` under the initial law.
    pub fn translate(&mut self, f: &Formula) -> Result<BoolFn, CheckError> {
        self.translate_under(self.initial_law, f)
    }

    fn translate_under(&mut self, law: BoolFn, f: &Formula) -> Result<BoolFn, CheckError> {
        let m = &mut self.manager;
        let out = match f {
            Formula::Top => m.constant(true),
            Formula::Bot => m.constant(false),
            Formula::Prop(p) => m.var(*p)?,
            Formula::Neg(g) => {
                let g = self.translate_under(law, g)?;
                self.manager.neg(g)?
            }
            Formula::Conj(gs) => {
                let mut acc = self.manager.constant(true);
                for g in gs {
                    let g = self.translate_under(law, g)?;
                    acc = self.manager.conj(acc, g)?;
                }
                acc
            }
            Formula::Disj(gs) => {
                let mut acc = self.manager.constant(false);
                for g in gs {
                    let g = self.translate_under(law, g)?;
                    acc = self.manager.disj(acc, g)?;
                }
                acc
            }
            Formula::Impl(a, b) => {
                let a = self.translate_under(law, a)?;
                let b = self.translate_under(law, b)?;
                self.manager.impl_(a, b)?
            }
            Formula::Equiv(a, b) => {
                let a = self.translate_under(law, a)?;
                let b = self.translate_under(law, b)?;
                self.manager.equiv(a, b)?
            }
            Formula::KnowsThat(agent, g) => self.knows(law, agent, g)?,
            Formula::KnowsWhether(agent, g) => {
                let yes = self.knows(law, agent, g)?;
                let neg = Formula::Neg(g.clone());
                let no = self.knows(law, agent, &neg)?;
                self.manager.disj(yes, no)?
            }
            Formula::Announce(announced, g) => {
                let psi = self.translate_under(law, announced)?;
                let updated = self.manager.conj(law, psi)?;
                let g = self.translate_under(updated, g)?;
                self.manager.impl_(psi, g)?
            }
        };
        Ok(out)
    }

    fn knows(&mut self, law: BoolFn, agent: &AgentName, g: &Formula) -> Result<BoolFn, CheckError> {
        let unobserved = self
            .unobserved
            .get(agent)
            .cloned()
            .ok_or_else(|| SceneError::UndeclaredAgent(agent.clone()))?;
        let g = self.translate_under(law, g)?;
        let body = self.manager.impl_(law, g)?;
        Ok(self.manager.forall_set(&unobserved, body)?)
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }
}

/// Decides whether the scene's query holds at every state of its law.
pub fn check_valid(scene: &Scene) -> Result<QueryResult, CheckError> {
    let started = Instant::now();
    scene.validate()?;
    let mut ks = KnowledgeState::new(scene)?;
    let law = ks.law();
    let query = ks.translate(&scene.query)?;
    let valid = ks.manager.impl_(law, query)?;
    let verdict = ks.manager.is_tautology(valid);
    let state_count = ks.manager.sat_count(law)?.unwrap_or(u128::MAX);
    Ok(QueryResult {
        verdict,
        state_count,
        peak_node_count: ks.manager.total_nodes(),
        elapsed: started.elapsed(),
    })
}

/// Brute-force validity: enumerate the law's states and evaluate pointwise.
pub fn check_valid_explicit(scene: &Scene) -> Result<bool, CheckError> {
    scene.validate()?;
    let model = ExplicitModel::new(scene)?;
    let states = model.law_states();
    let holds = model.extension(&states, &scene.query);
    Ok(holds.iter().all(|b| *b))
}

/// States are bitmasks over the vocabulary in ascending order.
struct ExplicitModel<'s> {
    scene: &'s Scene,
    index: HashMap<Proposition, usize>,
    masks: HashMap<&'s AgentName, u32>,
}

impl<'s> ExplicitModel<'s> {
    fn new(scene: &'s Scene) -> Result<Self, CheckError> {
        let size = scene.vocabulary.len();
        if size > MAX_EXPLICIT_PROPS {
            return Err(CheckError::VocabularyTooLarge {
                size,
                max: MAX_EXPLICIT_PROPS,
            });
        }
        let index: HashMap<_, _> = scene
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i))
            .collect();
        let masks = scene
            .observations
            .iter()
            .map(|(a, seen)| (a, seen.iter().map(|p| 1u32 << index[p]).sum()))
            .collect();
        Ok(ExplicitModel {
            scene,
            index,
            masks,
        })
    }

    fn law_states(&self) -> Vec<u32> {
        let all: Vec<u32> = (0..1u32 << self.scene.vocabulary.len()).collect();
        let holds = self.extension(&all, &self.scene.law);
        all.into_iter()
            .zip(holds)
            .filter_map(|(s, h)| h.then_some(s))
            .collect()
    }

    /// Truth value of `f` at each state of `model`, where `model` is the
    /// current set of possible states.
    fn extension(&self, model: &[u32], f: &Formula) -> Vec<bool> {
        match f {
            Formula::Top => vec![true; model.len()],
            Formula::Bot => vec![false; model.len()],
            Formula::Prop(p) => {
                let bit = self.index[p];
                model.iter().map(|s| s >> bit & 1 == 1).collect()
            }
            Formula::Neg(g) => self.extension(model, g).into_iter().map(|b| !b).collect(),
            Formula::Conj(gs) => gs.iter().fold(vec![true; model.len()], |acc, g| {
                zip_with(&acc, &self.extension(model, g), |a, b| a && b)
            }),
            Formula::Disj(gs) => gs.iter().fold(vec![false; model.len()], |acc, g| {
                zip_with(&acc, &self.extension(model, g), |a, b| a || b)
            }),
            Formula::Impl(a, b) => zip_with(
                &self.extension(model, a),
                &self.extension(model, b),
                |a, b| !a || b,
            ),
            Formula::Equiv(a, b) => zip_with(
                &self.extension(model, a),
                &self.extension(model, b),
                |a, b| a == b,
            ),
            Formula::KnowsThat(agent, g) => self.knows(model, agent, g),
            Formula::KnowsWhether(agent, g) => {
                let yes = self.knows(model, agent, g);
                let no = self.knows(model, agent, &Formula::Neg(g.clone()));
                zip_with(&yes, &no, |a, b| a || b)
            }
            Formula::Announce(announced, g) => {
                let psi = self.extension(model, announced);
                let restricted: Vec<u32> = model
                    .iter()
                    .zip(&psi)
                    .filter_map(|(s, h)| h.then_some(*s))
                    .collect();
                let inner = self.extension(&restricted, g);
                let at: HashMap<u32, bool> = restricted.into_iter().zip(inner).collect();
                model
                    .iter()
                    .zip(&psi)
                    .map(|(s, h)| !h || at[s])
                    .collect()
            }
        }
    }

    /// `agent` knows `g` at s iff `g` holds at every state of `model` that
    /// agrees with s on the agent's observed propositions.
    fn knows(&self, model: &[u32], agent: &AgentName, g: &Formula) -> Vec<bool> {
        let mask = self.masks[agent];
        let holds = self.extension(model, g);
        let mut cell: HashMap<u32, bool> = HashMap::new();
        for (s, h) in model.iter().zip(&holds) {
            *cell.entry(s & mask).or_insert(true) &= *h;
        }
        model.iter().map(|s| cell[&(s & mask)]).collect()
    }
}

fn zip_with(a: &[bool], b: &[bool], f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Parses, validates, and checks `.smcdel` text on a fresh manager.
pub fn run_query(text: &str) -> Result<QueryResult, CheckError> {
    let scene = parse_scene(text)?;
    check_valid(&scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn scene(text: &str) -> Scene {
        parse_scene(text).unwrap()
    }

    #[test]
    fn translate_examples() {
        let s = scene("VARS 1\nLAW Top\nOBS a:\nVALID? Top");
        let mut ks = KnowledgeState::new(&s).unwrap();
        let t = ks.translate(&parse_formula("a knows that Top").unwrap()).unwrap();
        assert!(ks.manager().is_tautology(t));
        let t = ks.translate(&parse_formula("a knows whether 1").unwrap()).unwrap();
        assert!(ks.manager().is_contradiction(t));
        let t = ks.translate(&parse_formula("[!1] a knows that 1").unwrap()).unwrap();
        assert!(ks.manager().is_tautology(t));
    }

    #[test]
    fn vacuous_law() {
        let s = scene("VARS 1,2\nLAW Bot\nOBS a:1\nVALID? Bot");
        assert!(check_valid_explicit(&s).unwrap());
        let r = check_valid(&s).unwrap();
        assert!(r.verdict);
        assert_eq!(r.state_count, 0);
    }

    #[test]
    fn state_count_follows_law() {
        let r = run_query("VARS 1,2,3\nLAW 1 | 2\nOBS a:1\nVALID? Top").unwrap();
        assert_eq!(r.state_count, 6);
        assert!(r.verdict);
        assert!(r.peak_node_count >= 2);
    }

    #[test]
    fn explicit_guard() {
        let ids: Vec<String> = (1..=21).map(|i| i.to_string()).collect();
        let s = scene(&format!("VARS {}\nLAW Top\nOBS a:\nVALID? Top", ids.join(",")));
        assert_eq!(
            check_valid_explicit(&s),
            Err(CheckError::VocabularyTooLarge { size: 21, max: 20 })
        );
        // the symbolic path has no such limit
        assert!(check_valid(&s).unwrap().verdict);
    }

    #[test]
    fn run_query_errors() {
        assert!(matches!(run_query("VARS 1 LAW"), Err(CheckError::Parse(SceneParseError::Syntax(_)))));
        assert!(matches!(
            run_query("VARS 1\nLAW Top\nOBS a:\nVALID? b knows that 1"),
            Err(CheckError::Parse(SceneParseError::Invalid(SceneError::UndeclaredAgent(_))))
        ));
    }

    #[test]
    fn epistemic_announcement_strengthens_law() {
        // a sees 1, b sees nothing; announcing that b does not know 1 keeps
        // every state, announcing that a knows 1 keeps only 1-states.
        let text = "VARS 1,2\nLAW Top\nOBS a:1 b:\nVALID? [! a knows that 1] b knows that 1";
        let s = scene(text);
        assert_eq!(check_valid(&s).unwrap().verdict, check_valid_explicit(&s).unwrap());
        assert!(check_valid(&s).unwrap().verdict);
    }
}
