//! Seeded random formulas and scenes for cross-checking and benchmarks.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{AgentName, Formula, Proposition, Scene};

#[derive(Debug, Clone)]
pub struct FormulaParams {
    pub props: Vec<Proposition>,
    /// Empty means no knowledge operators.
    pub agents: Vec<AgentName>,
    /// Maximum tree depth, counting leaves as depth 1.
    pub max_depth: usize,
    /// Maximum nesting of announcements along any path.
    pub max_announce_nesting: usize,
}

impl FormulaParams {
    fn boolean(&self) -> FormulaParams {
        FormulaParams {
            agents: Vec::new(),
            max_announce_nesting: 0,
            ..self.clone()
        }
    }
}

pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, params: &FormulaParams) -> Formula {
    gen_formula(rng, params, params.max_depth.max(1), params.max_announce_nesting)
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, params: &FormulaParams) -> Formula {
    match rng.random_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bot,
        _ => match params.props.choose(rng) {
            Some(p) => Formula::Prop(*p),
            None => Formula::Top,
        },
    }
}

fn gen_formula<R: Rng + ?Sized>(
    rng: &mut R,
    params: &FormulaParams,
    depth: usize,
    announce: usize,
) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return leaf(rng, params);
    }
    let d = depth - 1;
    let epistemic = !params.agents.is_empty();
    let choices = if epistemic { 9 } else { 6 };
    match rng.random_range(0..choices) {
        0 => Formula::neg(gen_formula(rng, params, d, announce)),
        1 | 2 => {
            let arity = rng.random_range(2..=3);
            let items = (0..arity).map(|_| gen_formula(rng, params, d, announce)).collect();
            if rng.random_bool(0.5) {
                Formula::Conj(items)
            } else {
                Formula::Disj(items)
            }
        }
        3 => Formula::implies(
            gen_formula(rng, params, d, announce),
            gen_formula(rng, params, d, announce),
        ),
        4 => Formula::equiv(
            gen_formula(rng, params, d, announce),
            gen_formula(rng, params, d, announce),
        ),
        5 => leaf(rng, params),
        6 | 7 => {
            let agent = params.agents.choose(rng).unwrap().clone();
            let g = gen_formula(rng, params, d, announce);
            if rng.random_bool(0.5) {
                Formula::knows_that(agent, g)
            } else {
                Formula::knows_whether(agent, g)
            }
        }
        _ if announce > 0 => Formula::announce(
            gen_formula(rng, params, d, announce - 1),
            gen_formula(rng, params, d, announce - 1),
        ),
        _ => Formula::neg(gen_formula(rng, params, d, announce)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneParams {
    pub max_props: usize,
    pub max_agents: usize,
    pub max_depth: usize,
    pub max_announce_nesting: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            max_props: 6,
            max_agents: 4,
            max_depth: 5,
            max_announce_nesting: 2,
        }
    }
}

/// Agent names `a`, `b`, ..., `z`, `a1`, `b1`, ...
pub fn agent_pool(count: usize) -> Vec<AgentName> {
    (0..count)
        .map(|i| {
            let letter = (b'a' + (i % 26) as u8) as char;
            let name = match i / 26 {
                0 => letter.to_string(),
                k => format!("{letter}{k}"),
            };
            AgentName::new(name).unwrap()
        })
        .collect()
}

/// A scene that satisfies every structural invariant by construction.
pub fn random_scene<R: Rng + ?Sized>(rng: &mut R, params: &SceneParams) -> Scene {
    let nprops = rng.random_range(1..=params.max_props.max(1));
    // ids drawn from a slightly larger range so vocabularies have gaps
    let mut ids: Vec<u32> = (1..=(nprops as u32 + 3)).collect();
    let vocabulary: BTreeSet<Proposition> = (0..nprops)
        .map(|_| {
            let i = rng.random_range(0..ids.len());
            Proposition::new(ids.swap_remove(i)).unwrap()
        })
        .collect();
    let props: Vec<Proposition> = vocabulary.iter().copied().collect();

    let nagents = rng.random_range(1..=params.max_agents.max(1));
    let agents = agent_pool(nagents);
    let observations = agents
        .iter()
        .map(|a| {
            let seen = props.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
            (a.clone(), seen)
        })
        .collect();

    let fparams = FormulaParams {
        props,
        agents,
        max_depth: params.max_depth,
        max_announce_nesting: params.max_announce_nesting,
    };
    let law = if rng.random_bool(0.5) {
        Formula::Top
    } else {
        random_formula(rng, &FormulaParams { max_depth: 3, ..fparams.boolean() })
    };
    let query = random_formula(rng, &fparams);
    Scene {
        vocabulary,
        law,
        observations,
        query,
    }
}

/// An endless, reproducible stream of random scenes.
pub fn scene_stream(seed: u64, params: SceneParams) -> impl Iterator<Item = Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || random_scene(&mut rng, &params))
}
