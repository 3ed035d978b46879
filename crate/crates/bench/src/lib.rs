//! Shared inputs for the criterion benchmarks.

use epicheck_core::generate::{scene_stream, SceneParams};
use epicheck_core::{print_scene, Scene};

pub const CARDS: &str = "VARS 1,2,3,4
LAW Top
OBS Agenta:2 Agentb:3 Agentc:1 Agentd:4
VALID? [!(1|2|3|4)] [!~3] [!~4] Agentc knows whether 2";

/// `n` random scenes from a fixed seed.
pub fn scenes(n: usize, params: SceneParams) -> Vec<Scene> {
    scene_stream(17, params).take(n).collect()
}

/// The same scenes as text.
pub fn scene_texts(n: usize) -> Vec<String> {
    scenes(n, SceneParams::default()).iter().map(print_scene).collect()
}

/// Muddy children with `n` children, all muddy: after `n - 1` rounds of
/// "nobody knows", everyone knows.
pub fn muddy(n: usize) -> String {
    let agents: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
    let vars: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let obs: Vec<String> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let seen: Vec<&str> = vars.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.as_str()).collect();
            format!("{a}:{}", seen.join(","))
        })
        .collect();
    let nobody = agents
        .iter()
        .zip(&vars)
        .map(|(a, v)| format!("~({a} knows whether {v})"))
        .collect::<Vec<_>>()
        .join(" & ");
    let everyone = agents
        .iter()
        .zip(&vars)
        .map(|(a, v)| format!("{a} knows whether {v}"))
        .collect::<Vec<_>>()
        .join(" & ");
    let mut query = format!("(({}) -> ({everyone}))", vars.join(" & "));
    for _ in 1..n {
        query = format!("[!({nobody})] {query}");
    }
    format!(
        "VARS {}\nLAW Top\nOBS {}\nVALID? [!({})] {query}\n",
        vars.join(","),
        obs.join(" "),
        vars.join(" | ")
    )
}
