use std::path::Path;

use anyhow::{bail, Context};
use netauction::model::{feasibility_transform, forced_null, truthful_profile, ActionProfile, AgentId};
use netauction::scenario::{builtin, ScenarioFile};
use netauction::value::Value;
use netauction::Scenario;

/// Loads a scenario from a path, or from a built-in name when no such file
/// exists. Returns the scenario and a display name.
pub fn load(arg: &str, precision: u32) -> anyhow::Result<(Scenario, String)> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?
    } else if let Some(text) = builtin(arg) {
        text.to_string()
    } else {
        bail!("no scenario file or built-in scenario named `{arg}`");
    };
    let file = ScenarioFile::from_json(&text).with_context(|| format!("parsing {arg}"))?;
    let scenario = file.load(precision).with_context(|| format!("loading {arg}"))?;
    let name = scenario
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned()));
    Ok((scenario, name))
}

/// Declared profile after the transform, or the truthful profile.
pub fn effective_profile(scenario: &Scenario) -> ActionProfile {
    match &scenario.declared {
        Some(p) => feasibility_transform(&scenario.network, p),
        None => truthful_profile(&scenario.network),
    }
}

/// Buyers the transform silenced in the declared profile; warns on stderr.
pub fn warn_forced(scenario: &Scenario) -> Vec<AgentId> {
    let Some(declared) = &scenario.declared else { return Vec::new() };
    let forced = forced_null(&scenario.network, declared);
    if !forced.is_empty() {
        let names: Vec<String> = forced.iter().map(|&a| scenario.label(a)).collect();
        eprintln!(
            "warning: declared profile is infeasible; no informed neighbor reaches {}, treated as Null",
            names.join(", ")
        );
    }
    forced
}

pub fn parse_grid(s: &str) -> anyhow::Result<Vec<Value>> {
    let grid = s
        .split(',')
        .map(|p| p.trim().parse::<Value>().with_context(|| format!("bad grid value `{p}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if grid.is_empty() {
        bail!("empty grid");
    }
    Ok(grid)
}
