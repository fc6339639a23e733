//! Preset run configurations behind the shortcut subcommands.

use cascade_sim::config::{RunConfig, Scenario, SweepConfig};
use cascade_sim::obe::ObeParams;

pub const RATIO_VALUES: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
pub const ETA_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn named(scenario: Scenario, stem: &str, sweep: Option<(&str, &[f64])>) -> RunConfig {
    let mut config = RunConfig::preset(scenario);
    config.sweep = sweep.map(|(path, values)| SweepConfig { path: path.to_string(), values: values.to_vec() });
    config.outputs.csv = format!("{stem}.csv");
    config.outputs.json = format!("{stem}.json");
    config.outputs.svg = Some(format!("{stem}.svg"));
    config
}

/// Absorption versus `Γ32^T/Γ31^T` at canonical parameters.
pub fn sweep_ratio() -> RunConfig {
    named(Scenario::LambdaBasic, "sweep_ratio", Some(("params.gamma32_T", &RATIO_VALUES)))
}

/// Absorption versus mode overlap at equal rates.
pub fn sweep_eta() -> RunConfig {
    named(Scenario::LambdaBasic, "sweep_eta", Some(("params.eta", &ETA_VALUES)))
}

/// Emission-time jitter with `Γ30^S = Γ31^S`, compared to no jitter.
pub fn jitter() -> RunConfig {
    named(Scenario::LambdaJitter, "jitter", None)
}

/// Entanglement generation with `η = η_S = 0.3`.
pub fn entangle() -> RunConfig {
    let mut config = named(Scenario::PolarizationEntanglement, "entangle", None);
    config.params = RunConfig::from_json(r#"{"scenario": "polarization_entanglement", "params": {"eta": 0.3}}"#)
        .expect("preset is valid")
        .params;
    config
}

/// Window-center output flux of a weakly driven target versus `Γ32`.
pub fn obe() -> RunConfig {
    let mut config = named(Scenario::CoherentObe, "obe", Some(("params.gamma32", &[0.0, 0.5, 1.0, 2.0, 3.0])));
    config.params = cascade_sim::config::ModelParams::Obe(ObeParams::default());
    config
}
