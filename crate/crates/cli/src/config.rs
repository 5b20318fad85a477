use serde::{Deserialize, Serialize};
use zeitlin_core::dynamics::{IsompOptions, PerturbationMode};
use zeitlin_core::steady::NewtonOptions;
use zeitlin_core::Tolerances;

/// One experiment: a steady state recipe, an evolution setup and render grid.
/// Every section is optional; subcommands read the sections they need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderConfig>,
    #[serde(default)]
    pub outputs: OutputNames,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum SteadyConfig {
    /// `P0 = i diag(d)`.
    Zonal {
        d: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotate: Option<[f64; 3]>,
    },
    /// Combination of `l`-eigenmodes; zonal when `coeffs` is absent.
    Eigenstate {
        l: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeffs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotate: Option<[f64; 3]>,
    },
    /// Zonal solution of `W0 = f(P0)`; `f` in ascending powers. The initial
    /// stream diagonal defaults to `0.3 * spin weights`.
    Newton {
        f: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_init: Option<Vec<f64>>,
        #[serde(default)]
        options: NewtonOptions,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotate: Option<[f64; 3]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Initial state: a steady-state or matrix JSON file, else the `steady`
    /// section, else a unit-norm random matrix from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Perturbation sizes; empty runs a single unperturbed trajectory.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: PerturbationMode,
    #[serde(default = "default_casimir_max")]
    pub casimir_max: u32,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub integrator: IsompOptions,
    /// Attach a stability certificate to the Lyapunov report.
    #[serde(default)]
    pub certify: bool,
}

fn default_mode() -> PerturbationMode {
    PerturbationMode::Orbit
}

fn default_casimir_max() -> u32 {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { n_theta: 64, n_phi: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputNames {
    pub steady: String,
    pub certificate: String,
    pub rigidity: String,
    pub monitor: String,
    pub integrator: String,
    pub lyapunov: String,
    pub render: String,
    pub basis: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            steady: "steady.json".into(),
            certificate: "certificate.json".into(),
            rigidity: "rigidity.json".into(),
            monitor: "monitor.csv".into(),
            integrator: "integrator.json".into(),
            lyapunov: "lyapunov.json".into(),
            render: "render.csv".into(),
            basis: "basis.json".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig {
            n: 8,
            seed: Some(3),
            tolerances: Tolerances::default(),
            steady: Some(SteadyConfig::Newton {
                f: vec![0.0, -1.8, 0.0, -1.0],
                d_init: None,
                options: NewtonOptions::default(),
                rotate: Some([0.1, 0.2, 0.3]),
            }),
            evolve: Some(EvolveConfig {
                h: 0.05,
                t_final: 1.0,
                initial: None,
                epsilons: vec![1e-3, 1e-2],
                mode: PerturbationMode::Orbit,
                casimir_max: 5,
                snapshot_stride: 0,
                integrator: IsompOptions::default(),
                certify: true,
            }),
            render: Some(RenderConfig::default()),
            outputs: OutputNames::default(),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"n": 4, "bogus": 1}"#).is_err());
        let bad = r#"{"n": 4, "steady": {"mode": "zonal", "d": [0,0,0,0], "extra": true}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
        let ok = r#"{"n": 4, "steady": {"mode": "eigenstate", "l": 1}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(ok).is_ok());
    }
}
