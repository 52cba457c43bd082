//! Scenario files: the JSON input shared by every subcommand.

use std::path::{Path, PathBuf};

use fracorder::symbol::SymbolKind;
use fracorder::{BandLimitedData, DataPreset, DerivativeKind, FrequencyBox, MatrixSymbol, MlPolicy, Tolerances, VectorOrder};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectrum;
use crate::CliError;

pub const SCHEMA: &str = "fracorder.scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinSymbol {
    /// [[-ξ², -ξ], [-ξ, -ξ²]] through its closed-form factors.
    CoupledPair,
    /// The same matrix through its polynomial entries.
    CoupledPairEntries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SymbolSpec {
    Builtin {
        name: BuiltinSymbol,
    },
    Inline {
        m: usize,
        #[serde(flatten)]
        kind: SymbolKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DataSpec {
    Preset(DataPreset),
    /// Node-major values, m per node.
    Tabulated { m: usize, values: Vec<Complex64> },
    /// Binary spectrum file, relative to the scenario file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub domain: FrequencyBox,
    pub symbol: SymbolSpec,
    pub data: DataSpec,
    #[serde(default = "default_kind")]
    pub kind: DerivativeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<VectorOrder>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Points at which the spatial solution is reconstructed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub policy: MlPolicy,
}

fn default_kind() -> DerivativeKind {
    DerivativeKind::Caputo
}

/// Symbol and data built from a scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub symbol: MatrixSymbol,
    pub data: BandLimitedData,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("scenario: {e}")))?;
        if s.schema != SCHEMA {
            return Err(CliError::Usage(format!("scenario: unsupported schema `{}`, expected `{SCHEMA}`", s.schema)));
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    /// Checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        self.domain.validate()?;
        self.tolerances.validate()?;
        self.policy.validate()?;
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Usage("scenario: times must be finite and non-negative".into()));
        }
        if self.x.iter().any(|x| x.len() != self.domain.dim()) {
            return Err(CliError::Usage(format!("scenario: every x point needs {} coordinates", self.domain.dim())));
        }
        if let Some(xi0) = &self.xi0 {
            if xi0.len() != self.domain.dim() {
                return Err(CliError::Usage(format!("scenario: xi0 needs {} coordinates", self.domain.dim())));
            }
        }
        Ok(())
    }

    /// Builds the symbol and the initial spectrum; `base` resolves relative file paths.
    pub fn model(&self, base: &Path) -> Result<Model, CliError> {
        let symbol = match &self.symbol {
            SymbolSpec::Builtin { name: BuiltinSymbol::CoupledPair } => MatrixSymbol::coupled_pair(self.domain.clone())?,
            SymbolSpec::Builtin { name: BuiltinSymbol::CoupledPairEntries } => {
                MatrixSymbol::coupled_pair_entries(self.domain.clone())?
            }
            SymbolSpec::Inline { m, kind } => MatrixSymbol::new(*m, self.domain.clone(), kind.clone())?,
        };
        let data = match &self.data {
            DataSpec::Preset(p) => BandLimitedData::from_preset(self.domain.clone(), p.clone())?,
            DataSpec::Tabulated { m, values } => BandLimitedData::tabulated(self.domain.clone(), *m, values.clone())?,
            DataSpec::File { path } => {
                let full = base.join(path);
                let (points, m, values) = spectrum::read(&full)?;
                if points != self.domain.points {
                    return Err(CliError::Usage(format!(
                        "{}: grid {:?} does not match the scenario grid {:?}",
                        full.display(),
                        points,
                        self.domain.points
                    )));
                }
                BandLimitedData::tabulated(self.domain.clone(), m, values)?
            }
        };
        if data.m != symbol.m {
            return Err(CliError::Usage(format!("scenario: data has {} components, symbol is {}×{}", data.m, symbol.m, symbol.m)));
        }
        Ok(Model { symbol, data })
    }

    pub fn order(&self) -> Result<&VectorOrder, CliError> {
        self.order.as_ref().ok_or_else(|| CliError::Usage("scenario: `order` is required".into()))
    }

    pub fn t0(&self) -> Result<f64, CliError> {
        self.t0.ok_or_else(|| CliError::Usage("scenario: `t0` is required".into()))
    }

    pub fn xi0(&self) -> Result<&[f64], CliError> {
        self.xi0.as_deref().ok_or_else(|| CliError::Usage("scenario: `xi0` is required".into()))
    }

    /// β₀ from the scenario, else the floor of the order.
    pub fn beta0(&self) -> Result<f64, CliError> {
        self.beta0
            .or_else(|| self.order.as_ref().map(|o| o.floor()))
            .ok_or_else(|| CliError::Usage("scenario: `beta0` is required".into()))
    }
}

/// The ready-made two-component example: the coupled pair on [-4, 4],
/// a Gaussian spectrum centered at ξ = 2 with amplitudes (1, 2), observed
/// at ξ⁰ = 2 and time t0.
pub fn coupled_pair_example(kind: DerivativeKind, t0: f64) -> Scenario {
    Scenario {
        schema: SCHEMA.into(),
        domain: FrequencyBox::cube(1, -4.0, 4.0, 81).expect("valid grid"),
        symbol: SymbolSpec::Builtin { name: BuiltinSymbol::CoupledPair },
        data: DataSpec::Preset(DataPreset::Gaussian {
            center: vec![2.0],
            width: 1.0,
            amplitudes: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
        }),
        kind,
        order: Some(VectorOrder::new(vec![0.4, 0.85], 0.1).expect("valid order")),
        times: vec![0.0, 0.5, 1.0, 5.0],
        x: vec![vec![-1.0], vec![0.0], vec![1.0]],
        t0: Some(t0),
        xi0: Some(vec![2.0]),
        beta0: Some(0.1),
        tolerances: Tolerances::default(),
        policy: MlPolicy::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips_through_json() {
        let s = coupled_pair_example(DerivativeKind::Caputo, 4.0);
        let text = serde_json::to_string_pretty(&s).unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, s);
        let model = back.model(Path::new(".")).unwrap();
        assert_eq!(model.symbol.m, 2);
        assert_eq!(model.data.at_node(60)[1], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn unknown_keys_and_schemas_are_rejected() {
        let s = coupled_pair_example(DerivativeKind::Caputo, 4.0);
        let mut v = serde_json::to_value(&s).unwrap();
        v["colour"] = serde_json::json!("blue");
        assert!(matches!(Scenario::from_json(&v.to_string()), Err(CliError::Usage(_))));

        let mut v = serde_json::to_value(&s).unwrap();
        v["schema"] = serde_json::json!("fracorder.scenario/0");
        assert!(matches!(Scenario::from_json(&v.to_string()), Err(CliError::Usage(_))));

        let mut v = serde_json::to_value(&s).unwrap();
        v["data"]["colour"] = serde_json::json!(1);
        assert!(Scenario::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn inline_symbol_and_tabulated_data() {
        let text = r#"{
            "schema": "fracorder.scenario/1",
            "domain": {"lower": [-1.0], "upper": [1.0], "points": [3]},
            "symbol": {"source": "inline", "m": 1, "kind": "polynomial", "entries": [[[{"powers": [2], "coeff": -1.0}]]]},
            "data": {"source": "tabulated", "m": 1, "values": [[1.0, 0.0], [2.0, 0.0], [3.0, 0.5]]},
            "kind": "rl",
            "beta0": 0.2
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.kind, DerivativeKind::RiemannLiouville);
        let model = s.model(Path::new(".")).unwrap();
        assert_eq!(model.data.at_node(2)[0], Complex64::new(3.0, 0.5));
        assert_eq!(s.beta0().unwrap(), 0.2);
        assert!(s.order().is_err());
    }

    #[test]
    fn mismatched_component_counts_are_usage_errors() {
        let mut s = coupled_pair_example(DerivativeKind::Caputo, 4.0);
        s.data = DataSpec::Tabulated { m: 1, values: vec![Complex64::new(1.0, 0.0); 81] };
        assert!(matches!(s.model(Path::new(".")), Err(CliError::Usage(_))));
    }
}
