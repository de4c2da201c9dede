use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

use super::suites::SuiteKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub algebraic: f64,
    pub modular: f64,
    pub yang_baxter: f64,
    pub module_property: f64,
    pub perp_angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-10,
            modular: 1e-8,
            yang_baxter: 1e-13,
            module_property: 1e-9,
            perp_angle: 1e-9,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [(&'static str, f64); 5] {
        [
            ("algebraic", self.algebraic),
            ("modular", self.modular),
            ("yang_baxter", self.yang_baxter),
            ("module_property", self.module_property),
            ("perp_angle", self.perp_angle),
        ]
    }
}

/// The model either inline or as a path to a spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(ModelSpec),
    Path(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub suites: Option<Vec<SuiteKind>>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub q_grid: Vec<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_t_grid() -> Vec<f64> {
    vec![-1.0, -0.3, 0.3, 1.0]
}

fn default_samples() -> usize {
    50
}

impl RunConfig {
    pub fn from_model(spec: ModelSpec) -> Self {
        Self {
            model: ModelSource::Inline(spec),
            truncation: None,
            tolerances: Tolerances::default(),
            suites: None,
            t_grid: default_t_grid(),
            q_grid: Vec::new(),
            out_dir: None,
            seed: 0,
            samples: default_samples(),
        }
    }

    /// The inline model with the truncation override applied.
    pub fn spec(&self) -> &ModelSpec {
        match &self.model {
            ModelSource::Inline(spec) => spec,
            ModelSource::Path(p) => panic!("model path {} not resolved", p.display()),
        }
    }

    pub fn suites(&self) -> Vec<SuiteKind> {
        self.suites.clone().unwrap_or_else(|| SuiteKind::ALL.to_vec())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.spec().violations();
        for (name, tol) in self.tolerances.all() {
            if !(tol > 0.0) {
                out.push(format!("tolerance {name} must be positive, got {tol}"));
            }
        }
        if self.spec().truncation < 2 {
            out.push(format!(
                "truncation N = {} but operator suites need N >= 2",
                self.spec().truncation
            ));
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) {
            out.push("t_grid entries must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(v))
        }
    }
}

/// Parses either a bare model spec or a run config with a `model` key.
/// Relative model paths are resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let mut cfg = if value.get("model").is_some() {
        serde_json::from_str::<RunConfig>(text)?
    } else {
        RunConfig::from_model(serde_json::from_str::<ModelSpec>(text)?)
    };
    if let ModelSource::Path(p) = &cfg.model {
        let path = base.join(p);
        let inner = std::fs::read_to_string(&path)?;
        cfg.model = ModelSource::Inline(serde_json::from_str(&inner)?);
    }
    if let (Some(n), ModelSource::Inline(spec)) = (cfg.truncation, &mut cfg.model) {
        spec.truncation = n;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{"sectors": [{"dim": 2}, {"dim": 1}],
        "q": [[0.5, 0.3], [0.3, -0.4]],
        "rotation_blocks": [{"sector": 0, "coords": [0, 1], "lambda": 2.0}],
        "truncation": 4}"#;

    #[test]
    fn bare_spec_and_wrapped_config() {
        let a = parse_config(SPEC, Path::new(".")).unwrap();
        assert_eq!(a.spec().truncation, 4);
        assert!(a.violations().is_empty());
        let wrapped = format!(r#"{{"model": {SPEC}, "truncation": 3, "seed": 9}}"#);
        let b = parse_config(&wrapped, Path::new(".")).unwrap();
        assert_eq!(b.spec().truncation, 3);
        assert_eq!(b.seed, 9);
    }

    #[test]
    fn model_path_is_resolved() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.json"), SPEC).unwrap();
        let cfg = parse_config(r#"{"model": "m.json"}"#, dir.path()).unwrap();
        assert_eq!(cfg.spec().sectors.len(), 2);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_config("{\n  \"sectors\": [,]\n}", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");
    }

    #[test]
    fn bad_tolerance_and_truncation() {
        let mut cfg = parse_config(SPEC, Path::new(".")).unwrap();
        cfg.tolerances.modular = -1.0;
        if let ModelSource::Inline(s) = &mut cfg.model {
            s.truncation = 1;
        }
        assert_eq!(cfg.violations().len(), 2);
    }
}
