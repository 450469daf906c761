use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CarrierFamily, LambdaPrior, LinkFunction, ModelSpec, ModelVersion, PriorSpec};
use crate::sampler::SamplerConfig;
use crate::simulation::MiseConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierName {
    Power,
    Beta,
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub carrier: CarrierName,
    /// Weight of the larger exponent; required for `carrier = "mixture"`.
    pub mixture_pi: Option<f64>,
    pub link_kappa: LinkFunction,
    pub link_nu: LinkFunction,
    pub link_xi: LinkFunction,
    pub version: ModelVersion,
    pub lambda_prior: LambdaPrior,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            carrier: CarrierName::Power,
            mixture_pi: None,
            link_kappa: LinkFunction::Exp,
            link_nu: LinkFunction::Exp,
            link_xi: LinkFunction::Exp,
            version: ModelVersion::Full,
            lambda_prior: LambdaPrior::Lambda,
        }
    }
}

impl ModelSection {
    pub fn to_spec(&self, p: usize, intercept: bool) -> Result<ModelSpec> {
        let carrier = match (self.carrier, self.mixture_pi) {
            (CarrierName::Power, None) => CarrierFamily::Power,
            (CarrierName::Beta, None) => CarrierFamily::Beta,
            (CarrierName::Mixture, Some(pi)) => CarrierFamily::Mixture { pi },
            (CarrierName::Mixture, None) => return Err(Error::Config("model.mixture_pi is required for the mixture carrier".into())),
            (_, Some(_)) => return Err(Error::Config("model.mixture_pi is only valid for the mixture carrier".into())),
        };
        let spec = ModelSpec {
            carrier,
            link_kappa: self.link_kappa,
            link_nu: self.link_nu,
            link_xi: self.link_xi,
            version: self.version,
            p,
            intercept,
            lambda_prior: self.lambda_prior,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// CSV file, relative to the configuration file.
    pub path: PathBuf,
    #[serde(default = "default_response")]
    pub response: String,
    /// Covariate columns in model order; all non-response columns when absent.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub intercept: bool,
    #[serde(default)]
    pub standardize: bool,
}

fn default_response() -> String {
    "y".into()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory, relative to the configuration file.
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Credible level of reported intervals.
    pub level: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Json, OutputFormat::Csv],
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub intercept_sd: f64,
    pub penalize_intercept: bool,
}

impl Default for PriorSection {
    fn default() -> Self {
        let p = PriorSpec::default();
        Self {
            a_lambda: p.a_lambda,
            b_lambda: p.b_lambda,
            intercept_sd: p.intercept_sd,
            penalize_intercept: p.penalize_intercept,
        }
    }
}

impl From<&PriorSection> for PriorSpec {
    fn from(p: &PriorSection) -> Self {
        PriorSpec {
            a_lambda: p.a_lambda,
            b_lambda: p.b_lambda,
            intercept_sd: p.intercept_sd,
            penalize_intercept: p.penalize_intercept,
        }
    }
}

/// Configuration of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub sampler: SamplerConfig,
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Configuration of `mc-study`; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default = "desk_sampler")]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub mise: MiseConfig,
}

fn desk_sampler() -> SamplerConfig {
    SamplerConfig {
        n_iter: 5000,
        burn_in: 1000,
        n_chains: 1,
        ..Default::default()
    }
}

impl StudyConfig {
    pub fn desk() -> Self {
        Self {
            prior: PriorSection::default(),
            sampler: desk_sampler(),
            mise: MiseConfig::default(),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

impl RunConfig {
    /// Parse and validate; relative paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = parse(&read_text(path)?, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data.path.is_relative() {
            cfg.data.path = base.join(&cfg.data.path);
        }
        if cfg.output.directory.is_relative() {
            cfg.output.directory = base.join(&cfg.output.directory);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = parse(text, Path::new("<inline>"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        PriorSpec::from(&self.prior).validate()?;
        self.sampler.validate()?;
        // p is unknown until the data are read; 1 is enough to check links and carrier
        self.model.to_spec(1, false)?;
        if !(self.output.level > 0.0 && self.output.level < 1.0) {
            return Err(Error::Config(format!("output.level must lie in (0, 1), got {}", self.output.level)));
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must name at least one format".into()));
        }
        if self.data.standardize && !self.data.intercept {
            return Err(Error::Config("data.standardize requires data.intercept = true".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: StudyConfig = parse(&read_text(path)?, path)?;
        PriorSpec::from(&cfg.prior).validate()?;
        cfg.sampler.validate()?;
        cfg.mise.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml("[data]\npath = \"d.csv\"\n").unwrap();
        assert_eq!(cfg.sampler.n_iter, 20_000);
        assert_eq!(cfg.prior.a_lambda, 0.1);
        assert!(cfg.data.intercept);
        assert_eq!(cfg.data.response, "y");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = RunConfig::from_toml("[data]\npath = \"d.csv\"\nfoo = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(RunConfig::from_toml("[data]\npath = \"d.csv\"\n[sampler]\nn_iters = 5\n").is_err());
        assert!(RunConfig::from_toml("[data]\npath = \"d.csv\"\n[extra]\n").is_err());
    }

    #[test]
    fn mixture_needs_weight() {
        let text = "[data]\npath = \"d.csv\"\n[model]\ncarrier = \"mixture\"\n";
        assert!(RunConfig::from_toml(text).is_err());
        let ok = format!("{text}mixture_pi = 0.3\n");
        assert!(RunConfig::from_toml(&ok).is_ok());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::from_toml("[data]\npath = \"d.csv\"\nstandardize = true\n[model]\nversion = \"bulk-only\"\n").unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values() {
        assert!(RunConfig::from_toml("[data]\npath = \"d.csv\"\n[sampler]\nthin = 0\n").is_err());
        assert!(RunConfig::from_toml("[data]\npath = \"d.csv\"\n[model]\nlink_nu = \"identity\"\n").is_err());
        assert!(RunConfig::from_toml("[data]\npath = \"d.csv\"\nintercept = false\nstandardize = true\n").is_err());
    }
}
