use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use orbita::{PotentialSpec, RadialPotential};
use serde::Deserialize;

/// A run description read from TOML or JSON. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialSpec>,
    pub command: Option<String>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub seed: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: Option<[f64; 2]>,
    pub l: Option<[f64; 2]>,
    pub h_count: Option<usize>,
    pub l_count: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub newton: Option<f64>,
    pub closure: Option<f64>,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("newton", self.newton),
            ("closure", self.closure),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("tolerance {name} must be positive, got {v}");
                }
            }
        }
        Ok(())
    }
}

pub fn read_structured<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn load_run_config(path: Option<&Path>, command: &str) -> Result<RunConfig> {
    let cfg: RunConfig = match path {
        Some(p) => read_structured(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != command {
            bail!("configuration is for `{c}`, not `{command}`");
        }
    }
    cfg.tolerances.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Homogeneous,
    Logarithmic,
    LeviCivita,
    LennardJones,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PotentialArgs {
    /// TOML or JSON file holding a potential description (top level or under `[potential]`)
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Homogeneity exponent; on its own selects `V = κ/(α r^α)`
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub varsigma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PotentialFile {
    Wrapped { potential: PotentialSpec },
    Bare(PotentialSpec),
}

impl PotentialArgs {
    pub fn spec(&self, fallback: Option<&PotentialSpec>) -> Result<PotentialSpec> {
        if let Some(path) = &self.potential {
            let file: PotentialFile = read_structured(path)?;
            return Ok(match file {
                PotentialFile::Wrapped { potential } | PotentialFile::Bare(potential) => potential,
            });
        }
        let kappa = self.kappa.unwrap_or(1.0);
        let need = |v: Option<f64>, name: &str| v.with_context(|| format!("--{name} is required for this family"));
        let family = match (self.family, self.alpha) {
            (Some(f), _) => f,
            (None, Some(_)) => Family::Homogeneous,
            (None, None) => {
                return fallback
                    .cloned()
                    .context("no potential given: use --potential FILE, --family or --alpha");
            }
        };
        Ok(match family {
            Family::Homogeneous => PotentialSpec::Homogeneous {
                kappa,
                alpha: need(self.alpha, "alpha")?,
            },
            Family::Logarithmic => PotentialSpec::Logarithmic { kappa },
            Family::LeviCivita => PotentialSpec::LeviCivita {
                kappa,
                lambda: need(self.lambda, "lambda")?,
            },
            Family::LennardJones => PotentialSpec::LennardJones {
                varsigma: need(self.varsigma, "varsigma")?,
                sigma: need(self.sigma, "sigma")?,
            },
        })
    }

    pub fn build(&self, fallback: Option<&PotentialSpec>) -> Result<RadialPotential> {
        Ok(RadialPotential::from_spec(&self.spec(fallback)?)?)
    }
}

/// `count` points spanning `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

pub fn check_range(name: &str, r: [f64; 2], count: usize) -> Result<()> {
    if count == 0 {
        bail!("{name} count must be at least 1");
    }
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] || (r[0] == r[1] && count > 1) {
        bail!("{name} range [{}, {}] must be finite and increasing", r[0], r[1]);
    }
    Ok(())
}
