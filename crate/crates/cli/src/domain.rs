use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use quermass::geometry::{DomainSpec, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ball,
    Ellipsoid,
    PerturbedSphere,
    RadialGraph,
}

/// Domain given either as a JSON file or inline.
#[derive(Debug, Clone, Args)]
pub struct DomainArgs {
    /// Domain description file (JSON with family, dim, params).
    #[arg(long, conflicts_with_all = ["family", "params"])]
    pub domain: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ellipsoid semi-axes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<f64>>,
    /// Perturbation size of the perturbed sphere.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Amplitude of the zonal harmonic of the perturbed sphere.
    #[arg(long, default_value_t = 0.3)]
    pub amplitude: f64,
    /// Family parameters as inline JSON, in the same form as the domain file.
    #[arg(long)]
    pub params: Option<String>,
}

impl DomainArgs {
    pub fn resolve(&self) -> Result<DomainSpec> {
        if let Some(path) = &self.domain {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text).with_context(|| format!("parsing domain file {}", path.display()));
        }
        let Some(family) = self.family else {
            bail!("give either --domain <path> or --family");
        };
        if let Some(params) = &self.params {
            let name = match family {
                FamilyArg::Ball => "ball",
                FamilyArg::Ellipsoid => "ellipsoid",
                FamilyArg::RadialGraph => "radial_graph",
                FamilyArg::PerturbedSphere => {
                    bail!("--params is not accepted for perturbed-sphere; use --eps and --amplitude")
                }
            };
            let params: serde_json::Value = serde_json::from_str(params).context("parsing --params")?;
            let dim = self.dim.context("--dim is required with --params")?;
            let doc = serde_json::json!({ "family": name, "dim": dim, "params": params });
            return serde_json::from_value(doc).context("invalid domain parameters");
        }
        let spec = match family {
            FamilyArg::Ball => {
                let dim = self.dim.context("--dim is required for a ball")?;
                DomainSpec::ball(dim, self.radius.unwrap_or(1.0))?
            }
            FamilyArg::Ellipsoid => {
                let axes = self.axes.as_ref().context("--axes is required for an ellipsoid")?;
                if let Some(dim) = self.dim {
                    if dim != axes.len() {
                        bail!("ellipsoid in dimension {dim} needs {dim} semi-axes, got {}", axes.len());
                    }
                }
                DomainSpec::ellipsoid(axes)?
            }
            FamilyArg::PerturbedSphere => {
                let dim = self.dim.context("--dim is required for a perturbed sphere")?;
                perturbed_sphere(dim, self.eps.unwrap_or(0.0), self.amplitude)?
            }
            FamilyArg::RadialGraph => bail!("radial graphs need --params or --domain"),
        };
        Ok(spec)
    }
}

/// The perturbed sphere `ρ = 1 + c·u_n` with `c = ε·amplitude`. Its profile is
/// a limaçon, which is convex exactly when `|c| ≤ 1/2`; that bound is attached
/// as the convexity certificate.
pub fn perturbed_sphere(dim: usize, eps: f64, amplitude: f64) -> Result<DomainSpec> {
    let certified = (eps * amplitude).abs() <= 0.5;
    Ok(DomainSpec::perturbed_sphere(dim, eps, amplitude)?.with_convexity_certificate(Some(certified)))
}

/// Brenier map of the closed-form families, used as the oracle for solver output.
pub fn reference_map(spec: &DomainSpec) -> Option<[f64; 2]> {
    match spec.family() {
        Family::Ball { radius } => Some([1.0 / radius, 1.0 / radius]),
        Family::Ellipsoid { axes } if axes.len() == 2 => Some([1.0 / axes[0], 1.0 / axes[1]]),
        _ => None,
    }
}
