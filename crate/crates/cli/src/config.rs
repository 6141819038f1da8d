//! Run configuration: a TOML file with nested sections, all optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vacpol_core::flow::electron_charge;
use vacpol_core::radial::RadialGrid;
use vacpol_core::ChargeDensity;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NucleusKind {
    Gaussian,
    UniformBall,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Electron charge parameter `e`.
    pub charge: f64,
    pub nucleus: NucleusConfig,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub quadrature: QuadratureConfig,
    pub output: OutputConfig,
    pub density: DensityConfig,
    pub uehling: UehlingConfig,
    pub index_demo: IndexDemoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NucleusConfig {
    pub kind: NucleusKind,
    /// Gaussian width.
    pub s: f64,
    /// Ball radius.
    pub radius: f64,
    /// Two-column `r n(r)` file, relative to the config file.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub r_max: f64,
    pub edge_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambda_max: f64,
    pub steps: usize,
    pub channels: Vec<i32>,
    /// Bracket width for diving couplings.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Operator-norm accuracy of η-integral projectors.
    pub eta_tol: f64,
    /// Entrywise accuracy of the resolvent expansion.
    pub expansion_tol: f64,
    /// Bisection depth limit of the adaptive η-quadrature.
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub r_points: usize,
    pub k_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UehlingConfig {
    pub lambda: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    pub include_zero: bool,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexDemoConfig {
    pub models: usize,
    pub size: usize,
    pub half_gap: f64,
    pub lambda_max: f64,
    pub lambda_steps: usize,
    pub lattice_sites: usize,
    pub lattice_spacing: f64,
    pub softening: f64,
    pub cutoff_lambda: f64,
    pub cutoff_eps_start: f64,
    pub cutoff_halvings: usize,
    pub trapped_sites: usize,
    pub trapped_spacing: f64,
    pub trapped_softening: f64,
    pub trapped_lambda_max: f64,
    pub furry_triples: usize,
    pub continuity_pairs: usize,
    pub kernel_instances: usize,
    pub kernel_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20_240_601,
            charge: electron_charge(),
            nucleus: NucleusConfig::default(),
            grid: GridConfig::default(),
            sweep: SweepConfig::default(),
            quadrature: QuadratureConfig::default(),
            output: OutputConfig::default(),
            density: DensityConfig::default(),
            uehling: UehlingConfig::default(),
            index_demo: IndexDemoConfig::default(),
        }
    }
}

impl Default for NucleusConfig {
    fn default() -> Self {
        NucleusConfig {
            kind: NucleusKind::Gaussian,
            s: 0.02,
            radius: 0.02,
            table: None,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = RadialGrid::default();
        GridConfig {
            n: g.n,
            r_max: g.r_max,
            edge_margin: 1e-3,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambda_max: 2.0,
            steps: 41,
            channels: vec![-1, 1],
            tol: 1e-4,
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            eta_tol: 1e-9,
            expansion_tol: 1e-10,
            max_depth: 40,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            r_points: 200,
            k_points: 200,
        }
    }
}

impl Default for UehlingConfig {
    fn default() -> Self {
        UehlingConfig {
            lambda: 1.0,
            k_min: 1e-3,
            k_max: 1e3,
            k_points: 100,
            include_zero: true,
            r_min: 1e-3,
            r_max: 25.0,
            r_points: 80,
        }
    }
}

impl Default for IndexDemoConfig {
    fn default() -> Self {
        IndexDemoConfig {
            models: 20,
            size: 16,
            half_gap: 0.3,
            lambda_max: 4.0,
            lambda_steps: 17,
            lattice_sites: 121,
            lattice_spacing: 0.5,
            softening: 0.5,
            cutoff_lambda: 1.0,
            cutoff_eps_start: 2.0,
            cutoff_halvings: 6,
            trapped_sites: 31,
            trapped_spacing: 0.3,
            trapped_softening: 0.3,
            trapped_lambda_max: 6.0,
            furry_triples: 100,
            continuity_pairs: 50,
            kernel_instances: 100,
            kernel_size: 64,
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Config(msg.to_string()))
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RunConfig {
    /// Parse a config file; relative table paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(t) = &cfg.nucleus.table {
            if t.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.nucleus.table = Some(base.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        check(self.charge.is_finite() && self.charge != 0.0, "charge must be finite and nonzero")?;
        let n = &self.nucleus;
        match n.kind {
            NucleusKind::Gaussian => check(positive(n.s) && n.s <= 10.0, "nucleus.s must lie in (0, 10]")?,
            NucleusKind::UniformBall => check(positive(n.radius) && n.radius <= 10.0, "nucleus.radius must lie in (0, 10]")?,
            NucleusKind::Tabulated => check(n.table.is_some(), "nucleus.table is required for a tabulated nucleus")?,
        }
        let g = &self.grid;
        check(g.n >= 100 && g.n <= 200_000, "grid.n must lie in [100, 200000]")?;
        check(positive(g.r_max) && g.r_max <= 1e4, "grid.r_max must lie in (0, 1e4]")?;
        check(g.edge_margin > 0.0 && g.edge_margin < 0.5, "grid.edge_margin must lie in (0, 0.5)")?;
        let s = &self.sweep;
        check(positive(s.lambda_max) && s.lambda_max <= 100.0, "sweep.lambda_max must lie in (0, 100]")?;
        check(s.steps >= 2 && s.steps <= 100_000, "sweep.steps must lie in [2, 100000]")?;
        check(!s.channels.is_empty(), "sweep.channels must not be empty")?;
        check(s.channels.iter().all(|&k| k != 0 && k.abs() <= 50), "sweep.channels entries must be nonzero with |κ| ≤ 50")?;
        let mut sorted = s.channels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        check(sorted.len() == s.channels.len(), "sweep.channels must not repeat")?;
        check(positive(s.tol) && s.tol <= 0.1, "sweep.tol must lie in (0, 0.1]")?;
        let q = &self.quadrature;
        check(positive(q.eta_tol) && q.eta_tol < 1e-2, "quadrature.eta_tol must lie in (0, 1e-2)")?;
        check(positive(q.expansion_tol) && q.expansion_tol < 1e-2, "quadrature.expansion_tol must lie in (0, 1e-2)")?;
        check(q.max_depth >= 8 && q.max_depth <= 60, "quadrature.max_depth must lie in [8, 60]")?;
        let d = &self.density;
        check(d.r_points >= 2 && d.k_points >= 2, "density grids need at least 2 points")?;
        let u = &self.uehling;
        check(u.lambda.is_finite(), "uehling.lambda must be finite")?;
        check(positive(u.k_min) && u.k_max > u.k_min && u.k_points >= 2, "uehling k grid must satisfy 0 < k_min < k_max, k_points ≥ 2")?;
        check(positive(u.r_min) && u.r_max > u.r_min && u.r_points >= 2, "uehling r grid must satisfy 0 < r_min < r_max, r_points ≥ 2")?;
        let i = &self.index_demo;
        check(i.models >= 1 && i.size >= 2 && i.size <= 400, "index_demo needs models ≥ 1 and size in [2, 400]")?;
        check(positive(i.half_gap) && i.half_gap < 4.0, "index_demo.half_gap must lie in (0, 4)")?;
        check(positive(i.lambda_max) && i.lambda_steps >= 2, "index_demo λ grid must be positive with ≥ 2 steps")?;
        check(i.lattice_sites % 2 == 1 && i.lattice_sites >= 9 && i.lattice_sites <= 401, "index_demo.lattice_sites must be odd in [9, 401]")?;
        check(positive(i.lattice_spacing) && positive(i.softening) && positive(i.cutoff_lambda), "lattice parameters must be positive")?;
        check(positive(i.cutoff_eps_start) && i.cutoff_halvings >= 2 && i.cutoff_halvings <= 30, "cutoff family needs ε₀ > 0 and 2 to 30 halvings")?;
        check(i.trapped_sites % 2 == 1 && i.trapped_sites >= 9 && i.trapped_sites <= 201, "index_demo.trapped_sites must be odd in [9, 201]")?;
        check(positive(i.trapped_spacing) && positive(i.trapped_softening) && positive(i.trapped_lambda_max), "trapped lattice parameters must be positive")?;
        check(i.furry_triples >= 1 && i.continuity_pairs >= 1 && i.kernel_instances >= 1 && i.kernel_size >= 2, "index_demo batteries must be nonempty")?;
        Ok(())
    }

    pub fn nucleus_density(&self) -> Result<ChargeDensity, Failure> {
        let n = &self.nucleus;
        let d = match n.kind {
            NucleusKind::Gaussian => ChargeDensity::gaussian(n.s),
            NucleusKind::UniformBall => ChargeDensity::uniform_ball(n.radius),
            NucleusKind::Tabulated => {
                let path = n.table.as_ref().ok_or_else(|| Failure::Config("nucleus.table missing".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                ChargeDensity::from_table_text(&text)
            }
        };
        d.map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn radial_grid(&self) -> Result<RadialGrid, Failure> {
        RadialGrid::new(self.grid.n, self.grid.r_max).map_err(|e| Failure::Config(e.to_string()))
    }
}
