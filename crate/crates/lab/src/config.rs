use std::path::{Path, PathBuf};
use std::sync::Arc;

use calderon_core::domain::{Domain, DomainShape};
use calderon_core::grid::Grid;
use calderon_core::phantom::{check_ellipticity, Bump, Phantom};
use calderon_core::recon::{dual_spacing, KSchedule, ReconOptions};
use calderon_core::stability::SweepOptions;
use calderon_core::{cgo::CgoOptions, ScalarField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub const CONFIG_SCHEMA: &str = "calderon-run/1";

/// Largest allowed deviation of `gamma` from one on the collar.
pub const COLLAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Ball of radius `radius * L` with a collar of `collar * L`.
    Ball { radius: f64, collar: f64 },
    Cube { half_width: f64, collar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub amplitude: f64,
    /// In units of `L`.
    pub width: f64,
    /// In units of `L`.
    pub center: [f64; 3],
}

impl BumpSpec {
    fn to_bump(self, l: f64) -> Bump {
        Bump { center: self.center.map(|c| c * l), width: self.width * l, amplitude: self.amplitude }
    }
}

/// Conductivity families; every profile is multiplied by the radial cut-off
/// that makes `gamma` equal to one on the collar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConductivitySpec {
    /// `gamma = (1 + a exp(-|x - x0|^2 / w^2))^2`.
    Bump { bump: BumpSpec },
    TwoBump { first: BumpSpec, second: BumpSpec },
    /// `gamma = (1 + a max(0, 1 - |x - x0| / w)^1.6)^2`.
    Cusp { bump: BumpSpec },
}

impl ConductivitySpec {
    pub fn standard_bump() -> Self {
        ConductivitySpec::Bump { bump: BumpSpec { amplitude: 0.3, width: 0.25, center: [0.0; 3] } }
    }

    pub fn phantom(&self, l: f64) -> Phantom {
        match self {
            ConductivitySpec::Bump { bump } => Phantom::Gaussian { bumps: vec![bump.to_bump(l)] },
            ConductivitySpec::TwoBump { first, second } => {
                Phantom::Gaussian { bumps: vec![first.to_bump(l), second.to_bump(l)] }
            }
            ConductivitySpec::Cusp { bump } => Phantom::Cusp { bump: bump.to_bump(l) },
        }
    }

    fn bumps(&self) -> Vec<&BumpSpec> {
        match self {
            ConductivitySpec::Bump { bump } | ConductivitySpec::Cusp { bump } => vec![bump],
            ConductivitySpec::TwoBump { first, second } => vec![first, second],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KScheduleSpec {
    pub slope: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub cgo: f64,
    pub cgo_max_iter: usize,
    /// Ellipticity bound `c` with `c <= gamma <= 1/c`.
    pub ellipticity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    pub noise_levels: Vec<f64>,
    /// Smoothness index `s` in the cutoff rule.
    pub smoothness: f64,
    /// Slope of the frequency schedule used at every noise level.
    pub k_slope: f64,
    /// Grid used by the sweep; `None` means the run grid.
    pub grid: Option<usize>,
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Nodes per axis.
    pub grid: usize,
    pub half_width: f64,
    pub domain: DomainSpec,
    pub conductivity: ConductivitySpec,
    /// Weight exponent of the weighted norms, in `(0, 1/2)`.
    pub delta: f64,
    pub k_min: f64,
    pub k_schedule: KScheduleSpec,
    /// Frequency cutoff; `None` means `4 pi / L`.
    pub rho: Option<f64>,
    pub tolerances: Tolerances,
    pub stability: StabilitySpec,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepOptions::default();
        let sched = KSchedule::default();
        let cgo = CgoOptions::default();
        Self {
            schema: CONFIG_SCHEMA.to_owned(),
            grid: 32,
            half_width: 1.0,
            domain: DomainSpec::Ball { radius: 0.7, collar: 0.2 },
            conductivity: ConductivitySpec::standard_bump(),
            delta: 0.25,
            k_min: sched.k_min,
            k_schedule: KScheduleSpec { slope: sched.slope, scale: sched.scale },
            rho: None,
            tolerances: Tolerances { cgo: cgo.tol, cgo_max_iter: cgo.max_iter, ellipticity: 0.1 },
            stability: StabilitySpec {
                noise_levels: calderon_core::stability::default_noise_levels(),
                smoothness: sweep.smoothness,
                k_slope: sweep.schedule.slope,
                grid: Some(24),
            },
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub rho: Option<f64>,
    pub k_min: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> LabResult<()> {
    if cond {
        Ok(())
    } else {
        Err(LabError::Config(msg()))
    }
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> LabResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::Config(format!("not valid JSON: {e}")))?;
        let value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        let config: RunConfig =
            serde_json::from_value(value).map_err(|e| LabError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(r) = o.rho {
            self.rho = Some(r);
        }
        if let Some(k) = o.k_min {
            self.k_min = k;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
    }

    /// Checks every range that can be checked without running a solver.
    pub fn validate(&self) -> LabResult<()> {
        check(self.schema == CONFIG_SCHEMA, || {
            format!("schema {:?} is not supported (expected {CONFIG_SCHEMA:?})", self.schema)
        })?;
        check(self.grid >= 16, || format!("grid {} must be at least 16", self.grid))?;
        check(self.grid <= 128, || format!("grid {} exceeds 128", self.grid))?;
        check(finite_pos(self.half_width), || format!("half_width {} must be positive", self.half_width))?;
        match self.domain {
            DomainSpec::Ball { radius, collar } => {
                check(radius > 0.0 && radius < 1.0, || format!("ball radius {radius} must lie in (0, 1)"))?;
                check(collar > 0.0 && collar < radius, || format!("collar {collar} must lie in (0, {radius})"))?;
            }
            DomainSpec::Cube { half_width, collar } => {
                check(half_width > 0.0 && half_width < 1.0, || format!("cube half width {half_width} must lie in (0, 1)"))?;
                check(collar > 0.0 && collar < half_width, || format!("collar {collar} must lie in (0, {half_width})"))?;
            }
        }
        for b in self.conductivity.bumps() {
            check(b.amplitude.is_finite() && b.amplitude.abs() < 1.0, || {
                format!("bump amplitude {} must lie in (-1, 1)", b.amplitude)
            })?;
            check(finite_pos(b.width), || format!("bump width {} must be positive", b.width))?;
            check(b.center.iter().all(|c| c.is_finite() && c.abs() < 1.0), || {
                format!("bump centre {:?} must lie inside the box", b.center)
            })?;
        }
        check(self.delta > 0.0 && self.delta < 0.5, || format!("delta {} must lie in (0, 1/2)", self.delta))?;
        check(finite_pos(self.k_min), || format!("k_min {} must be positive", self.k_min))?;
        check(self.k_schedule.slope * std::f64::consts::SQRT_2 > 1.0 && self.k_schedule.slope.is_finite(), || {
            format!("k slope {} must exceed 1/sqrt(2)", self.k_schedule.slope)
        })?;
        check(finite_pos(self.k_schedule.scale), || format!("k scale {} must be positive", self.k_schedule.scale))?;
        if let Some(rho) = self.rho {
            let first = 2.0 * std::f64::consts::PI / self.half_width;
            check(rho.is_finite() && rho >= first, || {
                format!("rho {rho} must be at least the first lattice shell {first}")
            })?;
        }
        let t = &self.tolerances;
        check(finite_pos(t.cgo) && t.cgo < 1.0, || format!("cgo tolerance {} must lie in (0, 1)", t.cgo))?;
        check(t.cgo_max_iter > 0, || "cgo_max_iter must be positive".to_owned())?;
        check(t.ellipticity > 0.0 && t.ellipticity <= 1.0, || {
            format!("ellipticity bound {} must lie in (0, 1]", t.ellipticity)
        })?;
        let s = &self.stability;
        check(!s.noise_levels.is_empty(), || "at least one noise level is required".to_owned())?;
        check(s.noise_levels.iter().all(|e| *e > 0.0 && *e < 1.0), || "noise levels must lie in (0, 1)".to_owned())?;
        check(s.noise_levels.windows(2).all(|w| w[0] < w[1]), || {
            "noise levels must be strictly increasing".to_owned()
        })?;
        check((0.0..0.5).contains(&s.smoothness), || format!("smoothness {} must lie in [0, 1/2)", s.smoothness))?;
        check(s.k_slope * std::f64::consts::SQRT_2 > 1.0 && s.k_slope.is_finite(), || {
            format!("stability k slope {} must exceed 1/sqrt(2)", s.k_slope)
        })?;
        if let Some(g) = s.grid {
            check((16..=128).contains(&g), || format!("stability grid {g} must lie in [16, 128]"))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serialises").as_bytes())
    }

    /// Hash of the fields that determine the Dirichlet-to-Neumann maps.
    pub fn forward_hash(&self) -> String {
        let key = serde_json::json!({
            "grid": self.grid,
            "half_width": self.half_width,
            "domain": self.domain,
            "conductivity": self.conductivity,
        });
        hex_digest(key.to_string().as_bytes())
    }

    pub fn grid_for(&self, n: usize) -> LabResult<Grid> {
        Grid::new(n, self.half_width).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn domain_on(&self, n: usize) -> LabResult<Arc<Domain>> {
        let grid = self.grid_for(n)?;
        let l = self.half_width;
        let (shape, collar) = match self.domain {
            DomainSpec::Ball { radius, collar } => (DomainShape::Ball { radius: radius * l }, collar * l),
            DomainSpec::Cube { half_width, collar } => (DomainShape::Cube { half_width: half_width * l }, collar * l),
        };
        Domain::new(grid, shape, collar).map(Arc::new).map_err(|e| LabError::Config(e.to_string()))
    }

    /// `gamma` on the domain grid, checked for ellipticity and the collar.
    pub fn gamma_on(&self, domain: &Domain) -> LabResult<ScalarField> {
        let gamma = self.conductivity.phantom(self.half_width).gamma(*domain.grid());
        check_ellipticity(&gamma, self.tolerances.ellipticity).map_err(|e| LabError::Config(e.to_string()))?;
        domain
            .check_collar(&gamma, 1.0, COLLAR_TOLERANCE)
            .map_err(|e| LabError::Config(e.to_string()))?;
        Ok(gamma)
    }

    pub fn schedule(&self) -> KSchedule {
        KSchedule { k_min: self.k_min, slope: self.k_schedule.slope, scale: self.k_schedule.scale }
    }

    pub fn recon_options(&self) -> ReconOptions {
        ReconOptions { rho: self.rho, schedule: self.schedule(), ellipticity: self.tolerances.ellipticity }
    }

    pub fn rho_value(&self, grid: &Grid) -> f64 {
        self.recon_options().rho_for(grid.half_width()).max(dual_spacing(grid))
    }

    pub fn cgo_options(&self) -> CgoOptions {
        CgoOptions { tol: self.tolerances.cgo, max_iter: self.tolerances.cgo_max_iter }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            smoothness: self.stability.smoothness,
            rho_calibration: self.rho,
            schedule: KSchedule { k_min: self.k_min, slope: self.stability.k_slope, scale: 1.0 },
            ellipticity: self.tolerances.ellipticity,
        }
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
