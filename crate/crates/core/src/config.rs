//! Run configuration: one JSON document describing geometry, media, the
//! target resonance, solver settings and outputs.
//!
//! Lengths may be written either as SI numbers or as strings with a unit
//! suffix (`"4um"`, `"637 nm"`); they are normalized to metres on load.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fundamental::SolverSettings;
use crate::geometry::{CrossSection, Media};
use crate::materials::Medium;
use crate::mode::Polarization;
use crate::qed::DipoleParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// One length or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(v) => vec![*v],
            Sweep::Many(v) => v.clone(),
        }
    }
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep::One(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CoatedToroid,
    CoatedSphere,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub variant: Variant,
    /// Major radius of the toroid, radius of the sphere or cylinder.
    #[serde(rename = "R")]
    pub radius: Sweep,
    /// Minor radius of the toroid; 1 µm when absent.
    #[serde(rename = "R_minor", default, skip_serializing_if = "Option::is_none")]
    pub minor_radius: Option<f64>,
    /// Coating thickness.
    #[serde(rename = "t", default)]
    pub coating: Sweep,
}

pub const DEFAULT_MINOR_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub name: String,
    pub n: f64,
    #[serde(default)]
    pub bulk_loss_db_per_cm: f64,
}

impl MediumSpec {
    fn build(&self) -> Result<Medium<f64>, ConfigError> {
        Medium::new(self.name.clone(), self.n, self.bulk_loss_db_per_cm).map_err(|e| invalid("materials", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsBlock {
    pub core: MediumSpec,
    pub coating: MediumSpec,
    pub exterior: MediumSpec,
    /// Relative permittivity of the emitter's host crystal.
    pub eps_nv: f64,
    /// Permittivity around the emitter; mean of core and coating when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_permittivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterBlock {
    pub dipole_moment: f64,
    pub gamma_vac_over_2pi: f64,
    pub transition_wavelength: f64,
}

impl Default for EmitterBlock {
    fn default() -> Self {
        let d = DipoleParams::nv_center(1.0);
        Self {
            dipole_moment: d.dipole_moment,
            gamma_vac_over_2pi: d.gamma_vac_over_2pi,
            transition_wavelength: d.transition_wavelength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetBlock {
    pub wavelength: f64,
    pub polarizations: Vec<Polarization>,
}

impl Default for TargetBlock {
    fn default() -> Self {
        Self { wavelength: 637e-9, polarizations: Polarization::BOTH.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub resolution: crate::grid::ResolutionSpec,
    pub pml: crate::pml::PmlSpec,
    pub eigen: crate::arnoldi::EigenOptions,
    pub layout: crate::grid::ZLayout,
    pub divergence_tolerance: f64,
    pub min_quality: f64,
    pub max_orders: usize,
    /// Uniform refinement multiplier applied on top of `resolution`.
    pub resolution_scale: f64,
    pub workers: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            resolution: s.resolution,
            pml: s.pml,
            eigen: s.eigen,
            layout: s.layout,
            divergence_tolerance: s.divergence_tolerance,
            min_quality: s.min_quality,
            max_orders: s.max_orders,
            resolution_scale: 1.0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Also write field maps from `solve`.
    pub field_map: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: PathBuf::from("wgm-out"), formats: vec![Format::Csv, Format::Json], field_map: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationBlock {
    pub wavelength_tolerance: f64,
    pub log_q_tolerance: f64,
    /// Q comparisons are skipped above this radiation Q.
    pub max_compared_quality: f64,
}

impl Default for ValidationBlock {
    fn default() -> Self {
        Self { wavelength_tolerance: 1e-3, log_q_tolerance: 0.5, max_compared_quality: 1e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    pub materials: MaterialsBlock,
    #[serde(default)]
    pub emitter: EmitterBlock,
    #[serde(default)]
    pub target: TargetBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub validation: ValidationBlock,
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub radius: f64,
    pub coating: f64,
    pub polarization: Polarization,
}

/// `"637nm"` → `6.37e-7`. `None` for anything that is not a length.
pub fn parse_length(s: &str) -> Option<f64> {
    const UNITS: [(&str, i32); 6] = [("nm", -9), ("um", -6), ("µm", -6), ("μm", -6), ("mm", -3), ("m", 0)];
    let s = s.trim();
    UNITS.iter().find_map(|(suffix, exp)| {
        let number = s.strip_suffix(suffix)?.trim_end();
        // Re-parse with the exponent attached so "3.2um" is the double nearest 3.2e-6.
        let v = if number.contains(['e', 'E']) {
            number.parse::<f64>().ok()? / 10f64.powi(-*exp)
        } else {
            format!("{number}e{exp}").parse::<f64>().ok()?
        };
        v.is_finite().then_some(v)
    })
}

fn normalize_lengths(v: &mut Value) {
    match v {
        Value::String(s) => {
            if let Some(x) = parse_length(s) {
                if let Some(n) = serde_json::Number::from_f64(x) {
                    *v = Value::Number(n);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_lengths),
        Value::Object(map) => {
            for (key, item) in map.iter_mut() {
                if key != "name" && key != "directory" {
                    normalize_lengths(item);
                }
            }
        }
        _ => {}
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        normalize_lengths(&mut value);
        let config: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        let radii = g.radius.values();
        let coatings = g.coating.values();
        if radii.is_empty() {
            return Err(invalid("geometry.R", "sweep list is empty"));
        }
        if coatings.is_empty() {
            return Err(invalid("geometry.t", "sweep list is empty"));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(invalid("geometry.R", format!("radius must be positive, got {r}")));
        }
        if let Some(t) = coatings.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(invalid("geometry.t", format!("thickness must be non-negative, got {t}")));
        }
        match g.variant {
            Variant::CoatedToroid => {
                let rm = self.minor_radius();
                if !(rm > 0.0) {
                    return Err(invalid("geometry.R_minor", format!("must be positive, got {rm}")));
                }
            }
            Variant::CoatedSphere | Variant::Cylinder => {
                if g.minor_radius.is_some() {
                    return Err(invalid("geometry.R_minor", "only a toroid has a minor radius"));
                }
            }
        }
        if g.variant == Variant::Cylinder && coatings.iter().any(|&t| t != 0.0) {
            return Err(invalid("geometry.t", "a cylinder cannot be coated"));
        }
        let m = &self.materials;
        m.core.build()?;
        m.coating.build()?;
        m.exterior.build()?;
        if !(m.eps_nv > 0.0 && m.eps_nv.is_finite()) {
            return Err(invalid("materials.eps_nv", format!("must be positive, got {}", m.eps_nv)));
        }
        if let Some(h) = m.host_permittivity {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("materials.host_permittivity", format!("must be positive, got {h}")));
            }
        }
        self.dipole().validate().map_err(|e| invalid("emitter", e))?;
        if !(self.target.wavelength > 0.0 && self.target.wavelength.is_finite()) {
            return Err(invalid("target.wavelength", format!("must be positive, got {}", self.target.wavelength)));
        }
        if self.target.polarizations.is_empty() {
            return Err(invalid("target.polarizations", "list is empty"));
        }
        let s = &self.solver;
        if s.workers == 0 {
            return Err(invalid("solver.workers", "must be at least 1"));
        }
        if !(s.resolution_scale > 0.0 && s.resolution_scale.is_finite()) {
            return Err(invalid("solver.resolution_scale", format!("must be positive, got {}", s.resolution_scale)));
        }
        let settings = self.settings();
        settings.resolution.validate().map_err(|e| invalid("solver.resolution", e.to_string()))?;
        settings.pml.validate().map_err(|e| invalid("solver.pml", e.to_string()))?;
        if s.eigen.count == 0 || !(s.eigen.tolerance > 0.0) {
            return Err(invalid("solver.eigen", "count and tolerance must be positive"));
        }
        let v = &self.validation;
        if !(v.wavelength_tolerance >= 0.0 && v.log_q_tolerance >= 0.0) {
            return Err(invalid("validation", "tolerances must be non-negative"));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "list is empty"));
        }
        Ok(())
    }

    pub fn minor_radius(&self) -> f64 {
        self.geometry.minor_radius.unwrap_or(DEFAULT_MINOR_RADIUS)
    }

    pub fn media(&self) -> Media<f64> {
        let m = &self.materials;
        Media {
            core: m.core.build().expect("validated"),
            coating: m.coating.build().expect("validated"),
            exterior: m.exterior.build().expect("validated"),
        }
    }

    pub fn cross_section(&self, radius: f64, coating: f64) -> Result<CrossSection<f64>, ConfigError> {
        let media = self.media();
        let cs = match self.geometry.variant {
            Variant::CoatedToroid => CrossSection::coated_toroid(radius, self.minor_radius(), coating, media),
            Variant::CoatedSphere => CrossSection::coated_sphere(radius, coating, media),
            Variant::Cylinder => CrossSection::cylinder(radius, media.core, media.exterior),
        };
        cs.map_err(|e| invalid("geometry", e.to_string()))
    }

    pub fn dipole(&self) -> DipoleParams {
        let e = &self.emitter;
        DipoleParams {
            dipole_moment: e.dipole_moment,
            gamma_vac_over_2pi: e.gamma_vac_over_2pi,
            transition_wavelength: e.transition_wavelength,
            eps_nv: self.materials.eps_nv,
        }
    }

    /// Solver settings with the refinement applied and the start vector
    /// seeded from the config hash.
    pub fn settings(&self) -> SolverSettings {
        let s = &self.solver;
        let mut eigen = s.eigen.clone();
        eigen.seed = self.seed();
        SolverSettings {
            resolution: s.resolution.clone(),
            pml: s.pml,
            eigen,
            layout: s.layout,
            divergence_tolerance: s.divergence_tolerance,
            min_quality: s.min_quality,
            max_orders: s.max_orders,
        }
        .refined(s.resolution_scale)
    }

    /// All sweep points, sorted by radius, thickness, then polarization.
    pub fn points(&self) -> Vec<Point> {
        let mut radii = self.geometry.radius.values();
        let mut coatings = self.geometry.coating.values();
        let mut pols = self.target.polarizations.clone();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        coatings.sort_by(f64::total_cmp);
        coatings.dedup();
        pols.sort();
        pols.dedup();
        let mut out = Vec::with_capacity(radii.len() * coatings.len() * pols.len());
        for &radius in &radii {
            for &coating in &coatings {
                for &polarization in &pols {
                    out.push(Point { radius, coating, polarization });
                }
            }
        }
        out
    }

    pub fn is_scalar(&self) -> bool {
        self.geometry.radius.values().len() == 1 && self.geometry.coating.values().len() == 1
    }

    /// SHA-256 (hex) of everything that determines the numbers: output
    /// location and worker count are left out.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            geometry: &'a GeometryBlock,
            minor_radius: f64,
            materials: &'a MaterialsBlock,
            emitter: &'a EmitterBlock,
            target: &'a TargetBlock,
            resolution: &'a crate::grid::ResolutionSpec,
            pml: &'a crate::pml::PmlSpec,
            eigen: &'a crate::arnoldi::EigenOptions,
            layout: crate::grid::ZLayout,
            divergence_tolerance: f64,
            min_quality: f64,
            max_orders: usize,
            resolution_scale: f64,
        }
        let s = &self.solver;
        let h = Hashed {
            geometry: &self.geometry,
            minor_radius: self.minor_radius(),
            materials: &self.materials,
            emitter: &self.emitter,
            target: &self.target,
            resolution: &s.resolution,
            pml: &s.pml,
            eigen: &s.eigen,
            layout: s.layout,
            divergence_tolerance: s.divergence_tolerance,
            min_quality: s.min_quality,
            max_orders: s.max_orders,
            resolution_scale: s.resolution_scale,
        };
        let text = serde_json::to_string(&h).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    pub fn seed(&self) -> u64 {
        u64::from_str_radix(&self.hash()[..16], 16).expect("hex digest")
    }
}
