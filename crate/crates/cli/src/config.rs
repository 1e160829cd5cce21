//! Run configuration: TOML (or JSON) with every table closed to unknown
//! keys, validated into core objects before any computation starts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stkg_core::completeness::probes::DEFAULT_EPSILONS;
use stkg_core::expr::Expression;
use stkg_core::kerr::{KerrParams, KerrSpacetime};
use stkg_core::{ChartBox, SampleGrid, ScalarField, StationaryMetric, SymMetricField, VectorField};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub spacetime: SpacetimeSpec,
    pub chart: ChartSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default)]
    pub check: CheckOptions,
    #[serde(default)]
    pub assemble: AssembleOptions,
    #[serde(default)]
    pub kerr_mode: KerrModeOptions,
    #[serde(default)]
    pub complete: CompleteOptions,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub certify: CertifyOptions,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpacetimeSpec {
    Minkowski,
    Schwarzschild {
        mass: f64,
    },
    Kerr {
        mass: f64,
        spin: f64,
    },
    Static {
        #[serde(default = "default_variables")]
        variables: [String; 3],
        #[serde(default)]
        parameters: BTreeMap<String, f64>,
        lapse: String,
        /// `g_xx, g_xy, g_xz, g_yy, g_yz, g_zz`.
        metric: [String; 6],
    },
    Stationary {
        #[serde(default = "default_variables")]
        variables: [String; 3],
        #[serde(default)]
        parameters: BTreeMap<String, f64>,
        lapse: String,
        shift: [String; 3],
        metric: [String; 6],
    },
}

fn default_variables() -> [String; 3] {
    ["x", "y", "z"].map(String::from)
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Spectral cells per axis; 1 marks an axis without derivatives.
    #[serde(default = "default_cells")]
    pub cells: [usize; 3],
    /// Nodes per axis for pointwise hypothesis sampling.
    #[serde(default = "default_sample")]
    pub sample: [usize; 3],
}

fn default_cells() -> [usize; 3] {
    [16; 3]
}

fn default_sample() -> [usize; 3] {
    [9; 3]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { cells: default_cells(), sample: default_sample() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    /// Mass term `m^2`, an expression in the chart variables.
    #[serde(default = "default_m2")]
    pub m2: String,
    /// Azimuthal mode number for Kerr sectors.
    #[serde(default = "default_k")]
    pub k: i32,
}

fn default_m2() -> String {
    "0".into()
}

fn default_k() -> i32 {
    1
}

impl Default for OperatorSpec {
    fn default() -> Self {
        Self { m2: default_m2(), k: default_k() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CheckOptions {
    #[serde(default = "default_check_points")]
    pub points: usize,
}

fn default_check_points() -> usize {
    10_000
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { points: default_check_points() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleOptions {
    #[serde(default = "default_pairs")]
    pub points: usize,
}

fn default_pairs() -> usize {
    100
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { points: default_pairs() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KerrModeOptions {
    #[serde(default = "default_pairs")]
    pub points: usize,
}

impl Default for KerrModeOptions {
    fn default() -> Self {
        Self { points: default_pairs() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteOptions {
    /// Horizon offsets for the radial length fit.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Horizon offsets for geodesic inward shots.
    #[serde(default = "default_inward")]
    pub inward_epsilons: Vec<f64>,
    /// Affine span for speed-conservation shots.
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_shots")]
    pub shots: usize,
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn default_inward() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn default_span() -> f64 {
    100.0
}

fn default_shots() -> usize {
    4
}

impl Default for CompleteOptions {
    fn default() -> Self {
        Self { epsilons: default_epsilons(), inward_epsilons: default_inward(), span: default_span(), shots: default_shots() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOptions {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_symmetry_pairs")]
    pub symmetry_pairs: usize,
    /// Re-solve with `V + 1` and check the spectrum moves by exactly 1.
    #[serde(default)]
    pub shift_check: bool,
    /// Write the matrix (Matrix Market coordinate) and node weights.
    #[serde(default)]
    pub export_matrix: bool,
}

fn default_count() -> usize {
    3
}

fn default_symmetry_pairs() -> usize {
    20
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { count: default_count(), symmetry_pairs: default_symmetry_pairs(), shift_check: false, export_matrix: false }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyOptions {
    /// Cell counts per refinement level; defaults depend on the route.
    #[serde(default)]
    pub ladder: Option<Vec<[usize; 3]>>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::parse(&text, json)
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, CliError> {
        let cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        };
        Ok(cfg)
    }
}

/// A validated configuration turned into core objects.
#[derive(Clone, Debug)]
pub struct Model {
    pub metric: StationaryMetric,
    pub kerr: Option<KerrSpacetime>,
    pub chart: ChartBox,
    pub sample: SampleGrid,
    pub m2: ScalarField,
    pub variables: [String; 3],
}

impl Model {
    pub fn kerr(&self) -> Result<&KerrSpacetime, CliError> {
        self.kerr.as_ref().ok_or_else(|| CliError::Config("this command needs a kerr or schwarzschild spacetime".into()))
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

struct Symbols<'a> {
    variables: [&'a str; 3],
    names: Vec<&'a str>,
    values: &'a BTreeMap<String, f64>,
}

impl Symbols<'_> {
    fn field(&self, what: &str, src: &str) -> Result<ScalarField, CliError> {
        let e = Expression::parse(src, &self.variables, &self.names).map_err(|e| CliError::Config(format!("{what}: {e}")))?;
        let bound = e.bind(self.values).map_err(|e| CliError::Config(format!("{what}: {e}")))?;
        Ok(ScalarField::from_expression(bound))
    }
}

pub fn build(cfg: &RunConfig) -> Result<Model, CliError> {
    let chart = ChartBox::new(cfg.chart.lower, cfg.chart.upper).map_err(config_err)?;
    if cfg.grid.cells.iter().any(|&c| c == 0) {
        return Err(CliError::Config("grid.cells entries must be positive".into()));
    }
    let sample = SampleGrid::new(chart, cfg.grid.sample).map_err(config_err)?;
    if cfg.spectrum.count == 0 {
        return Err(CliError::Config("spectrum.count must be positive".into()));
    }
    if let Some(ladder) = &cfg.certify.ladder {
        if ladder.iter().flatten().any(|&c| c == 0) {
            return Err(CliError::Config("certify.ladder entries must be positive".into()));
        }
    }
    let empty = BTreeMap::new();
    let kerr_vars = ["r", "theta", "phi"].map(String::from);
    let (metric, kerr, variables, params) = match &cfg.spacetime {
        SpacetimeSpec::Minkowski => (StationaryMetric::minkowski(), None, default_variables(), &empty),
        SpacetimeSpec::Schwarzschild { mass } => {
            let k = KerrSpacetime::new(KerrParams::new(*mass, 0.0).map_err(config_err)?, chart).map_err(config_err)?;
            (k.metric.clone(), Some(k), kerr_vars, &empty)
        }
        SpacetimeSpec::Kerr { mass, spin } => {
            let k = KerrSpacetime::new(KerrParams::new(*mass, *spin).map_err(config_err)?, chart).map_err(config_err)?;
            (k.metric.clone(), Some(k), kerr_vars, &empty)
        }
        SpacetimeSpec::Static { variables, parameters, lapse, metric } => {
            let sym = symbols(variables, parameters);
            let m = StationaryMetric::static_metric(sym.field("lapse", lapse)?, spatial(&sym, metric)?);
            (m, None, variables.clone(), parameters)
        }
        SpacetimeSpec::Stationary { variables, parameters, lapse, shift, metric } => {
            let sym = symbols(variables, parameters);
            let s = VectorField([sym.field("shift[0]", &shift[0])?, sym.field("shift[1]", &shift[1])?, sym.field("shift[2]", &shift[2])?]);
            let m = StationaryMetric::new(sym.field("lapse", lapse)?, s, spatial(&sym, metric)?);
            (m, None, variables.clone(), parameters)
        }
    };
    if kerr.is_some() && chart.upper[2] - chart.lower[2] > 2.0 * PI + 1e-12 {
        return Err(CliError::Config("the phi range of a Kerr chart cannot exceed 2 pi".into()));
    }
    let sym = symbols(&variables, params);
    let m2 = sym.field("operator.m2", &cfg.operator.m2)?;
    Ok(Model { metric, kerr, chart, sample, m2, variables })
}

fn symbols<'a>(variables: &'a [String; 3], params: &'a BTreeMap<String, f64>) -> Symbols<'a> {
    Symbols {
        variables: [variables[0].as_str(), variables[1].as_str(), variables[2].as_str()],
        names: params.keys().map(String::as_str).collect(),
        values: params,
    }
}

fn spatial(sym: &Symbols, comps: &[String; 6]) -> Result<SymMetricField, CliError> {
    let names = ["xx", "xy", "xz", "yy", "yz", "zz"];
    let mut fields = Vec::with_capacity(6);
    for (c, n) in comps.iter().zip(names) {
        fields.push(sym.field(&format!("metric.{n}"), c)?);
    }
    let fields: [ScalarField; 6] = fields.try_into().expect("six components");
    Ok(SymMetricField::from_components(fields))
}
