//! Run configuration: a single TOML file with `key = value` lines and
//! `[section]` headers. Parsing fills in defaults and records, per leaf
//! key, whether the value came from the user or from a default.

use std::collections::BTreeMap;
use std::path::PathBuf;

use midrange_core::domain::{make_grid, BoundaryData, ParabolicCylinder, SpaceBox, SpatialGrid};
use midrange_core::dpp::{direction_set, disk_quadrature, DirectionSet, DiskQuadrature, DppParams};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Simulate,
    VerifyExpansion,
    VerifyRegularity,
    VerifyBarrier,
    VerifyAux,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::VerifyExpansion => "verify-expansion",
            Command::VerifyRegularity => "verify-regularity",
            Command::VerifyBarrier => "verify-barrier",
            Command::VerifyAux => "verify-aux",
        }
    }

    fn needs_boundary(self) -> bool {
        matches!(
            self,
            Command::Solve | Command::Simulate | Command::VerifyRegularity
        )
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub directions: DirectionSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(
        rename = "F",
        default,
        deserialize_with = "boundary_or_shorthand",
        skip_serializing_if = "Option::is_none"
    )]
    pub boundary: Option<BoundaryData>,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub expansion: ExpansionSpec,
    #[serde(default)]
    pub regularity: RegularitySpec,
    #[serde(default)]
    pub barrier: BarrierSpec,
    #[serde(default)]
    pub aux: AuxSpec,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Accepts either a tagged boundary table or `F.expr = "..."` alone.
fn boundary_or_shorthand<'de, D: Deserializer<'de>>(
    d: D,
) -> Result<Option<BoundaryData>, D::Error> {
    use serde::de::Error;
    let mut table = toml::Table::deserialize(d)?;
    if !table.contains_key("kind") && table.contains_key("expr") {
        table.insert("kind".into(), toml::Value::String("expression".into()));
    }
    toml::Value::Table(table)
        .try_into::<BoundaryData>()
        .map(Some)
        .map_err(|e| D::Error::custom(format!("F: {}", e.message())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

fn default_dim() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            dim: 2,
            half_width: 1.0,
            center: None,
        }
    }
}

/// Grid spacing: exactly one of a fixed `h`, `h = h_coeff * eps^2` or
/// `h = h_per_eps * eps`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_coeff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_per_eps: Option<f64>,
}

impl GridSpec {
    pub fn spacing(&self, epsilon: f64) -> f64 {
        match (self.h, self.h_coeff, self.h_per_eps) {
            (Some(h), _, _) => h,
            (_, Some(c), _) => c * epsilon * epsilon,
            (_, _, Some(c)) => c * epsilon,
            _ => 0.5 * epsilon * epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    64
}

impl Default for DirectionSpec {
    fn default() -> Self {
        DirectionSpec { k: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_m() -> usize {
    2
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { m: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSpec {
    /// Stream the field CSV and its JSON sidecar to the output directory.
    pub write_field: bool,
    /// Treat `F` as the exact solution and record the sup error.
    pub compare_exact: bool,
    pub exact_tolerance: f64,
    /// Also applies to the field solved by `simulate`.
    pub time_osc: bool,
    /// Upper bound on the radius of the time-oscillation region.
    pub osc_radius_cap: f64,
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec {
            write_field: true,
            compare_exact: false,
            exact_tolerance: 1e-10,
            time_osc: true,
            osc_radius_cap: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSpec {
    pub trials: u64,
    /// Defaults to the box center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_x: Option<Vec<f64>>,
    /// Defaults to the last lattice time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_t: Option<f64>,
    /// Allowed deviation: `sigmas * std_error + slack`.
    pub sigmas: f64,
    pub slack: f64,
    pub write_outcomes: bool,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            trials: 10_000,
            start_x: None,
            start_t: None,
            sigmas: 3.0,
            slack: 0.05,
            write_outcomes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionSpec {
    pub quadratics: usize,
    /// Step length used for the quadratic sweep.
    pub quad_epsilon: f64,
    pub direction_counts: Vec<usize>,
    pub min_gradient: f64,
    /// Relative slack on the decrease of the worst residual.
    pub noise: f64,
    pub heat_epsilons: Vec<f64>,
    pub heat_k: f64,
    pub rate_min: f64,
    pub rate_max: f64,
}

impl Default for ExpansionSpec {
    fn default() -> Self {
        ExpansionSpec {
            quadratics: 20,
            quad_epsilon: 1e-3,
            direction_counts: vec![16, 32, 64, 128],
            min_gradient: 0.5,
            noise: 0.1,
            heat_epsilons: vec![0.1, 0.05, 0.025],
            heat_k: 1.0,
            rate_min: 0.7,
            rate_max: 1.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularitySpec {
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub samples: usize,
    pub radius: f64,
    /// Defaults to the box center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Defaults to `T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<f64>,
    pub max_ratio: f64,
    pub time_osc: bool,
}

impl Default for RegularitySpec {
    fn default() -> Self {
        RegularitySpec {
            epsilons: vec![0.1, 0.05],
            delta: 1.0,
            samples: 2000,
            radius: 0.125,
            center: None,
            top: None,
            max_ratio: 2.0,
            time_osc: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierSpec {
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub c: f64,
    /// Spacing of the sample nodes inside `B_r`.
    pub spacing: f64,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        BarrierSpec {
            a: vec![0.5, 1.0, 2.0],
            r: vec![0.25, 0.5],
            epsilons: vec![0.1, 0.05],
            c: 0.0,
            spacing: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuxSpec {
    pub gammas: Vec<f64>,
    pub omega0s: Vec<f64>,
    pub omega_samples: usize,
    pub pairs: usize,
    pub vectors: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n_annuli: u32,
    pub delta: f64,
    pub r: f64,
    pub points: usize,
}

impl Default for AuxSpec {
    fn default() -> Self {
        AuxSpec {
            gammas: vec![1.25, 1.5, 1.75],
            omega0s: vec![1.0, 10.0],
            omega_samples: 1000,
            pairs: 1000,
            vectors: 1000,
            c: 2.0,
            m: 2.0,
            n_annuli: 5,
            delta: 0.5,
            r: 0.25,
            points: 2000,
        }
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    User,
    Default,
    CommandLine,
}

pub type ProvenanceMap = BTreeMap<String, Provenance>;

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    pub provenance: ProvenanceMap,
}

/// Objects built from a config for one step length.
pub struct Problem {
    pub params: DppParams,
    pub grid: SpatialGrid,
    pub dirs: DirectionSet,
    pub quad: DiskQuadrature,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses, validates and resolves a config file.
pub fn parse_config(text: &str) -> Result<ParsedConfig, CliError> {
    let user: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    let mut config: RunConfig =
        toml::from_str(text).map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    config.resolve();
    config.validate()?;
    let provenance = provenance(&user, &config)?;
    Ok(ParsedConfig { config, provenance })
}

/// Renders a config as text accepted by [`parse_config`].
pub fn render(config: &RunConfig) -> Result<String, CliError> {
    toml::to_string(config).map_err(|e| invalid(format!("cannot render config: {e}")))
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            _ => out.push(key),
        }
    }
}

fn leaf_keys(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let table = toml::Table::try_from(config)
        .map_err(|e| invalid(format!("cannot render config: {e}")))?;
    let mut keys = Vec::new();
    flatten("", &table, &mut keys);
    Ok(keys)
}

fn provenance(user: &toml::Table, config: &RunConfig) -> Result<ProvenanceMap, CliError> {
    let mut given = Vec::new();
    flatten("", user, &mut given);
    Ok(leaf_keys(config)?
        .into_iter()
        .map(|k| {
            let p = if given.contains(&k) {
                Provenance::User
            } else {
                Provenance::Default
            };
            (k, p)
        })
        .collect())
}

impl RunConfig {
    /// Replaces context-dependent defaults by concrete values so that the
    /// rendered config is self-contained.
    fn resolve(&mut self) {
        let n = self.domain.dim;
        if self.domain.center.is_none() {
            self.domain.center = Some(vec![0.0; n]);
        }
        if self.grid == GridSpec::default() {
            self.grid.h_coeff = Some(0.5);
        }
        let center = self.domain.center.clone().unwrap_or_default();
        if self.command == Command::Simulate {
            if self.simulate.start_x.is_none() {
                self.simulate.start_x = Some(center.clone());
            }
            if self.simulate.start_t.is_none() && self.epsilon > 0.0 && self.horizon > 0.0 {
                let dt = 0.5 * self.epsilon * self.epsilon;
                let steps = (self.horizon / dt - 1e-9).ceil().max(1.0);
                self.simulate.start_t = Some(steps * dt);
            }
        }
        if self.command == Command::VerifyRegularity {
            if self.regularity.center.is_none() {
                self.regularity.center = Some(center);
            }
            if self.regularity.top.is_none() {
                self.regularity.top = Some(self.horizon);
            }
        }
    }

    pub fn space(&self) -> Result<SpaceBox, CliError> {
        let center = self
            .domain
            .center
            .clone()
            .unwrap_or_else(|| vec![0.0; self.domain.dim]);
        Ok(SpaceBox::new(center, self.domain.half_width)?)
    }

    pub fn params_at(&self, epsilon: f64) -> Result<DppParams, CliError> {
        let cyl = ParabolicCylinder::new(self.space()?, self.horizon, epsilon)?;
        Ok(DppParams::new(self.alpha, cyl)?)
    }

    /// Parameters, grid, directions and quadrature at step length
    /// `epsilon`, with the grid spacing coupled as configured.
    pub fn problem_at(&self, epsilon: f64) -> Result<Problem, CliError> {
        let params = self.params_at(epsilon)?;
        let grid = make_grid(&params.cylinder.space, self.grid.spacing(epsilon))?;
        let n = self.domain.dim;
        Ok(Problem {
            params,
            grid,
            dirs: direction_set(n, self.directions.k)?,
            quad: disk_quadrature(n, self.quadrature.m)?,
        })
    }

    pub fn boundary(&self) -> Result<&BoundaryData, CliError> {
        self.boundary
            .as_ref()
            .ok_or_else(|| invalid(format!("command {} needs [F]", self.command.name())))
    }

    /// Grid spacings coarser than `eps^2 / 2` for the commands that solve a
    /// field. Such runs are allowed but their interpolation error does not
    /// vanish as `eps` shrinks.
    pub fn warnings(&self) -> Vec<String> {
        let epsilons = match self.command {
            Command::Solve | Command::Simulate => vec![self.epsilon],
            Command::VerifyRegularity => self.regularity.epsilons.clone(),
            _ => Vec::new(),
        };
        epsilons
            .into_iter()
            .filter_map(|eps| {
                let h = self.grid.spacing(eps);
                let limit = 0.5 * eps * eps;
                (h > limit * (1.0 + 1e-12)).then(|| {
                    format!("grid spacing {h} exceeds eps^2/2 = {limit} at eps = {eps}")
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed > i64::MAX as u64 {
            return Err(invalid(format!(
                "seed must be at most {}, got {}",
                i64::MAX,
                self.seed
            )));
        }
        let n = self.domain.dim;
        if !(2..=3).contains(&n) {
            return Err(invalid(format!("domain.dim must be 2 or 3, got {n}")));
        }
        if let Some(c) = &self.domain.center {
            if c.len() != n {
                return Err(invalid(format!(
                    "domain.center has {} entries, expected {n}",
                    c.len()
                )));
            }
        }
        let given = [self.grid.h, self.grid.h_coeff, self.grid.h_per_eps]
            .iter()
            .filter(|v| v.is_some())
            .count();
        if given > 1 {
            return Err(invalid("set at most one of grid.h, grid.h_coeff, grid.h_per_eps"));
        }
        self.problem_at(self.epsilon)?;
        if self.command.needs_boundary() {
            self.boundary()?.validate(n)?;
        } else if let Some(b) = &self.boundary {
            b.validate(n)?;
        }
        match self.command {
            Command::Solve => self.validate_solve(),
            Command::Simulate => self.validate_simulate(),
            Command::VerifyExpansion => self.validate_expansion(),
            Command::VerifyRegularity => self.validate_regularity(),
            Command::VerifyBarrier => self.validate_barrier(),
            Command::VerifyAux => self.validate_aux(),
        }
    }

    fn validate_solve(&self) -> Result<(), CliError> {
        let s = &self.solve;
        if !(s.exact_tolerance >= 0.0) {
            return Err(invalid("solve.exact_tolerance must be >= 0"));
        }
        if !(s.osc_radius_cap > 0.0) {
            return Err(invalid("solve.osc_radius_cap must be positive"));
        }
        Ok(())
    }

    fn validate_simulate(&self) -> Result<(), CliError> {
        let s = &self.simulate;
        if s.trials == 0 {
            return Err(invalid("simulate.trials must be positive"));
        }
        if !(s.sigmas >= 0.0 && s.slack >= 0.0) {
            return Err(invalid("simulate.sigmas and simulate.slack must be >= 0"));
        }
        let x = s.start_x.as_ref().map_or(0, Vec::len);
        if x != self.domain.dim {
            return Err(invalid(format!(
                "simulate.start_x has {x} entries, expected {}",
                self.domain.dim
            )));
        }
        let t = s.start_t.unwrap_or(0.0);
        if !(t > 0.0) {
            return Err(invalid("simulate.start_t must be positive"));
        }
        Ok(())
    }

    fn validate_expansion(&self) -> Result<(), CliError> {
        let e = &self.expansion;
        if e.quadratics == 0 || e.direction_counts.is_empty() {
            return Err(invalid(
                "expansion.quadratics and expansion.direction_counts must be non-empty",
            ));
        }
        if e.heat_epsilons.len() < 2 {
            return Err(invalid("expansion.heat_epsilons needs at least two values"));
        }
        for &eps in e.heat_epsilons.iter().chain([&e.quad_epsilon]) {
            self.params_at(eps)?;
        }
        for &k in &e.direction_counts {
            direction_set(self.domain.dim, k)?;
        }
        if !(e.min_gradient > 0.0 && e.noise >= 0.0 && e.rate_min <= e.rate_max) {
            return Err(invalid(
                "expansion needs min_gradient > 0, noise >= 0 and rate_min <= rate_max",
            ));
        }
        Ok(())
    }

    fn validate_regularity(&self) -> Result<(), CliError> {
        let r = &self.regularity;
        if r.epsilons.is_empty() || r.samples == 0 {
            return Err(invalid("regularity.epsilons and regularity.samples must be non-empty"));
        }
        if !(r.delta > 0.0 && r.delta <= 1.0) {
            return Err(invalid(format!(
                "regularity.delta must lie in (0,1], got {}",
                r.delta
            )));
        }
        if !(r.max_ratio >= 1.0) {
            return Err(invalid("regularity.max_ratio must be >= 1"));
        }
        for &eps in &r.epsilons {
            let p = self.params_at(eps)?;
            self.region()?.validate(&p)?;
            make_grid(&p.cylinder.space, self.grid.spacing(eps))?;
        }
        Ok(())
    }

    pub fn region(&self) -> Result<midrange_core::analysis::QRegion, CliError> {
        let r = &self.regularity;
        Ok(midrange_core::analysis::QRegion {
            center: r
                .center
                .clone()
                .ok_or_else(|| invalid("regularity.center is unresolved"))?,
            radius: r.radius,
            top: r.top.unwrap_or(self.horizon),
        })
    }

    fn validate_barrier(&self) -> Result<(), CliError> {
        let b = &self.barrier;
        if b.a.is_empty() || b.r.is_empty() || b.epsilons.is_empty() {
            return Err(invalid("barrier.a, barrier.r and barrier.epsilons must be non-empty"));
        }
        if let Some(a) = b.a.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(invalid(format!("barrier.a entries must be >= 0, got {a}")));
        }
        if let Some(r) = b.r.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(invalid(format!("barrier.r entries must lie in (0,1), got {r}")));
        }
        for &eps in &b.epsilons {
            let p = self.params_at(eps)?;
            make_grid(&p.cylinder.space, b.spacing)?;
        }
        Ok(())
    }

    fn validate_aux(&self) -> Result<(), CliError> {
        let a = &self.aux;
        for &g in &a.gammas {
            for &w in &a.omega0s {
                midrange_core::analysis::OmegaParams::new(g, w)?;
            }
        }
        if a.omega_samples < 2 || a.pairs == 0 || a.vectors == 0 || a.points == 0 {
            return Err(invalid("aux sample counts must be positive (omega_samples >= 2)"));
        }
        self.aux_functions(0.0).validate()?;
        Ok(())
    }

    pub fn aux_functions(&self, time_shift: f64) -> midrange_core::analysis::AuxiliaryFunctions {
        midrange_core::analysis::AuxiliaryFunctions {
            c: self.aux.c,
            m: self.aux.m,
            n_annuli: self.aux.n_annuli,
            delta: self.aux.delta,
            epsilon: self.epsilon,
            r: self.aux.r,
            time_shift,
            omega: None,
        }
    }
}
