//! Scenario runner: parses a TOML scenario, validates it completely, runs
//! it in memory and only then writes `series_<name>.csv` files and
//! `summary.txt`. A rejected scenario therefore leaves no files behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::batch::item_seed;
use crate::control::{self, ControlProblem};
use crate::dynamics::{self, Hamiltonian, LindbladModel, TdSample, TimeGrid};
use crate::error::Error;
use crate::metrics::{self, DiscriminationProblem, PUBLISHED_BOUNDS_CROSSOVER};
use crate::network::{self, LinkReport, Network, NetworkSpec};
use crate::qstate::{self, DensityMatrix, QuantumChannel};
use crate::random;
use crate::scenario::{at, ChannelSpec, GridSpec, NoiseSpec, StateSpec};

/// Largest tolerated Fuchs–van de Graaf violation in emitted link rows.
pub const SANDWICH_SLACK: f64 = 1e-9;
/// Significant digits in CSV cells.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    Spec(Error),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn spec_err(e: Error) -> CliError {
    CliError::Spec(e)
}

fn num_err(e: Error) -> CliError {
    CliError::Numerical(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Metrics,
    Evolve,
    Network,
    BenchFvdg,
    Grape,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Metrics => "metrics",
            ScenarioKind::Evolve => "evolve",
            ScenarioKind::Network => "network",
            ScenarioKind::BenchFvdg => "bench-fvdg",
            ScenarioKind::Grape => "grape",
        }
    }
}

/// Top-level scenario document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// Time grid for `evolve` and `network`.
    pub grid: Option<GridSpec>,
    pub metrics: Option<MetricsSpec>,
    pub evolve: Option<EvolveSpec>,
    pub network: Option<NetworkSpec>,
    /// Extra steps for `network` runs.
    pub protocol: Option<ProtocolSpec>,
    #[serde(rename = "bench-fvdg")]
    pub bench_fvdg: Option<BenchSpec>,
    pub grape: Option<GrapeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    pub rho: StateSpec,
    pub sigma: StateSpec,
    /// Dimension for named states; literal matrices carry their own.
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_prior")]
    pub prior: f64,
    /// Applied to both states to show contraction of the trace distance.
    pub channel: Option<ChannelSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub rho: StateSpec,
    pub sigma: StateSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    /// Node pairs that receive an EPR pair before evolution.
    #[serde(default)]
    pub distribute: Vec<[String; 2]>,
    pub supernode: Option<SupernodeSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupernodeSpec {
    /// Channel between supernode and EPR source, applied at t = 0.
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    /// Explicit grid values in [0, 1].
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced points on [0, 1] when `grid` is absent.
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            grid: None,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrapeSpec {
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    /// Drift Hamiltonian `hx X + hy Y + hz Z`.
    #[serde(default)]
    pub drift: [f64; 3],
    /// Control operators by Pauli name: `x`, `y`, `z`.
    #[serde(default = "default_controls")]
    pub controls: Vec<String>,
    #[serde(default = "default_rho0")]
    pub rho0: StateSpec,
    #[serde(default = "default_target")]
    pub target: StateSpec,
    /// `false` starts from zero amplitudes instead of seeded random ones.
    #[serde(default = "default_true")]
    pub random_init: bool,
}

impl Default for GrapeSpec {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

fn default_dim() -> usize {
    2
}
fn default_prior() -> f64 {
    0.5
}
fn default_points() -> usize {
    101
}
fn default_slices() -> usize {
    10
}
fn default_horizon() -> f64 {
    1.0
}
fn default_iters() -> usize {
    200
}
fn default_controls() -> Vec<String> {
    vec!["x".into()]
}
fn default_rho0() -> StateSpec {
    StateSpec::named("zero")
}
fn default_target() -> StateSpec {
    StateSpec::named("one")
}
fn default_true() -> bool {
    true
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Grid steps for `evolve`/`network`, grid points for `bench-fvdg`,
    /// iteration cap for `grape`.
    pub steps: Option<usize>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> crate::Result<Self> {
        toml::from_str(text).map_err(|e| Error::spec("scenario", e.message().to_string()))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(steps) = o.steps {
            match self.kind {
                ScenarioKind::Evolve | ScenarioKind::Network => {
                    if let Some(g) = &mut self.grid {
                        g.steps = steps;
                    }
                }
                ScenarioKind::BenchFvdg => {
                    let b = self.bench_fvdg.get_or_insert_with(BenchSpec::default);
                    b.grid = None;
                    b.points = steps;
                }
                ScenarioKind::Grape => self.grape.get_or_insert_with(GrapeSpec::default).max_iters = steps,
                ScenarioKind::Metrics => {}
            }
        }
    }

    fn check_tables(&self) -> crate::Result<()> {
        let present = [
            ("metrics", self.metrics.is_some()),
            ("evolve", self.evolve.is_some()),
            ("network", self.network.is_some()),
            ("protocol", self.protocol.is_some()),
            ("bench-fvdg", self.bench_fvdg.is_some()),
            ("grape", self.grape.is_some()),
            ("grid", self.grid.is_some()),
        ];
        let (required, allowed): (&[&str], &[&str]) = match self.kind {
            ScenarioKind::Metrics => (&["metrics"], &["metrics"]),
            ScenarioKind::Evolve => (&["evolve", "grid"], &["evolve", "grid"]),
            ScenarioKind::Network => (&["network", "grid"], &["network", "grid", "protocol"]),
            ScenarioKind::BenchFvdg => (&[], &["bench-fvdg"]),
            ScenarioKind::Grape => (&[], &["grape"]),
        };
        for (name, is_present) in present {
            if is_present && !allowed.contains(&name) {
                return Err(Error::spec(name, format!("table is not used by kind `{}`", self.kind.name())));
            }
            if !is_present && required.contains(&name) {
                return Err(Error::spec(name, format!("table is required by kind `{}`", self.kind.name())));
            }
        }
        Ok(())
    }
}

/// One CSV series: a header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("series_{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Renders the CSV and audits the rendered text: every line has the
    /// header's field count and no cell is NaN or infinite.
    pub fn render(&self) -> crate::Result<String> {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_sig(x, CSV_DIGITS)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        audit_csv(&out).map_err(|m| Error::BadParameter(format!("{}: {m}", self.file_name())))?;
        Ok(out)
    }
}

/// Checks column counts and cell finiteness of rendered CSV text.
pub fn audit_csv(text: &str) -> std::result::Result<(), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let width = header.split(',').count();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(format!("row {} has {} fields, header has {width}", i + 1, cells.len()));
        }
        for c in cells {
            match c.parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                _ => return Err(format!("row {}: bad cell `{c}`", i + 1)),
            }
        }
    }
    Ok(())
}

/// `x` with `digits` significant digits: fixed-point for moderate
/// magnitudes, scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Everything a run produces, held in memory until written.
#[derive(Debug, Clone)]
pub struct Report {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub series: Vec<Series>,
    pub summary: String,
}

impl Report {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Renders every file; fails before anything is written.
    pub fn render(&self) -> CliResult<Vec<(String, String)>> {
        let mut files = Vec::with_capacity(self.series.len() + 1);
        for s in &self.series {
            files.push((s.file_name(), s.render().map_err(num_err)?));
        }
        files.push(("summary.txt".to_string(), self.summary.clone()));
        Ok(files)
    }

    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        let files = self.render()?;
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::with_capacity(files.len());
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            log::info!("wrote {}", path.display());
            written.push(path);
        }
        Ok(written)
    }
}

/// Reads, runs and writes one scenario file.
pub fn run(spec_path: &Path, out_dir: &Path, overrides: Overrides) -> CliResult<Report> {
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::io(spec_path, e))?;
    let mut spec = ScenarioSpec::from_toml(&text).map_err(spec_err)?;
    spec.apply(overrides);
    let report = execute(&spec)?;
    report.write(out_dir)?;
    Ok(report)
}

/// Validates and runs a scenario; nothing touches the filesystem.
pub fn execute(spec: &ScenarioSpec) -> CliResult<Report> {
    spec.check_tables().map_err(spec_err)?;
    let prepared = prepare(spec).map_err(spec_err)?;
    let (series, body) = prepared.run(spec.seed)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "scenario: {}", spec.kind.name());
    let _ = writeln!(summary, "seed: {}", spec.seed);
    summary.push_str(&body);
    Ok(Report {
        kind: spec.kind,
        seed: spec.seed,
        series,
        summary,
    })
}

/// A fully validated scenario, ready to compute.
enum Prepared {
    Metrics {
        problem: DiscriminationProblem,
        channel: Option<QuantumChannel>,
    },
    Evolve {
        rho: DensityMatrix,
        sigma: DensityMatrix,
        model: LindbladModel,
        grid: TimeGrid,
    },
    Network {
        net: Network,
        grid: TimeGrid,
        distribute: Vec<[String; 2]>,
        supernode: Option<(QuantumChannel, LindbladModel)>,
    },
    Bench {
        grid: Vec<f64>,
    },
    Grape {
        problem: ControlProblem,
        max_iters: usize,
        random_init: bool,
        controls: Vec<String>,
    },
}

fn pauli(name: &str, field: &str) -> crate::Result<crate::numerics::ComplexMatrix> {
    match name {
        "x" => Ok(qstate::pauli_x()),
        "y" => Ok(qstate::pauli_y()),
        "z" => Ok(qstate::pauli_z()),
        other => Err(Error::spec(field, format!("unknown control `{other}`, expected x, y or z"))),
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn prepare(spec: &ScenarioSpec) -> crate::Result<Prepared> {
    let state_rng = |i| random::seeded(item_seed(spec.seed, i));
    let grid = spec.grid.as_ref().map(|g| g.build("grid")).transpose()?;
    Ok(match spec.kind {
        ScenarioKind::Metrics => {
            let m = spec.metrics.as_ref().expect("checked");
            if m.dim == 0 {
                return Err(Error::spec("metrics.dim", "must be ≥ 1"));
            }
            if !(0.0..=1.0).contains(&m.prior) {
                return Err(Error::spec("metrics.prior", format!("must lie in [0, 1], got {}", m.prior)));
            }
            let dim = m.rho.dim().or(m.sigma.dim()).unwrap_or(m.dim);
            let rho = m.rho.resolve("metrics.rho", dim, &mut state_rng(0))?;
            let sigma = m.sigma.resolve("metrics.sigma", dim, &mut state_rng(1))?;
            let problem = DiscriminationProblem::new(rho, sigma, m.prior).map_err(at("metrics"))?;
            let channel = m.channel.as_ref().map(|c| c.build("metrics.channel")).transpose()?;
            if let Some(c) = &channel {
                qstate::ensure_dim(c.input_dim(), dim).map_err(at("metrics.channel"))?;
            }
            Prepared::Metrics { problem, channel }
        }
        ScenarioKind::Evolve => {
            let e = spec.evolve.as_ref().expect("checked");
            let rho = e.rho.resolve("evolve.rho", 2, &mut state_rng(0))?;
            let sigma = e.sigma.resolve("evolve.sigma", 2, &mut state_rng(1))?;
            let model = e.noise.build("evolve.noise")?;
            for (s, f) in [(&rho, "evolve.rho"), (&sigma, "evolve.sigma")] {
                qstate::ensure_dim(model.dim(), s.dim()).map_err(at(f))?;
            }
            Prepared::Evolve {
                rho,
                sigma,
                model,
                grid: grid.expect("checked"),
            }
        }
        ScenarioKind::Network => {
            let ns = spec.network.as_ref().expect("checked");
            let net = network::build_network(ns, spec.seed)?;
            for (i, l) in net.links().iter().enumerate() {
                if !valid_name(&l.id) {
                    return Err(Error::spec(
                        format!("network.links[{i}].id"),
                        format!("`{}` may only contain letters, digits, `_` and `-`", l.id),
                    ));
                }
            }
            if net.links().is_empty() {
                return Err(Error::spec("network.links", "need at least one link"));
            }
            let protocol = spec.protocol.clone().unwrap_or_default();
            for (i, [a, b]) in protocol.distribute.iter().enumerate() {
                let field = format!("protocol.distribute[{i}]");
                for id in [a, b] {
                    net.node(id).map_err(at(&field))?;
                }
                if a == b {
                    return Err(Error::spec(field, format!("`{a}` paired with itself")));
                }
            }
            let supernode = match &protocol.supernode {
                Some(s) => {
                    let channel = match &s.channel {
                        Some(c) => c.build("protocol.supernode.channel")?,
                        None => QuantumChannel::identity(2),
                    };
                    let model = s.noise.build("protocol.supernode.noise")?;
                    let others = net.nodes().len() - 1;
                    if others < 2 {
                        return Err(Error::spec("protocol.supernode", format!("need 2 non-source nodes, found {others}")));
                    }
                    Some((channel, model))
                }
                None => None,
            };
            Prepared::Network {
                net,
                grid: grid.expect("checked"),
                distribute: protocol.distribute,
                supernode,
            }
        }
        ScenarioKind::BenchFvdg => {
            let b = spec.bench_fvdg.clone().unwrap_or_default();
            let grid = match b.grid {
                Some(g) => {
                    if g.is_empty() {
                        return Err(Error::spec("bench-fvdg.grid", "must not be empty"));
                    }
                    if let Some(x) = g.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                        return Err(Error::spec("bench-fvdg.grid", format!("value {x} outside [0, 1]")));
                    }
                    g
                }
                None => {
                    if b.points < 2 {
                        return Err(Error::spec("bench-fvdg.points", "must be ≥ 2"));
                    }
                    (0..b.points).map(|i| i as f64 / (b.points - 1) as f64).collect()
                }
            };
            Prepared::Bench { grid }
        }
        ScenarioKind::Grape => {
            let g = spec.grape.clone().unwrap_or_default();
            if g.controls.is_empty() {
                return Err(Error::spec("grape.controls", "need at least one control"));
            }
            let controls = g
                .controls
                .iter()
                .enumerate()
                .map(|(i, c)| Hamiltonian::new(pauli(c, &format!("grape.controls[{i}]"))?).map_err(at("grape.controls")))
                .collect::<crate::Result<Vec<_>>>()?;
            if g.drift.iter().any(|h| !h.is_finite()) {
                return Err(Error::spec("grape.drift", "coefficients must be finite"));
            }
            let [hx, hy, hz] = g.drift;
            let drift = &(&qstate::pauli_x().scale_real(hx) + &qstate::pauli_y().scale_real(hy)) + &qstate::pauli_z().scale_real(hz);
            let drift = Hamiltonian::new(drift).map_err(at("grape.drift"))?;
            let rho0 = g.rho0.resolve("grape.rho0", 2, &mut state_rng(0))?;
            let target = g.target.resolve("grape.target", 2, &mut state_rng(1))?;
            let problem = ControlProblem::new(drift, controls, g.slices, g.horizon, rho0, target).map_err(at("grape"))?;
            Prepared::Grape {
                problem,
                max_iters: g.max_iters,
                random_init: g.random_init,
                controls: g.controls,
            }
        }
    })
}

const LINK_HEADER: [&str; 11] = [
    "t",
    "trace_distance",
    "band_center",
    "band_half_width",
    "band_low",
    "band_high",
    "fidelity",
    "fvdg_low",
    "fvdg_high",
    "published_f_lower",
    "published_f_upper",
];

fn link_series(name: &str, report: &LinkReport) -> Series {
    let mut s = Series::new(name, &LINK_HEADER);
    for r in &report.rows {
        s.rows.push(vec![
            r.t,
            r.trace_distance,
            r.band.center,
            r.band.half_width,
            r.band.low,
            r.band.high,
            r.fidelity,
            r.fvdg_low,
            r.fvdg_high,
            r.published_f_lower,
            r.published_f_upper,
        ]);
    }
    s
}

fn f(x: f64) -> String {
    format_sig(x, CSV_DIGITS)
}

/// Sandwich check plus the as-published crossover warning for one series.
fn audit_link(report: &LinkReport, out: &mut String) -> CliResult<()> {
    let worst = report.max_sandwich_violation();
    if worst > SANDWICH_SLACK {
        return Err(num_err(Error::BadParameter(format!(
            "link `{}` leaves the Fuchs–van de Graaf band by {worst:.3e}",
            report.link_id
        ))));
    }
    let first = &report.rows[0];
    let last = &report.rows[report.rows.len() - 1];
    let _ = writeln!(out, "  {}:", report.link_id);
    let _ = writeln!(out, "    trace distance  {} -> {}", f(first.trace_distance), f(last.trace_distance));
    let _ = writeln!(out, "    fidelity        {} -> {}", f(first.fidelity), f(last.fidelity));
    let _ = writeln!(out, "    fvdg sandwich   ok (max violation {})", f(worst.max(0.0)));
    let crossed = report.rows.iter().filter(|r| r.trace_distance > PUBLISHED_BOUNDS_CROSSOVER).count();
    if crossed > 0 {
        let _ = writeln!(
            out,
            "    WARNING: as-published bounds inverted (F_lower > F_upper) on {crossed} of {} rows with TD > 0.5",
            report.rows.len()
        );
    }
    Ok(())
}

fn steady_state_line(samples: &[TdSample], out: &mut String) {
    match dynamics::steady_state_index(samples) {
        Some(i) => {
            let _ = writeln!(out, "steady state reached at t = {}", f(samples[i].t));
        }
        None => {
            let _ = writeln!(out, "steady state not reached on this grid");
        }
    }
}

impl Prepared {
    fn run(self, seed: u64) -> CliResult<(Vec<Series>, String)> {
        let mut out = String::new();
        let series = match self {
            Prepared::Metrics { problem, channel } => {
                let (rho, sigma) = (problem.rho(), problem.sigma());
                let td = metrics::trace_distance(rho, sigma).map_err(num_err)?;
                let band = metrics::operational_td_band(rho, sigma).map_err(num_err)?;
                let h = metrics::helstrom(&problem).map_err(num_err)?;
                let fu = metrics::uhlmann_fidelity(rho, sigma).map_err(num_err)?;
                let fo = metrics::overlap_fidelity(rho, sigma).map_err(num_err)?;
                let ff = metrics::frobenius_fidelity(rho, sigma).map_err(num_err)?;
                let (lo, hi) = metrics::fvdg_bounds(fu.clamp(0.0, 1.0)).map_err(num_err)?;
                let (pl, pu) = metrics::published_fidelity_bounds(td).map_err(num_err)?;
                let mut header = vec![
                    "trace_distance",
                    "helstrom_p_success",
                    "helstrom_p_error",
                    "band_center",
                    "band_half_width",
                    "uhlmann_fidelity",
                    "overlap_fidelity",
                    "frobenius_fidelity",
                    "fvdg_low",
                    "fvdg_high",
                    "published_f_lower",
                    "published_f_upper",
                ];
                let mut row = vec![td, h.p_success, h.p_error, band.center, band.half_width, fu, fo, ff, lo, hi, pl, pu];
                let rows = [
                    ("dimension", rho.dim().to_string()),
                    ("prior", f(problem.prior_rho())),
                    ("trace distance", f(td)),
                    ("helstrom success", f(h.p_success)),
                    ("helstrom error", f(h.p_error)),
                    ("uhlmann fidelity", f(fu)),
                    ("overlap fidelity", f(fo)),
                    ("frobenius fidelity", f(ff)),
                    ("fvdg band", format!("[{}, {}]", f(lo), f(hi))),
                    ("as-published F band", format!("[{}, {}]", f(pl), f(pu))),
                ];
                for (k, v) in rows {
                    let _ = writeln!(out, "{k:<22}{v}");
                }
                if let Some(ch) = channel {
                    let (a, b) = (ch.apply(rho).map_err(num_err)?, ch.apply(sigma).map_err(num_err)?);
                    let after = metrics::trace_distance(&a, &b).map_err(num_err)?;
                    header.extend(["trace_distance_after_channel", "fidelity_after_channel"]);
                    let fa = metrics::uhlmann_fidelity(&a, &b).map_err(num_err)?;
                    row.extend([after, fa]);
                    let _ = writeln!(out, "{:<22}{}", "TD after channel", f(after));
                }
                if td > PUBLISHED_BOUNDS_CROSSOVER {
                    let _ = writeln!(out, "WARNING: TD > 0.5, as-published bounds are inverted (F_lower > F_upper)");
                }
                let mut s = Series::new("metrics", &header);
                s.rows.push(row);
                vec![s]
            }
            Prepared::Evolve { rho, sigma, model, grid } => {
                let samples = dynamics::td_trajectory(&rho, &sigma, &model, &grid).map_err(num_err)?;
                let report = network::LinkReport::from_samples("evolve".into(), &samples).map_err(num_err)?;
                let _ = writeln!(out, "grid: {} steps on [{}, {}]", grid.steps(), f(grid.t_start()), f(grid.t_end()));
                audit_link(&report, &mut out)?;
                steady_state_line(&samples, &mut out);
                vec![link_series("evolve", &report)]
            }
            Prepared::Network {
                mut net,
                grid,
                distribute,
                supernode,
            } => {
                let _ = writeln!(out, "nodes: {}, links: {}, epr source: {}", net.nodes().len(), net.links().len(), net.epr_source());
                let epr = qstate::epr_pair();
                for [a, b] in &distribute {
                    let joint = network::distribute_epr(&mut net, a, b).map_err(num_err)?;
                    let fid = metrics::uhlmann_fidelity(&epr, &joint).map_err(num_err)?;
                    let _ = writeln!(out, "epr pair {a}-{b}: fidelity with Φ+ = {}", f(fid));
                }
                let report = network::network_fidelity(&net, &grid).map_err(num_err)?;
                let mut series = Vec::new();
                let mut header = vec!["t".to_string(), "network_fidelity".into(), "epr_source_fidelity".into()];
                header.extend(report.links.iter().map(|l| format!("fidelity_{}", l.link_id)));
                let mut agg = Series {
                    name: "network".into(),
                    header,
                    rows: Vec::new(),
                };
                for (k, &t) in report.times.iter().enumerate() {
                    let mut row = vec![t, report.aggregate[k], report.source_fidelity[k]];
                    row.extend(report.links.iter().map(|l| l.rows[k].fidelity));
                    agg.rows.push(row);
                }
                let _ = writeln!(
                    out,
                    "network fidelity  {} -> {}",
                    f(report.aggregate[0]),
                    f(*report.aggregate.last().expect("non-empty grid"))
                );
                let _ = writeln!(
                    out,
                    "epr source self-fidelity  {} -> {}",
                    f(report.source_fidelity[0]),
                    f(*report.source_fidelity.last().expect("non-empty grid"))
                );
                let _ = writeln!(out, "links:");
                for l in &report.links {
                    audit_link(l, &mut out)?;
                    series.push(link_series(&format!("link_{}", l.link_id), l));
                }
                series.push(agg);
                if let Some((channel, model)) = supernode {
                    let sn = network::supernode_pairing(&net).map_err(num_err)?;
                    let _ = writeln!(out, "supernode: nearest {}, farthest {}", sn.nearest, sn.farthest);
                    let r = network::supernode_link_test(&net, &sn, &channel, &model, &grid).map_err(num_err)?;
                    audit_link(&r, &mut out)?;
                    series.push(link_series("supernode", &r));
                }
                series
            }
            Prepared::Bench { grid } => {
                let s = bench_fvdg(&grid).map_err(num_err)?;
                let crossed: Vec<f64> = grid.iter().copied().filter(|&x| x > PUBLISHED_BOUNDS_CROSSOVER).collect();
                let _ = writeln!(out, "grid points: {}", grid.len());
                let _ = writeln!(out, "as-published bounds: {{√TD, √(1 − TD)}}, Fuchs–van de Graaf: 1 − √F ≤ TD ≤ √(1 − F)");
                if crossed.is_empty() {
                    let _ = writeln!(out, "no grid point has TD > 0.5; as-published bounds are ordered everywhere");
                } else {
                    let _ = writeln!(
                        out,
                        "WARNING: as-published bounds cross over: F_lower = √TD exceeds F_upper = √(1 − TD) for TD > 0.5 ({} of {} grid points, first at TD = {})",
                        crossed.len(),
                        grid.len(),
                        f(crossed.iter().copied().fold(f64::INFINITY, f64::min))
                    );
                }
                vec![s]
            }
            Prepared::Grape {
                problem,
                max_iters,
                random_init,
                controls,
            } => {
                let schedule = if random_init {
                    control::grape_optimize(&problem, max_iters, seed)
                } else {
                    control::grape_optimize_from(&problem, problem.zero_amplitudes(), max_iters)
                }
                .map_err(num_err)?;
                let mut trace = Series::new("grape_fidelity", &["iteration", "fidelity"]);
                for (i, &fi) in schedule.fidelity_trace.iter().enumerate() {
                    trace.rows.push(vec![i as f64, fi]);
                }
                let mut header = vec!["slice".to_string(), "t_start".into()];
                header.extend(controls.iter().enumerate().map(|(i, c)| format!("amp_{i}_{c}")));
                let mut pulse = Series {
                    name: "grape_pulse".into(),
                    header,
                    rows: Vec::new(),
                };
                for j in 0..problem.n_slices() {
                    let mut row = vec![j as f64, j as f64 * problem.dt()];
                    row.extend(schedule.amplitudes.iter().map(|a| a[j]));
                    pulse.rows.push(row);
                }
                let _ = writeln!(out, "slices: {}, controls: {}", problem.n_slices(), controls.join(" "));
                let _ = writeln!(out, "initial fidelity  {}", f(schedule.fidelity_trace[0]));
                let _ = writeln!(out, "final fidelity    {}", f(schedule.final_fidelity()));
                let _ = writeln!(out, "iterations        {}", schedule.iterations());
                let _ = writeln!(out, "gradient converged: {}", schedule.converged);
                vec![trace, pulse]
            }
        };
        Ok((series, out))
    }
}

/// As-published and Fuchs–van de Graaf curves on a shared grid. Each grid
/// value is read as a trace distance for the as-published fidelity bounds
/// and for the standard fidelity bounds, and as a fidelity for the
/// Fuchs–van de Graaf trace-distance bounds.
pub fn bench_fvdg(grid: &[f64]) -> crate::Result<Series> {
    let mut s = Series::new(
        "bench_fvdg",
        &[
            "td",
            "published_f_lower",
            "published_f_upper",
            "standard_f_lower",
            "standard_f_upper",
            "fidelity",
            "fvdg_td_low",
            "fvdg_td_high",
        ],
    );
    for &x in grid {
        let (pl, pu) = metrics::published_fidelity_bounds(x)?;
        let (lo, hi) = metrics::fvdg_bounds(x)?;
        s.rows.push(vec![x, pl, pu, (1.0 - x).powi(2), 1.0 - x * x, x, lo, hi]);
    }
    Ok(s)
}
