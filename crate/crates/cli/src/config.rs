//! JSON run configuration: a raw document mirroring the file, validated into
//! a [`RunConfig`] with every expression parsed against the chart dimension.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use apaths_core::algebroid::{so3_constants, Algebroid, AlgebroidError, Chart, PoissonBivector, StructureConstants};
use apaths_core::etale::{CoordForm, EtaleError, FiniteActionGroupoid};
use apaths_core::expr::{parse_expr, Expr, ParseError};
use apaths_core::sampling::DEFAULT_SEED;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("field `{field}`: {source}")]
    Expr {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("the command line asks for task `{cli}` but the config declares `{config}`")]
    TaskMismatch { cli: Task, config: Task },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Byte offset into the offending expression, for expression errors.
    pub fn expr_offset(&self) -> Option<usize> {
        match self {
            ConfigError::Expr { source, .. } => Some(source.offset()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CheckAlgebroid,
    IntegratePath,
    Homotopy,
    OracleSuite,
    SymplecticSuite,
    EtaleSuite,
    Convergence,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::CheckAlgebroid,
        Task::IntegratePath,
        Task::Homotopy,
        Task::OracleSuite,
        Task::SymplecticSuite,
        Task::EtaleSuite,
        Task::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::CheckAlgebroid => "check-algebroid",
            Task::IntegratePath => "integrate-path",
            Task::Homotopy => "homotopy",
            Task::OracleSuite => "oracle-suite",
            Task::SymplecticSuite => "symplectic-suite",
            Task::EtaleSuite => "etale-suite",
            Task::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonEntry {
    pub i: usize,
    pub j: usize,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Either `{"preset": "so3"}` or a rank with one-based constants
/// `c^k_ij`; the `(j, i)` entries are filled in by antisymmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidSpec {
    pub rank: usize,
    /// `anchor[j][i]`: the `∂_{j+1}` component of `ρ(e_{i+1})`.
    pub anchor: Vec<Vec<String>>,
    #[serde(default)]
    pub structure: Vec<StructureEntry>,
}

/// A preset (`central-inversion`, `quarter-turns`, `trivial`) or a
/// multiplication table with one coordinate map per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Vec<Vec<String>>>,
}

/// Coefficients of `a(t) = τ'(t) (c0 + c1 cos πt + c2 sin πt)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Every ε-slice is the same path.
    Constant,
    /// `(1 − ε) a0 + ε a1`.
    #[default]
    Linear,
    /// The so(3) rotation family; needs rank 3.
    Rotation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub kind: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_homotopic: Option<bool>,
}

/// Tolerance names accepted under `numerics.tolerances`.
pub const TOLERANCE_NAMES: [&str; 12] = [
    "axiom",
    "path",
    "homotopy",
    "class",
    "oracle",
    "connection",
    "bracket",
    "multiplicativity",
    "kernel",
    "invariance",
    "jacobi",
    "presentation",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t_list: Option<Vec<usize>>,
    /// Defects below this are treated as the ε-difference floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// The configuration document as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub dim: usize,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<Vec<PoissonEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_algebra: Option<LieAlgebraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebroid: Option<AlgebroidSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groupoid: Option<GroupoidSpec>,
    /// Christoffel symbols `connection[m][k][l]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<Vec<Vec<Vec<String>>>>,
    /// Entries `(i, j, w_ij)` of an invariant 2-form, `i < j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Vec<PoissonEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Poisson(PoissonBivector),
    /// Structure constants `c[i][j][k]`, kept unvalidated so that a
    /// violation surfaces as a failed record.
    LieAlgebra {
        constants: StructureConstants,
        so3: bool,
    },
    Algebroid(Algebroid),
    Groupoid(FiniteActionGroupoid),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Poisson(_) => "poisson",
            Model::LieAlgebra { .. } => "lie_algebra",
            Model::Algebroid(_) => "algebroid",
            Model::Groupoid(_) => "groupoid",
        }
    }
}

/// Command-line overrides applied on top of the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub task: Option<Task>,
    pub seed: Option<u64>,
    pub n_t: Option<usize>,
    pub n_eps: Option<usize>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// The document after overrides, echoed into reports.
    pub raw: RawConfig,
    pub task: Task,
    pub chart: Chart,
    pub model: Model,
    pub connection: Option<Vec<Vec<Vec<Expr>>>>,
    pub form: Option<CoordForm>,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.raw.numerics.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn n_t(&self, default: usize) -> usize {
        self.raw.numerics.n_t.unwrap_or(default)
    }

    pub fn n_eps(&self, default: usize) -> usize {
        self.raw.numerics.n_eps.unwrap_or(default)
    }

    pub fn samples(&self, default: usize) -> usize {
        self.raw.numerics.samples.unwrap_or(default)
    }

    pub fn families(&self, default: usize) -> usize {
        self.raw.numerics.families.unwrap_or(default)
    }

    pub fn trials(&self, default: usize) -> usize {
        self.raw.numerics.trials.unwrap_or(default)
    }

    pub fn probes(&self, default: usize) -> usize {
        self.raw.numerics.probes.unwrap_or(default)
    }

    /// Named tolerance, or `default` when the document leaves it unset.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.raw.numerics.tolerances.get(name).copied().unwrap_or(default)
    }
}

/// Parse and validate a configuration document; the task must be given in
/// the document.
pub fn load_config(text: &str) -> Result<RunConfig, ConfigError> {
    load_config_with(text, &Overrides::default())
}

pub fn load_config_file(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_config_with(&text, overrides)
}

pub fn load_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        match message.strip_prefix("missing field `") {
            Some(rest) => {
                let name = rest.split('`').next().unwrap_or(rest);
                ConfigError::Missing(if path == "." { name.to_string() } else { format!("{path}.{name}") })
            }
            None => ConfigError::Json { path, message },
        }
    })?;
    let task = match (overrides.task, raw.task) {
        (Some(cli), Some(config)) if cli != config => return Err(ConfigError::TaskMismatch { cli, config }),
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(ConfigError::Missing("task".into())),
    };
    raw.task = Some(task);
    let n = &mut raw.numerics;
    n.seed = overrides.seed.or(n.seed);
    n.n_t = overrides.n_t.or(n.n_t);
    n.n_eps = overrides.n_eps.or(n.n_eps);
    raw.output.report = overrides.report.clone().or(raw.output.report.take());
    raw.output.csv = overrides.csv.clone().or(raw.output.csv.take());
    validate(raw, task)
}

fn expr(source: &str, dim: usize, field: impl Fn() -> String) -> Result<Expr, ConfigError> {
    parse_expr(source, dim).map_err(|source| ConfigError::Expr { field: field(), source })
}

fn validate(raw: RawConfig, task: Task) -> Result<RunConfig, ConfigError> {
    let dim = raw.dim;
    for (name, v) in &raw.numerics.tolerances {
        if !TOLERANCE_NAMES.contains(&name.as_str()) {
            return Err(ConfigError::invalid(
                format!("numerics.tolerances.{name}"),
                format!("unknown tolerance; expected one of {}", TOLERANCE_NAMES.join(", ")),
            ));
        }
        if !(*v > 0.0) {
            return Err(ConfigError::invalid(format!("numerics.tolerances.{name}"), "must be positive"));
        }
    }
    for (field, n) in [("numerics.n_t", raw.numerics.n_t), ("numerics.n_eps", raw.numerics.n_eps)] {
        if n.is_some_and(|n| n < 5) {
            return Err(ConfigError::invalid(field, "grids need at least 5 nodes"));
        }
    }
    if raw.numerics.n_t_list.as_ref().is_some_and(|l| l.iter().any(|&n| n < 5)) {
        return Err(ConfigError::invalid("numerics.n_t_list", "grids need at least 5 nodes"));
    }
    let chart = match (&raw.bounds, raw.half_width) {
        (Some(_), Some(_)) => return Err(ConfigError::invalid("box", "give either `box` or `half_width`")),
        (Some(b), None) => {
            if b.len() != dim {
                return Err(ConfigError::invalid("box", format!("expected {dim} intervals, got {}", b.len())));
            }
            Chart::new(b.iter().map(|i| i[0]).collect(), b.iter().map(|i| i[1]).collect())
                .map_err(|e| ConfigError::invalid("box", e))?
        }
        (None, Some(w)) if w > 0.0 => Chart::cube(dim, w),
        (None, Some(_)) => return Err(ConfigError::invalid("half_width", "must be positive")),
        (None, None) => Chart::cube(dim, 2.0),
    };
    let given: Vec<&str> = [
        ("poisson", raw.poisson.is_some()),
        ("lie_algebra", raw.lie_algebra.is_some()),
        ("algebroid", raw.algebroid.is_some()),
        ("groupoid", raw.groupoid.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, present)| present.then_some(k))
    .collect();
    let model = match given.as_slice() {
        [] => return Err(ConfigError::Missing("poisson | lie_algebra | algebroid | groupoid".into())),
        [_] => {
            if let Some(entries) = &raw.poisson {
                Model::Poisson(poisson(entries, &chart)?)
            } else if let Some(spec) = &raw.lie_algebra {
                if dim != 0 {
                    return Err(ConfigError::invalid("dim", "a Lie algebra lives over a point; set dim to 0"));
                }
                lie_algebra(spec)?
            } else if let Some(spec) = &raw.algebroid {
                Model::Algebroid(algebroid(spec, &chart)?)
            } else {
                Model::Groupoid(groupoid(raw.groupoid.as_ref().expect("one model"), &chart)?)
            }
        }
        many => {
            return Err(ConfigError::invalid(
                many.join(", "),
                "give exactly one of poisson, lie_algebra, algebroid, groupoid",
            ))
        }
    };
    let connection = match &raw.connection {
        None => None,
        Some(gamma) => Some(
            gamma
                .iter()
                .enumerate()
                .map(|(m, g)| {
                    g.iter()
                        .enumerate()
                        .map(|(k, row)| {
                            row.iter()
                                .enumerate()
                                .map(|(l, s)| expr(s, dim, || format!("connection[{m}][{k}][{l}]")))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let form = match &raw.form {
        None => None,
        Some(entries) => {
            let parsed = entries
                .iter()
                .enumerate()
                .map(|(idx, e)| Ok((e.i, e.j, expr(&e.expr, dim, || format!("form[{idx}].expr"))?)))
                .collect::<Result<Vec<_>, ConfigError>>()?;
            Some(CoordForm::two_form(dim, parsed).map_err(|e| ConfigError::invalid("form", e))?)
        }
    };
    let cfg = RunConfig {
        raw,
        task,
        chart,
        model,
        connection,
        form,
    };
    check_task_fields(&cfg)?;
    Ok(cfg)
}

fn poisson(entries: &[PoissonEntry], chart: &Chart) -> Result<PoissonBivector, ConfigError> {
    let dim = chart.dim();
    let mut parsed = Vec::with_capacity(entries.len());
    for (idx, e) in entries.iter().enumerate() {
        for (name, v) in [("i", e.i), ("j", e.j)] {
            if v == 0 || v > dim {
                return Err(ConfigError::invalid(format!("poisson[{idx}].{name}"), format!("index {v} outside 1..={dim}")));
            }
        }
        parsed.push((e.i, e.j, expr(&e.expr, dim, || format!("poisson[{idx}].expr"))?));
    }
    PoissonBivector::new(chart.clone(), parsed).map_err(|e| ConfigError::invalid("poisson", e))
}

fn lie_algebra(spec: &LieAlgebraSpec) -> Result<Model, ConfigError> {
    match (spec.preset.as_deref(), spec.rank) {
        (Some("so3"), None) if spec.constants.is_empty() => Ok(Model::LieAlgebra {
            constants: so3_constants(),
            so3: true,
        }),
        (Some(p), _) if p != "so3" => Err(ConfigError::invalid("lie_algebra.preset", format!("unknown preset `{p}`"))),
        (Some(_), _) => Err(ConfigError::invalid("lie_algebra", "a preset takes no rank or constants")),
        (None, None) => Err(ConfigError::Missing("lie_algebra.rank".into())),
        (None, Some(r)) => {
            let mut c = vec![vec![vec![0.0; r]; r]; r];
            for (idx, e) in spec.constants.iter().enumerate() {
                if [e.i, e.j, e.k].iter().any(|&v| v == 0 || v > r) {
                    return Err(ConfigError::invalid(
                        format!("lie_algebra.constants[{idx}]"),
                        format!("index outside 1..={r}"),
                    ));
                }
                if e.i == e.j {
                    return Err(ConfigError::invalid(format!("lie_algebra.constants[{idx}]"), "i and j must differ"));
                }
                let (i, j, k) = (e.i - 1, e.j - 1, e.k - 1);
                c[i][j][k] = e.value;
                c[j][i][k] = -e.value;
            }
            Ok(Model::LieAlgebra {
                so3: c == so3_constants(),
                constants: c,
            })
        }
    }
}

fn algebroid(spec: &AlgebroidSpec, chart: &Chart) -> Result<Algebroid, ConfigError> {
    let dim = chart.dim();
    let anchor = spec
        .anchor
        .iter()
        .enumerate()
        .map(|(j, row)| {
            row.iter()
                .enumerate()
                .map(|(i, s)| expr(s, dim, || format!("algebroid.anchor[{j}][{i}]")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let structure = spec
        .structure
        .iter()
        .enumerate()
        .map(|(idx, e)| Ok((e.i, e.j, e.k, expr(&e.expr, dim, || format!("algebroid.structure[{idx}].expr"))?)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Algebroid::new(chart.clone(), spec.rank, anchor, structure).map_err(|e: AlgebroidError| ConfigError::invalid("algebroid", e))
}

fn groupoid(spec: &GroupoidSpec, chart: &Chart) -> Result<FiniteActionGroupoid, ConfigError> {
    let dim = chart.dim();
    let err = |e: EtaleError| ConfigError::invalid("groupoid", e);
    match (spec.preset.as_deref(), &spec.table, &spec.action) {
        (Some(p), None, None) => match p {
            "central-inversion" => Ok(FiniteActionGroupoid::central_inversion(chart.clone())),
            "quarter-turns" if dim == 2 => Ok(FiniteActionGroupoid::quarter_turns(chart.clone())),
            "quarter-turns" => Err(ConfigError::invalid("groupoid.preset", "quarter turns act on the plane; set dim to 2")),
            "trivial" => Ok(FiniteActionGroupoid::trivial(chart.clone())),
            other => Err(ConfigError::invalid("groupoid.preset", format!("unknown preset `{other}`"))),
        },
        (None, Some(table), Some(action)) => {
            let maps = action
                .iter()
                .enumerate()
                .map(|(g, coords)| {
                    coords
                        .iter()
                        .enumerate()
                        .map(|(i, s)| expr(s, dim, || format!("groupoid.action[{g}][{i}]")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            FiniteActionGroupoid::new(chart.clone(), table.clone(), maps, DEFAULT_SEED).map_err(err)
        }
        (None, None, _) => Err(ConfigError::Missing("groupoid.table".into())),
        (None, _, None) => Err(ConfigError::Missing("groupoid.action".into())),
        _ => Err(ConfigError::invalid("groupoid", "give either a preset or a table with an action")),
    }
}

fn check_task_fields(cfg: &RunConfig) -> Result<(), ConfigError> {
    let needs = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(ConfigError::invalid("task", format!("`{}` needs {what}", cfg.task)))
        }
    };
    let has_algebroid = !matches!(cfg.model, Model::Groupoid(_));
    match cfg.task {
        Task::CheckAlgebroid => Ok(()),
        Task::IntegratePath | Task::Homotopy | Task::OracleSuite => {
            needs(has_algebroid, "a poisson, lie_algebra or algebroid model")
        }
        Task::SymplecticSuite => needs(matches!(cfg.model, Model::Poisson(_)), "a poisson model"),
        Task::EtaleSuite => needs(matches!(cfg.model, Model::Groupoid(_)), "a groupoid model"),
        Task::Convergence => needs(matches!(cfg.model, Model::LieAlgebra { .. }), "a lie_algebra model"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_zero_poisson() {
        let cfg = load_config(r#"{"dim": 2, "poisson": [], "task": "oracle-suite"}"#).unwrap();
        let Model::Poisson(pi) = &cfg.model else { panic!() };
        assert!(pi.is_constant() && pi.matrix_at(&[0.3, 0.1]).unwrap().amax() == 0.0);
        assert_eq!(cfg.task, Task::OracleSuite);
        assert_eq!(cfg.seed(), DEFAULT_SEED);
    }

    #[test]
    fn variable_beyond_dim() {
        let err = load_config(r#"{"dim": 2, "task": "check-algebroid", "poisson": [{"i": 1, "j": 2, "expr": "x3"}]}"#)
            .unwrap_err();
        match &err {
            ConfigError::Expr { field, source } => {
                assert_eq!(field, "poisson[0].expr");
                assert!(matches!(source, ParseError::VariableOutOfRange { index: 3, dim: 2, offset: 0 }));
            }
            other => panic!("{other}"),
        }
        assert_eq!(err.expr_offset(), Some(0));
    }

    #[test]
    fn json_errors_carry_a_path() {
        let err = load_config(r#"{"dim": 2, "task": "homotopy", "poisson": [{"i": 1, "j": "two", "expr": "1"}]}"#)
            .unwrap_err();
        let ConfigError::Json { path, .. } = err else { panic!("{err}") };
        assert_eq!(path, "poisson[0].j");
        let err = load_config(r#"{"dim": 2, "task": "homotopy", "poisson": []"#).unwrap_err();
        assert!(matches!(err, ConfigError::Json { .. }));
    }

    #[test]
    fn missing_fields() {
        let err = load_config(r#"{"task": "homotopy", "poisson": []}"#).unwrap_err();
        assert!(matches!(&err, ConfigError::Missing(f) if f == "dim"), "{err}");
        let err = load_config(r#"{"dim": 2, "poisson": []}"#).unwrap_err();
        assert!(matches!(&err, ConfigError::Missing(f) if f == "task"), "{err}");
        let err = load_config(r#"{"dim": 2, "task": "homotopy"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Missing(_)));
        let err = load_config(r#"{"dim": 2, "task": "homotopy", "poisson": [{"i": 1, "j": 2}]}"#).unwrap_err();
        assert!(matches!(&err, ConfigError::Missing(f) if f == "poisson[0].expr"), "{err}");
    }

    #[test]
    fn overrides_and_task_agreement() {
        let text = r#"{"dim": 0, "task": "convergence", "lie_algebra": {"preset": "so3"}, "numerics": {"seed": 3}}"#;
        let o = Overrides {
            seed: Some(9),
            n_t: Some(17),
            ..Overrides::default()
        };
        let cfg = load_config_with(text, &o).unwrap();
        assert_eq!((cfg.seed(), cfg.n_t(65)), (9, 17));
        let o = Overrides {
            task: Some(Task::Homotopy),
            ..Overrides::default()
        };
        assert!(matches!(load_config_with(text, &o), Err(ConfigError::TaskMismatch { .. })));
    }

    #[test]
    fn task_needs_matching_model() {
        let err = load_config(r#"{"dim": 2, "task": "etale-suite", "poisson": []}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
        let err = load_config(r#"{"dim": 2, "task": "oracle-suite", "poisson": [], "numerics": {"tolerances": {"nope": 1}}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("numerics.tolerances.nope"));
    }

    #[test]
    fn custom_lie_algebra_and_groupoid() {
        let cfg = load_config(
            r#"{"dim": 0, "task": "check-algebroid", "lie_algebra": {"rank": 3, "constants": [
                {"i": 1, "j": 2, "k": 3, "value": 1}, {"i": 2, "j": 3, "k": 1, "value": 1}, {"i": 3, "j": 1, "k": 2, "value": 1}]}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.model, Model::LieAlgebra { so3: true, .. }));
        let cfg = load_config(
            r#"{"dim": 2, "half_width": 1, "task": "etale-suite",
                "groupoid": {"table": [[0, 1], [1, 0]], "action": [["x1", "x2"], ["x2", "x1"]]}}"#,
        )
        .unwrap();
        let Model::Groupoid(g) = &cfg.model else { panic!() };
        assert_eq!(g.order(), 2);
        let err = load_config(
            r#"{"dim": 2, "task": "etale-suite", "groupoid": {"table": [[0, 1], [1, 0]], "action": [["x1", "x2"], ["x2", "x1 +"]]}}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, ConfigError::Expr { field, .. } if field == "groupoid.action[1][1]"), "{err}");
    }
}
