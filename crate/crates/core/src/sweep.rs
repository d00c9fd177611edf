//! Parameter sweeps over stability classifiers, written as CSV grids.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{model_jacobian, ModelParams};
use crate::oracle::oracle_max_real_part;
use crate::splay::{antipodal_pairs_family, random_splay, twisted_state, SplayState};
use crate::stability::{
    adaptive_quartic, hopf_boundary, inertia_report, ks_traces, planar_report, BoundaryQuery,
    Classification, HopfBoundaryPoint, StabilityReport, TraceSet,
};

/// Every name an axis or fixed parameter may carry.
pub const PARAMETER_NAMES: [&str; 9] = [
    "alpha", "gamma", "sigma", "epsilon", "beta", "r2", "trL", "trL2", "delta",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModel {
    /// Abstract `(trL, trL2)` plane of a first-order phase model.
    Plain,
    /// Abstract `(trL, trL2)` with damping `gamma`.
    Inertia,
    /// Kuramoto-Sakaguchi 1-splay states.
    Ks,
    /// Kuramoto-Sakaguchi with inertia (unit mass).
    KsInertia,
    /// Adaptive network at a 2-splay state.
    Adaptive,
}

impl SweepModel {
    fn allowed(self) -> &'static [&'static str] {
        match self {
            SweepModel::Plain => &["trL", "trL2"],
            SweepModel::Inertia => &["trL", "trL2", "gamma"],
            SweepModel::Ks => &["alpha", "sigma", "r2", "delta"],
            SweepModel::KsInertia => &["alpha", "gamma", "sigma", "r2", "delta"],
            SweepModel::Adaptive => &["alpha", "beta", "epsilon", "sigma"],
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            SweepModel::Plain => &["trL", "trL2"],
            SweepModel::Inertia => &["trL", "trL2", "gamma"],
            SweepModel::Ks => &["alpha"],
            SweepModel::KsInertia => &["alpha", "gamma"],
            SweepModel::Adaptive => &["alpha", "beta", "epsilon"],
        }
    }

    /// Number of analytic eigenvalues per row.
    pub fn eigenvalue_count(self) -> usize {
        match self {
            SweepModel::Plain | SweepModel::Ks => 2,
            _ => 4,
        }
    }

    fn has_concrete_state(self) -> bool {
        matches!(self, SweepModel::Ks | SweepModel::KsInertia | SweepModel::Adaptive)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// Where concrete splay states come from when an axis does not fix them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateSource {
    Twisted { n: usize, k: usize },
    AntipodalPairs { n: usize, deltas: Vec<f64> },
    Random { n: usize, seed: u64 },
}

impl StateSource {
    pub fn build(&self, m: u32) -> Result<SplayState> {
        let state = match self {
            StateSource::Twisted { n, k } => twisted_state(*n, *k)?,
            StateSource::AntipodalPairs { n, deltas } => antipodal_pairs_family(*n, deltas)?,
            StateSource::Random { n, seed } => return random_splay(*n, m, *seed),
        };
        if state.m == m {
            Ok(state)
        } else {
            // equidistant and antipodal constructions are built as 1-splay states
            SplayState::new(state.theta, m, state.tol)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: SweepModel,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub state: Option<StateSource>,
    /// Cross-check every point against the numeric spectrum of a concrete Jacobian.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(msg));
        if self.axes.is_empty() || self.axes.len() > 3 {
            return bad(format!("need 1 to 3 axes, got {}", self.axes.len()));
        }
        let allowed = self.model.allowed();
        let mut seen: Vec<&str> = Vec::new();
        for a in &self.axes {
            if !PARAMETER_NAMES.contains(&a.name.as_str()) {
                return bad(format!("unknown parameter '{}'", a.name));
            }
            if !allowed.contains(&a.name.as_str()) {
                return bad(format!("axis '{}' does not apply to this model", a.name));
            }
            if a.count < 2 {
                return bad(format!("axis '{}' needs count >= 2", a.name));
            }
            if !(a.min.is_finite() && a.max.is_finite()) {
                return bad(format!("axis '{}' has non-finite bounds", a.name));
            }
            if seen.contains(&a.name.as_str()) || self.fixed.contains_key(&a.name) {
                return bad(format!("parameter '{}' given twice", a.name));
            }
            seen.push(&a.name);
        }
        for (k, v) in &self.fixed {
            if !allowed.contains(&k.as_str()) {
                return bad(format!("fixed parameter '{k}' does not apply to this model"));
            }
            if !v.is_finite() {
                return bad(format!("fixed parameter '{k}' is not finite"));
            }
        }
        let given = |name: &str| seen.contains(&name) || self.fixed.contains_key(name);
        for r in self.model.required() {
            if !given(r) {
                return bad(format!("parameter '{r}' must be an axis or fixed"));
            }
        }
        if given("r2") && given("delta") {
            return bad("give at most one of 'r2' and 'delta'".into());
        }
        if matches!(self.model, SweepModel::Ks | SweepModel::KsInertia)
            && !given("r2")
            && !given("delta")
            && self.state.is_none()
        {
            return bad("needs an 'r2' or 'delta' parameter or a state source".into());
        }
        if self.oracle && !self.model.has_concrete_state() {
            return bad("oracle cross-check needs a concrete-state model".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        Ok(())
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Grid indices of flat point `k`, last axis fastest.
    pub fn indices(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = k % a.count;
            k /= a.count;
        }
        idx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub classification: Classification,
    pub max_real_part: f64,
    pub eigenvalues: Vec<Complex64>,
    pub oracle_max_re: Option<f64>,
    /// `Some(true)` iff analytic and oracle verdicts match or the point is Marginal.
    pub agree: Option<bool>,
}

struct Point<'a> {
    params: BTreeMap<&'a str, f64>,
}

impl Point<'_> {
    fn get(&self, k: &str) -> Option<f64> {
        self.params.get(k).copied()
    }

    fn need(&self, k: &'static str) -> f64 {
        // presence is checked by SweepConfig::validate
        self.get(k).unwrap_or(f64::NAN)
    }
}

struct Evaluator<'a> {
    config: &'a SweepConfig,
    /// State used when no axis fixes one.
    base_state: Option<SplayState>,
}

impl Evaluator<'_> {
    fn state_for(&self, p: &Point) -> Result<Option<SplayState>> {
        if let Some(r2) = p.get("r2") {
            if !(0.0..=1.0).contains(&r2) {
                return Err(Error::InvalidSweep(format!("r2 = {r2} outside [0, 1]")));
            }
            return antipodal_pairs_family(4, &[r2.acos()]).map(Some);
        }
        if let Some(d) = p.get("delta") {
            return antipodal_pairs_family(4, &[d]).map(Some);
        }
        Ok(self.base_state.clone())
    }

    fn evaluate(&self, p: &Point) -> Result<(StabilityReport, Option<f64>)> {
        let sigma = p.get("sigma").unwrap_or(1.0);
        let model = self.config.model;
        let (report, params, state) = match model {
            SweepModel::Plain => (
                planar_report(&TraceSet::plain(p.need("trL"), p.need("trL2"))),
                None,
                None,
            ),
            SweepModel::Inertia => (
                inertia_report(p.need("gamma"), &TraceSet::plain(p.need("trL"), p.need("trL2")))?,
                None,
                None,
            ),
            SweepModel::Ks | SweepModel::KsInertia => {
                let state = self.state_for(p)?;
                let r2 = match (p.get("r2"), &state) {
                    (Some(r2), _) => r2,
                    (None, Some(s)) => s.r2,
                    (None, None) => return Err(Error::InvalidSweep("no state for R2".into())),
                };
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "sigma",
                        reason: "coupling must be > 0".into(),
                    });
                }
                let traces = ks_traces(sigma, p.need("alpha"), r2);
                if model == SweepModel::Ks {
                    let params = ModelParams::KuramotoSakaguchi {
                        omega: 0.0,
                        alpha: p.need("alpha"),
                        sigma,
                    };
                    (planar_report(&traces), Some(params), state)
                } else {
                    let params = ModelParams::Inertia {
                        m_inertia: 1.0,
                        gamma: p.need("gamma"),
                        p: 0.0,
                        sigma,
                        alpha: p.need("alpha"),
                    };
                    (inertia_report(p.need("gamma"), &traces)?, Some(params), state)
                }
            }
            SweepModel::Adaptive => {
                let params = ModelParams::Adaptive {
                    omega: 0.0,
                    epsilon: p.need("epsilon"),
                    alpha: p.need("alpha"),
                    beta: p.need("beta"),
                    sigma,
                };
                let state = self
                    .base_state
                    .clone()
                    .ok_or_else(|| Error::InvalidSweep("no state".into()))?;
                let blocks = model_jacobian(&state.theta, &params, state.tol)?;
                let q = adaptive_quartic(&blocks.traces, p.need("epsilon"))?;
                (
                    StabilityReport::from_eigenvalues(q.roots.to_vec()),
                    Some(params),
                    Some(state),
                )
            }
        };
        let oracle = if self.config.oracle {
            match (params, state) {
                (Some(params), Some(state)) => {
                    let blocks = model_jacobian(&state.theta, &params, state.tol)?;
                    Some(oracle_max_real_part(&blocks)?)
                }
                _ => None,
            }
        } else {
            None
        };
        Ok((report, oracle))
    }
}

/// Evaluate every grid point. Rows come back in row-major order (last axis
/// fastest) whatever the degree of parallelism.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let m = if config.model == SweepModel::Adaptive { 2 } else { 1 };
    let base_state = match (&config.state, config.model) {
        (Some(src), _) => Some(src.build(m)?),
        (None, SweepModel::Adaptive) => Some(random_splay(6, 2, 0)?),
        (None, _) => None,
    };
    let eval = Evaluator { config, base_state };

    let compute = |k: usize| -> Result<SweepRow> {
        let indices = config.indices(k);
        let values: Vec<f64> = indices
            .iter()
            .zip(&config.axes)
            .map(|(&i, a)| a.value(i))
            .collect();
        let mut params: BTreeMap<&str, f64> =
            config.fixed.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        for (a, v) in config.axes.iter().zip(&values) {
            params.insert(a.name.as_str(), *v);
        }
        let (report, oracle) = eval.evaluate(&Point { params })?;
        let agree = oracle.map(|o| {
            report.classification == Classification::Marginal
                || report.classification.is_stable() == (o < 0.0)
        });
        Ok(SweepRow {
            indices,
            values,
            classification: report.classification,
            max_real_part: report.max_real_part,
            eigenvalues: report.analytic_eigenvalues,
            oracle_max_re: oracle,
            agree,
        })
    };

    let total = config.total_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidSweep(format!("thread pool: {e}")))?;
    pool.install(|| (0..total).into_par_iter().map(compute).collect())
}

/// Float format shared by every CSV: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(config: &SweepConfig) -> String {
    let mut cols: Vec<String> = (0..config.axes.len()).map(|i| format!("idx{i}")).collect();
    cols.extend(config.axes.iter().map(|a| a.name.clone()));
    cols.push("class".into());
    cols.push("max_re".into());
    for i in 1..=config.model.eigenvalue_count() {
        cols.push(format!("re{i}"));
        cols.push(format!("im{i}"));
    }
    cols.push("oracle_max_re".into());
    cols.push("agree".into());
    cols.join(",")
}

pub fn write_sweep_csv<W: Write>(config: &SweepConfig, rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{}", csv_header(config))?;
    let width = config.model.eigenvalue_count();
    for row in rows {
        let mut cols: Vec<String> = row.indices.iter().map(|i| i.to_string()).collect();
        cols.extend(row.values.iter().map(|&v| fmt_float(v)));
        cols.push(row.classification.as_str().into());
        cols.push(fmt_float(row.max_real_part));
        for i in 0..width {
            let z = row.eigenvalues.get(i).copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            cols.push(fmt_float(z.re));
            cols.push(fmt_float(z.im));
        }
        cols.push(row.oracle_max_re.map_or("na".into(), fmt_float));
        cols.push(row.agree.map_or("na".into(), |a| a.to_string()));
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Run the sweep and write the CSV to `path` (or the config's output path).
pub fn run_sweep_to_file(config: &SweepConfig, path: Option<&Path>) -> Result<Vec<SweepRow>> {
    let target = path
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .ok_or_else(|| Error::InvalidSweep("no output path".into()))?;
    let rows = run_sweep(config)?;
    let mut w = BufWriter::new(File::create(&target)?);
    write_sweep_csv(config, &rows, &mut w)?;
    w.flush()?;
    Ok(rows)
}

/// Analytic boundary curves for overlays.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryKind {
    /// Saddle boundary `trL2 = trL^2` and node/focus boundary `trL2 = trL^2 / 2`.
    Planar,
    /// Hopf surface of the generic inertia quartic at fixed `gamma`, over `trL`.
    InertiaGeneric { gamma: f64 },
    /// Hopf surface of KS with inertia at fixed `(gamma, sigma)`, over `alpha`.
    KsInertia { gamma: f64, sigma: f64 },
}

/// Write a boundary CSV sampled at `count` points of `[min, max]`.
/// Hopf points without a real crossing frequency are skipped.
pub fn write_boundary_csv<W: Write>(kind: BoundaryKind, min: f64, max: f64, count: usize, mut w: W) -> Result<usize> {
    if count < 2 {
        return Err(Error::InvalidSweep("boundary needs count >= 2".into()));
    }
    let axis = Axis {
        name: String::new(),
        min,
        max,
        count,
    };
    let mut rows = 0;
    match kind {
        BoundaryKind::Planar => {
            writeln!(w, "trL,saddle_trL2,node_focus_trL2")?;
            for i in 0..count {
                let t = axis.value(i);
                writeln!(w, "{},{},{}", fmt_float(t), fmt_float(t * t), fmt_float(0.5 * t * t))?;
                rows += 1;
            }
        }
        BoundaryKind::InertiaGeneric { gamma } => {
            writeln!(w, "trL,trL2,v,residual,linear_trL2,linear_residual")?;
            for i in 0..count {
                let q = BoundaryQuery::InertiaGeneric { gamma, tr_l: axis.value(i) };
                if let Some(p) = boundary_point(q)? {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        fmt_float(axis.value(i)),
                        fmt_float(p.value),
                        fmt_float(p.crossing_frequency),
                        fmt_float(p.residual),
                        fmt_float(p.linear_variant_value),
                        fmt_float(p.linear_variant_residual)
                    )?;
                    rows += 1;
                }
            }
        }
        BoundaryKind::KsInertia { gamma, sigma } => {
            writeln!(w, "alpha,r2_sq,r2,v,residual,linear_r2_sq,linear_residual,physical")?;
            for i in 0..count {
                let alpha = axis.value(i);
                let q = BoundaryQuery::KsInertia { gamma, sigma, alpha };
                if let Some(p) = boundary_point(q)? {
                    let r2 = if p.value >= 0.0 { fmt_float(p.value.sqrt()) } else { "na".into() };
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        fmt_float(alpha),
                        fmt_float(p.value),
                        r2,
                        fmt_float(p.crossing_frequency),
                        fmt_float(p.residual),
                        fmt_float(p.linear_variant_value),
                        fmt_float(p.linear_variant_residual),
                        p.physical
                    )?;
                    rows += 1;
                }
            }
        }
    }
    Ok(rows)
}

fn boundary_point(q: BoundaryQuery) -> Result<Option<HopfBoundaryPoint>> {
    match hopf_boundary(q) {
        Ok(p) => Ok(Some(p)),
        Err(Error::NoCrossing(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
