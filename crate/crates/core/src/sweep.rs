//! Parameter sweeps producing visibility and interference datasets, and the
//! critical-value report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{self, critical_gain, critical_tau, v_crit, CriticalValue, GainScheme, THERMAL_VISIBILITY, V_CRIT};
use crate::detection::{delta_grid, DetectionScheme, NumericCurve, MIN_CURVE_POINTS};
use crate::error::{config, usage, validation, Result};
use crate::numfmt::{format_sig, round_sig};
use crate::source::{Cutoff, Gain, K_MAX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Numeric,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig6,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig6 => "fig6",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            "fig6" => Ok(Preset::Fig6),
            _ => Err(usage(format!("unknown preset '{s}' (expected fig2, fig3, fig4 or fig6)"))),
        }
    }

    /// Whether the preset belongs to `visibility` (`true`) or `interference`.
    pub fn is_visibility(self) -> bool {
        !matches!(self, Preset::Fig3)
    }
}

/// Inclusive gain grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GainRange {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(usage(format!("a gain range needs at least 2 steps, got {steps}")));
        }
        for k in [start, stop] {
            if !k.is_finite() || !(0.0..=K_MAX).contains(&k) {
                return Err(usage(format!("gain {k} outside [0, {K_MAX}]")));
            }
        }
        if stop < start {
            return Err(usage(format!("gain range stop {stop} is below start {start}")));
        }
        Ok(GainRange { start, stop, steps })
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

/// One sweep: the schemes become dataset columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRequest {
    pub schemes: Vec<DetectionScheme>,
    pub gains: GainRange,
    pub delta_steps: usize,
    pub n_max: Option<usize>,
    pub method: Method,
    /// Adds constant `v_crit` and `thermal` reference columns to visibility sweeps.
    pub reference_columns: bool,
    pub preset: Option<Preset>,
}

impl SweepRequest {
    pub fn new(schemes: Vec<DetectionScheme>, gains: GainRange) -> Result<Self> {
        if schemes.is_empty() {
            return Err(usage("a sweep needs at least one scheme"));
        }
        Ok(SweepRequest {
            schemes,
            gains,
            delta_steps: MIN_CURVE_POINTS,
            n_max: None,
            method: Method::Closed,
            reference_columns: false,
            preset: None,
        })
    }

    pub fn preset(preset: Preset) -> Self {
        let full = GainRange {
            start: 0.0,
            stop: K_MAX,
            steps: 61,
        };
        let (schemes, gains, reference_columns) = match preset {
            Preset::Fig2 => (vec![DetectionScheme::linear(), DetectionScheme::onoff()], full, true),
            Preset::Fig3 => (
                vec![DetectionScheme::onoff()],
                GainRange {
                    start: 0.5,
                    stop: 1.5,
                    steps: 3,
                },
                false,
            ),
            Preset::Fig4 => (
                [1.0, critical_tau().value, 1.0 / 3.0, 0.1]
                    .iter()
                    .map(|&t| DetectionScheme::hybrid(t).expect("preset transmitivities are valid"))
                    .collect(),
                full,
                false,
            ),
            Preset::Fig6 => (
                [1, 2, 3, 5]
                    .iter()
                    .map(|&m| DetectionScheme::multiport(m).expect("preset port counts are valid"))
                    .collect(),
                full,
                false,
            ),
        };
        SweepRequest {
            schemes,
            gains,
            delta_steps: if preset == Preset::Fig3 { 128 } else { MIN_CURVE_POINTS },
            n_max: None,
            method: Method::Closed,
            reference_columns,
            preset: Some(preset),
        }
    }

    fn cutoff(&self) -> Cutoff {
        match self.n_max {
            Some(n) => Cutoff::Override(n),
            None => Cutoff::Auto,
        }
    }

    fn validate(&self, command: &str) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(usage("a sweep needs at least one scheme"));
        }
        GainRange::new(self.gains.start, self.gains.stop, self.gains.steps)?;
        if command == "interference" && self.delta_steps < 2 {
            return Err(usage("the delta grid needs at least 2 points"));
        }
        if command == "visibility" && self.method == Method::Numeric && self.delta_steps < MIN_CURVE_POINTS {
            return Err(usage(format!(
                "numeric visibilities need at least {MIN_CURVE_POINTS} delta samples"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetMetadata {
    pub command: String,
    pub scheme: String,
    pub method: Method,
    pub parameters: BTreeMap<String, String>,
    pub version: String,
    /// Largest pair-number tail bound over all evaluated states; zero for closed forms.
    pub truncation_tail_bound: f64,
}

/// A table whose first column is the abscissa (`K` or `delta`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveDataset {
    pub metadata: DatasetMetadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveDataset {
    fn checked(metadata: DatasetMetadata, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in &rows {
            if row.len() != columns.len() {
                return Err(validation(format!(
                    "row has {} values for {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(validation(format!("non-finite value {v} in dataset")));
            }
        }
        Ok(CurveDataset { metadata, columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# command: {}", m.command);
        let _ = writeln!(out, "# scheme: {}", m.scheme);
        let _ = writeln!(out, "# method: {}", m.method.name());
        for (k, v) in &m.parameters {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# version: {}", m.version);
        let _ = writeln!(out, "# truncation_tail_bound: {}", format_sig(m.truncation_tail_bound));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_sig(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        rounded.metadata.truncation_tail_bound = round_sig(rounded.metadata.truncation_tail_bound);
        for row in &mut rounded.rows {
            for v in row.iter_mut() {
                *v = round_sig(*v);
            }
        }
        let mut s = serde_json::to_string_pretty(&rounded).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn metadata(command: &str, req: &SweepRequest, tail: f64) -> DatasetMetadata {
    let mut parameters = BTreeMap::new();
    if let Some(p) = req.preset {
        parameters.insert("preset".into(), p.name().into());
    }
    parameters.insert("k_start".into(), format_sig(req.gains.start));
    parameters.insert("k_stop".into(), format_sig(req.gains.stop));
    parameters.insert("k_steps".into(), req.gains.steps.to_string());
    if command == "interference" || req.method == Method::Numeric {
        parameters.insert("delta_steps".into(), req.delta_steps.to_string());
    }
    if let Some(n) = req.n_max {
        parameters.insert("n_max".into(), n.to_string());
    }
    DatasetMetadata {
        command: command.into(),
        scheme: req.schemes.iter().map(|s| s.tag()).collect::<Vec<_>>().join(" "),
        method: req.method,
        parameters,
        version: env!("CARGO_PKG_VERSION").into(),
        truncation_tail_bound: tail,
    }
}

/// Visibility and tail bound of one scheme at one gain.
fn visibility_point(scheme: &DetectionScheme, k: f64, req: &SweepRequest) -> Result<(f64, f64)> {
    match req.method {
        Method::Closed => Ok((closed_form::visibility(scheme, k), 0.0)),
        // The curve vanishes (on-off) or g2 is undefined (linear) at K = 0; report the K -> 0 limit.
        Method::Numeric if k == 0.0 => Ok((1.0, 0.0)),
        Method::Numeric => {
            let curve = NumericCurve::new(*scheme, Gain::new(k)?, req.cutoff())?;
            Ok((curve.visibility(req.delta_steps, k)?.visibility, curve.tail_bound()))
        }
    }
}

fn run_parallel<T, F>(jobs: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| config(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

/// `V(K)` for every requested scheme.
pub fn cmd_visibility(req: &SweepRequest, jobs: Option<usize>) -> Result<CurveDataset> {
    req.validate("visibility")?;
    let grid = req.gains.grid();
    let points: Vec<(f64, Vec<(f64, f64)>)> = run_parallel(jobs, || {
        grid.par_iter()
            .map(|&k| {
                let vals = req
                    .schemes
                    .iter()
                    .map(|s| visibility_point(s, k, req))
                    .collect::<Result<Vec<_>>>()?;
                Ok((k, vals))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut columns = vec!["K".to_string()];
    columns.extend(req.schemes.iter().map(|s| s.tag()));
    if req.reference_columns {
        columns.push("v_crit".into());
        columns.push("thermal".into());
    }
    let mut tail: f64 = 0.0;
    let rows = points
        .into_iter()
        .map(|(k, vals)| {
            let mut row = vec![k];
            for (v, t) in vals {
                row.push(v);
                tail = tail.max(t);
            }
            if req.reference_columns {
                row.push(V_CRIT);
                row.push(THERMAL_VISIBILITY);
            }
            row
        })
        .collect();
    CurveDataset::checked(metadata("visibility", req, tail), columns, rows)
}

/// Interference curves over `delta in [0, 2pi)`, one column per scheme and gain.
pub fn cmd_interference(req: &SweepRequest, jobs: Option<usize>) -> Result<CurveDataset> {
    req.validate("interference")?;
    let gains = req.gains.grid();
    let deltas = delta_grid(req.delta_steps);
    let pairs: Vec<(DetectionScheme, f64)> = req
        .schemes
        .iter()
        .flat_map(|s| gains.iter().map(move |&k| (*s, k)))
        .collect();
    let columns_data: Vec<(Vec<f64>, f64)> = run_parallel(jobs, || {
        pairs
            .par_iter()
            .map(|(scheme, k)| match req.method {
                Method::Closed => {
                    let vals = deltas
                        .iter()
                        .map(|&d| closed_form::curve_value(scheme, *k, d))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((vals, 0.0))
                }
                Method::Numeric => {
                    let curve = NumericCurve::new(*scheme, Gain::new(*k)?, req.cutoff())?;
                    let vals = deltas.iter().map(|&d| curve.value(d)).collect::<Result<Vec<_>>>()?;
                    Ok((vals, curve.tail_bound()))
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut columns = vec!["delta".to_string()];
    columns.extend(pairs.iter().map(|(s, k)| format!("{}_K={}", s.tag(), format_sig(*k))));
    let tail = columns_data.iter().fold(0.0_f64, |t, c| t.max(c.1));
    let rows = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut row = vec![d];
            row.extend(columns_data.iter().map(|c| c.0[i]));
            row
        })
        .collect();
    CurveDataset::checked(metadata("interference", req, tail), columns, rows)
}

/// Runs whichever command the preset belongs to.
pub fn cmd_preset(req: &SweepRequest, jobs: Option<usize>) -> Result<CurveDataset> {
    match req.preset {
        Some(p) if !p.is_visibility() => cmd_interference(req, jobs),
        _ => cmd_visibility(req, jobs),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalReport {
    pub values: Vec<CriticalValue>,
}

pub fn cmd_critical() -> CriticalReport {
    CriticalReport {
        values: vec![
            critical_gain(GainScheme::Linear),
            critical_gain(GainScheme::OnOff),
            critical_tau(),
            v_crit(),
        ],
    }
}

impl CriticalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("name,value,solver_residual\n");
        for v in &self.values {
            let name = serde_json::to_value(v.name).expect("name serializes");
            let _ = writeln!(
                out,
                "{},{},{}",
                name.as_str().unwrap_or_default(),
                format_sig(v.value),
                format_sig(v.solver_residual)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        for v in &mut rounded.values {
            v.value = round_sig(v.value);
            v.solver_residual = round_sig(v.solver_residual);
        }
        let mut s = serde_json::to_string_pretty(&rounded).expect("report serializes");
        s.push('\n');
        s
    }
}
