//! Oracle-versus-closed-form checks behind the `validate` command.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::closed_form::{
    heisenberg_pair_correlation, p0_closed, p1_closed, p_multiport_closed, p_onoff_closed, pair_correlation_closed,
};
use crate::detection::{
    delta_grid, g2_numeric, multiport_click_explicit, multiport_click_numeric, onoff_joint_click_numeric,
    onoff_vacuum_marginals,
};
use crate::error::{usage, Result};
use crate::fock::{FockState, Mode, DEFAULT_EXPANSION_BUDGET};
use crate::numfmt::{format_sig, round_sig};
use crate::optics::{herald_through_multiports, herald_through_taps, to_analyzer_basis, MultiportSpec};
use crate::source::{
    build_conditioned_state, build_pdc_state, build_product_form, pair_tail_bound, pm_basis_expansion, Conditioning,
    Cutoff, Gain,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            _ => Err(usage(format!("unknown validation level '{s}' (expected fast or full)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub observed_error: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64, observed_error: f64) -> Self {
        CheckResult {
            name: name.into(),
            tolerance,
            observed_error,
            passed: observed_error.is_finite() && observed_error <= tolerance,
        }
    }

    fn failed(name: &str, tolerance: f64, err: &crate::Error) -> Self {
        CheckResult {
            name: format!("{name} ({err})"),
            tolerance,
            observed_error: f64::INFINITY,
            passed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: Level,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}: error {} (tolerance {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                format_sig(c.observed_error),
                format_sig(c.tolerance)
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }

    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        for c in &mut rounded.checks {
            c.tolerance = round_sig(c.tolerance);
            // JSON has no infinity; a crashed check reports -1.
            c.observed_error = if c.observed_error.is_finite() {
                round_sig(c.observed_error)
            } else {
                -1.0
            };
        }
        let mut s = serde_json::to_string_pretty(&rounded).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Gains and phase grid of the core oracle suite.
pub const SUITE_GAINS: [f64; 4] = [0.1, 0.3, 0.5, 0.8];
pub const SUITE_DELTA_POINTS: usize = 16;

fn run(name: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> CheckResult {
    match f() {
        Ok(e) => CheckResult::new(name, tolerance, e),
        Err(err) => CheckResult::failed(name, tolerance, &err),
    }
}

fn suite_states() -> Result<Vec<(f64, f64, FockState)>> {
    let mut out = Vec::new();
    for &k in &SUITE_GAINS {
        let pdc = build_pdc_state(Gain::new(k)?, Cutoff::Auto)?;
        for d in delta_grid(SUITE_DELTA_POINTS) {
            out.push((k, d, to_analyzer_basis(&pdc, d, 0.0)?));
        }
    }
    Ok(out)
}

fn max_over<F>(states: &[(f64, f64, FockState)], f: F) -> Result<f64>
where
    F: Fn(f64, f64, &FockState) -> Result<f64>,
{
    states.iter().try_fold(0.0_f64, |m, (k, d, s)| Ok(m.max(f(*k, *d, s)?)))
}

/// Largest error of numeric `G2` against the closed form over the suite grid.
pub fn pair_correlation_error() -> Result<f64> {
    let states = suite_states()?;
    max_over(&states, |k, d, s| Ok((g2_numeric(s)?.pair_correlation - pair_correlation_closed(k, d)).abs()))
}

/// Largest error of the numeric joint click probability over the suite grid.
pub fn click_probability_error() -> Result<f64> {
    let states = suite_states()?;
    max_over(&states, |k, d, s| Ok((onoff_joint_click_numeric(s)? - p_onoff_closed(k, d)).abs()))
}

/// Largest error of numeric `p0`, `p1`, `p2` over the suite grid.
pub fn vacuum_marginal_error() -> Result<f64> {
    let states = suite_states()?;
    max_over(&states, |k, d, s| {
        let m = onoff_vacuum_marginals(s)?;
        let p1 = p1_closed(k, d);
        Ok((m.p0 - p0_closed(k, d)).abs().max((m.p1 - p1).abs()).max((m.p2 - p1).abs()))
    })
}

/// `1 - fidelity` between explicit tap heralding and the conditioned state.
pub fn tap_conditioning_infidelity(k: f64, tau: f64, n_max: usize) -> Result<f64> {
    let gain = Gain::new(k)?;
    let pdc = build_pdc_state(gain, Cutoff::Override(n_max))?;
    let (heralded, _) = herald_through_taps(&pdc, tau, DEFAULT_EXPANSION_BUDGET)?;
    let target = build_conditioned_state(gain, Conditioning::tap(tau)?, Cutoff::Auto)?;
    Ok(1.0 - heralded.fidelity(&target)?)
}

/// `1 - fidelity` between explicit two-sided multiport heralding and the `tau = 1/M` state.
pub fn multiport_conditioning_infidelity(k: f64, ports: u16, n_max: usize) -> Result<f64> {
    let gain = Gain::new(k)?;
    let pdc = build_pdc_state(gain, Cutoff::Override(n_max))?;
    let (heralded, _) = herald_through_multiports(
        &pdc,
        &MultiportSpec::new(crate::fock::Arm::A, ports)?,
        &MultiportSpec::new(crate::fock::Arm::B, ports)?,
        DEFAULT_EXPANSION_BUDGET,
    )?;
    let target = build_conditioned_state(gain, Conditioning::multiport(u32::from(ports))?, Cutoff::Auto)?;
    Ok(1.0 - heralded.fidelity(&target)?)
}

/// Largest gap between the explicit port-expanded multiport click sum and the
/// `M^2`-scaled conditioned path.
pub fn multiport_explicit_error(k: f64, ports: u16, n_max: usize, deltas: &[f64]) -> Result<f64> {
    let gain = Gain::new(k)?;
    deltas.iter().try_fold(0.0_f64, |m, &d| {
        let explicit = multiport_click_explicit(gain, ports, d, n_max, DEFAULT_EXPANSION_BUDGET)?;
        let scaled = multiport_click_numeric(gain, u32::from(ports), d, Cutoff::Auto)?;
        Ok(m.max((explicit.total - scaled).abs()))
    })
}

/// Largest gap between the `M^2`-scaled conditioned click probability and its closed form.
pub fn multiport_closed_error(k: f64, ports: u32, deltas: &[f64]) -> Result<f64> {
    let gain = Gain::new(k)?;
    deltas.iter().try_fold(0.0_f64, |m, &d| {
        let v = multiport_click_numeric(gain, ports, d, Cutoff::Auto)?;
        Ok(m.max((v - p_multiport_closed(k, ports, d)).abs()))
    })
}

/// Largest gap between the Heisenberg-picture `G2` and the closed form.
pub fn heisenberg_error(gains: &[f64], deltas: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &k in gains {
        for &d in deltas {
            // phi_b is shifted as well: only the difference may matter.
            let h = heisenberg_pair_correlation(k, d + 0.3, 0.3);
            worst = worst.max((h - pair_correlation_closed(k, d)).abs());
        }
    }
    worst
}

/// Amplitude-wise gap between the binomial analyzer-basis expansion and the
/// rotated Fock state.
pub fn pm_expansion_error(k: f64, phi_a: f64, phi_b: f64, n_max: usize) -> Result<f64> {
    let gain = Gain::new(k)?;
    let direct = pm_basis_expansion(gain, phi_a, phi_b, Cutoff::Override(n_max))?;
    let rotated = to_analyzer_basis(&build_pdc_state(gain, Cutoff::Override(n_max))?, phi_a, phi_b)?;
    direct.max_amplitude_difference(&rotated)
}

/// Amplitude-wise gap between the product of two-mode squeezers and the layer form.
pub fn product_form_error(k: f64) -> Result<f64> {
    let gain = Gain::new(k)?;
    build_product_form(gain, Cutoff::Auto)?.max_amplitude_difference(&build_pdc_state(gain, Cutoff::Auto)?)
}

/// One row of the cutoff convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n_max: usize,
    pub tail_bound: f64,
    pub error: f64,
}

/// `G2` error at `delta = pi` for increasing cutoffs.
pub fn convergence_study(k: f64, cutoffs: &[usize]) -> Result<Vec<ConvergencePoint>> {
    let gain = Gain::new(k)?;
    let t2 = gain.ratio().powi(2);
    cutoffs
        .iter()
        .map(|&n| {
            let pm = to_analyzer_basis(&build_pdc_state(gain, Cutoff::Override(n))?, PI, 0.0)?;
            Ok(ConvergencePoint {
                n_max: n,
                tail_bound: pair_tail_bound(t2, n),
                error: (pm.normal_ordered_pair_correlation(Mode::A_PLUS, Mode::B_PLUS)? - pair_correlation_closed(k, PI))
                    .abs(),
            })
        })
        .collect()
}

/// Convergence check: errors must not grow with the cutoff, and each error
/// must stay below `(2 n_max + 4)^2` times the tail bound (the photon-number
/// weight of the discarded layers). Returns the worst violation ratio.
fn convergence_violation(points: &[ConvergencePoint]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in points.windows(2) {
        if w[1].error > w[0].error {
            worst = worst.max(f64::INFINITY);
        }
    }
    for p in points {
        let bound = ((2 * p.n_max + 4) as f64).powi(2) * p.tail_bound;
        worst = worst.max(p.error / bound);
    }
    worst
}

pub fn cmd_validate(level: Level) -> ValidationReport {
    let edges = [0.0, PI / 2.0, PI, 1.0];
    let mut checks = vec![
        run("pair correlation vs closed form (16-point grid)", 1e-6, pair_correlation_error),
        run("joint click probability vs closed form (16-point grid)", 1e-6, click_probability_error),
        run("vacuum marginals p0, p1, p2 vs closed forms", 1e-6, vacuum_marginal_error),
        run("tap heralding vs conditioned state, K=0.5 tau=0.25", 1e-8, || {
            tap_conditioning_infidelity(0.5, 0.25, 10)
        }),
        run("tap heralding vs conditioned state, K=0.5 tau=0.5", 1e-8, || {
            tap_conditioning_infidelity(0.5, 0.5, 10)
        }),
        run("two-port multiport heralding vs tau=1/2 state, K=0.5", 1e-8, || {
            multiport_conditioning_infidelity(0.5, 2, 10)
        }),
        run("explicit two-port clicks vs scaled conditioned path, K=0.5", 1e-8, || {
            multiport_explicit_error(0.5, 2, 9, &edges)
        }),
        run("scaled two-port clicks vs closed form, K=0.5", 1e-6, || {
            multiport_closed_error(0.5, 2, &delta_grid(SUITE_DELTA_POINTS))
        }),
        run("Heisenberg-picture pair correlation vs closed form", 1e-12, || {
            Ok(heisenberg_error(&[0.0, 0.1, 0.3, 0.5, 0.8, 1.0, 1.5], &delta_grid(SUITE_DELTA_POINTS)))
        }),
        run("binomial analyzer-basis expansion vs rotation, K=0.6", 1e-10, || {
            pm_expansion_error(0.6, 0.7, -0.4, 12)
        }),
        run("two-mode squeezer product vs layer form", 1e-12, || {
            [0.3, 0.8, 1.2].iter().try_fold(0.0_f64, |m, &k| Ok(m.max(product_form_error(k)?)))
        }),
    ];
    if level == Level::Full {
        checks.push(run("cutoff convergence at K=0.8 (error / weighted tail bound)", 1.0, || {
            Ok(convergence_violation(&convergence_study(0.8, &[4, 8, 12, 16, 20, 24])?))
        }));
        checks.push(run("explicit three-port clicks vs scaled conditioned path, K=0.3", 1e-8, || {
            multiport_explicit_error(0.3, 3, 4, &[0.0, PI])
        }));
        checks.push(run("scaled multiport clicks vs closed form, K=1, M=3,5", 1e-6, || {
            let g = delta_grid(SUITE_DELTA_POINTS);
            Ok(multiport_closed_error(1.0, 3, &g)?.max(multiport_closed_error(1.0, 5, &g)?))
        }));
    }
    ValidationReport { level, checks }
}
