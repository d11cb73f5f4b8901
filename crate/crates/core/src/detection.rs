//! Detector models evaluated on explicit Fock states: linear-efficiency
//! (normally ordered intensity correlation) and binary on-off clicks, plus
//! the heralded hybrid and multiport variants and visibility extraction from
//! sampled interference curves.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{usage, validation, Error, Result};
use crate::fock::{Arm, FockState, Mode, Polarization};
use crate::numfmt::format_sig;
use crate::optics::{apply_analyzer, apply_multiport, to_analyzer_basis, AnalyzerSetting, MultiportSpec};
use crate::source::{build_conditioned_state, build_pdc_state, singlet_layer, Conditioning as Herald, Cutoff, Gain};

/// Agreement required between the two click-probability evaluation paths.
pub const CLICK_PATH_TOLERANCE: f64 = 1e-12;

/// Minimum number of samples over `[0, 2pi)` for curve-based visibility.
pub const MIN_CURVE_POINTS: usize = 64;

/// Width in `delta` to which golden-section refinement narrows each extremum.
pub const EXTREMUM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Linear,
    OnOff,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    None,
    Tap(f64),
    Multiport(u32),
}

/// Detector model together with the heralding stage in front of it.
///
/// Legal combinations: linear alone, on-off alone, linear behind taps
/// (hybrid), on-off behind multiports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionScheme {
    kind: DetectorKind,
    conditioning: Conditioning,
}

impl DetectionScheme {
    pub fn new(kind: DetectorKind, conditioning: Conditioning) -> Result<Self> {
        match (kind, conditioning) {
            (_, Conditioning::None) => {}
            (DetectorKind::Linear, Conditioning::Tap(tau)) => {
                if !(tau > 0.0 && tau <= 1.0) {
                    return Err(usage(format!("transmitivity must lie in (0, 1], got {tau}")));
                }
            }
            (DetectorKind::OnOff, Conditioning::Multiport(m)) => {
                if m < 1 {
                    return Err(usage("port count must be at least 1"));
                }
            }
            (DetectorKind::Linear, Conditioning::Multiport(_)) => {
                return Err(usage("linear detection is not combined with multiport filtering"));
            }
            (DetectorKind::OnOff, Conditioning::Tap(_)) => {
                return Err(usage("on-off detection is not combined with tap heralding"));
            }
        }
        Ok(DetectionScheme { kind, conditioning })
    }

    pub fn linear() -> Self {
        DetectionScheme {
            kind: DetectorKind::Linear,
            conditioning: Conditioning::None,
        }
    }

    pub fn onoff() -> Self {
        DetectionScheme {
            kind: DetectorKind::OnOff,
            conditioning: Conditioning::None,
        }
    }

    pub fn hybrid(tau: f64) -> Result<Self> {
        Self::new(DetectorKind::Linear, Conditioning::Tap(tau))
    }

    pub fn multiport(ports: u32) -> Result<Self> {
        Self::new(DetectorKind::OnOff, Conditioning::Multiport(ports))
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    /// Short column tag, e.g. `linear`, `hybrid_tau=0.1`, `multiport_M=3`.
    pub fn tag(&self) -> String {
        match self.conditioning {
            Conditioning::None => match self.kind {
                DetectorKind::Linear => "linear".into(),
                DetectorKind::OnOff => "onoff".into(),
            },
            Conditioning::Tap(tau) => format!("hybrid_tau={}", format_sig(tau)),
            Conditioning::Multiport(m) => format!("multiport_M={m}"),
        }
    }
}

/// One sample of an interference curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferencePoint {
    pub delta: f64,
    pub value: f64,
}

impl InterferencePoint {
    pub fn new(delta: f64, value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(validation(format!(
                "interference value must be finite and non-negative, got {value} at delta = {delta}"
            )));
        }
        Ok(InterferencePoint { delta, value })
    }
}

/// Linear-detection readout on a pair of modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    /// Normally ordered coincidence `G2`.
    pub pair_correlation: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl Correlation {
    /// `g2 = G2 / (<N_a> <N_b>)`; undefined when either mean vanishes.
    pub fn normalized(&self) -> Result<f64> {
        let denom = self.mean_a * self.mean_b;
        if denom <= 0.0 {
            return Err(Error::Undefined(
                "g2 is undefined: zero mean photon number".into(),
            ));
        }
        Ok(self.pair_correlation / denom)
    }
}

pub fn g2_numeric_between(state: &FockState, x: Mode, y: Mode) -> Result<Correlation> {
    let pair_correlation = state.normal_ordered_pair_correlation(x, y)?;
    Ok(Correlation {
        pair_correlation,
        mean_a: state.number_expectation(x)?,
        mean_b: state.number_expectation(y)?,
    })
}

/// Linear-detection correlation between `a+` and `b+` of an analyzer-basis state.
pub fn g2_numeric(state_pm: &FockState) -> Result<Correlation> {
    g2_numeric_between(state_pm, Mode::A_PLUS, Mode::B_PLUS)
}

/// Probability that modes `x` and `y` are both non-empty.
///
/// Evaluated by summing the qualifying components and, independently, by
/// inclusion-exclusion over vacuum projections; the two must agree.
pub fn onoff_joint_click_between(state: &FockState, x: Mode, y: Mode) -> Result<f64> {
    if x == y {
        return Err(usage(format!("joint click needs two distinct modes, got {x} twice")));
    }
    state.require_normalized()?;
    let (ix, iy) = (mode_index(state, x)?, mode_index(state, y)?);
    let direct = state.probability_where(|o| o.get(ix) > 0 && o.get(iy) > 0);
    let total = state.norm_sqr();
    let (_, x_empty) = state.project_vacuum(&[x])?;
    let (_, y_empty) = state.project_vacuum(&[y])?;
    let (_, both_empty) = state.project_vacuum(&[x, y])?;
    let by_exclusion = total - x_empty - y_empty + both_empty;
    if (direct - by_exclusion).abs() > CLICK_PATH_TOLERANCE {
        return Err(validation(format!(
            "click probability paths disagree: direct {direct:.15}, inclusion-exclusion {by_exclusion:.15}"
        )));
    }
    Ok(direct)
}

fn mode_index(state: &FockState, mode: Mode) -> Result<usize> {
    state
        .modes()
        .index_of(mode)
        .ok_or_else(|| usage(format!("mode {mode} is not part of {}", state.modes())))
}

/// Joint click probability of the `a+` and `b+` on-off detectors.
pub fn onoff_joint_click_numeric(state_pm: &FockState) -> Result<f64> {
    onoff_joint_click_between(state_pm, Mode::A_PLUS, Mode::B_PLUS)
}

/// Vacuum bookkeeping of the `a+`/`b+` detector pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VacuumMarginals {
    /// Both empty.
    pub p0: f64,
    /// `a+` occupied, `b+` empty.
    pub p1: f64,
    /// `a+` empty, `b+` occupied.
    pub p2: f64,
}

pub fn onoff_vacuum_marginals(state_pm: &FockState) -> Result<VacuumMarginals> {
    let ia = mode_index(state_pm, Mode::A_PLUS)?;
    let ib = mode_index(state_pm, Mode::B_PLUS)?;
    Ok(VacuumMarginals {
        p0: state_pm.probability_where(|o| o.get(ia) == 0 && o.get(ib) == 0),
        p1: state_pm.probability_where(|o| o.get(ia) > 0 && o.get(ib) == 0),
        p2: state_pm.probability_where(|o| o.get(ia) == 0 && o.get(ib) > 0),
    })
}

/// Extremes and contrast of an interference curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VisibilityResult {
    pub max: f64,
    pub min: f64,
    pub visibility: f64,
    pub delta_at_max: f64,
    pub delta_at_min: f64,
    /// Set when the curve is flat (or identically zero) and the visibility is reported as 0.
    pub degenerate: bool,
    pub scheme: Option<DetectionScheme>,
    pub gain: Option<f64>,
}

impl VisibilityResult {
    fn from_extremes(max: (f64, f64), min: (f64, f64)) -> Self {
        let (delta_at_max, vmax) = max;
        let (delta_at_min, vmin) = min;
        let sum = vmax + vmin;
        let degenerate = vmax == vmin || sum <= 0.0;
        let visibility = if degenerate { 0.0 } else { (vmax - vmin) / sum };
        VisibilityResult {
            max: vmax,
            min: vmin,
            visibility,
            delta_at_max,
            delta_at_min,
            degenerate,
            scheme: None,
            gain: None,
        }
    }

    pub fn with_context(mut self, scheme: DetectionScheme, gain: f64) -> Self {
        self.scheme = Some(scheme);
        self.gain = Some(gain);
        self
    }
}

/// `(max - min) / (max + min)` of a sampled curve with at least
/// [`MIN_CURVE_POINTS`] points.
pub fn visibility_from_curve(points: &[InterferencePoint]) -> Result<VisibilityResult> {
    if points.len() < MIN_CURVE_POINTS {
        return Err(usage(format!(
            "curve has {} points; at least {MIN_CURVE_POINTS} are needed to bracket the extremes",
            points.len()
        )));
    }
    let mut max = (points[0].delta, points[0].value);
    let mut min = max;
    for p in &points[1..] {
        if p.value > max.1 {
            max = (p.delta, p.value);
        }
        if p.value < min.1 {
            min = (p.delta, p.value);
        }
    }
    Ok(VisibilityResult::from_extremes(max, min))
}

/// Evenly spaced `delta` grid over `[0, 2pi)`.
pub fn delta_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| TAU * i as f64 / steps as f64).collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > EXTREMUM_TOLERANCE {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Visibility of `f` over `[0, 2pi)`: dense sampling followed by
/// golden-section refinement of both extremes.
pub fn refined_visibility<F>(f: F, samples: usize) -> Result<VisibilityResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid = delta_grid(samples.max(MIN_CURVE_POINTS));
    let step = TAU / grid.len() as f64;
    let points = grid
        .iter()
        .map(|&d| InterferencePoint::new(d, f(d)?))
        .collect::<Result<Vec<_>>>()?;
    let coarse = visibility_from_curve(&points)?;
    if coarse.degenerate && coarse.max == coarse.min {
        return Ok(coarse);
    }
    let (mut dmax, mut vmax) = (coarse.delta_at_max, coarse.max);
    let (x, v) = golden_max(&f, dmax - step, dmax + step)?;
    if v > vmax {
        dmax = x.rem_euclid(TAU);
        vmax = v;
    }
    let neg = |d: f64| f(d).map(|v| -v);
    let (mut dmin, mut vmin) = (coarse.delta_at_min, coarse.min);
    let (x, v) = golden_max(&neg, dmin - step, dmin + step)?;
    if -v < vmin {
        dmin = x.rem_euclid(TAU);
        vmin = (-v).max(0.0);
    }
    Ok(VisibilityResult::from_extremes((dmax, vmax), (dmin, vmin)))
}

/// Interference curve of a scheme evaluated by Fock-space simulation.
///
/// The heralded source is built once; each evaluation rotates it into the
/// analyzer basis with `phi_a = delta`, `phi_b = 0`. Linear schemes report
/// `g2`, on-off schemes the joint click probability (times `M^2` behind
/// multiports).
#[derive(Clone, Debug)]
pub struct NumericCurve {
    scheme: DetectionScheme,
    source: FockState,
    scale: f64,
}

impl NumericCurve {
    pub fn new(scheme: DetectionScheme, gain: Gain, cutoff: Cutoff) -> Result<Self> {
        let (source, scale) = match scheme.conditioning() {
            Conditioning::None => (build_pdc_state(gain, cutoff)?, 1.0),
            Conditioning::Tap(tau) => (build_conditioned_state(gain, Herald::tap(tau)?, cutoff)?, 1.0),
            Conditioning::Multiport(m) => (
                build_conditioned_state(gain, Herald::multiport(m)?, cutoff)?,
                f64::from(m).powi(2),
            ),
        };
        Ok(NumericCurve { scheme, source, scale })
    }

    pub fn scheme(&self) -> DetectionScheme {
        self.scheme
    }

    /// Truncation tail bound of the source state.
    pub fn tail_bound(&self) -> f64 {
        self.source.truncation_loss()
    }

    pub fn source(&self) -> &FockState {
        &self.source
    }

    pub fn value(&self, delta: f64) -> Result<f64> {
        let pm = to_analyzer_basis(&self.source, delta, 0.0)?;
        match self.scheme.kind() {
            DetectorKind::Linear => g2_numeric(&pm)?.normalized(),
            DetectorKind::OnOff => Ok(self.scale * onoff_joint_click_numeric(&pm)?),
        }
    }

    pub fn visibility(&self, samples: usize, gain: f64) -> Result<VisibilityResult> {
        Ok(refined_visibility(|d| self.value(d), samples)?.with_context(self.scheme, gain))
    }
}

/// `M^2` times the click probability of the `tau = 1/M` heralded state.
pub fn multiport_click_numeric(gain: Gain, ports: u32, delta: f64, cutoff: Cutoff) -> Result<f64> {
    NumericCurve::new(DetectionScheme::multiport(ports)?, gain, cutoff)?.value(delta)
}

/// Multiport click statistics from the fully expanded port modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitMultiportClick {
    /// Sum over all `M^2` single-click port pairs.
    pub total: f64,
    /// Conditional click probability for port pair `(i, j)`, row-major.
    pub per_pair: Vec<f64>,
}

/// Splits both arms of the bright squeezed vacuum into `ports` explicit port
/// modes, places an analyzer on every port, and for each port pair `(i, j)`
/// evaluates the `a_i+`/`b_j+` click probability given vacuum in every other
/// port of both arms.
pub fn multiport_click_explicit(
    gain: Gain,
    ports: u16,
    delta: f64,
    n_max: usize,
    budget: usize,
) -> Result<ExplicitMultiportClick> {
    let pdc = build_pdc_state(gain, Cutoff::Override(n_max))?;
    let mut s = apply_multiport(&pdc, &MultiportSpec::new(Arm::A, ports)?, budget)?;
    s = apply_multiport(&s, &MultiportSpec::new(Arm::B, ports)?, budget)?;
    for port in 1..=ports {
        s = apply_analyzer(&s, &AnalyzerSetting::new(Arm::A, delta).at_port(port))?;
        s = apply_analyzer(&s, &AnalyzerSetting::new(Arm::B, 0.0).at_port(port))?;
    }
    let mut per_pair = Vec::with_capacity(usize::from(ports).pow(2));
    for i in 1..=ports {
        for j in 1..=ports {
            let mut silent = Vec::new();
            for (arm, keep) in [(Arm::A, i), (Arm::B, j)] {
                for port in (1..=ports).filter(|&p| p != keep) {
                    for pol in [Polarization::Plus, Polarization::Minus] {
                        silent.push(Mode::at_port(arm, pol, port));
                    }
                }
            }
            let (conditioned, _) = s.project_vacuum(&silent)?;
            per_pair.push(onoff_joint_click_between(
                &conditioned,
                Mode::at_port(Arm::A, Polarization::Plus, i),
                Mode::at_port(Arm::B, Polarization::Plus, j),
            )?);
        }
    }
    Ok(ExplicitMultiportClick {
        total: per_pair.iter().sum(),
        per_pair,
    })
}

/// Split of the multiport coincidence sum into singlet layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LayerDecomposition {
    /// `(1 - tanh^2 K / M^2)^2`.
    pub normalization: f64,
    /// Contribution of the one-pair layer alone.
    pub single_pair: f64,
    /// All layers `1..=n_max` summed coherently.
    pub total: f64,
}

/// Evaluates `N' sum |sum_n tanh^n K / M^{n-1} <p,j,k,l|Psi_n>|^2` over click
/// outcomes (`p, k >= 1`), where `Psi_n = sqrt(n+1) psi_n` is the unnormalized
/// `n`-pair layer in the analyzer basis.
pub fn multiport_layer_decomposition(gain: Gain, ports: u32, delta: f64, n_max: usize) -> Result<LayerDecomposition> {
    if ports < 1 {
        return Err(usage("port count must be at least 1"));
    }
    if n_max < 1 {
        return Err(usage("layer decomposition needs at least one pair"));
    }
    let t = gain.ratio();
    let m = f64::from(ports);
    let normalization = (1.0 - t * t / (m * m)).powi(2);
    let clicks = |s: &FockState| s.probability_where(|o| o.get(0) > 0 && o.get(2) > 0);
    let mut sum: Option<FockState> = None;
    let mut single_pair = 0.0;
    for n in 1..=n_max {
        let layer = singlet_layer(n)?;
        let pm = to_analyzer_basis(&layer.state, delta, 0.0)?.truncate_pairs(n_max);
        let w = ((n + 1) as f64).sqrt() * t.powi(n as i32) / m.powi(n as i32 - 1);
        let term = pm.scale(Complex64::new(w, 0.0));
        if n == 1 {
            single_pair = normalization * clicks(&term);
        }
        sum = Some(match sum {
            None => term,
            Some(acc) => acc.add_scaled(&term, Complex64::new(1.0, 0.0))?,
        });
    }
    let total = normalization * clicks(sum.as_ref().expect("at least one layer"));
    Ok(LayerDecomposition {
        normalization,
        single_pair,
        total,
    })
}
