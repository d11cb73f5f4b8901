//! Analytic visibilities, interference curves and critical parameters.
//!
//! These are the reference formulas that the Fock-space simulations in
//! [`crate::detection`] are checked against.

mod heisenberg;

pub use heisenberg::{
    bogoliubov_transform_table, heisenberg_anomalous_correlation, heisenberg_mean_photon_number,
    heisenberg_pair_correlation, vacuum_expectation_pair, vacuum_expectation_quartic, BogoliubovEntry,
    LadderCombination, LadderOperator,
};

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::detection::{Conditioning as SchemeConditioning, DetectionScheme, DetectorKind};
use crate::error::{Error, Result};

/// Visibility benchmark for nonclassical two-photon interference.
pub const V_CRIT: f64 = FRAC_1_SQRT_2;

/// Visibility of thermal light.
pub const THERMAL_VISIBILITY: f64 = 1.0 / 3.0;

fn half_sin_sq(delta: f64) -> f64 {
    (delta / 2.0).sin().powi(2)
}

/// Linear-detection visibility `1 / (1 + 2 tanh^2 K)`.
pub fn v2_linear(k: f64) -> f64 {
    1.0 / (1.0 + 2.0 * k.tanh().powi(2))
}

/// On-off detection visibility `1 / (2 cosh^2 K - 1)`.
pub fn v2_onoff(k: f64) -> f64 {
    1.0 / (2.0 * k.cosh().powi(2) - 1.0)
}

/// Tap-heralded linear-detection visibility `1 / (1 + 2 tau^2 tanh^2 K)`.
pub fn v2_hybrid(k: f64, tau: f64) -> f64 {
    1.0 / (1.0 + 2.0 * tau * tau * k.tanh().powi(2))
}

/// Multiport-filtered on-off visibility `(1 - x) / (1 + x)`, `x = tanh^2 K / M^2`.
pub fn v2_multiport(k: f64, ports: u32) -> f64 {
    let x = k.tanh().powi(2) / f64::from(ports).powi(2);
    (1.0 - x) / (1.0 + x)
}

pub fn mean_photon_number(k: f64) -> f64 {
    k.sinh().powi(2)
}

/// Normally ordered coincidence `G2 = sinh^2 K (sinh^2 K + cosh^2 K sin^2(delta/2))`.
pub fn pair_correlation_closed(k: f64, delta: f64) -> f64 {
    let s2 = k.sinh().powi(2);
    s2 * (s2 + k.cosh().powi(2) * half_sin_sq(delta))
}

/// `G2` for a layer series with ratio `r` (`r = tau tanh K` after heralding).
pub fn pair_correlation_for_ratio(r: f64, delta: f64) -> f64 {
    let x = r * r;
    let s2 = x / (1.0 - x);
    let c2 = 1.0 / (1.0 - x);
    s2 * (s2 + c2 * half_sin_sq(delta))
}

/// Normalized coherence `g2 = 1 + sin^2(delta/2) + sin^2(delta/2) / sinh^2 K`.
pub fn g2_closed(k: f64, delta: f64) -> Result<f64> {
    if k <= 0.0 {
        return Err(Error::Undefined(
            "g2 is undefined for K = 0: the vacuum has no photons".into(),
        ));
    }
    let s = half_sin_sq(delta);
    Ok(1.0 + s + s / k.sinh().powi(2))
}

/// `g2` for a layer series with ratio `r`.
pub fn g2_for_ratio(r: f64, delta: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Undefined("g2 is undefined for a vacuum state".into()));
    }
    let x = r * r;
    let s = half_sin_sq(delta);
    Ok(1.0 + s + s * (1.0 - x) / x)
}

/// Joint on-off click probability
/// `1 - 2/cosh^2 K + 1 / (cosh^4 K (1 - tanh^2 K sin^2(delta/2)))`.
pub fn p_onoff_closed(k: f64, delta: f64) -> f64 {
    let inv_c2 = 1.0 / k.cosh().powi(2);
    1.0 - 2.0 * inv_c2 + inv_c2 * inv_c2 / (1.0 - k.tanh().powi(2) * half_sin_sq(delta))
}

/// Sum of single-click coincidences behind two `M`-port splitters,
/// `M^2 {1 - 2(1 - x) + (1 - x)^2 / (1 - x sin^2(delta/2))}`, `x = tanh^2 K / M^2`.
pub fn p_multiport_closed(k: f64, ports: u32, delta: f64) -> f64 {
    let m2 = f64::from(ports).powi(2);
    let x = k.tanh().powi(2) / m2;
    m2 * (1.0 - 2.0 * (1.0 - x) + (1.0 - x).powi(2) / (1.0 - x * half_sin_sq(delta)))
}

/// Large-`M` limit of [`p_multiport_closed`]: only the one-pair layer survives.
pub fn p_multiport_singlet_limit(k: f64, delta: f64) -> f64 {
    k.tanh().powi(2) * half_sin_sq(delta)
}

/// Probability that both `a+` and `b+` are empty.
pub fn p0_closed(k: f64, delta: f64) -> f64 {
    1.0 / k.cosh().powi(4) / (1.0 - k.tanh().powi(2) * half_sin_sq(delta))
}

/// Probability that `a+` is occupied while `b+` is empty.
pub fn p1_closed(k: f64, delta: f64) -> f64 {
    let c2 = k.cosh().powi(2);
    (c2 - 1.0 / (1.0 - k.tanh().powi(2) * half_sin_sq(delta))) / (c2 * c2)
}

/// Probability of finding vacuum in every reflected tap mode.
pub fn herald_probability_closed(k: f64, tau: f64) -> f64 {
    1.0 / (k.cosh().powi(4) * (1.0 - tau * tau * k.tanh().powi(2)).powi(2))
}

/// Magnitude of `<0, j, 0, j | Psi>` in the analyzer basis.
pub fn vacuum_plus_amplitude(k: f64, delta: f64, j: u32) -> f64 {
    (k.tanh() * (delta / 2.0).sin()).abs().powi(j as i32) / k.cosh().powi(2)
}

/// Closed-form visibility for any legal detection scheme.
pub fn visibility(scheme: &DetectionScheme, k: f64) -> f64 {
    match (scheme.kind(), scheme.conditioning()) {
        (DetectorKind::Linear, SchemeConditioning::Tap(tau)) => v2_hybrid(k, tau),
        (DetectorKind::Linear, _) => v2_linear(k),
        (DetectorKind::OnOff, SchemeConditioning::Multiport(m)) => v2_multiport(k, m),
        (DetectorKind::OnOff, _) => v2_onoff(k),
    }
}

/// Closed-form interference curve value: `g2` for linear schemes, click
/// probability for on-off schemes.
pub fn curve_value(scheme: &DetectionScheme, k: f64, delta: f64) -> Result<f64> {
    match (scheme.kind(), scheme.conditioning()) {
        (DetectorKind::Linear, SchemeConditioning::Tap(tau)) => g2_for_ratio(tau * k.tanh(), delta),
        (DetectorKind::Linear, _) => g2_closed(k, delta),
        (DetectorKind::OnOff, SchemeConditioning::Multiport(m)) => Ok(p_multiport_closed(k, m, delta)),
        (DetectorKind::OnOff, _) => Ok(p_onoff_closed(k, delta)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalName {
    KCritLinear,
    KCritOnoff,
    TauCrit,
    VCrit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalValue {
    pub name: CriticalName,
    pub value: f64,
    /// `V(value) - 1/sqrt2` for solved values; zero for exact ones.
    pub solver_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainScheme {
    Linear,
    OnOff,
}

/// Bisection for the root of a decreasing function on `[lo, hi]`.
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Gain at which the visibility of the scheme falls to `1/sqrt2`.
pub fn critical_gain(scheme: GainScheme) -> CriticalValue {
    let (name, v): (CriticalName, fn(f64) -> f64) = match scheme {
        GainScheme::Linear => (CriticalName::KCritLinear, v2_linear),
        GainScheme::OnOff => (CriticalName::KCritOnoff, v2_onoff),
    };
    let root = bisect_decreasing(|k| v(k) - V_CRIT, 0.0, 2.0);
    CriticalValue {
        name,
        value: root,
        solver_residual: v(root) - V_CRIT,
    }
}

/// `tau_crit = (1/sqrt2 - 1/2)^{1/2}`: the hybrid visibility tends to `1/sqrt2`
/// as `K` grows and stays above it for every smaller `tau`.
pub fn critical_tau() -> CriticalValue {
    let value = (V_CRIT - 0.5).sqrt();
    CriticalValue {
        name: CriticalName::TauCrit,
        value,
        solver_residual: 1.0 / (1.0 + 2.0 * value * value) - V_CRIT,
    }
}

pub fn v_crit() -> CriticalValue {
    CriticalValue {
        name: CriticalName::VCrit,
        value: V_CRIT,
        solver_residual: 0.0,
    }
}
