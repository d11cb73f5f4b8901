//! Passive linear optics: polarization analyzers, asymmetric taps and
//! balanced multiport splitters.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{usage, Result};
use crate::fock::{Arm, FockState, Mode, Polarization, TwoModeUnitary};

/// Elliptic polarization analyzer on one arm. The phase is kept in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzerSetting {
    side: Arm,
    phase: f64,
    port: u16,
}

impl AnalyzerSetting {
    pub fn new(side: Arm, phase: f64) -> Self {
        AnalyzerSetting {
            side,
            phase: phase.rem_euclid(TAU),
            port: 0,
        }
    }

    /// Same analyzer placed on a splitter output port.
    pub fn at_port(self, port: u16) -> Self {
        AnalyzerSetting { port, ..self }
    }

    pub fn side(&self) -> Arm {
        self.side
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    fn mode(&self, pol: Polarization) -> Mode {
        Mode::at_port(self.side, pol, self.port)
    }
}

/// Maps the side's `(H, V)` pair to analyzer outputs `(+, -)` with
/// `c_+- = (a_H +- e^{i phi} a_V) / sqrt2`.
pub fn apply_analyzer(state: &FockState, setting: &AnalyzerSetting) -> Result<FockState> {
    let h = setting.mode(Polarization::H);
    let v = setting.mode(Polarization::V);
    let rotated = state.mode_pair_rotation(h, v, &TwoModeUnitary::analyzer(setting.phase))?;
    rotated
        .relabel(h, setting.mode(Polarization::Plus))?
        .relabel(v, setting.mode(Polarization::Minus))
}

/// Inverse of [`apply_analyzer`]: restores the `(H, V)` modes.
pub fn undo_analyzer(state: &FockState, setting: &AnalyzerSetting) -> Result<FockState> {
    let p = setting.mode(Polarization::Plus);
    let m = setting.mode(Polarization::Minus);
    let rotated = state.mode_pair_rotation(p, m, &TwoModeUnitary::analyzer(setting.phase).adjoint())?;
    rotated
        .relabel(p, setting.mode(Polarization::H))?
        .relabel(m, setting.mode(Polarization::V))
}

/// Analyzers with phases `phi_a`, `phi_b` on the unsplit arms.
pub fn to_analyzer_basis(state: &FockState, phi_a: f64, phi_b: f64) -> Result<FockState> {
    let s = apply_analyzer(state, &AnalyzerSetting::new(Arm::A, phi_a))?;
    apply_analyzer(&s, &AnalyzerSetting::new(Arm::B, phi_b))
}

/// Asymmetric beam splitter on one arm with transmitivity `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TapSpec {
    side: Arm,
    tau: f64,
}

impl TapSpec {
    pub fn new(side: Arm, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(usage(format!("tap transmitivity must lie in (0, 1), got {tau}")));
        }
        Ok(TapSpec { side, tau })
    }

    pub fn side(&self) -> Arm {
        self.side
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Splits both polarizations of the side into a transmitted port 1
/// (amplitude `sqrt(tau)`) and a reflected port 2 (amplitude `sqrt(1 - tau)`).
pub fn apply_tap(state: &FockState, spec: &TapSpec, budget: usize) -> Result<FockState> {
    let t = Complex64::new(spec.tau.sqrt(), 0.0);
    let r = Complex64::new((1.0 - spec.tau).sqrt(), 0.0);
    let mut s = state.clone();
    for pol in [Polarization::H, Polarization::V] {
        let input = Mode::new(spec.side, pol);
        s = s.split_mode(input, &[(input.with_port(1), t), (input.with_port(2), r)], budget)?;
    }
    Ok(s)
}

/// Balanced `M`-port splitter on one arm.
///
/// Port 1 is the monitored port and has zero phase. The remaining ports carry
/// the phases in `phases` (default all zero); they drop out once those ports
/// are conditioned on vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiportSpec {
    side: Arm,
    ports: u16,
    phases: Vec<f64>,
}

impl MultiportSpec {
    pub fn new(side: Arm, ports: u16) -> Result<Self> {
        if ports < 2 {
            return Err(usage(format!("a multiport needs at least 2 ports, got {ports}")));
        }
        Ok(MultiportSpec {
            side,
            ports,
            phases: vec![0.0; usize::from(ports) - 1],
        })
    }

    /// Phases for ports `2..=M`.
    pub fn with_phases(mut self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != usize::from(self.ports) - 1 {
            return Err(usage(format!(
                "expected {} phases for the unmonitored ports, got {}",
                self.ports - 1,
                phases.len()
            )));
        }
        self.phases = phases;
        Ok(self)
    }

    pub fn side(&self) -> Arm {
        self.side
    }

    pub fn ports(&self) -> u16 {
        self.ports
    }
}

/// Distributes each polarization of the side over ports `1..=M` with amplitude
/// `e^{i theta_k} / sqrt(M)`.
pub fn apply_multiport(state: &FockState, spec: &MultiportSpec, budget: usize) -> Result<FockState> {
    let amp = 1.0 / f64::from(spec.ports).sqrt();
    let mut s = state.clone();
    for pol in [Polarization::H, Polarization::V] {
        let input = Mode::new(spec.side, pol);
        let outputs: Vec<(Mode, Complex64)> = (1..=spec.ports)
            .map(|k| {
                let theta = if k == 1 { 0.0 } else { spec.phases[usize::from(k) - 2] };
                (input.with_port(k), Complex64::from_polar(amp, theta))
            })
            .collect();
        s = s.split_mode(input, &outputs, budget)?;
    }
    Ok(s)
}

fn monitored_back_to_unsplit(state: &FockState, port: u16) -> Result<FockState> {
    let mut s = state.clone();
    for arm in [Arm::A, Arm::B] {
        for pol in [Polarization::H, Polarization::V] {
            s = s.relabel(Mode::at_port(arm, pol, port), Mode::new(arm, pol))?;
        }
    }
    Ok(s)
}

/// Taps both arms with transmitivity `tau` and keeps the events where both
/// reflected ports are empty.
///
/// Returns the transmitted state (relabeled to the unsplit modes) and the
/// herald probability.
pub fn herald_through_taps(state: &FockState, tau: f64, budget: usize) -> Result<(FockState, f64)> {
    let mut s = state.clone();
    for arm in [Arm::A, Arm::B] {
        s = apply_tap(&s, &TapSpec::new(arm, tau)?, budget)?;
    }
    let reflected: Vec<Mode> = [Arm::A, Arm::B]
        .iter()
        .flat_map(|&arm| [Polarization::H, Polarization::V].map(|pol| Mode::at_port(arm, pol, 2)))
        .collect();
    let (kept, prob) = s.project_vacuum(&reflected)?;
    Ok((monitored_back_to_unsplit(&kept, 1)?, prob))
}

/// Multiport counterpart of [`herald_through_taps`]: splits arm `a` with
/// `spec_a` and arm `b` with `spec_b`, then conditions on vacuum in every
/// port except port 1.
pub fn herald_through_multiports(
    state: &FockState,
    spec_a: &MultiportSpec,
    spec_b: &MultiportSpec,
    budget: usize,
) -> Result<(FockState, f64)> {
    if spec_a.side != Arm::A || spec_b.side != Arm::B {
        return Err(usage("multiport specs must be given for arm a and arm b, in that order"));
    }
    let s = apply_multiport(&apply_multiport(state, spec_a, budget)?, spec_b, budget)?;
    let mut unmonitored = Vec::new();
    for spec in [spec_a, spec_b] {
        for port in 2..=spec.ports {
            for pol in [Polarization::H, Polarization::V] {
                unmonitored.push(Mode::at_port(spec.side, pol, port));
            }
        }
    }
    let (kept, prob) = s.project_vacuum(&unmonitored)?;
    Ok((monitored_back_to_unsplit(&kept, 1)?, prob))
}

/// Transmitivity equivalent to conditioning an `M`-port on a single monitored port.
pub fn effective_tau(ports: u32) -> Result<f64> {
    if ports < 1 {
        return Err(usage("port count must be at least 1"));
    }
    Ok(1.0 / f64::from(ports))
}
