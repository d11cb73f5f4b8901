//! Builders for the down-conversion states: the bright squeezed vacuum, its
//! two-factor product form, single singlet layers, the vacuum-heralded state
//! behind a tap or multiport, and the analyzer-basis expansion evaluated from
//! exact integer binomial sums.

use num_complex::Complex64;

use crate::error::{config, usage, Result};
use crate::fock::{FockState, Mode, ModeSet};

/// Largest gain the state builders accept by default.
pub const K_MAX: f64 = 3.0;

/// Truncation tail weight every automatically or checked cutoff must stay below.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Largest pair cutoff [`Cutoff::Auto`] will select.
pub const MAX_AUTO_CUTOFF: usize = 400;

/// Largest pair number for which the analyzer-basis expansion is evaluated
/// with exact integer binomials.
pub const MAX_EXACT_CUTOFF: usize = 30;

/// Amplification gain `K`, the product of coupling and interaction time.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Gain(f64);

impl Gain {
    /// Accepts `0 <= K <= K_MAX`.
    pub fn new(k: f64) -> Result<Self> {
        Self::with_limit(k, K_MAX)
    }

    pub fn with_limit(k: f64, k_max: f64) -> Result<Self> {
        if !k.is_finite() || k < 0.0 {
            return Err(usage(format!("gain must be a finite non-negative number, got {k}")));
        }
        if k > k_max {
            return Err(config(format!(
                "gain {k} exceeds the configured maximum {k_max}"
            )));
        }
        Ok(Gain(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `tanh K`, the per-pair amplitude ratio.
    pub fn ratio(self) -> f64 {
        self.0.tanh()
    }
}

/// How the pair-number cutoff of a builder is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    /// Smallest cutoff whose tail bound and photon-weighted tail bound
    /// ([`moment_tail_bound`]) are both below [`TAIL_TOLERANCE`].
    Auto,
    /// Use this cutoff, failing if its tail bound is not below [`TAIL_TOLERANCE`].
    Checked(usize),
    /// Use this cutoff regardless of the tail; the bound is still recorded.
    Override(usize),
}

impl Cutoff {
    /// Resolves the cutoff for a layer series with squared ratio `ratio_sq`.
    pub fn resolve(self, ratio_sq: f64) -> Result<usize> {
        match self {
            Cutoff::Auto => (0..=MAX_AUTO_CUTOFF)
                .find(|&n| {
                    pair_tail_bound(ratio_sq, n) < TAIL_TOLERANCE && moment_tail_bound(ratio_sq, n) < TAIL_TOLERANCE
                })
                .ok_or_else(|| {
                    config(format!(
                        "no cutoff up to {MAX_AUTO_CUTOFF} pairs brings the tail below {TAIL_TOLERANCE:e} \
                         (tail bound at {MAX_AUTO_CUTOFF}: {:.3e})",
                        pair_tail_bound(ratio_sq, MAX_AUTO_CUTOFF)
                    ))
                }),
            Cutoff::Checked(n) => {
                let tail = pair_tail_bound(ratio_sq, n);
                if tail < TAIL_TOLERANCE {
                    Ok(n)
                } else {
                    Err(config(format!(
                        "cutoff {n} leaves a tail bound of {tail:.3e}, not below {TAIL_TOLERANCE:e}"
                    )))
                }
            }
            Cutoff::Override(n) => Ok(n),
        }
    }
}

/// Weight discarded when a normalized layer series with coefficients
/// `(1 - x) sqrt(n+1) r^n` (where `x = r^2`) is cut after `n_max` pairs:
/// `sum_{n > n_max} (n+1) x^n (1-x)^2 = x^{n_max+1} ((n_max+2) - (n_max+1) x)`.
pub fn pair_tail_bound(ratio_sq: f64, n_max: usize) -> f64 {
    if ratio_sq == 0.0 {
        return 0.0;
    }
    let n = n_max as f64;
    ratio_sq.powi(n_max as i32 + 1) * ((n + 2.0) - (n + 1.0) * ratio_sq)
}

/// `sum_{n > n_max} (n+1)^3 x^n (1-x)^2`: the discarded weight counted with
/// the largest photon-pair product `(n+1)^2` a layer can contribute to a
/// normally ordered intensity correlation.
pub fn moment_tail_bound(ratio_sq: f64, n_max: usize) -> f64 {
    if ratio_sq == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut xn = ratio_sq.powi(n_max as i32 + 1);
    let mut n = n_max + 1;
    loop {
        let term = ((n + 1) as f64).powi(3) * xn;
        sum += term;
        if term < sum * 1e-17 || xn == 0.0 {
            break;
        }
        xn *= ratio_sq;
        n += 1;
    }
    sum * (1.0 - ratio_sq).powi(2)
}

/// Smallest cutoff whose plain tail bound is below `tolerance`.
pub fn minimal_cutoff(ratio_sq: f64, tolerance: f64) -> Option<usize> {
    (0..=MAX_AUTO_CUTOFF).find(|&n| pair_tail_bound(ratio_sq, n) < tolerance)
}

/// Heralding condition: a tap of transmitivity `tau`, or an `M`-port splitter
/// whose monitored port acts as `tau = 1/M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Conditioning {
    Tap { tau: f64 },
    Multiport { ports: u32 },
}

impl Conditioning {
    pub fn tap(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(usage(format!("transmitivity must lie in (0, 1], got {tau}")));
        }
        Ok(Conditioning::Tap { tau })
    }

    pub fn multiport(ports: u32) -> Result<Self> {
        if ports < 1 {
            return Err(usage("port count must be at least 1"));
        }
        Ok(Conditioning::Multiport { ports })
    }

    pub fn tau(self) -> f64 {
        match self {
            Conditioning::Tap { tau } => tau,
            Conditioning::Multiport { ports } => 1.0 / f64::from(ports),
        }
    }
}

/// The normalized `n`-pair singlet-like component.
#[derive(Clone, Debug)]
pub struct SingletLayer {
    pub n: usize,
    pub state: FockState,
}

fn layer_components(n: usize) -> impl Iterator<Item = (usize, [u16; 4])> {
    (0..=n).map(move |m| (m, [(n - m) as u16, m as u16, m as u16, (n - m) as u16]))
}

fn sign(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Layer series `sum_n c_n |psi_n>` with `c_n = (1 - r^2) sqrt(n+1) r^n`,
/// where the singlet normalization cancels the `sqrt(n+1)`.
fn layer_series(ratio: f64, n_max: usize) -> Result<FockState> {
    let norm = 1.0 - ratio * ratio;
    let mut comps = Vec::new();
    let mut rn = 1.0;
    for n in 0..=n_max {
        for (m, counts) in layer_components(n) {
            comps.push((counts.to_vec(), Complex64::new(sign(m) * rn * norm, 0.0)));
        }
        rn *= ratio;
    }
    let state = FockState::from_components(ModeSet::baseline(), n_max, comps)?;
    Ok(state.with_truncation_loss(pair_tail_bound(ratio * ratio, n_max)))
}

/// Bright squeezed vacuum over `(aH, aV, bH, bV)`: the amplitude of
/// `|n-m, m, m, n-m>` is `(-1)^m tanh^n K / cosh^2 K`.
pub fn build_pdc_state(gain: Gain, cutoff: Cutoff) -> Result<FockState> {
    let t = gain.ratio();
    let n_max = cutoff.resolve(t * t)?;
    layer_series(t, n_max)
}

/// Two-mode squeezed vacuum `(1/cosh K) sum_n (sign * tanh K)^n |n>_x |n>_y`.
fn two_mode_squeezed(gain: Gain, x: Mode, y: Mode, sign_per_pair: f64, n_max: usize) -> Result<FockState> {
    let t = gain.ratio();
    let c = gain.value().cosh().recip();
    let modes = ModeSet::new(vec![x, y])?;
    let comps = (0..=n_max).map(|n| {
        let amp = c * (sign_per_pair * t).powi(n as i32);
        (vec![n as u16, n as u16], Complex64::new(amp, 0.0))
    });
    let state = FockState::from_components(modes, n_max, comps)?;
    // Single-factor tail: sum_{n > n_max} x^n (1 - x) = x^{n_max+1}.
    Ok(state.with_truncation_loss((t * t).powi(n_max as i32 + 1)))
}

/// The same state as [`build_pdc_state`], built as the tensor product of the
/// `(aH, bV)` and `(aV, bH)` two-mode squeezed vacua, reordered to the
/// baseline modes and cut back to the same pair cutoff.
pub fn build_product_form(gain: Gain, cutoff: Cutoff) -> Result<FockState> {
    let t = gain.ratio();
    let n_max = cutoff.resolve(t * t)?;
    let first = two_mode_squeezed(gain, Mode::A_H, Mode::B_V, 1.0, n_max)?;
    let second = two_mode_squeezed(gain, Mode::A_V, Mode::B_H, -1.0, n_max)?;
    let product = first.tensor(&second)?.reorder(&ModeSet::baseline())?;
    Ok(product.truncate_pairs(n_max))
}

pub fn singlet_layer(n: usize) -> Result<SingletLayer> {
    if n > MAX_AUTO_CUTOFF {
        return Err(usage(format!("layer index {n} exceeds {MAX_AUTO_CUTOFF}")));
    }
    let a = 1.0 / ((n + 1) as f64).sqrt();
    let comps = layer_components(n).map(|(m, c)| (c.to_vec(), Complex64::new(sign(m) * a, 0.0)));
    let state = FockState::from_components(ModeSet::baseline(), n, comps)?;
    Ok(SingletLayer { n, state })
}

/// State transmitted through the taps (or the monitored multiport ports) when
/// the reflected light is found in vacuum: the layer ratio becomes `tau tanh K`.
pub fn build_conditioned_state(gain: Gain, spec: Conditioning, cutoff: Cutoff) -> Result<FockState> {
    let tau = spec.tau();
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(usage(format!("transmitivity must lie in (0, 1], got {tau}")));
    }
    let r = tau * gain.ratio();
    let n_max = cutoff.resolve(r * r)?;
    layer_series(r, n_max)
}

fn exact_binomials(n: usize) -> Vec<Vec<i128>> {
    let mut rows: Vec<Vec<i128>> = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let mut row = vec![1i128; r + 1];
        for k in 1..r {
            row[k] = rows[r - 1][k - 1] + rows[r - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// `sum_{i+j=J} C(p, i) C(q, j) (-1)^{j if negate_second}` for every `J` in `0..=p+q`.
fn signed_convolution(binom: &[Vec<i128>], p: usize, q: usize) -> Vec<i128> {
    let mut out = vec![0i128; p + q + 1];
    for i in 0..=p {
        for j in 0..=q {
            let term = binom[p][i] * binom[q][j];
            out[i + j] += if j % 2 == 0 { term } else { -term };
        }
    }
    out
}

/// The bright squeezed vacuum written directly over the analyzer outputs
/// `(a+, a-, b+, b-)` by the quadruple binomial sum, for analyzer phases
/// `phi_a` and `phi_b`.
///
/// Integer parts of every coefficient are exact (`i128`); the cutoff may not
/// exceed [`MAX_EXACT_CUTOFF`].
pub fn pm_basis_expansion(gain: Gain, phi_a: f64, phi_b: f64, cutoff: Cutoff) -> Result<FockState> {
    let t = gain.ratio();
    let n_max = cutoff.resolve(t * t)?;
    if n_max > MAX_EXACT_CUTOFF {
        return Err(config(format!(
            "analyzer-basis expansion is limited to {MAX_EXACT_CUTOFF} pairs, requested {n_max}"
        )));
    }
    let binom = exact_binomials(n_max);
    let norm = 1.0 - t * t;
    let mut comps = Vec::new();
    let mut tn = 1.0;
    for n in 0..=n_max {
        // (-1)^n / 2^n from the analyzer amplitudes; sqrt(n+1) cancels the layer normalization.
        let layer_scale = norm * tn * sign(n) / 2f64.powi(n as i32);
        let mut grid = vec![Complex64::new(0.0, 0.0); (n + 1) * (n + 1)];
        for m in 0..=n {
            // a+ exponent J12 = j1 + j2 with j1 from C(n-m), j2 from C(m) carrying (-1)^{j2};
            // b+ exponent J34 = j3 + j4 with j3 from C(m), j4 from C(n-m) carrying (-1)^{j4}.
            let a_sums = signed_convolution(&binom, n - m, m);
            let b_sums = signed_convolution(&binom, m, n - m);
            let phase = Complex64::from_polar(1.0, m as f64 * phi_a + (n - m) as f64 * phi_b);
            let weight = if m % 2 == 0 { binom[n][m] } else { -binom[n][m] };
            for (j12, &sa) in a_sums.iter().enumerate() {
                if sa == 0 {
                    continue;
                }
                for (j34, &sb) in b_sums.iter().enumerate() {
                    if sb == 0 {
                        continue;
                    }
                    let exact = weight * sa * sb;
                    grid[j12 * (n + 1) + j34] += phase * exact as f64;
                }
            }
        }
        for j12 in 0..=n {
            for j34 in 0..=n {
                let v = grid[j12 * (n + 1) + j34];
                if v.norm() == 0.0 {
                    continue;
                }
                let denom = ((binom[n][j12] as f64) * (binom[n][j34] as f64)).sqrt();
                comps.push((
                    vec![j12 as u16, (n - j12) as u16, j34 as u16, (n - j34) as u16],
                    v * (layer_scale / denom),
                ));
            }
        }
        tn *= t;
    }
    let state = FockState::from_components(ModeSet::analyzer_outputs(), n_max, comps)?;
    Ok(state.with_truncation_loss(pair_tail_bound(t * t, n_max)))
}

/// Two readings of the one-pair emission probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnePairProbability {
    /// Squared weight of the whole one-pair layer: `2 tanh^2 K / cosh^4 K`.
    pub layer_weight: f64,
    /// Squared amplitude of a single one-pair term: `tanh^2 K / cosh^4 K`.
    pub single_term: f64,
}

pub fn one_pair_probability(k: f64) -> OnePairProbability {
    let t2 = k.tanh().powi(2);
    let c4 = k.cosh().powi(4);
    OnePairProbability {
        layer_weight: 2.0 * t2 / c4,
        single_term: t2 / c4,
    }
}
