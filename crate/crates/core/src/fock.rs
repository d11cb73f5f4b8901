//! Sparse multimode Fock states and the ladder-operator algebra.
//!
//! A [`FockState`] is a map from occupation vectors to complex amplitudes over
//! an ordered [`ModeSet`]. All operations are pure and return new states.
//! Components beyond the photon cap `2 * n_max` are dropped, and their squared
//! norm is accumulated in `truncation_loss`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;

use crate::error::{config, usage, validation, Result};

/// Tolerance for unitarity and normalization checks.
pub const EPS_NUM: f64 = 1e-9;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default cap on the number of basis components an explicit mode split may produce.
pub const DEFAULT_EXPANSION_BUDGET: usize = 10_000_000;

/// Largest per-operation photon count the floating-point binomial tables support.
const MAX_BINOMIAL_ORDER: usize = 1000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    pub fn symbol(self) -> char {
        match self {
            Arm::A => 'a',
            Arm::B => 'b',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
    /// `+` output of an elliptic polarization analyzer.
    Plus,
    /// `-` output of an elliptic polarization analyzer.
    Minus,
}

impl Polarization {
    fn symbol(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::Plus => "+",
            Polarization::Minus => "-",
        }
    }
}

/// A single bosonic mode: spatial arm, polarization and beam-splitter port.
///
/// Port 0 is the unsplit arm; taps and multiports number their outputs from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub arm: Arm,
    pub pol: Polarization,
    pub port: u16,
}

impl Mode {
    pub const A_H: Mode = Mode::new(Arm::A, Polarization::H);
    pub const A_V: Mode = Mode::new(Arm::A, Polarization::V);
    pub const B_H: Mode = Mode::new(Arm::B, Polarization::H);
    pub const B_V: Mode = Mode::new(Arm::B, Polarization::V);
    pub const A_PLUS: Mode = Mode::new(Arm::A, Polarization::Plus);
    pub const A_MINUS: Mode = Mode::new(Arm::A, Polarization::Minus);
    pub const B_PLUS: Mode = Mode::new(Arm::B, Polarization::Plus);
    pub const B_MINUS: Mode = Mode::new(Arm::B, Polarization::Minus);

    pub const fn new(arm: Arm, pol: Polarization) -> Self {
        Mode { arm, pol, port: 0 }
    }

    pub const fn at_port(arm: Arm, pol: Polarization, port: u16) -> Self {
        Mode { arm, pol, port }
    }

    pub const fn with_port(self, port: u16) -> Self {
        Mode { port, ..self }
    }

    pub const fn with_pol(self, pol: Polarization) -> Self {
        Mode { pol, ..self }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.port == 0 {
            write!(f, "{}{}", self.arm.symbol(), self.pol.symbol())
        } else {
            write!(f, "{}{}{}", self.arm.symbol(), self.port, self.pol.symbol())
        }
    }
}

/// Ordered list of distinct mode labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeSet {
    labels: Vec<Mode>,
}

impl ModeSet {
    pub fn new(labels: Vec<Mode>) -> Result<Self> {
        for (i, m) in labels.iter().enumerate() {
            if labels[..i].contains(m) {
                return Err(usage(format!("duplicate mode label {m}")));
            }
        }
        Ok(ModeSet { labels })
    }

    /// `(a,H), (a,V), (b,H), (b,V)`.
    pub fn baseline() -> Self {
        ModeSet {
            labels: vec![Mode::A_H, Mode::A_V, Mode::B_H, Mode::B_V],
        }
    }

    /// `(a,+), (a,-), (b,+), (b,-)`.
    pub fn analyzer_outputs() -> Self {
        ModeSet {
            labels: vec![Mode::A_PLUS, Mode::A_MINUS, Mode::B_PLUS, Mode::B_MINUS],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Mode] {
        &self.labels
    }

    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        self.labels.iter().position(|&m| m == mode)
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.index_of(mode).is_some()
    }

    fn require(&self, mode: Mode) -> Result<usize> {
        self.index_of(mode)
            .ok_or_else(|| usage(format!("mode {mode} is not part of the mode set {self}")))
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, m) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "]")
    }
}

/// Photon counts per mode, in [`ModeSet`] order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u16>);

impl Occupation {
    pub fn new(counts: Vec<u16>) -> Self {
        Occupation(counts)
    }

    pub fn counts(&self) -> &[u16] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| u32::from(n)).sum()
    }

    pub fn get(&self, index: usize) -> u16 {
        self.0[index]
    }
}

impl From<Vec<u16>> for Occupation {
    fn from(counts: Vec<u16>) -> Self {
        Occupation(counts)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

/// A 2x2 unitary acting on a pair of modes.
///
/// New annihilation operators are `u` applied to the old pair:
/// `c_k = sum_j u[k][j] a_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeUnitary([[Complex64; 2]; 2]);

impl TwoModeUnitary {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("unitary has non-finite entries"));
        }
        let mut dev: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let dot = m[r][0] * m[c][0].conj() + m[r][1] * m[c][1].conj();
                let target = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((dot - target).norm());
            }
        }
        if dev > EPS_NUM {
            return Err(validation(format!(
                "matrix is not unitary: max deviation of u u^dagger from identity is {dev:.3e}"
            )));
        }
        Ok(TwoModeUnitary(m))
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        TwoModeUnitary([[one, ZERO], [ZERO, one]])
    }

    /// Balanced elliptic analyzer: `c_+ = (a_1 + e^{i phi} a_2)/sqrt2`,
    /// `c_- = (a_1 - e^{i phi} a_2)/sqrt2`.
    pub fn analyzer(phi: f64) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let e = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phi);
        TwoModeUnitary([[h, e], [h, -e]])
    }

    /// Special-unitary matrix `[[alpha, beta], [-conj(beta), conj(alpha)]]`.
    pub fn su2(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new([[alpha, beta], [-beta.conj(), alpha.conj()]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        TwoModeUnitary([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

/// Pascal triangle in `f64`, rows `0..=n`.
pub(crate) struct Binomials {
    rows: Vec<Vec<f64>>,
}

impl Binomials {
    pub(crate) fn new(n: usize) -> Result<Self> {
        if n > MAX_BINOMIAL_ORDER {
            return Err(config(format!(
                "photon count {n} exceeds the binomial table limit {MAX_BINOMIAL_ORDER}"
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        for r in 0..=n {
            let mut row = vec![1.0; r + 1];
            for k in 1..r {
                row[k] = rows[r - 1][k - 1] + rows[r - 1][k];
            }
            rows.push(row);
        }
        Ok(Binomials { rows })
    }

    pub(crate) fn get(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.rows[n][k]
        }
    }
}

fn powers(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..=n {
        out.push(acc);
        acc *= z;
    }
    out
}

/// Amplitudes of `|n1, n2>` re-expressed in the rotated pair, indexed by the
/// photon count `k1` in the first new mode.
fn rotation_coefficients(u: &TwoModeUnitary, n1: usize, n2: usize, binom: &Binomials) -> Vec<Complex64> {
    let m = u.entries();
    let total = n1 + n2;
    let (p11, p21) = (powers(m[0][0], n1), powers(m[1][0], n1));
    let (p12, p22) = (powers(m[0][1], n2), powers(m[1][1], n2));
    (0..=total)
        .map(|k1| {
            let lo = k1.saturating_sub(n2);
            let hi = n1.min(k1);
            let mut sum = ZERO;
            for j1 in lo..=hi {
                let j2 = k1 - j1;
                let c = binom.get(n1, j1) * binom.get(n2, j2);
                sum += p11[j1] * p21[n1 - j1] * p12[j2] * p22[n2 - j2] * c;
            }
            sum * (binom.get(total, n1) / binom.get(total, k1)).sqrt()
        })
        .collect()
}

/// All ways of distributing `n` photons over `k` output modes with the given
/// single-photon amplitudes, as `(counts, amplitude)` pairs.
fn split_expansion(n: usize, weights: &[Complex64], binom: &Binomials) -> Vec<(Vec<u16>, Complex64)> {
    let mut out = Vec::new();
    let mut counts = vec![0u16; weights.len()];
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        slot: usize,
        remaining: usize,
        coeff_sq: f64,
        amp: Complex64,
        weights: &[Complex64],
        binom: &Binomials,
        counts: &mut Vec<u16>,
        out: &mut Vec<(Vec<u16>, Complex64)>,
    ) {
        if slot + 1 == weights.len() {
            counts[slot] = remaining as u16;
            let a = amp * weights[slot].powu(remaining as u32) * coeff_sq.sqrt();
            out.push((counts.clone(), a));
            return;
        }
        for take in 0..=remaining {
            counts[slot] = take as u16;
            recurse(
                slot + 1,
                remaining - take,
                coeff_sq * binom.get(remaining, take),
                amp * weights[slot].powu(take as u32),
                weights,
                binom,
                counts,
                out,
            );
        }
    }
    recurse(0, n, 1.0, Complex64::new(1.0, 0.0), weights, binom, &mut counts, &mut out);
    out
}

/// Truncated superposition of multimode Fock states.
#[derive(Clone, Debug)]
pub struct FockState {
    modes: ModeSet,
    amplitudes: BTreeMap<Occupation, Complex64>,
    n_max: usize,
    truncation_loss: f64,
}

impl FockState {
    fn assemble(modes: ModeSet, mut amplitudes: BTreeMap<Occupation, Complex64>, n_max: usize, truncation_loss: f64) -> Self {
        amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        FockState {
            modes,
            amplitudes,
            n_max,
            truncation_loss,
        }
    }

    pub fn vacuum(modes: ModeSet, n_max: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(Occupation(vec![0; modes.len()]), Complex64::new(1.0, 0.0));
        FockState::assemble(modes, amplitudes, n_max, 0.0)
    }

    pub fn zero(modes: ModeSet, n_max: usize) -> Self {
        FockState::assemble(modes, BTreeMap::new(), n_max, 0.0)
    }

    /// Builds a state from explicit components; repeated occupations are summed.
    pub fn from_components<I>(modes: ModeSet, n_max: usize, components: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u16>, Complex64)>,
    {
        let cap = 2 * n_max as u32;
        let mut amplitudes: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (counts, amp) in components {
            if counts.len() != modes.len() {
                return Err(usage(format!(
                    "occupation has {} entries but the mode set has {}",
                    counts.len(),
                    modes.len()
                )));
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(validation("non-finite amplitude"));
            }
            let occ = Occupation(counts);
            if occ.total() > cap {
                return Err(usage(format!("component {occ} exceeds the photon cap {cap}")));
            }
            *amplitudes.entry(occ).or_insert(ZERO) += amp;
        }
        Ok(FockState::assemble(modes, amplitudes, n_max, 0.0))
    }

    pub(crate) fn with_truncation_loss(mut self, loss: f64) -> Self {
        self.truncation_loss = loss;
        self
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Maximum pair number retained; the photon cap is twice this.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn photon_cap(&self) -> u32 {
        2 * self.n_max as u32
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    /// Number of stored (non-pruned) components.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Same as [`FockState::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, counts: &[u16]) -> Complex64 {
        self.amplitudes.get(&Occupation(counts.to_vec())).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Normalized up to the recorded truncation loss.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() + self.truncation_loss - 1.0).abs() <= EPS_NUM
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(validation(format!(
                "state is not normalized: norm^2 = {:.12}, truncation loss = {:.3e}",
                self.norm_sqr(),
                self.truncation_loss
            )))
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let amplitudes = self.amplitudes.iter().map(|(k, a)| (k.clone(), a * factor)).collect();
        FockState::assemble(self.modes.clone(), amplitudes, self.n_max, self.truncation_loss)
    }

    /// `self + factor * other`, over identical mode sets.
    pub fn add_scaled(&self, other: &FockState, factor: Complex64) -> Result<Self> {
        self.require_same_modes(other)?;
        let mut amplitudes = self.amplitudes.clone();
        for (k, a) in &other.amplitudes {
            *amplitudes.entry(k.clone()).or_insert(ZERO) += a * factor;
        }
        Ok(FockState::assemble(
            self.modes.clone(),
            amplitudes,
            self.n_max.max(other.n_max),
            self.truncation_loss,
        ))
    }

    fn require_same_modes(&self, other: &FockState) -> Result<()> {
        if self.modes != other.modes {
            return Err(usage(format!(
                "mode sets differ: {} vs {}",
                self.modes, other.modes
            )));
        }
        Ok(())
    }

    /// Applies the creation operator of `mode`. Components pushed above the
    /// photon cap are dropped into the truncation loss.
    pub fn create(&self, mode: Mode) -> Result<Self> {
        let i = self.modes.require(mode)?;
        let cap = self.photon_cap();
        let mut loss = self.truncation_loss;
        let mut out = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            let n = occ.0[i];
            let a = amp * f64::from(n + 1).sqrt();
            if occ.total() + 1 > cap {
                loss += a.norm_sqr();
                continue;
            }
            let mut counts = occ.0.clone();
            counts[i] = n + 1;
            out.insert(Occupation(counts), a);
        }
        Ok(FockState::assemble(self.modes.clone(), out, self.n_max, loss))
    }

    pub fn annihilate(&self, mode: Mode) -> Result<Self> {
        let i = self.modes.require(mode)?;
        let mut out = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            let n = occ.0[i];
            if n == 0 {
                continue;
            }
            let mut counts = occ.0.clone();
            counts[i] = n - 1;
            out.insert(Occupation(counts), amp * f64::from(n).sqrt());
        }
        Ok(FockState::assemble(self.modes.clone(), out, self.n_max, self.truncation_loss))
    }

    /// `<N_mode>`, computed as `|| a psi ||^2`.
    pub fn number_expectation(&self, mode: Mode) -> Result<f64> {
        Ok(self.annihilate(mode)?.norm_sqr())
    }

    /// `<a_x^dagger a_y^dagger a_y a_x>` for distinct modes, computed as
    /// `|| a_y a_x psi ||^2`.
    pub fn normal_ordered_pair_correlation(&self, x: Mode, y: Mode) -> Result<f64> {
        if x == y {
            return Err(usage(format!(
                "pair correlation needs two distinct modes, got {x} twice"
            )));
        }
        self.require_normalized()?;
        Ok(self.annihilate(x)?.annihilate(y)?.norm_sqr())
    }

    /// Re-expresses the state in the basis whose annihilation operators are
    /// `u` applied to `(first, second)`. The new modes keep the old labels.
    pub fn mode_pair_rotation(&self, first: Mode, second: Mode, u: &TwoModeUnitary) -> Result<Self> {
        if first == second {
            return Err(usage(format!("rotation needs two distinct modes, got {first} twice")));
        }
        let i = self.modes.require(first)?;
        let j = self.modes.require(second)?;
        let max_pair = self
            .amplitudes
            .keys()
            .map(|o| usize::from(o.0[i]) + usize::from(o.0[j]))
            .max()
            .unwrap_or(0);
        let binom = Binomials::new(max_pair)?;
        let mut cache: HashMap<(u16, u16), Vec<Complex64>> = HashMap::new();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            let (n1, n2) = (occ.0[i], occ.0[j]);
            let coeffs = cache
                .entry((n1, n2))
                .or_insert_with(|| rotation_coefficients(u, n1.into(), n2.into(), &binom));
            let total = n1 + n2;
            for (k1, c) in coeffs.iter().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let mut counts = occ.0.clone();
                counts[i] = k1 as u16;
                counts[j] = total - k1 as u16;
                *out.entry(Occupation(counts)).or_insert(ZERO) += amp * c;
            }
        }
        Ok(FockState::assemble(self.modes.clone(), out, self.n_max, self.truncation_loss))
    }

    /// Upper bound on the component count produced by splitting `mode` into `ways` outputs.
    pub fn split_size_estimate(&self, mode: Mode, ways: usize) -> Result<f64> {
        let i = self.modes.require(mode)?;
        let max_n = self.amplitudes.keys().map(|o| usize::from(o.0[i])).max().unwrap_or(0);
        let binom = Binomials::new(max_n + ways)?;
        Ok(self
            .amplitudes
            .keys()
            .map(|o| binom.get(usize::from(o.0[i]) + ways - 1, ways - 1))
            .sum())
    }

    /// Replaces `mode` by the output modes of a passive splitter whose
    /// creation-operator map is `a^dagger -> sum_k w_k c_k^dagger`.
    ///
    /// The outputs take the position of `mode` in the mode set. The squared
    /// weights must sum to one.
    pub fn split_mode(&self, mode: Mode, outputs: &[(Mode, Complex64)], budget: usize) -> Result<Self> {
        let i = self.modes.require(mode)?;
        if outputs.is_empty() {
            return Err(usage("split needs at least one output mode"));
        }
        let weight: f64 = outputs.iter().map(|(_, w)| w.norm_sqr()).sum();
        if (weight - 1.0).abs() > EPS_NUM {
            return Err(validation(format!(
                "split weights are not normalized: sum |w|^2 = {weight:.12}"
            )));
        }
        let mut labels: Vec<Mode> = Vec::with_capacity(self.modes.len() + outputs.len() - 1);
        labels.extend_from_slice(&self.modes.labels[..i]);
        labels.extend(outputs.iter().map(|(m, _)| *m));
        labels.extend_from_slice(&self.modes.labels[i + 1..]);
        let modes = ModeSet::new(labels)?;

        let estimate = self.split_size_estimate(mode, outputs.len())?;
        if estimate > budget as f64 {
            return Err(config(format!(
                "splitting {mode} into {} modes would create up to {estimate:.0} components, above the budget of {budget}",
                outputs.len()
            )));
        }

        let weights: Vec<Complex64> = outputs.iter().map(|(_, w)| *w).collect();
        let max_n = self.amplitudes.keys().map(|o| usize::from(o.0[i])).max().unwrap_or(0);
        let binom = Binomials::new(max_n)?;
        let mut cache: HashMap<u16, Vec<(Vec<u16>, Complex64)>> = HashMap::new();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            let n = occ.0[i];
            let expansion = cache
                .entry(n)
                .or_insert_with(|| split_expansion(n.into(), &weights, &binom));
            for (split_counts, c) in expansion.iter() {
                let mut counts = Vec::with_capacity(modes.len());
                counts.extend_from_slice(&occ.0[..i]);
                counts.extend_from_slice(split_counts);
                counts.extend_from_slice(&occ.0[i + 1..]);
                *out.entry(Occupation(counts)).or_insert(ZERO) += amp * c;
            }
        }
        Ok(FockState::assemble(modes, out, self.n_max, self.truncation_loss))
    }

    /// Projects the listed modes onto the given occupation pattern and removes
    /// them from the mode set.
    ///
    /// Returns the renormalized conditional state and the kept squared norm.
    /// If nothing survives, the zero state and probability 0 are returned.
    /// The conditional state carries no truncation loss of its own.
    pub fn project_pattern(&self, modes: &[Mode], pattern: &[u16]) -> Result<(Self, f64)> {
        if modes.is_empty() {
            return Err(usage("projection needs a non-empty subset of modes"));
        }
        if modes.len() != pattern.len() {
            return Err(usage("projection pattern length does not match the mode subset"));
        }
        let mut idx = Vec::with_capacity(modes.len());
        for &m in modes {
            let i = self.modes.require(m)?;
            if idx.contains(&i) {
                return Err(usage(format!("mode {m} listed twice in projection")));
            }
            idx.push(i);
        }
        let keep: Vec<usize> = (0..self.modes.len()).filter(|i| !idx.contains(i)).collect();
        let reduced = ModeSet {
            labels: keep.iter().map(|&i| self.modes.labels[i]).collect(),
        };
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amplitudes {
            if idx.iter().zip(pattern).all(|(&i, &p)| occ.0[i] == p) {
                let counts = keep.iter().map(|&i| occ.0[i]).collect();
                out.insert(Occupation(counts), *amp);
            }
        }
        let kept: f64 = out.values().map(|a| a.norm_sqr()).sum();
        if kept == 0.0 {
            return Ok((FockState::zero(reduced, self.n_max), 0.0));
        }
        let s = 1.0 / kept.sqrt();
        for a in out.values_mut() {
            *a *= s;
        }
        Ok((FockState::assemble(reduced, out, self.n_max, 0.0), kept))
    }

    /// Conditions on vacuum in `modes`; see [`FockState::project_pattern`].
    pub fn project_vacuum(&self, modes: &[Mode]) -> Result<(Self, f64)> {
        self.project_pattern(modes, &vec![0; modes.len()])
    }

    /// Squared norm of the components whose occupation satisfies `pred`.
    pub fn probability_where<F>(&self, pred: F) -> f64
    where
        F: Fn(&Occupation) -> bool,
    {
        self.amplitudes
            .iter()
            .filter(|(o, _)| pred(o))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// `<self | other>`, antilinear in `self`.
    pub fn inner_product(&self, other: &FockState) -> Result<Complex64> {
        self.require_same_modes(other)?;
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = ZERO;
        for (k, a) in &small.amplitudes {
            if let Some(b) = large.amplitudes.get(k) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// `|<a|b>|^2 / (<a|a><b|b>)`.
    pub fn fidelity(&self, other: &FockState) -> Result<f64> {
        let overlap = self.inner_product(other)?;
        let denom = self.norm_sqr() * other.norm_sqr();
        if denom == 0.0 {
            return Err(crate::Error::Undefined("fidelity with a zero state".into()));
        }
        Ok(overlap.norm_sqr() / denom)
    }

    /// Tensor product over disjoint mode sets; `self`'s modes come first.
    pub fn tensor(&self, other: &FockState) -> Result<Self> {
        if let Some(m) = other.modes.labels.iter().find(|m| self.modes.contains(**m)) {
            return Err(usage(format!("tensor factors share mode {m}")));
        }
        let mut labels = self.modes.labels.clone();
        labels.extend_from_slice(&other.modes.labels);
        let modes = ModeSet { labels };
        let mut out = BTreeMap::new();
        for (k1, a1) in &self.amplitudes {
            for (k2, a2) in &other.amplitudes {
                let mut counts = k1.0.clone();
                counts.extend_from_slice(&k2.0);
                out.insert(Occupation(counts), a1 * a2);
            }
        }
        let (l1, l2) = (self.truncation_loss, other.truncation_loss);
        Ok(FockState::assemble(modes, out, self.n_max + other.n_max, l1 + l2 - l1 * l2))
    }

    /// Permutes the modes into the order of `target`, which must hold the same labels.
    pub fn reorder(&self, target: &ModeSet) -> Result<Self> {
        if target.len() != self.modes.len() {
            return Err(usage(format!("cannot reorder {} into {}", self.modes, target)));
        }
        let perm = target
            .labels
            .iter()
            .map(|&m| self.modes.require(m))
            .collect::<Result<Vec<_>>>()?;
        let out = self
            .amplitudes
            .iter()
            .map(|(k, a)| (Occupation(perm.iter().map(|&i| k.0[i]).collect()), *a))
            .collect();
        Ok(FockState::assemble(target.clone(), out, self.n_max, self.truncation_loss))
    }

    pub fn relabel(&self, from: Mode, to: Mode) -> Result<Self> {
        let i = self.modes.require(from)?;
        if from != to && self.modes.contains(to) {
            return Err(usage(format!("mode {to} already exists")));
        }
        let mut labels = self.modes.labels.clone();
        labels[i] = to;
        let mut s = self.clone();
        s.modes = ModeSet { labels };
        Ok(s)
    }

    /// Drops every component carrying more than `2 * n_max` photons.
    pub fn truncate_pairs(&self, n_max: usize) -> Self {
        let cap = 2 * n_max as u32;
        let mut loss = self.truncation_loss;
        let mut out = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            if k.total() > cap {
                loss += a.norm_sqr();
            } else {
                out.insert(k.clone(), *a);
            }
        }
        FockState::assemble(self.modes.clone(), out, n_max, loss)
    }

    /// Largest absolute amplitude difference over the union of supports.
    pub fn max_amplitude_difference(&self, other: &FockState) -> Result<f64> {
        self.require_same_modes(other)?;
        let mut worst: f64 = 0.0;
        for (k, a) in &self.amplitudes {
            let b = other.amplitudes.get(k).copied().unwrap_or(ZERO);
            worst = worst.max((a - b).norm());
        }
        for (k, b) in &other.amplitudes {
            if !self.amplitudes.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        Ok(worst)
    }
}
