//! Heisenberg-picture evaluation of detector correlations.
//!
//! The squeezing transforms map each ladder operator of the four baseline modes
//! to a linear combination of ladder operators. Vacuum expectations of
//! products of such combinations follow from Wick's theorem, giving a route to
//! `G2` and mean photon numbers that never touches a Fock basis.

use num_complex::Complex64;

use crate::fock::Mode;

const BASELINE: [Mode; 4] = [Mode::A_H, Mode::A_V, Mode::B_H, Mode::B_V];
const A_H: usize = 0;
const A_V: usize = 1;
const B_H: usize = 2;
const B_V: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `sum_j (alpha_j a_j + beta_j a_j^dagger)` over `(aH, aV, bH, bV)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderCombination {
    pub annihilation: [Complex64; 4],
    pub creation: [Complex64; 4],
}

impl LadderCombination {
    pub fn zero() -> Self {
        LadderCombination {
            annihilation: [ZERO; 4],
            creation: [ZERO; 4],
        }
    }

    fn unit(index: usize, dagger: bool, coeff: f64) -> Self {
        let mut c = Self::zero();
        if dagger {
            c.creation[index] = Complex64::new(coeff, 0.0);
        } else {
            c.annihilation[index] = Complex64::new(coeff, 0.0);
        }
        c
    }

    pub fn annihilator(mode: Mode) -> Option<Self> {
        BASELINE.iter().position(|&m| m == mode).map(|i| Self::unit(i, false, 1.0))
    }

    pub fn adjoint(&self) -> Self {
        LadderCombination {
            annihilation: self.creation.map(|z| z.conj()),
            creation: self.annihilation.map(|z| z.conj()),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        LadderCombination {
            annihilation: self.annihilation.map(|z| z * factor),
            creation: self.creation.map(|z| z * factor),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        for j in 0..4 {
            out.annihilation[j] += other.annihilation[j];
            out.creation[j] += other.creation[j];
        }
        out
    }

    fn add_unit(&mut self, index: usize, dagger: bool, coeff: f64) {
        if dagger {
            self.creation[index] += coeff;
        } else {
            self.annihilation[index] += coeff;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LadderOperator {
    pub mode: Mode,
    pub dagger: bool,
}

/// One row of the squeezing transform table: `S^dagger input S = output`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BogoliubovEntry {
    pub input: LadderOperator,
    pub output: LadderCombination,
}

/// Squeezing transforms for gain `K`, with `c = cosh K` and `s = sinh K`:
///
/// ```text
/// aH -> c aH + s bV^dag     bV -> c bV + s aH^dag
/// aV -> c aV - s bH^dag     bH -> c bH - s aV^dag
/// ```
///
/// and their adjoints, eight entries in total.
pub fn bogoliubov_transform_table(k: f64) -> Vec<BogoliubovEntry> {
    let (c, s) = (k.cosh(), k.sinh());
    // (input, partner, sign of the partner term)
    let rules = [(A_H, B_V, 1.0), (A_V, B_H, -1.0), (B_V, A_H, 1.0), (B_H, A_V, -1.0)];
    let mut table = Vec::with_capacity(8);
    for &(input, partner, sign) in &rules {
        for dagger in [false, true] {
            let mut output = LadderCombination::unit(input, dagger, c);
            output.add_unit(partner, !dagger, sign * s);
            table.push(BogoliubovEntry {
                input: LadderOperator {
                    mode: BASELINE[input],
                    dagger,
                },
                output,
            });
        }
    }
    table
}

fn transform(table: &[BogoliubovEntry], op: &LadderCombination) -> LadderCombination {
    let mut out = LadderCombination::zero();
    for entry in table {
        let j = BASELINE.iter().position(|&m| m == entry.input.mode).unwrap();
        let coeff = if entry.input.dagger {
            op.creation[j]
        } else {
            op.annihilation[j]
        };
        if coeff != ZERO {
            out = out.plus(&entry.output.scaled(coeff));
        }
    }
    out
}

/// `<0| X Y |0>`: only `a_j a_j^dagger` contractions survive.
pub fn vacuum_expectation_pair(x: &LadderCombination, y: &LadderCombination) -> Complex64 {
    (0..4).map(|j| x.annihilation[j] * y.creation[j]).sum()
}

/// `<0| W X Y Z |0>` by Wick's theorem for the Gaussian vacuum.
pub fn vacuum_expectation_quartic(
    w: &LadderCombination,
    x: &LadderCombination,
    y: &LadderCombination,
    z: &LadderCombination,
) -> Complex64 {
    let p = vacuum_expectation_pair;
    p(w, x) * p(y, z) + p(w, y) * p(x, z) + p(w, z) * p(x, y)
}

/// Analyzer `+` output on one arm, `(a_H + e^{i phi} a_V)/sqrt2`.
fn analyzer_plus(h: Mode, v: Mode, phi: f64) -> LadderCombination {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let h = LadderCombination::annihilator(h).unwrap().scaled(Complex64::new(r, 0.0));
    let v = LadderCombination::annihilator(v)
        .unwrap()
        .scaled(Complex64::from_polar(r, phi));
    h.plus(&v)
}

/// `<Psi| a+^dag b+^dag b+ a+ |Psi>` through the transform table.
pub fn heisenberg_pair_correlation(k: f64, phi_a: f64, phi_b: f64) -> f64 {
    let table = bogoliubov_transform_table(k);
    let a = transform(&table, &analyzer_plus(Mode::A_H, Mode::A_V, phi_a));
    let b = transform(&table, &analyzer_plus(Mode::B_H, Mode::B_V, phi_b));
    vacuum_expectation_quartic(&a.adjoint(), &b.adjoint(), &b, &a).re
}

/// `<Psi| N |Psi>` for the `+` analyzer output on arm `a` (`b` when `arm_b`).
pub fn heisenberg_mean_photon_number(k: f64, phi: f64, arm_b: bool) -> f64 {
    let table = bogoliubov_transform_table(k);
    let plus = if arm_b {
        analyzer_plus(Mode::B_H, Mode::B_V, phi)
    } else {
        analyzer_plus(Mode::A_H, Mode::A_V, phi)
    };
    let t = transform(&table, &plus);
    vacuum_expectation_pair(&t.adjoint(), &t).re
}

/// `<Psi| x y |Psi>` for two baseline annihilators, e.g. the pair amplitude `<aH bV>`.
pub fn heisenberg_anomalous_correlation(k: f64, x: Mode, y: Mode) -> Option<Complex64> {
    let table = bogoliubov_transform_table(k);
    let tx = transform(&table, &LadderCombination::annihilator(x)?);
    let ty = transform(&table, &LadderCombination::annihilator(y)?);
    Some(vacuum_expectation_pair(&tx, &ty))
}
