//! Transfer-matrix products for the canonical system and a numerical
//! estimator of the order from monodromy growth along the imaginary axis.
//!
//! Over one constant interval with length `l` and angle `φ` the system
//! `J W' = z H W` has the exact solution factor
//!
//! ```text
//! M(z) = I − z·l·J·ξ_φ ξ_φᵀ,      J = [[0, -1], [1, 0]],
//! ```
//!
//! because `J ξξᵀ` is nilpotent; `det M = 1` identically. The monodromy of
//! the first `N` intervals is the left-ordered product `M_N ⋯ M_1`
//! (orientation fixed by the two-interval calibration test below). Entries
//! grow like `exp(c·R^ρ)` on `z = iR`, so products are carried with an
//! explicit natural-log scale factored out.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{fit_line, Kahan};
use crate::sequences::{HamburgerHamiltonian, LimitClassification, SeqCursor, SequenceSpec};

/// 2×2 complex matrix with a separate additive log magnitude:
/// the represented value is `e^{log_scale}·entries`, and after every
/// multiply-and-rescale the largest entry modulus lies in `[1/2, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaledMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub log_scale: f64,
}

impl LogScaledMatrix {
    pub fn identity() -> Self {
        Self {
            entries: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
            log_scale: 0.0,
        }
    }

    /// `ln max_{ij} |W_ij|`.
    pub fn log_max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for row in &self.entries {
            for e in row {
                m = m.max(e.norm_sqr());
            }
        }
        0.5 * m.ln() + self.log_scale
    }

    /// `ln |det W|` computed from the scaled entries.
    pub fn log_abs_det(&self) -> f64 {
        let d = self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0];
        d.norm().ln() + 2.0 * self.log_scale
    }

    /// Determinant including phase, at the true scale (intended for
    /// moderate-growth checks where it does not overflow).
    pub fn det(&self) -> Complex64 {
        let d = self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0];
        d * (2.0 * self.log_scale).exp()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i][j]
    }

    fn rescale(&mut self, pending: &mut Kahan) {
        let mut m = 0.0f64;
        for row in &self.entries {
            for e in row {
                m = m.max(e.norm_sqr());
            }
        }
        let m = m.sqrt();
        if m > 0.0 && !(0.5..=2.0).contains(&m) {
            let inv = 1.0 / m;
            for row in &mut self.entries {
                for e in row.iter_mut() {
                    *e *= inv;
                }
            }
            pending.add(m.ln());
        }
    }
}

/// Running angle `φ` represented as an exact quarter-turn count plus a
/// compensated residual, so diagonal angle patterns keep exact directions
/// no matter how many steps accumulate.
#[derive(Debug, Clone, Copy)]
pub struct AngleAccumulator {
    quarters: i64,
    residual: Kahan,
}

impl AngleAccumulator {
    pub fn new(base: f64) -> Self {
        let mut acc = Self {
            quarters: 0,
            residual: Kahan::new(),
        };
        acc.push(base);
        acc
    }

    /// Adds one angle step, splitting off exact multiples of π/2.
    pub fn push(&mut self, step: f64) {
        let q = (step / core::f64::consts::FRAC_PI_2).round();
        if q != 0.0
            && (step - q * core::f64::consts::FRAC_PI_2).abs() < 1e-12 * step.abs().max(1.0)
        {
            self.quarters += q as i64;
            self.residual.add(step - q * core::f64::consts::FRAC_PI_2);
        } else {
            self.residual.add(step);
        }
    }

    pub fn angle(&self) -> f64 {
        self.quarters as f64 * core::f64::consts::FRAC_PI_2 + self.residual.value()
    }

    /// `(cos φ, sin φ)` with the quarter-turn part applied exactly.
    pub fn direction(&self) -> (f64, f64) {
        let r = self.residual.value();
        let (c0, s0) = match self.quarters.rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        if r == 0.0 {
            return (c0, s0);
        }
        let (sr, cr) = (r.sin(), r.cos());
        (c0 * cr - s0 * sr, s0 * cr + c0 * sr)
    }
}

/// Exact one-interval transfer matrix `M(z) = I − z·l·J·ξ_φ ξ_φᵀ`.
pub fn interval_transfer(l: f64, phi: f64, z: Complex64) -> [[Complex64; 2]; 2] {
    let acc = AngleAccumulator::new(phi);
    let (c, s) = acc.direction();
    transfer_from_direction(l, c, s, z)
}

#[inline]
fn transfer_from_direction(l: f64, c: f64, s: f64, z: Complex64) -> [[Complex64; 2]; 2] {
    // J ξξᵀ = [[-cs, -s²], [c², cs]]
    let zl = z * l;
    [
        [Complex64::new(1.0, 0.0) + zl * (c * s), zl * (s * s)],
        [-zl * (c * c), Complex64::new(1.0, 0.0) - zl * (c * s)],
    ]
}

#[inline]
fn left_multiply(w: &mut LogScaledMatrix, m: &[[Complex64; 2]; 2]) {
    let a = w.entries;
    for j in 0..2 {
        w.entries[0][j] = m[0][0] * a[0][j] + m[0][1] * a[1][j];
        w.entries[1][j] = m[1][0] * a[0][j] + m[1][1] * a[1][j];
    }
}

/// Monodromy matrix `W(x_N, z) = M_N ⋯ M_1` of the first `N` intervals,
/// in log-scaled form. `W(·, 0) = I` with zero log scale.
pub fn monodromy(h: &HamburgerHamiltonian, n: u64, z: Complex64) -> Result<LogScaledMatrix> {
    let mut lengths = SeqCursor::new(&h.lengths)?;
    let mut w = LogScaledMatrix::identity();
    let mut pending = Kahan::new();

    enum Angles<'a> {
        Stepped {
            steps: SeqCursor<'a>,
            acc: AngleAccumulator,
            started: bool,
        },
        Listed(SeqCursor<'a>),
    }

    let mut angles = match &h.angles {
        SequenceSpec::ArithmeticStep { base, step } => Angles::Stepped {
            steps: SeqCursor::new(step)?,
            acc: AngleAccumulator::new(*base),
            started: false,
        },
        other => Angles::Listed(SeqCursor::new(other)?),
    };

    for k in 0..n {
        let l = lengths.next_value()?;
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidHamiltonian(format!(
                "length l_{} = {l} is not strictly positive",
                k + 1
            )));
        }
        let (c, s) = match &mut angles {
            Angles::Stepped { steps, acc, started } => {
                if *started {
                    acc.push(steps.next_value()?);
                }
                *started = true;
                acc.direction()
            }
            Angles::Listed(cur) => AngleAccumulator::new(cur.next_value()?).direction(),
        };
        let m = transfer_from_direction(l, c, s, z);
        left_multiply(&mut w, &m);
        w.rescale(&mut pending);
    }

    w.log_scale = pending.value();
    for row in &w.entries {
        for e in row {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::NumericFailure(
                    "NaN/Inf propagated through the transfer product".into(),
                ));
            }
        }
    }
    Ok(w)
}

/// One sample of the growth curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthPoint {
    pub r: f64,
    /// `ln ln max_ij |W_ij(iR)|`; NaN when the matrix is still too small for
    /// the double logarithm.
    pub log_log_max: f64,
    pub truncation_index: u64,
}

/// Sampled growth data with `R` strictly increasing.
pub type GrowthCurve = Vec<GrowthPoint>;

/// Configuration of [`order_estimate`].
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderEstimateConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub grid_points: usize,
    /// Truncation rule: smallest `N` with `R·(x_∞ − x_N) < tail_tolerance`.
    pub tail_tolerance: f64,
    /// Fraction (by `ln R` range, from the top) of the grid used in the
    /// slope fit.
    pub fit_fraction: f64,
    /// Proceed even when the Hamiltonian is not certified limit circle.
    pub force: bool,
}

impl Default for OrderEstimateConfig {
    fn default() -> Self {
        Self {
            r_min: 1e2,
            r_max: 1e6,
            grid_points: 32,
            tail_tolerance: 1e-3,
            fit_fraction: 0.5,
            force: false,
        }
    }
}

/// Result of [`order_estimate`].
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderEstimate {
    pub rho_hat: f64,
    pub stderr: f64,
    pub curve: GrowthCurve,
}

/// Smallest `N` with `R·(x_∞ − x_N) < tol`, via the closed-form length tail.
pub fn truncation_index(h: &HamburgerHamiltonian, r: f64, tol: f64) -> Result<u64> {
    let tail_at = |n: u64| -> Result<f64> {
        match h.node_tail(n) {
            Some(t) => Ok(t?.value),
            None => Err(Error::Inapplicable(
                "length rule has no closed-form tail; cannot pick a truncation index".into(),
            )),
        }
    };
    if r * tail_at(1)? < tol {
        return Ok(1);
    }
    let mut hi = 16u64;
    while r * tail_at(hi)? >= tol {
        hi *= 2;
        if hi > (1 << 40) {
            return Err(Error::NumericFailure(
                "truncation index exceeds 2^40; tail tolerance unreachable".into(),
            ));
        }
    }
    let mut lo = hi / 2;
    if hi == 16 {
        lo = 1;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if r * tail_at(mid)? < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Estimates the order of the monodromy entries from the slope of
/// `ln ln max |W(iR)|` against `ln R` on a geometric `R`-grid.
pub fn order_estimate(
    h: &HamburgerHamiltonian,
    config: &OrderEstimateConfig,
) -> Result<OrderEstimate> {
    if config.grid_points < 4 {
        return Err(Error::InsufficientData(
            "order estimate needs a grid of at least 4 points".into(),
        ));
    }
    if !(config.r_min > 1.0) || !(config.r_max > config.r_min) {
        return Err(Error::Domain("need 1 < r_min < r_max".into()));
    }
    if !config.force {
        match h.classify_limit(1 << 14, 1e-9)? {
            LimitClassification::LimitCircle { .. } => {}
            other => {
                return Err(Error::Inapplicable(format!(
                    "order estimate requires limit circle case, got {other:?} (use force to override)"
                )))
            }
        }
    }

    let mut curve: GrowthCurve = Vec::with_capacity(config.grid_points);
    let ratio = (config.r_max / config.r_min).powf(1.0 / (config.grid_points as f64 - 1.0));
    for i in 0..config.grid_points {
        let r = config.r_min * ratio.powi(i as i32);
        let n = truncation_index(h, r, config.tail_tolerance)?;
        let w = monodromy(h, n, Complex64::new(0.0, r))?;
        let log_max = w.log_max_abs();
        let log_log_max = if log_max > 1.0 { log_max.ln() } else { f64::NAN };
        curve.push(GrowthPoint {
            r,
            log_log_max,
            truncation_index: n,
        });
    }

    let (rho_hat, stderr) = fit_growth_curve(&curve, config.fit_fraction)?;
    Ok(OrderEstimate {
        rho_hat,
        stderr,
        curve,
    })
}

/// Slope fit over the top `fit_fraction` of the `ln R` range.
pub fn fit_growth_curve(curve: &GrowthCurve, fit_fraction: f64) -> Result<(f64, f64)> {
    let finite: Vec<&GrowthPoint> = curve.iter().filter(|p| p.log_log_max.is_finite()).collect();
    if finite.len() < 4 {
        return Err(Error::InsufficientData(
            "growth curve has fewer than 4 usable points".into(),
        ));
    }
    let ln_lo = finite.first().unwrap().r.ln();
    let ln_hi = finite.last().unwrap().r.ln();
    let cut = ln_hi - fit_fraction.clamp(0.05, 1.0) * (ln_hi - ln_lo);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &finite {
        if p.r.ln() >= cut - 1e-12 {
            xs.push(p.r.ln());
            ys.push(p.log_log_max);
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(
            "fit window has fewer than 4 points".into(),
        ));
    }
    let fit = fit_line(&xs, &ys)?;
    Ok((fit.slope, fit.slope_stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;

    fn quarter_turn_angles() -> SequenceSpec {
        SequenceSpec::ArithmeticStep {
            base: 0.0,
            step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
        }
    }

    #[test]
    fn single_interval_transfer() {
        let z = Complex64::new(0.0, 2.0);
        let m = interval_transfer(1.0, 0.0, z);
        assert_eq!(m[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));
        assert_eq!(m[1][0], Complex64::new(0.0, -2.0));
        assert_eq!(m[1][1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn transfer_at_zero_is_identity() {
        let m = interval_transfer(3.7, 1.1, Complex64::new(0.0, 0.0));
        assert_eq!(m[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(m[1][1], Complex64::new(1.0, 0.0));
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));
        assert_eq!(m[1][0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn transfer_is_unimodular() {
        for (l, phi, z) in [
            (0.3, 0.7, Complex64::new(2.0, 5.0)),
            (2.0, -1.2, Complex64::new(-4.0, 1.0)),
            (1e-3, 0.1, Complex64::new(0.0, 1e6)),
        ] {
            let m = interval_transfer(l, phi, z);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-8 * (1.0 + det.norm()));
        }
    }

    #[test]
    fn two_interval_hand_product() {
        // Unit lengths, φ = (0, π/2):  W = [[1 − z², z], [−z, 1]].
        let h =
            HamburgerHamiltonian::new(SequenceSpec::constant(1.0), quarter_turn_angles()).unwrap();
        for z in [Complex64::new(0.7, 0.0), Complex64::new(1.5, -2.0)] {
            let w = monodromy(&h, 2, z).unwrap();
            let scale = w.log_scale.exp();
            let got = |i: usize, j: usize| w.entries[i][j] * scale;
            assert!((got(0, 0) - (Complex64::new(1.0, 0.0) - z * z)).norm() < 1e-12);
            assert!((got(0, 1) - z).norm() < 1e-12);
            assert!((got(1, 0) + z).norm() < 1e-12);
            assert!((got(1, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn monodromy_at_zero_is_identity() {
        let h = HamburgerHamiltonian::new(SequenceSpec::power(2.0, 0.0, 1.0), quarter_turn_angles())
            .unwrap();
        let w = monodromy(&h, 50, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(w.log_scale, 0.0);
        assert_eq!(w.entries[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(w.entries[1][1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn conjugation_symmetry_is_exact() {
        let h = HamburgerHamiltonian::new(
            SequenceSpec::power(2.0, 0.0, 1.0),
            SequenceSpec::ArithmeticStep {
                base: 0.4,
                step: Box::new(SequenceSpec::power(1.5, 0.0, 1.0)),
            },
        )
        .unwrap();
        let z = Complex64::new(3.0, 17.0);
        let w = monodromy(&h, 500, z).unwrap();
        let wc = monodromy(&h, 500, z.conj()).unwrap();
        assert_eq!(w.log_scale, wc.log_scale);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w.entries[i][j].conj(), wc.entries[i][j]);
            }
        }
    }

    #[test]
    fn truncation_index_square_rule() {
        // tail(N) ≈ 1/N for l_n = n^{-2}: R·tail < tol  =>  N ≈ R/tol.
        let h = HamburgerHamiltonian::new(SequenceSpec::power(2.0, 0.0, 1.0), quarter_turn_angles())
            .unwrap();
        let n = truncation_index(&h, 100.0, 1e-2).unwrap();
        assert!((9_000..11_000).contains(&n), "N = {n}");
        let t = h.node_tail(n).unwrap().unwrap().value;
        assert!(100.0 * t < 1e-2);
        let t_prev = h.node_tail(n - 1).unwrap().unwrap().value;
        assert!(100.0 * t_prev >= 1e-2);
    }

    #[test]
    fn quarter_turn_square_family_slope() {
        // Diagonal family with l_n = n^{-2}: order 1/2.
        let h = HamburgerHamiltonian::new(SequenceSpec::power(2.0, 0.0, 1.0), quarter_turn_angles())
            .unwrap();
        let cfg = OrderEstimateConfig {
            r_min: 1e2,
            r_max: 1e5,
            grid_points: 16,
            tail_tolerance: 1e-2,
            ..Default::default()
        };
        let est = order_estimate(&h, &cfg).unwrap();
        assert!(
            (est.rho_hat - 0.5).abs() < 0.06,
            "rho_hat = {} ± {}",
            est.rho_hat,
            est.stderr
        );
    }
}
