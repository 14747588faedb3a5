//! The three-term-recurrence side: orthogonal polynomials, Jacobi
//! parameters, moment sequences, and the conversions among them.
//!
//! # Conventions
//!
//! Jacobi parameters are 1-based: `ρ_1, ρ_2, …` (positive) and `q_1, q_2, …`.
//! The orthonormal polynomials of the first kind satisfy
//!
//! ```text
//! P_{-1} = 0,  P_0 = 1,   ρ_n·P_n(z) = (z − q_n)·P_{n-1}(z) − ρ_{n-1}·P_{n-2}(z)
//! ```
//!
//! so the Jacobi matrix has diagonal `q_1, q_2, …` and off-diagonal
//! `ρ_1, ρ_2, …`, the moments are `s_k = (T^k)_{11}` with `s_0 = 1`, and the
//! leading coefficient of `P_n` is `b_{n,n} = (ρ_1⋯ρ_n)^{-1}`. Polynomials of
//! the second kind use the same recurrence with `Q_0 = 0`, `Q_1 = 1/ρ_1`.
//!
//! The correspondence with a Hamburger Hamiltonian `(l_n, φ_n)_{n≥1}` then
//! reads (calibrated once, asserted by the round-trip tests; it amounts to
//! prefixing a phantom interval with length 1 and angle 0):
//!
//! ```text
//! l_n = P_n(0)² + Q_n(0)²,      φ_n = angle of (P_n(0), Q_n(0)) mod π,
//! ρ_{n+1} = [ |sin(φ_{n+1} − φ_n)|·√(l_n·l_{n+1}) ]^{-1}   (n ≥ 1),
//! ρ_1 = [ |sin φ_1|·√l_1 ]^{-1},     q_1 = −cot φ_1,
//! q_{n+1} = −(1/l_n)·[cot(φ_{n+1} − φ_n) + cot(φ_n − φ_{n-1})]  (n ≥ 1, φ_0 := 0).
//! ```

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{fit_growth, log_sum_exp, GrowthSample, Kahan};
use crate::sequences::{sin_mod_pi, FiniteRankHamiltonian, HamburgerHamiltonian};

/// Relative pivot floor for Hankel factorisations.
pub const HANKEL_PIVOT_TOLERANCE: f64 = 1e-12;

/// Off-diagonal (`ρ_n > 0`) and diagonal (`q_n`) recurrence coefficients.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JacobiParameters {
    pub offdiag: Vec<f64>,
    pub diag: Vec<f64>,
}

impl JacobiParameters {
    pub fn new(offdiag: Vec<f64>, diag: Vec<f64>) -> Result<Self> {
        if offdiag.len() != diag.len() {
            return Err(Error::InvalidJacobi(format!(
                "need equally many off-diagonal and diagonal entries, got {} and {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if let Some((i, &r)) = offdiag
            .iter()
            .enumerate()
            .find(|(_, &r)| !(r > 0.0) || !r.is_finite())
        {
            return Err(Error::InvalidJacobi(format!(
                "off-diagonal ρ_{} = {r} must be strictly positive",
                i + 1
            )));
        }
        if diag.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidJacobi("non-finite diagonal entry".into()));
        }
        Ok(Self { offdiag, diag })
    }

    pub fn len(&self) -> usize {
        self.offdiag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offdiag.is_empty()
    }
}

/// Power moments `s_0, …, s_{2N}` of a positive measure.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentSequence {
    pub values: Vec<f64>,
    /// True when `s_0 = 1`.
    pub normalized: bool,
}

impl MomentSequence {
    /// Validates positive definiteness of the Hankel matrices
    /// `(s_{i+j})_{0≤i,j≤m}` for every admissible `m` via the pivot test of
    /// the Cholesky factorisation.
    pub fn new(values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.is_empty() || values.len() % 2 == 0 {
            return Err(Error::Domain(format!(
                "moment sequence must contain s_0..s_2N (odd count), got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("non-finite moment".into()));
        }
        if normalized && (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "normalized moment sequence must have s_0 = 1, got {}",
                values[0]
            )));
        }
        if !(values[0] > 0.0) {
            return Err(Error::Domain("s_0 must be positive".into()));
        }
        let ms = Self { values, normalized };
        hankel_cholesky(&ms.values)?;
        Ok(ms)
    }

    /// Highest `N` with `s_{2N}` available.
    pub fn max_degree(&self) -> usize {
        (self.values.len() - 1) / 2
    }
}

/// Cholesky factor of the Hankel matrix `(s_{i+j})_{0..N}` after symmetric
/// equilibration. Returns the lower factor `L` of the *unscaled* matrix,
/// stored row-wise. Fails with the first size at which the pivot ratio
/// collapses below [`HANKEL_PIVOT_TOLERANCE`].
fn hankel_cholesky(s: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = (s.len() + 1) / 2;
    // Equilibrate by the diagonal so the pivot-ratio test measures genuine
    // correlation collapse rather than raw scale spread.
    let mut d = vec![0.0f64; n];
    for (i, di) in d.iter_mut().enumerate() {
        let h = s[2 * i];
        if !(h > 0.0) {
            return Err(Error::IllConditionedMoments { size: i });
        }
        *di = 1.0 / h.sqrt();
    }
    let mut l = vec![vec![0.0f64; n]; n];
    let mut max_pivot = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let mut acc = Kahan::new();
            acc.add(s[i + j] * d[i] * d[j]);
            for k in 0..j {
                acc.add(-l[i][k] * l[j][k]);
            }
            let v = acc.value();
            if j == i {
                max_pivot = max_pivot.max(v);
                if !(v > 0.0) || v < HANKEL_PIVOT_TOLERANCE * max_pivot {
                    return Err(Error::IllConditionedMoments { size: i });
                }
                l[i][j] = v.sqrt();
            } else {
                l[i][j] = v / l[j][j];
            }
        }
    }
    // Undo the equilibration: L_orig = D^{-1} L_scaled.
    for i in 0..n {
        for j in 0..=i {
            l[i][j] /= d[i];
        }
    }
    Ok(l)
}

/// Jacobi parameters from moments via Hankel Cholesky factorisation.
///
/// With `H = LLᵀ` the orthonormal-polynomial coefficients are the rows of
/// `L^{-1}`, which gives `ρ_n = L_{nn}/L_{n-1,n-1}` and
/// `q_n = L_{n,n-1}/L_{n-1,n-1} − L_{n-1,n-2}/L_{n-2,n-2}` (0-indexed `L`,
/// 1-based parameters). In exact arithmetic this agrees with the classical
/// determinantal expressions.
pub fn moments_to_jacobi(s: &MomentSequence) -> Result<JacobiParameters> {
    let l = hankel_cholesky(&s.values)?;
    let n = l.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "need at least s_0, s_1, s_2 to extract Jacobi parameters".into(),
        ));
    }
    let mut offdiag = Vec::with_capacity(n - 1);
    let mut diag = Vec::with_capacity(n - 1);
    for k in 1..n {
        offdiag.push(l[k][k] / l[k - 1][k - 1]);
        let a_prev = if k >= 2 { l[k - 1][k - 2] / l[k - 2][k - 2] } else { 0.0 };
        let a_cur = l[k][k - 1] / l[k - 1][k - 1];
        diag.push(a_cur - a_prev);
    }
    JacobiParameters::new(offdiag, diag)
}

/// Moments `s_0, …, s_{2N}` of the (normalized) measure attached to `J`,
/// computed as top-left entries of powers of the truncated Jacobi matrix.
pub fn jacobi_to_moments(j: &JacobiParameters, n: usize) -> Result<MomentSequence> {
    if j.len() < n {
        return Err(Error::InvalidJacobi(format!(
            "need parameters through index {n}, have {}",
            j.len()
        )));
    }
    // Moments up to s_{2N} only see the first N+1 basis vectors.
    let dim = n + 1;
    let mut v = vec![0.0f64; dim];
    v[0] = 1.0;
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(1.0);
    let mut w = vec![0.0f64; dim];
    for _ in 0..2 * n {
        for i in 0..dim {
            let mut acc = v[i] * j.diag.get(i).copied().unwrap_or(0.0);
            if i > 0 {
                acc += v[i - 1] * j.offdiag[i - 1];
            }
            if i + 1 < dim {
                acc += v[i + 1] * j.offdiag[i];
            }
            w[i] = acc;
        }
        core::mem::swap(&mut v, &mut w);
        out.push(v[0]);
    }
    MomentSequence::new(out, true)
}

/// First- and second-kind polynomial values at `z = 0`, indices `0..=n`.
pub fn poly_values_at_zero(j: &JacobiParameters, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if j.len() < n {
        return Err(Error::InvalidJacobi(format!(
            "need parameters through index {n}, have {}",
            j.len()
        )));
    }
    let mut p = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    p.push(1.0f64);
    q.push(0.0f64);
    for k in 1..=n {
        let rho = j.offdiag[k - 1];
        let qk = j.diag[k - 1];
        let rho_prev = if k >= 2 { j.offdiag[k - 2] } else { 1.0 };
        let p_prev2 = if k >= 2 { p[k - 2] } else { 0.0 };
        let q_prev2 = if k >= 2 { q[k - 2] } else { -1.0 };
        p.push(((0.0 - qk) * p[k - 1] - rho_prev * p_prev2) / rho);
        q.push(((0.0 - qk) * q[k - 1] - rho_prev * q_prev2) / rho);
    }
    Ok((p, q))
}

/// A polynomial with coefficients scaled by `exp(log_scale)`:
/// the true coefficient of `z^k` is `coeffs[k]·e^{log_scale}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoly {
    pub coeffs: Vec<f64>,
    pub log_scale: f64,
}

impl ScaledPoly {
    /// `ln |coefficient of z^k|`, or `-∞` if it vanishes.
    pub fn log_abs_coeff(&self, k: usize) -> f64 {
        match self.coeffs.get(k) {
            Some(&c) if c != 0.0 => c.abs().ln() + self.log_scale,
            _ => f64::NEG_INFINITY,
        }
    }

    fn normalized(mut coeffs: Vec<f64>, log_scale: f64) -> Self {
        let m = coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        if m > 0.0 && !(0.5..=2.0).contains(&m) {
            for c in &mut coeffs {
                *c /= m;
            }
            ScaledPoly {
                coeffs,
                log_scale: log_scale + m.ln(),
            }
        } else {
            ScaledPoly { coeffs, log_scale }
        }
    }
}

/// Coefficient tables of the orthonormal polynomials through degree `N`,
/// carried in log-scaled form so factorial-scale growth neither overflows
/// nor underflows.
#[derive(Debug, Clone)]
pub struct PolynomialTable {
    pub degree: usize,
    /// `first[n]` holds the coefficients of `P_n`.
    pub first: Vec<ScaledPoly>,
    /// `second[n]` holds the coefficients of `Q_n`; empty when the table was
    /// built first-kind-only.
    pub second: Vec<ScaledPoly>,
    /// Plain values `P_n(0)` (bounded for limit-circle data).
    pub p_at_zero: Vec<f64>,
    /// Plain values `Q_n(0)`.
    pub q_at_zero: Vec<f64>,
}

impl PolynomialTable {
    /// `ln b_{n,n}` of the first-kind polynomial of degree `n`.
    pub fn log_leading(&self, n: usize) -> f64 {
        self.first[n].log_abs_coeff(n)
    }
}

/// Builds the coefficient tables by running the three-term recurrence.
pub fn polynomial_tables(
    j: &JacobiParameters,
    n: usize,
    with_second: bool,
) -> Result<PolynomialTable> {
    if n < 1 {
        return Err(Error::InvalidJacobi("polynomial table needs degree >= 1".into()));
    }
    if j.len() < n {
        return Err(Error::InvalidJacobi(format!(
            "need parameters through index {n}, have {}",
            j.len()
        )));
    }

    fn advance(cols: &mut Vec<ScaledPoly>, k: usize, rho: f64, qk: f64, rho_prev: f64) {
        let prev = &cols[k - 1];
        let prev2 = &cols[k - 2];
        let rebase = (prev2.log_scale - prev.log_scale).exp();
        let mut out = vec![0.0f64; k + 1];
        // (z − q_k)·prev − ρ_{k-1}·prev2, carried at prev's scale.
        for (i, &c) in prev.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= qk * c;
        }
        for (i, &c) in prev2.coeffs.iter().enumerate() {
            out[i] -= rho_prev * c * rebase;
        }
        for c in &mut out {
            *c /= rho;
        }
        let scale = cols[k - 1].log_scale;
        cols.push(ScaledPoly::normalized(out, scale));
    }

    let mut first = Vec::with_capacity(n + 1);
    first.push(ScaledPoly {
        coeffs: vec![1.0],
        log_scale: 0.0,
    });
    first.push(ScaledPoly::normalized(
        vec![-j.diag[0] / j.offdiag[0], 1.0 / j.offdiag[0]],
        0.0,
    ));
    for k in 2..=n {
        advance(&mut first, k, j.offdiag[k - 1], j.diag[k - 1], j.offdiag[k - 2]);
    }

    let mut second = Vec::new();
    if with_second {
        second.push(ScaledPoly {
            coeffs: vec![0.0],
            log_scale: 0.0,
        });
        second.push(ScaledPoly {
            coeffs: vec![1.0 / j.offdiag[0]],
            log_scale: 0.0,
        });
        for k in 2..=n {
            advance(&mut second, k, j.offdiag[k - 1], j.diag[k - 1], j.offdiag[k - 2]);
        }
    }

    let (p_at_zero, q_at_zero) = poly_values_at_zero(j, n)?;
    Ok(PolynomialTable {
        degree: n,
        first,
        second,
        p_at_zero,
        q_at_zero,
    })
}

/// Finite section of a Hamburger Hamiltonian recovered from Jacobi data via
/// `l_n = P_n(0)² + Q_n(0)²` and the angle of `(P_n(0), Q_n(0))`.
pub fn hamiltonian_from_jacobi(j: &JacobiParameters, n: usize) -> Result<FiniteRankHamiltonian> {
    let (p, q) = poly_values_at_zero(j, n)?;
    let mut lengths = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    for k in 1..=n {
        let l = p[k] * p[k] + q[k] * q[k];
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::NumericFailure(format!(
                "degenerate recovered length l_{k} = {l}"
            )));
        }
        lengths.push(l);
        angles.push(q[k].atan2(p[k]).rem_euclid(core::f64::consts::PI));
    }
    let out = FiniteRankHamiltonian::new(lengths, angles)?;
    // Convention self-check: the inverse map must reproduce the input.
    let back = jacobi_from_finite(&out)?;
    let mut worst = 0.0f64;
    for k in 0..n.min(back.len()) {
        let dr = (back.offdiag[k] - j.offdiag[k]).abs() / j.offdiag[k].abs().max(1.0);
        let dq = (back.diag[k] - j.diag[k]).abs() / j.diag[k].abs().max(1.0);
        worst = worst.max(dr).max(dq);
    }
    if worst > 1e-8 {
        return Err(Error::RoundTripMismatch { residual: worst });
    }
    Ok(out)
}

/// Jacobi parameters `ρ_1..ρ_N, q_1..q_N` of a finite Hamiltonian section.
pub fn jacobi_from_finite(h: &FiniteRankHamiltonian) -> Result<JacobiParameters> {
    let n = h.rank();
    let l = &h.lengths;
    let phi = &h.angles;
    let sin1 = sin_mod_pi(phi[0]);
    if sin1 == 0.0 {
        return Err(Error::InvalidHamiltonian(
            "φ_1 ≡ 0 mod π is outside the normalized correspondence".into(),
        ));
    }
    let mut offdiag = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    offdiag.push(1.0 / (sin1.abs() * l[0].sqrt()));
    diag.push(-cot(phi[0]));
    for m in 2..=n {
        let d_cur = phi[m - 1] - phi[m - 2];
        let s = sin_mod_pi(d_cur);
        if s == 0.0 {
            return Err(Error::InvalidHamiltonian(format!(
                "angles φ_{} and φ_{} coincide mod π",
                m,
                m - 1
            )));
        }
        offdiag.push(1.0 / (s.abs() * (l[m - 2] * l[m - 1]).sqrt()));
        let d_prev = if m == 2 { phi[0] } else { phi[m - 2] - phi[m - 3] };
        diag.push(-(cot(d_cur) + cot(d_prev)) / l[m - 2]);
    }
    JacobiParameters::new(offdiag, diag)
}

/// Jacobi parameters of the first `N` intervals of an infinite Hamiltonian.
pub fn jacobi_from_hamiltonian(
    h: &HamburgerHamiltonian,
    n: u64,
    cap: u64,
) -> Result<JacobiParameters> {
    let finite = FiniteRankHamiltonian::truncate(h, n, cap)?;
    jacobi_from_finite(&finite)
}

fn cot(x: f64) -> f64 {
    let s = sin_mod_pi(x);
    if s == 1.0 || s == -1.0 {
        // exact odd quarter turn
        return 0.0;
    }
    x.cos() / x.sin()
}

/// Livšic-type finite-horizon order estimates.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LivsicReport {
    /// Raw running maximum of `2n ln n / ln s_{2n}` over the final dyadic
    /// window.
    pub livsic_raw: Option<f64>,
    /// Growth-fitted estimate of `limsup 2n ln n / ln s_{2n}`.
    pub livsic_estimate: Option<f64>,
    /// Raw running maximum of `n ln n / ln b_{n,n}^{-1}`.
    pub leading_raw: Option<f64>,
    /// Growth-fitted estimate of `limsup n ln n / ln b_{n,n}^{-1}`.
    pub leading_estimate: Option<f64>,
    /// Smallest observed `b_{n,n}·√s_{2n}` when both inputs are available
    /// (the classical inequality asserts this is ≥ 1).
    pub min_m62_product: Option<f64>,
    pub horizon: usize,
}

/// Estimates the Livšic quantity `limsup 2n ln n / ln s_{2n}` from
/// `ln s_{2n}` samples (entry `n-1` holds the value for index `n`), and its
/// leading-coefficient refinement `limsup n ln n / ln b_{n,n}^{-1}` from
/// `ln b_{n,n}` samples. Either input may be absent.
pub fn livsic_bounds(log_s2n: Option<&[f64]>, log_bnn: Option<&[f64]>) -> Result<LivsicReport> {
    let horizon = log_s2n
        .map(|v| v.len())
        .unwrap_or(0)
        .max(log_bnn.map(|v| v.len()).unwrap_or(0));
    if horizon < 8 {
        return Err(Error::InsufficientData(
            "livsic estimates need at least 8 values".into(),
        ));
    }

    fn raw_limsup(vals: &[f64], num: impl Fn(f64) -> f64) -> Option<f64> {
        let n = vals.len();
        let mut best = f64::NEG_INFINITY;
        for m in n / 2..n {
            let nn = (m + 1) as f64;
            if vals[m] > 0.0 {
                best = best.max(num(nn) / vals[m]);
            }
        }
        best.is_finite().then_some(best)
    }

    let (livsic_raw, livsic_estimate) = match log_s2n {
        Some(v) => {
            let raw = raw_limsup(v, |n| 2.0 * n * n.ln());
            let fit = fitted_growth_delta(v)
                .map(|d| 2.0 / d)
                .filter(|x| x.is_finite() && *x > 0.0);
            (raw, fit.or(raw))
        }
        None => (None, None),
    };
    let (leading_raw, leading_estimate) = match log_bnn {
        Some(v) => {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let raw = raw_limsup(&neg, |n| n * n.ln());
            let fit = fitted_growth_delta(&neg)
                .map(|d| 1.0 / d)
                .filter(|x| x.is_finite() && *x > 0.0);
            (raw, fit.or(raw))
        }
        None => (None, None),
    };

    let min_m62_product = match (log_s2n, log_bnn) {
        (Some(s), Some(b)) => {
            let m = s.len().min(b.len());
            let mut worst = f64::INFINITY;
            for i in 0..m {
                worst = worst.min((b[i] + 0.5 * s[i]).exp());
            }
            Some(worst)
        }
        _ => None,
    };

    Ok(LivsicReport {
        livsic_raw,
        livsic_estimate,
        leading_raw,
        leading_estimate,
        min_m62_product,
        horizon,
    })
}

/// Growth-model fit of `vals[n-1] ≈ δ·Σ_{k<n} ln k + κ·Σ_{k<n} lnln k + c·n`
/// on a geometric ladder; returns `δ` when enough data is available.
fn fitted_growth_delta(vals: &[f64]) -> Option<f64> {
    let n = vals.len();
    if n < 64 {
        return None;
    }
    let lo = ((n as f64).powf(0.4).max(16.0)) as usize;
    let mut samples: Vec<GrowthSample> = Vec::new();
    let mut p = 0.0;
    let mut q = 0.0;
    let mut next = lo as f64;
    for k in 2..=n {
        if k >= lo && k as f64 >= next {
            samples.push((k as f64, vals[k - 1], p, q));
            next *= 1.04;
        }
        let lk = (k as f64).ln();
        p += lk;
        q += lk.ln();
    }
    if samples.len() < 8 {
        return None;
    }
    fit_growth(&samples).ok().map(|f| f.delta)
}

/// Result of the coefficient-based order estimator.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientOrderEstimate {
    pub value: f64,
    /// Raw running maximum of `−2k ln k / ln Σ_{n=k}^N b_{k,n}²`.
    pub raw_value: f64,
    pub truncation_index: usize,
    /// Truncating the tail sum at `N` can only shrink it, so the estimate is
    /// biased downward.
    pub lower_biased: bool,
}

/// Order estimate from `limsup_k (−2k ln k) / ln Σ_{n=k}^{N} b_{k,n}²`.
///
/// With `diag_only` the sum keeps only `b_{k,k}²`, which reproduces the
/// reciprocal growth rate of the leading coefficients.
pub fn order_from_coefficients(
    table: &PolynomialTable,
    k_lo: usize,
    k_hi: usize,
    diag_only: bool,
) -> Result<CoefficientOrderEstimate> {
    let n = table.degree;
    if k_lo < 2 || k_hi > n || k_lo + 8 > k_hi {
        return Err(Error::Domain(format!(
            "coefficient order estimate needs 2 <= k_lo < k_hi <= {n} with some room"
        )));
    }
    // ln S_k = ln Σ_{m=k}^N b_{k,m}²  (log-domain throughout).
    let mut log_s = vec![f64::NEG_INFINITY; k_hi + 1];
    let mut terms: Vec<f64> = Vec::new();
    for k in k_lo..=k_hi {
        terms.clear();
        for m in k..=n {
            if diag_only && m != k {
                continue;
            }
            let lb = table.first[m].log_abs_coeff(k);
            if lb != f64::NEG_INFINITY {
                terms.push(2.0 * lb);
            }
        }
        log_s[k] = log_sum_exp(terms.iter().copied());
    }

    let mut raw = f64::NEG_INFINITY;
    for k in (k_lo + (k_hi - k_lo) / 2)..=k_hi {
        if log_s[k] < 0.0 {
            let kk = k as f64;
            raw = raw.max(-2.0 * kk * kk.ln() / log_s[k]);
        }
    }

    // Corrected estimate: fit −ln S_k against exact Σln, Σlnln regressors.
    let mut samples: Vec<GrowthSample> = Vec::new();
    let mut p = 0.0;
    let mut q = 0.0;
    let mut next = k_lo as f64;
    for k in 2..=k_hi {
        if k >= k_lo && k as f64 >= next && log_s[k].is_finite() {
            samples.push((k as f64, -log_s[k], p, q));
            next *= 1.04;
        }
        let lk = (k as f64).ln();
        p += lk;
        q += lk.ln();
    }
    let value = if samples.len() >= 8 {
        match fit_growth(&samples) {
            Ok(f) if f.delta > 0.0 => 2.0 / f.delta,
            _ => raw,
        }
    } else {
        raw
    };

    if !value.is_finite() {
        return Err(Error::NumericFailure(
            "coefficient order estimate did not stabilise".into(),
        ));
    }
    Ok(CoefficientOrderEstimate {
        value,
        raw_value: raw,
        truncation_index: n,
        lower_biased: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_jacobi(rho: f64, q: f64, n: usize) -> JacobiParameters {
        JacobiParameters::new(vec![rho; n], vec![q; n]).unwrap()
    }

    #[test]
    fn chebyshev_like_p2() {
        // ρ ≡ 1/2, q ≡ 0: P_1 = 2z, P_2 = 4z² − 1 by hand recurrence.
        let j = constant_jacobi(0.5, 0.0, 4);
        let t = polynomial_tables(&j, 2, true).unwrap();
        let p2: Vec<f64> = (0..=2)
            .map(|k| t.first[2].coeffs.get(k).copied().unwrap_or(0.0) * t.first[2].log_scale.exp())
            .collect();
        assert!((p2[0] + 1.0).abs() < 1e-12, "{p2:?}");
        assert!(p2[1].abs() < 1e-12);
        assert!((p2[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn odd_first_kind_values_vanish_for_symmetric_data() {
        let j = constant_jacobi(0.5, 0.0, 10);
        let (p, _q) = poly_values_at_zero(&j, 10).unwrap();
        for n in (1..=9).step_by(2) {
            assert_eq!(p[n], 0.0, "P_{n}(0) should vanish");
        }
    }

    #[test]
    fn leading_coefficient_product_identity_exact_dyadic() {
        // Dyadic parameters keep every recurrence operation exact in binary
        // floating point, so the product identity must hold to rounding.
        let rhos = vec![0.5, 2.0, 1.0, 0.25, 0.5, 4.0, 1.0, 2.0, 0.5, 1.0];
        let qs = vec![0.0, 0.5, -1.0, 2.0, 0.0, -0.5, 1.0, 0.0, -2.0, 0.5];
        let j = JacobiParameters::new(rhos.clone(), qs).unwrap();
        let t = polynomial_tables(&j, 10, false).unwrap();
        let mut log_prod = 0.0;
        for n in 1..=10usize {
            log_prod += rhos[n - 1].ln();
            let lb = t.log_leading(n);
            assert!(
                (lb + log_prod).abs() < 1e-12,
                "b_{{{n},{n}}} should be the reciprocal rho product, off by {}",
                (lb + log_prod).abs()
            );
        }
    }

    #[test]
    fn semicircle_moments_from_chebyshev_jacobi() {
        // ρ ≡ 1/2, q ≡ 0 gives s_{2n} = Catalan(n)/4^n: 1, 1/4, 1/8, 5/64, 14/256.
        let j = constant_jacobi(0.5, 0.0, 6);
        let s = jacobi_to_moments(&j, 4).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert_eq!(s.values[1], 0.0);
        assert!((s.values[2] - 0.25).abs() < 1e-15);
        assert!((s.values[4] - 0.125).abs() < 1e-15);
        assert!((s.values[6] - 5.0 / 64.0).abs() < 1e-15);
        assert!((s.values[8] - 14.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn moments_to_jacobi_recovers_chebyshev() {
        let j = constant_jacobi(0.5, 0.0, 8);
        let s = jacobi_to_moments(&j, 8).unwrap();
        let back = moments_to_jacobi(&s).unwrap();
        for k in 0..8 {
            assert!((back.offdiag[k] - 0.5).abs() < 1e-10, "rho_{k}");
            assert!(back.diag[k].abs() < 1e-10, "q_{k}");
        }
    }

    #[test]
    fn symmetric_moments_force_zero_diagonal() {
        let s = MomentSequence::new(vec![1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0], true).unwrap();
        let j = moments_to_jacobi(&s).unwrap();
        for q in &j.diag {
            assert!(q.abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_hamiltonian_from_symmetric_jacobi() {
        let j = constant_jacobi(0.5, 0.0, 12);
        let h = hamiltonian_from_jacobi(&j, 10).unwrap();
        // q ≡ 0 corresponds to angles at integer multiples of π/2.
        for phi in &h.angles {
            let r = phi / core::f64::consts::FRAC_PI_2;
            assert!((r - r.round()).abs() < 1e-9, "angle {phi} not diagonal");
        }
    }

    #[test]
    fn unit_hamiltonian_round_trip() {
        // l ≡ 1, φ_n = n·π/2: diagonal with unit lengths.
        let lengths = vec![1.0, 1.0, 1.0, 1.0];
        let angles: Vec<f64> = (1..=4)
            .map(|n| n as f64 * core::f64::consts::FRAC_PI_2)
            .collect();
        let h = FiniteRankHamiltonian::new(lengths, angles).unwrap();
        let j = jacobi_from_finite(&h).unwrap();
        for r in &j.offdiag {
            assert!((r - 1.0).abs() < 1e-12, "{:?}", j.offdiag);
        }
        for q in &j.diag {
            assert!(q.abs() < 1e-12);
        }
        let back = hamiltonian_from_jacobi(&j, 4).unwrap();
        for k in 0..4 {
            assert!((back.lengths[k] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn livsic_stirling_families() {
        // s_{2n} = (n!)^4 has limsup 2n ln n / ln s_{2n} = 1/2,
        // s_{2n} = (2n)! has limsup 1.
        let n = 100_000usize;
        let mut lgn = 0.0;
        let mut four_fact = Vec::with_capacity(n);
        let mut two_n_fact = Vec::with_capacity(n);
        let mut lg2n = 0.0;
        for k in 1..=n {
            lgn += (k as f64).ln();
            four_fact.push(4.0 * lgn);
            lg2n += (2.0 * k as f64 - 1.0).ln() + (2.0 * k as f64).ln();
            two_n_fact.push(lg2n);
        }
        let rep = livsic_bounds(Some(&four_fact), None).unwrap();
        let est = rep.livsic_estimate.unwrap();
        assert!((est - 0.5).abs() < 0.01, "got {est}");
        let rep2 = livsic_bounds(Some(&two_n_fact), None).unwrap();
        let est2 = rep2.livsic_estimate.unwrap();
        assert!((est2 - 1.0).abs() < 0.01, "got {est2}");
    }
}
