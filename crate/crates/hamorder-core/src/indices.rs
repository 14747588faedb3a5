//! Growth and decay indices of sequences and Hamiltonians.
//!
//! For a bounded positive sequence `y` the three basic measures are
//!
//! ```text
//! Δ*(y) = sup{τ ≥ 0 : y_n = O(n^{-τ})}                      (pointwise)
//! Δ(y)  = sup{τ ≥ 0 : (1/n)·Σ_{k=n}^{2n-1} y_k = O(n^{-τ})} (averaged)
//! δ(y,α) = liminf_n G(n; y, α),
//!     G(n; y, α) = −[α·ln y_n + Σ_{k=1}^{n-1} ln y_k] / (n·ln n)
//! ```
//!
//! and they always satisfy `Δ* ≤ Δ ≤ δ(·, α)`. For a Hamburger Hamiltonian
//! the derived quantities are `Δ_l = Δ*(l)`, `Δ_l⁺ = max(1, Δ_l)`,
//! `Δ_φ = Δ(|sin Δφ|)`, `Δ_φ* = Δ*(|sin Δφ|)`, the angle-convergence rates
//! `Λ`, `Λ*`, and the lower-bound rates `δ_l`, `δ_φ`, `δ_{l,φ}`.
//!
//! # Finite-horizon estimation
//!
//! Raw finite-horizon ratios such as `−ln y_n / ln n` or `G(n)` converge
//! only at speed `lnln n / ln n` on rules with logarithmic factors — far too
//! slow for desk-scale horizons. The headline estimators here instead fit
//! against exactly accumulated regressors (`{Σ ln k, Σ lnln k, n}`
//! cumulative, `{1, ln k, lnln k}` pointwise), which reproduce every
//! closed-form rule in this crate exactly; raw window statistics are
//! reported alongside as diagnostics. `liminf`/`limsup` quantities evaluate
//! the fit over a ladder of window endpoints and take the extreme, so block
//! families whose `G` oscillates forever are tracked along the correct
//! subsequence.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::monodromy::AngleAccumulator;
use crate::numeric::{fit_growth, fit_line, lsq, GrowthSample, Kahan};
use crate::sequences::{HamburgerHamiltonian, SeqCursor, SequenceSpec};

/// A nonnegative index that may be infinite. Serialises as a number or the
/// string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexValue {
    Finite(f64),
    Infinite,
}

impl IndexValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            IndexValue::Finite(v) => Some(*v),
            IndexValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, IndexValue::Infinite)
    }

    /// Value with infinities replaced by `cap`.
    pub fn capped(&self, cap: f64) -> f64 {
        match self {
            IndexValue::Finite(v) => v.min(cap),
            IndexValue::Infinite => cap,
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for IndexValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            IndexValue::Finite(v) => s.serialize_f64(*v),
            IndexValue::Infinite => s.serialize_str("inf"),
        }
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for IndexValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(alloc::string::String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(IndexValue::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(IndexValue::Infinite),
            Raw::Str(s) => Err(D::Error::custom(format!(
                "expected number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Any fitted exponent above this is reported as the infinite marker.
const INFINITY_THRESHOLD: f64 = 50.0;

/// The `G`-functional `−[α ln y_n + Σ_{k<n} ln y_k]/(n ln n)`, log-domain.
pub fn g_value(y: &SequenceSpec, n: u64, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("G(n; y, α) needs n >= 2".into()));
    }
    let mut cur = SeqCursor::new(y)?;
    let mut acc = Kahan::new();
    let mut yn = 0.0;
    for k in 1..=n {
        let v = cur.next_value()?;
        if !(v > 0.0) {
            return Err(Error::Domain(format!("y_{k} = {v} is not positive")));
        }
        if k < n {
            acc.add(v.ln());
        } else {
            yn = v;
        }
    }
    let nn = n as f64;
    Ok(-(alpha * yn.ln() + acc.value()) / (nn * nn.ln()))
}

/// Report of the three growth estimators for one sequence.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthReport {
    pub delta_star_hat: IndexValue,
    pub delta_avg_hat: IndexValue,
    pub delta_liminf_hat: f64,
    /// Raw minimum of `G` over the final dyadic window (uncorrected).
    pub delta_liminf_raw: f64,
    pub alpha: f64,
    pub horizon: u64,
    /// Drift of the liminf estimate against the quarter-horizon ladder;
    /// small drift indicates convergence.
    pub drift: f64,
    pub converged: bool,
}

/// Estimates `Δ*`, `Δ` and `δ(·, α)` of a positive bounded sequence.
pub fn growth_exponents(y: &SequenceSpec, alpha: f64, horizon: u64) -> Result<GrowthReport> {
    if horizon < 16 {
        return Err(Error::InsufficientData(
            "growth exponents need horizon >= 16".into(),
        ));
    }
    let vals = y.materialize(1, horizon, crate::sequences::DEFAULT_MATERIALIZE_CAP)?;
    if let Some((i, &v)) = vals.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("y_{} = {v} is not positive", i + 1)));
    }
    let logs: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    growth_exponents_from_values(&vals, &logs, alpha, horizon)
}

pub(crate) fn growth_exponents_from_values(
    vals: &[f64],
    logs: &[f64],
    alpha: f64,
    horizon: u64,
) -> Result<GrowthReport> {
    let delta_star_hat = pointwise_decay_exponent(logs);
    let delta_avg_hat = averaged_decay_exponent(vals);
    let lim = liminf_g(logs, alpha);
    Ok(GrowthReport {
        delta_star_hat,
        delta_avg_hat,
        delta_liminf_hat: lim.estimate,
        delta_liminf_raw: lim.raw,
        alpha,
        horizon,
        drift: lim.drift,
        converged: lim.drift.abs() < 0.05,
    })
}

/// Pointwise decay rate `Δ*`: envelope-restricted fit of `−ln y_k` against
/// `{1, ln k, lnln k}`.
///
/// `Δ*` is decided by the slowest-decaying subsequence, so the fit is
/// restricted to indices realising the per-octave minimum of
/// `−ln y_k / ln k`, keeping only octaves whose minimum sits near the global
/// envelope (block families park entire octaves far above it).
fn pointwise_decay_exponent(logs: &[f64]) -> IndexValue {
    let floor = (logs.len() / 8).clamp(2, 32) as f64;
    let pts: Vec<(f64, f64)> = logs
        .iter()
        .enumerate()
        .skip(1) // k = 1 has ln k = 0
        .map(|(i, &lv)| ((i + 1) as f64, -lv))
        .filter(|&(k, _)| k >= floor)
        .collect();
    envelope_exponent(&pts)
}

/// Averaged decay rate `Δ`: the envelope fit applied to the dyadic block
/// averages `(1/m)·Σ_{k=m}^{2m-1} y_k` on a geometric ladder of `m`.
fn averaged_decay_exponent(vals: &[f64]) -> IndexValue {
    let h = vals.len();
    let mut prefix = Vec::with_capacity(h + 1);
    let mut acc = Kahan::new();
    prefix.push(0.0);
    for &v in vals {
        acc.add(v);
        prefix.push(acc.value());
    }
    let floor = (h / 64).clamp(2, 48);
    let mut pts = Vec::new();
    let mut m = floor;
    let mut mf = floor as f64;
    while 2 * m - 1 <= h {
        let avg = (prefix[2 * m - 1] - prefix[m - 1]) / m as f64;
        if avg > 0.0 {
            pts.push((m as f64, -avg.ln()));
        }
        mf *= 1.15;
        m = (mf as usize).max(m + 1);
    }
    envelope_exponent(&pts)
}

/// Shared envelope fit: given points `(k, v_k)` with `v_k ≈ c + δ·ln k +
/// κ·lnln k` along the envelope subsequence, recover `δ` (clamped to ≥ 0).
fn envelope_exponent(pts: &[(f64, f64)]) -> IndexValue {
    if pts.len() < 4 {
        return IndexValue::Finite(0.0);
    }
    let mut octaves: Vec<Vec<(f64, f64, f64)>> = Vec::new(); // (k, v, v/ln k)
    for &(k, v) in pts {
        if k < 4.0 {
            continue;
        }
        let oct = (k.ln() / core::f64::consts::LN_2) as usize;
        while octaves.len() <= oct {
            octaves.push(Vec::new());
        }
        octaves[oct].push((k, v, v / k.ln()));
    }
    let mut oct_min: Vec<(usize, f64)> = Vec::new();
    for (j, bucket) in octaves.iter().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        let m = bucket.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        oct_min.push((j, m));
    }
    if oct_min.is_empty() {
        return IndexValue::Finite(0.0);
    }
    let global_min = oct_min.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if global_min > INFINITY_THRESHOLD {
        return IndexValue::Infinite;
    }
    // Octaves near the envelope; the allowance absorbs the lnln k / ln k
    // drift of log-factor rules across the k-range.
    let gap = 0.25 * (1.0 + global_min.abs());
    let mut xs_one = Vec::new();
    let mut xs_ln = Vec::new();
    let mut xs_lnln = Vec::new();
    let mut ys = Vec::new();
    for &(j, m) in &oct_min {
        if m > global_min + gap {
            continue;
        }
        let band = 0.02 * (1.0 + m.abs());
        for &(k, v, r) in &octaves[j] {
            if r <= m + band {
                xs_one.push(1.0);
                xs_ln.push(k.ln());
                xs_lnln.push(k.ln().ln());
                ys.push(v);
            }
        }
    }
    if ys.len() < 4 {
        let tail_min = oct_min
            .iter()
            .rev()
            .take(2)
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min);
        return IndexValue::Finite(tail_min.max(0.0));
    }
    match lsq(&[xs_one, xs_ln, xs_lnln], &ys) {
        Ok(c) => {
            let delta = c[1];
            if delta > INFINITY_THRESHOLD {
                IndexValue::Infinite
            } else {
                IndexValue::Finite(delta.max(0.0))
            }
        }
        Err(_) => IndexValue::Finite(global_min.max(0.0)),
    }
}

struct LiminfFit {
    estimate: f64,
    raw: f64,
    drift: f64,
}

/// Fitted liminf of `G(n; y, α)`: cumulative sums `−Σ ln y` fitted against
/// `{Σ ln k, Σ lnln k, n}` over windows ending at a ladder of endpoints
/// spanning the final factor of 4; the minimum over endpoints tracks the
/// envelope subsequence of oscillating block families.
fn liminf_g(logs: &[f64], alpha: f64) -> LiminfFit {
    let h = logs.len();
    let mut v = Vec::with_capacity(h);
    let mut p = Vec::with_capacity(h);
    let mut q = Vec::with_capacity(h);
    let mut av = Kahan::new();
    let mut ap = Kahan::new();
    let mut aq = Kahan::new();
    for n in 1..=h {
        v.push(-av.value());
        p.push(ap.value());
        q.push(aq.value());
        av.add(logs[n - 1]);
        let ln = (n as f64).ln();
        if n >= 2 {
            ap.add(ln);
            aq.add(ln.ln());
        }
    }

    let g_at = |n: usize| -> f64 {
        let nn = n as f64;
        (v[n - 1] - alpha * logs[n - 1]) / (nn * nn.ln())
    };
    let mut raw = f64::INFINITY;
    for n in (h / 2).max(2)..=h {
        raw = raw.min(g_at(n));
    }

    let fit_end = |end: usize| -> Option<f64> {
        let lo = ((end as f64).powf(0.4).max(24.0)) as usize;
        if lo + 8 > end {
            return None;
        }
        let mut samples: Vec<GrowthSample> = Vec::new();
        let ratio = (end as f64 / lo as f64).powf(1.0 / 72.0);
        let mut next = lo as f64;
        let mut n = lo;
        while n <= end {
            samples.push((
                n as f64,
                v[n - 1] - alpha * logs[n - 1],
                p[n - 1],
                q[n - 1],
            ));
            next = (next * ratio).max(next + 1.0);
            n = next as usize;
        }
        if samples.len() < 8 {
            return None;
        }
        fit_growth(&samples).ok().map(|f| f.delta)
    };

    let ladder = |hi: usize| -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..9 {
            let end = ((hi as f64) * 0.25f64.powf(1.0 - i as f64 / 8.0)) as usize;
            if let Some(d) = fit_end(end.max(32)) {
                best = best.min(d);
            }
        }
        best
    };

    let cur = ladder(h);
    let prev = ladder((h / 4).max(64));
    if cur.is_finite() {
        LiminfFit {
            estimate: cur,
            raw,
            drift: if prev.is_finite() { cur - prev } else { 0.0 },
        }
    } else {
        LiminfFit {
            estimate: raw,
            raw,
            drift: 0.0,
        }
    }
}

/// Verdict of the regular-distribution test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RegularityVerdict {
    Regular,
    Irregular,
    Undecided,
}

/// Result of [`regularity_ratio`].
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityReport {
    /// `sup_n y_n / (Π_{k≤n} y_k)^{1/n}` over the horizon.
    pub sup_ratio: f64,
    pub log_sup_ratio: f64,
    pub verdict: RegularityVerdict,
    /// Fitted growth power of the ratio (positive for irregular sequences).
    pub growth_power: f64,
}

/// Tests whether `y_n / (geometric mean of y_1..y_n)` stays bounded.
pub fn regularity_ratio(y: &SequenceSpec, horizon: u64) -> Result<RegularityReport> {
    if horizon < 16 {
        return Err(Error::InsufficientData(
            "regularity test needs horizon >= 16".into(),
        ));
    }
    let vals = y.materialize(1, horizon, crate::sequences::DEFAULT_MATERIALIZE_CAP)?;
    if let Some((i, &v)) = vals.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("y_{} = {v} is not positive", i + 1)));
    }
    let mut acc = Kahan::new();
    let mut log_ratio = Vec::with_capacity(vals.len());
    for (i, &v) in vals.iter().enumerate() {
        let lv = v.ln();
        acc.add(lv);
        log_ratio.push(lv - acc.value() / (i + 1) as f64);
    }
    let log_sup = log_ratio.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));

    // Sustained power growth: fit the running max against ln n on the tail.
    let h = log_ratio.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut run_max = f64::NEG_INFINITY;
    let stride = (h / 64).max(1);
    for (i, &t) in log_ratio.iter().enumerate() {
        run_max = run_max.max(t);
        let n = i + 1;
        if n >= h / 8 && n % stride == 0 {
            xs.push((n as f64).ln());
            ys.push(run_max);
        }
    }
    let growth_power = fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(0.0);

    let first_half_max = log_ratio[..h / 2]
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let moved = log_sup > first_half_max + 0.05 * (1.0 + first_half_max.abs());

    let verdict = if growth_power > 0.05 {
        RegularityVerdict::Irregular
    } else if !moved {
        RegularityVerdict::Regular
    } else {
        RegularityVerdict::Undecided
    };
    Ok(RegularityReport {
        sup_ratio: log_sup.exp(),
        log_sup_ratio: log_sup,
        verdict,
        growth_power,
    })
}

/// Complete set of Hamiltonian indices.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HamiltonianIndices {
    pub delta_l: IndexValue,
    pub delta_l_plus: IndexValue,
    pub delta_phi: IndexValue,
    pub delta_phi_star: IndexValue,
    pub lambda: IndexValue,
    pub lambda_star: IndexValue,
    pub delta_lower_l: f64,
    pub delta_lower_phi: f64,
    pub delta_lower_l_phi: f64,
    /// Limit of the angles mod π when the steps converge, else `None`.
    pub limit_angle: Option<f64>,
    pub horizon: u64,
    /// Raw (uncorrected) window values of the liminf quantities.
    pub delta_lower_l_raw: f64,
    pub delta_lower_phi_raw: f64,
    pub delta_lower_l_phi_raw: f64,
    pub converged: bool,
}

/// Tail-decay exponent of `Σ_{j≥n} l_j·|sin(φ_j − φ)|` relative to
/// `n^{1-Δ_l⁺}`: the fitted supremal `τ ≥ 0` with the tail `O(n^{1-Δ_l⁺-τ})`.
pub fn lambda_at(h: &HamburgerHamiltonian, phi: f64, horizon: u64) -> Result<IndexValue> {
    let data = HamiltonianData::load(h, horizon)?;
    let gr = growth_exponents_from_values(&data.lengths, &data.log_lengths, 0.5, horizon)?;
    let dlp = match gr.delta_star_hat {
        IndexValue::Finite(v) => v.max(1.0),
        IndexValue::Infinite => {
            return Err(Error::Inapplicable(
                "Λ(φ) is undefined when Δ_l⁺ is infinite".into(),
            ))
        }
    };
    Ok(data.lambda_probe(phi, dlp))
}

/// Materialised per-index data shared across the index estimators.
pub(crate) struct HamiltonianData {
    pub lengths: Vec<f64>,
    pub log_lengths: Vec<f64>,
    pub sin_diffs: Vec<f64>,
    pub log_sin_diffs: Vec<f64>,
    /// Directions `(cos φ_j, sin φ_j)`.
    pub directions: Vec<(f64, f64)>,
    /// `φ_limit − φ_j` when the angle steps form a summable closed-form rule.
    pub angle_gaps: Option<Vec<f64>>,
    pub limit_angle: Option<f64>,
    /// Closed-form length tail at the horizon, when available.
    pub length_tail: Option<f64>,
}

impl HamiltonianData {
    pub fn load(h: &HamburgerHamiltonian, horizon: u64) -> Result<Self> {
        if horizon < 64 {
            return Err(Error::InsufficientData(
                "hamiltonian indices need horizon >= 64".into(),
            ));
        }
        let n = horizon as usize;
        let lengths = h
            .lengths
            .materialize(1, horizon, crate::sequences::DEFAULT_MATERIALIZE_CAP)?;
        if let Some((i, &l)) = lengths.iter().enumerate().find(|(_, &l)| !(l > 0.0)) {
            return Err(Error::InvalidHamiltonian(format!(
                "length l_{} = {l} is not strictly positive",
                i + 1
            )));
        }
        let log_lengths: Vec<f64> = lengths.iter().map(|v| v.ln()).collect();

        let mut directions = Vec::with_capacity(n);
        let mut sin_diffs = Vec::with_capacity(n - 1);
        match &h.angles {
            SequenceSpec::ArithmeticStep { base, step } => {
                let mut sc = SeqCursor::new(step)?;
                let mut acc = AngleAccumulator::new(*base);
                directions.push(acc.direction());
                for _ in 1..n {
                    let st = sc.next_value()?;
                    sin_diffs.push(crate::sequences::sin_mod_pi(st).abs());
                    acc.push(st);
                    directions.push(acc.direction());
                }
            }
            other => {
                let mut cur = SeqCursor::new(other)?;
                let mut prev = cur.next_value()?;
                directions.push(AngleAccumulator::new(prev).direction());
                for _ in 1..n {
                    let next = cur.next_value()?;
                    sin_diffs.push(crate::sequences::sin_mod_pi(next - prev).abs());
                    directions.push(AngleAccumulator::new(next).direction());
                    prev = next;
                }
            }
        }
        if let Some((i, _)) = sin_diffs.iter().enumerate().find(|(_, &s)| s == 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "angles φ_{} and φ_{} coincide mod π",
                i + 2,
                i + 1
            )));
        }
        let log_sin_diffs: Vec<f64> = sin_diffs.iter().map(|v| v.ln()).collect();

        // Limit angle and per-index gaps via the step-rule tail, which stays
        // accurate long after the accumulated angles converge in floating
        // point.
        let mut angle_gaps = None;
        let mut limit_angle = None;
        if let Some((ang, _err)) = h.limit_angle() {
            limit_angle = Some(ang);
            if let SequenceSpec::ArithmeticStep { step, .. } = &h.angles {
                if let Some(Ok(tail)) = step.tail_sum(horizon) {
                    let mut sc = SeqCursor::new(step)?;
                    let mut steps = Vec::with_capacity(n);
                    for _ in 0..n {
                        steps.push(sc.next_value()?);
                    }
                    // gap_j = Σ_{k≥j} step_k (φ_{k+1} − φ_k indexed by k)
                    let mut gaps = alloc::vec![0.0f64; n];
                    let mut acc = Kahan::new();
                    acc.add(tail.value);
                    for j in (0..n).rev() {
                        acc.add(steps[j]);
                        gaps[j] = acc.value();
                    }
                    angle_gaps = Some(gaps);
                }
            }
        }

        let length_tail = match h.lengths.tail_sum(horizon) {
            Some(Ok(t)) => Some(t.value),
            _ => None,
        };

        Ok(Self {
            lengths,
            log_lengths,
            sin_diffs,
            log_sin_diffs,
            directions,
            angle_gaps,
            limit_angle,
            length_tail,
        })
    }

    /// Fitted `τ(φ)` for one probe angle.
    pub fn lambda_probe(&self, phi: f64, delta_l_plus: f64) -> IndexValue {
        let n = self.lengths.len();
        let (cp, sp) = AngleAccumulator::new(phi).direction();
        let use_gaps = match (self.limit_angle, &self.angle_gaps) {
            (Some(lim), Some(_)) => crate::sequences::sin_mod_pi(lim - phi).abs() < 1e-12,
            _ => false,
        };
        let mut w = Vec::with_capacity(n);
        if use_gaps {
            let gaps = self.angle_gaps.as_ref().unwrap();
            for j in 0..n {
                w.push(self.lengths[j] * crate::sequences::sin_mod_pi(gaps[j]).abs());
            }
        } else {
            for j in 0..n {
                let (c, s) = self.directions[j];
                w.push(self.lengths[j] * (s * cp - c * sp).abs());
            }
        }
        // Backward tail sums with a continuation estimate beyond the horizon
        // (length-weighted mean |sin| over the last window times the length
        // tail).
        let window = n / 2;
        let mut wsum = 0.0;
        let mut lsum = 0.0;
        for j in window..n {
            wsum += w[j];
            lsum += self.lengths[j];
        }
        let continuation = match self.length_tail {
            Some(t) if lsum > 0.0 => t * (wsum / lsum),
            _ => 0.0,
        };
        let mut tail = alloc::vec![0.0f64; n + 1];
        let mut acc = Kahan::new();
        acc.add(continuation);
        tail[n] = acc.value();
        for j in (0..n).rev() {
            acc.add(w[j]);
            tail[j] = acc.value();
        }
        // Fit ln tail_m ≈ c + σ·ln m + b·lnln m and read τ = 1 − Δ_l⁺ − σ.
        let hi = n / 4;
        let lo = ((n as f64).powf(0.35)).max(16.0) as usize;
        if lo + 4 > hi {
            return IndexValue::Finite(0.0);
        }
        let mut xs_one = Vec::new();
        let mut xs_ln = Vec::new();
        let mut xs_lnln = Vec::new();
        let mut ys = Vec::new();
        let ratio = (hi as f64 / lo as f64).powf(1.0 / 48.0);
        let mut m = lo as f64;
        while (m as usize) <= hi {
            let idx = m as usize;
            let t = tail[idx - 1];
            if t > 0.0 {
                xs_one.push(1.0);
                xs_ln.push((idx as f64).ln());
                xs_lnln.push((idx as f64).ln().ln());
                ys.push(t.ln());
            }
            m = (m * ratio).max(m + 1.0);
        }
        if ys.len() < 6 {
            // tail sums vanished: the angles sit exactly on the probe
            return IndexValue::Infinite;
        }
        match lsq(&[xs_one, xs_ln, xs_lnln], &ys) {
            Ok(c) => {
                let tau = 1.0 - delta_l_plus - c[1];
                if tau > INFINITY_THRESHOLD {
                    IndexValue::Infinite
                } else {
                    IndexValue::Finite(tau.max(0.0))
                }
            }
            Err(_) => IndexValue::Finite(0.0),
        }
    }
}

/// Number of uniform probe angles for the Λ supremum.
pub const LAMBDA_GRID: usize = 64;

/// Assembles all indices of a Hamburger Hamiltonian at the given horizon.
pub fn hamiltonian_indices(h: &HamburgerHamiltonian, horizon: u64) -> Result<HamiltonianIndices> {
    let data = HamiltonianData::load(h, horizon)?;

    let gr_l = growth_exponents_from_values(&data.lengths, &data.log_lengths, 0.5, horizon)?;
    let gr_phi =
        growth_exponents_from_values(&data.sin_diffs, &data.log_sin_diffs, 0.0, horizon - 1)?;

    let delta_l = gr_l.delta_star_hat;
    let delta_l_plus = match delta_l {
        IndexValue::Finite(v) => IndexValue::Finite(v.max(1.0)),
        IndexValue::Infinite => IndexValue::Infinite,
    };
    let delta_phi = gr_phi.delta_avg_hat;
    let delta_phi_star = gr_phi.delta_star_hat;

    // Λ: supremum over a uniform probe grid plus the detected limit angle.
    let lambda = match delta_l_plus {
        IndexValue::Finite(dlp) => {
            let mut best = IndexValue::Finite(0.0);
            let mut consider = |v: IndexValue| match (v, best) {
                (IndexValue::Infinite, _) => best = IndexValue::Infinite,
                (IndexValue::Finite(t), IndexValue::Finite(b)) if t > b => {
                    best = IndexValue::Finite(t)
                }
                _ => {}
            };
            for i in 0..LAMBDA_GRID {
                let phi = core::f64::consts::PI * i as f64 / LAMBDA_GRID as f64;
                consider(data.lambda_probe(phi, dlp));
            }
            if let Some(lim) = data.limit_angle {
                consider(data.lambda_probe(lim, dlp));
            }
            best
        }
        IndexValue::Infinite => IndexValue::Infinite,
    };

    // Λ* = Δ*(|sin(φ_n − φ_limit)|) when the angles converge mod π, else 0.
    let lambda_star = match (&data.limit_angle, &data.angle_gaps) {
        (Some(_), Some(gaps)) => {
            let pts: Vec<(f64, f64)> = gaps
                .iter()
                .enumerate()
                .skip(1)
                .filter_map(|(i, &g)| {
                    let s = crate::sequences::sin_mod_pi(g).abs();
                    (s > 0.0).then(|| ((i + 1) as f64, -s.ln()))
                })
                .collect();
            envelope_exponent(&pts)
        }
        _ => IndexValue::Finite(0.0),
    };

    let joint = {
        let m = data.log_sin_diffs.len();
        let combined: Vec<f64> = (0..m)
            .map(|i| data.log_lengths[i] + data.log_sin_diffs[i])
            .collect();
        liminf_g_pair(&data.log_lengths, &combined, m)
    };

    let lim_l = liminf_g(&data.log_lengths, 0.5);
    let lim_phi = liminf_g(&data.log_sin_diffs, 0.0);

    let converged = gr_l.converged && gr_phi.converged;
    Ok(HamiltonianIndices {
        delta_l,
        delta_l_plus,
        delta_phi,
        delta_phi_star,
        lambda,
        lambda_star,
        delta_lower_l: lim_l.estimate,
        delta_lower_phi: lim_phi.estimate.max(0.0),
        delta_lower_l_phi: joint,
        limit_angle: data.limit_angle,
        horizon,
        delta_lower_l_raw: lim_l.raw,
        delta_lower_phi_raw: lim_phi.raw,
        delta_lower_l_phi_raw: lim_l.raw + lim_phi.raw,
        converged,
    })
}

/// Joint liminf `δ_{l,φ} = liminf [G(m; l, ½) + G(m; sin-diffs, 0)]`.
///
/// The combined functional equals
/// `−[Σ_{k<m}(ln l_k + ln s_k) + ½·ln l_m]/(m ln m)`.
fn liminf_g_pair(log_l: &[f64], combined_logs: &[f64], m: usize) -> f64 {
    let mut v = Vec::with_capacity(m);
    let mut p = Vec::with_capacity(m);
    let mut q = Vec::with_capacity(m);
    let mut av = Kahan::new();
    let mut ap = Kahan::new();
    let mut aq = Kahan::new();
    for n in 1..=m {
        v.push(-(av.value() + 0.5 * log_l[n - 1]));
        p.push(ap.value());
        q.push(aq.value());
        av.add(combined_logs[n - 1]);
        let ln = (n as f64).ln();
        if n >= 2 {
            ap.add(ln);
            aq.add(ln.ln());
        }
    }
    let fit_end = |end: usize| -> Option<f64> {
        let lo = ((end as f64).powf(0.4).max(24.0)) as usize;
        if lo + 8 > end {
            return None;
        }
        let mut samples: Vec<GrowthSample> = Vec::new();
        let ratio = (end as f64 / lo as f64).powf(1.0 / 72.0);
        let mut next = lo as f64;
        let mut n = lo;
        while n <= end {
            samples.push((n as f64, v[n - 1], p[n - 1], q[n - 1]));
            next = (next * ratio).max(next + 1.0);
            n = next as usize;
        }
        if samples.len() < 8 {
            return None;
        }
        fit_growth(&samples).ok().map(|f| f.delta)
    };
    let mut best = f64::INFINITY;
    for i in 0..9 {
        let end = ((m as f64) * 0.25f64.powf(1.0 - i as f64 / 8.0)) as usize;
        if let Some(d) = fit_end(end.max(32)) {
            best = best.min(d);
        }
    }
    if best.is_finite() {
        best
    } else {
        let mut raw = f64::INFINITY;
        for n in (m / 2).max(2)..=m {
            let nn = n as f64;
            raw = raw.min(v[n - 1] / (nn * nn.ln()));
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;

    fn pow(exp: f64) -> SequenceSpec {
        SequenceSpec::power(exp, 0.0, 1.0)
    }

    #[test]
    fn g_value_hand_example() {
        // y = n^{-2}, n = 4, α = 1/2: G = ln 144 / (4 ln 4).
        let g = g_value(&pow(2.0), 4, 0.5).unwrap();
        let expected = 144f64.ln() / (4.0 * 4f64.ln());
        assert!((g - expected).abs() < 1e-14);
        assert!((g - 0.89628).abs() < 1e-4);
    }

    #[test]
    fn g_value_constant_one_vanishes() {
        let g = g_value(&SequenceSpec::constant(1.0), 57, 1.7).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn g_value_pure_power_matches_stirling_oracle() {
        // For y = n^{-τ}: G(n) = τ·[Σ_{k<n} ln k + ln(n)/2]/(n ln n); at
        // n = 10^6 this is still τ(1 − 1/ln n) ≈ 1.855 for τ = 2 -- the raw
        // functional approaches its limit only at 1/ln n speed.
        let n = 1_000_000u64;
        let g = g_value(&pow(2.0), n, 0.5).unwrap();
        let mut acc = Kahan::new();
        for k in 2..n {
            acc.add((k as f64).ln());
        }
        let nn = n as f64;
        let oracle = 2.0 * (acc.value() + 0.5 * nn.ln()) / (nn * nn.ln());
        assert!((g - oracle).abs() < 1e-12, "{g} vs {oracle}");
        assert!((g - 2.0 * (1.0 - 1.0 / nn.ln())).abs() < 2e-3);
    }

    #[test]
    fn growth_exponents_pure_power() {
        let rep = growth_exponents(&pow(2.0), 0.5, 100_000).unwrap();
        assert!((rep.delta_star_hat.finite().unwrap() - 2.0).abs() < 0.02);
        assert!((rep.delta_avg_hat.finite().unwrap() - 2.0).abs() < 0.02);
        assert!((rep.delta_liminf_hat - 2.0).abs() < 0.02);
        assert!(rep.converged);
        assert!(rep.delta_star_hat.finite().unwrap() <= rep.delta_avg_hat.finite().unwrap() + 0.05);
        assert!(rep.delta_avg_hat.finite().unwrap() <= rep.delta_liminf_hat + 0.05);
    }

    #[test]
    fn growth_exponents_log_factor_rule() {
        // y_n = (n ln²n)^{-2}: Δ* = Δ = δ = 2, while the raw window ratio is
        // ≈ 0.4 too high at this horizon.
        let rep = growth_exponents(&SequenceSpec::power(2.0, 4.0, 1.0), 0.5, 100_000).unwrap();
        assert!(
            (rep.delta_star_hat.finite().unwrap() - 2.0).abs() < 0.03,
            "Δ* = {:?}",
            rep.delta_star_hat
        );
        assert!(
            (rep.delta_liminf_hat - 2.0).abs() < 0.03,
            "δ = {} (raw {})",
            rep.delta_liminf_hat,
            rep.delta_liminf_raw
        );
        assert!(rep.delta_liminf_raw > 2.3, "raw ratio should carry the log bias");
    }

    #[test]
    fn block_modulated_pointwise_vs_liminf() {
        // n^{-2} off multiples of 2, n^{-4} on them: Δ* = 2, δ = 3.
        let y = SequenceSpec::Block {
            modulus: 2,
            cases: alloc::vec![pow(4.0), pow(2.0)],
        };
        let rep = growth_exponents(&y, 0.5, 100_000).unwrap();
        assert!(
            (rep.delta_star_hat.finite().unwrap() - 2.0).abs() < 0.03,
            "Δ* = {:?}",
            rep.delta_star_hat
        );
        assert!(
            (rep.delta_liminf_hat - 3.0).abs() < 0.03,
            "δ = {}",
            rep.delta_liminf_hat
        );
    }

    #[test]
    fn regularity_monotone_and_constant() {
        let rep = regularity_ratio(&pow(2.0), 50_000).unwrap();
        assert_eq!(rep.verdict, RegularityVerdict::Regular);
        let rep = regularity_ratio(&SequenceSpec::constant(0.7), 1_000).unwrap();
        assert_eq!(rep.verdict, RegularityVerdict::Regular);
        assert!((rep.sup_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regularity_block_family_is_irregular() {
        let y = SequenceSpec::Block {
            modulus: 2,
            cases: alloc::vec![pow(4.0), pow(2.0)],
        };
        let rep = regularity_ratio(&y, 100_000).unwrap();
        assert_eq!(
            rep.verdict,
            RegularityVerdict::Irregular,
            "power {}",
            rep.growth_power
        );
        assert!(rep.growth_power > 0.5);
    }

    fn power_like(alpha: f64, beta: f64) -> HamburgerHamiltonian {
        HamburgerHamiltonian::new(
            pow(alpha),
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(pow(beta)),
            },
        )
        .unwrap()
    }

    #[test]
    fn power_like_indices() {
        // l_n = n^{-3}, steps n^{-2}: Δ_l⁺ = δ_l = 3, Δ_φ = Δ_φ* = δ_φ = 2,
        // angles converge with rate Λ = Λ* = β − 1 = 1.
        let h = power_like(3.0, 2.0);
        let idx = hamiltonian_indices(&h, 65_536).unwrap();
        assert!((idx.delta_l.finite().unwrap() - 3.0).abs() < 0.05, "{:?}", idx.delta_l);
        assert!((idx.delta_phi.finite().unwrap() - 2.0).abs() < 0.05, "{:?}", idx.delta_phi);
        assert!(
            (idx.delta_phi_star.finite().unwrap() - 2.0).abs() < 0.05,
            "{:?}",
            idx.delta_phi_star
        );
        assert!((idx.delta_lower_l - 3.0).abs() < 0.05, "{}", idx.delta_lower_l);
        assert!((idx.delta_lower_phi - 2.0).abs() < 0.05, "{}", idx.delta_lower_phi);
        assert!(
            (idx.delta_lower_l_phi - 5.0).abs() < 0.1,
            "{}",
            idx.delta_lower_l_phi
        );
        let lam = idx.lambda.finite().unwrap();
        assert!((lam - 1.0).abs() < 0.1, "Λ = {lam}");
        let lam_star = idx.lambda_star.finite().unwrap();
        assert!((lam_star - 1.0).abs() < 0.1, "Λ* = {lam_star}");
        assert!(idx.limit_angle.is_some());
    }

    #[test]
    fn jumping_angle_indices() {
        let h = HamburgerHamiltonian::new(
            pow(2.0),
            SequenceSpec::ArithmeticStep {
                base: core::f64::consts::FRAC_PI_2,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap();
        let idx = hamiltonian_indices(&h, 65_536).unwrap();
        assert_eq!(idx.delta_phi.finite().unwrap(), 0.0);
        assert_eq!(idx.delta_phi_star.finite().unwrap(), 0.0);
        assert!(idx.delta_lower_phi.abs() < 1e-9);
        assert!(idx.limit_angle.is_none());
        assert_eq!(idx.lambda_star.finite().unwrap(), 0.0);
        let lam = idx.lambda.finite().unwrap();
        assert!(lam < 0.1, "Λ = {lam}");
        assert!((idx.delta_lower_l_phi - 2.0).abs() < 0.05);
    }

    #[test]
    fn lambda_sees_weighted_convergence() {
        // At the limit angle of the (α=3, β=2) family: τ ≈ β − 1 = 1;
        // away from it the tail carries full weight and τ ≈ 0.
        let h = power_like(3.0, 2.0);
        let lim = h.limit_angle().unwrap().0;
        let tau = lambda_at(&h, lim, 65_536).unwrap();
        assert!((tau.finite().unwrap() - 1.0).abs() < 0.1, "{tau:?}");
        let tau0 = lambda_at(&h, lim + 0.7, 65_536).unwrap();
        assert!(tau0.finite().unwrap() < 0.1, "{tau0:?}");
    }

    #[test]
    fn constant_angles_give_infinite_lambda_probe() {
        // Degenerate angles (all equal mod π) leave zero tail sums at the
        // matching probe; exercised on the relaxed path by constructing the
        // data directly.
        let lengths = pow(2.0).materialize(1, 4096, 1 << 20).unwrap();
        let log_lengths: Vec<f64> = lengths.iter().map(|v| v.ln()).collect();
        let data = HamiltonianData {
            lengths,
            log_lengths,
            sin_diffs: alloc::vec![],
            log_sin_diffs: alloc::vec![],
            directions: (0..4096)
                .map(|_| AngleAccumulator::new(0.3).direction())
                .collect::<Vec<_>>(),
            angle_gaps: None,
            limit_angle: None,
            length_tail: None,
        };
        assert_eq!(data.lambda_probe(0.3, 2.0), IndexValue::Infinite);
    }
}
