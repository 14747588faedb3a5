//! Small numeric toolkit: compensated summation, log-domain helpers,
//! least-squares fits, and Euler–Maclaurin tail sums for power-log rules.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln Σ e^{x_i}` without overflow; empty input gives `-∞`.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = Kahan::new();
    for x in xs {
        acc.add((x - m).exp());
    }
    m + acc.value().ln()
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(Error::InsufficientData(alloc::format!(
            "line fit needs >= 2 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("degenerate abscissae in line fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    for i in 0..n {
        let r = ys[i] - intercept - slope * xs[i];
        rss += r * r;
    }
    let dof = (n.max(3) - 2) as f64;
    let slope_stderr = (rss / dof / sxx).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        rms_residual: (rss / nf).sqrt(),
    })
}

/// Least squares for a small number of columns via normal equations with
/// column equilibration. Returns the coefficient vector.
pub fn lsq(columns: &[Vec<f64>], ys: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let m = ys.len();
    if k == 0 || m < k || columns.iter().any(|c| c.len() != m) {
        return Err(Error::InsufficientData(alloc::format!(
            "least squares with {k} columns needs >= {k} consistent rows"
        )));
    }
    // Scale columns to unit max-abs so the normal equations stay balanced.
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| {
            let s = c.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut ata = vec![vec![0.0f64; k]; k];
    let mut atb = vec![0.0f64; k];
    for i in 0..k {
        for j in i..k {
            let mut acc = Kahan::new();
            for r in 0..m {
                acc.add(columns[i][r] / scales[i] * (columns[j][r] / scales[j]));
            }
            ata[i][j] = acc.value();
            ata[j][i] = acc.value();
        }
        let mut acc = Kahan::new();
        for r in 0..m {
            acc.add(columns[i][r] / scales[i] * ys[r]);
        }
        atb[i] = acc.value();
    }
    let sol = solve_dense(&mut ata, &mut atb)?;
    Ok(sol.into_iter().zip(&scales).map(|(c, s)| c / s).collect())
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::NumericFailure("singular normal equations".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

/// Fit of a cumulative log-growth model.
///
/// Many quantities in this crate are sums `V_n = Σ_{k<n} v_k` whose terms
/// follow `v_k = δ·ln k + κ·lnln k + c + ε_k`. Fitting `V_n` against the
/// exactly accumulated regressors `P(n) = Σ_{k<n} ln k`, `Q(n) = Σ_{k<n} lnln k`
/// and `n` recovers the growth rate `δ` without the `O(lnln n / ln n)`
/// finite-horizon bias that plagues the raw ratio `V_n / (n ln n)`.
#[derive(Debug, Clone, Copy)]
pub struct GrowthFit {
    /// Coefficient of `Σ ln k` — the power-scale growth rate.
    pub delta: f64,
    /// Coefficient of `Σ lnln k` — the log-factor rate.
    pub kappa: f64,
    /// Coefficient of `n`.
    pub level: f64,
    /// RMS residual relative to the spread of `V`.
    pub relative_residual: f64,
}

/// One sample for [`fit_growth`]: `(n, V_n, Σ_{k=2}^{n-1} ln k, Σ_{k=2}^{n-1} lnln k)`.
pub type GrowthSample = (f64, f64, f64, f64);

pub fn fit_growth(samples: &[GrowthSample]) -> Result<GrowthFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData("growth fit needs >= 4 samples".into()));
    }
    let n_col: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let p_col: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let q_col: Vec<f64> = samples.iter().map(|s| s.3).collect();
    let coef = lsq(&[p_col.clone(), q_col.clone(), n_col.clone()], &v)?;
    let mut rss = 0.0;
    let vmax = v.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
    for i in 0..v.len() {
        let r = v[i] - coef[0] * p_col[i] - coef[1] * q_col[i] - coef[2] * n_col[i];
        rss += r * r;
    }
    Ok(GrowthFit {
        delta: coef[0],
        kappa: coef[1],
        level: coef[2],
        relative_residual: (rss / v.len() as f64).sqrt() / vmax,
    })
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 40)
}

/// `∫_a^∞ x^{-tau} (ln x)^{-kappa} dx` for `a ≥ 2`, `tau > 1`.
///
/// Substituting `x = a·e^{t/(tau-1)}` turns this into
/// `a^{1-tau}/(tau-1) · ∫_0^∞ e^{-t} (ln a + t/(tau-1))^{-kappa} dt`,
/// which is integrated numerically over a truncated range.
pub fn power_log_integral(a: f64, tau: f64, kappa: f64, rel_tol: f64) -> Result<f64> {
    if !(tau > 1.0) || !(a >= 2.0) {
        return Err(Error::Domain(alloc::format!(
            "power_log_integral requires tau > 1 and a >= 2, got tau={tau}, a={a}"
        )));
    }
    let la = a.ln();
    let s = tau - 1.0;
    let h = |t: f64| (-t).exp() * (la + t / s).powf(-kappa);
    // Truncation point: push until the integrand is negligible relative to h(0).
    let h0 = h(0.0).max(1e-300);
    let mut t_max = 45.0;
    while h(t_max) > 1e-18 * h0 && t_max < 4000.0 {
        t_max *= 1.5;
    }
    let mut total = Kahan::new();
    let mut lo = 0.0;
    while lo < t_max {
        let hi = (lo + 9.0).min(t_max);
        total.add(adaptive_simpson(&h, lo, hi, rel_tol * h0));
        lo = hi;
    }
    Ok(a.powf(1.0 - tau) / s * total.value())
}

/// Tail sum with error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    pub abs_error: f64,
}

/// `Σ_{j ≥ j0} f(q·j + r)` for `f(x) = c·x^{-tau}·(ln x)^{-kappa}`, requiring
/// `q·j0 + r ≥ 2` and convergence (`tau > 1`, or `tau = 1` with `kappa > 1`).
///
/// A short stretch is summed directly and the rest is handled by
/// Euler–Maclaurin with two correction terms.
pub fn power_log_tail_arith(
    c: f64,
    tau: f64,
    kappa: f64,
    q: u64,
    r: u64,
    j0: u64,
) -> Result<TailEstimate> {
    debug_assert!(q >= 1 && r < q);
    let x0 = q * j0 + r;
    if x0 < 2 {
        return Err(Error::Domain("tail must start at x >= 2".into()));
    }
    let f = |x: f64| c * x.powf(-tau) * x.ln().powf(-kappa);
    // d/dj f(qj + r) = q f'(x); f'(x) = -f(x)/x · (tau + kappa/ln x)
    let g_prime = |j: f64| {
        let x = q as f64 * j + r as f64;
        -(q as f64) * f(x) / x * (tau + kappa / x.ln())
    };

    if tau == 1.0 {
        if kappa <= 1.0 {
            return Err(Error::Domain("divergent tail (tau = 1, kappa <= 1)".into()));
        }
        // ∫ x^{-1} ln^{-kappa} x dx = ln^{1-kappa} x / (kappa - 1), exactly.
        let direct_terms = 64u64;
        let mut head = Kahan::new();
        for j in j0..j0 + direct_terms {
            head.add(f((q * j + r) as f64));
        }
        let ja = (j0 + direct_terms) as f64;
        let xa = q as f64 * ja + r as f64;
        let integral = xa.ln().powf(1.0 - kappa) / (kappa - 1.0) / q as f64;
        let ga = f(xa);
        let value = head.value() + integral + 0.5 * ga - g_prime(ja) / 12.0;
        let abs_error = ga * (1.0 + kappa.abs()).powi(3) / (720.0 * ja * ja * ja) + 1e-14 * value.abs();
        return Ok(TailEstimate { value, abs_error });
    }
    if tau < 1.0 {
        return Err(Error::Domain("divergent tail (tau < 1)".into()));
    }

    let direct_terms = 32u64.max((2.0 / (tau - 1.0).min(2.0)) as u64);
    let mut head = Kahan::new();
    for j in j0..j0 + direct_terms {
        head.add(f((q * j + r) as f64));
    }
    let ja = (j0 + direct_terms) as f64;
    let xa = q as f64 * ja + r as f64;
    let integral = c * power_log_integral(xa, tau, kappa, 1e-13)? / q as f64;
    let ga = f(xa);
    let value = head.value() + integral + 0.5 * ga - g_prime(ja) / 12.0;
    let abs_error =
        ga * (tau + kappa.abs() + 2.0).powi(3) / (720.0 * ja * ja * ja) + 1e-13 * value.abs();
    Ok(TailEstimate { value, abs_error })
}

/// Convenience wrapper for the plain tail `Σ_{k > n0} c·k^{-tau}·ln^{-kappa} k`.
pub fn power_log_tail(c: f64, tau: f64, kappa: f64, n0: u64) -> Result<TailEstimate> {
    power_log_tail_arith(c, tau, kappa, 1, 0, n0.max(1) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_compensates() {
        let mut k = Kahan::new();
        k.add(1e16);
        for _ in 0..10 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.value(), 10.0);
    }

    #[test]
    fn zeta2_tail_matches_trigamma() {
        // Σ_{k>N} k^{-2} = ψ'(N+1); reference values from the recurrence
        // ψ'(x+1) = ψ'(x) - 1/x² seeded with ψ'(1) = π²/6.
        let mut trigamma = core::f64::consts::PI * core::f64::consts::PI / 6.0;
        for k in 1..=1000u64 {
            trigamma -= 1.0 / (k as f64 * k as f64);
        }
        let est = power_log_tail(1.0, 2.0, 0.0, 1000).unwrap();
        assert!((est.value - trigamma).abs() < 1e-13, "{} vs {trigamma}", est.value);
    }

    #[test]
    fn log_squared_tail_closed_form() {
        // Σ_{k>N} 1/(k ln²k) ≈ 1/ln N for large N; check against direct
        // high-precision summation over a long stretch plus the tau=1 formula.
        let est = power_log_tail(1.0, 1.0, 2.0, 100).unwrap();
        let mut direct = Kahan::new();
        for k in 101..=40_000_000u64 {
            let x = k as f64;
            direct.add(1.0 / (x * x.ln() * x.ln()));
        }
        let rest = power_log_tail(1.0, 1.0, 2.0, 40_000_000).unwrap();
        let reference = direct.value() + rest.value;
        assert!(
            (est.value - reference).abs() < 1e-10,
            "{} vs {reference}",
            est.value
        );
    }

    #[test]
    fn growth_fit_recovers_pure_power() {
        // V_n = Σ_{k=2}^{n-1} 2·ln k  =>  delta = 2 exactly.
        let mut p = 0.0;
        let mut q = 0.0;
        let mut v = 0.0;
        let mut samples = Vec::new();
        for n in 2..=4096u64 {
            if n.is_power_of_two() && n >= 64 {
                samples.push((n as f64, v, p, q));
            }
            let lk = (n as f64).ln();
            p += lk;
            q += lk.ln();
            v += 2.0 * lk;
        }
        let fit = fit_growth(&samples).unwrap();
        assert!((fit.delta - 2.0).abs() < 1e-9);
        assert!(fit.kappa.abs() < 1e-9);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
    }
}
