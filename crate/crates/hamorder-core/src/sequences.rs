//! Rule-based lazy sequences and the Hamburger Hamiltonian data model.
//!
//! Sequences are 1-based. A spec is a pure description: materialising the
//! same spec twice over the same range yields bit-identical values, and no
//! state is cached, so everything here is safe to share across threads.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{power_log_tail_arith, Kahan, TailEstimate};

/// Default cap on the number of values a single materialisation may produce.
pub const DEFAULT_MATERIALIZE_CAP: u64 = 1 << 25;

/// A rule describing an infinite real sequence `(y_n)_{n≥1}`.
///
/// The `power` rule means `c·n^{-τ}·(ln n)^{-κ}` for `n ≥ 2`; its value at
/// `n = 1` is the explicit `first` override (default `1`), since the log
/// factor is undefined there.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", rename_all = "kebab-case"))]
pub enum SequenceSpec {
    Power {
        exponent: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        log_exponent: f64,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        scale: f64,
        /// Value at `n = 1`.
        #[cfg_attr(feature = "serde", serde(default))]
        first: Option<f64>,
    },
    /// `cases[n mod modulus]` evaluated at the global index `n`.
    Block {
        modulus: u32,
        cases: Vec<SequenceSpec>,
    },
    /// `cases[⌊log₂ n⌋ mod period]` evaluated at the global index `n`:
    /// block modulation on the dyadic scale rather than by residue.
    DyadicBlock {
        period: u32,
        cases: Vec<SequenceSpec>,
    },
    /// `y_1 = base`, `y_{n+1} = y_n + step_n` where `step` is itself a rule.
    ArithmeticStep {
        base: f64,
        step: Box<SequenceSpec>,
    },
    /// Listed values for `n ≤ prefix.len()`, then `tail` at the global index.
    Explicit {
        prefix: Vec<f64>,
        tail: Box<SequenceSpec>,
    },
    Constant {
        value: f64,
    },
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

/// Convergence class of `Σ y_n`, decided from the rule itself where possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    ConvergentClosedForm,
    DivergentClosedForm,
    Unknown,
}

impl SequenceSpec {
    pub fn power(exponent: f64, log_exponent: f64, scale: f64) -> Self {
        SequenceSpec::Power {
            exponent,
            log_exponent,
            scale,
            first: None,
        }
    }

    pub fn constant(value: f64) -> Self {
        SequenceSpec::Constant { value }
    }

    /// Checks rule parameters once; evaluation then cannot fail except for
    /// cap violations.
    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Power {
                exponent,
                log_exponent,
                scale,
                first,
            } => {
                for (name, v) in [
                    ("exponent", *exponent),
                    ("log_exponent", *log_exponent),
                    ("scale", *scale),
                    ("first", first.unwrap_or(1.0)),
                ] {
                    if !v.is_finite() {
                        return Err(Error::InvalidSpec(format!("power rule: {name} not finite")));
                    }
                }
                Ok(())
            }
            SequenceSpec::Block { modulus, cases } => {
                if *modulus == 0 {
                    return Err(Error::InvalidSpec("block rule: modulus must be >= 1".into()));
                }
                if cases.len() != *modulus as usize {
                    return Err(Error::InvalidSpec(format!(
                        "block rule: expected {} residue cases, got {}",
                        modulus,
                        cases.len()
                    )));
                }
                cases.iter().try_for_each(|c| c.validate())
            }
            SequenceSpec::DyadicBlock { period, cases } => {
                if *period == 0 {
                    return Err(Error::InvalidSpec("dyadic-block rule: period must be >= 1".into()));
                }
                if cases.len() != *period as usize {
                    return Err(Error::InvalidSpec(format!(
                        "dyadic-block rule: expected {} cases, got {}",
                        period,
                        cases.len()
                    )));
                }
                cases.iter().try_for_each(|c| c.validate())
            }
            SequenceSpec::ArithmeticStep { base, step } => {
                if !base.is_finite() {
                    return Err(Error::InvalidSpec("arithmetic-step rule: base not finite".into()));
                }
                step.validate()
            }
            SequenceSpec::Explicit { prefix, tail } => {
                if prefix.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("explicit rule: non-finite prefix value".into()));
                }
                tail.validate()
            }
            SequenceSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidSpec("constant rule: value not finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Value at index `n ≥ 1`. For `arithmetic-step` this walks the partial
    /// sums from the start; use [`SeqCursor`] for sequential access.
    pub fn value_at(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidSpec("sequences are 1-based".into()));
        }
        match self {
            SequenceSpec::Power {
                exponent,
                log_exponent,
                scale,
                first,
            } => {
                if n == 1 {
                    Ok(first.unwrap_or(1.0))
                } else {
                    let x = n as f64;
                    Ok(scale * x.powf(-exponent) * x.ln().powf(-log_exponent))
                }
            }
            SequenceSpec::Block { modulus, cases } => {
                cases[(n % *modulus as u64) as usize].value_at(n)
            }
            SequenceSpec::DyadicBlock { period, cases } => {
                cases[(n.ilog2() % *period) as usize].value_at(n)
            }
            SequenceSpec::ArithmeticStep { .. } => {
                let mut cur = SeqCursor::new(self)?;
                let mut v = 0.0;
                for _ in 0..n {
                    v = cur.next_value()?;
                }
                Ok(v)
            }
            SequenceSpec::Explicit { prefix, tail } => {
                if (n as usize) <= prefix.len() {
                    Ok(prefix[n as usize - 1])
                } else {
                    tail.value_at(n)
                }
            }
            SequenceSpec::Constant { value } => Ok(*value),
        }
    }

    /// Materialise `(y_from, …, y_to)`.
    pub fn materialize(&self, from: u64, to: u64, cap: u64) -> Result<Vec<f64>> {
        if from < 1 || to < from {
            return Err(Error::InvalidSpec(format!(
                "invalid range [{from}, {to}] (1-based, nonempty)"
            )));
        }
        let count = to - from + 1;
        if count > cap {
            return Err(Error::CapExceeded {
                requested: count,
                cap,
            });
        }
        self.validate()?;
        let mut cur = SeqCursor::new(self)?;
        let mut out = Vec::with_capacity(count as usize);
        for n in 1..=to {
            let v = cur.next_value()?;
            if n >= from {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Convergence of `Σ_n y_n`, decided from the rule where closed-form
    /// knowledge exists.
    pub fn convergence(&self) -> Convergence {
        match self {
            SequenceSpec::Power {
                exponent,
                log_exponent,
                scale,
                ..
            } => {
                if *scale == 0.0 {
                    Convergence::ConvergentClosedForm
                } else if *exponent > 1.0 || (*exponent == 1.0 && *log_exponent > 1.0) {
                    Convergence::ConvergentClosedForm
                } else {
                    Convergence::DivergentClosedForm
                }
            }
            SequenceSpec::Block { cases, .. } | SequenceSpec::DyadicBlock { cases, .. } => {
                let mut all = Convergence::ConvergentClosedForm;
                for c in cases {
                    match c.convergence() {
                        Convergence::DivergentClosedForm => {
                            return Convergence::DivergentClosedForm
                        }
                        Convergence::Unknown => all = Convergence::Unknown,
                        Convergence::ConvergentClosedForm => {}
                    }
                }
                all
            }
            SequenceSpec::ArithmeticStep { .. } => Convergence::Unknown,
            SequenceSpec::Explicit { tail, .. } => tail.convergence(),
            SequenceSpec::Constant { value } => {
                if *value == 0.0 {
                    Convergence::ConvergentClosedForm
                } else {
                    Convergence::DivergentClosedForm
                }
            }
        }
    }

    /// Closed-form tail `Σ_{k > n0} y_k` with an error bound, when the rule
    /// supports it. `None` for rules without a closed-form tail.
    pub fn tail_sum(&self, n0: u64) -> Option<Result<TailEstimate>> {
        match self {
            SequenceSpec::Power { .. } => self.tail_sum_arith(1, 0, n0),
            SequenceSpec::Block { modulus, cases } => {
                let q = *modulus as u64;
                let mut total = 0.0;
                let mut err = 0.0;
                for (r, case) in cases.iter().enumerate() {
                    match case.tail_sum_arith(q, r as u64, n0) {
                        Some(Ok(t)) => {
                            total += t.value;
                            err += t.abs_error;
                        }
                        Some(Err(e)) => return Some(Err(e)),
                        None => return None,
                    }
                }
                Some(Ok(TailEstimate {
                    value: total,
                    abs_error: err,
                }))
            }
            SequenceSpec::Explicit { prefix, tail } => {
                let mut head = Kahan::new();
                for (i, v) in prefix.iter().enumerate() {
                    if (i as u64 + 1) > n0 {
                        head.add(*v);
                    }
                }
                let rest = tail.tail_sum(n0.max(prefix.len() as u64))?;
                Some(rest.map(|t| TailEstimate {
                    value: t.value + head.value(),
                    abs_error: t.abs_error,
                }))
            }
            SequenceSpec::Constant { value } if *value == 0.0 => Some(Ok(TailEstimate {
                value: 0.0,
                abs_error: 0.0,
            })),
            SequenceSpec::DyadicBlock { cases, .. } => {
                // No exact closed form (case membership jumps on the dyadic
                // scale); report the midpoint of [0-excess, full-excess] with
                // the over-count as the error bound: each term belongs to
                // exactly one case, so the sum of all case tails is an upper
                // bound.
                let mut bound = 0.0;
                let mut err = 0.0;
                for case in cases {
                    match case.tail_sum(n0) {
                        Some(Ok(t)) => {
                            bound += t.value;
                            err += t.abs_error;
                        }
                        Some(Err(e)) => return Some(Err(e)),
                        None => return None,
                    }
                }
                Some(Ok(TailEstimate {
                    value: 0.5 * bound,
                    abs_error: 0.5 * bound + err,
                }))
            }
            _ => None,
        }
    }

    /// Tail over the arithmetic subsequence `k > n0`, `k ≡ r (mod q)`.
    fn tail_sum_arith(&self, q: u64, r: u64, n0: u64) -> Option<Result<TailEstimate>> {
        match self {
            SequenceSpec::Power {
                exponent,
                log_exponent,
                scale,
                first,
            } => {
                // Smallest j with q·j + r > n0 and q·j + r >= 2.
                let lower = n0.max(1);
                let mut j0 = (lower.saturating_sub(r)) / q;
                while q * j0 + r <= lower.max(n0) || q * j0 + r < 2 {
                    j0 += 1;
                }
                let mut extra = 0.0;
                // The n = 1 override sits outside the smooth rule.
                if n0 < 1 && (1 % q) == r {
                    extra = first.unwrap_or(1.0);
                }
                Some(
                    power_log_tail_arith(*scale, *exponent, *log_exponent, q, r, j0).map(|t| {
                        TailEstimate {
                            value: t.value + extra,
                            abs_error: t.abs_error,
                        }
                    }),
                )
            }
            SequenceSpec::Constant { value } if *value == 0.0 => Some(Ok(TailEstimate {
                value: 0.0,
                abs_error: 0.0,
            })),
            _ => None,
        }
    }
}

enum CursorState<'a> {
    Direct,
    Accum {
        current: Kahan,
        step: Box<SeqCursor<'a>>,
    },
    Block {
        children: Vec<SeqCursor<'a>>,
    },
    Explicit {
        tail: Box<SeqCursor<'a>>,
    },
}

/// Streaming evaluator: yields `y_1, y_2, …` in order without materialising.
pub struct SeqCursor<'a> {
    spec: &'a SequenceSpec,
    next_index: u64,
    state: CursorState<'a>,
}

impl<'a> SeqCursor<'a> {
    pub fn new(spec: &'a SequenceSpec) -> Result<Self> {
        spec.validate()?;
        let state = match spec {
            SequenceSpec::ArithmeticStep { base, step } => {
                let mut current = Kahan::new();
                current.add(*base);
                CursorState::Accum {
                    current,
                    step: Box::new(SeqCursor::new(step)?),
                }
            }
            SequenceSpec::Block { cases, .. } | SequenceSpec::DyadicBlock { cases, .. } => {
                CursorState::Block {
                    children: cases
                        .iter()
                        .map(SeqCursor::new)
                        .collect::<Result<Vec<_>>>()?,
                }
            }
            SequenceSpec::Explicit { tail, .. } => CursorState::Explicit {
                tail: Box::new(SeqCursor::new(tail)?),
            },
            _ => CursorState::Direct,
        };
        Ok(Self {
            spec,
            next_index: 1,
            state,
        })
    }

    /// Index of the value the next call will produce.
    pub fn peek_index(&self) -> u64 {
        self.next_index
    }

    pub fn next_value(&mut self) -> Result<f64> {
        let n = self.next_index;
        self.next_index += 1;
        match (&mut self.state, self.spec) {
            (CursorState::Direct, spec) => spec.value_at(n),
            (CursorState::Accum { current, step }, _) => {
                let v = current.value();
                current.add(step.next_value()?);
                Ok(v)
            }
            (CursorState::Block { children }, SequenceSpec::Block { modulus, .. }) => {
                let pick = (n % *modulus as u64) as usize;
                let mut out = 0.0;
                for (i, child) in children.iter_mut().enumerate() {
                    let v = child.next_value()?;
                    if i == pick {
                        out = v;
                    }
                }
                Ok(out)
            }
            (CursorState::Block { children }, SequenceSpec::DyadicBlock { period, .. }) => {
                let pick = (n.ilog2() % *period) as usize;
                let mut out = 0.0;
                for (i, child) in children.iter_mut().enumerate() {
                    let v = child.next_value()?;
                    if i == pick {
                        out = v;
                    }
                }
                Ok(out)
            }
            (CursorState::Explicit { tail }, SequenceSpec::Explicit { prefix, .. }) => {
                let v = tail.next_value()?;
                if (n as usize) <= prefix.len() {
                    Ok(prefix[n as usize - 1])
                } else {
                    Ok(v)
                }
            }
            _ => unreachable!("cursor state matches spec shape"),
        }
    }
}

/// Result of [`HamburgerHamiltonian::classify_limit`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "case", rename_all = "kebab-case"))]
pub enum LimitClassification {
    /// Total length finite: the moment problem is indeterminate.
    LimitCircle {
        x_inf: f64,
        error_bound: f64,
        /// True when convergence was decided from the rule, false when only
        /// the numerical heuristic fired.
        closed_form: bool,
    },
    LimitPoint,
    Undecided,
}

/// Piecewise-constant rank-one Hamiltonian given by lengths and angles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HamburgerHamiltonian {
    pub lengths: SequenceSpec,
    pub angles: SequenceSpec,
}

impl HamburgerHamiltonian {
    pub fn new(lengths: SequenceSpec, angles: SequenceSpec) -> Result<Self> {
        lengths.validate()?;
        angles.validate()?;
        Ok(Self { lengths, angles })
    }

    /// Checks `l_n > 0` and `φ_{n+1} ≢ φ_n (mod π)` for `n ≤ horizon`.
    pub fn validate_prefix(&self, horizon: u64) -> Result<()> {
        let mut lc = SeqCursor::new(&self.lengths)?;
        for n in 1..=horizon {
            let l = lc.next_value()?;
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidHamiltonian(format!(
                    "length l_{n} = {l} is not strictly positive"
                )));
            }
        }
        let mut steps = AngleSteps::new(self)?;
        for n in 1..horizon {
            let d = steps.next_step()?;
            if sin_mod_pi(d) == 0.0 {
                return Err(Error::InvalidHamiltonian(format!(
                    "angles φ_{} and φ_{} coincide mod π",
                    n + 1,
                    n
                )));
            }
        }
        Ok(())
    }

    /// Node `x_n = Σ_{k=1}^n l_k` (compensated); `x_0 = 0`.
    pub fn node(&self, n: u64) -> Result<f64> {
        let mut acc = Kahan::new();
        let mut cur = SeqCursor::new(&self.lengths)?;
        for _ in 0..n {
            acc.add(cur.next_value()?);
        }
        Ok(acc.value())
    }

    /// `x_∞ − x_n` when the lengths admit a closed-form tail.
    pub fn node_tail(&self, n: u64) -> Option<Result<TailEstimate>> {
        self.lengths.tail_sum(n)
    }

    /// Decides limit circle vs limit point. Closed-form rules are decided
    /// exactly; otherwise a decreasing-tail heuristic below `tolerance` is
    /// tried, and `Undecided` is returned when neither fires.
    pub fn classify_limit(&self, horizon: u64, tolerance: f64) -> Result<LimitClassification> {
        if horizon < 2 {
            return Err(Error::InsufficientData("classify_limit needs horizon >= 2".into()));
        }
        match self.lengths.convergence() {
            Convergence::ConvergentClosedForm => {
                let head_len = horizon.min(8192);
                let x_head = self.node(head_len)?;
                let tail = self
                    .lengths
                    .tail_sum(head_len)
                    .expect("closed-form convergent rule has a tail")?;
                Ok(LimitClassification::LimitCircle {
                    x_inf: x_head + tail.value,
                    error_bound: tail.abs_error + 1e-14 * x_head.abs(),
                    closed_form: true,
                })
            }
            Convergence::DivergentClosedForm => Ok(LimitClassification::LimitPoint),
            Convergence::Unknown => {
                let mut cur = SeqCursor::new(&self.lengths)?;
                let mut x = Kahan::new();
                let mut window = Kahan::new();
                let mut decreasing = true;
                let mut prev = f64::INFINITY;
                let mut last = 0.0;
                for n in 1..=horizon {
                    let l = cur.next_value()?;
                    x.add(l);
                    if n >= horizon / 2 {
                        window.add(l);
                        if l > prev * (1.0 + 1e-12) {
                            decreasing = false;
                        }
                        prev = l;
                        last = l;
                    }
                }
                // Integral-test style extrapolation for a decreasing tail:
                // the window sum scales like its own continuation when terms
                // fall at least geometrically per doubling.
                let w = window.value();
                let crude_tail = w + last * horizon as f64;
                if decreasing && crude_tail < tolerance {
                    Ok(LimitClassification::LimitCircle {
                        x_inf: x.value() + crude_tail,
                        error_bound: tolerance,
                        closed_form: false,
                    })
                } else {
                    Ok(LimitClassification::Undecided)
                }
            }
        }
    }

    /// `|sin(φ_{n+1} − φ_n)|` for `n = from..=to`.
    ///
    /// When the angle spec is an `arithmetic-step` rule the differences are
    /// read off the step rule directly, which stays exact even where the
    /// accumulated angles have long since converged in floating point.
    pub fn sin_diffs(&self, from: u64, to: u64) -> Result<Vec<f64>> {
        if from < 1 || to < from {
            return Err(Error::InvalidSpec(format!("invalid range [{from}, {to}]")));
        }
        let mut steps = AngleSteps::new(self)?;
        let mut out = Vec::with_capacity((to - from + 1) as usize);
        for n in 1..=to {
            let d = steps.next_step()?;
            if n >= from {
                let s = sin_mod_pi(d).abs();
                if s == 0.0 {
                    return Err(Error::InvalidHamiltonian(format!(
                        "angles φ_{} and φ_{} coincide mod π",
                        n + 1,
                        n
                    )));
                }
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Angle-step reader: yields `φ_{n+1} − φ_n` for `n = 1, 2, …`.
    pub fn angle_steps(&self) -> Result<AngleSteps<'_>> {
        AngleSteps::new(self)
    }

    /// Angle reader: yields `φ_1, φ_2, …`.
    pub fn angle_values(&self) -> Result<SeqCursor<'_>> {
        SeqCursor::new(&self.angles)
    }

    /// Limit of `φ_n` mod π when the steps form a summable closed-form rule.
    ///
    /// Returns `(angle mod π, absolute error bound)`.
    pub fn limit_angle(&self) -> Option<(f64, f64)> {
        if let SequenceSpec::ArithmeticStep { base, step } = &self.angles {
            if step.convergence() == Convergence::ConvergentClosedForm {
                let head = 256u64;
                let mut cur = SeqCursor::new(step).ok()?;
                let mut phi = Kahan::new();
                phi.add(*base);
                for _ in 0..head {
                    phi.add(cur.next_value().ok()?);
                }
                let tail = step.tail_sum(head)?.ok()?;
                let total = phi.value() + tail.value;
                return Some((total.rem_euclid(core::f64::consts::PI), tail.abs_error));
            }
        }
        None
    }
}

/// Streaming view of angle differences `φ_{n+1} − φ_n`.
pub struct AngleSteps<'a> {
    inner: AngleStepsInner<'a>,
}

enum AngleStepsInner<'a> {
    FromStepRule(SeqCursor<'a>),
    FromValues { cursor: SeqCursor<'a>, prev: f64 },
}

impl<'a> AngleSteps<'a> {
    fn new(h: &'a HamburgerHamiltonian) -> Result<Self> {
        let inner = match &h.angles {
            SequenceSpec::ArithmeticStep { step, .. } => {
                AngleStepsInner::FromStepRule(SeqCursor::new(step)?)
            }
            other => {
                let mut cursor = SeqCursor::new(other)?;
                let prev = cursor.next_value()?;
                AngleStepsInner::FromValues { cursor, prev }
            }
        };
        Ok(Self { inner })
    }

    pub fn next_step(&mut self) -> Result<f64> {
        match &mut self.inner {
            AngleStepsInner::FromStepRule(c) => c.next_value(),
            AngleStepsInner::FromValues { cursor, prev } => {
                let next = cursor.next_value()?;
                let d = next - *prev;
                *prev = next;
                Ok(d)
            }
        }
    }
}

/// `sin` that treats near-multiples of π/2 as exact.
///
/// Diagonal families drive angles through exact quarter turns; accumulated
/// angles then carry rounding residues of order `n·ε`, and a plain `sin`
/// would report spurious nonzero values at multiples of π (or ±1 ± ε at odd
/// quarter turns). Arguments close to zero are left untouched so genuinely
/// tiny angle steps keep their exact sine.
pub fn sin_mod_pi(d: f64) -> f64 {
    let half_turns = d / core::f64::consts::FRAC_PI_2;
    let rounded = half_turns.round();
    if rounded != 0.0 && (half_turns - rounded).abs() < 1e-9 {
        let k = rounded as i64;
        if k.rem_euclid(2) == 0 {
            return 0.0;
        }
        return if k.rem_euclid(4) == 1 { 1.0 } else { -1.0 };
    }
    d.sin()
}

/// Finite-rank Hamiltonian with explicitly listed parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiniteRankHamiltonian {
    pub lengths: Vec<f64>,
    pub angles: Vec<f64>,
}

impl FiniteRankHamiltonian {
    pub fn new(lengths: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if lengths.len() != angles.len() || lengths.is_empty() {
            return Err(Error::InvalidHamiltonian(
                "finite rank Hamiltonian needs equally many (>= 1) lengths and angles".into(),
            ));
        }
        if let Some((i, &l)) = lengths
            .iter()
            .enumerate()
            .find(|(_, &l)| !(l > 0.0) || !l.is_finite())
        {
            return Err(Error::InvalidHamiltonian(format!(
                "length l_{} = {l} is not strictly positive",
                i + 1
            )));
        }
        for i in 0..angles.len() - 1 {
            if sin_mod_pi(angles[i + 1] - angles[i]) == 0.0 {
                return Err(Error::InvalidHamiltonian(format!(
                    "angles φ_{} and φ_{} coincide mod π",
                    i + 2,
                    i + 1
                )));
            }
        }
        Ok(Self { lengths, angles })
    }

    pub fn rank(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_length(&self) -> f64 {
        let mut acc = Kahan::new();
        for &l in &self.lengths {
            acc.add(l);
        }
        acc.value()
    }

    /// Truncation of an infinite Hamiltonian to its first `n` intervals.
    pub fn truncate(h: &HamburgerHamiltonian, n: u64, cap: u64) -> Result<Self> {
        let lengths = h.lengths.materialize(1, n, cap)?;
        let mut angles = Vec::with_capacity(n as usize);
        match &h.angles {
            SequenceSpec::ArithmeticStep { base, step } => {
                let mut sc = SeqCursor::new(step)?;
                let mut phi = Kahan::new();
                phi.add(*base);
                for _ in 0..n {
                    angles.push(phi.value());
                    phi.add(sc.next_value()?);
                }
            }
            other => {
                let mut cur = SeqCursor::new(other)?;
                for _ in 0..n {
                    angles.push(cur.next_value()?);
                }
            }
        }
        Self::new(lengths, angles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow(exp: f64) -> SequenceSpec {
        SequenceSpec::power(exp, 0.0, 1.0)
    }

    #[test]
    fn power_rule_evaluation() {
        let s = pow(2.0);
        assert_eq!(s.materialize(1, 3, 100).unwrap(), vec![1.0, 0.25, 1.0 / 9.0]);
    }

    #[test]
    fn block_rule_evaluation() {
        let s = SequenceSpec::Block {
            modulus: 2,
            cases: alloc::vec![pow(4.0), pow(2.0)], // even -> n^-4, odd -> n^-2
        };
        let v = s.materialize(2, 4, 100).unwrap();
        assert_eq!(v, vec![2f64.powi(-4), 3f64.powi(-2), 4f64.powi(-4)]);
    }

    #[test]
    fn explicit_rule_evaluation() {
        let s = SequenceSpec::Explicit {
            prefix: alloc::vec![5.0],
            tail: Box::new(pow(1.0)),
        };
        assert_eq!(s.materialize(1, 3, 100).unwrap(), vec![5.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn arithmetic_step_partial_sums() {
        let s = SequenceSpec::ArithmeticStep {
            base: 0.0,
            step: Box::new(SequenceSpec::constant(0.5)),
        };
        assert_eq!(s.materialize(1, 4, 100).unwrap(), vec![0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn materialize_is_pure() {
        let s = SequenceSpec::Block {
            modulus: 3,
            cases: alloc::vec![pow(4.0), pow(2.0), pow(3.0)],
        };
        let a = s.materialize(5, 50, 100).unwrap();
        let b = s.materialize(5, 50, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_is_enforced() {
        let s = pow(2.0);
        match s.materialize(1, 1000, 10) {
            Err(Error::CapExceeded { requested, cap }) => {
                assert_eq!((requested, cap), (1000, 10));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    fn geometric_hamiltonian() -> HamburgerHamiltonian {
        // l_n = 2^{1-n}, angles jump by π/2.
        HamburgerHamiltonian::new(
            SequenceSpec::Explicit {
                prefix: alloc::vec![1.0, 0.5, 0.25],
                tail: Box::new(SequenceSpec::constant(0.0)),
            },
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap()
    }

    #[test]
    fn nodes_partial_sums() {
        let h = geometric_hamiltonian();
        assert_eq!(h.node(0).unwrap(), 0.0);
        assert_eq!(h.node(2).unwrap(), 1.5);
    }

    #[test]
    fn node_of_square_rule_matches_zeta_tail() {
        let h = HamburgerHamiltonian::new(
            pow(2.0),
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap();
        let n = 1_000_000u64;
        let x = h.node(n).unwrap();
        let tail = h.node_tail(n).unwrap().unwrap();
        let expected = core::f64::consts::PI * core::f64::consts::PI / 6.0 - tail.value;
        assert!((x - expected).abs() < 1e-9, "{x} vs {expected}");
    }

    #[test]
    fn classify_limit_square_rule() {
        let h = HamburgerHamiltonian::new(
            pow(2.0),
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap();
        match h.classify_limit(100, 1e-6).unwrap() {
            LimitClassification::LimitCircle {
                x_inf, closed_form, ..
            } => {
                assert!(closed_form);
                let zeta2 = core::f64::consts::PI * core::f64::consts::PI / 6.0;
                assert!((x_inf - zeta2).abs() < 1e-10, "{x_inf}");
            }
            other => panic!("expected limit circle, got {other:?}"),
        }
    }

    #[test]
    fn classify_limit_harmonic_rule() {
        let h = HamburgerHamiltonian::new(
            pow(1.0),
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap();
        assert_eq!(
            h.classify_limit(100, 1e-6).unwrap(),
            LimitClassification::LimitPoint
        );
    }

    #[test]
    fn sin_diffs_quarter_turns() {
        let h = HamburgerHamiltonian::new(
            pow(2.0),
            SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
            },
        )
        .unwrap();
        assert_eq!(h.sin_diffs(1, 3).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn sin_diffs_catches_degenerate_angles() {
        let h = HamburgerHamiltonian::new(
            pow(2.0),
            SequenceSpec::constant(0.3),
        )
        .unwrap();
        assert!(h.sin_diffs(1, 3).is_err());
    }

    #[test]
    fn nodes_strictly_increasing() {
        let h = geometric_hamiltonian();
        let mut prev = -1.0;
        for n in 0..3 {
            let x = h.node(n).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }
}
