//! Generators for the named example families, with parameter validation
//! and attached ground-truth expectations.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sequences::{HamburgerHamiltonian, SequenceSpec};

/// One expected quantity with an admissible interval and the method that
/// justifies it.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Expectation {
    pub quantity: String,
    pub lo: f64,
    pub hi: f64,
    pub provenance: String,
}

impl Expectation {
    fn exact(quantity: &str, v: f64, provenance: &str) -> Self {
        Self {
            quantity: quantity.to_string(),
            lo: v,
            hi: v,
            provenance: provenance.to_string(),
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Family name, parameters, and the values the theory pins down for it.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyExpectation {
    pub family: String,
    pub parameters: Vec<(String, f64)>,
    pub expectations: Vec<Expectation>,
}

impl FamilyExpectation {
    pub fn get(&self, quantity: &str) -> Option<&Expectation> {
        self.expectations.iter().find(|e| e.quantity == quantity)
    }
}

/// Parsed family request.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "snake_case"))]
pub enum Family {
    PowerLike { alpha: f64, beta: f64 },
    Jumping { alpha: f64 },
    R36 { alpha: f64, beta: f64, gamma: f64 },
    Hq { q: u32, alpha: f64, beta: f64 },
    Livcounter { rho: f64, r: f64 },
}

/// The built-in family names accepted by [`builtin_family`] and the CLI.
pub const FAMILY_NAMES: [&str; 5] = ["power_like", "jumping", "r36", "hq", "livcounter"];

/// Human-readable parameter constraints per family.
pub fn family_constraints(name: &str) -> Option<&'static str> {
    match name {
        "power_like" => Some(
            "alpha > 1, beta >= 0; lengths n^-alpha, angle steps n^-beta \
             (order formula 1/(alpha+beta) valid for alpha+beta >= 2)",
        ),
        "jumping" => Some("alpha > 1; lengths n^-alpha, quarter-turn angle jumps"),
        "r36" => Some(
            "alpha > beta > 1, gamma > 0, beta + gamma/2 < alpha < beta + 2*gamma; \
             dyadic blocks alternating n^-alpha (quarter-turn jumps) and n^-beta \
             (n^-gamma angle steps)",
        ),
        "hq" => Some(
            "alpha >= 1, beta > alpha, integer q >= 2; lengths (n ln^2 n)^-alpha off \
             multiples of q and (n ln^2 n)^-beta on them (l_1 = 1), angles n*pi/2",
        ),
        "livcounter" => Some(
            "0 < r < rho <= 1; the q = 3 block-modulated diagonal family with \
             alpha = 1/rho, beta = 3/r - 2*alpha, exhibiting order rho with \
             leading-coefficient growth rate r",
        ),
        _ => None,
    }
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::PowerLike { alpha, beta } => {
                if !(alpha > 1.0) {
                    return Err(Error::Domain(format!(
                        "power_like requires alpha > 1, got alpha = {alpha}"
                    )));
                }
                if !(beta >= 0.0) {
                    return Err(Error::Domain(format!(
                        "power_like requires beta >= 0, got beta = {beta}"
                    )));
                }
            }
            Family::Jumping { alpha } => {
                if !(alpha > 1.0) {
                    return Err(Error::Domain(format!(
                        "jumping requires alpha > 1, got alpha = {alpha}"
                    )));
                }
            }
            Family::R36 { alpha, beta, gamma } => {
                if !(alpha > beta) || !(beta > 1.0) {
                    return Err(Error::Domain(format!(
                        "r36 requires alpha > beta > 1, got alpha = {alpha}, beta = {beta}"
                    )));
                }
                if !(gamma > 0.0) {
                    return Err(Error::Domain(format!(
                        "r36 requires gamma > 0, got gamma = {gamma}"
                    )));
                }
                if !(beta + gamma / 2.0 < alpha) {
                    return Err(Error::Domain(format!(
                        "r36 requires beta + gamma/2 < alpha, got {} >= {alpha}",
                        beta + gamma / 2.0
                    )));
                }
                if !(alpha < beta + 2.0 * gamma) {
                    return Err(Error::Domain(format!(
                        "r36 requires alpha < beta + 2*gamma, got {alpha} >= {}",
                        beta + 2.0 * gamma
                    )));
                }
            }
            Family::Hq { q, alpha, beta } => {
                if q < 2 {
                    return Err(Error::Domain(format!("hq requires q >= 2, got q = {q}")));
                }
                if !(alpha >= 1.0) {
                    return Err(Error::Domain(format!(
                        "hq requires alpha >= 1, got alpha = {alpha}"
                    )));
                }
                if !(beta > alpha) {
                    return Err(Error::Domain(format!(
                        "hq requires beta > alpha, got beta = {beta}, alpha = {alpha}"
                    )));
                }
            }
            Family::Livcounter { rho, r } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::Domain(format!(
                        "livcounter requires 0 < rho <= 1, got rho = {rho}"
                    )));
                }
                if !(r > 0.0 && r < rho) {
                    return Err(Error::Domain(format!(
                        "livcounter requires 0 < r < rho, got r = {r}, rho = {rho}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Effective `hq` parameters of a `livcounter` request: the smallest
    /// `q ≥ 3` with `β > α` (always `q = 3`, since `β − α = 3(1/r − 1/ρ) > 0`),
    /// `α = 1/ρ`, `β = q/r − (q−1)·α`.
    pub fn livcounter_parameters(rho: f64, r: f64) -> (u32, f64, f64) {
        let q = 3u32;
        let alpha = 1.0 / rho;
        let beta = q as f64 / r - (q as f64 - 1.0) * alpha;
        (q, alpha, beta)
    }
}

fn quarter_turn_steps(base: f64) -> SequenceSpec {
    SequenceSpec::ArithmeticStep {
        base,
        step: Box::new(SequenceSpec::constant(core::f64::consts::FRAC_PI_2)),
    }
}

fn hq_hamiltonian(q: u32, alpha: f64, beta: f64) -> HamburgerHamiltonian {
    let mut cases = vec![SequenceSpec::power(beta, 2.0 * beta, 1.0)];
    for _ in 1..q {
        cases.push(SequenceSpec::power(alpha, 2.0 * alpha, 1.0));
    }
    HamburgerHamiltonian {
        lengths: SequenceSpec::Block { modulus: q, cases },
        angles: quarter_turn_steps(core::f64::consts::FRAC_PI_2),
    }
}

/// Builds a named family together with its ground-truth expectations.
pub fn builtin_family(family: Family) -> Result<(HamburgerHamiltonian, FamilyExpectation)> {
    family.validate()?;
    match family {
        Family::PowerLike { alpha, beta } => {
            let h = HamburgerHamiltonian {
                lengths: SequenceSpec::power(alpha, 0.0, 1.0),
                angles: SequenceSpec::ArithmeticStep {
                    base: core::f64::consts::FRAC_PI_2,
                    step: Box::new(SequenceSpec::power(beta, 0.0, 1.0)),
                },
            };
            let mut expectations = vec![
                Expectation::exact("delta_l", alpha, "pointwise power-law decay of lengths"),
                Expectation::exact(
                    "delta_phi",
                    beta,
                    "averaged power-law decay of angle-difference sines",
                ),
            ];
            if alpha + beta >= 2.0 {
                expectations.push(Expectation::exact(
                    "order",
                    1.0 / (alpha + beta),
                    "regular-case order formula (generic region)",
                ));
            } else {
                expectations.push(Expectation {
                    quantity: "order".into(),
                    lo: 1.0 / (alpha + beta),
                    hi: (1.0 - beta) / (alpha - beta),
                    provenance: "critical-triangle bracket between the leading-coefficient \
                                 lower bound and the combined-decay upper bound"
                        .into(),
                });
            }
            Ok((
                h,
                FamilyExpectation {
                    family: "power_like".into(),
                    parameters: vec![("alpha".into(), alpha), ("beta".into(), beta)],
                    expectations,
                },
            ))
        }
        Family::Jumping { alpha } => {
            let h = HamburgerHamiltonian {
                lengths: SequenceSpec::power(alpha, 0.0, 1.0),
                angles: quarter_turn_steps(core::f64::consts::FRAC_PI_2),
            };
            Ok((
                h,
                FamilyExpectation {
                    family: "jumping".into(),
                    parameters: vec![("alpha".into(), alpha)],
                    expectations: vec![
                        Expectation::exact("delta_phi", 0.0, "angle jumps keep |sin Δφ| = 1"),
                        Expectation::exact(
                            "order",
                            1.0 / alpha,
                            "monotone lengths: lower and upper bounds meet at 1/Δ_l⁺",
                        ),
                    ],
                },
            ))
        }
        Family::R36 { alpha, beta, gamma } => {
            let lengths = SequenceSpec::DyadicBlock {
                period: 2,
                cases: vec![
                    SequenceSpec::power(alpha, 0.0, 1.0),
                    SequenceSpec::power(beta, 0.0, 1.0),
                ],
            };
            let angles = SequenceSpec::ArithmeticStep {
                base: 0.0,
                step: Box::new(SequenceSpec::DyadicBlock {
                    period: 2,
                    cases: vec![
                        SequenceSpec::constant(core::f64::consts::FRAC_PI_2),
                        SequenceSpec::power(gamma, 0.0, 1.0),
                    ],
                }),
            };
            let delta_l = (2.0 * beta + alpha) / 3.0;
            let delta_phi = gamma / 3.0;
            Ok((
                HamburgerHamiltonian { lengths, angles },
                FamilyExpectation {
                    family: "r36".into(),
                    parameters: vec![
                        ("alpha".into(), alpha),
                        ("beta".into(), beta),
                        ("gamma".into(), gamma),
                    ],
                    expectations: vec![
                        Expectation::exact(
                            "delta_l",
                            delta_l,
                            "dyadic-block average of the length decay",
                        ),
                        Expectation::exact(
                            "delta_phi",
                            delta_phi,
                            "dyadic-block average of the angle-step decay",
                        ),
                        Expectation {
                            quantity: "order".into(),
                            lo: 0.0,
                            hi: (1.0 / alpha).max(1.0 / (beta + gamma)),
                            provenance: "block-wise transfer norm estimate; strictly below \
                                         1/(δ_l + δ_φ), so the split lower bound is not an \
                                         equality here"
                                .into(),
                        },
                    ],
                },
            ))
        }
        Family::Hq { q, alpha, beta } => {
            let h = hq_hamiltonian(q, alpha, beta);
            let delta_l = ((q as f64 - 1.0) * alpha + beta) / q as f64;
            let order = if q == 2 { 1.0 / delta_l } else { 1.0 / alpha };
            let order_provenance = if q == 2 {
                "block-modulated diagonal order theorem (q = 2 branch)"
            } else {
                "block-modulated diagonal order theorem (q >= 3 branch)"
            };
            Ok((
                h,
                FamilyExpectation {
                    family: "hq".into(),
                    parameters: vec![
                        ("q".into(), q as f64),
                        ("alpha".into(), alpha),
                        ("beta".into(), beta),
                    ],
                    expectations: vec![
                        Expectation::exact(
                            "delta_l",
                            delta_l,
                            "residue-averaged length decay ((q-1)α + β)/q",
                        ),
                        Expectation::exact(
                            "conv_exponent",
                            1.0 / alpha,
                            "convergence exponent of the lengths",
                        ),
                        Expectation::exact("delta_phi", 0.0, "quarter-turn jumps"),
                        Expectation::exact("order", order, order_provenance),
                        Expectation::exact(
                            "leading_coeff_limsup",
                            1.0 / delta_l,
                            "leading-coefficient growth rate 1/δ_l (diagonal data)",
                        ),
                    ],
                },
            ))
        }
        Family::Livcounter { rho, r } => {
            let (q, alpha, beta) = Family::livcounter_parameters(rho, r);
            let (h, _) = builtin_family(Family::Hq { q, alpha, beta })?;
            Ok((
                h,
                FamilyExpectation {
                    family: "livcounter".into(),
                    parameters: vec![
                        ("rho".into(), rho),
                        ("r".into(), r),
                        ("q".into(), q as f64),
                        ("alpha".into(), alpha),
                        ("beta".into(), beta),
                    ],
                    expectations: vec![
                        Expectation::exact(
                            "order",
                            rho,
                            "block-modulated diagonal order theorem (q >= 3 branch)",
                        ),
                        Expectation::exact(
                            "leading_coeff_limsup",
                            r,
                            "leading-coefficient growth rate 1/δ_l strictly below the order",
                        ),
                        Expectation::exact(
                            "delta_l",
                            1.0 / r,
                            "residue-averaged length decay ((q-1)α + β)/q = 1/r",
                        ),
                    ],
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::LimitClassification;

    #[test]
    fn hq_expectations() {
        let (h, exp) = builtin_family(Family::Hq {
            q: 2,
            alpha: 2.0,
            beta: 4.0,
        })
        .unwrap();
        assert_eq!(exp.get("delta_l").unwrap().lo, 3.0);
        assert!((exp.get("order").unwrap().lo - 1.0 / 3.0).abs() < 1e-15);
        // l_1 = 1, l_2 = (2 ln²2)^-4, l_3 = (3 ln²3)^-2
        let v = h.lengths.materialize(1, 3, 100).unwrap();
        assert_eq!(v[0], 1.0);
        let l2 = 2f64.powf(-4.0) * 2f64.ln().powf(-8.0);
        let l3 = 3f64.powf(-2.0) * 3f64.ln().powf(-4.0);
        assert!((v[1] - l2).abs() < 1e-18);
        assert!((v[2] - l3).abs() < 1e-12);
        // angles n·π/2 ⇒ all sine jumps are 1
        assert_eq!(h.sin_diffs(1, 5).unwrap(), alloc::vec![1.0; 5]);
    }

    #[test]
    fn hq_is_limit_circle() {
        for (q, alpha, beta) in [(2u32, 2.0, 4.0), (3, 2.0, 4.0), (4, 1.5, 3.0), (3, 1.0, 2.0)] {
            let (h, _) = builtin_family(Family::Hq { q, alpha, beta }).unwrap();
            match h.classify_limit(1024, 1e-9).unwrap() {
                LimitClassification::LimitCircle { closed_form, .. } => assert!(closed_form),
                other => panic!("H_q (q={q}, α={alpha}) should be limit circle, got {other:?}"),
            }
        }
    }

    #[test]
    fn livcounter_parameter_derivation() {
        let (q, alpha, beta) = Family::livcounter_parameters(0.5, 0.25);
        assert_eq!(q, 3);
        assert_eq!(alpha, 2.0);
        assert_eq!(beta, 8.0);
        let (_, exp) = builtin_family(Family::Livcounter { rho: 0.5, r: 0.25 }).unwrap();
        assert_eq!(exp.get("delta_l").unwrap().lo, 4.0);
    }

    #[test]
    fn r36_hypothesis_violations_are_rejected() {
        // alpha >= beta + 2*gamma violated
        let e = builtin_family(Family::R36 {
            alpha: 2.0,
            beta: 1.5,
            gamma: 0.2,
        })
        .unwrap_err();
        assert!(matches!(e, Error::Domain(_)), "{e}");
        builtin_family(Family::R36 {
            alpha: 5.0,
            beta: 2.0,
            gamma: 3.0,
        })
        .unwrap();
    }

    #[test]
    fn r36_block_structure() {
        let (h, _) = builtin_family(Family::R36 {
            alpha: 5.0,
            beta: 2.0,
            gamma: 3.0,
        })
        .unwrap();
        // n in [2, 4): dyadic index 1 (odd) -> n^-beta; [4, 8): even -> n^-alpha
        let v = h.lengths.materialize(2, 5, 100).unwrap();
        assert_eq!(v[0], 2f64.powf(-2.0));
        assert_eq!(v[1], 3f64.powf(-2.0));
        assert_eq!(v[2], 4f64.powf(-5.0));
        assert_eq!(v[3], 5f64.powf(-5.0));
        // angle steps: quarter turns on even dyadic blocks, n^-gamma on odd
        let sins = h.sin_diffs(1, 4).unwrap();
        assert_eq!(sins[0], 1.0); // step index 1 sits in block [1, 2): even
        assert!((sins[1] - (2f64.powf(-3.0)).sin()).abs() < 1e-15);
        assert!((sins[2] - (3f64.powf(-3.0)).sin()).abs() < 1e-15);
        assert_eq!(sins[3], 1.0);
    }

    #[test]
    fn power_like_validation() {
        assert!(builtin_family(Family::PowerLike {
            alpha: 0.9,
            beta: 1.0
        })
        .is_err());
        let (h, exp) = builtin_family(Family::PowerLike {
            alpha: 3.0,
            beta: 1.0,
        })
        .unwrap();
        assert!((exp.get("order").unwrap().lo - 0.25).abs() < 1e-15);
        assert!(matches!(
            h.classify_limit(256, 1e-9).unwrap(),
            LimitClassification::LimitCircle { .. }
        ));
    }
}
