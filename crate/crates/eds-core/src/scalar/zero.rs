use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::expr::{Expr, Rat};
use super::numeric::{approx_f64, NumEnv, NumError};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Zero,
    NonZero,
    Unknown,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    ExactOnly,
    ExactThenNumeric,
    NumericOnly,
}

impl Default for ZeroPolicy {
    fn default() -> Self {
        ZeroPolicy::ExactThenNumeric
    }
}

/// Symbol knowledge used when sampling. Symbols in `positive` draw from a
/// positive window; explicit `ranges` win over both defaults.
#[derive(Clone, Default, Debug, Serialize, Deserialize)]
pub struct Assumptions {
    pub positive: BTreeSet<String>,
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl Assumptions {
    pub fn positive<I: IntoIterator<Item = S>, S: Into<String>>(syms: I) -> Self {
        Assumptions {
            positive: syms.into_iter().map(Into::into).collect(),
            ranges: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSpec {
    pub points: usize,
    pub digits: usize,
    /// Relative residual below 10^zero_exp at every point reads as zero.
    pub zero_exp: i32,
    /// Relative residual above 10^nonzero_exp at any point reads as nonzero.
    pub nonzero_exp: i32,
    pub seed: u64,
    /// Redraws allowed per point on domain errors.
    pub retries: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { points: 32, digits: 50, zero_exp: -30, nonzero_exp: -10, seed: 7, retries: 12 }
    }
}

impl SampleSpec {
    pub fn with_seed(seed: u64) -> Self {
        SampleSpec { seed, ..SampleSpec::default() }
    }
}

/// Replayable record of how a verdict was reached.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub policy: ZeroPolicy,
    /// Set when the canonical form alone decided.
    pub exact: Option<String>,
    pub samples: Option<SampleReport>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleReport {
    pub points: usize,
    pub digits: usize,
    pub seed: u64,
    pub zero_threshold: String,
    pub nonzero_threshold: String,
    /// Largest relative residual max_p |e(p)| / scale(p) seen.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriState {
    pub verdict: Verdict,
    pub transcript: Transcript,
}

impl TriState {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }

    pub(crate) fn exact(verdict: Verdict, policy: ZeroPolicy, why: &str) -> TriState {
        TriState {
            verdict,
            transcript: Transcript {
                policy,
                exact: Some(why.to_string()),
                samples: None,
                notes: Vec::new(),
            },
        }
    }
}

/// Decide whether `e` is identically zero.
///
/// Exact phase: the canonical form is zero iff the term map is empty; a
/// nonempty form with a single monomial, or a nonzero constant, is nonzero
/// as a formal expression. Numeric phase: evaluate at `spec.points` random
/// rational points at `spec.digits` digits and compare the residual against
/// the largest single term (so cancellation is measured relative to the
/// summands that produced it).
pub fn decide_zero(
    e: &Expr,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> TriState {
    if policy != ZeroPolicy::NumericOnly {
        if e.is_zero_expr() {
            return TriState::exact(Verdict::Zero, policy, "canonical form is 0");
        }
        if let Some(r) = e.as_rat() {
            if !num_traits::Zero::is_zero(&r) {
                return TriState::exact(Verdict::NonZero, policy, "nonzero constant");
            }
        }
        if e.num_terms() == 1 {
            // a single canonical monomial vanishes only where a factor does
            return TriState::exact(Verdict::NonZero, policy, "single nonzero monomial");
        }
        // Clear denominators: sums over a common denominator collapse.
        let c = e.cleared();
        if c.is_zero_expr() {
            return TriState::exact(Verdict::Zero, policy, "cleared form is 0");
        }
        if c.num_terms() == 1 {
            return TriState::exact(Verdict::NonZero, policy, "cleared form is a single monomial");
        }
        if policy == ZeroPolicy::ExactOnly {
            return TriState {
                verdict: Verdict::Unknown,
                transcript: Transcript {
                    policy,
                    exact: None,
                    samples: None,
                    notes: vec!["multi-term form; exact-only policy stops here".into()],
                },
            };
        }
    }
    sample_phase(e, policy, spec, assume)
}

fn draw_rat<R: Rng>(rng: &mut R, lo: f64, hi: f64, avoid_origin: bool) -> Rat {
    const DEN: i64 = 1 << 20;
    loop {
        let t: f64 = rng.gen_range(lo..hi);
        if avoid_origin && t.abs() < 0.07 {
            continue;
        }
        let n = (t * DEN as f64).round() as i64;
        if n == 0 && avoid_origin {
            continue;
        }
        return Rat::new(n.into(), DEN.into());
    }
}

fn sample_phase(
    e: &Expr,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> TriState {
    let mut notes = Vec::new();
    let fns = e.user_fns();
    if !fns.is_empty() {
        notes.push(format!(
            "opaque function(s) {:?} admit no numeric model",
            fns.iter().cloned().collect::<Vec<_>>()
        ));
        return TriState {
            verdict: Verdict::Unknown,
            transcript: Transcript { policy, exact: None, samples: None, notes },
        };
    }
    let syms: Vec<String> = e.symbols().into_iter().collect();
    let mut env = NumEnv::with_digits(spec.digits);
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let ten = env.from_f64(10.0);
    let pow10 = |env: &NumEnv, k: i32| -> super::numeric::NumValue {
        let mut acc = env.from_f64(1.0);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&ten, env.prec_bits, astro_float::RoundingMode::ToEven);
        }
        if k < 0 {
            env.from_f64(1.0).div(&acc, env.prec_bits, astro_float::RoundingMode::ToEven)
        } else {
            acc
        }
    };
    let zero_thr = pow10(&env, spec.zero_exp);
    let nonzero_thr = pow10(&env, spec.nonzero_exp);
    let scale_floor = pow10(&env, -260);

    let mut max_ratio = env.from_f64(0.0);
    let mut decided_nonzero = false;
    let mut completed = 0usize;
    'points: for _ in 0..spec.points {
        let mut attempt = 0usize;
        loop {
            let mut vals = BTreeMap::new();
            for s in &syms {
                let (lo, hi, avoid) = if let Some(&(lo, hi)) = assume.ranges.get(s) {
                    (lo, hi, false)
                } else if assume.positive.contains(s) {
                    (0.3, 2.3, false)
                } else {
                    (-1.15, 1.2, true)
                };
                let r = draw_rat(&mut rng, lo, hi, avoid);
                vals.insert(s.clone(), env.from_rat(&r));
            }
            match point_ratio(&mut env, e, &vals, &scale_floor) {
                Ok(ratio) => {
                    if ratio > max_ratio {
                        max_ratio = ratio.clone();
                    }
                    if ratio > nonzero_thr {
                        decided_nonzero = true;
                    }
                    completed += 1;
                    continue 'points;
                }
                Err(NumError::Domain(_)) | Err(NumError::MissingSymbol(_)) => {
                    attempt += 1;
                    if attempt > spec.retries {
                        notes.push("sampling kept leaving the real domain".into());
                        break 'points;
                    }
                }
                Err(NumError::OpaqueFunction(name)) => {
                    notes.push(format!("opaque function `{name}`"));
                    break 'points;
                }
            }
        }
    }

    let report = SampleReport {
        points: completed,
        digits: spec.digits,
        seed: spec.seed,
        zero_threshold: format!("1e{}", spec.zero_exp),
        nonzero_threshold: format!("1e{}", spec.nonzero_exp),
        max_ratio: approx_f64(&max_ratio),
    };
    let verdict = if completed < spec.points.min(8).max(1) {
        Verdict::Unknown
    } else if decided_nonzero {
        Verdict::NonZero
    } else if max_ratio < zero_thr {
        Verdict::Zero
    } else {
        Verdict::Unknown
    };
    if verdict == Verdict::Zero {
        notes.push(format!(
            "all {} residuals below {} at {} digits",
            completed, report.zero_threshold, spec.digits
        ));
    }
    TriState {
        verdict,
        transcript: Transcript { policy, exact: None, samples: Some(report), notes },
    }
}

/// |e(point)| relative to the largest single term at that point.
fn point_ratio(
    env: &mut NumEnv,
    e: &Expr,
    vals: &BTreeMap<String, super::numeric::NumValue>,
    scale_floor: &super::numeric::NumValue,
) -> Result<super::numeric::NumValue, NumError> {
    let p = env.prec_bits;
    let rm = astro_float::RoundingMode::ToEven;
    let mut scale = env.from_f64(0.0);
    let mut total = env.from_f64(0.0);
    for (m, c) in e.terms() {
        let t = env.eval_term(m.iter(), c, vals)?;
        let mag = t.abs();
        if mag > scale {
            scale = mag;
        }
        total = total.add(&t, p, rm);
    }
    if scale < *scale_floor {
        return Err(NumError::Domain("all terms vanish at sample point".into()));
    }
    Ok(total.abs().div(&scale, p, rm))
}

/// Convenience wrapper with default policy/spec and no assumptions.
pub fn is_zero_default(e: &Expr) -> TriState {
    decide_zero(e, ZeroPolicy::ExactThenNumeric, &SampleSpec::default(), &Assumptions::default())
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Zero => "zero",
            Verdict::NonZero => "nonzero",
            Verdict::Unknown => "unknown",
        }
    }
}

#[allow(dead_code)]
fn _rat_to_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
