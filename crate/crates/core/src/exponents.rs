//! Closed-form evaluation of every critical-exponent and bootstrap formula,
//! with hypothesis checks. Entries whose hypotheses fail are UNDEFINED, not
//! guessed; infinity is a legitimate value (the bootstrap cap).

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An exponent value or the reason it is undefined.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentValue {
    Defined(f64),
    Undefined(String),
}

impl ExponentValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            ExponentValue::Defined(v) => Some(*v),
            ExponentValue::Undefined(_) => None,
        }
    }
}

impl Serialize for ExponentValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExponentValue::Defined(v) if v.is_infinite() => s.serialize_str("inf"),
            ExponentValue::Defined(v) => s.serialize_f64(*v),
            ExponentValue::Undefined(reason) => s.serialize_str(&format!("undefined: {reason}")),
        }
    }
}

/// The table of critical growth exponents for dimension d.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentTable {
    pub d: usize,
    pub alpha: f64,
    /// 1 + 4/d: the L^2 energy-control exponent.
    pub p_crit_energy: ExponentValue,
    /// 1 + 4/(d-2): the H^1 exponent, d > 2.
    pub p_crit_h1: ExponentValue,
    /// 1 + 4/(d-4): the D-norm exponent, d > 4.
    pub p_crit_d: ExponentValue,
    /// 1 + 4 alpha/(d - 4 alpha): fractional version, d > 4 alpha.
    pub p_crit_frac: ExponentValue,
}

pub fn critical_exponents(d: usize, alpha: f64) -> Result<ExponentTable> {
    if d < 1 {
        return Err(Error::Argument("dimension must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Argument(format!("fractional order must lie in (0, 1], got {alpha}")));
    }
    let df = d as f64;
    let p_crit_energy = ExponentValue::Defined(1.0 + 4.0 / df);
    let p_crit_h1 = if d > 2 {
        ExponentValue::Defined(1.0 + 4.0 / (df - 2.0))
    } else {
        ExponentValue::Undefined("requires d > 2".into())
    };
    let p_crit_d = if d > 4 {
        ExponentValue::Defined(1.0 + 4.0 / (df - 4.0))
    } else {
        ExponentValue::Undefined("requires d > 4".into())
    };
    let p_crit_frac = if df > 4.0 * alpha {
        ExponentValue::Defined(1.0 + 4.0 * alpha / (df - 4.0 * alpha))
    } else {
        ExponentValue::Undefined("requires d > 4 alpha".into())
    };
    Ok(ExponentTable {
        d,
        alpha,
        p_crit_energy,
        p_crit_h1,
        p_crit_d,
        p_crit_frac,
    })
}

/// Exponents of the weak-to-strong smoothing estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingExponents {
    pub d: usize,
    pub p1: f64,
    /// s = 4/(d(p1-1)+2)
    pub s: f64,
    /// q1 = (d(p1-1)+2)/(2 p1)
    pub q1: f64,
    /// residual of 1/q1 + (2-s)(1/2 - 1/d) = 1, evaluated in a
    /// cancellation-free grouping (exactly zero for exact inputs).
    pub holder_residual: f64,
    /// 0 < s < 2 and 1 < q1 < infinity
    pub in_range: bool,
    /// minimal real N with 2(N-1)/(2-s) >= N, i.e. N = 2/s.
    pub n_theory: f64,
}

pub fn smoothing_exponents(d: usize, p1: f64) -> Result<SmoothingExponents> {
    if d < 1 {
        return Err(Error::Argument("dimension must be >= 1".into()));
    }
    if !(p1.is_finite() && p1 > 1.0) {
        return Err(Error::Argument(format!("p1 must exceed 1, got {p1}")));
    }
    let df = d as f64;
    let big_d = df * (p1 - 1.0) + 2.0;
    let s = 4.0 / big_d;
    let q1 = big_d / (2.0 * p1);
    // residual over the common denominator d*D: the numerator collapses to
    // d [2 p1 + (p1-1)(d-2) - d(p1-1) - 2] = 0 identically.
    let numerator = df * (2.0 * p1 + (p1 - 1.0) * (df - 2.0) - df * (p1 - 1.0) - 2.0);
    let holder_residual = numerator / (df * big_d);
    let in_range = s > 0.0 && s < 2.0 && q1 > 1.0 && q1.is_finite();
    Ok(SmoothingExponents {
        d,
        p1,
        s,
        q1,
        holder_residual,
        in_range,
        n_theory: 2.0 / s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BootstrapVerdict {
    ReachesTarget,
    Stalls,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub q0: f64,
    /// iterates q_0, q_1, ...; f64::INFINITY is the explicit cap value.
    pub sequence: Vec<f64>,
    pub verdict: BootstrapVerdict,
    /// index of the first iterate >= the target (when reached)
    pub steps_to_target: Option<usize>,
    /// p - q0 (2-kappa)/d < 1: the monotone-increase criterion.
    pub first_step_increasing_criterion: bool,
    /// observed q1 > q0
    pub first_step_increased: bool,
}

/// The Moser-style bootstrap: starting from q0 = d(r+2)/(d-r-4) (or a forced
/// seed), iterate q_{k+1} = min{inf, s_k d/(d - s_k (2-kappa))} with
/// s_k = min(q, q_k/p). Nonpositive denominator means the embedding already
/// gives every exponent: the iterate is set to infinity.
pub fn bootstrap(
    d: usize,
    p: f64,
    q: f64,
    kappa: f64,
    r: f64,
    max_iter: usize,
    q0_override: Option<f64>,
) -> Result<BootstrapResult> {
    let df = d as f64;
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Argument(format!("p must exceed 1, got {p}")));
    }
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Argument(format!("kappa must lie in [0, 1), got {kappa}")));
    }
    if q <= df / 2.0 {
        return Err(Error::Argument(format!("target q must exceed d/2 = {}, got {q}", df / 2.0)));
    }
    let q0 = match q0_override {
        Some(v) => v,
        None => {
            if df <= r + 4.0 {
                return Err(Error::config(
                    "d",
                    format!("seed formula q0 = d(r+2)/(d-r-4) needs d > r + 4, got d = {d}, r = {r}"),
                ));
            }
            df * (r + 2.0) / (df - r - 4.0)
        }
    };
    if !(q0.is_finite() && q0 > 0.0) {
        return Err(Error::Argument(format!("invalid bootstrap seed {q0}")));
    }
    let criterion = p - q0 * (2.0 - kappa) / df < 1.0;

    let mut sequence = vec![q0];
    let mut verdict = BootstrapVerdict::Stalls;
    let mut steps_to_target = None;
    let mut first_step_increased = false;
    let mut qk = q0;
    for step in 1..=max_iter {
        let sk = q.min(qk / p);
        let denom = df - sk * (2.0 - kappa);
        let next = if denom <= 0.0 { f64::INFINITY } else { sk * df / denom };
        sequence.push(next);
        if step == 1 {
            first_step_increased = next > q0;
        }
        if steps_to_target.is_none() && next >= q {
            verdict = BootstrapVerdict::ReachesTarget;
            steps_to_target = Some(step);
            break;
        }
        if next <= qk {
            // non-increasing and still below target: the iteration stalls
            break;
        }
        qk = next;
    }
    Ok(BootstrapResult {
        q0,
        sequence,
        verdict,
        steps_to_target,
        first_step_increasing_criterion: criterion,
        first_step_increased,
    })
}

/// Largest epsilon with 4/(d-4) + eps - (2-kappa)(r+2)/(d-r-4) < 0,
/// clamped at 0, for each kappa in the range.
pub fn epsilon_window(d: usize, r: f64, kappa_range: &[f64]) -> Result<Vec<(f64, f64)>> {
    let df = d as f64;
    if df <= 4.0 || df <= r + 4.0 {
        return Err(Error::Argument(format!(
            "epsilon window needs d > max(4, r+4), got d = {d}, r = {r}"
        )));
    }
    Ok(kappa_range
        .iter()
        .map(|&kappa| {
            let eps = (2.0 - kappa) * (r + 2.0) / (df - r - 4.0) - 4.0 / (df - 4.0);
            (kappa, eps.max(0.0))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    #[test]
    fn critical_exponent_arithmetic() {
        let t = critical_exponents(5, 1.0).unwrap();
        assert_eq!(t.p_crit_d, ExponentValue::Defined(5.0));
        let t3 = critical_exponents(3, 0.5).unwrap();
        assert_eq!(t3.p_crit_h1, ExponentValue::Defined(5.0));
        assert_relative_eq!(t3.p_crit_energy.value().unwrap(), 1.0 + 4.0 / 3.0);
        assert_eq!(t3.p_crit_frac, ExponentValue::Defined(3.0));
        let t4 = critical_exponents(4, 1.0).unwrap();
        assert!(matches!(t4.p_crit_d, ExponentValue::Undefined(_)));
    }

    #[test]
    fn fractional_exponent_reduces_to_d_norm_exponent() {
        for d in 5..=12 {
            let t = critical_exponents(d, 1.0).unwrap();
            assert_eq!(t.p_crit_frac.value(), t.p_crit_d.value());
        }
    }

    #[test]
    fn smoothing_exponents_exact_values() {
        let e = smoothing_exponents(3, 3.0).unwrap();
        assert_eq!(e.s, 0.5);
        assert_eq!(e.q1, 4.0 / 3.0);
        assert_eq!(e.holder_residual, 0.0);
        assert!(e.in_range);
        let e5 = smoothing_exponents(5, 5.0).unwrap();
        assert_relative_eq!(e5.s, 2.0 / 11.0, max_relative = 1e-15);
        assert_relative_eq!(e5.q1, 2.2, max_relative = 1e-15);
        assert_eq!(e5.holder_residual, 0.0);
    }

    #[test]
    fn bootstrap_supercritical_case_caps_to_infinity() {
        // d = 5, r = 0.2, p = 4.9, kappa = 0.01, q = 3
        let res = bootstrap(5, 4.9, 3.0, 0.01, 0.2, 50, None).unwrap();
        assert_relative_eq!(res.q0, 13.75, max_relative = 1e-14);
        assert_eq!(res.verdict, BootstrapVerdict::ReachesTarget);
        assert_eq!(res.steps_to_target, Some(1));
        assert!(res.sequence[1].is_infinite());
    }

    #[test]
    fn bootstrap_stalls_when_criterion_fails() {
        // d = 5, q0 forced to 2, p = 6, kappa = 0: q1 = 10/26 < q0
        let res = bootstrap(5, 6.0, 3.0, 0.0, 0.2, 50, Some(2.0)).unwrap();
        assert_eq!(res.verdict, BootstrapVerdict::Stalls);
        assert_relative_eq!(res.sequence[1], 10.0 / 26.0, max_relative = 1e-14);
        assert!(!res.first_step_increasing_criterion);
        assert!(!res.first_step_increased);
    }

    #[test]
    fn first_step_direction_matches_criterion_on_sweep() {
        let mut rng = SplitMix64::new(0xB007);
        let mut mismatches = 0;
        for _ in 0..1000 {
            let d = 5 + (rng.next_u64() % 4) as usize; // 5..8
            let p = 1.5 + 5.0 * rng.next_f64();
            let kappa = 0.3 * rng.next_f64();
            let q0 = 0.5 + 10.0 * rng.next_f64();
            let q = (d as f64 / 2.0) + 10.0; // high target so step 1 is informative
            let res = bootstrap(d, p, q, kappa, 0.2, 3, Some(q0)).unwrap();
            // skip the degenerate equality boundary
            let lhs = p - q0 * (2.0 - kappa) / d as f64;
            if (lhs - 1.0).abs() < 1e-9 {
                continue;
            }
            if res.first_step_increasing_criterion != res.first_step_increased {
                mismatches += 1;
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn epsilon_window_values_and_monotonicity() {
        let w = epsilon_window(5, 0.2, &[1e-12]).unwrap();
        assert_relative_eq!(w[0].1, 1.5, max_relative = 1e-9);
        // window closes as r -> 0
        let w0 = epsilon_window(5, 1e-9, &[0.0]).unwrap();
        assert!(w0[0].1 <= 1e-6);
        // d = 6, r = 0.2, kappa = 0.1
        let w6 = epsilon_window(6, 0.2, &[0.1]).unwrap();
        assert_relative_eq!(w6[0].1, 1.9 * 2.2 / 1.8 - 2.0, max_relative = 1e-12);
        // monotone increasing in r, decreasing in kappa
        let lo = epsilon_window(6, 0.1, &[0.1]).unwrap()[0].1;
        let hi = epsilon_window(6, 0.3, &[0.1]).unwrap()[0].1;
        assert!(hi > lo);
        let k_lo = epsilon_window(6, 0.2, &[0.05]).unwrap()[0].1;
        let k_hi = epsilon_window(6, 0.2, &[0.2]).unwrap()[0].1;
        assert!(k_lo > k_hi);
    }

    #[test]
    fn hypothesis_violations_are_rejected() {
        assert!(bootstrap(5, 4.9, 2.0, 0.01, 0.2, 10, None).is_err()); // q <= d/2
        assert!(bootstrap(4, 4.9, 3.0, 0.01, 0.5, 10, None).is_err()); // d <= r+4
        assert!(epsilon_window(4, 0.2, &[0.0]).is_err());
    }
}
