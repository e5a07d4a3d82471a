use serde::Serialize;

use super::{BoundReport, ConstantSource, ConstantsConfig, UsedConstant};
use crate::coeffs::{CoefficientCollection, CoefficientStats};
use crate::metrics::smoothing_constant_max;
use crate::{Error, Result};

/// Statistics of the two polynomials compared by a distance bound.
#[derive(Debug, Clone, Copy)]
pub struct PairStats<'a> {
    pub a: &'a CoefficientStats,
    pub b: &'a CoefficientStats,
}

/// As [`PairStats`] with the truncation degrees `l < d`, `l' < d'`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedPairStats<'a> {
    pub a: &'a CoefficientStats,
    pub b: &'a CoefficientStats,
    pub l: u32,
    pub l_prime: u32,
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::range(what, format!("{v} must be positive")))
    }
}

fn nonnegative(what: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::range(what, format!("{v} must be nonnegative")))
    }
}

/// `mult·exp(−c·norm²/δ)`, with `δ = 0` read as the limit 0.
fn tail(mult: f64, c: f64, norm: f64, influence: f64) -> f64 {
    if influence == 0.0 {
        0.0
    } else {
        mult * (-c * norm * norm / influence).exp()
    }
}

/// Threshold and probability of the conditional-variance small-ball bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Tail {
    /// `½α^d(p/2)^d[a_d]²`.
    pub threshold: f64,
    /// `6d·exp(−¼(p/2)^{2d}[a_d]²/δ(a_d))`.
    pub tail: f64,
}

/// Bound on `P(Var_V Q < threshold)` over the latent `(ε, U)` draws.
pub fn bound_l1_tail(a: &CoefficientCollection, p: f64, alpha: f64) -> Result<L1Tail> {
    let d = a.degree();
    if a.layer_len(d) == 0 {
        return Err(Error::range("coefficients", format!("degree-{d} layer is empty")));
    }
    positive("alpha", alpha)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::range("p", format!("{p} not in (0, 1]")));
    }
    let norm = a.norm(d)?;
    positive("[a_d]", norm)?;
    let half_p = p / 2.0;
    let di = d as i32;
    Ok(L1Tail {
        threshold: 0.5 * alpha.powi(di) * half_p.powi(di) * norm * norm,
        tail: tail(6.0 * d as f64, 0.25 * half_p.powi(2 * di), norm, a.influence(d)?),
    })
}

fn homogeneous(what: &'static str, s: &CoefficientStats) -> Result<()> {
    if (0..s.degree).any(|m| s.norm(m) != 0.0) {
        return Err(Error::range(what, "multilinear bound needs a homogeneous polynomial"));
    }
    Ok(())
}

/// Distance bound for homogeneous multilinear polynomials whose factors
/// admit a split with floor mass `p` and spread `α`. Its constant is explicit
/// up to the shift-regularity constant `C(d)`.
#[allow(clippy::too_many_arguments)]
pub fn bound_t1(
    k: u32,
    d: u32,
    alpha: f64,
    p: f64,
    kappa: f64,
    pair: PairStats<'_>,
    dk_value: f64,
    constants: &ConstantsConfig,
) -> Result<BoundReport> {
    positive("kappa", kappa)?;
    positive("alpha", alpha)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::range("p", format!("{p} not in (0, 1]")));
    }
    nonnegative("d_k", dk_value)?;
    for (what, s) in [("a", pair.a), ("b", pair.b)] {
        if s.degree != d {
            return Err(Error::range(what, format!("degree {} but d = {d}", s.degree)));
        }
        homogeneous(what, s)?;
        if s.top_norm() < kappa {
            return Err(Error::range(
                what,
                format!("[{what}] = {} < kappa = {kappa}", s.top_norm()),
            ));
        }
    }
    let c_k = smoothing_constant_max(k)?;
    let c_d = constants.get("C_d");
    let df = d as f64;
    let c = 4.0 * c_k + c_d.value / (alpha * p.sqrt()) * kappa.powf(-1.0 / df);
    let exponent = 1.0 / (1.0 + (k * d) as f64);
    let tail_c = p.powi(2 * d as i32) / 16f64.powi(d as i32);
    Ok(BoundReport::new("multilinear-tv")
        .term("smoothing", "C·d_k^{1/(1+kd)}", c * dk_value.powf(exponent))
        .term(
            "tail_a",
            "12d·exp(−p^{2d}[a]²/(16^d δ(a)))",
            tail(12.0 * df, tail_c, pair.a.top_norm(), pair.a.top_influence()),
        )
        .term(
            "tail_b",
            "12d·exp(−p^{2d}[b]²/(16^d δ(b)))",
            tail(12.0 * df, tail_c, pair.b.top_norm(), pair.b.top_influence()),
        )
        .constant(UsedConstant::new("C_k", c_k, ConstantSource::Derived))
        .constant(c_d)
        .constant(UsedConstant::new("C", c, ConstantSource::Explicit))
        .exponent("d_k", exponent)
        .finish())
}

fn shape_constants(constants: &ConstantsConfig) -> (UsedConstant, UsedConstant) {
    (constants.get("C_shape"), constants.get("c_tail"))
}

fn inverse_root(norm: f64, m: u32, k_star: u32) -> f64 {
    norm.powf(-1.0 / (m * k_star) as f64)
}

/// Distance bound for general polynomials of degrees `d`, `d'` in vectors
/// with `k*` moment coordinates.
pub fn bound_t2_shape(
    k: u32,
    k_star: u32,
    pair: PairStats<'_>,
    dk_value: f64,
    constants: &ConstantsConfig,
) -> Result<BoundReport> {
    nonnegative("d_k", dk_value)?;
    if k_star == 0 {
        return Err(Error::range("k_star", "must be at least 1"));
    }
    let (d, dp) = (pair.a.degree, pair.b.degree);
    let (na, nb) = (pair.a.top_norm(), pair.b.top_norm());
    positive("[a_d]", na)?;
    positive("[b_d']", nb)?;
    let (c, c_tail) = shape_constants(constants);
    let d_star = d.max(dp);
    let exponent = 1.0 / (1.0 + (d_star * k * k_star) as f64);
    let prefactor = c.value * (inverse_root(na, d, k_star) + inverse_root(nb, dp, k_star) + 1.0);
    Ok(BoundReport::new("polynomial-tv")
        .term(
            "smoothing",
            "C([a_d]^{−1/(dk*)} + [b_d']^{−1/(d'k*)} + 1)·d_k^{1/(1+d*kk*)}",
            prefactor * dk_value.powf(exponent),
        )
        .term(
            "tail_a",
            "12d·exp(−c[a_d]²/δ(a_d))",
            tail(12.0 * d as f64, c_tail.value, na, pair.a.top_influence()),
        )
        .term(
            "tail_b",
            "12d'·exp(−c[b_d']²/δ(b_d'))",
            tail(12.0 * dp as f64, c_tail.value, nb, pair.b.top_influence()),
        )
        .constant(c)
        .constant(c_tail)
        .exponent("d_k", exponent)
        .finish())
}

/// Distance bound using only layers up to `l`, `l'`, paying for the rest
/// through their norms and the moment cap `M_{2k*}`.
pub fn bound_t3_shape(
    k: u32,
    k_star: u32,
    pair: TruncatedPairStats<'_>,
    dk_value: f64,
    m_2k_star: f64,
    constants: &ConstantsConfig,
) -> Result<BoundReport> {
    nonnegative("d_k", dk_value)?;
    if k_star == 0 {
        return Err(Error::range("k_star", "must be at least 1"));
    }
    if !(m_2k_star >= 1.0 && m_2k_star.is_finite()) {
        return Err(Error::range("moment cap", format!("{m_2k_star} < 1")));
    }
    let TruncatedPairStats { a, b, l, l_prime } = pair;
    let (d, dp) = (a.degree, b.degree);
    if l == 0 || l >= d || l_prime == 0 || l_prime >= dp {
        return Err(Error::range(
            "truncation degree",
            format!("need 1 ≤ l < d and 1 ≤ l' < d', got l = {l}, d = {d}, l' = {l_prime}, d' = {dp}"),
        ));
    }
    let (na, nb) = (a.norm(l), b.norm(l_prime));
    positive("[a_l]", na)?;
    positive("[b_l']", nb)?;
    let (c, c_tail) = shape_constants(constants);
    let l_star = l.max(l_prime);
    let exponent = 1.0 / (1.0 + (l_star * k * k_star) as f64);
    let prefactor = c.value * (inverse_root(na, l, k_star) + inverse_root(nb, l_prime, k_star) + 1.0);
    let trunc = |lay: u32, deg: u32, rest: f64| {
        (1.0 + m_2k_star).powf(deg as f64 / lay as f64) * rest.powf(1.0 / (lay * k_star) as f64)
    };
    Ok(BoundReport::new("truncated-polynomial-tv")
        .term(
            "smoothing",
            "C([a_l]^{−1/(lk*)} + [b_l']^{−1/(l'k*)} + 1)·d_k^{1/(1+l*kk*)}",
            prefactor * dk_value.powf(exponent),
        )
        .term(
            "truncation_a",
            "C(…)·(1+M_{2k*})^{d/l}[a_{l+1,d}]^{1/(lk*)}",
            prefactor * trunc(l, d, a.norm_range(l + 1, d)),
        )
        .term(
            "truncation_b",
            "C(…)·(1+M_{2k*})^{d'/l'}[b_{l'+1,d'}]^{1/(l'k*)}",
            prefactor * trunc(l_prime, dp, b.norm_range(l_prime + 1, dp)),
        )
        .term(
            "tail_a",
            "36l·exp(−c[a_l]²/δ(a_l))",
            tail(36.0 * l as f64, c_tail.value, na, a.influence(l)),
        )
        .term(
            "tail_b",
            "36l'·exp(−c[b_l']²/δ(b_l'))",
            tail(36.0 * l_prime as f64, c_tail.value, nb, b.influence(l_prime)),
        )
        .constant(c)
        .constant(c_tail)
        .constant(UsedConstant::new("M_2k*", m_2k_star, ConstantSource::Derived))
        .exponent("d_k", exponent)
        .finish())
}

/// Distance between a polynomial in the vector and the same polynomial in
/// its gaussian counterpart, in terms of the maximal influence.
pub fn bound_invariance_shape(k_star: u32, a: &CoefficientStats, constants: &ConstantsConfig) -> Result<BoundReport> {
    if k_star == 0 {
        return Err(Error::range("k_star", "must be at least 1"));
    }
    let d = a.degree;
    let top = a.top_norm();
    positive("[a_d]", top)?;
    nonnegative("δ(a)", a.influence_total)?;
    let (c, _) = shape_constants(constants);
    let dk = (d * k_star) as f64;
    let delta_exponent = 1.0 / (2.0 + 6.0 * dk);
    let value = c.value
        * (inverse_root(top, d, k_star) + 1.0)
        * (a.total_norm().powf(2.0 / (1.0 + 3.0 * dk)) + 1.0)
        * a.influence_total.powf(delta_exponent);
    Ok(BoundReport::new("gaussian-invariance")
        .term(
            "influence",
            "C([a_d]^{−1/(dk*)} + 1)([a]^{2/(1+3dk*)} + 1)·δ(a)^{1/(2+6dk*)}",
            value,
        )
        .constant(c)
        .exponent("delta", delta_exponent)
        .finish())
}

/// Itemized decay bound on `|E exp(itQ)|`.
pub fn cf_report(t: f64, k_star: u32, a: &CoefficientStats, constants: &ConstantsConfig) -> Result<BoundReport> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::range("t", format!("{t}: the bound is vacuous at t = 0")));
    }
    if k_star == 0 {
        return Err(Error::range("k_star", "must be at least 1"));
    }
    let d = a.degree;
    let top = a.top_norm();
    positive("[a_d]", top)?;
    let c1 = constants.get("C1_cf");
    let c = constants.get("c_cf");
    let exponent = 1.0 / (d * k_star) as f64;
    Ok(BoundReport::new("cf-decay")
        .term(
            "decay",
            "2C_1|t|^{−1/(dk*)}[a_d]^{−1/(dk*)}",
            2.0 * c1.value * t.abs().powf(-exponent) * top.powf(-exponent),
        )
        .term(
            "tail",
            "24d·exp(−c[a_d]²/δ(a_d))",
            tail(24.0 * d as f64, c.value, top, a.top_influence()),
        )
        .constant(c1)
        .constant(c)
        .exponent("t", exponent)
        .finish())
}

pub fn bound_cf(t: f64, k_star: u32, a: &CoefficientStats, constants: &ConstantsConfig) -> Result<f64> {
    Ok(cf_report(t, k_star, a, constants)?.total)
}

/// Earlier truncated-polynomial bound, for exponent comparison only. Its
/// hypotheses ask for unquantified small truncation norms, so it is never
/// asserted.
pub fn truncated_benchmark_shape(
    k: u32,
    k_star: u32,
    theta: f64,
    pair: TruncatedPairStats<'_>,
    dk_value: f64,
    constants: &ConstantsConfig,
) -> Result<BoundReport> {
    let lower = (1.0 + k as f64).powi(-2);
    if !(theta > lower && theta < 1.0) {
        return Err(Error::range("theta", format!("{theta} not in ({lower}, 1)")));
    }
    nonnegative("d_k", dk_value)?;
    let TruncatedPairStats { a, b, l, l_prime } = pair;
    let (c, c_tail) = shape_constants(constants);
    let lm = (l.max(l_prime) * k_star) as f64;
    let exponent = theta / (1.0 + 2.0 * k as f64 * lm);
    let soft = |delta: f64| {
        if delta == 0.0 {
            0.0
        } else {
            c.value * (-c_tail.value / delta).exp()
        }
    };
    let mut report = BoundReport::new("prior-truncated-benchmark")
        .term(
            "smoothing",
            "C·d_k^{θ/(1+2k·max(l,l')k*)}",
            c.value * dk_value.powf(exponent),
        )
        .term("tail_a", "C·exp(−c/δ(a))", soft(a.influence_total))
        .term("tail_b", "C·exp(−c/δ(b))", soft(b.influence_total))
        .term(
            "truncation_a",
            "C·[a_{l+1,d}]^{2θ/(max(l,l')k*)}",
            c.value * a.norm_range(l + 1, a.degree).powf(2.0 * theta / lm),
        )
        .term(
            "truncation_b",
            "C·[b_{l'+1,d'}]^{2θ/(max(l,l')k*)}",
            c.value * b.norm_range(l_prime + 1, b.degree).powf(2.0 * theta / lm),
        )
        .constant(c)
        .constant(c_tail)
        .exponent("d_k", exponent)
        .finish();
    report.display_only = true;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top(d: u32, norm: f64, delta: f64) -> CoefficientStats {
        CoefficientStats::top_only(d, 1, norm, delta)
    }

    #[test]
    fn t1_example() {
        let s = top(1, 1.0, 1.0);
        let pair = PairStats { a: &s, b: &s };
        let r = bound_t1(1, 1, 1.0, 1.0, 1.0, pair, 1e-4, &ConstantsConfig::default()).unwrap();
        let want = 5.0 * 1e-2 + 24.0 * (-1.0f64 / 16.0).exp();
        assert!((r.total - want).abs() < 1e-12, "{}", r.total);
        assert!((r.total - 22.595).abs() < 1e-3);
        assert!(r.is_consistent());
        assert!(!r.informative);
        let zero = bound_t1(1, 1, 1.0, 1.0, 1.0, pair, 0.0, &ConstantsConfig::default()).unwrap();
        assert_eq!(zero.term_value("smoothing"), Some(0.0));
        assert!(bound_t1(1, 1, 1.0, 1.0, 0.0, pair, 0.0, &ConstantsConfig::default()).is_err());
        assert!(bound_t1(1, 1, 1.0, 1.0, 2.0, pair, 0.0, &ConstantsConfig::default()).is_err());
    }

    #[test]
    fn t2_exponent_and_power_law() {
        let a = top(2, 1.0, 0.1);
        let b = top(3, 2.0, 0.1);
        let pair = PairStats { a: &a, b: &b };
        let c = ConstantsConfig::default();
        let r = bound_t2_shape(3, 1, pair, 0.01, &c).unwrap();
        assert!((r.exponent_value("d_k").unwrap() - 0.1).abs() < 1e-15);
        let r2 = bound_t2_shape(3, 1, pair, 0.02, &c).unwrap();
        let ratio = r2.term_value("smoothing").unwrap() / r.term_value("smoothing").unwrap();
        assert!((ratio - 2f64.powf(0.1)).abs() < 1e-12);
        let a0 = top(2, 1.0, 0.0);
        let b0 = top(3, 2.0, 0.0);
        let z = bound_t2_shape(3, 1, PairStats { a: &a0, b: &b0 }, 0.0, &c).unwrap();
        assert_eq!(z.total, 0.0);
    }

    fn two_layer(d: u32, l: u32, low: f64, high: f64) -> CoefficientStats {
        let mut s = top(d, high, 0.05);
        s.norms[l as usize] = low;
        s.influences[l as usize] = 0.05;
        s
    }

    #[test]
    fn t3_exponent_and_reduction() {
        let a = two_layer(3, 1, 1.0, 0.0);
        let b = two_layer(4, 2, 1.5, 0.0);
        let c = ConstantsConfig::default();
        let pair = TruncatedPairStats {
            a: &a,
            b: &b,
            l: 1,
            l_prime: 2,
        };
        let r = bound_t3_shape(3, 1, pair, 0.01, 2.0, &c).unwrap();
        assert!((r.exponent_value("d_k").unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(r.term_value("truncation_a"), Some(0.0));
        assert_eq!(r.term_value("truncation_b"), Some(0.0));
        let (ta, tb) = (top(1, 1.0, 0.05), top(2, 1.5, 0.05));
        let t2 = bound_t2_shape(3, 1, PairStats { a: &ta, b: &tb }, 0.01, &c).unwrap();
        assert!((r.term_value("smoothing").unwrap() - t2.term_value("smoothing").unwrap()).abs() < 1e-15);
        assert!(bound_t3_shape(
            3,
            1,
            TruncatedPairStats {
                a: &a,
                b: &b,
                l: 3,
                l_prime: 2
            },
            0.01,
            2.0,
            &c
        )
        .is_err());
    }

    #[test]
    fn t3_moment_cap_only_moves_truncation() {
        let a = two_layer(3, 1, 1.0, 0.3);
        let b = two_layer(4, 2, 1.5, 0.2);
        let c = ConstantsConfig::default();
        let pair = TruncatedPairStats {
            a: &a,
            b: &b,
            l: 1,
            l_prime: 2,
        };
        let lo = bound_t3_shape(1, 1, pair, 0.01, 2.0, &c).unwrap();
        let hi = bound_t3_shape(1, 1, pair, 0.01, 5.0, &c).unwrap();
        for name in ["smoothing", "tail_a", "tail_b"] {
            assert_eq!(lo.term_value(name), hi.term_value(name));
        }
        assert!(hi.term_value("truncation_a") > lo.term_value("truncation_a"));
        assert!(hi.term_value("truncation_b") > lo.term_value("truncation_b"));
    }

    #[test]
    fn invariance_exponent() {
        let mut a = top(2, 1.0, 0.2);
        let c = ConstantsConfig::default();
        let r = bound_invariance_shape(1, &a, &c).unwrap();
        assert!((r.exponent_value("delta").unwrap() - 1.0 / 14.0).abs() < 1e-15);
        a.influence_total = 0.1;
        let half = bound_invariance_shape(1, &a, &c).unwrap();
        assert!((half.total / r.total - 2f64.powf(-1.0 / 14.0)).abs() < 1e-12);
        a.influence_total = 0.0;
        assert_eq!(bound_invariance_shape(1, &a, &c).unwrap().total, 0.0);
    }

    #[test]
    fn cf_example() {
        let a = top(2, 1.0, 0.1);
        let c = ConstantsConfig::default();
        let v = bound_cf(100.0, 1, &a, &c).unwrap();
        let want = 2.0 * 0.1 + 48.0 * (-10.0f64).exp();
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.202179).abs() < 1e-6);
        assert!(bound_cf(0.0, 1, &a, &c).is_err());
        assert!(!cf_report(0.01, 1, &a, &c).unwrap().informative);
        let far = bound_cf(1e12, 1, &a, &c).unwrap();
        assert!((far - 48.0 * (-10.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn l1_tail_example() {
        let mut a = CoefficientCollection::new(1, 1, 1, 3).unwrap();
        a.insert(vec![crate::coeffs::IndexTriple::linear(2)], 1.0).unwrap();
        let t = bound_l1_tail(&a, 1.0, 1.0 / 3.0).unwrap();
        assert!((t.threshold - 1.0 / 12.0).abs() < 1e-15);
        // a single tuple has δ = [a]²
        assert!((t.tail - 6.0 * (-1.0f64 / 16.0).exp()).abs() < 1e-15);
        let empty = CoefficientCollection::new(1, 1, 1, 3).unwrap();
        assert!(bound_l1_tail(&empty, 1.0, 1.0).is_err());
    }

    #[test]
    fn benchmark_is_display_only() {
        let a = two_layer(3, 1, 1.0, 0.1);
        let b = two_layer(3, 1, 1.0, 0.1);
        let pair = TruncatedPairStats {
            a: &a,
            b: &b,
            l: 1,
            l_prime: 1,
        };
        let r = truncated_benchmark_shape(1, 1, 0.5, pair, 0.01, &ConstantsConfig::default()).unwrap();
        assert!(r.display_only);
        assert!((r.exponent_value("d_k").unwrap() - 0.5 / 3.0).abs() < 1e-15);
        assert!(truncated_benchmark_shape(1, 1, 0.1, pair, 0.01, &ConstantsConfig::default()).is_err());
    }
}
