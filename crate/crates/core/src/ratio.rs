//! Exact rational recognition of exponents, used for the Sobolev conjugate.

use num_rational::Ratio;

const MAX_DENOMINATOR: i64 = 10_000;

/// The simplest fraction with denominator ≤ 10⁴ that rounds to `x` within a
/// few ulps, found by continued-fraction expansion.
pub(crate) fn recognize(x: f64) -> Option<Ratio<i64>> {
    if !x.is_finite() || x.abs() > 1e9 {
        return None;
    }
    let tol = 4.0 * f64::EPSILON * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        if ((h2 as f64) / (k2 as f64) - x).abs() <= tol {
            return Some(Ratio::new(h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac == 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

/// `q` with `1/q = 1/p − α/n`, computed exactly when all three inputs are
/// recognizable fractions. Returns `None` unless `1/p − α/n > 0`.
pub(crate) fn sobolev_conjugate(p: f64, alpha: f64, n: f64) -> Option<(f64, bool)> {
    if let (Some(p), Some(a), Some(n)) = (recognize(p), recognize(alpha), recognize(n)) {
        if *p.numer() != 0 && *n.numer() != 0 {
            let inv = p.recip() - a / n;
            if inv > Ratio::from_integer(0) {
                let q = inv.recip();
                return Some((*q.numer() as f64 / *q.denom() as f64, true));
            }
            return None;
        }
    }
    let inv = 1.0 / p - alpha / n;
    (inv > 0.0).then(|| (1.0 / inv, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_simple_fractions() {
        assert_eq!(recognize(0.3333333333333333), Some(Ratio::new(1, 3)));
        assert_eq!(recognize(2.0), Some(Ratio::new(2, 1)));
        assert_eq!(recognize(0.35), Some(Ratio::new(7, 20)));
        assert_eq!(recognize(2f64.ln() / 3f64.ln()), None);
    }

    #[test]
    fn conjugate_exponents() {
        assert_eq!(sobolev_conjugate(2.0, 1.0 / 3.0, 1.0), Some((6.0, true)));
        assert_eq!(sobolev_conjugate(1.0, 0.5, 1.0), Some((2.0, true)));
        assert_eq!(sobolev_conjugate(1.0, 1.0 / 3.0, 1.0), Some((1.5, true)));
        assert_eq!(sobolev_conjugate(2.0, 0.5, 1.0), None);
        let (q, exact) = sobolev_conjugate(1.0, 0.3, 2f64.ln() / 3f64.ln()).unwrap();
        assert!(!exact && q > 1.0);
    }
}
