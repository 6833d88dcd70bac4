use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest `j1 + j2 + K + 1` for which a cancelling sum is redone exactly.
pub const EXACT_MAX_SUM: usize = 200;

/// Relative error of the floating sum above which the exact path runs.
const CANCELLATION_LIMIT: f64 = 1e-14;

/// Clebsch-Gordan coefficients `<j1 m1, j2 m2 | K M>` by the Racah sum,
/// with cached log-factorials. Every argument is doubled.
///
/// The alternating sum cancels badly for large `K`; when its estimated
/// relative error exceeds 1e-14 and the factorials stay below
/// [`EXACT_MAX_SUM`], the coefficient is recomputed in rational arithmetic
/// and only the final square root is rounded.
#[derive(Debug, Clone)]
pub struct Clebsch {
    ln_fact: Vec<f64>,
    fact: Vec<BigInt>,
}

impl Clebsch {
    /// Table large enough for `j1 + j2 + K + 1 <= max_sum`.
    pub fn new(max_sum: usize) -> Self {
        let exact = (max_sum + 1).min(EXACT_MAX_SUM);
        let mut fact = Vec::with_capacity(exact + 1);
        fact.push(BigInt::one());
        for k in 1..=exact {
            let next = &fact[k - 1] * BigInt::from(k);
            fact.push(next);
        }
        Self {
            ln_fact: crate::dynamics::ln_factorials(max_sum + 1),
            fact,
        }
    }

    fn bf(&self, n: i32) -> &BigInt {
        &self.fact[n as usize]
    }

    fn lf(&self, n: i32) -> f64 {
        self.ln_fact[n as usize]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn coeff(&self, tj1: i32, tm1: i32, tj2: i32, tm2: i32, tk: i32, tmk: i32) -> f64 {
        if tm1 + tm2 != tmk
            || tk < (tj1 - tj2).abs()
            || tk > tj1 + tj2
            || tm1.abs() > tj1
            || tm2.abs() > tj2
            || tmk.abs() > tk
            || (tj1 + tm1) % 2 != 0
            || (tj2 + tm2) % 2 != 0
            || (tk + tmk) % 2 != 0
            || (tj1 + tj2 + tk) % 2 != 0
        {
            return 0.0;
        }
        let needed = ((tj1 + tj2 + tk) / 2 + 1) as usize;
        if needed >= self.ln_fact.len() {
            return Clebsch::new(needed).coeff(tj1, tm1, tj2, tm2, tk, tmk);
        }
        // integer arguments
        let a = (tj1 + tj2 - tk) / 2; // j1 + j2 - K
        let b = (tj1 - tm1) / 2; // j1 - m1
        let c = (tj2 + tm2) / 2; // j2 + m2
        let d = (tk - tj2 + tm1) / 2; // K - j2 + m1
        let e = (tk - tj1 - tm2) / 2; // K - j1 - m2
        let pre = 0.5
            * (((tk + 1) as f64).ln() + self.lf((tk + tj1 - tj2) / 2) + self.lf((tk - tj1 + tj2) / 2) + self.lf(a)
                - self.lf((tj1 + tj2 + tk) / 2 + 1)
                + self.lf((tk + tmk) / 2)
                + self.lf((tk - tmk) / 2)
                + self.lf(b)
                + self.lf((tj1 + tm1) / 2)
                + self.lf((tj2 - tm2) / 2)
                + self.lf(c));
        let lo = 0.max(-d).max(-e);
        let hi = a.min(b).min(c);
        if lo > hi {
            return 0.0;
        }
        let logs: Vec<(f64, f64)> = (lo..=hi)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let lt =
                    -(self.lf(k) + self.lf(a - k) + self.lf(b - k) + self.lf(c - k) + self.lf(d + k) + self.lf(e + k));
                (sign, pre + lt)
            })
            .collect();
        let top = logs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|(s, l)| s * (l - top).exp()).sum();
        let gross: f64 = logs.iter().map(|(_, l)| (l - top).exp()).sum();
        let log_scale = logs.iter().map(|x| x.1.abs()).fold(1.0, f64::max);
        let rel_err = f64::EPSILON * log_scale * gross / sum.abs();
        if rel_err > CANCELLATION_LIMIT && needed < self.fact.len() {
            return self.exact(tj1, tm1, tj2, tm2, tk, tmk, (a, b, c, d, e), (lo, hi));
        }
        sum * top.exp()
    }

    #[allow(clippy::too_many_arguments)]
    fn exact(
        &self,
        tj1: i32,
        tm1: i32,
        tj2: i32,
        tm2: i32,
        tk: i32,
        tmk: i32,
        (a, b, c, d, e): (i32, i32, i32, i32, i32),
        (lo, hi): (i32, i32),
    ) -> f64 {
        let mut sum = BigRational::zero();
        for k in lo..=hi {
            let den = self.bf(k) * self.bf(a - k) * self.bf(b - k) * self.bf(c - k) * self.bf(d + k) * self.bf(e + k);
            let term = BigRational::new(BigInt::one(), den);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        if sum.is_zero() {
            return 0.0;
        }
        let num = BigInt::from(tk + 1)
            * self.bf((tk + tj1 - tj2) / 2)
            * self.bf((tk - tj1 + tj2) / 2)
            * self.bf(a)
            * self.bf((tk + tmk) / 2)
            * self.bf((tk - tmk) / 2)
            * self.bf(b)
            * self.bf((tj1 + tm1) / 2)
            * self.bf((tj2 - tm2) / 2)
            * self.bf(c);
        let pre = BigRational::new(num, self.bf((tj1 + tj2 + tk) / 2 + 1).clone());
        let square = pre * &sum * &sum;
        let mag = square.to_f64().unwrap_or(f64::NAN).sqrt();
        if sum.is_negative() {
            -mag
        } else {
            mag
        }
    }
}

/// One-off coefficient; see [`Clebsch`] for repeated use.
pub fn clebsch_gordan(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tk: i32, tmk: i32) -> f64 {
    let needed = ((tj1 + tj2 + tk).max(0) / 2 + 1) as usize;
    Clebsch::new(needed).coeff(tj1, tm1, tj2, tm2, tk, tmk)
}
