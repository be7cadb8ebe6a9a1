use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{exact_nth_root, format_significant, sign_of_surd, signum, sqrt_floor, to_f64, Rational};

/// Decimal places used when a surd is approximated for display.
const APPROX_PLACES: usize = 60;

/// Exact value `a + b * sqrt(d)` with rational `a`, `b` and `d >= 0`.
///
/// `d` is zero whenever the value is rational. Sums and products are closed
/// over a shared radicand; comparisons across radicands are exact too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSurd {
    a: Rational,
    b: Rational,
    d: Rational,
}

impl QuadraticSurd {
    pub fn new(a: Rational, b: Rational, d: Rational) -> Self {
        assert!(!d.is_negative(), "radicand must be non-negative");
        if b.is_zero() || d.is_zero() {
            return Self::rational(a);
        }
        if let Some(root) = exact_nth_root(&d, 2) {
            return Self::rational(a + b * root);
        }
        Self { a, b, d }
    }

    pub fn rational(a: Rational) -> Self {
        Self {
            a,
            b: Rational::zero(),
            d: Rational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn parts(&self) -> (&Rational, &Rational, &Rational) {
        (&self.a, &self.b, &self.d)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.d.is_zero().then_some(&self.a)
    }

    fn radicand_with(&self, other: &Self) -> Rational {
        match (self.d.is_zero(), other.d.is_zero()) {
            (true, _) => other.d.clone(),
            (_, true) => self.d.clone(),
            _ => {
                assert_eq!(self.d, other.d, "surds over different radicands");
                self.d.clone()
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.radicand_with(other);
        Self::new(&self.a + &other.a, &self.b + &other.b, d)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.radicand_with(other);
        Self::new(&self.a - &other.a, &self.b - &other.b, d)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.radicand_with(other);
        let a = &self.a * &other.a + &self.b * &other.b * &d;
        let b = &self.a * &other.b + &self.b * &other.a;
        Self::new(a, b, d)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self::new(&self.a * factor, &self.b * factor, self.d.clone())
    }

    pub fn add_rational(&self, value: &Rational) -> Self {
        Self::new(&self.a + value, self.b.clone(), self.d.clone())
    }

    pub fn signum(&self) -> i8 {
        sign_of_surd(&self.a, &self.b, &self.d)
    }

    /// Exact comparison, also across different radicands.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let sign = sign_of_two_surds(&(&self.a - &other.a), &self.b, &self.d, &-&other.b, &other.d);
        sign.cmp(&0)
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * to_f64(&self.d).sqrt()
    }

    /// Rational within `|b| * 10^-60` of the value.
    pub fn approximate(&self) -> Rational {
        if self.d.is_zero() {
            return self.a.clone();
        }
        &self.a + &self.b * sqrt_floor(&self.d, APPROX_PLACES)
    }
}

/// Sign of `a + b * sqrt(p) + c * sqrt(q)`.
fn sign_of_two_surds(a: &Rational, b: &Rational, p: &Rational, c: &Rational, q: &Rational) -> i8 {
    let sb = if p.is_zero() { 0 } else { signum(b) };
    let sc = if q.is_zero() { 0 } else { signum(c) };
    if sb == 0 {
        return sign_of_surd(a, c, q);
    }
    if sc == 0 {
        return sign_of_surd(a, b, p);
    }
    // Sign of the irrational part b sqrt(p) + c sqrt(q).
    let bp = b * b * p;
    let cq = c * c * q;
    let s = if sb == sc {
        sb
    } else {
        match bp.cmp(&cq) {
            Ordering::Greater => sb,
            Ordering::Less => sc,
            Ordering::Equal => 0,
        }
    };
    let sa = signum(a);
    if sa == 0 || s == 0 || sa == s {
        return if sa == 0 { s } else { sa };
    }
    // Opposite signs: compare a^2 with (b sqrt(p) + c sqrt(q))^2.
    let two = Rational::one() + Rational::one();
    let t = sign_of_surd(&(a * a - &bp - &cq), &(-(two * b * c)), &(p * q));
    match t {
        1 => sa,
        -1 => s,
        _ => 0,
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_significant(&self.approximate(), 18))
    }
}
