//! 256-bit binary floating point reals for the bound formulas.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use serde::de::{self, Deserialize, Deserializer, Visitor};
use serde::{Serialize, Serializer};

pub const PRECISION: usize = 256;
/// Significant decimal digits in rendered values.
pub const DIGITS: usize = 40;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache allocates"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

#[derive(Clone)]
pub struct Real(BigFloat);

impl Real {
    pub fn from_u64(v: u64) -> Self {
        Real(BigFloat::from_u64(v, PRECISION))
    }

    pub fn from_i64(v: i64) -> Self {
        Real(BigFloat::from_i64(v, PRECISION))
    }

    pub fn zero() -> Self {
        Self::from_u64(0)
    }

    pub fn one() -> Self {
        Self::from_u64(1)
    }

    /// Parse a decimal literal such as `12`, `-3.5` or `1e-3`.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E')) {
            return None;
        }
        let v = with_cc(|cc| BigFloat::parse(t, Radix::Dec, PRECISION, RM, cc));
        (!v.is_nan() && !v.is_inf()).then_some(Real(v))
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        Self::parse(&n.to_string()).expect("integers parse")
    }

    /// Euler's number.
    pub fn e() -> Self {
        Self::one().exp()
    }

    pub fn add(&self, o: &Self) -> Self {
        Real(self.0.add(&o.0, PRECISION, RM))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Real(self.0.sub(&o.0, PRECISION, RM))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Real(self.0.mul(&o.0, PRECISION, RM))
    }

    pub fn div(&self, o: &Self) -> Self {
        Real(self.0.div(&o.0, PRECISION, RM))
    }

    pub fn ln(&self) -> Self {
        Real(with_cc(|cc| self.0.ln(PRECISION, RM, cc)))
    }

    pub fn exp(&self) -> Self {
        Real(with_cc(|cc| self.0.exp(PRECISION, RM, cc)))
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.sqrt(PRECISION, RM))
    }

    pub fn powi(&self, n: usize) -> Self {
        Real(self.0.powi(n, PRECISION, RM))
    }

    /// `self^e` for `self > 0`.
    pub fn pow(&self, e: &Self) -> Self {
        Real(with_cc(|cc| self.0.pow(&e.0, PRECISION, RM, cc)))
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn max(&self, o: &Self) -> Self {
        if self >= o {
            self.clone()
        } else {
            o.clone()
        }
    }

    /// Bitwise equality of sign, exponent and mantissa.
    pub fn bits_eq(&self, o: &Self) -> bool {
        self.0.as_raw_parts() == o.0.as_raw_parts()
    }

    fn decimal_parts(&self) -> (bool, Vec<u8>, i64) {
        let s = with_cc(|cc| self.0.format(Radix::Dec, RM, cc)).expect("finite value formats");
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.as_str()),
        };
        let (mant, exp) = body.split_once(['e', 'E']).unwrap_or((body, "0"));
        let exp: i64 = exp.trim_start_matches('+').parse().expect("exponent is an integer");
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
        let mut exp10 = exp + int_part.len() as i64 - 1;
        while digits.first() == Some(&0) && digits.len() > 1 {
            digits.remove(0);
            exp10 -= 1;
        }
        (neg, digits, exp10)
    }

    /// Scientific notation with `DIGITS` significant digits, e.g. `2.718...e0`.
    pub fn to_sci(&self) -> String {
        self.to_sci_digits(DIGITS)
    }

    pub fn to_sci_digits(&self, n: usize) -> String {
        if self.0.is_zero() {
            return "0".into();
        }
        let (neg, mut digits, mut exp10) = self.decimal_parts();
        digits.resize(digits.len().max(n + 1), 0);
        let round_up = digits[n] >= 5;
        digits.truncate(n);
        if round_up {
            let mut i = n;
            loop {
                if i == 0 {
                    digits.insert(0, 1);
                    digits.truncate(n);
                    exp10 += 1;
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
        let body: String = digits.iter().map(|d| (b'0' + d) as char).collect();
        format!("{}{}.{}e{}", if neg { "-" } else { "" }, &body[..1], &body[1..], exp10)
    }

    /// Smallest integer `>= self`, if it fits in a `u64`.
    pub fn ceil_u64(&self) -> Option<u64> {
        if !self.is_positive() {
            return Some(0);
        }
        let c = Real(self.0.ceil());
        let (_, digits, exp10) = c.decimal_parts();
        if exp10 >= 20 {
            return None;
        }
        let mut v: u64 = 0;
        for i in 0..=exp10 as usize {
            let d = *digits.get(i).unwrap_or(&0) as u64;
            v = v.checked_mul(10)?.checked_add(d)?;
        }
        Some(v)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_sci_digits(20).parse().unwrap_or(f64::NAN)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_sci())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci())
    }
}

impl PartialEq for Real {
    fn eq(&self, o: &Self) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.0.cmp(&o.0).map(|c| c.cmp(&0))
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_sci())
    }
}

/// Accepts a JSON number or a decimal string.
impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a real number or decimal string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real::from_u64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real::from_i64(v))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                self.visit_str(&v.to_string())
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                Real::parse(v).ok_or_else(|| E::custom(format!("'{v}' is not a finite decimal number")))
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

impl Add for &Real {
    type Output = Real;
    fn add(self, o: &Real) -> Real {
        Real::add(self, o)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, o: &Real) -> Real {
        Real::sub(self, o)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, o: &Real) -> Real {
        Real::mul(self, o)
    }
}
