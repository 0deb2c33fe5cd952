use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// Numeric constant: exact rational, or a float once a decimal literal or an
/// overflow is involved.
#[derive(Clone, Copy, Debug)]
pub enum Num {
    Rat(Rational),
    Float(f64),
}

impl Num {
    pub const ZERO: Num = Num::Rat(Ratio::new_raw(0, 1));
    pub const ONE: Num = Num::Rat(Ratio::new_raw(1, 1));

    pub fn int(v: i128) -> Num {
        Num::Rat(Rational::from_integer(v))
    }

    pub fn ratio(n: i128, d: i128) -> Num {
        if d == 0 {
            return Num::Float(n as f64 / 0.0);
        }
        Num::Rat(Rational::new(n, d))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_zero(),
            Num::Float(f) => *f == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_one(),
            Num::Float(f) => *f == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_negative(),
            Num::Float(f) => *f < 0.0,
        }
    }

    pub fn is_float(&self) -> bool {
        matches!(self, Num::Float(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Rat(r) => {
                r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
            }
            Num::Float(f) => *f,
        }
    }

    pub fn as_integer(&self) -> Option<i128> {
        match self {
            Num::Rat(r) if r.is_integer() => Some(*r.numer()),
            _ => None,
        }
    }

    pub fn add(self, other: Num) -> Num {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => match a.checked_add(&b) {
                Some(r) => Num::Rat(r),
                None => Num::Float(self.to_f64() + other.to_f64()),
            },
            _ => Num::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(self, other: Num) -> Num {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => match a.checked_mul(&b) {
                Some(r) => Num::Rat(r),
                None => Num::Float(self.to_f64() * other.to_f64()),
            },
            _ => Num::Float(self.to_f64() * other.to_f64()),
        }
    }

    pub fn neg(self) -> Num {
        match self {
            Num::Rat(r) => Num::Rat(-r),
            Num::Float(f) => Num::Float(-f),
        }
    }

    pub fn abs(self) -> Num {
        if self.is_negative() {
            self.neg()
        } else {
            self
        }
    }

    pub fn recip(self) -> Num {
        match self {
            Num::Rat(r) if !r.is_zero() => Num::Rat(r.recip()),
            _ => Num::Float(1.0 / self.to_f64()),
        }
    }

    pub fn powi(self, k: i64) -> Num {
        if k == 0 {
            return Num::ONE;
        }
        let base = if k < 0 { self.recip() } else { self };
        let mut e = k.unsigned_abs();
        match base {
            Num::Rat(r) => {
                let mut acc = Rational::one();
                let mut b = r;
                let mut ok = true;
                while e > 0 {
                    if e & 1 == 1 {
                        match acc.checked_mul(&b) {
                            Some(v) => acc = v,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    e >>= 1;
                    if e > 0 {
                        match b.checked_mul(&b) {
                            Some(v) => b = v,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                if ok {
                    Num::Rat(acc)
                } else {
                    Num::Float(r.to_f64().unwrap_or(f64::NAN).powi(k.unsigned_abs() as i32))
                }
            }
            Num::Float(f) => Num::Float(f.powi(e as i32)),
        }
    }

    /// Exact square root when both numerator and denominator are perfect squares.
    pub fn exact_sqrt(self) -> Option<Num> {
        match self {
            Num::Rat(r) if !r.is_negative() => {
                let n = isqrt(*r.numer())?;
                let d = isqrt(*r.denom())?;
                Some(Num::Rat(Rational::new(n, d)))
            }
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Num::Rat(_) => 0,
            Num::Float(_) => 1,
        }
    }
}

fn isqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    (r * r == v).then_some(r)
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => a.cmp(b),
            (Num::Float(a), Num::Float(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Num {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Num::Rat(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Num::Float(f) => {
                1u8.hash(state);
                f.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Rat(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Num::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Float(v) => write!(f, "{v:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_promotes_to_float() {
        let big = Num::int(i128::MAX / 2);
        assert!(big.mul(Num::int(4)).is_float());
        assert_eq!(Num::int(3).mul(Num::ratio(1, 3)), Num::ONE);
    }

    #[test]
    fn powers_and_roots() {
        assert_eq!(Num::ratio(2, 3).powi(-2), Num::ratio(9, 4));
        assert_eq!(Num::ratio(9, 4).exact_sqrt(), Some(Num::ratio(3, 2)));
        assert_eq!(Num::int(2).exact_sqrt(), None);
    }

    #[test]
    fn display() {
        assert_eq!(Num::ratio(-3, 4).to_string(), "-3/4");
        assert_eq!(Num::Float(0.5).to_string(), "0.5");
        assert_eq!(Num::Float(1.0).to_string(), "1.0");
    }
}
