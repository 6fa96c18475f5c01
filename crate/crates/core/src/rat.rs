//! Exact rational arithmetic.
//!
//! `Rat` is an arbitrary-precision rational kept in canonical form
//! (positive denominator, gcd 1). Values that fit a machine word pair stay in
//! a compact representation; anything larger spills into `BigRational`
//! transparently. All solver arithmetic goes through this type, so there is
//! no floating point anywhere in a solve path.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

#[derive(Clone, Debug)]
enum Repr {
    // invariant: den > 0, gcd(|num|, den) == 1
    Small { num: i64, den: i64 },
    // invariant: reduced, positive denominator, and does NOT fit Small
    Big(Box<BigRational>),
}

/// An exact rational number in canonical form.
#[derive(Clone, Debug)]
pub struct Rat(Repr);

fn reduce_i128(mut num: i128, mut den: i128) -> (i128, i128) {
    debug_assert!(den != 0);
    if den < 0 {
        num = -num;
        den = -den;
    }
    if num == 0 {
        return (0, 1);
    }
    let g = num.abs().gcd(&den);
    (num / g, den / g)
}

fn make(num: i128, den: i128) -> Rat {
    let (num, den) = reduce_i128(num, den);
    if let (Ok(n), Ok(d)) = (i64::try_from(num), i64::try_from(den)) {
        Rat(Repr::Small { num: n, den: d })
    } else {
        Rat(Repr::Big(Box::new(BigRational::new_raw(
            BigInt::from(num),
            BigInt::from(den),
        ))))
    }
}

fn demote(r: BigRational) -> Rat {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        Rat(Repr::Small { num: n, den: d })
    } else {
        Rat(Repr::Big(Box::new(r)))
    }
}

impl Rat {
    pub fn zero() -> Self {
        Rat(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Rat(Repr::Small { num: 1, den: 1 })
    }

    pub fn from_int(n: i64) -> Self {
        Rat(Repr::Small { num: n, den: 1 })
    }

    /// Builds `num/den` in canonical form. Errors on a zero denominator.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(make(num as i128, den as i128))
    }

    pub fn from_big(r: BigRational) -> Self {
        demote(r.reduced())
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => {
                BigRational::new_raw(BigInt::from(*num), BigInt::from(*den))
            }
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small { num: 0, .. })
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small { num: 1, den: 1 })
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { den, .. } => *den == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "division by zero");
        match &self.0 {
            Repr::Small { num, den } => make(*den as i128, *num as i128),
            Repr::Big(b) => demote(b.recip()),
        }
    }

    /// Exact value as `f64` only when the conversion is lossless enough for
    /// display purposes; never used in solve paths.
    pub fn to_f64_lossy(&self) -> f64 {
        match &self.0 {
            Repr::Small { num, den } => *num as f64 / *den as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    fn binop(
        &self,
        rhs: &Rat,
        small: impl Fn(i128, i128, i128, i128) -> (i128, i128),
        big: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                let (n, dd) = small(*a as i128, *b as i128, *c as i128, *d as i128);
                make(n, dd)
            }
            _ => demote(big(&self.to_big(), &rhs.to_big())),
        }
    }

    fn add_impl(&self, rhs: &Rat) -> Rat {
        self.binop(rhs, |a, b, c, d| (a * d + c * b, b * d), |x, y| x + y)
    }

    fn sub_impl(&self, rhs: &Rat) -> Rat {
        self.binop(rhs, |a, b, c, d| (a * d - c * b, b * d), |x, y| x - y)
    }

    fn mul_impl(&self, rhs: &Rat) -> Rat {
        self.binop(rhs, |a, b, c, d| (a * c, b * d), |x, y| x * y)
    }

    fn div_impl(&self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        self.binop(rhs, |a, b, c, d| (a * d, b * c), |x, y| x / y)
    }

    fn neg_impl(&self) -> Rat {
        match &self.0 {
            Repr::Small { num, den } => make(-(*num as i128), *den as i128),
            Repr::Big(b) => demote(-(**b).clone()),
        }
    }

    #[cfg(test)]
    pub(crate) fn is_compact(&self) -> bool {
        matches!(self.0, Repr::Small { .. })
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        // canonical representation makes structural comparison exact
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl std::hash::Hash for Rat {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // promote to the big form so equal values hash equally regardless of repr;
        // canonicality means Small never aliases Big, but keep this total anyway
        match &self.0 {
            Repr::Small { num, den } => {
                BigInt::from(*num).hash(state);
                BigInt::from(*den).hash(state);
            }
            Repr::Big(b) => {
                b.numer().hash(state);
                b.denom().hash(state);
            }
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $impl_fn:ident) => {
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                self.$impl_fn(&rhs)
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                self.$impl_fn(rhs)
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                self.$impl_fn(&rhs)
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                self.$impl_fn(rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Div, div, div_impl);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        self.neg_impl()
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        self.neg_impl()
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = self.add_impl(rhs);
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        *self = self.add_impl(&rhs);
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = self.sub_impl(rhs);
    }
}

impl SubAssign<Rat> for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        *self = self.sub_impl(&rhs);
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        *self = self.mul_impl(rhs);
    }
}

impl MulAssign<Rat> for Rat {
    fn mul_assign(&mut self, rhs: Rat) {
        *self = self.mul_impl(&rhs);
    }
}

impl DivAssign<&Rat> for Rat {
    fn div_assign(&mut self, rhs: &Rat) {
        *self = self.div_impl(rhs);
    }
}

impl DivAssign<Rat> for Rat {
    fn div_assign(&mut self, rhs: Rat) {
        *self = self.div_impl(&rhs);
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Self {
        Rat::from_int(n as i64)
    }
}

impl From<u32> for Rat {
    fn from(n: u32) -> Self {
        Rat::from_int(n as i64)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den: 1 } => write!(f, "{num}"),
            Repr::Small { num, den } => write!(f, "{num}/{den}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

/// Parses a decimal literal (`"30"`, `"-0.5"`) or a fraction (`"45/3"`) into
/// an exact value. Decimal text never passes through binary floating point:
/// `"0.1"` becomes exactly 1/10.
impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed rational literal {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let num: BigInt = n.parse().map_err(|_| bad())?;
            let den: BigInt = d.parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok(demote(BigRational::new(num, den)));
        }
        let (sign, digits) = match s.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, fr)) => (i, fr),
            None => (digits, ""),
        };
        if int_part.is_empty()
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || (digits.contains('.') && frac_part.is_empty())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let mut num: BigInt = int_part.parse().map_err(|_| bad())?;
        let mut den = BigInt::from(1);
        for c in frac_part.chars() {
            num = num * 10 + c.to_digit(10).unwrap();
            den *= 10;
        }
        Ok(demote(BigRational::new(num * sign, den)))
    }
}

/// Text form used everywhere in JSON I/O. Integer values serialize without a
/// denominator.
impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a fraction or decimal string like \"30\", \"1/3\" or \"0.5\", or an integer")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Rat, E> {
                s.parse().map_err(|e| E::custom(format!("{e}")))
            }

            fn visit_i64<E: de::Error>(self, n: i64) -> std::result::Result<Rat, E> {
                Ok(Rat::from_int(n))
            }

            fn visit_u64<E: de::Error>(self, n: u64) -> std::result::Result<Rat, E> {
                i64::try_from(n)
                    .map(Rat::from_int)
                    .map_err(|_| E::custom("integer literal too large"))
            }

            fn visit_f64<E: de::Error>(self, _: f64) -> std::result::Result<Rat, E> {
                Err(E::custom(
                    "floating-point literals are not accepted; quote the value as a string",
                ))
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Convenience used in tests and instance builders.
pub fn rat(s: &str) -> Rat {
    s.parse().expect("literal rational")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_integer_literal() {
        assert_eq!(rat("30"), Rat::from_int(30));
        assert_eq!(rat("+7"), Rat::from_int(7));
        assert_eq!(rat("-12"), Rat::from_int(-12));
    }

    #[test]
    fn parses_exact_decimal() {
        assert_eq!(rat("0.5"), Rat::new(1, 2).unwrap());
        assert_eq!(rat("0.1"), Rat::new(1, 10).unwrap());
        assert_eq!(rat("-2.25"), Rat::new(-9, 4).unwrap());
    }

    #[test]
    fn canonicalizes_fractions() {
        assert_eq!(rat("45/3"), Rat::from_int(15));
        assert_eq!(rat("4/-6"), Rat::new(-2, 3).unwrap());
        assert_eq!(rat("-4/-6"), Rat::new(2, 3).unwrap());
    }

    #[test]
    fn rejects_malformed_text() {
        for s in ["", "1.2.3", "1/0", "abc", "1.5/2", ".5", "1.", "--3", "1e3"] {
            assert!(s.parse::<Rat>().is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["0", "30", "-7/3", "1/2"] {
            assert_eq!(rat(s).to_string(), s);
        }
    }

    #[test]
    fn big_values_spill_and_demote() {
        let huge = rat("123456789123456789123456789");
        assert!(!huge.is_compact());
        let back = &huge - &huge + Rat::one();
        assert!(back.is_compact());
        assert_eq!(back, Rat::one());
    }

    #[test]
    fn overflow_promotes_exactly() {
        let a = Rat::new(i64::MAX, 3).unwrap();
        let b = Rat::new(i64::MAX - 2, 5).unwrap();
        let prod = &a * &b;
        assert_eq!(prod.to_big(), a.to_big() * b.to_big());
        assert!(!prod.is_compact());
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (any::<i64>(), 1i64..=1_000_000)
            .prop_map(|(n, d)| Rat::new(n, d).unwrap())
    }

    proptest! {
        #[test]
        fn field_laws(a in arb_rat(), b in arb_rat(), c in arb_rat()) {
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
        }

        #[test]
        fn matches_bigrational_reference(a in arb_rat(), b in arb_rat()) {
            prop_assert_eq!((&a + &b).to_big(), a.to_big() + b.to_big());
            prop_assert_eq!((&a - &b).to_big(), a.to_big() - b.to_big());
            prop_assert_eq!((&a * &b).to_big(), a.to_big() * b.to_big());
            if !b.is_zero() {
                prop_assert_eq!((&a / &b).to_big(), a.to_big() / b.to_big());
            }
            prop_assert_eq!(a.cmp(&b), a.to_big().cmp(&b.to_big()));
        }

        #[test]
        fn canonical_form_is_preserved(a in arb_rat(), b in arb_rat()) {
            for r in [&a + &b, &a - &b, &a * &b] {
                let big = r.to_big();
                prop_assert!(big.denom().is_positive());
                prop_assert_eq!(big.clone().reduced(), big);
            }
        }
    }
}
