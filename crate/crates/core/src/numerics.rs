//! Exact rational scalars, finitely supported vectors and exact norm predicates.
//!
//! Every decision that can flip on the boundary `‖x−y‖ = k` goes through
//! [`distance_cmp`], which compares p-th powers in rational arithmetic. Floating
//! point only appears in [`norm_approx`], which exists for reporting.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number, always in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(num, den)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rational(num::pow(self.0.clone(), exp as usize))
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Largest integer not exceeding `self`.
    pub fn floor(&self) -> Self {
        Rational(self.0.floor())
    }

    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// `self − ⌊self⌋`, in `[0, 1)`.
    pub fn fract_floor(&self) -> Self {
        Rational(&self.0 - self.0.floor())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl<'a, 'b> $tr<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'b> $tr<&'b Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl $tr for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Always `num/den`, even for integers, so the text form round-trips bit-exactly.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `a/b` or a bare integer `a`. Decimal notation is rejected.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(['.', 'e', 'E']) {
            return Err(Error::Parse(format!(
                "decimal input {s:?} rejected, use num/den"
            )));
        }
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("bad rational {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::from_bigints(parse_int(n)?, parse_int(d)?),
            None => Ok(Rational::from(parse_int(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An eventually-zero sequence with exact rational coordinates.
///
/// Zero entries are never stored, so the key set is the support.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vector {
    entries: BTreeMap<usize, Rational>,
}

impl Vector {
    pub fn zero() -> Self {
        Vector::default()
    }

    /// The basis vector `e_index`.
    pub fn basis(index: usize) -> Self {
        let mut v = Vector::zero();
        v.set(index, Rational::one());
        v
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, Rational)>>(pairs: I) -> Self {
        let mut v = Vector::zero();
        for (i, x) in pairs {
            let cur = v.get(i);
            v.set(i, cur + x);
        }
        v
    }

    /// Dense coordinates placed at `start, start+1, …`.
    pub fn from_dense(start: usize, values: &[Rational]) -> Self {
        Vector::from_pairs(values.iter().enumerate().map(|(k, x)| (start + k, x.clone())))
    }

    pub fn get(&self, index: usize) -> Rational {
        self.entries.get(&index).cloned().unwrap_or_default()
    }

    pub fn get_ref(&self, index: usize) -> Option<&Rational> {
        self.entries.get(&index)
    }

    pub fn set(&mut self, index: usize, value: Rational) {
        if value.is_zero() {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.entries.iter().map(|(i, x)| (*i, x))
    }

    pub fn scale(&self, c: &Rational) -> Vector {
        if c.is_zero() {
            return Vector::zero();
        }
        Vector {
            entries: self.entries.iter().map(|(i, x)| (*i, x * c)).collect(),
        }
    }

    /// Keep only the coordinates for which `keep` holds.
    pub fn restrict(&self, mut keep: impl FnMut(usize) -> bool) -> Vector {
        Vector {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| keep(**i))
                .map(|(i, x)| (*i, x.clone()))
                .collect(),
        }
    }

    /// Move coordinate `i` to `relabel(i)`. `relabel` must be injective on the support.
    pub fn relabel(&self, mut relabel: impl FnMut(usize) -> usize) -> Vector {
        Vector {
            entries: self
                .entries
                .iter()
                .map(|(i, x)| (relabel(*i), x.clone()))
                .collect(),
        }
    }

    pub fn to_f64_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, x) in self.iter() {
            if i < len {
                out[i] = x.to_f64();
            }
        }
        out
    }

    fn combine(&self, other: &Vector, f: impl Fn(&Rational, &Rational) -> Rational) -> Vector {
        let zero = Rational::zero();
        let mut out = Vector::zero();
        let keys: std::collections::BTreeSet<usize> =
            self.entries.keys().chain(other.entries.keys()).copied().collect();
        for k in keys {
            let a = self.entries.get(&k).unwrap_or(&zero);
            let b = other.entries.get(&k).unwrap_or(&zero);
            out.set(k, f(a, b));
        }
        out
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector {
            entries: self.entries.iter().map(|(i, x)| (*i, -x)).collect(),
        }
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(i, x)| (i, x.to_string())))
            .finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, (i, x)) in self.entries.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {x}")?;
        }
        write!(f, ")")
    }
}

/// Canonical form: JSON object `{"index": "num/den"}`, indices ascending.
impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (i, x) in &self.entries {
            map.serialize_entry(&i.to_string(), x)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, Rational>::deserialize(deserializer)?;
        let mut v = Vector::zero();
        for (k, x) in raw {
            let i: usize = k
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("bad index {k:?}")))?;
            if x.is_zero() {
                return Err(serde::de::Error::custom(format!("zero entry at {i}")));
            }
            v.set(i, x);
        }
        Ok(v)
    }
}

/// Which norm governs distances.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Lp { p: u32 },
    LInfinity,
    DavisGauge { truncation: usize, tolerance: Rational },
}

impl NormSpec {
    pub fn lp(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        Ok(NormSpec::Lp { p })
    }

    pub fn l1() -> Self {
        NormSpec::Lp { p: 1 }
    }

    pub fn l2() -> Self {
        NormSpec::Lp { p: 2 }
    }

    pub fn davis(truncation: usize, tolerance: Rational) -> Result<Self> {
        if truncation == 0 || !tolerance.is_positive() {
            return Err(Error::InvalidArgument(
                "davis gauge needs truncation >= 1 and tolerance > 0".into(),
            ));
        }
        Ok(NormSpec::DavisGauge { truncation, tolerance })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, NormSpec::DavisGauge { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Lp { p: 0 } => Err(Error::InvalidArgument("p must be at least 1".into())),
            NormSpec::DavisGauge { truncation, tolerance }
                if *truncation == 0 || !tolerance.is_positive() =>
            {
                Err(Error::InvalidArgument("bad davis gauge parameters".into()))
            }
            _ => Ok(()),
        }
    }

    fn require_exact(&self) -> Result<()> {
        self.validate()?;
        if self.is_exact() {
            Ok(())
        } else {
            Err(Error::InexactNorm(self.to_string()))
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Lp { p } => write!(f, "l{p}"),
            NormSpec::LInfinity => write!(f, "linf"),
            NormSpec::DavisGauge { truncation, tolerance } => {
                write!(f, "davis({truncation},{tolerance})")
            }
        }
    }
}

/// Parses `l1`, `l2`, …, `linf`, or `davis:<n>:<tol>`.
impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "linf" || s == "l_inf" || s == "inf" {
            return Ok(NormSpec::LInfinity);
        }
        if let Some(rest) = s.strip_prefix("davis:") {
            let (n, tol) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad davis norm {s:?}")))?;
            let n = n
                .parse()
                .map_err(|_| Error::Parse(format!("bad truncation {n:?}")))?;
            return NormSpec::davis(n, tol.parse()?);
        }
        if let Some(p) = s.strip_prefix('l') {
            let p = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad norm {s:?}")))?;
            return NormSpec::lp(p);
        }
        Err(Error::Parse(format!("unknown norm {s:?}")))
    }
}

/// The exact monotone surrogate of `‖x−y‖`: `Σ|xᵢ−yᵢ|^p` for `ℓ_p`, `max|xᵢ−yᵢ|` for `ℓ_∞`.
///
/// Two pairs have equal distance iff their keys are equal.
pub fn distance_key(x: &Vector, y: &Vector, norm: &NormSpec) -> Result<Rational> {
    norm.require_exact()?;
    Ok(norm_key(&(x - y), norm))
}

fn norm_key(d: &Vector, norm: &NormSpec) -> Rational {
    match norm {
        NormSpec::Lp { p: 1 } => d.iter().map(|(_, x)| x.abs()).sum(),
        NormSpec::Lp { p } => d.iter().map(|(_, x)| x.abs().pow(*p)).sum(),
        NormSpec::LInfinity => d
            .iter()
            .map(|(_, x)| x.abs())
            .max()
            .unwrap_or_default(),
        NormSpec::DavisGauge { .. } => unreachable!("checked by require_exact"),
    }
}

fn radius_key(r: &Rational, norm: &NormSpec) -> Rational {
    match norm {
        NormSpec::Lp { p } => r.pow(*p),
        _ => r.clone(),
    }
}

/// Exact three-way comparison of `‖x−y‖` against `r ≥ 0`.
pub fn distance_cmp(x: &Vector, y: &Vector, r: &Rational, norm: &NormSpec) -> Result<Ordering> {
    norm.require_exact()?;
    if r.is_negative() {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    Ok(norm_key(&(x - y), norm).cmp(&radius_key(r, norm)))
}

/// `‖x−y‖ < r`, decided exactly.
pub fn distance_lt(x: &Vector, y: &Vector, r: &Rational, norm: &NormSpec) -> Result<bool> {
    Ok(distance_cmp(x, y, r, norm)? == Ordering::Less)
}

/// The unique `k` with `k ≤ ‖x−y‖ < k+1`.
pub fn floor_distance(x: &Vector, y: &Vector, norm: &NormSpec) -> Result<u64> {
    norm.require_exact()?;
    let key = norm_key(&(x - y), norm);
    floor_of_key(&key, norm)
}

pub(crate) fn floor_of_key(key: &Rational, norm: &NormSpec) -> Result<u64> {
    match norm {
        NormSpec::Lp { p } if *p > 1 => {
            // k^p ≤ key ⟺ k^p · den ≤ num
            let (num, den) = (key.numer(), key.denom());
            let mut k: u64 = 0;
            loop {
                let next = BigInt::from(k + 1);
                if num::pow(next, *p as usize) * den <= *num {
                    k += 1;
                } else {
                    return Ok(k);
                }
            }
        }
        _ => key
            .floor_int()
            .to_u64()
            .ok_or_else(|| Error::InvalidArgument("distance too large".into())),
    }
}

/// Decimal approximation of `‖x‖`, for reporting only.
pub fn norm_approx(x: &Vector, norm: &NormSpec, tol: &Rational) -> Result<f64> {
    if !tol.is_positive() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    norm.validate()?;
    if x.is_zero() {
        return Ok(0.0);
    }
    match norm {
        NormSpec::Lp { p } => Ok(lp_norm_f64(x.iter().map(|(_, v)| v.to_f64()), *p)),
        NormSpec::LInfinity => Ok(x.iter().map(|(_, v)| v.to_f64().abs()).fold(0.0, f64::max)),
        NormSpec::DavisGauge { truncation, .. } => {
            let model = crate::davis::DavisModel::new(*truncation)?;
            let tol = tol.clone().min(match norm {
                NormSpec::DavisGauge { tolerance, .. } => tolerance.clone(),
                _ => unreachable!(),
            });
            Ok(crate::davis::gauge(x, &model, &tol)?.value)
        }
    }
}

/// `(Σ|xᵢ|^p)^{1/p}` in floating point, scaled to avoid overflow.
pub fn lp_norm_f64(values: impl IntoIterator<Item = f64>, p: u32) -> f64 {
    let values: Vec<f64> = values.into_iter().map(f64::abs).collect();
    let scale = values.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v / scale).powi(p as i32)).sum();
    scale * s.powf(1.0 / p as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn v(coords: &[(i64, i64)]) -> Vector {
        let vals: Vec<Rational> = coords.iter().map(|&(n, d)| r(n, d)).collect();
        Vector::from_dense(1, &vals)
    }

    #[test]
    fn rational_text_form() {
        assert_eq!(r(6, -4).to_string(), "-3/2");
        assert_eq!(Rational::integer(3).to_string(), "3/1");
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::integer(7));
        assert_eq!("-2/6".parse::<Rational>().unwrap(), r(-1, 3));
        assert!("0.5".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1e3".parse::<Rational>().is_err());
    }

    #[test]
    fn floor_and_fract() {
        assert_eq!(r(-1, 3).floor(), Rational::integer(-1));
        assert_eq!(r(-1, 3).fract_floor(), r(2, 3));
        assert_eq!(r(7, 2).floor_int(), BigInt::from(3));
    }

    #[test]
    fn vector_drops_zero_entries() {
        let mut x = v(&[(1, 1), (0, 1), (2, 3)]);
        assert_eq!(x.support().collect::<Vec<_>>(), vec![1, 3]);
        x.set(1, Rational::zero());
        assert_eq!(x.support_len(), 1);
        let y = &x - &x;
        assert!(y.is_zero());
    }

    #[test]
    fn distance_lt_examples() {
        let l2 = NormSpec::l2();
        let zero = Vector::zero();
        assert!(distance_lt(&v(&[(1, 1), (1, 1)]), &zero, &r(3, 2), &l2).unwrap());
        let x = v(&[(1, 2), (3, 1)]);
        assert!(distance_lt(&x, &x, &Rational::one(), &l2).unwrap());
        assert!(!distance_lt(&x, &x, &Rational::zero(), &NormSpec::LInfinity).unwrap());
        let w = v(&[(3, 2), (1, 3)]);
        assert!(!distance_lt(&w, &zero, &r(3, 2), &NormSpec::LInfinity).unwrap());
    }

    #[test]
    fn davis_is_rejected_by_exact_predicates() {
        let norm = NormSpec::davis(3, r(1, 1000)).unwrap();
        let x = Vector::basis(1);
        assert!(matches!(
            distance_lt(&x, &x, &Rational::one(), &norm),
            Err(Error::InexactNorm(_))
        ));
        assert!(floor_distance(&x, &x, &norm).is_err());
    }

    #[test]
    fn floor_distance_examples() {
        let zero = Vector::zero();
        assert_eq!(floor_distance(&v(&[(3, 1), (4, 1)]), &zero, &NormSpec::l2()).unwrap(), 5);
        assert_eq!(floor_distance(&v(&[(1, 1), (1, 1)]), &zero, &NormSpec::l2()).unwrap(), 1);
        assert_eq!(
            floor_distance(&v(&[(3, 2), (1, 3)]), &zero, &NormSpec::LInfinity).unwrap(),
            1
        );
        assert_eq!(
            floor_distance(&v(&[(3, 2), (1, 3)]), &zero, &NormSpec::l1()).unwrap(),
            1
        );
        assert_eq!(
            floor_distance(&v(&[(5, 3), (1, 3)]), &zero, &NormSpec::l1()).unwrap(),
            2
        );
    }

    #[test]
    fn negative_radius_rejected() {
        let x = Vector::zero();
        assert!(distance_lt(&x, &x, &r(-1, 2), &NormSpec::l2()).is_err());
    }

    #[test]
    fn norm_approx_examples() {
        let tol = r(1, 1_000_000_000);
        let x = v(&[(1, 1), (1, 1)]);
        let got = norm_approx(&x, &NormSpec::l2(), &tol).unwrap();
        assert!((got - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(norm_approx(&Vector::zero(), &NormSpec::l2(), &tol).unwrap(), 0.0);
        assert_eq!(
            norm_approx(&Vector::zero(), &NormSpec::LInfinity, &tol).unwrap(),
            0.0
        );
    }

    #[test]
    fn norm_approx_davis_extreme_point() {
        let tol = r(1, 1_000_000);
        let norm = NormSpec::davis(10, tol.clone()).unwrap();
        let x = Vector::from_pairs([(0, Rational::one()), (1, r(1, 2))]);
        let got = norm_approx(&x, &norm, &tol).unwrap();
        assert!((got - 1.0).abs() <= 1e-6, "got {got}");
    }

    #[test]
    fn vector_json_is_canonical() {
        let x = Vector::from_pairs([(10, r(1, 2)), (2, r(-3, 1))]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"2":"-3/1","10":"1/2"}"#);
        let back: Vector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn norm_spec_parsing() {
        assert_eq!("l3".parse::<NormSpec>().unwrap(), NormSpec::Lp { p: 3 });
        assert_eq!("linf".parse::<NormSpec>().unwrap(), NormSpec::LInfinity);
        assert!("l0".parse::<NormSpec>().is_err());
        assert!(matches!(
            "davis:4:1/1000".parse::<NormSpec>().unwrap(),
            NormSpec::DavisGauge { truncation: 4, .. }
        ));
    }
}
