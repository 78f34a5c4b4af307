//! Exact rational volumes.
//!
//! `vol(Λ) = ∫_𝒮 ∏ᵢ(1 − pᵢ)^{n−2} (1 − Σ pᵢ) dp`. Expanding the product over
//! subsets `S ⊆ [n]` gives one term per composition `k` of `n − 2` into
//! `2ⁿ` nonnegative parts, each integrated with the simplex monomial rule
//! `∫_𝒮 p^α (1 − Σp)^{α₀} dp = ∏ αᵢ! / (n + Σ αᵢ)!`. The sum alternates in
//! sign over huge factorial ratios, so everything here is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Largest `n` accepted by the composition enumeration unless overridden.
pub const DEFAULT_N_MAX: usize = 6;

/// Reduced fraction of arbitrary-precision integers, written `num/den`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numerator: BigInt, denominator: BigInt) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Self(BigRational::new(numerator, denominator)))
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(value.into()))
    }

    pub fn ratio(numerator: i64, denominator: i64) -> Self {
        assert!(denominator != 0, "zero denominator");
        Self(BigRational::new(numerator.into(), denominator.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    /// Always positive.
    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Nearest `f64`, computed without overflowing intermediate conversions.
    pub fn to_f64(&self) -> f64 {
        if let Some(v) = self.0.to_f64() {
            if v.is_finite() {
                return v;
            }
        }
        let num = self.numerator();
        let den = self.denominator();
        let shift = num.bits() as i64 - den.bits() as i64;
        // scale so that the quotient carries ~64 significant bits
        let scaled = if shift > 64 {
            BigRational::new(num.clone(), den << ((shift - 64) as usize))
        } else {
            BigRational::new(num << ((64 - shift) as usize), den.clone())
        };
        scaled.to_integer().to_f64().unwrap_or(f64::NAN) * 2f64.powi((shift - 64) as i32)
    }

    pub fn recip(&self) -> Self {
        Self(self.0.recip())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

impl FromStr for ExactRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s.trim(), "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        Self::new(num, den)
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl std::iter::Sum for ExactRational {
    fn sum<I: Iterator<Item = ExactRational>>(iter: I) -> Self {
        iter.fold(ExactRational::zero(), |a, b| a + b)
    }
}

fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, v| acc * v)
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn check_n(n: usize, n_max: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if n > n_max {
        return Err(Error::TooLarge { n, max: n_max });
    }
    Ok(())
}

/// One `k ∈ 𝒦`: nonnegative counts `k_S` over subsets `S ⊆ [n]` (bitmasks)
/// summing to `n − 2`. Only nonzero counts are stored, ordered by mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionTerm {
    n: usize,
    parts: Vec<(u32, u32)>,
    multinomial: u128,
}

impl CompositionTerm {
    fn from_sorted_masks(n: usize, masks: &[u32], factorials: &[u128]) -> Self {
        let mut parts: Vec<(u32, u32)> = Vec::with_capacity(masks.len());
        for &m in masks {
            match parts.last_mut() {
                Some((last, count)) if *last == m => *count += 1,
                _ => parts.push((m, 1)),
            }
        }
        let denom: u128 = parts.iter().map(|&(_, c)| factorials[c as usize]).product();
        let multinomial = factorials[masks.len()] / denom;
        Self {
            n,
            parts,
            multinomial,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `k_S` for the subset with bitmask `subset`.
    pub fn count(&self, subset: u32) -> u32 {
        self.parts
            .iter()
            .find(|&&(m, _)| m == subset)
            .map_or(0, |&(_, c)| c)
    }

    /// Nonzero `(subset mask, k_S)` pairs.
    pub fn parts(&self) -> &[(u32, u32)] {
        &self.parts
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().map(|&(_, c)| c).sum()
    }

    /// Multinomial coefficient `(n−2 choose k)`.
    pub fn multinomial(&self) -> u128 {
        self.multinomial
    }

    /// `αᵢ(k) = Σ_{S ∋ i} k_S`.
    pub fn alpha(&self, i: usize) -> u32 {
        self.parts
            .iter()
            .filter(|&&(m, _)| m & (1 << i) != 0)
            .map(|&(_, c)| c)
            .sum()
    }

    /// `Σ_S |S| k_S`, which equals `Σᵢ αᵢ(k)` and fixes the term's sign.
    pub fn degree(&self) -> u32 {
        self.parts.iter().map(|&(m, c)| m.count_ones() * c).sum()
    }

    /// Signed integer numerator `±(n−2 choose k) ∏ αᵢ!` over the factorial
    /// denominator `(n + 1 + degree)!`.
    fn signed_numerator(&self) -> BigInt {
        let mut num = BigUint::from(self.multinomial);
        for i in 0..self.n {
            num *= factorial(self.alpha(i) as u64);
        }
        let num = BigInt::from(num);
        if self.degree() % 2 == 1 {
            -num
        } else {
            num
        }
    }

    /// The term's contribution to `vol(Λ)`.
    pub fn value(&self) -> ExactRational {
        let den = factorial((self.n as u64) + 1 + self.degree() as u64);
        ExactRational(BigRational::new(self.signed_numerator(), den.into()))
    }
}

/// Non-decreasing mask sequences of fixed length with entries in `lo..hi`;
/// each one is a multiset of subsets, i.e. one composition.
struct MaskMultisets {
    seq: Vec<u32>,
    hi: u32,
    done: bool,
}

impl MaskMultisets {
    fn new(len: usize, lo: u32, hi: u32) -> Self {
        Self {
            seq: vec![lo; len],
            hi,
            done: lo >= hi && len > 0,
        }
    }
}

impl Iterator for MaskMultisets {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.seq.clone();
        match self.seq.iter().rposition(|&m| m + 1 < self.hi) {
            Some(j) => {
                let v = self.seq[j] + 1;
                self.seq[j..].iter_mut().for_each(|m| *m = v);
            }
            None => self.done = true,
        }
        Some(out)
    }
}

fn factorial_table(len: usize) -> Vec<u128> {
    let mut t = vec![1u128; len + 1];
    for i in 1..=len {
        t[i] = t[i - 1] * i as u128;
    }
    t
}

/// Every `k ∈ 𝒦` for `n`, each exactly once, with the default limit.
pub fn enumerate_compositions(n: usize) -> Result<impl Iterator<Item = CompositionTerm>> {
    enumerate_compositions_with_limit(n, DEFAULT_N_MAX)
}

pub fn enumerate_compositions_with_limit(
    n: usize,
    n_max: usize,
) -> Result<impl Iterator<Item = CompositionTerm>> {
    check_n(n, n_max)?;
    check_term_capacity(n)?;
    let factorials = factorial_table(n - 2);
    Ok(MaskMultisets::new(n - 2, 0, 1u32 << n)
        .map(move |masks| CompositionTerm::from_sorted_masks(n, &masks, &factorials)))
}

fn check_term_capacity(n: usize) -> Result<()> {
    // masks are u32 and multinomials use a u128 factorial table (34! fits)
    if n > 31 || n - 2 > 34 {
        return Err(Error::TooLarge { n, max: 31 });
    }
    Ok(())
}

/// `|𝒦|` by the sum over the number `j` of nonzero parts:
/// `Σ_{j=1}^{n−2} C(2ⁿ, j) C(j + (n−2−j) − 1, n−2−j)`, and `1` for `n = 2`.
pub fn composition_count_formula(n: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if n == 2 {
        return Ok(BigUint::one());
    }
    let subsets = 1u64 << n;
    let r = (n - 2) as u64;
    Ok((1..=r)
        .map(|j| binomial(subsets, j) * binomial(j + (r - j) - 1, r - j))
        .sum())
}

/// `|𝒦|` by stars and bars: `C(2ⁿ + n − 3, n − 2)`.
pub fn composition_count_stars_and_bars(n: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let subsets = 1u64 << n;
    let r = (n - 2) as u64;
    Ok(binomial(subsets + r - 1, r))
}

/// `∫_𝒮 p^α (1 − Σp)^{α₀} dp = ∏_{i=0}^n αᵢ! / (n + Σ_{i=0}^n αᵢ)!` with
/// `n = alpha.len()`.
pub fn simplex_monomial_integral(alpha: &[u32], alpha0: u32) -> ExactRational {
    let n = alpha.len() as u64;
    let degree: u64 = alpha.iter().map(|&a| a as u64).sum::<u64>() + alpha0 as u64;
    let num = alpha
        .iter()
        .fold(factorial(alpha0 as u64), |acc, &a| acc * factorial(a as u64));
    ExactRational(BigRational::new(num.into(), factorial(n + degree).into()))
}

/// `vol(Λ)` exactly, for `2 ≤ n ≤` [`DEFAULT_N_MAX`].
pub fn volume_lambda_exact(n: usize) -> Result<ExactRational> {
    volume_lambda_exact_with_limit(n, DEFAULT_N_MAX)
}

/// `vol(Λ)` exactly with a caller-chosen enumeration limit.
///
/// Terms are grouped by degree so that each group is an integer sum over a
/// shared factorial denominator; the enumeration is split by its first
/// subset across worker threads and merged in order.
pub fn volume_lambda_exact_with_limit(n: usize, n_max: usize) -> Result<ExactRational> {
    check_n(n, n_max)?;
    check_term_capacity(n)?;
    let r = n - 2;
    let hi = 1u32 << n;
    let factorials = factorial_table(r);

    let accumulate = |masks: Vec<u32>, acc: &mut BTreeMap<u32, BigInt>| {
        let term = CompositionTerm::from_sorted_masks(n, &masks, &factorials);
        *acc.entry(term.degree()).or_insert_with(BigInt::zero) += term.signed_numerator();
    };

    let by_degree: BTreeMap<u32, BigInt> = if r == 0 {
        let mut acc = BTreeMap::new();
        accumulate(Vec::new(), &mut acc);
        acc
    } else {
        let partials: Vec<BTreeMap<u32, BigInt>> = (0..hi)
            .into_par_iter()
            .map(|first| {
                let mut acc = BTreeMap::new();
                for mut rest in MaskMultisets::new(r - 1, first, hi) {
                    rest.insert(0, first);
                    accumulate(rest, &mut acc);
                }
                acc
            })
            .collect();
        let mut merged = BTreeMap::new();
        for part in partials {
            for (d, v) in part {
                *merged.entry(d).or_insert_with(BigInt::zero) += v;
            }
        }
        merged
    };

    let mut total = BigRational::zero();
    for (degree, numerator) in by_degree {
        let den = factorial(n as u64 + 1 + degree as u64);
        total += BigRational::new(numerator, den.into());
    }
    Ok(ExactRational(total))
}

/// `vol(Λ_srs) = 2ⁿ / (2n)!`.
pub fn volume_srs_exact(n: usize) -> Result<ExactRational> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let num = BigUint::one() << n;
    Ok(ExactRational(BigRational::new(
        num.into(),
        factorial(2 * n as u64).into(),
    )))
}

/// `Σ_{i=0}^{2k−2} (−1)^i / (i+2) · C(2k−2, i)` for `k ≥ 1`.
pub fn srs_inner_sum(k: usize) -> ExactRational {
    assert!(k >= 1, "k starts at 1");
    let m = 2 * k as u64 - 2;
    let mut sum = BigRational::zero();
    for i in 0..=m {
        let term = BigRational::new(BigInt::from(binomial(m, i)), BigInt::from(i + 2));
        if i.is_odd() {
            sum -= term;
        } else {
            sum += term;
        }
    }
    ExactRational(sum)
}

/// `2ⁿ ∏_{k=1}^n srs_inner_sum(k)`, the product form that precedes the
/// closed form `2ⁿ / (2n)!`.
pub fn volume_srs_product_oracle(n: usize) -> Result<ExactRational> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut acc = ExactRational::from_integer(BigInt::one() << n);
    for k in 1..=n {
        acc = acc * srs_inner_sum(k);
    }
    Ok(acc)
}

/// `1 / n!`, the volume of the standard simplex.
pub fn simplex_volume(n: usize) -> ExactRational {
    ExactRational(BigRational::new(BigInt::one(), factorial(n as u64).into()))
}
