//! Hirzebruch-Jung continued fractions.
//!
//! A word `[b1, ..., br]` stands for `b1 - 1/(b2 - 1/(... - 1/br))`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfError {
    #[error("slope {alpha}/{beta} must satisfy 0 < beta < alpha")]
    OutOfRange { alpha: i64, beta: i64 },
    #[error("slope {alpha}/{beta} is not in lowest terms")]
    NotCoprime { alpha: i64, beta: i64 },
    #[error("zero denominator while evaluating {0}")]
    ZeroDenominator(CfWord),
    #[error("cannot evaluate an empty word")]
    Empty,
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A reduced fraction. The denominator is kept positive; the numerator may
/// have any sign because non-HJ words can evaluate to anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    /// Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Rational { num: s * num / g, den: s * den / g }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A continued fraction word. `hj` is true when every entry is at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CfWord {
    pub entries: Vec<i64>,
    pub hj: bool,
}

impl CfWord {
    pub fn new(entries: Vec<i64>) -> Self {
        let hj = !entries.is_empty() && entries.iter().all(|&x| x >= 2);
        CfWord { entries, hj }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn reversed(&self) -> CfWord {
        CfWord::new(self.entries.iter().rev().copied().collect())
    }
}

impl fmt::Display for CfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

fn check_slope(alpha: i64, beta: i64) -> Result<(), CfError> {
    if beta <= 0 || beta >= alpha {
        return Err(CfError::OutOfRange { alpha, beta });
    }
    if gcd(alpha, beta) != 1 {
        return Err(CfError::NotCoprime { alpha, beta });
    }
    Ok(())
}

/// HJ expansion of `alpha/beta` by ceiling division.
pub fn hj_expand(alpha: i64, beta: i64) -> Result<CfWord, CfError> {
    check_slope(alpha, beta)?;
    let (mut a, mut b) = (alpha, beta);
    let mut w = Vec::new();
    while b > 0 {
        let c = (a + b - 1) / b;
        w.push(c);
        (a, b) = (b, c * b - a);
    }
    Ok(CfWord::new(w))
}

/// Riemenschneider dual: the expansion of `alpha/(alpha-beta)`.
pub fn dual_expand(alpha: i64, beta: i64) -> Result<CfWord, CfError> {
    check_slope(alpha, beta)?;
    hj_expand(alpha, alpha - beta)
}

pub fn eval_cf(word: &CfWord) -> Result<Rational, CfError> {
    let (&last, rest) = word.entries.split_last().ok_or(CfError::Empty)?;
    // value = num/den, folded from the right
    let (mut num, mut den) = (last, 1i64);
    for &x in rest.iter().rev() {
        if num == 0 {
            return Err(CfError::ZeroDenominator(word.clone()));
        }
        (num, den) = (x * num - den, num);
    }
    Ok(Rational::new(num, den))
}
