//! Classes in `H_2(CP^2 # N) = Z<l, e_1, .., e_N>` and their intersection form.
//!
//! `HClass { l: a, e: c }` is `a*l - sum c_i e_i`, so a line through the
//! first blow-up point is `{ l: 1, e: [1, 0, ..] }` and the exceptional
//! sphere `e_1` itself is `{ l: 0, e: [-1, 0, ..] }`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HClass {
    pub l: i64,
    pub e: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("ambient mismatch: {0} vs {1} exceptional classes")]
    Ambient(usize, usize),
    #[error("cannot parse class {0:?}")]
    Parse(String),
}

impl HClass {
    pub fn line(n: usize) -> Self {
        HClass { l: 1, e: vec![0; n] }
    }

    /// The exceptional class `e_i` (0-based `i`).
    pub fn exceptional(i: usize, n: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = -1;
        HClass { l: 0, e }
    }

    pub fn ambient(&self) -> usize {
        self.e.len()
    }

    pub fn try_pair(&self, other: &HClass) -> Result<i64, HomError> {
        if self.e.len() != other.e.len() {
            return Err(HomError::Ambient(self.e.len(), other.e.len()));
        }
        Ok(self.pair(other))
    }

    /// Panics on mismatched ambient rank; see [`try_pair`](Self::try_pair).
    pub fn pair(&self, other: &HClass) -> i64 {
        assert_eq!(self.e.len(), other.e.len(), "ambient mismatch");
        self.l * other.l - self.e.iter().zip(&other.e).map(|(a, b)| a * b).sum::<i64>()
    }

    pub fn square(&self) -> i64 {
        self.pair(self)
    }

    /// `K_X . x` for `K_X = -3l + sum e_i`.
    pub fn canonical_pairing(&self) -> i64 {
        -3 * self.l + self.e.iter().sum::<i64>()
    }

    pub fn is_zero(&self) -> bool {
        self.l == 0 && self.e.iter().all(|&c| c == 0)
    }

    pub fn padded(&self, n: usize) -> HClass {
        let mut e = self.e.clone();
        e.resize(n, 0);
        HClass { l: self.l, e }
    }

    /// Parses the `l-e2-e3+e9` notation with 1-based indices.
    pub fn parse(s: &str, n: usize) -> Result<HClass, HomError> {
        let err = || HomError::Parse(s.to_string());
        let mut out = HClass { l: 0, e: vec![0; n] };
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() || t == "0" {
            return if t.is_empty() { Err(err()) } else { Ok(out) };
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in t.char_indices() {
            if (ch == '+' || ch == '-') && i > start {
                terms.push(&t[start..i]);
                start = i;
            }
        }
        terms.push(&t[start..]);
        for term in terms {
            let (sign, body) = match term.as_bytes()[0] {
                b'+' => (1, &term[1..]),
                b'-' => (-1, &term[1..]),
                _ => (1, term),
            };
            let split = body.find(|c: char| !c.is_ascii_digit()).ok_or_else(err)?;
            let coeff: i64 = if split == 0 { 1 } else { body[..split].parse().map_err(|_| err())? };
            let sym = &body[split..];
            if sym == "l" {
                out.l += sign * coeff;
            } else if let Some(idx) = sym.strip_prefix('e') {
                let i: usize = idx.parse().map_err(|_| err())?;
                if i == 0 || i > n {
                    return Err(err());
                }
                out.e[i - 1] -= sign * coeff;
            } else {
                return Err(err());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for HClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let mut term = |coeff: i64, sym: String| {
            if coeff == 0 {
                return;
            }
            if coeff < 0 {
                s.push('-');
            } else if !s.is_empty() {
                s.push('+');
            }
            if coeff.abs() != 1 {
                s.push_str(&coeff.abs().to_string());
            }
            s.push_str(&sym);
        };
        term(self.l, "l".into());
        for (i, &c) in self.e.iter().enumerate() {
            term(-c, format!("e{}", i + 1));
        }
        if s.is_empty() {
            s.push('0');
        }
        f.write_str(&s)
    }
}

impl FromStr for HClass {
    type Err = HomError;

    /// Infers the ambient rank from the largest index present.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = s
            .split(['+', '-'])
            .filter_map(|t| t.trim().split('e').nth(1).and_then(|i| i.parse::<usize>().ok()))
            .max()
            .unwrap_or(0);
        HClass::parse(s, n)
    }
}

pub fn adjunction_genus0(x: &HClass) -> bool {
    x.canonical_pairing() + x.square() == -2
}

/// Gram matrix of a list of classes.
pub fn gram(classes: &[HClass]) -> Vec<Vec<i64>> {
    classes.iter().map(|x| classes.iter().map(|y| x.pair(y)).collect()).collect()
}

/// Classes of the cap components in centre-first, arm-outward order, plus
/// any further classes that ride along (exceptional strands).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologicalData {
    pub ambient_n: usize,
    pub arm_lengths: Vec<usize>,
    pub cap_classes: Vec<HClass>,
    pub extra_classes: Vec<HClass>,
}

/// Canonical form of cap data under e-index permutations and arm
/// symmetries: the smallest (l-row, sorted column list) over the allowed
/// arm permutations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CapKey {
    pub ambient_n: usize,
    pub l_row: Vec<i64>,
    pub columns: Vec<Vec<i64>>,
}

impl HomologicalData {
    pub fn row_permutation(&self, arm_perm: &[usize]) -> Vec<usize> {
        let mut offsets = vec![1];
        for &len in &self.arm_lengths {
            offsets.push(offsets.last().unwrap() + len);
        }
        let mut rows = vec![0];
        for &k in arm_perm {
            rows.extend(offsets[k]..offsets[k] + self.arm_lengths[k]);
        }
        rows
    }

    pub fn canonical_key(&self, arm_symmetries: &[Vec<usize>]) -> CapKey {
        let identity: Vec<usize> = (0..self.arm_lengths.len()).collect();
        let perms: Vec<&[usize]> = if arm_symmetries.is_empty() {
            vec![&identity]
        } else {
            arm_symmetries.iter().map(Vec::as_slice).collect()
        };
        perms
            .into_iter()
            .map(|p| {
                let rows = self.row_permutation(p);
                let l_row = rows.iter().map(|&r| self.cap_classes[r].l).collect();
                let mut columns: Vec<Vec<i64>> = (0..self.ambient_n)
                    .map(|t| rows.iter().map(|&r| self.cap_classes[r].e[t]).collect())
                    .collect();
                columns.sort();
                CapKey { ambient_n: self.ambient_n, l_row, columns }
            })
            .min()
            .expect("at least one permutation")
    }

    pub fn padded(&self, n: usize) -> HomologicalData {
        HomologicalData {
            ambient_n: n.max(self.ambient_n),
            arm_lengths: self.arm_lengths.clone(),
            cap_classes: self.cap_classes.iter().map(|c| c.padded(n.max(self.ambient_n))).collect(),
            extra_classes: self.extra_classes.iter().map(|c| c.padded(n.max(self.ambient_n))).collect(),
        }
    }
}

/// True iff some allowed arm permutation together with a permutation of
/// e-indices carries `a`'s cap classes onto `b`'s. Data of different rank
/// are compared after padding the smaller with unused indices.
pub fn isometry_equivalent(a: &HomologicalData, b: &HomologicalData, arm_symmetries: &[Vec<usize>]) -> bool {
    if a.arm_lengths != b.arm_lengths || a.cap_classes.len() != b.cap_classes.len() {
        return false;
    }
    let n = a.ambient_n.max(b.ambient_n);
    a.padded(n).canonical_key(arm_symmetries) == b.padded(n).canonical_key(arm_symmetries)
}
