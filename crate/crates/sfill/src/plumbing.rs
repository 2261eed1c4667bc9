//! Star-shaped plumbing graphs, the concave cap, and blowdown templates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::{self, gcd, CfError, CfWord, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeifertError {
    #[error("expected \"b=<int>;<a1>/<b1>,<a2>/<b2>,<a3>/<b3>\", got {0:?}")]
    Syntax(String),
    #[error("malformed slope {0:?}: expected <alpha>/<beta> with positive integers")]
    MalformedSlope(String),
    #[error(transparent)]
    Slope(#[from] CfError),
    #[error("b = {0} is too small: the concave cap needs b >= 4")]
    CapNeedsB4(i64),
    #[error("b = {0} must be positive")]
    NonPositiveB(i64),
}

/// Input invariants `Y(-b; (a1,b1), (a2,b2), (a3,b3))`.
///
/// Any positive `b` is accepted here so that the plumbing graph can be built
/// for `b = 3`; everything that needs the cap checks `b >= 4` itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeifertData {
    pub b: i64,
    pub arms: [(i64, i64); 3],
}

impl SeifertData {
    pub fn new(b: i64, arms: [(i64, i64); 3]) -> Result<Self, SeifertError> {
        if b <= 0 {
            return Err(SeifertError::NonPositiveB(b));
        }
        for &(a, bb) in &arms {
            cfrac::hj_expand(a, bb)?;
        }
        Ok(SeifertData { b, arms })
    }

    pub fn require_cap(&self) -> Result<(), SeifertError> {
        if self.b < 4 {
            Err(SeifertError::CapNeedsB4(self.b))
        } else {
            Ok(())
        }
    }

    pub fn slopes(&self) -> [Rational; 3] {
        self.arms.map(|(a, b)| Rational::new(a, b))
    }
}

fn parse_slope(s: &str) -> Result<(i64, i64), SeifertError> {
    let bad = || SeifertError::MalformedSlope(s.to_string());
    let (a, b) = s.trim().split_once('/').ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

impl FromStr for SeifertData {
    type Err = SeifertError;

    /// Parses `b=5;5/3,2/1,7/2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || SeifertError::Syntax(s.to_string());
        let (head, tail) = s.split_once(';').ok_or_else(syntax)?;
        let b = head
            .trim()
            .strip_prefix("b=")
            .ok_or_else(syntax)?
            .trim()
            .parse::<i64>()
            .map_err(|_| syntax())?;
        let slopes = tail
            .split(',')
            .map(parse_slope)
            .collect::<Result<Vec<_>, _>>()?;
        if slopes.len() != 3 {
            return Err(syntax());
        }
        for &(a, bb) in &slopes {
            if a > 0 && bb > 0 && gcd(a, bb) != 1 {
                return Err(CfError::NotCoprime { alpha: a, beta: bb }.into());
            }
        }
        SeifertData::new(b, [slopes[0], slopes[1], slopes[2]])
    }
}

impl fmt::Display for SeifertData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [(a1, b1), (a2, b2), (a3, b3)] = self.arms;
        write!(f, "b={};{a1}/{b1},{a2}/{b2},{a3}/{b3}", self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Star,
    Linear,
}

/// A weighted star: a centre and arms listed outward. A linear chain is
/// stored with its first vertex as the centre and the rest as one arm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlumbingGraph {
    pub central_weight: i64,
    pub arms: Vec<Vec<i64>>,
    pub shape: Shape,
}

impl PlumbingGraph {
    pub fn star(central_weight: i64, arms: Vec<Vec<i64>>) -> Self {
        PlumbingGraph { central_weight, arms, shape: Shape::Star }
    }

    pub fn linear(chain: &[i64]) -> Self {
        assert!(!chain.is_empty(), "empty chain");
        let arms = if chain.len() > 1 { vec![chain[1..].to_vec()] } else { vec![] };
        PlumbingGraph { central_weight: chain[0], arms, shape: Shape::Linear }
    }

    pub fn vertex_count(&self) -> usize {
        1 + self.arms.iter().map(Vec::len).sum::<usize>()
    }

    /// Weights in centre-first, arm-by-arm outward order.
    pub fn weights(&self) -> Vec<i64> {
        let mut w = vec![self.central_weight];
        for arm in &self.arms {
            w.extend(arm);
        }
        w
    }

    /// Tree edges in the same vertex numbering as [`weights`](Self::weights).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        let mut next = 1;
        for arm in &self.arms {
            let mut prev = 0;
            for _ in arm {
                e.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        e
    }

    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let w = self.weights();
        let n = w.len();
        let mut m = vec![vec![0; n]; n];
        for (i, &x) in w.iter().enumerate() {
            m[i][i] = x;
        }
        for (a, b) in self.edges() {
            m[a][b] = 1;
            m[b][a] = 1;
        }
        m
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph \"{name}\" {{\n");
        for (i, w) in self.weights().iter().enumerate() {
            s.push_str(&format!("  v{i} [label=\"{w}\"];\n"));
        }
        for (a, b) in self.edges() {
            s.push_str(&format!("  v{a} -- v{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// `[w0,w1,..]` for a chain, `centre -5, arms [-2,-3] [-2] [-4,-2]` for a star.
impl fmt::Display for PlumbingGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[i64]| format!("[{}]", v.iter().map(i64::to_string).collect::<Vec<_>>().join(","));
        if self.shape == Shape::Linear {
            return f.write_str(&list(&self.weights()));
        }
        write!(f, "centre {}, arms", self.central_weight)?;
        for a in &self.arms {
            write!(f, " {}", list(a))?;
        }
        Ok(())
    }
}

pub fn build_star_graph(s: &SeifertData) -> PlumbingGraph {
    let arms = s
        .arms
        .iter()
        .map(|&(a, b)| {
            let w = cfrac::hj_expand(a, b).expect("validated slope");
            w.entries.iter().map(|x| -x).collect()
        })
        .collect();
    PlumbingGraph::star(-s.b, arms)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("matrix is not symmetric")]
pub struct NotSymmetric;

/// Leading principal minors via fraction-free elimination.
pub fn leading_minors(m: &[Vec<i64>]) -> Vec<i128> {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut minors = Vec::with_capacity(n);
    let mut prev = 1i128;
    for k in 0..n {
        let d = a[k][k];
        minors.push(d);
        if d == 0 {
            // remaining minors need pivoting; compute them directly
            for j in k + 1..n {
                let sub: Vec<Vec<i64>> = m[..=j].iter().map(|r| r[..=j].to_vec()).collect();
                minors.push(det(&sub));
            }
            return minors;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * d - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = d;
    }
    minors
}

/// Exact determinant by Bareiss elimination with row pivoting.
pub fn det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n - 1][n - 1]
    }
}

pub fn is_negative_definite(m: &[Vec<i64>]) -> Result<bool, NotSymmetric> {
    let n = m.len();
    for i in 0..n {
        if m[i].len() != n {
            return Err(NotSymmetric);
        }
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(NotSymmetric);
            }
        }
    }
    Ok(leading_minors(m)
        .iter()
        .enumerate()
        .all(|(k, &d)| if k % 2 == 0 { d < 0 } else { d > 0 }))
}

/// The cap `K`: a `+1` centre, three arms of dual weights and `b-4` single
/// `(-1)` arms. Weights are stored with their sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConcaveCap {
    pub central_weight: i64,
    pub essential_arms: Vec<Vec<i64>>,
    pub minus_one_arms: usize,
}

impl ConcaveCap {
    /// Essential arms followed by the `(-1)` arms.
    pub fn arms(&self) -> Vec<Vec<i64>> {
        let mut a = self.essential_arms.clone();
        a.extend(std::iter::repeat_n(vec![-1], self.minus_one_arms));
        a
    }

    /// Number of spheres in the cap, centre included.
    pub fn component_count(&self) -> usize {
        1 + self.arms().iter().map(Vec::len).sum::<usize>()
    }

    pub fn graph(&self) -> PlumbingGraph {
        PlumbingGraph::star(self.central_weight, self.arms())
    }

    /// Permutations of arm indices that preserve the weight strings.
    pub fn arm_symmetries(&self) -> Vec<Vec<usize>> {
        let arms = self.arms();
        let mut out = Vec::new();
        permutations(arms.len(), &mut |p| {
            if p.iter().enumerate().all(|(j, &k)| arms[k] == arms[j]) {
                out.push(p.to_vec());
            }
        });
        out
    }
}

/// Calls `f` on every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(p: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut dyn FnMut(&[usize])) {
        if p.len() == used.len() {
            f(p);
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                p.push(i);
                rec(p, used, f);
                p.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], f);
}

pub fn build_concave_cap(s: &SeifertData) -> Result<ConcaveCap, SeifertError> {
    s.require_cap()?;
    let essential_arms = s
        .arms
        .iter()
        .map(|&(a, b)| {
            let w = cfrac::dual_expand(a, b).expect("validated slope");
            w.entries.iter().map(|x| -x).collect()
        })
        .collect();
    Ok(ConcaveCap {
        central_weight: 1,
        essential_arms,
        minus_one_arms: (s.b - 4) as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Cp { p: i64 },
    Cpq { p: i64, q: i64 },
    GammaPqr { p: i64, q: i64, r: i64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Cp { p } => write!(f, "C_{p}"),
            Family::Cpq { p, q } => write!(f, "C_{{{p},{q}}}"),
            Family::GammaPqr { p, q, r } => write!(f, "Gamma_{{{p},{q},{r}}}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("C_p needs p >= 2, got {0}")]
    BadP(i64),
    #[error("C_{{p,q}} needs p >= 2, 0 < q < p and gcd(p,q) = 1, got ({0},{1})")]
    BadPq(i64, i64),
    #[error("Gamma_{{p,q,r}} needs p, q, r >= 0, got ({0},{1},{2})")]
    BadPqr(i64, i64, i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlowdownTemplate {
    #[serde(flatten)]
    pub family: Family,
    pub graph: PlumbingGraph,
}

impl BlowdownTemplate {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }
}

/// `C_p`: the chain `-(p+2), -2, ..., -2` with `p-2` trailing `(-2)`s,
/// i.e. the HJ chain of `p^2/(p-1)`.
pub fn c_p(p: i64) -> Result<BlowdownTemplate, TemplateError> {
    if p < 2 {
        return Err(TemplateError::BadP(p));
    }
    let mut chain = vec![-(p + 2)];
    chain.extend(std::iter::repeat_n(-2, (p - 2) as usize));
    Ok(BlowdownTemplate { family: Family::Cp { p }, graph: PlumbingGraph::linear(&chain) })
}

/// `C_{p,q}`: the HJ chain of `p^2/(pq-1)`.
pub fn c_pq(p: i64, q: i64) -> Result<BlowdownTemplate, TemplateError> {
    if p < 2 || q <= 0 || q >= p || gcd(p, q) != 1 {
        return Err(TemplateError::BadPq(p, q));
    }
    let w = cfrac::hj_expand(p * p, p * q - 1).expect("p^2 and pq-1 are coprime");
    let chain: Vec<i64> = w.entries.iter().map(|x| -x).collect();
    Ok(BlowdownTemplate { family: Family::Cpq { p, q }, graph: PlumbingGraph::linear(&chain) })
}

/// `Gamma_{p,q,r}`: centre `-4`; legs `q (-2)s, -(p+3)`, `r (-2)s, -(q+3)`,
/// `p (-2)s, -(r+3)`.
pub fn gamma_pqr(p: i64, q: i64, r: i64) -> Result<BlowdownTemplate, TemplateError> {
    if p < 0 || q < 0 || r < 0 {
        return Err(TemplateError::BadPqr(p, q, r));
    }
    let leg = |twos: i64, end: i64| {
        let mut v = vec![-2; twos as usize];
        v.push(-end);
        v
    };
    let arms = vec![leg(q, p + 3), leg(r, q + 3), leg(p, r + 3)];
    Ok(BlowdownTemplate {
        family: Family::GammaPqr { p, q, r },
        graph: PlumbingGraph::star(-4, arms),
    })
}

/// The rotation of `(p,q,r)` used as the label of its cyclic class;
/// `Gamma_{p,q,r}`, `Gamma_{q,r,p}` and `Gamma_{r,p,q}` are the same graph.
pub fn gamma_label(p: i64, q: i64, r: i64) -> (i64, i64, i64) {
    [(p, q, r), (q, r, p), (r, p, q)].into_iter().min().unwrap()
}

/// Reads `(p, q)` off a Wahl chain `p^2/(pq-1)`, using the orientation with
/// the smaller `q`. Returns `None` if the word is not such a chain.
pub fn wahl_label(word: &[i64]) -> Option<(i64, i64, Vec<i64>)> {
    let mut best: Option<(i64, i64, Vec<i64>)> = None;
    for w in [word.to_vec(), word.iter().rev().copied().collect::<Vec<_>>()] {
        let v = cfrac::eval_cf(&CfWord::new(w.clone())).ok()?;
        let p = (v.num as f64).sqrt().round() as i64;
        if p * p != v.num || (v.den + 1) % p != 0 {
            return None;
        }
        let q = (v.den + 1) / p;
        if best.as_ref().is_none_or(|b| q < b.1) {
            best = Some((p, q, w));
        }
    }
    best
}

/// All `C_{p,q}` chains of length at most `max_len`, grown from `[4]` by
/// `w -> [2, w1, .., wr + 1]` and `w -> [w1 + 1, .., wr, 2]`.
/// Sorted by length, then by `(p, q)`.
pub fn wahl_chains(max_len: usize) -> Vec<BlowdownTemplate> {
    use std::collections::BTreeSet;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut level = vec![vec![4i64]];
    while !level.is_empty() && level[0].len() <= max_len {
        let mut next = Vec::new();
        for w in level {
            let rev: Vec<i64> = w.iter().rev().copied().collect();
            if seen.contains(&w) || seen.contains(&rev) {
                continue;
            }
            seen.insert(w.clone());
            let (p, q, _) = wahl_label(&w).expect("grown chains are Wahl chains");
            out.push(c_pq(p, q).expect("valid label"));
            let mut a = vec![2];
            a.extend(&w);
            *a.last_mut().unwrap() += 1;
            let mut b = w.clone();
            b[0] += 1;
            b.push(2);
            next.push(a);
            next.push(b);
        }
        level = next;
    }
    out.sort_by_key(|t| (t.vertex_count(), t.family));
    out
}
