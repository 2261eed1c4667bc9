//! Curve configurations: strands labelled by homology classes, with
//! blow-up and blow-down moves and a verifier.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homlattice::{adjunction_genus0, HClass, HomologicalData};
use crate::plumbing::ConcaveCap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Central,
    /// Component `pos` (0 = next to the centre) of cap arm `arm`.
    Cap { arm: usize, pos: usize },
    Exceptional,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strand {
    #[serde(flatten)]
    pub class: HClass,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurveConfiguration {
    #[serde(rename = "ambient_N")]
    pub ambient_n: usize,
    pub cap: ConcaveCap,
    pub strands: Vec<Strand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedVariant {
    /// All non-central lines through one point, blown up there.
    CommonPoint,
    /// One generic line; the others concurrent. The common point and each
    /// intersection with the generic line are blown up.
    GenericLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Intersection(usize, usize),
    Generic(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("no strand {0}")]
    NoStrand(usize),
    #[error("strands {0} and {1} do not meet (pairing {2})")]
    Disjoint(usize, usize, i64),
    #[error("cannot blow up a strand against itself")]
    SameStrand,
    #[error("strand {0} is not a blow-downable exceptional sphere")]
    NotBlowDownable(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Ambient { strand: usize, len: usize },
    CentralClass { strand: usize },
    CentralCount { found: usize },
    Adjunction { strand: usize },
    NegativePairing { a: usize, b: usize, value: i64 },
    Square { strand: usize, expected: i64, found: i64 },
    MissingCap { arm: usize, pos: usize },
    DuplicateCap { arm: usize, pos: usize },
    CapPairing { a: usize, b: usize, expected: i64, found: i64 },
    /// A non-cap strand with square at most -2.
    Degree { strand: usize, square: i64 },
}

impl Violation {
    /// Violations that only make sense once the cap is complete.
    pub fn is_terminal_only(&self) -> bool {
        matches!(
            self,
            Violation::Square { .. }
                | Violation::MissingCap { .. }
                | Violation::DuplicateCap { .. }
                | Violation::CapPairing { .. }
                | Violation::Degree { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Ambient { strand, len } => write!(f, "strand {strand}: {len} coefficients, wrong ambient rank"),
            Violation::CentralClass { strand } => write!(f, "strand {strand}: central strand is not l"),
            Violation::CentralCount { found } => write!(f, "{found} central strands, expected 1"),
            Violation::Adjunction { strand } => write!(f, "strand {strand}: fails genus-0 adjunction"),
            Violation::NegativePairing { a, b, value } => write!(f, "strands {a},{b}: negative pairing {value}"),
            Violation::Square { strand, expected, found } => {
                write!(f, "strand {strand}: square {found}, expected {expected}")
            }
            Violation::MissingCap { arm, pos } => write!(f, "cap component ({arm},{pos}) missing"),
            Violation::DuplicateCap { arm, pos } => write!(f, "cap component ({arm},{pos}) appears twice"),
            Violation::CapPairing { a, b, expected, found } => {
                write!(f, "strands {a},{b}: pairing {found}, cap graph needs {expected}")
            }
            Violation::Degree { strand, square } => {
                write!(f, "strand {strand}: square {square} but not a cap component")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn local(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.is_terminal_only())
    }
}

impl CurveConfiguration {
    pub fn square(&self, i: usize) -> i64 {
        self.strands[i].class.square()
    }

    pub fn pair(&self, i: usize, j: usize) -> i64 {
        self.strands[i].class.pair(&self.strands[j].class)
    }

    /// Index of the strand with a given cap role.
    pub fn find_cap(&self, arm: usize, pos: usize) -> Option<usize> {
        self.strands.iter().position(|s| s.role == Role::Cap { arm, pos })
    }

    /// Cap classes in centre-first arm-outward order, or `None` if some
    /// component is missing.
    pub fn to_homological_data(&self) -> Option<HomologicalData> {
        let arms = self.cap.arms();
        let central = self.strands.iter().position(|s| s.role == Role::Central)?;
        let mut cap_classes = vec![self.strands[central].class.clone()];
        for (j, arm) in arms.iter().enumerate() {
            for i in 0..arm.len() {
                cap_classes.push(self.strands[self.find_cap(j, i)?].class.clone());
            }
        }
        Some(HomologicalData {
            ambient_n: self.ambient_n,
            arm_lengths: arms.iter().map(Vec::len).collect(),
            cap_classes,
            extra_classes: self
                .strands
                .iter()
                .filter(|s| s.role == Role::Exceptional)
                .map(|s| s.class.clone())
                .collect(),
        })
    }

    /// Exceptional strands meeting exactly one cap component; drawings
    /// usually leave these out.
    pub fn suppressible(&self) -> Vec<usize> {
        (0..self.strands.len())
            .filter(|&i| {
                self.strands[i].role == Role::Exceptional
                    && (0..self.strands.len())
                        .filter(|&j| {
                            matches!(self.strands[j].role, Role::Cap { .. } | Role::Central) && self.pair(i, j) > 0
                        })
                        .count()
                        == 1
            })
            .collect()
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let hidden = self.suppressible();
        writeln!(s, "graph \"{name}\" {{").unwrap();
        for (i, st) in self.strands.iter().enumerate() {
            let role = match st.role {
                Role::Central => "C0".to_string(),
                Role::Cap { arm, pos } => format!("C{}.{}", arm + 1, pos + 1),
                Role::Exceptional => "E".to_string(),
            };
            let style = if hidden.contains(&i) { ", style=dashed" } else { "" };
            writeln!(s, "  s{i} [label=\"{role}: {} ({})\"{style}];", st.class, self.square(i)).unwrap();
        }
        for i in 0..self.strands.len() {
            for j in i + 1..self.strands.len() {
                let p = self.pair(i, j);
                if p > 0 {
                    writeln!(s, "  s{i} -- s{j} [label=\"{p}\"];").unwrap();
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for CurveConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N = {}", self.ambient_n)?;
        for (i, st) in self.strands.iter().enumerate() {
            let role = match st.role {
                Role::Central => "C0".to_string(),
                Role::Cap { arm, pos } => format!("C{}.{}", arm + 1, pos + 1),
                Role::Exceptional => "e".to_string(),
            };
            writeln!(f, "  {role:>6}  {:>4}  {}", self.square(i), st.class)?;
        }
        Ok(())
    }
}

/// The two seed states. Lines get tentative roles `Cap { arm: k, pos: 0 }`
/// for `k` in input order; the final arm assignment is made by the search.
pub fn line_arrangement(cap: &ConcaveCap, variant: SeedVariant) -> CurveConfiguration {
    let nl = cap.arms().len();
    // parents of each blow-up, as line numbers
    let parents: Vec<Vec<usize>> = match variant {
        SeedVariant::CommonPoint => vec![(0..nl).collect()],
        SeedVariant::GenericLine => {
            let mut p = vec![(1..nl).collect::<Vec<_>>()];
            p.extend((1..nl).map(|k| vec![0, k]));
            p
        }
    };
    let n = parents.len();
    let mut strands = vec![Strand { class: HClass::line(n), role: Role::Central }];
    for k in 0..nl {
        let mut c = HClass::line(n);
        for (j, ps) in parents.iter().enumerate() {
            if ps.contains(&k) {
                c.e[j] = 1;
            }
        }
        strands.push(Strand { class: c, role: Role::Cap { arm: k, pos: 0 } });
    }
    for j in 0..n {
        strands.push(Strand { class: HClass::exceptional(j, n), role: Role::Exceptional });
    }
    CurveConfiguration { ambient_n: n, cap: cap.clone(), strands }
}

/// Adds `e_{N+1}`, subtracts it from the strands through the point, and
/// appends the new exceptional strand.
pub fn blow_up(c: &CurveConfiguration, site: Site) -> Result<CurveConfiguration, MoveError> {
    let through: Vec<usize> = match site {
        Site::Generic(s) => {
            if s >= c.strands.len() {
                return Err(MoveError::NoStrand(s));
            }
            vec![s]
        }
        Site::Intersection(s, t) => {
            for x in [s, t] {
                if x >= c.strands.len() {
                    return Err(MoveError::NoStrand(x));
                }
            }
            if s == t {
                return Err(MoveError::SameStrand);
            }
            let p = c.pair(s, t);
            if p < 1 {
                return Err(MoveError::Disjoint(s, t, p));
            }
            vec![s, t]
        }
    };
    let n = c.ambient_n + 1;
    let mut strands: Vec<Strand> = c
        .strands
        .iter()
        .map(|s| Strand { class: s.class.padded(n), role: s.role })
        .collect();
    for &i in &through {
        strands[i].class.e[n - 1] += 1;
    }
    strands.push(Strand { class: HClass::exceptional(n - 1, n), role: Role::Exceptional });
    Ok(CurveConfiguration { ambient_n: n, cap: c.cap.clone(), strands })
}

/// Contracts the exceptional strand `x`. Requires `x = e_i` exactly for
/// some index `i` that every other strand meets with coefficient 0 or 1.
pub fn blow_down(c: &CurveConfiguration, x: usize) -> Result<CurveConfiguration, MoveError> {
    let st = c.strands.get(x).ok_or(MoveError::NoStrand(x))?;
    let bad = MoveError::NotBlowDownable(x);
    if st.class.l != 0 || st.class.square() != -1 {
        return Err(bad);
    }
    let i = st.class.e.iter().position(|&v| v == -1).ok_or(bad.clone())?;
    for (j, other) in c.strands.iter().enumerate() {
        if j != x && !(0..=1).contains(&other.class.e[i]) {
            return Err(bad);
        }
    }
    let strands = c
        .strands
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != x)
        .map(|(_, s)| {
            let mut e = s.class.e.clone();
            e.remove(i);
            Strand { class: HClass { l: s.class.l, e }, role: s.role }
        })
        .collect();
    Ok(CurveConfiguration { ambient_n: c.ambient_n - 1, cap: c.cap.clone(), strands })
}

pub fn verify_configuration(c: &CurveConfiguration) -> Report {
    let mut v = Vec::new();
    let n = c.strands.len();
    let ambient_ok: Vec<bool> = c.strands.iter().map(|s| s.class.e.len() == c.ambient_n).collect();
    for (i, s) in c.strands.iter().enumerate() {
        if !ambient_ok[i] {
            v.push(Violation::Ambient { strand: i, len: s.class.e.len() });
        }
    }
    let arms = c.cap.arms();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut centrals = 0;
    for (i, s) in c.strands.iter().enumerate() {
        if !ambient_ok[i] {
            continue;
        }
        if !adjunction_genus0(&s.class) {
            v.push(Violation::Adjunction { strand: i });
        }
        let sq = s.class.square();
        match s.role {
            Role::Central => {
                centrals += 1;
                if s.class != HClass::line(c.ambient_n) {
                    v.push(Violation::CentralClass { strand: i });
                }
            }
            Role::Cap { arm, pos } => {
                match arms.get(arm).and_then(|a| a.get(pos)) {
                    Some(&w) if w != sq => v.push(Violation::Square { strand: i, expected: w, found: sq }),
                    Some(_) => {}
                    None => v.push(Violation::Square { strand: i, expected: 0, found: sq }),
                }
                if seen.insert((arm, pos), i).is_some() {
                    v.push(Violation::DuplicateCap { arm, pos });
                }
            }
            Role::Exceptional => {
                if sq <= -2 {
                    v.push(Violation::Degree { strand: i, square: sq });
                }
            }
        }
    }
    if centrals != 1 {
        v.push(Violation::CentralCount { found: centrals });
    }
    for (j, arm) in arms.iter().enumerate() {
        for i in 0..arm.len() {
            if !seen.contains_key(&(j, i)) {
                v.push(Violation::MissingCap { arm: j, pos: i });
            }
        }
    }
    let expected_cap_pairing = |a: Role, b: Role| -> Option<i64> {
        match (a, b) {
            (Role::Central, Role::Cap { pos, .. }) | (Role::Cap { pos, .. }, Role::Central) => {
                Some((pos == 0) as i64)
            }
            (Role::Cap { arm: a1, pos: p1 }, Role::Cap { arm: a2, pos: p2 }) => {
                Some((a1 == a2 && p1.abs_diff(p2) == 1) as i64)
            }
            _ => None,
        }
    };
    for a in 0..n {
        for b in a + 1..n {
            if !ambient_ok[a] || !ambient_ok[b] {
                continue;
            }
            let p = c.pair(a, b);
            if p < 0 {
                v.push(Violation::NegativePairing { a, b, value: p });
            }
            if let Some(e) = expected_cap_pairing(c.strands[a].role, c.strands[b].role) {
                if e != p {
                    v.push(Violation::CapPairing { a, b, expected: e, found: p });
                }
            }
        }
    }
    Report { violations: v }
}
