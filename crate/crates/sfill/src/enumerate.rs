//! Exhaustive blow-up search for curve configurations realizing the cap.
//!
//! A search state records, for every blow-up index, which strands passed
//! through the blown-up point. Strand classes follow from that record:
//! line `k` is `l - sum{e_j : k is a parent of j}` and exceptional strand
//! `i` is `e_i - sum{e_j : i is a parent of j}`. Each move adds one index,
//! so the search runs level by level in the ambient rank and only needs a
//! per-level memo keyed by a canonical form of the parent record.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfrac::dual_expand;
use crate::curveconfig::{blow_up, line_arrangement, CurveConfiguration, Role, SeedVariant, Site, Strand};
use crate::homlattice::{CapKey, HClass};
use crate::plumbing::{build_concave_cap, build_star_graph, ConcaveCap, SeifertData, SeifertError};

/// Hard limit from the bitmask state representation.
pub const MAX_AMBIENT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_ambient_n: usize,
    /// Number of search states that may be expanded.
    pub max_branches: usize,
}

impl SearchBudget {
    pub const DEFAULT_BRANCHES: usize = 20_000_000;

    pub fn for_input(s: &SeifertData) -> Self {
        SearchBudget { max_ambient_n: ambient_bound(s), max_branches: Self::DEFAULT_BRANCHES }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error(transparent)]
    Seifert(#[from] SeifertError),
    #[error("search budget exhausted after {explored} states (limit {limit})")]
    BudgetExhausted { explored: usize, limit: usize },
    #[error("ambient rank {0} is beyond the supported maximum of {MAX_AMBIENT}")]
    AmbientTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filling {
    pub key: CapKey,
    pub config: CurveConfiguration,
}

impl Filling {
    /// `b_2(W) = N + 1 - b_2(K)`.
    pub fn b2(&self) -> i64 {
        b2_of(&self.config)
    }
}

pub fn b2_of(c: &CurveConfiguration) -> i64 {
    c.ambient_n as i64 + 1 - c.cap.component_count() as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    /// Sorted by decreasing ambient rank, then by key.
    pub fillings: Vec<Filling>,
    pub states_explored: usize,
}

/// `b_2(Gamma) + b_2(K) - 1`, the rank of `CP^2 # N` for the minimal
/// resolution.
pub fn ambient_bound(s: &SeifertData) -> usize {
    let gamma = build_star_graph(s).vertex_count();
    let cap = 1
        + s.arms.iter().map(|&(a, b)| dual_expand(a, b).expect("validated slope").len()).sum::<usize>()
        + (s.b - 4).max(0) as usize;
    gamma + cap - 1
}

/// Children bitmask per node: lines first, then exceptional indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct State {
    kids: Vec<u64>,
}

impl State {
    fn square(&self, nl: usize, u: usize) -> i64 {
        let k = self.kids[u].count_ones() as i64;
        if u < nl {
            1 - k
        } else {
            -1 - k
        }
    }

    fn pair(&self, nl: usize, u: usize, v: usize) -> i64 {
        let line = |w: usize| (w < nl) as i64;
        let head_in = |w: usize, x: usize| (w >= nl && self.kids[x] >> (w - nl) & 1 == 1) as i64;
        line(u) * line(v) - (self.kids[u] & self.kids[v]).count_ones() as i64 + head_in(v, u) + head_in(u, v)
    }

    fn class(&self, nl: usize, u: usize) -> HClass {
        let n = self.kids.len() - nl;
        let mut e: Vec<i64> = (0..n).map(|t| (self.kids[u] >> t & 1) as i64).collect();
        if u >= nl {
            e[u - nl] = -1;
        }
        HClass { l: (u < nl) as i64, e }
    }

    fn child(&self, nl: usize, parents: &[usize]) -> State {
        let bit = 1u64 << (self.kids.len() - nl);
        let mut kids = self.kids.clone();
        for &p in parents {
            kids[p] |= bit;
        }
        kids.push(0);
        State { kids }
    }

    fn parents(&self, nl: usize) -> Vec<Vec<usize>> {
        let n = self.kids.len() - nl;
        let mut p = vec![Vec::new(); n];
        for (u, &k) in self.kids.iter().enumerate() {
            for (t, ps) in p.iter_mut().enumerate() {
                if k >> t & 1 == 1 {
                    ps.push(u);
                }
            }
        }
        p
    }
}

/// Canonical encoding of the parent record up to relabelling of indices and
/// of lines. Colour refinement, then individualisation with branching;
/// the lexicographically least encoding wins.
fn canonical(nl: usize, s: &State) -> Vec<u8> {
    let t = s.kids.len();
    let parents = s.parents(nl);
    let par = |v: usize| -> &[usize] {
        if v < nl {
            &[]
        } else {
            &parents[v - nl]
        }
    };
    let kids_of = |v: usize| -> Vec<usize> { (0..t - nl).filter(|&j| s.kids[v] >> j & 1 == 1).map(|j| j + nl).collect() };
    let children: Vec<Vec<usize>> = (0..t).map(kids_of).collect();

    // multiset hashes of neighbour colours; collisions only coarsen the
    // partition, which the branching below makes up for
    let mix = |x: u32, salt: u64| -> u64 {
        let mut z = (x as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
        z = (z ^ (z >> 31)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z ^ (z >> 29)
    };
    let refine = |mut col: Vec<u32>| -> Vec<u32> {
        let mut distinct = {
            let mut c = col.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        loop {
            let sigs: Vec<(u32, u64, u64)> = (0..t)
                .map(|v| {
                    let a = par(v).iter().fold(0u64, |h, &p| h.wrapping_add(mix(col[p], 1)));
                    let b = children[v].iter().fold(0u64, |h, &c| h.wrapping_add(mix(col[c], 2)));
                    (col[v], a, b)
                })
                .collect();
            let mut ds = sigs.clone();
            ds.sort_unstable();
            ds.dedup();
            let new: Vec<u32> = sigs.iter().map(|x| ds.binary_search(x).unwrap() as u32).collect();
            if ds.len() == distinct {
                return new;
            }
            distinct = ds.len();
            col = new;
        }
    };

    let encode = |col: &[u32]| -> Vec<u8> {
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by_key(|&v| col[v]);
        let mut pos = vec![0u8; t];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i as u8;
        }
        let mut out = Vec::with_capacity(3 * t);
        for &v in &order {
            out.push((v < nl) as u8);
            let mut ps: Vec<u8> = par(v).iter().map(|&p| pos[p]).collect();
            ps.sort_unstable();
            out.push(ps.len() as u8);
            out.extend(ps);
        }
        out
    };

    let mut best: Option<Vec<u8>> = None;
    let mut stack = vec![refine((0..t).map(|v| (v < nl) as u32).collect())];
    while let Some(col) = stack.pop() {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &col {
            *counts.entry(c).or_default() += 1;
        }
        let Some((&cell, _)) = counts.iter().find(|(_, &n)| n > 1) else {
            let e = encode(&col);
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
            continue;
        };
        let members: Vec<usize> = (0..t).filter(|&v| col[v] == cell).collect();
        // twins (same parents, same children) give identical encodings
        let twins = members.iter().all(|&v| par(v) == par(members[0]) && children[v] == children[members[0]]);
        let picks = if twins { &members[..1] } else { &members[..] };
        for &m in picks.iter().rev() {
            let mut c2: Vec<u32> = col.iter().map(|&x| 2 * x + 1).collect();
            c2[m] = 2 * cell;
            stack.push(refine(c2));
        }
    }
    best.expect("at least one leaf")
}

struct Ctx {
    nl: usize,
    cap: ConcaveCap,
    arms: Vec<Vec<i64>>,
    symmetries: Vec<Vec<usize>>,
    firsts: Vec<i64>,
    tails: Vec<i64>,
    target_sum: i64,
    max_n: usize,
}

impl Ctx {
    fn new(cap: &ConcaveCap, max_n: usize) -> Ctx {
        let arms = cap.arms();
        let mut firsts: Vec<i64> = arms.iter().map(|a| a[0]).collect();
        let mut tails: Vec<i64> = arms.iter().flat_map(|a| a[1..].iter().copied()).collect();
        firsts.sort_unstable();
        tails.sort_unstable();
        let target_sum = firsts.iter().sum::<i64>() + tails.iter().sum::<i64>();
        Ctx {
            nl: arms.len(),
            cap: cap.clone(),
            symmetries: cap.arm_symmetries(),
            arms,
            firsts,
            tails,
            target_sum,
            max_n,
        }
    }

    fn seeds(&self) -> Vec<State> {
        [SeedVariant::CommonPoint, SeedVariant::GenericLine]
            .into_iter()
            .map(|v| {
                let c = line_arrangement(&self.cap, v);
                let n = c.ambient_n;
                let mut kids = vec![0u64; self.nl + n];
                for k in 0..self.nl {
                    for t in 0..n {
                        if c.strands[1 + k].class.e[t] == 1 {
                            kids[k] |= 1 << t;
                        }
                    }
                }
                State { kids }
            })
            .collect()
    }

    /// Necessary conditions for completing the cap from `s`.
    fn viable(&self, s: &State) -> bool {
        let nl = self.nl;
        let n = s.kids.len() - nl;
        let mut ls: Vec<i64> = (0..nl).map(|u| s.square(nl, u)).collect();
        ls.sort_unstable();
        if ls.iter().zip(&self.firsts).any(|(a, b)| a < b) {
            return false;
        }
        let mut es: Vec<i64> = (nl..s.kids.len()).map(|u| s.square(nl, u)).filter(|&q| q <= -2).collect();
        es.sort_unstable();
        if es.len() > self.tails.len() || es.iter().zip(&self.tails).any(|(a, b)| a < b) {
            return false;
        }
        let uncommitted = (self.tails.len() - es.len()) as i64;
        let deficit = ls.iter().sum::<i64>() + es.iter().sum::<i64>() - uncommitted - self.target_sum;
        deficit <= 2 * (self.max_n as i64 - n as i64)
    }

    fn children(&self, s: &State) -> Vec<State> {
        let nl = self.nl;
        let t = s.kids.len();
        let mut out = Vec::new();
        for u in 0..t {
            out.push(s.child(nl, &[u]));
        }
        for u in 0..t {
            for v in u + 1..t {
                if s.pair(nl, u, v) >= 1 {
                    out.push(s.child(nl, &[u, v]));
                }
            }
        }
        out
    }

    /// Reads off a cap realization if `s` is one: cap strands are the lines
    /// and the exceptional strands of square at most -2.
    fn terminal(&self, s: &State) -> Option<(CapKey, CurveConfiguration)> {
        let nl = self.nl;
        let t = s.kids.len();
        let n = t - nl;
        let cap: Vec<usize> = (0..t).filter(|&u| u < nl || s.square(nl, u) <= -2).collect();
        if cap.len() != self.firsts.len() + self.tails.len() {
            return None;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); t];
        for (i, &u) in cap.iter().enumerate() {
            for &v in &cap[i + 1..] {
                match s.pair(nl, u, v) {
                    0 => {}
                    1 => {
                        adj[u].push(v);
                        adj[v].push(u);
                    }
                    _ => return None,
                }
            }
        }
        let mut used = vec![false; t];
        let mut chains = Vec::with_capacity(nl);
        for k in 0..nl {
            if adj[k].len() > 1 {
                return None;
            }
            let mut chain = vec![k];
            used[k] = true;
            let (mut prev, mut cur) = (usize::MAX, k);
            loop {
                let next: Vec<usize> = adj[cur].iter().copied().filter(|&x| x != prev).collect();
                match next.as_slice() {
                    [] => break,
                    [x] if *x >= nl && !used[*x] => {
                        used[*x] = true;
                        chain.push(*x);
                        prev = cur;
                        cur = *x;
                    }
                    _ => return None,
                }
            }
            chains.push(chain);
        }
        if cap.iter().any(|&u| !used[u]) {
            return None;
        }
        // match chains to arms by weight string
        let mut taken = vec![false; nl];
        let mut assignment = Vec::with_capacity(nl);
        for arm in &self.arms {
            let k = (0..nl).find(|&k| {
                !taken[k]
                    && chains[k].len() == arm.len()
                    && chains[k].iter().zip(arm).all(|(&u, &w)| s.square(nl, u) == w)
            })?;
            taken[k] = true;
            assignment.push(k);
        }
        // every index must meet the cap, else W holds a (-1)-sphere
        let mut seen = 0u64;
        for &u in &cap {
            seen |= s.kids[u];
            if u >= nl {
                seen |= 1 << (u - nl);
            }
        }
        if n < 64 && seen != (1u64 << n) - 1 || n == 64 && seen != u64::MAX {
            return None;
        }

        let mut strands = vec![Strand { class: HClass::line(n), role: Role::Central }];
        for (j, &k) in assignment.iter().enumerate() {
            for (pos, &u) in chains[k].iter().enumerate() {
                strands.push(Strand { class: s.class(nl, u), role: Role::Cap { arm: j, pos } });
            }
        }
        for u in nl..t {
            if s.square(nl, u) == -1 {
                strands.push(Strand { class: s.class(nl, u), role: Role::Exceptional });
            }
        }
        let config = CurveConfiguration { ambient_n: n, cap: self.cap.clone(), strands };
        let key = config.to_homological_data().expect("complete cap").canonical_key(&self.symmetries);
        Some((key, config))
    }
}

/// Relabels e-indices so that they are ordered by their cap columns
/// (ties kept in blow-up order).
fn normalize(config: &CurveConfiguration) -> CurveConfiguration {
    let n = config.ambient_n;
    let cap_rows: Vec<&HClass> =
        config.strands.iter().filter(|s| s.role != Role::Exceptional).map(|s| &s.class).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&t| cap_rows.iter().map(|c| c.e[t]).collect::<Vec<_>>());
    let strands = config
        .strands
        .iter()
        .map(|s| Strand {
            class: HClass { l: s.class.l, e: order.iter().map(|&t| s.class.e[t]).collect() },
            role: s.role,
        })
        .collect();
    CurveConfiguration { ambient_n: n, cap: config.cap.clone(), strands }
}

pub fn enumerate_fillings(s: &SeifertData, budget: SearchBudget) -> Result<Enumeration, EnumError> {
    let cap = build_concave_cap(s)?;
    enumerate_cap(&cap, budget)
}

/// Same as [`enumerate_fillings`] for an already built cap.
pub fn enumerate_cap(cap: &ConcaveCap, budget: SearchBudget) -> Result<Enumeration, EnumError> {
    if budget.max_ambient_n > MAX_AMBIENT {
        return Err(EnumError::AmbientTooLarge(budget.max_ambient_n));
    }
    let ctx = Ctx::new(cap, budget.max_ambient_n);
    let nl = ctx.nl;
    let mut found: BTreeMap<CapKey, CurveConfiguration> = BTreeMap::new();
    let mut explored = 0usize;

    // level-by-level; each level holds distinct states in canonical order
    let mut levels: BTreeMap<usize, BTreeMap<Vec<u8>, State>> = BTreeMap::new();
    for seed in ctx.seeds() {
        if ctx.viable(&seed) {
            let n = seed.kids.len() - nl;
            levels.entry(n).or_default().entry(canonical(nl, &seed)).or_insert(seed);
        }
    }
    while let Some((n, level)) = levels.pop_first() {
        if n > budget.max_ambient_n {
            break;
        }
        explored += level.len();
        if explored > budget.max_branches {
            return Err(EnumError::BudgetExhausted { explored, limit: budget.max_branches });
        }
        let states: Vec<State> = level.into_values().collect();
        let expand = n < budget.max_ambient_n;
        let results: Vec<(Option<(CapKey, CurveConfiguration)>, Vec<(Vec<u8>, State)>)> = states
            .par_iter()
            .map(|st| {
                let term = ctx.terminal(st);
                let kids = if expand {
                    ctx.children(st)
                        .into_iter()
                        .filter(|c| ctx.viable(c))
                        .map(|c| (canonical(nl, &c), c))
                        .collect()
                } else {
                    Vec::new()
                };
                (term, kids)
            })
            .collect();
        let next = levels.entry(n + 1).or_default();
        for (term, kids) in results {
            if let Some((key, config)) = term {
                found.entry(key).or_insert_with(|| normalize(&config));
            }
            for (k, c) in kids {
                next.entry(k).or_insert(c);
            }
        }
        if next.is_empty() {
            levels.remove(&(n + 1));
        }
    }

    let mut fillings: Vec<Filling> = found.into_iter().map(|(key, config)| Filling { key, config }).collect();
    fillings.sort_by(|a, b| b.key.ambient_n.cmp(&a.key.ambient_n).then_with(|| a.key.cmp(&b.key)));
    Ok(Enumeration { fillings, states_explored: explored })
}

/// The configuration of the minimal resolution: the common-point seed
/// followed by standard blow-ups only. Each arm is grown from its line by
/// blowing up generic points of its last component; the last exceptional
/// sphere created on a component becomes the next component.
pub fn minimal_resolution_config(s: &SeifertData) -> Result<CurveConfiguration, SeifertError> {
    let cap = build_concave_cap(s)?;
    let mut c = line_arrangement(&cap, SeedVariant::CommonPoint);
    for (j, arm) in cap.arms().iter().enumerate() {
        let mut cur = c.find_cap(j, 0).expect("seed has every line");
        for (pos, &w) in arm.iter().enumerate() {
            while c.square(cur) > w {
                c = blow_up(&c, Site::Generic(cur)).expect("generic blow-up always applies");
            }
            if pos + 1 < arm.len() {
                // the newest exceptional strand is the next component
                let last = c.strands.len() - 1;
                c.strands[last].role = Role::Cap { arm: j, pos: pos + 1 };
                cur = last;
            }
        }
    }
    Ok(c)
}
