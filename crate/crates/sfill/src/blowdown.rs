//! Blowdown templates embedded orthogonally to the cap, the lattice
//! substitution that performs a rational blowdown on homological data, and
//! the resulting relation graph between fillings.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curveconfig::{CurveConfiguration, Role, Strand};
use crate::enumerate::{b2_of, Filling};
use crate::homlattice::{CapKey, HClass};
use crate::plumbing::{gamma_label, gamma_pqr, wahl_chains, BlowdownTemplate, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyFilter {
    All,
    /// Linear chains labelled `C_p` (the `q = 1` Wahl chains).
    Cp,
    Cpq,
    GammaPqr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEmbedding {
    pub template: BlowdownTemplate,
    /// One class per template vertex, in the template's vertex order.
    pub classes: Vec<HClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlowdownError {
    #[error("embedding classes are not independent")]
    Dependent,
    #[error("no re-expression of the cap preserves its intersection data")]
    NoReexpression,
    #[error("configuration has an incomplete cap")]
    IncompleteCap,
}

/// Largest square `s` a class orthogonal to `l` can have in rank `n`:
/// `sum c^2 = s` and `sum c = s - 2` force `(s-2)^2 <= n s`.
pub fn max_weight(n: usize) -> i64 {
    let mut s = 2;
    while (s + 1 - 2) * (s + 1 - 2) <= n as i64 * (s + 1) {
        s += 1;
    }
    s
}

/// Templates with at most `max_vertices` vertices and weights at most `smax`.
pub fn templates(filter: FamilyFilter, max_vertices: usize, smax: i64) -> Vec<BlowdownTemplate> {
    let fits = |t: &BlowdownTemplate| t.graph.weights().iter().all(|&w| -w <= smax);
    let mut out = Vec::new();
    if matches!(filter, FamilyFilter::All | FamilyFilter::Cpq | FamilyFilter::Cp) {
        for t in wahl_chains(max_vertices) {
            let Family::Cpq { p, q } = t.family else { unreachable!() };
            match filter {
                FamilyFilter::Cp if q == 1 => out.push(BlowdownTemplate { family: Family::Cp { p }, ..t }),
                FamilyFilter::Cp => {}
                _ => out.push(t),
            }
        }
    }
    if matches!(filter, FamilyFilter::All | FamilyFilter::GammaPqr) {
        let m = max_vertices as i64;
        for p in 0..=m {
            for q in 0..=m {
                for r in 0..=m {
                    if 4 + p + q + r <= m && gamma_label(p, q, r) == (p, q, r) {
                        out.push(gamma_pqr(p, q, r).unwrap());
                    }
                }
            }
        }
    }
    out.into_iter().filter(fits).collect()
}

/// Coefficient vectors `c` (class `-sum c_i e_i`) of square `-s` with
/// `K.x = s - 2`, orthogonal to every row.
fn orthogonal_vectors(n: usize, s: i64, rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    // suffix norms of each row bound the remaining partial dot products
    let tail: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| {
            let mut t = vec![0; n + 1];
            for i in (0..n).rev() {
                t[i] = t[i + 1] + r[i] * r[i];
            }
            t
        })
        .collect();
    let m = (s as f64).sqrt() as i64;
    let mut out = Vec::new();
    let mut c = vec![0i64; n];
    let mut dots = vec![0i64; rows.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        rem: i64,
        sum: i64,
        s: i64,
        m: i64,
        c: &mut Vec<i64>,
        dots: &mut Vec<i64>,
        rows: &[Vec<i64>],
        tail: &[Vec<i64>],
        out: &mut Vec<Vec<i64>>,
    ) {
        let n = c.len();
        let left = (n - i) as i64;
        let need = s - 2 - sum;
        if need * need > rem * left {
            return;
        }
        for (d, t) in dots.iter().zip(tail) {
            if d * d > rem * t[i] {
                return;
            }
        }
        if rem == 0 {
            if need == 0 && dots.iter().all(|&d| d == 0) {
                out.push(c.clone());
            }
            return;
        }
        if i == n {
            return;
        }
        for v in -m..=m {
            if v * v > rem {
                continue;
            }
            c[i] = v;
            for (d, r) in dots.iter_mut().zip(rows) {
                *d += v * r[i];
            }
            rec(i + 1, rem - v * v, sum + v, s, m, c, dots, rows, tail, out);
            for (d, r) in dots.iter_mut().zip(rows) {
                *d -= v * r[i];
            }
            c[i] = 0;
        }
    }
    rec(0, s, 0, s, m, &mut c, &mut dots, rows, &tail, &mut out);
    out
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cap_rows(c: &CurveConfiguration) -> Vec<HClass> {
    c.strands.iter().filter(|s| s.role != Role::Exceptional).map(|s| s.class.clone()).collect()
}

/// All embeddings of the filtered templates orthogonal to the cap, one per
/// (template, class set).
pub fn find_blowdown_embeddings(c: &CurveConfiguration, filter: FamilyFilter) -> Vec<ChainEmbedding> {
    let n = c.ambient_n;
    let b2 = b2_of(c).max(0) as usize;
    let rows: Vec<Vec<i64>> = cap_rows(c).into_iter().map(|h| h.e).collect();
    let mut cache: BTreeMap<i64, Vec<Vec<i64>>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in templates(filter, b2, max_weight(n)) {
        let weights = t.graph.weights();
        let edges = t.graph.edges();
        let adjacent = |u: usize, v: usize| edges.contains(&(u, v)) || edges.contains(&(v, u));
        for &w in &weights {
            cache.entry(-w).or_insert_with(|| orthogonal_vectors(n, -w, &rows));
        }
        let cands: Vec<&Vec<Vec<i64>>> = weights.iter().map(|w| &cache[&-w]).collect();
        let mut chosen: Vec<&Vec<i64>> = Vec::new();
        let mut found: Vec<Vec<Vec<i64>>> = Vec::new();
        fn rec<'a>(
            v: usize,
            cands: &[&'a Vec<Vec<i64>>],
            adjacent: &dyn Fn(usize, usize) -> bool,
            chosen: &mut Vec<&'a Vec<i64>>,
            found: &mut Vec<Vec<Vec<i64>>>,
        ) {
            if v == cands.len() {
                found.push(chosen.iter().map(|x| (*x).clone()).collect());
                return;
            }
            for x in cands[v].iter() {
                // pairing of -sum c e classes is -dot
                if (0..v).all(|u| -dot(x, chosen[u]) == adjacent(u, v) as i64) {
                    chosen.push(x);
                    rec(v + 1, cands, adjacent, chosen, found);
                    chosen.pop();
                }
            }
        }
        rec(0, &cands, &adjacent, &mut chosen, &mut found);
        for cl in found {
            let set: BTreeSet<Vec<i64>> = cl.iter().cloned().collect();
            if seen.insert((t.family, set)) {
                out.push(ChainEmbedding {
                    template: t.clone(),
                    classes: cl.into_iter().map(|e| HClass { l: 0, e }).collect(),
                });
            }
        }
    }
    out
}

/// Integer basis of `{x in Z^s : m x = 0}` by unimodular row reduction of
/// `[m^T | I]`.
fn integer_kernel(m: &[Vec<i64>], s: usize) -> Vec<Vec<i64>> {
    let k = m.len();
    let mut a: Vec<Vec<i64>> = (0..s)
        .map(|j| {
            let mut row: Vec<i64> = (0..k).map(|i| m[i][j]).collect();
            row.extend((0..s).map(|t| (t == j) as i64));
            row
        })
        .collect();
    let mut r = 0;
    for i in 0..k {
        while let Some(j0) = (r..s).filter(|&j| a[j][i] != 0).min_by_key(|&j| a[j][i].abs()) {
            a.swap(r, j0);
            let mut done = true;
            for j in r + 1..s {
                if a[j][i] != 0 {
                    let q = a[j][i].div_euclid(a[r][i]);
                    let pivot = a[r].clone();
                    for (x, y) in a[j].iter_mut().zip(&pivot) {
                        *x -= q * y;
                    }
                    if a[j][i] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                r += 1;
                break;
            }
        }
    }
    a[r..].iter().map(|row| row[k..].to_vec()).collect()
}

/// Pairwise size reduction until no vector can be shortened by another.
fn reduce_basis(mut b: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    loop {
        let mut changed = false;
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i == j {
                    continue;
                }
                let nj = dot(&b[j], &b[j]);
                let d = dot(&b[i], &b[j]);
                // nearest integer to d/nj
                let q = (2 * d + nj).div_euclid(2 * nj);
                if q != 0 {
                    let cand: Vec<i64> = b[i].iter().zip(&b[j]).map(|(x, y)| x - q * y).collect();
                    if dot(&cand, &cand) < dot(&b[i], &b[i]) {
                        b[i] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            b.sort_by_key(|v| (dot(v, v), v.clone()));
            return b;
        }
    }
}

fn gcd128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer coordinates of `v` in the basis, if `v` lies in its span.
fn coordinates(basis: &[Vec<i64>], v: &[i64]) -> Option<Vec<i64>> {
    let t = basis.len();
    // normal equations G x = B v over exact fractions (num, den)
    let mut a: Vec<Vec<(i128, i128)>> = (0..t)
        .map(|i| {
            let mut row: Vec<(i128, i128)> = (0..t).map(|j| (dot(&basis[i], &basis[j]) as i128, 1)).collect();
            row.push((dot(&basis[i], v) as i128, 1));
            row
        })
        .collect();
    let norm = |(n, d): (i128, i128)| {
        let g = gcd128(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        (s * n / g, s * d / g)
    };
    for i in 0..t {
        let p = (i..t).find(|&j| a[j][i].0 != 0)?;
        a.swap(i, p);
        let piv = a[i][i];
        for j in 0..t {
            if j == i || a[j][i].0 == 0 {
                continue;
            }
            // f = a[j][i] / piv
            let f = norm((a[j][i].0 * piv.1, a[j][i].1 * piv.0));
            for c in i..=t {
                let x = a[j][c];
                let y = a[i][c];
                let fy = norm((f.0 * y.0, f.1 * y.1));
                a[j][c] = norm((x.0 * fy.1 - fy.0 * x.1, x.1 * fy.1));
            }
        }
    }
    let mut x = Vec::with_capacity(t);
    for i in 0..t {
        let (n, d) = norm((a[i][t].0 * a[i][i].1, a[i][t].1 * a[i][i].0));
        if d != 1 {
            return None;
        }
        x.push(n as i64);
    }
    // the normal equations give a projection; make sure v is really in the span
    let back: Vec<i64> = (0..v.len()).map(|c| (0..t).map(|i| x[i] * basis[i][c]).sum()).collect();
    (back == v).then_some(x)
}

fn vectors_with(t: usize, norm: i64, sum: i64) -> Vec<Vec<i64>> {
    let m = (norm as f64).sqrt() as i64;
    let mut out = Vec::new();
    let mut c = vec![0i64; t];
    fn rec(i: usize, rem: i64, s: i64, target: i64, m: i64, c: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let left = (c.len() - i) as i64;
        if (target - s) * (target - s) > rem * left {
            return;
        }
        if i == c.len() {
            if rem == 0 && s == target {
                out.push(c.clone());
            }
            return;
        }
        for v in -m..=m {
            if v * v <= rem {
                c[i] = v;
                rec(i + 1, rem - v * v, s + v, target, m, c, out);
            }
        }
        c[i] = 0;
    }
    rec(0, norm, 0, sum, m, &mut c, &mut out);
    out
}

/// Every distinct (up to equivalence) re-expression of the cap after
/// replacing the template by a rational ball, sorted by canonical key.
///
/// The template lives on a set `S` of basis indices. Its orthogonal
/// complement inside `Z^S` is a lattice of rank `t = |S| - k`; each cap
/// class restricted to `S` lies in it. That lattice is mapped isometrically
/// into a fresh `Z^t`, keeping coefficient sums so that `K . x` is
/// unchanged, and the cap classes are carried along.
pub fn rational_blowdown_all(
    c: &CurveConfiguration,
    emb: &ChainEmbedding,
    symmetries: &[Vec<usize>],
) -> Result<Vec<(CapKey, CurveConfiguration)>, BlowdownError> {
    c.to_homological_data().ok_or(BlowdownError::IncompleteCap)?;
    let n = c.ambient_n;
    let supp: Vec<usize> = (0..n).filter(|&i| emb.classes.iter().any(|x| x.e[i] != 0)).collect();
    let keep: Vec<usize> = (0..n).filter(|i| !supp.contains(i)).collect();
    let k = emb.classes.len();
    if supp.len() < k {
        return Err(BlowdownError::Dependent);
    }
    let t = supp.len() - k;
    let m: Vec<Vec<i64>> = emb.classes.iter().map(|x| supp.iter().map(|&i| x.e[i]).collect()).collect();
    let kernel = integer_kernel(&m, supp.len());
    if kernel.len() != t {
        return Err(BlowdownError::Dependent);
    }
    let basis = reduce_basis(kernel);

    let caps: Vec<&Strand> = c.strands.iter().filter(|s| s.role != Role::Exceptional).collect();
    let coords: Vec<Vec<i64>> = caps
        .iter()
        .map(|s| {
            let part: Vec<i64> = supp.iter().map(|&i| s.class.e[i]).collect();
            if t == 0 {
                return if part.iter().all(|&x| x == 0) { Some(vec![]) } else { None };
            }
            coordinates(&basis, &part)
        })
        .collect::<Option<_>>()
        .ok_or(BlowdownError::NoReexpression)?;

    let cands: Vec<Vec<Vec<i64>>> =
        basis.iter().map(|b| vectors_with(t, dot(b, b), b.iter().sum())).collect();
    let mut images: Vec<&Vec<i64>> = Vec::new();
    let mut results: BTreeMap<CapKey, CurveConfiguration> = BTreeMap::new();
    let new_n = n - k;

    let build = |images: &[&Vec<i64>]| -> CurveConfiguration {
        let strands = caps
            .iter()
            .zip(&coords)
            .map(|(s, co)| {
                let mut e: Vec<i64> = keep.iter().map(|&i| s.class.e[i]).collect();
                e.extend((0..t).map(|j| (0..t).map(|a| co[a] * images[a][j]).sum::<i64>()));
                Strand { class: HClass { l: s.class.l, e }, role: s.role }
            })
            .collect();
        CurveConfiguration { ambient_n: new_n, cap: c.cap.clone(), strands }
    };

    fn rec<'a>(
        m: usize,
        basis: &[Vec<i64>],
        cands: &'a [Vec<Vec<i64>>],
        images: &mut Vec<&'a Vec<i64>>,
        emit: &mut dyn FnMut(&[&'a Vec<i64>]),
    ) {
        if m == basis.len() {
            emit(images);
            return;
        }
        for x in &cands[m] {
            if (0..m).all(|a| dot(x, images[a]) == dot(&basis[m], &basis[a])) {
                images.push(x);
                rec(m + 1, basis, cands, images, emit);
                images.pop();
            }
        }
    }
    let mut emit = |imgs: &[&Vec<i64>]| {
        let cfg = build(imgs);
        if let Some(h) = cfg.to_homological_data() {
            results.entry(h.canonical_key(symmetries)).or_insert(cfg);
        }
    };
    rec(0, &basis, &cands, &mut images, &mut emit);
    if results.is_empty() {
        return Err(BlowdownError::NoReexpression);
    }
    Ok(results.into_iter().collect())
}

/// The re-expression with the least canonical key.
pub fn rational_blowdown(
    c: &CurveConfiguration,
    emb: &ChainEmbedding,
    symmetries: &[Vec<usize>],
) -> Result<CurveConfiguration, BlowdownError> {
    Ok(rational_blowdown_all(c, emb, symmetries)?.swap_remove(0).1)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlowdownEdge {
    pub source: usize,
    pub target: usize,
    pub template: Family,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowdownGraph {
    pub edges: Vec<BlowdownEdge>,
    pub root: Option<usize>,
    pub reachable: Vec<bool>,
    /// Blowdown results that matched no catalog entry.
    pub unmatched: usize,
}

impl BlowdownGraph {
    pub fn has_cycle(&self) -> bool {
        let n = self.reachable.len();
        let mut indeg = vec![0; n];
        for e in &self.edges {
            indeg[e.target] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for e in self.edges.iter().filter(|e| e.source == v) {
                indeg[e.target] -= 1;
                if indeg[e.target] == 0 {
                    queue.push_back(e.target);
                }
            }
        }
        seen != n
    }

    pub fn to_dot(&self, labels: &[String]) -> String {
        let mut s = String::from("digraph blowdowns {\n");
        for (i, l) in labels.iter().enumerate() {
            let style = if Some(i) == self.root { ", peripheries=2" } else { "" };
            s.push_str(&format!("  f{i} [label=\"{l}\"{style}];\n"));
        }
        for e in &self.edges {
            s.push_str(&format!("  f{} -> f{} [label=\"{}\"];\n", e.source, e.target, e.template));
        }
        s.push_str("}\n");
        s
    }
}

/// Edges `A -> B` whenever an embedding in `A` blows down to `B`;
/// reachability is measured from `root`.
pub fn blowdown_graph(fillings: &[Filling], root: Option<usize>, symmetries: &[Vec<usize>]) -> BlowdownGraph {
    let index: BTreeMap<&CapKey, usize> = fillings.iter().enumerate().map(|(i, f)| (&f.key, i)).collect();
    let per_source: Vec<(BTreeSet<BlowdownEdge>, usize)> = fillings
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut edges = BTreeSet::new();
            let mut unmatched = 0;
            for emb in find_blowdown_embeddings(&f.config, FamilyFilter::All) {
                let Ok(results) = rational_blowdown_all(&f.config, &emb, symmetries) else {
                    unmatched += 1;
                    continue;
                };
                for (key, _) in results {
                    match index.get(&key) {
                        Some(&j) => {
                            edges.insert(BlowdownEdge { source: i, target: j, template: emb.template.family });
                        }
                        None => unmatched += 1,
                    }
                }
            }
            (edges, unmatched)
        })
        .collect();
    let mut edges = Vec::new();
    let mut unmatched = 0;
    for (e, u) in per_source {
        edges.extend(e);
        unmatched += u;
    }
    let mut reachable = vec![false; fillings.len()];
    if let Some(r) = root {
        reachable[r] = true;
        let mut queue = VecDeque::from([r]);
        while let Some(v) = queue.pop_front() {
            for e in edges.iter().filter(|e| e.source == v) {
                if !reachable[e.target] {
                    reachable[e.target] = true;
                    queue.push_back(e.target);
                }
            }
        }
    }
    BlowdownGraph { edges, root, reachable, unmatched }
}
