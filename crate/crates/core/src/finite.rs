//! Finite groups given by multiplication tables, with bitset subsets.
//!
//! Everything here is brute force. It is meant for groups of a few
//! hundred elements at most.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// A subset of `0..n` stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ElemSet {
    words: Vec<u64>,
}

impl ElemSet {
    pub fn empty(n: usize) -> Self {
        ElemSet { words: vec![0; n.div_ceil(64)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i as u32);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = u32>>(n: usize, items: I) -> Self {
        let mut s = Self::empty(n);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: u32) {
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: u32) {
        self.words[(i / 64) as usize] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: u32) -> bool {
        self.words
            .get((i / 64) as usize)
            .is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn is_subset(&self, other: &ElemSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &ElemSet) -> ElemSet {
        ElemSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn union(&self, other: &ElemSet) -> ElemSet {
        ElemSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(k as u32 * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Canonical ordering for subgroup lists: by size, then by contents.
pub fn sort_sets(sets: &mut [ElemSet]) {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    n: usize,
    table: Vec<u32>,
    inverse: Vec<u32>,
    identity: u32,
    labels: Vec<String>,
}

impl FiniteGroup {
    /// Builds a group from a full multiplication table and checks the axioms.
    pub fn from_table(labels: Vec<String>, rows: Vec<Vec<u32>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty group".into()));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGroup("table is not square".into()));
        }
        if rows.iter().flatten().any(|&x| x as usize >= n) {
            return Err(Error::InvalidGroup("table entry out of range".into()));
        }
        let table: Vec<u32> = rows.into_iter().flatten().collect();
        let g = Self::from_raw(labels, table)?;
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                let ab = g.mul(a, b);
                for c in 0..n as u32 {
                    if g.mul(ab, c) != g.mul(a, g.mul(b, c)) {
                        return Err(Error::InvalidGroup(format!(
                            "not associative at ({}, {}, {})",
                            g.labels[a as usize], g.labels[b as usize], g.labels[c as usize]
                        )));
                    }
                }
            }
        }
        Ok(g)
    }

    /// Identity and inverses are checked; associativity is trusted.
    fn from_raw(labels: Vec<String>, table: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::InvalidGroup(format!("duplicate label `{l}`")));
            }
        }
        let at = |a: usize, b: usize| table[a * n + b];
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| at(e, x) == x as u32 && at(x, e) == x as u32))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))? as u32;
        let mut inverse = vec![0u32; n];
        for (a, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..n)
                .find(|&b| at(a, b) == identity && at(b, a) == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("`{}` has no inverse", labels[a])))?
                as u32;
        }
        for a in 0..n {
            let row: HashSet<u32> = (0..n).map(|b| at(a, b)).collect();
            if row.len() != n {
                return Err(Error::InvalidGroup("table row is not a permutation".into()));
            }
        }
        Ok(FiniteGroup { n, table, inverse, identity, labels })
    }

    /// Closes `gens` under `mul` and tabulates the result. Elements are
    /// sorted, so the smallest element should be the identity if the
    /// caller wants index 0 to be the identity.
    pub fn from_closure<T, M, L>(gens: &[T], identity: T, mul: M, label: L, bound: usize) -> Result<(Self, Vec<T>)>
    where
        T: Clone + Eq + Hash + Ord,
        M: Fn(&T, &T) -> T,
        L: Fn(&T) -> String,
    {
        let mut seen: HashSet<T> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(identity.clone());
        queue.push_back(identity);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = mul(&x, g);
                if seen.insert(y.clone()) {
                    if seen.len() > bound {
                        return Err(Error::SizeBound(bound));
                    }
                    queue.push_back(y);
                }
            }
        }
        let mut elems: Vec<T> = seen.into_iter().collect();
        elems.sort();
        Ok((Self::tabulate(&elems, mul, label)?, elems))
    }

    /// Tabulates an already closed, sorted element list.
    pub fn tabulate<T, M, L>(elems: &[T], mul: M, label: L) -> Result<Self>
    where
        T: Clone + Eq + Hash,
        M: Fn(&T, &T) -> T,
        L: Fn(&T) -> String,
    {
        let index: HashMap<&T, u32> = elems.iter().enumerate().map(|(i, e)| (e, i as u32)).collect();
        let n = elems.len();
        let mut table = Vec::with_capacity(n * n);
        for a in elems {
            for b in elems {
                let c = mul(a, b);
                let i = index
                    .get(&c)
                    .ok_or_else(|| Error::InvalidGroup("element set is not closed".into()))?;
                table.push(*i);
            }
        }
        Self::from_raw(elems.iter().map(label).collect(), table)
    }

    /// Permutation group on `degree` points generated by image vectors
    /// (0-based). Labels use 1-based cycle notation.
    pub fn from_permutations(degree: usize, gens: &[Vec<usize>]) -> Result<Self> {
        for g in gens {
            let mut sorted = g.clone();
            sorted.sort();
            if g.len() != degree || sorted != (0..degree).collect::<Vec<_>>() {
                return Err(Error::InvalidGroup(format!("{g:?} is not a permutation of degree {degree}")));
            }
        }
        let id: Vec<usize> = (0..degree).collect();
        let compose = |a: &Vec<usize>, b: &Vec<usize>| a.iter().map(|&i| b[i]).collect::<Vec<_>>();
        let (g, _) = Self::from_closure(gens, id, compose, |p| cycle_label(p), 1 << 16)?;
        Ok(g)
    }

    pub fn symmetric(n: usize) -> Self {
        let mut gens = vec![];
        if n >= 2 {
            let mut t: Vec<usize> = (0..n).collect();
            t.swap(0, 1);
            gens.push(t);
            gens.push((0..n).map(|i| (i + 1) % n).collect());
        }
        Self::from_permutations(n, &gens).expect("valid permutations")
    }

    pub fn alternating(n: usize) -> Self {
        let mut gens = vec![];
        for k in 0..n.saturating_sub(2) {
            let mut c: Vec<usize> = (0..n).collect();
            c[k] = k + 1;
            c[k + 1] = k + 2;
            c[k + 2] = k;
            gens.push(c);
        }
        Self::from_permutations(n, &gens).expect("valid permutations")
    }

    /// Symmetries of a regular `n`-gon, order `2n`.
    pub fn dihedral(n: usize) -> Self {
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        Self::from_permutations(n, &[rot, refl]).expect("valid permutations")
    }

    pub fn cyclic(n: usize) -> Self {
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        Self::from_permutations(n, &[rot]).expect("valid permutations")
    }

    /// The quaternion group of order 8 with labels 1, -1, i, -i, ...
    pub fn quaternion() -> Self {
        // (sign, unit) with unit 0..4 = 1, i, j, k
        fn mul(a: &(u8, u8), b: &(u8, u8)) -> (u8, u8) {
            const T: [[(u8, u8); 4]; 4] = [
                [(0, 0), (0, 1), (0, 2), (0, 3)],
                [(0, 1), (1, 0), (0, 3), (1, 2)],
                [(0, 2), (1, 3), (1, 0), (0, 1)],
                [(0, 3), (0, 2), (1, 1), (1, 0)],
            ];
            let (s, u) = T[a.1 as usize][b.1 as usize];
            ((a.0 + b.0 + s) % 2, u)
        }
        let names = ["1", "i", "j", "k"];
        let mut elems = vec![];
        for u in 0..4u8 {
            for s in 0..2u8 {
                elems.push((s, u));
            }
        }
        Self::tabulate(&elems, mul, |&(s, u)| format!("{}{}", if s == 1 { "-" } else { "" }, names[u as usize]))
            .expect("quaternion table")
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.n + b as usize]
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    /// `g⁻¹ x g`
    pub fn conj(&self, x: u32, g: u32) -> u32 {
        self.mul(self.mul(self.inv(g), x), g)
    }

    pub fn label(&self, a: u32) -> &str {
        &self.labels[a as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.n as u32
    }

    pub fn elem_order(&self, a: u32) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn full(&self) -> ElemSet {
        ElemSet::full(self.n)
    }

    pub fn trivial(&self) -> ElemSet {
        ElemSet::from_iter(self.n, [self.identity])
    }

    pub fn set<I: IntoIterator<Item = u32>>(&self, items: I) -> ElemSet {
        ElemSet::from_iter(self.n, items)
    }

    pub fn set_of_labels(&self, labels: &[&str]) -> Result<ElemSet> {
        let mut s = ElemSet::empty(self.n);
        for l in labels {
            s.insert(self.find(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?);
        }
        Ok(s)
    }

    pub fn closure<I: IntoIterator<Item = u32>>(&self, gens: I) -> ElemSet {
        let gens: Vec<u32> = gens.into_iter().collect();
        let mut set = self.trivial();
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in &gens {
                let y = self.mul(x, g);
                if !set.contains(y) {
                    set.insert(y);
                    queue.push_back(y);
                }
            }
        }
        set
    }

    pub fn is_subgroup(&self, h: &ElemSet) -> bool {
        h.contains(self.identity) && h.iter().all(|a| h.iter().all(|b| h.contains(self.mul(a, b))))
    }

    pub fn conj_set(&self, h: &ElemSet, g: u32) -> ElemSet {
        self.set(h.iter().map(|x| self.conj(x, g)))
    }

    pub fn normalizer(&self, h: &ElemSet, within: &ElemSet) -> ElemSet {
        self.set(within.iter().filter(|&g| h.iter().all(|x| h.contains(self.conj(x, g)))))
    }

    pub fn centralizer(&self, h: &ElemSet, within: &ElemSet) -> ElemSet {
        self.set(within.iter().filter(|&g| h.iter().all(|x| self.mul(x, g) == self.mul(g, x))))
    }

    pub fn center(&self, h: &ElemSet) -> ElemSet {
        self.centralizer(h, h)
    }

    /// `{g ∈ within : h^g ⊆ k}`
    pub fn transporter(&self, h: &ElemSet, k: &ElemSet, within: &ElemSet) -> ElemSet {
        self.set(within.iter().filter(|&g| h.iter().all(|x| k.contains(self.conj(x, g)))))
    }

    /// A small generating set, chosen greedily in element order.
    pub fn generators(&self, h: &ElemSet) -> Vec<u32> {
        let mut gens = vec![];
        let mut span = self.trivial();
        for x in h.iter() {
            if !span.contains(x) {
                gens.push(x);
                span = self.closure(gens.iter().copied());
            }
        }
        gens
    }

    /// Every subgroup of the subgroup `within`, in canonical order.
    pub fn subgroups(&self, within: &ElemSet) -> Vec<ElemSet> {
        let mut cyclic: Vec<(ElemSet, u32)> = vec![];
        let mut seen_cyclic = HashSet::new();
        for g in within.iter() {
            let c = self.closure([g]);
            if seen_cyclic.insert(c.clone()) {
                cyclic.push((c, g));
            }
        }
        let mut found: HashSet<ElemSet> = HashSet::new();
        let mut list: Vec<(ElemSet, Vec<u32>)> = vec![];
        for (c, g) in &cyclic {
            if found.insert(c.clone()) {
                list.push((c.clone(), vec![*g]));
            }
        }
        let mut i = 0;
        while i < list.len() {
            let (h, gens) = list[i].clone();
            for (c, g) in &cyclic {
                if c.is_subset(&h) {
                    continue;
                }
                let mut gs = gens.clone();
                gs.push(*g);
                let j = self.closure(gs.iter().copied());
                if found.insert(j.clone()) {
                    list.push((j, gs));
                }
            }
            i += 1;
        }
        let mut out: Vec<ElemSet> = list.into_iter().map(|(s, _)| s).collect();
        sort_sets(&mut out);
        out
    }

    pub fn is_p_group(&self, h: &ElemSet, p: u32) -> bool {
        is_power_of(h.len(), p)
    }

    pub fn sylow_subgroups(&self, within: &ElemSet, p: u32) -> Vec<ElemSet> {
        let target = p_part(within.len(), p);
        self.subgroups(within).into_iter().filter(|h| h.len() == target).collect()
    }

    /// Largest normal p-subgroup: the intersection of all Sylow subgroups.
    pub fn o_p(&self, within: &ElemSet, p: u32) -> ElemSet {
        self.sylow_subgroups(within, p)
            .into_iter()
            .fold(within.clone(), |acc, s| acc.intersection(&s))
    }

    /// `C_G(O_p(G)) ≤ O_p(G)`
    pub fn has_characteristic_p(&self, within: &ElemSet, p: u32) -> bool {
        let op = self.o_p(within, p);
        self.centralizer(&op, within).is_subset(&op)
    }

    /// The subgroup `h` as a group in its own right, with the embedding.
    pub fn subgroup_as_group(&self, h: &ElemSet) -> (FiniteGroup, Vec<u32>) {
        let elems = h.to_vec();
        let g = Self::tabulate(&elems, |a, b| self.mul(*a, *b), |a| self.label(*a).to_string())
            .expect("subgroup is closed");
        (g, elems)
    }

    /// `within / normal`, cosets labelled by their smallest member.
    pub fn quotient(&self, within: &ElemSet, normal: &ElemSet) -> FiniteGroup {
        let rep = |g: u32| normal.iter().map(|x| self.mul(g, x)).min().expect("nonempty");
        let mut reps: Vec<u32> = within.iter().map(rep).collect();
        reps.sort();
        reps.dedup();
        Self::tabulate(&reps, |a, b| rep(self.mul(*a, *b)), |a| format!("{}N", self.label(*a)))
            .expect("normal subgroup gives a quotient")
    }

    /// Brute-force isomorphism test between two subgroups.
    pub fn are_isomorphic(&self, a: &ElemSet, other: &FiniteGroup, b: &ElemSet) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let gens = self.generators(a);
        let targets: Vec<Vec<u32>> = gens
            .iter()
            .map(|&g| {
                let k = self.elem_order(g);
                b.iter().filter(|&y| other.elem_order(y) == k).collect()
            })
            .collect();
        let mut choice = vec![0usize; gens.len()];
        if targets.iter().any(|t| t.is_empty()) {
            return false;
        }
        loop {
            let imgs: Vec<u32> = choice.iter().zip(&targets).map(|(&c, t)| t[c]).collect();
            if self.extend_hom(&gens, &imgs, other).is_some_and(|m| {
                let img: HashSet<u32> = m.values().copied().collect();
                img.len() == a.len()
            }) {
                return true;
            }
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return false;
                }
                choice[k] += 1;
                if choice[k] < targets[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    /// Extends generator images to a homomorphism if consistent.
    pub fn extend_hom(&self, gens: &[u32], imgs: &[u32], other: &FiniteGroup) -> Option<HashMap<u32, u32>> {
        let mut map = HashMap::from([(self.identity, other.identity)]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            let fx = map[&x];
            for (&g, &fg) in gens.iter().zip(imgs) {
                let y = self.mul(x, g);
                let fy = other.mul(fx, fg);
                match map.get(&y) {
                    Some(&v) if v != fy => return None,
                    Some(_) => {}
                    None => {
                        map.insert(y, fy);
                        queue.push_back(y);
                    }
                }
            }
        }
        Some(map)
    }
}

pub fn cycle_label(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for start in 0..p.len() {
        if seen[start] || p[start] == start {
            continue;
        }
        let mut cyc = vec![];
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            cyc.push((i + 1).to_string());
            i = p[i];
        }
        out.push('(');
        out.push_str(&cyc.join(","));
        out.push(')');
    }
    if out.is_empty() {
        "()".into()
    } else {
        out
    }
}

pub fn is_power_of(mut n: usize, p: u32) -> bool {
    while n > 1 {
        if n % p as usize != 0 {
            return false;
        }
        n /= p as usize;
    }
    n == 1
}

/// Largest power of `p` dividing `n`.
pub fn p_part(mut n: usize, p: u32) -> usize {
    let mut out = 1;
    while n % p as usize == 0 {
        n /= p as usize;
        out *= p as usize;
    }
    out
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s4_has_thirty_subgroups() {
        let g = FiniteGroup::symmetric(4);
        assert_eq!(g.order(), 24);
        assert_eq!(g.label(g.identity()), "()");
        assert_eq!(g.subgroups(&g.full()).len(), 30);
        let syl = g.sylow_subgroups(&g.full(), 2);
        assert_eq!(syl.len(), 3);
        assert!(syl.iter().all(|s| s.len() == 8));
        assert_eq!(g.o_p(&g.full(), 2).len(), 4);
        assert!(g.has_characteristic_p(&g.full(), 2));
    }

    #[test]
    fn small_groups() {
        assert_eq!(FiniteGroup::dihedral(4).subgroups(&FiniteGroup::dihedral(4).full()).len(), 10);
        let q = FiniteGroup::quaternion();
        assert_eq!(q.subgroups(&q.full()).len(), 6);
        assert_eq!(q.center(&q.full()).len(), 2);
        let a4 = FiniteGroup::alternating(4);
        assert_eq!(a4.order(), 12);
        assert_eq!(a4.sylow_subgroups(&a4.full(), 2).len(), 1);
        assert_eq!(FiniteGroup::cyclic(5).order(), 5);
    }

    #[test]
    fn isomorphism_by_brute_force() {
        let d8 = FiniteGroup::dihedral(4);
        let q = FiniteGroup::quaternion();
        assert!(!d8.are_isomorphic(&d8.full(), &q, &q.full()));
        assert!(d8.are_isomorphic(&d8.full(), &d8, &d8.full()));
        let c4 = d8.closure([d8.find("(1,2,3,4)").unwrap()]);
        let qi = q.closure([q.find("i").unwrap()]);
        assert!(d8.are_isomorphic(&c4, &q, &qi));
    }

    #[test]
    fn table_validation_rejects_non_groups() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(FiniteGroup::from_table(labels.clone(), vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::from_table(labels, vec![vec![0, 1], vec![1, 0]]).is_ok());
    }

    #[test]
    fn quotient_of_s4_by_v() {
        let g = FiniteGroup::symmetric(4);
        let v = g.o_p(&g.full(), 2);
        let q = g.quotient(&g.full(), &v);
        assert_eq!(q.order(), 6);
        assert!(!q.are_isomorphic(&q.full(), &FiniteGroup::cyclic(6), &FiniteGroup::cyclic(6).full()));
    }
}
