//! Discrete p-toral groups as split extensions `T ⋊ F`.
//!
//! The torus `T = (Z/p^∞)^r` is stored with fixed precision: a coordinate
//! is a numerator over `p^K` where `p^K ≤ 2^60`. Element `(t, f)` acts on
//! the right, and the finite part acts on row vectors by `t ↦ t·A_f`.
//!
//! Subgroups come in two exact shapes. A finite subgroup is an explicit
//! sorted element list. A torus subgroup is the full preimage of a
//! subgroup `K ≤ F`, i.e. `T ⋊ K`. Normalizers and centralizers are
//! computed exactly in both shapes.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::finite::{ElemSet, FiniteGroup};

const PRECISION_BITS: u32 = 60;
/// Extra levels examined when a normalizer is finite but not known in advance.
const LIFT_LEVELS: u32 = 6;
pub const DEFAULT_SIZE_BOUND: usize = 1 << 16;

/// Largest `K` with `p^K ≤ 2^60`.
pub fn precision(p: u32) -> u32 {
    let mut k = 0;
    let mut v: u128 = 1;
    while v * p as u128 <= 1u128 << PRECISION_BITS {
        v *= p as u128;
        k += 1;
    }
    k
}

fn modulus(p: u32) -> u64 {
    (p as u64).pow(precision(p))
}

fn valuation(mut c: u64, p: u32) -> u32 {
    let mut v = 0;
    while c != 0 && c % p as u64 == 0 {
        c /= p as u64;
        v += 1;
    }
    v
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TorusElement {
    p: u32,
    coords: Vec<u64>,
}

impl TorusElement {
    pub fn zero(p: u32, r: usize) -> Self {
        TorusElement { p, coords: vec![0; r] }
    }

    /// Parses coordinates such as `"1/4"`, `"-3/8"` or `"0"`.
    pub fn parse(p: u32, coords: &[&str]) -> Result<Self> {
        let n = modulus(p);
        let k = precision(p);
        let mut out = Vec::with_capacity(coords.len());
        for c in coords {
            let bad = || Error::BadRational(c.to_string());
            let (num, den) = match c.split_once('/') {
                Some((a, b)) => (
                    a.trim().parse::<i128>().map_err(|_| bad())?,
                    b.trim().parse::<u64>().map_err(|_| bad())?,
                ),
                None => (c.trim().parse::<i128>().map_err(|_| bad())?, 1),
            };
            if den == 0 {
                return Err(bad());
            }
            let mut e = 0;
            let mut d = den;
            while d > 1 && d % p as u64 == 0 {
                d /= p as u64;
                e += 1;
            }
            if d != 1 || e > k {
                return Err(bad());
            }
            let scale = (p as i128).pow(k - e);
            out.push((num * scale).rem_euclid(n as i128) as u64);
        }
        Ok(TorusElement { p, coords: out })
    }

    /// The element with a single coordinate `a/p^level` in slot `i`.
    pub fn basis(p: u32, r: usize, i: usize, level: u32) -> Self {
        let mut t = Self::zero(p, r);
        t.coords[i] = (p as u64).pow(precision(p) - level);
        t
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Smallest `k` with `p^k · t = 0`.
    pub fn level(&self) -> u32 {
        let k = precision(self.p);
        self.coords
            .iter()
            .filter(|&&c| c != 0)
            .map(|&c| k - valuation(c, self.p))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &TorusElement) -> TorusElement {
        let n = modulus(self.p);
        TorusElement {
            p: self.p,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| (a + b) % n).collect(),
        }
    }

    pub fn neg(&self) -> TorusElement {
        let n = modulus(self.p);
        TorusElement {
            p: self.p,
            coords: self.coords.iter().map(|&a| (n - a) % n).collect(),
        }
    }

    /// `t ↦ t·M` for a matrix already reduced mod `p^K`.
    fn act(&self, m: &[Vec<u64>]) -> TorusElement {
        let n = modulus(self.p) as u128;
        let r = self.coords.len();
        let coords = (0..r)
            .map(|j| {
                let mut s: u128 = 0;
                for i in 0..r {
                    s = (s + self.coords[i] as u128 * m[i][j] as u128) % n;
                }
                s as u64
            })
            .collect();
        TorusElement { p: self.p, coords }
    }

    pub fn coordinate_strings(&self) -> Vec<String> {
        let k = precision(self.p);
        self.coords
            .iter()
            .map(|&c| {
                if c == 0 {
                    return "0".to_string();
                }
                let v = valuation(c, self.p);
                let num = c / (self.p as u64).pow(v);
                format!("{}/{}", num, (self.p as u64).pow(k - v))
            })
            .collect()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DPElement {
    finite: u32,
    torus: TorusElement,
}

impl DPElement {
    pub fn finite_index(&self) -> u32 {
        self.finite
    }

    pub fn torus(&self) -> &TorusElement {
        &self.torus
    }

    pub fn level(&self) -> u32 {
        self.torus.level()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct OrderPair {
    pub rank: usize,
    pub index: usize,
}

impl PartialOrd for OrderPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderPair {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rank, self.index).cmp(&(other.rank, other.index))
    }
}

impl fmt::Display for OrderPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rank, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Body {
    Finite(Vec<DPElement>),
    Torus(ElemSet),
}

/// A subgroup of a [`DPGroup`]: either finite, or `T ⋊ K` for `K ≤ F`.
#[derive(Clone, Debug)]
pub struct Subgroup {
    body: Body,
    generators: Vec<DPElement>,
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body
    }
}

impl Eq for Subgroup {}

impl std::hash::Hash for Subgroup {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.body.hash(state)
    }
}

impl Subgroup {
    fn key(&self) -> (bool, usize) {
        match &self.body {
            Body::Finite(e) => (false, e.len()),
            Body::Torus(k) => (true, k.len()),
        }
    }

    pub fn contains_full_torus(&self) -> bool {
        matches!(self.body, Body::Torus(_))
    }

    pub fn generators(&self) -> &[DPElement] {
        &self.generators
    }

    /// Elements of a finite subgroup; `None` for torus subgroups.
    pub fn elements(&self) -> Option<&[DPElement]> {
        match &self.body {
            Body::Finite(e) => Some(e),
            Body::Torus(_) => None,
        }
    }

    /// `K` for a torus subgroup `T ⋊ K`.
    pub fn finite_image(&self) -> Option<&ElemSet> {
        match &self.body {
            Body::Torus(k) => Some(k),
            Body::Finite(_) => None,
        }
    }

    /// Largest level of an element, `None` for torus subgroups.
    pub fn level(&self) -> Option<u32> {
        self.elements().map(|e| e.iter().map(DPElement::level).max().unwrap_or(0))
    }
}

impl PartialOrd for Subgroup {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subgroup {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key()).then_with(|| match (&self.body, &other.body) {
            (Body::Finite(a), Body::Finite(b)) => a.cmp(b),
            (Body::Torus(a), Body::Torus(b)) => a.cmp(b),
            _ => Ordering::Equal,
        })
    }
}

/// The enumerated `p^k`-torsion part of a [`DPGroup`] as a finite group.
#[derive(Clone, Debug)]
pub struct Slice {
    pub level: u32,
    pub group: FiniteGroup,
    pub elements: Vec<DPElement>,
    index: HashMap<DPElement, u32>,
}

impl Slice {
    pub fn index_of(&self, x: &DPElement) -> Option<u32> {
        self.index.get(x).copied()
    }

    pub fn element(&self, i: u32) -> &DPElement {
        &self.elements[i as usize]
    }

    /// Slice indices of the torus `T ∩ slice`.
    pub fn torus_set(&self) -> ElemSet {
        self.group.set(
            self.elements
                .iter()
                .enumerate()
                .filter(|(_, e)| self.is_finite_identity(e))
                .map(|(i, _)| i as u32),
        )
    }

    fn is_finite_identity(&self, e: &DPElement) -> bool {
        self.elements[self.group.identity() as usize].finite == e.finite
    }
}

#[derive(Clone, Debug)]
pub struct Tower {
    pub members: Vec<Subgroup>,
    pub union: Subgroup,
    /// The last member already contained every element of the ambient
    /// group at the working truncation.
    pub cut_by_truncation: bool,
}

#[derive(Clone, Debug)]
pub struct DPGroup {
    prime: u32,
    rank: usize,
    finite: FiniteGroup,
    action: Vec<Vec<Vec<i64>>>,
    reduced: Vec<Vec<Vec<u64>>>,
    trivial_action: Vec<bool>,
    truncation: u32,
}

impl DPGroup {
    /// `action[f]` is the matrix of the finite element with index `f`.
    pub fn new(prime: u32, rank: usize, finite: FiniteGroup, action: Vec<Vec<Vec<i64>>>, truncation: u32) -> Result<Self> {
        if !crate::finite::is_prime(prime) {
            return Err(Error::InvalidGroup(format!("{prime} is not prime")));
        }
        if action.len() != finite.order() {
            return Err(Error::InvalidGroup("action must list a matrix for every finite element".into()));
        }
        for (f, m) in action.iter().enumerate() {
            if m.len() != rank || m.iter().any(|row| row.len() != rank) {
                return Err(Error::InvalidGroup(format!("matrix of `{}` is not {rank}×{rank}", finite.label(f as u32))));
            }
            if rank > 0 && determinant(m) % prime as i128 == 0 {
                return Err(Error::InvalidGroup(format!("matrix of `{}` is not invertible mod {prime}", finite.label(f as u32))));
            }
        }
        let id = identity_matrix(rank);
        if action[finite.identity() as usize] != id {
            return Err(Error::InvalidGroup("identity must act trivially".into()));
        }
        for f in finite.elements() {
            for g in finite.elements() {
                let fg = finite.mul(f, g) as usize;
                if mat_mul(&action[f as usize], &action[g as usize]) != action[fg] {
                    return Err(Error::InvalidGroup(format!(
                        "action is not a homomorphism at ({}, {})",
                        finite.label(f),
                        finite.label(g)
                    )));
                }
            }
        }
        let n = modulus(prime) as i128;
        let reduced = finite
            .elements()
            .map(|f| {
                action[finite.inv(f) as usize]
                    .iter()
                    .map(|row| row.iter().map(|&x| (x as i128).rem_euclid(n) as u64).collect())
                    .collect()
            })
            .collect();
        let trivial_action = action.iter().map(|m| *m == id).collect();
        Ok(DPGroup { prime, rank, finite, action, reduced, trivial_action, truncation })
    }

    /// A finite p-group viewed as a discrete p-toral group of rank 0.
    pub fn finite_only(prime: u32, finite: FiniteGroup) -> Result<Self> {
        let n = finite.order();
        Self::new(prime, 0, finite, vec![vec![]; n], 1)
    }

    /// `T ⋊ C2` of rank 1 where the generator acts by inversion.
    pub fn inversion_extension(prime: u32, truncation: u32) -> Result<Self> {
        let c2 = FiniteGroup::tabulate(&[0u8, 1], |a, b| (a + b) % 2, |a| ["id", "flip"][*a as usize].to_string())?;
        Self::new(prime, 1, c2, vec![vec![vec![1]], vec![vec![-1]]], truncation)
    }

    pub fn with_truncation(&self, truncation: u32) -> Self {
        DPGroup { truncation, ..self.clone() }
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn torus_rank(&self) -> usize {
        self.rank
    }

    pub fn finite_part(&self) -> &FiniteGroup {
        &self.finite
    }

    pub fn action(&self, f: u32) -> &[Vec<i64>] {
        &self.action[f as usize]
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn identity(&self) -> DPElement {
        DPElement { finite: self.finite.identity(), torus: TorusElement::zero(self.prime, self.rank) }
    }

    pub fn element(&self, torus: &[&str], finite: &str) -> Result<DPElement> {
        let f = self.finite.find(finite).ok_or_else(|| Error::UnknownLabel(finite.into()))?;
        let t = TorusElement::parse(self.prime, torus)?;
        self.make(t, f)
    }

    pub fn make(&self, torus: TorusElement, finite: u32) -> Result<DPElement> {
        if torus.p != self.prime || torus.rank() != self.rank || finite as usize >= self.finite.order() {
            return Err(Error::MismatchedOwner);
        }
        Ok(DPElement { finite, torus })
    }

    pub fn torus_element(&self, t: TorusElement) -> Result<DPElement> {
        self.make(t, self.finite.identity())
    }

    fn owns(&self, x: &DPElement) -> bool {
        x.torus.p == self.prime && x.torus.rank() == self.rank && (x.finite as usize) < self.finite.order()
    }

    pub fn multiply(&self, g: &DPElement, h: &DPElement) -> Result<DPElement> {
        if !self.owns(g) || !self.owns(h) {
            return Err(Error::MismatchedOwner);
        }
        Ok(self.mul(g, h))
    }

    /// `(t1,f1)(t2,f2) = (t1 + t2·A_{f1}⁻¹, f1 f2)`
    pub(crate) fn mul(&self, g: &DPElement, h: &DPElement) -> DPElement {
        let torus = if self.trivial_action[g.finite as usize] {
            g.torus.add(&h.torus)
        } else {
            g.torus.add(&h.torus.act(&self.reduced[g.finite as usize]))
        };
        DPElement { finite: self.finite.mul(g.finite, h.finite), torus }
    }

    /// `(t,f)⁻¹ = (−t·A_f, f⁻¹)`
    pub fn inverse(&self, g: &DPElement) -> DPElement {
        let fi = self.finite.inv(g.finite);
        let torus = g.torus.neg().act(&self.reduced[fi as usize]);
        DPElement { finite: fi, torus }
    }

    /// `g⁻¹ x g`
    pub fn conj(&self, x: &DPElement, g: &DPElement) -> DPElement {
        self.mul(&self.mul(&self.inverse(g), x), g)
    }

    pub fn label(&self, x: &DPElement) -> String {
        let f = self.finite.label(x.finite);
        if self.rank == 0 {
            f.to_string()
        } else {
            format!("({};{})", x.torus.coordinate_strings().join(","), f)
        }
    }

    fn finite_subgroup_unchecked(&self, mut elems: Vec<DPElement>, generators: Vec<DPElement>) -> Subgroup {
        elems.sort();
        elems.dedup();
        Subgroup { body: Body::Finite(elems), generators }
    }

    /// `T ⋊ K`. For rank 0 this is the finite subgroup `K`.
    pub fn torus_subgroup(&self, k: &ElemSet) -> Result<Subgroup> {
        if !self.finite.is_subgroup(k) {
            return Err(Error::NotSubgroup("finite image is not a subgroup".into()));
        }
        Ok(self.torus_subgroup_unchecked(k.clone()))
    }

    fn torus_subgroup_unchecked(&self, k: ElemSet) -> Subgroup {
        let sections: Vec<DPElement> = k
            .iter()
            .map(|f| DPElement { finite: f, torus: TorusElement::zero(self.prime, self.rank) })
            .collect();
        if self.rank == 0 {
            return self.finite_subgroup_unchecked(sections.clone(), sections);
        }
        let mut generators: Vec<DPElement> =
            (0..self.rank).map(|i| self.torus_element(TorusElement::basis(self.prime, self.rank, i, 1)).unwrap()).collect();
        generators.extend(sections.into_iter().filter(|e| e.finite != self.finite.identity()));
        Subgroup { body: Body::Torus(k), generators }
    }

    pub fn full_group(&self) -> Subgroup {
        self.torus_subgroup_unchecked(self.finite.full())
    }

    /// The maximal torus `T` (trivial when the rank is 0).
    pub fn torus(&self) -> Subgroup {
        self.torus_subgroup_unchecked(self.finite.trivial())
    }

    pub fn trivial(&self) -> Subgroup {
        self.finite_subgroup_unchecked(vec![self.identity()], vec![])
    }

    /// Closure of `gens`; with `full_torus` the whole torus is adjoined.
    pub fn generated_subgroup(&self, gens: &[DPElement], full_torus: bool, bound: usize) -> Result<Subgroup> {
        if gens.iter().any(|g| !self.owns(g)) {
            return Err(Error::MismatchedOwner);
        }
        if full_torus && self.rank > 0 {
            let k = self.finite.closure(gens.iter().map(|g| g.finite));
            let mut s = self.torus_subgroup_unchecked(k);
            s.generators = gens.to_vec();
            return Ok(s);
        }
        let mut seen: BTreeSet<DPElement> = BTreeSet::from([self.identity()]);
        let mut frontier = vec![self.identity()];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = self.mul(&x, g);
                if !seen.contains(&y) {
                    if seen.len() >= bound {
                        return Err(Error::SizeBound(bound));
                    }
                    seen.insert(y.clone());
                    frontier.push(y);
                }
            }
        }
        Ok(self.finite_subgroup_unchecked(seen.into_iter().collect(), gens.to_vec()))
    }

    /// Validates that an explicit element list is a subgroup.
    pub fn finite_subgroup(&self, elems: Vec<DPElement>) -> Result<Subgroup> {
        if elems.iter().any(|g| !self.owns(g)) {
            return Err(Error::MismatchedOwner);
        }
        let set: BTreeSet<DPElement> = elems.iter().cloned().collect();
        if !set.contains(&self.identity()) {
            return Err(Error::NotSubgroup("missing identity".into()));
        }
        for a in &set {
            for b in &set {
                if !set.contains(&self.mul(a, b)) {
                    return Err(Error::NotSubgroup("not closed under products".into()));
                }
            }
        }
        let gens = elems.clone();
        Ok(self.finite_subgroup_unchecked(set.into_iter().collect(), gens))
    }

    pub fn contains(&self, p: &Subgroup, x: &DPElement) -> bool {
        match &p.body {
            Body::Finite(e) => e.binary_search(x).is_ok(),
            Body::Torus(k) => k.contains(x.finite),
        }
    }

    /// `P ≤ Q`
    pub fn is_subgroup(&self, p: &Subgroup, q: &Subgroup) -> bool {
        match (&p.body, &q.body) {
            (Body::Finite(e), _) => e.iter().all(|x| self.contains(q, x)),
            (Body::Torus(a), Body::Torus(b)) => a.is_subset(b),
            (Body::Torus(_), Body::Finite(_)) => false,
        }
    }

    pub fn rank(&self, p: &Subgroup) -> usize {
        if p.contains_full_torus() {
            self.rank
        } else {
            0
        }
    }

    pub fn maximal_torus(&self, p: &Subgroup) -> Subgroup {
        if p.contains_full_torus() {
            self.torus()
        } else {
            self.trivial()
        }
    }

    pub fn order_pair(&self, p: &Subgroup) -> OrderPair {
        match &p.body {
            Body::Finite(e) => OrderPair { rank: 0, index: e.len() },
            Body::Torus(k) => OrderPair { rank: self.rank, index: k.len() },
        }
    }

    pub fn order_less(&self, p: &Subgroup, q: &Subgroup) -> bool {
        self.order_pair(p) < self.order_pair(q)
    }

    pub fn intersection(&self, p: &Subgroup, q: &Subgroup) -> Subgroup {
        match (&p.body, &q.body) {
            (Body::Torus(a), Body::Torus(b)) => self.torus_subgroup_unchecked(a.intersection(b)),
            (Body::Finite(e), _) => {
                let e: Vec<DPElement> = e.iter().filter(|x| self.contains(q, x)).cloned().collect();
                self.finite_subgroup_unchecked(e.clone(), e)
            }
            (Body::Torus(_), Body::Finite(_)) => self.intersection(q, p),
        }
    }

    /// `P^g = g⁻¹ P g`
    pub fn conjugate(&self, p: &Subgroup, g: &DPElement) -> Subgroup {
        match &p.body {
            Body::Finite(e) => {
                let e: Vec<DPElement> = e.iter().map(|x| self.conj(x, g)).collect();
                self.finite_subgroup_unchecked(e, p.generators.iter().map(|x| self.conj(x, g)).collect())
            }
            Body::Torus(k) => self.torus_subgroup_unchecked(self.finite.conj_set(k, g.finite)),
        }
    }

    fn normalizes(&self, g: &DPElement, p: &Subgroup) -> bool {
        match &p.body {
            Body::Finite(e) => e.iter().all(|x| self.contains(p, &self.conj(x, g))),
            Body::Torus(k) => k.iter().all(|f| k.contains(self.finite.conj(f, g.finite))),
        }
    }

    fn centralizes(&self, g: &DPElement, p: &Subgroup) -> bool {
        match &p.body {
            Body::Finite(e) => e.iter().all(|x| self.mul(x, g) == self.mul(g, x)),
            Body::Torus(k) => {
                self.trivial_action[g.finite as usize]
                    && k.iter().all(|f| {
                        let x = DPElement { finite: f, torus: TorusElement::zero(self.prime, self.rank) };
                        self.mul(&x, g) == self.mul(g, &x)
                    })
            }
        }
    }

    /// Elements of `T ⋊ K` of level at most `level`, in canonical order.
    fn section_elements(&self, k: &ElemSet, level: u32) -> Vec<DPElement> {
        let tor = self.torus_level_elements(level);
        let mut out = Vec::with_capacity(tor.len() * k.len());
        for f in k.iter() {
            for t in &tor {
                out.push(DPElement { finite: f, torus: t.clone() });
            }
        }
        out
    }

    fn torus_level_elements(&self, level: u32) -> Vec<TorusElement> {
        let p = self.prime as u64;
        let step = p.pow(precision(self.prime) - level);
        let count = p.pow(level);
        let mut out = vec![TorusElement::zero(self.prime, self.rank)];
        for i in 0..self.rank {
            let mut next = Vec::with_capacity(out.len() * count as usize);
            for t in &out {
                for a in 0..count {
                    let mut u = t.clone();
                    u.coords[i] = a * step;
                    next.push(u);
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// Finite answer for a question about `T ⋊ K`, found by raising the
    /// level until two consecutive levels agree.
    fn stabilize<F>(&self, k: &ElemSet, start: u32, test: F) -> Result<Subgroup>
    where
        F: Fn(&DPElement) -> bool,
    {
        let top = (start + LIFT_LEVELS).min(precision(self.prime));
        let mut prev: Option<Vec<DPElement>> = None;
        for level in start..=top {
            let cur: Vec<DPElement> = self.section_elements(k, level).into_iter().filter(|g| test(g)).collect();
            if prev.as_ref() == Some(&cur) {
                return Ok(self.finite_subgroup_unchecked(cur.clone(), cur));
            }
            prev = Some(cur);
        }
        Err(Error::NotRepresentable(format!("no stable answer up to level {top}")))
    }

    /// `N_Q(P)`
    pub fn normalizer(&self, p: &Subgroup, q: &Subgroup) -> Result<Subgroup> {
        if !self.is_subgroup(p, q) {
            return Err(Error::NotSubgroup("normalizer needs P ≤ Q".into()));
        }
        match (&p.body, &q.body) {
            (_, Body::Finite(e)) => {
                let n: Vec<DPElement> = e.iter().filter(|g| self.normalizes(g, p)).cloned().collect();
                Ok(self.finite_subgroup_unchecked(n.clone(), n))
            }
            (Body::Torus(kp), Body::Torus(kq)) => {
                Ok(self.torus_subgroup_unchecked(self.finite.normalizer(kp, kq)))
            }
            (Body::Finite(e), Body::Torus(kq)) => {
                if e.iter().all(|x| self.trivial_action[x.finite as usize]) {
                    let k = self.finite.set(kq.iter().filter(|&f| {
                        let g = DPElement { finite: f, torus: TorusElement::zero(self.prime, self.rank) };
                        self.normalizes(&g, p)
                    }));
                    Ok(self.torus_subgroup_unchecked(k))
                } else {
                    self.stabilize(kq, p.level().unwrap_or(0), |g| self.normalizes(g, p))
                }
            }
        }
    }

    /// `C_Q(P)`
    pub fn centralizer(&self, p: &Subgroup, q: &Subgroup) -> Result<Subgroup> {
        if !self.is_subgroup(p, q) {
            return Err(Error::NotSubgroup("centralizer needs P ≤ Q".into()));
        }
        match (&p.body, &q.body) {
            (_, Body::Finite(e)) => {
                let c: Vec<DPElement> = e.iter().filter(|g| self.centralizes(g, p)).cloned().collect();
                Ok(self.finite_subgroup_unchecked(c.clone(), c))
            }
            (Body::Torus(kp), Body::Torus(kq)) => {
                if kp.iter().all(|f| self.trivial_action[f as usize]) {
                    let k = self.finite.set(
                        self.finite
                            .centralizer(kp, kq)
                            .iter()
                            .filter(|&f| self.trivial_action[f as usize]),
                    );
                    Ok(self.torus_subgroup_unchecked(k))
                } else {
                    self.stabilize(kq, 0, |g| self.centralizes(g, p))
                }
            }
            (Body::Finite(e), Body::Torus(kq)) => {
                if e.iter().all(|x| self.trivial_action[x.finite as usize]) {
                    let k = self.finite.set(kq.iter().filter(|&f| {
                        let g = DPElement { finite: f, torus: TorusElement::zero(self.prime, self.rank) };
                        self.centralizes(&g, p)
                    }));
                    Ok(self.torus_subgroup_unchecked(k))
                } else {
                    self.stabilize(kq, p.level().unwrap_or(0), |g| self.centralizes(g, p))
                }
            }
        }
    }

    pub fn center(&self, p: &Subgroup) -> Result<Subgroup> {
        self.centralizer(p, p)
    }

    /// `P_0 = P`, `P_k = N_Q(P_{k-1})` until it stops growing, or until it
    /// contains all of `Q` at the working truncation.
    pub fn normalizer_tower(&self, p: &Subgroup, q: &Subgroup) -> Result<Tower> {
        if !self.is_subgroup(p, q) {
            return Err(Error::NotSubgroup("tower needs P ≤ Q".into()));
        }
        let slice_order = self.truncated_order(q, self.truncation);
        let bound = 2 * log_ceil(slice_order, self.prime) + 4;
        let mut members = vec![p.clone()];
        loop {
            let cur = members.last().unwrap();
            if cur == q {
                return Ok(Tower { union: q.clone(), members, cut_by_truncation: false });
            }
            if q.contains_full_torus() && !cur.contains_full_torus() && self.truncated_order(cur, self.truncation) == slice_order {
                return Ok(Tower { union: q.clone(), members, cut_by_truncation: true });
            }
            let next = self.normalizer(cur, q)?;
            if &next == cur {
                let union = next;
                return Ok(Tower { union, members, cut_by_truncation: false });
            }
            members.push(next);
            if members.len() > bound + 1 {
                return Err(Error::TowerUnstable(bound));
            }
        }
    }

    /// `|P ∩ slice_level|`
    pub fn truncated_order(&self, p: &Subgroup, level: u32) -> usize {
        match &p.body {
            Body::Finite(e) => e.iter().filter(|x| x.level() <= level).count(),
            Body::Torus(k) => k.len() * (self.prime as usize).pow(level * self.rank as u32),
        }
    }

    pub fn slice(&self, level: u32) -> Result<Slice> {
        let level = if self.rank == 0 { 0 } else { level };
        if level > precision(self.prime) {
            return Err(Error::NotRepresentable(format!("level {level} exceeds precision")));
        }
        let elements = self.section_elements(&self.finite.full(), level);
        let index: HashMap<DPElement, u32> = elements.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
        let group = FiniteGroup::tabulate(&elements, |a, b| self.mul(a, b), |x| self.label(x))?;
        Ok(Slice { level, group, elements, index })
    }

    /// Slice indices of `P ∩ slice`; `None` if `P` has elements above the
    /// slice level.
    pub fn slice_set(&self, p: &Subgroup, slice: &Slice) -> Option<ElemSet> {
        match &p.body {
            Body::Finite(e) => {
                let mut s = ElemSet::empty(slice.elements.len());
                for x in e {
                    s.insert(slice.index_of(x)?);
                }
                Some(s)
            }
            Body::Torus(k) => Some(slice.group.set(
                slice.elements.iter().enumerate().filter(|(_, x)| k.contains(x.finite)).map(|(i, _)| i as u32),
            )),
        }
    }

    /// A subgroup from slice indices; `full_torus` widens it to `T ⋊ K`.
    pub fn from_slice_set(&self, slice: &Slice, set: &ElemSet, full_torus: bool) -> Subgroup {
        let elems: Vec<DPElement> = set.iter().map(|i| slice.element(i).clone()).collect();
        if full_torus && self.rank > 0 {
            self.torus_subgroup_unchecked(self.finite.set(elems.iter().map(|e| e.finite)))
        } else {
            self.finite_subgroup_unchecked(elems.clone(), elems)
        }
    }

    /// All finite subgroups of the level-`level` slice, followed by every
    /// `T ⋊ K`.
    pub fn all_subgroups(&self, level: u32) -> Result<Vec<Subgroup>> {
        let slice = self.slice(level)?;
        let mut out: Vec<Subgroup> = slice
            .group
            .subgroups(&slice.group.full())
            .iter()
            .map(|s| self.from_slice_set(&slice, s, false))
            .collect();
        if self.rank > 0 {
            for k in self.finite.subgroups(&self.finite.full()) {
                out.push(self.torus_subgroup_unchecked(k));
            }
        }
        out.sort();
        Ok(out)
    }

    /// True when a subgroup is a p-torus: trivial, or `T` itself.
    pub fn is_torus(&self, p: &Subgroup) -> bool {
        match &p.body {
            Body::Finite(e) => e.len() == 1,
            Body::Torus(k) => k.len() == 1,
        }
    }
}

fn log_ceil(n: usize, p: u32) -> usize {
    let mut k = 0;
    let mut v = 1usize;
    while v < n {
        v *= p as usize;
        k += 1;
    }
    k
}

fn identity_matrix(r: usize) -> Vec<Vec<i64>> {
    (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect()
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let r = a.len();
    (0..r).map(|i| (0..r).map(|j| (0..r).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn determinant(m: &[Vec<i64>]) -> i128 {
    let r = m.len();
    if r == 0 {
        return 1;
    }
    if r == 1 {
        return m[0][0] as i128;
    }
    (0..r)
        .map(|j| {
            let minor: Vec<Vec<i64>> =
                m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x).collect()).collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * m[0][j] as i128 * determinant(&minor)
        })
        .sum()
}

/// One failed structural law with a description of the offending subgroups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub law: &'static str,
    pub detail: String,
}

/// Runs the maximal-torus, order-pair and normalizer laws over every
/// subgroup visible at `level`.
pub fn verify_structure(g: &DPGroup, level: u32) -> Result<Vec<Violation>> {
    let subs = g.all_subgroups(level)?;
    let slice = g.slice(level)?;
    let mut out = vec![];
    let describe = |s: &Subgroup| format!("{}{}", if s.contains_full_torus() { "T⋊" } else { "" }, g.order_pair(s));
    let torus = g.torus();
    for h in &subs {
        // maximal torus: a torus of finite index containing every torus in h
        let mt = g.maximal_torus(h);
        if !g.is_torus(&mt) || !g.is_subgroup(&mt, h) {
            out.push(Violation { law: "maximal torus", detail: describe(h) });
        }
        for u in [&torus, &g.trivial()] {
            if g.is_subgroup(u, h) && !g.is_subgroup(u, &mt) {
                out.push(Violation { law: "maximal torus", detail: describe(h) });
            }
        }
        let op = g.order_pair(h);
        if op.index == 0 || (h.contains_full_torus() && op.rank != g.torus_rank()) {
            out.push(Violation { law: "order pair", detail: describe(h) });
        }
    }
    for x in &subs {
        for y in &subs {
            if !g.is_subgroup(x, y) {
                continue;
            }
            let (ox, oy) = (g.order_pair(x), g.order_pair(y));
            if ox > oy || ((ox == oy) != (x == y)) {
                out.push(Violation { law: "order monotonicity", detail: format!("{} ≤ {}", describe(x), describe(y)) });
            }
            if g.is_torus(y) && x != y && g.rank(x) >= g.rank(y) {
                out.push(Violation { law: "torus comparison", detail: format!("{} ≤ {}", describe(x), describe(y)) });
            }
            if x == y {
                continue;
            }
            let n = g.normalizer(x, y)?;
            if !(g.is_subgroup(x, &n) && x != &n) {
                out.push(Violation { law: "normalizer increasing", detail: format!("{} < {}", describe(x), describe(y)) });
            }
            let tower = g.normalizer_tower(x, y)?;
            let b = &tower.union;
            if !(b == y || g.rank(b) < g.rank(x)) {
                out.push(Violation { law: "tower dichotomy", detail: format!("{} < {}", describe(x), describe(y)) });
            }
        }
    }
    // isomorphic finite subgroups have equal order pairs
    let finite: Vec<(&Subgroup, ElemSet)> =
        subs.iter().filter(|s| !s.contains_full_torus()).map(|s| (s, g.slice_set(s, &slice).expect("visible"))).collect();
    for (a, sa) in &finite {
        for (b, sb) in &finite {
            if sa.len() == sb.len()
                && slice.group.are_isomorphic(sa, &slice.group, sb)
                && g.order_pair(a) != g.order_pair(b)
            {
                out.push(Violation { law: "isomorphism invariance", detail: format!("{} vs {}", describe(a), describe(b)) });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc2(m: u32) -> DPGroup {
        DPGroup::inversion_extension(2, m).unwrap()
    }

    #[test]
    fn multiply_examples() {
        let g = tc2(3);
        let e = g.identity();
        assert_eq!(g.multiply(&e, &e).unwrap(), e);
        let a = g.element(&["1/4"], "id").unwrap();
        let s = g.element(&["0"], "flip").unwrap();
        let as_ = g.multiply(&a, &s).unwrap();
        assert_eq!(as_, g.element(&["1/4"], "flip").unwrap());
        assert_eq!(g.multiply(&as_, &as_).unwrap(), e);
        let other = DPGroup::inversion_extension(3, 2).unwrap();
        assert!(matches!(g.multiply(&a, &other.identity()), Err(Error::MismatchedOwner)));
    }

    #[test]
    fn rationals_round_trip() {
        let t = TorusElement::parse(2, &["3/8", "-1/4", "5"]).unwrap();
        assert_eq!(t.coordinate_strings(), vec!["3/8", "3/4", "0"]);
        assert_eq!(t.level(), 3);
        assert!(TorusElement::parse(2, &["1/3"]).is_err());
        assert!(TorusElement::parse(3, &["x"]).is_err());
        assert_eq!(TorusElement::parse(3, &["2/9"]).unwrap().coordinate_strings(), vec!["2/9"]);
    }

    #[test]
    fn rank_and_order_pairs() {
        let g = tc2(3);
        assert_eq!(g.rank(&g.trivial()), 0);
        assert_eq!(g.order_pair(&g.trivial()), OrderPair { rank: 0, index: 1 });
        assert_eq!(g.order_pair(&g.full_group()), OrderPair { rank: 1, index: 2 });
        assert_eq!(g.maximal_torus(&g.full_group()), g.torus());
        let t2 = DPGroup::new(2, 2, FiniteGroup::cyclic(1), vec![vec![vec![1, 0], vec![0, 1]]], 2).unwrap();
        assert_eq!(t2.rank(&t2.torus()), 2);
        let c4 = g.generated_subgroup(&[g.element(&["1/4"], "id").unwrap()], false, 100).unwrap();
        assert_eq!(g.order_pair(&c4), OrderPair { rank: 0, index: 4 });
        assert_eq!(g.maximal_torus(&c4), g.trivial());
        assert!(g.order_less(&c4, &g.torus()));
        assert!(!g.order_less(&c4, &c4));
    }

    #[test]
    fn generated_subgroups() {
        let g = tc2(3);
        assert_eq!(g.generated_subgroup(&[], false, 10).unwrap(), g.trivial());
        let c8 = g.generated_subgroup(&[g.element(&["1/8"], "id").unwrap()], false, 100).unwrap();
        assert_eq!(c8.elements().unwrap().len(), 8);
        let d8 = g
            .generated_subgroup(&[g.element(&["1/4"], "id").unwrap(), g.element(&["0"], "flip").unwrap()], false, 100)
            .unwrap();
        assert_eq!(d8.elements().unwrap().len(), 8);
        assert!(matches!(
            g.generated_subgroup(&[g.element(&["1/1024"], "id").unwrap()], false, 100),
            Err(Error::SizeBound(100))
        ));
        let full = g.generated_subgroup(&[g.element(&["0"], "flip").unwrap()], true, 100).unwrap();
        assert_eq!(full, g.full_group());
    }

    #[test]
    fn normalizers_in_the_torus_extension() {
        let g = tc2(3);
        let q = g.full_group();
        let flip = g.generated_subgroup(&[g.element(&["0"], "flip").unwrap()], false, 100).unwrap();
        let n = g.normalizer(&flip, &q).unwrap();
        assert_eq!(g.order_pair(&n), OrderPair { rank: 0, index: 4 });
        let c4 = g.generated_subgroup(&[g.element(&["1/4"], "id").unwrap()], false, 100).unwrap();
        assert_eq!(g.normalizer(&c4, &g.torus()).unwrap(), g.torus());
        assert_eq!(g.normalizer(&c4, &q).unwrap(), q);
        assert_eq!(g.normalizer(&g.torus(), &q).unwrap(), q);
        assert_eq!(g.centralizer(&g.torus(), &q).unwrap(), g.torus());
        assert_eq!(g.center(&q).unwrap().elements().unwrap().len(), 2);
    }

    #[test]
    fn towers() {
        let g = tc2(3);
        let q = g.full_group();
        let t = g.normalizer_tower(&g.torus(), &q).unwrap();
        assert_eq!(t.union, q);
        let same = g.normalizer_tower(&q, &q).unwrap();
        assert_eq!(same.members, vec![q.clone()]);
        let flip = g.generated_subgroup(&[g.element(&["0"], "flip").unwrap()], false, 100).unwrap();
        let t = g.normalizer_tower(&flip, &q).unwrap();
        assert_eq!(t.union, q);
        assert!(t.cut_by_truncation);
        let sizes: Vec<usize> = t.members.iter().map(|m| g.order_pair(m).index).collect();
        assert_eq!(sizes, vec![2, 4, 8, 16]);
    }

    #[test]
    fn dihedral_tower() {
        let s4 = FiniteGroup::symmetric(4);
        let syl = s4.sylow_subgroups(&s4.full(), 2).remove(0);
        let (d8, _) = s4.subgroup_as_group(&syl);
        let g = DPGroup::finite_only(2, d8.clone()).unwrap();
        let q = g.full_group();
        let refl = (0..8u32)
            .find(|&x| d8.elem_order(x) == 2 && d8.center(&d8.full()).contains(x) == false)
            .unwrap();
        let p = g.generated_subgroup(&[g.make(TorusElement::zero(2, 0), refl).unwrap()], false, 10).unwrap();
        let t = g.normalizer_tower(&p, &q).unwrap();
        let sizes: Vec<usize> = t.members.iter().map(|m| g.order_pair(m).index).collect();
        assert_eq!(sizes, vec![2, 4, 8]);
        assert_eq!(t.union, q);
        assert_eq!(g.order_pair(&q), OrderPair { rank: 0, index: 8 });
        assert_eq!(g.rank(&q), 0);
        assert_eq!(g.maximal_torus(&q), g.trivial());
    }

    #[test]
    fn structure_laws_hold_on_small_examples() {
        for m in 1..=3 {
            assert_eq!(verify_structure(&tc2(m), m).unwrap(), vec![]);
        }
        let q8 = DPGroup::finite_only(2, FiniteGroup::quaternion()).unwrap();
        assert_eq!(verify_structure(&q8, 1).unwrap(), vec![]);
    }

    #[test]
    fn bad_actions_are_rejected() {
        let c2 = FiniteGroup::cyclic(2);
        assert!(DPGroup::new(2, 1, c2.clone(), vec![vec![vec![1]], vec![vec![2]]], 1).is_err());
        assert!(DPGroup::new(2, 1, c2.clone(), vec![vec![vec![1]], vec![vec![1]]], 1).is_ok());
        assert!(DPGroup::new(4, 1, c2, vec![vec![vec![1]], vec![vec![1]]], 1).is_err());
    }
}
