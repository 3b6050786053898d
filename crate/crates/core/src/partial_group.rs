//! Explicit partial groups and localities.
//!
//! Elements are integer handles. The product of pairs is a dense table and
//! the product of longer words is a left fold, which is valid on `D` by
//! the splicing axiom. Membership in `D` is decided from the object set:
//! a word lies in `D` when some chain of objects is carried along it by
//! the partial conjugation maps. Nothing is memoized, so a `Locality` can
//! be queried from several threads at once.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::finite::{sort_sets, ElemSet, FiniteGroup};
use crate::fusion::FusionSystem;
use crate::ptoral::{verify_structure, DPElement, DPGroup, Slice, Subgroup};
use crate::report::Report;

pub type Handle = u32;
pub const NONE: u32 = u32::MAX;
pub const DEFAULT_MAX_WORD_LEN: usize = 4;
const SECTION: &str = "partial group";

/// A member of the object set, as slice indices of `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Object {
    pub set: ElemSet,
    /// The object is `T ⋊ K` rather than the finite group it shows at the
    /// working truncation.
    pub full_torus: bool,
}

impl Object {
    pub fn finite(set: ElemSet) -> Self {
        Object { set, full_torus: false }
    }
}

/// `S` inside the carrier.
#[derive(Clone, Debug)]
pub struct Sylow {
    pub dp: DPGroup,
    pub slice: Slice,
    /// slice index → carrier handle
    pub embed: Vec<Handle>,
}

impl Sylow {
    pub fn new(dp: DPGroup, level: u32, embed: Vec<Handle>) -> Result<Self> {
        let slice = dp.slice(level)?;
        if embed.len() != slice.elements.len() {
            return Err(Error::InvalidLocality("embedding does not cover S".into()));
        }
        Ok(Sylow { dp, slice, embed })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.slice.group
    }

    pub fn order(&self) -> usize {
        self.slice.elements.len()
    }

    /// The exact subgroup behind an object.
    pub fn subgroup(&self, obj: &Object) -> Subgroup {
        self.dp.from_slice_set(&self.slice, &obj.set, obj.full_torus)
    }

    pub fn element(&self, i: u32) -> &DPElement {
        self.slice.element(i)
    }

    pub fn full(&self) -> ElemSet {
        self.slice.group.full()
    }

    pub fn describe(&self, set: &ElemSet) -> String {
        let g = &self.slice.group;
        let labels: Vec<&str> = set.iter().map(|i| g.label(i)).collect();
        format!("{{{}}}", labels.join(", "))
    }
}

/// Raw ingredients for an explicit locality.
#[derive(Clone, Debug)]
pub struct LocalityParts {
    pub prime: u32,
    pub labels: Vec<String>,
    pub unit: Handle,
    pub inverse: Vec<Handle>,
    /// `(g, h, gh)` for every pair in `D`.
    pub products: Vec<(Handle, Handle, Handle)>,
    /// `conj[g][x]` is the slice index of `x^g`, or [`NONE`].
    pub conj: Vec<Vec<u32>>,
    pub sylow: Sylow,
    pub delta: Vec<Object>,
}

#[derive(Clone, Debug)]
pub struct Locality {
    prime: u32,
    labels: Vec<String>,
    unit: Handle,
    inverse: Vec<Handle>,
    product: Vec<Handle>,
    conj: Vec<Vec<u32>>,
    sylow: Sylow,
    delta: Vec<Object>,
    delta_index: HashMap<ElemSet, usize>,
    removed: BTreeSet<Vec<Handle>>,
}

/// `N_L(P)` with its centralizer and the group structure on it.
#[derive(Clone, Debug)]
pub struct Normalizer {
    pub elements: Vec<Handle>,
    pub centralizer: Vec<Handle>,
    pub group: FiniteGroup,
}

impl Normalizer {
    pub fn centralizer_set(&self) -> ElemSet {
        self.group.set(self.centralizer.iter().map(|h| self.elements.binary_search(h).unwrap() as u32))
    }
}

/// Subgroups `S_w` closed under intersection, with their heights.
#[derive(Clone, Debug)]
pub struct StratificationPoset {
    pub members: Vec<ElemSet>,
    pub dim: Vec<usize>,
    /// Word length after which no new member appeared.
    pub stable_after: usize,
}

impl Locality {
    pub fn from_parts(parts: LocalityParts) -> Result<Self> {
        let n = parts.labels.len();
        let bad = |m: &str| Err(Error::InvalidLocality(m.to_string()));
        if n == 0 || parts.unit as usize >= n || parts.inverse.len() != n || parts.conj.len() != n {
            return bad("carrier data has inconsistent sizes");
        }
        if parts.inverse.iter().any(|&h| h as usize >= n) || (0..n).any(|g| parts.inverse[parts.inverse[g] as usize] as usize != g) {
            return bad("inversion is not an involution on the carrier");
        }
        let s = parts.sylow.order();
        if parts.sylow.embed.iter().any(|&h| h as usize >= n) || parts.conj.iter().any(|c| c.len() != s) {
            return bad("conjugation maps do not match S");
        }
        if parts.delta.is_empty() {
            return bad("object set is empty");
        }
        let mut product = vec![NONE; n * n];
        for &(g, h, k) in &parts.products {
            if g as usize >= n || h as usize >= n || k as usize >= n {
                return bad("product refers to an unknown handle");
            }
            let slot = &mut product[g as usize * n + h as usize];
            if *slot != NONE && *slot != k {
                return bad("product is not a function");
            }
            *slot = k;
        }
        let sg = parts.sylow.group();
        for a in sg.elements() {
            for b in sg.elements() {
                let (ha, hb) = (parts.sylow.embed[a as usize], parts.sylow.embed[b as usize]);
                if product[ha as usize * n + hb as usize] != parts.sylow.embed[sg.mul(a, b) as usize] {
                    return bad("product does not restrict to the group law of S");
                }
            }
        }
        let mut delta = parts.delta;
        delta.sort_by(|a, b| a.set.len().cmp(&b.set.len()).then_with(|| a.cmp(b)));
        delta.dedup_by(|a, b| a.set == b.set);
        for obj in &delta {
            if !sg.is_subgroup(&obj.set) {
                return bad("object is not a subgroup of S");
            }
        }
        let delta_index = delta.iter().enumerate().map(|(i, o)| (o.set.clone(), i)).collect();
        Ok(Locality {
            prime: parts.prime,
            labels: parts.labels,
            unit: parts.unit,
            inverse: parts.inverse,
            product,
            conj: parts.conj,
            sylow: parts.sylow,
            delta,
            delta_index,
            removed: BTreeSet::new(),
        })
    }

    /// `L_Δ(G)`: carrier `{g ∈ G : P^g ∈ Δ for some P ∈ Δ with P^g ≤ S}`.
    pub fn from_finite_group(g: &FiniteGroup, prime: u32, s: &ElemSet, delta: &[ElemSet]) -> Result<Self> {
        if !g.is_subgroup(s) || !g.is_p_group(s, prime) {
            return Err(Error::InvalidLocality("S is not a p-subgroup".into()));
        }
        if delta.is_empty() || delta.iter().any(|p| !p.is_subset(s) || !g.is_subgroup(p)) {
            return Err(Error::InvalidLocality("objects must be subgroups of S".into()));
        }
        let dset: HashSet<&ElemSet> = delta.iter().collect();
        for sub in g.subgroups(s) {
            if !dset.contains(&sub) && delta.iter().any(|p| p.is_subset(&sub)) {
                return Err(Error::InvalidLocality("object set is not overgroup-closed in S".into()));
            }
        }
        let carrier: Vec<u32> = g
            .elements()
            .filter(|&x| delta.iter().any(|p| dset.contains(&g.conj_set(p, x)) && g.conj_set(p, x).is_subset(s)))
            .collect();
        let handle: HashMap<u32, Handle> = carrier.iter().enumerate().map(|(i, &x)| (x, i as Handle)).collect();
        let (sg, s_elems) = g.subgroup_as_group(s);
        let dp = DPGroup::finite_only(prime, sg)?;
        let slice_of: HashMap<u32, u32> = s_elems.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let embed = s_elems.iter().map(|x| handle[x]).collect();
        let sylow = Sylow::new(dp, 0, embed)?;
        let mut products = vec![];
        for &a in &carrier {
            for &b in &carrier {
                if let Some(&k) = handle.get(&g.mul(a, b)) {
                    products.push((handle[&a], handle[&b], k));
                }
            }
        }
        let conj = carrier
            .iter()
            .map(|&x| s_elems.iter().map(|&y| slice_of.get(&g.conj(y, x)).copied().unwrap_or(NONE)).collect())
            .collect();
        let to_slice = |p: &ElemSet| ElemSet::from_iter(s_elems.len(), p.iter().map(|x| slice_of[&x]));
        let mut loc = Self::from_parts(LocalityParts {
            prime,
            labels: carrier.iter().map(|&x| g.label(x).to_string()).collect(),
            unit: handle[&g.identity()],
            inverse: carrier.iter().map(|&x| handle[&g.inv(x)]).collect(),
            products,
            conj,
            sylow,
            delta: delta.iter().map(|p| Object::finite(to_slice(p))).collect(),
        })?;
        // pairs outside D are never consulted, but keep only what D can reach
        loc.prune_products();
        Ok(loc)
    }

    /// `S` itself, truncated at `level`, as a locality on the given objects.
    pub fn group_locality(dp: &DPGroup, level: u32, delta: Vec<Object>) -> Result<Self> {
        let slice = dp.slice(level)?;
        let n = slice.elements.len();
        let g = slice.group.clone();
        let sylow = Sylow::new(dp.clone(), level, (0..n as u32).collect())?;
        let mut products = vec![];
        for a in g.elements() {
            for b in g.elements() {
                products.push((a, b, g.mul(a, b)));
            }
        }
        Self::from_parts(LocalityParts {
            prime: dp.prime(),
            labels: g.labels().to_vec(),
            unit: g.identity(),
            inverse: g.elements().map(|x| g.inv(x)).collect(),
            products,
            conj: g.elements().map(|x| g.elements().map(|y| g.conj(y, x)).collect()).collect(),
            sylow,
            delta,
        })
    }

    fn prune_products(&mut self) {
        let n = self.len();
        for g in 0..n as u32 {
            for h in 0..n as u32 {
                if !self.in_domain(&[g, h]) {
                    self.product[g as usize * n + h as usize] = NONE;
                }
            }
        }
    }

    /// The ingredients this locality was built from, with products listed
    /// for every pair in `D`. Removed words are not included.
    pub fn to_parts(&self) -> LocalityParts {
        let mut products = vec![];
        for g in self.handles() {
            for h in self.handles() {
                if let Some(k) = self.pair_product(g, h) {
                    products.push((g, h, k));
                }
            }
        }
        LocalityParts {
            prime: self.prime,
            labels: self.labels.clone(),
            unit: self.unit,
            inverse: self.inverse.clone(),
            products,
            conj: self.conj.clone(),
            sylow: self.sylow.clone(),
            delta: self.delta.clone(),
        }
    }

    /// The same locality with handle `g` renamed to `perm[g]`.
    pub fn relabel(&self, perm: &[Handle]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        for &h in perm {
            if h as usize >= n || std::mem::replace(&mut seen[h as usize], true) {
                return Err(Error::Precondition("relabeling is not a permutation".into()));
            }
        }
        if perm.len() != n {
            return Err(Error::Precondition("relabeling is not a permutation".into()));
        }
        let parts = self.to_parts();
        let mut labels = vec![String::new(); n];
        let mut inverse = vec![0; n];
        let mut conj = vec![vec![]; n];
        for g in 0..n {
            let h = perm[g] as usize;
            labels[h] = parts.labels[g].clone();
            inverse[h] = perm[parts.inverse[g] as usize];
            conj[h] = parts.conj[g].clone();
        }
        let products = parts.products.iter().map(|&(a, b, c)| (perm[a as usize], perm[b as usize], perm[c as usize])).collect();
        let mut sylow = parts.sylow;
        sylow.embed = sylow.embed.iter().map(|&h| perm[h as usize]).collect();
        Self::from_parts(LocalityParts { prime: parts.prime, labels, unit: perm[parts.unit as usize], inverse, products, conj, sylow, delta: parts.delta })
    }

    /// Removes a single word from `D`. Used to build broken examples.
    pub fn remove_word(&mut self, w: &[Handle]) {
        self.removed.insert(w.to_vec());
    }

    pub fn removed_words(&self) -> impl Iterator<Item = &Vec<Handle>> {
        self.removed.iter()
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn handles(&self) -> impl Iterator<Item = Handle> {
        0..self.len() as Handle
    }

    pub fn unit(&self) -> Handle {
        self.unit
    }

    pub fn inv(&self, g: Handle) -> Handle {
        self.inverse[g as usize]
    }

    pub fn label(&self, g: Handle) -> &str {
        &self.labels[g as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find(&self, label: &str) -> Option<Handle> {
        self.labels.iter().position(|l| l == label).map(|i| i as Handle)
    }

    pub fn sylow(&self) -> &Sylow {
        &self.sylow
    }

    pub fn delta(&self) -> &[Object] {
        &self.delta
    }

    pub fn object_index(&self, set: &ElemSet) -> Option<usize> {
        self.delta_index.get(set).copied()
    }

    /// `x^g` as a slice index, if `x ∈ S_g`.
    pub fn conj_point(&self, g: Handle, x: u32) -> Option<u32> {
        let y = self.conj[g as usize][x as usize];
        (y != NONE).then_some(y)
    }

    pub fn conj_map(&self, g: Handle) -> &[u32] {
        &self.conj[g as usize]
    }

    /// Handle of an element of `S`.
    pub fn embed(&self, x: u32) -> Handle {
        self.sylow.embed[x as usize]
    }

    /// Slice index of a handle that lies in `S`.
    pub fn in_sylow(&self, g: Handle) -> Option<u32> {
        self.sylow.embed.iter().position(|&h| h == g).map(|i| i as u32)
    }

    pub fn pair_product(&self, g: Handle, h: Handle) -> Option<Handle> {
        let k = self.product[g as usize * self.len() + h as usize];
        (k != NONE).then_some(k)
    }

    pub fn describe_word(&self, w: &[Handle]) -> String {
        let parts: Vec<&str> = w.iter().map(|&g| self.label(g)).collect();
        format!("({})", parts.join(", "))
    }

    /// `S_w` from the conjugation maps, followed pointwise.
    fn follow(&self, w: &[Handle]) -> ElemSet {
        let s = self.sylow.order();
        let mut out = ElemSet::empty(s);
        'points: for x in 0..s as u32 {
            let mut y = x;
            for &g in w {
                y = self.conj[g as usize][y as usize];
                if y == NONE {
                    continue 'points;
                }
            }
            out.insert(x);
        }
        out
    }

    fn image(&self, g: Handle, set: &ElemSet) -> Option<ElemSet> {
        let mut out = ElemSet::empty(self.sylow.order());
        for x in set.iter() {
            let y = self.conj[g as usize][x as usize];
            if y == NONE {
                return None;
            }
            out.insert(y);
        }
        Some(out)
    }

    /// A chain of objects `P_0 → … → P_n` carried along `w`, as indices
    /// into [`Locality::delta`].
    pub fn chain_witness(&self, w: &[Handle]) -> Option<Vec<usize>> {
        let sw = self.follow(w);
        'start: for (i, obj) in self.delta.iter().enumerate() {
            if !obj.set.is_subset(&sw) {
                continue;
            }
            let mut chain = vec![i];
            let mut cur = obj.set.clone();
            for &g in w {
                cur = self.image(g, &cur).expect("inside S_w");
                match self.delta_index.get(&cur) {
                    Some(&j) => chain.push(j),
                    None => continue 'start,
                }
            }
            return Some(chain);
        }
        None
    }

    /// Membership in `D`.
    pub fn in_domain(&self, w: &[Handle]) -> bool {
        if w.iter().any(|&g| g as usize >= self.len()) {
            return false;
        }
        !self.removed.contains(w) && self.chain_witness(w).is_some()
    }

    /// `Π(w)`
    pub fn pi(&self, w: &[Handle]) -> Result<Handle> {
        if !self.in_domain(w) {
            return Err(Error::NotInDomain(self.describe_word(w)));
        }
        self.fold(w).ok_or_else(|| Error::NotInDomain(format!("product table has no entry along {}", self.describe_word(w))))
    }

    fn fold(&self, w: &[Handle]) -> Option<Handle> {
        let mut acc = self.unit;
        for (i, &g) in w.iter().enumerate() {
            acc = if i == 0 { g } else { self.pair_product(acc, g)? };
        }
        Some(acc)
    }

    /// `S_g` from the conjugation data.
    pub fn s_g(&self, g: Handle) -> ElemSet {
        self.follow(&[g])
    }

    /// `{x ∈ S : (g⁻¹, x, g) ∈ D and Π(g⁻¹, x, g) ∈ S}`
    pub fn s_g_by_products(&self, g: Handle) -> ElemSet {
        let s = self.sylow.order();
        ElemSet::from_iter(
            s,
            (0..s as u32).filter(|&x| {
                let w = [self.inv(g), self.embed(x), g];
                self.pi(&w).ok().and_then(|h| self.in_sylow(h)).is_some()
            }),
        )
    }

    /// `S_∅ = S`, `S_{(g)∘v} = (S_{g⁻¹} ∩ S_v)^{g⁻¹}`
    pub fn s_w(&self, w: &[Handle]) -> ElemSet {
        match w.split_first() {
            None => self.sylow.full(),
            Some((&g, v)) => {
                let gi = self.inv(g);
                let inner = self.s_g(gi).intersection(&self.s_w(v));
                self.image(gi, &inner).expect("inside S_{g⁻¹}")
            }
        }
    }

    /// `S_w` by following products along the word.
    pub fn s_w_by_products(&self, w: &[Handle]) -> ElemSet {
        let s = self.sylow.order();
        ElemSet::from_iter(
            s,
            (0..s as u32).filter(|&x| {
                let mut y = x;
                for &g in w {
                    let img = self.pi(&[self.inv(g), self.embed(y), g]).ok().and_then(|h| self.in_sylow(h));
                    match img {
                        Some(z) => y = z,
                        None => return false,
                    }
                }
                true
            }),
        )
    }

    /// `P^g`
    pub fn conjugate(&self, g: Handle, p: &ElemSet) -> Result<ElemSet> {
        self.image(g, p)
            .ok_or_else(|| Error::Precondition(format!("{} is not inside S_{}", self.sylow.describe(p), self.label(g))))
    }

    /// `N_L(P)` and `C_L(P)`, checked to be a group.
    pub fn normalizer_in_l(&self, p: &ElemSet) -> Result<Normalizer> {
        if !self.delta_index.contains_key(p) {
            return Err(Error::Precondition(format!("{} is not an object", self.sylow.describe(p))));
        }
        let elements: Vec<Handle> = self.handles().filter(|&g| self.image(g, p).as_ref() == Some(p)).collect();
        let centralizer: Vec<Handle> =
            elements.iter().copied().filter(|&g| p.iter().all(|x| self.conj[g as usize][x as usize] == x)).collect();
        let index: HashMap<Handle, usize> = elements.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut rows = vec![];
        for &a in &elements {
            let mut row = vec![];
            for &b in &elements {
                let ab = self
                    .pi(&[a, b])
                    .ok()
                    .and_then(|k| index.get(&k).copied())
                    .ok_or_else(|| Error::InvalidLocality(format!("N_L(P) is not closed at ({}, {})", self.label(a), self.label(b))))?;
                row.push(ab as u32);
            }
            rows.push(row);
        }
        let labels = elements.iter().map(|&g| self.label(g).to_string()).collect();
        let group = FiniteGroup::from_table(labels, rows)?;
        Ok(Normalizer { elements, centralizer, group })
    }

    /// Calls `f` on every word of length ≤ `max_len` whose prefixes all
    /// carry an object chain.
    pub fn for_each_chain_word<F: FnMut(&[Handle])>(&self, max_len: usize, mut f: F) {
        let mut word = vec![];
        f(&word);
        self.extend_words(&mut word, max_len, &mut f);
    }

    fn extend_words<F: FnMut(&[Handle])>(&self, word: &mut Vec<Handle>, max_len: usize, f: &mut F) {
        if word.len() == max_len {
            return;
        }
        for g in self.handles() {
            word.push(g);
            if self.chain_witness(word).is_some() {
                f(word);
                self.extend_words(word, max_len, f);
            }
            word.pop();
        }
    }

    /// The four partial-group axioms, cancellation, and bijectivity of
    /// conjugation, over all words up to `max_len`.
    pub fn check_partial_group_axioms(&self, max_len: usize) -> Report {
        let mut r = Report::new();
        let singles = self.handles().find(|&g| !self.in_domain(&[g]));
        r.verdict(SECTION, "length-one words", "every element is a word in D", singles.map(|g| self.describe_word(&[g])));
        let ident = self.handles().find(|&g| self.pi(&[g]).ok() != Some(g));
        let empty_ok = self.in_domain(&[]) && self.pi(&[]).ok() == Some(self.unit);
        r.verdict(
            SECTION,
            "unit and length-one products",
            "Π(∅) is the unit and Π(g) = g",
            if !empty_ok { Some("()".into()) } else { ident.map(|g| self.describe_word(&[g])) },
        );
        let mut sub_bad = None;
        let mut splice_bad = None;
        let mut inv_bad = None;
        let mut count = 0usize;
        self.for_each_chain_word(max_len, |w| {
            if !self.in_domain(w) {
                return;
            }
            count += 1;
            if sub_bad.is_none() {
                'sub: for i in 0..w.len() {
                    for j in i..=w.len() {
                        if (i, j) != (0, w.len()) && !self.in_domain(&w[i..j]) {
                            sub_bad = Some(format!("{} has factor {} outside D", self.describe_word(w), self.describe_word(&w[i..j])));
                            break 'sub;
                        }
                    }
                }
            }
            if splice_bad.is_none() {
                let whole = self.pi(w).ok();
                'splice: for i in 0..w.len() {
                    for j in i + 1..=w.len() {
                        let Ok(mid) = self.pi(&w[i..j]) else { continue };
                        let mut spliced = w[..i].to_vec();
                        spliced.push(mid);
                        spliced.extend_from_slice(&w[j..]);
                        if !self.in_domain(&spliced) || self.pi(&spliced).ok() != whole {
                            splice_bad = Some(format!("{} vs {}", self.describe_word(w), self.describe_word(&spliced)));
                            break 'splice;
                        }
                    }
                }
            }
            if inv_bad.is_none() {
                let mut ww: Vec<Handle> = w.iter().rev().map(|&g| self.inv(g)).collect();
                ww.extend_from_slice(w);
                if self.pi(&ww).ok() != Some(self.unit) {
                    inv_bad = Some(self.describe_word(&ww));
                }
            }
        });
        r.verdict(SECTION, "factor closure", format!("{count} words of D up to length {max_len}"), sub_bad);
        r.verdict(SECTION, "splicing", "Π(u∘v∘w) = Π(u∘(Π v)∘w)", splice_bad);
        r.verdict(SECTION, "inverses", "w⁻¹∘w ∈ D with product the unit", inv_bad);
        r.verdict(SECTION, "cancellation", "Π(a,x) = Π(a,y) forces x = y, on both sides", self.cancellation_witness());
        r.verdict(SECTION, "conjugation is injective", "x ↦ x^g on S_g", self.conjugation_witness());
        r
    }

    fn cancellation_witness(&self) -> Option<String> {
        for a in self.handles() {
            let mut left: HashMap<Handle, Handle> = HashMap::new();
            let mut right: HashMap<Handle, Handle> = HashMap::new();
            for x in self.handles() {
                if let Ok(k) = self.pi(&[a, x]) {
                    if let Some(y) = left.insert(k, x) {
                        return Some(format!("Π{} = Π{}", self.describe_word(&[a, x]), self.describe_word(&[a, y])));
                    }
                }
                if let Ok(k) = self.pi(&[x, a]) {
                    if let Some(y) = right.insert(k, x) {
                        return Some(format!("Π{} = Π{}", self.describe_word(&[x, a]), self.describe_word(&[y, a])));
                    }
                }
            }
        }
        None
    }

    fn conjugation_witness(&self) -> Option<String> {
        for g in self.handles() {
            let imgs: Vec<u32> = self.conj[g as usize].iter().copied().filter(|&y| y != NONE).collect();
            let distinct: HashSet<u32> = imgs.iter().copied().collect();
            if distinct.len() != imgs.len() {
                return Some(self.label(g).to_string());
            }
        }
        None
    }

    /// Chains versus `D`, agreement of the conjugation data with products,
    /// and closure of the object set.
    pub fn check_objectivity(&self, max_len: usize) -> Report {
        let mut r = Report::new();
        let mut o1 = None;
        let mut count = 0usize;
        self.for_each_chain_word(max_len, |w| {
            count += 1;
            if o1.is_none() && !self.in_domain(w) {
                o1 = Some(format!("{} carries an object chain but is not in D", self.describe_word(w)));
            }
        });
        for w in &self.removed {
            if o1.is_none() && w.len() > max_len && self.chain_witness(w).is_some() {
                o1 = Some(format!("{} carries an object chain but is not in D", self.describe_word(w)));
            }
        }
        r.verdict("objectivity", "(O1)", format!("{count} chain-carrying words up to length {max_len}"), o1);
        let mut conj_bad = None;
        for g in self.handles() {
            if self.s_g(g) != self.s_g_by_products(g) {
                conj_bad = Some(format!("S_g for g = {}", self.label(g)));
                break;
            }
            let off = self.s_g(g).iter().find(|&x| {
                let w = [self.inv(g), self.embed(x), g];
                self.pi(&w).ok() != Some(self.embed(self.conj[g as usize][x as usize]))
            });
            if let Some(x) = off {
                conj_bad = Some(format!("Π(g⁻¹, x, g) for g = {}, x = {}", self.label(g), self.sylow.group().label(x)));
                break;
            }
        }
        r.verdict("objectivity", "conjugation data", "partial conjugation agrees with products", conj_bad);
        r.verdict("objectivity", "(O2)", "object set is overgroup-closed and closed under conjugation", self.o2_witness());
        r
    }

    fn o2_witness(&self) -> Option<String> {
        let sg = self.sylow.group();
        let subs = sg.subgroups(&sg.full());
        for sub in &subs {
            if !self.delta_index.contains_key(sub) && self.delta.iter().any(|o| o.set.is_subset(sub)) {
                return Some(format!("overgroup {} is missing", self.sylow.describe(sub)));
            }
        }
        for obj in &self.delta {
            for g in self.handles() {
                if let Some(img) = self.image(g, &obj.set) {
                    if !self.delta_index.contains_key(&img) {
                        return Some(format!("{}^{} = {} is not an object", self.sylow.describe(&obj.set), self.label(g), self.sylow.describe(&img)));
                    }
                }
            }
        }
        None
    }

    /// Every `S_w` up to `max_len`, closed under intersection.
    pub fn omega_poset(&self, max_len: usize) -> Result<StratificationPoset> {
        let full = self.sylow.full();
        let mut members: BTreeSet<ElemSet> = BTreeSet::from([full]);
        let mut stable_after = None;
        for len in 1..=max_len + 1 {
            let mut next = members.clone();
            for x in &members {
                for g in self.handles() {
                    let gi = self.inv(g);
                    let inner = self.s_g(gi).intersection(x);
                    next.insert(self.image(gi, &inner).expect("inside S_{g⁻¹}"));
                }
            }
            loop {
                let list: Vec<ElemSet> = next.iter().cloned().collect();
                let before = next.len();
                for a in &list {
                    for b in &list {
                        next.insert(a.intersection(b));
                    }
                }
                if next.len() == before {
                    break;
                }
            }
            if next == members {
                stable_after = Some(len - 1);
                break;
            }
            members = next;
        }
        let stable_after = stable_after.ok_or_else(|| Error::Precondition(format!("members still growing at word length {}", max_len + 1)))?;
        let mut members: Vec<ElemSet> = members.into_iter().collect();
        sort_sets(&mut members);
        let mut dim = vec![0usize; members.len()];
        for i in 0..members.len() {
            for j in 0..i {
                if members[j].is_subset(&members[i]) && members[j] != members[i] {
                    dim[i] = dim[i].max(dim[j] + 1);
                }
            }
        }
        Ok(StratificationPoset { members, dim, stable_after })
    }
}

impl Locality {
    /// Centric radicals are objects, object normalizers have
    /// characteristic `p`, and normalizers grow inside `S`.
    pub fn check_proper(&self) -> Report {
        match FusionSystem::from_locality(self) {
            Ok(f) => self.check_proper_on(&f),
            Err(e) => {
                let mut r = Report::new();
                r.inconclusive("proper", "PL1", format!("fusion system unavailable: {e}"));
                r
            }
        }
    }

    /// As [`Locality::check_proper`], with centric radicals taken from a
    /// given fusion system on the same `S`.
    pub fn check_proper_on(&self, f: &FusionSystem) -> Report {
        let mut r = Report::new();
        match f.centric_radicals() {
            Ok(cr) => {
                let missing = cr.iter().find(|&&i| {
                    let m = f.member(i);
                    !self.delta.iter().any(|o| o.set == m.set && o.full_torus == m.full_torus)
                });
                r.verdict(
                    "proper",
                    "PL1",
                    format!("{} centric radical subgroups", cr.len()),
                    missing.map(|&i| format!("{} is not an object", f.describe(i))),
                );
            }
            Err(e) => r.inconclusive("proper", "PL1", format!("centric radicals unavailable: {e}")),
        }
        let mut pl2 = None;
        for o in &self.delta {
            match self.normalizer_in_l(&o.set) {
                Ok(n) if n.group.has_characteristic_p(&n.group.full(), self.prime) => {}
                Ok(_) => {
                    pl2.get_or_insert(format!("N_L({}) is not of characteristic p", self.sylow.describe(&o.set)));
                }
                Err(e) => {
                    pl2.get_or_insert(format!("N_L({}): {e}", self.sylow.describe(&o.set)));
                }
            }
        }
        r.verdict("proper", "PL2", format!("{} object normalizers", self.delta.len()), pl2);
        match verify_structure(&self.sylow.dp, self.sylow.slice.level) {
            Ok(v) => {
                let bad = v.into_iter().find(|v| v.law == "normalizer increasing").map(|v| v.detail);
                r.verdict("proper", "PL3", "N_Q(P) > P for P < Q ≤ S", bad);
            }
            Err(e) => r.inconclusive("proper", "PL3", format!("normalizers unavailable: {e}")),
        }
        r
    }

    /// Proper, and every object normalizer is virtually p-toral: it stays
    /// below the working truncation, or its object carries the full torus
    /// and `N_L(P)` has index at most `budget` over the torus slice.
    pub fn check_compact(&self, budget: usize) -> Report {
        let mut r = self.check_proper();
        let sy = &self.sylow;
        if sy.dp.torus_rank() == 0 {
            r.pass("compact", "virtually p-toral", "S is finite");
            return r;
        }
        let torus = sy.slice.torus_set().len();
        let mut bad = None;
        for o in &self.delta {
            let n = match self.normalizer_in_l(&o.set) {
                Ok(n) => n,
                Err(e) => {
                    bad.get_or_insert(format!("N_L({}): {e}", sy.describe(&o.set)));
                    continue;
                }
            };
            let top = n.elements.iter().filter_map(|&g| self.in_sylow(g)).map(|x| sy.element(x).level()).max().unwrap_or(0);
            let below = top < sy.slice.level;
            let index = n.elements.len().div_ceil(torus);
            if !(below || (o.full_torus && index <= budget)) {
                bad.get_or_insert(format!(
                    "N_L({}) reaches level {top} with {} elements and no full torus",
                    sy.describe(&o.set),
                    n.elements.len()
                ));
            }
        }
        r.verdict("compact", "virtually p-toral", format!("{} object normalizers, torus index budget {budget}", self.delta.len()), bad);
        r
    }
}

/// Subgroups `P ≤ S` with `C_S(P^g) ≤ P^g` whenever `P^g ≤ S`.
pub fn group_centrics(g: &FiniteGroup, s: &ElemSet) -> Vec<ElemSet> {
    g.subgroups(s)
        .into_iter()
        .filter(|p| {
            g.elements().all(|x| {
                let q = g.conj_set(p, x);
                !q.is_subset(s) || g.centralizer(&q, s).is_subset(&q)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn s4() -> (FiniteGroup, ElemSet) {
        let g = FiniteGroup::symmetric(4);
        let s = g.set_of_labels(&["()", "(1,2)(3,4)", "(1,3)(2,4)", "(1,4)(2,3)", "(1,3)", "(2,4)", "(1,2,3,4)", "(1,4,3,2)"]).unwrap();
        (g, s)
    }

    fn s4_locality() -> Locality {
        let (g, s) = s4();
        Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s)).unwrap()
    }

    #[test]
    fn s4_centrics_are_the_expected_four() {
        let (g, s) = s4();
        let c = group_centrics(&g, &s);
        let sizes: Vec<usize> = c.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4, 8]);
        assert!(c.contains(&g.o_p(&g.full(), 2)));
    }

    #[test]
    fn products_and_domain() {
        let l = s4_locality();
        assert_eq!(l.len(), 24);
        let g = l.find("(1,2,3)").unwrap();
        assert_eq!(l.pi(&[g]).unwrap(), g);
        assert_eq!(l.pi(&[]).unwrap(), l.unit());
        assert_eq!(l.pi(&[l.inv(g), g]).unwrap(), l.unit());
        let t = l.find("(1,2)").unwrap();
        assert!(l.in_domain(&[g, t]));
    }

    #[test]
    fn s_g_matches_products() {
        let l = s4_locality();
        for g in l.handles() {
            assert_eq!(l.s_g(g), l.s_g_by_products(g));
        }
        assert_eq!(l.s_g(l.unit()), l.sylow().full());
        let c3 = l.find("(1,2,3)").unwrap();
        let sg = l.s_g(c3);
        assert_eq!(sg.len(), 4);
        let w = [c3, l.inv(c3)];
        assert_eq!(l.s_w(&w), l.s_w_by_products(&w));
    }

    #[test]
    fn axioms_hold_on_s4() {
        let l = s4_locality();
        let r = l.check_partial_group_axioms(3);
        assert!(r.passed(), "{r}");
        let r = l.check_objectivity(3);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn removing_a_word_breaks_objectivity() {
        let mut l = s4_locality();
        let a = l.find("(1,2,3)").unwrap();
        let b = l.find("(1,2)(3,4)").unwrap();
        l.remove_word(&[a, b]);
        let r = l.check_objectivity(3);
        assert!(!r.passed());
        assert!(r.failures().any(|e| e.axiom == "(O1)"));
    }

    #[test]
    fn normalizers() {
        let l = s4_locality();
        let full = l.sylow().full();
        let n = l.normalizer_in_l(&full).unwrap();
        assert_eq!(n.elements.len(), 8);
        let v = l.delta().iter().find(|o| o.set.len() == 4 && l.normalizer_in_l(&o.set).unwrap().elements.len() == 24);
        assert!(v.is_some());
    }

    #[test]
    fn omega_is_intersection_closed() {
        let l = s4_locality();
        let om = l.omega_poset(4).unwrap();
        assert!(om.members.contains(&l.sylow().full()));
        for a in &om.members {
            for b in &om.members {
                assert!(om.members.contains(&a.intersection(b)));
            }
        }
    }

    #[test]
    fn proper_and_compact_on_desk_groups() {
        let l = s4_locality();
        assert!(l.check_proper().passed(), "{}", l.check_proper());
        assert!(l.check_compact(8).passed());
        let s3 = FiniteGroup::symmetric(3);
        let c3 = s3.sylow_subgroups(&s3.full(), 3).remove(0);
        let l = Locality::from_finite_group(&s3, 3, &c3, &group_centrics(&s3, &c3)).unwrap();
        assert!(l.check_compact(8).passed());
        let d8 = FiniteGroup::dihedral(4);
        let l = Locality::from_finite_group(&d8, 2, &d8.full(), &group_centrics(&d8, &d8.full())).unwrap();
        assert!(l.check_compact(8).passed());
    }

    #[test]
    fn missing_radical_breaks_pl1() {
        let (g, s) = s4();
        let v = g.o_p(&g.full(), 2);
        let delta: Vec<ElemSet> = group_centrics(&g, &s).into_iter().filter(|p| p != &v).collect();
        let l = Locality::from_finite_group(&g, 2, &s, &delta).unwrap();
        assert!(l.check_objectivity(3).passed());
        assert!(l.check_proper().passed());
        let subs = g.subgroups(&s);
        let ambient = FusionSystem::from_locality(&Locality::from_finite_group(&g, 2, &s, &subs).unwrap()).unwrap();
        let r = l.check_proper_on(&ambient);
        assert_eq!(r.status_of("PL1"), Some(crate::report::Status::Fail));
        assert_eq!(r.status_of("PL2"), Some(crate::report::Status::Pass));
    }

    #[test]
    fn torus_flag_decides_compactness() {
        let m = 3;
        let dp = DPGroup::inversion_extension(2, m).unwrap();
        let slice = dp.slice(m).unwrap();
        let torus = slice.torus_set();
        let full = slice.group.full();
        let flagged = vec![Object { set: torus.clone(), full_torus: true }, Object { set: full.clone(), full_torus: true }];
        let l = Locality::group_locality(&dp, m, flagged).unwrap();
        assert!(l.check_compact(4).passed(), "{}", l.check_compact(4));
        let bare = vec![Object::finite(torus), Object::finite(full)];
        let l = Locality::group_locality(&dp, m, bare).unwrap();
        let r = l.check_compact(4);
        assert_eq!(r.status_of("virtually p-toral"), Some(crate::report::Status::Fail));
    }
}
