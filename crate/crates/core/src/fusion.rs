//! Fusion systems over the working slice of `S`.
//!
//! A fusion system is generated by partial maps on `S` plus all inner
//! conjugations. Every morphism is an explicit image vector over slice
//! indices with [`NONE`] outside its source. Orbits are found by a
//! breadth-first search over generator edges; for each orbit we keep a
//! transversal from a root member and the automorphism group of the root,
//! so that `Iso(P, Q) = τ_P⁻¹ · Aut(root) · τ_Q`.
//!
//! Checks that need exact normalizers are restricted to admissible
//! members: torus subgroups, and finite subgroups whose normalizer in `S`
//! lies strictly below the working truncation.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite::{ElemSet, FiniteGroup};
use crate::partial_group::{Locality, NONE};
use crate::ptoral::{DPElement, DPGroup, OrderPair, Slice, Subgroup};
use crate::report::{Report, Status};

const SECTION: &str = "fusion";

/// A morphism `source → target` between family members.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Map {
    pub source: usize,
    pub target: usize,
    pub img: Vec<u32>,
}

pub fn compose(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().map(|&x| if x == NONE { NONE } else { b[x as usize] }).collect()
}

pub fn invert(a: &[u32]) -> Vec<u32> {
    let mut out = vec![NONE; a.len()];
    for (x, &y) in a.iter().enumerate() {
        if y != NONE {
            out[y as usize] = x as u32;
        }
    }
    out
}

pub fn restrict(a: &[u32], set: &ElemSet) -> Vec<u32> {
    a.iter().enumerate().map(|(x, &y)| if set.contains(x as u32) { y } else { NONE }).collect()
}

fn identity_on(set: &ElemSet, n: usize) -> Vec<u32> {
    (0..n as u32).map(|x| if set.contains(x) { x } else { NONE }).collect()
}

fn image_set(a: &[u32]) -> ElemSet {
    ElemSet::from_iter(a.len(), a.iter().copied().filter(|&y| y != NONE))
}

fn domain_set(a: &[u32]) -> ElemSet {
    ElemSet::from_iter(a.len(), (0..a.len() as u32).filter(|&x| a[x as usize] != NONE))
}

#[derive(Clone, Debug)]
pub struct Member {
    pub set: ElemSet,
    pub full_torus: bool,
    pub subgroup: Subgroup,
}

#[derive(Clone, Debug)]
struct Orbit {
    members: Vec<usize>,
    transversal: HashMap<usize, Vec<u32>>,
    aut_root: Vec<Vec<u32>>,
    aut_lookup: HashSet<Vec<u32>>,
}

/// `Aut_F(P)` with `Inn(P)` and `Aut_S(P)` inside it.
#[derive(Clone, Debug)]
pub struct OutGroup {
    pub member: usize,
    pub aut: Vec<Map>,
    pub inn: Vec<Map>,
    pub aut_s: Vec<Map>,
    pub aut_group: FiniteGroup,
    pub inn_set: ElemSet,
    pub aut_s_set: ElemSet,
    pub out: FiniteGroup,
}

impl OutGroup {
    pub fn out_order(&self) -> usize {
        self.aut.len() / self.inn.len()
    }

    pub fn out_s_order(&self) -> usize {
        self.aut_s.len() / self.inn.len()
    }

    /// `[Out_F(P) : Out_S(P)]`
    pub fn sylow_index(&self) -> usize {
        self.aut.len() / self.aut_s.len()
    }

    pub fn inn_is_normal(&self) -> bool {
        let g = &self.aut_group;
        g.normalizer(&self.inn_set, &g.full()) == g.full()
    }

    /// `O_p(Aut_F(P))`
    pub fn o_p(&self, p: u32) -> ElemSet {
        self.aut_group.o_p(&self.aut_group.full(), p)
    }
}

/// Per-member facts compared across truncation levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MemberSummary {
    pub subgroup: String,
    pub orbit: Vec<String>,
    pub fully_normalized: bool,
    pub fully_centralized: bool,
    pub aut_order: Option<usize>,
    pub out_order: usize,
    pub out_s_order: usize,
    pub centric: bool,
    pub centric_radical: bool,
}

#[derive(Clone, Debug)]
pub struct FusionSystem {
    dp: DPGroup,
    slice: Slice,
    members: Vec<Member>,
    lookup: HashMap<(ElemSet, bool), usize>,
    orbit_of: Vec<usize>,
    orbits: Vec<Orbit>,
    normalizers: Vec<std::result::Result<Subgroup, String>>,
    centralizers: Vec<std::result::Result<Subgroup, String>>,
    norm_sets: Vec<ElemSet>,
    generators: Vec<Vec<u32>>,
    escaped: usize,
}

impl FusionSystem {
    /// Closes `generators` (partial maps on slice indices) together with
    /// all inner conjugations over the given family of members.
    pub fn generate(dp: &DPGroup, level: u32, family: Vec<(ElemSet, bool)>, generators: Vec<Vec<u32>>) -> Result<Self> {
        let slice = dp.slice(level)?;
        let g = &slice.group;
        let n = g.order();
        let mut family = family;
        family.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.1.cmp(&b.1)).then_with(|| a.0.cmp(&b.0)));
        family.dedup();
        let mut members = vec![];
        let mut lookup = HashMap::new();
        for (set, flag) in family {
            if !g.is_subgroup(&set) {
                return Err(Error::NotSubgroup(format!("family member {set:?}")));
            }
            let subgroup = dp.from_slice_set(&slice, &set, flag);
            let flag = subgroup.contains_full_torus();
            if lookup.contains_key(&(set.clone(), flag)) {
                continue;
            }
            lookup.insert((set.clone(), flag), members.len());
            members.push(Member { set, full_torus: flag, subgroup });
        }
        let mut gens: BTreeSet<Vec<u32>> = BTreeSet::new();
        for gen in generators {
            if gen.len() != n {
                return Err(Error::InvalidGroup("generator has the wrong length".into()));
            }
            let dom = domain_set(&gen);
            if !g.is_subgroup(&dom) {
                return Err(Error::InvalidGroup("generator domain is not a subgroup".into()));
            }
            for a in dom.iter() {
                for b in dom.iter() {
                    if gen[g.mul(a, b) as usize] != g.mul(gen[a as usize], gen[b as usize]) {
                        return Err(Error::InvalidGroup("generator is not a homomorphism".into()));
                    }
                }
            }
            if image_set(&gen).len() != dom.len() {
                return Err(Error::InvalidGroup("generator is not injective".into()));
            }
            gens.insert(gen);
        }
        for x in g.elements() {
            gens.insert(g.elements().map(|y| g.conj(y, x)).collect());
        }
        let generators: Vec<Vec<u32>> = gens.into_iter().collect();
        let mut adj: Vec<Vec<(usize, Vec<u32>)>> = vec![vec![]; members.len()];
        let mut escaped = 0;
        for gen in &generators {
            let dom = domain_set(gen);
            for (i, m) in members.iter().enumerate() {
                if !m.set.is_subset(&dom) {
                    continue;
                }
                let img = restrict(gen, &m.set);
                match lookup.get(&(image_set(&img), m.full_torus)) {
                    Some(&j) => {
                        adj[j].push((i, invert(&img)));
                        adj[i].push((j, img));
                    }
                    None => escaped += 1,
                }
            }
        }
        let mut orbit_of = vec![usize::MAX; members.len()];
        let mut orbits = vec![];
        for root in 0..members.len() {
            if orbit_of[root] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let mut transversal = HashMap::from([(root, identity_on(&members[root].set, n))]);
            let mut order = vec![root];
            let mut queue = VecDeque::from([root]);
            orbit_of[root] = id;
            while let Some(p) = queue.pop_front() {
                for (q, e) in &adj[p] {
                    if orbit_of[*q] == usize::MAX {
                        orbit_of[*q] = id;
                        transversal.insert(*q, compose(&transversal[&p], e));
                        order.push(*q);
                        queue.push_back(*q);
                    }
                }
            }
            let mut schreier: BTreeSet<Vec<u32>> = BTreeSet::new();
            for &p in &order {
                for (q, e) in &adj[p] {
                    let s = compose(&compose(&transversal[&p], e), &invert(&transversal[q]));
                    schreier.insert(s);
                }
            }
            let aut_root = close_group(identity_on(&members[root].set, n), schreier.into_iter().collect());
            let aut_lookup = aut_root.iter().cloned().collect();
            order.sort();
            orbits.push(Orbit { members: order, transversal, aut_root, aut_lookup });
        }
        let full = dp.full_group();
        let normalizers = members.iter().map(|m| dp.normalizer(&m.subgroup, &full).map_err(|e| e.to_string())).collect();
        let centralizers = members.iter().map(|m| dp.centralizer(&m.subgroup, &full).map_err(|e| e.to_string())).collect();
        let norm_sets = members.iter().map(|m| g.normalizer(&m.set, &g.full())).collect();
        Ok(FusionSystem { dp: dp.clone(), slice, members, lookup, orbit_of, orbits, normalizers, centralizers, norm_sets, generators, escaped })
    }

    /// `F_S(L)`: all subgroups of the slice of `S`, plus every torus
    /// subgroup when `S` has positive rank.
    pub fn from_locality(l: &Locality) -> Result<Self> {
        let sy = l.sylow();
        let family = default_family(&sy.dp, &sy.slice);
        let gens = l.handles().map(|g| l.conj_map(g).to_vec()).collect();
        Self::generate(&sy.dp, sy.slice.level, family, gens)
    }

    pub fn dp(&self) -> &DPGroup {
        &self.dp
    }

    pub fn slice(&self) -> &Slice {
        &self.slice
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.members[i]
    }

    pub fn generators(&self) -> &[Vec<u32>] {
        &self.generators
    }

    /// Number of generator restrictions whose image left the family.
    pub fn escaped(&self) -> usize {
        self.escaped
    }

    pub fn find(&self, set: &ElemSet, full_torus: bool) -> Option<usize> {
        self.lookup.get(&(set.clone(), full_torus)).copied()
    }

    pub fn find_subgroup(&self, s: &Subgroup) -> Option<usize> {
        let set = self.dp.slice_set(s, &self.slice)?;
        self.find(&set, s.contains_full_torus())
    }

    /// The member for `S` itself.
    pub fn top(&self) -> usize {
        self.find_subgroup(&self.dp.full_group()).expect("S is a member")
    }

    pub fn describe(&self, i: usize) -> String {
        let m = &self.members[i];
        let g = &self.slice.group;
        if m.full_torus {
            let f = self.dp.finite_part();
            let k = m.subgroup.finite_image().expect("torus member");
            let labels: Vec<&str> = k.iter().map(|x| f.label(x)).collect();
            format!("T⋊{{{}}}", labels.join(", "))
        } else {
            let labels: Vec<&str> = m.set.iter().map(|x| g.label(x)).collect();
            format!("{{{}}}", labels.join(", "))
        }
    }

    pub fn orbit(&self, i: usize) -> &[usize] {
        &self.orbits[self.orbit_of[i]].members
    }

    pub fn orbit_id(&self, i: usize) -> usize {
        self.orbit_of[i]
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    /// Orbits as lists of member indices, ordered by their first member.
    pub fn orbit_partition(&self) -> Vec<Vec<usize>> {
        self.orbits.iter().map(|o| o.members.clone()).collect()
    }

    /// `Iso_F(P, Q)`
    pub fn iso(&self, i: usize, j: usize) -> Vec<Map> {
        if self.orbit_of[i] != self.orbit_of[j] {
            return vec![];
        }
        let o = &self.orbits[self.orbit_of[i]];
        let ti = invert(&o.transversal[&i]);
        let tj = &o.transversal[&j];
        let mut out: Vec<Map> =
            o.aut_root.iter().map(|a| Map { source: i, target: j, img: compose(&compose(&ti, a), tj) }).collect();
        out.sort();
        out
    }

    pub fn aut(&self, i: usize) -> Vec<Map> {
        self.iso(i, i)
    }

    /// `Hom_F(P, Q)`: isomorphisms onto conjugates of `P` inside `Q`.
    pub fn hom(&self, i: usize, j: usize) -> Vec<Map> {
        let mut out = vec![];
        for &k in self.orbit(i) {
            if self.dp.is_subgroup(&self.members[k].subgroup, &self.members[j].subgroup) {
                out.extend(self.iso(i, k).into_iter().map(|m| Map { target: j, ..m }));
            }
        }
        out.sort();
        out
    }

    /// Whether an explicit map from a member lies in the fusion system.
    pub fn is_morphism(&self, m: &Map) -> bool {
        let src = &self.members[m.source];
        if domain_set(&m.img) != src.set {
            return false;
        }
        let Some(k) = self.find(&image_set(&m.img), src.full_torus) else { return false };
        if self.orbit_of[k] != self.orbit_of[m.source] {
            return false;
        }
        let o = &self.orbits[self.orbit_of[k]];
        let a = compose(&compose(&o.transversal[&m.source], &m.img), &invert(&o.transversal[&k]));
        o.aut_lookup.contains(&a)
    }

    /// `c_x` restricted to a member, as a map onto its image member.
    pub fn conjugation(&self, i: usize, x: u32) -> Option<Map> {
        let g = &self.slice.group;
        let m = &self.members[i];
        let img: Vec<u32> = (0..g.order() as u32).map(|y| if m.set.contains(y) { g.conj(y, x) } else { NONE }).collect();
        let j = self.find(&image_set(&img), m.full_torus)?;
        Some(Map { source: i, target: j, img })
    }

    pub fn inn(&self, i: usize) -> Vec<Map> {
        self.conjugations_by(i, &self.members[i].set)
    }

    /// `Aut_S(P)`, realized by elements of `N_S(P)` in the slice.
    pub fn aut_s(&self, i: usize) -> Vec<Map> {
        self.conjugations_by(i, &self.norm_sets[i])
    }

    fn conjugations_by(&self, i: usize, by: &ElemSet) -> Vec<Map> {
        let set: BTreeSet<Map> = by.iter().filter_map(|x| self.conjugation(i, x)).collect();
        set.into_iter().collect()
    }

    pub fn out_group(&self, i: usize) -> Result<OutGroup> {
        let aut = self.aut(i);
        let imgs: Vec<Vec<u32>> = aut.iter().map(|m| m.img.clone()).collect();
        let aut_group = FiniteGroup::tabulate(&imgs, |a, b| compose(a, b), |a| format!("{a:?}"))?;
        let index: HashMap<&Vec<u32>, u32> = imgs.iter().enumerate().map(|(k, a)| (a, k as u32)).collect();
        let inn = self.inn(i);
        let aut_s = self.aut_s(i);
        let to_set = |ms: &[Map]| -> Result<ElemSet> {
            let mut s = ElemSet::empty(imgs.len());
            for m in ms {
                s.insert(*index.get(&m.img).ok_or_else(|| Error::Precondition("inner map missing from Aut_F".into()))?);
            }
            Ok(s)
        };
        let inn_set = to_set(&inn)?;
        let aut_s_set = to_set(&aut_s)?;
        let out = aut_group.quotient(&aut_group.full(), &inn_set);
        Ok(OutGroup { member: i, aut, inn, aut_s, aut_group, inn_set, aut_s_set, out })
    }

    pub fn normalizer(&self, i: usize) -> std::result::Result<&Subgroup, &str> {
        self.normalizers[i].as_ref().map_err(|e| e.as_str())
    }

    pub fn centralizer(&self, i: usize) -> std::result::Result<&Subgroup, &str> {
        self.centralizers[i].as_ref().map_err(|e| e.as_str())
    }

    /// `N_S(P) ∩ slice`
    pub fn normalizer_set(&self, i: usize) -> &ElemSet {
        &self.norm_sets[i]
    }

    /// Torus member, or normalizer known exactly and strictly below the
    /// working truncation.
    pub fn is_admissible(&self, i: usize) -> bool {
        if self.members[i].full_torus || self.dp.torus_rank() == 0 {
            return true;
        }
        match &self.normalizers[i] {
            Ok(n) => n.level().is_none_or(|l| l < self.slice.level),
            Err(_) => false,
        }
    }

    pub fn admissible(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.is_admissible(i)).collect()
    }

    fn pair(&self, s: &std::result::Result<Subgroup, String>) -> Option<OrderPair> {
        s.as_ref().ok().map(|s| self.dp.order_pair(s))
    }

    /// A conjugate with a strictly larger normalizer, if one exists.
    pub fn larger_normalizer(&self, i: usize) -> Result<Option<usize>> {
        self.larger(i, &self.normalizers)
    }

    pub fn larger_centralizer(&self, i: usize) -> Result<Option<usize>> {
        self.larger(i, &self.centralizers)
    }

    fn larger(&self, i: usize, table: &[std::result::Result<Subgroup, String>]) -> Result<Option<usize>> {
        let mine = self.pair(&table[i]).ok_or_else(|| Error::NotRepresentable(self.describe(i)))?;
        for &q in self.orbit(i) {
            let theirs = self.pair(&table[q]).ok_or_else(|| Error::NotRepresentable(self.describe(q)))?;
            if theirs > mine {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    pub fn is_fully_order_normalized(&self, i: usize) -> Result<bool> {
        Ok(self.larger_normalizer(i)?.is_none())
    }

    pub fn is_fully_order_centralized(&self, i: usize) -> Result<bool> {
        Ok(self.larger_centralizer(i)?.is_none())
    }

    fn is_self_centralizing(&self, i: usize) -> Option<bool> {
        let c = self.centralizers[i].as_ref().ok()?;
        Some(self.dp.is_subgroup(c, &self.members[i].subgroup))
    }

    /// `C_S(Q) ≤ Q` for every `Q` in the orbit.
    pub fn is_centric(&self, i: usize) -> bool {
        self.orbit(i).iter().all(|&q| self.is_self_centralizing(q) == Some(true))
    }

    pub fn is_centric_radical(&self, i: usize) -> Result<bool> {
        if !self.is_centric(i) {
            return Ok(false);
        }
        let out = self.out_group(i)?;
        Ok(out.o_p(self.dp.prime()) == out.inn_set)
    }

    pub fn centrics(&self) -> Vec<usize> {
        self.admissible().into_iter().filter(|&i| self.is_centric(i)).collect()
    }

    pub fn centric_radicals(&self) -> Result<Vec<usize>> {
        let mut out = vec![];
        for i in self.centrics() {
            if self.is_centric_radical(i)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Every isomorphism between members, as a stored list.
    pub fn isomorphisms(&self) -> Vec<Map> {
        let mut out = vec![];
        for o in &self.orbits {
            for &i in &o.members {
                for &j in &o.members {
                    out.extend(self.iso(i, j));
                }
            }
        }
        out
    }

    /// Whether a stored list of isomorphisms is closed under inverses,
    /// composition, restriction to members, and contains inner maps.
    pub fn check_closure(&self, stored: &[Map]) -> Report {
        let mut r = Report::new();
        let set: HashSet<&Map> = stored.iter().collect();
        let name = |m: &Map| format!("{} → {} by {:?}", self.describe(m.source), self.describe(m.target), m.img);
        let inner = (0..self.members.len())
            .flat_map(|i| self.inn(i).into_iter().chain(self.slice.group.elements().filter_map(move |x| self.conjugation(i, x))))
            .find(|m| !set.contains(m));
        r.verdict(SECTION, "inner maps stored", "every c_x between members", inner.as_ref().map(name));
        let inv = stored.iter().find_map(|m| {
            let back = Map { source: m.target, target: m.source, img: invert(&m.img) };
            (!set.contains(&back)).then_some(back)
        });
        r.verdict(SECTION, "inverse closure", "inverse of every stored isomorphism", inv.as_ref().map(name));
        let mut by_source: HashMap<usize, Vec<&Map>> = HashMap::new();
        for m in stored {
            by_source.entry(m.source).or_default().push(m);
        }
        let comp = stored.iter().find_map(|a| {
            by_source.get(&a.target).and_then(|bs| {
                bs.iter().find_map(|b| {
                    let c = Map { source: a.source, target: b.target, img: compose(&a.img, &b.img) };
                    (!set.contains(&c)).then_some(c)
                })
            })
        });
        r.verdict(SECTION, "composition closure", format!("{} stored isomorphisms", stored.len()), comp.as_ref().map(name));
        let rest = stored.iter().find_map(|m| {
            (0..self.members.len()).find_map(|k| {
                let sub = &self.members[k];
                if k == m.source || !sub.set.is_subset(&self.members[m.source].set) {
                    return None;
                }
                let img = restrict(&m.img, &sub.set);
                let t = self.find(&image_set(&img), sub.full_torus)?;
                let c = Map { source: k, target: t, img };
                (!set.contains(&c)).then_some(c)
            })
        });
        r.verdict(SECTION, "restriction closure", "restrictions to members", rest.as_ref().map(name));
        r
    }

    /// Finiteness of `Out_F(P)`, full centralization, and the Sylow
    /// condition, at every fully order-normalized admissible member.
    pub fn check_saturation_i(&self) -> Report {
        let mut r = Report::new();
        let p = self.dp.prime() as usize;
        let mut checked = 0;
        let (mut cen_bad, mut syl_bad, mut fin_bad) = (None, None, None);
        for i in self.admissible() {
            let normalized = match self.is_fully_order_normalized(i) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let out = match self.out_group(i) {
                Ok(o) => o,
                Err(e) => {
                    fin_bad.get_or_insert(format!("{}: {e}", self.describe(i)));
                    continue;
                }
            };
            if !out.inn_is_normal() {
                fin_bad.get_or_insert(format!("{}: Inn(P) is not normal in Aut_F(P)", self.describe(i)));
            }
            if !normalized {
                continue;
            }
            checked += 1;
            if self.is_fully_order_centralized(i).ok() != Some(true) && cen_bad.is_none() {
                cen_bad = Some(self.describe(i));
            }
            if out.sylow_index() % p == 0 && syl_bad.is_none() {
                syl_bad = Some(format!(
                    "{} with |Out_F(P)| = {}, |Out_S(P)| = {}",
                    self.describe(i),
                    out.out_order(),
                    out.out_s_order()
                ));
            }
        }
        r.verdict(SECTION, "(I) Out_F(P) finite", "every Aut_F(P) enumerated, Inn(P) normal", fin_bad);
        r.verdict(SECTION, "(I) fully centralized", format!("{checked} fully order-normalized members"), cen_bad);
        r.verdict(SECTION, "(I) Sylow", "[Out_F(P) : Out_S(P)] prime to p", syl_bad);
        r
    }

    /// `N_φ = {g ∈ N_S(P) : φ⁻¹ c_g φ ∈ Aut_S(Pφ)}`
    pub fn n_phi(&self, phi: &Map) -> ElemSet {
        let g = &self.slice.group;
        let q = phi.target;
        let aut_s: HashSet<Vec<u32>> = self.aut_s(q).into_iter().map(|m| m.img).collect();
        let back = invert(&phi.img);
        g.set(self.norm_sets[phi.source].iter().filter(|&x| {
            let Some(c) = self.conjugation(phi.source, x) else { return false };
            aut_s.contains(&compose(&compose(&back, &c.img), &phi.img))
        }))
    }

    /// A member holding `N_φ`, preferring the torus member when `N_φ`
    /// contains the working torus.
    fn n_phi_member(&self, set: &ElemSet, source: usize) -> Option<usize> {
        let torus = self.slice.torus_set();
        let wants_torus = self.normalizers[source].as_ref().is_ok_and(|n| n.contains_full_torus()) && torus.is_subset(set);
        if wants_torus {
            if let Some(k) = self.find(set, true) {
                return Some(k);
            }
        }
        self.find(set, false)
    }

    /// Extension of each `φ: P → Pφ` with `Pφ` fully order-centralized to
    /// some `φ̄ ∈ Hom_F(N_φ, S)`.
    pub fn check_saturation_ii(&self) -> Report {
        let mut r = Report::new();
        let top = self.top();
        let mut count = 0;
        let mut bad = None;
        let mut unknown = None;
        for i in self.admissible() {
            for &q in self.orbit(i) {
                if !self.is_admissible(q) || self.is_fully_order_centralized(q).ok() != Some(true) {
                    continue;
                }
                for phi in self.iso(i, q) {
                    count += 1;
                    let nset = self.n_phi(&phi);
                    let Some(n) = self.n_phi_member(&nset, i) else {
                        unknown.get_or_insert(format!("N_φ for φ: {} → {}", self.describe(i), self.describe(q)));
                        continue;
                    };
                    let found = self.hom(n, top).into_iter().any(|psi| {
                        self.members[i].set.iter().all(|x| psi.img[x as usize] == phi.img[x as usize])
                    });
                    if !found && bad.is_none() {
                        bad = Some(format!(
                            "φ: {} → {} by {:?} has no extension over N_φ = {}",
                            self.describe(i),
                            self.describe(q),
                            phi.img,
                            self.describe(n)
                        ));
                    }
                }
            }
        }
        match (bad, unknown) {
            (Some(w), _) => r.fail(SECTION, "(II) extension", format!("{count} maps checked"), w),
            (None, Some(w)) => r.inconclusive(SECTION, "(II) extension", format!("{w} is outside the family")),
            (None, None) => r.pass(SECTION, "(II) extension", format!("{count} maps checked")),
        }
        r
    }

    /// The union of an increasing chain with compatible maps into `S`
    /// lies in the fusion system. Inconclusive when a chain member is not
    /// visible at the working truncation.
    pub fn check_saturation_iii(&self, chain: &[Subgroup], maps: &[Vec<(DPElement, DPElement)>]) -> Result<Status> {
        if chain.len() != maps.len() || chain.is_empty() {
            return Err(Error::Precondition("one map per chain member is required".into()));
        }
        let mut ids = vec![];
        for s in chain {
            match self.find_subgroup(s) {
                Some(k) => ids.push(k),
                None => return Ok(Status::Inconclusive),
            }
        }
        let n = self.slice.group.order();
        let mut imgs = vec![];
        for (k, pairs) in ids.iter().zip(maps) {
            let mut img = vec![NONE; n];
            for (a, b) in pairs {
                let (Some(x), Some(y)) = (self.slice.index_of(a), self.slice.index_of(b)) else {
                    return Ok(Status::Inconclusive);
                };
                img[x as usize] = y;
            }
            if domain_set(&img) != self.members[*k].set {
                return Err(Error::Precondition(format!("map is not defined on all of {}", self.describe(*k))));
            }
            imgs.push(img);
        }
        for w in ids.windows(2).zip(imgs.windows(2)) {
            let (pair, maps) = w;
            if !self.members[pair[0]].set.is_subset(&self.members[pair[1]].set) {
                return Err(Error::Precondition("chain is not increasing".into()));
            }
            if restrict(&maps[1], &self.members[pair[0]].set) != maps[0] {
                return Err(Error::Precondition("maps are not compatible under restriction".into()));
            }
        }
        let last = Map { source: *ids.last().unwrap(), target: self.top(), img: imgs.pop().unwrap() };
        Ok(if self.is_morphism(&last) { Status::Pass } else { Status::Fail })
    }

    /// (III) on every chain visible at the working truncation: each map
    /// `φ ∈ Hom_F(P, S)` restricted along `P_0 ≤ P_1 ≤ …` where `P_j` keeps
    /// the elements of level at most `j`. Finite members give one-step
    /// chains.
    pub fn check_saturation_iii_chains(&self) -> Report {
        let mut r = Report::new();
        let (mut chains, mut bad, mut unknown) = (0, None, None);
        for (i, m) in self.members.iter().enumerate() {
            let top_level = m.set.iter().map(|x| self.slice.element(x).level()).max().unwrap_or(0);
            let levels: Vec<u32> = if m.full_torus { (0..=top_level).collect() } else { vec![top_level] };
            let mut chain = vec![];
            for &j in &levels {
                let elems: Vec<DPElement> = m.set.iter().map(|x| self.slice.element(x).clone()).filter(|e| e.level() <= j).collect();
                match self.dp.finite_subgroup(elems) {
                    Ok(s) => chain.push(s),
                    Err(e) => {
                        r.fail(SECTION, "(III) unions", format!("level {j} of {}", self.describe(i)), e.to_string());
                        return r;
                    }
                }
            }
            for phi in self.hom(i, self.top()) {
                chains += 1;
                let maps: Vec<Vec<(DPElement, DPElement)>> = chain
                    .iter()
                    .map(|c| {
                        c.elements()
                            .unwrap_or(&[])
                            .iter()
                            .map(|e| {
                                let x = self.slice.index_of(e).expect("chain lies in the slice");
                                (e.clone(), self.slice.element(phi.img[x as usize]).clone())
                            })
                            .collect()
                    })
                    .collect();
                match self.check_saturation_iii(&chain, &maps) {
                    Ok(Status::Pass) => {}
                    Ok(Status::Inconclusive) => {
                        unknown.get_or_insert(format!("chain below {}", self.describe(i)));
                    }
                    Ok(Status::Fail) => {
                        bad.get_or_insert(format!("union of the chain below {} by {:?}", self.describe(i), phi.img));
                    }
                    Err(e) => {
                        bad.get_or_insert(format!("{}: {e}", self.describe(i)));
                    }
                }
            }
        }
        match (bad, unknown) {
            (Some(w), _) => r.fail(SECTION, "(III) unions", format!("{chains} chains"), w),
            (None, Some(w)) => r.inconclusive(SECTION, "(III) unions", format!("{w} is not visible")),
            (None, None) => r.pass(SECTION, "(III) unions", format!("{chains} chains")),
        }
        r
    }

    /// `O_p(N_F(P))`: the largest `R` with `P ≤ R ≤ N_S(P)`, `Aut_R(P)`
    /// inside `O_p(Aut_F(P))`, and every `α ∈ Aut_F(P)` extending to an
    /// automorphism of `R` in the fusion system.
    pub fn normalizer_core(&self, i: usize) -> Result<usize> {
        let out = self.out_group(i)?;
        let op: HashSet<&Vec<u32>> = out.o_p(self.dp.prime()).iter().map(|k| &out.aut[k as usize].img).collect();
        let p = &self.members[i];
        let nset = &self.norm_sets[i];
        let mut best: Option<usize> = None;
        for (k, r) in self.members.iter().enumerate() {
            if r.full_torus != p.full_torus && !(r.full_torus && !p.full_torus) {
                continue;
            }
            if !p.set.is_subset(&r.set) || !r.set.is_subset(nset) || !self.dp.is_subgroup(&p.subgroup, &r.subgroup) {
                continue;
            }
            let inner_ok = r.set.iter().all(|x| self.conjugation(i, x).is_some_and(|c| op.contains(&c.img)));
            if !inner_ok {
                continue;
            }
            let auts_r = self.aut(k);
            let extends = out.aut.iter().all(|a| auts_r.iter().any(|b| p.set.iter().all(|x| b.img[x as usize] == a.img[x as usize])));
            if extends && best.is_none_or(|b| self.dp.order_less(&self.members[b].subgroup, &r.subgroup)) {
                best = Some(k);
            }
        }
        best.ok_or_else(|| Error::Precondition(format!("no candidate core for {}", self.describe(i))))
    }

    /// Normalized-versus-extension at every admissible member, and
    /// radical-versus-core at fully normalized centric members (the trivial
    /// subgroup of `S4` shows the second needs `C_S(P) ≤ P`).
    pub fn check_normalizer_criteria(&self) -> Report {
        let mut r = Report::new();
        let (mut a_bad, mut b_bad) = (None, None);
        let mut count = 0;
        for i in self.admissible() {
            let Ok(maximal) = self.is_fully_order_normalized(i) else { continue };
            count += 1;
            let Ok(ni) = self.normalizer(i) else { continue };
            let Some(ni) = self.find_subgroup(ni) else { continue };
            let reach = self.orbit(i).iter().all(|&q| {
                let Some(nq) = self.normalizer(q).ok().and_then(|n| self.find_subgroup(n)) else { return false };
                self.hom(nq, ni).iter().any(|m| {
                    let img = image_set(&restrict(&m.img, &self.members[q].set));
                    img == self.members[i].set
                })
            });
            if maximal != reach && a_bad.is_none() {
                a_bad = Some(format!("{}: maximal normalizer {maximal}, extension criterion {reach}", self.describe(i)));
            }
            if !maximal || !self.is_centric(i) {
                continue;
            }
            let Ok(out) = self.out_group(i) else { continue };
            let lhs = out.o_p(self.dp.prime()) == out.inn_set;
            let rhs = match self.normalizer_core(i) {
                Ok(k) => k == i,
                Err(_) => continue,
            };
            if lhs != rhs && b_bad.is_none() {
                b_bad = Some(format!("{}: Inn(P) = O_p(Aut_F(P)) is {lhs}, P = O_p(N_F(P)) is {rhs}", self.describe(i)));
            }
        }
        r.verdict(SECTION, "fully normalized", format!("{count} admissible members"), a_bad);
        r.verdict(SECTION, "radical versus core", "Inn(P) = O_p(Aut_F(P)) iff P = O_p(N_F(P))", b_bad);
        r
    }

    /// Every isomorphism between subgroups of `T` lands in `T` and extends
    /// to an automorphism of `T`.
    pub fn torus_extension_property(&self) -> Report {
        let mut r = Report::new();
        if self.dp.torus_rank() == 0 {
            r.pass(SECTION, "torus extension", "rank 0, nothing to check");
            return r;
        }
        let torus = self.slice.torus_set();
        let Some(t) = self.find(&torus, true) else {
            r.fail(SECTION, "torus extension", "torus is not a member", "T");
            return r;
        };
        let aut_t = self.aut(t);
        let mut count = 0;
        let mut bad = None;
        for (i, m) in self.members.iter().enumerate() {
            if !m.set.is_subset(&torus) {
                continue;
            }
            for &q in self.orbit(i) {
                for alpha in self.iso(i, q) {
                    count += 1;
                    let lands = self.members[q].set.is_subset(&torus);
                    let extends = aut_t.iter().any(|b| m.set.iter().all(|x| b.img[x as usize] == alpha.img[x as usize]));
                    if !(lands && extends) && bad.is_none() {
                        bad = Some(format!("{} → {} by {:?}", self.describe(i), self.describe(q), alpha.img));
                    }
                }
            }
        }
        r.verdict(SECTION, "torus extension", format!("{count} isomorphisms between torus subgroups"), bad);
        r
    }

    pub fn summary(&self, i: usize, window: &HashSet<Subgroup>) -> Result<MemberSummary> {
        let out = self.out_group(i)?;
        let mut orbit: Vec<String> = self
            .orbit(i)
            .iter()
            .filter(|&&q| window.contains(&self.members[q].subgroup))
            .map(|&q| self.describe(q))
            .collect();
        orbit.sort();
        Ok(MemberSummary {
            subgroup: self.describe(i),
            orbit,
            fully_normalized: self.is_fully_order_normalized(i)?,
            fully_centralized: self.is_fully_order_centralized(i)?,
            aut_order: (!self.members[i].full_torus).then_some(out.aut.len()),
            out_order: out.out_order(),
            out_s_order: out.out_s_order(),
            centric: self.is_centric(i),
            centric_radical: self.is_centric_radical(i)?,
        })
    }
}

/// All subgroups of the slice, plus every torus subgroup.
pub fn default_family(dp: &DPGroup, slice: &Slice) -> Vec<(ElemSet, bool)> {
    let g = &slice.group;
    let mut family: Vec<(ElemSet, bool)> = g.subgroups(&g.full()).into_iter().map(|s| (s, false)).collect();
    if dp.torus_rank() > 0 {
        for k in dp.finite_part().subgroups(&dp.finite_part().full()) {
            let t = dp.torus_subgroup(&k).expect("subgroup of F");
            family.push((dp.slice_set(&t, slice).expect("torus subgroups meet every slice"), true));
        }
    }
    family
}

fn close_group(identity: Vec<u32>, gens: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let mut seen: HashSet<Vec<u32>> = HashSet::from([identity.clone()]);
    let mut queue = VecDeque::from([identity]);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = compose(&x, g);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<Vec<u32>> = seen.into_iter().collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial_group::group_centrics;

    fn s4_fusion() -> (Locality, FusionSystem) {
        let g = FiniteGroup::symmetric(4);
        let s = g.sylow_subgroups(&g.full(), 2).remove(0);
        let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s)).unwrap();
        let f = FusionSystem::from_locality(&l).unwrap();
        (l, f)
    }

    #[test]
    fn s4_orbits_and_automorphisms() {
        let (_, f) = s4_fusion();
        assert_eq!(f.members().len(), 10);
        let top = f.top();
        assert_eq!(f.orbit(top), &[top]);
        let klein: Vec<usize> = (0..10).filter(|&i| f.member(i).set.len() == 4 && f.aut(i).len() == 6).collect();
        assert_eq!(klein.len(), 1);
        let out = f.out_group(klein[0]).unwrap();
        assert_eq!(out.out_order(), 6);
        assert_eq!(out.out_s_order(), 2);
        let order_two: Vec<usize> = (0..10).filter(|&i| f.member(i).set.len() == 2).collect();
        assert_eq!(f.orbit_count(), 7);
        let big = order_two.iter().filter(|&&i| f.orbit(i).len() == 3).count();
        assert_eq!(big, 3);
        let centre = order_two.iter().find(|&&i| f.member(i).set == f.slice().group.center(&f.slice().group.full())).unwrap();
        assert_eq!(f.orbit(*centre).len(), 3);
    }

    #[test]
    fn s4_saturation_and_centrics() {
        let (_, f) = s4_fusion();
        assert!(f.check_saturation_i().passed());
        assert!(f.check_saturation_ii().passed());
        let sizes: Vec<usize> = f.centrics().iter().map(|&i| f.member(i).set.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4, 8]);
        let cr: Vec<usize> = f.centric_radicals().unwrap().iter().map(|&i| f.member(i).set.len()).collect();
        assert_eq!(cr, vec![4, 8]);
        assert!(f.check_normalizer_criteria().passed(), "{}", f.check_normalizer_criteria());
        assert!(f.check_closure(&f.isomorphisms()).passed());
        assert!(f.isomorphisms().iter().all(|m| f.is_morphism(m)));
    }

    #[test]
    fn non_fully_normalized_witness() {
        let (_, f) = s4_fusion();
        let g = &f.slice().group;
        let a = g.find("(1,2)(3,4)").unwrap();
        let p = f.find(&g.closure([a]), false).unwrap();
        let z = f.find(&g.center(&g.full()), false).unwrap();
        assert!(!f.is_fully_order_normalized(p).unwrap());
        assert_eq!(f.orbit_id(p), f.orbit_id(z));
        assert!(f.is_fully_order_normalized(z).unwrap());
    }

    #[test]
    fn outer_automorphism_breaks_sylow() {
        let (l, _) = s4_fusion();
        let sy = l.sylow();
        let g = &sy.slice.group;
        // swap the two Klein subgroups: an outer automorphism of D8
        let r = g.find("(1,2,3,4)").unwrap();
        let s = g.find("(1,3)").unwrap();
        let t = g.find("(1,2)(3,4)").unwrap();
        let auto = g.extend_hom(&[r, s], &[r, t], g).unwrap();
        let gen: Vec<u32> = g.elements().map(|x| auto[&x]).collect();
        let f = FusionSystem::generate(&sy.dp, 0, default_family(&sy.dp, &sy.slice), vec![gen]).unwrap();
        let rep = f.check_saturation_i();
        assert_eq!(rep.status_of("(I) Sylow"), Some(Status::Fail));
    }

    #[test]
    fn restricted_generator_breaks_extension() {
        let (l, _) = s4_fusion();
        let g = &l.sylow().slice.group;
        let a = g.find("(1,2)(3,4)").unwrap();
        let z = g.find("(1,3)(2,4)").unwrap();
        let mut gen = vec![NONE; 8];
        gen[g.identity() as usize] = g.identity();
        gen[a as usize] = z;
        let sy = l.sylow();
        let f = FusionSystem::generate(&sy.dp, 0, default_family(&sy.dp, &sy.slice), vec![gen]).unwrap();
        assert_eq!(f.check_saturation_ii().status_of("(II) extension"), Some(Status::Fail));
    }

    #[test]
    fn torus_extension_in_the_inversion_group() {
        let dp = DPGroup::inversion_extension(2, 3).unwrap();
        let l = Locality::group_locality(&dp, 3, vec![]).err();
        assert!(l.is_some());
        let slice = dp.slice(3).unwrap();
        let f = FusionSystem::generate(&dp, 3, default_family(&dp, &slice), vec![]).unwrap();
        assert!(f.torus_extension_property().passed());
        assert!(f.check_saturation_i().passed(), "{}", f.check_saturation_i());
        assert!(f.check_saturation_ii().passed(), "{}", f.check_saturation_ii());
        let iii = f.check_saturation_iii_chains();
        assert_eq!(iii.status_of("(III) unions"), Some(Status::Pass), "{iii}");
    }

    #[test]
    fn unions_of_chains_in_s4() {
        let (_, f) = s4_fusion();
        assert!(f.check_saturation_iii_chains().passed());
        let top = f.top();
        let g = &f.slice().group;
        let chain = vec![f.member(top).subgroup.clone()];
        // a map that is not a group homomorphism
        let r = g.find("(1,2,3,4)").unwrap();
        let maps = vec![g
            .elements()
            .map(|x| (f.slice().element(x).clone(), f.slice().element(if x == r { g.identity() } else { x }).clone()))
            .collect::<Vec<_>>()];
        assert_eq!(f.check_saturation_iii(&chain, &maps).unwrap(), Status::Fail);
    }
}
