//! Rebuilding a locality from a transporter system.
//!
//! Nodes are the isomorphisms of `T`; `φ ↑ φ′` when `φ′` extends `φ` along
//! inclusions. The carrier is the set of classes of the equivalence
//! generated by `↑`, each represented by its unique maximal member, and a
//! word is in the domain when representatives compose along a chain of
//! objects.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::ElemSet;
use crate::fusion::{compose as compose_maps, invert, FusionSystem};
use crate::partial_group::{Handle, Locality, LocalityParts, Sylow, NONE};
use crate::report::Report;
use crate::transporter::TransporterSystem;

const SECTION: &str = "reconstruction";

/// `φ ↑ φ′`: `ι_{P,P′} ∘ φ′ = φ ∘ ι_{Q,Q′}`.
pub fn extends(t: &TransporterSystem, a: usize, b: usize) -> Result<bool> {
    let (ma, mb) = (t.morphism(a), t.morphism(b));
    let obj = |i: usize| &t.objects()[i].set;
    if !obj(ma.source).is_subset(obj(mb.source)) || !obj(ma.target).is_subset(obj(mb.target)) {
        return Err(Error::Precondition(format!("{} and {} are not nested", ma.label, mb.label)));
    }
    let lhs = t.inclusion(ma.source, mb.source).and_then(|i| t.compose(i, b));
    let rhs = t.inclusion(ma.target, mb.target).and_then(|i| t.compose(a, i));
    Ok(lhs.is_some() && lhs == rhs)
}

fn nested(t: &TransporterSystem, a: usize, b: usize) -> bool {
    let (ma, mb) = (t.morphism(a), t.morphism(b));
    let obj = |i: usize| &t.objects()[i].set;
    obj(ma.source).is_subset(obj(mb.source)) && obj(ma.target).is_subset(obj(mb.target))
}

/// The bullet closure on objects and morphisms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletData {
    /// object index → object index
    pub objects: Vec<usize>,
    /// morphism index → morphism index
    pub morphisms: Vec<usize>,
}

impl BulletData {
    pub fn identity(t: &TransporterSystem) -> Self {
        BulletData { objects: (0..t.objects().len()).collect(), morphisms: (0..t.morphisms().len()).collect() }
    }

    /// Closure, monotonicity, idempotence, transporter and conjugation
    /// invariance on objects; functoriality and extension on morphisms.
    pub fn validate(&self, t: &TransporterSystem) -> Report {
        let mut r = Report::new();
        let k = t.objects().len();
        if self.objects.len() != k || self.morphisms.len() != t.morphisms().len() || self.objects.iter().any(|&b| b >= k) {
            r.fail(SECTION, "bullet shape", "bullet data does not cover the transporter system", "size mismatch");
            return r;
        }
        let obj = |i: usize| &t.objects()[i].set;
        let mut closure = None;
        for p in 0..k {
            let b = self.objects[p];
            if !obj(p).is_subset(obj(b)) || self.objects[b] != b {
                closure.get_or_insert(format!("{} is not sent into a fixed overgroup", t.describe_object(p)));
            }
            for q in 0..k {
                if obj(p).is_subset(obj(q)) && !obj(b).is_subset(obj(self.objects[q])) {
                    closure.get_or_insert(format!("monotonicity fails at {} ≤ {}", t.describe_object(p), t.describe_object(q)));
                }
                let n = t.transporter_set(p, q);
                if !n.is_subset(&t.transporter_set(b, self.objects[q])) {
                    closure.get_or_insert(format!("N_S(P, Q) grows under bullet at {}", t.describe_object(p)));
                }
            }
        }
        r.verdict(SECTION, "bullet on objects", format!("{k} objects"), closure);
        let image: BTreeSet<usize> = self.objects.iter().copied().collect();
        let mut invariant = None;
        for &b in &image {
            for q in 0..k {
                if !image.contains(&q) && t.mor(b, q).iter().any(|&m| t.is_iso(m)) {
                    invariant.get_or_insert(format!("{} is isomorphic to the non-image {}", t.describe_object(b), t.describe_object(q)));
                }
            }
        }
        r.verdict(SECTION, "bullet image invariant", format!("{} image objects", image.len()), invariant);
        let mut functor = None;
        for (m, mm) in t.morphisms().iter().enumerate() {
            let Some(bm) = self.morphisms.get(m).copied().filter(|&b| b < t.morphisms().len()) else {
                functor.get_or_insert(format!("no image for {}", mm.label));
                continue;
            };
            let mb = t.morphism(bm);
            if mb.source != self.objects[mm.source] || mb.target != self.objects[mm.target] {
                functor.get_or_insert(format!("{} lands on the wrong objects", mm.label));
                continue;
            }
            if self.objects[mm.source] == mm.source && self.objects[mm.target] == mm.target && bm != m {
                functor.get_or_insert(format!("{} is moved although its objects are fixed", mm.label));
            }
            let lhs = t.inclusion(mm.source, mb.source).and_then(|i| t.compose(i, bm));
            let rhs = t.inclusion(mm.target, mb.target).and_then(|i| t.compose(m, i));
            if lhs.is_none() || lhs != rhs {
                functor.get_or_insert(format!("{} does not extend {}", mb.label, mm.label));
            }
        }
        r.verdict(SECTION, "bullet on morphisms", format!("{} morphisms", t.morphisms().len()), functor);
        r
    }
}

/// Isomorphisms of `T` ordered by extension.
#[derive(Clone, Debug)]
pub struct UpPoset {
    pub nodes: Vec<usize>,
    /// node → nodes strictly above it
    pub above: Vec<Vec<usize>>,
    /// node → its unique maximal node
    pub maximal: Vec<usize>,
}

impl UpPoset {
    pub fn new(t: &TransporterSystem) -> Result<Self> {
        let nodes = t.isomorphisms();
        let mut above = vec![vec![]; nodes.len()];
        for (i, &a) in nodes.iter().enumerate() {
            for (j, &b) in nodes.iter().enumerate() {
                if i != j && nested(t, a, b) && extends(t, a, b)? {
                    above[i].push(j);
                }
            }
        }
        let mut maximal = vec![];
        for i in 0..nodes.len() {
            let tops: Vec<usize> = std::iter::once(i).chain(above[i].iter().copied()).filter(|&j| above[j].is_empty()).collect();
            match tops.as_slice() {
                [one] => maximal.push(*one),
                [] => return Err(Error::InvalidTransporter(format!("{} has no maximal extension", t.morphism(nodes[i]).label))),
                _ => {
                    return Err(Error::InvalidTransporter(format!(
                        "{} has incomparable maximal extensions {} and {}",
                        t.morphism(nodes[i]).label,
                        t.morphism(nodes[tops[0]]).label,
                        t.morphism(nodes[tops[1]]).label
                    )))
                }
            }
        }
        Ok(UpPoset { nodes, above, maximal })
    }

    pub fn node_of(&self, m: usize) -> Option<usize> {
        self.nodes.binary_search(&m).ok()
    }
}

/// The unique maximal extension of an isomorphism.
pub fn up_maximal(t: &TransporterSystem, poset: &UpPoset, m: usize) -> Result<usize> {
    let i = poset.node_of(m).ok_or_else(|| Error::Precondition(format!("{} is not an isomorphism", t.morphism(m).label)))?;
    Ok(poset.nodes[poset.maximal[i]])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsoClass {
    /// morphism indices, ascending
    pub members: Vec<usize>,
    pub maximal: usize,
}

/// Classes of the equivalence generated by `↑`, each with its maximal
/// member and at most one member per pair of objects.
pub fn equivalence_classes(t: &TransporterSystem, poset: &UpPoset) -> Result<Vec<IsoClass>> {
    let mut uf = UnionFind::<usize>::new(poset.nodes.len());
    for (i, ups) in poset.above.iter().enumerate() {
        for &j in ups {
            uf.union(i, j);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..poset.nodes.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out = vec![];
    for nodes in groups.into_values() {
        let tops: BTreeSet<usize> = nodes.iter().map(|&i| poset.maximal[i]).collect();
        if tops.len() != 1 {
            return Err(Error::InvalidTransporter(format!("class of {} has several maximal members", t.morphism(poset.nodes[nodes[0]]).label)));
        }
        let mut pairs = BTreeSet::new();
        for &i in &nodes {
            let m = t.morphism(poset.nodes[i]);
            if !pairs.insert((m.source, m.target)) {
                return Err(Error::InvalidTransporter(format!("class of {} has two members on one pair of objects", m.label)));
            }
        }
        out.push(IsoClass {
            members: nodes.iter().map(|&i| poset.nodes[i]).collect(),
            maximal: poset.nodes[*tops.iter().next().unwrap()],
        });
    }
    Ok(out)
}

/// `Iso(T)/≡` as a partial group, together with the locality it defines.
#[derive(Clone, Debug)]
pub struct ReconstructedLocality {
    pub classes: Vec<IsoClass>,
    class_of: HashMap<usize, usize>,
    unit: usize,
    inverse: Vec<usize>,
    /// slice index → class
    embed: Vec<usize>,
    products: BTreeMap<(usize, usize), usize>,
    locality: Locality,
}

pub fn build_partial_group(t: &TransporterSystem, bullet: &BulletData) -> Result<ReconstructedLocality> {
    let check = bullet.validate(t);
    if let Some(e) = check.failures().next() {
        return Err(Error::InvalidTransporter(format!("bullet data: {}", e.witness.clone().unwrap_or_default())));
    }
    let poset = UpPoset::new(t)?;
    let raw = equivalence_classes(t, &poset)?;
    for c in &raw {
        let m = t.morphism(c.maximal);
        if bullet.objects[m.source] != m.source || bullet.objects[m.target] != m.target {
            return Err(Error::InvalidTransporter(format!("maximal member {} is not between bullet objects", m.label)));
        }
    }
    let sy = t.sylow();
    let g = sy.group();
    let top = t.object_index(&sy.full()).ok_or_else(|| Error::InvalidTransporter("S is not an object".into()))?;
    let mut raw_of: HashMap<usize, usize> = HashMap::new();
    for (k, c) in raw.iter().enumerate() {
        for &m in &c.members {
            raw_of.insert(m, k);
        }
    }
    // S first, in slice order, then the rest by maximal member
    let mut order = vec![];
    for x in g.elements() {
        let e = t.epsilon(top, top, x).ok_or_else(|| Error::InvalidTransporter("ε_S is incomplete".into()))?;
        order.push(raw_of[&e]);
    }
    let in_s: BTreeSet<usize> = order.iter().copied().collect();
    if in_s.len() != g.order() {
        return Err(Error::InvalidTransporter("ε_S is not injective on classes".into()));
    }
    let mut rest: Vec<usize> = (0..raw.len()).filter(|k| !in_s.contains(k)).collect();
    rest.sort_by_key(|&k| raw[k].maximal);
    order.extend(rest);
    let classes: Vec<IsoClass> = order.iter().map(|&k| raw[k].clone()).collect();
    let mut class_of = HashMap::new();
    for (k, c) in classes.iter().enumerate() {
        for &m in &c.members {
            class_of.insert(m, k);
        }
    }
    let embed: Vec<usize> = (0..g.order()).collect();
    let unit = embed[g.identity() as usize];
    let mut inverse = vec![];
    for c in &classes {
        let inv = t.inverse(c.maximal).ok_or_else(|| Error::InvalidTransporter(format!("{} has no inverse", t.morphism(c.maximal).label)))?;
        inverse.push(class_of[&inv]);
    }
    let mut rec = ReconstructedLocality {
        classes,
        class_of,
        unit,
        inverse,
        embed,
        products: BTreeMap::new(),
        locality: Locality::from_parts(placeholder_parts(sy))?,
    };
    let n = rec.classes.len();
    for a in 0..n {
        for b in 0..n {
            if let Some(c) = rec.chain_product(t, &[a, b])? {
                rec.products.insert((a, b), c);
            }
        }
    }
    let labels: Vec<String> = (0..n)
        .map(|k| {
            if k < g.order() {
                g.label(k as u32).to_string()
            } else {
                let m = rec.classes[k].maximal;
                match t.origin(m) {
                    Some(_) => format!("[{}]", t.morphism(m).label),
                    None => format!("[{}]", t.morphism(m).label),
                }
            }
        })
        .collect();
    let conj: Vec<Vec<u32>> = rec.classes.iter().map(|c| t.morphism(c.maximal).rho.clone()).collect();
    let parts = LocalityParts {
        prime: sy.dp.prime(),
        labels,
        unit: unit as Handle,
        inverse: rec.inverse.iter().map(|&k| k as Handle).collect(),
        products: rec.products.iter().map(|(&(a, b), &c)| (a as Handle, b as Handle, c as Handle)).collect(),
        conj,
        sylow: Sylow { embed: rec.embed.iter().map(|&k| k as Handle).collect(), ..sy.clone() },
        delta: t.objects().to_vec(),
    };
    rec.locality = Locality::from_parts(parts)?;
    Ok(rec)
}

fn placeholder_parts(sy: &Sylow) -> LocalityParts {
    let g = sy.group();
    let n = g.order();
    LocalityParts {
        prime: sy.dp.prime(),
        labels: g.labels().to_vec(),
        unit: g.identity(),
        inverse: g.elements().map(|x| g.inv(x)).collect(),
        products: g.elements().flat_map(|a| g.elements().map(move |b| (a, b, g.mul(a, b)))).collect(),
        conj: g.elements().map(|x| g.elements().map(|y| g.conj(y, x)).collect()).collect(),
        sylow: Sylow { embed: (0..n as u32).collect(), ..sy.clone() },
        delta: vec![crate::partial_group::Object::finite(g.full())],
    }
}

impl ReconstructedLocality {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, m: usize) -> Option<usize> {
        self.class_of.get(&m).copied()
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn inverse(&self, f: usize) -> usize {
        self.inverse[f]
    }

    pub fn embed(&self, x: u32) -> usize {
        self.embed[x as usize]
    }

    pub fn to_locality(&self) -> Locality {
        self.locality.clone()
    }

    pub fn locality(&self) -> &Locality {
        &self.locality
    }

    /// All composites of representatives along object chains for `w`.
    fn chain_composites(&self, t: &TransporterSystem, w: &[usize]) -> Vec<usize> {
        let Some((&first, rest)) = w.split_first() else { return vec![] };
        let mut acc: Vec<usize> = self.classes[first].members.clone();
        for &f in rest {
            let mut next = vec![];
            for &a in &acc {
                let target = t.morphism(a).target;
                for &b in &self.classes[f].members {
                    if t.morphism(b).source == target {
                        if let Some(c) = t.compose(a, b) {
                            next.push(c);
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// `Π(w)` by chains in `T`; `None` outside the domain, an error when
    /// different chains disagree.
    pub fn chain_product(&self, t: &TransporterSystem, w: &[usize]) -> Result<Option<usize>> {
        if w.is_empty() {
            return Ok(Some(self.unit));
        }
        let composites = self.chain_composites(t, w);
        let mut out: Option<usize> = None;
        for c in composites {
            let k = self.class_of(c).ok_or_else(|| Error::InvalidTransporter(format!("composite {} is not an isomorphism", t.morphism(c).label)))?;
            match out {
                None => out = Some(k),
                Some(prev) if prev != k => {
                    return Err(Error::InvalidTransporter(format!("chains for a word of length {} give different classes", w.len())))
                }
                _ => {}
            }
        }
        Ok(out)
    }

    /// `S_f` from products: the source `P` of the maximal member, checked
    /// against `Π(f⁻¹, x, f) = xρ(ψ)` for `x ∈ P`.
    pub fn s_g_from_classes(&self, t: &TransporterSystem, f: usize) -> Result<ElemSet> {
        let psi = t.morphism(self.classes[f].maximal);
        let p = &t.objects()[psi.source].set;
        let mut img = t.sylow().group().set(std::iter::empty());
        for x in p.iter() {
            let w = [self.inverse[f], self.embed(x), f];
            let got = self.chain_product(t, &w)?.ok_or_else(|| Error::NotInDomain(format!("(f⁻¹, x, f) for x = {x}")))?;
            let y = psi.rho[x as usize];
            if got != self.embed(y) {
                return Err(Error::InvalidTransporter(format!("conjugation by {} disagrees with ρ at {x}", psi.label)));
            }
            img.insert(y);
        }
        if t.object_index(&img) != Some(psi.target) {
            return Err(Error::InvalidTransporter(format!("{} does not conjugate its source onto an object", psi.label)));
        }
        Ok(p.clone())
    }
}

/// The object `Pρ(m)` for an object `P` inside the source of `m`.
fn image_of(t: &TransporterSystem, m: usize, p: usize) -> Option<usize> {
    let rho = &t.morphism(m).rho;
    t.object_index(&t.sylow().group().set(t.objects()[p].set.iter().map(|x| rho[x as usize])))
}

/// Calls `f` on every word of length `1..=max_len` over `n` letters.
fn for_each_word<F: FnMut(&[usize])>(n: usize, max_len: usize, mut f: F) {
    let mut w: Vec<usize> = vec![];
    fn go<F: FnMut(&[usize])>(w: &mut Vec<usize>, n: usize, left: usize, f: &mut F) {
        if left == 0 {
            return;
        }
        for a in 0..n {
            w.push(a);
            f(w);
            go(w, n, left - 1, f);
            w.pop();
        }
    }
    go(&mut w, n, max_len, &mut f);
}

/// Order, composition, common and intersection extensions, maximal
/// members, the square criterion, and chain independence of products.
pub fn check_reconstruction(t: &TransporterSystem, rec: &ReconstructedLocality, max_len: usize) -> Result<Report> {
    let mut r = Report::new();
    let poset = UpPoset::new(t)?;
    let label = |m: usize| t.morphism(m).label.clone();
    let nodes = &poset.nodes;
    let up = |i: usize, j: usize| i == j || poset.above[i].contains(&j);
    let mut order = None;
    for i in 0..nodes.len() {
        if !extends(t, nodes[i], nodes[i])? {
            order.get_or_insert(format!("{} does not extend itself", label(nodes[i])));
        }
        for &j in &poset.above[i] {
            if poset.above[j].contains(&i) {
                order.get_or_insert(format!("{} and {} extend each other", label(nodes[i]), label(nodes[j])));
            }
            for &k in &poset.above[j] {
                if !up(i, k) {
                    order.get_or_insert(format!("extension is not transitive at {}", label(nodes[i])));
                }
            }
        }
    }
    r.verdict(SECTION, "extension order", format!("{} isomorphisms", nodes.len()), order);
    let edges: Vec<(usize, usize)> = (0..nodes.len()).flat_map(|i| std::iter::once((i, i)).chain(poset.above[i].iter().map(move |&j| (i, j)))).collect();
    let mut comp = None;
    let mut count = 0;
    for &(a, a2) in &edges {
        for &(b, b2) in &edges {
            let (ma, mb) = (t.morphism(nodes[a]), t.morphism(nodes[b]));
            let (ma2, mb2) = (t.morphism(nodes[a2]), t.morphism(nodes[b2]));
            if ma.target != mb.source || ma2.target != mb2.source {
                continue;
            }
            count += 1;
            let (Some(c), Some(c2)) = (t.compose(nodes[a], nodes[b]), t.compose(nodes[a2], nodes[b2])) else {
                comp.get_or_insert(format!("composite of {} and {} is missing", label(nodes[a]), label(nodes[b])));
                continue;
            };
            if !extends(t, c, c2)? {
                comp.get_or_insert(format!("{} ∘ {} does not extend to {} ∘ {}", label(nodes[a]), label(nodes[b]), label(nodes[a2]), label(nodes[b2])));
            }
        }
    }
    r.verdict(SECTION, "extension respects composition", format!("{count} composable pairs of extensions"), comp);
    let mut common = None;
    let mut meet = None;
    for i in 0..nodes.len() {
        let ups: Vec<usize> = std::iter::once(i).chain(poset.above[i].iter().copied()).collect();
        for &a in &ups {
            for &b in &ups {
                if a >= b {
                    continue;
                }
                let (ma, mb) = (t.morphism(nodes[a]), t.morphism(nodes[b]));
                if ma.source == mb.source || ma.target == mb.target {
                    common.get_or_insert(format!("{} and {} extend {} on a shared object", ma.label, mb.label, label(nodes[i])));
                }
                let inter = t.objects()[ma.source].set.intersection(&t.objects()[mb.source].set);
                let Some(pi) = t.object_index(&inter) else {
                    meet.get_or_insert(format!("{} ∩ {} is not an object", t.describe_object(ma.source), t.describe_object(mb.source)));
                    continue;
                };
                let img = t.sylow().group().set(inter.iter().map(|x| ma.rho[x as usize]));
                let img_b = t.sylow().group().set(inter.iter().map(|x| mb.rho[x as usize]));
                let qi = t.objects()[ma.target].set.intersection(&t.objects()[mb.target].set);
                let (Some(q), true) = (t.object_index(&img), img == img_b && img == qi) else {
                    meet.get_or_insert(format!("{} and {} disagree on the intersection", ma.label, mb.label));
                    continue;
                };
                match (t.restrict_morphism(nodes[a], pi, q), t.restrict_morphism(nodes[b], pi, q)) {
                    (Ok(x), Ok(y)) if x == y && extends(t, nodes[i], x)? => {}
                    _ => {
                        meet.get_or_insert(format!("no common restriction of {} and {}", ma.label, mb.label));
                    }
                }
            }
        }
    }
    r.verdict(SECTION, "common extensions", "distinct extensions never share an object", common);
    r.verdict(SECTION, "intersection extension", "extensions restrict to one morphism on the intersection", meet);
    let mut pairs = None;
    let mut inv = None;
    for (k, c) in rec.classes.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &m in &c.members {
            if !seen.insert((t.morphism(m).source, t.morphism(m).target)) {
                pairs.get_or_insert(format!("class {k}"));
            }
            if up_maximal(t, &poset, m)? != c.maximal {
                pairs.get_or_insert(format!("{} has another maximal extension", label(m)));
            }
        }
        let mi = t.inverse(c.maximal);
        if mi.is_none() || mi != Some(rec.classes[rec.inverse(k)].maximal) {
            inv.get_or_insert(format!("inverse of {}", label(c.maximal)));
        }
    }
    r.verdict(SECTION, "unique maximal member", format!("{} classes, one member per object pair", rec.len()), pairs);
    r.verdict(SECTION, "inverse of maximal", "the inverse of a maximal member is maximal", inv);
    let top = t.object_index(&t.sylow().full()).expect("S is an object");
    let mut special = None;
    let id_class = rec.class_of(t.identity(top).expect("identity"));
    for p in 0..t.objects().len() {
        if t.identity(p).and_then(|m| rec.class_of(m)) != id_class {
            special.get_or_insert(format!("ι at {} is not in the class of ι_S", t.describe_object(p)));
        }
    }
    if id_class.map(|k| rec.classes[k].members.len()) != Some(t.objects().len()) {
        special.get_or_insert("the class of ι_S has extra members".into());
    }
    let g = t.sylow().group();
    for x in g.elements() {
        let k = rec.embed(x);
        let expected: BTreeSet<usize> = (0..t.objects().len())
            .flat_map(|p| (0..t.objects().len()).filter_map(move |q| (t.objects()[q].set == g.conj_set(&t.objects()[p].set, x)).then_some((p, q))))
            .filter_map(|(p, q)| t.epsilon(p, q, x))
            .collect();
        let got: BTreeSet<usize> = rec.classes[k].members.iter().copied().collect();
        if got != expected {
            special.get_or_insert(format!("class of {} is not the set of its ε-images", g.label(x)));
        }
    }
    r.verdict(SECTION, "identity and S classes", "[ι_S] = {ι_P}, [x] = {(x)ε_{P,Q}}", special);
    let mut square = None;
    let mut squares = 0;
    for c in &rec.classes {
        let phi = c.maximal;
        let (z, w) = (t.morphism(phi).source, t.morphism(phi).target);
        let zs = &t.objects()[z].set;
        let objs: Vec<usize> = (0..t.objects().len()).filter(|&x| t.objects()[x].set.is_subset(zs)).collect();
        for &xo in &objs {
            for &yo in &objs {
                let ximg = image_of(t, phi, xo);
                let yimg = image_of(t, phi, yo);
                let (Some(u), Some(v)) = (ximg, yimg) else { continue };
                let (Ok(top_row), Ok(bottom)) = (t.restrict_morphism(phi, xo, u), t.restrict_morphism(phi, yo, v)) else {
                    square.get_or_insert(format!("{} does not restrict", label(phi)));
                    continue;
                };
                for x in t.transporter_set(xo, yo).iter() {
                    for x2 in t.transporter_set(u, v).iter() {
                        let lhs = t.epsilon(xo, yo, x).and_then(|e| t.compose(e, bottom));
                        let rhs = t.epsilon(u, v, x2).and_then(|e| t.compose(top_row, e));
                        if lhs.is_none() || lhs != rhs {
                            continue;
                        }
                        squares += 1;
                        if !zs.contains(x) || t.morphism(phi).rho[x as usize] != x2 {
                            square.get_or_insert(format!("square for {} with x = {}, x′ = {}", label(phi), g.label(x), g.label(x2)));
                        }
                    }
                }
            }
        }
        let _ = w;
    }
    r.verdict(SECTION, "square criterion", format!("{squares} commuting squares on maximal members"), square);
    let l = rec.locality();
    let mut chains = None;
    let mut words = 0;
    let mut failure: Option<Error> = None;
    for_each_word(rec.len(), max_len, |w| {
        if chains.is_some() || failure.is_some() {
            return;
        }
        words += 1;
        let hw: Vec<Handle> = w.iter().map(|&k| k as Handle).collect();
        match rec.chain_product(t, w) {
            Ok(p) => {
                let q = l.pi(&hw).ok().map(|h| h as usize);
                if p != q {
                    chains = Some(format!("{}: chains give {:?}, the locality gives {:?}", l.describe_word(&hw), p, q));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        chains = Some(e.to_string());
    }
    r.verdict(SECTION, "chain independence", format!("{words} words up to length {max_len}"), chains);
    Ok(r)
}

/// `Φ: g ↦ [(g, S_g, S_{g⁻¹})]`, checked to be an isomorphism of partial
/// groups that is the identity on `S`.
pub fn roundtrip_phi(l: &Locality, t: &TransporterSystem, rec: &ReconstructedLocality, max_len: usize) -> Report {
    let mut r = Report::new();
    let mut phi = vec![];
    let mut obstruction = None;
    let mut index: HashMap<(usize, usize, Handle), usize> = HashMap::new();
    for m in 0..t.morphisms().len() {
        if let Some(g) = t.origin(m) {
            index.insert((t.morphism(m).source, t.morphism(m).target, g), m);
        }
    }
    for g in l.handles() {
        let (sg, sgi) = (l.s_g(g), l.s_g(l.inv(g)));
        let found = t
            .object_index(&sg)
            .zip(t.object_index(&sgi))
            .and_then(|(p, q)| index.get(&(p, q, g)))
            .and_then(|&m| rec.class_of(m));
        match found {
            Some(k) => phi.push(k),
            None => {
                obstruction.get_or_insert(format!("S_g for g = {} is not an object of T", l.label(g)));
                phi.push(usize::MAX);
            }
        }
    }
    if let Some(w) = obstruction {
        r.fail(SECTION, "Φ defined", "every S_g is an object", w);
        return r;
    }
    let distinct: BTreeSet<usize> = phi.iter().copied().collect();
    let bij = (distinct.len() != phi.len() || phi.len() != rec.len()).then(|| format!("{} handles onto {} classes", phi.len(), rec.len()));
    r.verdict(SECTION, "Φ bijective", format!("{} elements", phi.len()), bij);
    let g = l.sylow().group();
    let on_s = g.elements().find(|&x| phi[l.embed(x) as usize] != rec.embed(x)).map(|x| format!("Φ({}) ≠ {}", g.label(x), g.label(x)));
    r.verdict(SECTION, "Φ identity on S", format!("{} elements of S", g.order()), on_s);
    let l2 = rec.locality();
    let mut hom = None;
    let mut words = 0;
    let mut back = vec![0; phi.len()];
    for (a, &b) in phi.iter().enumerate() {
        if b < back.len() {
            back[b] = a;
        }
    }
    for_each_word(l.len(), max_len, |w| {
        if hom.is_some() {
            return;
        }
        words += 1;
        let hw: Vec<Handle> = w.iter().map(|&k| k as Handle).collect();
        let mapped: Vec<Handle> = w.iter().map(|&k| phi[k] as Handle).collect();
        let (d1, d2) = (l.in_domain(&hw), l2.in_domain(&mapped));
        if d1 != d2 {
            hom = Some(format!("{} is in D: {d1}, its image is in D′: {d2}", l.describe_word(&hw)));
        } else if d1 {
            let (p1, p2) = (l.pi(&hw).ok(), l2.pi(&mapped).ok());
            if p1.map(|h| phi[h as usize] as Handle) != p2 {
                hom = Some(format!("Π does not commute with Φ on {}", l.describe_word(&hw)));
            }
        }
    });
    r.verdict(SECTION, "Φ isomorphism", format!("{words} words up to length {max_len}, both directions"), hom);
    r
}

/// A morphism of the orbit category: an `Inn(Q)`-coset of `F`-maps.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrbitMorphism {
    pub source: usize,
    pub target: usize,
    /// smallest representative image vector
    pub rep: Vec<u32>,
}

/// Objects, cosets `Hom_F(P, Q)/Inn(Q)`, and the centre functor.
#[derive(Clone, Debug)]
pub struct OrbitCategory {
    /// fusion member indices
    pub objects: Vec<usize>,
    pub morphisms: BTreeMap<(usize, usize), Vec<OrbitMorphism>>,
    /// `Z(P)` per object
    pub centres: Vec<ElemSet>,
}

impl OrbitCategory {
    pub fn new(f: &FusionSystem, objects: &[usize]) -> Self {
        let g = &f.slice().group;
        let mut morphisms = BTreeMap::new();
        for (a, &i) in objects.iter().enumerate() {
            for (b, &j) in objects.iter().enumerate() {
                let set: BTreeSet<OrbitMorphism> = f.hom(i, j).into_iter().map(|m| coset(f, a, b, j, &m.img)).collect();
                morphisms.insert((a, b), set.into_iter().collect::<Vec<_>>());
            }
        }
        let centres = objects.iter().map(|&i| g.center(&f.member(i).set)).collect();
        let _ = g;
        OrbitCategory { objects: objects.to_vec(), morphisms, centres }
    }

    pub fn mor(&self, a: usize, b: usize) -> &[OrbitMorphism] {
        self.morphisms.get(&(a, b)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `[φ] ∘ [ψ]` from representatives.
    pub fn compose(&self, f: &FusionSystem, x: &OrbitMorphism, y: &OrbitMorphism) -> OrbitMorphism {
        coset(f, x.source, y.target, self.objects[y.target], &compose_maps(&x.rep, &y.rep))
    }

    /// `Z([φ]): Z(Q) → Z(P)`, `z ↦ zφ⁻¹`.
    pub fn z_map(&self, x: &OrbitMorphism) -> Vec<u32> {
        let back = invert(&x.rep);
        let zq = &self.centres[x.target];
        (0..x.rep.len() as u32).map(|z| if zq.contains(z) { back[z as usize] } else { NONE }).collect()
    }

    /// Well-defined composition, and functoriality of `Z` and of the
    /// projection from a transporter system.
    pub fn check(&self, f: &FusionSystem, t: Option<&TransporterSystem>) -> Report {
        let mut r = Report::new();
        let g = &f.slice().group;
        let k = self.objects.len();
        let mut well = None;
        let mut z_bad = None;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for x in self.mor(a, b) {
                        for y in self.mor(b, c) {
                            let xy = self.compose(f, x, y);
                            // another representative of x
                            let qb = &f.member(self.objects[b]).set;
                            for q in qb.iter() {
                                let alt: Vec<u32> = x.rep.iter().map(|&v| if v == NONE { NONE } else { g.conj(v, q) }).collect();
                                if coset(f, a, c, self.objects[c], &compose_maps(&alt, &y.rep)) != xy {
                                    well.get_or_insert(format!("composition depends on the representative at objects {a}, {b}, {c}"));
                                }
                            }
                            let zxy = self.z_map(&xy);
                            let zyx = compose_maps(&self.z_map(y), &self.z_map(x));
                            let lhs: Vec<u32> = zxy.iter().map(|&v| v).collect();
                            if lhs != zyx {
                                z_bad.get_or_insert(format!("Z is not contravariant at objects {a}, {b}, {c}"));
                            }
                        }
                    }
                }
            }
        }
        r.verdict(SECTION, "orbit composition", format!("{k} objects"), well);
        r.verdict(SECTION, "centre functor", "Z([φ]∘[ψ]) = Z([ψ])∘Z([φ])", z_bad);
        if let Some(t) = t {
            let mut sigma = None;
            let pos: HashMap<usize, usize> = self
                .objects
                .iter()
                .enumerate()
                .filter_map(|(a, &i)| t.object_index(&f.member(i).set).map(|p| (p, a)))
                .collect();
            for (x, mx) in t.morphisms().iter().enumerate() {
                for y in 0..t.morphisms().len() {
                    let Some(xy) = t.compose(x, y) else { continue };
                    let my = t.morphism(y);
                    let (Some(&a), Some(&b), Some(&c)) = (pos.get(&mx.source), pos.get(&mx.target), pos.get(&my.target)) else { continue };
                    let sx = coset(f, a, b, self.objects[b], &mx.rho);
                    let sy = coset(f, b, c, self.objects[c], &my.rho);
                    let sxy = coset(f, a, c, self.objects[c], &t.morphism(xy).rho);
                    if self.compose(f, &sx, &sy) != sxy || !self.mor(a, b).contains(&sx) {
                        sigma.get_or_insert(format!("σ fails on {} ∘ {}", mx.label, my.label));
                    }
                }
            }
            r.verdict(SECTION, "projection functor", "σ(φ∘ψ) = σ(φ)∘σ(ψ), landing in Hom_F/Inn", sigma);
        }
        r
    }
}

fn coset(f: &FusionSystem, a: usize, b: usize, target_member: usize, img: &[u32]) -> OrbitMorphism {
    let g = &f.slice().group;
    let q = &f.member(target_member).set;
    let rep = q
        .iter()
        .map(|x| img.iter().map(|&v| if v == NONE { NONE } else { g.conj(v, x) }).collect::<Vec<u32>>())
        .min()
        .expect("Q is nonempty");
    OrbitMorphism { source: a, target: b, rep }
}

/// Searches for an isomorphism `L → L′` of partial groups that maps each
/// object to itself, trying automorphisms of `S` first and forcing the
/// rest through products. `Ok(None)` means none was found within the
/// budget's reach; exceeding the budget is an error.
pub fn locality_isomorphism_search(l1: &Locality, l2: &Locality, budget: usize) -> Result<Option<Vec<Handle>>> {
    if l1.len() != l2.len() || l1.sylow().order() != l2.sylow().order() {
        return Ok(None);
    }
    let g = l1.sylow().group();
    let gens = g.generators(&g.full());
    let n = l1.len();
    let mut steps = 0usize;
    // automorphisms of S fixing every object
    let mut autos = vec![];
    let mut choice = vec![0u32; gens.len()];
    loop {
        let imgs: Vec<u32> = choice.clone();
        if let Some(map) = g.extend_hom(&gens, &imgs, g) {
            let beta: Vec<u32> = g.elements().map(|x| map[&x]).collect();
            let bij: BTreeSet<u32> = beta.iter().copied().collect();
            let fixes = l1.delta().iter().all(|o| g.set(o.set.iter().map(|x| beta[x as usize])) == o.set);
            if bij.len() == g.order() && fixes {
                autos.push(beta);
            }
        }
        let mut i = 0;
        loop {
            if i == choice.len() {
                break;
            }
            choice[i] += 1;
            if (choice[i] as usize) < g.order() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    autos.sort();
    for beta in autos {
        let mut alpha = vec![NONE; n];
        for x in g.elements() {
            alpha[l1.embed(x) as usize] = l2.embed(beta[x as usize]);
        }
        if let Some(found) = extend_alpha(l1, l2, alpha, &mut steps, budget)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

fn extend_alpha(l1: &Locality, l2: &Locality, alpha: Vec<Handle>, steps: &mut usize, budget: usize) -> Result<Option<Vec<Handle>>> {
    let Some(alpha) = propagate(l1, l2, alpha) else { return Ok(None) };
    let Some(g) = (0..l1.len()).find(|&g| alpha[g] == NONE) else {
        return Ok(Some(alpha));
    };
    let used: BTreeSet<Handle> = alpha.iter().copied().filter(|&h| h != NONE).collect();
    for h in l2.handles() {
        if used.contains(&h) {
            continue;
        }
        *steps += 1;
        if *steps > budget {
            return Err(Error::Budget(budget));
        }
        let mut next = alpha.clone();
        next[g] = h;
        if let Some(found) = extend_alpha(l1, l2, next, steps, budget)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Forces values through inverses and pair products; `None` on conflict.
fn propagate(l1: &Locality, l2: &Locality, mut alpha: Vec<Handle>) -> Option<Vec<Handle>> {
    let n = l1.len();
    loop {
        let mut changed = false;
        for a in 0..n as Handle {
            let fa = alpha[a as usize];
            if fa == NONE {
                continue;
            }
            let ia = l1.inv(a) as usize;
            if alpha[ia] == NONE {
                alpha[ia] = l2.inv(fa);
                changed = true;
            } else if alpha[ia] != l2.inv(fa) {
                return None;
            }
            if l1.s_g(a).iter().map(|x| l1.conj_point(a, x)).count() != l1.s_g(a).len() {
                return None;
            }
            for b in 0..n as Handle {
                let fb = alpha[b as usize];
                if fb == NONE {
                    continue;
                }
                let p1 = l1.pi(&[a, b]).ok();
                let p2 = l2.pi(&[fa, fb]).ok();
                match (p1, p2) {
                    (None, None) => {}
                    (Some(c), Some(d)) => {
                        if alpha[c as usize] == NONE {
                            alpha[c as usize] = d;
                            changed = true;
                        } else if alpha[c as usize] != d {
                            return None;
                        }
                    }
                    _ => return None,
                }
            }
        }
        let used: BTreeSet<Handle> = alpha.iter().copied().filter(|&h| h != NONE).collect();
        if used.len() != alpha.iter().filter(|&&h| h != NONE).count() {
            return None;
        }
        if !changed {
            return Some(alpha);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::FiniteGroup;
    use crate::partial_group::group_centrics;

    fn s4() -> (Locality, TransporterSystem) {
        let g = FiniteGroup::symmetric(4);
        let s = g.sylow_subgroups(&g.full(), 2).remove(0);
        let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s)).unwrap();
        let t = TransporterSystem::from_locality(&l).unwrap();
        (l, t)
    }

    #[test]
    fn classes_match_the_carrier() {
        let (l, t) = s4();
        let rec = build_partial_group(&t, &BulletData::identity(&t)).unwrap();
        assert_eq!(rec.len(), l.len());
        let poset = UpPoset::new(&t).unwrap();
        for m in t.isomorphisms() {
            let top = up_maximal(&t, &poset, m).unwrap();
            let g = t.origin(m).unwrap();
            let tm = t.morphism(top);
            assert_eq!(t.origin(top), Some(g));
            assert_eq!(t.objects()[tm.source].set, l.s_g(g));
            assert_eq!(t.objects()[tm.target].set, l.s_g(l.inv(g)));
        }
    }

    #[test]
    fn s4_reconstruction_checks() {
        let (l, t) = s4();
        let rec = build_partial_group(&t, &BulletData::identity(&t)).unwrap();
        let r = check_reconstruction(&t, &rec, 3).unwrap();
        assert!(r.passed(), "{r}");
        let r = roundtrip_phi(&l, &t, &rec, 3);
        assert!(r.passed(), "{r}");
        for f in 0..rec.len() {
            let s = rec.s_g_from_classes(&t, f).unwrap();
            assert_eq!(s, rec.locality().s_g(f as Handle));
        }
        let inv = rec.inverse(7);
        assert_eq!(rec.chain_product(&t, &[inv, 7]).unwrap(), Some(rec.unit()));
    }

    #[test]
    fn orbit_category_of_s4() {
        let (l, t) = s4();
        let f = FusionSystem::from_locality(&l).unwrap();
        let objects = f.centrics();
        let o = OrbitCategory::new(&f, &objects);
        let top = objects.iter().position(|&i| i == f.top()).unwrap();
        assert_eq!(o.mor(top, top).len(), 1);
        assert_eq!(o.centres[top].len(), 2);
        assert!(o.check(&f, Some(&t)).passed(), "{}", o.check(&f, Some(&t)));
    }

    #[test]
    fn isomorphism_search_finds_relabelings() {
        let (l, t) = s4();
        let alpha = locality_isomorphism_search(&l, &l, 10_000).unwrap().unwrap();
        assert!(l.handles().all(|g| l.in_sylow(g).is_none() || alpha[g as usize] == g));
        let n = l.len() as Handle;
        let perm: Vec<Handle> = (0..n).map(|g| (g * 5 + 3) % n).collect();
        let l2 = l.relabel(&perm).unwrap();
        let found = locality_isomorphism_search(&l, &l2, 10_000).unwrap().unwrap();
        for a in l.handles() {
            for b in l.handles() {
                let p1 = l.pi(&[a, b]).ok().map(|c| found[c as usize]);
                assert_eq!(p1, l2.pi(&[found[a as usize], found[b as usize]]).ok());
            }
        }
        let rec = build_partial_group(&t, &BulletData::identity(&t)).unwrap();
        assert!(locality_isomorphism_search(&l, rec.locality(), 10_000).unwrap().is_some());
    }
}
