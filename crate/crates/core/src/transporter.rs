//! Transporter systems: a category on the objects with structure functors
//! `ε` from the transporter category of `S` and `ρ` into the fusion system.
//!
//! Composition is left-to-right: `compose(φ, ψ)` is `φ` followed by `ψ`.
//! Morphisms carry an opaque label; when built from a locality they also
//! carry the handle `g` of the triple `(g, P, Q)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{is_power_of, p_part, ElemSet};
use crate::fusion::{compose as compose_maps, restrict, FusionSystem};
use crate::partial_group::{Handle, Locality, Object, Sylow, NONE};
use crate::report::{Report, Status};

const SECTION: &str = "transporter";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub source: usize,
    pub target: usize,
    pub label: String,
    /// `ρ(φ)` on slice indices, [`NONE`] outside the source.
    pub rho: Vec<u32>,
}

/// Raw ingredients for an explicit transporter system.
#[derive(Clone, Debug)]
pub struct TransporterParts {
    pub sylow: Sylow,
    pub objects: Vec<Object>,
    pub morphisms: Vec<Morphism>,
    /// `(φ, ψ, φ∘ψ)`
    pub compose: Vec<(usize, usize, usize)>,
    /// `(P, Q, x, (x)ε_{P,Q})`
    pub epsilon: Vec<(usize, usize, u32, usize)>,
}

#[derive(Clone, Debug)]
pub struct TransporterSystem {
    sylow: Sylow,
    objects: Vec<Object>,
    object_index: HashMap<ElemSet, usize>,
    morphisms: Vec<Morphism>,
    by_pair: BTreeMap<(usize, usize), Vec<usize>>,
    compose: HashMap<(usize, usize), usize>,
    epsilon: HashMap<(usize, usize, u32), usize>,
    origin: Option<Vec<Handle>>,
}

impl TransporterSystem {
    pub fn from_parts(parts: TransporterParts) -> Result<Self> {
        let n = parts.sylow.order();
        let g = parts.sylow.group();
        let mut object_index = HashMap::new();
        for (i, o) in parts.objects.iter().enumerate() {
            if o.set.len() == 0 || !g.is_subgroup(&o.set) {
                return Err(Error::InvalidTransporter(format!("object {i} is not a subgroup of S")));
            }
            if object_index.insert(o.set.clone(), i).is_some() {
                return Err(Error::InvalidTransporter(format!("object {i} is repeated")));
            }
        }
        let k = parts.objects.len();
        let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, m) in parts.morphisms.iter().enumerate() {
            if m.source >= k || m.target >= k || m.rho.len() != n {
                return Err(Error::InvalidTransporter(format!("morphism {} is malformed", m.label)));
            }
            by_pair.entry((m.source, m.target)).or_default().push(i);
        }
        let count = parts.morphisms.len();
        let mut compose = HashMap::new();
        for &(a, b, c) in &parts.compose {
            if a >= count || b >= count || c >= count {
                return Err(Error::InvalidTransporter("composition refers to a missing morphism".into()));
            }
            let (ma, mb, mc) = (&parts.morphisms[a], &parts.morphisms[b], &parts.morphisms[c]);
            if ma.target != mb.source || mc.source != ma.source || mc.target != mb.target {
                return Err(Error::InvalidTransporter(format!("{} ∘ {} has the wrong ends", ma.label, mb.label)));
            }
            compose.insert((a, b), c);
        }
        let mut epsilon = HashMap::new();
        for &(p, q, x, m) in &parts.epsilon {
            if p >= k || q >= k || x as usize >= n || m >= count {
                return Err(Error::InvalidTransporter("ε refers to a missing object or morphism".into()));
            }
            epsilon.insert((p, q, x), m);
        }
        Ok(TransporterSystem {
            sylow: parts.sylow,
            objects: parts.objects,
            object_index,
            morphisms: parts.morphisms,
            by_pair,
            compose,
            epsilon,
            origin: None,
        })
    }

    /// `T_Δ(L)`: morphisms `(g, P, Q)` with `P ≤ S_g` and `P^g ≤ Q`.
    pub fn from_locality(l: &Locality) -> Result<Self> {
        let objects = l.delta().to_vec();
        let sy = l.sylow();
        let mut morphisms = vec![];
        let mut origin = vec![];
        let mut index: HashMap<(usize, usize, Handle), usize> = HashMap::new();
        for (i, p) in objects.iter().enumerate() {
            for g in l.handles() {
                let rho = restrict(l.conj_map(g), &p.set);
                if p.set.iter().any(|x| rho[x as usize] == NONE) {
                    continue;
                }
                let img = sy.group().set(p.set.iter().map(|x| rho[x as usize]));
                for (j, q) in objects.iter().enumerate() {
                    if img.is_subset(&q.set) {
                        index.insert((i, j, g), morphisms.len());
                        morphisms.push(Morphism { source: i, target: j, label: format!("({}, P{i}, P{j})", l.label(g)), rho: rho.clone() });
                        origin.push(g);
                    }
                }
            }
        }
        let mut from_source: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, m) in morphisms.iter().enumerate() {
            from_source.entry(m.source).or_default().push(k);
        }
        let mut compose = vec![];
        for (a, ma) in morphisms.iter().enumerate() {
            for &b in from_source.get(&ma.target).map(|v| v.as_slice()).unwrap_or(&[]) {
                let mb = &morphisms[b];
                let gh = l.pi(&[origin[a], origin[b]])?;
                let c = index
                    .get(&(ma.source, mb.target, gh))
                    .ok_or_else(|| Error::InvalidLocality(format!("no morphism for {} ∘ {}", ma.label, mb.label)))?;
                compose.push((a, b, *c));
            }
        }
        let mut epsilon = vec![];
        let g = sy.group();
        for (i, p) in objects.iter().enumerate() {
            for (j, q) in objects.iter().enumerate() {
                for x in g.transporter(&p.set, &q.set, &g.full()).iter() {
                    let m = index.get(&(i, j, l.embed(x))).ok_or_else(|| Error::InvalidLocality("S is not in the carrier".into()))?;
                    epsilon.push((i, j, x, *m));
                }
            }
        }
        let mut t = Self::from_parts(TransporterParts { sylow: sy.clone(), objects, morphisms, compose, epsilon })?;
        t.origin = Some(origin);
        Ok(t)
    }

    pub fn sylow(&self) -> &Sylow {
        &self.sylow
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn object_index(&self, set: &ElemSet) -> Option<usize> {
        self.object_index.get(set).copied()
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn morphism(&self, m: usize) -> &Morphism {
        &self.morphisms[m]
    }

    /// `Mor_T(P, Q)`
    pub fn mor(&self, p: usize, q: usize) -> &[usize] {
        self.by_pair.get(&(p, q)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn compose(&self, a: usize, b: usize) -> Option<usize> {
        self.compose.get(&(a, b)).copied()
    }

    /// Composite along a path, `None` if a step is missing.
    pub fn compose_path(&self, path: &[usize]) -> Option<usize> {
        let (&first, rest) = path.split_first()?;
        rest.iter().try_fold(first, |acc, &b| self.compose(acc, b))
    }

    /// `(x)ε_{P,Q}`
    pub fn epsilon(&self, p: usize, q: usize, x: u32) -> Option<usize> {
        self.epsilon.get(&(p, q, x)).copied()
    }

    /// `ι_{P,Q}`
    pub fn inclusion(&self, p: usize, q: usize) -> Option<usize> {
        self.epsilon(p, q, self.sylow.group().identity())
    }

    pub fn identity(&self, p: usize) -> Option<usize> {
        self.inclusion(p, p)
    }

    /// The handle `g` of `(g, P, Q)` for locality-built systems.
    pub fn origin(&self, m: usize) -> Option<Handle> {
        self.origin.as_ref().map(|o| o[m])
    }

    pub fn describe_object(&self, p: usize) -> String {
        self.sylow.describe(&self.objects[p].set)
    }

    /// `N_S(P, Q)` as slice indices.
    pub fn transporter_set(&self, p: usize, q: usize) -> ElemSet {
        let g = self.sylow.group();
        g.transporter(&self.objects[p].set, &self.objects[q].set, &g.full())
    }

    pub fn image(&self, m: usize) -> ElemSet {
        let mm = &self.morphisms[m];
        self.sylow.group().set(self.objects[mm.source].set.iter().map(|x| mm.rho[x as usize]))
    }

    pub fn is_iso(&self, m: usize) -> bool {
        self.image(m) == self.objects[self.morphisms[m].target].set
    }

    /// `Iso(T)`
    pub fn isomorphisms(&self) -> Vec<usize> {
        (0..self.morphisms.len()).filter(|&m| self.is_iso(m)).collect()
    }

    pub fn inverse(&self, m: usize) -> Option<usize> {
        let mm = &self.morphisms[m];
        let id = self.identity(mm.source)?;
        self.mor(mm.target, mm.source).iter().copied().find(|&k| self.compose(m, k) == Some(id))
    }

    /// `Ker(ρ_P)`
    pub fn kernel(&self, p: usize) -> Vec<usize> {
        let set = &self.objects[p].set;
        self.mor(p, p).iter().copied().filter(|&m| set.iter().all(|x| self.morphisms[m].rho[x as usize] == x)).collect()
    }

    fn identity_map(&self, p: usize) -> Vec<u32> {
        let n = self.sylow.order();
        restrict(&(0..n as u32).collect::<Vec<_>>(), &self.objects[p].set)
    }

    fn conj_map(&self, p: usize, x: u32) -> Vec<u32> {
        let g = self.sylow.group();
        let n = self.sylow.order();
        restrict(&(0..n as u32).map(|y| g.conj(y, x)).collect::<Vec<_>>(), &self.objects[p].set)
    }

    /// Adds a copy of `m` under a new label whose composites mirror the
    /// original. Used to build broken examples.
    pub fn duplicate_morphism(&mut self, m: usize) -> usize {
        let mut copy = self.morphisms[m].clone();
        copy.label = format!("{}′", copy.label);
        let d = self.morphisms.len();
        self.by_pair.entry((copy.source, copy.target)).or_default().push(d);
        self.morphisms.push(copy);
        let entries: Vec<((usize, usize), usize)> = self.compose.iter().map(|(k, v)| (*k, *v)).collect();
        for ((a, b), c) in entries {
            if a == m {
                self.compose.insert((d, b), c);
            }
            if b == m {
                self.compose.insert((a, d), c);
            }
        }
        if let Some(o) = &mut self.origin {
            o.push(o[m]);
        }
        d
    }

    /// Overwrites `ρ(m)`. Used to build broken examples.
    pub fn set_rho(&mut self, m: usize, rho: Vec<u32>) {
        self.morphisms[m].rho = rho;
    }

    /// Overwrites one composite. Used to build broken examples.
    pub fn set_composite(&mut self, a: usize, b: usize, c: usize) {
        self.compose.insert((a, b), c);
    }

    pub fn parts(&self) -> TransporterParts {
        let mut compose: Vec<(usize, usize, usize)> = self.compose.iter().map(|(&(a, b), &c)| (a, b, c)).collect();
        compose.sort();
        let mut epsilon: Vec<(usize, usize, u32, usize)> = self.epsilon.iter().map(|(&(p, q, x), &m)| (p, q, x, m)).collect();
        epsilon.sort();
        TransporterParts {
            sylow: self.sylow.clone(),
            objects: self.objects.clone(),
            morphisms: self.morphisms.clone(),
            compose,
            epsilon,
        }
    }

    /// Identities, associativity, and functoriality of `ε` and `ρ`.
    pub fn check_category(&self) -> Report {
        let mut r = Report::new();
        let label = |m: usize| self.morphisms[m].label.clone();
        let mut ends = None;
        for (a, ma) in self.morphisms.iter().enumerate() {
            for &b in self.mor(ma.target, ma.target).iter().chain(self.outgoing(ma.target)) {
                if self.compose(a, b).is_none() {
                    ends.get_or_insert(format!("{} ∘ {} is undefined", label(a), label(b)));
                }
            }
        }
        r.verdict(SECTION, "composition defined", format!("{} morphisms", self.morphisms.len()), ends);
        let mut ids = None;
        for p in 0..self.objects.len() {
            let Some(id) = self.identity(p) else {
                ids.get_or_insert(format!("no identity at {}", self.describe_object(p)));
                continue;
            };
            for q in 0..self.objects.len() {
                for &m in self.mor(p, q) {
                    if self.compose(id, m) != Some(m) || self.identity(q).and_then(|j| self.compose(m, j)) != Some(m) {
                        ids.get_or_insert(format!("identity law fails at {}", label(m)));
                    }
                }
            }
        }
        r.verdict(SECTION, "identities", "ι_P ∘ φ = φ = φ ∘ ι_Q", ids);
        let mut assoc = None;
        'outer: for (a, ma) in self.morphisms.iter().enumerate() {
            for &b in self.outgoing(ma.target) {
                let ab = self.compose(a, b);
                for &c in self.outgoing(self.morphisms[b].target) {
                    let left = ab.and_then(|ab| self.compose(ab, c));
                    let right = self.compose(b, c).and_then(|bc| self.compose(a, bc));
                    if left != right || left.is_none() {
                        assoc = Some(format!("({} ∘ {}) ∘ {}", label(a), label(b), label(c)));
                        break 'outer;
                    }
                }
            }
        }
        r.verdict(SECTION, "associativity", "all composable triples", assoc);
        let mut rho = None;
        for (&(a, b), &c) in &self.compose {
            let (ma, mb) = (&self.morphisms[a], &self.morphisms[b]);
            if compose_maps(&ma.rho, &mb.rho) != self.morphisms[c].rho {
                rho = Some(format!("ρ({} ∘ {})", label(a), label(b)));
                break;
            }
        }
        if rho.is_none() {
            rho = (0..self.objects.len())
                .find(|&p| self.identity(p).is_some_and(|id| self.morphisms[id].rho != self.identity_map(p)))
                .map(|p| format!("ρ(ι) at {}", self.describe_object(p)));
        }
        r.verdict(SECTION, "ρ functor", "ρ preserves identities and composites", rho);
        let g = self.sylow.group();
        let mut eps = None;
        let k = self.objects.len();
        'eps: for p in 0..k {
            for q in 0..k {
                for x in self.transporter_set(p, q).iter() {
                    for rr in 0..k {
                        for y in self.transporter_set(q, rr).iter() {
                            let lhs = self.epsilon(p, rr, g.mul(x, y));
                            let rhs = self.epsilon(p, q, x).zip(self.epsilon(q, rr, y)).and_then(|(a, b)| self.compose(a, b));
                            if lhs != rhs || lhs.is_none() {
                                eps = Some(format!("ε({}·{}) through {}", g.label(x), g.label(y), self.describe_object(q)));
                                break 'eps;
                            }
                        }
                    }
                }
            }
        }
        r.verdict(SECTION, "ε functor", "ε(xy) = ε(x) ∘ ε(y)", eps);
        r
    }

    fn outgoing(&self, p: usize) -> impl Iterator<Item = &usize> {
        (0..self.objects.len()).flat_map(move |q| self.mor(p, q).iter())
    }

    /// Objects closed under overgroups with `ε` and `ρ` the identity on
    /// them; kernels of `ρ` acting freely with `ρ` as the orbit map.
    pub fn check_a1_a2(&self) -> Report {
        let mut r = Report::new();
        let g = self.sylow.group();
        let mut a1 = None;
        for sub in g.subgroups(&g.full()) {
            if self.object_index(&sub).is_none() && self.objects.iter().any(|o| o.set.is_subset(&sub)) {
                a1 = Some(format!("overgroup {} is not an object", self.sylow.describe(&sub)));
                break;
            }
        }
        if a1.is_none() {
            for (m, mm) in self.morphisms.iter().enumerate() {
                if !self.image(m).is_subset(&self.objects[mm.target].set) {
                    a1 = Some(format!("ρ({}) leaves its target", mm.label));
                    break;
                }
            }
        }
        r.verdict(SECTION, "(A1)", format!("{} objects", self.objects.len()), a1);
        let mut a2 = None;
        let mut orbits = 0;
        'pairs: for (&(p, q), ms) in &self.by_pair {
            let kp = self.kernel(p);
            let kq = self.kernel(q);
            let mut fibres: BTreeMap<&Vec<u32>, BTreeSet<usize>> = BTreeMap::new();
            for &m in ms {
                fibres.entry(&self.morphisms[m].rho).or_default().insert(m);
            }
            for &m in ms {
                let left: BTreeSet<usize> = kp.iter().filter_map(|&k| self.compose(k, m)).collect();
                let right: BTreeSet<usize> = kq.iter().filter_map(|&k| self.compose(m, k)).collect();
                let fibre = &fibres[&self.morphisms[m].rho];
                let label = &self.morphisms[m].label;
                if left.len() != kp.len() || !left.contains(&m) {
                    a2 = Some(format!("Ker(ρ_P) does not act freely at {label}"));
                } else if &left != fibre {
                    a2 = Some(format!("the ρ-fibre of {label} is not a single Ker(ρ_P)-orbit"));
                } else if right.len() != kq.len() || !right.contains(&m) {
                    a2 = Some(format!("Ker(ρ_Q) does not act freely at {label}"));
                }
                if a2.is_some() {
                    break 'pairs;
                }
            }
            orbits += fibres.len();
        }
        r.verdict(SECTION, "(A2)", format!("{orbits} ρ-fibres"), a2);
        r
    }

    /// `ε` injective with `ρ∘ε` the conjugation; the conjugation square
    /// `ε_P(x) ∘ φ = φ ∘ ε_Q(xρ(φ))`.
    pub fn check_b_c(&self) -> Report {
        let mut r = Report::new();
        let g = self.sylow.group();
        let k = self.objects.len();
        let mut b = None;
        'b: for p in 0..k {
            for q in 0..k {
                let mut seen = HashSet::new();
                for x in self.transporter_set(p, q).iter() {
                    let Some(m) = self.epsilon(p, q, x) else {
                        b = Some(format!("ε undefined at {} for {} → {}", g.label(x), self.describe_object(p), self.describe_object(q)));
                        break 'b;
                    };
                    let mm = &self.morphisms[m];
                    if mm.source != p || mm.target != q || !seen.insert(m) {
                        b = Some(format!("ε is not injective at {}", g.label(x)));
                        break 'b;
                    }
                    if mm.rho != self.conj_map(p, x) {
                        b = Some(format!("ρ(ε({})) ≠ c_{} on {}", g.label(x), g.label(x), self.describe_object(p)));
                        break 'b;
                    }
                }
            }
        }
        r.verdict(SECTION, "(B)", "ε injective, ρ∘ε = conjugation", b);
        let mut c = None;
        let mut count = 0;
        'c: for (&(p, q), ms) in &self.by_pair {
            for &m in ms {
                for x in self.objects[p].set.iter() {
                    count += 1;
                    let y = self.morphisms[m].rho[x as usize];
                    let lhs = self.epsilon(p, p, x).and_then(|e| self.compose(e, m));
                    let rhs = self.epsilon(q, q, y).and_then(|e| self.compose(m, e));
                    if lhs != rhs || lhs.is_none() {
                        c = Some(format!("{} with x = {}", self.morphisms[m].label, g.label(x)));
                        break 'c;
                    }
                }
            }
        }
        r.verdict(SECTION, "(C)", format!("{count} squares"), c);
        r
    }

    /// Objects grouped by `T`-isomorphism.
    pub fn iso_classes(&self) -> Vec<Vec<usize>> {
        let mut class: Vec<Option<usize>> = vec![None; self.objects.len()];
        let mut out: Vec<Vec<usize>> = vec![];
        for p in 0..self.objects.len() {
            if class[p].is_some() {
                continue;
            }
            let id = out.len();
            let mut members = vec![];
            for q in 0..self.objects.len() {
                if self.mor(p, q).iter().any(|&m| self.is_iso(m)) {
                    class[q] = Some(id);
                    members.push(q);
                }
            }
            out.push(members);
        }
        out
    }

    /// `[Aut_T(P) : ε_P(N_S(P))]`
    pub fn sylow_index(&self, p: usize) -> usize {
        let aut = self.mor(p, p).len();
        let ns = self.transporter_set(p, p).len();
        aut / ns.max(1)
    }

    /// Restriction of a morphism `φ: P → Q` to objects `P0 ≤ P`,
    /// `Q0 ≤ Q`: the unique `ψ` with `ι_{P0,P} ∘ φ = ψ ∘ ι_{Q0,Q}`.
    pub fn restrict_morphism(&self, m: usize, p0: usize, q0: usize) -> Result<usize> {
        let mm = &self.morphisms[m];
        let (p, q) = (mm.source, mm.target);
        let nested = self.objects[p0].set.is_subset(&self.objects[p].set) && self.objects[q0].set.is_subset(&self.objects[q].set);
        if !nested {
            return Err(Error::Precondition("restriction objects are not nested".into()));
        }
        if !self.objects[p0].set.iter().all(|x| self.objects[q0].set.contains(mm.rho[x as usize])) {
            return Err(Error::Precondition(format!(
                "ρ({}) does not map {} into {}",
                mm.label,
                self.describe_object(p0),
                self.describe_object(q0)
            )));
        }
        let lhs = self.inclusion(p0, p).and_then(|i| self.compose(i, m));
        let iq = self.inclusion(q0, q);
        let found: Vec<usize> =
            self.mor(p0, q0).iter().copied().filter(|&psi| lhs.is_some() && iq.and_then(|i| self.compose(psi, i)) == lhs).collect();
        match found.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::InvalidTransporter(format!("{} has no restriction", mm.label))),
            _ => Err(Error::InvalidTransporter(format!("{} has several restrictions, cancellation fails", mm.label))),
        }
    }

    /// `ψ = iso ∘ ι_{Q0,Q}` with `Q0` the image of `ρ(ψ)`.
    pub fn factor_morphism(&self, m: usize) -> Result<(usize, usize)> {
        let mm = &self.morphisms[m];
        let img = self.image(m);
        let q0 = self.object_index(&img).ok_or_else(|| Error::NotInDomain(format!("image of {} is not an object", mm.label)))?;
        let iso = self.restrict_morphism(m, mm.source, q0)?;
        let incl = self.inclusion(q0, mm.target).ok_or_else(|| Error::InvalidTransporter("missing inclusion".into()))?;
        Ok((iso, incl))
    }

    /// Sylow condition on automorphism groups, extension over
    /// normalizing overgroups, and the chain condition.
    pub fn check_i_ii_iii(&self) -> Report {
        let mut r = Report::new();
        let p = self.sylow.dp.prime();
        let mut bad_i = None;
        let classes = self.iso_classes();
        for class in &classes {
            if !class.iter().any(|&q| p_part(self.sylow_index(q), p) == 1) {
                bad_i = Some(format!(
                    "no representative of {} has Sylow index prime to p (index {})",
                    self.describe_object(class[0]),
                    self.sylow_index(class[0])
                ));
                break;
            }
        }
        r.verdict(SECTION, "(I)", format!("{} object classes", classes.len()), bad_i);
        let mut count = 0;
        let mut bad_ii = None;
        let g = self.sylow.group();
        'ii: for phi in self.isomorphisms() {
            let (pp, qq) = (self.morphisms[phi].source, self.morphisms[phi].target);
            let Some(inv) = self.inverse(phi) else {
                bad_ii = Some(format!("{} has no inverse", self.morphisms[phi].label));
                break;
            };
            let np = g.normalizer(&self.objects[pp].set, &g.full());
            let nq = g.normalizer(&self.objects[qq].set, &g.full());
            for pb in 0..self.objects.len() {
                let pbs = &self.objects[pb].set;
                if !self.objects[pp].set.is_subset(pbs) || !pbs.is_subset(&np) {
                    continue;
                }
                for qb in 0..self.objects.len() {
                    let qbs = &self.objects[qb].set;
                    if !self.objects[qq].set.is_subset(qbs) || !qbs.is_subset(&nq) {
                        continue;
                    }
                    // φ⁻¹ ∘ ε_P(P̄) ∘ φ ≤ ε_Q(Q̄)
                    let qualifies = pbs.iter().all(|x| {
                        let Some(c) = self.epsilon(pp, pp, x).and_then(|e| self.compose_path(&[inv, e, phi])) else { return false };
                        qbs.iter().any(|y| self.epsilon(qq, qq, y) == Some(c))
                    });
                    if !qualifies {
                        continue;
                    }
                    count += 1;
                    let lhs = self.inclusion(qq, qb).and_then(|i| self.compose(phi, i));
                    let found = self.mor(pb, qb).iter().any(|&bar| {
                        self.inclusion(pp, pb).and_then(|i| self.compose(i, bar)) == lhs && lhs.is_some()
                    });
                    if !found {
                        bad_ii = Some(format!(
                            "{} does not extend to {} → {}",
                            self.morphisms[phi].label,
                            self.describe_object(pb),
                            self.describe_object(qb)
                        ));
                        break 'ii;
                    }
                }
            }
        }
        r.verdict(SECTION, "(II)", format!("{count} extension problems"), bad_ii);
        if self.sylow.dp.torus_rank() == 0 {
            r.pass(SECTION, "(III)", "S is finite, every increasing chain of objects stabilizes");
        } else {
            r.inconclusive(SECTION, "(III)", "increasing chains may leave the working truncation");
        }
        r
    }

    /// The linking-system checklist against a fusion system on `S`.
    pub fn check_linking(&self, f: &FusionSystem) -> Report {
        let mut r = Report::new();
        let mut sat = f.check_saturation_i();
        sat.extend(f.check_saturation_ii());
        match sat.outcome() {
            Status::Pass => r.pass(SECTION, "saturated", "(I) and (II) pass"),
            Status::Inconclusive => r.inconclusive(SECTION, "saturated", "saturation inconclusive"),
            Status::Fail => r.fail(SECTION, "saturated", "saturation fails", sat.failures().next().map(|e| e.axiom.clone()).unwrap_or_default()),
        }
        let mut missing = None;
        let centrics = f.centrics();
        for &i in &centrics {
            let radical = f.out_group(i).map(|o| o.o_p(self.sylow.dp.prime()) == o.inn_set).unwrap_or(false);
            let m = f.member(i);
            let present = self.objects.iter().any(|o| o.set == m.set && o.full_torus == m.full_torus);
            if radical && !present {
                missing = Some(format!("{} is centric with O_p(Out_F(P)) = 1 but not an object", f.describe(i)));
                break;
            }
        }
        r.verdict(SECTION, "enough objects", format!("{} centric subgroups", centrics.len()), missing);
        let p = self.sylow.dp.prime();
        let g = self.sylow.group();
        let mut kern = None;
        for q in 0..self.objects.len() {
            let k = self.kernel(q).len();
            if !is_power_of(k, p) && !self.objects[q].full_torus {
                kern = Some(format!("|Ker(ρ)| = {k} at {}", self.describe_object(q)));
                break;
            }
        }
        r.verdict(SECTION, "p-toral kernels", "Ker(ρ_P) is a p-group at truncation", kern);
        let centric_sets: BTreeSet<&ElemSet> = centrics.iter().map(|&i| &f.member(i).set).collect();
        let object_sets: BTreeSet<&ElemSet> = self.objects.iter().map(|o| &o.set).collect();
        if centric_sets == object_sets {
            let mut bad = None;
            for q in 0..self.objects.len() {
                let z = g.center(&self.objects[q].set);
                let eps: BTreeSet<usize> = z.iter().filter_map(|x| self.epsilon(q, q, x)).collect();
                let ker: BTreeSet<usize> = self.kernel(q).into_iter().collect();
                if eps != ker {
                    bad = Some(format!("Ker(ρ) ≠ ε(Z(P)) at {}", self.describe_object(q)));
                    break;
                }
            }
            r.verdict(SECTION, "kernel is the centre", "objects are exactly the centrics", bad);
        }
        r
    }

    /// All axiom checks in one report.
    pub fn check_all(&self) -> Report {
        let mut r = self.check_category();
        r.extend(self.check_a1_a2());
        r.extend(self.check_b_c());
        r.extend(self.check_i_ii_iii());
        r
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

    fn klein(t: &TransporterSystem) -> usize {
        (0..t.objects().len()).find(|&p| t.objects()[p].set.len() == 4 && t.mor(p, p).len() == 24).unwrap()
    }

    #[test]
    fn s4_counts() {
        let (_, t) = s4();
        let v = klein(&t);
        assert_eq!(t.kernel(v).len(), 4);
        let rhos: BTreeSet<&Vec<u32>> = t.mor(v, v).iter().map(|&m| &t.morphism(m).rho).collect();
        assert_eq!(rhos.len(), 6);
        assert_eq!(t.sylow_index(v), 3);
    }

    #[test]
    fn s4_axioms_pass() {
        let (l, t) = s4();
        let r = t.check_all();
        assert!(r.passed(), "{r}");
        let f = FusionSystem::from_locality(&l).unwrap();
        let r = t.check_linking(&f);
        assert!(r.passed(), "{r}");
        assert_eq!(r.status_of("kernel is the centre"), Some(Status::Pass));
    }

    #[test]
    fn duplicated_morphism_breaks_freeness() {
        let (_, mut t) = s4();
        let v = klein(&t);
        let m = t.mor(v, v)[3];
        t.duplicate_morphism(m);
        assert_eq!(t.check_a1_a2().status_of("(A2)"), Some(Status::Fail));
    }

    #[test]
    fn mutated_rho_breaks_b() {
        let (_, mut t) = s4();
        let v = klein(&t);
        let id = t.identity(v).unwrap();
        let other = t.mor(v, v).iter().copied().find(|&m| t.morphism(m).rho != t.morphism(id).rho).unwrap();
        let rho = t.morphism(other).rho.clone();
        t.set_rho(id, rho);
        assert_eq!(t.check_b_c().status_of("(B)"), Some(Status::Fail));
    }

    #[test]
    fn restriction_and_factoring() {
        let (l, t) = s4();
        let top = t.object_index(&l.sylow().full()).unwrap();
        for m in 0..t.morphisms().len() {
            let mm = t.morphism(m);
            assert_eq!(t.restrict_morphism(m, mm.source, mm.target).unwrap(), m);
            let (iso, incl) = t.factor_morphism(m).unwrap();
            assert!(t.is_iso(iso));
            assert_eq!(t.compose(iso, incl), Some(m));
            if mm.target != top {
                let up = t.compose(m, t.inclusion(mm.target, top).unwrap()).unwrap();
                assert_eq!(t.restrict_morphism(up, mm.source, mm.target).unwrap(), m);
            }
        }
    }
}
