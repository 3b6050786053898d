//! JSON file formats for groups, localities, transporter systems and
//! fusion descriptions.
//!
//! Elements are referred to by label. Elements of a group with a torus can
//! also be written as `{"torus": ["1/4"], "finite": "flip"}`. A subgroup is
//! given by a list of elements (the subgroup they generate is taken) and
//! an optional `full_torus` flag.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::FiniteGroup;
use crate::fusion::{FusionSystem, MemberSummary};
use crate::partial_group::{group_centrics, Handle, Locality, LocalityParts, Object, Sylow, NONE};
use crate::ptoral::{DPGroup, Slice};
use crate::reconstruction::BulletData;
use crate::transporter::{Morphism, TransporterParts, TransporterSystem};

fn is_false(b: &bool) -> bool {
    !*b
}

fn default_truncation() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FinitePart {
    /// Rows of labels; the first row is the identity's row, so it lists
    /// the labels in order.
    Table(Vec<Vec<String>>),
    /// Permutations of `1..=degree`, written as image lists.
    Permutations { degree: usize, generators: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub prime: u32,
    #[serde(default)]
    pub torus_rank: usize,
    pub finite_part: FinitePart,
    /// label → matrix; the identity may be omitted
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub action: BTreeMap<String, Vec<Vec<i64>>>,
    #[serde(default = "default_truncation")]
    pub truncation: u32,
}

impl GroupFile {
    pub fn finite_group(&self) -> Result<FiniteGroup> {
        match &self.finite_part {
            FinitePart::Table(rows) => {
                let labels = rows.first().ok_or_else(|| Error::Parse("empty multiplication table".into()))?.clone();
                let index: BTreeMap<&str, u32> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
                if index.len() != labels.len() {
                    return Err(Error::Parse("repeated label in the first row".into()));
                }
                let mut table = vec![];
                for (i, row) in rows.iter().enumerate() {
                    if row.first().map(String::as_str) != labels.get(i).map(String::as_str) {
                        return Err(Error::Parse(format!("row {i} must start with `{}`", labels.get(i).map_or("", |s| s))));
                    }
                    let r: Result<Vec<u32>> = row.iter().map(|l| index.get(l.as_str()).copied().ok_or_else(|| Error::UnknownLabel(l.clone()))).collect();
                    table.push(r?);
                }
                FiniteGroup::from_table(labels, table)
            }
            FinitePart::Permutations { degree, generators } => {
                let gens: Vec<Vec<usize>> = generators.iter().map(|g| g.iter().map(|&i| i.wrapping_sub(1)).collect()).collect();
                FiniteGroup::from_permutations(*degree, &gens)
            }
        }
    }

    pub fn dp_group(&self) -> Result<DPGroup> {
        let f = self.finite_group()?;
        let r = self.torus_rank;
        let id: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
        for l in self.action.keys() {
            f.find(l).ok_or_else(|| Error::UnknownLabel(l.clone()))?;
        }
        let mut action = vec![];
        for x in f.elements() {
            match self.action.get(f.label(x)) {
                Some(m) => action.push(m.clone()),
                None if r == 0 || x == f.identity() => action.push(id.clone()),
                None => return Err(Error::Parse(format!("no action given for `{}`", f.label(x)))),
            }
        }
        DPGroup::new(self.prime, r, f, action, self.truncation.max(1))
    }

    pub fn from_finite(prime: u32, g: &FiniteGroup) -> Self {
        let rows = g.elements().map(|a| g.elements().map(|b| g.label(g.mul(a, b)).to_string()).collect()).collect();
        GroupFile { prime, torus_rank: 0, finite_part: FinitePart::Table(rows), action: BTreeMap::new(), truncation: 1 }
    }

    pub fn from_dp(dp: &DPGroup) -> Self {
        let f = dp.finite_part();
        let mut out = Self::from_finite(dp.prime(), f);
        out.torus_rank = dp.torus_rank();
        out.truncation = dp.truncation();
        if dp.torus_rank() > 0 {
            out.action = f.elements().filter(|&x| x != f.identity()).map(|x| (f.label(x).to_string(), dp.action(x).to_vec())).collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Label(String),
    Coordinates {
        #[serde(default)]
        torus: Vec<String>,
        finite: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub elements: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub full_torus: bool,
}

/// Element references resolved inside a finite group or a slice.
struct Resolver<'a> {
    group: &'a FiniteGroup,
    slice: Option<(&'a DPGroup, &'a Slice)>,
}

impl Resolver<'_> {
    fn element(&self, e: &ElementSpec) -> Result<u32> {
        match e {
            ElementSpec::Label(l) => self.group.find(l).ok_or_else(|| Error::UnknownLabel(l.clone())),
            ElementSpec::Coordinates { torus, finite } => {
                let Some((dp, slice)) = self.slice else {
                    return match torus.iter().all(|c| c.trim() == "0") {
                        true => self.group.find(finite).ok_or_else(|| Error::UnknownLabel(finite.clone())),
                        false => Err(Error::Parse("torus coordinates given for a finite group".into())),
                    };
                };
                let coords: Vec<&str> = torus.iter().map(String::as_str).collect();
                let coords = if coords.is_empty() { vec!["0"; dp.torus_rank()] } else { coords };
                let x = dp.element(&coords, finite)?;
                slice.index_of(&x).ok_or_else(|| Error::NotRepresentable(format!("{} is above the truncation", dp.label(&x))))
            }
        }
    }

    fn subgroup(&self, s: &SubgroupSpec) -> Result<Object> {
        let gens: Result<Vec<u32>> = s.elements.iter().map(|e| self.element(e)).collect();
        let set = self.group.closure(gens?);
        let full_torus = s.full_torus && self.slice.is_some_and(|(dp, _)| dp.torus_rank() > 0);
        if full_torus {
            let (dp, slice) = self.slice.expect("checked above");
            let k = dp.finite_part().set(set.iter().map(|x| slice.element(x).finite_index()));
            let t = dp.torus_subgroup(&k)?;
            let set = dp.slice_set(&t, slice).expect("torus subgroups meet every slice");
            return Ok(Object { set, full_torus });
        }
        Ok(Object { set, full_torus })
    }
}

fn spec_of(g: &FiniteGroup, obj: &Object) -> SubgroupSpec {
    SubgroupSpec { elements: g.generators(&obj.set).into_iter().map(|x| ElementSpec::Label(g.label(x).to_string())).collect(), full_torus: obj.full_torus }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    /// `"centric"` or `"all"`
    Keyword(String),
    List(Vec<SubgroupSpec>),
}

/// An explicit carrier. `S` embeds by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrierSpec {
    pub labels: Vec<String>,
    pub inverse: Vec<String>,
    /// `[g, h, gh]` for every pair in `D`
    pub products: Vec<[String; 3]>,
    /// per carrier element, the pairs `[x, x^g]` of `S`
    pub conjugation: Vec<Vec<[String; 2]>>,
}

/// Either `L_Δ(G)` for a finite group `G ≥ S`, `S` itself (no `sylow`
/// field), or an explicit carrier over `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityFile {
    pub group: GroupFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sylow: Option<Vec<String>>,
    pub delta: DeltaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<CarrierSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_words: Vec<Vec<String>>,
}

/// Command-line overrides applied while loading.
#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub prime: Option<u32>,
    pub truncation: Option<u32>,
}

impl LoadOptions {
    fn apply(&self, group: &GroupFile) -> Result<GroupFile> {
        if let Some(p) = self.prime.filter(|&p| p != group.prime) {
            return Err(Error::Parse(format!("--prime {p} disagrees with the file's prime {}", group.prime)));
        }
        let mut g = group.clone();
        if let Some(m) = self.truncation {
            g.truncation = m;
        }
        Ok(g)
    }
}

impl LocalityFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("locality files serialize")
    }

    pub fn build(&self, opts: LoadOptions) -> Result<Locality> {
        let group = opts.apply(&self.group)?;
        let mut l = match (&self.carrier, &self.sylow) {
            (Some(c), None) => build_explicit(&group, &self.delta, c)?,
            (Some(_), Some(_)) => return Err(Error::Parse("an explicit carrier lives over S; drop the `sylow` field".into())),
            (None, _) if group.torus_rank > 0 => {
                if self.sylow.is_some() {
                    return Err(Error::Parse("a group with a torus must be S itself".into()));
                }
                let dp = group.dp_group()?;
                let slice = dp.slice(dp.truncation())?;
                let delta = resolve_delta(&self.delta, &dp, &slice)?;
                Locality::group_locality(&dp, dp.truncation(), delta)?
            }
            (None, gens) => {
                let g = group.finite_group()?;
                let r = Resolver { group: &g, slice: None };
                let s = match gens {
                    Some(gens) => {
                        let ids: Result<Vec<u32>> = gens.iter().map(|l| r.element(&ElementSpec::Label(l.clone()))).collect();
                        g.closure(ids?)
                    }
                    None => g.full(),
                };
                let delta = match &self.delta {
                    DeltaSpec::Keyword(k) if k == "centric" => group_centrics(&g, &s),
                    DeltaSpec::Keyword(k) if k == "all" => g.subgroups(&s),
                    DeltaSpec::Keyword(k) => return Err(Error::Parse(format!("unknown object set `{k}`"))),
                    DeltaSpec::List(v) => v.iter().map(|s| r.subgroup(s).map(|o| o.set)).collect::<Result<_>>()?,
                };
                Locality::from_finite_group(&g, group.prime, &s, &delta)?
            }
        };
        for w in &self.removed_words {
            let hw: Result<Vec<Handle>> = w.iter().map(|x| l.find(x).ok_or_else(|| Error::UnknownLabel(x.clone()))).collect();
            l.remove_word(&hw?);
        }
        Ok(l)
    }

    /// The explicit form of any locality.
    pub fn from_locality(l: &Locality) -> Self {
        let sy = l.sylow();
        let g = sy.group();
        let lab = |h: Handle| l.label(h).to_string();
        let mut products = vec![];
        for a in l.handles() {
            for b in l.handles() {
                if let Some(c) = l.pair_product(a, b) {
                    products.push([lab(a), lab(b), lab(c)]);
                }
            }
        }
        let conjugation = l
            .handles()
            .map(|h| {
                l.conj_map(h)
                    .iter()
                    .enumerate()
                    .filter(|(_, &y)| y != NONE)
                    .map(|(x, &y)| [g.label(x as u32).to_string(), g.label(y).to_string()])
                    .collect()
            })
            .collect();
        let removed_words = l.removed_words().map(|w| w.iter().map(|&h| lab(h)).collect()).collect();
        LocalityFile {
            group: GroupFile::from_dp(&sy.dp.with_truncation(sy.slice.level.max(1))),
            sylow: None,
            delta: DeltaSpec::List(l.delta().iter().map(|o| spec_of(g, o)).collect()),
            carrier: Some(CarrierSpec { labels: l.labels().to_vec(), inverse: l.handles().map(|h| lab(l.inv(h))).collect(), products, conjugation }),
            removed_words,
        }
    }
}

fn resolve_delta(delta: &DeltaSpec, dp: &DPGroup, slice: &Slice) -> Result<Vec<Object>> {
    match delta {
        DeltaSpec::Keyword(k) if k == "all" => Ok(dp
            .all_subgroups(slice.level)?
            .iter()
            .map(|s| Object { set: dp.slice_set(s, slice).expect("listed at this level"), full_torus: s.contains_full_torus() })
            .collect()),
        DeltaSpec::Keyword(k) if k == "centric" => {
            let f = FusionSystem::generate(dp, slice.level, crate::fusion::default_family(dp, slice), vec![])?;
            Ok(f.centrics().into_iter().map(|i| Object { set: f.member(i).set.clone(), full_torus: f.member(i).full_torus }).collect())
        }
        DeltaSpec::Keyword(k) => Err(Error::Parse(format!("unknown object set `{k}`"))),
        DeltaSpec::List(v) => {
            let r = Resolver { group: &slice.group, slice: Some((dp, slice)) };
            v.iter().map(|s| r.subgroup(s)).collect()
        }
    }
}

fn build_explicit(group: &GroupFile, delta: &DeltaSpec, c: &CarrierSpec) -> Result<Locality> {
    let dp = group.dp_group()?;
    let level = if dp.torus_rank() > 0 { dp.truncation() } else { 0 };
    let slice = dp.slice(level)?;
    let g = &slice.group;
    let handle = |x: &str| c.labels.iter().position(|l| l == x).map(|i| i as Handle).ok_or_else(|| Error::UnknownLabel(x.to_string()));
    if c.labels.iter().collect::<HashSet<_>>().len() != c.labels.len() {
        return Err(Error::Parse("carrier labels repeat".into()));
    }
    let embed: Result<Vec<Handle>> = g.elements().map(|x| handle(g.label(x))).collect();
    let unit = handle(g.label(g.identity()))?;
    let inverse: Result<Vec<Handle>> = c.inverse.iter().map(|x| handle(x)).collect();
    let products: Result<Vec<(Handle, Handle, Handle)>> = c.products.iter().map(|[a, b, d]| Ok((handle(a)?, handle(b)?, handle(d)?))).collect();
    if c.conjugation.len() != c.labels.len() {
        return Err(Error::Parse("one conjugation list per carrier element is required".into()));
    }
    let mut conj = vec![];
    for pairs in &c.conjugation {
        let mut m = vec![NONE; g.order()];
        for [x, y] in pairs {
            let (x, y) = (g.find(x).ok_or_else(|| Error::UnknownLabel(x.clone()))?, g.find(y).ok_or_else(|| Error::UnknownLabel(y.clone()))?);
            m[x as usize] = y;
        }
        conj.push(m);
    }
    let delta = resolve_delta(delta, &dp, &slice)?;
    Locality::from_parts(LocalityParts {
        prime: dp.prime(),
        labels: c.labels.clone(),
        unit,
        inverse: inverse?,
        products: products?,
        conj,
        sylow: Sylow::new(dp.clone(), level, embed?)?,
        delta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismSpec {
    pub source: usize,
    pub target: usize,
    pub label: String,
    /// `[x, xρ(φ)]` for `x` in the source
    pub rho: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletSpec {
    /// `[P, P•]`; objects not listed are fixed
    #[serde(default)]
    pub objects: Vec<[SubgroupSpec; 2]>,
    /// `[φ, φ•]` by morphism index; morphisms not listed are fixed
    #[serde(default)]
    pub morphisms: Vec<[usize; 2]>,
}

/// Objects are indexed in file order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransporterFile {
    pub group: GroupFile,
    pub objects: Vec<SubgroupSpec>,
    pub morphisms: Vec<MorphismSpec>,
    /// `[φ, ψ, φ∘ψ]`
    pub compose: Vec<[usize; 3]>,
    /// `[P, Q, x, (x)ε_{P,Q}]`
    pub epsilon: Vec<(usize, usize, String, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bullet: Option<BulletSpec>,
}

impl TransporterFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transporter files serialize")
    }

    pub fn build(&self, opts: LoadOptions) -> Result<(TransporterSystem, BulletData)> {
        let group = opts.apply(&self.group)?;
        let dp = group.dp_group()?;
        let level = if dp.torus_rank() > 0 { dp.truncation() } else { 0 };
        let slice = dp.slice(level)?;
        let g = slice.group.clone();
        let r = Resolver { group: &g, slice: Some((&dp, &slice)) };
        let objects: Vec<Object> = self.objects.iter().map(|s| r.subgroup(s)).collect::<Result<_>>()?;
        let find = |x: &str| g.find(x).ok_or_else(|| Error::UnknownLabel(x.to_string()));
        let mut morphisms = vec![];
        for m in &self.morphisms {
            let mut rho = vec![NONE; g.order()];
            for [x, y] in &m.rho {
                rho[find(x)? as usize] = find(y)?;
            }
            morphisms.push(Morphism { source: m.source, target: m.target, label: m.label.clone(), rho });
        }
        let epsilon: Vec<(usize, usize, u32, usize)> = self.epsilon.iter().map(|(p, q, x, m)| Ok((*p, *q, find(x)?, *m))).collect::<Result<_>>()?;
        let t = TransporterSystem::from_parts(TransporterParts {
            sylow: Sylow::new(dp.clone(), level, (0..g.order() as Handle).collect())?,
            objects,
            morphisms,
            compose: self.compose.iter().map(|&[a, b, c]| (a, b, c)).collect(),
            epsilon,
        })?;
        let mut bullet = BulletData::identity(&t);
        if let Some(b) = &self.bullet {
            for [p, q] in &b.objects {
                let (p, q) = (r.subgroup(p)?, r.subgroup(q)?);
                let (Some(i), Some(j)) = (t.object_index(&p.set), t.object_index(&q.set)) else {
                    return Err(Error::Parse("bullet names a subgroup that is not an object".into()));
                };
                bullet.objects[i] = j;
            }
            for &[a, b] in &b.morphisms {
                if a >= bullet.morphisms.len() || b >= bullet.morphisms.len() {
                    return Err(Error::Parse(format!("bullet morphism {a} or {b} is out of range")));
                }
                bullet.morphisms[a] = b;
            }
        }
        Ok((t, bullet))
    }

    pub fn from_transporter(t: &TransporterSystem) -> Self {
        let sy = t.sylow();
        let g = sy.group();
        let lab = |x: u32| g.label(x).to_string();
        let parts = t.parts();
        TransporterFile {
            group: GroupFile::from_dp(&sy.dp.with_truncation(sy.slice.level.max(1))),
            objects: parts.objects.iter().map(|o| spec_of(g, o)).collect(),
            morphisms: parts
                .morphisms
                .iter()
                .map(|m| MorphismSpec {
                    source: m.source,
                    target: m.target,
                    label: m.label.clone(),
                    rho: parts.objects[m.source].set.iter().map(|x| [lab(x), lab(m.rho[x as usize])]).collect(),
                })
                .collect(),
            compose: parts.compose.iter().map(|&(a, b, c)| [a, b, c]).collect(),
            epsilon: parts.epsilon.iter().map(|&(p, q, x, m)| (p, q, lab(x), m)).collect(),
            bullet: None,
        }
    }
}

/// Orbits, centrics and per-member data of a fusion system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FusionDescription {
    pub prime: u32,
    pub truncation: u32,
    pub orbits: Vec<Vec<String>>,
    pub centrics: Vec<String>,
    pub centric_radicals: Vec<String>,
    pub members: Vec<MemberSummary>,
}

impl FusionDescription {
    pub fn new(f: &FusionSystem) -> Result<Self> {
        let window = f.members().iter().map(|m| m.subgroup.clone()).collect();
        let members = (0..f.members().len()).map(|i| f.summary(i, &window)).collect::<Result<_>>()?;
        Ok(FusionDescription {
            prime: f.dp().prime(),
            truncation: f.slice().level,
            orbits: f.orbit_partition().iter().map(|o| o.iter().map(|&i| f.describe(i)).collect()).collect(),
            centrics: f.centrics().into_iter().map(|i| f.describe(i)).collect(),
            centric_radicals: f.centric_radicals()?.into_iter().map(|i| f.describe(i)).collect(),
            members,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptions serialize")
    }
}

pub fn read_to_string(path: &std::path::Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::FiniteGroup;

    fn s4_file() -> LocalityFile {
        LocalityFile::parse(
            r#"{
                "group": {"prime": 2, "finite_part": {"degree": 4, "generators": [[2,3,4,1],[2,1,3,4]]}},
                "sylow": ["(1,2,3,4)", "(1,3)"],
                "delta": "centric"
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn permutation_groups_load() {
        let l = s4_file().build(LoadOptions::default()).unwrap();
        assert_eq!(l.len(), 24);
        assert_eq!(l.sylow().order(), 8);
        assert_eq!(l.delta().len(), 4);
    }

    #[test]
    fn explicit_form_round_trips() {
        let l = s4_file().build(LoadOptions::default()).unwrap();
        let file = LocalityFile::from_locality(&l);
        let again = LocalityFile::parse(&file.to_json()).unwrap();
        assert_eq!(again, file);
        let l2 = again.build(LoadOptions::default()).unwrap();
        assert_eq!(l2.labels(), l.labels());
        for a in l.handles() {
            for b in l.handles() {
                assert_eq!(l.pair_product(a, b), l2.pair_product(a, b));
            }
        }
    }

    #[test]
    fn tables_and_torus_descriptors() {
        let c2 = FiniteGroup::cyclic(2);
        let mut gf = GroupFile::from_finite(2, &c2);
        gf.torus_rank = 1;
        gf.truncation = 2;
        gf.action.insert(c2.label(1).to_string(), vec![vec![-1]]);
        let file = LocalityFile {
            group: gf,
            sylow: None,
            delta: DeltaSpec::List(vec![SubgroupSpec {
                elements: vec![ElementSpec::Coordinates { torus: vec!["0".into()], finite: c2.label(1).to_string() }],
                full_torus: true,
            }]),
            carrier: None,
            removed_words: vec![],
        };
        let l = file.build(LoadOptions::default()).unwrap();
        assert_eq!(l.len(), 8);
        assert!(l.delta()[0].full_torus);
        assert_eq!(l.delta()[0].set.len(), 8);
        assert!(file.build(LoadOptions { prime: Some(3), truncation: None }).is_err());
        assert_eq!(file.build(LoadOptions { prime: None, truncation: Some(3) }).unwrap().len(), 16);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(LocalityFile::parse("{"), Err(Error::Json(_))));
        let mut f = s4_file();
        f.sylow = Some(vec!["(9,9)".into()]);
        assert!(matches!(f.build(LoadOptions::default()), Err(Error::UnknownLabel(_))));
    }
}
