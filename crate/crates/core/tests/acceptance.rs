//! One line per acceptance criterion. Each criterion returns the reason it
//! failed; the target exits nonzero if any did.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use compact_locality::cli::{self, RunConfig};
use compact_locality::finite::{ElemSet, FiniteGroup};
use compact_locality::fusion::{default_family, FusionSystem, Map};
use compact_locality::io::{read_to_string, LoadOptions, LocalityFile};
use compact_locality::partial_group::{Locality, NONE};
use compact_locality::ptoral::{verify_structure, DPGroup};
use compact_locality::report::Status;
use compact_locality::transporter::TransporterSystem;

type Outcome = Result<String, String>;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn load(name: &str) -> Result<Locality, String> {
    let text = read_to_string(&data(name)).map_err(|e| e.to_string())?;
    let file = LocalityFile::parse(&text).map_err(|e| e.to_string())?;
    file.build(LoadOptions::default()).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn finite_round_trip() -> Outcome {
    let limit = Duration::from_secs(10);
    let mut notes = vec![];
    for name in ["s4.json", "s3_p3.json"] {
        let start = Instant::now();
        let l = load(name)?;
        let r = cli::roundtrip(&l, &RunConfig::default());
        let took = start.elapsed();
        ensure(r.outcome() == Status::Pass, || format!("{name}:\n{r}"))?;
        for axiom in ["(A1)", "(A2)", "(B)", "(C)", "(I)", "(II)", "chain independence", "Φ isomorphism", "Φ identity on S"] {
            ensure(r.status_of(axiom) == Some(Status::Pass), || format!("{name}: {axiom} not checked"))?;
        }
        ensure(took < limit, || format!("{name} took {took:?}"))?;
        let code = cli::run(["locality", "roundtrip", data(name).to_str().unwrap()]).code;
        ensure(code == 0, || format!("{name}: roundtrip exit code {code}"))?;
        notes.push(format!("{name} {:.2}s", took.as_secs_f64()));
    }
    Ok(notes.join(", "))
}

/// `x ↦ g⁻¹xg` restricted to `p`, as sorted pairs.
fn conj_pairs(g: &FiniteGroup, p: &BTreeSet<u32>, x: u32) -> Vec<(u32, u32)> {
    let xi = g.inv(x);
    p.iter().map(|&a| (a, g.mul(g.mul(xi, a), x))).collect()
}

fn fusion_oracle() -> Outcome {
    let l = load("s4.json")?;
    let f = FusionSystem::from_locality(&l).map_err(|e| e.to_string())?;
    let g = FiniteGroup::symmetric(4);
    let sy = l.sylow();
    // slice index ↔ element of S4, through labels
    let to_g: Vec<u32> = (0..sy.order() as u32)
        .map(|i| g.find(l.label(sy.embed[i as usize])).expect("S4 label"))
        .collect();
    let to_s: BTreeMap<u32, u32> = to_g.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
    let s: Vec<u32> = to_g.clone();

    // every subset of S closed under multiplication
    let mut subs: Vec<BTreeSet<u32>> = vec![];
    for mask in 0u32..(1 << s.len()) {
        let set: BTreeSet<u32> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
        if set.contains(&g.identity()) && set.iter().all(|&a| set.iter().all(|&b| set.contains(&g.mul(a, b)))) {
            subs.push(set);
        }
    }
    let conj_set = |p: &BTreeSet<u32>, x: u32| -> BTreeSet<u32> { conj_pairs(&g, p, x).into_iter().map(|(_, y)| y).collect() };

    let member_of = |p: &BTreeSet<u32>| -> Option<usize> {
        let inside: Option<Vec<u32>> = p.iter().map(|x| to_s.get(x).copied()).collect();
        f.find(&ElemSet::from_iter(sy.order(), inside?), false)
    };
    ensure(subs.len() == f.members().len(), || format!("{} subgroups vs {} members", subs.len(), f.members().len()))?;
    let idx: Vec<usize> = subs.iter().map(|p| member_of(p).ok_or_else(|| format!("{p:?} is not a member"))).collect::<Result<_, _>>()?;

    // orbit partition
    let mut oracle_orbits: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for p in &subs {
        let orbit: BTreeSet<usize> = g.elements().filter_map(|x| member_of(&conj_set(p, x))).collect();
        oracle_orbits.insert(orbit);
    }
    let ours: BTreeSet<BTreeSet<usize>> = f.orbit_partition().into_iter().map(|o| o.into_iter().collect()).collect();
    ensure(ours == oracle_orbits, || format!("orbits {ours:?} vs {oracle_orbits:?}"))?;

    // Iso sets, Aut and Out tables
    let as_pairs = |m: &Map| -> Vec<(u32, u32)> {
        let mut v: Vec<(u32, u32)> = (0..m.img.len() as u32)
            .filter(|&x| m.img[x as usize] != NONE)
            .map(|x| (to_g[x as usize], to_g[m.img[x as usize] as usize]))
            .collect();
        v.sort();
        v
    };
    for (a, p) in subs.iter().enumerate() {
        for (b, q) in subs.iter().enumerate() {
            let oracle: BTreeSet<Vec<(u32, u32)>> =
                g.elements().filter(|&x| &conj_set(p, x) == q).map(|x| conj_pairs(&g, p, x)).collect();
            let got: BTreeSet<Vec<(u32, u32)>> = f.iso(idx[a], idx[b]).iter().map(as_pairs).collect();
            ensure(oracle == got, || format!("Iso({}, {}) differs", f.describe(idx[a]), f.describe(idx[b])))?;
        }
        let aut: BTreeSet<_> = g.elements().filter(|&x| &conj_set(p, x) == p).map(|x| conj_pairs(&g, p, x)).collect();
        let aut_s: BTreeSet<_> = s.iter().filter(|&&x| &conj_set(p, x) == p).map(|&x| conj_pairs(&g, p, x)).collect();
        let inn: BTreeSet<_> = p.iter().map(|&x| conj_pairs(&g, p, x)).collect();
        let out = f.out_group(idx[a]).map_err(|e| e.to_string())?;
        let row = (aut.len(), aut.len() / inn.len(), aut_s.len() / inn.len());
        let got = (out.aut.len(), out.out_order(), out.out_s_order());
        ensure(row == got, || format!("{}: oracle {row:?}, pipeline {got:?}", f.describe(idx[a])))?;
    }
    Ok(format!("{} subgroups, {} orbits", subs.len(), ours.len()))
}

fn saturation_suite() -> Outcome {
    for name in ["s4.json", "s3_p3.json", "a4.json"] {
        let f = FusionSystem::from_locality(&load(name)?).map_err(|e| e.to_string())?;
        let mut r = f.check_saturation_i();
        r.extend(f.check_saturation_ii());
        ensure(r.outcome() == Status::Pass, || format!("{name}:\n{r}"))?;
    }

    let l = load("s4.json")?;
    let f = FusionSystem::from_locality(&l).map_err(|e| e.to_string())?;
    let n = f.slice().group.order() as u32;
    let fr = &f;
    let inner: HashSet<Map> = (0..f.members().len()).flat_map(|i| (0..n).filter_map(move |x| fr.conjugation(i, x))).collect();
    let stored = f.isomorphisms();
    ensure(f.check_closure(&stored).outcome() == Status::Pass, || "F fails its own closure check".into())?;
    let outer: Vec<&Map> = stored.iter().filter(|m| !inner.contains(m)).collect();
    ensure(!outer.is_empty(), || "F_{D8}(S4) has no non-inner isomorphisms".into())?;
    // deleting one stored non-inner isomorphism
    for m in &outer {
        let cut: Vec<Map> = stored.iter().filter(|x| x != m).cloned().collect();
        ensure(f.check_closure(&cut).outcome() == Status::Fail, || format!("deleting {m:?} went unnoticed"))?;
    }
    // dropping one generator from an irredundant generating set
    let mut gens: Vec<Vec<u32>> = outer.iter().filter(|m| m.source == m.target).map(|m| m.img.clone()).collect();
    let family = || default_family(f.dp(), f.slice());
    let regen = |g: Vec<Vec<u32>>| FusionSystem::generate(f.dp(), f.slice().level, family(), g).map_err(|e| e.to_string());
    let mut k = 0;
    while k < gens.len() {
        let mut rest = gens.clone();
        let dropped = rest.remove(k);
        let dropped_src = (0..f.members().len()).find(|&i| outer.iter().any(|m| m.source == i && m.img == dropped)).unwrap();
        let fr = regen(rest.clone())?;
        let still = fr.is_morphism(&Map { source: dropped_src, target: dropped_src, img: dropped });
        if still {
            gens = rest;
        } else {
            k += 1;
        }
    }
    let full = regen(gens.clone())?;
    ensure(stored.iter().all(|m| full.is_morphism(m)), || "the irredundant set does not generate F".into())?;
    for k in 0..gens.len() {
        let mut rest = gens.clone();
        rest.remove(k);
        let fr = regen(rest)?;
        let mut r = fr.check_saturation_i();
        r.extend(fr.check_saturation_ii());
        let lost = stored.iter().any(|m| !fr.is_morphism(m));
        ensure(r.outcome() == Status::Fail || lost, || format!("dropping generator {k} changed nothing"))?;
    }

    // (III) on stabilizing chains
    let mut chains = 0;
    for name in ["s4.json", "s3_p3.json", "a4.json", "d8.json", "q8.json"] {
        let f = FusionSystem::from_locality(&load(name)?).map_err(|e| e.to_string())?;
        let r = f.check_saturation_iii_chains();
        ensure(r.outcome() == Status::Pass, || format!("{name}: (III)\n{r}"))?;
        chains += 1;
    }
    for m in 2..=4 {
        let dp = DPGroup::inversion_extension(2, m).map_err(|e| e.to_string())?;
        let slice = dp.slice(m).map_err(|e| e.to_string())?;
        let f = FusionSystem::generate(&dp, m, default_family(&dp, &slice), vec![]).map_err(|e| e.to_string())?;
        let r = f.check_saturation_iii_chains();
        ensure(r.outcome() != Status::Fail, || format!("T⋊C2 at m = {m}: (III)\n{r}"))?;
        chains += 1;
    }
    Ok(format!("{} stored and {} generator mutations caught, (III) on {chains} systems", outer.len(), gens.len()))
}

fn ptoral_arithmetic() -> Outcome {
    let start = Instant::now();
    let groups = [
        ("D8", DPGroup::finite_only(2, FiniteGroup::dihedral(4)).map_err(|e| e.to_string())?),
        ("Q8", DPGroup::finite_only(2, FiniteGroup::quaternion()).map_err(|e| e.to_string())?),
        ("T⋊C2", DPGroup::inversion_extension(2, 4).map_err(|e| e.to_string())?),
    ];
    let mut subgroups = 0;
    for (name, g) in &groups {
        for m in 1..=4 {
            let v = verify_structure(g, m).map_err(|e| e.to_string())?;
            ensure(v.is_empty(), || format!("{name} at m = {m}: {v:?}"))?;
            subgroups += g.all_subgroups(m).map_err(|e| e.to_string())?.len();
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("{subgroups} subgroups, {:.2}s", took.as_secs_f64()))
}

fn linking() -> Outcome {
    let l = load("s4.json")?;
    let f = FusionSystem::from_locality(&l).map_err(|e| e.to_string())?;
    let t = TransporterSystem::from_locality(&l).map_err(|e| e.to_string())?;
    let g = l.sylow().group();
    for q in 0..t.objects().len() {
        let z = g.center(&t.objects()[q].set);
        let eps: BTreeSet<usize> = z.iter().filter_map(|x| t.epsilon(q, q, x)).collect();
        let ker: BTreeSet<usize> = t.kernel(q).into_iter().collect();
        ensure(eps.len() == z.len() && eps == ker, || format!("Ker(ρ) ≠ Z(P) at {}", t.describe_object(q)))?;
    }
    let r = t.check_linking(&f);
    ensure(r.outcome() == Status::Pass, || format!("{r}"))?;
    ensure(r.status_of("kernel is the centre") == Some(Status::Pass), || "kernel check skipped".into())?;

    let short = TransporterSystem::from_locality(&load("s4_missing_radical.json")?).map_err(|e| e.to_string())?;
    let r = short.check_linking(&f);
    ensure(r.status_of("enough objects") == Some(Status::Fail), || format!("missing centric radical not detected:\n{r}"))?;
    // a centric with O_2(Out_F(P)) ≠ 1 may be left out
    let spare = TransporterSystem::from_locality(&load("s4_missing_centric.json")?).map_err(|e| e.to_string())?;
    let r = spare.check_linking(&f);
    ensure(r.status_of("enough objects") == Some(Status::Pass), || format!("non-radical centric flagged:\n{r}"))?;
    Ok(format!("{} objects, missing centric detected", t.objects().len()))
}

fn truncation_stability() -> Outcome {
    let mut systems = vec![];
    for m in 2..=5 {
        let dp = DPGroup::inversion_extension(2, m).map_err(|e| e.to_string())?;
        let slice = dp.slice(m).map_err(|e| e.to_string())?;
        let f = FusionSystem::generate(&dp, m, default_family(&dp, &slice), vec![]).map_err(|e| e.to_string())?;
        systems.push((m, dp, f));
    }
    for pair in systems.windows(2) {
        let ((m, dp, f), (_, dq, g)) = (&pair[0], &pair[1]);
        ensure(f.torus_extension_property().outcome() == Status::Pass, || format!("torus extension at m = {m}"))?;
        let subs = dp.all_subgroups(*m).map_err(|e| e.to_string())?;
        for s in &subs {
            ensure(dp.order_pair(s) == dq.order_pair(s), || format!("order pair moves at m = {m}"))?;
        }
        // below the top level every conjugator is visible
        let below = |i: usize| f.member(i).subgroup.level().map_or(true, |k| k < *m);
        let window: HashSet<_> = (0..f.members().len()).filter(|&i| below(i)).map(|i| f.member(i).subgroup.clone()).collect();
        for i in (0..f.members().len()).filter(|&i| below(i)) {
            let j = g.find_subgroup(&f.member(i).subgroup).ok_or_else(|| format!("{} lost at m + 1", f.describe(i)))?;
            let (a, b) = (f.summary(i, &window).map_err(|e| e.to_string())?, g.summary(j, &window).map_err(|e| e.to_string())?);
            ensure(a == b, || format!("m = {m}: {a:?} vs {b:?}"))?;
        }
    }
    Ok("m = 2, 3, 4 agree with m + 1".into())
}

/// Every command over the corpus, each in a fresh process.
fn suite_output() -> String {
    let run = |args: &[&str]| {
        let o = std::process::Command::new(env!("CARGO_BIN_EXE_locality")).args(args).output().expect("binary runs");
        format!("{}{}exit {:?}\n", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr), o.status.code())
    };
    let mut out = String::new();
    for name in ["s4.json", "s3_p3.json", "a4.json", "d8.json", "q8.json", "inversion_torus.json", "s4_missing_centric.json", "s4_missing_radical.json", "s4_removed_word.json"] {
        let path = data(name);
        for cmd in ["check", "fusion", "roundtrip"] {
            out.push_str(&run(&["--structured", cmd, path.to_str().unwrap()]));
        }
    }
    for name in ["s4_transporter.json", "s4_transporter_broken.json"] {
        out.push_str(&run(&["--structured", "rebuild", data(name).to_str().unwrap()]));
    }
    out
}

fn determinism() -> Outcome {
    let (a, b) = (suite_output(), suite_output());
    ensure(a == b, || {
        let line = a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or(0);
        format!("reports differ at line {line}")
    })?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("finite round trip", finite_round_trip),
        ("fusion oracle", fusion_oracle),
        ("saturation suite", saturation_suite),
        ("p-toral arithmetic", ptoral_arithmetic),
        ("linking", linking),
        ("compact truncation stability", truncation_stability),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(note) => println!("PASS {}. {name}: {note}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
