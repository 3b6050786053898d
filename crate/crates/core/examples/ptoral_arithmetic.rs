//! Order pairs, normalizers and normalizer towers in `T ⋊ C2`, where the
//! generator of `C2` inverts the 2-torus.

use compact_locality::ptoral::{verify_structure, DPGroup};

fn main() -> compact_locality::Result<()> {
    let g = DPGroup::inversion_extension(2, 3)?;
    let s = g.full_group();
    let flip = g.element(&["0"], "flip")?;
    let quarter = g.element(&["1/4"], "id")?;
    println!("{} * {} = {}", g.label(&flip), g.label(&quarter), g.label(&g.multiply(&flip, &quarter)?));

    let c2 = g.generated_subgroup(&[flip.clone()], false, 64)?;
    let v = g.generated_subgroup(&[flip, g.element(&["1/2"], "id")?], false, 64)?;
    for (name, p) in [("T", g.torus()), ("<flip>", c2.clone()), ("V", v.clone()), ("S", s.clone())] {
        println!("{name:>7}: order pair {}, rank {}", g.order_pair(&p), g.rank(&p));
    }
    println!("N_S(V) = {}", g.order_pair(&g.normalizer(&v, &s)?));
    println!("C_S(V) = {}", g.order_pair(&g.centralizer(&v, &s)?));

    // the tower from <flip> only stops because the truncation runs out
    let tower = g.normalizer_tower(&c2, &s)?;
    let steps: Vec<String> = tower.members.iter().map(|m| g.order_pair(m).to_string()).collect();
    println!("tower from <flip>: {} (cut by truncation: {})", steps.join(" < "), tower.cut_by_truncation);

    for m in 1..=4 {
        let violations = verify_structure(&g.with_truncation(m), m)?;
        println!("m = {m}: {} violations", violations.len());
    }
    Ok(())
}
