//! The locality `L_Δ(S4)` at `p = 2` with `Δ` the centric subgroups of a
//! Sylow 2-subgroup `S ≅ D8`.

use compact_locality::finite::FiniteGroup;
use compact_locality::partial_group::{group_centrics, Locality};

fn main() -> compact_locality::Result<()> {
    let g = FiniteGroup::symmetric(4);
    let s = g.sylow_subgroups(&g.full(), 2).remove(0);
    let delta = group_centrics(&g, &s);
    let l = Locality::from_finite_group(&g, 2, &s, &delta)?;
    println!("|L| = {}, |S| = {}, objects:", l.len(), l.sylow().order());
    for o in l.delta() {
        println!("  {}", l.sylow().describe(&o.set));
    }

    let a = l.find("(1,2,3)").expect("3-cycle");
    let b = l.find("(1,2)(3,4)").expect("involution");
    println!("S_g for g = {}: {}", l.label(a), l.sylow().describe(&l.s_g(a)));
    let w = [a, b, l.inv(a)];
    println!("{} in D: {}, product {}", l.describe_word(&w), l.in_domain(&w), l.label(l.pi(&w)?));

    let mut report = l.check_partial_group_axioms(3);
    report.extend(l.check_objectivity(3));
    report.extend(l.check_proper());
    println!("{report}");

    // dropping one word from D breaks objectivity
    let mut broken = l.clone();
    broken.remove_word(&[a, b]);
    println!("{}", broken.check_objectivity(2));
    Ok(())
}
