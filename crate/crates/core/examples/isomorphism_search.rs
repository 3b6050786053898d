//! Finding an isomorphism between two presentations of the same locality.

use compact_locality::finite::FiniteGroup;
use compact_locality::partial_group::{group_centrics, Handle, Locality};
use compact_locality::reconstruction::{build_partial_group, locality_isomorphism_search, BulletData};
use compact_locality::transporter::TransporterSystem;

fn main() -> compact_locality::Result<()> {
    let g = FiniteGroup::symmetric(4);
    let s = g.sylow_subgroups(&g.full(), 2).remove(0);
    let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s))?;
    let n = l.len() as Handle;
    let shuffled = l.relabel(&(0..n).map(|h| (h * 7 + 2) % n).collect::<Vec<_>>())?;
    match locality_isomorphism_search(&l, &shuffled, 10_000)? {
        Some(alpha) => println!("relabelled copy: isomorphism found, {} ↦ {}", l.label(5), shuffled.label(alpha[5])),
        None => println!("relabelled copy: no isomorphism"),
    }

    let t = TransporterSystem::from_locality(&l)?;
    let rebuilt = build_partial_group(&t, &BulletData::identity(&t))?;
    let found = locality_isomorphism_search(&l, rebuilt.locality(), 10_000)?;
    println!("rebuilt locality: isomorphism found: {}", found.is_some());

    // too small a budget is reported, not guessed
    match locality_isomorphism_search(&l, &shuffled, 1) {
        Err(e) => println!("budget 1: {e}"),
        Ok(r) => println!("budget 1: finished, found {}", r.is_some()),
    }
    Ok(())
}
