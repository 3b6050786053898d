//! Locality to transporter system and back: rebuild `L` from the classes
//! of isomorphisms and check that `Φ` is an isomorphism fixing `S`.

use compact_locality::finite::FiniteGroup;
use compact_locality::partial_group::{group_centrics, Locality};
use compact_locality::reconstruction::{build_partial_group, check_reconstruction, roundtrip_phi, BulletData};
use compact_locality::transporter::TransporterSystem;

fn main() -> compact_locality::Result<()> {
    for (n, p) in [(4, 2), (3, 3)] {
        let g = FiniteGroup::symmetric(n);
        let s = g.sylow_subgroups(&g.full(), p).remove(0);
        let l = Locality::from_finite_group(&g, p, &s, &group_centrics(&g, &s))?;
        let t = TransporterSystem::from_locality(&l)?;
        let rec = build_partial_group(&t, &BulletData::identity(&t))?;
        println!("S{n} at p = {p}: {} isomorphisms in {} classes", t.isomorphisms().len(), rec.len());
        for (k, c) in rec.classes.iter().enumerate().skip(s.len()).take(3) {
            println!("  class {k}: {} members, maximal {}", c.members.len(), t.morphism(c.maximal).label);
        }
        let mut r = check_reconstruction(&t, &rec, 3)?;
        r.extend(roundtrip_phi(&l, &t, &rec, 3));
        println!("{r}\n");
    }
    Ok(())
}
