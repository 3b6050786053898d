//! The orbit category of the centric subgroups of `D8` in `S4`, with its
//! centre functor and the projection from the transporter system.

use compact_locality::finite::FiniteGroup;
use compact_locality::fusion::FusionSystem;
use compact_locality::partial_group::{group_centrics, Locality};
use compact_locality::reconstruction::OrbitCategory;
use compact_locality::transporter::TransporterSystem;

fn main() -> compact_locality::Result<()> {
    let g = FiniteGroup::symmetric(4);
    let s = g.sylow_subgroups(&g.full(), 2).remove(0);
    let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s))?;
    let f = FusionSystem::from_locality(&l)?;
    let objects = f.centrics();
    let o = OrbitCategory::new(&f, &objects);
    for (a, &i) in objects.iter().enumerate() {
        let row: Vec<String> = (0..objects.len()).map(|b| o.mor(a, b).len().to_string()).collect();
        println!("{:<48} |Z| = {}  mor: [{}]", f.describe(i), o.centres[a].len(), row.join(" "));
    }
    let t = TransporterSystem::from_locality(&l)?;
    println!("{}", o.check(&f, Some(&t)));
    Ok(())
}
