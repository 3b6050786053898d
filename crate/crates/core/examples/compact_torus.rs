//! A compact example: `S = T ⋊ C2` with inversion, as a locality on the
//! torus and on `S`, followed across truncation levels.

use std::collections::HashSet;

use compact_locality::fusion::{default_family, FusionSystem};
use compact_locality::partial_group::{Locality, Object};
use compact_locality::ptoral::DPGroup;

fn main() -> compact_locality::Result<()> {
    for m in 2..=5 {
        let dp = DPGroup::inversion_extension(2, m)?;
        let slice = dp.slice(m)?;
        let torus = Object { set: dp.slice_set(&dp.torus(), &slice).unwrap(), full_torus: true };
        let whole = Object { set: slice.group.full(), full_torus: true };
        let l = Locality::group_locality(&dp, m, vec![torus, whole])?;
        let compact = l.check_compact(1 << 10);

        let f = FusionSystem::generate(&dp, m, default_family(&dp, &slice), vec![])?;
        let window: HashSet<_> = f.members().iter().map(|x| x.subgroup.clone()).collect();
        let t = f.find(&dp.slice_set(&dp.torus(), &slice).unwrap(), true).unwrap();
        let summary = f.summary(t, &window)?;
        println!(
            "m = {m}: |slice| = {}, {} members, {} orbits, compact {}, torus extension {}",
            slice.elements.len(),
            f.members().len(),
            f.orbit_count(),
            compact.outcome(),
            f.torus_extension_property().outcome()
        );
        println!("        T: Out_F = {}, centric {}", summary.out_order, summary.centric);
    }
    Ok(())
}
