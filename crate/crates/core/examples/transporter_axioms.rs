//! The transporter system of `L_Δ(S4)` and its axioms, plus one broken
//! copy.

use compact_locality::finite::FiniteGroup;
use compact_locality::fusion::FusionSystem;
use compact_locality::partial_group::{group_centrics, Locality};
use compact_locality::transporter::TransporterSystem;

fn main() -> compact_locality::Result<()> {
    let g = FiniteGroup::symmetric(4);
    let s = g.sylow_subgroups(&g.full(), 2).remove(0);
    let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s))?;
    let t = TransporterSystem::from_locality(&l)?;
    println!("{} objects, {} morphisms", t.objects().len(), t.morphisms().len());
    for p in 0..t.objects().len() {
        println!(
            "  {}: |mor(P,P)| = {}, |Ker ρ| = {}, Sylow index {}",
            t.describe_object(p),
            t.mor(p, p).len(),
            t.kernel(p).len(),
            t.sylow_index(p)
        );
    }
    let f = FusionSystem::from_locality(&l)?;
    let mut r = t.check_all();
    r.extend(t.check_linking(&f));
    println!("{r}");

    // a second copy of one morphism makes the ε-action on fibres non-free
    let mut broken = t.clone();
    broken.duplicate_morphism(0);
    println!("{}", broken.check_a1_a2());
    Ok(())
}
