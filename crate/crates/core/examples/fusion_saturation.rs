//! The fusion system of `S4` on `D8`: orbits, automorphism groups,
//! saturation, and what a foreign generator does to it.

use compact_locality::finite::FiniteGroup;
use compact_locality::fusion::{default_family, FusionSystem};
use compact_locality::partial_group::{group_centrics, Locality};

fn main() -> compact_locality::Result<()> {
    let g = FiniteGroup::symmetric(4);
    let s = g.sylow_subgroups(&g.full(), 2).remove(0);
    let l = Locality::from_finite_group(&g, 2, &s, &group_centrics(&g, &s))?;
    let f = FusionSystem::from_locality(&l)?;

    println!("{} members in {} orbits", f.members().len(), f.orbit_count());
    println!("{:<48} {:>6} {:>6} {:>8}", "P", "Aut_F", "Out_F", "Out_S");
    for i in 0..f.members().len() {
        let out = f.out_group(i)?;
        println!("{:<48} {:>6} {:>6} {:>8}", f.describe(i), out.aut.len(), out.out_order(), out.out_s_order());
    }
    let names = |v: Vec<usize>| v.into_iter().map(|i| f.describe(i)).collect::<Vec<_>>().join("  ");
    println!("centric: {}", names(f.centrics()));
    println!("centric radical: {}", names(f.centric_radicals()?));

    let mut r = f.check_saturation_i();
    r.extend(f.check_saturation_ii());
    r.extend(f.check_saturation_iii_chains());
    println!("{r}");

    // an outer automorphism of D8 swapping the two Klein subgroups
    let sy = l.sylow();
    let d8 = sy.group();
    let (rot, refl, swap) = (d8.find("(1,2,3,4)").unwrap(), d8.find("(1,3)").unwrap(), d8.find("(1,2)(3,4)").unwrap());
    let auto = d8.extend_hom(&[rot, refl], &[rot, swap], d8).expect("automorphism");
    let gen: Vec<u32> = d8.elements().map(|x| auto[&x]).collect();
    let bad = FusionSystem::generate(&sy.dp, 0, default_family(&sy.dp, &sy.slice), vec![gen])?;
    println!("{}", bad.check_saturation_i());
    Ok(())
}
