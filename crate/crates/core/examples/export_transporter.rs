//! Writes the transporter system of a locality file as a transporter file.
//!
//! cargo run --example export_transporter -- data/s4.json > data/s4_transporter.json

use compact_locality::io::{LoadOptions, LocalityFile, TransporterFile};
use compact_locality::transporter::TransporterSystem;

fn main() -> compact_locality::Result<()> {
    let path = std::env::args().nth(1).expect("usage: export_transporter <locality file>");
    let l = LocalityFile::parse(&std::fs::read_to_string(path)?)?.build(LoadOptions::default())?;
    let t = TransporterSystem::from_locality(&l)?;
    println!("{}", TransporterFile::from_transporter(&t).to_json());
    Ok(())
}
