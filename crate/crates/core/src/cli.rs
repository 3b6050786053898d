//! The `locality` command line.
//!
//! Exit codes: 0 every check passed, 1 some check failed, 2 the input or
//! configuration could not be read, 3 nothing failed but something was
//! inconclusive.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::finite::is_prime;
use crate::fusion::FusionSystem;
use crate::io::{FusionDescription, LoadOptions, LocalityFile, TransporterFile};
use crate::partial_group::{Locality, Object, DEFAULT_MAX_WORD_LEN};
use crate::reconstruction::{build_partial_group, check_reconstruction, roundtrip_phi, BulletData};
use crate::report::{Report, Status};
use crate::transporter::TransporterSystem;

pub const DEFAULT_BUDGET: usize = 100_000;
/// Word length for the round-trip comparison when none is given.
pub const ROUNDTRIP_WORD_LEN: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "locality", version, about = "Check localities, fusion systems and transporter systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Expected prime; must match the input file.
    #[arg(long, global = true)]
    pub prime: Option<u32>,
    /// Torus truncation level m, overriding the input file.
    #[arg(long, global = true)]
    pub truncation: Option<u32>,
    /// Longest word used by exhaustive checks.
    #[arg(long, global = true)]
    pub max_word_len: Option<usize>,
    /// Step budget for searches.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub structured: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial group axioms, objectivity, proper and compact checks.
    Check { file: PathBuf },
    /// Orbits, centrics and saturation of the fusion system.
    Fusion { file: PathBuf },
    /// Locality to transporter system and back.
    Roundtrip { file: PathBuf },
    /// Rebuild a locality from a transporter file.
    Rebuild {
        file: PathBuf,
        /// Where to write the locality; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub prime: Option<u32>,
    pub truncation: Option<u32>,
    pub max_word_len: Option<usize>,
    pub budget: usize,
    pub structured: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { prime: None, truncation: None, max_word_len: None, budget: DEFAULT_BUDGET, structured: false }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.prime.filter(|&p| !is_prime(p)) {
            return Err(Error::Parse(format!("--prime {p} is not prime")));
        }
        if self.truncation == Some(0) {
            return Err(Error::Parse("--truncation must be at least 1".into()));
        }
        if self.max_word_len == Some(0) {
            return Err(Error::Parse("--max-word-len must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Parse("--budget must be positive".into()));
        }
        Ok(())
    }

    fn load(&self) -> LoadOptions {
        LoadOptions { prime: self.prime, truncation: self.truncation }
    }
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub command: &'static str,
    pub report: Report,
    /// extra structured data, printed before the report
    pub data: Option<Value>,
    pub text: String,
    /// a file body for standard output; the report then goes to stderr
    pub emitted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive => 3,
    }
}

/// Unreadable or ill-formed input is exit code 2; input that parses into
/// a structure violating its own invariants is a check failure.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::UnknownLabel(_) | Error::BadRational(_) | Error::InvalidGroup(_) => 2,
        _ => 1,
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let cfg = RunConfig { prime: cli.prime, truncation: cli.truncation, max_word_len: cli.max_word_len, budget: cli.budget, structured: cli.structured };
    if let Err(e) = cfg.validate() {
        return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") };
    }
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file, &cfg),
        Command::Fusion { file } => cmd_fusion(file, &cfg),
        Command::Roundtrip { file } => cmd_roundtrip(file, &cfg),
        Command::Rebuild { file, output } => cmd_rebuild(file, output.as_deref(), &cfg),
    };
    match result {
        Ok(out) => {
            let code = exit_code(out.report.outcome());
            match &out.emitted {
                Some(body) => Outcome { code, stdout: body.clone(), stderr: render(&out, cfg.structured) },
                None => Outcome { code, stdout: render(&out, cfg.structured), stderr: String::new() },
            }
        }
        Err(e) => Outcome { code: error_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

pub fn render(out: &CommandOutput, structured: bool) -> String {
    if structured {
        let mut v = json!({
            "command": out.command,
            "outcome": out.report.outcome(),
            "report": out.report.entries,
        });
        if let Some(d) = &out.data {
            v["data"] = d.clone();
        }
        format!("{}\n", serde_json::to_string_pretty(&v).expect("reports serialize"))
    } else {
        format!("{}{}\n", out.text, out.report)
    }
}

fn read_locality(path: &Path, cfg: &RunConfig) -> Result<Locality> {
    LocalityFile::parse(&std::fs::read_to_string(path)?)?.build(cfg.load())
}

/// Failures while running checks go into the report, not the exit code 2.
fn record(r: &mut Report, section: &str, axiom: &str, e: Error) {
    r.fail(section, axiom, "could not be evaluated", e.to_string());
}

/// Partial group axioms, objectivity, and the proper and compact checks.
pub fn check_locality(l: &Locality, cfg: &RunConfig) -> Report {
    let len = cfg.max_word_len.unwrap_or(DEFAULT_MAX_WORD_LEN);
    let mut r = l.check_partial_group_axioms(len);
    r.extend(l.check_objectivity(len));
    r.extend(l.check_compact(cfg.budget));
    r
}

pub fn cmd_check(path: &Path, cfg: &RunConfig) -> Result<CommandOutput> {
    let l = read_locality(path, cfg)?;
    let text = format!("locality with {} elements, |S| = {}, {} objects\n", l.len(), l.sylow().order(), l.delta().len());
    Ok(CommandOutput { command: "check", report: check_locality(&l, cfg), data: None, text, emitted: None })
}

/// Saturation, closure and the normalizer checks, plus the torus
/// extension property when `S` has a torus.
pub fn fusion_report(f: &FusionSystem) -> Report {
    let mut r = f.check_closure(&f.isomorphisms());
    r.extend(f.check_saturation_i());
    r.extend(f.check_saturation_ii());
    r.extend(f.check_saturation_iii_chains());
    r.extend(f.check_normalizer_criteria());
    if f.dp().torus_rank() > 0 {
        r.extend(f.torus_extension_property());
    }
    r
}

pub fn cmd_fusion(path: &Path, cfg: &RunConfig) -> Result<CommandOutput> {
    let l = read_locality(path, cfg)?;
    let f = FusionSystem::from_locality(&l)?;
    let desc = FusionDescription::new(&f)?;
    let mut text = format!("{} orbits on {} subgroups\n", desc.orbits.len(), desc.members.len());
    for o in &desc.orbits {
        text.push_str(&format!("  orbit: {}\n", o.join(" ~ ")));
    }
    text.push_str(&format!("centric: {}\n", desc.centrics.join(", ")));
    text.push_str(&format!("centric radical: {}\n", desc.centric_radicals.join(", ")));
    let data = serde_json::to_value(&desc)?;
    Ok(CommandOutput { command: "fusion", report: fusion_report(&f), data: Some(data), text, emitted: None })
}

/// Whether the objects are exactly the centric members of `F`.
pub fn objects_are_centrics(l: &Locality, f: &FusionSystem) -> std::result::Result<(), String> {
    let mut want: Vec<Object> = f.centrics().into_iter().map(|i| Object { set: f.member(i).set.clone(), full_torus: f.member(i).full_torus }).collect();
    let mut have = l.delta().to_vec();
    want.sort();
    have.sort();
    if want == have {
        return Ok(());
    }
    let sy = l.sylow();
    if let Some(o) = have.iter().find(|o| !want.contains(o)) {
        return Err(format!("{} is an object but not centric", sy.describe(&o.set)));
    }
    let o = want.iter().find(|o| !have.contains(o)).expect("the lists differ");
    Err(format!("{} is centric but not an object", sy.describe(&o.set)))
}

/// Transporter axioms, reconstruction invariants, and `Φ` on short words.
pub fn roundtrip(l: &Locality, cfg: &RunConfig) -> Report {
    let section = "roundtrip";
    let mut r = Report::new();
    let f = match FusionSystem::from_locality(l) {
        Ok(f) => f,
        Err(e) => {
            record(&mut r, section, "fusion system", e);
            return r;
        }
    };
    if let Err(w) = objects_are_centrics(l, &f) {
        r.fail(section, "objects are the centrics", "the round trip needs Δ = F^c", w);
        return r;
    }
    r.pass(section, "objects are the centrics", format!("{} objects", l.delta().len()));
    let t = match TransporterSystem::from_locality(l) {
        Ok(t) => t,
        Err(e) => {
            record(&mut r, section, "transporter system", e);
            return r;
        }
    };
    r.extend(t.check_all());
    let rec = match build_partial_group(&t, &BulletData::identity(&t)) {
        Ok(rec) => rec,
        Err(e) => {
            record(&mut r, section, "rebuild", e);
            return r;
        }
    };
    let len = cfg.max_word_len.unwrap_or(ROUNDTRIP_WORD_LEN);
    match check_reconstruction(&t, &rec, len) {
        Ok(c) => r.extend(c),
        Err(e) => record(&mut r, section, "reconstruction", e),
    }
    r.extend(roundtrip_phi(l, &t, &rec, len));
    r
}

pub fn cmd_roundtrip(path: &Path, cfg: &RunConfig) -> Result<CommandOutput> {
    let l = read_locality(path, cfg)?;
    let text = format!("locality with {} elements, {} objects\n", l.len(), l.delta().len());
    Ok(CommandOutput { command: "roundtrip", report: roundtrip(&l, cfg), data: None, text, emitted: None })
}

/// Checks a transporter file and rebuilds the locality. The locality is
/// returned only when every check passes.
pub fn rebuild(file: &TransporterFile, cfg: &RunConfig) -> Result<(Report, Option<LocalityFile>)> {
    let (t, bullet) = file.build(cfg.load())?;
    let mut r = t.check_all();
    r.extend(bullet.validate(&t));
    if r.outcome() == Status::Fail {
        return Ok((r, None));
    }
    let rec = match build_partial_group(&t, &bullet) {
        Ok(rec) => rec,
        Err(e) => {
            record(&mut r, "reconstruction", "rebuild", e);
            return Ok((r, None));
        }
    };
    match check_reconstruction(&t, &rec, cfg.max_word_len.unwrap_or(ROUNDTRIP_WORD_LEN)) {
        Ok(c) => r.extend(c),
        Err(e) => record(&mut r, "reconstruction", "invariants", e),
    }
    let out = (r.outcome() != Status::Fail).then(|| LocalityFile::from_locality(rec.locality()));
    Ok((r, out))
}

pub fn cmd_rebuild(path: &Path, output: Option<&Path>, cfg: &RunConfig) -> Result<CommandOutput> {
    let file = TransporterFile::parse(&std::fs::read_to_string(path)?)?;
    let (report, locality) = rebuild(&file, cfg)?;
    let mut text = String::new();
    let mut emitted = None;
    if let Some(l) = locality {
        let json = format!("{}\n", l.to_json());
        match output {
            Some(p) => {
                std::fs::write(p, json)?;
                text = format!("wrote {}\n", p.display());
            }
            None => emitted = Some(json),
        }
    }
    Ok(CommandOutput { command: "rebuild", report, data: None, text, emitted })
}
