//! Check reports: one entry per axiom with a status and an optional witness.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub section: String,
    pub axiom: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, section: &str, axiom: &str, status: Status, detail: impl Into<String>, witness: Option<String>) {
        self.entries.push(Entry {
            section: section.to_string(),
            axiom: axiom.to_string(),
            status,
            detail: detail.into(),
            witness,
        });
    }

    pub fn pass(&mut self, section: &str, axiom: &str, detail: impl Into<String>) {
        self.push(section, axiom, Status::Pass, detail, None);
    }

    pub fn fail(&mut self, section: &str, axiom: &str, detail: impl Into<String>, witness: impl Into<String>) {
        self.push(section, axiom, Status::Fail, detail, Some(witness.into()));
    }

    pub fn inconclusive(&mut self, section: &str, axiom: &str, detail: impl Into<String>) {
        self.push(section, axiom, Status::Inconclusive, detail, None);
    }

    /// Pass when `witness` is `None`, fail with it otherwise.
    pub fn verdict(&mut self, section: &str, axiom: &str, detail: impl Into<String>, witness: Option<String>) {
        let status = if witness.is_some() { Status::Fail } else { Status::Pass };
        self.push(section, axiom, status, detail, witness);
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    /// Worst status across all entries.
    pub fn outcome(&self) -> Status {
        self.entries.iter().map(|e| e.status).max().unwrap_or(Status::Pass)
    }

    pub fn passed(&self) -> bool {
        self.outcome() == Status::Pass
    }

    pub fn status_of(&self, axiom: &str) -> Option<Status> {
        self.entries.iter().filter(|e| e.axiom == axiom).map(|e| e.status).max()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "[{}] {} / {}: {}", e.status, e.section, e.axiom, e.detail)?;
            if let Some(w) = &e.witness {
                writeln!(f, "    witness: {w}")?;
            }
        }
        write!(f, "outcome: {}", self.outcome())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_is_worst_status() {
        let mut r = Report::new();
        assert_eq!(r.outcome(), Status::Pass);
        r.pass("a", "x", "ok");
        r.inconclusive("a", "y", "truncated");
        assert_eq!(r.outcome(), Status::Inconclusive);
        r.fail("a", "z", "bad", "w");
        assert_eq!(r.outcome(), Status::Fail);
        assert_eq!(r.status_of("y"), Some(Status::Inconclusive));
        assert!(r.to_string().contains("witness: w"));
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
