use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::verify::{
    lemma1_suite, theorem1_suite, theorem2_suite, theorem3_suite, theorem4_suite, SuiteName,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: SuiteName,
    pub instances: usize,
    pub holds: usize,
    pub failures: usize,
}

/// Runs the named suites, streaming one JSON line per instance followed by
/// one summary line per suite. The caller decides what a failure means;
/// `all_hold` is the conjunction.
pub fn run_suites(
    suite: SuiteName,
    instances: usize,
    seed: u64,
    out: &mut impl Write,
) -> Result<Vec<SuiteSummary>> {
    let mut summaries = Vec::new();
    for name in suite.expand() {
        let rows: Vec<(bool, Value)> = match name {
            SuiteName::Thm1 => tag(theorem1_suite(instances, seed)?, |r| r.bound.holds)?,
            SuiteName::Lemma1 => tag(lemma1_suite(instances, seed)?, |r| r.holds)?,
            SuiteName::Thm2 => tag(theorem2_suite(instances, seed)?, |r| r.bound.holds)?,
            SuiteName::Thm3 => tag(theorem3_suite(instances, seed)?, |r| r.holds)?,
            SuiteName::Thm4 => tag(theorem4_suite(instances, seed)?, |r| r.bound.holds)?,
            SuiteName::All => unreachable!("expanded above"),
        };
        let holds = rows.iter().filter(|(h, _)| *h).count();
        for (i, (_, report)) in rows.iter().enumerate() {
            let line = json!({ "suite": name, "index": i, "report": report });
            writeln!(out, "{line}").map_err(|e| crate::Error::io("<report stream>", e))?;
        }
        let summary = SuiteSummary {
            suite: name,
            instances: rows.len(),
            holds,
            failures: rows.len() - holds,
        };
        let line = json!({ "summary": summary });
        writeln!(out, "{line}").map_err(|e| crate::Error::io("<report stream>", e))?;
        summaries.push(summary);
    }
    Ok(summaries)
}

fn tag<T: Serialize>(reports: Vec<T>, holds: impl Fn(&T) -> bool) -> Result<Vec<(bool, Value)>> {
    reports
        .into_iter()
        .map(|r| Ok((holds(&r), serde_json::to_value(&r)?)))
        .collect()
}

pub fn all_hold(summaries: &[SuiteSummary]) -> bool {
    summaries.iter().all(|s| s.failures == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_has_instance_and_summary_lines() {
        let mut buf = Vec::new();
        let s = run_suites(SuiteName::Thm4, 3, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let first: Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["report"]["lhs"], 0.0);
        assert_eq!(first["report"]["rhs"], 0.0);
        assert!(lines[3].starts_with("{\"summary\""));
        assert!(all_hold(&s));
    }

    #[test]
    fn all_runs_every_suite() {
        let mut buf = Vec::new();
        let s = run_suites(SuiteName::All, 2, 1, &mut buf).unwrap();
        assert_eq!(s.len(), 5);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("{\"summary\"")).count(), 5);
    }
}
