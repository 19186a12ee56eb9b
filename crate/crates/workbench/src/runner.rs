//! One tool run on one source file, shared by the CLI and the HTTP service.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use rpl_core::lang::{preprocess, preprocess_symbolic, FieldError, PreprocessError, Profile, Program, SourceSpan, Tool};
use rpl_core::parser::{self, ParseDiagnostic};
use rpl_core::peak::{self, PeakError, PeakReport};
use rpl_core::sim::{self, AggregateResult, SimError};
use rpl_core::time::{self, Evaluation, TimeError, TimeReport};

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub source: String,
    pub file_name: String,
    /// `profile.tool` selects the tool.
    pub profile: Profile,
    /// State budget for the exhaustive peak search.
    pub budget: u64,
}

impl RunRequest {
    pub fn new(source: impl Into<String>, file_name: impl Into<String>, profile: Profile) -> Self {
        Self {
            source: source.into(),
            file_name: file_name.into(),
            profile,
            budget: peak::DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{}", render_diagnostics(.0))]
    Diagnostics(Vec<ParseDiagnostic>),
    #[error("invalid profile: {}", .0.iter().map(|e| format!("{} {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    InvalidProfile(Vec<FieldError>),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Peak(#[from] PeakError),
    #[error(transparent)]
    Time(#[from] TimeError),
}

pub fn render_diagnostics(diags: &[ParseDiagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

fn placeholder_diagnostic(e: PreprocessError) -> Vec<ParseDiagnostic> {
    let PreprocessError::UnknownPlaceholder { ref name, line, column } = e;
    vec![ParseDiagnostic::error(SourceSpan::new(line, column, name.len() as u32 + 1), e.to_string())]
}

/// Substitutes placeholders from `profile` and parses.
pub fn load(source: &str, profile: &Profile) -> Result<Program, Vec<ParseDiagnostic>> {
    let text = preprocess(source, profile).map_err(placeholder_diagnostic)?;
    parser::parse(&text)
}

/// Like [`load`] but keeps `EFFICIENCY` and `CONC_CASES` symbolic.
pub fn load_symbolic(source: &str, profile: &Profile) -> Result<Program, Vec<ParseDiagnostic>> {
    let text = preprocess_symbolic(source, profile).map_err(placeholder_diagnostic)?;
    parser::parse(&text)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PeakOutput {
    pub exec_id: String,
    pub file: String,
    pub profile: Profile,
    #[serde(flatten)]
    pub report: PeakReport,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TimeOutput {
    pub exec_id: String,
    pub file: String,
    pub profile: Profile,
    #[serde(flatten)]
    pub report: TimeReport,
    /// Both bounds evaluated at the profile's own parameters.
    pub at_profile: Evaluation,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RunOutput {
    Simulate(AggregateResult),
    Peak(PeakOutput),
    Time(TimeOutput),
}

impl RunOutput {
    pub fn exec_id(&self) -> &str {
        match self {
            RunOutput::Simulate(r) => &r.exec_id,
            RunOutput::Peak(r) => &r.exec_id,
            RunOutput::Time(r) => &r.exec_id,
        }
    }

    fn set_exec_id(&mut self, id: String) {
        match self {
            RunOutput::Simulate(r) => r.exec_id = id,
            RunOutput::Peak(r) => r.exec_id = id,
            RunOutput::Time(r) => r.exec_id = id,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run output serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("run output serializes")
    }

    /// Human readable report for the terminal.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            RunOutput::Simulate(r) => {
                let _ = writeln!(s, "execution {}  {}  sims={} efficiency={} availability={} cases={} seed={}", r.exec_id, r.file, r.sims, r.efficiency, r.availability, r.cases, r.seed);
                let _ = writeln!(s, "{:<10} {:>14} {:>14} {:>14}", "", "min", "max", "avg");
                let t = serde_json::to_value(&r.time).unwrap_or_default();
                let c = serde_json::to_value(&r.cost).unwrap_or_default();
                for (name, v) in [("time", t), ("cost", c)] {
                    let _ = writeln!(s, "{:<10} {:>14} {:>14} {:>14}", name, v["min"].to_string(), v["max"].to_string(), v["avg"].as_str().unwrap_or(""));
                }
                let _ = writeln!(s, "deadline violations: {}", r.violations.total);
                for site in &r.violations.per_site {
                    let _ = writeln!(s, "  line {:>4}  {:<20} {}", site.line, site.method, site.count);
                }
                for (cat, n) in &r.peaks {
                    let _ = writeln!(s, "peak {cat}: {n}");
                }
            }
            RunOutput::Peak(r) => {
                let _ = writeln!(s, "execution {}  {}  cases={} availability={}", r.exec_id, r.file, r.profile.conc_cases, r.profile.availability_pct);
                let _ = writeln!(s, "{:<12} {:>9} {:>6} {:>7}", "category", "observed", "exact", "static");
                for (cat, p) in &r.report.per_category {
                    let _ = writeln!(s, "{:<12} {:>9} {:>6} {:>7}", cat, p.observed, p.exact, p.static_bound);
                }
                let _ = write!(s, "{} schedules explored", r.report.explored_schedules);
                if r.report.truncated {
                    s.push_str(" (budget exhausted, exact is a lower bound)");
                }
                s.push('\n');
            }
            RunOutput::Time(r) => {
                let _ = writeln!(s, "execution {}  {}", r.exec_id, r.file);
                let _ = writeln!(s, "sequential:    {}", r.report.sequential);
                let _ = writeln!(s, "critical path: {}", r.report.critical_path);
                let _ = writeln!(
                    s,
                    "at EFFICIENCY={} CONC_CASES={}: sequential {} critical path {}",
                    r.at_profile.efficiency, r.at_profile.cases, r.at_profile.sequential, r.at_profile.critical_path
                );
            }
        }
        s
    }
}

/// Completed run. The identifier is salted so repeated runs get distinct ids.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output: RunOutput,
    pub profile: Profile,
    program: Program,
}

impl RunOutcome {
    pub fn assign_id(&mut self, salt: u64) -> &str {
        self.output.set_exec_id(sim::exec_id(&self.program, &self.profile, salt));
        self.output.exec_id()
    }
}

pub fn execute(req: &RunRequest) -> Result<RunOutcome, RunError> {
    let profile = req.profile;
    profile.validate().map_err(RunError::InvalidProfile)?;
    let program = load(&req.source, &profile).map_err(RunError::Diagnostics)?;
    let exec_id = sim::exec_id(&program, &profile, 0);
    let output = match profile.tool {
        Tool::Simulate => RunOutput::Simulate(sim::simulate_many(&program, &profile, &req.file_name)?),
        Tool::Peak => RunOutput::Peak(PeakOutput {
            exec_id,
            file: req.file_name.clone(),
            profile,
            report: peak::analyze(&program, &profile, req.budget)?,
        }),
        Tool::Time => {
            let symbolic = load_symbolic(&req.source, &profile).map_err(RunError::Diagnostics)?;
            let report = time::solve(&symbolic)?;
            RunOutput::Time(TimeOutput {
                exec_id,
                file: req.file_name.clone(),
                profile,
                at_profile: report.at(profile.efficiency_pct, profile.conc_cases),
                report,
            })
        }
    };
    Ok(RunOutcome { output, profile, program })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rpl_core::corpus;

    fn profile(tool: Tool) -> Profile {
        Profile {
            tool,
            num_sims: 3,
            ..Profile::default()
        }
    }

    #[test]
    fn salt_changes_the_id() {
        let mut out = execute(&RunRequest::new(corpus::SUPPLY, "supply.rpl", profile(Tool::Simulate))).unwrap();
        let first = out.output.exec_id().to_string();
        assert_eq!(first.len(), 8);
        assert_ne!(out.assign_id(1), first);
        assert_eq!(out.assign_id(0), first);
    }

    #[test]
    fn tools_have_distinct_ids() {
        let ids: Vec<String> = [Tool::Simulate, Tool::Peak, Tool::Time]
            .into_iter()
            .map(|t| execute(&RunRequest::new(corpus::SUPPLY, "supply.rpl", profile(t))).unwrap().output.exec_id().to_string())
            .collect();
        assert_ne!(ids[0], ids[1]);
        assert_ne!(ids[1], ids[2]);
    }

    #[test]
    fn unknown_placeholder_is_a_diagnostic() {
        let err = execute(&RunRequest::new("module M;\n{ cost($SPEED); }", "m.rpl", profile(Tool::Simulate))).unwrap_err();
        let RunError::Diagnostics(d) = err else { panic!("{err}") };
        assert_eq!(d[0].span.line, 2);
    }

    #[test]
    fn time_output_evaluates_at_profile() {
        let p = Profile {
            efficiency_pct: 70,
            conc_cases: 4,
            ..profile(Tool::Time)
        };
        let RunOutput::Time(t) = execute(&RunRequest::new(corpus::SUPPLY, "supply.rpl", p)).unwrap().output else {
            panic!()
        };
        assert_eq!(t.at_profile.sequential, 2280);
    }
}
