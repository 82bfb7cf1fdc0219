//! Report documents and their JSON, CSV and text projections.

use std::fmt::Write as _;

use serde::Serialize;

use super::instance::InstanceFile;
use super::CliError;
use crate::congruence::DefectLedger;
use crate::cotangent::{CotangentReport, CotangentRing};
use crate::freeness::{render_step, DescentCertificate, DescentStep};
use crate::fuzz::FuzzReport;
use crate::ringfam::{SigmaSet, Stratum};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A checked property failed or a hypothesis was refuted.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Named<T> {
    pub point: String,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PsiEntry {
    pub sigma: SigmaSet,
    pub stratum: SigmaSet,
    pub psi_length: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: String,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceFile>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cotangent: Vec<Named<CotangentReport>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub psi: Vec<Named<PsiEntry>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub defects: Vec<Named<DefectLedger>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentCertificate>,
    /// Steps evaluated for diagnosis when no certificate could be issued.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostic_steps: Vec<DescentStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzReport>,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl ReportDocument {
    pub fn new(command: &str, backend: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            backend,
            seed: None,
            instance: None,
            cotangent: Vec::new(),
            psi: Vec::new(),
            defects: Vec::new(),
            descent: None,
            diagnostic_steps: Vec::new(),
            fuzz: None,
            status: Status::Ok,
            diagnostics: Vec::new(),
        }
    }

    pub fn fail(&mut self, diagnostic: impl Into<String>) {
        self.status = Status::Failed;
        self.diagnostics.push(diagnostic.into());
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Failed => 1,
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        match format {
            OutputFormat::Json => {
                let mut s =
                    serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Text => Ok(self.to_text()),
        }
    }

    /// Tabular projection. The table depends on the command; every numeric cell is the
    /// same integer that appears in the JSON document.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        if !self.cotangent.is_empty() {
            w.write_record([
                "point",
                "ring",
                "sigma",
                "stratum",
                "torsion_length",
                "closed_form_length",
                "free_rank",
                "regular",
                "divisor_valuations",
            ])
            .map_err(io)?;
            for r in &self.cotangent {
                let b = &r.body;
                let divisors: Vec<String> = b
                    .snf
                    .divisor_valuations
                    .iter()
                    .map(u32::to_string)
                    .collect();
                w.write_record([
                    r.point.clone(),
                    ring_label(b.ring),
                    b.sigma.to_string(),
                    stratum_label(b.stratum),
                    b.torsion_length.to_string(),
                    b.closed_form_length
                        .map(|l| l.to_string())
                        .unwrap_or_default(),
                    b.free_rank.to_string(),
                    b.regular.to_string(),
                    divisors.join(";"),
                ])
                .map_err(io)?;
            }
        } else if !self.psi.is_empty() {
            w.write_record(["point", "sigma", "stratum", "psi_length"])
                .map_err(io)?;
            for r in &self.psi {
                w.write_record([
                    r.point.clone(),
                    r.body.sigma.to_string(),
                    r.body.stratum.to_string(),
                    r.body.psi_length.to_string(),
                ])
                .map_err(io)?;
            }
        } else if !self.defects.is_empty() {
            w.write_record([
                "point",
                "sigma",
                "stratum",
                "rank_at_point",
                "phi_length",
                "psi_length",
                "defect",
            ])
            .map_err(io)?;
            for r in &self.defects {
                let d = &r.body;
                w.write_record([
                    r.point.clone(),
                    d.sigma.to_string(),
                    d.stratum.to_string(),
                    d.rank_at_point.to_string(),
                    d.phi_length.to_string(),
                    d.psi_length.to_string(),
                    d.defect.to_string(),
                ])
                .map_err(io)?;
            }
        } else if self.descent.is_some() || !self.diagnostic_steps.is_empty() {
            let steps = self
                .descent
                .as_ref()
                .map(|c| c.steps.as_slice())
                .unwrap_or(&self.diagnostic_steps);
            w.write_record([
                "sigma",
                "s",
                "sigma_prime",
                "mu_sigma_prime",
                "mu_empty",
                "multiplier",
                "ord_b_s",
                "sum_ord_a",
                "phi_a_sigma",
                "phi_b",
                "psi_m_sigma",
                "psi_w",
                "lower_bound",
                "upper_bound",
                "verdict",
            ])
            .map_err(io)?;
            for st in steps {
                w.write_record([
                    st.sigma.to_string(),
                    st.s.to_string(),
                    st.sigma_prime.to_string(),
                    st.mu_sigma_prime.to_string(),
                    st.mu_empty.to_string(),
                    st.multiplier.to_string(),
                    st.ord_b_s.to_string(),
                    st.sum_ord_a.to_string(),
                    st.phi_a_sigma.to_string(),
                    st.phi_b.to_string(),
                    st.psi_m_sigma.to_string(),
                    st.psi_w.to_string(),
                    st.lower_bound.to_string(),
                    st.upper_bound.to_string(),
                    serde_json::to_value(st.verdict)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                ])
                .map_err(io)?;
            }
        } else if let Some(f) = &self.fuzz {
            w.write_record(["check", "evaluated", "failures"])
                .map_err(io)?;
            for c in &f.checks {
                w.write_record([
                    check_label(c),
                    c.evaluated.to_string(),
                    c.failures.to_string(),
                ])
                .map_err(io)?;
            }
        } else {
            w.write_record(["status"]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} [{}]", self.command, self.backend);
        for r in &self.cotangent {
            let b = &r.body;
            let closed = b
                .closed_form_length
                .map(|l| l.to_string())
                .unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "{}: {} Σ={} stratum={} length={} (closed form {}) free_rank={} regular={}",
                r.point,
                ring_label(b.ring),
                b.sigma,
                stratum_label(b.stratum),
                b.torsion_length,
                closed,
                b.free_rank,
                b.regular
            );
            for note in &b.notes {
                let _ = writeln!(out, "  note: {note}");
            }
        }
        for r in &self.psi {
            let _ = writeln!(
                out,
                "{}: Σ={} Σ'={} psi_length={}",
                r.point, r.body.sigma, r.body.stratum, r.body.psi_length
            );
        }
        for r in &self.defects {
            let d = &r.body;
            let _ = writeln!(
                out,
                "{}: Σ={} Σ'={} rank={} phi={} psi={} defect={}",
                r.point, d.sigma, d.stratum, d.rank_at_point, d.phi_length, d.psi_length, d.defect
            );
        }
        if let Some(c) = &self.descent {
            out.push_str(&c.render_text());
        }
        for st in &self.diagnostic_steps {
            out.push_str(&render_step(st));
        }
        if let Some(f) = &self.fuzz {
            let _ = writeln!(
                out,
                "{} trials, seed {}, backends {}: {} failures",
                f.trials,
                f.seed,
                f.backends.join(", "),
                f.total_failures
            );
            for c in &f.checks {
                let _ = writeln!(
                    out,
                    "  {:<20} {:>6} evaluated {:>4} failed",
                    check_label(c),
                    c.evaluated,
                    c.failures
                );
            }
            let _ = writeln!(out, "  digest {}", f.digest);
            if let Some(ce) = &f.first_counterexample {
                let _ = writeln!(
                    out,
                    "first counterexample (trial {}, {}): {}",
                    ce.trial, ce.backend, ce.detail
                );
                out.push_str(&ce.instance_file);
            }
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "diagnostic: {d}");
        }
        let _ = writeln!(
            out,
            "status: {}",
            match self.status {
                Status::Ok => "ok",
                Status::Failed => "failed",
            }
        );
        out
    }
}

fn ring_label(ring: CotangentRing) -> String {
    match ring {
        CotangentRing::ASigma => "A_sigma".into(),
        CotangentRing::B { s } => format!("B(s={s})"),
    }
}

fn stratum_label(s: Stratum) -> String {
    match s {
        Stratum::Interior(sp) => format!("interior {sp}"),
        Stratum::Singular(amb) => format!("singular {amb}"),
    }
}

fn check_label(c: &crate::fuzz::CheckSummary) -> String {
    serde_json::to_value(c.check)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
