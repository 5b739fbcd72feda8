//! JSON file formats and report documents.
//!
//! A moments file carries the upper triangle of a truncated moment
//! table plus an optional column relation; a measure file carries an
//! atom list. Values are JSON doubles, which serde round-trips to the
//! exact f64 bit pattern, so save/load is lossless.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tcmp::moment::{MomentTable, PsdReport};
use tcmp::poly::Monomial;
use tcmp::solver::{AtomicMeasure, ColumnRelation, ConditionReport, SolveReport};
use tcmp::C64;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentsFile {
    pub degree: u32,
    pub entries: Vec<EntrySpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relation: Option<RelationSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntrySpec {
    pub i: u32,
    pub j: u32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationSpec {
    pub k: u32,
    pub coefficients: Vec<CoeffSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoeffSpec {
    pub n: u32,
    pub m: u32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AtomSpec {
    pub re: f64,
    pub im: f64,
    pub weight: f64,
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json(path.into(), e))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json(path.into(), e))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(path.into(), e))
}

impl MomentsFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        load_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        save_json(path, self)
    }

    pub fn from_table(table: &MomentTable, relation: Option<&ColumnRelation>) -> Self {
        let entries = table
            .upper_entries()
            .into_iter()
            .map(|((i, j), v)| EntrySpec { i, j, re: v.re, im: v.im })
            .collect();
        MomentsFile {
            degree: table.degree(),
            entries,
            relation: relation.map(RelationSpec::from_relation),
        }
    }

    /// Validate and build the moment table: each position at most
    /// once, the upper triangle complete, redundant lower entries
    /// conjugate-consistent.
    pub fn to_table(&self) -> Result<MomentTable, CliError> {
        let mut map = HashMap::new();
        for e in &self.entries {
            if map.insert((e.i, e.j), C64::new(e.re, e.im)).is_some() {
                return Err(CliError::Usage(format!(
                    "moment ({}, {}) appears more than once",
                    e.i, e.j
                )));
            }
        }
        Ok(MomentTable::new(self.degree, &map)?)
    }

    pub fn to_relation(&self) -> Result<Option<ColumnRelation>, CliError> {
        match &self.relation {
            None => Ok(None),
            Some(spec) => Ok(Some(spec.to_relation()?)),
        }
    }
}

impl RelationSpec {
    pub fn from_relation(relation: &ColumnRelation) -> Self {
        RelationSpec {
            k: relation.k(),
            coefficients: relation
                .coefficients()
                .iter()
                .map(|&(mono, c)| CoeffSpec { n: mono.i, m: mono.j, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn to_relation(&self) -> Result<ColumnRelation, CliError> {
        let coefficients = self
            .coefficients
            .iter()
            .map(|c| (Monomial::new(c.n, c.m), C64::new(c.re, c.im)))
            .collect();
        Ok(ColumnRelation::new(self.k, coefficients)?)
    }
}

impl MeasureFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        load_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        save_json(path, self)
    }

    pub fn from_measure(mu: &AtomicMeasure) -> Self {
        MeasureFile {
            atoms: mu
                .atoms()
                .iter()
                .map(|&(z, w)| AtomSpec { re: z.re, im: z.im, weight: w })
                .collect(),
        }
    }

    pub fn to_measure(&self) -> Result<AtomicMeasure, CliError> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| (C64::new(a.re, a.im), a.weight))
            .collect();
        Ok(AtomicMeasure::new(atoms)?)
    }
}

/// Human-readable monomial label in the degree-lex basis.
pub fn monomial_label(m: Monomial) -> String {
    if m.i == 0 && m.j == 0 {
        return "1".into();
    }
    let mut out = String::new();
    if m.i > 0 {
        out.push_str("z̄");
        if m.i > 1 {
            out.push_str(&format!("^{}", m.i));
        }
    }
    if m.j > 0 {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push('z');
        if m.j > 1 {
            out.push_str(&format!("^{}", m.j));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointDoc {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for PointDoc {
    fn from(z: C64) -> Self {
        PointDoc { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsdDoc {
    pub level: u32,
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub rank: usize,
}

impl From<PsdReport> for PsdDoc {
    fn from(r: PsdReport) -> Self {
        PsdDoc {
            level: r.level,
            is_psd: r.is_psd,
            min_eigenvalue: r.min_eigenvalue,
            max_eigenvalue: r.max_eigenvalue,
            rank: r.rank,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckDoc {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionsDoc {
    pub region: String,
    pub zero_count: usize,
    pub h: String,
    pub riesz: Vec<CheckDoc>,
    pub entrywise: Vec<CheckDoc>,
}

impl ConditionsDoc {
    pub fn from_report(report: &ConditionReport) -> Self {
        let checks = |list: &[tcmp::solver::ConditionCheck]| {
            list.iter()
                .map(|c| CheckDoc { name: c.name.clone(), residual: c.residual })
                .collect()
        };
        ConditionsDoc {
            region: report.region.to_string(),
            zero_count: report.region.zero_count(),
            h: report.h.to_string(),
            riesz: checks(&report.riesz),
            entrywise: checks(&report.entrywise),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDoc {
    pub status: String,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_test: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<AtomSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_set: Option<Vec<PointDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membership_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_residual: Option<f64>,
    pub psd: Vec<PsdDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionsDoc>,
}

impl SolveDoc {
    pub fn from_report(report: &SolveReport) -> Self {
        let d = &report.diagnostics;
        SolveDoc {
            status: report.status.to_string(),
            exit_code: crate::exit_code_for_status(report.status),
            failed_test: report.failed_test.as_ref().map(|t| t.to_string()),
            measure: report
                .measure
                .as_ref()
                .map(|mu| MeasureFile::from_measure(mu).atoms),
            xi_level: d.xi_level,
            xi: d.xi.as_ref().map(|x| x.to_string()),
            zero_set: d
                .zero_set
                .as_ref()
                .map(|zs| zs.points().iter().map(|&z| z.into()).collect()),
            membership_residual: d.membership_residual,
            verify_residual: d.verify_residual,
            psd: d.psd_reports.iter().map(|&r| r.into()).collect(),
            conditions: d.condition_report.as_ref().map(ConditionsDoc::from_report),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootsDoc {
    pub form: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub region: String,
    pub count: usize,
    pub zeros: Vec<PointDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiDoc {
    pub d_h: u32,
    pub c1: u32,
    pub c1_conj: u32,
    pub c2: Option<u32>,
    pub c2_conj: Option<u32>,
    pub c: u32,
    pub alpha: u32,
    pub xi: u32,
    pub display: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixDoc {
    pub level: u32,
    pub dim: usize,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<PointDoc>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReportDoc {
    pub conditions: ConditionsDoc,
    pub psd: PsdDoc,
    pub verdict: String,
    pub exit_code: u8,
}
