//! Scenario reports and their table, CSV and JSON renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::ext::Ext;
use crate::openset::Arc;
use crate::rational::Rational;

/// Where a reported number comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exact value at the stated stage.
    Exact,
    /// Exact value of a quantity that only bounds the target from below.
    LowerBound,
    /// Exact, with the quantifier over open sets run over a finite arc family.
    ArcFamily,
    /// Value in the limit algebra, read off from the stage bounds.
    Limit,
    /// Floating point, from the numeric oracle.
    Numeric,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::LowerBound => "lower-bound",
            Provenance::ArcFamily => "arc-family",
            Provenance::Limit => "limit",
            Provenance::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub stage: Option<u32>,
    pub value: Ext,
    pub provenance: Provenance,
}

/// Where a sup or inf is attained.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub quantity: String,
    pub stage: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc: Option<Arc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(Rational, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub parameters: Vec<(String, String)>,
    pub quantities: Vec<Quantity>,
    pub witnesses: Vec<Witness>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    pub fn new(scenario: &str) -> Self {
        ScenarioReport { scenario: scenario.into(), ..Default::default() }
    }

    pub fn param(&mut self, k: &str, v: impl ToString) {
        self.parameters.push((k.into(), v.to_string()));
    }

    pub fn push(&mut self, name: &str, stage: Option<u32>, value: impl Into<Ext>, provenance: Provenance) {
        self.quantities.push(Quantity { name: name.into(), stage, value: value.into(), provenance });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// First quantity with this name and stage.
    pub fn get(&self, name: &str, stage: Option<u32>) -> Option<&Ext> {
        self.quantities.iter().find(|q| q.name == name && q.stage == stage).map(|q| &q.value)
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "== {} ({})", self.scenario, params.join(", "));
        let w = self.quantities.iter().map(|q| q.name.len()).max().unwrap_or(8).max(8);
        let _ = writeln!(out, "{:<w$}  {:>5}  {:>24}  {:>14}  provenance", "quantity", "stage", "exact", "decimal");
        for q in &self.quantities {
            let stage = q.stage.map_or("-".to_string(), |s| s.to_string());
            let exact = q.value.to_string();
            let exact = if exact.len() > 24 { format!("{}...", &exact[..21]) } else { exact };
            let _ = writeln!(out, "{:<w$}  {:>5}  {:>24}  {:>14}  {}", q.name, stage, exact, decimal(&q.value), q.provenance.tag());
        }
        for c in &self.checks {
            let _ = writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    /// Rows `quantity, stage, exact, decimal, provenance`.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["quantity", "stage", "exact", "decimal", "provenance"])?;
        for q in &self.quantities {
            let stage = q.stage.map(|s| s.to_string()).unwrap_or_default();
            wr.write_record([q.name.as_str(), &stage, &q.value.to_string(), &decimal(&q.value), q.provenance.tag()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn decimal(v: &Ext) -> String {
    match v {
        Ext::Inf => "inf".into(),
        Ext::Fin(r) => format!("{:.10}", r.to_f64()),
    }
}

/// Several reports in one file or table.
pub fn save_all_csv(reports: &[ScenarioReport], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let mut one = Vec::new();
        r.write_csv(&mut one)?;
        // keep a single header
        let skip = if i == 0 { 0 } else { one.iter().position(|b| *b == b'\n').map_or(one.len(), |p| p + 1) };
        buf.extend_from_slice(&one[skip..]);
    }
    std::fs::write(path, buf)?;
    Ok(())
}
