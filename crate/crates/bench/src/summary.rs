//! Cross-seed summary tables, the derived per-program reports, and export.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use haas_core::metrics::RunAggregate;
use haas_core::stats::{wilcoxon_signed_rank, WilcoxonResult};
use haas_core::{Algorithm, Domain, Level, RunResult, StrategyId};
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationReport;
use crate::error::{BenchError, Result};
use crate::spec::{Cell, Program, RowKey, BASE_VARIANT};

/// Key columns that precede the metric columns in CSV exports.
pub const KEY_COLUMNS: [&str; 8] = [
    "domain",
    "scenario",
    "strategy",
    "level",
    "ablation",
    "reward_profile",
    "variant",
    "seeds",
];

const SCREEN_COLUMNS: [&str; 3] = ["acceptable_rate", "reasonable_rate", "responsible_rate"];

/// Metric columns of every summary table, in order.
pub fn metric_columns() -> Vec<String> {
    RunAggregate::COLUMNS
        .iter()
        .copied()
        .chain(["peak_fatigue", "governance_violations"])
        .chain(SCREEN_COLUMNS)
        .map(String::from)
        .collect()
}

fn run_values(r: &RunResult, columns: &[String]) -> Vec<f64> {
    columns
        .iter()
        .map(|c| match c.as_str() {
            "acceptable_rate" => f64::from(u8::from(r.screens.acceptable)),
            "reasonable_rate" => f64::from(u8::from(r.screens.reasonable)),
            "responsible_rate" => f64::from(u8::from(r.screens.responsible)),
            name => r.aggregate.column(name).expect("summary column exists on the aggregate"),
        })
        .collect()
}

/// Type-7 quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub key: RowKey,
    pub seeds: Vec<u64>,
    /// Indices of the constituent runs in the battery's run list.
    pub runs: Vec<usize>,
    /// Cross-seed means, aligned with the table's columns.
    pub mean: Vec<f64>,
    /// `[Q1, median, Q3]` per column when the program reports dispersion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartiles: Option<Vec<[f64; 3]>>,
}

/// Pre-specified paired test on cumulative regret between two strategies of
/// one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    pub domain: Domain,
    pub scenario: String,
    pub metric: String,
    pub a: StrategyId,
    pub b: StrategyId,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: WilcoxonResult,
    pub reject_at_05: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestLevel {
    pub domain: Domain,
    pub scenario: String,
    pub strategy: StrategyId,
    pub level: Level,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCheck {
    pub domain: Domain,
    pub scenario: String,
    pub variant: String,
    /// Strategies from lowest to highest mean cumulative regret.
    pub order: Vec<StrategyId>,
    pub matches_base: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub program: Program,
    pub columns: Vec<String>,
    pub quartiles: bool,
    pub rows: Vec<SummaryRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wilcoxon: Vec<WilcoxonReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub best_levels: Vec<BestLevel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rank_checks: Vec<RankCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationReport>,
}

impl SummaryTable {
    pub fn empty(program: Program) -> Self {
        SummaryTable {
            program,
            columns: metric_columns(),
            quartiles: program == Program::Dispersion,
            rows: Vec::new(),
            wilcoxon: Vec::new(),
            best_levels: Vec::new(),
            rank_checks: Vec::new(),
            calibration: None,
        }
    }

    /// Builds the table from the grid and its runs, which are laid out
    /// cell-major with one run per seed.
    pub fn build(program: Program, cells: &[Cell], seeds: &[u64], runs: &[RunResult]) -> Self {
        assert_eq!(cells.len() * seeds.len(), runs.len(), "one run per cell and seed");
        let mut table = SummaryTable::empty(program);
        let n = seeds.len();
        for (i, cell) in cells.iter().enumerate() {
            let idx: Vec<usize> = (i * n..(i + 1) * n).collect();
            let per_run: Vec<Vec<f64>> = idx.iter().map(|&j| run_values(&runs[j], &table.columns)).collect();
            let mean = (0..table.columns.len())
                .map(|c| per_run.iter().map(|v| v[c]).sum::<f64>() / n as f64)
                .collect();
            let quartiles = table.quartiles.then(|| {
                (0..table.columns.len())
                    .map(|c| {
                        let mut col: Vec<f64> = per_run.iter().map(|v| v[c]).collect();
                        col.sort_by(f64::total_cmp);
                        [quantile(&col, 0.25), quantile(&col, 0.5), quantile(&col, 0.75)]
                    })
                    .collect()
            });
            table.rows.push(SummaryRow {
                key: cell.key.clone(),
                seeds: seeds.to_vec(),
                runs: idx,
                mean,
                quartiles,
            });
        }
        if program == Program::StrategyTable {
            table.wilcoxon = regret_tests(&table, runs);
        }
        if matches!(program, Program::Ladder | Program::Portability | Program::LongHorizon) {
            table.best_levels = best_levels(&table);
        }
        if program == Program::WeightSensitivity {
            table.rank_checks = rank_checks(&table);
        }
        table
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: &SummaryRow, column: &str) -> Option<f64> {
        self.column_index(column).map(|i| row.mean[i])
    }

    /// First row matching scenario, strategy and level.
    pub fn find(&self, scenario: &str, strategy: &str, level: Option<Level>) -> Option<&SummaryRow> {
        let strategy: StrategyId = strategy.parse().ok()?;
        self.rows.iter().find(|r| {
            r.key.scenario.eq_ignore_ascii_case(scenario)
                && r.key.strategy == strategy
                && level.is_none_or(|l| r.key.level == l)
        })
    }

    pub fn rank_invariant(&self) -> bool {
        !self.rank_checks.is_empty() && self.rank_checks.iter().all(|c| c.matches_base)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary tables serialise")
    }

    pub fn from_json(doc: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(doc)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
        for c in &self.columns {
            h.push(c.clone());
        }
        if self.quartiles {
            for c in &self.columns {
                for q in ["q1", "median", "q3"] {
                    h.push(format!("{c}_{q}"));
                }
            }
        }
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.csv_header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.key.domain.to_string(),
                r.key.scenario.clone(),
                r.key.strategy.to_string(),
                r.key.level.to_string(),
                r.key.ablation.clone(),
                r.key.reward_profile.clone(),
                r.key.variant.clone(),
                r.seeds.len().to_string(),
            ];
            rec.extend(r.mean.iter().map(|v| v.to_string()));
            if let Some(q) = &r.quartiles {
                rec.extend(q.iter().flat_map(|t| t.iter().map(|v| v.to_string())));
            }
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(BenchError::spec("format", format!("unknown format `{s}`"))),
        }
    }
}

pub fn export(table: &SummaryTable, format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    match format {
        Format::Csv => table.write_csv(file).map_err(|source| BenchError::Csv {
            path: path.display().to_string(),
            source,
        }),
        Format::Json => {
            let mut file = file;
            file.write_all(table.to_json().as_bytes())
                .map_err(|e| BenchError::io(path, e))
        }
    }
}

pub fn import_json(path: &Path) -> Result<SummaryTable> {
    let doc = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    SummaryTable::from_json(&doc).map_err(|source| BenchError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Rows that differ only in strategy (or level) share a group.
type GroupKey = (Domain, String, Option<Level>, String, String, String);

fn group_key(k: &RowKey, keep_level: bool) -> GroupKey {
    (
        k.domain,
        k.scenario.clone(),
        keep_level.then_some(k.level),
        k.ablation.clone(),
        k.reward_profile.clone(),
        k.variant.clone(),
    )
}

fn regret_tests(table: &SummaryTable, runs: &[RunResult]) -> Vec<WilcoxonReport> {
    let a = StrategyId::new(Algorithm::Linucb, false);
    let b = StrategyId::new(Algorithm::AiOnly, false);
    let col = table.column_index("cum_regret").expect("cum_regret column");
    let mut out = Vec::new();
    for ra in table.rows.iter().filter(|r| r.key.strategy == a) {
        let Some(rb) = table.rows.iter().find(|r| {
            r.key.strategy == b && group_key(&r.key, false) == group_key(&ra.key, false)
        }) else {
            continue;
        };
        let pairs: Vec<(f64, f64)> = ra
            .runs
            .iter()
            .zip(&rb.runs)
            .map(|(&i, &j)| (runs[i].aggregate.cum_regret, runs[j].aggregate.cum_regret))
            .collect();
        if let Ok(test) = wilcoxon_signed_rank(&pairs) {
            out.push(WilcoxonReport {
                domain: ra.key.domain,
                scenario: ra.key.scenario.clone(),
                metric: "cum_regret".into(),
                a,
                b,
                mean_a: ra.mean[col],
                mean_b: rb.mean[col],
                reject_at_05: test.p < 0.05,
                test,
            });
        }
    }
    out
}

fn best_levels(table: &SummaryTable) -> Vec<BestLevel> {
    let col = table.column_index("objective").expect("objective column");
    let mut groups: BTreeMap<_, Vec<&SummaryRow>> = BTreeMap::new();
    for r in &table.rows {
        groups
            .entry((group_key(&r.key, false), r.key.strategy))
            .or_default()
            .push(r);
    }
    let mut out: Vec<BestLevel> = groups
        .into_values()
        .filter_map(|rows| {
            let best = rows.iter().min_by(|x, y| {
                x.mean[col]
                    .total_cmp(&y.mean[col])
                    .then(x.key.level.cmp(&y.key.level))
            })?;
            Some(BestLevel {
                domain: best.key.domain,
                scenario: best.key.scenario.clone(),
                strategy: best.key.strategy,
                level: best.key.level,
                objective: best.mean[col],
            })
        })
        .collect();
    let order = |s: &str| table.rows.iter().position(|r| r.key.scenario == s);
    out.sort_by_key(|b| order(&b.scenario));
    out
}

/// Strategies of one group sorted by mean cumulative regret, ties by name.
fn regret_order(rows: &[&SummaryRow], col: usize) -> Vec<StrategyId> {
    let mut v: Vec<(f64, StrategyId)> = rows.iter().map(|r| (r.mean[col], r.key.strategy)).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.to_string().cmp(&y.1.to_string())));
    v.into_iter().map(|(_, s)| s).collect()
}

fn rank_checks(table: &SummaryTable) -> Vec<RankCheck> {
    let col = table.column_index("cum_regret").expect("cum_regret column");
    let mut groups: Vec<(GroupKey, Vec<&SummaryRow>)> = Vec::new();
    for r in &table.rows {
        let k = group_key(&r.key, false);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    let mut out = Vec::new();
    for (k, rows) in &groups {
        let order = regret_order(rows, col);
        let base = groups.iter().find(|(g, _)| {
            g.0 == k.0 && g.1 == k.1 && g.2 == k.2 && g.3 == k.3 && g.4 == k.4 && g.5 == BASE_VARIANT
        });
        let matches_base = base.is_some_and(|(_, b)| regret_order(b, col) == order);
        out.push(RankCheck {
            domain: k.0,
            scenario: k.1.clone(),
            variant: k.5.clone(),
            order,
            matches_base,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_matches_type_seven() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
    }

    #[test]
    fn empty_table_exports_header_only() {
        let t = SummaryTable::empty(Program::Ladder);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("domain,scenario,strategy,level,ablation,reward_profile,variant,seeds,lead_time,"));
        let d = SummaryTable::empty(Program::Dispersion);
        assert!(d.to_csv().trim_end().ends_with("responsible_rate_q3"));
    }

    #[test]
    fn format_parses() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
