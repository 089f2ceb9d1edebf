use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::MetricsReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Higher is better.
    Up,
    /// Lower is better.
    Down,
}

impl Direction {
    /// Accuracies, precisions, recalls and F-scores rank upward, everything
    /// else (errors, distances) downward.
    pub fn default_for(column: &str) -> Direction {
        let up = ["delta", "prec", "rec", "f1", "alpha"];
        let stem = column.trim_start_matches("w").trim_start_matches("ico_");
        if up.iter().any(|p| stem.starts_with(p)) {
            Direction::Up
        } else {
            Direction::Down
        }
    }

    fn arrow(self) -> &'static str {
        match self {
            Direction::Up => "↑",
            Direction::Down => "↓",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub direction: Direction,
}

impl ColumnSpec {
    pub fn new(name: &str) -> Self {
        ColumnSpec {
            name: name.to_string(),
            direction: Direction::default_for(name),
        }
    }

    /// Comma-separated list of `name`, `name:up` or `name:down`.
    pub fn parse_list(s: &str) -> Result<Vec<ColumnSpec>> {
        s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(str::parse).collect()
    }
}

impl FromStr for ColumnSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, dir) = match s.rsplit_once(':') {
            Some((n, "up")) => (n, Some(Direction::Up)),
            Some((n, "down")) => (n, Some(Direction::Down)),
            Some((_, other)) => {
                return Err(Error::InvalidArgument(format!("column direction must be `up` or `down`, got `{other}`")))
            }
            None => (s, None),
        };
        if name.is_empty() {
            return Err(Error::InvalidArgument("empty column name".into()));
        }
        Ok(ColumnSpec {
            name: name.to_string(),
            direction: dir.unwrap_or_else(|| Direction::default_for(name)),
        })
    }
}

impl fmt::Display for ColumnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.direction.arrow())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub model: String,
    pub values: Vec<f64>,
    /// Competition ranks (1-based); ties share the better rank.
    pub ranks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankTable {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<RankRow>,
}

/// `a` strictly better than `b`; NaN is worse than any number.
fn better(a: f64, b: f64, dir: Direction) -> bool {
    match (a.is_nan(), b.is_nan()) {
        (true, _) => false,
        (false, true) => true,
        _ => match dir {
            Direction::Up => a > b,
            Direction::Down => a < b,
        },
    }
}

impl RankTable {
    /// Ranks named models given their column values. Every model must have
    /// every requested column.
    pub fn from_rows(rows: &[(String, HashMap<String, f64>)], columns: &[ColumnSpec]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("nothing to rank".into()));
        }
        let mut table = RankTable {
            columns: columns.to_vec(),
            rows: Vec::with_capacity(rows.len()),
        };
        for (model, vals) in rows {
            let values = columns
                .iter()
                .map(|c| {
                    vals.get(&c.name).copied().ok_or_else(|| {
                        Error::MissingColumn(if model.is_empty() { c.name.clone() } else { format!("{} (model `{model}`)", c.name) })
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            table.rows.push(RankRow {
                model: model.clone(),
                values,
                ranks: vec![0; columns.len()],
            });
        }
        for (c, col) in columns.iter().enumerate() {
            let vals: Vec<f64> = table.rows.iter().map(|r| r.values[c]).collect();
            for (r, row) in table.rows.iter_mut().enumerate() {
                row.ranks[c] = 1 + vals.iter().filter(|&&v| better(v, vals[r], col.direction)).count();
            }
        }
        Ok(table)
    }

    pub fn rank(&self, model: &str, column: &str) -> Option<usize> {
        let c = self.columns.iter().position(|s| s.name == column)?;
        self.rows.iter().find(|r| r.model == model).map(|r| r.ranks[c])
    }

    /// Models holding ranks 1, 2 and 3 in `column`, in row order within ties.
    pub fn podium(&self, column: &str) -> Option<[Vec<&str>; 3]> {
        let c = self.columns.iter().position(|s| s.name == column)?;
        let mut out: [Vec<&str>; 3] = Default::default();
        for row in &self.rows {
            if (1..=3).contains(&row.ranks[c]) {
                out[row.ranks[c] - 1].push(&row.model);
            }
        }
        Some(out)
    }

    /// Markdown table; first place in bold, places 1–3 tagged `(n)`.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| model |");
        for c in &self.columns {
            let _ = write!(s, " {c} |");
        }
        s.push_str("\n|---|");
        for _ in &self.columns {
            s.push_str("---:|");
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "| {} |", row.model);
            for (v, &r) in row.values.iter().zip(&row.ranks) {
                let cell = match r {
                    1 => format!("**{v:.4}** (1)"),
                    2 | 3 => format!("{v:.4} ({r})"),
                    _ => format!("{v:.4}"),
                };
                let _ = write!(s, " {cell} |");
            }
            s.push('\n');
        }
        s
    }

    /// One row per model with a value and a rank column per metric.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model");
        for c in &self.columns {
            let _ = write!(s, ",{0},{0}_rank", c.name);
        }
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.model);
            for (v, r) in row.values.iter().zip(&row.ranks) {
                let _ = write!(s, ",{v},{r}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ranks reports by the requested columns. Rows are labeled by each report's
/// model tag.
pub fn rank_models(reports: &[MetricsReport], columns: &[ColumnSpec]) -> Result<RankTable> {
    let rows: Vec<(String, HashMap<String, f64>)> =
        reports.iter().map(|r| (r.model.clone(), r.columns().into_iter().collect())).collect();
    RankTable::from_rows(&rows, columns)
}
