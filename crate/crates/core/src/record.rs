//! Long-format experiment results and their CSV encoding.

use std::io::Write;

use crate::error::{Error, Result};

/// CSV header shared by every experiment output.
pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "algorithm",
    "env",
    "seed",
    "beta",
    "period",
    "index",
    "metric",
    "value",
];

/// Written in place of a non-finite metric value.
pub const DIVERGED: &str = "diverged";

#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub seed: u64,
    /// Step, episode or grid-point index, depending on the metric.
    pub index: u64,
    pub metric: String,
    pub value: f64,
}

/// Rows of one grid point: the algorithm, environment and hyperparameters
/// are shared by every row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub algorithm: String,
    pub env: String,
    pub beta: Option<f64>,
    pub period: Option<u64>,
    rows: Vec<RecordRow>,
}

impl ExperimentRecord {
    pub fn new(experiment: impl Into<String>, algorithm: impl Into<String>, env: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            algorithm: algorithm.into(),
            env: env.into(),
            beta: None,
            period: None,
            rows: Vec::new(),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_period(mut self, period: u64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn push(&mut self, seed: u64, index: u64, metric: &str, value: f64) {
        self.rows.push(RecordRow {
            seed,
            index,
            metric: metric.to_string(),
            value,
        });
    }

    /// Rows ordered by `(seed, index)`; insertion order breaks ties.
    pub fn rows(&self) -> &[RecordRow] {
        &self.rows
    }

    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| (r.seed, r.index));
    }

    pub fn extend(&mut self, other: ExperimentRecord) {
        self.rows.extend(other.rows);
    }

    pub fn is_sorted(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| (w[0].seed, w[0].index) <= (w[1].seed, w[1].index))
    }

    pub fn has_diverged(&self) -> bool {
        self.rows.iter().any(|r| !r.value.is_finite())
    }

    /// Rows with the given metric name.
    pub fn metric<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a RecordRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == name)
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        DIVERGED.to_string()
    }
}

/// Writes the header followed by every record's rows, records in the order
/// given.
pub fn write_csv<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for rec in records {
        let beta = rec.beta.map(|b| format!("{b}")).unwrap_or_default();
        let period = rec.period.map(|p| p.to_string()).unwrap_or_default();
        for row in &rec.rows {
            w.write_record([
                rec.experiment.as_str(),
                rec.algorithm.as_str(),
                rec.env.as_str(),
                &row.seed.to_string(),
                &beta,
                &period,
                &row.index.to_string(),
                &row.metric,
                &format_value(row.value),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_diverged_flag() {
        let mut rec = ExperimentRecord::new("tabular_convergence", "agt2_ql", "example").with_beta(0.5);
        rec.push(1, 10, "sup_err_a", 0.25);
        rec.push(0, 0, "sup_err_a", f64::NAN);
        rec.sort();
        assert!(rec.is_sorted());
        assert!(rec.has_diverged());
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "experiment,algorithm,env,seed,beta,period,index,metric,value\n\
             tabular_convergence,agt2_ql,example,0,0.5,,0,sup_err_a,diverged\n\
             tabular_convergence,agt2_ql,example,1,0.5,,10,sup_err_a,0.25\n"
        );
    }

    #[test]
    fn sort_is_stable_within_key() {
        let mut rec = ExperimentRecord::new("x", "y", "z");
        rec.push(0, 1, "b", 1.0);
        rec.push(0, 1, "a", 2.0);
        rec.push(0, 0, "c", 3.0);
        rec.sort();
        let names: Vec<_> = rec.rows().iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(names, ["c", "b", "a"]);
    }
}
