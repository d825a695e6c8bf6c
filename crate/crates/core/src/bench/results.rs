use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// Header of every results file.
pub const CSV_HEADER: [&str; 12] = [
    "domain",
    "algo",
    "budget_mode",
    "budget",
    "amount",
    "likelihood",
    "particles",
    "seed",
    "steps",
    "goal",
    "planning_secs",
    "plans_generated",
];

/// One episode, flattened. `goal` is false exactly when the episode hit the
/// step cap or was aborted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub domain: String,
    pub algo: String,
    pub budget_mode: String,
    pub budget: f64,
    pub amount: usize,
    pub likelihood: String,
    pub particles: usize,
    pub seed: u64,
    pub steps: usize,
    pub goal: bool,
    pub planning_secs: f64,
    pub plans_generated: u64,
}

impl ResultRecord {
    /// Configuration part of the row, for grouping.
    pub fn condition(&self) -> (String, String, String, u64, usize, String, usize) {
        (
            self.domain.clone(),
            self.algo.clone(),
            self.budget_mode.clone(),
            self.budget.to_bits(),
            self.amount,
            self.likelihood.clone(),
            self.particles,
        )
    }
}

/// Orders rows by configuration (lexicographic), then seed.
pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (&a.domain, &a.algo, &a.budget_mode)
            .cmp(&(&b.domain, &b.algo, &b.budget_mode))
            .then(a.budget.total_cmp(&b.budget))
            .then((a.amount, &a.likelihood, a.particles, a.seed).cmp(&(b.amount, &b.likelihood, b.particles, b.seed)))
    });
}

/// Writes the header followed by one row per record, in the given order.
pub fn write_results<W: Write>(records: &[ResultRecord], out: W) -> Result<(), csv::Error> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Streaming variant of [`write_results`] for sweeps.
pub struct ResultWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W) -> Result<Self, csv::Error> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(CSV_HEADER)?;
        Ok(ResultWriter { inner })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<(), csv::Error> {
        self.inner.serialize(record)?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Reads a results file, checking the header.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRecord>, csv::Error> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(",")),
        )));
    }
    reader.deserialize().collect()
}

/// Sample mean and standard error of the mean (`NaN` SEM below 2 values).
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
