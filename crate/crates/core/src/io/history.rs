use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::search::{IterationRecord, SearchHistory};

pub const HISTORY_HEADER: [&str; 5] = ["iteration", "eps", "best_score", "evals", "net_loss"];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Appends iteration rows to a CSV file, flushing after each one so an
/// interrupted run leaves every finished iteration on disk.
pub struct HistoryWriter {
    path: PathBuf,
    out: csv::Writer<File>,
}

impl HistoryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = HistoryWriter { path: path.to_path_buf(), out: csv::Writer::from_writer(file) };
        w.row(HISTORY_HEADER.map(String::from))?;
        Ok(w)
    }

    fn row(&mut self, fields: [String; 5]) -> Result<()> {
        let path = &self.path;
        self.out.write_record(&fields).map_err(|e| Error::io(path, e.into()))?;
        self.out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn append(&mut self, r: &IterationRecord) -> Result<()> {
        self.row([r.iteration.to_string(), opt(r.eps), r.best_score.to_string(), r.evals.to_string(), opt(r.net_loss)])
    }
}

pub fn write_history_csv(history: &SearchHistory, path: &Path) -> Result<()> {
    let mut w = HistoryWriter::create(path)?;
    for r in &history.records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_history_csv(path: &Path) -> Result<SearchHistory> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let bad = |line: usize, what: &str| Error::Parse { path: format!("{}:{line}", path.display()), message: what.into() };
    let header = rdr.headers().map_err(|e| Error::io(path, e.into()))?;
    if header.iter().ne(HISTORY_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::io(path, e.into()))?;
        let line = i + 2;
        let num = |k: usize| row[k].parse::<f64>().map_err(|e| bad(line, &format!("{}: {e}", HISTORY_HEADER[k])));
        let int = |k: usize| row[k].parse::<usize>().map_err(|e| bad(line, &format!("{}: {e}", HISTORY_HEADER[k])));
        let maybe = |k: usize| if row[k].is_empty() { Ok(None) } else { num(k).map(Some) };
        records.push(IterationRecord {
            iteration: int(0)?,
            eps: maybe(1)?,
            best_score: num(2)?,
            evals: int(3)?,
            net_loss: maybe(4)?,
        });
    }
    Ok(SearchHistory { records })
}
