//! CSV writers and readers for run directories.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mzuq_core::markovmz::DiagnosticRow;
use mzuq_core::{BurgersSystem, Complex64, MzError, Result, Trajectory};

/// Missing-value marker in every CSV the CLI writes.
pub const NA: &str = "NA";

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), num)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| MzError::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Rows `0, every, 2·every, ...` of a trajectory.
fn rows(len: usize, every: usize) -> impl Iterator<Item = usize> {
    (0..len).step_by(every.max(1))
}

/// `t,u0,u1,...` for real states.
pub fn write_real_trajectory(path: &Path, traj: &Trajectory<f64>, every: usize) -> Result<()> {
    let width = traj.states.first().map_or(0, Vec::len);
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|r| format!("u{r}")));
    w.write_record(&header)?;
    for i in rows(traj.len(), every) {
        let mut rec = vec![num(traj.times[i])];
        rec.extend(traj.states[i].iter().map(|&v| num(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,re_u{k}_{r},im_u{k}_{r},...` in state order for Burgers coefficients.
pub fn write_complex_trajectory(path: &Path, sys: &BurgersSystem, traj: &Trajectory<Complex64>, every: usize) -> Result<()> {
    let width = traj.states.first().map_or(0, Vec::len);
    let n = sys.modes();
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    for i in 0..width {
        let (k, r) = (sys.wavenumber(i % n), i / n);
        header.push(format!("re_u{k}_{r}"));
        header.push(format!("im_u{k}_{r}"));
    }
    w.write_record(&header)?;
    for i in rows(traj.len(), every) {
        let mut rec = vec![num(traj.times[i])];
        for v in &traj.states[i] {
            rec.push(num(v.re));
            rec.push(num(v.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, diag: &[DiagnosticRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "y_hat", "t0_hat", "epsilon", "newton_iters"])?;
    for d in diag {
        w.write_record([num(d.t), opt(d.y_hat), opt(d.t0_hat), opt(d.epsilon), d.newton_iters.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| MzError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// A numeric CSV: header plus rows; `NA` reads as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| MzError::Io(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    if s == NA {
                        Ok(f64::NAN)
                    } else {
                        s.parse::<f64>().map_err(|e| MzError::Io(format!("{}: '{s}': {e}", path.display())))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if header.first().map(String::as_str) != Some("t") {
            return Err(MzError::Io(format!("{}: first column must be t", path.display())));
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Trajectory over the named columns, in the given order.
    pub fn trajectory(&self, columns: &[usize]) -> Trajectory<f64> {
        let mut tr = Trajectory::new();
        for row in &self.rows {
            tr.push(row[0], columns.iter().map(|&c| row[c]).collect());
        }
        tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_trajectory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut tr = Trajectory::new();
        for i in 0..5 {
            tr.push(i as f64 * 0.1, vec![1.0 / (i + 1) as f64, -3e-20]);
        }
        let path = dir.path().join("tr.csv");
        write_real_trajectory(&path, &tr, 2).unwrap();
        let t = Table::read(&path).unwrap();
        assert_eq!(t.header, ["t", "u0", "u1"]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[2], vec![0.4, 0.2, -3e-20]);
    }

    #[test]
    fn diagnostics_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let rows = [DiagnosticRow { t: 0.0, y_hat: None, t0_hat: None, epsilon: None, newton_iters: 0 }];
        write_diagnostics(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,y_hat,t0_hat,epsilon,newton_iters\n0e0,NA,NA,NA,0\n");
        assert!(Table::read(&path).unwrap().rows[0][1].is_nan());
    }
}
