//! Continual-learning evaluation metrics over a lower-triangular accuracy
//! matrix. `A[t][i]` is the accuracy on task `i` of a model trained through
//! task `t`; indices are 1-based in every public interface.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClMetricsError {
    #[error("malformed accuracy matrix: {0}")]
    MalformedMatrix(String),
    #[error("backward transfer needs at least two tasks")]
    SingleTask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    /// Row `t` (0-based position `t - 1`) must hold exactly `t` accuracies in
    /// `[0, 1]`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ClMetricsError> {
        if rows.is_empty() {
            return Err(ClMetricsError::MalformedMatrix("no tasks".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            let task = i + 1;
            if row.len() != task {
                return Err(ClMetricsError::MalformedMatrix(format!(
                    "row {task} has {} entries, expected {task}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(ClMetricsError::MalformedMatrix(format!(
                    "row {task} holds {v}, outside [0, 1]"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Parses one row per line, row `t` holding `t` comma-separated values.
    /// Extra cells, including empty padding, are rejected.
    pub fn from_csv(text: &str) -> Result<Self, ClMetricsError> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                line.split(',')
                    .map(|cell| {
                        let cell = cell.trim();
                        if cell.is_empty() {
                            return Err(ClMetricsError::MalformedMatrix(format!(
                                "row {} has an empty cell",
                                i + 1
                            )));
                        }
                        cell.parse::<f64>().map_err(|e| {
                            ClMetricsError::MalformedMatrix(format!("row {}: {e}", i + 1))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows)
    }

    pub fn tasks(&self) -> usize {
        self.rows.len()
    }

    /// `A[t][i]` for `1 <= i <= t <= T`.
    pub fn get(&self, t: usize, i: usize) -> Option<f64> {
        if i == 0 || i > t {
            return None;
        }
        self.rows.get(t.checked_sub(1)?)?.get(i - 1).copied()
    }

    fn at(&self, t: usize, i: usize) -> f64 {
        self.rows[t - 1][i - 1]
    }
}

/// Mean accuracy over all tasks of the model trained through the last task.
pub fn acc_last(a: &AccuracyMatrix) -> f64 {
    let last = &a.rows[a.tasks() - 1];
    last.iter().sum::<f64>() / last.len() as f64
}

/// Backward transfer: mean of `A[i][j] - A[j][j]` over all `j < i`.
///
/// Evaluated by collecting terms: the sum of the strictly lower triangle
/// minus each diagonal entry weighted by the `T - j` later rows that
/// reference it.
pub fn bwt(a: &AccuracyMatrix) -> Result<f64, ClMetricsError> {
    let t = a.tasks();
    if t < 2 {
        return Err(ClMetricsError::SingleTask);
    }
    let lower: f64 = a
        .rows
        .iter()
        .map(|row| row[..row.len() - 1].iter().sum::<f64>())
        .sum();
    let diagonal: f64 = (1..=t).map(|j| (t - j) as f64 * a.at(j, j)).sum();
    let pairs = (t * (t - 1) / 2) as f64;
    Ok((lower - diagonal) / pairs)
}

/// Accuracy drop on the first task: `A[1][1] - A[T][1]`.
pub fn forgetting(a: &AccuracyMatrix) -> f64 {
    a.at(1, 1) - a.at(a.tasks(), 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClReport {
    pub acc_last: f64,
    /// Undefined for a single task.
    pub bwt: Option<f64>,
    pub forgetting: f64,
}

impl ClReport {
    pub fn compute(a: &AccuracyMatrix) -> Self {
        Self {
            acc_last: acc_last(a),
            bwt: bwt(a).ok(),
            forgetting: forgetting(a),
        }
    }
}

impl fmt::Display for ClReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "acc_last={}", self.acc_last)?;
        match self.bwt {
            Some(b) => writeln!(f, "bwt={b}")?,
            None => writeln!(f, "bwt=undefined")?,
        }
        writeln!(f, "forgetting={}", self.forgetting)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> AccuracyMatrix {
        AccuracyMatrix::new(vec![vec![0.9], vec![0.8, 0.85], vec![0.7, 0.75, 0.8]]).unwrap()
    }

    #[test]
    fn single_task() {
        let a = AccuracyMatrix::new(vec![vec![0.9]]).unwrap();
        assert_eq!(acc_last(&a), 0.9);
        assert_eq!(bwt(&a), Err(ClMetricsError::SingleTask));
        assert_eq!(forgetting(&a), 0.0);
    }

    #[test]
    fn worked_three_task_example() {
        let a = worked_example();
        assert!((acc_last(&a) - 0.75).abs() < 1e-15);
        let expected = ((0.8 - 0.9) + (0.7 - 0.9) + (0.75 - 0.85)) / 3.0;
        assert!((bwt(&a).unwrap() - expected).abs() < 1e-15);
        assert!((bwt(&a).unwrap() + 0.4 / 3.0).abs() < 1e-15);
        assert!((forgetting(&a) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_matrix() {
        let rows = (1..=5).map(|t| vec![0.6; t]).collect();
        let a = AccuracyMatrix::new(rows).unwrap();
        assert!((acc_last(&a) - 0.6).abs() < 1e-15);
        assert!(bwt(&a).unwrap().abs() < 1e-15);
        assert_eq!(forgetting(&a), 0.0);
    }

    #[test]
    fn constant_offset_gives_that_offset() {
        let diag = [0.5, 0.6, 0.55, 0.7];
        let rows = (1..=4)
            .map(|t| {
                (1..=t)
                    .map(|i| {
                        if i == t {
                            diag[i - 1]
                        } else {
                            diag[i - 1] + 0.1
                        }
                    })
                    .collect()
            })
            .collect();
        let a = AccuracyMatrix::new(rows).unwrap();
        assert!((bwt(&a).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_parsing() {
        let a = AccuracyMatrix::from_csv("0.9\n0.8,0.85\n0.7,0.75,0.8\n").unwrap();
        assert_eq!(a, worked_example());
        assert_eq!(a.get(3, 2), Some(0.75));
        assert_eq!(a.get(2, 3), None);
        assert_eq!(a.get(0, 0), None);

        for bad in [
            "0.9,\n0.8,0.85\n",
            "0.9,0.1\n0.8,0.85\n",
            "0.9\n0.8\n",
            "0.9\n0.8,1.5\n",
            "0.9\nx,0.1\n",
            "",
        ] {
            assert!(
                matches!(
                    AccuracyMatrix::from_csv(bad),
                    Err(ClMetricsError::MalformedMatrix(_))
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn report_lines() {
        let text = ClReport::compute(&worked_example()).to_string();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "acc_last=0.75");
        assert!(lines[1].starts_with("bwt=-0.13333"));
        assert!(lines[2].starts_with("forgetting=0.2"));
    }
}
