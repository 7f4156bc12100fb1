use std::fmt::Write as _;
use std::path::Path;

use super::config::{DataRef, Task};
use super::runner::RunResult;
use crate::error::Result;
use crate::fsutil::write_atomic;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

pub const FOOTER: &str = "F1 here is selection accuracy: every item has exactly one correct candidate and the model \
                          makes exactly one choice, so micro precision, recall and accuracy coincide.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub csv: String,
    pub text: String,
}

fn csv(results: &[RunResult]) -> String {
    let mut out = String::from("task,train,test,runs,f1_mean,f1_sd\n");
    for r in results {
        for c in &r.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                r.task,
                r.train_spec,
                c.test,
                c.f1_runs.len(),
                c.f1_mean,
                c.f1_sd
            );
        }
    }
    out
}

fn table(task: Task, results: &[&RunResult]) -> String {
    let mut columns: Vec<DataRef> = Vec::new();
    for r in results {
        for c in &r.cells {
            if !columns.contains(&c.test) {
                columns.push(c.test);
            }
        }
    }
    let mut runs: Vec<usize> = results.iter().map(|r| r.seeds.len()).collect();
    runs.dedup();
    let over = match runs.as_slice() {
        [n] => format!("over {n} run{}", if *n == 1 { "" } else { "s" }),
        _ => "over each row's runs".to_string(),
    };

    let mut grid: Vec<Vec<String>> = vec![std::iter::once("train".to_string())
        .chain(columns.iter().map(|c| c.to_string()))
        .collect()];
    for r in results {
        let mut row = vec![r.train_spec.to_string()];
        for col in &columns {
            let cell = match r.cell(col) {
                Some(c) => {
                    let v = format!("{:.3} ({:.3})", c.f1_mean, c.f1_sd);
                    if r.train_spec.matches(col) {
                        format!("[{v}]")
                    } else {
                        format!(" {v} ")
                    }
                }
                None => " - ".to_string(),
            };
            row.push(cell);
        }
        grid.push(row);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|k| {
            grid.iter()
                .map(|row| row[k].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = format!(
        "{task}: mean F1 (sd) {over}; rows train, columns test; [..] marks training-set cells\n"
    );
    for row in &grid {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// A CSV with one line per (train, test) cell and a text table per task,
/// training sets as rows and test sets as columns.
pub fn render_report(results: &[RunResult]) -> Report {
    let mut text = String::new();
    for task in [Task::Sentences, Task::Blm] {
        let rows: Vec<&RunResult> = results.iter().filter(|r| r.task == task).collect();
        if rows.is_empty() {
            continue;
        }
        text.push_str(&table(task, &rows));
        text.push('\n');
    }
    text.push_str(FOOTER);
    text.push('\n');
    Report {
        csv: csv(results),
        text,
    }
}

/// Writes `report.csv` and `report.txt` into `out_dir`.
pub fn export_report(results: &[RunResult], out_dir: &Path) -> Result<Report> {
    let report = render_report(results);
    write_atomic(&out_dir.join(REPORT_CSV), report.csv.as_bytes())?;
    write_atomic(&out_dir.join(REPORT_TXT), report.text.as_bytes())?;
    Ok(report)
}
