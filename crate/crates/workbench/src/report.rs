//! Report writers: metric tables as TSV and the λ2 curve as CSV.

use case_core::baselines::Lambda2Sweep;
use case_core::eval::{EvalReport, Metrics};

use crate::stats::paired_t_test;
use crate::{Error, Result};

/// Note written into every metric table.
pub const AVERAGING_NOTE: &str = "averaging=macro over (sentence, seed) samples";

fn header(cutoffs: &[usize]) -> String {
    let mut cols = vec!["system".to_string()];
    for k in cutoffs {
        cols.extend(Metrics::NAMES.iter().map(|m| format!("{m}@{k}")));
    }
    cols.join("\t")
}

/// One row per system, one column per metric and cutoff. `meta` lines
/// become `#` comments above the table.
pub fn metrics_tsv(rows: &[(&str, &EvalReport)], meta: &[String]) -> Result<String> {
    let first = rows.first().ok_or_else(|| Error::Experiment("no systems to report".into()))?.1;
    let mut out = String::new();
    for m in meta {
        out.push_str(&format!("# {m}\n"));
    }
    out.push_str(&format!("# {AVERAGING_NOTE}\n# samples={}\n", first.count()));
    out.push_str(&header(&first.cutoffs));
    out.push('\n');
    for (name, r) in rows {
        if r.cutoffs != first.cutoffs || r.count() != first.count() {
            return Err(Error::Experiment(format!("system `{name}` was evaluated differently from `{}`", rows[0].0)));
        }
        out.push_str(name);
        for m in &r.means {
            for v in m.values() {
                out.push_str(&format!("\t{v:.6}"));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// [`metrics_tsv`] plus, for every row after the first, a paired t-test
/// of Recall@`k` against the first row.
pub fn comparison_tsv(rows: &[(&str, &EvalReport)], k: usize, meta: &[String]) -> Result<String> {
    let table = metrics_tsv(rows, meta)?;
    let base = rows[0].1.per_sample(k, 0).ok_or_else(|| Error::Experiment(format!("cutoff {k} was not evaluated")))?;
    let mut out = String::new();
    let mut row = 0;
    for line in table.lines() {
        out.push_str(line);
        if line.starts_with('#') {
            out.push('\n');
        } else if row == 0 && line.starts_with("system\t") {
            out.push_str(&format!("\tt_recall@{k}\tp_recall@{k}\n"));
            row = 1;
        } else if row == 1 {
            out.push_str("\t-\t-\n");
            row += 1;
        } else {
            let r = rows[row - 1].1;
            let t = paired_t_test(&r.per_sample(k, 0).expect("same cutoffs"), &base)?;
            out.push_str(&format!("\t{:.4}\t{:.3e}\n", t.t, t.p));
            row += 1;
        }
    }
    Ok(out)
}

/// `lambda2,recall@k` lines in grid order.
pub fn lambda2_csv(sweep: &Lambda2Sweep, cutoff: usize) -> String {
    let mut out = format!("lambda2,recall@{cutoff}\n");
    for (l, r) in &sweep.curve {
        out.push_str(&format!("{l},{r:.6}\n"));
    }
    out
}
