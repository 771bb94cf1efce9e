//! Free-format MPS export and solution-file parsing for external solvers.

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use super::backend::{LinearProblem, RawSolution, RawStatus, SolverBackend};
use super::{ModelError, SolverOptions};

pub fn col_name(j: usize) -> String {
    format!("C{j}")
}

pub fn row_name(i: usize) -> String {
    format!("R{i}")
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Renders the problem as free MPS. The objective offset is not written;
/// callers add it back when reading a solution.
pub fn write_mps(lp: &LinearProblem) -> String {
    let mut out = String::new();
    out.push_str("NAME ddu_vpp\n");
    if lp.maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n N OBJ\n");
    let mut ranges = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..lp.num_rows() {
        let (lo, hi) = (lp.row_lo[i], lp.row_hi[i]);
        let kind = if lo == hi {
            rhs.push((i, lo));
            "E"
        } else if lo == f64::NEG_INFINITY {
            rhs.push((i, if hi.is_finite() { hi } else { 1e30 }));
            "L"
        } else {
            rhs.push((i, lo));
            if hi.is_finite() {
                ranges.push((i, hi - lo));
            }
            "G"
        };
        let _ = writeln!(out, " {kind} {}", row_name(i));
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_cols()];
    for i in 0..lp.num_rows() {
        for (j, a) in lp.row(i) {
            cols[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, entries) in cols.iter().enumerate() {
        if lp.integer[j] != in_int {
            in_int = lp.integer[j];
            let marker = if in_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER 'MARKER' {marker}");
        }
        let name = col_name(j);
        let _ = writeln!(out, "    {name} OBJ {}", num(lp.cost[j]));
        for &(i, a) in entries {
            let _ = writeln!(out, "    {name} {} {}", row_name(i), num(a));
        }
    }
    if in_int {
        out.push_str("    MARKER 'MARKER' 'INTEND'\n");
    }
    out.push_str("RHS\n");
    for (i, v) in rhs {
        if v != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", row_name(i), num(v));
        }
    }
    if !ranges.is_empty() {
        out.push_str("RANGES\n");
        for (i, r) in ranges {
            let _ = writeln!(out, "    RNG {} {}", row_name(i), num(r));
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_cols() {
        let (lo, hi) = (lp.col_lo[j], lp.col_hi[j]);
        let name = col_name(j);
        if lo == hi {
            let _ = writeln!(out, " FX BND {name} {}", num(lo));
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {name}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {name}");
                let _ = writeln!(out, " UP BND {name} {}", num(hi));
            }
            (true, hi_finite) => {
                let _ = writeln!(out, " LO BND {name} {}", num(lo));
                if hi_finite {
                    let _ = writeln!(out, " UP BND {name} {}", num(hi));
                } else if lp.integer[j] {
                    let _ = writeln!(out, " PL BND {name}");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn parse_status(s: &str) -> RawStatus {
    let s = s.to_ascii_lowercase();
    if s.contains("infeasible") && !s.contains("unbounded") {
        RawStatus::Infeasible
    } else if s.contains("unbounded") {
        RawStatus::Unbounded
    } else if s.contains("optimal") {
        RawStatus::Optimal
    } else if s.contains("limit") || s.contains("stopped") {
        RawStatus::Limit
    } else {
        RawStatus::Error
    }
}

fn name_index(name: &str, prefix: char) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

/// Reads a solution file in HiGHS's raw text format or CBC's
/// `status - objective value X` format.
pub fn parse_solution(text: &str, num_cols: usize, num_rows: usize) -> Result<RawSolution, ModelError> {
    let bad = |m: &str| ModelError::SolutionParse(m.to_string());
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    let first = lines.iter().find(|l| !l.is_empty()).copied().unwrap_or("");

    if first.eq_ignore_ascii_case("model status") {
        let status_line = lines
            .iter()
            .skip_while(|l| !l.eq_ignore_ascii_case("model status"))
            .nth(1)
            .ok_or_else(|| bad("missing model status"))?;
        let status = parse_status(status_line);
        if status != RawStatus::Optimal {
            return Ok(RawSolution::without_solution(status));
        }
        let mut col_value = vec![0.0; num_cols];
        let mut row_dual: Option<Vec<f64>> = None;
        let mut objective = f64::NAN;
        let mut section = "";
        let mut block = "";
        for l in &lines {
            if l.starts_with("# Primal solution") {
                section = "primal";
                continue;
            }
            if l.starts_with("# Dual solution") {
                section = "dual";
                continue;
            }
            if l.starts_with("# Basis") {
                section = "";
                continue;
            }
            if l.starts_with("# Columns") {
                block = "cols";
                continue;
            }
            if l.starts_with("# Rows") {
                block = "rows";
                continue;
            }
            if let Some(v) = l.strip_prefix("Objective ") {
                objective = v.trim().parse().map_err(|_| bad("objective value"))?;
                continue;
            }
            let mut it = l.split_whitespace();
            let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
                continue;
            };
            let Ok(val) = val.parse::<f64>() else { continue };
            match (section, block) {
                ("primal", "cols") => {
                    if let Some(j) = name_index(name, 'C').filter(|&j| j < num_cols) {
                        col_value[j] = val;
                    }
                }
                ("dual", "rows") => {
                    if let Some(i) = name_index(name, 'R').filter(|&i| i < num_rows) {
                        row_dual.get_or_insert_with(|| vec![0.0; num_rows])[i] = val;
                    }
                }
                _ => {}
            }
        }
        return Ok(RawSolution {
            status,
            objective,
            col_value,
            row_dual,
            mip_gap: 0.0,
        });
    }

    // CBC: "Optimal - objective value 3.00000000", then "idx name value rc".
    let status = parse_status(first);
    if status != RawStatus::Optimal {
        return Ok(RawSolution::without_solution(status));
    }
    let objective = first
        .rsplit(' ')
        .next()
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN);
    let mut col_value = vec![0.0; num_cols];
    for l in lines.iter().skip(1) {
        let toks: Vec<&str> = l.split_whitespace().filter(|t| *t != "**").collect();
        if toks.len() >= 3 {
            if let (Some(j), Ok(v)) = (name_index(toks[1], 'C'), toks[2].parse::<f64>()) {
                if j < num_cols {
                    col_value[j] = v;
                }
            }
        }
    }
    Ok(RawSolution {
        status,
        objective,
        col_value,
        row_dual: None,
        mip_gap: 0.0,
    })
}

/// Runs an external solver binary on an MPS export.
#[derive(Clone, Debug)]
pub struct ExternalMpsBackend {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalMpsBackend {
    fn run_in(&self, dir: &Path, lp: &LinearProblem) -> Result<RawSolution, ModelError> {
        let model = dir.join("model.mps");
        let solution = dir.join("model.sol");
        std::fs::write(&model, write_mps(lp))?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{model}", &model.to_string_lossy())
                    .replace("{solution}", &solution.to_string_lossy())
            })
            .collect();
        let out = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| ModelError::BackendUnavailable(format!("{}: {e}", self.program)))?;
        if !out.status.success() && !solution.exists() {
            return Err(ModelError::Backend(format!(
                "{} exited with {}",
                self.program, out.status
            )));
        }
        let text = std::fs::read_to_string(&solution)?;
        let mut sol = parse_solution(&text, lp.num_cols(), lp.num_rows())?;
        sol.objective += lp.offset;
        Ok(sol)
    }
}

impl SolverBackend for ExternalMpsBackend {
    fn name(&self) -> &str {
        &self.program
    }

    fn solve(&self, lp: &LinearProblem, _options: &SolverOptions) -> Result<RawSolution, ModelError> {
        let dir = tempfile::tempdir()?;
        self.run_in(dir.path(), lp)
    }
}
