//! CSV formats for elasticity tables.
//!
//! Node-based: `node,t,k,r_lo,r_hi,xi_lo,xi_hi`, one row per entry.
//! Class-based: `class,t,k,r_lo,r_hi,xi_lo,xi_hi` plus a `node,class` map.
//! Indices are 0-based.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{ElasticityTable, UncertaintyError, RATIO_TOL};

const TABLE_COLUMNS: [&str; 6] = ["t", "k", "r_lo", "r_hi", "xi_lo", "xi_hi"];

struct Entry {
    t: usize,
    k: usize,
    r: (f64, f64),
    xi: (f64, f64),
    line: u64,
}

fn read_text(path: &Path) -> Result<String, UncertaintyError> {
    std::fs::read_to_string(path).map_err(|source| UncertaintyError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses rows keyed by the first column (`node` or `class`).
fn parse_rows(text: &str, origin: &str, key: &str) -> Result<Vec<(String, Entry)>, UncertaintyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let parse_err = |line: u64, column: usize, msg: String| UncertaintyError::Parse {
        path: origin.to_string(),
        line,
        column,
        msg,
    };
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UncertaintyError::MissingColumn {
                path: origin.to_string(),
                column: name.to_string(),
            })
    };
    let key_col = find(key)?;
    let cols: Vec<usize> = TABLE_COLUMNS.iter().map(|c| find(c)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |c: usize| rec.get(c).unwrap_or("");
        let num = |c: usize| -> Result<f64, UncertaintyError> {
            field(c)
                .parse::<f64>()
                .map_err(|e| parse_err(line, c + 1, format!("`{}`: {e}", field(c))))
        };
        let idx = |c: usize| -> Result<usize, UncertaintyError> {
            field(c)
                .parse::<usize>()
                .map_err(|e| parse_err(line, c + 1, format!("`{}`: {e}", field(c))))
        };
        out.push((
            field(key_col).to_string(),
            Entry {
                t: idx(cols[0])?,
                k: idx(cols[1])?,
                r: (num(cols[2])?, num(cols[3])?),
                xi: (num(cols[4])?, num(cols[5])?),
                line,
            },
        ));
    }
    Ok(out)
}

/// Builds a table from `(node, entry)` rows, checking completeness and that
/// ratio intervals agree across nodes.
fn assemble(origin: &str, rows: Vec<(usize, Entry)>) -> Result<ElasticityTable, UncertaintyError> {
    if rows.is_empty() {
        return Err(UncertaintyError::EmptyTable);
    }
    let n = rows.iter().map(|(i, _)| i + 1).max().unwrap();
    let nt = rows.iter().map(|(_, e)| e.t + 1).max().unwrap();
    let nk = rows.iter().map(|(_, e)| e.k + 1).max().unwrap();
    let mut intervals: Vec<Vec<Option<(f64, f64)>>> = vec![vec![None; nk]; nt];
    let mut lo = vec![vec![vec![f64::NAN; nk]; nt]; n];
    let mut hi = lo.clone();
    let mut seen = vec![vec![vec![false; nk]; nt]; n];
    let invalid = |line: u64, msg: String| UncertaintyError::Parse {
        path: origin.to_string(),
        line,
        column: 1,
        msg,
    };
    for (i, e) in rows {
        if seen[i][e.t][e.k] {
            return Err(invalid(e.line, format!("duplicate entry for node {i}, t {}, k {}", e.t, e.k)));
        }
        seen[i][e.t][e.k] = true;
        match intervals[e.t][e.k] {
            None => intervals[e.t][e.k] = Some(e.r),
            Some(r) if (r.0 - e.r.0).abs() > RATIO_TOL || (r.1 - e.r.1).abs() > RATIO_TOL => {
                return Err(invalid(
                    e.line,
                    format!("ratio interval of t {}, k {} differs from an earlier row", e.t, e.k),
                ));
            }
            Some(_) => {}
        }
        lo[i][e.t][e.k] = e.xi.0;
        hi[i][e.t][e.k] = e.xi.1;
    }
    for i in 0..n {
        for t in 0..nt {
            for k in 0..nk {
                if !seen[i][t][k] {
                    return Err(UncertaintyError::InvalidTable(format!(
                        "{origin}: no entry for node {i}, t {t}, k {k}"
                    )));
                }
            }
        }
    }
    let intervals = intervals
        .into_iter()
        .map(|r| r.into_iter().map(|x| x.unwrap()).collect())
        .collect();
    ElasticityTable::new(intervals, lo, hi)
}

impl ElasticityTable {
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self, UncertaintyError> {
        let rows = parse_rows(text, origin, "node")?;
        let rows = rows
            .into_iter()
            .map(|(key, e)| {
                key.parse::<usize>()
                    .map(|i| (i, e))
                    .map_err(|err| UncertaintyError::Parse {
                        path: origin.to_string(),
                        line: 0,
                        column: 1,
                        msg: format!("node `{key}`: {err}"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        assemble(origin, rows)
    }

    pub fn load_csv(path: &Path) -> Result<Self, UncertaintyError> {
        Self::from_csv_str(&read_text(path)?, &path.display().to_string())
    }

    /// Class-based table plus a `node,class` map.
    pub fn from_class_csv_str(table: &str, table_origin: &str, map: &str, map_origin: &str) -> Result<Self, UncertaintyError> {
        let by_class: Vec<(String, Entry)> = parse_rows(table, table_origin, "class")?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(map.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| UncertaintyError::Parse {
                path: map_origin.into(),
                line: 1,
                column: 1,
                msg: e.to_string(),
            })?
            .clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| UncertaintyError::MissingColumn {
                path: map_origin.to_string(),
                column: name.to_string(),
            })
        };
        let (nc, cc) = (col("node")?, col("class")?);
        let mut node_class: BTreeMap<usize, String> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| UncertaintyError::Parse {
                path: map_origin.into(),
                line: e.position().map_or(0, |p| p.line()),
                column: 1,
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let node = rec.get(nc).unwrap_or("").parse::<usize>().map_err(|e| UncertaintyError::Parse {
                path: map_origin.into(),
                line,
                column: nc + 1,
                msg: e.to_string(),
            })?;
            node_class.insert(node, rec.get(cc).unwrap_or("").to_string());
        }
        let mut classes: HashMap<&str, Vec<&Entry>> = HashMap::new();
        for (c, e) in &by_class {
            classes.entry(c.as_str()).or_default().push(e);
        }
        let mut rows = Vec::new();
        for (&node, class) in &node_class {
            let entries = classes.get(class.as_str()).ok_or_else(|| {
                UncertaintyError::InvalidTable(format!("{map_origin}: node {node} uses unknown class `{class}`"))
            })?;
            for e in entries {
                rows.push((
                    node,
                    Entry {
                        t: e.t,
                        k: e.k,
                        r: e.r,
                        xi: e.xi,
                        line: e.line,
                    },
                ));
            }
        }
        assemble(table_origin, rows)
    }

    pub fn load_class_csv(table: &Path, map: &Path) -> Result<Self, UncertaintyError> {
        Self::from_class_csv_str(
            &read_text(table)?,
            &table.display().to_string(),
            &read_text(map)?,
            &map.display().to_string(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["node", "t", "k", "r_lo", "r_hi", "xi_lo", "xi_hi"]).unwrap();
        for i in 0..self.num_nodes() {
            for t in 0..self.num_periods() {
                for k in 0..self.num_intervals() {
                    let (rl, rh) = self.intervals[t][k];
                    let (xl, xh) = self.bounds(i, t, k);
                    w.write_record([
                        i.to_string(),
                        t.to_string(),
                        k.to_string(),
                        rl.to_string(),
                        rh.to_string(),
                        xl.to_string(),
                        xh.to_string(),
                    ])
                    .unwrap();
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "node,t,k,r_lo,r_hi,xi_lo,xi_hi\n\
        0,0,0,0,1,-0.5,-0.1\n\
        0,0,1,1,4,-0.2,-0.05\n\
        1,0,0,0,1,-0.4,-0.1\n\
        1,0,1,1,4,-0.1,0\n";

    #[test]
    fn reads_node_table() {
        let t = ElasticityTable::from_csv_str(SMALL, "mem").unwrap();
        assert_eq!((t.num_nodes(), t.num_periods(), t.num_intervals()), (2, 1, 2));
        assert_eq!(t.bounds(1, 0, 1), (-0.1, 0.0));
        assert_eq!(t.intervals[0][1], (1.0, 4.0));
    }

    #[test]
    fn csv_round_trip() {
        let t = ElasticityTable::from_csv_str(SMALL, "mem").unwrap();
        let back = ElasticityTable::from_csv_str(&t.to_csv(), "mem").unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "node,t,k,r_lo,r_hi,xi_lo\n0,0,0,0,1,-0.5\n";
        match ElasticityTable::from_csv_str(text, "e.csv") {
            Err(UncertaintyError::MissingColumn { column, .. }) => assert_eq!(column, "xi_hi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line_and_column() {
        let text = "node,t,k,r_lo,r_hi,xi_lo,xi_hi\n0,0,0,0,1,abc,-0.1\n";
        match ElasticityTable::from_csv_str(text, "e.csv") {
            Err(UncertaintyError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 6)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let text = "node,t,k,r_lo,r_hi,xi_lo,xi_hi\n0,0,0,0,1,-0.5,-0.1\n1,0,1,1,2,-0.5,-0.1\n";
        assert!(ElasticityTable::from_csv_str(text, "e.csv").is_err());
    }

    #[test]
    fn class_table_expands_per_node() {
        let table = "class,t,k,r_lo,r_hi,xi_lo,xi_hi\nhigh,0,0,0,2,-0.9,-0.1\nlow,0,0,0,2,-0.2,0\n";
        let map = "node,class\n0,low\n1,high\n2,high\n";
        let t = ElasticityTable::from_class_csv_str(table, "c.csv", map, "m.csv").unwrap();
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.bounds(0, 0, 0), (-0.2, 0.0));
        assert_eq!(t.bounds(2, 0, 0), (-0.9, -0.1));
    }
}
