//! Output formats: solution files, CSV tables and summaries, written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use petviashvili::iteration::IterationTrace;
use petviashvili::{Field, Mesh};

use crate::error::CliError;

pub const TRACE_HEADER: [&str; 12] = [
    "step",
    "M",
    "abs_M_minus_1",
    "h1_norm",
    "lp1_norm",
    "diff_h1",
    "E1",
    "EM",
    "slack_Mgrowth",
    "slack_revSob",
    "slack_Mgrowth2",
    "slack_Mmonotone",
];

pub const SPECTRUM_HEADER: [&str; 3] = ["index", "eigenvalue", "residual"];

/// Shortest round-trip decimal for moderate magnitudes, exponent form
/// otherwise. `inf`/`-inf`/`NaN` are written as such.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Write through a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()
    };
    write().map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// An output directory; every file is written atomically inside it.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let bytes = table.to_bytes().map_err(|e| CliError::io(&path, e))?;
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> std::io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// One row per iterate; the last row has empty difference and slack cells.
pub fn trace_table(trace: &IterationTrace) -> Table {
    let slacks = trace.slacks();
    let mut t = Table::new(&TRACE_HEADER);
    for (n, s) in trace.states.iter().enumerate() {
        let mut row = vec![
            n.to_string(),
            fmt_float(s.m),
            fmt_float((s.m - 1.0).abs()),
            fmt_float(s.h1_norm),
            fmt_float(s.lp1_norm),
            trace.diffs.get(n).map_or(String::new(), |&d| fmt_float(d)),
            fmt_float(s.energy),
            fmt_float(s.modified_energy),
        ];
        match slacks.get(n) {
            Some(sl) => row.extend(sl.iter().map(|&v| fmt_float(v))),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        t.push(row);
    }
    t
}

/// `# kind=<Kind> n=<nodes>` then `<x> [<y>] <value>` for every node,
/// Dirichlet nodes included with value 0.
pub fn solution_text(mesh: &Mesh, field: &Field) -> String {
    let nodal = mesh.expand(field);
    let mut out = format!("# kind={} n={}\n", mesh.kind().name(), mesh.n_nodes());
    for (i, v) in nodal.iter().enumerate() {
        for c in mesh.node(i) {
            out.push_str(&fmt_float(*c));
            out.push(' ');
        }
        out.push_str(&fmt_float(*v));
        out.push('\n');
    }
    out
}

/// Last column of every non-comment line of a solution file. On failure
/// returns the 1-based line number.
pub fn parse_solution_values(text: &str) -> Result<Vec<f64>, usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            l.split_whitespace()
                .last()
                .and_then(|v| v.parse().ok())
                .ok_or(i + 1)
        })
        .collect()
}

/// `key = value` summary lines.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.add(key, fmt_float(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.5), "1.5");
        assert_eq!(fmt_float(1e-12), "1e-12");
        assert_eq!(fmt_float(-2.5e7), "-2.5e7");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        for v in [1.234567890123e-9, 0.1 + 0.2, 3.3e100] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn solution_round_trip() {
        let mesh = Mesh::interval(-1.0, 1.0, 4).unwrap();
        let field = Field::new(vec![0.25, 1.0, 0.5]);
        let text = solution_text(&mesh, &field);
        assert!(text.starts_with("# kind=Interval n=5\n"));
        assert_eq!(text.lines().nth(1).unwrap(), "-1 0");
        let values = parse_solution_values(&text).unwrap();
        assert_eq!(values, vec![0.0, 0.25, 1.0, 0.5, 0.0]);
        assert_eq!(parse_solution_values("# c\n1 x\n"), Err(2));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(&dir.path().join("nested")).unwrap();
        out.write("a.txt", "one").unwrap();
        out.write("a.txt", "two").unwrap();
        assert_eq!(fs::read_to_string(out.path("a.txt")).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path().join("nested")).unwrap().count(), 1);
    }

    #[test]
    fn csv_header_and_quoting() {
        let mut t = Table::new(&SPECTRUM_HEADER);
        t.push(vec!["0".into(), "3".into(), "1e-12".into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "index,eigenvalue,residual\n0,3,1e-12\n");
    }
}
