//! Plain-text field dumps and atomic output files.
//!
//! A dump is three header lines (`nx`, `ny`, `lx ly`) followed by `ny` rows
//! of `nx` values, bottom row first, each printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_field(field: &ScalarField) -> String {
    let g = field.grid();
    let mut s = format!(
        "{}\n{}\n{} {}\n",
        g.nx(),
        g.ny(),
        fmt_f64(g.lx()),
        fmt_f64(g.ly())
    );
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&fmt_f64(field.get(i, j)));
        }
        s.push('\n');
    }
    s
}

pub fn parse_field(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let mut header = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("field dump ends before the {what} header line")))
    };
    let nx = parse_usize(header("nx")?.trim(), "nx")?;
    let ny = parse_usize(header("ny")?.trim(), "ny")?;
    let dims: Vec<&str> = header("lx ly")?.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse("third header line must hold `lx ly`".into()));
    }
    let grid = Grid::new(nx, ny, parse_f64(dims[0])?, parse_f64(dims[1])?)?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid, values)
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {what} header `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    parse_field(&fs::read_to_string(path)?)
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    write_atomic(path, &format_field(field))
}

/// Writes through a sibling temporary file and a rename, so readers never
/// observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Minimal CSV writer; text cells are quoted only when they need it.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            buf: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.width, "csv row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match c {
                Cell::Num(v) => self.buf.push_str(&fmt_f64(*v)),
                Cell::Opt(Some(v)) => self.buf.push_str(&fmt_f64(*v)),
                Cell::Opt(None) => {}
                Cell::Int(v) => write!(self.buf, "{v}").unwrap(),
                Cell::Bool(v) => write!(self.buf, "{v}").unwrap(),
                Cell::Text(t) if t.contains([',', '"', '\n']) => {
                    write!(self.buf, "\"{}\"", t.replace('"', "\"\"")).unwrap()
                }
                Cell::Text(t) => self.buf.push_str(t),
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub enum Cell<'a> {
    Num(f64),
    Opt(Option<f64>),
    Int(u64),
    Bool(bool),
    Text(&'a str),
}
