//! JSON and CSV emission. Floats are written with 17 significant digits so
//! every value round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON formatter that prints every float as `{:.16e}`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

fn write_float<W: ?Sized + io::Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{}", format_f64(v))
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, f64::from(v))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("reports serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Top-level wrapper of every JSON output.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a C,
    pub report: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, report: &'a R) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            config,
            report,
        }
    }
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

pub enum Cell<'a> {
    Int(u64),
    Float(f64),
    Text(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").expect("writing to a String"),
                Cell::Float(v) if v.is_finite() => self.text.push_str(&format_f64(*v)),
                Cell::Float(_) => {}
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes `contents` to `dir/name`, refusing to replace an existing file
/// unless `force` is set.
pub fn write_output(dir: &Path, name: &str, contents: &str, force: bool) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.exists() && !force {
        return Err(Error::InvalidInput(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.display())))?;
    fs::write(&path, contents)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(path)
}
