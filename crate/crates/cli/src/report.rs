//! Report JSON and plot CSVs.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use entrance_core::error::{LabError, Result};
use entrance_core::stats::{CdfTable, TestVerdict};
use entrance_core::walk::dump::fmt17;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub verdicts: Vec<TestVerdict>,
    pub runtime_ms: u64,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.verdicts.iter().all(TestVerdict::ok)
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Fmt17(PrettyFormatter<'static>);

impl Formatter for Fmt17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt17(v).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fmt17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("reports serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> LabError + '_ {
    move |e| LabError::config("--out", format!("cannot write {}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

/// File name for a plot table: its name with non-alphanumerics replaced.
pub fn table_file(table: &CdfTable) -> String {
    let stem: String = table.name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("{stem}.csv")
}

pub fn write_tables(dir: &Path, tables: &[CdfTable]) -> Result<()> {
    for t in tables {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        write_file(&dir.join(table_file(t)), &buf)?;
    }
    Ok(())
}
