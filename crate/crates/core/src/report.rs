//! Deterministic JSON and CSV output.
//!
//! JSON objects are written with sorted keys and every float in `{:.16e}`
//! form (17 significant digits), so identical inputs give identical bytes.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::deloc::DelocalizationReport;

/// Pretty formatter that prints floats with 17 significant digits.
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Canonical JSON text of `value`: sorted keys, fixed float format,
/// two-space indentation, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // the map behind `Value` is ordered by key
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    tree.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Single-line variant of [`to_canonical_json`].
pub fn to_canonical_json_line<T: Serialize>(value: &T) -> serde_json::Result<String> {
    struct Line;
    impl Formatter for Line {
        fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
            write!(w, "{value:.16e}")
        }
    }
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Line);
    tree.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub const CSV_COLUMNS: [&str; 11] = [
    "j",
    "lambda",
    "tempered",
    "mass_target",
    "E_min",
    "delta",
    "bound",
    "lhs5",
    "rhs5",
    "lhs8",
    "pass",
];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// One CSV row per eigenfunction. `lhs5` is `|<K f, f>|`, `rhs5` is
/// `||K||_{1->inf} |E|`, `lhs8` is `<K f, f>`.
pub fn write_csv<W: Write>(report: &DelocalizationReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in &report.rows {
        w.write_record([
            row.j.to_string(),
            float(row.lambda),
            row.tempered.to_string(),
            float(row.mass_target),
            row.e_min.to_string(),
            opt_float(row.delta),
            opt_float(row.bound),
            float(row.chain.lhs.abs()),
            float(row.chain.rhs5),
            float(row.chain.lhs),
            row.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
