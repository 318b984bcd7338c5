//! CSV and JSON writers with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes finite floats as `d.dddddddddddddddde±x` (17 significant digits).
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", float(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Text form used by every data file.
pub fn float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(&to_json(value)?, path)
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// One sample of a field on the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x1: f64,
    pub cross_index: usize,
    pub value: f64,
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut s = String::from("x1,cross_index,value\n");
    for r in rows {
        writeln!(s, "{},{},{}", float(r.x1), r.cross_index, float(r.value)).unwrap();
    }
    s
}

pub fn decay_csv(norms: &[(usize, f64)]) -> String {
    let mut s = String::from("n,window_norm\n");
    for &(n, v) in norms {
        writeln!(s, "{n},{}", float(v)).unwrap();
    }
    s
}

pub fn write_profile(rows: &[ProfileRow], path: &Path) -> Result<()> {
    write_text(&profile_csv(rows), path)
}

pub fn write_decay(norms: &[(usize, f64)], path: &Path) -> Result<()> {
    write_text(&decay_csv(norms), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_have_headers_only() {
        assert_eq!(profile_csv(&[]), "x1,cross_index,value\n");
        assert_eq!(decay_csv(&[]), "n,window_norm\n");
    }

    #[test]
    fn floats_keep_seventeen_digits_and_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 7.0, f64::MIN_POSITIVE, 0.0] {
            let text = float(v);
            let mantissa = text.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{text}");
            assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        let json = to_json(&vec![0.1, 1.0 / 3.0]).unwrap();
        assert_eq!(json, "[1.0000000000000001e-1,3.3333333333333331e-1]\n");
        let back: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn profile_rows_are_written_in_order() {
        let rows =
            [ProfileRow { x1: -0.5, cross_index: 0, value: 1.0 }, ProfileRow { x1: 0.5, cross_index: 1, value: 2.0 }];
        let csv = profile_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "-5.0000000000000000e-1,0,1.0000000000000000e0");
    }
}
