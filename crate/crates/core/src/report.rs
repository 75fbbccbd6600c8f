//! CSV output with a leading `#` provenance line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv<I, R>(path: &Path, provenance: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = BufWriter::new(File::create(path)?);
    if !provenance.is_empty() {
        writeln!(out, "# {provenance}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 6.0300000001, 1e-17, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn writes_provenance_then_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, "tool v1 --seed 3", &["a", "b"], [vec!["1", "x,y"]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# tool v1 --seed 3\na,b\n1,\"x,y\"\n");
    }
}
