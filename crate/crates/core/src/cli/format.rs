//! Output formats: the `SLB1` binary array container and CSV diagnostics.
//!
//! An `SLB1` file starts with the magic line `SLB1\n`.  Each record is one
//! UTF-8 JSON header line
//! `{"name":…,"shape":[…],"dtype":"c128"|"f64","order":"row-major"}`
//! followed by exactly `prod(shape)·sizeof(dtype)` little-endian bytes
//! (complex values as interleaved real/imaginary `f64` pairs).

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::grid::C64;

/// Magic first line of an `SLB1` file (without the newline).
pub const MAGIC: &str = "SLB1";

/// Array payload of one record.
#[derive(Debug, Clone, PartialEq)]
pub enum Array {
    /// Real values.
    F64(Vec<f64>),
    /// Complex values.
    C128(Vec<C64>),
}

impl Array {
    fn dtype(&self) -> &'static str {
        match self {
            Array::F64(_) => "f64",
            Array::C128(_) => "c128",
        }
    }

    fn len(&self) -> usize {
        match self {
            Array::F64(v) => v.len(),
            Array::C128(v) => v.len(),
        }
    }
}

/// One named, shaped array.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Record name.
    pub name: String,
    /// Shape (row-major).
    pub shape: Vec<usize>,
    /// Values.
    pub data: Array,
}

impl Record {
    /// Real record; `data.len()` must equal the product of `shape`.
    pub fn f64(name: &str, shape: &[usize], data: Vec<f64>) -> Self {
        Self { name: name.to_string(), shape: shape.to_vec(), data: Array::F64(data) }
    }

    /// Complex record; `data.len()` must equal the product of `shape`.
    pub fn c128(name: &str, shape: &[usize], data: Vec<C64>) -> Self {
        Self { name: name.to_string(), shape: shape.to_vec(), data: Array::C128(data) }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    order: String,
}

/// A malformed `SLB1` stream, located by byte offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    /// Offset of the first offending byte.
    pub offset: usize,
    /// What was wrong.
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SLB1 at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for FormatError {}

/// Serializes `records` into an `SLB1` byte stream.
///
/// # Panics
/// If a record's length disagrees with its shape.
pub fn write_slb1<W: Write>(out: &mut W, records: &[Record]) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    for r in records {
        let count: usize = r.shape.iter().product();
        assert_eq!(count, r.data.len(), "record '{}' has {} values for shape {:?}", r.name, r.data.len(), r.shape);
        let header = Header {
            name: r.name.clone(),
            shape: r.shape.clone(),
            dtype: r.data.dtype().to_string(),
            order: "row-major".to_string(),
        };
        let line = serde_json::to_string(&header).expect("header serializes");
        writeln!(out, "{line}")?;
        let mut bytes = Vec::with_capacity(count * 16);
        match &r.data {
            Array::F64(v) => v.iter().for_each(|x| bytes.extend_from_slice(&x.to_le_bytes())),
            Array::C128(v) => v.iter().for_each(|z| {
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out.write_all(&bytes)?;
    }
    Ok(())
}

/// Parses an `SLB1` byte stream.
pub fn read_slb1(bytes: &[u8]) -> Result<Vec<Record>, FormatError> {
    let err = |offset: usize, message: String| FormatError { offset, message };
    let magic = format!("{MAGIC}\n");
    if !bytes.starts_with(magic.as_bytes()) {
        return Err(err(0, "missing SLB1 magic line".into()));
    }
    let mut pos = magic.len();
    let mut records = Vec::new();
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| err(pos, "record header is not terminated by a newline".into()))?;
        let text = std::str::from_utf8(&bytes[pos..end]).map_err(|e| err(pos, format!("header is not UTF-8: {e}")))?;
        let header: Header = serde_json::from_str(text).map_err(|e| err(pos, format!("bad record header: {e}")))?;
        if header.order != "row-major" {
            return Err(err(pos, format!("unsupported order '{}'", header.order)));
        }
        let size = match header.dtype.as_str() {
            "f64" => 8,
            "c128" => 16,
            other => return Err(err(pos, format!("unsupported dtype '{other}'"))),
        };
        let count = header
            .shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|c| c.checked_mul(size))
            .ok_or_else(|| err(pos, "record size overflows".into()))?;
        let start = end + 1;
        if bytes.len() - start < count {
            return Err(err(
                bytes.len(),
                format!("record '{}' truncated: expected {count} data bytes from offset {start}, found {}", header.name, bytes.len() - start),
            ));
        }
        let payload = &bytes[start..start + count];
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let data = if size == 8 {
            Array::F64(payload.chunks_exact(8).map(f).collect())
        } else {
            Array::C128(payload.chunks_exact(16).map(|c| C64::new(f(&c[..8]), f(&c[8..]))).collect())
        };
        records.push(Record { name: header.name, shape: header.shape, data });
        pos = start + count;
    }
    Ok(records)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a header row; cells never need quoting.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// Empty table with the given column names.
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row.
    ///
    /// # Panics
    /// If the row length differs from the header, or a cell contains a
    /// comma, quote or line break.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        assert!(
            row.iter().all(|c| !c.contains([',', '"', '\n', '\r'])),
            "CSV cell needs quoting: {row:?}"
        );
        self.rows.push(row);
    }

    /// Number of data rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether there are no data rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV text with a trailing newline.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Record> {
        vec![
            Record::f64("eta", &[2, 3], vec![0.0, -1.5, 2.25, f64::MIN_POSITIVE, 1e300, -0.0]),
            Record::c128("coeffs", &[2], vec![C64::new(1.0, -2.0), C64::new(0.1, 0.3)]),
            Record::f64("empty", &[0, 4], vec![]),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut buf = Vec::new();
        write_slb1(&mut buf, &sample()).unwrap();
        assert!(buf.starts_with(b"SLB1\n{\"name\":\"eta\",\"shape\":[2,3],\"dtype\":\"f64\",\"order\":\"row-major\"}\n"));
        let back = read_slb1(&buf).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back, sample());
        match &back[0].data {
            Array::F64(v) => assert!(v[5].is_sign_negative()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn byte_layout_is_little_endian() {
        let mut buf = Vec::new();
        write_slb1(&mut buf, &[Record::f64("x", &[1], vec![1.0])]).unwrap();
        let tail = &buf[buf.len() - 8..];
        assert_eq!(tail, &1.0f64.to_le_bytes());
        let header_len = buf.len() - 8 - 5;
        assert_eq!(buf[5 + header_len - 1], b'\n');
    }

    #[test]
    fn truncation_is_located() {
        let mut buf = Vec::new();
        write_slb1(&mut buf, &sample()[..2]).unwrap();
        let cut = &buf[..buf.len() - 10];
        let e = read_slb1(cut).unwrap_err();
        assert_eq!(e.offset, cut.len());
        assert!(e.to_string().contains("'coeffs' truncated"), "{e}");
        // a cut inside a header is reported at the header start
        let mut buf = Vec::new();
        write_slb1(&mut buf, &sample()).unwrap();
        let e = read_slb1(&buf[..buf.len() - 20]).unwrap_err();
        assert!(e.message.contains("not terminated"), "{e}");
    }

    #[test]
    fn malformed_streams_are_rejected() {
        assert_eq!(read_slb1(b"SLB2\n").unwrap_err().offset, 0);
        assert_eq!(read_slb1(b"SLB1\n{\"name\":\"a\"").unwrap_err().offset, 5);
        assert_eq!(read_slb1(b"SLB1\nnot json\n").unwrap_err().offset, 5);
        let e = read_slb1(b"SLB1\n{\"name\":\"a\",\"shape\":[1],\"dtype\":\"i32\",\"order\":\"row-major\"}\n\0\0\0\0").unwrap_err();
        assert!(e.message.contains("i32"));
        assert!(read_slb1(b"SLB1\n").unwrap().is_empty());
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![fmt_f64(0.1), fmt_f64(-3.0)]);
        assert_eq!(t.to_csv(), "a,b\n1.0000000000000001e-1,-3.0000000000000000e0\n");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    #[should_panic(expected = "quoting")]
    fn csv_cells_never_need_quoting() {
        Table::new(&["a"]).push(vec!["x,y".into()]);
    }
}
