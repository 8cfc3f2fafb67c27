//! Point clouds and their on-disk formats.
//!
//! CSV: one point per row, comma separated, no header. JSON:
//! `{"m": 3, "points": [[...], ...]}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` points in `ℝ^m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    m: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates. Every coordinate must be
    /// finite and there must be at least one point.
    pub fn from_flat(m: usize, coords: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("ambient dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(m) {
            return Err(Error::Domain(format!(
                "{} coordinates do not split into rows of {m}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation {
                line: pos / m + 1,
                message: "non-finite coordinate".into(),
            });
        }
        Ok(Self { m, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        let mut coords = Vec::with_capacity(m * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Validation {
                    line: i + 1,
                    message: format!("expected {m} coordinates, found {}", row.len()),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(m, coords)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.m)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Sub-cloud made of the given point indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.m);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(self.m, coords)
    }

    /// Applies `f` to every point, producing a cloud of dimension `m_out`.
    pub fn map_points<F>(&self, m_out: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut coords = vec![0.0; self.len() * m_out];
        for (src, dst) in self.points().zip(coords.chunks_exact_mut(m_out)) {
            f(src, dst);
        }
        Self::from_flat(m_out, coords)
    }
}

#[derive(Serialize, Deserialize)]
struct CloudJson {
    m: usize,
    points: Vec<Vec<f64>>,
}

/// Reads the CSV cloud format. Blank lines are skipped; line numbers in
/// errors are 1-based physical lines.
pub fn read_csv<R: BufRead>(reader: R) -> Result<PointCloud> {
    let mut m = None;
    let mut coords = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in trimmed.split(',') {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number {:?}", field.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::Validation {
                    line: line_no,
                    message: format!("non-finite value {:?}", field.trim()),
                });
            }
            coords.push(value);
            count += 1;
        }
        match m {
            None => m = Some(count),
            Some(expected) if expected != count => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {expected} fields, found {count}"),
                })
            }
            Some(_) => {}
        }
    }
    let m = m.ok_or(Error::EmptyInput)?;
    PointCloud::from_flat(m, coords)
}

/// Reads the JSON cloud format; `m` is declared, not inferred.
pub fn read_json<R: std::io::Read>(reader: R) -> Result<PointCloud> {
    let doc: CloudJson = serde_json::from_reader(reader)?;
    if doc.points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut coords = Vec::with_capacity(doc.m * doc.points.len());
    for (i, p) in doc.points.iter().enumerate() {
        if p.len() != doc.m {
            return Err(Error::Validation {
                line: i + 1,
                message: format!("point has {} coordinates, declared m = {}", p.len(), doc.m),
            });
        }
        coords.extend_from_slice(p);
    }
    PointCloud::from_flat(doc.m, coords)
}

/// Reads either format, choosing JSON when the first non-blank byte is `{`.
pub fn read_cloud<R: BufRead>(mut reader: R) -> Result<PointCloud> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    if text.trim_start().starts_with('{') {
        read_json(text.as_bytes())
    } else {
        read_csv(text.as_bytes())
    }
}

/// Writes the CSV format. `f64`'s `Display` is the shortest representation
/// that parses back to the same bits.
pub fn write_csv<W: Write>(cloud: &PointCloud, mut writer: W) -> Result<()> {
    for p in cloud.points() {
        let mut first = true;
        for x in p {
            if !first {
                writer.write_all(b",")?;
            }
            write!(writer, "{x}")?;
            first = false;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(cloud: &PointCloud, writer: W) -> Result<()> {
    let doc = CloudJson {
        m: cloud.dim(),
        points: cloud.points().map(<[f64]>::to_vec).collect(),
    };
    serde_json::to_writer(writer, &doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_simple_csv() {
        let cloud = read_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.dim(), 2);
        assert_eq!(cloud.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn ragged_csv_reports_line() {
        match read_csv("1,2\n3\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_csv_reports_line() {
        match read_csv("1,2\n3,4\nNaN,1\n".as_bytes()) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_csv("inf,2\n".as_bytes()),
            Err(Error::Validation { line: 1, .. })
        ));
        assert!(matches!(
            read_csv("1,abc\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(read_csv("".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(read_csv("\n\n".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(
            read_json(r#"{"m":2,"points":[]}"#.as_bytes()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn json_dimension_mismatch() {
        let doc = r#"{"m": 3, "points": [[1,2,3],[4,5]]}"#;
        assert!(matches!(
            read_json(doc.as_bytes()),
            Err(Error::Validation { line: 2, .. })
        ));
        let ok = read_cloud(r#"{"m": 2, "points": [[1,2],[4,5]]}"#.as_bytes()).unwrap();
        assert_eq!(ok.len(), 2);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1e300f64..1e300, 3), 1..20)
        ) {
            let cloud = PointCloud::from_rows(&rows).unwrap();
            let mut buf = Vec::new();
            write_csv(&cloud, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, cloud);
        }
    }
}
