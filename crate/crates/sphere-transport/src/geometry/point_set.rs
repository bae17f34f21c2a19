//! Quasi-uniform point sets: phyllotaxis generation and file loading.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

/// An ordered, immutable collection of distinct points on the sphere.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<SpherePoint>,
    label: String,
}

impl PointSet {
    /// Build a point set, rejecting duplicates (bitwise-identical
    /// coordinates, i.e. zero pairwise geodesic distance).
    pub fn new(points: Vec<SpherePoint>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { got: 0, min: 1 });
        }
        let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let key = p.xyz().map(f64::to_bits);
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicatePoints { first, second: i });
            }
            seen.insert(key, i);
        }
        Ok(PointSet {
            points,
            label: label.into(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &SpherePoint {
        &self.points[i]
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Nominal fill distance h = N^(-1/2) of a quasi-uniform set.
    pub fn fill_distance(&self) -> f64 {
        (self.points.len() as f64).powf(-0.5)
    }
}

/// Golden angle pi (3 - sqrt 5), the longitude increment of the spiral.
pub const GOLDEN_ANGLE: f64 = 2.399963229728653;

/// Generate `n` phyllotaxis-spiral (PTS) points.
///
/// Point i gets z_i = -1 + 2i/(n-1) with the two endpoints nudged inward
/// by 1/(2n) to avoid the exact poles, and longitude i * golden angle
/// wrapped to [-pi, pi]. The result is quasi-uniform with fill distance
/// close to N^(-1/2).
pub fn generate_phyllotaxis(n: usize) -> Result<PointSet> {
    if n < 4 {
        return Err(Error::TooFewPoints { got: n, min: 4 });
    }
    let nudge = 1.0 / (2.0 * n as f64);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        if i == 0 {
            z += nudge;
        } else if i == n - 1 {
            z -= nudge;
        }
        let lambda = wrap_longitude(i as f64 * GOLDEN_ANGLE);
        let theta = z.asin();
        points.push(SpherePoint::from_angles(lambda, theta)?);
    }
    PointSet::new(points, "PTS")
}

/// Wrap an angle to [-pi, pi].
pub(crate) fn wrap_longitude(l: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = (l + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
    if w < -std::f64::consts::PI {
        w = -std::f64::consts::PI;
    }
    w
}

/// On-disk text format of a point file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    /// Three whitespace-separated columns x y z per row.
    PlainXyz,
    /// Two columns: longitude latitude, in radians.
    PlainLonLat,
}

impl PointFormat {
    fn columns(self) -> usize {
        match self {
            PointFormat::PlainXyz => 3,
            PointFormat::PlainLonLat => 2,
        }
    }
}

/// Load a point set from a whitespace-separated text file.
///
/// Lines starting with `#` and blank lines are skipped. Rows must be unit
/// vectors within 1e-6 before re-normalization (for lon/lat rows this is
/// automatic). The set label is the file name stem.
pub fn load_point_set(path: impl AsRef<Path>, format: PointFormat) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "points".to_string());

    let mut points = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != format.columns() {
            return Err(Error::PointFileFormat {
                path: path.to_path_buf(),
                line: line_no,
                message: format!(
                    "expected {} columns, found {}",
                    format.columns(),
                    fields.len()
                ),
            });
        }
        let mut values = [0.0f64; 3];
        for (k, field) in fields.iter().enumerate() {
            values[k] = field.parse().map_err(|_| Error::PointFileFormat {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("cannot parse `{field}` as a number"),
            })?;
        }
        let point = match format {
            PointFormat::PlainXyz => {
                let n = (values[0] * values[0] + values[1] * values[1] + values[2] * values[2])
                    .sqrt();
                if (n - 1.0).abs() > 1e-6 {
                    return Err(Error::PointFileData {
                        path: path.to_path_buf(),
                        line: line_no,
                        norm: n,
                    });
                }
                SpherePoint::from_xyz([values[0] / n, values[1] / n, values[2] / n])
            }
            PointFormat::PlainLonLat => SpherePoint::from_angles(values[0], values[1]),
        };
        points.push(point.map_err(|e| Error::PointFileFormat {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?);
    }
    if points.is_empty() {
        return Err(Error::PointFileFormat {
            path: path.to_path_buf(),
            line: 0,
            message: "file contains no points".to_string(),
        });
    }
    PointSet::new(points, label)
}

/// Write a point set in one of the text formats understood by
/// [`load_point_set`].
pub fn save_point_set(ps: &PointSet, path: impl AsRef<Path>, format: PointFormat) -> Result<()> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut out = String::with_capacity(ps.len() * 60);
    for p in ps.points() {
        match format {
            PointFormat::PlainXyz => {
                let [x, y, z] = p.xyz();
                writeln!(out, "{x:.17e} {y:.17e} {z:.17e}").unwrap();
            }
            PointFormat::PlainLonLat => {
                writeln!(out, "{:.17e} {:.17e}", p.lambda(), p.theta()).unwrap();
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
