//! Run-off triangles: storage, masking, incremental/cumulative conversion and
//! CSV ingestion.
//!
//! Indices are zero-based throughout. Row `i` is the accident year, column `j`
//! the development delay; the observed upper triangle is `i + j < n`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriangleError {
    #[error("cell ({row}, {col}) lies outside the observed upper triangle of a size-{n} triangle")]
    Mask { row: usize, col: usize, n: usize },
    #[error("operation requires a full square, got an upper triangle")]
    NotFull,
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("cumulative row {row} decreases at column {col}")]
    Decreasing { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Incremental,
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mask {
    UpperOnly,
    Full,
}

/// Sum of all row ultimates, `Σ_i C_{i,n}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UltimateClaim(pub f64);

impl UltimateClaim {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Quantity a reserving study predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Observed upper triangle plus every lower cell.
    #[default]
    UltimateClaim,
    /// Only the next calendar diagonal (`i + j == n`), excluding the observed part.
    NextYearPayments,
}

impl Target {
    /// Whether a lower-triangle cell contributes to this target.
    #[inline]
    pub fn includes(self, n: usize, i: usize, j: usize) -> bool {
        match self {
            Target::UltimateClaim => i + j >= n,
            Target::NextYearPayments => i + j == n,
        }
    }

    /// The part of the target already known from the upper triangle.
    pub fn observed_part(self, upper: &Triangle) -> f64 {
        match self {
            Target::UltimateClaim => upper.latest_diagonal().iter().sum(),
            Target::NextYearPayments => 0.0,
        }
    }

    /// Realized value of the target on a full square.
    pub fn realized(self, full: &Triangle) -> Result<f64, TriangleError> {
        if full.mask != Mask::Full {
            return Err(TriangleError::NotFull);
        }
        let inc = full.to_incremental();
        let n = inc.n;
        let mut total = self.observed_part(&inc.restrict_upper());
        for i in 0..n {
            for j in 0..n {
                if self.includes(n, i, j) {
                    total += inc.cells[i * n + j];
                }
            }
        }
        Ok(total)
    }
}

/// Square claims array with explicit masking of the unobserved lower part.
///
/// Serialized as `{"flavor": ..., "rows": [[...], ...]}` holding observed
/// cells only; equality likewise ignores masked cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "TriangleDoc", try_from = "TriangleDoc")]
pub struct Triangle {
    n: usize,
    cells: Vec<f64>,
    flavor: Flavor,
    mask: Mask,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangleDoc {
    flavor: Flavor,
    rows: Vec<Vec<f64>>,
}

impl From<Triangle> for TriangleDoc {
    fn from(t: Triangle) -> Self {
        TriangleDoc { flavor: t.flavor, rows: t.rows().map(<[f64]>::to_vec).collect() }
    }
}

impl TryFrom<TriangleDoc> for Triangle {
    type Error = TriangleError;

    fn try_from(d: TriangleDoc) -> Result<Self, Self::Error> {
        Triangle::from_rows(&d.rows, d.flavor)
    }
}

impl PartialEq for Triangle {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.flavor == other.flavor
            && self.mask == other.mask
            && self.rows().zip(other.rows()).all(|(a, b)| a == b)
    }
}

impl Triangle {
    /// Builds an upper triangle from `f(i, j)` evaluated at observed cells.
    pub fn upper_from_fn(n: usize, flavor: Flavor, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 2, "triangle dimension must be at least 2");
        let mut cells = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in 0..n - i {
                cells[i * n + j] = f(i, j);
            }
        }
        Triangle { n, cells, flavor, mask: Mask::UpperOnly }
    }

    /// Builds a full square from `f(i, j)`.
    pub fn full_from_fn(n: usize, flavor: Flavor, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 2, "triangle dimension must be at least 2");
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(f(i, j));
            }
        }
        Triangle { n, cells, flavor, mask: Mask::Full }
    }

    /// Builds a triangle from rows, inferring the mask: `n` rows of length
    /// `n` give a full square, rows of lengths `n, n-1, ..., 1` an upper
    /// triangle.
    pub fn from_rows(rows: &[Vec<f64>], flavor: Flavor) -> Result<Self, TriangleError> {
        let n = rows.len();
        if n < 2 {
            return Err(TriangleError::Shape(format!("need at least 2 rows, got {n}")));
        }
        let lens: Vec<usize> = rows.iter().map(Vec::len).collect();
        if lens.iter().all(|&l| l == n) {
            return Ok(Self::full_from_fn(n, flavor, |i, j| rows[i][j]));
        }
        if lens.iter().enumerate().all(|(i, &l)| l == n - i) {
            return Ok(Self::upper_from_fn(n, flavor, |i, j| rows[i][j]));
        }
        Err(TriangleError::Shape(format!("row lengths {lens:?} match neither a {n}x{n} square nor an upper triangle")))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && (self.mask == Mask::Full || i + j < self.n)
    }

    /// Number of defined cells in row `i`.
    #[inline]
    pub fn row_len(&self, i: usize) -> usize {
        match self.mask {
            Mask::Full => self.n,
            Mask::UpperOnly => self.n - i,
        }
    }

    pub fn try_get(&self, i: usize, j: usize) -> Result<f64, TriangleError> {
        if self.is_observed(i, j) {
            Ok(self.cells[i * self.n + j])
        } else {
            Err(TriangleError::Mask { row: i, col: j, n: self.n })
        }
    }

    /// Cell accessor.
    ///
    /// # Panics
    /// On access to a masked cell; reading the unobserved region is a bug.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.try_get(i, j) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }

    /// Defined cells of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * self.n;
        &self.cells[start..start + self.row_len(i)]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    /// Upper-triangle restriction of a full square (identity on upper triangles).
    pub fn restrict_upper(&self) -> Triangle {
        let n = self.n;
        Triangle::upper_from_fn(n, self.flavor, |i, j| self.cells[i * n + j])
    }

    pub fn to_cumulative(&self) -> Triangle {
        if self.flavor == Flavor::Cumulative {
            return self.clone();
        }
        let mut out = self.clone();
        out.flavor = Flavor::Cumulative;
        for i in 0..self.n {
            let start = i * self.n;
            let len = self.row_len(i);
            for j in 1..len {
                out.cells[start + j] += out.cells[start + j - 1];
            }
        }
        out
    }

    pub fn to_incremental(&self) -> Triangle {
        if self.flavor == Flavor::Incremental {
            return self.clone();
        }
        let mut out = self.clone();
        out.flavor = Flavor::Incremental;
        for i in 0..self.n {
            let start = i * self.n;
            let len = self.row_len(i);
            for j in (1..len).rev() {
                out.cells[start + j] = self.cells[start + j] - self.cells[start + j - 1];
            }
        }
        out
    }

    /// Latest observed cumulative value of each row, `C_{i,n-i}` (zero-based).
    pub fn latest_diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let last = self.n - i - 1;
                match self.flavor {
                    Flavor::Cumulative => self.cells[i * self.n + last],
                    Flavor::Incremental => self.cells[i * self.n..=i * self.n + last].iter().sum(),
                }
            })
            .collect()
    }

    /// `Σ_i C_{i,n}` of a full square.
    pub fn ultimate(&self) -> Result<UltimateClaim, TriangleError> {
        if self.mask != Mask::Full {
            return Err(TriangleError::NotFull);
        }
        let n = self.n;
        let v = match self.flavor {
            Flavor::Cumulative => (0..n).map(|i| self.cells[i * n + n - 1]).sum(),
            Flavor::Incremental => self.cells.iter().sum(),
        };
        Ok(UltimateClaim(v))
    }

    /// Checks that cumulative rows never decrease. Only meaningful for data
    /// known to have non-negative increments; bootstrap pseudo-triangles may
    /// legitimately fail it.
    pub fn check_non_decreasing(&self) -> Result<(), TriangleError> {
        let cum = self.to_cumulative();
        for i in 0..self.n {
            let row = cum.row(i);
            for j in 1..row.len() {
                if row[j] < row[j - 1] {
                    return Err(TriangleError::Decreasing { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// CSV rendering of the defined cells; `parse_csv` reads it back exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str("  ")?;
                }
                write!(f, "{v:>12.2}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    pub skip_header: bool,
}

/// Parses a comma-separated triangle. Accepts LF or CRLF line endings and
/// ignores trailing blank lines. Row `i` must carry either `n` values (full
/// square) or `n - i` values (upper triangle).
pub fn parse_csv(input: &[u8], flavor: Flavor, opts: CsvOptions) -> Result<Triangle, TriangleError> {
    let text = std::str::from_utf8(input).map_err(|e| TriangleError::Parse {
        row: 0,
        col: 0,
        msg: format!("input is not UTF-8: {e}"),
    })?;
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    let skip = usize::from(opts.skip_header && !lines.is_empty());
    let mut rows = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate().skip(skip) {
        let row_no = idx + 1;
        if line.trim().is_empty() {
            return Err(TriangleError::Parse { row: row_no, col: 1, msg: "empty row".into() });
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let tok = field.trim();
            let v: f64 = tok.parse().map_err(|_| TriangleError::Parse {
                row: row_no,
                col: c + 1,
                msg: format!("cannot parse {tok:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(TriangleError::Parse { row: row_no, col: c + 1, msg: format!("non-finite value {tok:?}") });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Triangle::from_rows(&rows, flavor)
}
