//! JSON and CSV formats for matrices and triangles.
//!
//! A complex matrix is `{"n": n, "re": [[...], ...], "im": [[...], ...]}`
//! with row-major `n x n` arrays; a triangle is `{"n": n, "rows": [[...], ...]}`
//! with row `j` of length `j`. JSON numbers use the shortest representation
//! that round-trips exactly; CSV values carry 17 significant digits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt::RayleighTriangle;
use crate::linalg::{HermitianMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let part = |f: fn(C64) -> f64| {
            (0..n)
                .map(|i| (0..n).map(|j| f(h.entry(i, j))).collect())
                .collect()
        };
        MatrixJson {
            n,
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }
}

impl From<&RayleighTriangle> for TriangleJson {
    fn from(p: &RayleighTriangle) -> Self {
        TriangleJson {
            n: p.n(),
            rows: p.rows(),
        }
    }
}

fn check_square(name: &str, rows: &[Vec<f64>], n: usize) -> Result<()> {
    if rows.len() != n {
        return Err(Error::Parse(format!(
            "\"{name}\" has {} rows, expected {n}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "\"{name}\" row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    Ok(())
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        check_square("re", &self.re, self.n)?;
        check_square("im", &self.im, self.n)?;
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.to_matrix()?)
    }
}

impl TriangleJson {
    pub fn to_triangle(&self) -> Result<RayleighTriangle> {
        if self.rows.len() != self.n {
            return Err(Error::Parse(format!(
                "{} rows, expected {}",
                self.rows.len(),
                self.n
            )));
        }
        for (j, row) in self.rows.iter().enumerate() {
            if row.len() != j + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    j + 1,
                    row.len(),
                    j + 1
                )));
            }
        }
        RayleighTriangle::from_rows(&self.rows)
    }
}

fn json_error(what: &str, e: serde_json::Error) -> Error {
    Error::Parse(format!(
        "{what} at line {}, column {}: {e}",
        e.line(),
        e.column()
    ))
}

/// Parses a Hermitian matrix from JSON text.
pub fn parse_matrix(text: &str) -> Result<HermitianMatrix> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| json_error("matrix", e))?;
    m.to_hermitian()
}

/// Parses a triangle from JSON text.
pub fn parse_triangle(text: &str) -> Result<RayleighTriangle> {
    let t: TriangleJson = serde_json::from_str(text).map_err(|e| json_error("triangle", e))?;
    t.to_triangle()
}

/// JSON array of matrices.
pub fn matrices_to_json(xs: &[HermitianMatrix]) -> String {
    let docs: Vec<MatrixJson> = xs.iter().map(MatrixJson::from).collect();
    serde_json::to_string_pretty(&docs).expect("plain data serializes")
}

/// JSON array of triangles.
pub fn triangles_to_json(ps: &[RayleighTriangle]) -> String {
    let docs: Vec<TriangleJson> = ps.iter().map(TriangleJson::from).collect();
    serde_json::to_string_pretty(&docs).expect("plain data serializes")
}

/// Parses a JSON array of matrices.
pub fn parse_matrices(text: &str) -> Result<Vec<HermitianMatrix>> {
    let docs: Vec<MatrixJson> =
        serde_json::from_str(text).map_err(|e| json_error("matrix list", e))?;
    docs.iter()
        .enumerate()
        .map(|(k, m)| {
            m.to_hermitian()
                .map_err(|e| Error::Parse(format!("matrix {k}: {e}")))
        })
        .collect()
}

/// A float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per matrix, columns `re_i_j` then `im_i_j` (1-based indices).
pub fn matrices_to_csv(xs: &[HermitianMatrix]) -> String {
    let n = xs.first().map_or(0, HermitianMatrix::dim);
    let mut header = Vec::with_capacity(2 * n * n);
    for part in ["re", "im"] {
        for i in 1..=n {
            for j in 1..=n {
                header.push(format!("{part}_{i}_{j}"));
            }
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for x in xs {
        let mut cells = Vec::with_capacity(2 * n * n);
        for take_re in [true, false] {
            for i in 0..n {
                for j in 0..n {
                    let z = x.entry(i, j);
                    cells.push(format_exact(if take_re { z.re } else { z.im }));
                }
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One row per triangle, columns `r_i_j` in row-major order.
pub fn triangles_to_csv(ps: &[RayleighTriangle]) -> String {
    let n = ps.first().map_or(0, RayleighTriangle::n);
    let header: Vec<String> = (1..=n)
        .flat_map(|j| (1..=j).map(move |i| format!("r_{i}_{j}")))
        .collect();
    let mut out = header.join(",");
    out.push('\n');
    for p in ps {
        let cells: Vec<String> = p.as_flat().iter().map(|&x| format_exact(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses [`matrices_to_csv`] output.
pub fn parse_matrices_csv(text: &str) -> Result<Vec<HermitianMatrix>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols = header.split(',').count();
    let n = ((cols / 2) as f64).sqrt().round() as usize;
    if 2 * n * n != cols || n == 0 {
        return Err(Error::Parse(format!("line 1: {cols} columns is not 2 n^2")));
    }
    let mut out = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .enumerate()
            .map(|(c, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", ln + 1, c + 1)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(Error::Parse(format!(
                "line {}: {} values, expected {cols}",
                ln + 1,
                vals.len()
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            C64::new(vals[i * n + j], vals[n * n + i * n + j])
        });
        out.push(
            HermitianMatrix::new(m).map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(seed: u64) -> HermitianMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sample_haar_unitary(3, &mut rng).unwrap();
        HermitianMatrix::from_real_diagonal(&[1.0 / 3.0, -0.1, 2.5e-7])
            .unwrap()
            .conjugate_by(&u)
    }

    #[test]
    fn matrix_json_round_trip_is_exact() {
        let x = random_matrix(1);
        let text = matrices_to_json(std::slice::from_ref(&x));
        assert_eq!(parse_matrices(&text).unwrap(), vec![x.clone()]);
        let single = serde_json::to_string(&MatrixJson::from(&x)).unwrap();
        assert_eq!(parse_matrix(&single).unwrap(), x);
    }

    #[test]
    fn matrix_csv_round_trip_is_exact() {
        let xs = vec![random_matrix(2), random_matrix(3)];
        let text = matrices_to_csv(&xs);
        assert!(text.starts_with("re_1_1,re_1_2,re_1_3,re_2_1"));
        assert!(text.lines().next().unwrap().ends_with("im_3_3"));
        assert_eq!(parse_matrices_csv(&text).unwrap(), xs);
    }

    #[test]
    fn triangle_json_round_trip() {
        let p = RayleighTriangle::from_rows(&[vec![0.5], vec![1.0, 0.0]]).unwrap();
        let text = serde_json::to_string(&TriangleJson::from(&p)).unwrap();
        assert_eq!(text, r#"{"n":2,"rows":[[0.5],[1.0,0.0]]}"#);
        assert_eq!(parse_triangle(&text).unwrap(), p);
        assert_eq!(
            triangles_to_csv(&[p]).lines().next().unwrap(),
            "r_1_1,r_1_2,r_2_2"
        );
    }

    #[test]
    fn parse_errors_carry_locations() {
        let err =
            parse_matrix("{\"n\": 2,\n \"re\": [[1, 0], [0, 1]],\n \"im\": oops}").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("line 3"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_matrix(r#"{"n": 2, "re": [[1, 0]], "im": [[0, 0], [0, 0]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let err = parse_matrices_csv("re_1_1,im_1_1\n1.0,zzz\n").unwrap_err();
        assert!(err.to_string().contains("line 2, column 2"));
        let err = parse_triangle(r#"{"n": 2, "rows": [[0.5], [1.0]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn non_hermitian_json_rejected() {
        let err = parse_matrix(r#"{"n": 2, "re": [[1, 2], [0, 1]], "im": [[0, 0], [0, 0]]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }
}
