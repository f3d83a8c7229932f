//! JSON encoding shared by every file the tool reads or writes.
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major nested
//! arrays, and floats are written with 17 significant digits so that every
//! value reads back bit for bit.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use ncube_core::hermlin::{ComplexMatrix, HermitianMatrix};
use ncube_core::opsys::{SystemId, SystemKind, TensorElement};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT: u32 = 1;
/// Largest Hermitian defect the loaders symmetrise away.
pub const HERMITIAN_TOL: f64 = 1e-8;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }
}

/// Compact JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn check_format(format: u32) -> Result<()> {
    if format != FORMAT {
        return Err(CliError::Invalid(format!("unsupported format {format}, expected {FORMAT}")));
    }
    Ok(())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(j: &MatrixJson, what: &str) -> Result<ComplexMatrix> {
    let rows = j.len();
    let cols = j.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || j.iter().any(|r| r.len() != cols) {
        return Err(CliError::Invalid(format!("{what}: expected a non-empty rectangular matrix")));
    }
    let data: Vec<Complex64> = j.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    if data.iter().any(|z| !z.is_finite()) {
        return Err(CliError::Invalid(format!("{what}: non-finite entry")));
    }
    Ok(ComplexMatrix::from_vec(rows, cols, data))
}

pub fn square_from_json(j: &MatrixJson, what: &str) -> Result<ComplexMatrix> {
    let m = matrix_from_json(j, what)?;
    if !m.is_square() {
        return Err(CliError::Invalid(format!("{what}: expected a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    Ok(m)
}

/// Loads a Hermitian matrix, symmetrising defects up to [`HERMITIAN_TOL`].
pub fn hermitian_from_json(j: &MatrixJson, what: &str) -> Result<HermitianMatrix> {
    let m = square_from_json(j, what)?;
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(CliError::Invalid(format!("{what}: not Hermitian (defect {defect:.3e})")));
    }
    Ok(HermitianMatrix::symmetrised_from(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixJson,
}

/// An element of `S ⊗ M_k` for `S` one of `NC(n)`, `S_n`, `T_{n+1}`,
/// `R_{n+1}`, `C^{2n}`. Coordinates not listed are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementFile {
    pub format: u32,
    pub system: String,
    pub n: usize,
    pub k: usize,
    pub coeffs: Vec<NamedMatrix>,
}

pub fn system_name(id: SystemId) -> Result<&'static str> {
    Ok(match id.kind {
        SystemKind::NC => "NC",
        SystemKind::Sn if id.n == 2 => "S2",
        SystemKind::Sn => "Sn",
        SystemKind::Tridiag => "T",
        SystemKind::Arrow => "R",
        SystemKind::Cube2n => "C2n",
        other => return Err(CliError::Invalid(format!("{other:?} elements have no file form"))),
    })
}

fn parse_system(name: &str, n: usize) -> Result<SystemId> {
    let kind = match name {
        "NC" => SystemKind::NC,
        "S2" if n != 2 => return Err(CliError::Invalid(format!("system S2 needs n = 2, got {n}; use \"Sn\""))),
        "S2" | "Sn" => SystemKind::Sn,
        "T" => SystemKind::Tridiag,
        "R" => SystemKind::Arrow,
        "C2n" => SystemKind::Cube2n,
        other => {
            return Err(CliError::Invalid(format!(
                "unknown system {other:?}; expected NC, S2, Sn, T, R or C2n"
            )))
        }
    };
    Ok(SystemId::new(kind, n)?)
}

impl ElementFile {
    /// Every coordinate in the support, in coordinate order.
    pub fn from_element(x: &TensorElement) -> Result<Self> {
        let sys = x.system;
        let coeffs = (0..sys.coord_len())
            .filter(|&i| sys.in_support(i))
            .map(|i| NamedMatrix {
                name: sys.label(i),
                matrix: matrix_to_json(&x.coeffs[i]),
            })
            .collect();
        Ok(Self {
            format: FORMAT,
            system: system_name(sys)?.into(),
            n: sys.n,
            k: x.k,
            coeffs,
        })
    }

    /// Validates and symmetrises; the element must be Hermitian within
    /// [`HERMITIAN_TOL`].
    pub fn to_element(&self) -> Result<TensorElement> {
        check_format(self.format)?;
        let sys = parse_system(&self.system, self.n)?;
        if self.k == 0 {
            return Err(CliError::Invalid("k must be positive".into()));
        }
        let index: BTreeMap<String, usize> = (0..sys.coord_len()).map(|i| (sys.label(i), i)).collect();
        let mut coeffs = vec![ComplexMatrix::zeros(self.k, self.k); sys.coord_len()];
        let mut seen = vec![false; sys.coord_len()];
        for c in &self.coeffs {
            let &i = index
                .get(&c.name)
                .ok_or_else(|| CliError::Invalid(format!("unknown coordinate {:?} for {}", c.name, self.system)))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(CliError::Invalid(format!("coordinate {:?} given twice", c.name)));
            }
            let m = matrix_from_json(&c.matrix, &c.name)?;
            if m.rows() != self.k || m.cols() != self.k {
                return Err(CliError::Invalid(format!(
                    "coordinate {:?} is {}x{}, expected {}x{}",
                    c.name,
                    m.rows(),
                    m.cols(),
                    self.k,
                    self.k
                )));
            }
            coeffs[i] = m;
        }
        let mut x = TensorElement::new(sys, self.k, coeffs)?;
        let defect = x.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(CliError::Invalid(format!("element is not Hermitian (defect {defect:.3e})")));
        }
        x.symmetrise();
        Ok(x)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Matrix data for `riesz-solve` (`a = [a1, a2]`, `b`), `tr-interpolate`
/// (`a`, `b`) and `th-st` (`a0`, `a = [a1, a2]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFile {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<MatrixJson>,
    #[serde(default)]
    pub a: Vec<MatrixJson>,
    #[serde(default)]
    pub b: Vec<MatrixJson>,
}

impl DataFile {
    pub fn load(path: &Path) -> Result<Self> {
        let d: Self = read_json(path)?;
        check_format(d.format)?;
        Ok(d)
    }

    pub fn hermitian_list(list: &[MatrixJson], name: &str) -> Result<Vec<HermitianMatrix>> {
        list.iter()
            .enumerate()
            .map(|(i, m)| hermitian_from_json(m, &format!("{name}[{i}]")))
            .collect()
    }

    /// All matrices share one size `k`.
    pub fn common_size(&self) -> Result<usize> {
        let mut k = None;
        for m in self.a0.iter().chain(&self.a).chain(&self.b) {
            let r = m.len();
            if *k.get_or_insert(r) != r {
                return Err(CliError::Invalid("matrices of different sizes".into()));
            }
        }
        k.ok_or_else(|| CliError::Invalid("no matrices given".into()))
    }
}
