//! Matrix files: JSON with row-major `[re, im]` entry pairs.
//!
//! Entries are emitted in scientific notation with 17 significant digits,
//! which pins down every double exactly, and serde_json is built with its
//! exact float parser, so emit-then-parse is the identity on the bit level.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tenfold::mat::CMat;

use crate::report::to_json_bytes;
use crate::CmdError;

/// Optional annotations carried next to the raw entries. A matrix alone
/// cannot encode antilinearity, so symmetry files tag their kind here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Symmetry class label, e.g. "AII".
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class: Option<String>,
    /// One of regular, time_reversal, charge_conjugation, chiral.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    /// Row-major [re, im] pairs; rows * cols of them, all finite.
    pub data: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metadata: Option<Metadata>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMat, metadata: Option<Metadata>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
            metadata,
        }
    }

    pub fn to_matrix(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            Complex64::new(re, im)
        })
    }

    pub fn kind_tag(&self) -> Option<&str> {
        self.metadata.as_ref().and_then(|md| md.kind.as_deref())
    }

    fn validate(&self, path: &Path) -> Result<(), CmdError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CmdError::Usage(format!(
                "{}: rows and cols must be positive",
                path.display()
            )));
        }
        let want = self.rows * self.cols;
        if self.data.len() != want {
            return Err(CmdError::Usage(format!(
                "{}: data has {} entries, expected rows x cols = {want}",
                path.display(),
                self.data.len()
            )));
        }
        for (i, [re, im]) in self.data.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CmdError::Usage(format!(
                    "{}: non-finite entry at index {i}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Load and validate a matrix file, returning the raw bytes alongside so
/// the caller can fold them into the report's inputs hash.
pub fn parse_matrix_file(path: &Path) -> Result<(MatrixFile, Vec<u8>), CmdError> {
    let bytes = fs::read(path)
        .map_err(|e| CmdError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CmdError::Usage(format!("{}: not valid UTF-8: {e}", path.display())))?;
    // serde_json errors already carry line and column positions.
    let mf: MatrixFile = serde_json::from_str(text)
        .map_err(|e| CmdError::Usage(format!("{}: {e}", path.display())))?;
    mf.validate(path)?;
    Ok((mf, bytes))
}

pub fn emit_matrix_file(path: &Path, mf: &MatrixFile) -> Result<(), CmdError> {
    fs::write(path, to_json_bytes(mf))
        .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))
}
