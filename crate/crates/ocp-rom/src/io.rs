//! On-disk artifacts of the offline stage: dense matrices in a small
//! binary format, CSV tables for studies, and a JSON run manifest with
//! content checksums so two runs can be compared byte for byte.
//!
//! Wall-clock timings are deliberately written to a separate file
//! (`timings.json`); everything referenced by the manifest is a pure
//! function of the configuration, so repeated runs with the same seed
//! produce identical manifests.

use crate::error::{Error, Result};
use crate::rom::{ErrorSample, StudyRow};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

/// Magic bytes of the dense-matrix container.
const MATRIX_MAGIC: &[u8; 4] = b"PMAT";

/// Write a dense `f64` matrix: 4-byte magic, `u32` rows, `u32` cols,
/// `u32` element width (8), then the column-major payload in little
/// endian. The fixed header and raw payload make round trips bit exact
/// and the file trivial to read from other languages.
pub fn write_matrix(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "matrix payload has {} entries, expected {}x{}",
            data.len(),
            rows,
            cols
        )));
    }
    let mut buf = Vec::with_capacity(16 + 8 * data.len());
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    buf.extend_from_slice(&8u32.to_le_bytes());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Read a matrix written by [`write_matrix`]; returns `(rows, cols, data)`.
pub fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header)?;
    if &header[0..4] != MATRIX_MAGIC {
        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: not a matrix file", path.display()))));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if width != 8 {
        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: unsupported element width {width}", path.display()))));
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    if payload.len() != 8 * rows * cols {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "{}: payload is {} bytes, expected {}",
                path.display(),
                payload.len(),
                8 * rows * cols
            ),
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, data))
}

/// Write a list of basis columns as one matrix (columns of the file).
pub fn write_basis(path: &Path, cols: &[Vec<f64>]) -> Result<()> {
    let n_rows = cols.first().map_or(0, |c| c.len());
    let data: Vec<f64> = cols.iter().flatten().copied().collect();
    write_matrix(path, n_rows, cols.len(), &data)
}

/// Read basis columns written by [`write_basis`].
pub fn read_basis(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (rows, _cols, data) = read_matrix(path)?;
    Ok(data.chunks_exact(rows.max(1)).map(|c| c.to_vec()).collect())
}

/// Manifest of one offline or benchmark run: configuration echo plus a
/// checksum of every artifact it produced. Timings live elsewhere.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    pub case: String,
    pub config_toml: String,
    /// File name -> SHA-256 hex digest, sorted by name.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(case: &str, config_toml: &str) -> Self {
        Self {
            case: case.to_string(),
            config_toml: config_toml.to_string(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Record the checksum of a file inside the run directory.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        let bytes = fs::read(dir.join(name))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.insert(name.to_string(), hex);
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("manifest: {e}"))))?;
        fs::write(dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("manifest: {e}"))))
    }
}

/// Wall-clock measurements of a run, kept outside the manifest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    pub fn record(&mut self, label: &str, seconds: f64) {
        self.seconds.insert(label.to_string(), seconds);
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("timings: {e}"))))?;
        fs::write(dir.join("timings.json"), json + "\n")?;
        Ok(())
    }
}

/// Index of one persisted reduced model: theta descriptors per family and
/// the matrix file holding each term.
#[derive(Debug, Serialize, Deserialize)]
struct ModelIndex {
    n_z: usize,
    n_u: usize,
    alpha: f64,
    obs: Vec<crate::affine::Theta>,
    dynamics: Vec<crate::affine::Theta>,
    coupling: Vec<crate::affine::Theta>,
    control: Vec<crate::affine::Theta>,
    tracking: Vec<crate::affine::Theta>,
    forcing: Vec<crate::affine::Theta>,
}

fn term_file(family: &str, q: usize) -> String {
    format!("model_{family}_{q:03}.pmat")
}

/// Persist every projected affine term of a reduced model into `dir`.
/// Returns the file names written (for manifest bookkeeping).
pub fn save_model(dir: &Path, model: &crate::rom::ReducedModel) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let mut mats = |family: &str, terms: &[(crate::affine::Theta, nalgebra::DMatrix<f64>)]| -> Result<Vec<crate::affine::Theta>> {
        let mut thetas = Vec::new();
        for (q, (theta, m)) in terms.iter().enumerate() {
            let name = term_file(family, q);
            write_matrix(&dir.join(&name), m.nrows(), m.ncols(), m.as_slice())?;
            files.push(name);
            thetas.push(theta.clone());
        }
        Ok(thetas)
    };
    let obs = mats("obs", &model.obs)?;
    let dynamics = mats("dyn", &model.dynamics)?;
    let coupling = mats("coup", &model.coupling)?;
    let control = mats("ctrl", &model.control)?;
    let mut vecs = |family: &str, terms: &[(crate::affine::Theta, nalgebra::DVector<f64>)]| -> Result<Vec<crate::affine::Theta>> {
        let mut thetas = Vec::new();
        for (q, (theta, v)) in terms.iter().enumerate() {
            let name = term_file(family, q);
            write_matrix(&dir.join(&name), v.len(), 1, v.as_slice())?;
            files.push(name);
            thetas.push(theta.clone());
        }
        Ok(thetas)
    };
    let tracking = vecs("track", &model.tracking)?;
    let forcing = vecs("force", &model.forcing)?;
    let index = ModelIndex {
        n_z: model.n_z,
        n_u: model.n_u,
        alpha: model.alpha,
        obs,
        dynamics,
        coupling,
        control,
        tracking,
        forcing,
    };
    let json = serde_json::to_string_pretty(&index)
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("model index: {e}"))))?;
    fs::write(dir.join("model.json"), json + "\n")?;
    files.push("model.json".into());
    Ok(files)
}

/// Load a reduced model written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<crate::rom::ReducedModel> {
    let text = fs::read_to_string(dir.join("model.json"))?;
    let index: ModelIndex = serde_json::from_str(&text)
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("model index: {e}"))))?;
    let mats = |family: &str, thetas: &[crate::affine::Theta]| -> Result<Vec<(crate::affine::Theta, nalgebra::DMatrix<f64>)>> {
        thetas
            .iter()
            .enumerate()
            .map(|(q, theta)| {
                let (r, c, data) = read_matrix(&dir.join(term_file(family, q)))?;
                Ok((theta.clone(), nalgebra::DMatrix::from_column_slice(r, c, &data)))
            })
            .collect()
    };
    let vecs = |family: &str, thetas: &[crate::affine::Theta]| -> Result<Vec<(crate::affine::Theta, nalgebra::DVector<f64>)>> {
        thetas
            .iter()
            .enumerate()
            .map(|(q, theta)| {
                let (_, _, data) = read_matrix(&dir.join(term_file(family, q)))?;
                Ok((theta.clone(), nalgebra::DVector::from_vec(data)))
            })
            .collect()
    };
    Ok(crate::rom::ReducedModel {
        n_z: index.n_z,
        n_u: index.n_u,
        alpha: index.alpha,
        obs: mats("obs", &index.obs)?,
        dynamics: mats("dyn", &index.dynamics)?,
        coupling: mats("coup", &index.coupling)?,
        control: mats("ctrl", &index.control)?,
        tracking: vecs("track", &index.tracking)?,
        forcing: vecs("force", &index.forcing)?,
    })
}

/// CSV table of the basis-size study: one row per basis size.
pub fn write_study_csv(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(
        file,
        "n_basis,state_err,pressure_err,control_err,adjoint_err,output_err,fom_seconds,rom_seconds,speedup"
    )?;
    for row in rows {
        writeln!(
            file,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.2}",
            row.n,
            row.errors.state,
            row.errors.pressure,
            row.errors.control,
            row.errors.adjoint,
            row.errors.output,
            row.fom_seconds,
            row.rom_seconds,
            row.speedup
        )?;
    }
    Ok(())
}

/// CSV table of per-parameter test errors.
pub fn write_errors_csv(path: &Path, params: &[Vec<f64>], samples: &[ErrorSample]) -> Result<()> {
    let n_mu = params.first().map_or(0, |p| p.len());
    let mut file = fs::File::create(path)?;
    let head: Vec<String> = (1..=n_mu).map(|i| format!("mu{i}")).collect();
    writeln!(file, "{},state_err,pressure_err,control_err,adjoint_err,output_err", head.join(","))?;
    for (mu, s) in params.iter().zip(samples) {
        let vals: Vec<String> = mu.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(
            file,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            vals.join(","),
            s.state,
            s.pressure,
            s.control,
            s.adjoint,
            s.output
        )?;
    }
    Ok(())
}

/// CSV of retained correlation eigenvalues (POD decay diagnostics).
pub fn write_eigenvalues_csv(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "index,eigenvalue")?;
    for (i, ev) in eigenvalues.iter().enumerate() {
        writeln!(file, "{},{:.12e}", i + 1, ev)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pmat");
        let data = vec![1.5, -2.0, 3.25, 0.0, 7.0, -0.125];
        write_matrix(&path, 2, 3, &data).unwrap();
        let (r, c, back) = read_matrix(&path).unwrap();
        assert_eq!((r, c), (2, 3));
        assert_eq!(back, data);
    }

    #[test]
    fn basis_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.pmat");
        let cols = vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]];
        write_basis(&path, &cols).unwrap();
        assert_eq!(read_basis(&path).unwrap(), cols);
    }

    #[test]
    fn corrupt_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pmat");
        fs::write(&path, b"NOPE\x00\x00\x00\x00\x00\x00\x00\x00\x08\x00\x00\x00").unwrap();
        assert!(read_matrix(&path).is_err());
    }

    #[test]
    fn manifest_roundtrip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x.csv"), "a,b\n1,2\n").unwrap();
        let mut m = RunManifest::new("demo", "alpha = 0.01\n");
        m.record(dir.path(), "x.csv").unwrap();
        m.save(dir.path()).unwrap();
        let back = RunManifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        // same content -> same digest
        let mut m2 = RunManifest::new("demo", "alpha = 0.01\n");
        m2.record(dir.path(), "x.csv").unwrap();
        assert_eq!(m2.artifacts, m.artifacts);
    }
}
