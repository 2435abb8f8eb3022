//! TOML manifest plus raw little-endian `f64` payload files.
//!
//! ```toml
//! format = "bpdn-problem"
//! version = 1
//! generator = "gaussian"
//! seed = 7
//! m = 250
//! n = 1000
//! lambda = 0.5
//!
//! [operator]
//! kind = "dense"
//!
//! [params]
//! k = 25
//!
//! [payload]
//! a = "ins1.A.f64"
//! b = "ins1.b.f64"
//! signal = "ins1.signal.f64"
//! ```
//!
//! Payload paths are relative to the manifest. Payloads have no header; their
//! lengths follow from `m` and `n`. `A` is stored row-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::problem::{BpdnProblem, Metadata, Param};

pub const FORMAT_NAME: &str = "bpdn-problem";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    generator: String,
    seed: u64,
    m: usize,
    n: usize,
    lambda: f64,
    operator: OperatorSpec,
    #[serde(default)]
    params: BTreeMap<String, Param>,
    payload: Payload,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OperatorSpec {
    Dense,
    Identity,
    Heaviside,
    Convolution { kernel: Vec<f64> },
}

#[derive(Debug, Serialize, Deserialize)]
struct Payload {
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<String>,
    b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    signal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<String>,
}

/// Write `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Raw little-endian `f64` array, written atomically.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    write_atomic(path, &bytes)
}

/// Read a raw little-endian `f64` array of known length.
pub fn read_vector(path: &Path, len: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * len {
        return Err(Error::Manifest(format!(
            "{}: expected {} values ({} bytes), found {} bytes",
            path.display(),
            len,
            8 * len,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn payload_name(stem: &str, part: &str) -> String {
    format!("{stem}.{part}.f64")
}

/// Write `problem` as a manifest at `path` plus payload files next to it.
pub fn write_problem(problem: &BpdnProblem<f64>, path: &Path) -> Result<()> {
    let stem = path
        .file_stem()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let kernel = problem.op.kernel();
    let (operator, a) = match problem.op.kind() {
        "dense" => {
            let entries = kernel.dense_entries().expect("dense kernel stores entries");
            (OperatorSpec::Dense, Some(entries))
        }
        "identity" => (OperatorSpec::Identity, None),
        "heaviside" => (OperatorSpec::Heaviside, None),
        "convolution" => (
            OperatorSpec::Convolution {
                kernel: kernel.taps().expect("convolution kernel stores taps").to_vec(),
            },
            None,
        ),
        other => {
            return Err(Error::InvalidParameter(format!("operator kind `{other}` cannot be serialized")));
        }
    };

    let mut payload = Payload {
        a: None,
        b: payload_name(&stem, "b"),
        signal: None,
        oracle: None,
    };
    if let Some(a) = a {
        let name = payload_name(&stem, "A");
        write_vector(&dir.join(&name), a)?;
        payload.a = Some(name);
    }
    write_vector(&dir.join(&payload.b), &problem.b)?;
    if let Some(s) = &problem.signal {
        let name = payload_name(&stem, "signal");
        write_vector(&dir.join(&name), s)?;
        payload.signal = Some(name);
    }
    if let Some(x) = &problem.x_star {
        let name = payload_name(&stem, "oracle");
        write_vector(&dir.join(&name), x)?;
        payload.oracle = Some(name);
    }

    let manifest = Manifest {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        generator: problem.metadata.generator.clone(),
        seed: problem.metadata.seed,
        m: problem.m(),
        n: problem.n(),
        lambda: problem.lambda,
        operator,
        params: problem.metadata.params.clone(),
        payload,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

fn resolve(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Load a problem written by [`write_problem`].
pub fn read_problem(path: &Path) -> Result<BpdnProblem<f64>> {
    let text = fs::read_to_string(path)?;
    let man: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if man.format != FORMAT_NAME {
        return Err(Error::Manifest(format!("unknown format `{}`", man.format)));
    }
    if man.version != FORMAT_VERSION {
        return Err(Error::Manifest(format!("unsupported version {}", man.version)));
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let (m, n) = (man.m, man.n);
    let square = |what: &str| {
        if m == n {
            Ok(())
        } else {
            Err(Error::Manifest(format!("{what} operator needs m = n, got {m} x {n}")))
        }
    };
    let op = match man.operator {
        OperatorSpec::Dense => {
            let name = man
                .payload
                .a
                .as_deref()
                .ok_or_else(|| Error::Manifest("dense operator without `payload.a`".into()))?;
            LinearOperator::dense(m, n, read_vector(&resolve(dir, name), m * n)?)?
        }
        OperatorSpec::Identity => {
            square("identity")?;
            LinearOperator::identity(n)
        }
        OperatorSpec::Heaviside => {
            square("heaviside")?;
            LinearOperator::heaviside(n)?
        }
        OperatorSpec::Convolution { kernel } => {
            square("convolution")?;
            if kernel.len() != n {
                return Err(Error::Manifest(format!("kernel has {} taps, expected {n}", kernel.len())));
            }
            LinearOperator::convolution(kernel)?
        }
    };
    let b = read_vector(&resolve(dir, &man.payload.b), m)?;
    let mut problem = BpdnProblem::new(op, b, man.lambda)?.with_metadata(Metadata {
        generator: man.generator,
        seed: man.seed,
        params: man.params,
    });
    if let Some(name) = &man.payload.signal {
        problem = problem.with_signal(read_vector(&resolve(dir, name), n)?)?;
    }
    if let Some(name) = &man.payload.oracle {
        problem = problem.with_x_star(read_vector(&resolve(dir, name), n)?)?;
    }
    Ok(problem)
}
