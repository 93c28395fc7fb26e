//! Binary policy checkpoints.
//!
//! Layout: magic `ERLB`, then five little-endian u32s (format version,
//! base symbol count P, variant count S, context row dims base*prev,
//! output dim), then the logit table as little-endian f64 in row-major
//! (base, previous, output) order. A JSON sidecar (`<path>.meta.json`)
//! carries provenance; it is informative only and never read back into
//! parameters.

use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CheckpointError, Error, Result};
use crate::policy::PolicyParams;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ERLB";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config_hash: String,
    pub produced_by: String,
    pub software_version: String,
    pub content_hash: u64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

pub fn save_checkpoint(params: &PolicyParams, path: &Path, meta: &CheckpointMeta) -> Result<()> {
    let variant_count = params.vocab_size / params.base_count;
    let mut buf = Vec::with_capacity(24 + params.logits.len() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        params.base_count,
        variant_count,
        (params.base_dim() * params.prev_dim()) as u32,
        params.out_dim() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &x in &params.logits {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    // Write-then-rename so a crash never leaves a half-written table
    // behind the checkpoint name.
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;

    let meta_text =
        serde_json::to_string_pretty(meta).map_err(|e| Error::Serialize(e.to_string()))?;
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, meta_text).map_err(|e| Error::io(&sidecar, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    let mut f = std::fs::File::open(path).map_err(|e| {
        Error::Checkpoint(CheckpointError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| {
        Error::Checkpoint(CheckpointError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    if buf.len() < 4 || &buf[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    if buf.len() < 24 {
        return Err(CheckpointError::DimensionMismatch(format!(
            "header truncated at {} bytes",
            buf.len()
        ))
        .into());
    }
    let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion {
            found: version,
            supported: CHECKPOINT_VERSION,
        }
        .into());
    }
    let base_count = u32_at(8);
    let variant_count = u32_at(12);
    let row_count = u32_at(16) as usize;
    let out_dim = u32_at(20) as usize;
    if base_count == 0 || variant_count == 0 {
        return Err(CheckpointError::DimensionMismatch(format!(
            "P={base_count}, S={variant_count}"
        ))
        .into());
    }
    let vocab_size = base_count * variant_count;
    let expect_rows = (base_count as usize + 1) * (vocab_size as usize + 1);
    let expect_out = vocab_size as usize + 1;
    if row_count != expect_rows || out_dim != expect_out {
        return Err(CheckpointError::DimensionMismatch(format!(
            "header says {row_count}x{out_dim}, P={base_count}/S={variant_count} \
             implies {expect_rows}x{expect_out}"
        ))
        .into());
    }
    let n = row_count * out_dim;
    let body = &buf[24..];
    if body.len() != n * 8 {
        return Err(CheckpointError::DimensionMismatch(format!(
            "table holds {} bytes, dimensions imply {}",
            body.len(),
            n * 8
        ))
        .into());
    }
    let logits = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(PolicyParams {
        base_count,
        vocab_size,
        logits,
    })
}

pub fn load_sidecar(path: &Path) -> Result<CheckpointMeta> {
    let sidecar = sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Vocab;

    fn params() -> PolicyParams {
        let vocab = Vocab {
            base_count: 4,
            variant_count: 2,
        };
        let mut p = crate::policy::init_policy(&vocab);
        let mut x = 0.1f64;
        for v in p.logits.iter_mut() {
            *v = x.sin();
            x += 0.7;
        }
        p
    }

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            config_hash: "deadbeef".into(),
            produced_by: "test".into(),
            software_version: env!("CARGO_PKG_VERSION").into(),
            content_hash: 0,
        }
    }

    #[test]
    fn roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.erlb");
        let p = params();
        save_checkpoint(&p, &path, &meta()).unwrap();
        let q = load_checkpoint(&path).unwrap();
        assert_eq!(p.base_count, q.base_count);
        assert_eq!(p.vocab_size, q.vocab_size);
        assert_eq!(p.logits, q.logits);
        assert_eq!(p.content_hash(), q.content_hash());
        // save -> load -> save reproduces identical bytes.
        let path2 = dir.path().join("q.erlb");
        save_checkpoint(&q, &path2, &meta()).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        let m = load_sidecar(&path).unwrap();
        assert_eq!(m.config_hash, "deadbeef");
    }

    #[test]
    fn corrupted_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.erlb");
        save_checkpoint(&params(), &path, &meta()).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // Bad magic.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        match load_checkpoint(&path).unwrap_err() {
            Error::Checkpoint(CheckpointError::BadMagic) => {}
            e => panic!("expected BadMagic, got {e}"),
        }

        // Future version.
        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&2u32.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        match load_checkpoint(&path).unwrap_err() {
            Error::Checkpoint(CheckpointError::UnsupportedVersion { found: 2, supported: 1 }) => {}
            e => panic!("expected UnsupportedVersion, got {e}"),
        }

        // Truncated table.
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        match load_checkpoint(&path).unwrap_err() {
            Error::Checkpoint(CheckpointError::DimensionMismatch(_)) => {}
            e => panic!("expected DimensionMismatch, got {e}"),
        }

        // Inconsistent header dims.
        let mut bad = bytes.clone();
        bad[16..20].copy_from_slice(&7u32.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_checkpoint(&path).unwrap_err(),
            Error::Checkpoint(CheckpointError::DimensionMismatch(_))
        ));

        // Exit code for all of the above is the I/O class.
        std::fs::write(&path, b"junk").unwrap();
        assert_eq!(load_checkpoint(&path).unwrap_err().exit_code(), 4);
    }
}
