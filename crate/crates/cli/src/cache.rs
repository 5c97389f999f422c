//! On-disk kernel table cache.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fraclab_core::grid::GridDomain;
use fraclab_core::kernel::{KernelTable, TableKey, CACHE_VERSION};
use log::{info, warn};

use crate::CliError;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "FRACLAB_CACHE_DIR";

/// What happened on a lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// A file existed but could not be used; it was rebuilt.
    Rebuilt,
}

#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> KernelCache {
        KernelCache { dir: dir.into() }
    }

    /// `$FRACLAB_CACHE_DIR` if set, else `fallback`.
    pub fn from_env(fallback: &Path) -> KernelCache {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => KernelCache::new(d),
            _ => KernelCache::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &TableKey) -> PathBuf {
        self.dir.join(format!(
            "kernel-v{CACHE_VERSION}-n{}-{:016x}-{:016x}-{:016x}.bin",
            key.dim,
            key.domain_fingerprint,
            key.order.to_bits(),
            key.cutoff.to_bits()
        ))
    }

    /// Loads the table for `(domain, σ, R)` or builds and stores it.
    pub fn kernel(
        &self,
        domain: &Arc<GridDomain>,
        order: f64,
        cutoff: Option<f64>,
    ) -> Result<(Arc<KernelTable>, CacheOutcome), CliError> {
        let key = TableKey::for_domain(domain, order, cutoff);
        let path = self.path_for(&key);
        let mut outcome = CacheOutcome::Miss;
        if let Ok(file) = fs::File::open(&path) {
            match KernelTable::read_from(BufReader::new(file), &key) {
                Ok(t) => {
                    info!("kernel cache hit {}", path.display());
                    return Ok((Arc::new(t), CacheOutcome::Hit));
                }
                Err(e) => {
                    warn!("kernel cache {} unusable ({e}); rebuilding", path.display());
                    outcome = CacheOutcome::Rebuilt;
                }
            }
        }
        let table = KernelTable::build(domain, order, cutoff)?;
        if let Err(e) = self.store(&path, &table) {
            warn!("could not write kernel cache {}: {e}", path.display());
        }
        Ok((Arc::new(table), outcome))
    }

    fn store(&self, path: &Path, table: &KernelTable) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        fs::rename(&tmp, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraclab_core::grid::Shape;

    #[test]
    fn hit_after_miss_and_rebuild_on_damage() {
        let dir = tempfile::tempdir().unwrap();
        let cache = KernelCache::new(dir.path());
        let d = GridDomain::build(Shape::ball(1, 1.0), 1, 16, 1, true).unwrap();
        let (a, o1) = cache.kernel(&d, 1.2, None).unwrap();
        let (b, o2) = cache.kernel(&d, 1.2, None).unwrap();
        assert_eq!((o1, o2), (CacheOutcome::Miss, CacheOutcome::Hit));
        assert_eq!(*a, *b);

        let path = cache.path_for(&a.key());
        let mut bytes = fs::read(&path).unwrap();
        bytes[1] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        let (c, o3) = cache.kernel(&d, 1.2, None).unwrap();
        assert_eq!(o3, CacheOutcome::Rebuilt);
        assert_eq!(*c, *a);

        let fine = GridDomain::build(Shape::ball(1, 1.0), 1, 20, 1, true).unwrap();
        let (_, o4) = cache.kernel(&fine, 1.2, None).unwrap();
        assert_eq!(o4, CacheOutcome::Miss);
    }
}
