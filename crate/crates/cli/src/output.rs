use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use tempfile::NamedTempFile;

/// Output files staged next to their destination and moved into place only
/// when [`Staged::commit`] is called, so a failed run leaves nothing behind.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new() -> Self {
        Staged::default()
    }

    pub fn write(
        &mut self,
        path: &Path,
        fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    ) -> anyhow::Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
        drop(w);
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn write_str(&mut self, path: &Path, s: &str) -> anyhow::Result<()> {
        self.write(path, |w| Ok(w.write_all(s.as_bytes())?))
    }

    pub fn commit(self) -> anyhow::Result<()> {
        for (tmp, path) in self.files {
            tmp.persist(&path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Writes to `path` atomically, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut s = Staged::new();
            s.write(p, fill)?;
            s.commit()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

/// `PREFIX.EXT`
pub fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
