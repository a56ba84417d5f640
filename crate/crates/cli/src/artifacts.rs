use std::fs;
use std::path::Path;

use anyhow::Context;

/// Files collected in memory and written together once every computation
/// has succeeded, so a failed run leaves no partial output behind.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &'static str, contents: impl Into<Vec<u8>>) {
        self.files.push((name, contents.into()));
    }

    /// Writes each file through a temporary name and renames it into place.
    pub fn commit(self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            let path = dir.join(name);
            fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        }
        for (name, _) in &self.files {
            log::info!("wrote {}", dir.join(name).display());
        }
        Ok(())
    }
}
