use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tripgate::report::RunManifest;

pub const MANIFEST: &str = "manifest.json";

/// An output directory that records what was written into it.
pub struct OutDir {
    dir: PathBuf,
    pub manifest: RunManifest,
}

impl OutDir {
    pub fn create(dir: &Path, command: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        Ok(self.manifest.add_input(role, path)?)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    /// Registers a file some library writer already produced.
    pub fn written(&mut self, name: &str) {
        self.manifest.outputs.push(name.to_string());
    }

    pub fn finish(self) -> Result<()> {
        let p = self.path(MANIFEST);
        tripgate::report::write_json(&p, &self.manifest)?;
        Ok(())
    }
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
