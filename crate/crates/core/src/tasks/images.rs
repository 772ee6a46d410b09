use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::oracles::{ImageBuffer, ImageError};

/// Content-addressed image storage. References look like
/// `images/<sha256>.png` and are what messages carry.
pub trait ImageStore: Send + Sync {
    fn put(&self, img: &ImageBuffer) -> Result<String, ImageError>;
    fn png(&self, reference: &str) -> Result<Vec<u8>, ImageError>;

    fn get(&self, reference: &str) -> Result<ImageBuffer, ImageError> {
        ImageBuffer::from_png(&self.png(reference)?)
    }
}

fn reference_for(img: &ImageBuffer) -> String {
    format!("images/{}.png", img.content_hash())
}

#[derive(Debug, Default)]
pub struct MemoryImageStore {
    images: Mutex<HashMap<String, Vec<u8>>>,
}

impl MemoryImageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.images.lock().expect("image store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ImageStore for MemoryImageStore {
    fn put(&self, img: &ImageBuffer) -> Result<String, ImageError> {
        let key = reference_for(img);
        let mut images = self.images.lock().expect("image store lock");
        if !images.contains_key(&key) {
            images.insert(key.clone(), img.to_png()?);
        }
        Ok(key)
    }

    fn png(&self, reference: &str) -> Result<Vec<u8>, ImageError> {
        self.images
            .lock()
            .expect("image store lock")
            .get(reference)
            .cloned()
            .ok_or_else(|| ImageError::Codec(format!("no image {reference}")))
    }
}

/// Writes PNGs under `root`, resolving references relative to it.
#[derive(Debug, Clone)]
pub struct DirImageStore {
    root: PathBuf,
}

impl DirImageStore {
    pub fn new(root: impl AsRef<Path>) -> Self {
        Self {
            root: root.as_ref().to_path_buf(),
        }
    }
}

impl ImageStore for DirImageStore {
    fn put(&self, img: &ImageBuffer) -> Result<String, ImageError> {
        let key = reference_for(img);
        let path = self.root.join(&key);
        if !path.exists() {
            let io = |e: std::io::Error| ImageError::Codec(e.to_string());
            fs::create_dir_all(path.parent().expect("images dir")).map_err(io)?;
            let tmp = path.with_extension("png.tmp");
            fs::write(&tmp, img.to_png()?).map_err(io)?;
            fs::rename(&tmp, &path).map_err(io)?;
        }
        Ok(key)
    }

    fn png(&self, reference: &str) -> Result<Vec<u8>, ImageError> {
        fs::read(self.root.join(reference)).map_err(|e| ImageError::Codec(format!("{reference}: {e}")))
    }
}
