use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};

use super::class_table::ClassTable;
use super::label_map::LabelMap;
use crate::error::{Error, Result};

/// Reads an 8-bit single-channel raster and validates it against `table`.
pub fn load_labelmap(path: impl AsRef<Path>, table: &ClassTable) -> Result<LabelMap> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::UnsupportedRaster {
                path: path.to_path_buf(),
                reason: format!("expected 8-bit grayscale, found {:?}", other.color()),
            })
        }
    };
    let (w, h) = gray.dimensions();
    let map = LabelMap::new(w, h, gray.into_raw())?;
    map.validate(table)?;
    Ok(map)
}

/// Writes `map` as an 8-bit grayscale PNG, creating parent directories.
pub fn save_labelmap(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let img = GrayImage::from_raw(map.width(), map.height(), map.data().to_vec())
        .expect("label map buffer matches its dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}
