use super::class_table::ClassTable;
use super::mask::{check_dims, pixel_count, BinaryMask};
use crate::error::{Error, Result};

/// Per-pixel semantic class raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != pixel_count(width, height) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} label map",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; pixel_count(width, height)],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.data[(y * self.width + x) as usize] = value;
    }

    /// Checks every value against `table`.
    pub fn validate(&self, table: &ClassTable) -> Result<()> {
        match self.data.iter().position(|v| !table.is_valid_value(*v)) {
            None => Ok(()),
            Some(i) => Err(Error::ValueOutOfRange {
                value: self.data[i],
                x: (i % self.width as usize) as u32,
                y: (i / self.width as usize) as u32,
            }),
        }
    }

    pub fn class_mask(&self, class_id: u8) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.data.iter().map(|v| *v == class_id).collect(),
        )
        .expect("shape is valid")
    }

    /// Number of pixels not equal to `ignore_id`.
    pub fn labelled_count(&self, ignore_id: u8) -> usize {
        self.data.iter().filter(|v| **v != ignore_id).count()
    }

    pub fn check_same_shape(&self, width: u32, height: u32) -> Result<()> {
        if self.shape() != (width, height) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Paints `class_id` over every set pixel of `mask`.
    pub fn paint(&mut self, mask: &BinaryMask, class_id: u8) -> Result<()> {
        self.check_same_shape(mask.width(), mask.height())?;
        for i in mask.indices() {
            self.data[i] = class_id;
        }
        Ok(())
    }
}

/// Paints `layers` over a copy of `base` in order; the last layer covering a
/// pixel decides its class.
pub fn compose_labelmap(
    base: &LabelMap,
    layers: &[(BinaryMask, u8)],
    table: &ClassTable,
) -> Result<LabelMap> {
    for (mask, class_id) in layers {
        if !table.contains(*class_id) {
            return Err(Error::UnknownClass(*class_id));
        }
        base.check_same_shape(mask.width(), mask.height())?;
    }
    let mut out = base.clone();
    for (mask, class_id) in layers {
        out.paint(mask, *class_id)?;
    }
    Ok(out)
}
