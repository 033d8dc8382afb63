use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense single-object mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != pixel_count(width, height) {
            return Err(Error::ShapeMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![false; pixel_count(width, height)],
        })
    }

    pub fn full(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![true; pixel_count(width, height)],
        })
    }

    /// Mask from a predicate over `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(pixel_count(width, height));
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Mask with the given row-major pixel indices set.
    pub fn from_indices(
        width: u32,
        height: u32,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut m = Self::empty(width, height)?;
        for i in indices {
            if i >= m.bits.len() {
                return Err(Error::ShapeMismatch(format!(
                    "pixel index {i} outside {width}x{height} mask"
                )));
            }
            m.bits[i] = true;
        }
        Ok(m)
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(
            x < self.width && y < self.height,
            "({x}, {y}) out of bounds"
        );
        self.bits[(y * self.width + x) as usize] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Row-major indices of set pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
    }

    /// Coordinates of set pixels in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.indices()
            .map(move |i| ((i % w) as u32, (i / w) as u32))
    }

    pub fn union_with(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_same_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count())
    }

    /// Intersection over union; `None` when both masks are empty.
    pub fn iou(&self, other: &BinaryMask) -> Result<Option<f64>> {
        let inter = self.intersection_area(other)?;
        let union = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a || **b)
            .count();
        Ok((union > 0).then(|| inter as f64 / union as f64))
    }

    pub(crate) fn check_same_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn to_rle(&self) -> RleMask {
        rle_encode(self)
    }
}

/// Run-length encoded mask. Runs are row-major and alternate 0, 1, 0, ...
/// starting with zeros; a leading zero-length run marks a mask whose first
/// pixel is set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height)?;
        let total: u64 = self.counts.iter().map(|c| u64::from(*c)).sum();
        let expected = u64::from(self.width) * u64::from(self.height);
        if total != expected {
            return Err(Error::ShapeMismatch(format!(
                "run lengths sum to {total}, expected {expected} for {}x{}",
                self.width, self.height
            )));
        }
        if let Some(i) = self.counts.windows(2).position(|w| w[0] == 0 && w[1] == 0) {
            return Err(Error::InvalidRle(format!(
                "adjacent zero-length runs at {i} and {}",
                i + 1
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> u64 {
        self.counts
            .iter()
            .skip(1)
            .step_by(2)
            .map(|c| u64::from(*c))
            .sum()
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        rle_decode(self)
    }
}

pub fn rle_encode(mask: &BinaryMask) -> RleMask {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for &b in &mask.bits {
        if b != current {
            counts.push(run);
            run = 0;
            current = b;
        }
        run += 1;
    }
    counts.push(run);
    RleMask {
        width: mask.width,
        height: mask.height,
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<BinaryMask> {
    rle.validate()?;
    let mut bits = Vec::with_capacity(pixel_count(rle.width, rle.height));
    let mut value = false;
    for &c in &rle.counts {
        bits.extend(std::iter::repeat_n(value, c as usize));
        value = !value;
    }
    BinaryMask::new(rle.width, rle.height, bits)
}

pub(crate) fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

pub(crate) fn pixel_count(width: u32, height: u32) -> usize {
    width as usize * height as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: u32, h: u32, bits: &[u8]) -> BinaryMask {
        BinaryMask::new(w, h, bits.iter().map(|b| *b != 0).collect()).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(rle_encode(&mask(2, 2, &[0, 0, 0, 0])).counts, vec![4]);
        assert_eq!(rle_encode(&mask(2, 2, &[1, 1, 1, 1])).counts, vec![0, 4]);
        assert_eq!(rle_encode(&mask(3, 1, &[0, 1, 0])).counts, vec![1, 1, 1]);
    }

    #[test]
    fn decode_examples() {
        let r = |w, h, counts: Vec<u32>| RleMask {
            width: w,
            height: h,
            counts,
        };
        assert_eq!(
            rle_decode(&r(2, 2, vec![4])).unwrap(),
            mask(2, 2, &[0, 0, 0, 0])
        );
        assert_eq!(
            rle_decode(&r(2, 2, vec![0, 4])).unwrap(),
            mask(2, 2, &[1, 1, 1, 1])
        );
        assert_eq!(
            rle_decode(&r(3, 1, vec![1, 1, 1])).unwrap(),
            mask(3, 1, &[0, 1, 0])
        );
    }

    #[test]
    fn decode_rejects_bad_sum() {
        let r = RleMask {
            width: 2,
            height: 2,
            counts: vec![1, 2],
        };
        assert!(matches!(rle_decode(&r), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn decode_rejects_adjacent_zero_runs() {
        let r = RleMask {
            width: 2,
            height: 2,
            counts: vec![2, 0, 0, 2],
        };
        assert!(matches!(rle_decode(&r), Err(Error::InvalidRle(_))));
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(BinaryMask::empty(0, 3).is_err());
        assert!(BinaryMask::new(2, 2, vec![true; 3]).is_err());
    }

    #[test]
    fn rle_area_matches_popcount() {
        let m = mask(3, 2, &[1, 0, 1, 1, 1, 0]);
        assert_eq!(m.to_rle().area(), 4);
        assert_eq!(m.area(), 4);
    }

    proptest! {
        #[test]
        fn roundtrip(w in 1u32..24, h in 1u32..24, seed in any::<u64>()) {
            let mut s = seed;
            let m = BinaryMask::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 33) & 1 == 1
            }).unwrap();
            let rle = rle_encode(&m);
            prop_assert!(rle.validate().is_ok());
            prop_assert_eq!(rle_decode(&rle).unwrap(), m);
            prop_assert_eq!(rle_encode(&rle_decode(&rle).unwrap()), rle);
        }
    }
}
