use std::collections::HashMap;

use super::class_table::ClassTable;
use super::label_map::LabelMap;
use super::mask::{check_dims, pixel_count, BinaryMask};
use crate::error::{Error, Result};

/// A 4-connected region of equal label value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub value: u8,
    /// Row-major pixel indices, ascending.
    pub pixels: Vec<usize>,
}

/// Labels 4-connected regions of equal value among pixels accepted by
/// `keep`. Components are returned in row-major order of their first pixel.
pub fn connected_components(labels: &LabelMap, keep: impl Fn(u8) -> bool) -> Vec<Component> {
    let w = labels.width() as usize;
    let h = labels.height() as usize;
    let data = labels.data();
    let mut visited = vec![false; data.len()];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for start in 0..data.len() {
        if visited[start] || !keep(data[start]) {
            continue;
        }
        let value = data[start];
        let mut pixels = Vec::new();
        visited[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !visited[j] && data[j] == value {
                    visited[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        pixels.sort_unstable();
        out.push(Component { value, pixels });
    }
    out
}

/// Integer instance-id raster aligned with a label map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceRaster {
    width: u32,
    height: u32,
    data: Vec<u32>,
}

impl InstanceRaster {
    pub fn new(width: u32, height: u32, data: Vec<u32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != pixel_count(width, height) {
            return Err(Error::ShapeMismatch(format!(
                "{} ids for a {width}x{height} instance raster",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceRecord {
    pub instance_id: u32,
    pub class_id: u8,
    pub mask: BinaryMask,
}

/// Splits the instance-level classes of `labels` into per-instance masks.
///
/// With an instance raster, pixels are grouped by `(instance id, class)`.
/// Without one, every 4-connected component of an instance-level class
/// becomes a record, numbered from 1 in scan order. Records come out in
/// row-major order of their first pixel either way.
pub fn extract_instances(
    labels: &LabelMap,
    instance_ids: Option<&InstanceRaster>,
    table: &ClassTable,
) -> Result<Vec<InstanceRecord>> {
    let (w, h) = labels.shape();
    match instance_ids {
        None => Ok(connected_components(labels, |v| table.is_instance_level(v))
            .into_iter()
            .enumerate()
            .map(|(i, c)| InstanceRecord {
                instance_id: i as u32 + 1,
                class_id: c.value,
                mask: BinaryMask::from_indices(w, h, c.pixels).expect("indices in bounds"),
            })
            .collect()),
        Some(ids) => {
            if (ids.width, ids.height) != (w, h) {
                return Err(Error::ShapeMismatch(format!(
                    "instance raster {}x{} vs label map {w}x{h}",
                    ids.width, ids.height
                )));
            }
            let mut order: Vec<(u32, u8)> = Vec::new();
            let mut groups: HashMap<(u32, u8), Vec<usize>> = HashMap::new();
            for (i, (&class_id, &inst)) in labels.data().iter().zip(&ids.data).enumerate() {
                if !table.is_instance_level(class_id) {
                    continue;
                }
                groups
                    .entry((inst, class_id))
                    .or_insert_with(|| {
                        order.push((inst, class_id));
                        Vec::new()
                    })
                    .push(i);
            }
            Ok(order
                .into_iter()
                .map(|key| InstanceRecord {
                    instance_id: key.0,
                    class_id: key.1,
                    mask: BinaryMask::from_indices(w, h, groups.remove(&key).unwrap_or_default())
                        .expect("indices in bounds"),
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ROAD: u8 = 0;
    const CAR: u8 = 13;
    const PERSON: u8 = 11;

    #[test]
    fn no_instance_classes() {
        let t = ClassTable::cityscapes();
        let m = LabelMap::filled(4, 4, ROAD).unwrap();
        assert!(extract_instances(&m, None, &t).unwrap().is_empty());
    }

    #[test]
    fn two_separate_car_pixels() {
        let t = ClassTable::cityscapes();
        let mut m = LabelMap::filled(4, 4, ROAD).unwrap();
        m.set(0, 0, CAR);
        m.set(2, 2, CAR);
        let recs = extract_instances(&m, None, &t).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.mask.area() == 1 && r.class_id == CAR));
        assert_eq!(recs[0].instance_id, 1);
        assert!(recs[0].mask.get(0, 0));
        assert!(recs[1].mask.get(2, 2));
    }

    #[test]
    fn diagonal_pixels_are_separate_components() {
        let t = ClassTable::cityscapes();
        let mut m = LabelMap::filled(2, 2, ROAD).unwrap();
        m.set(0, 0, CAR);
        m.set(1, 1, CAR);
        assert_eq!(extract_instances(&m, None, &t).unwrap().len(), 2);
    }

    #[test]
    fn one_region_split_by_instance_ids() {
        // 2x2 car block at the top-left, left column id 26001, right column id 26002.
        let t = ClassTable::cityscapes();
        let mut m = LabelMap::filled(4, 4, ROAD).unwrap();
        let mut ids = vec![0u32; 16];
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            m.set(x, y, CAR);
            ids[(y * 4 + x) as usize] = if x == 0 { 26001 } else { 26002 };
        }
        let raster = InstanceRaster::new(4, 4, ids).unwrap();
        let recs = extract_instances(&m, Some(&raster), &t).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].instance_id, 26001);
        assert_eq!(recs[1].instance_id, 26002);
        assert_eq!(recs[0].mask.area(), 2);
        assert_eq!(recs[1].mask.area(), 2);
    }

    #[test]
    fn instance_raster_shape_checked() {
        let t = ClassTable::cityscapes();
        let m = LabelMap::filled(4, 4, CAR).unwrap();
        let raster = InstanceRaster::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(
            extract_instances(&m, Some(&raster), &t),
            Err(Error::ShapeMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn components_partition_instance_pixels(
            data in prop::collection::vec(prop::sample::select(vec![ROAD, CAR, PERSON, 255]), 48)
        ) {
            let t = ClassTable::cityscapes();
            let m = LabelMap::new(8, 6, data).unwrap();
            let recs = extract_instances(&m, None, &t).unwrap();
            let mut cover = [0u32; 48];
            for r in &recs {
                prop_assert!(r.mask.area() >= 1);
                for i in r.mask.indices() {
                    cover[i] += 1;
                    prop_assert_eq!(m.data()[i], r.class_id);
                }
            }
            for (i, v) in m.data().iter().enumerate() {
                let expected = u32::from(t.is_instance_level(*v));
                prop_assert_eq!(cover[i], expected);
            }
        }
    }
}
