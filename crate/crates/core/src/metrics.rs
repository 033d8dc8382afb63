//! Confusion-matrix based segmentation metrics.
//!
//! Rows are ground truth, columns are predictions. Ground-truth ignore
//! pixels are skipped. A prediction of ignore over a valid ground-truth
//! pixel is recorded in a separate per-class `missed` column and counts as a
//! false negative for that class.

use crate::error::{Error, Result};
use crate::raster::{ClassTable, LabelMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_ids: Vec<u8>,
    index: [Option<u16>; 256],
    ignore_id: u8,
    counts: Vec<u64>,
    missed: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(table: &ClassTable) -> Self {
        let class_ids: Vec<u8> = table.entries().iter().map(|e| e.id).collect();
        let mut index = [None; 256];
        for (i, id) in class_ids.iter().enumerate() {
            index[*id as usize] = Some(i as u16);
        }
        let k = class_ids.len();
        Self {
            class_ids,
            index,
            ignore_id: table.ignore_id(),
            counts: vec![0; k * k],
            missed: vec![0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.class_ids.len()
    }

    pub fn class_ids(&self) -> &[u8] {
        &self.class_ids
    }

    /// Pixels with ground truth `gt` predicted as `pred`.
    pub fn count(&self, gt: u8, pred: u8) -> u64 {
        match (self.idx(gt), self.idx(pred)) {
            (Some(g), Some(p)) => self.counts[g * self.k() + p],
            _ => 0,
        }
    }

    /// Pixels with ground truth `gt` predicted as ignore.
    pub fn missed(&self, gt: u8) -> u64 {
        self.idx(gt).map_or(0, |g| self.missed[g])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.missed.iter().sum::<u64>()
    }

    fn idx(&self, id: u8) -> Option<usize> {
        self.index[id as usize].map(usize::from)
    }

    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        if pred.shape() != gt.shape() {
            let (pw, ph) = pred.shape();
            let (gw, gh) = gt.shape();
            return Err(Error::ShapeMismatch(format!(
                "prediction {pw}x{ph} vs ground truth {gw}x{gh}"
            )));
        }
        let k = self.k();
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            if g == self.ignore_id {
                continue;
            }
            let gi = self.idx(g).ok_or(Error::UnknownClass(g))?;
            if p == self.ignore_id {
                self.missed[gi] += 1;
            } else {
                let pi = self.idx(p).ok_or(Error::UnknownClass(p))?;
                self.counts[gi * k + pi] += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix> {
        if self.class_ids != other.class_ids || self.ignore_id != other.ignore_id {
            return Err(Error::ShapeMismatch(format!(
                "confusion matrices over {} and {} classes",
                self.k(),
                other.k()
            )));
        }
        let mut out = self.clone();
        for (a, b) in out.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in out.missed.iter_mut().zip(&other.missed) {
            *a += b;
        }
        Ok(out)
    }

    fn tp_fp_fn(&self, i: usize) -> (u64, u64, u64) {
        let k = self.k();
        let tp = self.counts[i * k + i];
        let col: u64 = (0..k).map(|g| self.counts[g * k + i]).sum();
        let row: u64 = self.counts[i * k..(i + 1) * k].iter().sum::<u64>() + self.missed[i];
        (tp, col - tp, row - tp)
    }

    /// TP / (TP + FP + FN); `None` when the class is absent from both
    /// prediction and ground truth, or unknown.
    pub fn class_iou(&self, class_id: u8) -> Option<f64> {
        let (tp, fp, fneg) = self.tp_fp_fn(self.idx(class_id)?);
        let denom = tp + fp + fneg;
        (denom > 0).then(|| tp as f64 / denom as f64)
    }

    /// Recall TP / (TP + FN); `None` when the class never occurs in ground
    /// truth.
    pub fn class_accuracy(&self, class_id: u8) -> Option<f64> {
        let (tp, _, fneg) = self.tp_fp_fn(self.idx(class_id)?);
        let denom = tp + fneg;
        (denom > 0).then(|| tp as f64 / denom as f64)
    }

    /// Mean of the defined per-class IoUs.
    pub fn miou(&self) -> Result<f64> {
        self.mean_defined(|id| self.class_iou(id))
    }

    /// Mean of the defined per-class recalls.
    pub fn macc(&self) -> Result<f64> {
        self.mean_defined(|id| self.class_accuracy(id))
    }

    fn mean_defined(&self, f: impl Fn(u8) -> Option<f64>) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let vals: Vec<f64> = self.class_ids.iter().filter_map(|id| f(*id)).collect();
        if vals.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Ok(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// A ratio as a percentage with two decimals, e.g. `0.7695` -> `"76.95"`.
pub fn percent_2dp(ratio: f64) -> String {
    format!("{:.2}", ratio * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROAD: u8 = 0;
    const CAR: u8 = 13;

    fn table() -> ClassTable {
        ClassTable::cityscapes()
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let t = table();
        let m = LabelMap::new(3, 1, vec![ROAD, CAR, 10]).unwrap();
        let mut cm = ConfusionMatrix::new(&t);
        cm.accumulate(&m, &m).unwrap();
        for g in cm.class_ids().to_vec() {
            for p in cm.class_ids().to_vec() {
                if g != p {
                    assert_eq!(cm.count(g, p), 0);
                }
            }
        }
        assert_eq!(cm.class_iou(CAR), Some(1.0));
        assert_eq!(cm.miou().unwrap(), 1.0);
        assert_eq!(cm.macc().unwrap(), 1.0);
    }

    #[test]
    fn all_ignore_ground_truth_leaves_matrix_unchanged() {
        let t = table();
        let gt = LabelMap::filled(2, 2, 255).unwrap();
        let pred = LabelMap::filled(2, 2, CAR).unwrap();
        let mut cm = ConfusionMatrix::new(&t);
        cm.accumulate(&pred, &gt).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(&t));
        assert!(matches!(cm.miou(), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn hand_enumerated_two_by_two() {
        let t = table();
        let gt = LabelMap::new(2, 2, vec![ROAD, ROAD, CAR, CAR]).unwrap();
        let pred = LabelMap::new(2, 2, vec![ROAD, CAR, CAR, CAR]).unwrap();
        let mut cm = ConfusionMatrix::new(&t);
        cm.accumulate(&pred, &gt).unwrap();
        assert_eq!(cm.count(ROAD, ROAD), 1);
        assert_eq!(cm.count(ROAD, CAR), 1);
        assert_eq!(cm.count(CAR, CAR), 2);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.class_iou(CAR), Some(2.0 / 3.0));
        assert_eq!(cm.class_iou(ROAD), Some(0.5));
        assert_eq!(cm.class_iou(10), None);
        assert_eq!(cm.miou().unwrap(), (0.5 + 2.0 / 3.0) / 2.0);
        assert!((cm.miou().unwrap() - 7.0 / 12.0).abs() < 1e-15);
        // recall: road 1/2, car 2/2
        assert_eq!(cm.macc().unwrap(), 0.75);
    }

    #[test]
    fn ignore_prediction_is_false_negative() {
        let t = table();
        let gt = LabelMap::new(2, 1, vec![CAR, CAR]).unwrap();
        let pred = LabelMap::new(2, 1, vec![CAR, 255]).unwrap();
        let mut cm = ConfusionMatrix::new(&t);
        cm.accumulate(&pred, &gt).unwrap();
        assert_eq!(cm.missed(CAR), 1);
        assert_eq!(cm.class_iou(CAR), Some(0.5));
        assert_eq!(cm.class_accuracy(CAR), Some(0.5));
    }

    #[test]
    fn shape_mismatch() {
        let t = table();
        let mut cm = ConfusionMatrix::new(&t);
        let a = LabelMap::filled(2, 2, 0).unwrap();
        let b = LabelMap::filled(2, 3, 0).unwrap();
        assert!(matches!(
            cm.accumulate(&a, &b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn merge_with_zero_is_identity_and_commutes() {
        let t = table();
        let gt = LabelMap::new(2, 2, vec![ROAD, ROAD, CAR, CAR]).unwrap();
        let pred = LabelMap::new(2, 2, vec![ROAD, CAR, CAR, CAR]).unwrap();
        let mut a = ConfusionMatrix::new(&t);
        a.accumulate(&pred, &gt).unwrap();
        let mut b = ConfusionMatrix::new(&t);
        b.accumulate(&gt, &pred).unwrap();
        assert_eq!(a.merge(&ConfusionMatrix::new(&t)).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
    }

    #[test]
    fn accumulating_twice_doubles_counts_keeps_ratios() {
        let t = table();
        let gt = LabelMap::new(2, 2, vec![ROAD, 255, CAR, CAR]).unwrap();
        let pred = LabelMap::new(2, 2, vec![ROAD, CAR, 255, CAR]).unwrap();
        let mut once = ConfusionMatrix::new(&t);
        once.accumulate(&pred, &gt).unwrap();
        let mut twice = once.clone();
        twice.accumulate(&pred, &gt).unwrap();
        assert_eq!(twice.total(), 2 * once.total());
        assert_eq!(twice.miou().unwrap(), once.miou().unwrap());
        assert_eq!(twice.macc().unwrap(), once.macc().unwrap());
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(percent_2dp(7.0 / 12.0), "58.33");
        assert_eq!(percent_2dp(1.0), "100.00");
    }
}
