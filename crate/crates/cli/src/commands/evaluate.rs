use std::path::PathBuf;

use annob_core::metrics::percent_2dp;
use annob_core::raster::resolve_path;
use annob_core::{load_labelmap, AnnotationKind, ClassTable, ConfusionMatrix};
use anyhow::{bail, Context, Result};
use clap::Args;

use super::{load_manifest, manifest_base, write_output};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Manifest with predicted annotations
    #[arg(long)]
    pred: PathBuf,
    /// Manifest with ground-truth annotations
    #[arg(long)]
    gt: PathBuf,
    /// CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), percent_2dp)
}

/// Every annotated (clip, offset) of the prediction must be annotated in the
/// ground truth; extra ground-truth frames are not scored.
pub fn run(args: EvaluateArgs) -> Result<()> {
    let pred = load_manifest(&args.pred)?;
    let gt = load_manifest(&args.gt)?;
    if pred.class_table_name != gt.class_table_name {
        bail!(
            "class tables differ: {:?} vs {:?}",
            pred.class_table_name,
            gt.class_table_name
        );
    }
    let table = ClassTable::by_name(&gt.class_table_name)?;
    let (pred_base, gt_base) = (manifest_base(&args.pred), manifest_base(&args.gt));
    let mut cm = ConfusionMatrix::new(&table);
    let mut frames = 0usize;
    for clip in &pred.clips {
        for ann in clip
            .annotations
            .iter()
            .filter(|a| a.kind != AnnotationKind::None)
        {
            let truth = gt
                .clip(&clip.clip_id)
                .and_then(|c| c.annotation_at(ann.offset))
                .filter(|a| a.kind != AnnotationKind::None);
            let Some(truth) = truth else {
                bail!(
                    "no ground truth for clip {:?} offset {}",
                    clip.clip_id,
                    ann.offset
                );
            };
            let p = load_labelmap(resolve_path(&pred_base, &ann.path), &table)?;
            let t = load_labelmap(resolve_path(&gt_base, &truth.path), &table)?;
            cm.accumulate(&p, &t)
                .with_context(|| format!("clip {:?} offset {}", clip.clip_id, ann.offset))?;
            frames += 1;
        }
    }
    if frames == 0 {
        bail!("prediction manifest has no annotated frames");
    }
    log::info!("evaluated {frames} frames");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "iou", "acc"])?;
    for entry in table.entries() {
        w.write_record([
            entry.name.as_str(),
            &cell(cm.class_iou(entry.id)),
            &cell(cm.class_accuracy(entry.id)),
        ])?;
    }
    w.write_record(["mIoU", &percent_2dp(cm.miou()?), ""])?;
    w.write_record(["mAcc", "", &percent_2dp(cm.macc()?)])?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes)?)
}
