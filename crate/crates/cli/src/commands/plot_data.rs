use std::collections::BTreeMap;
use std::fs::File;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use super::write_output;

#[derive(Args)]
pub struct PlotDataArgs {
    /// Results CSV with coarse_fraction, variant and miou columns
    #[arg(long)]
    results: PathBuf,
    /// Tidy CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

const VARIANTS: [&str; 2] = ["non-refined", "refined"];

/// Fraction as an integer number of millionths, so rows sort and compare
/// exactly.
fn fraction_key(text: &str) -> Result<i64> {
    let f: f64 = text
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad coarse_fraction {text:?}"))?;
    if !(0.0..=1.0).contains(&f) {
        bail!("coarse_fraction {f} outside [0, 1]");
    }
    Ok((f * 1e6).round() as i64)
}

pub fn run(args: PlotDataArgs) -> Result<()> {
    let file =
        File::open(&args.results).with_context(|| format!("reading {}", args.results.display()))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| anyhow!("results CSV has no {name:?} column"))
    };
    let (fc, vc, mc) = (
        column("coarse_fraction")?,
        column("variant")?,
        column("miou")?,
    );
    let mut rows: BTreeMap<(i64, &str), f64> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |c: usize| {
            record
                .get(c)
                .ok_or_else(|| anyhow!("line {line}: missing field"))
        };
        let fraction = fraction_key(field(fc)?).with_context(|| format!("line {line}"))?;
        let variant = field(vc)?.trim();
        let variant = VARIANTS
            .into_iter()
            .find(|v| *v == variant)
            .ok_or_else(|| anyhow!("line {line}: unknown variant {variant:?}"))?;
        let miou: f64 = field(mc)?
            .trim()
            .parse()
            .map_err(|_| anyhow!("line {line}: bad miou"))?;
        if !(0.0..=100.0).contains(&miou) {
            bail!("line {line}: miou {miou} outside [0, 100]");
        }
        if rows.insert((fraction, variant), miou).is_some() {
            bail!(
                "line {line}: duplicate row for ({}, {variant})",
                field(fc)?.trim()
            );
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fraction", "variant", "miou"])?;
    for ((fraction, variant), miou) in rows {
        w.write_record([
            (fraction as f64 / 1e6).to_string(),
            variant.to_string(),
            format!("{miou:.2}"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes)?)
}
