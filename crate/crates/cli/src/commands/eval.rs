use std::fs::OpenOptions;
use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};

use sctl_core::dataset::format_f64;
use sctl_core::predict::{evaluate, fit, PredictorKind};

use crate::io;
use crate::EvalArgs;

pub const EVAL_HEADER: &str = "scenario,features,mse,sse,accuracy,f1,wall_seconds";

pub fn run(args: &EvalArgs) -> Result<()> {
    let start = Instant::now();
    let source = io::read_dataset(&args.source, &args.discrete)?;
    let target = io::read_dataset(&args.target_data, &args.discrete)?;
    let features = io::split_list(&args.features);
    for f in &features {
        source.column(f).context("source data")?;
        target.column(f).context("target data")?;
    }
    let kind: PredictorKind = args.predictor.parse().map_err(anyhow::Error::msg)?;
    let kind = kind.for_target(source.column(&args.target)?.is_continuous());
    let model = fit(kind, &source, &features, &args.target)?;
    let m = evaluate(&model, &target, &args.target)?;
    let scenario = args.scenario.clone().unwrap_or_else(|| {
        args.target_data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    let row = format!(
        "{scenario},{},{},{},{},{},{:.6}",
        features.join(";"),
        format_f64(m.mse),
        format_f64(m.sse),
        opt(m.accuracy),
        opt(m.f1),
        start.elapsed().as_secs_f64()
    );
    match &args.out {
        Some(path) => {
            let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("cannot open {}", path.display()))?;
            if fresh {
                writeln!(f, "{EVAL_HEADER}")?;
            }
            writeln!(f, "{row}")?;
        }
        None => println!("{EVAL_HEADER}\n{row}"),
    }
    Ok(())
}
