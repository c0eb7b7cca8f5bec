use anyhow::Result;

use sctl_core::sctl::{ess, sctl, to_json_lines, CiMethod, Outcome, SctlConfig};
use sctl_core::VertexSet;

use crate::io;
use crate::{Abstained, SelectArgs};

pub fn run(args: &SelectArgs, seed: Option<u64>) -> Result<()> {
    let source = io::read_dataset(&args.source, &args.discrete)?;
    let target = args
        .target_data
        .as_ref()
        .map(|p| io::read_dataset(p, &args.discrete))
        .transpose()?;
    let contexts: VertexSet = io::split_list(&args.contexts).into_iter().collect();
    let mut cfg = SctlConfig::new(&args.target, contexts);
    cfg.alpha = args.alpha;
    cfg.mb_algorithm = args.algo.parse().map_err(anyhow::Error::msg)?;
    cfg.regressor = args.predictor.parse().map_err(anyhow::Error::msg)?;
    cfg.max_subset_size = args.max_subset_size;
    cfg.max_conditioning = args.max_cond;
    cfg.ess_cap = args.ess_cap;
    cfg.fold_seed = seed.unwrap_or(0);
    let ci = match &args.graph {
        Some(g) => CiMethod::Oracle(io::read_graph(g)?),
        None => CiMethod::Auto,
    };
    let outcome = if args.ess {
        ess(&source, target.as_ref(), &cfg, &ci)?
    } else {
        sctl(&source, target.as_ref(), &cfg, &ci)?
    };
    let report = outcome.report();
    if let Some(b) = &report.blanket {
        eprintln!("blanket: {} ({} tests)", b.blanket, b.test_count);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match outcome {
        Outcome::Abstained(r) => Err(Abstained(format!(
            "none of {} candidate subsets separates `{}` from the contexts",
            r.subsets_tested, args.target
        ))
        .into()),
        Outcome::Selected(sel) => {
            let text = to_json_lines(&sel.ranked);
            match &args.out {
                Some(p) => io::write(p, text)?,
                None => print!("{text}"),
            }
            eprintln!("best: {}", sel.best[0].features);
            Ok(())
        }
    }
}
