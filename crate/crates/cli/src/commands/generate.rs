use std::time::Instant;

use anyhow::{Context, Result};

use sctl_core::synth::{generate_scenario, Scenario};

use crate::io;
use crate::manifest::RunManifest;
use crate::GenerateArgs;

pub fn target_file(r: usize) -> String {
    format!("target_{r:02}.csv")
}

pub fn run(args: &GenerateArgs, seed: Option<u64>, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut sc: Scenario = io::read_json(&args.config)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    let data = generate_scenario(&sc)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut manifest = RunManifest::new("generate", argv, &args.config, seed, &args.out)?;
    manifest.add_input(&args.config)?;
    manifest.write_output("source.csv", data.source.to_csv_string())?;
    for (i, t) in data.targets.iter().enumerate() {
        manifest.write_output(&target_file(i + 1), t.to_csv_string())?;
    }
    manifest.write_output("scenario.meta.json", serde_json::to_string_pretty(&data.meta)? + "\n")?;
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.save()?;
    println!(
        "wrote source.csv and {} target files to {}",
        data.targets.len(),
        args.out.display()
    );
    Ok(())
}
