use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use log::warn;

use crate::io;
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::{Cli, Mismatch, ReplayArgs};

/// Replaces the value of `--out`/`-o` in `argv`.
fn redirect_output(argv: &[String], out: &str) -> Vec<String> {
    let mut res = Vec::with_capacity(argv.len());
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" || a == "-o" {
            res.push(a.clone());
            it.next();
            res.push(out.to_string());
        } else if a.starts_with("--out=") {
            res.push(format!("--out={out}"));
        } else {
            res.push(a.clone());
        }
    }
    res
}

pub fn run(args: &ReplayArgs) -> Result<()> {
    let manifest: RunManifest = io::read_json(&args.manifest)?;
    let original_dir = args
        .manifest
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let out = args.out.clone().unwrap_or_else(|| {
        let mut s = original_dir.clone().into_os_string();
        s.push(".replay");
        PathBuf::from(s)
    });
    let out = std::path::absolute(&out)?;
    for (path, digest) in &manifest.input_digests {
        let p = manifest.cwd.join(path);
        match io::file_digest(&p) {
            Ok(d) if &d == digest => {}
            Ok(_) => warn!("input {path} changed since the recorded run"),
            Err(_) => warn!("input {path} is missing"),
        }
    }
    let argv = redirect_output(&manifest.argv, &out.to_string_lossy());
    let cli = Cli::try_parse_from(std::iter::once("sctl".to_string()).chain(argv.iter().cloned()))
        .context("manifest arguments no longer parse")?;
    if matches!(cli.command, crate::Command::Replay(_)) {
        bail!("refusing to replay a replay");
    }
    let cwd = std::env::current_dir()?;
    std::env::set_current_dir(&manifest.cwd)
        .with_context(|| format!("cannot enter recorded directory {}", manifest.cwd.display()))?;
    let result = crate::run(cli, argv);
    std::env::set_current_dir(cwd)?;
    result?;

    let mut mismatched = Vec::new();
    for (name, digest) in &manifest.outputs {
        if manifest.nondeterministic.contains(name) || name == MANIFEST_FILE {
            continue;
        }
        let path = out.join(name);
        let now = io::file_digest(&path).unwrap_or_default();
        if &now == digest {
            println!("identical {name}");
        } else {
            println!("DIFFERENT {name}");
            mismatched.push(name.clone());
        }
    }
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(Mismatch(format!("outputs differ from the manifest: {}", mismatched.join(", "))).into())
    }
}
