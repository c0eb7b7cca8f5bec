use anyhow::{bail, Result};

use sctl_core::citest::{CiTest, DataCi, OracleCi};
use sctl_core::mb::{discover, MbAlgorithm, MbOptions};

use crate::io;
use crate::MbArgs;

pub fn run(args: &MbArgs) -> Result<()> {
    let algo: MbAlgorithm = args.algo.parse().map_err(anyhow::Error::msg)?;
    let opts = MbOptions {
        alpha: args.alpha,
        max_conditioning: args.max_cond,
    };
    let result = match (&args.graph, &args.data) {
        (Some(g), _) => {
            let graph = io::read_graph(g)?;
            let ci = OracleCi::new(&graph);
            discover(algo, &ci as &dyn CiTest, graph.vertices(), &args.target, &opts)?
        }
        (None, Some(d)) => {
            let data = io::read_dataset(d, &args.discrete)?;
            let ci = DataCi::new(&data);
            discover(algo, &ci as &dyn CiTest, &data.names(), &args.target, &opts)?
        }
        (None, None) => bail!("either --data or --graph is required"),
    };
    println!("blanket: {}", result.blanket);
    println!("tests: {}", result.test_count);
    print!("{}", result.trace_text());
    Ok(())
}
