mod plan;
mod preprocess;
mod score;
mod simulate;

use std::path::Path;

use travelsim_core::metrics::PerWeights;

use crate::sources::read_input;
use crate::{Cli, Command, Failure};

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if cli.global.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    match &cli.command {
        Command::Preprocess(args) => preprocess::run(&cli.global, args),
        Command::Plan(args) => plan::run(&cli.global, args),
        Command::Simulate(args) => simulate::run(&cli.global, args),
        Command::Score(args) => score::run(&cli.global, args),
    }
}

fn load_weights(path: Option<&Path>) -> Result<PerWeights, Failure> {
    let Some(path) = path else {
        return Ok(PerWeights::default());
    };
    let weights: PerWeights = serde_json::from_str(&read_input(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    weights
        .validate()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(weights)
}

/// Runs `f` over `items` on `jobs` threads, keeping input order.
fn parallel<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, Failure> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}
