//! Sweep every default parameter over a coarse grid and rank by correlation.

use hand_codesign::sensitivity::{default_specs, report, run_sweep, ParamSpec, SweepBase};

fn main() -> hand_codesign::Result<()> {
    let specs: Vec<ParamSpec> = default_specs().into_iter().map(|s| ParamSpec { samples: 25, ..s }).collect();
    let result = run_sweep(&specs, &SweepBase::default(), 1)?;
    println!("{} samples", result.samples.len());
    print!("{}", report(&result).summary());
    Ok(())
}
