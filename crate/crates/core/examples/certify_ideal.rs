//! Minimal library walkthrough: simulate the ideal device, certify the log.
//!
//! Run with: cargo run --example certify_ideal

use kcbs_core::bounds::{default_curve_grid, ns_analytic_curve};
use kcbs_core::certify::{certify_log, CertificationParams};
use kcbs_core::sim::{run_experiment, DeviceModel, InputDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = DeviceModel::ideal();
    let dist = InputDistribution::uniform();
    let log = run_experiment(model, dist, 100_000, 1)?;
    let report = certify_log(
        &log,
        &CertificationParams::default(),
        &ns_analytic_curve(&default_curve_grid())?,
    )?;
    println!(
        "L-hat = {:.4}, {:.1} certified bits",
        report.l_hat, report.entropy_bound_bits
    );
    Ok(())
}
