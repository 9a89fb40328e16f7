//! Run one verification suite programmatically and print its JSON report.

use qonsager::config::RunConfig;
use qonsager::report::to_json_string;
use qonsager::suites::{run_suite, Context, Suite};

fn main() -> qonsager::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.output.csv = false;
    cfg.output.timing = false;
    let report = run_suite(Suite::Spectrum, &Context::new(cfg))?;
    println!("{}", to_json_string(&report)?);
    Ok(())
}
