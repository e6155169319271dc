//! Drives the command-line layer from code and prints a report in both
//! formats.
//!
//! ```bash
//! cargo run --example report
//! ```

use clap::Parser;
use paracolour::cli::{execute, parse_report, write_report, Cli, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::try_parse_from(["paracolour", "independence", "--max-factors", "3"])?;
    let doc = execute(&cli)?;
    let json = write_report(&doc, Format::Json)?;
    println!("{}", String::from_utf8(json.clone())?);
    assert_eq!(parse_report(&json, Format::Json)?, doc);
    print!("{}", String::from_utf8(write_report(&doc, Format::Csv)?)?);
    println!("\nall checks passed: {}", doc.passed);
    Ok(())
}
