//! Writes a generated trace as JSON Lines.
//!
//! ```text
//! cargo run --example gen_trace -- <out.jsonl> [jobs] [days] [seed]
//! ```

use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};
use mrtrace::generate::{generate_records, GeneratorConfig};
use mrtrace::temporal::DAY;
use mrtrace::trace::write_jsonl;

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args
        .first()
        .context("usage: gen_trace <out.jsonl> [jobs] [days] [seed]")?;
    let arg = |i: usize, default: u64| -> Result<u64> {
        args.get(i).map_or(Ok(default), |s| {
            s.parse().with_context(|| format!("bad number `{s}`"))
        })
    };
    let config = GeneratorConfig {
        jobs: arg(1, 10_000)? as usize,
        span_seconds: arg(2, 7)? * DAY,
        seed: arg(3, 42)?,
        ..GeneratorConfig::default()
    };
    let records = generate_records(&config)?;
    let file = File::create(out).with_context(|| format!("cannot create {out}"))?;
    write_jsonl(BufWriter::new(file), &records)?;
    eprintln!("wrote {} jobs to {out}", records.len());
    Ok(())
}
