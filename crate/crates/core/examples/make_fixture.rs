//! Writes the synthetic 11-source application fixture in long CSV format.
//!
//! Each source has 60 to 86 target observations around its own mean, and
//! three characteristics whose correlations with the realized source means
//! are exactly 0.8, 0.6 and 0.5.
//!
//! ```text
//! cargo run --example make_fixture -- data/app_fixture.csv
//! ```

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rbf_mem::sim::generate::gen_correlated_characteristic;

const SOURCES: usize = 11;
const SEED: u64 = 2022;

/// (name, correlation with source means, location, scale)
const CHARACTERISTICS: [(&str, f64, f64, f64); 3] = [
    ("crowding", 0.8, 2.2, 0.4),
    ("concern", 0.6, 2.8, 0.6),
    ("outings", 0.5, 1.5, 0.5),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "app_fixture.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let location = Normal::new(3.0, 1.0)?;

    let mut targets = Vec::with_capacity(SOURCES);
    for _ in 0..SOURCES {
        let mu = location.sample(&mut rng);
        let sd = rng.random_range(1.2..2.0);
        let n = rng.random_range(60..=86);
        let noise = Normal::new(mu, sd)?;
        targets.push((0..n).map(|_| noise.sample(&mut rng)).collect::<Vec<f64>>());
    }
    let means: Vec<f64> = targets
        .iter()
        .map(|t| t.iter().sum::<f64>() / t.len() as f64)
        .collect();

    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "source_id,variable,value")?;
    let ids: Vec<String> = (1..=SOURCES).map(|i| format!("u{i:02}")).collect();
    for (id, t) in ids.iter().zip(&targets) {
        for v in t {
            writeln!(out, "{id},target,{v}")?;
        }
    }
    for (name, r, loc, scale) in CHARACTERISTICS {
        let x = gen_correlated_characteristic(&means, r, &mut rng)?;
        let m = x.iter().sum::<f64>() / x.len() as f64;
        for (id, v) in ids.iter().zip(&x) {
            writeln!(out, "{id},char:{name},{}", loc + scale * (v - m))?;
        }
    }
    out.flush()?;
    let total: usize = targets.iter().map(Vec::len).sum();
    println!(
        "wrote {path}: {SOURCES} sources, {total} target rows ({:.1} per source)",
        total as f64 / SOURCES as f64
    );
    Ok(())
}
