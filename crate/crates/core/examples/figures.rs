//! Continues a coarse branch and writes the three figure tables as CSV.
//!
//! Usage: `figures [s_max] [N] [dir]` (defaults 1.0, 65, `figures`).

use std::path::PathBuf;

use muskat_selfsim::continuation::{continue_branch, SolverSettings};
use muskat_selfsim::diagnostics::{figure_data, Figure};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let s_max: f64 = args.first().map_or(Ok(1.0), |a| a.parse())?;
    let n: usize = args.get(1).map_or(Ok(65), |a| a.parse())?;
    let dir = PathBuf::from(args.get(2).map_or("figures", String::as_str));
    std::fs::create_dir_all(&dir)?;

    let branch = continue_branch(s_max, 0.1, n, &SolverSettings::default())?;
    if let Some(f) = &branch.failure {
        eprintln!("branch stopped at s = {}: {}", f.s, f.message);
    }
    branch.write(&dir.join("branch.json"))?;

    for (name, which) in [
        ("discrepancy", Figure::Discrepancy),
        ("normalized", Figure::Normalized),
        ("integrated", Figure::Integrated),
    ] {
        let mut slopes: Vec<f64> = which
            .default_slopes()
            .iter()
            .copied()
            .filter(|&s| branch.step(s).is_ok())
            .collect();
        if slopes.is_empty() {
            slopes = branch.s_values();
        }
        let table = figure_data(&branch, which, &slopes, which.default_range(), 101)?;
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, table.to_csv())?;
        println!("{} curves -> {}", slopes.len(), path.display());
    }
    Ok(())
}
