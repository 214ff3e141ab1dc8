//! Regenerates the bundled demo cohort under `data/demo_cohort/`: four
//! synthetic groups of cortical-thickness-style measurements over 100
//! regions (five lobes, left/right, ten regions each), drawn from a chain of
//! progressively edited conditional-dependence graphs. Run from the
//! workspace root:
//!
//! ```text
//! cargo run --release -p ggmlink-cli --example make_demo_data
//! ```
//!
//! The output is deterministic; the CSVs are committed so tests and the
//! README walkthrough work without a generation step.

use std::fs;
use std::path::Path;

use ggmlink::io::write_data_csv;
use ggmlink::simgen::{build_scenario, GroupDerivation, ScenarioSpec};

const LOBES: [&str; 5] = ["frontal", "parietal", "temporal", "occipital", "limbic"];
const GROUP_SIZES: [usize; 4] = [143, 145, 148, 148];
const SCALE: f64 = 0.12;
const SHIFT: f64 = 2.5;

fn main() -> anyhow::Result<()> {
    let spec = ScenarioSpec {
        n_communities: 5,
        community_size: 20,
        n_per_group: *GROUP_SIZES.iter().max().unwrap(),
        derivations: vec![
            GroupDerivation::Perturb { n_remove: 5, n_add: 5 },
            GroupDerivation::Perturb { n_remove: 5, n_add: 5 },
            GroupDerivation::Remove { n: 20 },
        ],
        seed: 20_260_101,
    };
    let scenario = build_scenario(&spec)?;

    // region names: each community is one lobe, left hemisphere then right.
    let var_names: Vec<String> = (0..scenario.p)
        .map(|v| {
            let lobe = LOBES[v / 20];
            let within = v % 20;
            let (hemi, idx) = if within < 10 { ("l", within + 1) } else { ("r", within - 9) };
            format!("{lobe}_{hemi}_{idx}")
        })
        .collect();

    let out_dir = Path::new("data/demo_cohort");
    fs::create_dir_all(out_dir)?;

    for (g, data) in scenario.datasets.iter().enumerate() {
        let n = GROUP_SIZES[g];
        let mut rows = data.rows(0, n).into_owned();
        rows.apply(|x| *x = SHIFT + SCALE * *x);
        write_data_csv(&out_dir.join(format!("group{}.csv", g + 1)), &rows, &var_names)?;
    }

    for lobe in LOBES {
        let members: Vec<&str> = var_names
            .iter()
            .filter(|name| name.starts_with(lobe))
            .map(String::as_str)
            .collect();
        fs::write(out_dir.join(format!("lobe_{lobe}.txt")), members.join("\n") + "\n")?;
    }

    println!(
        "wrote {} groups x p={} to {} (sizes {:?})",
        scenario.k,
        scenario.p,
        out_dir.display(),
        GROUP_SIZES
    );
    Ok(())
}
