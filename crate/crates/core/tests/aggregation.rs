//! Summary statistics recomputed from the raw CSV rows by a separate reducer.

use std::collections::HashMap;

use atomic_mimo::harness::{parse_config, run_experiment, write_outputs};

fn parse_csv(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

#[test]
fn summary_matches_raw_rows() {
    let cfg = parse_config(
        r#"{"experiment":"dof_slope","dims":{"nt":2,"nr":4},
            "sweep":{"axis":"snr_db","grid":[30,35,40]},"trials":25,"seed":8}"#,
        "t",
        &[],
    )
    .unwrap();
    let out = run_experiment(&cfg, Some(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(
        &out,
        cfg.experiment,
        cfg.output.format,
        &dir.path().join("d.csv"),
    )
    .unwrap();

    let mut groups: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for row in parse_csv(&std::fs::read_to_string(&written.results).unwrap()) {
        groups
            .entry((row["sweep_value"].clone(), row["metric"].clone()))
            .or_default()
            .push(row["value"].parse().unwrap());
    }
    let summary = parse_csv(&std::fs::read_to_string(&written.summary).unwrap());
    assert_eq!(summary.len(), groups.len());
    for row in summary {
        let values = &groups[&(row["sweep_value"].clone(), row["metric"].clone())];
        let n = values.len() as f64;
        // Welford's update, unlike the two-pass form used by the library.
        let (mut m, mut s2) = (0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            let d = v - m;
            m += d / (i + 1) as f64;
            s2 += d * (v - m);
        }
        let se = (s2 / (n - 1.0) / n).sqrt();
        let mean: f64 = row["mean"].parse().unwrap();
        let std_error: f64 = row["std_error"].parse().unwrap();
        assert_eq!(row["count"].parse::<usize>().unwrap(), values.len());
        assert!((mean - m).abs() <= 1e-12 * (1.0 + m.abs()), "{mean} vs {m}");
        assert!(
            (std_error - se).abs() <= 1e-10 * (1.0 + se),
            "{std_error} vs {se}"
        );
    }
}
