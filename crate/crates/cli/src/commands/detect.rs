use anyhow::{ensure, Result};
use biphoton::detection::{
    nondetection_probability, sensitivity, sensitivity_crossing, simulate_detection,
};
use biphoton::linalg::derive_seed;

use crate::config::{fmt_list, grid, Globals};
use crate::output::{num, write_csv, write_text};
use crate::svg::{line_chart, Series, VMarker};

pub struct DetectParams {
    pub xs: Vec<f64>,
    pub gamma_max: f64,
    pub gamma_step: f64,
}

pub fn cmd_detect(g: &Globals, p: &DetectParams) -> Result<()> {
    let shots = g.shots_or(100_000);
    ensure!(shots >= 1, "shots must be >= 1");
    let gammas = grid(p.gamma_max, p.gamma_step)?;

    let mut rows = Vec::new();
    let mut sens: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut exact: Vec<Vec<f64>> = Vec::new();
    for (xi, &x) in p.xs.iter().enumerate() {
        let mut s_curve = Vec::with_capacity(gammas.len());
        let mut p_curve = Vec::with_capacity(gammas.len());
        for (gi, &gamma) in gammas.iter().enumerate() {
            let p_exact = nondetection_probability(x, gamma)?;
            let sim =
                simulate_detection(x, gamma, shots, derive_seed(g.seed, &[xi as u64, gi as u64]))?;
            let s = sensitivity(x, gamma, 1)?;
            rows.push(vec![num(x), num(gamma), num(p_exact), num(sim.p_hat), num(s)]);
            s_curve.push(s);
            p_curve.push(p_exact);
        }
        sens.push((x, s_curve));
        exact.push(p_curve);
    }

    if let Some(ig) = gammas.iter().position(|&v| v == 0.0) {
        for ((x, _), p_curve) in sens.iter().zip(&exact) {
            ensure!(
                (p_curve[ig] - 1.0).abs() <= 1e-12,
                "nondetection probability at gamma=0 for x={x} is {} (expected 1)",
                p_curve[ig]
            );
        }
    }

    let coherent = sens.iter().find(|(x, _)| *x == 0.0);
    let noon = sens.iter().find(|(x, _)| *x == 0.5);
    let mut notes = Vec::new();
    if let (Some((_, sc)), Some((_, sn))) = (coherent, noon) {
        if let Some(ig) = gammas.iter().position(|&v| (v - 0.05).abs() <= 1e-12) {
            let ratio = sc[ig] / sn[ig];
            ensure!(
                (ratio - 1.41).abs() <= 0.01,
                "coherent/N00N sensitivity ratio at gamma=0.05 is {ratio:.4} (expected 1.41 +- 0.01)"
            );
            notes.push(format!("ratio at gamma=0.05: {ratio:.4}"));
        }
        let crossing = sensitivity_crossing(0.0, 0.5, (0.5, 2.0))?;
        ensure!(
            (0.7..=1.3).contains(&crossing),
            "sensitivity crossing at gamma={crossing:.4} (expected within [0.7, 1.3])"
        );
        notes.push(format!("crossing_gamma={}", num(crossing)));
    }

    let note = format!(
        "seed={} shots={shots} xs={} gamma_step={} gamma_max={}",
        g.seed,
        fmt_list(&p.xs),
        p.gamma_step,
        p.gamma_max
    );
    let path = write_csv(
        &g.out_dir,
        "detect.csv",
        "detect",
        &note,
        &["x", "gamma", "p_exact", "p_hat", "sensitivity_scaled"],
        &rows,
        &notes,
    )?;
    println!("detect: wrote {}", path.display());

    if g.format.svg() {
        let series: Vec<Series> = sens
            .iter()
            .map(|(x, curve)| Series {
                name: format!("x = {x}"),
                points: gammas
                    .iter()
                    .zip(curve)
                    .filter(|(_, s)| s.is_finite() && **s > 0.0)
                    .map(|(&g, &s)| (g, s.log10()))
                    .collect(),
            })
            .collect();
        let markers: Vec<VMarker> = notes
            .iter()
            .filter_map(|n| n.strip_prefix("crossing_gamma="))
            .filter_map(|v| v.parse::<f64>().ok())
            .map(|x| VMarker { x, label: format!("crossing {x:.3}") })
            .collect();
        let svg = line_chart(
            "Jitter sensitivity (shot-noise limited, per sqrt(trial))",
            "gamma",
            "log10 sensitivity",
            &series,
            &markers,
        );
        let path = write_text(&g.out_dir, "detect.svg", &svg)?;
        println!("detect: wrote {}", path.display());
    }
    if notes.is_empty() {
        println!("detect: OK");
    } else {
        println!("detect: OK ({})", notes.join(", "));
    }
    Ok(())
}
