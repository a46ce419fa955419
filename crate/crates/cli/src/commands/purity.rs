use anyhow::{ensure, Result};
use biphoton::channels::purity_curve;

use crate::config::{fmt_list, grid, Globals};
use crate::output::{num, write_csv, write_text};
use crate::svg::{line_chart, Series};

pub struct PurityParams {
    pub xs: Vec<f64>,
    pub gamma_max: f64,
    pub gamma_step: f64,
}

fn find(values: &[f64], target: f64) -> Option<usize> {
    values.iter().position(|v| (v - target).abs() <= 1e-12)
}

pub fn cmd_purity_curve(g: &Globals, p: &PurityParams) -> Result<()> {
    let gammas = grid(p.gamma_max, p.gamma_step)?;
    let mut rows = Vec::new();
    let mut curves: Vec<(f64, Vec<f64>)> = Vec::new();
    for &x in &p.xs {
        let curve = purity_curve(x, &gammas, None)?;
        for (&gamma, &purity) in gammas.iter().zip(&curve) {
            rows.push(vec![num(x), num(gamma), num(purity)]);
        }
        curves.push((x, curve));
    }

    for (x, curve) in &curves {
        ensure!(
            (curve[0] - 1.0).abs() <= 1e-12,
            "purity at gamma=0 for x={x} is {} (expected 1 for a pure input)",
            curve[0]
        );
        for w in curve.windows(2) {
            ensure!(
                w[1] <= w[0] + 1e-12,
                "purity curve for x={x} increases: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
    let fragility = match (find(&p.xs, 0.0), find(&p.xs, 0.47), find(&gammas, 0.5)) {
        (Some(i0), Some(i47), Some(ig)) => {
            let (c0, c47) = (&curves[i0].1, &curves[i47].1);
            ensure!(
                c47[ig] < c0[ig],
                "near-N00N purity {} is not below coherent purity {} at gamma=0.5",
                c47[ig],
                c0[ig]
            );
            format!(", near-N00N {:.4} < coherent {:.4} at gamma=0.5", c47[ig], c0[ig])
        }
        _ => String::new(),
    };

    let note = format!(
        "seed={} xs={} gamma_step={} gamma_max={}",
        g.seed,
        fmt_list(&p.xs),
        p.gamma_step,
        p.gamma_max
    );
    let path = write_csv(
        &g.out_dir,
        "purity_curve.csv",
        "purity-curve",
        &note,
        &["x", "gamma", "purity"],
        &rows,
        &[],
    )?;
    println!("purity-curve: wrote {}", path.display());

    if g.format.svg() {
        let series: Vec<Series> = curves
            .iter()
            .map(|(x, curve)| Series {
                name: format!("x = {x}"),
                points: gammas.iter().copied().zip(curve.iter().copied()).collect(),
            })
            .collect();
        let svg = line_chart("Probe purity under jitter", "gamma", "purity", &series, &[]);
        let path = write_text(&g.out_dir, "purity_curve.svg", &svg)?;
        println!("purity-curve: wrote {}", path.display());
    }
    println!("purity-curve: OK (starts at 1, monotone nonincreasing{fragility})");
    Ok(())
}
