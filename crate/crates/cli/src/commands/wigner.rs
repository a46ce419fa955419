use anyhow::{ensure, Result};
use biphoton::channels::jitter_exact;
use biphoton::spinspace::{fiducial_state, wigner_sphere, DensityMatrix, WignerSphere};

use crate::config::{fmt_list, Globals};
use crate::output::{num, write_csv, write_text};
use crate::svg::sphere_heatmap;

pub struct WignerParams {
    pub x: f64,
    pub gammas: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

fn flatness(w: &WignerSphere) -> f64 {
    let max = w.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = w.values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    max - min
}

pub fn cmd_wigner(g: &Globals, p: &WignerParams) -> Result<()> {
    ensure!(!p.gammas.is_empty(), "at least one gamma value is required");
    let rho0 = fiducial_state(p.x)?.density();

    // sanity anchor: the maximally mixed state maps to a constant function
    let flat = wigner_sphere(&DensityMatrix::maximally_mixed(), p.n_theta, p.n_phi)?;
    let expect = 1.0 / (4.0 * std::f64::consts::PI);
    for &v in &flat.values {
        ensure!(
            (v - expect).abs() <= 1e-12,
            "maximally mixed Wigner function is not constant: {v} vs {expect}"
        );
    }

    // the polar quadrature error scales with the square of the grid spacing, so
    // coarse grids get a proportionally looser bound
    let dtheta = std::f64::consts::PI / p.n_theta as f64;
    let tol = (0.4 * dtheta * dtheta).max(1e-3);

    let mut surfaces = Vec::new();
    for &gamma in &p.gammas {
        let rho = jitter_exact(gamma)?.apply(&rho0);
        let w = wigner_sphere(&rho, p.n_theta, p.n_phi)?;
        let integral = w.integrate();
        ensure!(
            (integral - 1.0).abs() <= tol,
            "Wigner integral at gamma={gamma} is {integral} (expected 1 +- {tol:.1e} at this resolution)"
        );
        surfaces.push((gamma, w));
    }

    let note = format!(
        "seed={} x={} gammas={} n_theta={} n_phi={}",
        g.seed,
        p.x,
        fmt_list(&p.gammas),
        p.n_theta,
        p.n_phi
    );
    for (gamma, w) in &surfaces {
        let mut rows = Vec::with_capacity(w.values.len());
        for (i, &theta) in w.thetas.iter().enumerate() {
            for (j, &phi) in w.phis.iter().enumerate() {
                rows.push(vec![num(theta), num(phi), num(w.value(i, j))]);
            }
        }
        let name = format!("wigner_x{}_g{}.csv", num(p.x), num(*gamma));
        let path = write_csv(
            &g.out_dir,
            &name,
            "wigner",
            &note,
            &["theta", "phi", "w"],
            &rows,
            &[format!("gamma={}", num(*gamma)), format!("integral={}", num(w.integrate()))],
        )?;
        println!("wigner: wrote {} (integral {:.6})", path.display(), w.integrate());
        if g.format.svg() {
            let svg = sphere_heatmap(
                &format!("Wigner function, x = {}, gamma = {gamma}", p.x),
                &w.values,
                w.n_theta,
                w.n_phi,
            );
            let name = format!("wigner_x{}_g{}.svg", num(p.x), num(*gamma));
            let path = write_text(&g.out_dir, &name, &svg)?;
            println!("wigner: wrote {}", path.display());
        }
    }

    let mut blur = String::new();
    if surfaces.len() >= 2 {
        let lo = surfaces
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        let hi = surfaces
            .iter()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        if hi.0 > lo.0 {
            let (f_lo, f_hi) = (flatness(&lo.1), flatness(&hi.1));
            ensure!(
                f_hi < f_lo,
                "jitter did not blur the Wigner function: range {f_hi} at gamma={} vs {f_lo} at gamma={}",
                hi.0,
                lo.0
            );
            blur = format!(
                "; range {:.4} at gamma={} vs {:.4} at gamma={}",
                f_hi, hi.0, f_lo, lo.0
            );
        }
    }
    println!("wigner: OK (integrals within {tol:.1e}, mixed-state map constant{blur})");
    Ok(())
}
