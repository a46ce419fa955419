use anyhow::{ensure, Context, Result};
use biphoton::channels::{is_cptp, jitter_exact};
use biphoton::linalg::eigh9;
use biphoton::serial::{choi_to_json, superoperator_to_json};

use crate::config::Globals;
use crate::output::{num, write_text, ARTIFACT_VERSION};

pub struct ExportParams {
    pub gamma: f64,
}

pub fn cmd_channel_export(g: &Globals, p: &ExportParams) -> Result<()> {
    let e = jitter_exact(p.gamma)?;
    let choi = e.to_choi();
    let report = is_cptp(&e, 1e-8);
    ensure!(
        report.cp && report.tp,
        "exported channel fails the CPTP check: min Choi eigenvalue {}, TP residual {}",
        report.min_choi_eig,
        report.tp_residual
    );

    // the jitter transfer matrix is Hermitian, so its spectrum is real
    let herm_dev = (e.matrix() - e.matrix().adjoint()).camax();
    ensure!(herm_dev <= 1e-12, "transfer matrix is not Hermitian (deviation {herm_dev:.2e})");
    let spectrum = |m| {
        let (vals, _) = eigh9(m);
        let mut v: Vec<f64> = vals.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    };

    let doc = serde_json::json!({
        "artifact": format!("biphoton-cli {ARTIFACT_VERSION}"),
        "gamma": p.gamma,
        "superoperator": serde_json::from_str::<serde_json::Value>(&superoperator_to_json(&e)?)
            .context("re-parsing superoperator JSON")?,
        "choi": serde_json::from_str::<serde_json::Value>(&choi_to_json(&choi)?)
            .context("re-parsing Choi JSON")?,
        "superoperator_eigenvalues": spectrum(e.matrix()),
        "choi_eigenvalues": spectrum(choi.matrix()),
        "cptp": {
            "cp": report.cp,
            "tp": report.tp,
            "min_choi_eig": report.min_choi_eig,
            "tp_residual": report.tp_residual,
        },
    });
    let name = format!("channel_g{}.json", num(p.gamma));
    let path = write_text(&g.out_dir, &name, &format!("{doc:#}\n"))?;
    println!("channel-export: wrote {} (CPTP at 1e-8)", path.display());
    Ok(())
}
