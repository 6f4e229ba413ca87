//! Tidy (long-form) CSVs for plotting, derived from a finished run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fraclevy::frac_ops::kernel_l2_norm_sq;
use fraclevy::sde::{holder_noise_check, log_spaced_pairs};

use crate::config::Config;
use crate::manifest;
use crate::run::{Summary, CONFIG_COPY, SUMMARY};
use crate::table::{csv_bytes, num};

/// Writes the plot files into `out` (default `run_dir/plot`) and returns
/// their paths. Refuses runs whose files no longer match the manifest.
pub fn emit(run_dir: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let findings = manifest::audit(run_dir)?;
    if !findings.is_empty() {
        let list: Vec<String> = findings.iter().map(ToString::to_string).collect();
        bail!("run directory {} does not match its manifest:\n  {}", run_dir.display(), list.join("\n  "));
    }
    let read = |name: &str| std::fs::read(run_dir.join(name)).with_context(|| format!("reading {name}"));
    let summary: Summary = serde_json::from_slice(&read(SUMMARY)?).context("parsing summary.json")?;
    let cfg: Config = serde_json::from_slice(&read(CONFIG_COPY)?).context("parsing config.json")?;

    let out = out.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("plot"));
    std::fs::create_dir_all(&out)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: Vec<u8>| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };

    if let Some(sim) = &summary.simulate {
        let rows = sim.moments.iter().map(|m| {
            let oracle = summary.m2 * kernel_l2_norm_sq(m.t, summary.beta);
            vec![num(m.t), num(m.var), num(oracle), num(m.stderr_var)]
        });
        put("variance_vs_t.csv", csv_bytes(&["t", "empirical_var", "oracle_var", "stderr"], rows)?)?;
        put("paths.csv", read("paths.csv")?)?;
    }
    if let Some(solve) = &summary.solve {
        if !solve.update_norms.is_empty() {
            let rows = solve
                .update_norms
                .iter()
                .enumerate()
                .map(|(i, &u)| vec![(i + 1).to_string(), num(u)]);
            put("picard_decay.csv", csv_bytes(&["iteration", "update_norm"], rows)?)?;
        }
        put("s_table.csv", read("s_table.csv")?)?;
    }

    // Hölder fit of the noise increments at the run's β and gauge.
    let pairs = log_spaced_pairs(0.5, 1e-3, 1e-1, 8);
    let fit = holder_noise_check(summary.beta, cfg.solver.gauge_p, &pairs, 128)?;
    let rows = fit.points.iter().map(|&(d, v)| {
        let fitted = (fit.intercept + fit.slope * d.ln()).exp();
        vec![num(summary.beta), num(d), num(v), num(fitted), num(fit.slope)]
    });
    put("holder_fit.csv", csv_bytes(&["beta", "dt", "norm_sq", "fitted_norm_sq", "slope"], rows)?)?;
    Ok(written)
}
