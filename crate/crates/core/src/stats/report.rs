//! Text renderings of a regression fit: predictor table with odds ratios,
//! variance components, R² and the collinearity diagnostics.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::diagnostics::{Diagnostics, RHO_THRESHOLD, VIF_THRESHOLD};
use super::glmm::{fit_glmm, GlmmOptions, RegressionFit};
use super::observations::{design_from_rows, ObservationRow};
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub fit: RegressionFit,
    pub diagnostics: Diagnostics,
    /// POS category absorbed by the intercept.
    pub reference: String,
    pub standardized: bool,
}

/// Fit the mixed model to observation rows and compute the diagnostics on
/// the raw continuous predictors. Grouping factors with a single level
/// (one model, say) are dropped from the random part.
pub fn regress(rows: &[ObservationRow], standardize: bool, opts: &GlmmOptions) -> Result<RegressionReport, StatsError> {
    let mut design = design_from_rows(rows, standardize)?;
    design.data.factors.retain(|f| {
        let keep = f.levels.len() >= 2;
        if !keep {
            log::warn!("dropping grouping factor `{}`: only one level", f.name);
        }
        keep
    });
    let fit = fit_glmm(&design.data, opts)?;
    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = design.continuous.into_iter().unzip();
    let diagnostics = Diagnostics::compute(&names, &columns)?;
    Ok(RegressionReport {
        fit,
        diagnostics,
        reference: design.reference.label().to_string(),
        standardized: standardize,
    })
}

fn p_text(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        _ => "",
    }
}

impl RegressionReport {
    pub fn to_markdown(&self) -> String {
        let f = &self.fit;
        let mut s = String::new();
        let _ = writeln!(s, "## Mixed-effects logistic regression (outcome: EXM)\n");
        let _ = writeln!(
            s,
            "n = {}, POS reference = {}, continuous predictors {}.\n",
            f.n,
            self.reference,
            if self.standardized { "z-scored" } else { "on raw scale" }
        );
        let _ = writeln!(s, "| Predictor | Estimate | SE | OR | 95% CI | Pr(>|z|) |");
        let _ = writeln!(s, "|---|---:|---:|---:|---|---:|");
        for e in &f.fixed {
            let _ = writeln!(
                s,
                "| {} | {:.3} | {:.3} | {:.3} | [{:.3}, {:.3}] | {}{} |",
                e.name,
                e.estimate,
                e.std_error,
                e.odds_ratio,
                e.or_ci_low,
                e.or_ci_high,
                p_text(e.p_value),
                stars(e.p_value)
            );
        }
        let _ = writeln!(s);
        for c in &f.components {
            let _ = writeln!(s, "Random intercept {}: σ² = {:.4} (σ = {:.4})", c.factor, c.variance, c.sigma);
        }
        let _ = writeln!(s, "\nMarginal R² = {:.3}, Conditional R² = {:.3}", f.marginal_r2, f.conditional_r2);
        if !f.converged {
            let _ = writeln!(s, "\nWarning: the optimiser did not converge; estimates are partial.");
        }
        if f.separation {
            let _ = writeln!(s, "\nWarning: fitted probabilities near 0 or 1 suggest separation.");
        }
        let _ = writeln!(s, "\n### Diagnostics\n");
        let _ = writeln!(s, "| Pair | Spearman ρ | flag (|ρ| > {RHO_THRESHOLD}) |");
        let _ = writeln!(s, "|---|---:|---|");
        for c in &self.diagnostics.correlations {
            let rho = c.rho.map_or("n/a".to_string(), |r| format!("{r:.3}"));
            let _ = writeln!(s, "| {} ~ {} | {} | {} |", c.a, c.b, rho, if c.flagged { "yes" } else { "" });
        }
        let _ = writeln!(s, "\n| Predictor | VIF | flag (> {VIF_THRESHOLD}) |");
        let _ = writeln!(s, "|---|---:|---|");
        for v in &self.diagnostics.vifs {
            let _ = writeln!(s, "| {} | {:.3} | {} |", v.name, v.vif, if v.flagged { "yes" } else { "" });
        }
        s
    }

    /// Predictor table as CSV.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["predictor", "estimate", "std_error", "z", "p_value", "odds_ratio", "or_ci_low", "or_ci_high"])?;
        for e in &self.fit.fixed {
            w.write_record([
                e.name.clone(),
                e.estimate.to_string(),
                e.std_error.to_string(),
                e.z.to_string(),
                e.p_value.to_string(),
                e.odds_ratio.to_string(),
                e.or_ci_low.to_string(),
                e.or_ci_high.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("utf-8 csv"))
    }

    /// Correlations then VIFs, one row each.
    pub fn diagnostics_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "a", "b", "value", "flagged"])?;
        for c in &self.diagnostics.correlations {
            let v = c.rho.map_or(String::new(), |r| r.to_string());
            w.write_record(["spearman", &c.a, &c.b, &v, &c.flagged.to_string()])?;
        }
        for v in &self.diagnostics.vifs {
            w.write_record(["vif", &v.name, "", &v.vif.to_string(), &v.flagged.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("utf-8 csv"))
    }
}
