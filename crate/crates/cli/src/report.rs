//! One markdown document from the CSV outputs of a run directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use serde::de::DeserializeOwned;

use acr_core::features::{FeatureVector, Position};
use acr_core::harness::{self, Aggregate, Exclusion, MaxDrop};
use acr_core::spp::PerturbationType;

fn read<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<Vec<T>>> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(harness::read_csv(&path)?))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn exclusions(s: &mut String, ex: &[Exclusion]) {
    let mut by_reason: BTreeMap<String, usize> = BTreeMap::new();
    for e in ex {
        *by_reason.entry(e.reason.to_string()).or_insert(0) += 1;
    }
    writeln!(s, "## Exclusions\n\n| Reason | Count |\n|---|---:|").unwrap();
    for (r, n) in by_reason {
        writeln!(s, "| {r} | {n} |").unwrap();
    }
    s.push('\n');
}

fn features(s: &mut String, fs_: &[FeatureVector]) {
    let mut by_type: BTreeMap<PerturbationType, Vec<&FeatureVector>> = BTreeMap::new();
    for f in fs_ {
        by_type.entry(f.ptype).or_default().push(f);
    }
    writeln!(
        s,
        "## Perturbation features\n\n| Operator | Variants | Distance | TokenEdit min | TokenEdit max | TokenEdit mean | Length |\n|---|---:|---:|---:|---:|---:|---:|"
    )
    .unwrap();
    for (p, g) in &by_type {
        let n = g.len() as f64;
        let te: Vec<usize> = g.iter().map(|f| f.tok_edit_in).collect();
        writeln!(
            s,
            "| {} {} | {} | {:.2} | {} | {} | {:.2} | {:.1} |",
            p.id(),
            p.name(),
            g.len(),
            g.iter().map(|f| f.distance).sum::<f64>() / n,
            te.iter().min().unwrap_or(&0),
            te.iter().max().unwrap_or(&0),
            te.iter().sum::<usize>() as f64 / n,
            g.iter().map(|f| f.input_length as f64).sum::<f64>() / n,
        )
        .unwrap();
    }
    let mut pos: BTreeMap<Position, usize> = BTreeMap::new();
    for f in fs_ {
        *pos.entry(f.pos).or_insert(0) += 1;
    }
    writeln!(s, "\n| Position | Variants |\n|---|---:|").unwrap();
    for (p, n) in pos {
        writeln!(s, "| {p} | {n} |").unwrap();
    }
    s.push('\n');
}

fn consistency(s: &mut String, title: &str, aggs: &[Aggregate]) {
    let models: BTreeSet<&str> = aggs.iter().map(|a| a.model.as_str()).collect();
    let ptypes: BTreeSet<PerturbationType> = aggs.iter().map(|a| a.ptype).collect();
    let cell: BTreeMap<(&str, PerturbationType), &Aggregate> =
        aggs.iter().map(|a| ((a.model.as_str(), a.ptype), a)).collect();
    writeln!(s, "## {title}\n").unwrap();
    let mut head = String::from("| Operator |");
    let mut rule = String::from("|---|");
    for m in &models {
        write!(head, " {m} n | {m} ΔEXM | {m} ΔEM | {m} REE | {m} CodeBLEU |").unwrap();
        rule.push_str("---:|---:|---:|---:|---:|");
    }
    writeln!(s, "{head}\n{rule}").unwrap();
    for p in &ptypes {
        let mut row = format!("| {} {} |", p.id(), p.name());
        for m in &models {
            match cell.get(&(*m, *p)) {
                Some(a) => write!(
                    row,
                    " {} | {:.1} | {:.1} | {} | {:.3} |",
                    a.n,
                    a.delta_exm,
                    a.delta_em,
                    opt(a.ree, 3),
                    a.codebleu
                )
                .unwrap(),
                None => row.push_str(" 0 | - | - | - | - |"),
            }
        }
        writeln!(s, "{row}").unwrap();
    }
    s.push('\n');
}

fn drops(s: &mut String, ds: &[MaxDrop]) {
    let mut by_model: BTreeMap<&str, (Option<&MaxDrop>, Option<&MaxDrop>)> = BTreeMap::new();
    for d in ds {
        let e = by_model.entry(&d.model).or_default();
        if d.subset == "S_cap" {
            e.1 = Some(d);
        } else {
            e.0 = Some(d);
        }
    }
    let fmt = |d: Option<&MaxDrop>| d.map_or("-".to_string(), |d| format!("{:.1} ({})", d.max_delta_exm, d.ptype));
    writeln!(s, "## Largest ΔEXM per model\n\n| Model | Solvable subset | Intersection subset |\n|---|---:|---:|").unwrap();
    for (m, (a, b)) in by_model {
        writeln!(s, "| {m} | {} | {} |", fmt(a), fmt(b)).unwrap();
    }
    s.push('\n');
}

/// Write `<dir>/report.md` from whatever outputs the directory holds.
pub fn run(dir: &Path) -> Result<()> {
    let mut s = String::from("# Robustness report\n\n");
    let mut any = false;
    if let Some(ex) = read::<Exclusion>(dir, "exclusions.csv")? {
        exclusions(&mut s, &ex);
        any = true;
    }
    if let Some(fs_) = read::<FeatureVector>(dir, "features.csv")? {
        features(&mut s, &fs_);
        any = true;
    }
    if let Some(a) = read::<Aggregate>(dir, "aggregates.csv")? {
        consistency(&mut s, "Consistency on each model's solvable subset", &a);
        any = true;
    }
    if let Some(a) = read::<Aggregate>(dir, "aggregates_intersection.csv")? {
        consistency(&mut s, "Consistency on the intersection subset", &a);
        any = true;
    }
    if let Some(d) = read::<MaxDrop>(dir, "max_drop.csv")? {
        drops(&mut s, &d);
        any = true;
    }
    let reg = dir.join("regression.md");
    if reg.exists() {
        let text = fs::read_to_string(&reg)?;
        // Demote its headings one level.
        for line in text.lines() {
            if line.starts_with('#') {
                s.push('#');
            }
            s.push_str(line);
            s.push('\n');
        }
        any = true;
    }
    if !any {
        bail!("{}: no run outputs to report", dir.display());
    }
    let path = dir.join("report.md");
    fs::write(&path, s)?;
    log::info!("wrote {}", path.display());
    Ok(())
}
