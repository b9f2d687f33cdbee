use fibra::algebra::{clifford_table, CLIFFORD_BASIS_LABELS};
use fibra::bundles::{
    canonical_flat, compare_connections, equator_winding, loop_holonomy, transport, triviality_test,
    HolonomyBacked, Triviality,
};
use fibra::cylinder::{evaluate_cylinder, gauge_deviation, gauge_invariance_test};
use fibra::generators::random_gauge;
use fibra::paths::{consistency_check, ConsistencyReport, GeneralizedConnection};
use fibra::reduction::{reduce_pipeline, reduce_with_refinement, section_glue_test, FiberLoop, FiberSection, ReductionVerdict};
use fibra::{ConnectionForm, Path};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{element, elements, scalar, to_value};
use crate::scene::{LoadedLoop, Scene};
use crate::CliError;

/// Result of a command: the output document and whether its check passed.
pub struct Report {
    pub doc: Value,
    pub pass: bool,
}

impl Report {
    fn ok(doc: Value) -> Self {
        Report { doc, pass: true }
    }
}

/// Numeric settings after applying flags over scene values over defaults.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub steps: usize,
    pub tol: f64,
    pub seed: u64,
}

fn lookup<'a, T>(map: &'a std::collections::BTreeMap<String, T>, what: &str, name: &str) -> Result<&'a T, CliError> {
    map.get(name).ok_or_else(|| CliError::Reference(format!("no {what} named '{name}'")))
}

impl Scene {
    fn connection(&self, name: &str) -> Result<&ConnectionForm, CliError> {
        lookup(&self.connections, "connection", name)
    }

    fn path(&self, name: &str) -> Result<&Path, CliError> {
        lookup(&self.paths, "path", name)
    }
}

/// Signed blade label of a table cell, checked to be a single ±1 entry.
fn blade_label(cell: &[f64; 8]) -> Option<String> {
    let nonzero: Vec<usize> = (0..8).filter(|&k| cell[k] != 0.0).collect();
    match nonzero.as_slice() {
        [k] if cell[*k] == 1.0 => Some(CLIFFORD_BASIS_LABELS[*k].to_string()),
        [k] if cell[*k] == -1.0 => Some(format!("-{}", CLIFFORD_BASIS_LABELS[*k])),
        _ => None,
    }
}

/// Blade products from bitmasks with every generator squaring to −1.
fn oracle_label(r: usize, c: usize) -> String {
    const BLADES: [(i32, u8); 8] = [(1, 0), (1, 1), (1, 2), (1, 4), (1, 3), (1, 6), (-1, 5), (1, 7)];
    let ((sr, a), (sc, b)) = (BLADES[r], BLADES[c]);
    let swaps: u32 = (0..3).filter(|bit| b & (1 << bit) != 0).map(|bit| (a >> (bit + 1)).count_ones()).sum();
    let mut sign = sr * sc * if (swaps + (a & b).count_ones()) % 2 == 0 { 1 } else { -1 };
    let slot = BLADES.iter().position(|&(_, m)| m == a ^ b).expect("every mask is a blade");
    sign *= BLADES[slot].0;
    let label = CLIFFORD_BASIS_LABELS[slot];
    if sign > 0 {
        label.to_string()
    } else {
        format!("-{label}")
    }
}

pub fn clifford(_: Settings) -> Result<Report, CliError> {
    let table = clifford_table();
    let mut rows = Vec::new();
    let mut matches = true;
    for (r, row) in table.iter().enumerate() {
        let mut out = Vec::new();
        for (c, cell) in row.iter().enumerate() {
            let label = blade_label(cell);
            matches &= label.as_deref() == Some(oracle_label(r, c).as_str());
            out.push(label.map_or(Value::Null, Value::String));
        }
        rows.push(Value::Array(out));
    }
    Ok(Report {
        doc: json!({
            "command": "clifford-table",
            "basis": CLIFFORD_BASIS_LABELS,
            "table": rows,
            "oracle_match": matches,
        }),
        pass: matches,
    })
}

pub fn transport_cmd(scene: &Scene, s: Settings, path: &str, conn: &str) -> Result<Report, CliError> {
    let p = scene.path(path)?;
    let g = transport(scene.connection(conn)?, &scene.bundle, p, s.steps)?;
    Ok(Report::ok(json!({
        "command": "transport",
        "path": path,
        "connection": conn,
        "steps": s.steps,
        "start": to_value(&p.start()),
        "end": to_value(&p.end()),
        "element": element(&g),
    })))
}

pub fn holonomy(scene: &Scene, s: Settings, path: &str, conn: &str) -> Result<Report, CliError> {
    let g = loop_holonomy(scene.connection(conn)?, &scene.bundle, scene.path(path)?, s.steps)?;
    Ok(Report::ok(json!({
        "command": "holonomy",
        "path": path,
        "connection": conn,
        "steps": s.steps,
        "element": element(&g),
        "normalized_trace": scalar(g.normalized_trace()),
    })))
}

pub fn compare(scene: &Scene, s: Settings, path: &str, conn: &str, reference: Option<&str>) -> Result<Report, CliError> {
    let a1 = scene.connection(conn)?;
    let (a2, ref_name) = match reference {
        Some(name) => (scene.connection(name)?.clone(), name.to_string()),
        None => (canonical_flat(&scene.bundle)?, "canonical_flat".to_string()),
    };
    let p = scene.path(path)?;
    let t1 = transport(a1, &scene.bundle, p, s.steps)?;
    let t2 = transport(&a2, &scene.bundle, p, s.steps)?;
    let relative = compare_connections(a1, &a2, &scene.bundle, p, s.steps)?;
    Ok(Report::ok(json!({
        "command": "compare",
        "path": path,
        "connection": conn,
        "reference": ref_name,
        "steps": s.steps,
        "transport": element(&t1),
        "reference_transport": element(&t2),
        "relative": element(&relative),
    })))
}

fn law_reports(report: &ConsistencyReport) -> Value {
    Value::Array(
        report
            .laws
            .iter()
            .map(|l| {
                json!({
                    "law": to_value(&l.law),
                    "max_deviation": scalar(l.max_deviation),
                    "checked": l.checked,
                    "pass": l.pass,
                    "errors": l.errors,
                })
            })
            .collect(),
    )
}

pub fn check_consistency(scene: &Scene, s: Settings, conn: &str, names: &[String]) -> Result<Report, CliError> {
    let names: Vec<String> = if names.is_empty() { scene.paths.keys().cloned().collect() } else { names.to_vec() };
    let paths = names.iter().map(|n| scene.path(n).cloned()).collect::<Result<Vec<_>, _>>()?;
    let backed;
    let (target, kind): (&dyn GeneralizedConnection, &str) = match (scene.connections.get(conn), scene.tables.get(conn)) {
        (Some(form), _) => {
            backed = HolonomyBacked::new(form.clone(), scene.bundle.clone(), s.steps);
            (&backed, "holonomy_backed")
        }
        (None, Some(table)) => (table, "tabulated"),
        (None, None) => return Err(CliError::Reference(format!("no connection or table named '{conn}'"))),
    };
    let report = consistency_check(target, &paths, s.tol);
    Ok(Report {
        pass: report.all_pass(),
        doc: json!({
            "command": "check-consistency",
            "connection": conn,
            "connection_kind": kind,
            "paths": names,
            "tolerance": scalar(s.tol),
            "laws": law_reports(&report),
            "pass": report.all_pass(),
        }),
    })
}

pub fn winding(scene: &Scene) -> Result<Report, CliError> {
    let n = equator_winding(&scene.bundle)?;
    Ok(Report::ok(json!({ "command": "winding", "group": to_value(&scene.bundle.group), "winding": n })))
}

pub fn trivial(scene: &Scene, s: Settings, full: bool) -> Result<Report, CliError> {
    match triviality_test(&scene.bundle)? {
        Triviality::Nontrivial { winding } => {
            Ok(Report::ok(json!({ "command": "trivial", "outcome": "nontrivial", "winding": winding })))
        }
        Triviality::Trivial { section } => {
            let pass = section.residual <= s.tol;
            let mut witness = json!({
                "samples": section.phi.len(),
                "phi": section.phi.iter().map(|&x| scalar(x)).collect::<Vec<_>>(),
                "north": elements(&section.north),
                "south": elements(&section.south),
                "homotopy_levels": section.homotopy.len(),
            });
            if full {
                witness["homotopy"] = Value::Array(section.homotopy.iter().map(|l| elements(l)).collect());
            }
            Ok(Report {
                pass,
                doc: json!({
                    "command": "trivial",
                    "outcome": "trivial",
                    "residual": scalar(section.residual),
                    "tolerance": scalar(s.tol),
                    "pass": pass,
                    "section": witness,
                }),
            })
        }
    }
}

pub fn reduce(scene: &Scene, s: Settings, name: &str, full: bool) -> Result<Report, CliError> {
    let spec = lookup(&scene.loops, "loop", name)?;
    let (verdict, samples) = match spec.load()? {
        LoadedLoop::Icl { generator: Some(g), samples } => (reduce_with_refinement(&g, samples.intervals())?, samples.intervals()),
        LoadedLoop::Icl { generator: None, samples } => (reduce_pipeline(&samples)?, samples.intervals()),
        LoadedLoop::Circle(lp) => {
            let n = lp.intervals();
            (section_glue_test(&FiberLoop::S1(lp))?, n)
        }
    };
    let mut doc = json!({ "command": "reduce", "loop": name, "intervals": samples });
    let pass = match &verdict {
        ReductionVerdict::Obstructed { winding } => {
            doc["outcome"] = json!("obstructed");
            doc["winding"] = json!(winding);
            true
        }
        ReductionVerdict::Reduced { section, residual, reduced_transition } => {
            let pass = *residual <= s.tol;
            doc["outcome"] = json!("reduced");
            doc["residual"] = scalar(*residual);
            doc["tolerance"] = scalar(s.tol);
            doc["pass"] = json!(pass);
            doc["fiber"] = json!(match section {
                FiberSection::S1 { .. } => "S1",
                FiberSection::S3 { .. } => "S3",
            });
            if full {
                doc["section"] = to_value(section);
                if let Some(v) = reduced_transition {
                    doc["reduced_transition"] = to_value(v);
                }
            }
            pass
        }
    };
    Ok(Report { doc, pass })
}

pub fn cylinder(scene: &Scene, s: Settings, name: &str, conn: &str) -> Result<Report, CliError> {
    let spec = lookup(&scene.cylinders, "cylinder", name)?;
    let v = evaluate_cylinder(spec, scene.connection(conn)?, &scene.bundle, s.steps)?;
    Ok(Report::ok(json!({
        "command": "cylinder",
        "cylinder": name,
        "connection": conn,
        "steps": s.steps,
        "value": scalar(v.value),
        "frame": to_value(&v.frame),
    })))
}

pub fn gauge_test(scene: &Scene, s: Settings, name: &str, conn: &str, trials: usize, witness: bool) -> Result<Report, CliError> {
    let spec = lookup(&scene.cylinders, "cylinder", name)?;
    let form = scene.connection(conn)?;
    if witness {
        let gauge = random_gauge(&mut ChaCha8Rng::seed_from_u64(s.seed), scene.bundle.group);
        let d = gauge_deviation(spec, form, &scene.bundle, &gauge, s.steps)?;
        return Ok(Report::ok(json!({
            "command": "gauge-test",
            "mode": "witness",
            "cylinder": name,
            "connection": conn,
            "seed": s.seed,
            "deviation": scalar(d),
        })));
    }
    let d = gauge_invariance_test(spec, form, &scene.bundle, trials, s.seed, s.steps)?;
    let pass = d <= s.tol;
    Ok(Report {
        pass,
        doc: json!({
            "command": "gauge-test",
            "mode": "invariance",
            "cylinder": name,
            "connection": conn,
            "trials": trials,
            "seed": s.seed,
            "max_deviation": scalar(d),
            "tolerance": scalar(s.tol),
            "pass": pass,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_oracle_agrees_with_table() {
        let report = clifford(Settings { steps: 1, tol: 0.0, seed: 0 }).unwrap();
        assert!(report.pass);
        assert_eq!(report.doc["table"][1][2], json!("e12"));
        assert_eq!(report.doc["table"][2][1], json!("-e12"));
        assert_eq!(report.doc["table"][3][3], json!("-1"));
    }
}
