//! Rendering of command results as aligned text, canonical JSON or CSV.

use std::collections::BTreeMap;

use clap::ValueEnum;
use e8jacobi::checks::CheckReport;
use e8jacobi::e8::{DominantWeight, WeylOrbit};
use e8jacobi::generators::GeneratorPolynomial;
use e8jacobi::jacobi::JacobiExpansion;
use e8jacobi::qseries::QSeries;
use e8jacobi::structure::{
    format_laurent, laurent_from_dims, ModuleDescription, SingularSpace, WeakForm,
};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

pub struct Output {
    pub text: String,
    pub json: Value,
    pub csv: Vec<Vec<String>>,
}

impl Output {
    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Text => self.text.clone(),
            // serde_json maps are ordered by key, which makes this canonical.
            Format::Json => format!(
                "{}\n",
                serde_json::to_string_pretty(&self.json).expect("serializable")
            ),
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .flexible(true)
                    .from_writer(Vec::new());
                for row in &self.csv {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
            }
        }
    }
}

fn cell(v: Option<u64>) -> String {
    v.map_or("?".into(), |x| x.to_string())
}

/// Two-row table in the layout `t | 1 2 3 ...` over `label | ...`.
pub fn index_table(head: &str, label: &str, ts: &[u32], values: &[Option<u64>]) -> Output {
    let top: Vec<String> = ts.iter().map(u32::to_string).collect();
    let bottom: Vec<String> = values.iter().map(|v| cell(*v)).collect();
    let text = aligned(&[
        std::iter::once(head.to_string())
            .chain(top.iter().cloned())
            .collect(),
        std::iter::once(label.to_string())
            .chain(bottom.iter().cloned())
            .collect(),
    ]);
    let json = json!({
        "columns": ts,
        "label": label,
        "values": values,
    });
    let csv = vec![
        std::iter::once(head.to_string()).chain(top).collect(),
        std::iter::once(label.to_string()).chain(bottom).collect(),
    ];
    Output { text, json, csv }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:>w$}", w = widths[j]))
            .collect();
        let (first, rest) = cells.split_first().expect("nonempty row");
        out.push_str(&format!("{first} | {}\n", rest.join(" ")));
    }
    out
}

/// Rows `(K, L(K), d_{K,L(K)}, d_{K,t} per t)`; `None` where unsettled.
pub type StabilityRow = (i32, Option<u32>, Option<usize>, Vec<Option<usize>>);

pub fn stability_table(ts: &[u32], rows: &[StabilityRow]) -> Output {
    let ks: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
    let mut table = vec![
        std::iter::once("K".to_string())
            .chain(ks.iter().cloned())
            .collect::<Vec<_>>(),
        std::iter::once("L(K)".to_string())
            .chain(rows.iter().map(|r| cell(r.1.map(u64::from))))
            .collect(),
        std::iter::once("d_{K,L(K)}".to_string())
            .chain(rows.iter().map(|r| cell(r.2.map(|d| d as u64))))
            .collect(),
    ];
    for (i, t) in ts.iter().enumerate() {
        table.push(
            std::iter::once(format!("d_{{K,{t}}}"))
                .chain(rows.iter().map(|r| cell(r.3[i].map(|d| d as u64))))
                .collect(),
        );
    }
    let json = json!({
        "indices": ts,
        "rows": rows.iter().map(|(k, l, d, per_t)| json!({
            "K": k,
            "L": l,
            "d": d,
            "d_by_index": per_t,
        })).collect::<Vec<_>>(),
    });
    Output {
        text: aligned(&table),
        json,
        csv: table,
    }
}

fn orbit_symbol(m: &DominantWeight) -> String {
    if m.is_zero() {
        "1".into()
    } else {
        WeylOrbit::new(*m).to_string()
    }
}

fn expansion_json(e: &JacobiExpansion) -> Value {
    json!({
        "weight": e.weight,
        "index": e.index,
        "truncation": e.truncation(),
        "levels": e.levels().iter().map(|l| l.iter().map(|(m, c)| json!({
            "orbit": m.0,
            "symbol": orbit_symbol(m),
            "coefficient": c.to_string(),
        })).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn expansion_rows(name: &str, e: &JacobiExpansion, rows: &mut Vec<Vec<String>>) {
    for (n, l) in e.levels().iter().enumerate() {
        for (m, c) in l {
            rows.push(vec![
                name.to_string(),
                n.to_string(),
                m.label(),
                orbit_symbol(m),
                c.to_string(),
            ]);
        }
    }
}

fn csv_header() -> Vec<String> {
    ["form", "n", "orbit", "symbol", "coefficient"]
        .map(String::from)
        .to_vec()
}

pub fn expansion(
    form: &str,
    source: &str,
    e: &JacobiExpansion,
    reduced: Option<(QSeries, Option<GeneratorPolynomial>)>,
) -> Output {
    let mut text = format!("{form} (weight {}, index {}) = {e}\n", e.weight, e.index);
    let mut json = json!({ "form": form, "source": source, "expansion": expansion_json(e) });
    if let Some((series, poly)) = &reduced {
        text.push_str(&format!("z = 0: {series}\n"));
        json["eval_zero"] = json!(series
            .coeffs()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>());
        if let Some(p) = poly {
            text.push_str(&format!("z = 0 reduction: {p}\n"));
            json["reduction"] = json!(p.to_string());
        }
    }
    let mut csv = vec![csv_header()];
    expansion_rows(form, e, &mut csv);
    Output { text, json, csv }
}

pub fn check(r: &CheckReport) -> Output {
    let mut text = format!("{}: {}\n", r.name, if r.passed { "PASS" } else { "FAIL" });
    for d in &r.details {
        text.push_str(&format!("  {d}\n"));
    }
    let csv = std::iter::once(vec!["check".into(), "detail".into()])
        .chain(r.details.iter().map(|d| vec![r.name.clone(), d.clone()]))
        .collect();
    Output {
        text,
        json: serde_json::to_value(r).expect("serializable"),
        csv,
    }
}

fn certificate(f: &WeakForm) -> String {
    let mut den = Vec::new();
    match f.delta_power {
        0 => {}
        1 => den.push("Delta".to_string()),
        d => den.push(format!("Delta^{d}")),
    }
    match f.e4_power {
        0 => {}
        1 => den.push("E4".to_string()),
        e => den.push(format!("E4^{e}")),
    }
    if den.is_empty() {
        f.numerator.to_string()
    } else {
        format!("({}) / ({})", f.numerator, den.join("*"))
    }
}

pub fn weak(k: i32, t: u32, basis: &[WeakForm], exps: &[JacobiExpansion]) -> Output {
    let mut text = format!("dim J^w_{{{k},{t}}} = {}\n", basis.len());
    let mut csv = vec![vec!["form".to_string(), "certificate".to_string()]];
    for (i, f) in basis.iter().enumerate() {
        text.push_str(&format!("phi_{} = {}\n", i + 1, certificate(f)));
        if let Some(e) = exps.get(i) {
            text.push_str(&format!("      = {e}\n"));
        }
        csv.push(vec![format!("phi_{}", i + 1), certificate(f)]);
    }
    let json = json!({
        "weight": k,
        "index": t,
        "dimension": basis.len(),
        "certificates": basis.iter().map(certificate).collect::<Vec<_>>(),
        "expansions": exps.iter().map(expansion_json).collect::<Vec<_>>(),
    });
    Output { text, json, csv }
}

pub fn holo(k: i32, t: u32, basis: &[JacobiExpansion], expansions: bool) -> Output {
    let mut text = format!("dim J_{{{k},{t}}} = {}\n", basis.len());
    let mut csv = vec![csv_header()];
    for (i, e) in basis.iter().enumerate() {
        if expansions {
            text.push_str(&format!("psi_{} = {e}\n", i + 1));
        }
        expansion_rows(&format!("psi_{}", i + 1), e, &mut csv);
    }
    let json = json!({
        "weight": k,
        "index": t,
        "dimension": basis.len(),
        "expansions": if expansions { basis.iter().map(expansion_json).collect::<Vec<_>>() } else { Vec::new() },
    });
    Output { text, json, csv }
}

pub fn singular(
    space: &SingularSpace,
    phis: &[(DominantWeight, Option<JacobiExpansion>)],
    expansions: bool,
) -> Output {
    let t = space.index;
    let mut text = format!(
        "dim J_{{4,{t}}} = {} (ansatz denominator Delta^{}, support imposed through q^{})\n",
        space.dimension,
        space.delta_power,
        space.m_cap.max(1) - 1
    );
    text.push_str(&format!("X_{t} = {}\n", space.basis[0]));
    let mut csv = vec![csv_header()];
    expansion_rows(&format!("X_{t}"), &space.basis[0], &mut csv);
    let mut phi_json = Vec::new();
    for (m, phi) in phis {
        let name = format!("Phi_{{{t},{}}}", m.label());
        match phi {
            Some(p) => {
                text.push_str(&format!("{name} = {p}\n"));
                expansion_rows(&name, p, &mut csv);
                phi_json.push(json!({ "orbit": m.0, "form": expansion_json(p) }));
            }
            None => {
                text.push_str(&format!("{name}: not in the space\n"));
                phi_json.push(json!({ "orbit": m.0, "form": Value::Null }));
            }
        }
    }
    if expansions {
        for (i, (e, c)) in space
            .basis
            .iter()
            .zip(&space.certificates)
            .enumerate()
            .skip(1)
        {
            if let Some(c) = c {
                text.push_str(&format!("f_{i} = {}\n", certificate(c)));
            }
            text.push_str(&format!("    = {e}\n"));
        }
    }
    let json = json!({
        "index": t,
        "dimension": space.dimension,
        "delta_power": space.delta_power,
        "basis": space.basis.iter().map(expansion_json).collect::<Vec<_>>(),
        "certificates": space.certificates.iter().map(|c| c.as_ref().map(certificate)).collect::<Vec<_>>(),
        "phi": phi_json,
    });
    Output { text, json, csv }
}

pub fn generators(m: &ModuleDescription, certificates: bool) -> Output {
    let p = format_laurent(&laurent_from_dims(&m.weight_polynomial));
    let mut text = format!("P^w_{} = {p}\n", m.index);
    text.push_str(&format!("rank {}\n", m.rank()));
    if certificates {
        for g in &m.generators {
            text.push_str(&format!(
                "phi_{{{},{}}} = {}\n",
                g.weight,
                g.index,
                certificate(g)
            ));
        }
    }
    let dims: BTreeMap<String, usize> = m
        .weight_polynomial
        .iter()
        .map(|(k, d)| (k.to_string(), *d))
        .collect();
    let json = json!({
        "index": m.index,
        "rank": m.rank(),
        "weight_polynomial": p,
        "generator_weights": dims,
        "certificates": if certificates { m.generators.iter().map(certificate).collect::<Vec<_>>() } else { Vec::new() },
    });
    let csv = std::iter::once(vec!["weight".to_string(), "generators".to_string()])
        .chain(
            m.weight_polynomial
                .iter()
                .map(|(k, d)| vec![k.to_string(), d.to_string()]),
        )
        .collect();
    Output { text, json, csv }
}
