//! CSV ingestion and serialization.
//!
//! Formats: node file with header `id,x1,...,xk`; edge file with header
//! `i,j,y`; optional mask file with header `i,j,d` (d in {0,1}). Node IDs are
//! arbitrary strings mapped to dense indices in file order, and the mapping
//! travels with the dataset. Without a mask file, either every unordered pair
//! must appear in the edge file or `missing_implicit` must be set, in which
//! case absent pairs are unobserved.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::{DyadMask, DyadMatrix, SymMatrix};
use crate::mc::RepRecord;
use crate::model::{validate_dataset, DyadicDataset, XProfile};
use crate::sim::SimTruth;

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// Treat pairs absent from the edge file as unobserved instead of
    /// requiring full coverage (ignored when a mask file is given).
    pub missing_implicit: bool,
    /// Per-coordinate discreteness; None auto-detects (a column is discrete
    /// when every value is a whole number).
    pub discrete: Option<Vec<bool>>,
}

fn parse_f64(field: &str, context: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::Invalid(format!("{context} line {line}: `{field}` is not a number"))
    })
}

fn read_nodes(path: &Path, opts: &IngestOptions) -> Result<(XProfile, Vec<String>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.get(0).map(str::trim) != Some("id") {
        return Err(Error::Invalid(format!(
            "node file {} must start with header column `id`",
            path.display()
        )));
    }
    let k = header.len() - 1;
    if k == 0 {
        return Err(Error::Invalid("node file has no covariate columns".into()));
    }
    let mut ids = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut data = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() != k + 1 {
            return Err(Error::Invalid(format!(
                "node file line {line}: expected {} fields, got {}",
                k + 1,
                rec.len()
            )));
        }
        let id = rec[0].trim().to_string();
        if seen.insert(id.clone(), ids.len()).is_some() {
            return Err(Error::Invalid(format!("node file line {line}: duplicate id `{id}`")));
        }
        ids.push(id);
        for c in 1..=k {
            data.push(parse_f64(&rec[c], "node file", line)?);
        }
    }
    let n = ids.len();
    if n == 0 {
        return Err(Error::Invalid("node file has no rows".into()));
    }
    let discrete = match &opts.discrete {
        Some(d) => {
            if d.len() != k {
                return Err(Error::Dimension {
                    context: "discreteness override",
                    expected: k,
                    got: d.len(),
                });
            }
            d.clone()
        }
        None => (0..k)
            .map(|c| (0..n).all(|i| data[i * k + c].fract() == 0.0))
            .collect(),
    };
    Ok((XProfile::new(n, k, data, discrete)?, ids))
}

/// Read nodes + edges (+ optional mask) into a validated dataset. The dense
/// index of each agent is its row order in the node file.
pub fn ingest(
    nodes: &Path,
    edges: &Path,
    mask: Option<&Path>,
    opts: &IngestOptions,
) -> Result<DyadicDataset> {
    let (x, ids) = read_nodes(nodes, opts)?;
    let n = ids.len();
    let index: HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let lookup = |field: &str, context: &'static str| -> Result<usize> {
        index
            .get(field.trim())
            .copied()
            .ok_or_else(|| Error::UnknownId { id: field.trim().to_string(), context })
    };

    let mut y = DyadMatrix::filled(n, f64::NAN);
    let mut have_edge = DyadMask::filled(n, false);
    let mut rdr = csv::Reader::from_path(edges)?;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() != 3 {
            return Err(Error::Invalid(format!(
                "edge file line {line}: expected 3 fields, got {}",
                rec.len()
            )));
        }
        let (i, j) = (lookup(&rec[0], "edge file")?, lookup(&rec[1], "edge file")?);
        if i == j {
            return Err(Error::Invalid(format!(
                "edge file line {line}: self-loop on `{}`",
                rec[0].trim()
            )));
        }
        let v = parse_f64(&rec[2], "edge file", line)?;
        if have_edge.get(i, j) {
            let prev = y.get(i, j);
            if prev.to_bits() != v.to_bits() {
                return Err(Error::DuplicateConflict {
                    i: ids[i.min(j)].clone(),
                    j: ids[i.max(j)].clone(),
                    a: prev,
                    b: v,
                });
            }
            continue;
        }
        y.set(i, j, v);
        have_edge.set(i, j, true);
    }

    let observed = match mask {
        Some(mpath) => {
            let mut m = DyadMask::filled(n, false);
            let mut rdr = csv::Reader::from_path(mpath)?;
            for (r, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let line = r + 2;
                if rec.len() != 3 {
                    return Err(Error::Invalid(format!(
                        "mask file line {line}: expected 3 fields, got {}",
                        rec.len()
                    )));
                }
                let (i, j) = (lookup(&rec[0], "mask file")?, lookup(&rec[1], "mask file")?);
                if i == j {
                    continue;
                }
                let d = match rec[2].trim() {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::Invalid(format!(
                            "mask file line {line}: `{other}` is not 0/1"
                        )))
                    }
                };
                m.set(i, j, d);
            }
            m
        }
        None if opts.missing_implicit => have_edge.clone(),
        None => DyadMask::filled(n, true),
    };

    // every observed dyad needs a value
    for i in 0..n {
        for j in (i + 1)..n {
            if observed.get(i, j) && !have_edge.get(i, j) {
                return Err(Error::Invalid(format!(
                    "dyad ({}, {}) is marked observed but the edge file has no row for it \
                     (set missing_implicit or provide a mask)",
                    ids[i], ids[j]
                )));
            }
        }
    }

    let ds = DyadicDataset::new(y, observed, x, Some(ids))?;
    let report = validate_dataset(&ds);
    if let Some(&(i, j)) = report.nonfinite.first() {
        return Err(Error::Invalid(format!(
            "non-finite outcome at observed dyad ({}, {})",
            ds.ids[i], ds.ids[j]
        )));
    }
    Ok(ds)
}

pub fn write_nodes(path: &Path, x: &XProfile, ids: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=x.k()).map(|c| format!("x{c}")));
    wtr.write_record(&header)?;
    for i in 0..x.n() {
        let mut row = vec![ids[i].clone()];
        row.extend(x.row(i).iter().map(|v| format_float(*v)));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Observed dyads only, one row per unordered pair.
pub fn write_edges(path: &Path, ds: &DyadicDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["i", "j", "y"])?;
    for i in 0..ds.n() {
        for j in (i + 1)..ds.n() {
            if ds.mask.get(i, j) {
                wtr.write_record([
                    ds.ids[i].as_str(),
                    ds.ids[j].as_str(),
                    &format_float(ds.y.get(i, j)),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_mask(path: &Path, ds: &DyadicDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["i", "j", "d"])?;
    for i in 0..ds.n() {
        for j in (i + 1)..ds.n() {
            wtr.write_record([
                ds.ids[i].as_str(),
                ds.ids[j].as_str(),
                if ds.mask.get(i, j) { "1" } else { "0" },
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_truth_json(path: &Path, truth: &SimTruth) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, truth)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Long-format dump of an off-diagonal pair matrix (distances).
pub fn write_pair_matrix(path: &Path, m: &DyadMatrix, ids: &[String], value_col: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["i", "j", value_col])?;
    for i in 0..m.n() {
        for j in (i + 1)..m.n() {
            wtr.write_record([ids[i].as_str(), ids[j].as_str(), &format_float(m.get(i, j))])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Long-format dump of a symmetric matrix including its diagonal (denoised
/// surfaces).
pub fn write_sym_matrix(path: &Path, m: &SymMatrix, ids: &[String], value_col: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["i", "j", value_col])?;
    for i in 0..m.n() {
        for j in i..m.n() {
            wtr.write_record([ids[i].as_str(), ids[j].as_str(), &format_float(m.get(i, j))])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Per-replication Monte Carlo estimates; one row per (replication,
/// estimator), with the error message for failed fits.
pub fn write_per_rep_csv(path: &Path, recs: &[RepRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["rep", "estimator", "estimate", "error"])?;
    for r in recs {
        wtr.write_record([
            r.rep.to_string().as_str(),
            &r.estimator.to_string(),
            &r.estimate.map_or_else(String::new, format_float),
            r.error.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// f64 Display prints the shortest decimal that parses back to the same
/// bits, which is what makes the CSV round-trip exact.
fn format_float(v: f64) -> String {
    v.to_string()
}
