//! CSV formats: populations (`y[,z]`), clustered populations (`cluster_id,y`),
//! samples (`index`) and result tables.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;
use svyboot_core::twostage::ClusteredPopulation;
use svyboot_core::FinitePopulation;

use crate::error::{HarnessError, Result};

#[derive(Debug, Deserialize)]
struct PopulationRow {
    y: f64,
    #[serde(default)]
    z: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ClusterRow {
    cluster_id: String,
    y: f64,
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    index: usize,
}

fn finite(v: f64, row: usize, column: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(HarnessError::Format(format!("row {row}: column `{column}` is not a finite number")))
    }
}

/// Population with optional size measures. Either every row has `z` or none does.
pub fn read_population<R: Read>(reader: R) -> Result<FinitePopulation> {
    let mut ys = Vec::new();
    let mut zs = Vec::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize::<PopulationRow>().enumerate() {
        let row = row?;
        ys.push(finite(row.y, i + 1, "y")?);
        if let Some(z) = row.z {
            zs.push(finite(z, i + 1, "z")?);
        }
    }
    let pop = match zs.len() {
        0 => FinitePopulation::new(ys)?,
        n if n == ys.len() => FinitePopulation::with_sizes(ys, zs)?,
        _ => return Err(HarnessError::Format("column `z` must be filled in on every row or none".into())),
    };
    Ok(pop)
}

/// Clustered population; clusters are ordered by first appearance of their id.
pub fn read_clustered<R: Read>(reader: R) -> Result<ClusteredPopulation> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize::<ClusterRow>().enumerate() {
        let row = row?;
        let y = finite(row.y, i + 1, "y")?;
        if !groups.contains_key(&row.cluster_id) {
            order.push(row.cluster_id.clone());
        }
        groups.entry(row.cluster_id).or_default().push(y);
    }
    let clusters = order
        .iter()
        .map(|id| FinitePopulation::new(groups.remove(id).unwrap_or_default()))
        .collect::<svyboot_core::Result<Vec<_>>>()?;
    Ok(ClusteredPopulation::new(clusters)?)
}

/// Sampled population rows (0-based). Repeats are allowed (PPS).
pub fn read_sample_indices<R: Read>(reader: R, population_size: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<SampleRow>() {
        let idx = row?.index;
        if idx >= population_size {
            return Err(HarnessError::Format(format!("sample index {idx} is outside the population")));
        }
        out.push(idx);
    }
    Ok(out)
}

pub fn write_population<W: Write>(writer: W, pop: &FinitePopulation) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match pop.sizes() {
        Some(z) => {
            w.write_record(["y", "z"])?;
            for (y, z) in pop.values().iter().zip(z) {
                w.write_record([sig6(*y), sig6(*z)])?;
            }
        }
        None => {
            w.write_record(["y"])?;
            for y in pop.values() {
                w.write_record([sig6(*y)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

/// Fixed formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.999995 -> 10.00000)
    if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 6 && decimals > 0 {
        let d = decimals - 1;
        return format!("{x:.d$}");
    }
    s
}
