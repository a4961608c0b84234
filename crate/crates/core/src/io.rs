//! File formats: density matrices and reports as JSON, tables as CSV.
//!
//! JSON output goes through [`serde_json::Value`], whose maps keep keys sorted,
//! and floats print as the shortest string that parses back to the same `f64`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::SweepRow;
use crate::error::{Error, Result};
use crate::matcore::{c, BipartiteDims, ComplexMatrix};
use crate::measurement::{Correlations, JointDistribution};
use crate::states::{DensityMatrix, Dims};

#[derive(Debug, Serialize, Deserialize)]
struct DensityFile {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// `{"dims": [a, b] | [n], "re": [[..]], "im": [[..]]}`
pub fn density_to_value(rho: &DensityMatrix) -> serde_json::Value {
    let m = rho.matrix();
    let n = m.rows();
    let part = |f: fn(crate::matcore::C64) -> f64| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| f(m[(i, j)])).collect()).collect()
    };
    let file = DensityFile {
        dims: rho.dims().as_vec(),
        re: part(|z| z.re),
        im: part(|z| z.im),
    };
    serde_json::to_value(file).expect("plain numeric data serializes")
}

pub fn density_from_value(value: serde_json::Value) -> Result<DensityMatrix> {
    let file: DensityFile = serde_json::from_value(value)?;
    let dims = match file.dims.as_slice() {
        [n] => Dims::Single(*n),
        [a, b] => Dims::Bipartite(BipartiteDims::new(*a, *b)?),
        other => return Err(Error::BadDims(other.to_vec())),
    };
    let n = file.re.len();
    if file.im.len() != n || file.re.iter().chain(&file.im).any(|row| row.len() != n) {
        return Err(Error::BadShape {
            expected: n * n,
            found: file.re.iter().chain(&file.im).map(Vec::len).sum::<usize>() / 2,
        });
    }
    let data = file
        .re
        .iter()
        .flatten()
        .zip(file.im.iter().flatten())
        .map(|(&r, &i)| c(r, i))
        .collect();
    DensityMatrix::new(ComplexMatrix::new(n, n, data)?, dims)
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &density_to_value(rho))
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    density_from_value(serde_json::from_str(&text)?)
}

fn index_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// One header row of outcome labels and one row of counts.
pub fn write_counts_csv<W: Write>(out: W, counts: &[u64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(index_labels("k", counts.len()))?;
    w.write_record(counts.iter().map(u64::to_string))?;
    w.flush()?;
    Ok(())
}

/// Header of B outcome labels, then one row per A outcome.
pub fn write_table_csv<W: Write, T: ToString>(out: W, table: &[Vec<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let cols = table.first().map_or(0, Vec::len);
    w.write_record(index_labels("b", cols))?;
    for row in table {
        w.write_record(row.iter().map(ToString::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_joint_csv<W: Write>(out: W, joint: &JointDistribution) -> Result<()> {
    write_table_csv(out, &joint.table)
}

/// Conditional table with zero-probability conditions written as `undefined`.
pub fn write_conditional_csv<W: Write>(out: W, table: &[Vec<Option<f64>>]) -> Result<()> {
    let cells: Vec<Vec<String>> = table
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| x.map_or_else(|| "undefined".to_string(), |v| v.to_string()))
                .collect()
        })
        .collect();
    write_table_csv(out, &cells)
}

/// Marginals as two labelled rows: `marginal,p0,p1,...`.
pub fn write_marginals_csv<W: Write>(out: W, corr: &Correlations) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = corr.marginal_a.len().max(corr.marginal_b.len());
    let mut header = vec!["marginal".to_string()];
    header.extend(index_labels("k", width));
    w.write_record(&header)?;
    for (name, m) in [("A", &corr.marginal_a), ("B", &corr.marginal_b)] {
        let mut row = vec![name.to_string()];
        row.extend((0..width).map(|k| m.get(k).map_or_else(String::new, f64::to_string)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `d,S_sys,S_A,S_B`
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "S_sys", "S_A", "S_B"])?;
    for r in rows {
        w.write_record([r.d, r.s_sys, r.s_a, r.s_b].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::entropy_sweep;
    use crate::coupling::paraqutrit_d_family;
    use crate::random;
    use crate::states::epr_state;
    use rand::SeedableRng;

    #[test]
    fn density_json_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::bipartite(random::density_matrix(6, &mut rng), BipartiteDims { a: 2, b: 3 }).unwrap();
        let text = to_json_string(&density_to_value(&rho)).unwrap();
        let back = density_from_value(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        assert_eq!(back.dims(), rho.dims());
    }

    #[test]
    fn json_keys_sorted() {
        let text = to_json_string(&density_to_value(&epr_state(0.0).to_density())).unwrap();
        let (d, i, r) = (
            text.find("\"dims\"").unwrap(),
            text.find("\"im\"").unwrap(),
            text.find("\"re\"").unwrap(),
        );
        assert!(d < i && i < r);
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn invalid_density_rejected() {
        let bad = serde_json::json!({"dims": [2], "re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]});
        assert!(matches!(density_from_value(bad), Err(Error::InvalidState(_))));
        let ragged = serde_json::json!({"dims": [2], "re": [[1.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]});
        assert!(matches!(density_from_value(ragged), Err(Error::BadShape { .. })));
        let dims = serde_json::json!({"dims": [3], "re": [[1.0, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]});
        assert!(matches!(density_from_value(dims), Err(Error::DimMismatch { .. })));
        assert!(density_from_value(serde_json::json!({"dims": [2]})).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &entropy_sweep(2).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "d,S_sys,S_A,S_B");
        assert_eq!(lines[1], "0,1,1,1");
        assert!(lines[2].starts_with("1,0,0.918"));
    }

    #[test]
    fn table_csv_layout() {
        let mut buf = Vec::new();
        write_conditional_csv(&mut buf, &[vec![Some(1.0), None], vec![Some(0.0), None]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "b0,b1\n1,undefined\n0,undefined\n");
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &[3, 4]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k0,k1\n3,4\n");
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("qpair-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rho.json");
        let rho = paraqutrit_d_family(0.5).unwrap();
        write_density(&path, &rho).unwrap();
        assert_eq!(read_density(&path).unwrap().matrix(), rho.matrix());
        assert!(matches!(read_density(&dir.join("missing.json")), Err(Error::Io(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
