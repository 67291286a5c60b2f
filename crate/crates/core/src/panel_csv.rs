//! Balanced panel files with header `unit,time,y,x1,...,xk`.
//!
//! Unit and time labels are arbitrary strings; their order of first
//! appearance fixes the row and column order of the panel.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mc::fmt17;
use crate::sim::PanelData;

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledPanel {
    pub units: Vec<String>,
    pub times: Vec<String>,
    pub panel: PanelData,
}

fn index_of(labels: &mut Vec<String>, map: &mut HashMap<String, usize>, key: &str) -> usize {
    *map.entry(key.to_string()).or_insert_with(|| {
        labels.push(key.to_string());
        labels.len() - 1
    })
}

pub fn read_panel<R: Read>(input: R) -> Result<LabelledPanel> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < 4 || header[0] != "unit" || header[1] != "time" || header[2] != "y" {
        return Err(Error::Parse(format!(
            "header must be unit,time,y,x1,...,xk; got {}",
            header.join(",")
        )));
    }
    for (j, h) in header[3..].iter().enumerate() {
        if *h != format!("x{}", j + 1) {
            return Err(Error::Parse(format!(
                "column {} must be named x{}, got '{h}'",
                j + 4,
                j + 1
            )));
        }
    }
    let k = header.len() - 3;
    let (mut units, mut times) = (Vec::new(), Vec::new());
    let (mut umap, mut tmap) = (HashMap::new(), HashMap::new());
    let mut cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("line {}: {e}", line + 2)))?;
        let i = index_of(&mut units, &mut umap, &row[0]);
        let t = index_of(&mut times, &mut tmap, &row[1]);
        let vals = (2..3 + k)
            .map(|c| {
                row[c]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "line {}: non-numeric value '{}' in column {} at (unit={}, time={})",
                            line + 2,
                            &row[c],
                            header[c],
                            &row[0],
                            &row[1]
                        ))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if cells.insert((i, t), vals).is_some() {
            return Err(Error::Parse(format!(
                "duplicate cell (unit={}, time={}) at line {}",
                &row[0],
                &row[1],
                line + 2
            )));
        }
    }
    let (n, tt) = (units.len(), times.len());
    if n < 2 || tt < 2 {
        return Err(Error::Parse(format!(
            "panel must have at least 2 units and 2 times, got {n} x {tt}"
        )));
    }
    let mut y = DMatrix::zeros(n, tt);
    let mut x = vec![DMatrix::zeros(n, tt); k];
    for i in 0..n {
        for t in 0..tt {
            let vals = cells.get(&(i, t)).ok_or_else(|| {
                Error::Parse(format!(
                    "unbalanced panel: missing cell (unit={}, time={})",
                    units[i], times[t]
                ))
            })?;
            y[(i, t)] = vals[0];
            for j in 0..k {
                x[j][(i, t)] = vals[j + 1];
            }
        }
    }
    Ok(LabelledPanel {
        units,
        times,
        panel: PanelData::new(y, x)?,
    })
}

pub fn read_panel_file(path: impl AsRef<Path>) -> Result<LabelledPanel> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_panel(std::io::BufReader::new(f))
}

/// Writes rows unit-major with 17 significant digits. Labels default to
/// `1..n` and `1..T`.
pub fn write_panel<W: Write>(
    out: W,
    panel: &PanelData,
    labels: Option<(&[String], &[String])>,
) -> Result<()> {
    let (n, t, k) = (panel.n(), panel.t(), panel.k());
    let default_units: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let default_times: Vec<String> = (1..=t).map(|i| i.to_string()).collect();
    let (units, times) = labels.unwrap_or((&default_units, &default_times));
    if units.len() != n || times.len() != t {
        return Err(Error::Input(
            "label counts do not match the panel dimensions".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["unit".to_string(), "time".to_string(), "y".to_string()];
    header.extend((1..=k).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..n {
        for s in 0..t {
            let mut row = vec![units[i].clone(), times[s].clone(), fmt17(panel.y[(i, s)])];
            row.extend(panel.x.iter().map(|m| fmt17(m[(i, s)])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_panel_file(path: impl AsRef<Path>, panel: &PanelData) -> Result<()> {
    let f = std::fs::File::create(path.as_ref())?;
    write_panel(std::io::BufWriter::new(f), panel, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CovarianceSpec;
    use crate::sim::{gen_disturbances, gen_panel, ErrorDistribution};

    fn roundtrip(p: &PanelData) -> PanelData {
        let mut buf = Vec::new();
        write_panel(&mut buf, p, None).unwrap();
        read_panel(buf.as_slice()).unwrap().panel
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let v = gen_disturbances(
            &CovarianceSpec::identity(1.0),
            ErrorDistribution::Gaussian,
            7,
            5,
            3,
        )
        .unwrap();
        let p = gen_panel(&[1.0, -0.25], &v, 4).unwrap();
        let q = roundtrip(&p);
        assert_eq!(
            q.y.as_slice()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>(),
            p.y.as_slice()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>()
        );
        for (a, b) in p.x.iter().zip(&q.x) {
            assert!(a
                .iter()
                .zip(b.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert!(q.truth.is_none());
    }

    #[test]
    fn order_of_first_appearance() {
        let text = "unit,time,y,x1\nb,2001,1,10\na,2001,2,20\nb,2000,3,30\na,2000,4,40\n";
        let lp = read_panel(text.as_bytes()).unwrap();
        assert_eq!(lp.units, ["b", "a"]);
        assert_eq!(lp.times, ["2001", "2000"]);
        assert_eq!(lp.panel.y[(1, 1)], 4.0);
        assert_eq!(lp.panel.x[0][(0, 1)], 30.0);
    }

    #[test]
    fn unbalanced_panel_names_first_missing_cell() {
        let text = "unit,time,y,x1\n1,1,0.5,1\n1,2,0.1,2\n2,1,0.3,3\n";
        let err = read_panel(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("unit=2, time=2"), "{err}");
    }

    #[test]
    fn malformed_inputs() {
        let dup = "unit,time,y,x1\n1,1,0.5,1\n1,1,0.1,2\n";
        assert!(read_panel(dup.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(read_panel("unit,time,y\n1,1,2\n".as_bytes()).is_err());
        assert!(read_panel("unit,time,y,z\n1,1,2,3\n".as_bytes()).is_err());
        let nan = "unit,time,y,x1\n1,1,abc,1\n";
        assert!(read_panel(nan.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("abc"));
    }
}
