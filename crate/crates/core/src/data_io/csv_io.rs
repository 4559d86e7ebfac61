use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dag::DiscreteDataset;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Sidecar {
    arities: Vec<usize>,
}

/// `data.csv` -> `data.arities.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("arities.json")
}

/// Write `Z1..Zm,I1..Im[,cond]` with one-based states, plus the arity
/// sidecar.
pub fn save_dataset(path: &Path, data: &DiscreteDataset) -> Result<()> {
    let m = data.nodes();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> = (1..=m).map(|i| format!("Z{i}")).collect();
    header.extend((1..=m).map(|i| format!("I{i}")));
    if data.conditions().is_some() {
        header.push("cond".into());
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in 0..data.rows() {
        let mut rec: Vec<String> = (0..m).map(|i| (data.value(r, i) + 1).to_string()).collect();
        rec.extend((0..m).map(|i| (data.is_fixed(r, i) as u8).to_string()));
        if let Some(c) = data.conditions() {
            rec.push(c[r].to_string());
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    let side = Sidecar {
        arities: data.arities().to_vec(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Read a dataset written by [`save_dataset`]. Arities come from the sidecar
/// when present, otherwise from the largest observed state per column.
pub fn load_dataset(path: &Path) -> Result<DiscreteDataset> {
    let name = path.display().to_string();
    let parse = |line: usize, msg: String| Error::Parse {
        path: name.clone(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let has_cond = header.last().is_some_and(|h| h == "cond");
    let width = header.len() - has_cond as usize;
    if width == 0 || width % 2 != 0 {
        return Err(parse(1, "expected columns Z1..Zm,I1..Im".into()));
    }
    let m = width / 2;
    for i in 0..m {
        if header[i] != format!("Z{}", i + 1) || header[m + i] != format!("I{}", i + 1) {
            return Err(parse(1, format!("unexpected column names {header:?}")));
        }
    }
    let declared: Option<Vec<usize>> = match fs::read_to_string(sidecar_path(path)) {
        Ok(s) => Some(serde_json::from_str::<Sidecar>(&s)?.arities),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(a) = &declared {
        if a.len() != m {
            return Err(parse(1, format!("sidecar declares {} nodes, file has {m}", a.len())));
        }
    }

    let mut rows = Vec::new();
    let mut masks = Vec::new();
    let mut labels = Vec::new();
    let mut observed = vec![1usize; m];
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != header.len() {
            return Err(parse(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let mut vals = Vec::with_capacity(m);
        for i in 0..m {
            let s: usize = rec[i]
                .parse()
                .map_err(|_| parse(line, format!("column Z{}: {:?} is not a state", i + 1, &rec[i])))?;
            let limit = declared.as_ref().map_or(u8::MAX as usize, |a| a[i]);
            if s < 1 || s > limit {
                return Err(parse(line, format!("column Z{}: state {s} outside 1..={limit}", i + 1)));
            }
            observed[i] = observed[i].max(s);
            vals.push((s - 1) as u8);
        }
        let mut mask = Vec::with_capacity(m);
        for i in 0..m {
            mask.push(match &rec[m + i] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse(line, format!("column I{}: {other:?} is not 0 or 1", i + 1)))
                }
            });
        }
        if has_cond {
            labels.push(
                rec[width]
                    .parse::<u32>()
                    .map_err(|_| parse(line, format!("cond: {:?} is not a label", &rec[width])))?,
            );
        }
        rows.push(vals);
        masks.push(mask);
    }
    let data = DiscreteDataset::from_rows(declared.unwrap_or(observed), &rows, &masks)?;
    if has_cond {
        data.with_conditions(labels)
    } else {
        Ok(data)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.display().to_string(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DiscreteDataset {
        let rows = vec![vec![0, 2], vec![1, 0], vec![1, 1]];
        let masks = vec![vec![false, true], vec![false, false], vec![true, false]];
        DiscreteDataset::from_rows(vec![2, 3], &rows, &masks)
            .unwrap()
            .with_conditions(vec![1, 1, 2])
            .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = sample();
        save_dataset(&p, &d).unwrap();
        assert_eq!(load_dataset(&p).unwrap(), d);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("Z1,Z2,I1,I2,cond\n1,3,0,1,1\n"));
    }

    #[test]
    fn out_of_range_state_names_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "Z1,Z2,I1,I2\n1,2,0,0\n3,4,0,0\n").unwrap();
        fs::write(sidecar_path(&p), r#"{"arities":[3,3]}"#).unwrap();
        let msg = load_dataset(&p).unwrap_err().to_string();
        assert!(msg.contains(":3:") && msg.contains("Z2"), "{msg}");
    }

    #[test]
    fn arities_are_inferred_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "Z1,Z2,I1,I2\n1,2,0,0\n3,1,1,0\n").unwrap();
        let d = load_dataset(&p).unwrap();
        assert_eq!(d.arities(), &[3, 2]);
        assert!(d.is_fixed(1, 0));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "Z1,I1\n1,2\n").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::Parse { line: 2, .. })));
        fs::write(&p, "Z1,Z2,I1\n1,1,0\n").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::Parse { line: 1, .. })));
        fs::write(&p, "Z1,I1\n1,0\n1\n").unwrap();
        assert!(load_dataset(&p).is_err());
    }
}
