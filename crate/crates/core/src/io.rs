//! Transaction and product-feature CSV files, plus atomic file writes.
//!
//! Transaction CSV: header `chosen,assortment[,cf_0..cf_{d'-1}]` where
//! `assortment` is an `n`-character `0`/`1` string. Product-feature CSV: one
//! row per product, header `product,pf_0..pf_{d-1}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::choice::{Assortment, ChoiceDataset, ChoiceSample, Universe};
use crate::error::{ChoiceError, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| ChoiceError::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn transactions_to_csv(data: &ChoiceDataset) -> Result<String> {
    let d = data.customer_dim().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["chosen".to_string(), "assortment".to_string()];
    header.extend((0..d).map(|j| format!("cf_{j}")));
    w.write_record(&header)?;
    for s in &data.samples {
        let mut row = vec![s.chosen.to_string(), s.assortment.to_mask_string()];
        if let Some(f) = &s.customer_features {
            row.extend(f.iter().map(|x| format!("{x:?}")));
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ChoiceError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_transactions(path: &Path, data: &ChoiceDataset) -> Result<()> {
    write_atomic(path, transactions_to_csv(data)?.as_bytes())
}

/// Parses a transaction CSV. Errors name the 1-based file line.
pub fn transactions_from_csv(text: &str, no_purchase: bool) -> Result<ChoiceDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "chosen" || &header[1] != "assortment" {
        return Err(ChoiceError::Parse {
            line: 1,
            msg: "header must start with `chosen,assortment`".into(),
        });
    }
    for (j, h) in header.iter().skip(2).enumerate() {
        if h != format!("cf_{j}") {
            return Err(ChoiceError::Parse {
                line: 1,
                msg: format!("unexpected column {h:?}, expected cf_{j}"),
            });
        }
    }
    let d = header.len() - 2;
    let mut samples = Vec::new();
    let mut universe: Option<Universe> = None;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| ChoiceError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != d + 2 {
            return Err(ChoiceError::Parse {
                line,
                msg: format!("expected {} fields, found {}", d + 2, rec.len()),
            });
        }
        let chosen: usize = rec[0].trim().parse().map_err(|_| ChoiceError::Parse {
            line,
            msg: format!("invalid chosen index {:?}", &rec[0]),
        })?;
        let assortment = Assortment::parse_mask(rec[1].trim()).map_err(|e| ChoiceError::Parse {
            line,
            msg: e.to_string(),
        })?;
        let u = match universe {
            Some(u) => u,
            None => {
                let u =
                    Universe::new(assortment.n(), no_purchase).map_err(|e| ChoiceError::Parse {
                        line,
                        msg: e.to_string(),
                    })?;
                universe = Some(u);
                u
            }
        };
        if assortment.n() != u.n() {
            return Err(ChoiceError::Parse {
                line,
                msg: format!(
                    "assortment has {} items, expected {}",
                    assortment.n(),
                    u.n()
                ),
            });
        }
        let customer_features = if d > 0 {
            Some(
                rec.iter()
                    .skip(2)
                    .map(|x| {
                        x.trim().parse::<f64>().map_err(|_| ChoiceError::Parse {
                            line,
                            msg: format!("invalid number {x:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        samples.push(ChoiceSample {
            chosen,
            assortment,
            customer_features,
        });
    }
    let universe = universe.ok_or_else(|| ChoiceError::Parse {
        line: 1,
        msg: "no transactions".into(),
    })?;
    Ok(ChoiceDataset::new(universe, samples))
}

pub fn read_transactions(path: &Path, no_purchase: bool) -> Result<ChoiceDataset> {
    transactions_from_csv(&fs::read_to_string(path)?, no_purchase)
}

pub fn product_features_to_csv(rows: &[Vec<f64>]) -> Result<String> {
    let d = rows.first().map(Vec::len).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["product".to_string()];
    header.extend((0..d).map(|j| format!("pf_{j}")));
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|x| format!("{x:?}")));
        w.write_record(&rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ChoiceError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn product_features_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.is_empty() || &header[0] != "product" {
        return Err(ChoiceError::Parse {
            line: 1,
            msg: "header must start with `product`".into(),
        });
    }
    let d = header.len() - 1;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| ChoiceError::Parse {
            line,
            msg: e.to_string(),
        })?;
        let parse = |x: &str| {
            x.trim().parse::<f64>().map_err(|_| ChoiceError::Parse {
                line,
                msg: format!("invalid number {x:?}"),
            })
        };
        let idx: usize = rec[0].trim().parse().map_err(|_| ChoiceError::Parse {
            line,
            msg: format!("invalid product index {:?}", &rec[0]),
        })?;
        if rec.len() != d + 1 {
            return Err(ChoiceError::Parse {
                line,
                msg: format!("expected {} fields, found {}", d + 1, rec.len()),
            });
        }
        rows.push((idx, rec.iter().skip(1).map(parse).collect::<Result<_>>()?));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, (idx, _)) in rows.iter().enumerate() {
        if *idx != expect {
            return Err(ChoiceError::Parse {
                line: 0,
                msg: format!("product rows must cover 0..{} exactly", rows.len()),
            });
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
