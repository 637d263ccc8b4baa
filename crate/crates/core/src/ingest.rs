//! Long-format CSV ingestion.
//!
//! The file has the header `source_id,variable,value` and one observation per
//! row. `variable` is `target`, `char:<name>` (exactly one row per source) or
//! `param:<name>` (two or more rows per source). Row numbers in errors are
//! file line numbers, the header being line 1.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Characteristic, Dataset, Parameter, Source};

pub const HEADER: [&str; 3] = ["source_id", "variable", "value"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Variable {
    Target,
    Char(String),
    Param(String),
}

fn parse_variable(raw: &str, row: usize) -> Result<Variable> {
    let bad = |msg: String| Error::Parse { row, msg };
    if raw == "target" {
        return Ok(Variable::Target);
    }
    let (kind, name) = raw
        .split_once(':')
        .ok_or_else(|| bad(format!("variable '{raw}' is not target, char:<name> or param:<name>")))?;
    if name.is_empty() {
        return Err(bad(format!("variable '{raw}' has an empty name")));
    }
    match kind {
        "char" => Ok(Variable::Char(name.to_string())),
        "param" => Ok(Variable::Param(name.to_string())),
        _ => Err(bad(format!(
            "variable '{raw}' is not target, char:<name> or param:<name>"
        ))),
    }
}

/// All sources of a long-format file, before a primary is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCollection {
    /// Source ids in order of first appearance.
    pub ids: Vec<String>,
    pub targets: Vec<Vec<f64>>,
    /// Per characteristic name, one value per source (aligned with `ids`).
    pub characteristics: Vec<Characteristic>,
    /// Per parameter name, samples per source (aligned with `ids`).
    pub parameters: Vec<Parameter>,
}

impl SourceCollection {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::Validation(format!("unknown source '{id}'")))
    }

    /// Index order with `primary` first, the rest in file order.
    pub fn order_for(&self, primary: usize) -> Vec<usize> {
        std::iter::once(primary)
            .chain((0..self.len()).filter(|&i| i != primary))
            .collect()
    }

    /// Builds the dataset seen from `primary`, with `targets` replacing the
    /// stored target samples (aligned with `ids`).
    pub fn dataset_with_targets(
        &self,
        primary: usize,
        targets: &[Vec<f64>],
        parameters: &[Parameter],
    ) -> Result<Dataset> {
        let order = self.order_for(primary);
        let mut sources = order
            .iter()
            .map(|&i| Source::new(self.ids[i].clone(), targets[i].clone()))
            .collect::<Result<Vec<_>>>()?;
        let primary_source = sources.remove(0);
        let characteristics = self
            .characteristics
            .iter()
            .map(|c| Characteristic {
                name: c.name.clone(),
                values: order.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        let parameters = parameters
            .iter()
            .map(|p| Parameter {
                name: p.name.clone(),
                samples: order.iter().map(|&i| p.samples[i].clone()).collect(),
            })
            .collect();
        Dataset::new(primary_source, sources, characteristics, parameters)
    }

    /// The full-data dataset with `primary_id` as the primary source.
    pub fn dataset_for(&self, primary_id: &str) -> Result<Dataset> {
        let primary = self.position(primary_id)?;
        self.dataset_with_targets(primary, &self.targets, &self.parameters)
    }
}

pub fn load_long_csv(path: impl AsRef<Path>) -> Result<SourceCollection> {
    let file = std::fs::File::open(path.as_ref())?;
    read_long_csv(file)
}

pub fn read_long_csv<R: Read>(reader: R) -> Result<SourceCollection> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.records();
    let header = records
        .next()
        .ok_or(Error::Parse {
            row: 1,
            msg: "file is empty".into(),
        })??;
    let header: Vec<&str> = header.iter().collect();
    if header != HEADER {
        return Err(Error::Parse {
            row: 1,
            msg: format!(
                "header must be exactly '{}', found '{}'",
                HEADER.join(","),
                header.join(",")
            ),
        });
    }

    let mut ids: Vec<String> = Vec::new();
    let mut first_row: HashMap<String, usize> = HashMap::new();
    let mut targets: HashMap<String, Vec<f64>> = HashMap::new();
    let mut chars: BTreeMap<String, HashMap<String, (f64, usize)>> = BTreeMap::new();
    let mut char_order: Vec<String> = Vec::new();
    let mut params: BTreeMap<String, HashMap<String, Vec<f64>>> = BTreeMap::new();
    let mut param_order: Vec<String> = Vec::new();

    for record in records {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::Parse {
                row,
                msg: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row,
                msg: "empty source_id".into(),
            });
        }
        let variable = parse_variable(&record[1], row)?;
        let value: f64 = record[2].parse().map_err(|_| Error::Parse {
            row,
            msg: format!("value '{}' is not a number", &record[2]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                row,
                msg: format!("value '{}' is not finite", &record[2]),
            });
        }
        if !first_row.contains_key(&id) {
            first_row.insert(id.clone(), row);
            ids.push(id.clone());
        }
        match variable {
            Variable::Target => targets.entry(id).or_default().push(value),
            Variable::Char(name) => {
                if !chars.contains_key(&name) {
                    char_order.push(name.clone());
                }
                let per_source = chars.entry(name.clone()).or_default();
                if let Some((_, earlier)) = per_source.get(&id) {
                    return Err(Error::Parse {
                        row,
                        msg: format!(
                            "duplicate char:{name} for source '{id}' (first given on row {earlier})"
                        ),
                    });
                }
                per_source.insert(id, (value, row));
            }
            Variable::Param(name) => {
                if !params.contains_key(&name) {
                    param_order.push(name.clone());
                }
                params.entry(name).or_default().entry(id).or_default().push(value);
            }
        }
    }

    if ids.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 sources, found {}",
            ids.len()
        )));
    }
    let mut target_vecs = Vec::with_capacity(ids.len());
    for id in &ids {
        match targets.remove(id) {
            Some(t) if t.len() >= 2 => target_vecs.push(t),
            found => {
                return Err(Error::Parse {
                    row: first_row[id],
                    msg: format!(
                        "source '{id}' (first seen here) has {} target rows; at least 2 are required",
                        found.map_or(0, |t| t.len())
                    ),
                })
            }
        }
    }
    let characteristics = char_order
        .into_iter()
        .map(|name| {
            let per_source = &chars[&name];
            let values = ids
                .iter()
                .map(|id| {
                    per_source.get(id).map(|(v, _)| *v).ok_or_else(|| Error::Parse {
                        row: first_row[id],
                        msg: format!("source '{id}' (first seen here) has no char:{name} row"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Characteristic { name, values })
        })
        .collect::<Result<Vec<_>>>()?;
    let parameters = param_order
        .into_iter()
        .map(|name| {
            let per_source = &params[&name];
            let samples = ids
                .iter()
                .map(|id| match per_source.get(id) {
                    Some(s) if s.len() >= 2 => Ok(s.clone()),
                    found => Err(Error::Parse {
                        row: first_row[id],
                        msg: format!(
                            "source '{id}' (first seen here) has {} param:{name} rows; at least 2 are required",
                            found.map_or(0, |s| s.len())
                        ),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Parameter { name, samples })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SourceCollection {
        ids,
        targets: target_vecs,
        characteristics,
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<SourceCollection> {
        read_long_csv(text.as_bytes())
    }

    const MINIMAL: &str = "source_id,variable,value
a,target,1.0
a,target,2.0
a,char:age,30
b,target,0.5
b,target,1.5
b,char:age,40
c,target,3
c,target,4
c,char:age,50
";

    #[test]
    fn minimal_fixture() {
        let c = read(MINIMAL).unwrap();
        assert_eq!(c.ids, vec!["a", "b", "c"]);
        let d = c.dataset_for("b").unwrap();
        assert_eq!(d.width(), 2);
        assert_eq!(d.primary().id, "b");
        assert_eq!(d.characteristics()[0].values, vec![40.0, 30.0, 50.0]);
        assert!(c.dataset_for("zzz").is_err());
    }

    #[test]
    fn row_numbers_in_errors() {
        let dup = MINIMAL.replace("b,char:age,40\n", "b,char:age,40\nb,char:age,41\n");
        let err = read(&dup).unwrap_err().to_string();
        assert!(err.starts_with("row 8:"), "{err}");
        assert!(err.contains("row 7"), "{err}");

        let nan = MINIMAL.replace("c,target,3", "c,target,abc");
        assert!(read(&nan).unwrap_err().to_string().starts_with("row 8:"));

        let header = MINIMAL.replace("source_id,variable,value", "source,variable,value");
        assert!(read(&header).unwrap_err().to_string().starts_with("row 1:"));

        let var = MINIMAL.replace("a,char:age", "a,feature:age");
        assert!(read(&var).unwrap_err().to_string().starts_with("row 4:"));
    }

    #[test]
    fn missing_rows_are_reported() {
        let no_target = "source_id,variable,value\na,target,1\na,target,2\nb,char:x,1\na,char:x,2\n";
        let err = read(no_target).unwrap_err().to_string();
        assert!(err.contains("'b'") && err.starts_with("row 4:"), "{err}");

        let missing_char = MINIMAL.replace("c,char:age,50\n", "");
        assert!(read(&missing_char).unwrap_err().to_string().contains("no char:age"));
    }

    #[test]
    fn parameters_are_grouped() {
        let text = format!("{MINIMAL}a,param:hr,1\na,param:hr,2\nb,param:hr,3\nb,param:hr,4\nc,param:hr,5\nc,param:hr,6\n");
        let c = read(&text).unwrap();
        assert_eq!(c.parameters[0].samples[2], vec![5.0, 6.0]);
        let short = format!("{MINIMAL}a,param:hr,1\na,param:hr,2\nb,param:hr,3\nb,param:hr,4\nc,param:hr,5\n");
        assert!(read(&short).is_err());
    }
}
