//! File loading and writing for interaction logs and catalogs (jsonl and csv).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, EventType, Interaction, ItemMeta};
use crate::error::{RecError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Jsonl,
    Csv,
}

/// Loads interactions in file order.
///
/// Jsonl rows look like
/// `{"session_id": "s1", "item_id": "a", "timestamp": 0, "event_type": "view"}`;
/// csv files carry a `session_id,item_id,timestamp,event_type` header.
/// `event_type` is optional and defaults to `view`. Errors name the
/// offending 1-based line.
pub fn load_interactions(path: &Path, format: FileFormat) -> Result<Vec<Interaction>> {
    match format {
        FileFormat::Jsonl => load_interactions_jsonl(path),
        FileFormat::Csv => load_interactions_csv(path),
    }
}

fn validate_interaction(row: &Interaction, path: &Path, line: usize) -> Result<()> {
    if row.item_id.is_empty() {
        return Err(RecError::parse(path, line, "missing or empty item_id"));
    }
    if row.timestamp < 0 {
        return Err(RecError::parse(
            path,
            line,
            format!("negative timestamp {}", row.timestamp),
        ));
    }
    Ok(())
}

fn load_interactions_jsonl(path: &Path) -> Result<Vec<Interaction>> {
    let file = File::open(path).map_err(|e| RecError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| RecError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Interaction = serde_json::from_str(&line)
            .map_err(|e| RecError::parse(path, line_no, e.to_string()))?;
        validate_interaction(&row, path, line_no)?;
        out.push(row);
    }
    Ok(out)
}

fn load_interactions_csv(path: &Path) -> Result<Vec<Interaction>> {
    let file = File::open(path).map_err(|e| RecError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| RecError::parse(path, 1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (sid_col, item_col, ts_col) = match (col("session_id"), col("item_id"), col("timestamp")) {
        (Some(s), Some(i), Some(t)) => (s, i, t),
        _ => {
            return Err(RecError::parse(
                path,
                1,
                "header must contain session_id,item_id,timestamp",
            ))
        }
    };
    let event_col = col("event_type");

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RecError::parse(path, 0, e.to_string()))?;
        let line_no = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let timestamp: i64 = field(ts_col).parse().map_err(|_| {
            RecError::parse(
                path,
                line_no,
                format!("invalid timestamp {:?}", field(ts_col)),
            )
        })?;
        let event_type = match event_col.map(field).filter(|v| !v.is_empty()) {
            None => EventType::default(),
            Some("view") => EventType::View,
            Some("add") => EventType::Add,
            Some("purchase") => EventType::Purchase,
            Some(other) => {
                return Err(RecError::parse(
                    path,
                    line_no,
                    format!("unknown event_type {:?}", other),
                ))
            }
        };
        let row = Interaction {
            session_id: field(sid_col).to_string(),
            item_id: field(item_col).to_string(),
            timestamp,
            event_type,
        };
        validate_interaction(&row, path, line_no)?;
        out.push(row);
    }
    Ok(out)
}

/// Raw catalog row as found on disk: the category path is a `>`-joined string.
#[derive(Debug, Serialize, Deserialize)]
struct CatalogRow {
    item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    brand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category_path: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, String>,
}

impl From<&ItemMeta> for CatalogRow {
    fn from(meta: &ItemMeta) -> Self {
        CatalogRow {
            item_id: meta.item_id.clone(),
            price: meta.price,
            brand: meta.brand.clone(),
            category_path: meta.category_path.as_ref().map(|p| p.join(">")),
            extra: meta.extra.clone(),
        }
    }
}

/// Writes interactions in the jsonl format read back by
/// [`load_interactions`], one object per line in input order.
pub fn write_interactions_jsonl(rows: &[Interaction], mut writer: impl Write) -> Result<()> {
    let fail = |e: std::io::Error| RecError::Data(format!("write interactions: {e}"));
    for row in rows {
        let line = serde_json::to_string(row)
            .map_err(|e| RecError::Data(format!("serialize interaction: {e}")))?;
        writer.write_all(line.as_bytes()).map_err(fail)?;
        writer.write_all(b"\n").map_err(fail)?;
    }
    Ok(())
}

/// Writes catalog rows in the jsonl format read back by [`load_catalog`].
pub fn write_catalog_jsonl<'a>(
    rows: impl Iterator<Item = &'a ItemMeta>,
    mut writer: impl Write,
) -> Result<()> {
    let fail = |e: std::io::Error| RecError::Data(format!("write catalog: {e}"));
    for meta in rows {
        let line = serde_json::to_string(&CatalogRow::from(meta))
            .map_err(|e| RecError::Data(format!("serialize catalog row: {e}")))?;
        writer.write_all(line.as_bytes()).map_err(fail)?;
        writer.write_all(b"\n").map_err(fail)?;
    }
    Ok(())
}

impl CatalogRow {
    fn into_meta(self, path: &Path, line: usize) -> Result<ItemMeta> {
        if self.item_id.is_empty() {
            return Err(RecError::parse(path, line, "missing or empty item_id"));
        }
        if let Some(p) = self.price {
            if !p.is_finite() || p < 0.0 {
                return Err(RecError::parse(path, line, format!("negative price {}", p)));
            }
        }
        let category_path = match self.category_path.filter(|s| !s.is_empty()) {
            None => None,
            Some(joined) => {
                let labels: Vec<String> = joined.split('>').map(str::to_string).collect();
                if labels.iter().any(|l| l.is_empty()) {
                    return Err(RecError::parse(
                        path,
                        line,
                        format!("empty label in category_path {:?}", joined),
                    ));
                }
                Some(labels)
            }
        };
        Ok(ItemMeta {
            item_id: self.item_id,
            price: self.price,
            brand: self.brand.filter(|b| !b.is_empty()),
            category_path,
            extra: self.extra,
        })
    }
}

/// Loads a catalog. Duplicate item ids and negative prices are errors.
///
/// Csv files need an `item_id` column; `price`, `brand` and `category_path`
/// are recognized when present and any remaining columns land in `extra`.
pub fn load_catalog(path: &Path, format: FileFormat) -> Result<Catalog> {
    let rows = match format {
        FileFormat::Jsonl => load_catalog_jsonl(path)?,
        FileFormat::Csv => load_catalog_csv(path)?,
    };
    Catalog::from_rows(rows)
}

fn load_catalog_jsonl(path: &Path) -> Result<Vec<ItemMeta>> {
    let file = File::open(path).map_err(|e| RecError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| RecError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CatalogRow = serde_json::from_str(&line)
            .map_err(|e| RecError::parse(path, line_no, e.to_string()))?;
        out.push(row.into_meta(path, line_no)?);
    }
    Ok(out)
}

fn load_catalog_csv(path: &Path) -> Result<Vec<ItemMeta>> {
    let file = File::open(path).map_err(|e| RecError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| RecError::parse(path, 1, e.to_string()))?
        .clone();
    if !headers.iter().any(|h| h == "item_id") {
        return Err(RecError::parse(path, 1, "header must contain item_id"));
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RecError::parse(path, 0, e.to_string()))?;
        let line_no = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = CatalogRow {
            item_id: String::new(),
            price: None,
            brand: None,
            category_path: None,
            extra: BTreeMap::new(),
        };
        for (header, value) in headers.iter().zip(rec.iter()) {
            match header {
                "item_id" => row.item_id = value.to_string(),
                "price" if !value.is_empty() => {
                    let p: f64 = value.parse().map_err(|_| {
                        RecError::parse(path, line_no, format!("invalid price {:?}", value))
                    })?;
                    row.price = Some(p);
                }
                "brand" if !value.is_empty() => row.brand = Some(value.to_string()),
                "category_path" if !value.is_empty() => {
                    row.category_path = Some(value.to_string())
                }
                "price" | "brand" | "category_path" => {}
                other if !value.is_empty() => {
                    row.extra.insert(other.to_string(), value.to_string());
                }
                _ => {}
            }
        }
        out.push(row.into_meta(path, line_no)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_empty_list() {
        let f = write_tmp("");
        assert!(load_interactions(f.path(), FileFormat::Jsonl)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn jsonl_rows_kept_in_file_order() {
        let f = write_tmp(concat!(
            "{\"session_id\":\"s1\",\"item_id\":\"b\",\"timestamp\":5}\n",
            "{\"session_id\":\"s1\",\"item_id\":\"a\",\"timestamp\":3}\n",
            "{\"session_id\":\"s2\",\"item_id\":\"c\",\"timestamp\":1,\"event_type\":\"add\"}\n",
        ));
        let rows = load_interactions(f.path(), FileFormat::Jsonl).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].item_id, "b");
        assert_eq!(rows[1].item_id, "a");
        assert_eq!(rows[2].event_type, EventType::Add);
    }

    #[test]
    fn missing_item_id_names_line_two() {
        let f = write_tmp(concat!(
            "{\"session_id\":\"s1\",\"item_id\":\"a\",\"timestamp\":0}\n",
            "{\"session_id\":\"s1\",\"timestamp\":1}\n",
        ));
        let err = load_interactions(f.path(), FileFormat::Jsonl).unwrap_err();
        match err {
            RecError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn negative_timestamp_rejected() {
        let f = write_tmp("{\"session_id\":\"s\",\"item_id\":\"a\",\"timestamp\":-1}\n");
        assert!(load_interactions(f.path(), FileFormat::Jsonl).is_err());
    }

    #[test]
    fn csv_interactions_roundtrip() {
        let f = write_tmp(concat!(
            "session_id,item_id,timestamp,event_type\n",
            "s1,a,0,view\n",
            "s1,b,10,\n",
            "s2,c,20,purchase\n",
        ));
        let rows = load_interactions(f.path(), FileFormat::Csv).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].event_type, EventType::View);
        assert_eq!(rows[2].event_type, EventType::Purchase);
    }

    #[test]
    fn csv_bad_timestamp_names_line() {
        let f = write_tmp(concat!(
            "session_id,item_id,timestamp\n",
            "s1,a,0\n",
            "s1,b,xyz\n",
        ));
        let err = load_interactions(f.path(), FileFormat::Csv).unwrap_err();
        match err {
            RecError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn catalog_jsonl_with_paths_and_extra() {
        let f = write_tmp(concat!(
            "{\"item_id\":\"a\",\"price\":129.0,\"brand\":\"nike\",\"category_path\":\"root>shoes>running\"}\n",
            "{\"item_id\":\"b\",\"extra\":{\"color\":\"red\"}}\n",
        ));
        let cat = load_catalog(f.path(), FileFormat::Jsonl).unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.brand_of("a"), Some("nike"));
        assert_eq!(cat.leaf_category_of("a"), Some("running"));
        assert_eq!(cat.get("b").unwrap().extra.get("color").unwrap(), "red");
        // b has no category_path: attached directly under the synthetic root,
        // so only a's chain contributes nodes.
        assert_eq!(cat.taxonomy().node_count(), 4);
    }

    #[test]
    fn catalog_duplicate_id_is_error() {
        let f = write_tmp("{\"item_id\":\"a\"}\n{\"item_id\":\"a\"}\n");
        assert!(load_catalog(f.path(), FileFormat::Jsonl).is_err());
    }

    #[test]
    fn catalog_csv_extra_columns() {
        let f = write_tmp(concat!(
            "item_id,price,brand,category_path,color\n",
            "a,10.5,asics,root>shoes,blue\n",
        ));
        let cat = load_catalog(f.path(), FileFormat::Csv).unwrap();
        let meta = cat.get("a").unwrap();
        assert_eq!(meta.price, Some(10.5));
        assert_eq!(meta.extra.get("color").unwrap(), "blue");
        assert_eq!(meta.category_path.as_ref().unwrap().len(), 2);
    }
}
