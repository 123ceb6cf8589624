//! Float formatting shared by every file the toolkit writes.

use serde::ser::SerializeSeq;
use serde::Serializer;
use serde_json::value::RawValue;

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn serialize_f17_slice<S: Serializer>(data: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(data.len()))?;
    for &v in data {
        let raw = RawValue::from_string(f17(v)).map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

pub fn serialize_f17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(f17(*v)).map_err(serde::ser::Error::custom)?;
    serde::Serialize::serialize(&raw, s)
}

pub fn serialize_f17_map<S: Serializer>(
    map: &std::collections::BTreeMap<String, f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut out = s.serialize_map(Some(map.len()))?;
    for (k, &v) in map {
        let raw = RawValue::from_string(f17(v)).map_err(serde::ser::Error::custom)?;
        out.serialize_entry(k, &raw)?;
    }
    out.end()
}
