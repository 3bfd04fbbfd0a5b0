//! CSV and JSON export, and import of measured frequency responses.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::analysis::NamedLocus;
use crate::error::{Error, Result};
use crate::logderiv::{FreqResponse, LogDerivTrace};
use crate::C64;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns `freq_hz, re, im, channel, domain`, one row per locus sample.
pub fn write_loci_csv(path: &Path, loci: &[NamedLocus]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["freq_hz", "re", "im", "channel", "domain"])?;
    for l in loci {
        let domain = l.domain.to_string();
        for (om, v) in l.locus.omega.iter().zip(&l.locus.values) {
            w.write_record([num(om / (2.0 * PI)), num(v.re), num(v.im), l.channel.clone(), domain.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `freq_hz, re_dl, im_dl, mask`; `mask` is empty for kept samples.
pub fn write_trace_csv(path: &Path, trace: &LogDerivTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["freq_hz", "re_dl", "im_dl", "mask"])?;
    for k in 0..trace.omega.len() {
        let mask = trace.mask[k].clone().unwrap_or_default();
        w.write_record([num(trace.omega[k] / (2.0 * PI)), num(trace.re[k]), num(trace.im[k]), mask])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `freq_hz, re, im, channel`.
pub fn write_response_csv(path: &Path, responses: &[FreqResponse]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["freq_hz", "re", "im", "channel"])?;
    for r in responses {
        for (om, v) in r.omega.iter().zip(&r.values) {
            w.write_record([num(om / (2.0 * PI)), num(v.re), num(v.im), r.channel.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Frequencies in Hz, kept exactly as read, with their channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportedChannel {
    pub channel: String,
    pub freq_hz: Vec<f64>,
    pub values: Vec<C64>,
}

impl ImportedChannel {
    pub fn to_response(&self) -> Result<FreqResponse> {
        FreqResponse::new(self.channel.clone(), self.freq_hz.iter().map(|f| 2.0 * PI * f).collect(), self.values.clone())
    }
}

/// Reads `freq_hz, re, im[, channel]`. Rows without a channel column belong
/// to channel `"1"`. Channels keep their order of first appearance.
pub fn read_response_csv(path: &Path) -> Result<Vec<ImportedChannel>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::Schema(format!("missing column '{name}'")));
    let (cf, cr, ci) = (need("freq_hz")?, need("re")?, need("im")?);
    let cc = col("channel");
    let mut order: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, ImportedChannel> = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |c: usize, name: &str| -> Result<f64> {
            let raw = rec.get(c).ok_or_else(|| Error::Schema(format!("row {line}: column '{name}' is missing")))?;
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("row {line}: column '{name}' has non-numeric value '{raw}'")))?;
            if !v.is_finite() {
                return Err(Error::Schema(format!("row {line}: column '{name}' is not finite")));
            }
            Ok(v)
        };
        let (f, re, im) = (field(cf, "freq_hz")?, field(cr, "re")?, field(ci, "im")?);
        let ch = cc.and_then(|c| rec.get(c)).map(|s| s.trim().to_string()).unwrap_or_else(|| "1".into());
        let entry = data.entry(ch.clone()).or_insert_with(|| {
            order.push(ch.clone());
            ImportedChannel { channel: ch.clone(), freq_hz: Vec::new(), values: Vec::new() }
        });
        if let Some(&last) = entry.freq_hz.last() {
            if f <= last {
                return Err(Error::Schema(format!(
                    "row {line}: column 'freq_hz' must be strictly increasing within channel '{ch}' ({f} after {last})"
                )));
            }
        }
        entry.freq_hz.push(f);
        entry.values.push(C64::new(re, im));
    }
    if order.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    Ok(order.into_iter().map(|c| data.remove(&c).expect("channel recorded")).collect())
}

/// Pretty JSON with the field order of the serialized types.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// File-name-safe version of a channel label.
pub fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "freq_hz,re\n1,2\n").unwrap();
        let e = read_response_csv(&p).unwrap_err();
        assert!(e.to_string().contains("'im'"), "{e}");
    }

    #[test]
    fn bad_value_names_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "freq_hz,re,im\n1,2,x\n").unwrap();
        let e = read_response_csv(&p).unwrap_err();
        assert!(e.to_string().contains("'im'") && e.to_string().contains("row 2"), "{e}");
    }

    #[test]
    fn channels_split() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "freq_hz,re,im,channel\n1,1,0,b\n1,2,0,a\n2,3,0,b\n").unwrap();
        let c = read_response_csv(&p).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].channel, "b");
        assert_eq!(c[0].freq_hz, vec![1.0, 2.0]);
    }
}
