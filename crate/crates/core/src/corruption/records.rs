use std::path::Path;

use crate::error::{Error, Result};

/// Which noise source, where in it, and at what gain.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseUse {
    pub noise_id: String,
    /// Slice start in the source, or onset in the output for sources shorter
    /// than the utterance.
    pub offset: usize,
    pub gain: f64,
}

/// Provenance of one noisy utterance, shared by every parallel set built
/// from it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixRecord {
    pub utterance_id: String,
    pub env: Option<NoiseUse>,
    pub imp: Option<NoiseUse>,
    pub snr_db: f64,
    pub rescale: f64,
}

pub const MIX_RECORD_HEADER: [&str; 9] = [
    "utterance_id",
    "env_id",
    "env_offset",
    "imp_id",
    "imp_offset",
    "snr_db",
    "env_gain",
    "imp_gain",
    "rescale",
];

pub fn write_mix_records(records: &[MixRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MIX_RECORD_HEADER)?;
    for r in records {
        let part = |u: &Option<NoiseUse>| match u {
            Some(u) => (u.noise_id.clone(), u.offset.to_string(), u.gain.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let (env_id, env_off, env_gain) = part(&r.env);
        let (imp_id, imp_off, imp_gain) = part(&r.imp);
        w.write_record([
            r.utterance_id.clone(),
            env_id,
            env_off,
            imp_id,
            imp_off,
            r.snr_db.to_string(),
            env_gain,
            imp_gain,
            r.rescale.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_mix_records(path: impl AsRef<Path>) -> Result<Vec<MixRecord>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    if rdr.headers()?.iter().ne(MIX_RECORD_HEADER) {
        return Err(Error::Malformed("mix record header mismatch".into()));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Malformed(format!("bad {what} {s:?}")))
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let part = |id: &str, off: &str, gain: &str| -> Result<Option<NoiseUse>> {
            if id.is_empty() {
                return Ok(None);
            }
            Ok(Some(NoiseUse {
                noise_id: id.to_string(),
                offset: off
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad offset {off:?}")))?,
                gain: num(gain, "gain")?,
            }))
        };
        out.push(MixRecord {
            utterance_id: rec[0].to_string(),
            env: part(&rec[1], &rec[2], &rec[6])?,
            imp: part(&rec[3], &rec[4], &rec[7])?,
            snr_db: num(&rec[5], "snr_db")?,
            rescale: num(&rec[8], "rescale")?,
        });
    }
    Ok(out)
}
