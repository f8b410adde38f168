use crate::{Observation, Outcome};
use serde::Serialize;
use std::io::{BufWriter, Write};
use std::path::Path;

/// One newline-delimited JSON record of an executed environment step.
#[derive(Debug, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub action: Vec<f64>,
    pub reward_ext: f64,
    pub outcome: Outcome,
    pub state: serde_json::Value,
}

/// Newline-delimited JSON episode trace writer.
pub struct TraceWriter {
    out: BufWriter<std::fs::File>,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self {
            out: BufWriter::new(std::fs::File::create(path)?),
        })
    }

    pub fn write(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        let line = serde_json::to_string(record).expect("trace records serialize");
        writeln!(self.out, "{line}")
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Dumps an [H, W, 3] observation as a binary PPM (P6) image.
pub fn write_ppm(obs: &Observation, path: impl AsRef<Path>) -> std::io::Result<()> {
    assert_eq!(obs.shape.len(), 3, "expected [H, W, C] observation");
    assert_eq!(obs.shape[2], 3, "PPM requires 3 channels");
    let (h, w) = (obs.shape[0], obs.shape[1]);
    let mut buf = Vec::with_capacity(32 + h * w * 3);
    buf.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
    for v in &obs.data {
        buf.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    std::fs::write(path, buf)
}
