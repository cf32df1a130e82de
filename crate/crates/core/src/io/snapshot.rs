use std::fs;
use std::path::Path;

use crate::boussinesq::SimState;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Named fields on one grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub fields: Vec<(String, Field)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

fn bad(msg: String) -> Error {
    Error::Snapshot(msg)
}

/// `BLAB1 n=<n> period=<p> fields=<a,b> t=<t>\n`, then little-endian `f64`
/// arrays in field order, then the CRC32 of those arrays (little endian).
pub fn write_snapshot(path: impl AsRef<Path>, snap: &Snapshot) -> Result<()> {
    let names: Vec<&str> = snap.fields.iter().map(|(n, _)| n.as_str()).collect();
    if names.is_empty() {
        return Err(bad("no fields to write".into()));
    }
    if let Some(n) = names
        .iter()
        .find(|n| n.is_empty() || n.contains(|c: char| c == ',' || c.is_whitespace()))
    {
        return Err(bad(format!("field name '{n}' is not writable")));
    }
    if snap.fields.iter().any(|(_, f)| f.grid() != &snap.grid) {
        return Err(Error::GridMismatch);
    }
    let header = format!(
        "BLAB1 n={} period={:?} fields={} t={:?}\n",
        snap.grid.n(),
        snap.grid.period(),
        names.join(","),
        snap.t
    );
    let mut payload = Vec::with_capacity(names.len() * snap.grid.len() * 8);
    for (_, f) in &snap.fields {
        for v in f.values() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut bytes = header.into_bytes();
    bytes.extend_from_slice(&payload);
    bytes.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some("BLAB1") {
        return Err(bad("missing BLAB1 magic".into()));
    }
    let mut field = |key: &str| -> Result<&str> {
        let part = parts.next().ok_or_else(|| bad(format!("header lacks '{key}='")))?;
        part.strip_prefix(key)
            .and_then(|s| s.strip_prefix('='))
            .ok_or_else(|| bad(format!("expected '{key}=' in header, found '{part}'")))
    };
    let n: usize = field("n")?.parse().map_err(|_| bad("bad n in header".into()))?;
    let period: f64 = field("period")?.parse().map_err(|_| bad("bad period in header".into()))?;
    let names: Vec<String> = field("fields")?.split(',').map(str::to_string).collect();
    let t: f64 = field("t")?.parse().map_err(|_| bad("bad t in header".into()))?;
    if parts.next().is_some() {
        return Err(bad("trailing tokens in header".into()));
    }
    if names.iter().any(String::is_empty) {
        return Err(bad("empty field name in header".into()));
    }
    let grid = Grid::new(n, period)?;

    let body = &bytes[end + 1..];
    let expected = names.len() * grid.len() * 8 + 4;
    if body.len() < expected {
        return Err(bad(format!(
            "truncated payload: expected {expected} bytes after the header, got {}",
            body.len()
        )));
    }
    if body.len() > expected {
        return Err(bad(format!(
            "payload of {} bytes does not match header (n = {n}, {} fields: {expected} bytes)",
            body.len(),
            names.len()
        )));
    }
    let (payload, crc) = body.split_at(expected - 4);
    let stored = u32::from_le_bytes(crc.try_into().expect("four bytes"));
    let actual = crc32fast::hash(payload);
    if stored != actual {
        return Err(bad(format!("checksum mismatch: stored {stored:08x}, computed {actual:08x}")));
    }
    let fields = names
        .into_iter()
        .zip(payload.chunks_exact(grid.len() * 8))
        .map(|(name, chunk)| {
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("eight bytes")))
                .collect();
            Ok((name, Field::new(grid, values)?))
        })
        .collect::<Result<_>>()?;
    Ok(Snapshot { grid, t, fields })
}

/// Writes `omega` and `theta`.
pub fn write_state(path: impl AsRef<Path>, state: &SimState) -> Result<()> {
    write_snapshot(
        path,
        &Snapshot {
            grid: *state.grid(),
            t: state.t,
            fields: vec![
                ("omega".into(), state.omega.clone()),
                ("theta".into(), state.theta.clone()),
            ],
        },
    )
}

pub fn read_state(path: impl AsRef<Path>) -> Result<SimState> {
    let snap = read_snapshot(path)?;
    let get = |name: &str| {
        snap.field(name)
            .cloned()
            .ok_or_else(|| bad(format!("snapshot has no '{name}' field")))
    };
    SimState::new(get("omega")?, get("theta")?, snap.t)
}
