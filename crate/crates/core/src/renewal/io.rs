//! Table persistence: a compact little-endian binary image and a CSV export
//! with columns `k,u,v,fstar,Fbar_star`. Both carry `beta`, `N`, `qF2` and
//! its error bound in a header.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::renewal::law::RenewalLaw;
use crate::renewal::tables::RenewalTables;

const MAGIC: &[u8; 8] = b"DSRTAB01";

pub fn write_binary<W: Write>(tables: &RenewalTables, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(MAGIC)?;
    out.write_all(&tables.beta().to_le_bytes())?;
    out.write_all(&(tables.horizon() as u64).to_le_bytes())?;
    out.write_all(&tables.qf2().to_le_bytes())?;
    out.write_all(&tables.qf2_error().to_le_bytes())?;
    for col in [tables.u(), tables.fstar()] {
        for x in col {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(input: R) -> Result<RenewalTables> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a renewal table file".into()));
    }
    let beta = read_f64(&mut r)?;
    let mut nb = [0u8; 8];
    r.read_exact(&mut nb)?;
    let n = u64::from_le_bytes(nb) as usize;
    let qf2 = read_f64(&mut r)?;
    let _err = read_f64(&mut r)?;
    let read_col = |r: &mut BufReader<R>| -> Result<Vec<f64>> { (0..=n).map(|_| read_f64(r)).collect() };
    let u = read_col(&mut r)?;
    let fstar = read_col(&mut r)?;
    finish(beta, qf2, u, fstar)
}

fn finish(beta: f64, qf2: f64, u: Vec<f64>, fstar: Vec<f64>) -> Result<RenewalTables> {
    let law = RenewalLaw::new(beta).map_err(|e| Error::Format(e.to_string()))?;
    let tables = RenewalTables::from_columns(&law, u, fstar)?;
    if (tables.qf2() - qf2).abs() > 1e-12 * qf2 {
        return Err(Error::Format(format!("header qF2 {qf2} disagrees with columns ({})", tables.qf2())));
    }
    Ok(tables)
}

pub fn write_csv<W: Write>(tables: &RenewalTables, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# beta={}", tables.beta())?;
    writeln!(out, "# N={}", tables.horizon())?;
    writeln!(out, "# qF2={}", tables.qf2())?;
    writeln!(out, "# qF2_error={}", tables.qf2_error())?;
    writeln!(out, "k,u,v,fstar,Fbar_star")?;
    for k in 0..=tables.horizon() {
        writeln!(
            out,
            "{},{},{},{},{}",
            k,
            tables.u()[k],
            tables.v()[k],
            tables.fstar()[k],
            tables.fbar_star()[k]
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<RenewalTables> {
    let reader = BufReader::new(input);
    let (mut beta, mut qf2) = (None, None);
    let (mut u, mut fstar) = (Vec::new(), Vec::new());
    let bad = |line: &str| Error::Format(format!("malformed table line: {line}"));
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((key, value)) = meta.trim().split_once('=') {
                let parsed: f64 = value.trim().parse().map_err(|_| bad(line))?;
                match key.trim() {
                    "beta" => beta = Some(parsed),
                    "qF2" => qf2 = Some(parsed),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with('k') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(line));
        }
        let k: usize = cols[0].parse().map_err(|_| bad(line))?;
        if k != u.len() {
            return Err(Error::Format(format!("row {k} out of order")));
        }
        u.push(cols[1].parse().map_err(|_| bad(line))?);
        fstar.push(cols[3].parse().map_err(|_| bad(line))?);
    }
    let beta = beta.ok_or_else(|| Error::Format("missing beta header".into()))?;
    let qf2 = qf2.ok_or_else(|| Error::Format("missing qF2 header".into()))?;
    finish(beta, qf2, u, fstar)
}

/// Cache file name keyed by `(beta, N)`.
pub fn cache_file_name(beta: f64, horizon: usize) -> String {
    format!("renewal-tables-{:016x}-{horizon}.bin", beta.to_bits())
}

/// Loads cached tables from `dir` or builds and stores them.
pub fn load_or_build(dir: &Path, law: &RenewalLaw, horizon: usize) -> Result<RenewalTables> {
    let path = dir.join(cache_file_name(law.beta(), horizon));
    if let Ok(file) = std::fs::File::open(&path) {
        match read_binary(file) {
            Ok(t) if t.horizon() == horizon && t.beta() == law.beta() => return Ok(t),
            Ok(_) => log::warn!("cache entry {} does not match its key; rebuilding", path.display()),
            Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
        }
    }
    let tables = RenewalTables::build(law, horizon)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    write_binary(&tables, std::fs::File::create(&tmp)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(tables)
}
