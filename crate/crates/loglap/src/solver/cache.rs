//! On-disk kernel table cache.
//!
//! Little-endian binary layout: magic `LLKT`, version u32, then the
//! parameter tuple (d, h, max_offset, quad_tol, i_self, entry count), then
//! per entry the offset components and the value, all as 64-bit floats.

use super::kernel::KernelTable;
use crate::Result;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"LLKT";
const VERSION: u32 = 1;

pub fn cache_file(dir: &Path, d: u32, h: f64, max_offset: usize, quad_tol: f64) -> PathBuf {
    dir.join(format!(
        "llkt_d{d}_h{:016x}_m{max_offset}_q{:016x}.bin",
        h.to_bits(),
        quad_tol.to_bits()
    ))
}

pub fn store(table: &KernelTable, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = cache_file(dir, table.d, table.h, table.max_offset, table.quad_tol);
    let tmp = path.with_extension("tmp");
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&table.d.to_le_bytes());
    buf.extend_from_slice(&(table.h).to_le_bytes());
    buf.extend_from_slice(&(table.max_offset as u64).to_le_bytes());
    buf.extend_from_slice(&(table.quad_tol).to_le_bytes());
    buf.extend_from_slice(&(table.i_self).to_le_bytes());
    let entries = entry_list(table);
    buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (offset, value) in entries {
        for o in offset {
            buf.extend_from_slice(&o.to_le_bytes());
        }
        buf.extend_from_slice(&value.to_le_bytes());
    }
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

pub fn load(dir: &Path, d: u32, h: f64, max_offset: usize, quad_tol: f64) -> Option<KernelTable> {
    let path = cache_file(dir, d, h, max_offset, quad_tol);
    let mut bytes = Vec::new();
    std::fs::File::open(&path).ok()?.read_to_end(&mut bytes).ok()?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
        let s = bytes.get(*pos..*pos + n)?;
        *pos += n;
        Some(s)
    };
    if take(&mut pos, 4)? != MAGIC {
        return None;
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().ok()?);
    if version != VERSION {
        return None;
    }
    let dd = u32::from_le_bytes(take(&mut pos, 4)?.try_into().ok()?);
    let hh = f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?);
    let mo = u64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?) as usize;
    let qt = f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?);
    let i_self = f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?);
    if dd != d || hh.to_bits() != h.to_bits() || mo != max_offset || qt.to_bits() != quad_tol.to_bits()
    {
        return None;
    }
    let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?) as usize;
    let per = d as usize + 1;
    if bytes.len() - pos != count * per * 8 {
        return None;
    }
    let side = max_offset + 1;
    let mut values = vec![0.0; if d == 1 { side } else { side * side }];
    for _ in 0..count {
        let mut off = [0usize; 2];
        for o in off.iter_mut().take(d as usize) {
            let v = f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?);
            *o = v as usize;
        }
        let value = f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?);
        let idx = if d == 1 {
            off[0]
        } else {
            off[1] * side + off[0]
        };
        values[idx] = value;
    }
    Some(KernelTable {
        d,
        h,
        max_offset,
        quad_tol,
        values,
        i_self,
    })
}

fn entry_list(table: &KernelTable) -> Vec<(Vec<f64>, f64)> {
    let side = table.max_offset + 1;
    let mut out = Vec::new();
    match table.d {
        1 => {
            for a in 1..side {
                out.push((vec![a as f64], table.ghat(&[a as i64])));
            }
        }
        _ => {
            for b in 0..side {
                for a in 0..side {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    out.push((vec![a as f64, b as f64], table.ghat(&[a as i64, b as i64])));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::kernel::build_kernel_table;

    #[test]
    fn round_trip_preserves_table_bits() {
        let dir = std::env::temp_dir().join("loglap_cache_test");
        let _ = std::fs::remove_dir_all(&dir);
        let t = build_kernel_table(2, 1.0 / 12.0, 10, 1e-7).unwrap();
        store(&t, &dir).unwrap();
        let l = load(&dir, 2, 1.0 / 12.0, 10, 1e-7).expect("cache file present");
        assert_eq!(l.i_self.to_bits(), t.i_self.to_bits());
        for b in 0..=10i64 {
            for a in 0..=10i64 {
                if a == 0 && b == 0 {
                    continue;
                }
                assert_eq!(l.ghat(&[a, b]).to_bits(), t.ghat(&[a, b]).to_bits());
            }
        }
        // wrong parameters miss
        assert!(load(&dir, 2, 1.0 / 13.0, 10, 1e-7).is_none());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
