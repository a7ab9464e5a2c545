//! Causal and classical flags for every vertex code of a scenario, kept as
//! bitsets in memory and optionally on disk under `ANTINOMY_CACHE_DIR`.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::antinomy::DcClassifier;
use crate::causality::{chunk_ranges, CausalChecker, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::hull::decode_code;
use crate::pools::{is_bell_table, VertexPool};
use crate::scenario::Scenario;

const MAGIC: &[u8; 8] = b"CKFLAGS1";
/// Environment variable naming the on-disk cache directory.
pub const CACHE_ENV: &str = "ANTINOMY_CACHE_DIR";

/// One bit per vertex code for each predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexFlags {
    pub scenario: Scenario,
    pub count: u64,
    causal: Vec<u64>,
    classical: Vec<u64>,
}

fn bit(words: &[u64], code: u64) -> bool {
    words[(code >> 6) as usize] >> (code & 63) & 1 == 1
}

impl VertexFlags {
    pub fn compute(s: &Scenario, cap: u128) -> Result<VertexFlags> {
        let count = s.vertex_count().unwrap_or(u128::MAX);
        if count > cap || count > u64::MAX as u128 {
            return Err(Error::CapExceeded { what: "vertex count", count, cap });
        }
        let count = count as u64;
        let radix = s.num_outcomes() as u64;
        let cols = s.num_settings();
        let parts: Vec<Result<(Vec<u64>, Vec<u64>)>> = chunk_ranges(count)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut causal_check = CausalChecker::new();
                let mut dc = DcClassifier::new();
                let words = (hi - lo).div_ceil(64) as usize;
                let (mut causal, mut classical) = (vec![0u64; words], vec![0u64; words]);
                let mut f = vec![0u32; cols];
                for code in lo..hi {
                    decode_code(code, radix, &mut f);
                    let j = (code - lo) as usize;
                    if causal_check.is_causal_table(s, &f) {
                        causal[j >> 6] |= 1 << (j & 63);
                    }
                    if dc.is_classical_table(s, &f)? {
                        classical[j >> 6] |= 1 << (j & 63);
                    }
                }
                Ok((causal, classical))
            })
            .collect();
        let mut causal = Vec::with_capacity(count.div_ceil(64) as usize);
        let mut classical = Vec::with_capacity(causal.capacity());
        for part in parts {
            let (c, d) = part?;
            causal.extend(c);
            classical.extend(d);
        }
        Ok(VertexFlags { scenario: s.clone(), count, causal, classical })
    }

    pub fn is_causal(&self, code: u64) -> bool {
        bit(&self.causal, code)
    }

    pub fn is_classical(&self, code: u64) -> bool {
        bit(&self.classical, code)
    }

    pub fn contains(&self, pool: VertexPool, code: u64) -> bool {
        match pool {
            VertexPool::All => true,
            VertexPool::Bell => {
                let mut f = vec![0u32; self.scenario.num_settings()];
                decode_code(code, self.scenario.num_outcomes() as u64, &mut f);
                is_bell_table(&self.scenario, &f)
            }
            VertexPool::Causal => self.is_causal(code),
            VertexPool::Classical => self.is_classical(code),
        }
    }

    pub fn causal_count(&self) -> u64 {
        self.causal.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn classical_count(&self) -> u64 {
        self.classical.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn write_to(&self, path: &PathBuf) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let mut out = fs::File::create(&tmp)?;
        let mut buf = Vec::with_capacity(16 + 16 * self.causal.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&self.count.to_le_bytes());
        for w in self.causal.iter().chain(&self.classical) {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        out.write_all(&buf)?;
        out.sync_all()?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    fn read_from(s: &Scenario, path: &PathBuf) -> Option<VertexFlags> {
        let mut bytes = Vec::new();
        fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
        let count = s.vertex_count()? as u64;
        let words = count.div_ceil(64) as usize;
        if bytes.len() != 16 + 16 * words || &bytes[..8] != MAGIC {
            return None;
        }
        if u64::from_le_bytes(bytes[8..16].try_into().ok()?) != count {
            return None;
        }
        let all: Vec<u64> = bytes[16..].chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let (causal, classical) = all.split_at(words);
        Some(VertexFlags { scenario: s.clone(), count, causal: causal.to_vec(), classical: classical.to_vec() })
    }
}

fn cache() -> &'static Mutex<HashMap<String, Arc<VertexFlags>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<VertexFlags>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn disk_path(s: &Scenario) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let settings: Vec<String> = s.settings().iter().map(usize::to_string).collect();
    let outcomes: Vec<String> = s.outcomes().iter().map(usize::to_string).collect();
    Some(PathBuf::from(dir).join(format!("flags-m{}-d{}.bin", settings.join("_"), outcomes.join("_"))))
}

/// Flags for `s`, computed once per process and persisted when the cache
/// directory is set.
pub fn vertex_flags(s: &Scenario) -> Result<Arc<VertexFlags>> {
    let key = format!("{:?}/{:?}", s.settings(), s.outcomes());
    if let Some(f) = cache().lock().expect("flag cache").get(&key) {
        return Ok(f.clone());
    }
    let path = disk_path(s);
    let flags = match path.as_ref().and_then(|p| VertexFlags::read_from(s, p)) {
        Some(f) => f,
        None => {
            let f = VertexFlags::compute(s, DEFAULT_VERTEX_CAP)?;
            if let Some(p) = &path {
                if let Some(dir) = p.parent() {
                    fs::create_dir_all(dir)?;
                }
                f.write_to(p)?;
            }
            f
        }
    };
    let flags = Arc::new(flags);
    cache().lock().expect("flag cache").insert(key, flags.clone());
    Ok(flags)
}
