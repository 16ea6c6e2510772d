//! Binary cache for Green's-function sets, keyed by a hash of the
//! couplings, the discretization and the scheme version.
//!
//! File layout (little-endian):
//! - magic `RGF1`, scheme version (u32)
//! - n_z, n_eps (u64 each)
//! - the ten coupling fields as f64 in declaration order
//!   (c, c_prime, r, s, kappa, w, k_omega_disp, k_s_disp, k_a_disp, k_b)
//! - six matrices row-major, each entry as (re: f64, im: f64):
//!   G_SS, G_AS, G_BS, G_SB, G_AB, G_BB
//!
//! Round-trips are bit-exact, so cached and freshly built sets produce
//! identical downstream output.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::greens::{Discretization, GreensSet, SCHEME_VERSION};
use crate::params::Couplings;

const MAGIC: &[u8; 4] = b"RGF1";

fn coupling_fields(c: &Couplings) -> [f64; 10] {
    [
        c.c,
        c.c_prime,
        c.r,
        c.s,
        c.kappa,
        c.w,
        c.k_omega_disp,
        c.k_s_disp,
        c.k_a_disp,
        c.k_b,
    ]
}

/// Hex cache key for a (couplings, discretization) pair.
pub fn cache_key(couplings: &Couplings, disc: Discretization) -> String {
    let mut hasher = Sha256::new();
    hasher.update(MAGIC);
    hasher.update(SCHEME_VERSION.to_le_bytes());
    hasher.update((disc.n_z as u64).to_le_bytes());
    hasher.update((disc.n_eps as u64).to_le_bytes());
    for v in coupling_fields(couplings) {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, couplings: &Couplings, disc: Discretization) -> PathBuf {
    dir.join(format!("greens-{}.bin", cache_key(couplings, disc)))
}

fn write_matrix<W: Write>(w: &mut W, m: &Array2<C64>) -> Result<()> {
    for v in m.iter() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Array2<C64>> {
    let mut buf = vec![0u8; rows * cols * 16];
    r.read_exact(&mut buf)?;
    let mut m = Array2::zeros((rows, cols));
    for (idx, chunk) in buf.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        m[[idx / cols, idx % cols]] = C64::new(re, im);
    }
    Ok(m)
}

/// Serialize a Green's set to its cache file under `dir`.
pub fn store(dir: &Path, set: &GreensSet) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = cache_path(dir, &set.couplings, set.disc);
    let tmp = path.with_extension("tmp");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&SCHEME_VERSION.to_le_bytes())?;
        w.write_all(&(set.disc.n_z as u64).to_le_bytes())?;
        w.write_all(&(set.disc.n_eps as u64).to_le_bytes())?;
        for v in coupling_fields(&set.couplings) {
            w.write_all(&v.to_le_bytes())?;
        }
        for m in [&set.g_ss, &set.g_as, &set.g_bs, &set.g_sb, &set.g_ab, &set.g_bb] {
            write_matrix(&mut w, m)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Load a cached set when present and well-formed; `Ok(None)` on a miss.
pub fn load(dir: &Path, couplings: &Couplings, disc: Discretization) -> Result<Option<GreensSet>> {
    let path = cache_path(dir, couplings, disc);
    if !path.exists() {
        return Ok(None);
    }
    let mut r = std::io::BufReader::new(std::fs::File::open(&path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if &magic != MAGIC || u32::from_le_bytes(ver) != SCHEME_VERSION {
        return Err(Error::Parse(format!("cache file {} has a foreign header", path.display())));
    }
    let mut u = [0u8; 8];
    r.read_exact(&mut u)?;
    let n_z = u64::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let n_eps = u64::from_le_bytes(u) as usize;
    if n_z != disc.n_z || n_eps != disc.n_eps {
        return Err(Error::Parse(format!("cache file {} grid mismatch", path.display())));
    }
    let mut fields = [0.0f64; 10];
    for f in fields.iter_mut() {
        r.read_exact(&mut u)?;
        *f = f64::from_le_bytes(u);
    }
    let expected = coupling_fields(couplings);
    if fields != expected {
        return Err(Error::Parse(format!(
            "cache file {} holds different couplings (hash collision?)",
            path.display()
        )));
    }
    let (n, m) = (n_z, n_eps);
    let set = GreensSet {
        g_ss: read_matrix(&mut r, m, m)?,
        g_as: read_matrix(&mut r, m, m)?,
        g_bs: read_matrix(&mut r, m, n)?,
        g_sb: read_matrix(&mut r, n, m)?,
        g_ab: read_matrix(&mut r, n, m)?,
        g_bb: read_matrix(&mut r, n, n)?,
        couplings: couplings.clone(),
        disc,
    };
    Ok(Some(set))
}

/// Build through the cache: load on a hit, else build and store.
pub fn build_cached(
    dir: Option<&Path>,
    couplings: &Couplings,
    disc: Discretization,
) -> Result<GreensSet> {
    if let Some(dir) = dir {
        if let Some(set) = load(dir, couplings, disc)? {
            return Ok(set);
        }
        let set = crate::greens::build_greens(couplings, disc)?;
        store(dir, &set)?;
        return Ok(set);
    }
    crate::greens::build_greens(couplings, disc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::build_greens;
    use crate::params::{derive_couplings, MemoryParams};

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
        let disc = Discretization::square(16).unwrap();
        let set = build_greens(&cpl, disc).unwrap();
        store(dir.path(), &set).unwrap();
        let loaded = load(dir.path(), &cpl, disc).unwrap().expect("cache hit");
        assert_eq!(set.g_ss, loaded.g_ss);
        assert_eq!(set.g_as, loaded.g_as);
        assert_eq!(set.g_bs, loaded.g_bs);
        assert_eq!(set.g_sb, loaded.g_sb);
        assert_eq!(set.g_ab, loaded.g_ab);
        assert_eq!(set.g_bb, loaded.g_bb);
    }

    #[test]
    fn key_separates_parameters_and_grids() {
        let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
        let mut other = cpl.clone();
        other.c_prime += 1e-12;
        let d16 = Discretization::square(16).unwrap();
        let d32 = Discretization::square(32).unwrap();
        assert_ne!(cache_key(&cpl, d16), cache_key(&other, d16));
        assert_ne!(cache_key(&cpl, d16), cache_key(&cpl, d32));
    }

    #[test]
    fn miss_on_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
        let disc = Discretization::square(8).unwrap();
        assert!(load(dir.path(), &cpl, disc).unwrap().is_none());
    }
}
