//! Fourier frequencies, DFT, matrix periodogram and the Whittle likelihood.

mod whittle;

pub use whittle::{
    WhittleEvaluator, whittle_group_loglik, whittle_loglik, whittle_loglik_halved, whittle_term,
};

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::ingest::MultiSeries;

/// Minimum series length accepted by the spectral machinery.
pub const MIN_T: usize = 8;

/// The set of Fourier frequencies for a series of length T, together with
/// the subset retained by the likelihood.
///
/// The full grid has indices k = -ceil(T/2)+1, ..., floor(T/2) (exactly T
/// of them). The retained subset drops k = 0 always and k = T/2 when T is
/// even; retained indices are stored sorted ascending, so the first half
/// is the mirror image of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    t_len: usize,
    retained: Vec<i64>,
}

impl FourierGrid {
    pub fn new(t_len: usize) -> Result<Self> {
        if t_len < MIN_T {
            return Err(Error::InputTooShort { t: t_len, min: MIN_T });
        }
        let t = t_len as i64;
        let lo = -(t_len as i64 + 1) / 2 + 1; // -ceil(T/2)+1
        let hi = t / 2;
        let mut retained = Vec::with_capacity(t_len);
        for k in lo..=hi {
            if k == 0 {
                continue;
            }
            if t_len % 2 == 0 && k == t / 2 {
                continue;
            }
            retained.push(k);
        }
        Ok(FourierGrid { t_len, retained })
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Indices of the full grid, ascending.
    pub fn full_indices(&self) -> Vec<i64> {
        let t = self.t_len as i64;
        let lo = -(self.t_len as i64 + 1) / 2 + 1;
        (lo..=t / 2).collect()
    }

    /// Retained indices, ascending.
    pub fn retained_indices(&self) -> &[i64] {
        &self.retained
    }

    /// Number of retained frequencies n.
    pub fn n_retained(&self) -> usize {
        self.retained.len()
    }

    /// omega_k = 2 pi k / T in radians per sample.
    pub fn omega(&self, k: i64) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.t_len as f64
    }
}

/// Full-grid DFT of a multivariate series.
#[derive(Debug, Clone)]
pub struct DftResult {
    pub t_len: usize,
    pub r: usize,
    /// Grid indices, ascending (same layout as [`FourierGrid::full_indices`]).
    pub ks: Vec<i64>,
    /// Row-major: `values[f * r + j]` is J_j(omega_{ks[f]}).
    values: Vec<C64>,
}

impl DftResult {
    pub fn value(&self, freq: usize, series: usize) -> C64 {
        self.values[freq * self.r + series]
    }

    pub fn jvec(&self, freq: usize) -> &[C64] {
        &self.values[freq * self.r..(freq + 1) * self.r]
    }
}

/// DFT J(omega_k) = sum_t x_t exp(-i omega_k t) over the full Fourier grid,
/// computed per column with an FFT in O(r T log T).
pub fn dft(series: &MultiSeries) -> Result<DftResult> {
    if series.has_missing() {
        return Err(Error::MissingValues);
    }
    let t_len = series.t_len();
    if t_len < MIN_T {
        return Err(Error::InputTooShort { t: t_len, min: MIN_T });
    }
    let r = series.r();
    let grid = FourierGrid::new(t_len)?;
    let ks = grid.full_indices();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(t_len);
    let mut values = vec![C64::new(0.0, 0.0); t_len * r];
    let mut buf = vec![C64::new(0.0, 0.0); t_len];
    for j in 0..r {
        for t in 0..t_len {
            buf[t] = C64::new(series.get(t, j), 0.0);
        }
        fft.process(&mut buf);
        // buf[m] = J(2 pi m / T) for m = 0..T-1; negative k wraps to m = k + T
        for (f, &k) in ks.iter().enumerate() {
            let m = k.rem_euclid(t_len as i64) as usize;
            values[f * r + j] = buf[m];
        }
    }
    Ok(DftResult { t_len, r, ks, values })
}

/// Matrix periodogram at the retained Fourier frequencies.
///
/// Each ordinate is the Hermitian rank-one matrix
/// I(omega) = (2 pi T)^-1 J(omega) J(omega)^H. The DFT vectors are kept
/// alongside the ordinates; likelihood evaluation uses them directly.
#[derive(Debug, Clone)]
pub struct PeriodogramSet {
    grid: FourierGrid,
    r: usize,
    dt: f64,
    /// n x r DFT values at retained frequencies.
    jvals: Vec<C64>,
    /// n x r^2 ordinates, row-major matrices.
    ords: Vec<C64>,
    /// exp(-i omega) per retained frequency, cached for the likelihood loop.
    zs: Vec<C64>,
    omegas: Vec<f64>,
    data_hash: u64,
}

impl PeriodogramSet {
    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn t_len(&self) -> usize {
        self.grid.t_len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n(&self) -> usize {
        self.grid.n_retained()
    }

    pub fn omega(&self, idx: usize) -> f64 {
        self.omegas[idx]
    }

    pub(crate) fn z(&self, idx: usize) -> C64 {
        self.zs[idx]
    }

    pub fn jvec(&self, idx: usize) -> &[C64] {
        &self.jvals[idx * self.r..(idx + 1) * self.r]
    }

    /// The r x r ordinate matrix at retained frequency `idx`, row-major.
    pub fn ordinate(&self, idx: usize) -> &[C64] {
        let rr = self.r * self.r;
        &self.ords[idx * rr..(idx + 1) * rr]
    }

    /// Hash of the originating data, used to key cache files.
    pub fn data_hash(&self) -> u64 {
        self.data_hash
    }

    /// Index range of the strictly positive retained frequencies.
    /// Retained indices are symmetric about zero, so this is the upper half.
    pub fn positive_range(&self) -> std::ops::Range<usize> {
        self.n() / 2..self.n()
    }

    fn from_parts(grid: FourierGrid, r: usize, dt: f64, jvals: Vec<C64>, data_hash: u64) -> Self {
        let n = grid.n_retained();
        let t_len = grid.t_len() as f64;
        let scale = 1.0 / (2.0 * std::f64::consts::PI * t_len);
        let mut ords = vec![C64::new(0.0, 0.0); n * r * r];
        let mut zs = Vec::with_capacity(n);
        let mut omegas = Vec::with_capacity(n);
        for (idx, &k) in grid.retained_indices().iter().enumerate() {
            let omega = grid.omega(k);
            omegas.push(omega);
            zs.push(C64::new(0.0, -omega).exp());
            let jv = &jvals[idx * r..(idx + 1) * r];
            for a in 0..r {
                for b in 0..r {
                    ords[idx * r * r + a * r + b] = jv[a] * jv[b].conj() * scale;
                }
            }
        }
        PeriodogramSet { grid, r, dt, jvals, ords, zs, omegas, data_hash }
    }
}

/// Computes the periodogram of a demeaned, gap-free series.
pub fn periodogram(series: &MultiSeries) -> Result<PeriodogramSet> {
    if !series.is_demeaned() {
        return Err(Error::NotDemeaned);
    }
    let d = dft(series)?;
    let grid = FourierGrid::new(series.t_len())?;
    let r = series.r();
    let mut jvals = vec![C64::new(0.0, 0.0); grid.n_retained() * r];
    // map retained ks to full-grid rows
    let ks = &d.ks;
    for (idx, &k) in grid.retained_indices().iter().enumerate() {
        let row = ks.iter().position(|&kk| kk == k).expect("retained index in full grid");
        jvals[idx * r..(idx + 1) * r].copy_from_slice(d.jvec(row));
    }
    let hash = hash_series(series);
    Ok(PeriodogramSet::from_parts(grid, r, series.dt(), jvals, hash))
}

fn hash_series(series: &MultiSeries) -> u64 {
    let mut h = fnv1a_init();
    h = fnv1a_u64(h, series.t_len() as u64);
    h = fnv1a_u64(h, series.r() as u64);
    for v in series.values() {
        h = fnv1a_u64(h, v.to_bits());
    }
    h
}

fn fnv1a_init() -> u64 {
    0xcbf2_9ce4_8422_2325
}

fn fnv1a_u64(mut h: u64, x: u64) -> u64 {
    for byte in x.to_le_bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

const CACHE_MAGIC: u32 = 0x5350_474d; // "SPGM"
const CACHE_VERSION: u32 = 1;

impl PeriodogramSet {
    /// Writes a binary cache keyed by (data hash, T) so repeated runs can
    /// skip the FFT.
    pub fn write_cache<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        w.write_all(&CACHE_MAGIC.to_le_bytes())?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.t_len() as u64).to_le_bytes())?;
        w.write_all(&(self.r as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&self.data_hash.to_le_bytes())?;
        for v in &self.jvals {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a cache written by [`PeriodogramSet::write_cache`]. When
    /// `expected_hash` is given, a mismatch is an error (stale cache).
    pub fn read_cache<P: AsRef<Path>>(path: P, expected_hash: Option<u64>) -> Result<Self> {
        let mut rdr = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        rdr.read_exact(&mut u32buf)?;
        if u32::from_le_bytes(u32buf) != CACHE_MAGIC {
            return Err(Error::Data("not a periodogram cache file".into()));
        }
        rdr.read_exact(&mut u32buf)?;
        if u32::from_le_bytes(u32buf) != CACHE_VERSION {
            return Err(Error::Data("unsupported periodogram cache version".into()));
        }
        rdr.read_exact(&mut u64buf)?;
        let t_len = u64::from_le_bytes(u64buf) as usize;
        rdr.read_exact(&mut u64buf)?;
        let r = u64::from_le_bytes(u64buf) as usize;
        rdr.read_exact(&mut u64buf)?;
        let dt = f64::from_le_bytes(u64buf);
        rdr.read_exact(&mut u64buf)?;
        let data_hash = u64::from_le_bytes(u64buf);
        if let Some(h) = expected_hash
            && h != data_hash
        {
            return Err(Error::Data("periodogram cache does not match the data".into()));
        }
        let grid = FourierGrid::new(t_len)?;
        let n = grid.n_retained();
        let mut jvals = Vec::with_capacity(n * r);
        for _ in 0..n * r {
            rdr.read_exact(&mut u64buf)?;
            let re = f64::from_le_bytes(u64buf);
            rdr.read_exact(&mut u64buf)?;
            let im = f64::from_le_bytes(u64buf);
            jvals.push(C64::new(re, im));
        }
        Ok(PeriodogramSet::from_parts(grid, r, dt, jvals, data_hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(T^2) DFT used as the oracle for the FFT path.
    fn naive_dft(series: &MultiSeries, k: i64) -> Vec<C64> {
        let t_len = series.t_len();
        let omega = 2.0 * std::f64::consts::PI * k as f64 / t_len as f64;
        let mut out = vec![C64::new(0.0, 0.0); series.r()];
        for t in 0..t_len {
            let w = C64::new(0.0, -omega * t as f64).exp();
            for j in 0..series.r() {
                out[j] += series.get(t, j) * w;
            }
        }
        out
    }

    fn random_series(t_len: usize, r: usize, seed: u64) -> MultiSeries {
        use rand::RngExt;
        let mut rng = crate::rng::stream_rng(seed, crate::rng::Stream::Simulation);
        let vals: Vec<f64> = (0..t_len * r).map(|_| rng.random::<f64>() - 0.5).collect();
        MultiSeries::from_values(vals, t_len, r).unwrap()
    }

    #[test]
    fn grid_layout_matches_definition() {
        let g = FourierGrid::new(10).unwrap();
        assert_eq!(g.full_indices(), (-4..=5).collect::<Vec<_>>());
        assert_eq!(g.retained_indices(), &[-4, -3, -2, -1, 1, 2, 3, 4]);
        assert_eq!(g.n_retained(), 8);

        let g = FourierGrid::new(9).unwrap();
        assert_eq!(g.full_indices().len(), 9);
        assert_eq!(g.retained_indices(), &[-4, -3, -2, -1, 1, 2, 3, 4]);

        assert!(FourierGrid::new(7).is_err());
    }

    #[test]
    fn dft_matches_naive_oracle() {
        let s = random_series(64, 3, 11);
        let d = dft(&s).unwrap();
        for (f, &k) in d.ks.iter().enumerate() {
            let oracle = naive_dft(&s, k);
            for j in 0..3 {
                let err = (d.value(f, j) - oracle[j]).norm();
                let scale = oracle[j].norm().max(1.0);
                assert!(err / scale < 1e-8, "k={} j={} err={}", k, j, err);
            }
        }
    }

    #[test]
    fn dft_of_demeaned_vanishes_at_zero() {
        let s = random_series(100, 2, 3).demean().unwrap();
        let d = dft(&s).unwrap();
        let zero_row = d.ks.iter().position(|&k| k == 0).unwrap();
        let sd = 0.3; // rough scale of U(-0.5, 0.5)
        for j in 0..2 {
            assert!(d.value(zero_row, j).norm() < 1e-8 * 100.0 * sd);
        }
    }

    #[test]
    fn dft_of_cosine_concentrates() {
        let t_len = 128usize;
        let omega1 = 2.0 * std::f64::consts::PI / t_len as f64;
        let vals: Vec<f64> = (0..t_len).map(|t| (omega1 * t as f64).cos()).collect();
        let s = MultiSeries::from_values(vals, t_len, 1).unwrap();
        let d = dft(&s).unwrap();
        let row = d.ks.iter().position(|&k| k == 1).unwrap();
        assert!((d.value(row, 0).norm() - t_len as f64 / 2.0).abs() < 1e-6 * t_len as f64);
    }

    #[test]
    fn dft_conjugate_symmetry() {
        let s = random_series(96, 2, 17);
        let d = dft(&s).unwrap();
        for &k in &[1i64, 5, 20, 47] {
            let pos = d.ks.iter().position(|&kk| kk == k).unwrap();
            let neg = d.ks.iter().position(|&kk| kk == -k).unwrap();
            for j in 0..2 {
                assert!((d.value(neg, j) - d.value(pos, j).conj()).norm() < 1e-10 * 96.0);
            }
        }
    }

    #[test]
    fn periodogram_requires_demeaned() {
        let s = random_series(64, 1, 5);
        assert!(matches!(periodogram(&s), Err(Error::NotDemeaned)));
    }

    #[test]
    fn periodogram_of_constant_is_zero() {
        let s = MultiSeries::from_values(vec![3.5; 32], 32, 1).unwrap().demean().unwrap();
        let p = periodogram(&s).unwrap();
        for idx in 0..p.n() {
            assert!(p.ordinate(idx)[0].norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_on_full_grid() {
        // (2 pi / T) * sum over the FULL grid of diag I equals the biased
        // sample variance of each column.
        let s = random_series(200, 2, 23).demean().unwrap();
        let d = dft(&s).unwrap();
        let t_len = s.t_len() as f64;
        for j in 0..2 {
            let mut lhs = 0.0;
            for f in 0..d.ks.len() {
                let i_jj = d.value(f, j).norm_sqr() / (2.0 * std::f64::consts::PI * t_len);
                lhs += i_jj;
            }
            lhs *= 2.0 * std::f64::consts::PI / t_len;
            let rhs = s.column(j).iter().map(|x| x * x).sum::<f64>() / t_len;
            assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1e-12));
        }
    }

    #[test]
    fn duplicated_column_gives_rank_one_coherent_ordinates() {
        let base = random_series(64, 1, 31);
        let mut vals = Vec::with_capacity(64 * 2);
        for t in 0..64 {
            vals.push(base.get(t, 0));
            vals.push(base.get(t, 0));
        }
        let s = MultiSeries::from_values(vals, 64, 2).unwrap().demean().unwrap();
        let p = periodogram(&s).unwrap();
        for idx in 0..p.n() {
            let m = p.ordinate(idx);
            let lhs = m[1].norm_sqr();
            let rhs = m[0].re * m[3].re;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-30));
        }
    }

    #[test]
    fn ordinates_are_hermitian_and_conjugate_symmetric() {
        let s = random_series(48, 3, 41).demean().unwrap();
        let p = periodogram(&s).unwrap();
        let n = p.n();
        let scale: f64 = (0..n).map(|i| p.ordinate(i)[0].norm()).fold(0.0, f64::max);
        for idx in 0..n {
            let m = p.ordinate(idx);
            for a in 0..3 {
                for b in 0..3 {
                    // Hermitian
                    assert!((m[a * 3 + b] - m[b * 3 + a].conj()).norm() <= 1e-10 * scale);
                    // conjugate symmetry against the mirrored frequency
                    let mirror = n - 1 - idx;
                    let mm = p.ordinate(mirror);
                    assert!((mm[a * 3 + b] - m[a * 3 + b].conj()).norm() <= 1e-10 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn cache_roundtrip_preserves_everything() {
        let s = random_series(64, 2, 53).demean().unwrap();
        let p = periodogram(&s).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        p.write_cache(f.path()).unwrap();
        let q = PeriodogramSet::read_cache(f.path(), Some(p.data_hash())).unwrap();
        assert_eq!(p.n(), q.n());
        assert_eq!(p.r(), q.r());
        for i in 0..p.n() {
            assert_eq!(p.jvec(i), q.jvec(i));
            assert_eq!(p.ordinate(i), q.ordinate(i));
        }
        // wrong hash is rejected
        assert!(PeriodogramSet::read_cache(f.path(), Some(p.data_hash() ^ 1)).is_err());
    }
}
