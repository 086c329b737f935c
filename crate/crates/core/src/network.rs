//! Four-port single-ended networks, their mixed-mode form, and
//! differential two-port blocks that can be cascaded into a link.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type Matrix4 = [[Complex64; 4]; 4];
pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    TooFewPoints(usize),
    NonMonotoneFrequency { index: usize },
    LengthMismatch { freqs: usize, matrices: usize },
    InvalidReference(f64),
    GridMismatch,
    ReferenceMismatch { left: f64, right: f64 },
    SingularTransfer { index: usize },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::TooFewPoints(n) => write!(f, "network needs at least 2 frequencies, got {n}"),
            NetworkError::NonMonotoneFrequency { index } => {
                write!(f, "non-monotone frequency at point {index}")
            }
            NetworkError::LengthMismatch { freqs, matrices } => {
                write!(f, "{freqs} frequencies but {matrices} matrices")
            }
            NetworkError::InvalidReference(z) => write!(f, "reference impedance must be > 0, got {z}"),
            NetworkError::GridMismatch => write!(f, "frequency grids differ"),
            NetworkError::ReferenceMismatch { left, right } => {
                write!(f, "reference impedances differ ({left} vs {right} ohm)")
            }
            NetworkError::SingularTransfer { index } => {
                write!(f, "transfer conversion singular (S21 = 0) at frequency index {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NetworkError {}

fn check_grid(freqs: &[f64]) -> Result<(), NetworkError> {
    if freqs.len() < 2 {
        return Err(NetworkError::TooFewPoints(freqs.len()));
    }
    for i in 1..freqs.len() {
        if !(freqs[i] > freqs[i - 1]) {
            return Err(NetworkError::NonMonotoneFrequency { index: i });
        }
    }
    Ok(())
}

/// Physical (zero-based) port index of each logical terminal.
///
/// Logical convention: P near, P far, N near, N far, so that with the
/// identity map S21 and S43 are the P and N through paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortMap {
    pub p_near: usize,
    pub p_far: usize,
    pub n_near: usize,
    pub n_far: usize,
}

impl Default for PortMap {
    fn default() -> Self {
        PortMap { p_near: 0, p_far: 1, n_near: 2, n_far: 3 }
    }
}

impl PortMap {
    pub fn as_array(&self) -> [usize; 4] {
        [self.p_near, self.p_far, self.n_near, self.n_far]
    }

    /// True when every physical port appears exactly once.
    pub fn is_permutation(&self) -> bool {
        let mut seen = [false; 4];
        for p in self.as_array() {
            if p > 3 || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        true
    }

    /// Map with the P and N conductors exchanged.
    pub fn swapped_pn(&self) -> PortMap {
        PortMap { p_near: self.n_near, p_far: self.n_far, n_near: self.p_near, n_far: self.p_far }
    }
}

/// Single-ended 4-port S-parameters on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    freqs_hz: Vec<f64>,
    s: Vec<Matrix4>,
    z_ref_ohm: f64,
}

impl NetworkData {
    pub fn new(freqs_hz: Vec<f64>, s: Vec<Matrix4>, z_ref_ohm: f64) -> Result<Self, NetworkError> {
        check_grid(&freqs_hz)?;
        if s.len() != freqs_hz.len() {
            return Err(NetworkError::LengthMismatch { freqs: freqs_hz.len(), matrices: s.len() });
        }
        if !(z_ref_ohm > 0.0) || !z_ref_ohm.is_finite() {
            return Err(NetworkError::InvalidReference(z_ref_ohm));
        }
        Ok(NetworkData { freqs_hz, s, z_ref_ohm })
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn matrices(&self) -> &[Matrix4] {
        &self.s
    }

    pub fn z_ref_ohm(&self) -> f64 {
        self.z_ref_ohm
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// `S[to][from]` (zero-based) across the grid.
    pub fn entry(&self, to: usize, from: usize) -> Vec<Complex64> {
        self.s.iter().map(|m| m[to][from]).collect()
    }

    /// P conductor through path, S21.
    pub fn through_p(&self) -> Vec<Complex64> {
        self.entry(1, 0)
    }

    /// N conductor through path, S43.
    pub fn through_n(&self) -> Vec<Complex64> {
        self.entry(3, 2)
    }

    /// Reorder ports so that `map`'s physical ports land on the logical
    /// (P near, P far, N near, N far) positions.
    pub fn remapped(&self, map: &PortMap) -> NetworkData {
        let idx = map.as_array();
        let s = self
            .s
            .iter()
            .map(|m| {
                let mut out = [[ZERO; 4]; 4];
                for (i, &pi) in idx.iter().enumerate() {
                    for (j, &pj) in idx.iter().enumerate() {
                        out[i][j] = m[pi][pj];
                    }
                }
                out
            })
            .collect();
        NetworkData { freqs_hz: self.freqs_hz.clone(), s, z_ref_ohm: self.z_ref_ohm }
    }
}

/// Mixed-mode (differential/common) view of a 4-port.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedModeNetwork {
    pub freqs_hz: Vec<f64>,
    pub sdd: Vec<Matrix2>,
    pub sdc: Vec<Matrix2>,
    pub scd: Vec<Matrix2>,
    pub scc: Vec<Matrix2>,
    pub z_ref_diff_ohm: f64,
    pub z_ref_comm_ohm: f64,
}

impl MixedModeNetwork {
    fn column(blocks: &[Matrix2], to: usize, from: usize) -> Vec<Complex64> {
        blocks.iter().map(|m| m[to][from]).collect()
    }

    pub fn sdd21(&self) -> Vec<Complex64> {
        Self::column(&self.sdd, 1, 0)
    }

    pub fn sdd11(&self) -> Vec<Complex64> {
        Self::column(&self.sdd, 0, 0)
    }

    pub fn scd21(&self) -> Vec<Complex64> {
        Self::column(&self.scd, 1, 0)
    }

    pub fn sdc21(&self) -> Vec<Complex64> {
        Self::column(&self.sdc, 1, 0)
    }

    /// Differential-mode two-port (SDD) as a cascadable block.
    pub fn sdd_block(&self) -> DiffBlock {
        DiffBlock { freqs_hz: self.freqs_hz.clone(), s: self.sdd.clone(), z_ref_ohm: self.z_ref_diff_ohm }
    }
}

/// Mixed-mode transform with differential ports (P near, N near) and
/// (P far, N far). Uses the port convention of `NetworkData`.
pub fn to_mixed_mode(net: &NetworkData) -> MixedModeNetwork {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    // rows: d1, d2, c1, c2 over logical ports (P near, P far, N near, N far)
    let m: [[f64; 4]; 4] = [
        [h, 0.0, -h, 0.0],
        [0.0, h, 0.0, -h],
        [h, 0.0, h, 0.0],
        [0.0, h, 0.0, h],
    ];
    let n = net.len();
    let mut sdd = Vec::with_capacity(n);
    let mut sdc = Vec::with_capacity(n);
    let mut scd = Vec::with_capacity(n);
    let mut scc = Vec::with_capacity(n);
    for s in net.matrices() {
        let mut mm = [[ZERO; 4]; 4];
        for (r, mr) in m.iter().enumerate() {
            for (c, mc) in m.iter().enumerate() {
                let mut acc = ZERO;
                for i in 0..4 {
                    if mr[i] == 0.0 {
                        continue;
                    }
                    for j in 0..4 {
                        if mc[j] != 0.0 {
                            acc += s[i][j] * (mr[i] * mc[j]);
                        }
                    }
                }
                mm[r][c] = acc;
            }
        }
        let block = |r0: usize, c0: usize| [[mm[r0][c0], mm[r0][c0 + 1]], [mm[r0 + 1][c0], mm[r0 + 1][c0 + 1]]];
        sdd.push(block(0, 0));
        sdc.push(block(0, 2));
        scd.push(block(2, 0));
        scc.push(block(2, 2));
    }
    MixedModeNetwork {
        freqs_hz: net.freqs_hz().to_vec(),
        sdd,
        sdc,
        scd,
        scc,
        z_ref_diff_ohm: 2.0 * net.z_ref_ohm(),
        z_ref_comm_ohm: net.z_ref_ohm() / 2.0,
    }
}

/// Two-port S-parameters of one mode (normally differential), suitable for
/// link composition.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffBlock {
    pub freqs_hz: Vec<f64>,
    pub s: Vec<Matrix2>,
    pub z_ref_ohm: f64,
}

impl DiffBlock {
    pub fn new(freqs_hz: Vec<f64>, s: Vec<Matrix2>, z_ref_ohm: f64) -> Result<Self, NetworkError> {
        check_grid(&freqs_hz)?;
        if s.len() != freqs_hz.len() {
            return Err(NetworkError::LengthMismatch { freqs: freqs_hz.len(), matrices: s.len() });
        }
        if !(z_ref_ohm > 0.0) {
            return Err(NetworkError::InvalidReference(z_ref_ohm));
        }
        Ok(DiffBlock { freqs_hz, s, z_ref_ohm })
    }

    /// Ideal through: S21 = S12 = 1, S11 = S22 = 0.
    pub fn through(freqs_hz: &[f64], z_ref_ohm: f64) -> Self {
        DiffBlock {
            freqs_hz: freqs_hz.to_vec(),
            s: freqs_hz.iter().map(|_| [[ZERO, ONE], [ONE, ZERO]]).collect(),
            z_ref_ohm,
        }
    }

    /// Matched ideal delay line.
    pub fn delay(freqs_hz: &[f64], delay_s: f64, z_ref_ohm: f64) -> Self {
        let s = freqs_hz
            .iter()
            .map(|&f| {
                let t = Complex64::from_polar(1.0, -2.0 * core::f64::consts::PI * f * delay_s);
                [[ZERO, t], [t, ZERO]]
            })
            .collect();
        DiffBlock { freqs_hz: freqs_hz.to_vec(), s, z_ref_ohm }
    }

    pub fn s21(&self) -> Vec<Complex64> {
        self.s.iter().map(|m| m[1][0]).collect()
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }
}

/// Transfer (T) matrix with `[b1, a1]ᵀ = T [a2, b2]ᵀ`, so cascading is a
/// plain matrix product.
fn s_to_t(s: &Matrix2) -> Option<Matrix2> {
    let s21 = s[1][0];
    if s21.norm() == 0.0 {
        return None;
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    Some([[-det / s21, s[0][0] / s21], [-s[1][1] / s21, ONE / s21]])
}

fn t_to_s(t: &Matrix2) -> Option<Matrix2> {
    let t22 = t[1][1];
    if t22.norm() == 0.0 {
        return None;
    }
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    Some([[t[0][1] / t22, det / t22], [ONE / t22, -t[1][0] / t22]])
}

fn mul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Series connection `a` then `b` (port 2 of `a` to port 1 of `b`).
pub fn cascade_diff(a: &DiffBlock, b: &DiffBlock) -> Result<DiffBlock, NetworkError> {
    if a.freqs_hz.len() != b.freqs_hz.len()
        || a.freqs_hz.iter().zip(&b.freqs_hz).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0))
    {
        return Err(NetworkError::GridMismatch);
    }
    if (a.z_ref_ohm - b.z_ref_ohm).abs() > 1e-9 * a.z_ref_ohm {
        return Err(NetworkError::ReferenceMismatch { left: a.z_ref_ohm, right: b.z_ref_ohm });
    }
    let mut s = Vec::with_capacity(a.len());
    for (index, (sa, sb)) in a.s.iter().zip(&b.s).enumerate() {
        let ta = s_to_t(sa).ok_or(NetworkError::SingularTransfer { index })?;
        let tb = s_to_t(sb).ok_or(NetworkError::SingularTransfer { index })?;
        s.push(t_to_s(&mul2(&ta, &tb)).ok_or(NetworkError::SingularTransfer { index })?);
    }
    Ok(DiffBlock { freqs_hz: a.freqs_hz.clone(), s, z_ref_ohm: a.z_ref_ohm })
}

/// Cascade a chain of blocks left to right.
pub fn cascade_chain<'a, I>(blocks: I) -> Result<Option<DiffBlock>, NetworkError>
where
    I: IntoIterator<Item = &'a DiffBlock>,
{
    let mut acc: Option<DiffBlock> = None;
    for b in blocks {
        acc = Some(match acc {
            None => b.clone(),
            Some(a) => cascade_diff(&a, b)?,
        });
    }
    Ok(acc)
}

/// ABCD two-port at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Abcd {
    pub fn identity() -> Self {
        Abcd { a: ONE, b: ZERO, c: ZERO, d: ONE }
    }

    pub fn series_impedance(z: Complex64) -> Self {
        Abcd { a: ONE, b: z, c: ZERO, d: ONE }
    }

    pub fn shunt_admittance(y: Complex64) -> Self {
        Abcd { a: ONE, b: ZERO, c: y, d: ONE }
    }

    /// Uniform line of characteristic impedance `zc` and total propagation
    /// `gamma_len = (α + jβ)·ℓ`.
    pub fn line(zc: Complex64, gamma_len: Complex64) -> Self {
        let ch = gamma_len.cosh();
        let sh = gamma_len.sinh();
        Abcd { a: ch, b: zc * sh, c: sh / zc, d: ch }
    }

    pub fn then(&self, next: &Abcd) -> Abcd {
        Abcd {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    /// S-parameters with real reference `z0` at both ports.
    pub fn to_s(&self, z0: f64) -> Matrix2 {
        let b = self.b / z0;
        let c = self.c * z0;
        let den = self.a + b + c + self.d;
        let det = self.a * self.d - self.b * self.c;
        [
            [(self.a + b - c - self.d) / den, det * 2.0 / den],
            [Complex64::new(2.0, 0.0) / den, (-self.a + b - c + self.d) / den],
        ]
    }

    pub fn from_s(s: &Matrix2, z0: f64) -> Option<Abcd> {
        let s21 = s[1][0];
        if s21.norm() == 0.0 {
            return None;
        }
        let (s11, s12, s22) = (s[0][0], s[0][1], s[1][1]);
        let two = s21 * 2.0;
        Some(Abcd {
            a: ((ONE + s11) * (ONE - s22) + s12 * s21) / two,
            b: ((ONE + s11) * (ONE + s22) - s12 * s21) / two * z0,
            c: ((ONE - s11) * (ONE - s22) - s12 * s21) / two / z0,
            d: ((ONE - s11) * (ONE + s22) + s12 * s21) / two,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_grids() {
        let z = [[ZERO; 4]; 4];
        assert_eq!(NetworkData::new(vec![1.0], vec![z], 50.0), Err(NetworkError::TooFewPoints(1)));
        assert_eq!(
            NetworkData::new(vec![2.0, 1.0], vec![z, z], 50.0),
            Err(NetworkError::NonMonotoneFrequency { index: 1 })
        );
        assert!(matches!(NetworkData::new(vec![1.0, 2.0], vec![z], 50.0), Err(NetworkError::LengthMismatch { .. })));
        assert!(matches!(NetworkData::new(vec![1.0, 2.0], vec![z, z], 0.0), Err(NetworkError::InvalidReference(_))));
    }

    #[test]
    fn zero_network_maps_to_zero_blocks() {
        let z = [[ZERO; 4]; 4];
        let net = NetworkData::new(vec![1e9, 2e9], vec![z, z], 50.0).unwrap();
        let mm = to_mixed_mode(&net);
        for b in mm.sdd.iter().chain(&mm.sdc).chain(&mm.scd).chain(&mm.scc) {
            assert!(b.iter().flatten().all(|v| *v == ZERO));
        }
        assert_eq!(mm.z_ref_diff_ohm, 100.0);
        assert_eq!(mm.z_ref_comm_ohm, 25.0);
    }

    #[test]
    fn mixed_mode_matches_closed_form_entries() {
        // arbitrary matrix; check against the explicit half-sum formulas
        let mut s = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                s[i][j] = c(0.1 * (i as f64 + 1.0) - 0.03 * j as f64, 0.02 * (i * j) as f64 - 0.05);
            }
        }
        let net = NetworkData::new(vec![1.0, 2.0], vec![s, s], 50.0).unwrap();
        let mm = to_mixed_mode(&net);
        let sdd21 = (s[1][0] - s[1][2] - s[3][0] + s[3][2]) / 2.0;
        let scd21 = (s[1][0] - s[1][2] + s[3][0] - s[3][2]) / 2.0;
        let sdd11 = (s[0][0] - s[0][2] - s[2][0] + s[2][2]) / 2.0;
        assert!((mm.sdd21()[0] - sdd21).norm() < 1e-15);
        assert!((mm.scd21()[0] - scd21).norm() < 1e-15);
        assert!((mm.sdd11()[0] - sdd11).norm() < 1e-15);
    }

    #[test]
    fn remap_swaps_conductors() {
        let mut s = [[ZERO; 4]; 4];
        s[1][0] = c(0.9, 0.0);
        s[3][2] = c(0.5, 0.0);
        let net = NetworkData::new(vec![1.0, 2.0], vec![s, s], 50.0).unwrap();
        let swapped = net.remapped(&PortMap::default().swapped_pn());
        assert_eq!(swapped.through_p()[0], c(0.5, 0.0));
        assert_eq!(swapped.through_n()[0], c(0.9, 0.0));
        assert!(PortMap::default().is_permutation());
        assert!(!PortMap { p_near: 0, p_far: 0, n_near: 2, n_far: 3 }.is_permutation());
    }

    #[test]
    fn through_is_cascade_identity() {
        let f = vec![1e9, 2e9, 3e9];
        let blk = DiffBlock {
            freqs_hz: f.clone(),
            s: f.iter().map(|&x| [[c(0.1, 0.02 * x / 1e9), c(0.7, -0.3)], [c(0.7, -0.3), c(-0.05, 0.1)]]).collect(),
            z_ref_ohm: 100.0,
        };
        let thru = DiffBlock::through(&f, 100.0);
        let out = cascade_diff(&blk, &thru).unwrap();
        let out2 = cascade_diff(&thru, &blk).unwrap();
        for ((a, b), d) in out.s.iter().zip(&out2.s).zip(&blk.s) {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - d[i][j]).norm() < 1e-14);
                    assert!((b[i][j] - d[i][j]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn delays_add() {
        let f = vec![0.5e9, 1e9, 2e9];
        let out = cascade_diff(&DiffBlock::delay(&f, 100e-12, 100.0), &DiffBlock::delay(&f, 250e-12, 100.0)).unwrap();
        let want = DiffBlock::delay(&f, 350e-12, 100.0);
        for (a, b) in out.s21().iter().zip(want.s21()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn cascade_errors() {
        let f = vec![1e9, 2e9];
        let g = vec![1e9, 3e9];
        assert_eq!(
            cascade_diff(&DiffBlock::through(&f, 100.0), &DiffBlock::through(&g, 100.0)),
            Err(NetworkError::GridMismatch)
        );
        let mut open = DiffBlock::through(&f, 100.0);
        open.s[1] = [[ONE, ZERO], [ZERO, ONE]];
        assert_eq!(
            cascade_diff(&open, &DiffBlock::through(&f, 100.0)),
            Err(NetworkError::SingularTransfer { index: 1 })
        );
        assert!(matches!(
            cascade_diff(&DiffBlock::through(&f, 100.0), &DiffBlock::through(&f, 50.0)),
            Err(NetworkError::ReferenceMismatch { .. })
        ));
    }

    #[test]
    fn abcd_s_roundtrip() {
        let net = Abcd::shunt_admittance(c(0.0, 0.01))
            .then(&Abcd::line(c(60.0, 0.0), c(0.05, 2.3)))
            .then(&Abcd::series_impedance(c(3.0, 0.0)));
        let s = net.to_s(50.0);
        let back = Abcd::from_s(&s, 50.0).unwrap();
        for (x, y) in [(net.a, back.a), (net.b, back.b), (net.c, back.c), (net.d, back.d)] {
            assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
        }
        // reciprocal
        assert!((s[0][1] - s[1][0]).norm() < 1e-14);
    }

    #[test]
    fn matched_line_reflects_nothing() {
        let s = Abcd::line(c(50.0, 0.0), c(0.0, 1.234)).to_s(50.0);
        assert!(s[0][0].norm() < 1e-15);
        assert!((s[1][0] - Complex64::from_polar(1.0, -1.234)).norm() < 1e-14);
    }
}
