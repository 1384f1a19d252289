//! Jones and Stokes vectors, Sinclair and Kennaugh matrices, and the sixteen
//! Huynen/Germond target parameters.
//!
//! Stokes vectors follow `g = (|Eh|²+|Ev|², |Eh|²-|Ev|², 2 Re{Eh* Ev}, 2 Im{Eh* Ev})`.
//! The Kennaugh map is defined by that convention: for every Jones vector `E`
//! the un-normalized Stokes vector of `S·E` equals `K·g(E)`.

use std::fmt;

use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::Channel;
use crate::error::{Error, Result};
use crate::imaging::{ClipMeta, ImageClip};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub e_h: Complex64,
    pub e_v: Complex64,
}

impl JonesVector {
    pub fn new(e_h: Complex64, e_v: Complex64) -> Self {
        Self { e_h, e_v }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.e_h.norm_sqr() + self.e_v.norm_sqr()
    }

    /// Stokes numerators, linear in the wave's coherency.
    pub fn stokes_unnormalized(&self) -> [f64; 4] {
        let cross = self.e_h.conj() * self.e_v;
        [
            self.e_h.norm_sqr() + self.e_v.norm_sqr(),
            self.e_h.norm_sqr() - self.e_v.norm_sqr(),
            2.0 * cross.re,
            2.0 * cross.im,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

/// Normalized Stokes vector (`g0 = 1`).
pub fn stokes_of(e: &JonesVector) -> Result<StokesVector> {
    let power = e.norm_sqr();
    if power == 0.0 {
        return Err(Error::ZeroField);
    }
    let [g0, g1, g2, g3] = e.stokes_unnormalized().map(|v| v / power);
    Ok(StokesVector { g0, g1, g2, g3 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinclairMatrix {
    pub hh: Complex64,
    pub hv: Complex64,
    pub vh: Complex64,
    pub vv: Complex64,
}

impl SinclairMatrix {
    pub const fn new(hh: Complex64, hv: Complex64, vh: Complex64, vv: Complex64) -> Self {
        Self { hh, hv, vh, vv }
    }

    fn real(hh: f64, hv: f64, vh: f64, vv: f64) -> Self {
        Self::new(hh.into(), hv.into(), vh.into(), vv.into())
    }

    pub fn zero() -> Self {
        Self::real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    /// Odd-bounce response.
    pub fn trihedral() -> Self {
        Self::identity()
    }

    /// Even-bounce response, `diag(1, -1)`.
    pub fn dihedral() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    /// Rank-1 thin wire oriented `angle_deg` from horizontal.
    pub fn dipole(angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self::real(c * c, c * s, c * s, s * s)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.hh, self.hv, self.vh, self.vv]
    }

    pub fn get(&self, channel: Channel) -> Complex64 {
        match channel {
            Channel::HH => self.hh,
            Channel::HV => self.hv,
            Channel::VH => self.vh,
            Channel::VV => self.vv,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.hh, self.vh, self.hv, self.vv)
    }

    pub fn symmetric_part(&self) -> Self {
        let off = (self.hv + self.vh) * 0.5;
        Self::new(self.hh, off, off, self.vv)
    }

    pub fn apply(&self, e: &JonesVector) -> JonesVector {
        JonesVector::new(
            self.hh * e.e_h + self.hv * e.e_v,
            self.vh * e.e_h + self.vv * e.e_v,
        )
    }
}

/// Real 4×4 matrix taking incident Stokes vectors to scattered ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KennaughMatrix {
    pub k: [[f64; 4]; 4],
}

impl KennaughMatrix {
    pub fn zero() -> Self {
        Self { k: [[0.0; 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut k = [[0.0; 4]; 4];
        for (i, row) in k.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { k }
    }

    pub fn apply(&self, g: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(&self.k) {
            *o = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut k = [[0.0; 4]; 4];
        for (i, row) in k.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.k[j][i];
            }
        }
        Self { k }
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }
}

/// Kennaugh matrix fixed by the Stokes contract `g(S·E) = K·g(E)`.
///
/// Solved column-wise from the responses to H, V, 45° linear and circular
/// `(1, j)` probes, whose Stokes vectors are `(1,±1,0,0)`, `(2,0,2,0)` and
/// `(2,0,0,2)`.
pub fn kennaugh_from_sinclair(s: &SinclairMatrix) -> KennaughMatrix {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let probe = |e_h, e_v| s.apply(&JonesVector::new(e_h, e_v)).stokes_unnormalized();
    let g_h = probe(one, zero);
    let g_v = probe(zero, one);
    let g_45 = probe(one, one);
    let g_rc = probe(one, Complex64::new(0.0, 1.0));

    let mut k = [[0.0; 4]; 4];
    for r in 0..4 {
        let c0 = 0.5 * (g_h[r] + g_v[r]);
        k[r][0] = c0;
        k[r][1] = 0.5 * (g_h[r] - g_v[r]);
        k[r][2] = 0.5 * g_45[r] - c0;
        k[r][3] = 0.5 * g_rc[r] - c0;
    }
    KennaughMatrix { k }
}

/// Kennaugh matrix in backscatter alignment: the forward map with the
/// circular row negated, `diag(1,1,1,-1)·K`. Reciprocal scatterers give a
/// symmetric matrix in this form.
pub fn kennaugh_backscatter(s: &SinclairMatrix) -> KennaughMatrix {
    let mut k = kennaugh_from_sinclair(s);
    for v in k.k[3].iter_mut() {
        *v = -*v;
    }
    k
}

/// Polarimetric coordinate convention used when turning pixels into features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// [`kennaugh_from_sinclair`] as is.
    Forward,
    /// [`kennaugh_backscatter`].
    #[default]
    Backscatter,
}

impl Alignment {
    pub fn kennaugh(self, s: &SinclairMatrix) -> KennaughMatrix {
        match self {
            Alignment::Forward => kennaugh_from_sinclair(s),
            Alignment::Backscatter => kennaugh_backscatter(s),
        }
    }
}

/// The sixteen parameters, in their fixed feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parameter {
    A0,
    B0,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    A,
    I,
    J,
    K,
    L,
    M,
    N,
}

impl Parameter {
    pub const ALL: [Parameter; 16] = [
        Parameter::A0,
        Parameter::B0,
        Parameter::B,
        Parameter::C,
        Parameter::D,
        Parameter::E,
        Parameter::F,
        Parameter::G,
        Parameter::H,
        Parameter::A,
        Parameter::I,
        Parameter::J,
        Parameter::K,
        Parameter::L,
        Parameter::M,
        Parameter::N,
    ];

    /// The seven parameters that vanish for a symmetric Kennaugh matrix
    /// (A aside, see [`params_from_kennaugh`]).
    pub const BISTATIC: [Parameter; 7] = [
        Parameter::A,
        Parameter::I,
        Parameter::J,
        Parameter::K,
        Parameter::L,
        Parameter::M,
        Parameter::N,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn first(count: usize) -> Vec<Parameter> {
        Self::ALL[..count.min(16)].to_vec()
    }

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 16] = [
            "A0", "B0", "B", "C", "D", "E", "F", "G", "H", "A", "I", "J", "K", "L", "M", "N",
        ];
        NAMES[self.index()]
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HuynenGermondParams {
    pub a0: f64,
    pub b0: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub a: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
}

impl HuynenGermondParams {
    pub fn to_array(&self) -> [f64; 16] {
        [
            self.a0, self.b0, self.b, self.c, self.d, self.e, self.f, self.g, self.h, self.a,
            self.i, self.j, self.k, self.l, self.m, self.n,
        ]
    }

    pub fn from_array(v: [f64; 16]) -> Self {
        let [a0, b0, b, c, d, e, f, g, h, a, i, j, k, l, m, n] = v;
        Self {
            a0,
            b0,
            b,
            c,
            d,
            e,
            f,
            g,
            h,
            a,
            i,
            j,
            k,
            l,
            m,
            n,
        }
    }

    pub fn get(&self, p: Parameter) -> f64 {
        self.to_array()[p.index()]
    }
}

/// Assembles the Kennaugh matrix from the parameter layout
///
/// ```text
/// | A0+B0+A   C+I       H+N       F+L      |
/// | C-I       A0+B-A    E+K       G+M      |
/// | H-N       E-K       A0-B-A    D+J      |
/// | F-L       G-M       D-J       B0-A0-A  |
/// ```
pub fn kennaugh_from_params(p: &HuynenGermondParams) -> KennaughMatrix {
    KennaughMatrix {
        k: [
            [p.a0 + p.b0 + p.a, p.c + p.i, p.h + p.n, p.f + p.l],
            [p.c - p.i, p.a0 + p.b - p.a, p.e + p.k, p.g + p.m],
            [p.h - p.n, p.e - p.k, p.a0 - p.b - p.a, p.d + p.j],
            [p.f - p.l, p.g - p.m, p.d - p.j, p.b0 - p.a0 - p.a],
        ],
    }
}

/// Inverts [`kennaugh_from_params`] in closed form. Off-diagonal pairs give
/// half-sums and half-differences. The diagonal gives A0, B0, B and A.
///
/// Under [`Alignment::Forward`] the identity matrix maps to
/// `A0 = 0.5, B0 = 1, A = -0.5`, so A is not a pure asymmetry indicator there.
pub fn params_from_kennaugh(km: &KennaughMatrix) -> HuynenGermondParams {
    let k = &km.k;
    let half_sum = |a: f64, b: f64| 0.5 * (a + b);
    let half_diff = |a: f64, b: f64| 0.5 * (a - b);
    HuynenGermondParams {
        a0: 0.25 * (k[0][0] + k[1][1] + k[2][2] - k[3][3]),
        b0: half_sum(k[0][0], k[3][3]),
        b: half_diff(k[1][1], k[2][2]),
        c: half_sum(k[0][1], k[1][0]),
        d: half_sum(k[2][3], k[3][2]),
        e: half_sum(k[1][2], k[2][1]),
        f: half_sum(k[0][3], k[3][0]),
        g: half_sum(k[1][3], k[3][1]),
        h: half_sum(k[0][2], k[2][0]),
        a: 0.25 * (k[0][0] - k[1][1] - k[2][2] - k[3][3]),
        i: half_diff(k[0][1], k[1][0]),
        j: half_diff(k[2][3], k[3][2]),
        k: half_diff(k[1][2], k[2][1]),
        l: half_diff(k[0][3], k[3][0]),
        m: half_diff(k[1][3], k[3][1]),
        n: half_diff(k[0][2], k[2][0]),
    }
}

/// Per-pixel parameter images: `values[[row, col, p]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCube {
    pub values: Array3<f64>,
    pub meta: ClipMeta,
    pub selected: Vec<Parameter>,
}

impl FeatureCube {
    pub fn new(values: Array3<f64>, meta: ClipMeta, selected: Vec<Parameter>) -> Result<Self> {
        if values.dim().2 != selected.len() {
            return Err(Error::ShapeMismatch(format!(
                "cube has {} planes but {} selected parameters",
                values.dim().2,
                selected.len()
            )));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "selected parameters must be strictly increasing in canonical order".into(),
            ));
        }
        Ok(Self {
            values,
            meta,
            selected,
        })
    }

    pub fn size(&self) -> usize {
        self.values.dim().0
    }

    pub fn parameter_count(&self) -> usize {
        self.selected.len()
    }

    /// Restricts the cube to `subset`, which must be drawn from `selected`.
    pub fn select(&self, subset: &[Parameter]) -> Result<FeatureCube> {
        let mut planes = Vec::with_capacity(subset.len());
        for p in subset {
            let idx = self.selected.iter().position(|q| q == p).ok_or_else(|| {
                Error::ShapeMismatch(format!("parameter {p} not present in cube"))
            })?;
            planes.push(idx);
        }
        let n = self.size();
        let values = Array3::from_shape_fn((n, n, planes.len()), |(r, c, q)| {
            self.values[[r, c, planes[q]]]
        });
        FeatureCube::new(values, self.meta.clone(), subset.to_vec())
    }
}

/// Builds a per-pixel Sinclair matrix from four co-registered channel
/// clips and extracts the selected parameters at every pixel.
pub fn feature_cube_from_clips(
    hh: &ImageClip,
    hv: &ImageClip,
    vh: &ImageClip,
    vv: &ImageClip,
    selected: &[Parameter],
    alignment: Alignment,
) -> Result<FeatureCube> {
    let n = hh.size();
    for (clip, ch) in [(hh, Channel::HH), (hv, Channel::HV), (vh, Channel::VH), (vv, Channel::VV)] {
        if clip.size() != n {
            return Err(Error::ShapeMismatch(format!(
                "{ch} clip is {0}x{0}, HH clip is {n}x{n}",
                clip.size()
            )));
        }
        if !clip.meta.same_geometry(&hh.meta) {
            return Err(Error::ShapeMismatch(format!(
                "{ch} clip metadata differs from HH"
            )));
        }
        if clip.meta.channel != Some(ch) {
            return Err(Error::ShapeMismatch(format!(
                "clip passed as {ch} is tagged {:?}",
                clip.meta.channel
            )));
        }
    }
    let mut picked = selected.to_vec();
    picked.sort();
    picked.dedup();
    let p = picked.len();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut out = Vec::with_capacity(n * p);
            for c in 0..n {
                let s = SinclairMatrix::new(
                    hh.pixels[[r, c]],
                    hv.pixels[[r, c]],
                    vh.pixels[[r, c]],
                    vv.pixels[[r, c]],
                );
                let params = params_from_kennaugh(&alignment.kennaugh(&s)).to_array();
                out.extend(picked.iter().map(|q| params[q.index()]));
            }
            out
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = Array3::from_shape_vec((n, n, p), flat).expect("cube shape");
    let mut meta = hh.meta.clone();
    meta.channel = None;
    FeatureCube::new(values, meta, picked)
}
