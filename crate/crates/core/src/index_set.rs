//! Finite index sets `T ⊂ R^n` and their geometric profiles.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{self, abs, binomial, log, pow, sqrt};

/// Largest cardinality any set may declare.
pub const MAX_CARDINALITY: usize = 1 << 22;
/// Largest dimension any set may declare.
pub const MAX_DIM: usize = 1 << 20;
/// Largest set for which all pairwise distances are enumerated.
pub const MAX_PAIRWISE: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisMode {
    /// `{e_1, …, e_n}`
    Canonical,
    /// `{±e_1, …, ±e_n}`, ordered `+e_1, −e_1, +e_2, …`
    Signed,
    /// `{−θ e_1, …, −θ e_n}`
    NegativeScaled(f64),
}

/// The sign patterns `A ⊂ {−1,1}^n` of a diagonal cube.
#[derive(Debug, Clone, PartialEq)]
pub enum SignSubset {
    /// Explicit sign vectors; the count must be a power of two.
    Explicit(Vec<Vec<i8>>),
    /// The first `2^k` sign vectors in lexicographic order, with `+1` ordered
    /// before `−1` and the first coordinate most significant. The first `n − k`
    /// coordinates are therefore `+1` and the last `k` run through all patterns.
    FirstLexicographic { k: u32 },
}

/// How a set was built. Informational: operations dispatch on the internal
/// representation, not on this.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    Explicit,
    Basis { n: usize, mode: BasisMode },
    DiagonalCube { d: Vec<f64>, cardinality: usize },
    SpinQuadratic { spins: usize, normalized: bool },
    SpinTensor { spins: usize, order: usize, normalized: bool },
    Scaled { factor: f64, base: Box<Descriptor> },
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Row-major `cardinality × dim`.
    Dense(Vec<f64>),
    /// `scale · e_i` (and `−scale · e_i` when signed).
    Basis { signed: bool, scale: f64 },
    Spin(SpinLayout),
}

/// Coordinates `scale · ∏_{j} σ_{τ_j}` over increasing index tuples `τ`.
#[derive(Debug, Clone, PartialEq)]
struct SpinLayout {
    spins: usize,
    order: usize,
    scale: f64,
    /// Flattened `dim × order` tuple table, lexicographic.
    tuples: Vec<u16>,
    /// For each spin, the coordinates whose tuple contains it.
    by_spin: Vec<Vec<u32>>,
}

/// A finite index set.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    descriptor: Descriptor,
    dim: usize,
    cardinality: usize,
    repr: Repr,
}

/// Radii, column norms and phase-transition thresholds of an index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricProfile {
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub rinf: f64,
    /// `(Σ_i max_t |t_i|^3)^{1/3}`
    pub col3: f64,
    /// `(Σ_i max_t |t_i|^4)^{1/4}`
    pub col4: f64,
    /// `(R_4 / R_∞)^4`, zero when `R_∞ = 0`.
    pub u1: f64,
    /// `(R_2 / R_∞)^2`, zero when `R_∞ = 0`.
    pub u2: f64,
    pub log_card: f64,
    pub dim: usize,
    pub cardinality: usize,
}

impl GeometricProfile {
    /// Build a profile from radii directly. Column norms default to the radii
    /// times `dim^{1/p}`, which is only meaningful for synthetic profiles.
    pub fn from_radii(r2: f64, r4: f64, rinf: f64, log_card: f64) -> Self {
        let (u1, u2) = thresholds(r2, r4, rinf);
        Self {
            r2,
            r3: sqrt(r2 * r4),
            r4,
            rinf,
            col3: r4,
            col4: r4,
            u1,
            u2,
            log_card,
            dim: 0,
            cardinality: 0,
        }
    }

    /// `R_∞ √u ≤ R_2`: the regime in which the `√(R_2 R_∞)` bound beats the
    /// trivial sub-gaussian one.
    pub fn subgaussian_regime(&self, u: f64) -> bool {
        self.rinf * sqrt(u) <= self.r2
    }

    /// `R_4 u^{1/4} ≤ R_2` and `R_∞ u^{1/2} ≤ R_2`.
    pub fn bounded_regime(&self, u: f64) -> bool {
        self.r4 * pow(u, 0.25) <= self.r2 && self.rinf * sqrt(u) <= self.r2
    }
}

fn thresholds(r2: f64, r4: f64, rinf: f64) -> (f64, f64) {
    if rinf > 0.0 {
        let a = r4 / rinf;
        let b = r2 / rinf;
        (a * a * a * a, b * b)
    } else {
        (0.0, 0.0)
    }
}

fn check_caps(dim: usize, cardinality: u128) -> Result<()> {
    if dim == 0 {
        return Err(invalid("dim", "must be positive"));
    }
    if dim > MAX_DIM {
        return Err(Error::CapExceeded {
            what: "dim",
            value: dim as u128,
            cap: MAX_DIM as u128,
        });
    }
    if cardinality > MAX_CARDINALITY as u128 {
        return Err(Error::CapExceeded {
            what: "cardinality",
            value: cardinality,
            cap: MAX_CARDINALITY as u128,
        });
    }
    Ok(())
}

impl IndexSet {
    /// An explicit set. Duplicates are kept and counted in `|T|`.
    pub fn explicit<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet)?.as_ref();
        let dim = first.len();
        check_caps(dim, points.len() as u128)?;
        let mut flat = Vec::with_capacity(dim * points.len());
        for (index, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::RaggedPoint {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            flat.extend_from_slice(p);
        }
        Ok(Self {
            descriptor: Descriptor::Explicit,
            dim,
            cardinality: points.len(),
            repr: Repr::Dense(flat),
        })
    }

    pub fn basis(n: usize, mode: BasisMode) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let (signed, scale, card) = match mode {
            BasisMode::Canonical => (false, 1.0, n),
            BasisMode::Signed => (true, 1.0, 2 * n),
            BasisMode::NegativeScaled(theta) => {
                if !(theta > 0.0) || !theta.is_finite() {
                    return Err(invalid("theta", "must be positive and finite"));
                }
                (false, -theta, n)
            }
        };
        check_caps(n, card as u128)?;
        Ok(Self {
            descriptor: Descriptor::Basis { n, mode },
            dim: n,
            cardinality: card,
            repr: Repr::Basis { signed, scale },
        })
    }

    /// `T_d = {D a : a ∈ A}` for a strictly decreasing positive `d`.
    pub fn diagonal_cube(d: &[f64], signs: &SignSubset) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(invalid("d", "must be nonempty"));
        }
        if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("d", "entries must be positive and finite"));
        }
        if d.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(invalid("d", "must be strictly decreasing"));
        }
        let patterns: Vec<Vec<i8>> = match signs {
            SignSubset::Explicit(a) => {
                if a.is_empty() || !a.len().is_power_of_two() {
                    return Err(invalid("A", "cardinality must be a power of two"));
                }
                for (index, s) in a.iter().enumerate() {
                    if s.len() != n {
                        return Err(Error::RaggedPoint {
                            index,
                            expected: n,
                            found: s.len(),
                        });
                    }
                    if s.iter().any(|&v| v != 1 && v != -1) {
                        return Err(invalid("A", "sign vectors must have entries ±1"));
                    }
                }
                a.clone()
            }
            SignSubset::FirstLexicographic { k } => {
                let k = *k as usize;
                if k > n {
                    return Err(invalid("k", "must not exceed n"));
                }
                check_caps(n, 1u128 << k)?;
                (0..1usize << k)
                    .map(|idx| {
                        (0..n)
                            .map(|i| {
                                // last k coordinates carry the counter, most significant first
                                if i < n - k {
                                    1
                                } else {
                                    let bit = n - 1 - i;
                                    if (idx >> bit) & 1 == 1 {
                                        -1
                                    } else {
                                        1
                                    }
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        check_caps(n, patterns.len() as u128)?;
        let mut flat = Vec::with_capacity(n * patterns.len());
        for a in &patterns {
            flat.extend(a.iter().zip(d).map(|(&s, &di)| s as f64 * di));
        }
        Ok(Self {
            descriptor: Descriptor::DiagonalCube {
                d: d.to_vec(),
                cardinality: patterns.len(),
            },
            dim: n,
            cardinality: patterns.len(),
            repr: Repr::Dense(flat),
        })
    }

    /// `{(σ_iσ_j)_{i<j} : σ ∈ {−1,1}^N}`, divided by `N^{3/2}` when normalized.
    pub fn spin_quadratic(spins: usize, normalized: bool) -> Result<Self> {
        if spins < 2 {
            return Err(invalid("N", "must be at least 2"));
        }
        let scale = if normalized {
            1.0 / pow(spins as f64, 1.5)
        } else {
            1.0
        };
        let mut set = Self::spin(spins, 2, scale)?;
        set.descriptor = Descriptor::SpinQuadratic { spins, normalized };
        Ok(set)
    }

    /// Order-`m` spin tensor set, divided by `binom(N,m)^{1/2} N^{1/2}` when
    /// normalized. Accepts `2 ≤ m ≤ N − 1`.
    pub fn spin_tensor(spins: usize, order: usize, normalized: bool) -> Result<Self> {
        if order < 2 || order + 1 > spins {
            return Err(invalid("m", "need 2 ≤ m ≤ N − 1"));
        }
        let dim = binomial(spins as u64, order as u64);
        let scale = if normalized {
            1.0 / (sqrt(dim as f64) * sqrt(spins as f64))
        } else {
            1.0
        };
        let mut set = Self::spin(spins, order, scale)?;
        set.descriptor = Descriptor::SpinTensor {
            spins,
            order,
            normalized,
        };
        Ok(set)
    }

    fn spin(spins: usize, order: usize, scale: f64) -> Result<Self> {
        if spins > 22 {
            return Err(Error::CapExceeded {
                what: "cardinality",
                value: 1u128 << spins.min(127),
                cap: MAX_CARDINALITY as u128,
            });
        }
        let dim = binomial(spins as u64, order as u64);
        if dim > MAX_DIM as u128 {
            return Err(Error::CapExceeded {
                what: "dim",
                value: dim,
                cap: MAX_DIM as u128,
            });
        }
        let dim = dim as usize;
        check_caps(dim, 1u128 << spins)?;
        let mut tuples = Vec::with_capacity(dim * order);
        let mut by_spin = vec![Vec::new(); spins];
        let mut current: Vec<usize> = (0..order).collect();
        let mut coord = 0u32;
        loop {
            for &s in &current {
                tuples.push(s as u16);
                by_spin[s].push(coord);
            }
            coord += 1;
            // advance to the next increasing tuple
            let mut pos = order;
            while pos > 0 && current[pos - 1] == spins - order + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            current[pos - 1] += 1;
            for j in pos..order {
                current[j] = current[j - 1] + 1;
            }
        }
        debug_assert_eq!(coord as usize, dim);
        Ok(Self {
            descriptor: Descriptor::Explicit,
            dim,
            cardinality: 1 << spins,
            repr: Repr::Spin(SpinLayout {
                spins,
                order,
                scale,
                tuples,
                by_spin,
            }),
        })
    }

    /// `cT` for `c > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(invalid("factor", "must be positive and finite"));
        }
        let repr = match &self.repr {
            Repr::Dense(p) => Repr::Dense(p.iter().map(|v| v * factor).collect()),
            Repr::Basis { signed, scale } => Repr::Basis {
                signed: *signed,
                scale: scale * factor,
            },
            Repr::Spin(layout) => {
                let mut layout = layout.clone();
                layout.scale *= factor;
                Repr::Spin(layout)
            }
        };
        Ok(Self {
            descriptor: Descriptor::Scaled {
                factor,
                base: Box::new(self.descriptor.clone()),
            },
            dim: self.dim,
            cardinality: self.cardinality,
            repr,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn log_cardinality(&self) -> f64 {
        log(self.cardinality as f64)
    }

    /// Write point `k` into `out` (length `dim`).
    pub fn point_into(&self, k: usize, out: &mut [f64]) {
        assert!(k < self.cardinality && out.len() == self.dim);
        match &self.repr {
            Repr::Dense(p) => out.copy_from_slice(&p[k * self.dim..(k + 1) * self.dim]),
            Repr::Basis { signed, scale } => {
                out.fill(0.0);
                if *signed {
                    out[k / 2] = if k % 2 == 0 { *scale } else { -*scale };
                } else {
                    out[k] = *scale;
                }
            }
            Repr::Spin(layout) => layout.point_into(k, out),
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.point_into(k, &mut out);
        out
    }

    /// Visit every point in enumeration order.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        match &self.repr {
            Repr::Dense(p) => {
                for (k, row) in p.chunks_exact(self.dim).enumerate() {
                    f(k, row);
                }
            }
            _ => {
                let mut buf = vec![0.0; self.dim];
                for k in 0..self.cardinality {
                    self.point_into(k, &mut buf);
                    f(k, &buf);
                }
            }
        }
    }

    /// All points, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * self.cardinality);
        self.for_each_point(|_, p| out.extend_from_slice(p));
        out
    }

    /// `⟨x, t⟩` for every `t`, in enumeration order.
    pub fn inner_products(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        match &self.repr {
            Repr::Basis { signed, scale } => {
                let mut out = Vec::with_capacity(self.cardinality);
                for &xi in x {
                    out.push(scale * xi);
                    if *signed {
                        out.push(-scale * xi);
                    }
                }
                out
            }
            _ => {
                let mut out = Vec::with_capacity(self.cardinality);
                self.for_each_point(|_, p| out.push(math::dot(x, p)));
                out
            }
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `max_t ⟨x, t⟩`. Spin sets use a Gray-code walk over configurations, so
    /// the value can differ from the direct inner product in the last few ulps.
    pub fn sup_inner(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.repr {
            Repr::Dense(p) => p
                .chunks_exact(self.dim)
                .map(|row| math::dot(x, row))
                .fold(f64::NEG_INFINITY, f64::max),
            Repr::Basis { signed, scale } => {
                if *signed {
                    abs(*scale) * x.iter().fold(0.0f64, |m, v| m.max(abs(*v)))
                } else if *scale >= 0.0 {
                    scale * x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    scale * x.iter().copied().fold(f64::INFINITY, f64::min)
                }
            }
            Repr::Spin(layout) => {
                let (lo, hi) = layout.extremes_unscaled(x);
                if layout.scale >= 0.0 {
                    layout.scale * hi
                } else {
                    layout.scale * lo
                }
            }
        }
    }

    /// Radii, column norms, thresholds. Structured sets use closed forms (every
    /// point of a basis or spin set has the same coordinate moduli pattern).
    pub fn profile(&self) -> GeometricProfile {
        let n = self.dim as f64;
        let (r2, r3, r4, rinf, col3, col4) = match &self.repr {
            Repr::Basis { scale, .. } => {
                let a = abs(*scale);
                (a, a, a, a, a * pow(n, 1.0 / 3.0), a * pow(n, 0.25))
            }
            Repr::Spin(layout) => {
                let a = abs(layout.scale);
                (
                    a * sqrt(n),
                    a * pow(n, 1.0 / 3.0),
                    a * pow(n, 0.25),
                    a,
                    a * pow(n, 1.0 / 3.0),
                    a * pow(n, 0.25),
                )
            }
            Repr::Dense(_) => self.enumerated_radii(),
        };
        let (u1, u2) = thresholds(r2, r4, rinf);
        GeometricProfile {
            r2,
            r3,
            r4,
            rinf,
            col3,
            col4,
            u1,
            u2,
            log_card: self.log_cardinality(),
            dim: self.dim,
            cardinality: self.cardinality,
        }
    }

    /// Profile by brute-force enumeration of every point, whatever the
    /// representation.
    pub fn enumerated_profile(&self) -> GeometricProfile {
        let (r2, r3, r4, rinf, col3, col4) = self.enumerated_radii();
        let (u1, u2) = thresholds(r2, r4, rinf);
        GeometricProfile {
            r2,
            r3,
            r4,
            rinf,
            col3,
            col4,
            u1,
            u2,
            log_card: self.log_cardinality(),
            dim: self.dim,
            cardinality: self.cardinality,
        }
    }

    fn enumerated_radii(&self) -> (f64, f64, f64, f64, f64, f64) {
        let mut s2 = 0.0f64;
        let mut s3 = 0.0f64;
        let mut s4 = 0.0f64;
        let mut rinf = 0.0f64;
        let mut colmax = vec![0.0f64; self.dim];
        self.for_each_point(|_, p| {
            let (mut a2, mut a3, mut a4, mut ainf) = (0.0, 0.0, 0.0, 0.0f64);
            for (c, &v) in colmax.iter_mut().zip(p) {
                let m = abs(v);
                let m2 = m * m;
                a2 += m2;
                a3 += m2 * m;
                a4 += m2 * m2;
                ainf = ainf.max(m);
                *c = c.max(m);
            }
            s2 = s2.max(a2);
            s3 = s3.max(a3);
            s4 = s4.max(a4);
            rinf = rinf.max(ainf);
        });
        let c3: f64 = colmax.iter().map(|m| m * m * m).sum();
        let c4: f64 = colmax.iter().map(|m| m * m * m * m).sum();
        (
            sqrt(s2),
            pow(s3, 1.0 / 3.0),
            sqrt(sqrt(s4)),
            rinf,
            pow(c3, 1.0 / 3.0),
            sqrt(sqrt(c4)),
        )
    }

    /// `min_{u ≠ v} ‖u − v‖_2` over distinct indices (duplicates give zero).
    /// `None` for singletons.
    pub fn min_pairwise_distance(&self) -> Result<Option<f64>> {
        if self.cardinality < 2 {
            return Ok(None);
        }
        if let Repr::Basis { signed, scale } = &self.repr {
            let a = abs(*scale);
            let d = if *signed && self.dim == 1 {
                2.0 * a
            } else {
                core::f64::consts::SQRT_2 * a
            };
            return Ok(Some(d));
        }
        if self.cardinality > MAX_PAIRWISE {
            return Err(Error::CapExceeded {
                what: "cardinality (pairwise distances)",
                value: self.cardinality as u128,
                cap: MAX_PAIRWISE as u128,
            });
        }
        let pts = self.to_dense();
        let mut best = f64::INFINITY;
        for i in 0..self.cardinality {
            let a = &pts[i * self.dim..(i + 1) * self.dim];
            for j in (i + 1)..self.cardinality {
                let b = &pts[j * self.dim..(j + 1) * self.dim];
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.min(d2);
            }
        }
        Ok(Some(sqrt(best)))
    }

    /// Number of spins for spin sets.
    pub fn spin_count(&self) -> Option<usize> {
        match &self.repr {
            Repr::Spin(l) => Some(l.spins),
            _ => None,
        }
    }
}

impl SpinLayout {
    fn dim(&self) -> usize {
        self.tuples.len() / self.order
    }

    fn sign(&self, k: usize, spin: usize) -> f64 {
        // spin 0 is the most significant bit; a set bit means σ = −1
        if (k >> (self.spins - 1 - spin)) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    fn point_into(&self, k: usize, out: &mut [f64]) {
        for (c, tuple) in out.iter_mut().zip(self.tuples.chunks_exact(self.order)) {
            let prod: f64 = tuple.iter().map(|&s| self.sign(k, s as usize)).product();
            *c = self.scale * prod;
        }
    }

    /// `(min, max)` over σ of `Σ_τ x_τ ∏ σ`, by a Gray-code walk. For even
    /// order `σ` and `−σ` coincide, so spin 0 is pinned to `+1`.
    fn extremes_unscaled(&self, x: &[f64]) -> (f64, f64) {
        let dim = self.dim();
        let first_free = if self.order % 2 == 0 { 1 } else { 0 };
        let free = self.spins - first_free;
        let mut signs = vec![1.0f64; dim];
        let mut energy: f64 = x.iter().sum();
        let (mut lo, mut hi) = (energy, energy);
        for g in 1u64..(1u64 << free) {
            let spin = first_free + g.trailing_zeros() as usize;
            for &c in &self.by_spin[spin] {
                let c = c as usize;
                energy -= 2.0 * x[c] * signs[c];
                signs[c] = -signs[c];
            }
            if energy > hi {
                hi = energy;
            }
            if energy < lo {
                lo = energy;
            }
        }
        (lo, hi)
    }
}
