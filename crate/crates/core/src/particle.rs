//! Periodic spatial grid for the particle coordinates: spectral momentum
//! operators, multiplication operators, the softened Coulomb potential and
//! an estimator for its relative bound against `p²`.
//!
//! Grid points are flattened row-major over the `d = n·s` coordinate axes
//! (last axis fastest); axis `j·s + c` is component `c` of particle `j`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dense;
use crate::linalg::krylov::{operator_norm, KrylovOptions};
use crate::linalg::{LinearOperator, C64, ZERO};

#[derive(Clone)]
pub struct SpatialGrid {
    axes: usize,
    points: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("axes", &self.axes)
            .field("points", &self.points)
            .field("length", &self.length)
            .finish()
    }
}

impl SpatialGrid {
    pub fn new(axes: usize, points: usize, length: f64) -> Result<Self> {
        if axes == 0 {
            return Err(Error::param("axes", "at least one axis is required"));
        }
        if points < 2 {
            return Err(Error::param("points", "need at least 2 points per axis"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::param("length", "must be positive"));
        }
        let mut planner = FftPlanner::new();
        Ok(SpatialGrid {
            axes,
            points,
            length,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// `P^d`.
    pub fn size(&self) -> usize {
        self.points.pow(self.axes as u32)
    }

    fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.axes - 1 - axis) as u32)
    }

    /// Per-axis index of a flat grid index.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.points
    }

    /// Coordinates `x_a = i_a L / P`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        (0..self.axes)
            .map(|a| self.axis_index(flat, a) as f64 * self.spacing())
            .collect()
    }

    /// Signed Fourier index of per-axis index `i` (`−P/2` at Nyquist).
    pub fn frequency_index(&self, i: usize) -> i64 {
        let p = self.points as i64;
        let i = i as i64;
        if i < (p + 1) / 2 {
            i
        } else {
            i - p
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.frequency_index(i) as f64 / self.length
    }

    /// Largest `|m|` such that every mode in `[−P/2+K, P/2−1−K]` is allowed:
    /// returns the inclusive band for margin `K`.
    pub fn band(&self, margin: i64) -> (i64, i64) {
        let p = self.points as i64;
        (-(p / 2) + margin, (p - 1) - p / 2 - margin)
    }

    /// Symbol `k_axis` of `p_axis = −i∂_axis`.
    pub fn momentum_symbol(&self, axis: usize) -> Vec<f64> {
        (0..self.size())
            .map(|f| self.wavenumber(self.axis_index(f, axis)))
            .collect()
    }

    /// Symbol of `p² = −Δ`.
    pub fn laplacian_symbol(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for a in 0..self.axes {
            for (o, k) in out.iter_mut().zip(self.momentum_symbol(a)) {
                *o += k * k;
            }
        }
        out
    }

    /// 0/1 symbol keeping Fourier modes with `|m|` inside the band for margin
    /// `margins[a]` on every axis.
    pub fn band_symbol(&self, margins: &[i64]) -> Vec<f64> {
        (0..self.size())
            .map(|f| {
                let inside = (0..self.axes).all(|a| {
                    let (lo, hi) = self.band(margins[a]);
                    let m = self.frequency_index(self.axis_index(f, a));
                    m >= lo && m <= hi
                });
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// In-place FFT along `axis` of one spatial block.
    fn transform_axis(&self, data: &mut [C64], axis: usize, inverse: bool) {
        let p = self.points;
        let stride = self.stride(axis);
        let outer = self.size() / (p * stride);
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut line = vec![ZERO; p];
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * p * stride + inner;
                for (t, l) in line.iter_mut().enumerate() {
                    *l = data[base + t * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (t, l) in line.iter().enumerate() {
                    data[base + t * stride] = *l;
                }
            }
        }
    }
}

/// Real Fourier multiplier on the spatial factor; only the axes its symbol
/// depends on are transformed.
#[derive(Debug, Clone)]
pub struct FourierMultiplier {
    pub grid: SpatialGrid,
    pub symbol: Arc<Vec<f64>>,
    pub axes: Vec<usize>,
}

impl FourierMultiplier {
    pub fn new(grid: &SpatialGrid, symbol: Vec<f64>, axes: Vec<usize>) -> Self {
        assert_eq!(symbol.len(), grid.size());
        FourierMultiplier {
            grid: grid.clone(),
            symbol: Arc::new(symbol),
            axes,
        }
    }

    pub fn momentum(grid: &SpatialGrid, axis: usize) -> Self {
        Self::new(grid, grid.momentum_symbol(axis), vec![axis])
    }

    pub fn laplacian(grid: &SpatialGrid) -> Self {
        Self::new(grid, grid.laplacian_symbol(), (0..grid.axes()).collect())
    }

    /// Applies to one spatial block, `y = F⁻¹ σ F x`.
    pub fn apply_block(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        if self.axes.is_empty() {
            for (v, s) in y.iter_mut().zip(self.symbol.iter()) {
                *v *= s;
            }
            return;
        }
        for &a in &self.axes {
            self.grid.transform_axis(y, a, false);
        }
        let norm = 1.0 / (self.grid.points as f64).powi(self.axes.len() as i32);
        for (v, s) in y.iter_mut().zip(self.symbol.iter()) {
            *v *= s * norm;
        }
        for &a in &self.axes {
            self.grid.transform_axis(y, a, true);
        }
    }
}

impl LinearOperator for FourierMultiplier {
    fn dim(&self) -> usize {
        self.grid.size()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_block(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply_block(x, y)
    }
}

/// A fixed point charge interacting with every particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    /// Position in the particle's coordinate space (length `s`).
    pub position: Vec<f64>,
    /// Coupling `z_{j,J}` to each particle `j`.
    pub coupling: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub particles: usize,
    pub particle_dim: usize,
    /// `c_{j,l}`, summed over ordered pairs `j ≠ l`; empty for none.
    #[serde(default)]
    pub pair_coupling: Vec<Vec<f64>>,
    #[serde(default)]
    pub nuclei: Vec<Nucleus>,
    /// Softening `δ > 0` of the kernel `1/sqrt(r² + δ²)`.
    pub softening: f64,
}

impl PotentialSpec {
    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        if !(self.softening > 0.0 && self.softening.is_finite()) {
            return Err(Error::param("softening", "must be positive"));
        }
        if self.particles * self.particle_dim != grid.axes() {
            return Err(Error::DimensionMismatch {
                expected: grid.axes(),
                found: self.particles * self.particle_dim,
            });
        }
        if !self.pair_coupling.is_empty()
            && (self.pair_coupling.len() != self.particles
                || self.pair_coupling.iter().any(|r| r.len() != self.particles))
        {
            return Err(Error::param("pair_coupling", "must be an n×n matrix"));
        }
        for nuc in &self.nuclei {
            if nuc.position.len() != self.particle_dim || nuc.coupling.len() != self.particles {
                return Err(Error::param("nuclei", "position or coupling has the wrong length"));
            }
            if nuc.position.iter().any(|x| !(*x >= 0.0 && *x < grid.length())) {
                return Err(Error::param("nuclei", "position outside the box [0, L)"));
            }
        }
        Ok(())
    }
}

fn min_image_distance(a: &[f64], b: &[f64], length: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            let d = d - length * (d / length).round();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Diagonal of `V_c` on the grid.
pub fn coulomb_potential(grid: &SpatialGrid, spec: &PotentialSpec) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    let s = spec.particle_dim;
    let d2 = spec.softening * spec.softening;
    let kernel = |r: f64| 1.0 / (r * r + d2).sqrt();
    Ok((0..grid.size())
        .map(|f| {
            let x = grid.coordinates(f);
            let mut v = 0.0;
            for j in 0..spec.particles {
                let xj = &x[j * s..(j + 1) * s];
                if !spec.pair_coupling.is_empty() {
                    for l in 0..spec.particles {
                        if l != j {
                            let xl = &x[l * s..(l + 1) * s];
                            v += spec.pair_coupling[j][l] * kernel(min_image_distance(xj, xl, grid.length()));
                        }
                    }
                }
                for nuc in &spec.nuclei {
                    v += nuc.coupling[j] * kernel(min_image_distance(xj, &nuc.position, grid.length()));
                }
            }
            v
        })
        .collect())
}

/// Writes `values` as little-endian `(re, im)` f64 pairs in grid order.
pub fn write_binary(values: &[C64], mut w: impl Write) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// `V (a p² + b)^{-1}` on the spatial factor.
struct KatoOperator<'a> {
    v: &'a [f64],
    resolvent: FourierMultiplier,
}

impl LinearOperator for KatoOperator<'_> {
    fn dim(&self) -> usize {
        self.v.len()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.resolvent.apply_block(x, y);
        for (yi, vi) in y.iter_mut().zip(self.v) {
            *yi *= vi;
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let vx: Vec<C64> = x.iter().zip(self.v).map(|(a, b)| a * b).collect();
        self.resolvent.apply_block(&vx, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatoPoint {
    pub b: f64,
    /// `None` when no finite `a` works (`rms(V) > b`).
    pub a_min: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KatoOptions {
    pub krylov: KrylovOptions,
    /// Relative width at which the bisection on `a` stops.
    pub tol: f64,
    /// Use dense norms; the spatial grid must fit the dense budget.
    pub dense: bool,
}

impl Default for KatoOptions {
    fn default() -> Self {
        KatoOptions {
            krylov: KrylovOptions::default(),
            tol: 1e-12,
            dense: false,
        }
    }
}

/// Smallest `a ≥ 0` with `‖V(a p² + b)^{-1}‖ ≤ 1`, i.e. `‖Vψ‖ ≤ ‖(a p² + b)ψ‖`,
/// which implies `‖Vψ‖ ≤ a‖p²ψ‖ + b‖ψ‖`.
///
/// The norm is non-increasing in `a` and tends to `rms(V)/b` (the constant
/// mode is untouched by `p²`), so the answer is found by bisection.
pub fn kato_bound_estimate(
    v: &[f64],
    grid: &SpatialGrid,
    b_values: &[f64],
    opts: &KatoOptions,
) -> Result<Vec<KatoPoint>> {
    if v.len() != grid.size() {
        return Err(Error::DimensionMismatch {
            expected: grid.size(),
            found: v.len(),
        });
    }
    for w in b_values.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param("b_values", "must be strictly increasing"));
        }
    }
    if b_values.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::param("b_values", "must be positive"));
    }
    let lap = grid.laplacian_symbol();
    let norm_at = |a: f64, b: f64| -> Result<f64> {
        let symbol: Vec<f64> = lap.iter().map(|k2| 1.0 / (a * k2 + b)).collect();
        let op = KatoOperator {
            v,
            resolvent: FourierMultiplier::new(grid, symbol, (0..grid.axes()).collect()),
        };
        if opts.dense {
            let m = dense::materialize(&op, dense::DEFAULT_DENSE_LIMIT)?;
            Ok(dense::max_singular_value(&m))
        } else {
            Ok(operator_norm(&op, &opts.krylov)?.value)
        }
    };
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let mut out = Vec::with_capacity(b_values.len());
    for &b in b_values {
        if vmax <= b {
            out.push(KatoPoint { b, a_min: Some(0.0) });
            continue;
        }
        if rms >= b {
            out.push(KatoPoint { b, a_min: None });
            continue;
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while norm_at(hi, b)? > 1.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::NoConvergence {
                    iterations: guard,
                    residual: f64::NAN,
                    lower: hi,
                    upper: f64::INFINITY,
                });
            }
        }
        let mut lo = 0.0;
        while hi - lo > opts.tol * hi {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid, b)? > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(KatoPoint { b, a_min: Some(hi) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(p: usize, l: f64) -> SpatialGrid {
        SpatialGrid::new(1, p, l).unwrap()
    }

    #[test]
    fn momentum_of_constant_and_plane_wave() {
        let g = grid1(16, 10.0);
        let p = FourierMultiplier::momentum(&g, 0);
        let c = vec![C64::new(1.0, 0.0); 16];
        assert!(p.apply_vec(&c).iter().all(|z| z.norm() < 1e-14));
        let k = 2.0 * PI / 10.0;
        let wave: Vec<C64> = (0..16).map(|i| C64::from_polar(1.0, k * g.coordinates(i)[0])).collect();
        let out = p.apply_vec(&wave);
        for (o, w) in out.iter().zip(&wave) {
            assert!((o - w * k).norm() < 1e-13);
        }
    }

    #[test]
    fn laplacian_is_sum_of_squares() {
        let g = SpatialGrid::new(2, 8, 3.0).unwrap();
        let lap = FourierMultiplier::laplacian(&g);
        let x: Vec<C64> = (0..64).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut sum = vec![ZERO; 64];
        for a in 0..2 {
            let p = FourierMultiplier::momentum(&g, a);
            let pp = p.apply_vec(&p.apply_vec(&x));
            for (s, v) in sum.iter_mut().zip(pp) {
                *s += v;
            }
        }
        let direct = lap.apply_vec(&x);
        for (a, b) in sum.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn frequencies_follow_fft_order() {
        let g = grid1(6, 1.0);
        let idx: Vec<i64> = (0..6).map(|i| g.frequency_index(i)).collect();
        assert_eq!(idx, vec![0, 1, 2, -3, -2, -1]);
        assert_eq!(g.band(0), (-3, 2));
        assert_eq!(g.band(1), (-2, 1));
    }

    #[test]
    fn nucleus_potential_value() {
        let g = grid1(20, 10.0);
        let spec = PotentialSpec {
            particles: 1,
            particle_dim: 1,
            pair_coupling: vec![],
            nuclei: vec![Nucleus {
                position: vec![5.0],
                coupling: vec![-1.0],
            }],
            softening: 0.01,
        };
        let v = coulomb_potential(&g, &spec).unwrap();
        // x = 4.0 is grid point 8
        assert!((v[8] + 1.0 / (1.0f64 + 1e-4).sqrt()).abs() < 1e-15);
        let zero = PotentialSpec {
            nuclei: vec![],
            ..spec.clone()
        };
        assert!(coulomb_potential(&g, &zero).unwrap().iter().all(|x| *x == 0.0));
        let bad = PotentialSpec {
            softening: 0.0,
            ..spec
        };
        assert!(coulomb_potential(&g, &bad).is_err());
    }

    #[test]
    fn kato_constant_potential() {
        let g = grid1(8, 5.0);
        let v = vec![0.7; 8];
        let pts = kato_bound_estimate(&v, &g, &[0.5, 0.7, 1.0], &KatoOptions::default()).unwrap();
        assert_eq!(pts[0].a_min, None);
        assert_eq!(pts[1].a_min, Some(0.0));
        assert_eq!(pts[2].a_min, Some(0.0));
        let zero = kato_bound_estimate(&[0.0; 8], &g, &[0.1], &KatoOptions::default()).unwrap();
        assert_eq!(zero[0].a_min, Some(0.0));
    }

    #[test]
    fn binary_export_layout() {
        let mut buf = Vec::new();
        write_binary(&[C64::new(1.5, -2.0)], &mut buf).unwrap();
        assert_eq!(buf.len(), 16);
        assert_eq!(f64::from_le_bytes(buf[0..8].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), -2.0);
    }
}
