//! Whole-line operators with potentials reflected about ½, and the finite
//! even/odd decomposition into two half-line problems.
//!
//! On sites `1−L, …, L` with Dirichlet cuts at `−L` and `L+1`, the reflection
//! `x ↦ 1−x` maps the box to itself, so the splitting into
//! `u(1−x) = ±u(x)` is exact at every finite `L`. The even sector is the
//! half-line operator with `V(1) + 1`, the odd sector has `V(1) − 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SparseSpec;

/// Largest half-width accepted for dense eigensolving.
pub const MAX_HALF_WIDTH: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WholeLineSpec {
    pub half_spec: SparseSpec,
    /// `H̃_φ = H̃ − tan φ (δ₀ + δ₁)`.
    pub phi: f64,
}

impl WholeLineSpec {
    pub fn new(half_spec: SparseSpec, phi: f64) -> Self {
        Self { half_spec, phi }
    }

    /// `V(1), …, V(L)` from the half-line spec.
    pub fn half_potential(&self, l: usize) -> Vec<f64> {
        let mut v = vec![0.0; l];
        for site in self.half_spec.positions() {
            if let Some(x) = site.x.to_usize() {
                if (1..=l).contains(&x) {
                    v[x - 1] += site.amplitude;
                }
            }
        }
        v
    }

    /// `Ṽ(1−L), …, Ṽ(L)` with `Ṽ(x) = Ṽ(1−x)`.
    pub fn whole_potential(&self, l: usize) -> Vec<f64> {
        let half = self.half_potential(l);
        half.iter().rev().chain(half.iter()).copied().collect()
    }
}

/// Dense truncations: the whole-line slice and the two half-line sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMatrices {
    pub l: usize,
    /// `2L × 2L`, row `i` is site `i + 1 − L`.
    pub whole: DMatrix<f64>,
    pub even: DMatrix<f64>,
    pub odd: DMatrix<f64>,
}

fn tridiagonal(diag: &[f64]) -> DMatrix<f64> {
    let n = diag.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn finite_matrices(spec: &WholeLineSpec, l: usize) -> Result<FiniteMatrices> {
    if l < 2 {
        return Err(Error::Domain(format!("half-width must be at least 2, got {l}")));
    }
    if l > MAX_HALF_WIDTH {
        return Err(Error::Size(format!("half-width {l} exceeds the dense cap {MAX_HALF_WIDTH}")));
    }
    let t = spec.phi.tan();
    let mut whole = spec.whole_potential(l);
    // sites 0 and 1 sit at rows L−1 and L
    whole[l - 1] -= t;
    whole[l] -= t;
    let mut even = spec.half_potential(l);
    let mut odd = even.clone();
    even[0] += 1.0 - t;
    odd[0] += -1.0 - t;
    Ok(FiniteMatrices { l, whole: tridiagonal(&whole), even: tridiagonal(&even), odd: tridiagonal(&odd) })
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraCheck {
    pub whole: Vec<f64>,
    /// Sorted union of the even and odd spectra.
    pub union: Vec<f64>,
    pub max_diff: f64,
    /// Largest distance between a projected whole-line eigenvector and the
    /// matching half-line eigenvector, up to sign.
    pub max_projection_residual: f64,
    /// Whole-line eigenvalues where an even and an odd eigenvalue lie within
    /// `1e−6`; there the projections are checked by their eigen-residual.
    pub near_degenerate: usize,
}

impl SpectraCheck {
    pub fn agrees(&self, tol: f64) -> bool {
        self.whole.len() == self.union.len() && self.max_diff <= tol
    }
}

/// Eigensolve all three matrices and compare spectra and eigenvectors.
pub fn check_decomposition(m: &FiniteMatrices) -> SpectraCheck {
    let l = m.l;
    let (whole, w_vec) = sorted_eigen(&m.whole);
    let (even, e_vec) = sorted_eigen(&m.even);
    let (odd, o_vec) = sorted_eigen(&m.odd);
    let mut union: Vec<f64> = even.iter().chain(&odd).copied().collect();
    union.sort_by(f64::total_cmp);
    let max_diff = whole.iter().zip(&union).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let nearest = |values: &[f64], x: f64| -> (usize, f64) {
        let j = values.partition_point(|&y| y < x);
        [j.saturating_sub(1), j.min(values.len() - 1)]
            .into_iter()
            .map(|i| (i, (values[i] - x).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty")
    };
    let mut residual = 0.0f64;
    let mut near_degenerate = 0;
    for (c, &lambda) in whole.iter().enumerate() {
        let w = w_vec.column(c);
        let (je, de) = nearest(&even, lambda);
        let (jo, dl) = nearest(&odd, lambda);
        // (w(x) ± w(1−x))/√2 on x = 1, …, L is a unit vector in the sector
        let project = |sign: f64| DVector::from_fn(l, |i, _| (w[l + i] + sign * w[l - 1 - i]) / std::f64::consts::SQRT_2);
        if (even[je] - odd[jo]).abs() < 1e-6 {
            // the eigenvector may mix sectors; each nonzero part must still
            // be an eigenvector of its sector
            near_degenerate += 1;
            for (sign, h) in [(1.0, &m.even), (-1.0, &m.odd)] {
                let p = project(sign);
                let norm = p.norm();
                if norm > 1e-4 {
                    let p = p / norm;
                    residual = residual.max((h * &p - &p * lambda).norm());
                }
            }
            continue;
        }
        let (sign, basis, j) = if de <= dl { (1.0, &e_vec, je) } else { (-1.0, &o_vec, jo) };
        let proj = project(sign);
        let target = basis.column(j);
        residual = residual.max((&proj - target).norm().min((&proj + target).norm()));
    }
    SpectraCheck { whole, union, max_diff, max_projection_residual: residual, near_degenerate }
}

/// Text export of a symmetric banded matrix: one `offset: values` line per
/// nonzero diagonal, offset 0 first.
pub fn banded_text(m: &DMatrix<f64>) -> String {
    let n = m.nrows();
    let mut out = String::new();
    for off in 0..n {
        let band: Vec<f64> = (0..n - off).map(|i| m[(i, i + off)]).collect();
        if off > 0 && band.iter().all(|&x| x == 0.0) {
            continue;
        }
        let cells: Vec<String> = band.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&format!("{off}: {}\n", cells.join(" ")));
    }
    out
}

/// Inverse of [`banded_text`].
pub fn parse_banded(text: &str) -> Result<DMatrix<f64>> {
    let mut bands = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (off, rest) = line.split_once(':').ok_or_else(|| Error::Domain(format!("bad band line {line:?}")))?;
        let off: usize = off.trim().parse().map_err(|_| Error::Domain(format!("bad offset {off:?}")))?;
        let values: Vec<f64> = rest
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Domain(format!("bad value {s:?}"))))
            .collect::<Result<_>>()?;
        bands.push((off, values));
    }
    let n = bands.iter().find(|b| b.0 == 0).map(|b| b.1.len()).ok_or_else(|| Error::Domain("missing main diagonal".into()))?;
    let mut m = DMatrix::zeros(n, n);
    for (off, values) in bands {
        if off >= n || values.len() != n - off {
            return Err(Error::Domain(format!("band {off} has {} values for size {n}", values.len())));
        }
        for (i, x) in values.into_iter().enumerate() {
            m[(i, i + off)] = x;
            m[(i + off, i)] = x;
        }
    }
    Ok(m)
}
