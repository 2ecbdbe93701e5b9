//! Finite-element oracle for the cross-section eigenvalue problem.
//!
//! The reduced quadratic form at wavenumber `r`, with `v3 = i w3`, is
//!
//! ```text
//! a[v2, w3] = ∫_J 2 r² v2² + 2 w3'² + (v2' − r w3)²,   |u|² = ∫_J v2² + w3²
//! ```
//!
//! for the hat block and `∫_J r² v1² + v1'²` over `∫_J v1²` for the check
//! block. Stress-free faces are natural conditions of these forms, so no
//! boundary rows are imposed. Piecewise-linear elements live on the half
//! interval `[0, π/2]`: `v2`, `v1` even (free at 0), `w3` odd (`w3(0) = 0`).
//!
//! The zero-mean condition `∫ v = 0` removes the constant mode, which is an
//! exact discrete eigenvector: `K e = 2 r² M e` (hat) and `K e = r² M e`
//! (check). Small problems are solved densely on the constraint null space;
//! large ones by Sturm-count bisection on the banded pencil with the
//! constant mode deflated from the count.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest `n` handled by the dense solver.
pub const DENSE_LIMIT: usize = 2048;
pub const MIN_N: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Hat,
    Check,
    FullH4,
}

/// Symmetric banded matrix in lower band storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw + 1).min(self.n);
            y[i] = (lo..hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }

    /// Number of negative eigenvalues of `self − sigma * mass`, from the
    /// pivots of an unpivoted banded `L D Lᵀ` factorization.
    pub fn inertia_below(&self, mass: &SymBand, sigma: f64) -> usize {
        let (n, b) = (self.n, self.bw.max(mass.bw));
        // Row i of L stores L[i][i-b..i]; d holds the pivots.
        let mut l = vec![0.0; n * b];
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        let scale = (0..n).map(|i| self.get(i, i).abs() + sigma.abs() * mass.get(i, i)).fold(0.0, f64::max);
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        for j in 0..n {
            let lo = j.saturating_sub(b);
            let mut dj = self.get(j, j) - sigma * mass.get(j, j);
            for k in lo..j {
                let ljk = l[j * b + (k + b - j)];
                dj -= ljk * ljk * d[k];
            }
            if dj.abs() < tiny {
                dj = -tiny;
            }
            d[j] = dj;
            if dj < 0.0 {
                negatives += 1;
            }
            for i in (j + 1)..(j + b + 1).min(n) {
                let mut a = self.get(i, j) - sigma * mass.get(i, j);
                for k in i.saturating_sub(b)..j {
                    a -= l[i * b + (k + b - i)] * l[j * b + (k + b - j)] * d[k];
                }
                l[i * b + (j + b - i)] = a / dj;
            }
        }
        negatives
    }
}

/// One decoupled block of the pencil together with its zero-mean constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stiffness: SymBand,
    pub mass: SymBand,
    /// `c` with `cᵀ x = ∫ v` (the constrained component only); equals `M e`.
    pub mean: Vec<f64>,
    /// Eigenvalue of the constant mode `e`.
    pub mean_eigenvalue: f64,
    pub hat: bool,
}

/// Assembled stiffness/mass pencils for one wavenumber and mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FormDiscretization {
    pub n: usize,
    pub h: f64,
    pub r: f64,
    pub sector: Sector,
    pub blocks: Vec<Block>,
    /// Whether the zero-mean (h4) constraint is enforced.
    pub constrained: bool,
}

impl FormDiscretization {
    /// The same pencils with the zero-mean constraint dropped.
    pub fn without_mean_constraint(mut self) -> Self {
        self.constrained = false;
        self
    }
}

fn element_matrices(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let s = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    (m, s)
}

// Interleaved ordering v0, v1, w1, v2, w2, ... keeps the bandwidth at 3.
fn hat_v(i: usize) -> usize {
    if i == 0 {
        0
    } else {
        2 * i - 1
    }
}

fn hat_w(i: usize) -> Option<usize> {
    (i > 0).then(|| 2 * i)
}

fn assemble_hat(r: f64, m: usize, h: f64) -> Block {
    let dim = 2 * m + 1;
    let mut k = SymBand::zeros(dim, 3);
    let mut mm = SymBand::zeros(dim, 3);
    let (me, se) = element_matrices(h);
    // ∫ v' w on an element = (v_b − v_a)(w_a + w_b)/2.
    let c = [[-0.5, -0.5], [0.5, 0.5]];
    let r2 = r * r;
    for e in 0..m {
        let v = [hat_v(e), hat_v(e + 1)];
        let w = [hat_w(e), hat_w(e + 1)];
        for a in 0..2 {
            for b in 0..2 {
                if v[a] >= v[b] {
                    k.add(v[a], v[b], 2.0 * r2 * me[a][b] + se[a][b]);
                    mm.add(v[a], v[b], me[a][b]);
                }
                if let (Some(wa), Some(wb)) = (w[a], w[b]) {
                    if wa >= wb {
                        k.add(wa, wb, 2.0 * se[a][b] + r2 * me[a][b]);
                        mm.add(wa, wb, me[a][b]);
                    }
                }
                if let Some(wb) = w[b] {
                    k.add(v[a], wb, -r * c[a][b]);
                }
            }
        }
    }
    let mut mean = vec![0.0; dim];
    for e in 0..m {
        mean[hat_v(e)] += 0.5 * h;
        mean[hat_v(e + 1)] += 0.5 * h;
    }
    Block {
        stiffness: k,
        mass: mm,
        mean,
        mean_eigenvalue: 2.0 * r2,
        hat: true,
    }
}

fn assemble_check(r: f64, m: usize, h: f64) -> Block {
    let dim = m + 1;
    let mut k = SymBand::zeros(dim, 1);
    let mut mm = SymBand::zeros(dim, 1);
    let (me, se) = element_matrices(h);
    let r2 = r * r;
    for e in 0..m {
        for a in 0..2 {
            for b in 0..=a {
                k.add(e + a, e + b, r2 * me[a][b] + se[a][b]);
                mm.add(e + a, e + b, me[a][b]);
            }
        }
    }
    let mut mean = vec![0.0; dim];
    for e in 0..m {
        mean[e] += 0.5 * h;
        mean[e + 1] += 0.5 * h;
    }
    Block {
        stiffness: k,
        mass: mm,
        mean,
        mean_eigenvalue: r2,
        hat: false,
    }
}

/// Assembles the pencils on a uniform mesh of width `π/n` (`n` even, ≥ 32).
pub fn assemble(r: f64, n: usize, sector: Sector) -> Result<FormDiscretization> {
    if n < MIN_N || n % 2 != 0 {
        return Err(Error::Domain(format!("grid size n = {n} must be even and >= {MIN_N}")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!("wavenumber r = {r} must be >= 0")));
    }
    let m = n / 2;
    let h = std::f64::consts::PI / n as f64;
    let blocks = match sector {
        Sector::Hat => vec![assemble_hat(r, m, h)],
        Sector::Check => vec![assemble_check(r, m, h)],
        Sector::FullH4 => vec![assemble_hat(r, m, h), assemble_check(r, m, h)],
    };
    Ok(FormDiscretization {
        n,
        h,
        r,
        sector,
        blocks,
        constrained: true,
    })
}

/// Reduced form `a[v2, w3]` of piecewise-linear fields sampled at the `n + 1`
/// nodes of a uniform mesh of all of `J` (the third component is `i w3`).
pub fn reduced_form(r: f64, v2: &[f64], w3: &[f64]) -> Result<f64> {
    if v2.len() != w3.len() || v2.len() < 2 {
        return Err(Error::Domain("v2 and w3 must share a mesh of >= 2 nodes".into()));
    }
    let h = std::f64::consts::PI / (v2.len() - 1) as f64;
    let mut total = 0.0;
    for e in 0..v2.len() - 1 {
        let (va, vb, wa, wb) = (v2[e], v2[e + 1], w3[e], w3[e + 1]);
        let dv = (vb - va) / h;
        let dw = (wb - wa) / h;
        let (ga, gb) = (dv - r * wa, dv - r * wb);
        total += 2.0 * r * r * h * (va * va + va * vb + vb * vb) / 3.0
            + 2.0 * h * dw * dw
            + h * (ga * ga + ga * gb + gb * gb) / 3.0;
    }
    Ok(total)
}

/// `∫_J v2² + w3²` of the same piecewise-linear fields.
pub fn reduced_norm_sq(v2: &[f64], w3: &[f64]) -> f64 {
    let h = std::f64::consts::PI / (v2.len() - 1) as f64;
    let p1 = |a: f64, b: f64| h * (a * a + a * b + b * b) / 3.0;
    (0..v2.len() - 1)
        .map(|e| p1(v2[e], v2[e + 1]) + p1(w3[e], w3[e + 1]))
        .sum()
}

// Basis of the orthogonal complement of `c` from a Householder reflector:
// columns 1.. of H = I − 2 u uᵀ / uᵀu, with H c ∥ e₀.
fn householder(c: &[f64]) -> DVector<f64> {
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = DVector::from_column_slice(c);
    u[0] += norm.copysign(c[0]);
    u
}

// H A H for symmetric A, in O(N²).
fn reflect_both_sides(a: &DMatrix<f64>, u: &DVector<f64>) -> DMatrix<f64> {
    let uu = u.dot(u);
    let au = a * u;
    let uau = u.dot(&au);
    let mut out = a.clone();
    out.ger(-2.0 / uu, u, &au, 1.0);
    out.ger(-2.0 / uu, &au, u, 1.0);
    out.ger(4.0 * uau / (uu * uu), u, u, 1.0);
    out
}

struct DenseBlock {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<f64>>,
}

fn dense_block(block: &Block, constrained: bool, vectors: bool) -> Result<DenseBlock> {
    let mut k = block.stiffness.to_dense();
    let mut m = block.mass.to_dense();
    let u = constrained.then(|| householder(&block.mean));
    if let Some(u) = &u {
        let dim = k.nrows();
        k = reflect_both_sides(&k, u).view((1, 1), (dim - 1, dim - 1)).into_owned();
        m = reflect_both_sides(&m, u).view((1, 1), (dim - 1, dim - 1)).into_owned();
    }
    let chol = Cholesky::new(m).ok_or_else(|| Error::Eigensolver("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&k)
        .ok_or_else(|| Error::Eigensolver("singular Cholesky factor".into()))?;
    let mut c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Eigensolver("singular Cholesky factor".into()))?;
    c = (&c + c.transpose()) * 0.5;
    if !vectors {
        let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return Ok(DenseBlock {
            eigenvalues: ev,
            eigenvectors: None,
        });
    }
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ev = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    let mut z = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Eigensolver("singular Cholesky factor".into()))?;
    if let Some(u) = &u {
        // Back to full coordinates: x = H [0; z].
        let mut full = DMatrix::zeros(z.nrows() + 1, z.ncols());
        full.view_mut((1, 0), (z.nrows(), z.ncols())).copy_from(&z);
        let uu = u.dot(u);
        let ut_full = u.transpose() * &full;
        full.ger(-2.0 / uu, u, &ut_full.transpose(), 1.0);
        z = full;
    }
    Ok(DenseBlock {
        eigenvalues: ev,
        eigenvectors: Some(z),
    })
}

fn sturm_count(block: &Block, constrained: bool, sigma: f64) -> usize {
    let raw = block.stiffness.inertia_below(&block.mass, sigma);
    if constrained && sigma > block.mean_eigenvalue {
        raw.saturating_sub(1)
    } else {
        raw
    }
}

fn banded_block(block: &Block, constrained: bool, count: usize) -> Result<Vec<f64>> {
    let size = block.stiffness.dim() - usize::from(constrained);
    let count = count.min(size);
    let mut hi = 1.0;
    while sturm_count(block, constrained, hi) < count {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Eigensolver("no upper bound for spectrum".into()));
        }
    }
    let mut out = Vec::with_capacity(count);
    // A tiny negative floor keeps roundoff-level eigenvalues of a
    // nonnegative form inside the bracket.
    let floor = -1e-10;
    for k in 0..count {
        let (mut lo, mut up) = (floor, hi);
        while up - lo > 4.0 * f64::EPSILON * up.abs().max(1.0) {
            let mid = 0.5 * (lo + up);
            if sturm_count(block, constrained, mid) > k {
                up = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + up));
    }
    Ok(out)
}

/// The `count` smallest generalized eigenvalues, ascending. Dense for
/// `n <= DENSE_LIMIT`, Sturm-count bisection on the banded pencil above.
pub fn lowest_eigs(disc: &FormDiscretization, count: usize) -> Result<Vec<f64>> {
    if disc.n <= DENSE_LIMIT {
        lowest_eigs_dense(disc, count)
    } else {
        lowest_eigs_banded(disc, count)
    }
}

pub fn lowest_eigs_dense(disc: &FormDiscretization, count: usize) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for b in &disc.blocks {
        all.extend(dense_block(b, disc.constrained, false)?.eigenvalues);
    }
    finish(all, count)
}

pub fn lowest_eigs_banded(disc: &FormDiscretization, count: usize) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for b in &disc.blocks {
        all.extend(banded_block(b, disc.constrained, count)?);
    }
    finish(all, count)
}

fn finish(mut all: Vec<f64>, count: usize) -> Result<Vec<f64>> {
    if count > all.len() {
        return Err(Error::Domain(format!("requested {count} eigenvalues of {}", all.len())));
    }
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    Ok(all)
}

/// Lowest hat-sector eigenpair on the full interval: eigenvalue and nodal
/// values of `v2`, `w3` at the `n + 1` mesh points, normalized so that
/// `∫_J v2² + w3² = 1` and `v2(0) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatMode {
    pub lambda: f64,
    pub v2: Vec<f64>,
    pub w3: Vec<f64>,
}

pub fn lowest_hat_mode(r: f64, n: usize) -> Result<HatMode> {
    if n > DENSE_LIMIT {
        return Err(Error::Domain(format!("eigenvectors need n <= {DENSE_LIMIT}")));
    }
    let disc = assemble(r, n, Sector::Hat)?;
    let dense = dense_block(&disc.blocks[0], true, true)?;
    let x = dense.eigenvectors.expect("vectors requested");
    let col = x.column(0);
    let m = n / 2;
    let half_v: Vec<f64> = (0..=m).map(|i| col[hat_v(i)]).collect();
    let half_w: Vec<f64> = (0..=m).map(|i| hat_w(i).map_or(0.0, |j| col[j])).collect();
    // Mirror: v2 even, w3 odd about t = 0 (node m).
    let mut v2 = Vec::with_capacity(n + 1);
    let mut w3 = Vec::with_capacity(n + 1);
    for i in (1..=m).rev() {
        v2.push(half_v[i]);
        w3.push(-half_w[i]);
    }
    v2.extend_from_slice(&half_v);
    w3.extend_from_slice(&half_w);
    let norm = reduced_norm_sq(&v2, &w3).sqrt();
    let sign = if v2[m] < 0.0 { -1.0 } else { 1.0 };
    for x in v2.iter_mut().chain(w3.iter_mut()) {
        *x *= sign / norm;
    }
    Ok(HatMode {
        lambda: dense.eigenvalues[0],
        v2,
        w3,
    })
}
