//! One-particle data: sector decomposition, deformation matrix, the
//! almost periodic orthogonal representation `U_t = A^{it}`, the deformed
//! inner product and the two real structures (`H_R` and its twisted
//! partner `H_R'`).
//!
//! Vectors handed to this module are in the *real coordinate frame*
//! `e_0, .., e_{d-1}` of `H_R`, complexified.  Internally the Fock space
//! works in a frame `f_0, .., f_{d-1}` obtained by Gram-Schmidt of the
//! coordinate vectors against `<.,.>_U` inside each sector, so that the
//! twist is exactly a scaled flip in word coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conj_vec, imag_norm, re, CMat, CVec, C64, I, ONE, ZERO};

pub const DEFAULT_TRUNCATION: usize = 6;

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub dim: usize,
}

/// A rotation block of `U_t` acting on the coordinate pair `coords`
/// (local to `sector`) by the angle `t log(lambda)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationBlock {
    pub sector: usize,
    pub coords: [usize; 2],
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub sectors: Vec<SectorSpec>,
    pub q: Vec<Vec<f64>>,
    #[serde(default)]
    pub rotation_blocks: Vec<RotationBlock>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl ModelSpec {
    /// One sector of dimension `dim` with deformation `q` and trivial `U_t`.
    pub fn single_sector(dim: usize, q: f64) -> Self {
        Self {
            sectors: vec![SectorSpec { dim }],
            q: vec![vec![q]],
            rotation_blocks: Vec::new(),
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn new(dims: &[usize], q: Vec<Vec<f64>>) -> Self {
        Self {
            sectors: dims.iter().map(|&dim| SectorSpec { dim }).collect(),
            q,
            rotation_blocks: Vec::new(),
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn with_block(mut self, sector: usize, a: usize, b: usize, lambda: f64) -> Self {
        self.rotation_blocks.push(RotationBlock {
            sector,
            coords: [a, b],
            lambda,
        });
        self
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation = n;
        self
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(|s| s.dim).sum()
    }

    pub fn q_max(&self) -> f64 {
        self.q
            .iter()
            .flatten()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    /// Every violated invariant, as a human-readable line.  Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let r = self.sectors.len();
        if r == 0 {
            out.push("at least one sector is required".to_string());
        }
        for (i, s) in self.sectors.iter().enumerate() {
            if s.dim == 0 {
                out.push(format!("sector {i} has dimension 0 (need d_i >= 1)"));
            }
        }
        if self.truncation == 0 {
            out.push("truncation level must be >= 1".to_string());
        }
        if self.q.len() != r || self.q.iter().any(|row| row.len() != r) {
            out.push(format!("q must be a {r}x{r} matrix indexed by sector pairs"));
        } else {
            for i in 0..r {
                for j in 0..r {
                    let v = self.q[i][j];
                    if !v.is_finite() {
                        out.push(format!("q[{i}][{j}] is not finite"));
                    } else if v.abs() >= 1.0 {
                        out.push(format!(
                            "|q[{i}][{j}]| = {} violates sup|q_ij| < 1",
                            v.abs()
                        ));
                    }
                    if j > i && self.q[i][j] != self.q[j][i] {
                        out.push(format!(
                            "q is not symmetric: q[{i}][{j}] = {} but q[{j}][{i}] = {} (need q_ij = q_ji)",
                            self.q[i][j], self.q[j][i]
                        ));
                    }
                }
            }
        }
        let offsets = sector_offsets(&self.sectors);
        let mut used: Vec<Option<usize>> = vec![None; self.dim()];
        for (b, block) in self.rotation_blocks.iter().enumerate() {
            if !(block.lambda.is_finite() && block.lambda > 1.0) {
                out.push(format!(
                    "rotation block {b}: lambda = {} must satisfy lambda > 1",
                    block.lambda
                ));
            }
            let Some(sector) = self.sectors.get(block.sector) else {
                out.push(format!(
                    "rotation block {b}: sector {} does not exist",
                    block.sector
                ));
                continue;
            };
            let [x, y] = block.coords;
            if x >= sector.dim || y >= sector.dim {
                out.push(format!(
                    "rotation block {b}: coordinates {:?} outside sector {} of dimension {}",
                    block.coords, block.sector, sector.dim
                ));
                continue;
            }
            if x == y {
                out.push(format!("rotation block {b}: coordinates must be distinct"));
                continue;
            }
            for local in [x, y] {
                let global = offsets[block.sector] + local;
                match used[global] {
                    Some(other) => out.push(format!(
                        "rotation blocks {other} and {b} overlap on coordinate {local} of sector {}",
                        block.sector
                    )),
                    None => used[global] = Some(b),
                }
            }
        }
        out
    }
}

fn sector_offsets(sectors: &[SectorSpec]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sectors.len());
    let mut acc = 0;
    for s in sectors {
        offsets.push(acc);
        acc += s.dim;
    }
    offsets
}

/// A rotation block in global coordinates.
#[derive(Clone, Debug)]
pub struct GlobalBlock {
    pub a: usize,
    pub b: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    dim: usize,
    sector_of: Vec<usize>,
    offsets: Vec<usize>,
    blocks: Vec<GlobalBlock>,
    a: CMat,
    gram_u: CMat,
    /// Columns are the `<.,.>_U`-orthonormal frame vectors `f_k` in real coordinates.
    frame: CMat,
    frame_inv: CMat,
    /// Columns form a real basis of `H_R'` (sector by sector).
    commutant_frame: CMat,
    commutant_frame_inv: CMat,
}

pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    let violations = spec.violations();
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let dim = spec.dim();
    let offsets = sector_offsets(&spec.sectors);
    let mut sector_of = vec![0; dim];
    for (s, sec) in spec.sectors.iter().enumerate() {
        for k in 0..sec.dim {
            sector_of[offsets[s] + k] = s;
        }
    }
    let blocks = spec
        .rotation_blocks
        .iter()
        .map(|b| GlobalBlock {
            a: offsets[b.sector] + b.coords[0],
            b: offsets[b.sector] + b.coords[1],
            lambda: b.lambda,
        })
        .collect();
    let mut model = Model {
        spec: spec.clone(),
        dim,
        sector_of,
        offsets,
        blocks,
        a: CMat::identity(dim, dim),
        gram_u: CMat::identity(dim, dim),
        frame: CMat::identity(dim, dim),
        frame_inv: CMat::identity(dim, dim),
        commutant_frame: CMat::identity(dim, dim),
        commutant_frame_inv: CMat::identity(dim, dim),
    };
    model.a = model.spectral(|x| re(x));
    model.gram_u = model.spectral(|x| re(2.0 * x / (1.0 + x)));
    model.frame = model.deformed_gram_schmidt();
    model.frame_inv = model
        .frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient {
            level: 1,
            detail: "one-particle frame is singular".into(),
        })?;
    let mut cols = Vec::with_capacity(dim);
    for s in 0..spec.sectors.len() {
        cols.extend(model.commutant_subspace_basis(s)?);
    }
    model.commutant_frame = CMat::from_columns(&cols);
    model.commutant_frame_inv =
        model
            .commutant_frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::RankDeficient {
                level: 1,
                detail: "H_R' + i H_R' does not span H".into(),
            })?;
    Ok(model)
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Complex dimension of the one-particle space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.spec.truncation
    }

    pub fn num_sectors(&self) -> usize {
        self.spec.sectors.len()
    }

    pub fn sector_of(&self, coord: usize) -> usize {
        self.sector_of[coord]
    }

    pub fn sector_labels(&self) -> &[usize] {
        &self.sector_of
    }

    pub fn sector_range(&self, sector: usize) -> std::ops::Range<usize> {
        let start = self.offsets[sector];
        start..start + self.spec.sectors[sector].dim
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.spec.q[i][j]
    }

    pub fn q_max(&self) -> f64 {
        self.spec.q_max()
    }

    pub fn blocks(&self) -> &[GlobalBlock] {
        &self.blocks
    }

    pub fn is_trivial_flow(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Coordinates fixed by every `U_t`.
    pub fn fixed_coords(&self) -> Vec<usize> {
        (0..self.dim)
            .filter(|&k| !self.blocks.iter().any(|b| b.a == k || b.b == k))
            .collect()
    }

    /// `f(A)` assembled from the known block structure: on a block with
    /// eigenvalues `lambda` (on `e_a - i e_b`) and `1/lambda` (on `e_a + i e_b`)
    /// this is `((f(l)+f(1/l))/2) 1 + ((f(l)-f(1/l))/2) K`, `K = [[0,i],[-i,0]]`.
    pub fn spectral(&self, f: impl Fn(f64) -> C64) -> CMat {
        let mut m = CMat::identity(self.dim, self.dim) * f(1.0);
        for blk in &self.blocks {
            let up = f(blk.lambda);
            let down = f(1.0 / blk.lambda);
            let even = (up + down) * 0.5;
            let odd = (up - down) * 0.5;
            m[(blk.a, blk.a)] = even;
            m[(blk.b, blk.b)] = even;
            m[(blk.a, blk.b)] = odd * I;
            m[(blk.b, blk.a)] = -odd * I;
        }
        m
    }

    /// The analytic generator `A`.
    pub fn a_matrix(&self) -> &CMat {
        &self.a
    }

    /// Gram matrix of `<.,.>_U` in the real coordinate frame: `2(1+A^{-1})^{-1}`.
    pub fn gram_u(&self) -> &CMat {
        &self.gram_u
    }

    pub fn a_inv_sqrt(&self) -> CMat {
        self.spectral(|x| re(x.powf(-0.5)))
    }

    /// `U_t` as a (real) matrix.
    pub fn ut_matrix(&self, t: f64) -> CMat {
        let mut m = CMat::identity(self.dim, self.dim);
        for blk in &self.blocks {
            let theta = t * blk.lambda.ln();
            let (s, c) = theta.sin_cos();
            m[(blk.a, blk.a)] = re(c);
            m[(blk.a, blk.b)] = re(-s);
            m[(blk.b, blk.a)] = re(s);
            m[(blk.b, blk.b)] = re(c);
        }
        m
    }

    pub fn apply_ut(&self, t: f64, xi: &CVec) -> Result<CVec> {
        self.check_dim(xi)?;
        Ok(self.ut_matrix(t) * xi)
    }

    /// `<xi, eta>_U`, linear in the second argument.
    pub fn deformed_inner(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        self.check_dim(xi)?;
        self.check_dim(eta)?;
        Ok(xi.dotc(&(&self.gram_u * eta)))
    }

    pub fn norm_u(&self, xi: &CVec) -> f64 {
        xi.dotc(&(&self.gram_u * xi)).re.max(0.0).sqrt()
    }

    pub fn check_dim(&self, xi: &CVec) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// `A^{-1/2} xi` for real `xi`; lands in `H_R'`.
    pub fn commutant_vector(&self, xi: &CVec) -> Result<CVec> {
        self.check_dim(xi)?;
        self.check_real(xi)?;
        Ok(self.a_inv_sqrt() * xi)
    }

    pub fn check_real(&self, xi: &CVec) -> Result<()> {
        let leak = imag_norm(xi);
        if leak > 1e-12 * xi.norm().max(1.0) {
            return Err(Error::NotReal(leak));
        }
        Ok(())
    }

    /// Real basis of `(H_R^(j))'`, the vectors of `H^(j)` whose deformed
    /// inner product with every real vector is real.
    ///
    /// Writing `xi = x + i y` on the sector and `G_U = G_r + i G_i`, the
    /// condition `Im <xi, e_k>_U = 0` reads `G_i^T x - G_r^T y = 0`, so the
    /// solution space is parametrised by `x` with `y = -G_r^{-1} G_i x`.
    pub fn commutant_subspace_basis(&self, sector: usize) -> Result<Vec<CVec>> {
        if sector >= self.num_sectors() {
            return Err(Error::IndexOutOfRange {
                what: "sector",
                index: sector,
                limit: self.num_sectors(),
            });
        }
        let range = self.sector_range(sector);
        let n = range.len();
        let g = self.gram_u.view((range.start, range.start), (n, n));
        let g_re = g.map(|z| z.re);
        let g_im = g.map(|z| z.im);
        let solve = g_re
            .clone()
            .lu()
            .solve(&g_im)
            .ok_or_else(|| Error::RankDeficient {
                level: 1,
                detail: "real part of G_U singular".into(),
            })?;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = CVec::zeros(self.dim);
            for m in 0..n {
                let x = if m == k { 1.0 } else { 0.0 };
                v[range.start + m] = C64::new(x, -solve[(m, k)]);
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Largest `|Im <eta, e_k>_U|` over the real coordinate basis.
    pub fn commutant_residual(&self, eta: &CVec) -> f64 {
        let row = eta.adjoint() * &self.gram_u;
        row.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn check_commutant(&self, eta: &CVec) -> Result<()> {
        self.check_dim(eta)?;
        let r = self.commutant_residual(eta);
        if r > 1e-10 * eta.norm().max(1.0) {
            return Err(Error::NotInCommutant(r));
        }
        Ok(())
    }

    /// Complex conjugation `J` of `H_C` (coordinatewise in the real frame).
    pub fn conj(&self, xi: &CVec) -> CVec {
        conj_vec(xi)
    }

    /// Conjugation with respect to the real form `H_R'` of `H`.
    pub fn conj_commutant(&self, eta: &CVec) -> CVec {
        let c = &self.commutant_frame_inv * eta;
        &self.commutant_frame * conj_vec(&c)
    }

    pub fn commutant_frame(&self) -> &CMat {
        &self.commutant_frame
    }

    /// Columns: the internal `<.,.>_U`-orthonormal frame `f_k`.
    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    /// Coordinates of a real-frame vector in the internal frame.
    pub fn to_frame(&self, xi: &CVec) -> CVec {
        &self.frame_inv * xi
    }

    pub fn from_frame(&self, c: &CVec) -> CVec {
        &self.frame * c
    }

    /// Matrix of the conjugation `J` in frame coordinates: `J(c) = M conj(c)`.
    pub fn conj_in_frame(&self) -> CMat {
        &self.frame_inv * self.frame.map(|z| z.conj())
    }

    /// A matrix in frame coordinates of a linear map given in the real frame.
    pub fn operator_in_frame(&self, m: &CMat) -> CMat {
        &self.frame_inv * m * &self.frame
    }

    pub fn basis_vector(&self, k: usize) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[k] = ONE;
        v
    }

    /// Gram-Schmidt of the coordinate vectors against `<.,.>_U`, sector by
    /// sector, done twice for stability.
    fn deformed_gram_schmidt(&self) -> CMat {
        let mut frame = CMat::zeros(self.dim, self.dim);
        for s in 0..self.num_sectors() {
            let range = self.sector_range(s);
            for k in range.clone() {
                let mut v = self.basis_vector(k);
                for _ in 0..2 {
                    for prev in range.start..k {
                        let f = frame.column(prev).into_owned();
                        let c = f.dotc(&(&self.gram_u * &v));
                        v -= f * c;
                    }
                }
                let nrm = self.norm_u(&v);
                frame.set_column(k, &(v / re(nrm)));
            }
        }
        frame
    }

    /// The unique sector carrying weight above `tol`, if there is one.
    pub fn support_sector(&self, xi: &CVec, tol: f64) -> Option<usize> {
        let mut found = None;
        for s in 0..self.num_sectors() {
            let w: f64 = self.sector_range(s).map(|k| xi[k].norm_sqr()).sum();
            if w.sqrt() > tol {
                if found.is_some() {
                    return None;
                }
                found = Some(s);
            }
        }
        found
    }

    /// Norm of the part of `xi` outside `sector`.
    pub fn sector_leak(&self, xi: &CVec, sector: usize) -> f64 {
        let range = self.sector_range(sector);
        (0..self.dim)
            .filter(|k| !range.contains(k))
            .map(|k| xi[k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn zero_vector(&self) -> CVec {
        CVec::from_element(self.dim, ZERO)
    }
}
