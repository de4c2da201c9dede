//! Truncated Fock space combinatorics: word bases, the twist `T` and its
//! amplifications `T_i`, the quasi-multiplicative map `pi(sigma)`, the
//! kernel `P^(n) = sum_{sigma in S_n} pi(sigma)` and the twisted inner
//! product it defines.
//!
//! All level coordinates are in the one-particle frame of [`Model::frame`],
//! which is `<.,.>_U`-orthonormal, so the untwisted level Gram is the
//! identity and `<x, y>_T = x^* P^(n) y`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{Cholesky, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, re, spectral_norm, CMat, CVec, C64, ONE, ZERO};
use crate::model::Model;
use crate::perm::{symmetric_group, Permutation, Sweep};

/// Minimum eigenvalue below which a level is flagged degenerate.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Words of letters `0..d` on levels `0..=truncation`; a word is indexed by
/// reading its letters as base-`d` digits, first letter most significant.
#[derive(Clone, Debug)]
pub struct WordBasis {
    dim: usize,
    truncation: usize,
    sectors: Vec<usize>,
}

impl WordBasis {
    pub fn new(dim: usize, truncation: usize, sectors: Vec<usize>) -> Self {
        Self {
            dim,
            truncation,
            sectors,
        }
    }

    pub fn one_particle_dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn level_dim(&self, n: usize) -> usize {
        self.dim.pow(n as u32)
    }

    pub fn total_dim(&self) -> usize {
        (0..=self.truncation).map(|n| self.level_dim(n)).sum()
    }

    /// Offset of level `n` inside the concatenated truncated Fock space.
    pub fn level_offset(&self, n: usize) -> usize {
        (0..n).map(|k| self.level_dim(k)).sum()
    }

    pub fn word(&self, n: usize, index: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        let mut w = index;
        for slot in (0..n).rev() {
            out[slot] = w % self.dim;
            w /= self.dim;
        }
        out
    }

    pub fn index(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &a| acc * self.dim + a)
    }

    pub fn words(&self, n: usize) -> Vec<Vec<usize>> {
        (0..self.level_dim(n)).map(|i| self.word(n, i)).collect()
    }

    pub fn sector_word(&self, n: usize, index: usize) -> Vec<usize> {
        self.word(n, index)
            .into_iter()
            .map(|a| self.sectors[a])
            .collect()
    }

    pub fn sector(&self, letter: usize) -> usize {
        self.sectors[letter]
    }

    /// Stride of slot `slot` (0-based) in a level-`n` index.
    fn stride(&self, n: usize, slot: usize) -> usize {
        self.dim.pow((n - 1 - slot) as u32)
    }
}

/// A real operator on `H (x) H`, stored sparsely: for each input pair
/// `a*d + b` the list of `(output pair, coefficient)`.
#[derive(Clone, Debug)]
pub struct Twist {
    dim: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl Twist {
    /// `f_a (x) f_b -> q_{s(a) s(b)} f_b (x) f_a`.
    pub fn from_model(model: &Model) -> Self {
        let d = model.dim();
        let entries = (0..d * d)
            .map(|p| {
                let (a, b) = (p / d, p % d);
                let q = model.q(model.sector_of(a), model.sector_of(b));
                if q == 0.0 {
                    Vec::new()
                } else {
                    vec![(b * d + a, q)]
                }
            })
            .collect();
        Self { dim: d, entries }
    }

    /// Adds a symmetric non-flip coupling `f_0 (x) f_0 <-> f_0 (x) f_1` of
    /// size `delta`.  Used as a negative control: the result is still
    /// self-adjoint but no longer satisfies the braid relation.
    pub fn corrupted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        if self.dim < 2 {
            return out;
        }
        let (p, r) = (0, 1);
        out.entries[p].push((r, delta));
        out.entries[r].push((p, delta));
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim * self.dim;
        let mut m = CMat::zeros(n, n);
        for (p, row) in self.entries.iter().enumerate() {
            for &(o, c) in row {
                m[(o, p)] += re(c);
            }
        }
        m
    }

    /// Applies `T` on slots `(slot, slot+1)` of the level-`n` basis word `w`.
    fn apply_to_word(&self, basis: &WordBasis, n: usize, slot: usize, w: usize, coef: f64, out: &mut SparseVec) {
        let d = self.dim;
        let s0 = basis.stride(n, slot);
        let s1 = basis.stride(n, slot + 1);
        let a = (w / s0) % d;
        let b = (w / s1) % d;
        let base = w - a * s0 - b * s1;
        for &(o, c) in &self.entries[a * d + b] {
            let idx = base + (o / d) * s0 + (o % d) * s1;
            *out.entry(idx).or_insert(0.0) += coef * c;
        }
    }

    fn apply_sparse(&self, basis: &WordBasis, n: usize, slot: usize, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&w, &c) in v {
            self.apply_to_word(basis, n, slot, w, c, &mut out);
        }
        out
    }
}

/// Sparse real vector on one level; ordered so accumulation is deterministic.
pub type SparseVec = BTreeMap<usize, f64>;

fn unit(w: usize) -> SparseVec {
    let mut v = SparseVec::new();
    v.insert(w, 1.0);
    v
}

fn add_into(acc: &mut SparseVec, v: &SparseVec) {
    for (&k, &c) in v {
        *acc.entry(k).or_insert(0.0) += c;
    }
}

/// A dense operator on a single level.
#[derive(Clone, Debug)]
pub struct LevelOperator {
    pub level: usize,
    pub matrix: CMat,
}

impl LevelOperator {
    fn from_columns(level: usize, dim: usize, cols: &[SparseVec]) -> Self {
        let mut m = CMat::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            for (&i, &c) in col {
                m[(i, j)] += re(c);
            }
        }
        Self { level, matrix: m }
    }
}

/// Cached Cholesky factor `P^(n) = L L^*` and its derived frames.
#[derive(Debug)]
pub struct LevelFactor {
    chol: Cholesky<C64, Dyn>,
    l_adj: CMat,
    l_adj_inv: OnceLock<CMat>,
}

impl LevelFactor {
    /// `L^*`: maps level coordinates to a frame where `<.,.>_T` is Euclidean.
    pub fn l_adj(&self) -> &CMat {
        &self.l_adj
    }

    /// `L^{-*}`: back from the Euclidean frame.
    pub fn l_adj_inv(&self) -> &CMat {
        self.l_adj_inv.get_or_init(|| {
            let n = self.l_adj.nrows();
            self.l_adj
                .solve_upper_triangular(&CMat::identity(n, n))
                .expect("Cholesky factor has a nonzero diagonal")
        })
    }

    /// `P^{-1} rhs`.
    pub fn solve(&self, rhs: &CMat) -> CMat {
        self.chol.solve(rhs)
    }
}

/// `P^(n)` for every level up to the truncation, with positivity data.
#[derive(Debug)]
pub struct TwistKernel {
    p: Vec<LevelOperator>,
    min_eigenvalues: Vec<f64>,
    factors: Vec<OnceLock<Option<LevelFactor>>>,
}

impl TwistKernel {
    /// Builds `P^(n)` through `P^(n) = (1 (x) P^(n-1)) R_n`, with the ladder
    /// `R_n = 1 + T_1 + T_1 T_2 + .. + T_1 .. T_{n-1}`.
    pub fn build(basis: &WordBasis, twist: &Twist) -> Self {
        let top = basis.truncation();
        let mut p: Vec<LevelOperator> = Vec::with_capacity(top + 1);
        for n in 0..=top {
            let dim = basis.level_dim(n);
            if n <= 1 {
                p.push(LevelOperator {
                    level: n,
                    matrix: CMat::identity(dim, dim),
                });
                continue;
            }
            let prev = &p[n - 1].matrix;
            let tail = basis.level_dim(n - 1);
            let cols: Vec<Vec<C64>> = (0..dim)
                .into_par_iter()
                .map(|j| {
                    let ladder = ladder_column(basis, twist, n, j);
                    let mut col = vec![ZERO; dim];
                    for (&w, &c) in &ladder {
                        let head = w / tail;
                        let rest = w % tail;
                        let src = prev.column(rest);
                        let dst = &mut col[head * tail..(head + 1) * tail];
                        for (x, y) in dst.iter_mut().zip(src.iter()) {
                            *x += *y * c;
                        }
                    }
                    col
                })
                .collect();
            let mut m = CMat::zeros(dim, dim);
            for (j, col) in cols.into_iter().enumerate() {
                m.set_column(j, &CVec::from_vec(col));
            }
            let sym = (&m + m.adjoint()).scale(0.5);
            p.push(LevelOperator { level: n, matrix: sym });
        }
        let min_eigenvalues = p
            .par_iter()
            .map(|op| blockwise_min_eigenvalue(&op.matrix))
            .collect();
        let factors = (0..=top).map(|_| OnceLock::new()).collect();
        Self {
            p,
            min_eigenvalues,
            factors,
        }
    }

    pub fn p(&self, n: usize) -> &CMat {
        &self.p[n].matrix
    }

    pub fn min_eigenvalue(&self, n: usize) -> f64 {
        self.min_eigenvalues[n]
    }

    pub fn factor(&self, n: usize) -> Result<&LevelFactor> {
        self.factors[n]
            .get_or_init(|| {
                let chol = Cholesky::new(self.p[n].matrix.clone())?;
                let l_adj = chol.l().adjoint();
                Some(LevelFactor {
                    chol,
                    l_adj,
                    l_adj_inv: OnceLock::new(),
                })
            })
            .as_ref()
            .ok_or(Error::NotPositive {
                level: n,
                min_eigenvalue: self.min_eigenvalues[n],
            })
    }
}

/// `R_n e_j` as a sparse column, via Horner: `R_n = 1 + T_1 (1 + T_2 (1 + ..))`.
fn ladder_column(basis: &WordBasis, twist: &Twist, n: usize, j: usize) -> SparseVec {
    let e = unit(j);
    let mut acc = e.clone();
    for slot in (0..n - 1).rev() {
        let mut next = twist.apply_sparse(basis, n, slot, &acc);
        add_into(&mut next, &e);
        acc = next;
    }
    acc
}

/// Minimum eigenvalue of a Hermitian matrix computed over the connected
/// components of its sparsity pattern.
fn blockwise_min_eigenvalue(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .values()
        .map(|idx| {
            let sub = CMat::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
            hermitian_eigen(&sub).0[0]
        })
        .fold(f64::INFINITY, f64::min)
}

/// A vector of the truncated Fock space, one block per level.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub levels: Vec<CVec>,
}

impl FockVector {
    pub fn zeros(basis: &WordBasis) -> Self {
        Self {
            levels: (0..=basis.truncation())
                .map(|n| CVec::zeros(basis.level_dim(n)))
                .collect(),
        }
    }

    pub fn vacuum(basis: &WordBasis) -> Self {
        let mut v = Self::zeros(basis);
        v.levels[0][0] = ONE;
        v
    }

    pub fn on_level(basis: &WordBasis, n: usize, v: CVec) -> Self {
        let mut out = Self::zeros(basis);
        out.levels[n] = v;
        out
    }

    /// Simple tensor `x_1 (x) .. (x) x_n` of frame-coordinate letters.
    pub fn tensor(basis: &WordBasis, letters: &[CVec]) -> Self {
        let mut acc = CVec::from_element(1, ONE);
        for x in letters {
            acc = acc.kronecker(x);
        }
        Self::on_level(basis, letters.len(), acc)
    }

    pub fn axpy(&mut self, a: C64, other: &Self) {
        for (x, y) in self.levels.iter_mut().zip(&other.levels) {
            x.axpy(a, y, ONE);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-ONE, other);
        out
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }
}

/// The truncated Fock space of a model: frame, word basis, twist and kernel.
#[derive(Debug)]
pub struct FockSpace {
    model: Model,
    basis: WordBasis,
    twist: Twist,
    kernel: TwistKernel,
}

impl FockSpace {
    pub fn new(model: Model) -> Self {
        let twist = Twist::from_model(&model);
        Self::with_twist(model, twist)
    }

    pub fn with_twist(model: Model, twist: Twist) -> Self {
        let basis = WordBasis::new(
            model.dim(),
            model.truncation(),
            model.sector_labels().to_vec(),
        );
        let kernel = TwistKernel::build(&basis, &twist);
        Self {
            model,
            basis,
            twist,
            kernel,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn basis(&self) -> &WordBasis {
        &self.basis
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn kernel(&self) -> &TwistKernel {
        &self.kernel
    }

    pub fn truncation(&self) -> usize {
        self.basis.truncation()
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n > self.truncation() {
            return Err(Error::LevelExceedsTruncation {
                level: n,
                truncation: self.truncation(),
            });
        }
        Ok(())
    }

    /// `<x, y>_T`, summed over levels.
    pub fn inner(&self, x: &FockVector, y: &FockVector) -> C64 {
        x.levels
            .iter()
            .zip(&y.levels)
            .enumerate()
            .map(|(n, (a, b))| a.dotc(&(self.kernel.p(n) * b)))
            .sum()
    }

    pub fn norm(&self, x: &FockVector) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }
}

/// `T` on level 2.
pub fn twist_matrix(fs: &FockSpace) -> LevelOperator {
    LevelOperator {
        level: 2,
        matrix: fs.twist.to_dense(),
    }
}

/// `T_i = 1 (x) .. (x) T (x) .. (x) 1` acting on slots `(i, i+1)`, 1-based.
pub fn extend_twist(fs: &FockSpace, i: usize, n: usize) -> Result<LevelOperator> {
    fs.check_level(n)?;
    if i == 0 || i + 1 > n {
        return Err(Error::IndexOutOfRange {
            what: "twist position",
            index: i,
            limit: n.saturating_sub(1),
        });
    }
    let dim = fs.basis.level_dim(n);
    let cols: Vec<SparseVec> = (0..dim)
        .map(|w| fs.twist.apply_sparse(&fs.basis, n, i - 1, &unit(w)))
        .collect();
    Ok(LevelOperator::from_columns(n, dim, &cols))
}

fn pi_word_columns(fs: &FockSpace, word: &[usize], n: usize) -> Vec<SparseVec> {
    (0..fs.basis.level_dim(n))
        .map(|w| {
            word.iter().rev().fold(unit(w), |v, &slot| {
                fs.twist.apply_sparse(&fs.basis, n, slot, &v)
            })
        })
        .collect()
}

/// `pi(sigma) = T_{i_1} .. T_{i_k}` along the canonical (first-descent)
/// reduced word of `sigma`.
pub fn pi_sigma(fs: &FockSpace, sigma: &Permutation, n: usize) -> Result<LevelOperator> {
    pi_sigma_with(fs, sigma, n, Sweep::FirstDescent)
}

pub fn pi_sigma_with(
    fs: &FockSpace,
    sigma: &Permutation,
    n: usize,
    sweep: Sweep,
) -> Result<LevelOperator> {
    fs.check_level(n)?;
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(sigma.images().to_vec()));
    }
    let word = sigma.reduced_word(sweep);
    let cols = pi_word_columns(fs, &word, n);
    Ok(LevelOperator::from_columns(n, fs.basis.level_dim(n), &cols))
}

/// `P^(n)` from the ladder factorisation.
pub fn p_matrix(fs: &FockSpace, n: usize) -> Result<LevelOperator> {
    fs.check_level(n)?;
    Ok(fs.kernel.p[n].clone())
}

/// `sum_{sigma in S_n} pi(sigma)` term by term; the factorial-cost oracle
/// for [`p_matrix`].
pub fn brute_force_p(fs: &FockSpace, n: usize) -> Result<LevelOperator> {
    fs.check_level(n)?;
    let dim = fs.basis.level_dim(n);
    let mut cols = vec![SparseVec::new(); dim];
    for sigma in symmetric_group(n) {
        let word = sigma.reduced_word(Sweep::FirstDescent);
        for (acc, col) in cols.iter_mut().zip(pi_word_columns(fs, &word, n)) {
            add_into(acc, &col);
        }
    }
    Ok(LevelOperator::from_columns(n, dim, &cols))
}

/// `<xi, eta>_T` for homogeneous vectors on levels `m` and `n`.
pub fn inner_t(fs: &FockSpace, m: usize, xi: &CVec, n: usize, eta: &CVec) -> Result<C64> {
    fs.check_level(m)?;
    fs.check_level(n)?;
    for (lvl, v) in [(m, xi), (n, eta)] {
        let want = fs.basis.level_dim(lvl);
        if v.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: v.len(),
            });
        }
    }
    if m != n {
        return Ok(ZERO);
    }
    Ok(xi.dotc(&(fs.kernel.p(n) * eta)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub level: usize,
    pub min_eigenvalue: f64,
    pub degenerate: bool,
}

pub fn check_positivity(fs: &FockSpace, n: usize) -> Result<PositivityReport> {
    fs.check_level(n)?;
    let min = fs.kernel.min_eigenvalue(n);
    Ok(PositivityReport {
        level: n,
        min_eigenvalue: min,
        degenerate: !(min > POSITIVITY_TOL),
    })
}

/// Operator-norm residual of the braid relation
/// `(1 (x) T)(T (x) 1)(1 (x) T) = (T (x) 1)(1 (x) T)(T (x) 1)` on `H^{(x)3}`.
pub fn check_yang_baxter(fs: &FockSpace) -> f64 {
    let d = fs.basis.one_particle_dim();
    let basis = WordBasis::new(d, 3, fs.basis.sectors.clone());
    let slot_op = |slot: usize| {
        let dim = basis.level_dim(3);
        let cols: Vec<SparseVec> = (0..dim)
            .map(|w| fs.twist.apply_sparse(&basis, 3, slot, &unit(w)))
            .collect();
        LevelOperator::from_columns(3, dim, &cols).matrix
    };
    let t1 = slot_op(0);
    let t2 = slot_op(1);
    let lhs = &t2 * &t1 * &t2;
    let rhs = &t1 * &t2 * &t1;
    spectral_norm(&(lhs - rhs))
}
