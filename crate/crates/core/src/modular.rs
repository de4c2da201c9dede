//! Tomita-Takesaki data of the vacuum on the truncated Fock space and the
//! vacuum-preserving conditional expectations onto invariant subspaces.
//!
//! Antilinear maps are stored as a matrix `M` acting by `c -> M conj(c)` on
//! the word coordinates of each level.  Level `n` is exact for every
//! `n <= N`: `S` only involves the annihilation part of Wick words.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::linalg::{
    conj_mat, hermitian_eigen, matmul, orthonormal_span, re, spectral_norm, CMat, CVec,
    C64, ONE, ZERO,
};
use crate::ops::{adjoint_t, field_d, field_s, norm_t, wick_s, FockOperator, Side, WickWord};

/// Levels kept clear of the truncation ceiling when checking modular identities.
pub const G_MOD: usize = 2;

const INVARIANCE_TOL: f64 = 1e-10;
const T_GRID: [f64; 5] = [-1.0, -0.3, 0.3, 1.0, 2.5];

#[derive(Clone, Debug)]
struct Level {
    /// `S(c) = s conj(c)`.
    s: CMat,
    delta: CMat,
    /// `J(c) = j conj(c)`.
    j: CMat,
    /// Spectral data of `Delta` in the Euclidean frame `x -> L^* x`.
    delta_eigen: (Vec<f64>, CMat),
}

#[derive(Clone, Debug)]
pub struct ModularData {
    pub g_mod: usize,
    levels: Vec<Level>,
}

/// Residuals describing how well the reconstructed data hang together,
/// measured in the Frobenius norm of the Euclidean frame.
#[derive(Clone, Debug, Default)]
pub struct ModularDiagnostics {
    pub s_squared: f64,
    pub polar: f64,
    pub j_squared: f64,
    pub j_vacuum: f64,
    pub delta_vacuum: f64,
    pub min_delta_eigenvalue: f64,
    /// Per level, `|Delta - (A^{-1})^{(x)n}|` in the Euclidean frame.
    pub delta_vs_tensor: Vec<f64>,
    /// Per level, `|S - (word reversal with J on each letter)|`.
    pub s_vs_reversal: Vec<f64>,
}

/// `P^(n) S(f_w)` for every word, level by level:
/// `Y_n[:, (p, a)] = (B_a)^* Y_{n-1}[:, p]` with `B_a` the level-`n` block of
/// `l^*(J f_a)`.
fn tomita_rows(fs: &FockSpace) -> Result<Vec<CMat>> {
    let model = fs.model();
    let basis = fs.basis();
    let d = model.dim();
    let jm = model.conj_in_frame();
    let mut ys = vec![CMat::from_element(1, 1, ONE)];
    let annihilators: Vec<FockOperator> = (0..d)
        .map(|a| {
            let jfa = model.from_frame(&jm.column(a).into_owned());
            crate::ops::left_annihilate(fs, &jfa)
        })
        .collect::<Result<_>>()?;
    for n in 1..=fs.truncation() {
        let prev = &ys[n - 1];
        let mut y = CMat::zeros(basis.level_dim(n), basis.level_dim(n));
        for (a, op) in annihilators.iter().enumerate() {
            let b = op.block(n - 1, n).expect("annihilator has every block");
            let cols = matmul(&b.adjoint(), prev);
            for p in 0..prev.ncols() {
                y.set_column(p * d + a, &cols.column(p));
            }
        }
        ys.push(y);
    }
    Ok(ys)
}

/// The matrices of `S` per level, from the fast recursion.
pub fn tomita_s(fs: &FockSpace) -> Result<Vec<CMat>> {
    let ys = tomita_rows(fs)?;
    ys.iter()
        .enumerate()
        .map(|(n, y)| Ok(fs.kernel().factor(n)?.solve(y)))
        .collect()
}

/// `S` on one level straight from the definition `S(x Omega) = x^* Omega`,
/// with `x` the Wick word of each basis word.
pub fn tomita_s_literal(fs: &FockSpace, n: usize) -> Result<CMat> {
    fs.check_level(n)?;
    let basis = fs.basis();
    let omega = FockVector::vacuum(basis);
    let mut m = CMat::zeros(basis.level_dim(n), basis.level_dim(n));
    for w in 0..basis.level_dim(n) {
        let word = WickWord::frame_word(fs, &basis.word(n, w), Side::Left)?;
        let x = wick_s(fs, &word)?;
        let v = adjoint_t(fs, &x)?.apply(&omega);
        m.set_column(w, &v.levels[n]);
    }
    Ok(m)
}

fn build_level(fs: &FockSpace, n: usize, y: &CMat) -> Result<Level> {
    let f = fs.kernel().factor(n)?;
    let l_inv = f.l_adj_inv().adjoint();
    let s = f.solve(y);
    let s_t = mm3(&l_inv, y, &conj_mat(f.l_adj_inv()));
    let delta_t = matmul(&s_t.transpose(), &conj_mat(&s_t));
    let (vals, vecs) = hermitian_eigen(&delta_t);
    let min = vals.first().copied().unwrap_or(1.0);
    if min <= 0.0 {
        return Err(Error::ModularNotPositive {
            level: n,
            min_eigenvalue: min,
        });
    }
    let inv_sqrt = spectral_fn(&vals, &vecs, |x| re(x.powf(-0.5)));
    let j_t = matmul(&s_t, &conj_mat(&inv_sqrt));
    let delta = mm3(f.l_adj_inv(), &spectral_fn(&vals, &vecs, re), f.l_adj());
    let j = mm3(f.l_adj_inv(), &j_t, &conj_mat(f.l_adj()));
    Ok(Level {
        s,
        delta,
        j,
        delta_eigen: (vals, vecs),
    })
}

fn spectral_fn(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let mut scaled = vecs.clone();
    for (k, &v) in vals.iter().enumerate() {
        let fv = f(v);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= fv);
    }
    matmul(&scaled, &vecs.adjoint())
}

fn mm3(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    matmul(&matmul(a, b), c)
}

/// `S`, `Delta = S^* S` and `J = S Delta^{-1/2}` on every level.
pub fn modular_data(fs: &FockSpace) -> Result<ModularData> {
    let ys = tomita_rows(fs)?;
    let levels = ys
        .par_iter()
        .enumerate()
        .map(|(n, y)| build_level(fs, n, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModularData {
        g_mod: G_MOD,
        levels,
    })
}

impl ModularData {
    pub fn truncation(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn s_matrix(&self, n: usize) -> &CMat {
        &self.levels[n].s
    }

    pub fn delta(&self, n: usize) -> &CMat {
        &self.levels[n].delta
    }

    pub fn j_matrix(&self, n: usize) -> &CMat {
        &self.levels[n].j
    }

    pub fn min_delta_eigenvalue(&self) -> f64 {
        self.levels
            .iter()
            .filter_map(|l| l.delta_eigen.0.first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest level on which modular identities are asserted.
    pub fn guard_level(&self) -> usize {
        self.truncation().saturating_sub(self.g_mod)
    }

    pub fn apply_s(&self, v: &FockVector) -> FockVector {
        antilinear(v, |n| &self.levels[n].s)
    }

    pub fn apply_j(&self, v: &FockVector) -> FockVector {
        antilinear(v, |n| &self.levels[n].j)
    }

    /// `Delta^{z}` level by level, for complex `z`.
    pub fn delta_power(&self, fs: &FockSpace, z: C64) -> Result<FockOperator> {
        let mut op = FockOperator::zero(fs.basis());
        for (n, l) in self.levels.iter().enumerate() {
            let f = fs.kernel().factor(n)?;
            let (vals, vecs) = &l.delta_eigen;
            let tilde = spectral_fn(vals, vecs, |x| (re(x.ln()) * z).exp());
            op.add_block(n, n, mm3(f.l_adj_inv(), &tilde, f.l_adj()));
        }
        Ok(op)
    }

    /// `J x J`, which is again linear.
    pub fn conjugate_by_j(&self, x: &FockOperator) -> FockOperator {
        let mut out = FockOperator::zero_like(x);
        for (&(to, from), b) in x.blocks() {
            let m = mm3(&self.levels[to].j, &conj_mat(b), &conj_mat(&self.levels[from].j));
            out.add_block(to, from, m);
        }
        out
    }

    pub fn diagnostics(&self, fs: &FockSpace) -> Result<ModularDiagnostics> {
        let model = fs.model();
        let a_inv = model.operator_in_frame(&model.spectral(|x| re(1.0 / x)));
        let jm = model.conj_in_frame();
        let mut out = ModularDiagnostics {
            min_delta_eigenvalue: self.min_delta_eigenvalue(),
            ..Default::default()
        };
        let mut a_pow = CMat::from_element(1, 1, ONE);
        let mut j_pow = CMat::from_element(1, 1, ONE);
        for (n, l) in self.levels.iter().enumerate() {
            let f = fs.kernel().factor(n)?;
            let tilde = |m: &CMat| mm3(f.l_adj(), m, f.l_adj_inv());
            let anti_tilde = |m: &CMat| mm3(f.l_adj(), m, &conj_mat(f.l_adj_inv()));
            let s_t = anti_tilde(&l.s);
            let j_t = anti_tilde(&l.j);
            let dim = s_t.nrows();
            let id = CMat::identity(dim, dim);
            out.s_squared = out.s_squared.max((matmul(&s_t, &conj_mat(&s_t)) - &id).norm());
            out.j_squared = out.j_squared.max((matmul(&j_t, &conj_mat(&j_t)) - &id).norm());
            let sqrt = spectral_fn(&l.delta_eigen.0, &l.delta_eigen.1, |x| re(x.sqrt()));
            out.polar = out.polar.max((matmul(&j_t, &conj_mat(&sqrt)) - &s_t).norm());
            if n > 0 {
                a_pow = a_inv.kronecker(&a_pow);
                j_pow = jm.kronecker(&j_pow);
            }
            out.delta_vs_tensor.push(tilde(&(&l.delta - &a_pow)).norm());
            let reversal = CMat::from_fn(dim, dim, |i, w| {
                let word = fs.basis().word(n, w);
                let rev: Vec<usize> = word.iter().rev().copied().collect();
                if i == fs.basis().index(&rev) {
                    ONE
                } else {
                    ZERO
                }
            });
            out.s_vs_reversal
                .push(anti_tilde(&(&l.s - matmul(&j_pow, &reversal))).norm());
        }
        let omega = FockVector::vacuum(fs.basis());
        out.j_vacuum = fs.norm(&self.apply_j(&omega).sub(&omega));
        let delta_omega = self.levels[0].delta[(0, 0)];
        out.delta_vacuum = (delta_omega - ONE).norm();
        Ok(out)
    }
}

fn antilinear<'a>(v: &FockVector, m: impl Fn(usize) -> &'a CMat) -> FockVector {
    FockVector {
        levels: v
            .levels
            .iter()
            .enumerate()
            .map(|(n, x)| m(n) * x.map(|z| z.conj()))
            .collect(),
    }
}

/// `|J s(xi) J - d(A^{-1/2} xi)|_T` on levels `<= N - g_mod`.
pub fn check_commutant_relation(fs: &FockSpace, md: &ModularData, xi: &CVec) -> Result<f64> {
    let lhs = md.conjugate_by_j(&field_s(fs, xi)?);
    let eta = fs.model().commutant_vector(xi)?;
    let rhs = field_d(fs, &eta)?;
    norm_t(fs, &(&lhs - &rhs), md.guard_level())
}

/// `|Delta^{it} s(xi) Delta^{-it} - s(U_{-t} xi)|_T` on levels `<= N - g_mod`.
pub fn modular_flow(fs: &FockSpace, md: &ModularData, t: f64, xi: &CVec) -> Result<f64> {
    let s = field_s(fs, xi)?;
    let lhs = &(&md.delta_power(fs, C64::new(0.0, t))? * &s) * &md.delta_power(fs, C64::new(0.0, -t))?;
    let rhs = field_s(fs, &fs.model().apply_ut(-t, xi)?)?;
    norm_t(fs, &(&lhs - &rhs), md.guard_level())
}

/// The projection onto `F_T(D)` and a word basis of its complement, for a
/// `U_t`-invariant real subspace `D_R`.
#[derive(Debug)]
pub struct ExpectationData {
    /// Orthonormal real basis of `D_R`, in the real coordinate frame.
    d_real: CMat,
    /// Per level, the `<.,.>_T`-orthogonal projection onto `F_T(D)`.
    projections: Vec<CMat>,
    /// Per level, words of `H_R'` letters with at least one letter orthogonal to `D`.
    perp: Vec<CMat>,
    /// Per level, sine of the angle between `perp` and the direct complement.
    perp_angle: Vec<f64>,
    pub invariance_residual: f64,
    wick_cache: WickCache,
}

/// Wick operators of frame words, shareable between several subspaces of
/// one Fock space.
pub type WickCache = Arc<Mutex<BTreeMap<Vec<usize>, Arc<FockOperator>>>>;

/// Largest `|(1 - P_D) U_t P_D|` over a fixed grid of times.
pub fn invariance_residual(fs: &FockSpace, d_real: &CMat) -> f64 {
    let proj = d_real * d_real.adjoint();
    let id = CMat::identity(proj.nrows(), proj.ncols());
    T_GRID
        .iter()
        .map(|&t| spectral_norm(&((&id - &proj) * fs.model().ut_matrix(t) * &proj)))
        .fold(0.0, f64::max)
}

impl ExpectationData {
    /// `spanning` are real vectors spanning `D_R`.
    pub fn new(fs: &FockSpace, spanning: &[CVec]) -> Result<Self> {
        let model = fs.model();
        let dim = model.dim();
        for v in spanning {
            model.check_dim(v)?;
            model.check_real(v)?;
        }
        let raw = CMat::from_fn(dim, spanning.len(), |i, j| re(spanning[j][i].re));
        let d_real = orthonormal_span(&raw, 1e-12);
        let residual = invariance_residual(fs, &d_real);
        if residual > INVARIANCE_TOL {
            return Err(Error::NotInvariant(residual));
        }
        let k = d_real.ncols();
        let complement = real_complement(&d_real);
        let a_is = model.a_inv_sqrt();
        let to_frame = |m: &CMat| frame_of(model, m);
        let d_frame = to_frame(&d_real);
        let mut letters = CMat::zeros(dim, dim);
        letters.columns_mut(0, k).copy_from(&to_frame(&(&a_is * &d_real)));
        letters
            .columns_mut(k, dim - k)
            .copy_from(&to_frame(&(&a_is * &complement)));

        let basis = fs.basis();
        let per_level = (0..=fs.truncation())
            .into_par_iter()
            .map(|n| -> Result<(CMat, CMat, f64)> {
                let p = fs.kernel().p(n);
                fs.kernel().factor(n)?;
                let b = tensor_power(&d_frame, n);
                let proj = if b.ncols() == 0 {
                    CMat::zeros(p.nrows(), p.ncols())
                } else {
                    let gram = mm3(&b.adjoint(), p, &b);
                    let inv = gram.lu().try_inverse().ok_or_else(|| Error::RankDeficient {
                        level: n,
                        detail: "Gram matrix of D-words singular".into(),
                    })?;
                    mm3(&matmul(&b, &inv), &b.adjoint(), p)
                };
                let all = tensor_power(&letters, n);
                let keep: Vec<usize> = (0..basis.level_dim(n))
                    .filter(|&w| basis.word(n, w).iter().any(|&a| a >= k))
                    .collect();
                let perp = CMat::from_fn(all.nrows(), keep.len(), |i, j| all[(i, keep[j])]);
                let angle = if perp.ncols() == 0 || b.ncols() == 0 {
                    0.0
                } else {
                    let pw = matmul(p, &perp);
                    perp_sin_angle(&mm3(&b.adjoint(), p, &b), &matmul(&b.adjoint(), &pw), &matmul(&perp.adjoint(), &pw))
                };
                Ok((proj, perp, angle))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut projections = Vec::new();
        let mut perp = Vec::new();
        let mut perp_angle = Vec::new();
        for (a, b, c) in per_level {
            projections.push(a);
            perp.push(b);
            perp_angle.push(c);
        }
        Ok(Self {
            d_real,
            projections,
            perp,
            perp_angle,
            invariance_residual: residual,
            wick_cache: WickCache::default(),
        })
    }

    /// Replaces the operator cache, e.g. with one shared by other subspaces
    /// of the same Fock space.
    pub fn with_cache(mut self, cache: WickCache) -> Self {
        self.wick_cache = cache;
        self
    }

    pub fn d_real(&self) -> &CMat {
        &self.d_real
    }

    pub fn projection(&self, n: usize) -> &CMat {
        &self.projections[n]
    }

    pub fn perp_basis(&self, n: usize) -> &CMat {
        &self.perp[n]
    }

    pub fn perp_angle(&self) -> f64 {
        self.perp_angle.iter().copied().fold(0.0, f64::max)
    }

    pub fn project(&self, v: &FockVector) -> FockVector {
        FockVector {
            levels: v
                .levels
                .iter()
                .zip(&self.projections)
                .map(|(x, p)| p * x)
                .collect(),
        }
    }

    fn wick(&self, fs: &FockSpace, word: Vec<usize>) -> Result<Arc<FockOperator>> {
        if let Some(op) = self.wick_cache.lock().expect("cache poisoned").get(&word) {
            return Ok(op.clone());
        }
        let op = Arc::new(wick_s(fs, &WickWord::frame_word(fs, &word, Side::Left)?)?);
        self.wick_cache
            .lock()
            .expect("cache poisoned")
            .insert(word, op.clone());
        Ok(op)
    }

    /// The Wick operator whose vacuum image is `zeta`.
    pub fn quantize(&self, fs: &FockSpace, zeta: &FockVector) -> Result<FockOperator> {
        let basis = fs.basis();
        let scale = zeta
            .levels
            .iter()
            .flat_map(|l| l.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let mut out = FockOperator::identity(basis).scaled(zeta.levels[0][0]);
        for (n, level) in zeta.levels.iter().enumerate().skip(1) {
            for (w, &c) in level.iter().enumerate() {
                if c.norm() <= 1e-15 * scale {
                    continue;
                }
                out.add_scaled(&*self.wick(fs, basis.word(n, w))?, c);
            }
        }
        Ok(out)
    }
}

/// Sine of the largest angle between two subspaces given by their Gram
/// matrices and cross Gram matrix.  Returns 1 when the second is rank deficient.
fn perp_sin_angle(gram_b: &CMat, cross: &CMat, gram_w: &CMat) -> f64 {
    let (Some(cb), Some(cw)) = (gram_b.clone().cholesky(), gram_w.clone().cholesky()) else {
        return 1.0;
    };
    let diag = |l: &CMat| l.diagonal().iter().map(|z| z.re).fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (lo, hi) = diag(&cw.l());
    if lo <= 1e-7 * hi {
        return 1.0;
    }
    let x = cb.l().solve_lower_triangular(cross).expect("nonsingular factor");
    let y = cw.l().solve_lower_triangular(&x.adjoint()).expect("nonsingular factor");
    spectral_norm(&y).min(1.0)
}

fn frame_of(model: &crate::model::Model, m: &CMat) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        out.set_column(j, &model.to_frame(&m.column(j).into_owned()));
    }
    out
}

fn real_complement(q: &CMat) -> CMat {
    let dim = q.nrows();
    let proj = CMat::identity(dim, dim) - q * q.adjoint();
    orthonormal_span(&proj, 1e-8).map(|z| re(z.re))
}

fn tensor_power(m: &CMat, n: usize) -> CMat {
    (0..n).fold(CMat::from_element(1, 1, ONE), |acc, _| acc.kronecker(m))
}

/// `E(x)`: the Wick quantization of the projection of `x Omega` onto `F_T(D)`.
pub fn conditional_expectation(
    fs: &FockSpace,
    data: &ExpectationData,
    x: &FockOperator,
) -> Result<FockOperator> {
    let xo = x.apply(&FockVector::vacuum(fs.basis()));
    data.quantize(fs, &data.project(&xo))
}
