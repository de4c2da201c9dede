//! Creation, annihilation and field operators, Wick products and adjoints
//! on the truncated twisted Fock space.
//!
//! Operators are graded block matrices: block `(to, from)` maps level
//! `from` into level `to`.  Anything that would land above the truncation
//! level is dropped, so an identity involving an operator of creation
//! degree `g` is only meaningful on inputs of level `<= N - g`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector, WordBasis};
use crate::linalg::{conj_mat, matmul, spectral_norm, CMat, CVec, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dims: Vec<usize>,
    blocks: BTreeMap<(usize, usize), CMat>,
}

impl FockOperator {
    pub fn zero(basis: &WordBasis) -> Self {
        Self {
            dims: (0..=basis.truncation()).map(|n| basis.level_dim(n)).collect(),
            blocks: BTreeMap::new(),
        }
    }

    /// The zero operator on the same space as `other`.
    pub fn zero_like(other: &Self) -> Self {
        Self {
            dims: other.dims.clone(),
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(basis: &WordBasis) -> Self {
        let mut op = Self::zero(basis);
        for n in 0..op.dims.len() {
            let d = op.dims[n];
            op.blocks.insert((n, n), CMat::identity(d, d));
        }
        op
    }

    pub fn truncation(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn block(&self, to: usize, from: usize) -> Option<&CMat> {
        self.blocks.get(&(to, from))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &CMat)> {
        self.blocks.iter()
    }

    pub fn add_block(&mut self, to: usize, from: usize, m: CMat) {
        assert_eq!((m.nrows(), m.ncols()), (self.dims[to], self.dims[from]));
        match self.blocks.get_mut(&(to, from)) {
            Some(b) => *b += m,
            None => {
                self.blocks.insert((to, from), m);
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: C64) {
        assert_eq!(self.dims, other.dims);
        for (&key, m) in &other.blocks {
            match self.blocks.get_mut(&key) {
                Some(b) => b.zip_apply(m, |x, y| *x += y * c),
                None => {
                    self.blocks.insert(key, m * c);
                }
            }
        }
    }

    /// Largest `|to - from|` over the stored blocks.
    pub fn guard_degree(&self) -> usize {
        self.blocks
            .keys()
            .map(|&(to, from)| to.abs_diff(from))
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            blocks: self.blocks.iter().map(|(k, m)| (*k, m * c)).collect(),
        }
    }

    /// Entrywise complex conjugate of every block.
    pub fn conj_entries(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            blocks: self.blocks.iter().map(|(k, m)| (*k, conj_mat(m))).collect(),
        }
    }

    /// Conjugate transpose in word coordinates (the untwisted adjoint).
    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(&(to, from), m)| ((from, to), m.adjoint()))
                .collect(),
        }
    }

    /// Keeps only the blocks whose source level is at most `max_from`.
    pub fn restrict_source(&self, max_from: usize) -> Self {
        Self {
            dims: self.dims.clone(),
            blocks: self
                .blocks
                .iter()
                .filter(|(&(_, from), _)| from <= max_from)
                .map(|(k, m)| (*k, m.clone()))
                .collect(),
        }
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        let mut out = FockVector {
            levels: self.dims.iter().map(|&d| CVec::zeros(d)).collect(),
        };
        for (&(to, from), m) in &self.blocks {
            out.levels[to].gemv(ONE, m, &v.levels[from], ONE);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// The whole operator as one matrix on the concatenated levels.
    pub fn to_dense(&self) -> CMat {
        let offsets: Vec<usize> = self
            .dims
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        let total: usize = self.dims.iter().sum();
        let mut m = CMat::zeros(total, total);
        for (&(to, from), b) in &self.blocks {
            m.view_mut((offsets[to], offsets[from]), (b.nrows(), b.ncols()))
                .copy_from(b);
        }
        m
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        let mut out = self.clone();
        out.add_scaled(rhs, ONE);
        out
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        let mut out = self.clone();
        out.add_scaled(rhs, -ONE);
        out
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        let mut out = FockOperator {
            dims: self.dims.clone(),
            blocks: BTreeMap::new(),
        };
        for (&(mid, from), b) in &rhs.blocks {
            for (&(to, mid2), a) in self.blocks.range((0, mid)..) {
                if mid2 != mid {
                    continue;
                }
                out.add_block(to, from, matmul(a, b));
            }
        }
        out
    }
}

fn frame_coords(fs: &FockSpace, xi: &CVec) -> Result<CVec> {
    fs.model().check_dim(xi)?;
    Ok(fs.model().to_frame(xi))
}

/// `l(xi)`: prepends `xi`; level `N` is sent to zero.
pub fn left_create(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    let c = frame_coords(fs, xi)?;
    let basis = fs.basis();
    let mut op = FockOperator::zero(basis);
    for n in 0..fs.truncation() {
        let id = CMat::identity(basis.level_dim(n), basis.level_dim(n));
        op.add_block(n + 1, n, CMat::from_column_slice(c.len(), 1, c.as_slice()).kronecker(&id));
    }
    Ok(op)
}

/// `r(xi)`: appends `xi`; level `N` is sent to zero.
pub fn right_create(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    let c = frame_coords(fs, xi)?;
    let basis = fs.basis();
    let mut op = FockOperator::zero(basis);
    for n in 0..fs.truncation() {
        let id = CMat::identity(basis.level_dim(n), basis.level_dim(n));
        op.add_block(n + 1, n, id.kronecker(&CMat::from_column_slice(c.len(), 1, c.as_slice())));
    }
    Ok(op)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Removes one letter from each word with the twisted weight: on
/// `x_{i_1} (x) .. (x) x_{i_n}` the `k`-th term carries `<xi, x_{i_k}>_U`
/// times the `q` of every letter the removed one crosses on its way out
/// (to the left for `Side::Left`, to the right for `Side::Right`).
fn annihilate(fs: &FockSpace, xi: &CVec, side: Side) -> Result<FockOperator> {
    let c = frame_coords(fs, xi)?;
    let basis = fs.basis();
    let model = fs.model();
    let mut op = FockOperator::zero(basis);
    for n in 1..=fs.truncation() {
        let mut m = CMat::zeros(basis.level_dim(n - 1), basis.level_dim(n));
        for w in 0..basis.level_dim(n) {
            let word = basis.word(n, w);
            for k in 0..n {
                let a = word[k];
                let overlap = c[a].conj();
                if overlap == ZERO {
                    continue;
                }
                let sa = model.sector_of(a);
                let crossed: Box<dyn Iterator<Item = &usize>> = match side {
                    Side::Left => Box::new(word[..k].iter()),
                    Side::Right => Box::new(word[k + 1..].iter()),
                };
                let weight: f64 = crossed.map(|&b| model.q(sa, model.sector_of(b))).product();
                if weight == 0.0 {
                    continue;
                }
                let rest: Vec<usize> = word[..k].iter().chain(&word[k + 1..]).copied().collect();
                m[(basis.index(&rest), w)] += overlap * weight;
            }
        }
        op.add_block(n - 1, n, m);
    }
    Ok(op)
}

/// `l^*(xi)`, with the crossing weights `q_{i_k i_{k-1}} .. q_{i_k i_1}`.
pub fn left_annihilate(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    annihilate(fs, xi, Side::Left)
}

/// `r^*(xi)`, with the crossing weights `q_{i_k i_{k+1}} .. q_{i_k i_n}`.
pub fn right_annihilate(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    annihilate(fs, xi, Side::Right)
}

/// `s(xi) = l(xi) + l^*(xi)` for real `xi`.
pub fn field_s(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    fs.model().check_dim(xi)?;
    fs.model().check_real(xi)?;
    Ok(&left_create(fs, xi)? + &left_annihilate(fs, xi)?)
}

/// `d(eta) = r(eta) + r^*(eta)` for `eta` in `H_R'`.
pub fn field_d(fs: &FockSpace, eta: &CVec) -> Result<FockOperator> {
    fs.model().check_commutant(eta)?;
    Ok(&right_create(fs, eta)? + &right_annihilate(fs, eta)?)
}

/// Complex-linear extension `l(xi) + l^*(J xi)` of `s`.
pub fn field_s_linear(fs: &FockSpace, xi: &CVec) -> Result<FockOperator> {
    let jx = fs.model().conj(xi);
    Ok(&left_create(fs, xi)? + &left_annihilate(fs, &jx)?)
}

/// Complex-linear extension `r(eta) + r^*(J_r eta)` of `d`.
pub fn field_d_linear(fs: &FockSpace, eta: &CVec) -> Result<FockOperator> {
    let jr = fs.model().conj_commutant(eta);
    Ok(&right_create(fs, eta)? + &right_annihilate(fs, &jr)?)
}

/// Product of `q_{t_i t_j}` over the pairs `(i in I, j in J)` with `i > j`
/// (`Side::Left`) or `i < j` (`Side::Right`).  Positions are 0-based and
/// `I`, `J` must partition `0..labels.len()`, each sorted ascending.
pub fn crossing_coefficient(
    q: &[Vec<f64>],
    labels: &[usize],
    creators: &[usize],
    annihilators: &[usize],
    side: Side,
) -> Result<f64> {
    let n = labels.len();
    let mut seen = vec![false; n];
    let mut valid = creators.windows(2).all(|w| w[0] < w[1])
        && annihilators.windows(2).all(|w| w[0] < w[1]);
    for &k in creators.iter().chain(annihilators) {
        if k >= n || seen[k] {
            valid = false;
            break;
        }
        seen[k] = true;
    }
    if !valid || seen.iter().any(|s| !s) {
        return Err(Error::InvalidSplit {
            n,
            i: creators.to_vec(),
            j: annihilators.to_vec(),
        });
    }
    let mut f = 1.0;
    for &i in creators {
        for &j in annihilators {
            let crosses = match side {
                Side::Left => i > j,
                Side::Right => i < j,
            };
            if crosses {
                f *= q[labels[i]][labels[j]];
            }
        }
    }
    Ok(f)
}

/// One letter of a Wick word: a vector in the real coordinate frame
/// together with the sector carrying it.
#[derive(Clone, Debug, PartialEq)]
pub struct Letter {
    pub vector: CVec,
    pub sector: usize,
}

/// A tensor word `x_1 (x) .. (x) x_n` of sector-labelled letters.
#[derive(Clone, Debug, PartialEq)]
pub struct WickWord {
    letters: Vec<Letter>,
    side: Side,
}

impl WickWord {
    pub fn new(fs: &FockSpace, letters: Vec<Letter>, side: Side) -> Result<Self> {
        let model = fs.model();
        for (index, l) in letters.iter().enumerate() {
            model.check_dim(&l.vector)?;
            if l.sector >= model.num_sectors() {
                return Err(Error::IndexOutOfRange {
                    what: "sector",
                    index: l.sector,
                    limit: model.num_sectors(),
                });
            }
            let leak = model.sector_leak(&l.vector, l.sector);
            if leak > 1e-12 * l.vector.norm().max(1.0) {
                return Err(Error::LetterOutsideSector {
                    index,
                    sector: l.sector,
                    leak,
                });
            }
        }
        Ok(Self { letters, side })
    }

    /// Word of internal frame vectors `f_{w_1} (x) .. (x) f_{w_n}`.
    pub fn frame_word(fs: &FockSpace, word: &[usize], side: Side) -> Result<Self> {
        let model = fs.model();
        let letters = word
            .iter()
            .map(|&a| Letter {
                vector: model.frame().column(a).into_owned(),
                sector: model.sector_of(a),
            })
            .collect();
        Self::new(fs, letters, side)
    }

    /// Word of real coordinate vectors `e_{w_1} (x) .. (x) e_{w_n}`.
    pub fn coordinate_word(fs: &FockSpace, word: &[usize], side: Side) -> Result<Self> {
        let model = fs.model();
        let letters = word
            .iter()
            .map(|&a| Letter {
                vector: model.basis_vector(a),
                sector: model.sector_of(a),
            })
            .collect();
        Self::new(fs, letters, side)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.letters.iter().map(|l| l.sector).collect()
    }

    /// The word as a Fock vector.
    pub fn to_vector(&self, fs: &FockSpace) -> Result<FockVector> {
        self.check_fits(fs)?;
        let coords: Vec<CVec> = self
            .letters
            .iter()
            .map(|l| fs.model().to_frame(&l.vector))
            .collect();
        Ok(FockVector::tensor(fs.basis(), &coords))
    }

    fn check_fits(&self, fs: &FockSpace) -> Result<()> {
        if self.len() > fs.truncation() {
            return Err(Error::GuardBandOverflow {
                len: self.len(),
                truncation: fs.truncation(),
            });
        }
        Ok(())
    }

    /// `wick_s` or `wick_d` depending on the side marker.
    pub fn quantize(&self, fs: &FockSpace) -> Result<FockOperator> {
        match self.side {
            Side::Left => wick_s(fs, self),
            Side::Right => wick_d(fs, self),
        }
    }
}

fn splits(n: usize) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> {
    (0u32..1 << n).map(move |mask| {
        let (i, j): (Vec<usize>, Vec<usize>) = (0..n).partition(|&k| mask & (1 << k) != 0);
        (i, j)
    })
}

fn product(fs: &FockSpace, factors: &[&FockOperator]) -> FockOperator {
    match factors.split_last() {
        None => FockOperator::identity(fs.basis()),
        Some((last, rest)) => rest.iter().rev().fold((*last).clone(), |acc, f| *f * &acc),
    }
}

/// The element of the algebra with `wick_s(zeta) Omega = zeta`:
/// `sum_{I,J} f_{(I,J)} l(x_{i(1)}) .. l(x_{i(l)}) l^*(J x_{j(1)}) .. l^*(J x_{j(m)})`.
pub fn wick_s(fs: &FockSpace, word: &WickWord) -> Result<FockOperator> {
    let terms = WickTerms::left(fs, word)?;
    let mut out = FockOperator::zero(fs.basis());
    for (f, factors) in terms.iter() {
        out.add_scaled(&product(fs, &factors), C64::new(f, 0.0));
    }
    Ok(out)
}

/// `wick_s(word) v` without forming the operator.
pub fn wick_s_apply(fs: &FockSpace, word: &WickWord, v: &FockVector) -> Result<FockVector> {
    let terms = WickTerms::left(fs, word)?;
    let mut out = FockVector::zeros(fs.basis());
    for (f, factors) in terms.iter() {
        let w = factors.iter().rev().fold(v.clone(), |acc, op| op.apply(&acc));
        out.axpy(C64::new(f, 0.0), &w);
    }
    Ok(out)
}

struct WickTerms {
    creators: Vec<FockOperator>,
    annihilators: Vec<FockOperator>,
    splits: Vec<(f64, Vec<usize>, Vec<usize>)>,
}

impl WickTerms {
    fn left(fs: &FockSpace, word: &WickWord) -> Result<Self> {
        word.check_fits(fs)?;
        let model = fs.model();
        let labels = word.labels();
        let creators = word
            .letters
            .iter()
            .map(|l| left_create(fs, &l.vector))
            .collect::<Result<_>>()?;
        let annihilators = word
            .letters
            .iter()
            .map(|l| left_annihilate(fs, &model.conj(&l.vector)))
            .collect::<Result<_>>()?;
        let mut terms = Vec::new();
        for (i, j) in splits(word.len()) {
            let f = crossing_coefficient(&model.spec().q, &labels, &i, &j, Side::Left)?;
            if f != 0.0 {
                terms.push((f, i, j));
            }
        }
        Ok(Self {
            creators,
            annihilators,
            splits: terms,
        })
    }

    fn iter(&self) -> impl Iterator<Item = (f64, Vec<&FockOperator>)> + '_ {
        self.splits.iter().map(|(f, i, j)| {
            let factors = i
                .iter()
                .map(|&k| &self.creators[k])
                .chain(j.iter().map(|&k| &self.annihilators[k]))
                .collect();
            (*f, factors)
        })
    }
}

/// The commutant counterpart with `wick_d(eta) Omega = eta`, the mirror
/// image of [`wick_s`]:
/// `sum_{I,J} f~_{(I,J)} r(y_{i(l)}) .. r(y_{i(1)}) r^*(J_r y_{j(m)}) .. r^*(J_r y_{j(1)})`.
pub fn wick_d(fs: &FockSpace, word: &WickWord) -> Result<FockOperator> {
    word.check_fits(fs)?;
    let model = fs.model();
    let labels = word.labels();
    let creators: Vec<FockOperator> = word
        .letters
        .iter()
        .map(|l| right_create(fs, &l.vector))
        .collect::<Result<_>>()?;
    let annihilators: Vec<FockOperator> = word
        .letters
        .iter()
        .map(|l| right_annihilate(fs, &model.conj_commutant(&l.vector)))
        .collect::<Result<_>>()?;
    let mut out = FockOperator::zero(fs.basis());
    for (i, j) in splits(word.len()) {
        let f = crossing_coefficient(&model.spec().q, &labels, &i, &j, Side::Right)?;
        if f == 0.0 {
            continue;
        }
        let factors: Vec<&FockOperator> = i
            .iter()
            .rev()
            .map(|&k| &creators[k])
            .chain(j.iter().rev().map(|&k| &annihilators[k]))
            .collect();
        out.add_scaled(&product(fs, &factors), C64::new(f, 0.0));
    }
    Ok(out)
}

/// Adjoint with respect to `<.,.>_T`: block `(n <- m)` of the result is
/// `P^(n)^{-1} (X_{m <- n})^* P^(m)`.
pub fn adjoint_t(fs: &FockSpace, x: &FockOperator) -> Result<FockOperator> {
    let kernel = fs.kernel();
    let mut out = FockOperator::zero(fs.basis());
    for (&(m, n), b) in &x.blocks {
        let rhs = matmul(&b.adjoint(), kernel.p(m));
        out.add_block(n, m, kernel.factor(n)?.solve(&rhs));
    }
    Ok(out)
}

/// Operator norm with respect to `<.,.>_T` of `x` restricted to inputs of
/// level at most `max_from`.
pub fn norm_t(fs: &FockSpace, x: &FockOperator, max_from: usize) -> Result<f64> {
    let basis = fs.basis();
    let kernel = fs.kernel();
    let top = fs.truncation();
    let max_from = max_from.min(top);
    let tilde = |to: usize, from: usize, b: &CMat| -> Result<CMat> {
        let left = matmul(kernel.factor(to)?.l_adj(), b);
        Ok(matmul(&left, kernel.factor(from)?.l_adj_inv()))
    };
    let kept: Vec<(&(usize, usize), &CMat)> =
        x.blocks.iter().filter(|(&(_, from), _)| from <= max_from).collect();
    let mut offsets: Vec<isize> = kept
        .iter()
        .map(|(&(to, from), _)| to as isize - from as isize)
        .collect();
    offsets.sort_unstable();
    offsets.dedup();
    if offsets.len() <= 1 {
        // one offset: distinct source levels land in orthogonal target levels
        let mut best = 0.0f64;
        for (&(to, from), b) in kept {
            best = best.max(spectral_norm(&tilde(to, from, b)?));
        }
        return Ok(best);
    }
    let row_off: Vec<usize> = (0..=top).map(|n| basis.level_offset(n)).collect();
    let cols: usize = (0..=max_from).map(|n| basis.level_dim(n)).sum();
    let mut m = CMat::zeros(basis.total_dim(), cols);
    for (&(to, from), b) in kept {
        let t = tilde(to, from, b)?;
        m.view_mut((row_off[to], row_off[from]), (t.nrows(), t.ncols()))
            .copy_from(&t);
    }
    Ok(spectral_norm(&m))
}

/// `<.,.>_T` operator norm of `l(xi)` over levels `<= N - 1`.
pub fn left_create_norm(fs: &FockSpace, xi: &CVec) -> Result<f64> {
    let l = left_create(fs, xi)?;
    norm_t(fs, &l, fs.truncation().saturating_sub(1))
}

/// `(1 - q)^{-1/2} ||xi||_U` with `q = max |q_ij|`.
pub fn creation_norm_bound(fs: &FockSpace, xi: &CVec) -> f64 {
    fs.model().norm_u(xi) / (1.0 - fs.model().q_max()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{re, real_vec, I};
    use crate::model::{build_model, ModelSpec};

    fn space(spec: ModelSpec) -> FockSpace {
        FockSpace::new(build_model(&spec).unwrap())
    }

    fn mixed() -> FockSpace {
        space(
            ModelSpec::new(&[2, 1], vec![vec![0.5, -0.3], vec![-0.3, 0.7]])
                .with_block(0, 0, 1, 2.0)
                .with_truncation(4),
        )
    }

    fn vec_close(fs: &FockSpace, a: &FockVector, b: &FockVector) -> f64 {
        fs.norm(&a.sub(b))
    }

    #[test]
    fn creation_examples() {
        let fs = mixed();
        let xi = CVec::from_vec(vec![re(0.3), C64::new(0.1, -0.4), re(1.2)]);
        let l = left_create(&fs, &xi).unwrap();
        let omega = FockVector::vacuum(fs.basis());
        let got = l.apply(&omega);
        let want = FockVector::on_level(fs.basis(), 1, fs.model().to_frame(&xi));
        assert!(vec_close(&fs, &got, &want) < 1e-14);

        let eta = real_vec(&[0.0, 1.0, -2.0]);
        let ev = FockVector::on_level(fs.basis(), 1, fs.model().to_frame(&eta));
        let got = l.apply(&ev);
        let want = FockVector::tensor(
            fs.basis(),
            &[fs.model().to_frame(&xi), fs.model().to_frame(&eta)],
        );
        assert!(vec_close(&fs, &got, &want) < 1e-14);

        let r = right_create(&fs, &xi).unwrap();
        assert!(vec_close(&fs, &r.apply(&omega), &l.apply(&omega)) < 1e-15);
        let want = FockVector::tensor(
            fs.basis(),
            &[fs.model().to_frame(&eta), fs.model().to_frame(&xi)],
        );
        assert!(vec_close(&fs, &r.apply(&ev), &want) < 1e-14);
        assert!(!l.blocks().any(|(&(_, from), _)| from == fs.truncation()));
    }

    #[test]
    fn annihilation_examples() {
        let fs = mixed();
        let omega = FockVector::vacuum(fs.basis());
        let xi = CVec::from_vec(vec![re(0.3), I, re(1.2)]);
        let eta = CVec::from_vec(vec![re(-0.5), re(0.25), C64::new(0.0, 2.0)]);
        let ev = FockVector::on_level(fs.basis(), 1, fs.model().to_frame(&eta));
        let overlap = fs.model().deformed_inner(&xi, &eta).unwrap();
        for op in [left_annihilate(&fs, &xi).unwrap(), right_annihilate(&fs, &xi).unwrap()] {
            assert_eq!(op.apply(&omega), FockVector::zeros(fs.basis()));
            let got = op.apply(&ev);
            assert!((got.levels[0][0] - overlap).norm() < 1e-14);
        }
    }

    #[test]
    fn single_sector_crossing_weights() {
        let q = 0.45;
        let fs = space(ModelSpec::single_sector(2, q).with_truncation(3));
        let e1 = fs.model().basis_vector(0);
        let e2 = fs.model().basis_vector(1);
        let w21 = FockVector::tensor(fs.basis(), &[e2.clone(), e1.clone()]);
        let got = left_annihilate(&fs, &e1).unwrap().apply(&w21);
        let want = FockVector::on_level(fs.basis(), 1, e2.clone() * re(q));
        assert!(vec_close(&fs, &got, &want) < 1e-15);
        let w12 = FockVector::tensor(fs.basis(), &[e1.clone(), e2.clone()]);
        let got = right_annihilate(&fs, &e1).unwrap().apply(&w12);
        assert!(vec_close(&fs, &got, &want) < 1e-15);
    }

    #[test]
    fn explicit_annihilator_is_a_star_times_ladder() {
        // l^*(xi) = a^*(xi)(1 + T_1 + T_1 T_2 + ..) on each level
        let fs = mixed();
        let xi = CVec::from_vec(vec![re(0.7), C64::new(0.2, 0.3), re(-0.4)]);
        let c = fs.model().to_frame(&xi);
        let la = left_annihilate(&fs, &xi).unwrap();
        for n in 2..=fs.truncation() {
            let mut ladder = CMat::identity(fs.basis().level_dim(n), fs.basis().level_dim(n));
            let mut prod = ladder.clone();
            for i in 1..n {
                prod = prod * crate::fock::extend_twist(&fs, i, n).unwrap().matrix;
                ladder += &prod;
            }
            let id = CMat::identity(fs.basis().level_dim(n - 1), fs.basis().level_dim(n - 1));
            let a_star = CMat::from_row_slice(1, c.len(), c.conjugate().as_slice()).kronecker(&id);
            let want = a_star * ladder;
            let got = la.block(n - 1, n).unwrap();
            assert!(crate::linalg::max_abs(&(got - want)) < 1e-13);
        }
    }

    #[test]
    fn field_examples() {
        let fs = mixed();
        let xi = real_vec(&[0.4, -1.0, 0.3]);
        let s = field_s(&fs, &xi).unwrap();
        let omega = FockVector::vacuum(fs.basis());
        let xv = FockVector::on_level(fs.basis(), 1, fs.model().to_frame(&xi));
        assert!(vec_close(&fs, &s.apply(&omega), &xv) < 1e-14);

        let eta = real_vec(&[1.0, 0.5, 0.0]);
        let ev = FockVector::on_level(fs.basis(), 1, fs.model().to_frame(&eta));
        let mut want = FockVector::tensor(
            fs.basis(),
            &[fs.model().to_frame(&xi), fs.model().to_frame(&eta)],
        );
        want.levels[0][0] = fs.model().deformed_inner(&xi, &eta).unwrap();
        assert!(vec_close(&fs, &s.apply(&ev), &want) < 1e-14);

        assert!(field_s(&fs, &CVec::from_vec(vec![I, re(0.0), re(0.0)])).is_err());
        assert!(matches!(
            field_d(&fs, &real_vec(&[1.0, 0.0, 0.0])),
            Err(Error::NotInCommutant(_))
        ));
    }

    #[test]
    fn crossing_coefficient_examples() {
        let q = vec![vec![0.5, 0.2], vec![0.2, -0.7]];
        assert_eq!(crossing_coefficient(&q, &[0, 1], &[0, 1], &[], Side::Left).unwrap(), 1.0);
        assert_eq!(crossing_coefficient(&q, &[0, 1], &[1], &[0], Side::Left).unwrap(), 0.2);
        assert_eq!(crossing_coefficient(&q, &[0, 1], &[1], &[0], Side::Right).unwrap(), 1.0);
        let single = vec![vec![0.3]];
        let f = crossing_coefficient(&single, &[0, 0, 0], &[1, 2], &[0], Side::Left).unwrap();
        assert!((f - 0.09).abs() < 1e-16);
        assert!(crossing_coefficient(&q, &[0, 1], &[0], &[0], Side::Left).is_err());
        assert!(crossing_coefficient(&q, &[0, 1], &[0], &[], Side::Left).is_err());
        assert!(crossing_coefficient(&q, &[0, 1], &[1, 0], &[], Side::Left).is_err());
    }

    #[test]
    fn wick_of_one_letter_is_the_field() {
        let fs = mixed();
        let xi = real_vec(&[0.4, -1.0, 0.0]);
        let w = WickWord::new(&fs, vec![Letter { vector: xi.clone(), sector: 0 }], Side::Left).unwrap();
        let diff = &wick_s(&fs, &w).unwrap() - &field_s(&fs, &xi).unwrap();
        assert!(diff.max_abs() < 1e-15);
    }

    #[test]
    fn wick_of_two_letters_expands_to_four_terms() {
        let fs = mixed();
        let m = fs.model();
        let x1 = CVec::from_vec(vec![re(0.4), C64::new(0.0, 1.0), re(0.0)]);
        let x2 = real_vec(&[0.0, 0.0, 1.5]);
        let w = WickWord::new(
            &fs,
            vec![Letter { vector: x1.clone(), sector: 0 }, Letter { vector: x2.clone(), sector: 1 }],
            Side::Left,
        )
        .unwrap();
        let l1 = left_create(&fs, &x1).unwrap();
        let l2 = left_create(&fs, &x2).unwrap();
        let a1 = left_annihilate(&fs, &m.conj(&x1)).unwrap();
        let a2 = left_annihilate(&fs, &m.conj(&x2)).unwrap();
        let q21 = m.q(1, 0);
        let want = &(&(&(&l1 * &l2) + &(&l1 * &a2)) + &(&l2 * &a1).scaled(re(q21))) + &(&a1 * &a2);
        let diff = &wick_s(&fs, &w).unwrap() - &want;
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn wick_words_reproduce_themselves_on_vacuum() {
        let fs = mixed();
        let omega = FockVector::vacuum(fs.basis());
        for word in [vec![0usize], vec![1, 2], vec![2, 0, 1], vec![0, 0, 2]] {
            for side in [Side::Left, Side::Right] {
                let w = WickWord::frame_word(&fs, &word, side).unwrap();
                let got = w.quantize(&fs).unwrap().apply(&omega);
                assert!(vec_close(&fs, &got, &w.to_vector(&fs).unwrap()) < 1e-12);
            }
        }
        let too_long = WickWord::frame_word(&fs, &[0; 5], Side::Left).unwrap();
        assert!(matches!(wick_s(&fs, &too_long), Err(Error::GuardBandOverflow { .. })));
    }

    #[test]
    fn lazy_wick_matches_operator() {
        let fs = mixed();
        let v = FockVector::tensor(fs.basis(), &[real_vec(&[0.2, -1.0, 0.5]), real_vec(&[1.0, 0.3, 0.0])]);
        let w = WickWord::frame_word(&fs, &[2, 0, 1], Side::Left).unwrap();
        let dense = wick_s(&fs, &w).unwrap().apply(&v);
        assert!(vec_close(&fs, &dense, &wick_s_apply(&fs, &w, &v).unwrap()) < 1e-13);
    }

    #[test]
    fn mislabelled_letter_rejected() {
        let fs = mixed();
        let err = WickWord::new(
            &fs,
            vec![Letter { vector: real_vec(&[1.0, 0.0, 1.0]), sector: 0 }],
            Side::Left,
        );
        assert!(matches!(err, Err(Error::LetterOutsideSector { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let fs = mixed();
        let xi = CVec::from_vec(vec![re(0.3), C64::new(0.5, -0.2), re(-0.8)]);
        let l = left_create(&fs, &xi).unwrap();
        let la = left_annihilate(&fs, &xi).unwrap();
        let diff = &adjoint_t(&fs, &l).unwrap() - &la;
        assert!(diff.max_abs() < 1e-12);
        let r = right_create(&fs, &xi).unwrap();
        let ra = right_annihilate(&fs, &xi).unwrap();
        assert!((&adjoint_t(&fs, &r).unwrap() - &ra).max_abs() < 1e-12);
        let id = FockOperator::identity(fs.basis());
        assert!((&adjoint_t(&fs, &id).unwrap() - &id).max_abs() < 1e-13);
        let w = wick_s(&fs, &WickWord::frame_word(&fs, &[0, 2], Side::Left).unwrap()).unwrap();
        let back = adjoint_t(&fs, &adjoint_t(&fs, &w).unwrap()).unwrap();
        assert!((&back - &w).max_abs() < 1e-11);
    }

    #[test]
    fn field_is_self_adjoint_and_bounded() {
        let fs = mixed();
        let xi = real_vec(&[0.3, 0.9, -0.5]);
        let s = field_s(&fs, &xi).unwrap();
        let diff = &adjoint_t(&fs, &s).unwrap() - &s;
        let guard = fs.truncation() - 1;
        assert!(norm_t(&fs, &diff, guard - 1).unwrap() < 1e-11);
        assert!(left_create_norm(&fs, &xi).unwrap() <= creation_norm_bound(&fs, &xi) + 1e-10);
    }

    #[test]
    fn vacuum_covariance() {
        let fs = mixed();
        let xi = real_vec(&[0.3, 0.9, -0.5]);
        let eta = real_vec(&[-1.0, 0.2, 0.7]);
        let omega = FockVector::vacuum(fs.basis());
        let v = field_s(&fs, &xi).unwrap().apply(&field_s(&fs, &eta).unwrap().apply(&omega));
        let got = fs.inner(&omega, &v);
        assert!((got - fs.model().deformed_inner(&xi, &eta).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn commutation_of_left_and_right_fields() {
        let fs = mixed();
        let xi = real_vec(&[0.3, 0.9, -0.5]);
        let eta = fs.model().commutant_vector(&real_vec(&[1.0, -0.4, 0.8])).unwrap();
        let s = field_s(&fs, &xi).unwrap();
        let d = field_d(&fs, &eta).unwrap();
        let comm = &(&s * &d) - &(&d * &s);
        assert!(norm_t(&fs, &comm, fs.truncation() - 2).unwrap() < 1e-10);
    }
}
