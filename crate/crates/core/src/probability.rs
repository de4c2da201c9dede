//! Vacuum moments, the pair-partition oracle and centralizer probes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::linalg::{hermitian_eigen, CMat, CVec, C64, ONE, ZERO};
use crate::ops::{field_s_linear, wick_s, FockOperator, Side, WickWord};

/// Letters `xi_1 .. xi_k` of the moment `phi(s(xi_1) .. s(xi_k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentQuery {
    pub letters: Vec<CVec>,
}

impl MomentQuery {
    pub fn new(letters: Vec<CVec>) -> Self {
        Self { letters }
    }

    /// Query of real coordinate vectors `e_{w_1}, .., e_{w_k}`.
    pub fn coordinates(fs: &FockSpace, word: &[usize]) -> Self {
        Self::new(word.iter().map(|&k| fs.model().basis_vector(k)).collect())
    }

    pub fn order(&self) -> usize {
        self.letters.len()
    }

    fn check(&self, fs: &FockSpace) -> Result<()> {
        let limit = 2 * fs.truncation().saturating_sub(1);
        if self.order() > limit {
            return Err(Error::TruncationOverflow {
                order: self.order(),
                truncation: fs.truncation(),
            });
        }
        Ok(())
    }
}

/// `phi(x) = <Omega, x Omega>_T`.
pub fn vacuum_state(fs: &FockSpace, x: &FockOperator) -> C64 {
    x.apply(&FockVector::vacuum(fs.basis())).levels[0][0]
}

/// `<Omega, s(xi_1) .. s(xi_k) Omega>_T`, using the complex-linear extension
/// of `s` for non-real letters.
pub fn vacuum_moment(fs: &FockSpace, query: &MomentQuery) -> Result<C64> {
    query.check(fs)?;
    let fields = query
        .letters
        .iter()
        .map(|xi| field_s_linear(fs, xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(moment_of_fields(fs, &fields.iter().collect::<Vec<_>>()))
}

/// `phi(x_1 .. x_k)` for already built operators.
pub fn moment_of_fields(fs: &FockSpace, fields: &[&FockOperator]) -> C64 {
    let mut v = FockVector::vacuum(fs.basis());
    for x in fields.iter().rev() {
        v = x.apply(&v);
    }
    v.levels[0][0]
}

/// `phi(s(e_{w_1}) .. s(e_{w_k}))` for every coordinate word of length `k`,
/// indexed like level-`k` words.  Splits each word as `a b` with `|a| = k/2`
/// and pairs `s(a_h) .. s(a_1) Omega` against `s(b) Omega`.
pub fn coordinate_moments(fs: &FockSpace, k: usize) -> Result<Vec<C64>> {
    MomentQuery::new(vec![fs.model().zero_vector(); k]).check(fs)?;
    let d = fs.model().dim();
    let fields = (0..d)
        .map(|a| crate::ops::field_s(fs, &fs.model().basis_vector(a)))
        .collect::<Result<Vec<_>>>()?;
    let h = k / 2;
    let mut table: Vec<Vec<FockVector>> = vec![vec![FockVector::vacuum(fs.basis())]];
    for len in 1..=k - h {
        let prev = &table[len - 1];
        let next = (0..d.pow(len as u32))
            .map(|w| fields[w / prev.len()].apply(&prev[w % prev.len()]))
            .collect();
        table.push(next);
    }
    let left = &table[h];
    let right = &table[k - h];
    let reversed = |a: usize| -> usize {
        let mut word = Vec::with_capacity(h);
        let mut x = a;
        for _ in 0..h {
            word.push(x % d);
            x /= d;
        }
        word.iter().fold(0, |acc, &c| acc * d + c)
    };
    let weighted: Vec<FockVector> = right
        .iter()
        .map(|v| FockVector {
            levels: v
                .levels
                .iter()
                .enumerate()
                .map(|(n, x)| fs.kernel().p(n) * x)
                .collect(),
        })
        .collect();
    let mut out = Vec::with_capacity(left.len() * right.len());
    for a in 0..left.len() {
        let u = &left[reversed(a)];
        for v in &weighted {
            out.push(u.levels.iter().zip(&v.levels).map(|(x, y)| x.dotc(y)).sum());
        }
    }
    Ok(out)
}

/// All pairings of `0..k` as lists of pairs `(a, b)` with `a < b`.
pub fn pair_partitions(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(free: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(acc.clone());
            return;
        };
        for (i, &b) in rest.iter().enumerate() {
            let remaining: Vec<usize> = rest
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            acc.push((first, b));
            go(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if k % 2 == 0 {
        go(&(0..k).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    }
    out
}

/// Sum over pairings of `prod <xi_a, xi_b>_U` times `q` of the two
/// sectors at every crossing `a < c < b < d`.
pub fn pair_partition_moment(fs: &FockSpace, query: &MomentQuery) -> Result<C64> {
    let model = fs.model();
    let mut coords = Vec::with_capacity(query.order());
    for (index, xi) in query.letters.iter().enumerate() {
        model.check_dim(xi)?;
        let support: Vec<usize> = (0..xi.len()).filter(|&k| xi[k] != ZERO).collect();
        match support.as_slice() {
            [k] if xi[*k] == ONE => coords.push(*k),
            _ => return Err(Error::NonBasisLetter(index)),
        }
    }
    let gram = model.gram_u();
    let mut total = ZERO;
    for pairing in pair_partitions(coords.len()) {
        let mut term: C64 = pairing.iter().map(|&(a, b)| gram[(coords[a], coords[b])]).product();
        if term == ZERO {
            continue;
        }
        for &(a, b) in &pairing {
            for &(c, d) in &pairing {
                if a < c && c < b && b < d {
                    term *= model.q(model.sector_of(coords[a]), model.sector_of(coords[c]));
                }
            }
        }
        total += term;
    }
    Ok(total)
}

/// `max_y |phi(x y) - phi(y x)|` over a sample family.
#[derive(Clone, Debug)]
pub struct CentralizerProbe {
    pub x: FockOperator,
    pub samples: Vec<FockOperator>,
    pub residuals: Vec<f64>,
}

impl CentralizerProbe {
    pub fn run(fs: &FockSpace, x: FockOperator, samples: Vec<FockOperator>) -> Self {
        let omega = FockVector::vacuum(fs.basis());
        let x_omega = x.apply(&omega);
        let residuals = samples
            .iter()
            .map(|y| {
                let xy = x.apply(&y.apply(&omega)).levels[0][0];
                let yx = y.apply(&x_omega).levels[0][0];
                (xy - yx).norm()
            })
            .collect();
        Self {
            x,
            samples,
            residuals,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn centralizer_residual(fs: &FockSpace, x: &FockOperator, samples: &[FockOperator]) -> f64 {
    CentralizerProbe::run(fs, x.clone(), samples.to_vec()).max_residual()
}

/// Wick words of length `1..=max_len` over the real coordinate basis, then
/// `extra` random real combinations of them.
pub fn centralizer_samples(
    fs: &FockSpace,
    max_len: usize,
    extra: usize,
    rng: &mut impl Rng,
) -> Result<Vec<FockOperator>> {
    let d = fs.model().dim();
    let max_len = max_len.min(fs.truncation());
    let mut words = Vec::new();
    for len in 1..=max_len {
        for n in 0..d.pow(len as u32) {
            words.push(fs.basis().word(len, n));
        }
    }
    let ops = words
        .iter()
        .map(|w| wick_s(fs, &WickWord::coordinate_word(fs, w, Side::Left)?))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ops.clone();
    for _ in 0..extra {
        let mut y = FockOperator::zero(fs.basis());
        for op in &ops {
            let c: f64 = rng.gen_range(-1.0..1.0);
            y.add_scaled(op, C64::new(c, 0.0));
        }
        out.push(y);
    }
    Ok(out)
}

/// `|phi(exp(i t s(xi)))|` along `t_grid`, for a real unit vector `xi` fixed
/// by `U_t`.  The exponential is taken of the `<.,.>_T`-symmetrized
/// truncated field.
pub fn oscillation_probe(fs: &FockSpace, xi: &CVec, t_grid: &[f64]) -> Result<Vec<f64>> {
    let model = fs.model();
    model.check_real(xi)?;
    let moved = (model.a_matrix() * xi - xi).norm();
    if moved > 1e-12 {
        return Err(Error::NotInvariant(moved));
    }
    let s = crate::ops::field_s(fs, xi)?;
    let basis = fs.basis();
    let total = basis.total_dim();
    let mut up = CMat::zeros(total, total);
    let mut down = CMat::zeros(total, total);
    for n in 0..=fs.truncation() {
        let f = fs.kernel().factor(n)?;
        let (o, k) = (basis.level_offset(n), basis.level_dim(n));
        up.view_mut((o, o), (k, k)).copy_from(f.l_adj());
        down.view_mut((o, o), (k, k)).copy_from(f.l_adj_inv());
    }
    let h = up * s.to_dense() * down;
    let (vals, vecs) = hermitian_eigen(&h);
    Ok(t_grid
        .iter()
        .map(|&t| {
            vals.iter()
                .enumerate()
                .map(|(k, &v)| vecs[(0, k)].norm_sqr() * C64::new(0.0, t * v).exp())
                .sum::<C64>()
                .norm()
        })
        .collect())
}
