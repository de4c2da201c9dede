use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{brute_force_p, check_yang_baxter, FockSpace, FockVector, POSITIVITY_TOL};
use crate::linalg::{spectral_norm, CVec, C64};
use crate::modular::{
    check_commutant_relation, conditional_expectation, modular_data, modular_flow,
    ExpectationData, ModularData, WickCache,
};
use crate::ops::{
    adjoint_t, creation_norm_bound, field_d, field_s, left_annihilate, left_create,
    left_create_norm, norm_t, right_annihilate, right_create, wick_d, wick_s, wick_s_apply, Letter, Side,
    WickWord,
};
use crate::probability::{coordinate_moments, pair_partition_moment, MomentQuery};

use super::config::Tolerances;
use super::report::{MomentRow, Residual, SuiteReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Positivity,
    YangBaxter,
    Adjointness,
    WickVacuum,
    Commutant,
    Modular,
    Expectation,
    MomentOracle,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::Positivity,
        SuiteKind::YangBaxter,
        SuiteKind::Adjointness,
        SuiteKind::WickVacuum,
        SuiteKind::Commutant,
        SuiteKind::Modular,
        SuiteKind::Expectation,
        SuiteKind::MomentOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Positivity => "positivity",
            SuiteKind::YangBaxter => "yang_baxter",
            SuiteKind::Adjointness => "adjointness",
            SuiteKind::WickVacuum => "wick_vacuum",
            SuiteKind::Commutant => "commutant",
            SuiteKind::Modular => "modular",
            SuiteKind::Expectation => "expectation",
            SuiteKind::MomentOracle => "moment_oracle",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u64
    }
}

/// Shared, read-only state of one `check` run.
pub struct Context {
    pub fs: FockSpace,
    pub tol: Tolerances,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    modular: OnceLock<std::result::Result<ModularData, String>>,
}

impl Context {
    pub fn new(fs: FockSpace, tol: Tolerances, t_grid: Vec<f64>, seed: u64, samples: usize) -> Self {
        Self {
            fs,
            tol,
            t_grid,
            seed,
            samples,
            modular: OnceLock::new(),
        }
    }

    fn modular(&self) -> std::result::Result<&ModularData, String> {
        self.modular
            .get_or_init(|| modular_data(&self.fs).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn top(&self) -> usize {
        self.fs.truncation()
    }
}

/// Runs the suites in parallel; results come back in the order given.
pub fn run_suites(ctx: &Context, kinds: &[SuiteKind]) -> Vec<(SuiteReport, f64)> {
    kinds
        .par_iter()
        .map(|&kind| {
            let start = Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(kind.index()));
            let report = run_suite(ctx, kind, &mut rng);
            (report, start.elapsed().as_secs_f64())
        })
        .collect()
}

pub fn run_suite(ctx: &Context, kind: SuiteKind, rng: &mut ChaCha8Rng) -> SuiteReport {
    let mut residuals = Vec::new();
    let outcome = match kind {
        SuiteKind::Positivity => positivity(ctx, &mut residuals),
        SuiteKind::YangBaxter => yang_baxter(ctx, &mut residuals),
        SuiteKind::Adjointness => adjointness(ctx, rng, &mut residuals),
        SuiteKind::WickVacuum => wick_vacuum(ctx, rng, &mut residuals),
        SuiteKind::Commutant => commutant(ctx, rng, &mut residuals),
        SuiteKind::Modular => modular(ctx, rng, &mut residuals),
        SuiteKind::Expectation => expectation(ctx, rng, &mut residuals),
        SuiteKind::MomentOracle => moment_oracle(ctx, &mut residuals),
    };
    match outcome {
        Ok(()) => SuiteReport::new(kind.name(), residuals),
        Err(e) => SuiteReport::failed(kind.name(), residuals, e.to_string()),
    }
}

fn random_real(rng: &mut impl Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0))
}

fn random_complex(rng: &mut impl Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn random_letter(fs: &FockSpace, rng: &mut impl Rng) -> Letter {
    let model = fs.model();
    let sector = rng.gen_range(0..model.num_sectors());
    let range = model.sector_range(sector);
    let mut vector = model.zero_vector();
    for k in range {
        vector[k] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    Letter { vector, sector }
}

fn random_word(fs: &FockSpace, rng: &mut impl Rng, max_len: usize, side: Side) -> Result<WickWord> {
    let len = rng.gen_range(1..=max_len);
    let letters = (0..len).map(|_| random_letter(fs, rng)).collect();
    WickWord::new(fs, letters, side)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn positivity(ctx: &Context, out: &mut Vec<Residual>) -> Result<()> {
    let kernel = ctx.fs.kernel();
    for n in 0..=ctx.top() {
        out.push(Residual::above(
            format!("min_eigenvalue_level_{n}"),
            kernel.min_eigenvalue(n),
            POSITIVITY_TOL,
        ));
    }
    for n in 2..=ctx.top().min(5) {
        let brute = brute_force_p(&ctx.fs, n)?;
        let diff = kernel.p(n) - brute.matrix;
        out.push(Residual::at_most(
            format!("ladder_vs_permutation_sum_level_{n}"),
            spectral_norm(&diff),
            ctx.tol.algebraic,
        ));
    }
    Ok(())
}

fn yang_baxter(ctx: &Context, out: &mut Vec<Residual>) -> Result<()> {
    out.push(Residual::at_most(
        "braid_relation_level_3",
        check_yang_baxter(&ctx.fs),
        ctx.tol.yang_baxter,
    ));
    Ok(())
}

fn adjointness(ctx: &Context, rng: &mut ChaCha8Rng, out: &mut Vec<Residual>) -> Result<()> {
    let fs = &ctx.fs;
    let d = fs.model().dim();
    let (mut left, mut right, mut excess, mut ratio) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..10 {
        let xi = random_complex(rng, d);
        let l = adjoint_t(fs, &left_create(fs, &xi)?)?;
        left = left.max(norm_t(fs, &(&l - &left_annihilate(fs, &xi)?), ctx.top())?);
        let r = adjoint_t(fs, &right_create(fs, &xi)?)?;
        right = right.max(norm_t(fs, &(&r - &right_annihilate(fs, &xi)?), ctx.top())?);
        let measured = left_create_norm(fs, &xi)?;
        let bound = creation_norm_bound(fs, &xi);
        excess = excess.max(measured - bound);
        ratio = ratio.max(measured / bound);
    }
    out.push(Residual::at_most("left_creation_adjoint", left, ctx.tol.algebraic));
    out.push(Residual::at_most("right_creation_adjoint", right, ctx.tol.algebraic));
    out.push(Residual::at_most("creation_norm_excess", excess, ctx.tol.algebraic));
    out.push(Residual::diagnostic("creation_norm_ratio", ratio));
    Ok(())
}

fn wick_vacuum(ctx: &Context, rng: &mut ChaCha8Rng, out: &mut Vec<Residual>) -> Result<()> {
    let fs = &ctx.fs;
    let omega = FockVector::vacuum(fs.basis());
    let max_len = ctx.top().min(3);
    for (side, name) in [(Side::Left, "wick_s_on_vacuum"), (Side::Right, "wick_d_on_vacuum")] {
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let w = random_word(fs, rng, max_len, side)?;
            let got = w.quantize(fs)?.apply(&omega);
            worst = worst.max(fs.norm(&got.sub(&w.to_vector(fs)?)));
        }
        out.push(Residual::at_most(name, worst, ctx.tol.algebraic));
    }
    Ok(())
}

fn commutant(ctx: &Context, rng: &mut ChaCha8Rng, out: &mut Vec<Residual>) -> Result<()> {
    let fs = &ctx.fs;
    let model = fs.model();
    let d = model.dim();
    let top = ctx.top();
    let mut fields = 0.0f64;
    for _ in 0..5 {
        let s = field_s(fs, &random_real(rng, d))?;
        let dd = field_d(fs, &model.commutant_vector(&random_real(rng, d))?)?;
        let c = &(&s * &dd) - &(&dd * &s);
        fields = fields.max(norm_t(fs, &c, top - 2)?);
    }
    out.push(Residual::at_most("field_commutator", fields, ctx.tol.algebraic));

    let max_len = (top / 2).min(2).max(1);
    let mut words = 0.0f64;
    for _ in 0..5 {
        let a = random_word(fs, rng, max_len, Side::Left)?;
        let b = random_word(fs, rng, max_len, Side::Right)?;
        let (x, y) = (wick_s(fs, &a)?, wick_d(fs, &b)?);
        let c = &(&x * &y) - &(&y * &x);
        let guard = top.saturating_sub(a.len() + b.len());
        words = words.max(norm_t(fs, &c, guard)?);
    }
    out.push(Residual::at_most("wick_word_commutator", words, ctx.tol.algebraic));

    let md = ctx.modular().map_err(crate::error::Error::Usage)?;
    let mut jsj = 0.0f64;
    for _ in 0..3 {
        jsj = jsj.max(check_commutant_relation(fs, md, &random_real(rng, d))?);
    }
    out.push(Residual::at_most("j_s_j_equals_d", jsj, ctx.tol.modular));
    Ok(())
}

fn modular(ctx: &Context, rng: &mut ChaCha8Rng, out: &mut Vec<Residual>) -> Result<()> {
    let fs = &ctx.fs;
    let md = ctx.modular().map_err(crate::error::Error::Usage)?;
    let diag = md.diagnostics(fs)?;
    out.push(Residual::at_most("s_involution", diag.s_squared, ctx.tol.modular));
    out.push(Residual::at_most("j_involution", diag.j_squared, ctx.tol.modular));
    out.push(Residual::at_most("polar_decomposition", diag.polar, ctx.tol.modular));
    out.push(Residual::at_most("j_vacuum", diag.j_vacuum, ctx.tol.algebraic));
    out.push(Residual::at_most("delta_vacuum", diag.delta_vacuum, ctx.tol.algebraic));
    out.push(Residual::above("min_delta_eigenvalue", diag.min_delta_eigenvalue, 0.0));
    for (n, v) in diag.delta_vs_tensor.iter().enumerate() {
        out.push(Residual::diagnostic(format!("delta_vs_tensor_power_level_{n}"), *v));
    }
    for (n, v) in diag.s_vs_reversal.iter().enumerate() {
        out.push(Residual::diagnostic(format!("s_vs_letter_reversal_level_{n}"), *v));
    }
    let d = fs.model().dim();
    for &t in &ctx.t_grid {
        let xi = random_real(rng, d);
        out.push(Residual::at_most(
            format!("modular_flow_t_{t}"),
            modular_flow(fs, md, t, &xi)?,
            ctx.tol.modular,
        ));
    }
    Ok(())
}

/// Invariant subspaces spanned by coordinate vectors: each sector, and the
/// fixed vectors of `U_t` when they form a new proper subspace.
pub fn coordinate_subspaces(fs: &FockSpace) -> Vec<(String, Vec<usize>)> {
    let model = fs.model();
    let mut out: Vec<(String, Vec<usize>)> = (0..model.num_sectors())
        .map(|j| (format!("sector_{j}"), model.sector_range(j).collect()))
        .collect();
    let fixed = model.fixed_coords();
    if !fixed.is_empty() && fixed.len() < model.dim() && out.iter().all(|(_, c)| *c != fixed) {
        out.push(("fixed".into(), fixed));
    }
    out
}

fn expectation(ctx: &Context, rng: &mut ChaCha8Rng, out: &mut Vec<Residual>) -> Result<()> {
    let fs = &ctx.fs;
    let model = fs.model();
    let top = ctx.top();
    let max_len = top.saturating_sub(2).min(3);
    if max_len == 0 {
        out.push(Residual::diagnostic("skipped_truncation_too_small", 0.0));
        return Ok(());
    }
    let omega = FockVector::vacuum(fs.basis());
    let coord_word = |coords: &[usize], len: usize, rng: &mut ChaCha8Rng| -> Result<WickWord> {
        let word: Vec<usize> = (0..len).map(|_| *coords.choose(rng).unwrap()).collect();
        WickWord::coordinate_word(fs, &word, Side::Left)
    };
    let all: Vec<usize> = (0..model.dim()).collect();
    let cache = WickCache::default();
    for (label, coords) in coordinate_subspaces(fs) {
        let spanning: Vec<CVec> = coords.iter().map(|&k| model.basis_vector(k)).collect();
        let data = ExpectationData::new(fs, &spanning)?.with_cache(cache.clone());
        out.push(Residual::at_most(format!("perp_angle_{label}"), data.perp_angle(), ctx.tol.perp_angle));
        let (mut phi, mut idem, mut module, mut fixes) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..ctx.samples {
            let len = rng.gen_range(1..=max_len);
            let x = coord_word(&all, len, rng)?;
            let x_omega = wick_s_apply(fs, &x, &omega)?;
            let e = data.quantize(fs, &data.project(&x_omega))?;
            let phi_x = x_omega.levels[0][0];
            phi = phi.max((e.apply(&omega).levels[0][0] - phi_x).norm());
            if k < 10 {
                let ee = conditional_expectation(fs, &data, &e)?;
                idem = idem.max(norm_t(fs, &(&ee - &e), top - len)?);
            }
            let a = wick_s(fs, &coord_word(&coords, 1, rng)?)?;
            let b = wick_s(fs, &coord_word(&coords, 1, rng)?)?;
            let lhs = a.apply(&e.apply(&b.apply(&omega)));
            let rhs = data.project(&a.apply(&wick_s_apply(fs, &x, &b.apply(&omega))?));
            module = module.max(fs.norm(&lhs.sub(&rhs)));
            if k < 5 {
                let y = wick_s(fs, &coord_word(&coords, len, rng)?)?;
                let ey = conditional_expectation(fs, &data, &y)?;
                fixes = fixes.max(norm_t(fs, &(&ey - &y), top - len)?);
            }
        }
        out.push(Residual::at_most(format!("state_preserved_{label}"), phi, ctx.tol.algebraic));
        out.push(Residual::at_most(format!("idempotent_{label}"), idem, ctx.tol.algebraic));
        out.push(Residual::at_most(format!("module_property_{label}"), module, ctx.tol.module_property));
        out.push(Residual::at_most(format!("fixes_subalgebra_{label}"), fixes, ctx.tol.algebraic));
    }
    Ok(())
}

fn moment_oracle(ctx: &Context, out: &mut Vec<Residual>) -> Result<()> {
    let max_order = (2 * ctx.top().saturating_sub(1)).min(8);
    for k in (2..=max_order).step_by(2) {
        let rows = moment_rows_of_order(&ctx.fs, k)?;
        out.push(Residual::at_most(
            format!("pair_partition_order_{k}"),
            max_of(rows.iter().map(|r| r.discrepancy)),
            ctx.tol.algebraic,
        ));
    }
    Ok(())
}

/// Matrix and oracle values of every coordinate moment of order `k`.
pub fn moment_rows_of_order(fs: &FockSpace, k: usize) -> Result<Vec<MomentRow>> {
    let values = coordinate_moments(fs, k)?;
    values
        .into_par_iter()
        .enumerate()
        .map(|(w, value)| {
            let word = fs.basis().word(k, w);
            let oracle = pair_partition_moment(fs, &MomentQuery::coordinates(fs, &word))?;
            Ok(MomentRow {
                word: word.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-"),
                order: k,
                matrix_re: value.re,
                matrix_im: value.im,
                oracle_re: oracle.re,
                oracle_im: oracle.im,
                discrepancy: (value - oracle).norm(),
            })
        })
        .collect()
}

/// Moment rows for all orders `1..=max_order`.
pub fn moment_rows(fs: &FockSpace, max_order: usize) -> Result<Vec<MomentRow>> {
    let mut out = Vec::new();
    for k in 1..=max_order {
        out.extend(moment_rows_of_order(fs, k)?);
    }
    Ok(out)
}
