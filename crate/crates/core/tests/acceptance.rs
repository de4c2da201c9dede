//! Acceptance criteria.  Runs as a plain binary so every criterion prints
//! one line; exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixed_qaw::cli::{cmd_check, RunConfig};
use mixed_qaw::fock::{brute_force_p, check_yang_baxter, FockSpace, FockVector};
use mixed_qaw::linalg::{CVec, C64};
use mixed_qaw::model::{build_model, ModelSpec};
use mixed_qaw::modular::{
    check_commutant_relation, conditional_expectation, modular_data, modular_flow, ExpectationData,
};
use mixed_qaw::ops::{
    adjoint_t, creation_norm_bound, field_d, field_s, left_annihilate, left_create,
    left_create_norm, norm_t, wick_s, wick_s_apply, Letter, Side, WickWord,
};
use mixed_qaw::probability::{
    centralizer_residual, centralizer_samples, coordinate_moments, pair_partition_moment,
    vacuum_moment, MomentQuery,
};
use mixed_qaw::Result;

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn space(spec: &ModelSpec) -> FockSpace {
    FockSpace::new(build_model(spec).expect("valid spec"))
}

fn canonical() -> ModelSpec {
    ModelSpec::new(&[2, 1], vec![vec![0.5, 0.3], vec![0.3, -0.4]])
        .with_block(0, 0, 1, 2.0)
        .with_truncation(5)
}

/// At most three sectors, total dimension at most four, `|q_ij| <= 0.9`,
/// with a rotation block on some sectors of dimension two or more.
fn random_specs(count: usize, rng: &mut ChaCha8Rng) -> Vec<ModelSpec> {
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let d = rng.gen_range(k..=4);
            let mut dims = vec![1; k];
            for _ in k..d {
                dims[rng.gen_range(0..k)] += 1;
            }
            let mut q = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in i..k {
                    let v = rng.gen_range(-0.9..=0.9);
                    q[i][j] = v;
                    q[j][i] = v;
                }
            }
            let mut spec = ModelSpec::new(&dims, q).with_truncation(5);
            for (s, &dim) in dims.iter().enumerate() {
                if dim >= 2 && rng.gen_bool(0.5) {
                    spec = spec.with_block(s, 0, 1, rng.gen_range(1.1..3.0));
                }
            }
            assert!(spec.violations().is_empty(), "{:?}", spec.violations());
            spec
        })
        .collect()
}

fn random_real(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0))
}

fn random_complex(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_word(fs: &FockSpace, rng: &mut ChaCha8Rng, len: usize, side: Side) -> Result<WickWord> {
    let model = fs.model();
    let letters = (0..len)
        .map(|_| {
            let sector = rng.gen_range(0..model.num_sectors());
            let mut vector = model.zero_vector();
            for k in model.sector_range(sector) {
                vector[k] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            Letter { vector, sector }
        })
        .collect();
    WickWord::new(fs, letters, side)
}

fn positivity() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::INFINITY;
    let mut single = 0.0f64;
    for spec in random_specs(20, &mut rng) {
        let fs = space(&spec);
        for n in 0..=5 {
            worst = worst.min(fs.kernel().min_eigenvalue(n));
        }
        if spec.sectors.len() == 1 && spec.dim() >= 2 {
            single = single.max((fs.kernel().min_eigenvalue(2) - (1.0 - spec.q[0][0].abs())).abs());
        }
    }
    for q in [-0.9, -0.4, 0.0, 0.3, 0.9] {
        for spec in [
            ModelSpec::single_sector(2, q).with_truncation(2),
            ModelSpec::single_sector(3, q).with_block(0, 0, 2, 1.7).with_truncation(2),
        ] {
            let fs = space(&spec);
            single = single.max((fs.kernel().min_eigenvalue(2) - (1.0 - q.abs())).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        worst > 0.0 && single <= 1e-12 && secs <= 60.0,
        format!("min eigenvalue {worst:.3e}, single-sector deviation {single:.1e}, {secs:.1}s"),
    ))
}

fn yang_baxter() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let worst = random_specs(20, &mut rng)
        .iter()
        .map(|s| check_yang_baxter(&space(s)))
        .fold(0.0, f64::max);
    Ok(outcome(worst <= 1e-13, format!("braid residual {worst:.1e}")))
}

fn ladder() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut specs = random_specs(20, &mut rng);
    specs.push(canonical());
    let mut worst = 0.0f64;
    for spec in &specs {
        let fs = space(spec);
        for n in 0..=5 {
            let diff = fs.kernel().p(n) - brute_force_p(&fs, n)?.matrix;
            // Frobenius norm bounds the operator norm from above.
            worst = worst.max(diff.norm());
        }
    }
    Ok(outcome(worst <= 1e-10, format!("max |ladder - permutation sum| {worst:.1e}")))
}

fn adjointness() -> Result<Outcome> {
    let fs = space(&canonical());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xi = random_complex(&mut rng, fs.model().dim());
        let adj = adjoint_t(&fs, &left_create(&fs, &xi)?)?;
        worst = worst.max(norm_t(&fs, &(&adj - &left_annihilate(&fs, &xi)?), fs.truncation())?);
    }
    Ok(outcome(worst <= 1e-10, format!("100 vectors, residual {worst:.1e}")))
}

fn norm_bound() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut excess = f64::NEG_INFINITY;
    for spec in [canonical(), ModelSpec::single_sector(2, 0.8).with_truncation(5)] {
        let fs = space(&spec);
        for _ in 0..50 {
            let xi = random_complex(&mut rng, fs.model().dim());
            excess = excess.max(left_create_norm(&fs, &xi)? - creation_norm_bound(&fs, &xi));
        }
    }
    Ok(outcome(excess <= 1e-10, format!("100 vectors, max norm - bound {excess:.3e}")))
}

fn wick_vacuum() -> Result<Outcome> {
    let fs = space(&canonical());
    let omega = FockVector::vacuum(fs.basis());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst = 0.0f64;
    for side in [Side::Left, Side::Right] {
        for _ in 0..20 {
            let len = rng.gen_range(1..=3);
            let w = random_word(&fs, &mut rng, len, side)?;
            let got = w.quantize(&fs)?.apply(&omega);
            worst = worst.max(fs.norm(&got.sub(&w.to_vector(&fs)?)));
        }
    }
    Ok(outcome(worst <= 1e-10, format!("40 words, residual {worst:.1e}")))
}

fn commutant() -> Result<Outcome> {
    let fs = space(&canonical());
    let model = fs.model();
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut bracket = 0.0f64;
    for _ in 0..10 {
        let s = field_s(&fs, &random_real(&mut rng, d))?;
        let dd = field_d(&fs, &model.commutant_vector(&random_real(&mut rng, d))?)?;
        let c = &(&s * &dd) - &(&dd * &s);
        bracket = bracket.max(norm_t(&fs, &c, fs.truncation() - 2)?);
    }
    let md = modular_data(&fs)?;
    let mut jsj = 0.0f64;
    for _ in 0..10 {
        jsj = jsj.max(check_commutant_relation(&fs, &md, &random_real(&mut rng, d))?);
    }
    Ok(outcome(
        bracket <= 1e-10 && jsj <= 1e-8,
        format!("[s, d] {bracket:.1e}, J s J - d {jsj:.1e}"),
    ))
}

fn flow() -> Result<Outcome> {
    let fs = space(&canonical());
    let md = modular_data(&fs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst = 0.0f64;
    for t in [-1.0, -0.3, 0.3, 1.0] {
        for _ in 0..3 {
            let xi = random_real(&mut rng, fs.model().dim());
            worst = worst.max(modular_flow(&fs, &md, t, &xi)?);
        }
    }
    Ok(outcome(worst <= 1e-8, format!("t in {{-1, -0.3, 0.3, 1}}, residual {worst:.1e}")))
}

fn expectation() -> Result<Outcome> {
    let fs = space(&canonical());
    let model = fs.model();
    let omega = FockVector::vacuum(fs.basis());
    let top = fs.truncation();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let (mut phi, mut idem, mut module, mut angle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for coords in [vec![0usize, 1], vec![2]] {
        let spanning: Vec<CVec> = coords.iter().map(|&k| model.basis_vector(k)).collect();
        let data = ExpectationData::new(&fs, &spanning)?;
        angle = angle.max(data.perp_angle());
        let coord_word = |pool: &[usize], len: usize, rng: &mut ChaCha8Rng| {
            let w: Vec<usize> = (0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            WickWord::coordinate_word(&fs, &w, Side::Left)
        };
        let all: Vec<usize> = (0..model.dim()).collect();
        for k in 0..50 {
            let len = rng.gen_range(1..=3);
            let w = coord_word(&all, len, &mut rng)?;
            let x_omega = wick_s_apply(&fs, &w, &omega)?;
            let e = data.quantize(&fs, &data.project(&x_omega))?;
            phi = phi.max((e.apply(&omega).levels[0][0] - x_omega.levels[0][0]).norm());
            if k < 10 {
                let ee = conditional_expectation(&fs, &data, &e)?;
                idem = idem.max(norm_t(&fs, &(&ee - &e), top - len)?);
            }
            let a = wick_s(&fs, &coord_word(&coords, 1, &mut rng)?)?;
            let b = wick_s(&fs, &coord_word(&coords, 1, &mut rng)?)?;
            let lhs = a.apply(&e.apply(&b.apply(&omega)));
            let rhs = data.project(&a.apply(&wick_s_apply(&fs, &w, &b.apply(&omega))?));
            module = module.max(fs.norm(&lhs.sub(&rhs)));
        }
    }
    Ok(outcome(
        phi <= 1e-10 && idem <= 1e-10 && module <= 1e-9 && angle <= 1e-9,
        format!("state {phi:.1e}, idempotent {idem:.1e}, module {module:.1e}, perp angle {angle:.1e}"),
    ))
}

fn moments() -> Result<Outcome> {
    let fs = space(&canonical());
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 1..=8 {
        let values = coordinate_moments(&fs, k)?;
        for (w, value) in values.into_iter().enumerate() {
            let query = MomentQuery::coordinates(&fs, &fs.basis().word(k, w));
            worst = worst.max((value - pair_partition_moment(&fs, &query)?).norm());
            count += 1;
        }
    }
    let mut single = 0.0f64;
    for q in [-0.7, 0.0, 0.45] {
        let fs = space(&ModelSpec::single_sector(2, q).with_truncation(3));
        let (e1, e2) = (fs.model().basis_vector(0), fs.model().basis_vector(1));
        let m = vacuum_moment(&fs, &MomentQuery::new(vec![e1.clone(), e2.clone(), e1, e2]))?;
        single = single.max((m - C64::new(q, 0.0)).norm());
    }
    Ok(outcome(
        worst <= 1e-10 && single <= 1e-10,
        format!("{count} queries, residual {worst:.1e}; phi(s1 s2 s1 s2) - q {single:.1e}"),
    ))
}

fn centralizer() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let tracial_fs = space(&ModelSpec::new(&[2, 1], vec![vec![0.5, 0.3], vec![0.3, -0.4]]).with_truncation(4));
    let samples = centralizer_samples(&tracial_fs, 3, 50, &mut rng)?;
    let mut tracial = 0.0f64;
    for _ in 0..5 {
        let len = rng.gen_range(1..=2);
        let x = wick_s(&tracial_fs, &random_word(&tracial_fs, &mut rng, len, Side::Left)?)?;
        tracial = tracial.max(centralizer_residual(&tracial_fs, &x, &samples));
    }

    let (mut fixed_res, mut control) = (0.0f64, f64::INFINITY);
    let wide = ModelSpec::new(&[3, 1], vec![vec![0.4, -0.6], vec![-0.6, 0.2]])
        .with_block(0, 0, 1, 2.0)
        .with_truncation(4);
    for spec in [canonical(), wide] {
        let fs = space(&spec);
        let fixed = fs.model().fixed_coords();
        let samples = centralizer_samples(&fs, 3, 50, &mut rng)?;
        for len in 1..=3 {
            let word: Vec<usize> = (0..len).map(|_| fixed[rng.gen_range(0..fixed.len())]).collect();
            let x = wick_s(&fs, &WickWord::coordinate_word(&fs, &word, Side::Left)?)?;
            fixed_res = fixed_res.max(centralizer_residual(&fs, &x, &samples));
        }
        let moving = wick_s(&fs, &WickWord::coordinate_word(&fs, &[0], Side::Left)?)?;
        control = control.min(centralizer_residual(&fs, &moving, &samples));
    }
    Ok(outcome(
        tracial <= 1e-10 && fixed_res <= 1e-9 && control > 1e-3,
        format!("tracial {tracial:.1e}, fixed-vector words {fixed_res:.1e}, rotating letter {control:.2e}"),
    ))
}

fn determinism() -> Result<Outcome> {
    let mut cfg = RunConfig::from_model(canonical().with_truncation(4));
    cfg.seed = 7;
    let (a, _) = cmd_check(&cfg, false)?;
    let (b, _) = cmd_check(&cfg, false)?;
    let same = a.to_json() == b.to_json();
    Ok(outcome(same && a.pass, format!("identical reports: {same}, suites pass: {}", a.pass)))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("positivity", positivity),
        ("yang_baxter", yang_baxter),
        ("ladder_vs_brute_force", ladder),
        ("adjointness", adjointness),
        ("norm_bound", norm_bound),
        ("wick_vacuum", wick_vacuum),
        ("commutant", commutant),
        ("modular_flow", flow),
        ("conditional_expectation", expectation),
        ("moment_oracle", moments),
        ("centralizer", centralizer),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !result.pass {
            failures += 1;
        }
        println!(
            "acceptance {:>2} {:<24} {} ({}; {:.1}s)",
            i + 1,
            name,
            if result.pass { "pass" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("acceptance: {failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
