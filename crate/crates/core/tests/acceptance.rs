//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! line per criterion and exits nonzero if any fails.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use common::{constrained_quadratic_minimizer, projector_from_basis, random_basis, random_psd, v};
use monosplit::fdr::{build_s, build_t, fdr_solve, FdrConfig, InclusionProblem, PrimalDualResult};
use monosplit::fpi::{equivalence_harness, fpi_explicit_solve, fpi_solve, FpiConfig};
use monosplit::km::{composed_alpha, km_solve, ErrorSchedule, RelaxationSchedule};
use monosplit::operators::{
    affine_gradient, affine_monotone, certify_averaged, identity_map, linear_monotone, normal_cone_box,
    partial_inverse_residual, partial_inverse_resolvent, shifted_abs, subdifferential_abs, zero_map, zero_operator,
    AveragedOperator, Cocoercive, ResolventFamily,
};
use monosplit::productspace::{
    consensus_projector, parallel_dr2, sum_splitting_solve, sum_splitting_via_fdr, ProductProblem, ProductResult,
};
use monosplit::spaces::Sampler;
use monosplit::variational::{l1_norm, min_over_subspace, quadratic_prox, quadratic_smooth, squared_distance};
use monosplit::{Error, Status, StopCriteria, SubspaceProjector, Vector};

type Outcome = Result<String, String>;

/// Largest relative membership defect seen by any run that did not diverge.
#[derive(Default)]
struct Membership {
    worst: f64,
    runs: usize,
    logged: usize,
}

impl Membership {
    fn record(&mut self, r: &PrimalDualResult) {
        if r.status != Status::Diverged {
            self.worst = self.worst.max(r.worst_membership_defect());
            self.runs += 1;
            self.logged += r.history.len();
        }
    }

    fn record_product(&mut self, r: &ProductResult) {
        if r.status != Status::Diverged {
            self.worst = self.worst.max(r.worst_membership_defect());
            self.runs += 1;
            self.logged += r.history.len();
        }
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_operator(s: &mut Sampler, n: usize, kind: usize) -> Arc<dyn ResolventFamily> {
    match kind % 4 {
        0 => Arc::new(subdifferential_abs(n)),
        1 => {
            let lo = s.vector(n, 1.0);
            let hi = &lo + Vector::from_fn(n, |_, _| s.uniform(0.1, 2.0));
            Arc::new(normal_cone_box(lo, hi).unwrap())
        }
        2 => Arc::new(linear_monotone(random_psd(s, n, 0.0, 3.0)).unwrap()),
        _ => Arc::new(shifted_abs(s.vector(n, 1.0))),
    }
}

fn random_subspace(s: &mut Sampler, n: usize) -> SubspaceProjector {
    let k = (s.uniform(0.0, (n + 1) as f64) as usize).min(n);
    projector_from_basis(&random_basis(s, n, k))
}

fn random_cocoercive(s: &mut Sampler, n: usize) -> Arc<dyn Cocoercive> {
    Arc::new(affine_gradient(random_psd(s, n, 0.1, 3.0), s.vector(n, 1.0)).unwrap())
}

fn periodic_relax(s: &mut Sampler, lo: f64, hi: f64) -> RelaxationSchedule {
    RelaxationSchedule::Periodic((0..7).map(|_| s.uniform(lo, hi)).collect())
}

fn max_pair_gap(a: &[(Vector, Vector)], b: &[(Vector, Vector)]) -> f64 {
    a.iter()
        .zip(b)
        .map(|((x1, y1), (x2, y2))| (x1 - x2).amax().max((y1 - y2).amax()))
        .fold(0.0, f64::max)
}

fn fdr_fpi_equivalence(mem: &mut Membership) -> Outcome {
    let start = Instant::now();
    let mut s = Sampler::new(1);
    let mut worst = 0.0f64;
    for case in 0..5 {
        let n = 2 + (s.uniform(0.0, 19.0) as usize).min(18);
        let a = random_operator(&mut s, n, case);
        let vp = random_subspace(&mut s, n);
        let b = random_cocoercive(&mut s, n);
        let gamma = s.uniform(0.05, 1.95) * b.beta();
        let relax = periodic_relax(&mut s, 0.1, 1.0);
        let x0 = vp.project(&s.vector(n, 2.0)).unwrap();
        let y0 = vp.project_complement(&s.vector(n, 2.0)).unwrap();
        let prob = InclusionProblem::new(a, b, vp).unwrap();
        let rep = equivalence_harness(&prob, gamma, &relax, &x0, &y0, 200).map_err(|e| e.to_string())?;
        if rep.length_mismatch || rep.iterations_compared < 2 {
            return Err(format!("case {case}: runs stopped at different iterations"));
        }
        worst = worst.max(rep.max_deviation);

        // The closed-form δ = 1 path of the general routine must agree too.
        let stop = StopCriteria::fixed(200).keep_iterates();
        let z0 = &x0 - &y0 * gamma;
        let cfg = FdrConfig::default()
            .with_gamma(gamma)
            .with_relax(relax.clone())
            .with_stop(stop);
        let fdr = fdr_solve(&prob, &cfg, &z0).map_err(|e| e.to_string())?;
        let fcfg = FpiConfig::default().with_gamma(gamma).with_relax(relax).with_stop(stop);
        let fpi = fpi_solve(&prob, &fcfg, None, &x0, &y0).map_err(|e| e.to_string())?;
        let (p, q) = (fdr.trajectory.clone().unwrap(), fpi.trajectory.clone().unwrap());
        if p.len() != q.len() {
            return Err(format!("case {case}: trajectory lengths {} and {}", p.len(), q.len()));
        }
        worst = worst.max(max_pair_gap(&p, &q));
        mem.record(&fdr);
        mem.record(&fpi);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("5 problems, 200 iterations, max deviation {worst:.2e} (≤ 1e-10), {elapsed:.2?} (< 1 s)"),
    )
}

fn forward_backward_reduction(mem: &mut Membership) -> Outcome {
    let start = Instant::now();
    let mut s = Sampler::new(2);
    let mut worst = 0.0f64;
    for case in 0..3 {
        let n = 3 + 4 * case;
        let a = random_operator(&mut s, n, case + 1);
        let b = random_cocoercive(&mut s, n);
        let gamma = s.uniform(0.2, 1.8) * b.beta();
        let relax = periodic_relax(&mut s, 0.1, 1.0);
        let prob = InclusionProblem::new(Arc::clone(&a), Arc::clone(&b), SubspaceProjector::identity(n)).unwrap();
        let x0 = s.vector(n, 3.0);
        let stop = StopCriteria::fixed(100).keep_iterates();
        let out = fpi_explicit_solve(&prob, gamma, &relax, &x0, &Vector::zeros(n), &stop).map_err(|e| e.to_string())?;
        let traj = out.trajectory.clone().unwrap();
        if traj.len() != 101 {
            return Err(format!("case {case}: {} iterates instead of 101", traj.len()));
        }
        let mut x = x0;
        for (k, (xn, _)) in traj.iter().enumerate() {
            worst = worst.max((xn - &x).amax());
            let step = a.resolve(gamma, &(&x - b.eval(&x).unwrap() * gamma)).unwrap() - &x;
            x += step * relax.lambda(k);
        }
        mem.record(&out);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("3 problems, 100 iterations, max coordinate gap {worst:.2e} (≤ 1e-12), {elapsed:.2?} (< 1 s)"),
    )
}

fn partial_inverse_correctness() -> Outcome {
    let mut s = Sampler::new(3);
    let mut worst = 0.0f64;
    let mut worst_limit = 0.0f64;
    for case in 0..100 {
        let n = 1 + case % 8;
        let a: Arc<dyn ResolventFamily> = match case % 3 {
            0 => Arc::new(subdifferential_abs(n)),
            1 => random_operator(&mut s, n, 1),
            _ => {
                let g = common::gaussian_matrix(&mut s, n, n);
                let m = random_psd(&mut s, n, 0.0, 3.0) + (&g - g.transpose()) * 0.5;
                Arc::new(linear_monotone(m).unwrap())
            }
        };
        let vp = random_subspace(&mut s, n);
        let gamma = s.uniform(0.05, 5.0);
        let x = s.vector(n, 3.0);
        let z = partial_inverse_resolvent(a.as_ref(), &vp, gamma, &x).map_err(|e| e.to_string())?;
        let r = partial_inverse_residual(a.as_ref(), &vp, gamma, &x, &z).map_err(|e| e.to_string())?;
        worst = worst.max(r);

        let j = a.resolve(gamma, &x).unwrap();
        let whole = partial_inverse_resolvent(a.as_ref(), &SubspaceProjector::identity(n), gamma, &x).unwrap();
        let none = partial_inverse_resolvent(a.as_ref(), &SubspaceProjector::zero(n), gamma, &x).unwrap();
        worst_limit = worst_limit.max((whole - &j).amax()).max((none - (&x - &j)).amax());
    }
    check(
        worst <= 1e-9 && worst_limit <= 1e-12,
        format!("100 cases, unfolding residual {worst:.2e} (≤ 1e-9), trivial limits {worst_limit:.2e} (≤ 1e-12)"),
    )
}

fn quadratic_oracle_agreement(mem: &mut Membership) -> Outcome {
    let mut s = Sampler::new(4);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut most_iters = 0;
    let stop = StopCriteria::new(1e-12, 50_000);
    for case in 0..10 {
        let n = 2 + case % 9;
        let k = 1 + (s.uniform(0.0, n as f64) as usize).min(n - 1);
        let basis = random_basis(&mut s, n, k);
        let vp = projector_from_basis(&basis);
        let qf = random_psd(&mut s, n, 0.0, 2.0);
        let qg = random_psd(&mut s, n, 0.5, 3.0);
        let bf = s.vector(n, 1.0);
        let bg = s.vector(n, 1.0);
        let oracle = constrained_quadratic_minimizer(&(&qf + &qg), &(&bf + &bg), &basis);

        let a: Arc<dyn ResolventFamily> = Arc::new(affine_monotone(qf.clone(), -&bf).unwrap());
        let b: Arc<dyn Cocoercive> = Arc::new(affine_gradient(qg.clone(), bg.clone()).unwrap());
        let prob = InclusionProblem::new(a, b, vp.clone()).unwrap();
        let gamma = prob.beta();
        let zero = Vector::zeros(n);
        let cfg = FdrConfig::default().with_stop(stop);

        let mut runs = Vec::new();
        let t = Instant::now();
        runs.push(("fdr", fdr_solve(&prob, &cfg, &zero), t.elapsed()));
        let t = Instant::now();
        let relax = RelaxationSchedule::Constant(1.0);
        runs.push(("fpi-explicit", fpi_explicit_solve(&prob, gamma, &relax, &zero, &zero, &stop), t.elapsed()));
        let t = Instant::now();
        let f = Arc::new(quadratic_prox(qf, bf).unwrap());
        let g = Arc::new(quadratic_smooth(qg, bg).unwrap());
        runs.push(("variational", min_over_subspace(f, g, vp, &cfg, &zero), t.elapsed()));

        for (name, out, took) in runs {
            let out = out.map_err(|e| format!("case {case} {name}: {e}"))?;
            if out.status != Status::Converged {
                return Err(format!("case {case} {name}: {} after {} iterations", out.status, out.iterations));
            }
            worst = worst.max((&out.x - &oracle).norm());
            slowest = slowest.max(took);
            most_iters = most_iters.max(out.iterations);
            mem.record(&out);
        }
    }
    check(
        worst <= 1e-7 && slowest < Duration::from_secs(5),
        format!(
            "10 programs × 3 solvers, distance to KKT solution {worst:.2e} (≤ 1e-7), \
             at most {most_iters} iterations (≤ 50000), slowest {slowest:.2?} (< 5 s)"
        ),
    )
}

fn product_space_fidelity(mem: &mut Membership) -> Outcome {
    let mut s = Sampler::new(5);
    let mut worst_gap = 0.0f64;
    for case in 0..3 {
        let m = 2 + case;
        let d = 2 + case;
        let raw: Vec<f64> = (0..m).map(|_| s.uniform(0.2, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let blocks: Vec<Arc<dyn ResolventFamily>> = (0..m).map(|i| random_operator(&mut s, d, i + case)).collect();
        let b = random_cocoercive(&mut s, d);
        let gamma = s.uniform(0.2, 1.8) * b.beta();
        let prob = ProductProblem::new(blocks, b, &w).unwrap();
        let z0 = s.vector(m * d, 2.0);
        for errs in [ErrorSchedule::zero(), ErrorSchedule::geometric(0.5, 0.7)] {
            let cfg = FdrConfig::default()
                .with_gamma(gamma)
                .with_relax(periodic_relax(&mut s, 0.2, 1.0))
                .with_errors(errs.clone(), errs)
                .with_stop(StopCriteria::fixed(200).keep_iterates());
            let direct = sum_splitting_solve(&prob, &cfg, &z0).map_err(|e| e.to_string())?;
            let adapter = sum_splitting_via_fdr(&prob, &cfg, &z0).map_err(|e| e.to_string())?;
            let (p, q) = (direct.trajectory.unwrap(), adapter.trajectory.unwrap());
            if p.len() != q.len() || p.len() != 201 {
                return Err(format!("case {case}: trajectory lengths {} and {}", p.len(), q.len()));
            }
            worst_gap = worst_gap.max(max_pair_gap(&p, &q));
        }
    }

    let mut worst_audit = 0.0f64;
    for m in 2..6 {
        let raw: Vec<f64> = (0..m).map(|_| s.uniform(0.1, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let audit = consensus_projector(&w, m, 3).unwrap().audit(200, 1e-10, m as u64);
        worst_audit = worst_audit.max(audit.idempotence).max(audit.self_adjointness);
    }

    let blocks: Vec<Arc<dyn ResolventFamily>> = [0.0, 1.0, 2.0]
        .iter()
        .map(|c| Arc::new(shifted_abs(v(&[*c]))) as Arc<dyn ResolventFamily>)
        .collect();
    let median = ProductProblem::uniform(blocks, Arc::new(zero_map(1, 1.0).unwrap())).unwrap();
    let cfg = FdrConfig::default().with_stop(StopCriteria::new(1e-12, 100_000));
    let out = sum_splitting_via_fdr(&median, &cfg, &v(&[5.0, -3.0, 0.5])).map_err(|e| e.to_string())?;
    let direct = sum_splitting_solve(&median, &cfg, &v(&[5.0, -3.0, 0.5])).map_err(|e| e.to_string())?;
    mem.record_product(&out);
    mem.record_product(&direct);
    let med_err = (out.x[0] - 1.0).abs().max((direct.x[0] - 1.0).abs());
    let transfer = out.certificate.worst();

    check(
        worst_gap <= 1e-12 && worst_audit <= 1e-10 && med_err <= 1e-6 && out.status == Status::Converged,
        format!(
            "adapter vs direct loop {worst_gap:.2e} (≤ 1e-12), consensus audit {worst_audit:.2e} (≤ 1e-10), \
             median error {med_err:.2e} (≤ 1e-6), block certificate {transfer:.2e}"
        ),
    )
}

fn parallel_douglas_rachford(mem: &mut Membership) -> Outcome {
    let one = DMatrix::identity(1, 1);
    let stop = StopCriteria::new(1e-13, 100_000);
    let mut worst = 0.0f64;
    for (gamma, lambda) in [(0.5, 1.0), (2.0, 1.4), (0.1, 0.3)] {
        let out = parallel_dr2(
            Arc::new(affine_monotone(one.clone(), v(&[-4.0])).unwrap()),
            Arc::new(affine_monotone(one.clone(), v(&[2.0])).unwrap()),
            gamma,
            &RelaxationSchedule::Constant(lambda),
            &ErrorSchedule::zero(),
            (&v(&[7.0]), &v(&[-3.0])),
            &stop,
        )
        .map_err(|e| e.to_string())?;
        if out.status != Status::Converged {
            return Err(format!("γ = {gamma}, λ = {lambda}: {}", out.status));
        }
        worst = worst.max((out.x[0] - 1.0).abs());
        mem.record_product(&out);
    }

    let zero: Arc<dyn ResolventFamily> = Arc::new(zero_operator(3));
    let (z1, z2) = (v(&[1.0, -2.0, 0.5]), v(&[4.0, 0.0, -1.5]));
    let out = parallel_dr2(
        Arc::clone(&zero),
        zero,
        0.7,
        &RelaxationSchedule::Constant(1.3),
        &ErrorSchedule::zero(),
        (&z1, &z2),
        &StopCriteria::fixed(50).keep_iterates(),
    )
    .map_err(|e| e.to_string())?;
    let mean = (&z1 + &z2) / 2.0;
    let drift = out
        .trajectory
        .unwrap()
        .iter()
        .map(|(x, _)| (x - &mean).amax())
        .fold(0.0, f64::max);
    // Stationary up to rounding: a few ulps of the mean.
    let ulps = 4.0 * f64::EPSILON * (1.0 + mean.amax());
    check(
        worst <= 1e-8 && drift <= ulps,
        format!("shifted pair limit error {worst:.2e} (≤ 1e-8), zero-operator drift {drift:.1e} (≤ {ulps:.1e})"),
    )
}

fn errored_km_robustness() -> Outcome {
    let geo = ErrorSchedule::geometric(1.0, 0.5);
    let tight = StopCriteria::new(1e-12, 200_000);
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    let mut compare = |name: &str, clean: &Vector, noisy: &Vector| {
        worst = worst.max((clean - noisy).norm());
        names.push(name.to_string());
    };

    // km: alternating projections.
    let diag = SubspaceProjector::constant(2);
    let axis = SubspaceProjector::dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
    let ops = [AveragedOperator::projector(diag.clone()), AveragedOperator::projector(axis)];
    let relax = RelaxationSchedule::Constant(1.0);
    let z0 = v(&[0.0, 2.0]);
    let clean = km_solve(&ops, &relax, &ErrorSchedule::zero(), &z0, &tight).map_err(|e| e.to_string())?;
    let noisy = km_solve(&ops, &relax, &geo, &z0, &tight).map_err(|e| e.to_string())?;
    compare("km", &clean.point, &noisy.point);

    // fdr: box and identity on the diagonal.
    let boxp = InclusionProblem::new(
        Arc::new(normal_cone_box(v(&[1.0, 1.0]), v(&[2.0, 2.0])).unwrap()),
        Arc::new(identity_map(2)),
        diag,
    )
    .unwrap();
    let cfg = FdrConfig::default().with_stop(tight);
    let clean = fdr_solve(&boxp, &cfg, &v(&[5.0, -3.0])).map_err(|e| e.to_string())?;
    let noisy = fdr_solve(&boxp, &cfg.clone().with_errors(geo.clone(), geo.clone()), &v(&[5.0, -3.0]))
        .map_err(|e| e.to_string())?;
    compare("fdr", &clean.x, &noisy.x);

    // variational: ℓ1 plus distance on the zero-mean line.
    let run_l1 = |errs: ErrorSchedule| {
        min_over_subspace(
            Arc::new(l1_norm(2)),
            Arc::new(squared_distance(v(&[3.0, -3.0]))),
            SubspaceProjector::zero_mean(2),
            &FdrConfig::default()
                .with_gamma(1.0)
                .with_errors(errs.clone(), errs)
                .with_stop(tight),
            &Vector::zeros(2),
        )
    };
    let clean = run_l1(ErrorSchedule::zero()).map_err(|e| e.to_string())?;
    let noisy = run_l1(geo.clone()).map_err(|e| e.to_string())?;
    compare("variational", &clean.x, &noisy.x);

    // product: two boxes and the identity.
    let prod = ProductProblem::uniform(
        vec![
            Arc::new(normal_cone_box(v(&[1.0]), v(&[2.0])).unwrap()),
            Arc::new(normal_cone_box(v(&[0.0]), v(&[1.5])).unwrap()),
        ],
        Arc::new(identity_map(1)),
    )
    .unwrap();
    let cfg = FdrConfig::default().with_gamma(1.0).with_stop(tight);
    let clean = sum_splitting_solve(&prod, &cfg, &v(&[3.0, -2.0])).map_err(|e| e.to_string())?;
    let noisy = sum_splitting_solve(&prod, &cfg.clone().with_errors(geo.clone(), geo.clone()), &v(&[3.0, -2.0]))
        .map_err(|e| e.to_string())?;
    compare("product", &clean.x, &noisy.x);

    // dr2: shifted linear pair.
    let one = DMatrix::identity(1, 1);
    let dr2 = |errs: &ErrorSchedule| {
        parallel_dr2(
            Arc::new(affine_monotone(one.clone(), v(&[-4.0])).unwrap()),
            Arc::new(affine_monotone(one.clone(), v(&[2.0])).unwrap()),
            0.5,
            &RelaxationSchedule::Constant(1.0),
            errs,
            (&v(&[0.0]), &v(&[0.0])),
            &tight,
        )
    };
    let clean = dr2(&ErrorSchedule::zero()).map_err(|e| e.to_string())?;
    let noisy = dr2(&geo).map_err(|e| e.to_string())?;
    compare("dr2", &clean.x, &noisy.x);

    // A 1/n error schedule with constant relaxation is not summable.
    let harmonic = ErrorSchedule::polynomial(1.0, 1.0);
    let rejected = [
        km_solve(&ops, &relax, &harmonic, &z0, &tight).err(),
        fdr_solve(&boxp, &FdrConfig::default().with_errors(harmonic.clone(), ErrorSchedule::zero()), &z0).err(),
        fdr_solve(&boxp, &FdrConfig::default().with_errors(ErrorSchedule::zero(), harmonic.clone()), &z0).err(),
        sum_splitting_solve(
            &prod,
            &FdrConfig::default().with_errors(harmonic.clone(), ErrorSchedule::zero()),
            &v(&[0.0, 0.0]),
        )
        .err(),
        dr2(&harmonic).err(),
    ];
    let all_rejected = rejected.iter().all(|e| matches!(e, Some(Error::Schedule(_))));
    check(
        worst <= 1e-6 && all_rejected,
        format!(
            "geometric errors move solutions by {worst:.2e} (≤ 1e-6) on {}; \
             1/n errors rejected before iterating: {all_rejected}",
            names.join(", ")
        ),
    )
}

fn averagedness_certificates() -> Outcome {
    let mut s = Sampler::new(8);
    let mut alpha_mismatch = 0usize;
    for _ in 0..20 {
        let m = 1 + (s.uniform(0.0, 6.0) as usize).min(5);
        let alphas: Vec<f64> = (0..m).map(|_| s.uniform(0.01, 0.99)).collect();
        let mut sorted = alphas.clone();
        sorted.sort_by(f64::total_cmp);
        let amax = sorted[m - 1];
        let mf = m as f64;
        let expected = mf * amax / (1.0 + (mf - 1.0) * amax);
        if composed_alpha(&alphas).ok() != Some(expected) {
            alpha_mismatch += 1;
        }
    }

    let mut worst_t = f64::NEG_INFINITY;
    let mut worst_s = f64::NEG_INFINITY;
    let mut alpha_ok = true;
    for case in 0..10 {
        let n = 2 + case;
        let a = random_operator(&mut s, n, case);
        let vp = random_subspace(&mut s, n);
        let b = random_cocoercive(&mut s, n);
        let gamma = s.uniform(0.05, 1.95) * b.beta();
        let t = build_t(a, vp.clone(), gamma).map_err(|e| e.to_string())?;
        let sm = build_s(Arc::clone(&b), vp, gamma).map_err(|e| e.to_string())?;
        alpha_ok &= t.alpha() == 0.5 && (sm.alpha() - gamma / (2.0 * b.beta())).abs() <= 1e-15;
        worst_t = worst_t.max(certify_averaged(&t, 1000, 1e-9, case as u64).worst_violation);
        worst_s = worst_s.max(certify_averaged(&sm, 1000, 1e-9, 100 + case as u64).worst_violation);
    }
    check(
        alpha_mismatch == 0 && alpha_ok && worst_t <= 1e-9 && worst_s <= 1e-9,
        format!(
            "composed constant exact on {}/20 lists; over 10 × 1000 pairs worst violation \
             T {worst_t:.2e}, S {worst_s:.2e} (≤ 1e-9)",
            20 - alpha_mismatch
        ),
    )
}

fn membership_invariants(mem: &Membership) -> Outcome {
    check(
        mem.worst <= 1e-12 && mem.runs > 0,
        format!(
            "{} runs, {} logged iterations, worst relative defect {:.2e} (≤ 1e-12)",
            mem.runs, mem.logged, mem.worst
        ),
    )
}

fn cli_determinism_and_validation() -> Outcome {
    let specs = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let bin = env!("CARGO_BIN_EXE_monosplit");
    let run = |path: &Path| Command::new(bin).arg("run").arg(path).output().map_err(|e| e.to_string());

    let mut identical = 0;
    let names = ["fdr-box.toml", "fpi-linear.toml", "product-median.toml", "variational-l1.toml"];
    for name in names {
        let a = run(&specs.join(name))?;
        let b = run(&specs.join(name))?;
        if a.status.code() == Some(0) && !a.stdout.is_empty() && a.stdout == b.stdout {
            identical += 1;
        }
    }

    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let read = |name: &str| std::fs::read_to_string(specs.join(name)).map_err(|e| e.to_string());
    let cases = [
        ("γ = 2β", read("fdr-box.toml")?.replace("gamma = 1.0", "gamma = 2.0"), "]0, 2β["),
        ("dr2 λ = 1.6", read("dr2-shifted.toml")?.replace("value = 1.2", "value = 1.6"), "]0, 3/2["),
        (
            "unknown operator",
            read("fdr-box.toml")?.replace("kind = \"box\"", "kind = \"hexagon\""),
            "expected one of: zero, abs",
        ),
    ];
    let mut rejected = 0;
    for (i, (label, text, range)) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("bad{i}.toml"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let out = run(&path)?;
        let err = String::from_utf8_lossy(&out.stderr);
        if out.status.code() == Some(64) && err.contains(range) {
            rejected += 1;
        } else {
            return Err(format!("{label}: exit {:?}, stderr {err}", out.status.code()));
        }
    }
    check(
        identical == names.len() && rejected == 3,
        format!("{identical}/{} specs byte-identical across runs, {rejected}/3 rejections exit 64 citing the range", names.len()),
    )
}

fn main() -> ExitCode {
    let mut mem = Membership::default();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("fdr/fpi equivalence", fdr_fpi_equivalence(&mut mem)),
        ("forward-backward reduction", forward_backward_reduction(&mut mem)),
        ("partial-inverse resolvent", partial_inverse_correctness()),
        ("quadratic programs vs KKT", quadratic_oracle_agreement(&mut mem)),
        ("product-space fidelity", product_space_fidelity(&mut mem)),
        ("parallel Douglas-Rachford", parallel_douglas_rachford(&mut mem)),
        ("errored KM robustness", errored_km_robustness()),
        ("averagedness certificates", averagedness_certificates()),
    ];
    results.push(("membership invariants", membership_invariants(&mem)));
    results.push(("cli determinism and validation", cli_determinism_and_validation()));

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
