//! Acceptance suite: one line per criterion with its measured figures and
//! wall time. Exits nonzero if any criterion fails.

use bordertn::boundary::{
    contract_kagome, contract_square, cost_exact_rvb, dense_sandwich, random_kagome_network, random_square_network,
    ContractOptions, ContractionReport, PepsNetwork,
};
use bordertn::conversions::{analyze_degeneration, apply_restriction, lift_to_lattice};
use bordertn::interpolation::{
    expectation_complex, expectation_real, expectation_degree, reconstruct_state, InterpolationPlan, SampleMode,
};
use bordertn::observable::random_product_observable;
use bordertn::structures::{make_plaquette, single_edge_structure, w_state, Plaquette};
use bordertn::tensor::{DenseTensor, Leg};
use bordertn::zoo::{
    check_cycle_vectors, check_w_traces, cycle_orthogonal_vectors, diag_mamu_to_ghz, lambda_degeneration_222,
    lambda_restriction_223, lambda_restriction_333, mamu4_to_ghz, optimal_g_mamu, w_border_mps, w_product_sample,
    RvbPatch,
};
use bordertn::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: &DenseTensor, b: &DenseTensor) -> Result<f64, String> {
    let a = a.permuted(&b.leg_ids()).map_err(|e| e.to_string())?;
    Ok(a.sub(b).map_err(|e| e.to_string())?.norm() / b.norm())
}

fn lambda_on_parties() -> DenseTensor {
    make_plaquette(&Plaquette::Lambda, "t").unwrap().relabel_with(|id| format!("p{}", &id[2..])).unwrap()
}

fn lambda_restriction() -> Outcome {
    let lambda = lambda_on_parties();
    let mut worst = 0.0f64;
    for triple in [lambda_restriction_223(), lambda_restriction_333()] {
        let (s, fam) = triple.restriction_family().map_err(|e| e.to_string())?;
        let out = apply_restriction(&s.tensor().unwrap(), &fam.evaluate(c(0.0))).map_err(|e| e.to_string())?;
        worst = worst.max(out.permuted(&lambda.leg_ids()).unwrap().max_abs_diff(&lambda).unwrap());
    }
    ensure(worst <= 1e-14, || format!("max error {worst:.2e}"))?;
    Ok(format!("MaMu(2,3,2) and MaMu(3,3,3) triples give lambda, max error {worst:.1e}"))
}

fn lambda_degeneration() -> Outcome {
    let s = single_edge_structure(Plaquette::Mamu { dims: vec![2, 2, 2] }).unwrap();
    let lifted = lift_to_lattice(&lambda_degeneration_222().unwrap(), &s).unwrap();
    let cert = analyze_degeneration(&s.tensor().unwrap(), &lifted.family, &lambda_on_parties(), 1e-12)
        .map_err(|e| e.to_string())?;
    ensure((cert.d, cert.e) == (2, 2), || format!("d={}, e={}", cert.d, cert.e))?;
    ensure((cert.proportionality - c(1.0)).norm() <= 1e-12, || format!("factor {}", cert.proportionality))?;
    let lead = cert.leading.sub(&lambda_on_parties().permuted(&cert.leading.leg_ids()).unwrap()).unwrap();
    let lead_err = lead.max_abs();
    // |2> on the third party, (1/4|00> - |11>) on the first two
    let legs = (0..3).map(|l| Leg::new(format!("p{l}"), 3)).collect();
    let want = DenseTensor::from_fn(legs, |i| match i {
        [0, 0, 2] => c(0.25),
        [1, 1, 2] => c(-1.0),
        _ => c(0.0),
    })
    .unwrap();
    let exps: Vec<u32> = cert.residual_terms.keys().copied().collect();
    ensure(exps == vec![4], || format!("residual exponents {exps:?}"))?;
    let got = cert.residual_terms[&4].permuted(&want.leg_ids()).unwrap();
    let res_err = got.max_abs_diff(&want).unwrap();
    ensure(lead_err <= 1e-12 && res_err <= 1e-12, || format!("leading {lead_err:.1e}, residual {res_err:.1e}"))?;
    Ok(format!("d=2 e=2, leading = lambda (err {lead_err:.1e}), eps^4 residual err {res_err:.1e}"))
}

fn kagome_interpolation() -> Outcome {
    let patch = RvbPatch::new(1, 2).map_err(|e| e.to_string())?;
    let target = patch.target().unwrap();
    let plan = InterpolationPlan::new(SampleMode::Real, patch.degree(), 0.7).unwrap();
    ensure(plan.points.len() == 5, || format!("{} samples", plan.points.len()))?;
    let rec = reconstruct_state(&plan, |x| patch.sample(x)).map_err(|e| e.to_string())?;
    let state_err = rel(&rec.state, &target)?;
    ensure(state_err <= 1e-8, || format!("state error {state_err:.2e}"))?;

    let deg = expectation_degree(patch.degree());
    let real = InterpolationPlan::new(SampleMode::Real, deg, 0.7).unwrap();
    let cplx = InterpolationPlan::new(SampleMode::Complex, deg, 0.7).unwrap();
    ensure(real.points.len() == 9, || format!("{} expectation samples", real.points.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_r, mut worst_c) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let obs = random_product_observable(&patch.physical_sites(), &mut rng);
        let ops = obs.site_operators().expect("product observable");
        let want = obs.expectation(&target, &target).unwrap();
        let value = |b: C64, k: C64| patch.sandwich(b, k, &ops, None);
        let r = expectation_real(&real, value).map_err(|e| e.to_string())?;
        let z = expectation_complex(&cplx, value).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((r.value - want).norm() / want.norm());
        worst_c = worst_c.max((z.value - want).norm() / want.norm());
    }
    ensure(worst_r <= 1e-8 && worst_c <= 1e-8, || format!("real {worst_r:.2e}, complex {worst_c:.2e}"))?;
    Ok(format!(
        "state from 5 samples {state_err:.1e}; 10 observables from 9 samples: real {worst_r:.1e}, roots of unity {worst_c:.1e}"
    ))
}

fn w_interpolation() -> Outcome {
    let mut worst = 0.0f64;
    for len in 4..=6 {
        let w = w_state(len).unwrap();
        let plan = InterpolationPlan::new(SampleMode::Complex, len - 1, 0.7).unwrap();
        let rec = reconstruct_state(&plan, |x| w_product_sample(len, x)).map_err(|e| e.to_string())?;
        worst = worst.max(rec.state.permuted(&w.leg_ids()).unwrap().max_abs_diff(&w).unwrap());
        let (s, fam) = w_border_mps(len).unwrap();
        let psi = s.tensor().unwrap();
        let real = InterpolationPlan::new(SampleMode::Real, len - 1, 0.7).unwrap();
        let rec = reconstruct_state(&real, |x| Ok(apply_restriction(&psi, &fam.evaluate(x))?.scaled(x.inv())))
            .map_err(|e| e.to_string())?;
        worst = worst.max(rec.state.permuted(&w.leg_ids()).unwrap().max_abs_diff(&w).unwrap());
        check_w_traces(len, 1e-12).map_err(|e| format!("L={len}: {e}"))?;
    }
    ensure(worst <= 1e-10, || format!("max error {worst:.2e}"))?;
    Ok(format!("W(4..6) from product and border-MPS families, max error {worst:.1e}; trace identities hold"))
}

fn mamu3() -> Outcome {
    let (g, best) = optimal_g_mamu([2, 2, 2]);
    let cases = [([2, 2, 3], 5, 4), ([2, 3, 3], 5, 5), ([2, 2, 2], g, 3)];
    let mut parts = Vec::new();
    for (k, g, want) in cases {
        let deg = diag_mamu_to_ghz(k, g).map_err(|e| e.to_string())?;
        let n = deg.solutions.solutions.len();
        ensure(n == want, || format!("{k:?} g={g}: {n} solutions, expected {want}"))?;
        let check = deg.ghz_check(1e-10).map_err(|e| e.to_string())?;
        ensure(check.ok && check.ranks.iter().all(|&r| r == n), || format!("{k:?}: ranks {:?}", check.ranks))?;
        parts.push(format!("{k:?} g={g}: {n}"));
    }
    ensure(best == 3, || format!("optimal count for (2,2,2) is {best}"))?;
    Ok(format!("{}; GHZ ranks verified", parts.join(", ")))
}

fn mamu4() -> Outcome {
    let mut counts = Vec::new();
    for k in 2..=4 {
        let deg = mamu4_to_ghz(k).map_err(|e| e.to_string())?;
        let n = deg.solutions.solutions.len();
        let check = deg.ghz_check(1e-10).map_err(|e| e.to_string())?;
        ensure(check.ok, || format!("k={k}: {:?}", check.diagnostic))?;
        counts.push(n);
    }
    ensure(counts == vec![2, 5, 8], || format!("counts {counts:?}"))?;
    for m in 4..=6 {
        let v = cycle_orthogonal_vectors(m).map_err(|e| e.to_string())?;
        check_cycle_vectors(&v).map_err(|e| format!("m={m}: {e}"))?;
    }
    Ok(format!("counts {counts:?} for k=2,3,4; cycle vectors valid for m=4,5,6"))
}

fn boundary_correctness() -> Outcome {
    let chis: Vec<usize> = (1..=16).collect();
    let mut worst = 0.0f64;
    let mut runs = 0;
    type Build = fn(&mut ChaCha8Rng) -> PepsNetwork;
    type Run = fn(&PepsNetwork, &PepsNetwork, &ContractOptions) -> bordertn::Result<ContractionReport>;
    let lattices: [(Build, Run, &str); 2] = [
        (|r| random_square_network(4, 4, 2, 2, 2, r).unwrap(), contract_square, "square 4x4"),
        (|r| random_kagome_network(2, 2, [2, 2, 2], [2, 2, 2], 2, r).unwrap(), contract_kagome, "kagome 2x2"),
    ];
    for seed in 0..20 {
        for (build, run, name) in &lattices {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (ket, bra) = (build(&mut rng), build(&mut rng));
            let want = dense_sandwich(&ket, &bra, &BTreeMap::new()).map_err(|e| e.to_string())?;
            let got = run(&ket, &bra, &ContractOptions::exact()).map_err(|e| e.to_string())?;
            let err = (got.value - want).norm() / want.norm();
            ensure(err <= 1e-10, || format!("{name} seed {seed}: relative error {err:.2e}"))?;
            worst = worst.max(err);
            let mut prev = f64::INFINITY;
            for &chi in &chis {
                let w = run(&ket, &bra, &ContractOptions::truncated(chi)).map_err(|e| e.to_string())?.discarded_weight;
                ensure(w <= prev, || format!("{name} seed {seed}: weight rises to {w:.3e} at chi={chi}"))?;
                prev = w;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} networks exact to {worst:.1e}; discarded weight nonincreasing over chi=1..16"))
}

/// Least-squares slope of `ln y` against `ln x`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest per-absorption count and the per-tensor model, for one run.
fn peak_and_model(r: &ContractionReport, sites: usize) -> (f64, f64) {
    let peak = (r.step_max.merge + r.step_max.absorb + r.step_max.svd) as f64;
    (peak, r.model_cost.expect("lattice model") / sites as f64)
}

struct Sweep {
    name: &'static str,
    xs: Vec<f64>,
    runs: Vec<(PepsNetwork, usize)>,
    /// Reported but not gated.
    informational: bool,
}

fn cost_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sq = |a, b, rng: &mut ChaCha8Rng| random_square_network(6, 6, a, b, 2, rng).unwrap();
    let kg = |u, d, rng: &mut ChaCha8Rng| random_kagome_network(3, 5, u, d, 2, rng).unwrap();
    let fixed_sq = sq(2, 2, &mut rng);
    let fixed_kg = kg([2, 2, 2], [2, 2, 2], &mut rng);
    let sweeps = vec![
        Sweep {
            name: "square chi",
            xs: vec![4.0, 8.0, 16.0],
            runs: [4, 8, 16].iter().map(|&chi| (fixed_sq.clone(), chi)).collect(),
            informational: false,
        },
        Sweep {
            name: "square D1",
            xs: vec![2.0, 4.0, 8.0],
            runs: [2, 4, 8].iter().map(|&d| (sq(d, 2, &mut rng), 4)).collect(),
            informational: false,
        },
        Sweep {
            name: "square D2",
            xs: vec![2.0, 4.0, 8.0],
            runs: [2, 4, 8].iter().map(|&d| (sq(2, d, &mut rng), 4)).collect(),
            informational: false,
        },
        Sweep {
            name: "kagome chi",
            xs: vec![4.0, 8.0, 16.0],
            runs: [4, 8, 16].iter().map(|&chi| (fixed_kg.clone(), chi)).collect(),
            informational: false,
        },
        Sweep {
            name: "kagome K1/D2",
            xs: vec![2.0, 4.0, 8.0],
            runs: [2, 4, 8].iter().map(|&d| (kg([d, 2, 2], [2, d, 2], &mut rng), 4)).collect(),
            informational: false,
        },
        Sweep {
            name: "kagome K2/D3",
            xs: vec![2.0, 4.0, 8.0],
            runs: [2, 4, 8].iter().map(|&d| (kg([2, d, 2], [2, 2, d], &mut rng), 4)).collect(),
            informational: true,
        },
    ];
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for s in &sweeps {
        let mut peaks = Vec::new();
        let mut models = Vec::new();
        for (net, chi) in &s.runs {
            let r = bordertn::boundary::contract_sandwich(net, net, &ContractOptions::truncated(*chi))
                .map_err(|e| e.to_string())?;
            let (p, m) = peak_and_model(&r, net.sites().len());
            ensure(p <= m * (1.0 + 1e-12), || format!("{}: measured {p} above the model {m}", s.name))?;
            peaks.push(p);
            models.push(m);
        }
        let (got, want) = (slope(&s.xs, &peaks), slope(&s.xs, &models));
        let ok = (got - want).abs() <= 0.3;
        let tag = if s.informational { " (bound only)" } else { "" };
        lines.push(format!("{} {got:.2}/{want:.2}{tag}", s.name));
        if !ok && !s.informational {
            failures.push(format!("{} slope {got:.2} vs model {want:.2}", s.name));
        }
    }
    for l in 2..=6u32 {
        let three = cost_exact_rvb(l, 3.0, 2.0, 2).exact;
        let two = cost_exact_rvb(l, 2.0, 2.0, 2).degeneration;
        let bound = 1.5f64.powi(4 * l as i32) / (4.0 * f64::from(l) + 1.0);
        if three / two < bound {
            failures.push(format!("L={l}: ratio {:.3e} below {bound:.3e}", three / two));
        }
    }
    if failures.is_empty() {
        Ok(format!("slopes measured/model: {}; exact RVB ratio bound holds for L=2..6", lines.join(", ")))
    } else {
        Err(format!("{}; {}", failures.join("; "), lines.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("lambda restriction", lambda_restriction, Duration::from_secs(1)),
        ("lambda degeneration certificate", lambda_degeneration, Duration::from_secs(1)),
        ("interpolation on a 2-triangle kagome patch", kagome_interpolation, Duration::from_secs(10)),
        ("W-state interpolation", w_interpolation, Duration::from_secs(5)),
        ("MaMu to GHZ, m=3", mamu3, Duration::from_secs(1)),
        ("MaMu to GHZ, m=4", mamu4, Duration::from_secs(5)),
        ("boundary-MPS correctness", boundary_correctness, Duration::from_secs(60)),
        ("cost-model fidelity", cost_fidelity, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took < *limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} limit")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!("[{}] {}. {name}: {detail} ({:.3}s)", if ok { "PASS" } else { "FAIL" }, i + 1, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
