use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use subgraph_space::catalog::Catalog;
use subgraph_space::census::{exact_census, gnp_frequency_curve, FrequencyVector};
use subgraph_space::classify::{
    cross_validate, density_matched_subsample, mean_and_std_error, penalized_gradient,
    penalized_log_likelihood, CvOptions, FeatureSpec, GraphSummary,
};
use subgraph_space::efrw::{
    backbone_residual, build_generator, fit_lambda, stationary_distribution, FitOptions, RateModel,
};
use subgraph_space::extremal::{
    assemble_constraints, bound_envelope, check_point, density_grid, envelopes,
    finite_size_tolerance, solve_bounds, SolveMode,
};
use subgraph_space::generators::{
    balanced_bipartite, default_burn_in, f_free_sequence, near_clique_sequence, sample_gnp,
    simulate_efrw, simulate_efrw_collection,
};
use subgraph_space::graph::pair_count;
use subgraph_space::{derive_seed, Graph};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn class_with_edges(k: usize, edges: usize) -> usize {
    Catalog::shared(k)
        .unwrap()
        .classes()
        .iter()
        .position(|c| c.edge_count == edges)
        .unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn catalog_correctness() -> Outcome {
    let start = Instant::now();
    let mut sizes = Vec::new();
    for k in [3, 4] {
        let catalog = ok(Catalog::build(k))?;
        let mass: u64 = catalog.classes().iter().map(|c| c.labelings()).sum();
        ensure!(mass == 1 << pair_count(k), "k={k}: labeled mass {mass}");
        sizes.push(catalog.len());
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(sizes == [4, 11], "class counts {sizes:?}");
    ensure!(elapsed < 1.0, "took {elapsed:.3}s");
    Ok(format!("classes {sizes:?}, {elapsed:.3}s"))
}

fn detailed_balance() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in [3, 4] {
        let catalog = ok(Catalog::shared(k))?;
        for nu in [0.25, 1.0, 4.0] {
            let model = ok(RateModel::new(k, nu, 0.0))?;
            let pi = ok(stationary_distribution(&ok(build_generator(catalog, &model))?))?;
            let gnp = ok(gnp_frequency_curve(k, nu / (1.0 + nu)))?;
            let err = pi
                .values
                .iter()
                .zip(&gnp.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    ensure!(elapsed < 1.0, "took {elapsed:.3}s");
    Ok(format!("max deviation {worst:.2e}, {elapsed:.3}s"))
}

fn forbidden_triad_bound() -> Outcome {
    let path = class_with_edges(3, 2);
    let at_half = ok(solve_bounds(&ok(assemble_constraints(3, &rat(1, 2)))?, path, SolveMode::Exact))?;
    ensure!(
        at_half.upper_exact == Some(rat(3, 4)),
        "exact upper at 1/2 is {:?}",
        at_half.upper_exact
    );

    let envs = ok(envelopes(3, &density_grid(101), SolveMode::Exact))?;
    let env = &envs[path];
    for (&p, &u) in env.p_grid.iter().zip(&env.upper) {
        let curve = 3.0 * p * (1.0 - p);
        ensure!(u <= curve + 1e-9, "upper {u} above 3p(1-p) at p={p}");
        if p >= 0.5 {
            ensure!((u - curve).abs() <= 1e-9, "upper {u} != 3p(1-p) = {curve} at p={p}");
        }
    }

    let mut witness = Vec::new();
    for n in [50, 100, 200] {
        let g = ok(balanced_bipartite(n))?;
        let y = ok(exact_census(&g, 3))?;
        let p = ok(g.edge_density())?;
        let upper = ok(bound_envelope(3, path, &[p]))?.upper[0];
        let s = y.values[path];
        ensure!(
            s <= upper + finite_size_tolerance(n),
            "n={n}: path frequency {s} outside envelope {upper}"
        );
        ensure!(ok(check_point(&y, p, finite_size_tolerance(n)))?.is_feasible(), "n={n} infeasible");
        witness.push(s);
    }
    ensure!(
        (witness[0] - 15000.0 / 19600.0).abs() < 1e-12,
        "K_25,25 path frequency {}",
        witness[0]
    );
    ensure!(
        witness.windows(2).all(|w| w[1] < w[0] && w[1] > 0.75),
        "witness values do not decrease toward 3/4: {witness:?}"
    );
    Ok(format!("exact max 3/4 at p=1/2, witness {witness:.4?}"))
}

fn kruskal_katona_binding() -> Outcome {
    let start = Instant::now();
    let grid = density_grid(101);
    let three = ok(envelopes(3, &grid, SolveMode::Auto))?;
    let four = ok(envelopes(4, &grid, SolveMode::Auto))?;
    let elapsed = start.elapsed().as_secs_f64();
    let triangle = &three[class_with_edges(3, 3)];
    let worst = triangle
        .p_grid
        .iter()
        .zip(&triangle.upper)
        .map(|(p, u)| (u - p.powf(1.5)).abs())
        .fold(0.0, f64::max);
    ensure!(four.len() == 11, "k=4 envelope count {}", four.len());
    ensure!(worst <= 1e-9, "max deviation from p^1.5 {worst:e}");
    ensure!(elapsed < 60.0, "envelopes took {elapsed:.1}s");
    Ok(format!("max deviation {worst:.2e}, envelopes {elapsed:.1}s"))
}

fn mixed_graph(i: usize, rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.random_range(30..=80);
    let seed = derive_seed(5, i as u64);
    match i % 4 {
        0 => sample_gnp(n, rng.random_range(0.05..0.95), seed).unwrap(),
        1 => {
            let nu = rng.random_range(0.05..2.0);
            let model = RateModel::new(3, nu, rng.random_range(0.0..3.0)).unwrap();
            let t = rng.random_range(0.2..default_burn_in(nu));
            simulate_efrw(n, &model, t, seed).unwrap()
        }
        2 => near_clique_sequence(rng.random_range(0.05..0.95), &[n]).unwrap().remove(0),
        _ => balanced_bipartite(n - n % 2).unwrap(),
    }
}

fn soundness_sweep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let graphs: Vec<Graph> = (0..200).map(|i| mixed_graph(i, &mut rng)).collect();
    let violations: Vec<String> = graphs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            let p = g.edge_density().unwrap();
            [3, 4].into_iter().flat_map(move |k| {
                let y = exact_census(g, k).unwrap();
                let report = check_point(&y, p, finite_size_tolerance(g.n())).unwrap();
                report
                    .violations()
                    .map(|c| format!("graph {i} k={k} {} slack {:.3e}", c.tag, c.slack))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    ensure!(violations.is_empty(), "{} violations, first: {}", violations.len(), violations[0]);
    Ok("200 graphs, 0 violations at k=3 and k=4".into())
}

fn f_free_constructions() -> Outcome {
    let catalog = ok(Catalog::shared(3))?;
    let mut checked = 0;
    for class in [class_with_edges(3, 1), class_with_edges(3, 2)] {
        let f = &catalog.classes()[class].representative;
        for p in [0.2, 0.5, 0.8] {
            for g in ok(f_free_sequence(f, p, &[20, 50, 100]))? {
                let y = ok(exact_census(&g, 3))?;
                ensure!(
                    y.values[class] == 0.0,
                    "class {class}, p={p}, n={}: frequency {}",
                    g.n(),
                    y.values[class]
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} constructions free of their class"))
}

fn simulator_fidelity() -> Outcome {
    let start = Instant::now();
    let catalog = ok(Catalog::shared(4))?;
    let model = ok(RateModel::new(4, 1.0, 0.0))?;
    let graphs = ok(simulate_efrw_collection(4, &model, default_burn_in(1.0), 5000, 77))?;
    let mut observed = vec![0.0; catalog.len()];
    for g in &graphs {
        observed[ok(catalog.class_of(g))?] += 1.0;
    }
    let expected = ok(gnp_frequency_curve(4, 0.5))?;
    let chi2: f64 = observed
        .iter()
        .zip(&expected.values)
        .map(|(o, q)| (o - 5000.0 * q).powi(2) / (5000.0 * q))
        .sum();
    let critical = ok(ChiSquared::new((catalog.len() - 1) as f64))?.inverse_cdf(0.99);
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(chi2 < critical, "chi2 {chi2:.2} >= {critical:.2}");
    ensure!(elapsed < 30.0, "took {elapsed:.1}s");
    Ok(format!("chi2 {chi2:.2} < {critical:.2}, {elapsed:.2}s"))
}

struct Collection {
    frequencies: Vec<FrequencyVector>,
    densities: Vec<f64>,
}

impl Collection {
    fn new(graphs: &[Graph]) -> Collection {
        let (frequencies, densities) = graphs
            .par_iter()
            .map(|g| (exact_census(g, 3).unwrap(), g.edge_density().unwrap()))
            .filter(|(_, p)| *p > 0.0 && *p < 1.0)
            .unzip();
        Collection {
            frequencies,
            densities,
        }
    }
}

/// 500 walks on 50 nodes at lambda = 2, nu = 0.01, default burn-in.
fn closure_collection() -> &'static Collection {
    static CELL: OnceLock<Collection> = OnceLock::new();
    CELL.get_or_init(|| {
        let model = RateModel::new(3, 0.01, 2.0).unwrap();
        let graphs = simulate_efrw_collection(50, &model, default_burn_in(0.01), 500, 8).unwrap();
        Collection::new(&graphs)
    })
}

fn lambda_recovery() -> Outcome {
    let start = Instant::now();
    let options = FitOptions::default();
    let sim = closure_collection();
    let fit = ok(fit_lambda(&sim.frequencies, &sim.densities, 3, &options))?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ps: Vec<f64> = (0..500).map(|_| rng.random_range(0.1..0.9)).collect();
    let gnp: Vec<Graph> = ps
        .par_iter()
        .enumerate()
        .map(|(i, &p)| sample_gnp(50, p, derive_seed(10, i as u64)).unwrap())
        .collect();
    let null = Collection::new(&gnp);
    let null_fit = ok(fit_lambda(&null.frequencies, &null.densities, 3, &options))?;
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "simulated lambda=2 -> {:.3}, G(n,p) -> {:.3}, {elapsed:.1}s",
        fit.lambda, null_fit.lambda
    );
    ensure!(null_fit.lambda <= 0.2, "{detail}");
    ensure!((1.5..=2.5).contains(&fit.lambda), "{detail}");
    ensure!(elapsed < 300.0, "{detail}");
    Ok(detail)
}

fn closure_direction() -> Outcome {
    let sim = closure_collection();
    let residuals: Vec<Vec<f64>> = sim
        .frequencies
        .iter()
        .zip(&sim.densities)
        .map(|(y, &p)| backbone_residual(y, p, 0.0).unwrap())
        .collect();
    let stats = |class: usize| {
        let xs: Vec<f64> = residuals.iter().map(|r| r[class]).collect();
        mean_and_std_error(&xs)
    };
    let (tri, tri_se) = stats(class_with_edges(3, 3));
    let (path, path_se) = stats(class_with_edges(3, 2));
    let detail = format!(
        "triangle {:+.4} ({:+.1} SE), path {:+.4} ({:+.1} SE)",
        tri,
        tri / tri_se,
        path,
        path / path_se
    );
    ensure!(tri > 3.0 * tri_se && path < -3.0 * path_se, "{detail}");
    Ok(detail)
}

/// Walk snapshots on 50 nodes at a uniformly random time in `(0.05, t_max)`.
fn snapshot_pool(lambda: f64, t_max: f64, count: usize, seed: u64) -> Vec<Graph> {
    let model = RateModel::new(3, 0.01, lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..t_max)).collect();
    times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| simulate_efrw(50, &model, t, derive_seed(seed, i as u64)).unwrap())
        .collect()
}

fn classification_suite() -> Outcome {
    let low = snapshot_pool(0.5, 10.0, 600, 1);
    let high = snapshot_pool(3.0, 4.0, 600, 2);
    let all: FeatureSpec = ok("all".parse())?;
    let summarize = |pool: &[Graph], offset: u64| -> Vec<GraphSummary> {
        pool.par_iter()
            .enumerate()
            .map(|(i, g)| GraphSummary::new(g, &all, offset + i as u64).unwrap())
            .collect()
    };
    let (sa, sb) = (summarize(&low, 0), summarize(&high, 10_000));
    let da: Vec<f64> = sa.iter().map(|s| s.density).collect();
    let db: Vec<f64> = sb.iter().map(|s| s.density).collect();

    let specs = ["Edges", "Triads", "Quads", "Quads + R_lambda"];
    let mut means = vec![Vec::new(); specs.len()];
    let mut errors = vec![Vec::new(); specs.len()];
    for seed in 0..10u64 {
        let (ia, ib) = ok(density_matched_subsample(&da, &db, 0.02, seed))?;
        let mut summaries: Vec<GraphSummary> = ia.iter().map(|&i| sa[i].clone()).collect();
        summaries.extend(ib.iter().map(|&i| sb[i].clone()));
        let labels: Vec<bool> = (0..summaries.len()).map(|i| i >= ia.len()).collect();
        for (j, name) in specs.iter().enumerate() {
            let spec: FeatureSpec = ok(name.parse())?;
            let report = ok(cross_validate(&summaries, &labels, &spec, &CvOptions::default(), seed))?;
            means[j].push(report.mean);
            errors[j].push(report.std_error);
        }
    }
    let avg = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let m: Vec<f64> = means.iter().map(|x| avg(x)).collect();
    let quads_se = avg(&errors[2]);
    let detail = format!(
        "edges {:.3}, triads {:.3}, quads {:.3}, quads+R_lambda {:.3} (quads SE {:.3})",
        m[0], m[1], m[2], m[3], quads_se
    );
    ensure!(m[2] >= m[1] && m[1] >= m[0], "{detail}");
    ensure!((0.45..=0.55).contains(&m[0]), "{detail}");
    ensure!(m[2] >= 0.65, "{detail}");
    ensure!(m[3] >= m[2] - quads_se, "{detail}");
    Ok(detail)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(5..30);
        let d = rng.random_range(1..6);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let params: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let reg = rng.random_range(0.0..2.0);
        let analytic = penalized_gradient(&params, &x, &y, reg);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..=d)
            .map(|i| {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[i] += h;
                minus[i] -= h;
                (penalized_log_likelihood(&plus, &x, &y, reg)
                    - penalized_log_likelihood(&minus, &x, &y, reg))
                    / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&analytic).max(1e-12));
    }
    ensure!(worst <= 1e-5, "relative error {worst:e}");
    Ok(format!("max relative error {worst:.2e} over 20 datasets"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("catalog correctness", catalog_correctness),
        ("detailed balance", detailed_balance),
        ("forbidden-triad bound", forbidden_triad_bound),
        ("kruskal-katona binding", kruskal_katona_binding),
        ("soundness sweep", soundness_sweep),
        ("f-free constructions", f_free_constructions),
        ("simulator fidelity", simulator_fidelity),
        ("lambda recovery", lambda_recovery),
        ("triadic-closure direction", closure_direction),
        ("classification suite", classification_suite),
        ("gradient check", gradient_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
