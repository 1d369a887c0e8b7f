//! Acceptance suite: one PASS/FAIL line per criterion, plus `note` lines
//! carrying diagnostics that do not gate. Exits nonzero if any criterion
//! fails.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::process::Command as Proc;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use manet_core::analysis::{
    check_knn_linearity, clustering_plateau, curve_crossing, empirical_mixing_ratios,
    estimate_sigma_c, find_beta, mixing_law_ratios, proportionality, reduced_range,
    relative_spread, BetaSearch, FitWindow, LogisticFit,
};
use manet_core::connectivity::{components_burning, components_unionfind};
use manet_core::dynamics::{Configuration, Purpose, RngStream, StreamId};
use manet_core::ensemble::{
    prepare_realization, run_connectivity_sweep, run_metrics, sweep_point_seed, ConnectivityCurve,
    CurveAccumulator, CurvePoint, ExperimentPlan,
};
use manet_core::lattice::{hex_distance, Lattice, LatticeConfig, SiteCoord};
use manet_core::netmetrics::{cutoff_degree, degree_sequence, MetricsAccumulator, MetricsTable};
use manet_sim::commands::{self, operating_point, pooled_distribution, Run};
use manet_sim::config::{resolve, Layer, Settings, SigmaGrid, Targets};

const SEED: u64 = 20_061_107;
const SIGMA_C: [(u32, f64); 5] = [(2, 0.37), (3, 0.21), (4, 0.13), (5, 0.09), (6, 0.065)];
const PLATEAU: [(u32, f64); 2] = [(2, 0.52), (4, 0.56)];

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, id: u32, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }

    fn note(&self, id: u32, text: String) {
        println!("note {id:>2} {text}");
    }
}

/// Axial unit moves of the triangular lattice, listed independently of the
/// library.
const MOVES: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// All-pairs graph distance on the periodic lattice by breadth-first search.
fn bfs_distances(side: u32) -> Vec<Vec<u32>> {
    let l = side as i64;
    let n = (l * l) as usize;
    (0..n)
        .map(|src| {
            let mut dist = vec![u32::MAX; n];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(s) = queue.pop_front() {
                let (q, r) = ((s as i64) % l, (s as i64) / l);
                for (dq, dr) in MOVES {
                    let t = ((r + dr).rem_euclid(l) * l + (q + dq).rem_euclid(l)) as usize;
                    if dist[t] == u32::MAX {
                        dist[t] = dist[s] + 1;
                        queue.push_back(t);
                    }
                }
            }
            dist
        })
        .collect()
}

fn lattice(side: u32, z: u32) -> Arc<Lattice> {
    Arc::new(Lattice::new(LatticeConfig::new(side, z).unwrap()))
}

fn criterion_1(suite: &mut Suite) {
    let t = Instant::now();
    let side = 12;
    let dist = bfs_distances(side);
    let n = (side * side) as usize;
    let mut bad = Vec::new();
    for z in 1..=3u32 {
        let lat = lattice(side, z);
        let cfg = *lat.config();
        for a in 0..n {
            let sa = SiteCoord::from_index(a, side);
            let mut got: Vec<usize> = lat.neighbors(sa).collect();
            got.sort_unstable();
            let want: Vec<usize> = (0..n).filter(|&b| b != a && dist[a][b] <= z).collect();
            if got.len() != (3 * z * (z + 1)) as usize || got != want {
                bad.push(format!("z={z} site {a}: neighbourhood of {}", got.len()));
            }
            for b in 0..n {
                let d = hex_distance(sa, SiteCoord::from_index(b, side), &cfg);
                if d != dist[a][b] {
                    bad.push(format!("d({a},{b})={d}, bfs {}", dist[a][b]));
                }
            }
        }
    }
    let pass = bad.is_empty() && t.elapsed().as_secs_f64() < 5.0;
    let detail = if bad.is_empty() {
        format!(
            "L=12, z=1..3: {n} neighbourhoods and {} distances exact",
            n * n
        )
    } else {
        format!("{} mismatches, first: {}", bad.len(), bad[0])
    };
    suite.check(1, "geometry oracle", pass, detail, t);
}

fn criterion_2(suite: &mut Suite) {
    let t = Instant::now();
    let lat = lattice(50, 2);
    let positions = (0..lat.site_count())
        .map(|i| SiteCoord::from_index(i, 50))
        .collect();
    let config = Configuration::from_positions(lat, positions).unwrap();
    let degrees = degree_sequence(&config);
    let mut acc = MetricsAccumulator::new(2);
    acc.observe(&config);
    let c18 = acc.clustering().get(&18).copied().unwrap_or(f64::NAN);
    let knn18 = acc.knn().get(&18).copied().unwrap_or(f64::NAN);
    let pass = degrees.iter().all(|&k| k == 18)
        && acc.mean_degree() == 18.0
        && (c18 - 81.0 / 153.0).abs() <= 1e-12
        && knn18 == 18.0
        && t.elapsed().as_secs_f64() < 1.0;
    let detail = format!(
        "L=50 z=2 sigma=1: <k>={}, C(18)-81/153={:.1e}, knn(18)={knn18}",
        acc.mean_degree(),
        c18 - 81.0 / 153.0
    );
    suite.check(2, "full-occupation exactness", pass, detail, t);
}

fn criterion_3(suite: &mut Suite) {
    let t = Instant::now();
    let mut plan = ExperimentPlan::new(100, vec![2, 4], vec![0.1], SEED);
    plan.realizations = 100;
    let n = 10_000.0;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for z in [2u32, 4] {
        for sigma in [0.1, 0.3] {
            let table = run_metrics(&plan, sigma, z, 0.0, 1e-3).unwrap();
            let n0 = (sigma * n).round();
            let expected = 3.0 * (z * (z + 1)) as f64 * sigma * (n0 - 1.0) * n / ((n - 1.0) * n0);
            let dev = (table.mean_degree() - expected).abs() / expected;
            worst = worst.max(dev);
            parts.push(format!(
                "z={z} s={sigma}: {:.4}/{expected:.4}",
                table.mean_degree()
            ));
        }
    }
    let pass = worst <= 0.02 && t.elapsed().as_secs_f64() < 60.0;
    let detail = format!(
        "{}; worst deviation {:.3}%",
        parts.join(", "),
        100.0 * worst
    );
    suite.check(3, "mean-degree law", pass, detail, t);
}

/// Acceptance-suite settings: the `desk` preset with the suite's seed.
fn desk(side: u32, z_list: Vec<u32>) -> Settings {
    let flags = Layer {
        preset: Some("desk".into()),
        seed: Some(SEED),
        side: Some(side),
        z_list: Some(z_list),
        kc_sweep_sigma: Some(Vec::new()),
        ..Layer::default()
    };
    resolve(None, &flags).unwrap().settings
}

struct Sweep {
    curves: Vec<ConnectivityCurve>,
    fits: BTreeMap<u32, LogisticFit>,
    seconds: f64,
}

fn sweep(settings: &Settings, dir: &Path) -> Sweep {
    let t = Instant::now();
    let run = Run {
        settings: settings.clone(),
        output_dir: dir.to_path_buf(),
        threads: manet_sim::default_threads(),
    };
    std::fs::create_dir_all(dir).unwrap();
    let out = commands::sweep(&run).unwrap();
    let fits = out
        .fits
        .into_iter()
        .filter_map(|(z, f)| f.ok().map(|f| (z, f)))
        .collect();
    Sweep {
        curves: out.curves,
        fits,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn criterion_4(suite: &mut Suite, main: &Sweep, small: &Sweep) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (z, target) in SIGMA_C {
        match main.fits.get(&z) {
            Some(f) => {
                let mid = estimate_sigma_c(f).midpoint;
                pass &= (mid - target).abs() <= 0.03;
                parts.push(format!("z={z}: {mid:.4} vs {target}"));
            }
            None => {
                pass = false;
                parts.push(format!("z={z}: no fit"));
            }
        }
    }
    let size = match (small.fits.get(&2), main.fits.get(&2)) {
        (Some(a), Some(b)) => {
            let (a, b) = (estimate_sigma_c(a).midpoint, estimate_sigma_c(b).midpoint);
            pass &= (a - b).abs() <= 0.015;
            format!("L=64 {a:.4} vs L=100 {b:.4}")
        }
        _ => {
            pass = false;
            "missing z=2 fit".into()
        }
    };
    let detail = format!("midpoints {}; size independence {size}", parts.join(", "));
    suite.check(4, "critical thresholds", pass, detail, t);
    let crossings: Vec<String> = main
        .curves
        .iter()
        .map(|c| {
            let x = curve_crossing(c, 0.9995).map_or("-".to_string(), |x| format!("{x:.4}"));
            format!("z={}: {x}", c.z)
        })
        .collect();
    suite.note(
        4,
        format!(
            "occupancy where mean connectivity first reaches 0.9995: {}",
            crossings.join(", ")
        ),
    );
    suite.note(
        4,
        format!(
            "sweeps took {:.1}s (L=100) and {:.1}s (L=64)",
            main.seconds, small.seconds
        ),
    );
}

fn criterion_5(suite: &mut Suite, main: &Sweep) {
    let t = Instant::now();
    let mut pass = main.fits.len() == SIGMA_C.len();
    let mut parts = Vec::new();
    for (z, f) in &main.fits {
        let chi = f.reduced_chi_square();
        pass &= f.weighted && chi < 3.0;
        parts.push(format!("z={z}: chi2/dof={chi:.2} g={:.1}", f.g));
    }
    let pairs: Vec<(f64, f64)> = main.fits.iter().map(|(z, f)| (*z as f64, f.g)).collect();
    let prop = proportionality(&pairs);
    pass &= prop.max_relative_deviation <= 0.10;
    let detail = format!(
        "{}; g=c*z with c={:.2}, max deviation {:.1}%",
        parts.join(", "),
        prop.coefficient,
        100.0 * prop.max_relative_deviation
    );
    suite.check(5, "logistic-law fit quality", pass, detail, t);
}

/// Curves `η_z(σ) = logistic(ln(R^β σ))` that collapse exactly at `beta`.
fn synthetic_family(beta: f64) -> Vec<ConnectivityCurve> {
    (2..=6u32)
        .map(|z| {
            let shift = beta * reduced_range(z).ln();
            let points = (0..60)
                .map(|i| {
                    let sigma = (-4.5 + 4.4 * i as f64 / 59.0).exp();
                    let x = shift + sigma.ln();
                    CurvePoint {
                        sigma,
                        eta_mean: 1.0 / (1.0 + (-(x + 1.5) * 4.0).exp()),
                        eta_stderr: 0.0,
                        realizations: 1,
                    }
                })
                .collect();
            ConnectivityCurve::new(z, points)
        })
        .collect()
}

fn criterion_6(suite: &mut Suite, main: &Sweep) {
    let t = Instant::now();
    let measured = find_beta(&main.curves, BetaSearch::default());
    let mut synth = Vec::new();
    let mut pass = true;
    for truth in [-0.49, -0.8, -0.2] {
        match find_beta(&synthetic_family(truth), BetaSearch::default()) {
            Ok(r) => {
                pass &= (r.beta - truth).abs() <= 0.01;
                synth.push(format!("{truth}->{:.4}", r.beta));
            }
            Err(e) => {
                pass = false;
                synth.push(format!("{truth}: {e}"));
            }
        }
    }
    let measured_text = match &measured {
        Ok(r) => {
            pass &= (r.beta + 0.49).abs() <= 0.08;
            format!("beta={:.4} (residual {:.2e})", r.beta, r.residual)
        }
        Err(e) => {
            pass = false;
            format!("error: {e}")
        }
    };
    let detail = format!(
        "L=100 curves {measured_text}; synthetic {}",
        synth.join(", ")
    );
    suite.check(6, "scaling collapse", pass, detail, t);
    let wide = BetaSearch {
        lo: -1.5,
        hi: 2.0,
        ..BetaSearch::default()
    };
    let text = match find_beta(&main.curves, wide) {
        Ok(r) => format!("beta={:.4} residual={:.2e}", r.beta, r.residual),
        Err(e) => e.to_string(),
    };
    suite.note(6, format!("search over [-1.5, 2]: {text}"));
}

fn operating_tables(settings: &Settings, main: &Sweep) -> Vec<MetricsTable> {
    let plan = settings.plan();
    main.curves
        .iter()
        .filter_map(|c| {
            let sigma = operating_point(c, main.fits.get(&c.z), settings.eta_threshold)?;
            run_metrics(&plan, sigma, c.z, settings.eta_threshold, settings.epsilon).ok()
        })
        .collect()
}

fn criterion_7(suite: &mut Suite, tables: &[MetricsTable]) {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (z, target) in PLATEAU {
        let Some(table) = tables.iter().find(|t| t.z == z) else {
            pass = false;
            parts.push(format!("z={z}: no table"));
            continue;
        };
        match clustering_plateau(table, 4, 17) {
            Ok(p) => {
                let ok = (p.value - target).abs() <= 0.02 && (z != 2 || p.max_deviation <= 0.02);
                pass &= ok;
                parts.push(format!(
                    "z={z} sigma={:.4}: C={:.4} vs {target}, spread {:.4} over {} classes",
                    table.sigma, p.value, p.max_deviation, p.classes
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("z={z}: {e}"));
            }
        }
    }
    suite.check(7, "clustering plateau", pass, parts.join("; "), t);
    if let Some(table) = tables.iter().find(|t| t.z == 2) {
        let counts = table.totals.degree_counts();
        let sparse: Vec<String> = table
            .clustering()
            .into_iter()
            .filter(|&(k, _)| (4..=17).contains(&k) && counts[k as usize] < 100)
            .map(|(k, c)| format!("k={k}: C={c:.3} from {} nodes", counts[k as usize]))
            .collect();
        let within_cutoff = clustering_plateau(table, 4, table.cutoff().min(17))
            .map_or("-".to_string(), |p| format!("{:.4}", p.max_deviation));
        suite.note(
            7,
            format!(
                "z=2 sparse classes {}; spread over k<=k_c={} is {within_cutoff}",
                sparse.join(", "),
                table.cutoff()
            ),
        );
    }
}

fn criterion_8(suite: &mut Suite, tables: &[MetricsTable]) {
    let t = Instant::now();
    let pooled = pooled_distribution(tables);
    let kc = cutoff_degree(&pooled, 1e-3);
    let per_z: Vec<String> = tables
        .iter()
        .map(|t| format!("z={}: {}", t.z, t.cutoff()))
        .collect();
    let pass = tables.len() == SIGMA_C.len() && (16..=18).contains(&kc);
    let detail = format!(
        "pooled over z=2..6: k_c={kc} (per range {})",
        per_z.join(", ")
    );
    suite.check(8, "cutoff degree", pass, detail, t);
}

fn criterion_9(suite: &mut Suite, tables: &[MetricsTable]) {
    let t = Instant::now();
    let mut pass = !tables.is_empty();
    let mut parts = Vec::new();
    for table in tables {
        let kc = table.cutoff();
        match (check_knn_linearity(table), clustering_plateau(table, 4, kc)) {
            (Ok(l), Ok(p)) => {
                pass &= l.r_squared >= 0.98 && (l.slope - p.value).abs() <= 0.05 && l.slope > 0.0;
                parts.push(format!(
                    "z={}: r2={:.4} slope={:.3} plateau={:.3}",
                    table.z, l.r_squared, l.slope, p.value
                ));
            }
            (a, b) => {
                pass = false;
                parts.push(format!("z={}: {:?} {:?}", table.z, a.err(), b.err()));
            }
        }
    }
    suite.check(9, "assortativity linearity", pass, parts.join("; "), t);
}

/// Largest component by breadth-first search over pairs within range,
/// using oracle distances.
fn oracle_largest(config: &Configuration, dist: &[Vec<u32>]) -> usize {
    let side = config.config().side();
    let z = config.config().range();
    let sites: Vec<usize> = config.positions().iter().map(|p| p.index(side)).collect();
    let n = sites.len();
    let mut seen = vec![false; n];
    let mut best = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut size = 0;
        while let Some(a) = queue.pop_front() {
            size += 1;
            for b in 0..n {
                if !seen[b] && dist[sites[a]][sites[b]] <= z {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        best = best.max(size);
    }
    best
}

fn criterion_10(suite: &mut Suite) {
    let t = Instant::now();
    let mut rng = RngStream::new(
        SEED,
        StreamId {
            realization: 99,
            purpose: Purpose::Placement,
        },
    );
    let mut mismatches = 0;
    for _ in 0..1000 {
        let side = rng.random_range(5..=16u32);
        let z = rng.random_range(1..=((side - 1) / 2).min(4));
        let lat = lattice(side, z);
        let n0 = rng.random_range(0..=lat.site_count());
        let positions = rand::seq::index::sample(&mut rng, lat.site_count(), n0)
            .into_iter()
            .map(|i| SiteCoord::from_index(i, side))
            .collect();
        let c = Configuration::from_positions(lat, positions).unwrap();
        if components_burning(&c) != components_unionfind(&c) {
            mismatches += 1;
        }
    }
    let side = 12;
    let dist = bfs_distances(side);
    let mut plan = ExperimentPlan::new(
        side,
        vec![1, 2, 3],
        vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.8],
        SEED,
    );
    plan.realizations = 40;
    let curves = run_connectivity_sweep(&plan).unwrap();
    let mut ensemble_diffs = 0;
    for curve in &curves {
        let lat = lattice(side, curve.z);
        for (i, point) in curve.points.iter().enumerate() {
            let seed = sweep_point_seed(plan.seed, curve.z, i);
            let mut acc = CurveAccumulator::new(side, curve.z, point.sigma);
            for r in 0..plan.realizations as u64 {
                let c = prepare_realization(&lat, point.sigma, seed, r, plan.warmup_steps).unwrap();
                acc.push(oracle_largest(&c, &dist), c.n0());
            }
            if acc.point() != *point {
                ensemble_diffs += 1;
            }
        }
    }
    let pass = mismatches == 0 && ensemble_diffs == 0;
    let detail = format!(
        "burning vs union-find: {mismatches}/1000 differ; ensemble vs reachability oracle: {ensemble_diffs}/18 points differ"
    );
    suite.check(10, "algorithmic cross-validation", pass, detail, t);
}

fn criterion_11(suite: &mut Suite, main: &Sweep) {
    let t = Instant::now();
    let mut pass = main.fits.len() == SIGMA_C.len();
    let mut parts = Vec::new();
    for (z, f) in &main.fits {
        let spread = relative_spread(&mixing_law_ratios(f, 0.2, 0.8, 50));
        pass &= spread <= 0.05;
        parts.push(format!("z={z}: {:.2e}", spread));
    }
    suite.check(
        11,
        "homogeneous-mixing law",
        pass,
        format!("fitted-curve ratio spread {}", parts.join(", ")),
        t,
    );
    let raw: Vec<String> = main
        .curves
        .iter()
        .map(|c| {
            let r = empirical_mixing_ratios(c, 0.2, 0.8);
            if r.is_empty() {
                format!("z={}: -", c.z)
            } else {
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                let sd =
                    (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
                format!("z={}: mean {mean:.1} sd {sd:.1} (n={})", c.z, r.len())
            }
        })
        .collect();
    suite.note(
        11,
        format!("finite-difference ratio on raw curves {}", raw.join(", ")),
    );
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name()?.to_str()?.to_string();
            name.ends_with(".csv")
                .then(|| (name, std::fs::read(&p).unwrap()))
        })
        .collect()
}

fn criterion_12(suite: &mut Suite, scratch: &Path) {
    let t = Instant::now();
    let config = scratch.join("determinism.toml");
    std::fs::write(
        &config,
        "side = 24\nz_list = [2, 3]\nsigma_grid = \"adaptive\"\nrealizations = 16\nseed = 11\n\
         kc_sweep_z = 2\nkc_sweep_sigma = [0.5, 0.7]\nbeta_min = -1.5\nbeta_max = 2.0\n",
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_manet");
    let mut problems = Vec::new();
    let mut runs = Vec::new();
    for (label, threads) in [("a", "1"), ("b", "4"), ("c", "2")] {
        let dir = scratch.join(format!("det-{label}"));
        for cmd in ["sweep", "collapse", "metrics"] {
            let out = Proc::new(exe)
                .args([cmd, "--config"])
                .arg(&config)
                .arg("--output-dir")
                .arg(&dir)
                .args(["--threads", threads])
                .output()
                .unwrap();
            if !out.status.success() {
                problems.push(format!(
                    "{cmd} -t{threads}: {}",
                    String::from_utf8_lossy(&out.stderr).trim()
                ));
            }
        }
        runs.push(csv_files(&dir));
    }
    let replay_dir = scratch.join("det-replay");
    let out = Proc::new(exe)
        .arg("replay")
        .arg(scratch.join("det-a").join("manifest.json"))
        .arg("--output-dir")
        .arg(&replay_dir)
        .args(["--threads", "3"])
        .output()
        .unwrap();
    if !out.status.success() {
        problems.push(format!(
            "replay: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    let replayed = csv_files(&replay_dir);
    let reference = &runs[0];
    for other in &runs[1..] {
        if other != reference {
            problems.push("csv outputs differ across thread counts".into());
        }
    }
    for (name, bytes) in &replayed {
        if reference.get(name) != Some(bytes) {
            problems.push(format!("replayed {name} differs"));
        }
    }
    let pass = problems.is_empty() && reference.len() >= 6;
    let detail = if problems.is_empty() {
        format!(
            "{} csv files byte-identical at 1, 4 and 2 threads and after replay",
            reference.len()
        )
    } else {
        problems.join("; ")
    };
    suite.check(12, "determinism", pass, detail, t);
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let mut suite = Suite { failures: 0 };
    criterion_1(&mut suite);
    criterion_2(&mut suite);
    criterion_3(&mut suite);
    criterion_10(&mut suite);
    criterion_12(&mut suite, scratch.path());

    let settings = desk(100, vec![2, 3, 4, 5, 6]);
    assert_eq!(settings.sigma_grid, SigmaGrid::Named("adaptive".into()));
    assert!(matches!(settings.metrics_targets, Targets::Named(_)));
    let window = FitWindow {
        eta_min: settings.fit_eta_min,
        eta_max: settings.fit_eta_max,
    };
    assert_eq!(window, FitWindow::TRANSITION);
    let main_sweep = sweep(&settings, &scratch.path().join("l100"));
    let small_sweep = sweep(&desk(64, vec![2]), &scratch.path().join("l64"));
    criterion_4(&mut suite, &main_sweep, &small_sweep);
    criterion_5(&mut suite, &main_sweep);
    criterion_6(&mut suite, &main_sweep);
    criterion_11(&mut suite, &main_sweep);

    let t = Instant::now();
    let tables = operating_tables(&settings, &main_sweep);
    let points: Vec<String> = tables
        .iter()
        .map(|t| {
            format!(
                "z={} sigma={:.4} acceptance={:.2}",
                t.z,
                t.sigma,
                t.acceptance_rate()
            )
        })
        .collect();
    suite.note(
        7,
        format!(
            "operating points {} [{:.1}s]",
            points.join(", "),
            t.elapsed().as_secs_f64()
        ),
    );
    criterion_7(&mut suite, &tables);
    criterion_8(&mut suite, &tables);
    criterion_9(&mut suite, &tables);

    println!("{} of 12 criteria failed", suite.failures);
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
