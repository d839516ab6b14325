//! Calibration harness: runs the slow oracle measurements behind the values
//! checked into `src/calibration.json` and prints what it finds.
//!
//! Usage: cargo run --release -p lsvlab --example calibrate -- [section...]
//! Sections: preimage a1 a2 sharp hoeffding tower density corr coupling all

use lsvlab::asymptotics;
use lsvlab::correlations::{pushforward_distance, Correlator, Observable};
use lsvlab::coupling;
use lsvlab::density::{FiberDensity, FiberGrid};
use lsvlab::map::{self, MapParam};
use lsvlab::noise::ParamDistribution;
use lsvlab::preimages;
use lsvlab::tower;
use lsvlab::transfer;
use lsvlab::NoisePath;
use std::sync::Arc;
use std::time::Instant;

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    println!("  [{label}: {:.2}s]", t0.elapsed().as_secs_f64());
    out
}

fn preimage() {
    println!("== deterministic pre-image asymptotics (alpha = 0.5) ==");
    for l in [10_000usize, 100_000, 1_000_000] {
        let t0 = Instant::now();
        let c = preimages::deterministic_c(MapParam::new(0.5).unwrap(), l).unwrap();
        println!("  l = {l:>8}: l^2 x_l = {c:.6}  ({:.2}s)", t0.elapsed().as_secs_f64());
    }
    for alpha in [0.3f64, 0.6] {
        let c = preimages::deterministic_c(MapParam::new(alpha).unwrap(), 1_000_000).unwrap();
        let lim = preimages::deterministic_c_limit(MapParam::new(alpha).unwrap());
        println!("  alpha = {alpha}: c_1e6 = {c:.6}, limit = {lim:.6}, ratio = {:.4}", c / lim);
    }
}

fn a1() {
    println!("== first-kind partial sums ==");
    let ells = [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000];
    let dists = [
        ("discrete", ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap()),
        ("uniform", ParamDistribution::uniform(0.3, 0.6).unwrap()),
        ("quadratic", ParamDistribution::quadratic(0.3, 0.6).unwrap()),
    ];
    for (name, dist) in dists {
        let series = timed(name, || asymptotics::a1_series(&dist, &ells).unwrap());
        println!(
            "  {name}: q = {}, c_nominal = {:.6}, c_laplace = {:.6}",
            series.q, series.c_nominal, series.c_laplace
        );
        for (l, v) in series.ells.iter().zip(&series.values) {
            println!(
                "    S_{l:<9} = {v:.6}  rel.err vs nominal {:+.4}  vs laplace {:+.4}",
                v / series.c_nominal - 1.0,
                v / series.c_laplace - 1.0
            );
        }
    }
}

fn a2() {
    println!("== second-kind partial sums ==");
    let ells = [10_000u64, 100_000, 1_000_000];
    let dists = [
        ("discrete", ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap()),
        ("uniform", ParamDistribution::uniform(0.3, 0.6).unwrap()),
        ("quadratic", ParamDistribution::quadratic(0.3, 0.6).unwrap()),
    ];
    for (name, dist) in dists {
        let series = timed(name, || asymptotics::a2_series(&dist, &ells).unwrap());
        for (l, v) in series.ells.iter().zip(&series.values) {
            println!(
                "    S'_{l:<8} = {v:.6}  rel.err vs nominal {:+.4}  vs laplace {:+.4}",
                v / series.c_nominal - 1.0,
                v / series.c_laplace - 1.0
            );
        }
    }
}

fn sharp() {
    println!("== sharp ratio medians ==");
    let discrete = ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap();
    let m = timed("discrete 50 paths at 1e6", || {
        asymptotics::sharp_ratio_median(&discrete, &discrete.laplace_signature(), 1_000_000, 50, 71)
            .unwrap()
    });
    println!("  discrete median at 1e6: {m:.4}");

    for (name, dist) in [
        ("uniform", ParamDistribution::uniform(0.3, 0.6).unwrap()),
        ("quadratic", ParamDistribution::quadratic(0.3, 0.6).unwrap()),
    ] {
        for ell in [10_000u64, 100_000, 1_000_000] {
            let lap =
                asymptotics::sharp_ratio_median(&dist, &dist.laplace_signature(), ell, 31, 71)
                    .unwrap();
            let nom = asymptotics::sharp_ratio_median(&dist, &dist.signature(), ell, 31, 71).unwrap();
            println!("  {name} l = {ell:>8}: median (laplace c) = {lap:.4}, (nominal c) = {nom:.4}");
        }
    }
    // degenerate law: constant path at alpha0 matches the deterministic form
    let point = ParamDistribution::point_mass(0.3).unwrap();
    let r = asymptotics::sharp_ratio(
        &NoisePath::new(5, point),
        0,
        1_000_000,
        &point.laplace_signature(),
    )
    .unwrap();
    println!("  point mass at 0.3, l = 1e6: ratio = {r:.4} (limit c vs finite-l constant)");
}

fn hoeffding() {
    println!("== deviation bound grid (discrete 0.3/0.6) ==");
    let dist = ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap();
    for ell in [100u64, 1_000, 10_000] {
        let pts = timed(&format!("l = {ell}"), || {
            asymptotics::hoeffding_grid(&dist, ell, &[0.02, 0.05, 0.1, 0.2], 10_000, 2027).unwrap()
        });
        for p in pts {
            println!(
                "    t = {:4}: empirical {:.4}  bound {:.4}  se {:.4}  ok={}",
                p.t,
                p.empirical,
                p.bound,
                p.mc_se,
                p.holds(3.0)
            );
        }
    }
}

fn tower_cal() {
    println!("== tower ==");
    let dist = ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap();
    let ns: Vec<u64> = vec![64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048, 3072, 4096];
    let pts = timed("annealed tail", || {
        tower::annealed_tail_series(&dist, &ns, 4_000, 11).unwrap()
    });
    let series = lsvlab::correlations::TailSeries::new(
        pts.iter().map(|p| p.n).collect(),
        pts.iter().map(|p| p.closed_form).collect(),
    );
    let fit = series.fit((64, 4096), 0.0).unwrap();
    println!("  annealed slope = {:.4} (bound -(1/0.3+1) = -4.333), r2 = {:.4}", fit.slope, fit.r_squared);
    for p in &pts {
        println!("    n = {:>4}: {:.3e} (se {:.1e})", p.n, p.closed_form, p.mc_se);
    }

    let path = NoisePath::new(3, dist);
    let rep = timed("distortion h=30", || tower::check_distortion(&path, 0, 30, 60, 5).unwrap());
    println!("  max distortion = {:.4}, min return derivative = {:.4}", rep.max_deviation, rep.min_return_derivative);
}

fn density() {
    println!("== equivariant density ==");
    let grid = Arc::new(FiberGrid::standard(8192).unwrap());
    let path = NoisePath::new(1, ParamDistribution::point_mass(0.5).unwrap());

    let h = timed("pullback 200", || {
        transfer::equivariant_density(&path, 0, 200, Arc::clone(&grid)).unwrap()
    });

    // long-orbit histogram oracle
    let hist = timed("orbit 5e7", || {
        let mut counts = vec![0u64; grid.cells()];
        let mut y = 0.618;
        for _ in 0..100_000u64 {
            y = map::apply(MapParam::new(0.5).unwrap(), y).unwrap();
        }
        let p05 = MapParam::new(0.5).unwrap();
        let n = 50_000_000u64;
        for _ in 0..n {
            y = map::apply(p05, y).unwrap();
            counts[grid.cell_of(y)] += 1;
        }
        let mass: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
        FiberDensity::from_masses(Arc::clone(&grid), mass).unwrap()
    });
    println!("  L1(pullback, histogram) = {:.4}", h.l1_distance(&hist));

    let rnd = NoisePath::new(9, ParamDistribution::discrete(0.3, 0.6, 0.5).unwrap());
    for n in [50usize, 100, 200] {
        let r = transfer::equivariance_residual(&rnd, 0, n, Arc::clone(&grid)).unwrap();
        println!("  equivariance residual at pullback {n}: {r:.3e}");
    }

    let hc = timed("pullback 200 const", || {
        transfer::equivariant_density(&path, 0, 200, Arc::clone(&grid)).unwrap()
    });
    let cesaro = timed("cesaro 200", || {
        transfer::cesaro_density(&path, 0, 200, Arc::clone(&grid)).unwrap()
    });
    println!("  L1(pullback, cesaro) = {:.4}", hc.l1_distance(&cesaro));
    println!("  sup density on base: pullback {:.4}, cesaro {:.4}", hc.sup_on((0.5, 1.0)), cesaro.sup_on((0.5, 1.0)));
}

fn corr() {
    println!("== correlation decay ==");
    let grid = Arc::new(FiberGrid::standard(8192).unwrap());
    let ns: Vec<u64> = vec![50, 71, 100, 141, 200, 283, 400, 566, 800, 1131, 1600, 2000];

    let cpath = NoisePath::new(1, ParamDistribution::point_mass(0.5).unwrap());
    let c = timed("engine const", || {
        Correlator::new(cpath, 0, Arc::clone(&grid), 200).unwrap()
    });
    let fs = timed("future const sweep", || {
        c.future_series(Observable::Identity, Observable::Identity, &ns).unwrap()
    });
    for (n, v) in fs.ns.iter().zip(&fs.values) {
        println!("    const n = {n:>5}: corr = {v:+.4e}");
    }
    let fit = fs.fit((50, 2000), 1e-12).unwrap();
    println!("  const-path future slope = {:.4} (r2 {:.4})", fit.slope, fit.r_squared);

    let rdist = ParamDistribution::discrete(0.5, 0.8, 0.5).unwrap();
    let rpath = NoisePath::new(12, rdist);
    let cr = Correlator::new(rpath, 0, Arc::clone(&grid), 200).unwrap();
    let fr = timed("future random", || {
        cr.future_series(Observable::Identity, Observable::Identity, &ns).unwrap()
    });
    let fit_r = fr.fit((50, 2000), 1e-12).unwrap();
    println!("  random future slope = {:.4} (r2 {:.4})", fit_r.slope, fit_r.r_squared);
    let pr = timed("past random", || {
        cr.past_series(Observable::Identity, Observable::Identity, &ns).unwrap()
    });
    let fit_p = pr.fit((50, 2000), 1e-12).unwrap();
    println!("  random past slope = {:.4} (r2 {:.4})", fit_p.slope, fit_p.r_squared);

    let d = FiberDensity::uniform(Arc::clone(&grid));
    let h = cr.density().clone();
    let pd = timed("pushforward distance", || {
        pushforward_distance(&rpath, 0, &d, &h, &ns).unwrap()
    });
    let fit_d = pd.fit((50, 2000), 1e-12).unwrap();
    println!("  pushforward-distance slope = {:.4}", fit_d.slope);
    for (n, v) in pd.ns.iter().zip(&pd.values) {
        println!("    dist n = {n:>5}: {v:.4e}");
    }
}

fn coupling_cal() {
    println!("== coupling tail (discrete 0.5/0.8) ==");
    let dist = ParamDistribution::discrete(0.5, 0.8, 0.5).unwrap();
    let ns: Vec<u64> = vec![10, 14, 20, 28, 40, 57, 80, 113, 160, 226, 320, 453, 640, 905, 1000];
    let tail = timed("2M pairs", || {
        coupling::coupling_tail(&dist, &ns, 2_000_000, 1, 10_000, 90).unwrap()
    });
    println!(
        "  censored fraction = {:.4}, beyond grid = {}",
        tail.censored_fraction, tail.beyond_grid
    );
    for (n, v) in tail.series.ns.iter().zip(&tail.series.values) {
        println!("    P(T > {n:>4}) = {v:.4}");
    }
    let fit = tail.series.fit((10, 1000), 0.0).unwrap();
    println!("  slope = {:.4} (bound -(1/0.5 - 1) + 0.4 = -0.6)", fit.slope);
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let run = |name: &str| args.is_empty() || args.iter().any(|a| a == name || a == "all");
    let t0 = Instant::now();
    if run("preimage") {
        preimage();
    }
    if run("a1") {
        a1();
    }
    if run("a2") {
        a2();
    }
    if run("sharp") {
        sharp();
    }
    if run("hoeffding") {
        hoeffding();
    }
    if run("tower") {
        tower_cal();
    }
    if run("density") {
        density();
    }
    if run("corr") {
        corr();
    }
    if run("coupling") {
        coupling_cal();
    }
    println!("total: {:.1}s", t0.elapsed().as_secs_f64());
}
