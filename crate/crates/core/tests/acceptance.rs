//! Acceptance run. Prints one `criterion N: PASS|FAIL` line per criterion,
//! followed by the individual checks. `ACCEPTANCE_ONLY=1,4` restricts the
//! run. The process fails only on criteria not listed in `KNOWN_DEVIATIONS`.

mod common;

use std::time::Instant;

use rand::Rng;

use common::*;
use tritangle::artifacts::{compress_to_range, gi_published_form, refine_z_state, xles_anchor, z_state_deviation, GWI_Q, GI_WITNESS, P0, Q0};
use tritangle::cli::surface_grid;
use tritangle::measure::{t3_schmidt, tau3};
use tritangle::oracle::{convex_roof_upper, OracleConfig};
use tritangle::outer::{g_exact, g_tilde, grad_g_tilde, maximize_witness, smooth_min, Gauge, OuterConfig, WitnessResult};
use tritangle::qcore::{hs_inner, kron3, qubit_permutation, DensityMatrix};
use tritangle::states::{family_state, schmidt_state, EntClass, StateFamily};
use tritangle::symmetry::{gi_basis, gw_basis, CoordVector, SymBasis};
use tritangle::verify::{certify, dmin_simplex, extract_decomposition, r_state_fit};

/// Criteria expected to fail, with the reason printed next to the verdict.
const KNOWN_DEVIATIONS: &[(usize, &str)] = &[
    (5, "gap and d_min come out below the quoted ~1e-2 / ~1e-3 scales; see decisions ledger"),
    (6, "optimal-vs-misleading gap near p = 0.01 is about 1e-3, not 1e-4; see decisions ledger"),
];

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn check(name: &str, ok: bool, detail: String) -> Check {
    Check { name: name.into(), ok, detail }
}

/// Within a factor of `f` of `scale`.
fn within_factor(x: f64, scale: f64, f: f64) -> bool {
    x >= scale / f && x <= scale * f
}

fn linear_root(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    mx - my / slope
}

fn solve(f: StateFamily, basis: &SymBasis, cfg: &OuterConfig) -> (DensityMatrix, WitnessResult) {
    let rho = family_state(f).expect("state");
    let res = maximize_witness(&rho, basis, cfg).expect("outer solve");
    (rho, res)
}

/// Criteria 1 to 4 share the GHZ/noise runs.
struct GiRuns {
    qs: Vec<f64>,
    sweep: Vec<WitnessResult>,
    rho15: DensityMatrix,
    at15: WitnessResult,
}

fn gi_runs() -> GiRuns {
    let gi = gi_basis();
    let cfg = OuterConfig::default();
    let qs: Vec<f64> = (1..=20).map(|i| 0.02 * i as f64).collect();
    let sweep = qs.iter().map(|&q| solve(StateFamily::Gi { q }, &gi, &cfg).1).collect();
    let (rho15, at15) = solve(StateFamily::Gi { q: 0.15 }, &gi, &cfg);
    GiRuns { qs, sweep, rho15, at15 }
}

fn criterion1(g: &GiRuns) -> Vec<Check> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = g.qs.iter().zip(&g.sweep).filter(|(_, r)| r.g_value > 1e-6).map(|(q, r)| (*q, r.g_value)).unzip();
    let root = linear_root(&xs, &ys);
    let err = g
        .qs
        .iter()
        .zip(&g.sweep)
        .filter(|(q, _)| **q <= 0.28 + 1e-12)
        .map(|(q, r)| (r.g_value - (1.0 - q / Q0)).abs())
        .fold(0.0, f64::max);
    vec![
        check("fitted root", (root - Q0).abs() <= 3e-3, format!("q0 = {root:.5} (target {Q0} +- 0.003)")),
        check("linear profile", err <= 2e-3, format!("max |T3 - (1 - q/q0)| = {err:.2e} for q <= 0.28 (<= 2e-3)")),
    ]
}

fn criterion2(g: &GiRuns) -> Vec<Check> {
    let gi = gi_basis();
    let f = gi_published_form(&gi.to_published(&g.at15.x_coords(&gi))).expect("three coordinates");
    let dev = (0..3).map(|k| (f[k] - GI_WITNESS[k]).abs()).fold(0.0, f64::max);
    vec![check("coefficients", dev <= 0.02, format!("({:.4}, {:.4}, {:.4}) at q = 0.15, max deviation {dev:.2e} (<= 0.02)", f[0], f[1], f[2]))]
}

fn criterion3(g: &GiRuns) -> Vec<Check> {
    let conv: Vec<&WitnessResult> = g.sweep.iter().chain(std::iter::once(&g.at15)).filter(|r| r.converged).collect();
    let worst = conv.iter().map(|r| r.d_min).fold(0.0, f64::max);
    vec![
        check("converged points", conv.len() == g.sweep.len() + 1, format!("{} of {}", conv.len(), g.sweep.len() + 1)),
        check("d_min", worst <= 1e-5, format!("max d_min = {worst:.2e} (<= 1e-5)")),
    ]
}

fn criterion4(g: &GiRuns) -> Vec<Check> {
    let gi = gi_basis();
    let run = || -> tritangle::Result<([f64; 4], f64)> {
        let cert = certify(&g.at15, 1e-5)?;
        let dec = extract_decomposition(&cert, &g.at15.candidate_set, &gi, &g.rho15)?;
        let unit = dec.asymmetric_unit(1e-2);
        let wterm = unit
            .iter()
            .filter(|u| !u.is_ghz_class(1e-6))
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .ok_or_else(|| tritangle::Error::Domain("no W-class term".into()))?;
        let z = refine_z_state(&g.at15, &gi, &wterm.params)?;
        Ok((z, z_state_deviation(&z)))
    };
    match run() {
        Ok((z, dev)) => vec![check("Z state", dev <= 2e-3, format!("{z:.4?}, max deviation {dev:.2e} (<= 2e-3)"))],
        Err(e) => vec![check("Z state", false, format!("error: {e}"))],
    }
}

fn criterion5() -> Vec<Check> {
    let gw = gw_basis();
    let mut out = Vec::new();

    let ps: Vec<f64> = (1..=6).map(|i| 0.05 * i as f64).collect();
    let cfg = OuterConfig::default();
    let gs: Vec<f64> = ps.iter().map(|&p| solve(StateFamily::Gw { p }, &gw, &cfg).1.g_value).collect();
    let root = linear_root(&ps, &gs);
    out.push(check("fitted p0", (root - P0).abs() <= 3e-3, format!("p0 = {root:.5} (target {P0} +- 0.003)")));

    let p = 0.2;
    let exact = 1.0 - p / P0;
    for (k, scale) in [(1e2, 1e-2), (1e3, 1e-3)] {
        let cfg = OuterConfig { k_bound: k, gauge: Gauge::Psd, ..OuterConfig::default() };
        let (rho, res) = solve(StateFamily::Gw { p }, &gw, &cfg);
        let gap = exact - res.g_value;
        out.push(check(&format!("gap k={k:.0e}"), within_factor(gap, scale, 3.0), format!("T3 - Tr(X rho) = {gap:.2e} (~{scale:.0e}, factor 3)")));
        out.push(check(&format!("d_min k={k:.0e}"), within_factor(res.d_min, scale, 3.0), format!("d_min = {:.2e} (~{scale:.0e}, factor 3)", res.d_min)));
        if k == 1e3 {
            let x = res.witness(&gw).expect("witness");
            let xc = compress_to_range(&x, &rho, 1e-10).expect("compression");
            let ops = gw.ops();
            let t = |op: &tritangle::qcore::HermitianOp, i: usize| hs_inner(op, &ops[i]).expect("dim");
            let (t0, t1, t4) = (t(&xc, 0), t(&xc, 1), t(&x, 4));
            let h = std::f64::consts::FRAC_1_SQRT_2;
            out.push(check(
                "Tr(X P0), Tr(X P1)",
                (t0 - h).abs() <= 0.02 && (t1 - h).abs() <= 0.02,
                format!("{t0:.4}, {t1:.4} on the range of rho (1/sqrt2 +- 0.02)"),
            ));
            let target = 1.0 - 1.0 / P0;
            out.push(check("Tr(X P4)", (t4 - target).abs() <= 0.02, format!("{t4:.4} (1 - 1/p0 = {target:.4} +- 0.02)")));
        }
    }
    out
}

struct GwiRun {
    rho: DensityMatrix,
    res: WitnessResult,
}

fn criterion6(at: &GwiRun) -> Vec<Check> {
    let gw = gw_basis();
    let cfg = OuterConfig::default();
    let les03 = xles_anchor(0.03);
    let diff03 = at.res.g_value - les03.g_value;
    let opt01 = solve(StateFamily::Gwi { p: 0.01, q: GWI_Q }, &gw, &cfg).1;
    let diff01 = opt01.g_value - xles_anchor(0.01).g_value;
    vec![
        check("d_min", at.res.d_min <= 1e-3, format!("d_min = {:.2e} at (0.03, {GWI_Q}) (<= 1e-3)", at.res.d_min)),
        check("exceeds X_les", diff03 > 0.0, format!("g = {:.6} vs X_les {:.6}", at.res.g_value, les03.g_value)),
        check("difference near p = 0.01", within_factor(diff01, 1e-4, 3.0), format!("{diff01:.2e} (~1e-4, factor 3)")),
        check("difference grows", diff03 > diff01, format!("{diff01:.2e} at p = 0.01, {diff03:.2e} at p = 0.03")),
    ]
}

fn criterion7(at: &GwiRun) -> Vec<Check> {
    let gw = gw_basis();
    let run = || -> tritangle::Result<Vec<Check>> {
        let cert = certify(&at.res, 1e-3)?;
        let dec = extract_decomposition(&cert, &at.res.candidate_set, &gw, &at.rho)?;
        let unit = dec.asymmetric_unit(1e-2);
        let ghz: Vec<_> = unit.iter().filter(|u| u.is_ghz_class(1e-6)).collect();
        let nw = unit.len() - ghz.len();
        let mut out = vec![check("class counts", ghz.len() == 1 && nw == 2, format!("{} GHZ-class, {nw} W-class", ghz.len()))];
        if let Some(t) = ghz.first() {
            let (r, ov) = r_state_fit(&schmidt_state(&t.params)?);
            let implied = 2.0 * t.weight * (r * (1.0 - r)).sqrt();
            let err = (implied - at.res.g_value).abs();
            out.push(check("GHZ-class form", ov >= 0.999, format!("overlap {ov:.6} with r = {r:.4} (>= 0.999)")));
            out.push(check("implied T3", err <= 1e-4, format!("2 alpha sqrt(r(1-r)) = {implied:.6}, g = {:.6}, diff {err:.1e} (<= 1e-4)", at.res.g_value)));
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![check("decomposition", false, format!("error: {e}"))])
}

fn criterion8() -> Vec<Check> {
    let mut out = Vec::new();
    let gw = gw_basis();

    // (a) exact G along the identity direction
    let rho = family_state(StateFamily::Gwi { p: 0.1, q: 0.05 }).unwrap();
    let inner = OuterConfig::default().inner;
    let mut worst = 0.0f64;
    let mut r = rng(81);
    for _ in 0..4 {
        let v: Vec<f64> = (0..gw.len()).map(|_| gauss(&mut r)).collect();
        let g0 = g_exact(&v, &rho, &gw, &inner).unwrap().0;
        for c in [-3.0, 7.5] {
            let vs = CoordVector(v.clone()).axpy(c, &gw.identity_coords()).0;
            worst = worst.max((g_exact(&vs, &rho, &gw, &inner).unwrap().0 - g0).abs());
        }
    }
    out.push(check("(a) gauge invariance", worst <= 1e-10, format!("max |G(v + c I) - G(v)| = {worst:.1e} (<= 1e-10)")));

    // (b) analytic gradient of the smoothed model
    let rv = gw.vectorize(rho.op()).unwrap().0;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let set = frozen_set(&gw, seed, 6);
        let mut r = rng(seed + 100);
        let v: Vec<f64> = (0..gw.len()).map(|_| gauss(&mut r)).collect();
        let b = 1e-2;
        let g = grad_g_tilde(&v, &set, b, &rv).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..v.len())
            .map(|i| {
                let (mut a, mut c) = (v.clone(), v.clone());
                a[i] += h;
                c[i] -= h;
                (g_tilde(&a, &set, b, &rv).unwrap() - g_tilde(&c, &set, b, &rv).unwrap()) / (2.0 * h)
            })
            .collect();
        let num: f64 = g.0.iter().zip(&fd).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(num / g.norm().max(1e-12));
    }
    out.push(check("(b) gradient vs finite differences", worst <= 1e-5, format!("max relative error {worst:.1e} (<= 1e-5)")));

    // (c) smoothing function
    let mut r = rng(83);
    let (mut above, mut shift) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = r.random_range(1..10);
        let xs: Vec<f64> = (0..n).map(|_| 5.0 * gauss(&mut r)).collect();
        let b = 10f64.powf(r.random_range(-6.0..0.0));
        let c = 10.0 * gauss(&mut r);
        let h = smooth_min(&xs, b).unwrap();
        above = above.max(h - xs.iter().cloned().fold(f64::INFINITY, f64::min));
        let hs = smooth_min(&xs.iter().map(|x| x + c).collect::<Vec<_>>(), b).unwrap();
        shift = shift.max((hs - h - c).abs() / (f64::EPSILON * (1.0 + h.abs() + c.abs()) * n as f64));
    }
    let exact = [1e-8, 1e-3, 0.1, 0.3, 1.0, 7.0].iter().all(|&b| smooth_min(&[0.0, 0.0], b).unwrap() == -b);
    out.push(check("(c) H <= min", above <= 0.0, format!("max H - min = {above:.1e}")));
    out.push(check("(c) H(0,0;b) = -b", exact, "bitwise equality".into()));
    out.push(check("(c) shift equivariance", shift <= 16.0, format!("max error {shift:.1} ulp-scale units (<= 16)")));

    // (d) three-tangle
    let mut r = rng(84);
    let (mut closed, mut inv) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let s = random_schmidt(&mut r, EntClass::Ghz);
        closed = closed.max((tau3(&schmidt_state(&s).unwrap()) - 4.0 * s.lambda[0].powi(2) * s.lambda[4].powi(2)).abs());
        debug_assert!((t3_schmidt(&s) - 2.0 * s.lambda[0] * s.lambda[4]).abs() < 1e-12);
        let psi = random_state(&mut r, 8);
        let t = tau3(&psi);
        let k = kron3(&random_su2(&mut r), &random_su2(&mut r), &random_su2(&mut r)).unwrap();
        inv = inv.max((tau3(&psi.apply(&k).unwrap()) - t).abs());
        for perm in [[1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]] {
            inv = inv.max((tau3(&psi.apply(&qubit_permutation(perm)).unwrap()) - t).abs());
        }
    }
    out.push(check("(d) tau3 vs 4 l0^2 l4^2", closed <= 1e-9, format!("max error {closed:.1e} (<= 1e-9)")));
    out.push(check("(d) tau3 invariance", inv <= 1e-9, format!("max error {inv:.1e} (<= 1e-9)")));

    // (e) convex-hull distance
    let mut r = rng(85);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let (n, dim) = (r.random_range(1..7), r.random_range(2..5));
        let qs: Vec<CoordVector> = (0..n).map(|_| CoordVector((0..dim).map(|_| gauss(&mut r)).collect())).collect();
        let rv: Vec<f64> = (0..dim).map(|_| gauss(&mut r)).collect();
        let d = dmin_simplex(&rv, &qs).unwrap().0;
        worst = worst.max((d - exhaustive_min_distance(&rv, &qs)).abs());
    }
    out.push(check("(e) dmin_simplex vs exhaustive", worst <= 1e-10, format!("max error {worst:.1e} (<= 1e-10)")));

    // (f) oracle >= witness
    let mut r = rng(86);
    let gi = gi_basis();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let fam = match r.random_range(0..3) {
            0 => StateFamily::Gi { q: r.random_range(0.02..0.5) },
            1 => StateFamily::Gw { p: r.random_range(0.02..0.6) },
            _ => {
                let p = r.random_range(0.01..0.4);
                StateFamily::Gwi { p, q: r.random_range(0.01..0.6 - p) }
            }
        };
        let seed: u64 = r.random();
        let basis = if matches!(fam, StateFamily::Gi { .. }) { &gi } else { &gw };
        let mut cfg = OuterConfig { max_iter: 10, ..OuterConfig::default() };
        cfg.inner.seed = seed;
        let (rho, res) = solve(fam, basis, &cfg);
        let up = convex_roof_upper(&rho, &OracleConfig { starts: 2, seed, ..OracleConfig::default() }).unwrap().value;
        worst = worst.max(res.g_value - up);
    }
    out.push(check("(f) sandwich", worst <= 1e-8, format!("max g - oracle = {worst:.1e} over 50 triples (<= 1e-8)")));
    out
}

fn criterion9() -> Vec<Check> {
    let gw = gw_basis();
    let cfg = OuterConfig::default();
    let n = 15;
    let grid = surface_grid(n);
    let res: Vec<WitnessResult> = grid.iter().map(|&(p, q)| solve(StateFamily::Gwi { p, q }, &gw, &cfg).1).collect();
    // surface_grid is row-major in p
    let at = |i: usize, j: usize| &res[i * n + j];
    let mut rise = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i + 1 < n {
                rise = rise.max(at(i + 1, j).g_value - at(i, j).g_value);
            }
            if j + 1 < n {
                rise = rise.max(at(i, j + 1).g_value - at(i, j).g_value);
            }
        }
    }
    let beyond: Vec<(usize, &WitnessResult)> = grid.iter().zip(&res).enumerate().filter(|(_, ((p, q), _))| p / P0 + q / Q0 >= 1.0).map(|(k, (_, r))| (k, r)).collect();
    let gmax = beyond.iter().map(|(_, r)| r.g_value).fold(0.0, f64::max);
    let dmax = beyond.iter().map(|(_, r)| r.d_min).fold(0.0, f64::max);
    vec![
        check("monotone", rise <= 1e-4, format!("largest increase along a grid line {rise:.1e} (<= 1e-4)")),
        check("vanishes beyond boundary", gmax <= 1e-4, format!("max T3 = {gmax:.1e} over {} points (<= 1e-4), max d_min {dmax:.1e}", beyond.len())),
    ]
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut results: Vec<(usize, Vec<Check>, f64)> = Vec::new();
    let mut timed = |n: usize, f: &mut dyn FnMut() -> Vec<Check>| {
        let t = Instant::now();
        let checks = f();
        results.push((n, checks, t.elapsed().as_secs_f64()));
        let (_, checks, secs) = results.last().unwrap();
        report(n, checks, *secs);
    };

    if (1..=4).any(want) {
        let t = Instant::now();
        let g = gi_runs();
        eprintln!("GHZ/noise runs: {:.1}s", t.elapsed().as_secs_f64());
        for (n, f) in [(1, criterion1 as fn(&GiRuns) -> Vec<Check>), (2, criterion2), (3, criterion3), (4, criterion4)] {
            if want(n) {
                timed(n, &mut || f(&g));
            }
        }
    }
    if want(5) {
        timed(5, &mut criterion5);
    }
    if want(6) || want(7) {
        let (rho, res) = solve(StateFamily::Gwi { p: 0.03, q: GWI_Q }, &gw_basis(), &OuterConfig::default());
        let at = GwiRun { rho, res };
        if want(6) {
            timed(6, &mut || criterion6(&at));
        }
        if want(7) {
            timed(7, &mut || criterion7(&at));
        }
    }
    if want(8) {
        timed(8, &mut criterion8);
    }
    if want(9) {
        timed(9, &mut criterion9);
    }

    let mut unexpected = Vec::new();
    for (n, checks, _) in &results {
        if checks.iter().any(|c| !c.ok) && !KNOWN_DEVIATIONS.iter().any(|(k, _)| k == n) {
            unexpected.push(*n);
        }
    }
    let passed = results.iter().filter(|(_, c, _)| c.iter().all(|c| c.ok)).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn report(n: usize, checks: &[Check], secs: f64) {
    let ok = checks.iter().all(|c| c.ok);
    let note = match KNOWN_DEVIATIONS.iter().find(|(k, _)| *k == n) {
        Some((_, why)) if !ok => format!(" (known deviation: {why})"),
        _ => String::new(),
    };
    println!("criterion {n}: {}{note} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" });
    for c in checks {
        println!("    {} {}: {}", if c.ok { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
}
