//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints its PASS/FAIL line; exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use common::dense;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sset_mbqc::duality::Sector;
use sset_mbqc::lattice::{horizontal_separation, min_separation, BoundaryStyle, Coord, LatticeSpec, Region};
use sset_mbqc::lie::{boundary_generators, closure};
use sset_mbqc::localization::{kappa, logical_observables};
use sset_mbqc::mbqc::{compare, conjugated_expectation, predict_logical, random_steps, run_protocol, ResourceState, Separation};
use sset_mbqc::models::{build_toric, build_toric_mbqc, build_xz_star, symmetry_catalog, toric_label, Family, SpinModel, DEFAULT_EPSILON};
use sset_mbqc::pauli::{Letter, PauliOperator};
use sset_mbqc::spectra::{default_requests, expect, model_ground_state, order_parameter_sweep, Observable, Route, SweepResult};
use sset_mbqc::sset::{global_relations, mutual_statistics, nested_rects, phi, statistics_table, AnyonLabel};

type Check = Result<String, String>;

fn ensure(ok: bool, fails: &mut Vec<String>, msg: impl Into<String>) {
    if !ok {
        fails.push(msg.into());
    }
}

fn verdict(summary: String, fails: Vec<String>) -> Check {
    if fails.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", fails.join("; ")))
    }
}

fn closure_dim(model: &SpinModel) -> usize {
    let cat = symmetry_catalog(model).unwrap();
    let form = kappa(&cat).unwrap();
    let ls = logical_observables(&cat).unwrap();
    let (_, gens) = boundary_generators(&cat, &form, &ls).unwrap();
    closure(&gens).unwrap().dim
}

fn lie_closure_dimensions() -> Check {
    let mut fails = Vec::new();
    let mut seen = Vec::new();
    let cases: Vec<(&str, usize, usize)> = vec![
        ("toric", 3, 3 * 5),
        ("toric", 4, 4 * 7),
        ("toric", 5, 5 * 9),
        ("xz-star", 3, 4usize.pow(2) - 1),
        ("xz-star", 4, 4 * (4usize.pow(2) - 1)),
        ("xz-star", 5, 4usize.pow(4) - 1),
    ];
    for (family, ly, want) in cases {
        let t = Instant::now();
        let model = if family == "toric" { build_toric_mbqc(4, ly, 0.0, 0.0) } else { build_xz_star(LatticeSpec::star_open(6, ly)) }.unwrap();
        let dim = closure_dim(&model);
        let secs = t.elapsed().as_secs_f64();
        seen.push(format!("{family} L_y={ly}: {dim}"));
        ensure(dim == want, &mut fails, format!("{family} L_y={ly}: dim {dim}, want {want}"));
        ensure(secs < 5.0, &mut fails, format!("{family} L_y={ly}: {secs:.1} s"));
    }
    verdict(seen.join(", "), fails)
}

fn logical_qubit_counts() -> Check {
    let mut fails = Vec::new();
    let mut seen = Vec::new();
    for ly in [2, 3, 4, 5] {
        let cat = symmetry_catalog(&build_toric_mbqc(4, ly, 0.0, 0.0).unwrap()).unwrap();
        let r = logical_observables(&cat).unwrap().rank_h();
        seen.push(format!("toric L_y={ly}: {r}"));
        ensure(r == ly, &mut fails, format!("toric L_y={ly}: rank(H) {r}, want {ly}"));
    }
    for ly in [3, 4, 5] {
        let cat = symmetry_catalog(&build_xz_star(LatticeSpec::star_open(6, ly)).unwrap()).unwrap();
        let r = logical_observables(&cat).unwrap().rank_h();
        seen.push(format!("xz-star L_y={ly}: {r}"));
        ensure(r == ly - 1, &mut fails, format!("xz-star L_y={ly}: rank(H) {r}, want {}", ly - 1));
    }
    verdict(seen.join(", "), fails)
}

fn kappa_relations() -> Check {
    let mut fails = Vec::new();
    for ly in [2usize, 3, 4] {
        let cat = symmetry_catalog(&build_toric_mbqc(4, ly, 0.0, 0.0).unwrap()).unwrap();
        let form = kappa(&cat).unwrap();
        let gens = cat.generators();
        for (i, a) in gens.iter().enumerate() {
            for (j, b) in gens.iter().enumerate() {
                let left = a.v_l.anticommutes_with(&b.v_l);
                let right = a.v_r.anticommutes_with(&b.v_r);
                ensure(left == right, &mut fails, format!("L_y={ly}: V_L and V_R disagree on ({}, {})", a.label, b.label));
                let want = (1..=ly as i32).any(|y| {
                    let e = toric_label('e', y);
                    let pair = |m: String| (a.label == e && b.label == m) || (b.label == e && a.label == m);
                    pair(toric_label('m', y)) || pair(toric_label('m', y - 1))
                });
                ensure(form.get(i, j) == want, &mut fails, format!("L_y={ly}: kappa({}, {}) = {}", a.label, b.label, u8::from(form.get(i, j))));
            }
        }
    }
    verdict("L_y in {2,3,4}, all generator pairs".into(), fails)
}

fn order_parameters_at_solvable_point() -> Check {
    let mut fails = Vec::new();
    let mut count = 0;
    let res = ResourceState::new(build_toric_mbqc(4, 2, 0.0, 0.0).unwrap()).unwrap();
    for ((site, label), s) in &res.sigma_table {
        count += 1;
        ensure((s - 1.0).abs() <= 1e-12, &mut fails, format!("sigma({site}, {label}) = {s}"));
    }
    let (lx, ly) = (7, 3);
    let model = build_toric_mbqc(lx, ly, 0.0, 0.0).unwrap();
    let mut requests = Vec::new();
    for row in 1..=ly as i32 {
        for k in 1..lx as i32 {
            requests.push(Observable::Sigma { sector: Sector::Electric, row, k });
            requests.push(Observable::StringOp { sector: Sector::Electric, row, a: k });
        }
    }
    for row in 1..ly as i32 {
        for k in 2..lx as i32 {
            requests.push(Observable::Sigma { sector: Sector::Magnetic, row, k });
        }
        // a = 1 would span boundary to boundary, a closed symmetry string
        for a in 2..=lx as i32 {
            requests.push(Observable::StringOp { sector: Sector::Magnetic, row, a });
        }
    }
    let chain = &order_parameter_sweep(&model, &[0.0], &requests, false).unwrap()[0];
    for (obs, (id, v)) in requests.iter().zip(&chain.entries) {
        count += 1;
        let want = if matches!(obs, Observable::Sigma { .. }) { 1.0 } else { 0.0 };
        ensure((v - want).abs() <= 1e-12, &mut fails, format!("{id} {obs:?} = {v}"));
    }
    verdict(format!("{count} values"), fails)
}

fn duality_route() -> Check {
    let t = Instant::now();
    let mut fails = Vec::new();
    let model = build_toric_mbqc(3, 2, 0.0, DEFAULT_EPSILON).unwrap();
    let requests = default_requests(3, 2, false);
    let alphas = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
    let results = order_parameter_sweep(&model, &alphas, &requests, true).unwrap();
    let mut worst = 0.0f64;
    for (pair, &alpha) in results.chunks(2).zip(&alphas) {
        let (c, o) = (&pair[0], &pair[1]);
        ensure(c.route == Route::Chain && o.route == Route::Oracle, &mut fails, "missing oracle row");
        for ((id, a), (_, b)) in c.entries.iter().zip(&o.entries) {
            worst = worst.max((a - b).abs());
            ensure((a - b).abs() <= 1e-10, &mut fails, format!("alpha={alpha} {id}: chain {a} vs 2D {b}"));
        }
        // energy against a dense diagonalization built from the term list
        let m = build_toric(model.spec(), alpha, alpha, DEFAULT_EPSILON).unwrap();
        let terms: Vec<(f64, String)> = m.weighted_terms().iter().map(|(w, p)| (*w, p.to_text())).collect();
        let (e0, _, _) = dense::ground(&dense::hamiltonian(m.n_qubits(), &terms));
        let chain_e = c.entries.iter().find(|(id, _)| id == "energy").unwrap().1;
        worst = worst.max((chain_e - e0).abs());
        ensure((chain_e - e0).abs() <= 1e-10, &mut fails, format!("alpha={alpha}: energy {chain_e} vs dense {e0}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, &mut fails, format!("{secs:.1} s"));
    verdict(format!("max deviation {worst:.2e}, {secs:.2} s"), fails)
}

fn series(results: &[SweepResult], id: &str) -> Vec<f64> {
    results.iter().map(|r| r.entries.iter().find(|(i, _)| i == id).unwrap().1).collect()
}

fn sweep_structure() -> Check {
    let t = Instant::now();
    let mut fails = Vec::new();
    let (lx, ly) = (7, 3);
    let template = build_toric_mbqc(lx, ly, 0.0, DEFAULT_EPSILON).unwrap();
    let alphas: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
    let results = order_parameter_sweep(&template, &alphas, &default_requests(lx, ly, false), false).unwrap();
    let mut summary = Vec::new();
    for row in 1..=ly {
        let s = series(&results, &format!("sigma_e_y{row}"));
        let w = series(&results, &format!("W_e_y{row}"));
        ensure(s.windows(2).all(|p| p[1] <= p[0] + 1e-12), &mut fails, format!("sigma_e_y{row} not nonincreasing"));
        ensure(w.windows(2).all(|p| p[1] >= p[0] - 1e-12), &mut fails, format!("W_e_y{row} not nondecreasing"));
        let sign: Vec<bool> = s.iter().zip(&w).map(|(a, b)| a > b).collect();
        let flips: Vec<usize> = (1..sign.len()).filter(|&i| sign[i] != sign[i - 1]).collect();
        let at = flips.first().map(|&i| alphas[i]);
        ensure(flips.len() == 1 && at.is_some_and(|a| a > 0.5 && a < 1.5), &mut fails, format!("row {row}: crossings at {:?}", flips.iter().map(|&i| alphas[i]).collect::<Vec<_>>()));
        let (s2, w2) = (*s.last().unwrap(), *w.last().unwrap());
        ensure(s2 < 0.1, &mut fails, format!("sigma_e_y{row}(2) = {s2:.3}"));
        ensure(w2 > 0.9, &mut fails, format!("W_e_y{row}(2) = {w2:.3}"));
        summary.push(format!("row {row}: crossing near {:?}, sigma(2)={s2:.3}, W(2)={w2:.3}", at));
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 10.0, &mut fails, format!("{secs:.1} s"));
    verdict(summary.join("; "), fails)
}

fn protocol_vs_prediction() -> Check {
    let mut fails = Vec::new();
    let res = ResourceState::new(build_toric_mbqc(4, 2, 0.0, 0.0).unwrap()).unwrap();
    ensure(res.n_qubits() == 10, &mut fails, format!("{} qubits", res.n_qubits()));
    let sep = Separation::off();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut n_checks = 0;
    for seq in 0..5 {
        let steps = random_steps(&res, 3, sep, &mut rng);
        ensure(!steps.is_empty() && steps.len() <= 3, &mut fails, format!("sequence {seq}: {} steps", steps.len()));
        let run = run_protocol(&res, &steps, 10_000, 100 + seq, sep).unwrap();
        let pred = predict_logical(&res.catalog, &res.logical, &steps, &res.sigma_table).unwrap();
        for c in compare(&run, &pred) {
            n_checks += 1;
            let z = (c.estimate - c.prediction).abs() / c.stderr.max(1e-300);
            if c.stderr > 0.0 {
                worst = worst.max(z);
            }
            ensure(c.within_5se, &mut fails, format!("sequence {seq} {}: {:.4} vs {:.4} (se {:.4})", c.label, c.estimate, c.prediction, c.stderr));
            // sigma = 1: the prediction is the exact unitary expectation
            let exact = conjugated_expectation(&res, &steps, &c.label).unwrap();
            ensure((exact - c.prediction).abs() <= 1e-10, &mut fails, format!("sequence {seq} {}: prediction {} vs exact {exact}", c.label, c.prediction));
        }
    }
    verdict(format!("{n_checks} logical estimates, max |z| = {worst:.2}"), fails)
}

fn error_formula() -> Check {
    let mut fails = Vec::new();
    let theta = PI / 3.0;
    let gen: PauliOperator = "XZ".parse().unwrap();
    let mut summary = Vec::new();
    for sigma in [0.6, 0.8, 0.9] {
        let rep = sset_mbqc::mbqc::verify_error_scaling(&gen, theta, sigma, &[1, 10, 100]).unwrap();
        for row in &rep.rows {
            let eps = theta * theta / row.n as f64 * (1.0 - sigma * sigma) / (sigma * sigma);
            ensure((row.bound - eps).abs() <= 1e-12 * eps, &mut fails, format!("sigma={sigma} N={}: bound {} vs {eps}", row.n, row.bound));
            ensure(row.distance <= eps, &mut fails, format!("sigma={sigma} N={}: distance {:.3e} > {eps:.3e}", row.n, row.distance));
        }
        let d = |n: usize| rep.rows.iter().find(|r| r.n == n).map(|r| r.distance * n as f64).unwrap();
        let ratio = d(100) / d(10);
        ensure((ratio - 1.0).abs() <= 0.2, &mut fails, format!("sigma={sigma}: N*distance ratio {ratio:.3}"));
        summary.push(format!("sigma={sigma}: N*d ratio {ratio:.3}"));
    }
    verdict(summary.join(", "), fails)
}

fn sset_invariants() -> Check {
    let mut fails = Vec::new();
    let mut summary = Vec::new();
    let cases: [(SpinModel, &[(&str, &str)]); 2] = [
        (build_toric(LatticeSpec::toric_periodic(8, 8), 0.0, 0.0, 0.0).unwrap(), &[("e", "m"), ("m", "e")]),
        (build_xz_star(LatticeSpec::star_periodic(12, 8)).unwrap(), &[("g110", "m"), ("g011", "mbar"), ("gbar110", "e"), ("gbar011", "ebar")]),
    ];
    for (model, want) in cases {
        let cat = symmetry_catalog(&model).unwrap();
        let rels = global_relations(&cat).unwrap();
        let want: BTreeMap<&str, &str> = want.iter().copied().collect();
        for rel in &rels {
            let rects = nested_rects(&model, rel, &cat).unwrap();
            ensure(rects.len() == 3 && rects[2].contains_rect(&rects[1]) && rects[1].contains_rect(&rects[0]), &mut fails, format!("{}: rectangles not nested", rel.id));
            match phi(&model, &cat, rel, &rects) {
                Ok((label, _)) => {
                    let expected = AnyonLabel::named(model.family, want[rel.id.as_str()]).unwrap();
                    summary.push(format!("phi({})={label}", rel.id));
                    ensure(label == expected, &mut fails, format!("phi({}) = {label}, want {expected}", rel.id));
                }
                Err(e) => fails.push(format!("phi({}): {e}", rel.id)),
            }
        }
    }
    verdict(summary.join(", "), fails)
}

fn stabilizer_state_of(model: &SpinModel) -> sset_mbqc::spectra::StateVector {
    model_ground_state(model).unwrap().state
}

fn random_pauli_in(model: &SpinModel, region: &Region, rng: &mut ChaCha8Rng) -> PauliOperator {
    loop {
        let letters: Vec<(Coord, Letter)> = region
            .sites
            .iter()
            .map(|&c| (c, [Letter::I, Letter::X, Letter::Y, Letter::Z][rng.gen_range(0..4)]))
            .filter(|(_, l)| *l != Letter::I)
            .collect();
        if !letters.is_empty() {
            return model.lattice.pauli(&letters).unwrap();
        }
    }
}

fn decorrelation() -> Check {
    let mut fails = Vec::new();
    let model = build_toric_mbqc(5, 2, 0.0, 0.0).unwrap();
    let state = stabilizer_state_of(&model);
    let corr = |p: &PauliOperator, q: &PauliOperator| {
        let pq = p * q;
        expect(&state, &pq.normalized()).unwrap() * f64::from(pq.sign().unwrap_or(1)) - expect(&state, p).unwrap() * expect(&state, q).unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (lo, hi) = model.lattice.x2_range();
    let mut pairs = 0;
    let mut worst = 0.0f64;
    let mut attempts = 0;
    while pairs < 50 {
        attempts += 1;
        assert!(attempts < 100_000, "no admissible rectangle pairs");
        let style = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { BoundaryStyle::Smooth } else { BoundaryStyle::Rough };
        let (sa, sb) = (style(&mut rng), style(&mut rng));
        let rect = |s: BoundaryStyle, x0: i32, x1: i32| {
            let odd = i32::from(s == BoundaryStyle::Rough);
            let (x0, x1) = (x0 - x0.rem_euclid(2) + odd, x1 - x1.rem_euclid(2) + odd);
            Region::rectangle(&model.lattice, x0, x1, 2 - odd, 4 + odd)
        };
        let a0 = rng.gen_range(lo - 1..=hi);
        let a1 = rng.gen_range(a0..=hi + 1);
        let b0 = rng.gen_range(a1..=hi + 1);
        let b1 = rng.gen_range(b0..=hi + 1);
        let (ra, rb) = (rect(sa, a0, a1), rect(sb, b0, b1));
        if ra.is_empty() || rb.is_empty() || !ra.sites.is_disjoint(&rb.sites) {
            continue;
        }
        let need = min_separation(sa, sb, 0.0).unwrap();
        let Some(gap) = horizontal_separation(&ra, &rb) else { continue };
        if gap < need {
            continue;
        }
        let (p, q) = (random_pauli_in(&model, &ra, &mut rng), random_pauli_in(&model, &rb, &mut rng));
        let c = corr(&p, &q);
        worst = worst.max(c.abs());
        ensure(c.abs() <= 1e-12, &mut fails, format!("{p} / {q} ({sa:?}-{sb:?}, gap {gap}): {c:.3e}"));
        pairs += 1;
    }
    // rule broken: rough region at half a unit from a smooth one, split vertex star
    let ra = Region::rectangle(&model.lattice, 1, 5, 1, 5);
    let rb = Region::rectangle(&model.lattice, 6, 10, 2, 4);
    let gap = horizontal_separation(&ra, &rb).unwrap();
    let need = min_separation(BoundaryStyle::Rough, BoundaryStyle::Smooth, 0.0).unwrap();
    let p = model.lattice.pauli(&[(Coord::new(5, 4), Letter::X)]).unwrap();
    let q = model.lattice.pauli(&[(Coord::new(7, 4), Letter::X), (Coord::new(6, 3), Letter::X)]).unwrap();
    ensure(p.support().iter().all(|&s| ra.contains(&model.lattice.site(s))), &mut fails, "counterexample P outside A");
    ensure(q.support().iter().all(|&s| rb.contains(&model.lattice.site(s))), &mut fails, "counterexample Q outside B");
    let c = corr(&p, &q);
    ensure(gap < need && (c - 1.0).abs() <= 1e-12, &mut fails, format!("counterexample: gap {gap} (need {need}), correlation {c}"));
    verdict(format!("{pairs} admissible pairs, max |corr| = {worst:.1e}; broken rule at gap {gap} < {need}: {p} / {q} correlation {c:.3}"), fails)
}

fn anyon_statistics() -> Check {
    let mut fails = Vec::new();
    let xz = build_xz_star(LatticeSpec::star_periodic(18, 12)).unwrap();
    let table = statistics_table(&xz).unwrap();
    ensure(table.len() == 16, &mut fails, format!("{} pairs", table.len()));
    let sign = |i: usize, j: usize| table.iter().find(|(a, b, _)| a.bits == 1 << i && b.bits == 1 << j).unwrap().2;
    // two toric codes in basis (e1, m1, e2, m2)
    let reference = |i: usize, j: usize| if i / 2 == j / 2 && i != j { -1i8 } else { 1 };
    let mut perms = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j])) && (0..4).all(|i| (0..4).all(|j| sign(i, j) == reference(p[i], p[j]))) {
                        perms.push(p);
                    }
                }
            }
        }
    }
    ensure(!perms.is_empty(), &mut fails, format!("no relabeling matches two toric codes: {table:?}"));
    let toric = build_toric(LatticeSpec::toric_periodic(10, 10), 0.0, 0.0, 0.0).unwrap();
    let e = AnyonLabel::named(Family::Toric, "e").unwrap();
    let m = AnyonLabel::named(Family::Toric, "m").unwrap();
    let em = mutual_statistics(&toric, e, m).unwrap();
    ensure(em == -1, &mut fails, format!("toric (e,m) sign {em}"));
    let names: Vec<String> = AnyonLabel::basis(Family::XzStar).iter().map(|a| a.to_string()).collect();
    let shown = perms.first().map(|p| {
        let tc = ["e1", "m1", "e2", "m2"];
        names.iter().zip(p).map(|(n, &i)| format!("{n}->{}", tc[i])).collect::<Vec<_>>().join(" ")
    });
    verdict(format!("{} matching relabelings (first: {}), toric (e,m) = {em}", perms.len(), shown.unwrap_or_default()), fails)
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("Lie-closure dimensions", lie_closure_dimensions),
        ("logical qubit counts", logical_qubit_counts),
        ("kappa relations", kappa_relations),
        ("order parameters at the solvable point", order_parameters_at_solvable_point),
        ("duality route vs dense 2D", duality_route),
        ("order-parameter sweep structure", sweep_structure),
        ("MBQC protocol vs CPTP prediction", protocol_vs_prediction),
        ("error formula", error_formula),
        ("SSET invariants", sset_invariants),
        ("decorrelation", decorrelation),
        ("anyon statistics", anyon_statistics),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let tag = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || tag.contains(p.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(msg) => println!("{tag} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{tag} FAIL  {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} of {} criteria failed", failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
