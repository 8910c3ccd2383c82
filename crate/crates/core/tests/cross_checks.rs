//! Cross-checks between independent routes to the same quantity.

use memlab_core::decoder::{
    decode_matching, exact_pairing, greedy_pairing, is_logical_failure, torus_distance,
};
use memlab_core::dynamics::{
    first_passage, magnetization_reversed, simulate_trajectory, SimulationParams,
};
use memlab_core::ensemble::MeanEstimate;
use memlab_core::exact::{
    build_generator, gibbs_distribution, integrate_master, integrate_master_at, spectral_gap, Knot,
    ProtocolSchedule, RateLaw,
};
use memlab_core::lattice::{
    build_model, EdgeSet, LogicalKind, ModelKind, ModelSpec, Sector, Syndrome, ToricCode,
};
use memlab_core::thermo::{
    entropy_production_samples, sample_two_level_paths, szilard_run_with, SzilardProtocol,
};
use proptest::prelude::*;

/// Decay rate of ⟨M(t)⟩ from the all-up state, by least squares on ln⟨M⟩.
fn fitted_relaxation_rate(spec: ModelSpec, beta: f64, window: (f64, f64), n_traj: usize) -> f64 {
    let model = build_model(spec).unwrap();
    let cadence = 0.05;
    let params = SimulationParams::new(beta, window.1, 1).with_probe_cadence(cadence);
    let records: Vec<_> = (0..n_traj)
        .map(|i| simulate_trajectory(&model, &params, 1000 + i as u64).unwrap())
        .collect();
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, probe) in records[0].probes.iter().enumerate() {
        if probe.time < window.0 {
            continue;
        }
        let mean = records.iter().map(|r| r.probes[k].value).sum::<f64>() / n_traj as f64;
        let (x, y) = (probe.time, mean.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1.0;
    }
    -(n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn monte_carlo_relaxation_matches_exact_gap() {
    let free = ModelSpec::new(ModelKind::IsingMeanField, 1).with_coupling(0.0);
    let g = spectral_gap(&build_generator(&build_model(free).unwrap(), 1.0).unwrap()).unwrap();
    assert!((g - 1.0).abs() < 1e-12);
    let rate = fitted_relaxation_rate(free, 1.0, (0.2, 2.0), 40_000);
    assert!(
        (rate - g).abs() < 0.1 * g,
        "single spin: fit {rate}, gap {g}"
    );

    let ring = ModelSpec::new(ModelKind::Ising1D, 4);
    let g = spectral_gap(&build_generator(&build_model(ring).unwrap(), 0.5).unwrap()).unwrap();
    let rate = fitted_relaxation_rate(ring, 0.5, (1.0 / g, 3.0 / g), 40_000);
    assert!((rate - g).abs() < 0.1 * g, "ring N=4: fit {rate}, gap {g}");
}

#[test]
fn gillespie_populations_match_master_equation() {
    let schedules = [
        ProtocolSchedule::constant(0.0, 1.5, 3.0, 1.0, 1.0),
        ProtocolSchedule {
            knots: vec![Knot::new(0.0, 0.0, 2.0), Knot::new(3.0, 1.0, -1.0)],
            coupled: vec![(0.0, 3.0)],
            gamma: 2.0,
            beta: 0.7,
            rate_law: RateLaw::Metropolis,
        },
    ];
    let times = [0.25, 0.5, 1.0, 2.0, 3.0];
    for sched in &schedules {
        let sol = integrate_master_at(sched, [1.0, 0.0], &times).unwrap();
        let paths = sample_two_level_paths(sched, [1.0, 0.0], 20_000, 5).unwrap();
        for &t in &times {
            let p1 = sol.population_at(t).unwrap()[1];
            let occupied: Vec<f64> = paths.iter().map(|p| p.state_at(t) as f64).collect();
            let est = MeanEstimate::from_samples(&occupied);
            assert!(
                (est.mean - p1).abs() < 3.0 * est.stderr,
                "t={t}: ensemble {} ± {}, master {p1}",
                est.mean,
                est.stderr
            );
        }
    }
}

#[test]
fn two_level_relaxation_closed_form() {
    let (e, beta, gamma) = (1.3, 0.9, 1.7);
    let sched = ProtocolSchedule::constant(0.0, e, 4.0, gamma, beta);
    let times: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let sol = integrate_master_at(&sched, [1.0, 0.0], &times).unwrap();
    let g1 = 1.0 / (1.0 + (beta * e).exp());
    for &t in &times {
        // Heat-bath rates sum to γ.
        let exact = g1 * (1.0 - (-gamma * t).exp());
        assert!((sol.population_at(t).unwrap()[1] - exact).abs() < 1e-6);
    }
}

#[test]
fn quasi_static_work_is_rate_law_independent() {
    let heat_bath = SzilardProtocol::new(5.0, 2000.0, 1.0, 0.0);
    let metropolis = SzilardProtocol {
        rate_law: RateLaw::Metropolis,
        ..heat_bath
    };
    let a = szilard_run_with(&heat_bath).unwrap().extracted();
    let b = szilard_run_with(&metropolis).unwrap().extracted();
    assert!((a - b).abs() < 0.01 * a, "{a} vs {b}");
}

#[test]
fn fluctuation_theorem_holds_for_metropolis_rates() {
    let sched = ProtocolSchedule {
        knots: vec![
            Knot::new(0.0, 0.0, 0.0),
            Knot::new(1.5, 0.0, 2.5),
            Knot::new(3.0, 0.5, 0.0),
        ],
        coupled: vec![(0.0, 3.0)],
        gamma: 1.0,
        beta: 1.0,
        rate_law: RateLaw::Metropolis,
    };
    let ep = entropy_production_samples(&sched, [0.3, 0.7], 30_000, 8).unwrap();
    assert!((ep.ift_estimate - 1.0).abs() < 3.0 * ep.ift_stderr);
    assert!(ep.mean_sigma > 0.0);
}

#[test]
fn gibbs_null_vector_all_small_models() {
    let mut specs: Vec<ModelSpec> = (2..=10)
        .flat_map(|n| {
            [
                ModelSpec::new(ModelKind::Ising1D, n),
                ModelSpec::new(ModelKind::IsingMeanField, n),
            ]
        })
        .collect();
    specs.push(ModelSpec::new(ModelKind::Ising2D, 3));
    specs.push(ModelSpec::new(ModelKind::Kitaev2D, 2));
    specs.push(ModelSpec::new(ModelKind::Kitaev2D, 3));
    for spec in specs {
        let model = build_model(spec).unwrap();
        let g = build_generator(&model, 1.1).unwrap();
        let pi = gibbs_distribution(&model, 1.1).unwrap();
        let mut out = vec![0.0; pi.len()];
        g.apply(&pi, &mut out);
        let residual = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(residual < 1e-10, "{spec:?}: {residual}");
    }
}

#[test]
fn ring_gap_shrinks_with_beta() {
    let model = build_model(ModelSpec::new(ModelKind::Ising1D, 6)).unwrap();
    let gaps: Vec<f64> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&b| spectral_gap(&build_generator(&model, b).unwrap()).unwrap())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn ensemble_results_independent_of_worker_count() {
    let model = build_model(ModelSpec::new(ModelKind::IsingMeanField, 10)).unwrap();
    let params = SimulationParams::new(1.0, 1e6, 300);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| first_passage(&model, &params, magnetization_reversed, 77).unwrap())
    };
    assert_eq!(run(1), run(3));
}

/// Edge sets in the span of the star stabilizers, i.e. contractible cycles
/// of the plaquette sector.
fn contractible_cycles(code: &ToricCode) -> std::collections::HashSet<Vec<usize>> {
    let n = code.n_stabilizers();
    (0u32..1 << n)
        .map(|mask| {
            let mut set = EdgeSet::empty(code.n_edges());
            for s in 0..n {
                if mask >> s & 1 == 1 {
                    for &e in code.stabilizer_edges(Sector::Star, s) {
                        set.toggle(e);
                    }
                }
            }
            set.iter().collect()
        })
        .collect()
}

#[test]
fn weight_two_failures_are_exactly_the_noncontractible_residuals() {
    let code = ToricCode::new(3).unwrap();
    let trivial = contractible_cycles(&code);
    let ops = [
        code.logical(LogicalKind::ZType, 1).unwrap(),
        code.logical(LogicalKind::ZType, 2).unwrap(),
    ];
    for a in 0..code.n_edges() {
        for b in a + 1..code.n_edges() {
            let error = EdgeSet::from_edges(code.n_edges(), [a, b]).unwrap();
            let syndrome = code.syndrome(&error, Sector::Plaquette).unwrap();
            let correction = decode_matching(&code, &syndrome).unwrap();
            let residual: Vec<usize> = error
                .symmetric_difference(&correction.edges)
                .iter()
                .collect();
            let nontrivial = !trivial.contains(&residual);
            let failed = ops
                .iter()
                .any(|op| is_logical_failure(&code, &error, &correction, op).unwrap());
            assert_eq!(failed, nontrivial, "error {{{a}, {b}}}");
        }
    }
}

fn pairing_cost(code: &ToricCode, anyons: &[usize], pairs: &[(usize, usize)]) -> usize {
    pairs
        .iter()
        .map(|&(i, j)| torus_distance(code, anyons[i], anyons[j]))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_pairing_never_worse_than_greedy(l in 3usize..8, seed in proptest::collection::vec(any::<u16>(), 12)) {
        let code = ToricCode::new(l).unwrap();
        let mut anyons: Vec<usize> = seed.iter().map(|&s| s as usize % code.n_stabilizers()).collect();
        anyons.sort_unstable();
        anyons.dedup();
        if anyons.len() % 2 == 1 {
            anyons.pop();
        }
        let exact = exact_pairing(&code, &anyons);
        let greedy = greedy_pairing(&code, &anyons);
        prop_assert!(pairing_cost(&code, &anyons, &exact) <= pairing_cost(&code, &anyons, &greedy));
        let correction = decode_matching(&code, &Syndrome { sector: Sector::Plaquette, anyons: anyons.clone() }).unwrap();
        prop_assert!(correction.exact);
        prop_assert!(correction.weight <= pairing_cost(&code, &anyons, &greedy));
    }

    #[test]
    fn szilard_never_beats_landauer(
        e_max in 0.1f64..12.0,
        ramp in 0.0f64..300.0,
        p in 0.0f64..=1.0,
        beta in 0.3f64..3.0,
    ) {
        let ledger = szilard_run_with(&SzilardProtocol::new(e_max, ramp, beta, p)).unwrap();
        prop_assert!(ledger.extracted() <= std::f64::consts::LN_2 / beta * (1.0 + 1e-6));
        prop_assert!(ledger.first_law_residual() < 1e-8);
    }
}

#[test]
fn master_solution_conserves_probability() {
    let sched = ProtocolSchedule::periodic_triangle(3.0, 1.0, 5, 2.0, 1.0);
    let sol = integrate_master(&sched, [0.9, 0.1]).unwrap();
    for p in &sol.populations {
        assert!((p[0] + p[1] - 1.0).abs() < 1e-10);
    }
}
