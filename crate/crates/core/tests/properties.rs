use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use vqse_core::experiments::{
    random_low_rank_state, vqse_run, xy_ground, xy_hamiltonian, GroundSelection, RunSettings, SpinChainSpec,
};
use vqse_core::hamiltonians::{cost_exact, cost_sampled, default_local_weights, sorted_levels};
use vqse_core::metrics::{bound_from_purity, eigen_errors};
use vqse_core::qmath::{apply_channel, apply_unitary, exact_eigs, partial_trace, purity, KrausChannel};
use vqse_core::seeding;
use vqse_core::vqse::{evaluate_cost, optimize_with, param_shift_gradient, readout, Ideal};
use vqse_core::{
    AdaptiveHamiltonian, Bitstring, BlockKind, CostVariant, DensityMatrix, DiagonalHamiltonian, GlobalPart,
    Hamiltonian, LayeredAnsatz, LocalWeights, LoopConfig, OptimizerConfig, PureState, StepwiseSchedule,
};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

fn random_pure<R: Rng>(n: usize, rng: &mut R) -> PureState {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    PureState::normalized(n, amps).unwrap()
}

/// Mixture of `rank` random complex pure states with random weights.
fn complex_state(n: usize, rank: usize, seed: u64) -> DensityMatrix {
    let mut rng = seeding::stream(seed, 7);
    let parts: Vec<(f64, PureState)> = (0..rank)
        .map(|_| (rng.random_range(0.05..1.0), random_pure(n, &mut rng)))
        .collect();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let parts: Vec<_> = parts.into_iter().map(|(w, s)| (w / total, s)).collect();
    DensityMatrix::mixture(&parts).unwrap()
}

fn kind(gcnotg: bool) -> BlockKind {
    if gcnotg {
        BlockKind::GCnotG
    } else {
        BlockKind::RyCz
    }
}

fn ansatz(n: usize, layers: usize, k: BlockKind, seed: u64) -> LayeredAnsatz {
    LayeredAnsatz::random(n, layers, k, &mut seeding::stream(seed, 3)).unwrap()
}

fn frob(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm()
}

/// Clamps `m` to the levels a global part can be built on: the `m` lowest
/// local energies must sit below 1.
fn valid_m(n: usize, m: usize) -> usize {
    let below = sorted_levels(&default_local_weights(n, 1).unwrap())
        .iter()
        .take_while(|l| l.0 < 1.0 - 1e-9)
        .count();
    m.min(n + 1).min(below).max(1)
}

/// Some Hamiltonian of each kind built from the default local weights.
fn hamiltonians(n: usize, m: usize, f: f64, seed: u64) -> Vec<Hamiltonian> {
    let local = default_local_weights(n, m).unwrap();
    let global = GlobalPart::from_local(&local, m).unwrap();
    let mut rng = seeding::stream(seed, 11);
    let mut picks: Vec<usize> = (0..1usize << n).collect();
    for i in (1..picks.len()).rev() {
        picks.swap(i, rng.random_range(0..=i));
    }
    let bits: Vec<Bitstring> = picks[..m].iter().map(|&i| Bitstring::new(n, i).unwrap()).collect();
    let shuffled = GlobalPart::with_bitstrings(&local, &bits).unwrap();
    vec![
        Hamiltonian::Local(local.clone()),
        Hamiltonian::Global(global),
        Hamiltonian::Adaptive(AdaptiveHamiltonian::new(local, shuffled, f).unwrap()),
    ]
}

/// `Σ E_k λ_k` with energies ascending and eigenvalues descending.
fn majorization_floor<H: DiagonalHamiltonian + ?Sized>(h: &H, lambdas: &[f64]) -> f64 {
    sorted_levels(h).iter().zip(lambdas).map(|(l, x)| l.0 * x).sum()
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn density_operations_preserve_invariants(
        n in 2usize..=4, rank in 1usize..=4, gcnotg: bool, p in 0.0f64..=1.0, seed: u64,
    ) {
        let rho = complex_state(n, rank, seed);
        rho.check_invariants().unwrap();
        let evolved = ansatz(n, 2, kind(gcnotg), seed).apply(&rho).unwrap();
        evolved.check_invariants().unwrap();
        let noisy = apply_channel(&evolved, &KrausChannel::depolarizing(2, p).unwrap(), &[0, n - 1]).unwrap();
        noisy.check_invariants().unwrap();
        let damped = apply_channel(&noisy, &KrausChannel::amplitude_damping(p).unwrap(), &[1]).unwrap();
        damped.check_invariants().unwrap();
        partial_trace(&damped, &[0]).unwrap().check_invariants().unwrap();
    }

    #[test]
    fn spectrum_reconstructs_state(n in 1usize..=4, rank in 1usize..=5, seed: u64) {
        let rho = complex_state(n, rank, seed);
        let spec = exact_eigs(&rho).unwrap();
        prop_assert!(spec.values.windows(2).all(|w| w[0] >= w[1]));
        let d = rho.dim();
        let mut rebuilt = DMatrix::<Complex64>::zeros(d, d);
        for (i, &l) in spec.values.iter().enumerate() {
            let v = spec.vector(i);
            let v = v.amplitudes();
            rebuilt += v * v.adjoint() * Complex64::new(l, 0.0);
        }
        prop_assert!(frob(&rebuilt, rho.matrix()) < 1e-8);
        let sq: f64 = spec.values.iter().map(|l| l * l).sum();
        prop_assert!((purity(&rho) - sq).abs() < 1e-10);
    }

    #[test]
    fn bipartite_reductions_share_spectra(n in 2usize..=5, cut in 1usize..=4, seed: u64) {
        prop_assume!(cut < n);
        let psi = DensityMatrix::from_pure(&random_pure(n, &mut seeding::stream(seed, 5)));
        let a = exact_eigs(&partial_trace(&psi, &(0..cut).collect::<Vec<_>>()).unwrap()).unwrap().values;
        let b = exact_eigs(&partial_trace(&psi, &(cut..n).collect::<Vec<_>>()).unwrap()).unwrap().values;
        for i in 0..a.len().max(b.len()) {
            let (x, y) = (a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0));
            prop_assert!((x - y).abs() < 1e-10, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn ansatz_paths_agree(n in 2usize..=4, layers in 1usize..=3, gcnotg: bool, seed: u64) {
        let a = ansatz(n, layers, kind(gcnotg), seed);
        let u = a.build_unitary();
        let d = 1usize << n;
        prop_assert!(frob(&(u.adjoint() * &u), &DMatrix::identity(d, d)) < 1e-9);
        let rho = complex_state(n, 3, seed ^ 1);
        let all: Vec<usize> = (0..n).collect();
        let direct = apply_unitary(&rho, &u, &all).unwrap();
        prop_assert!(frob(a.apply(&rho).unwrap().matrix(), direct.matrix()) < 1e-10);
    }

    #[test]
    fn cost_respects_majorization(
        n in 2usize..=4, m_raw in 1usize..=6, f in 0.0f64..=1.0, gcnotg: bool, seed: u64,
    ) {
        let m = valid_m(n, m_raw);
        let rho = complex_state(n, 4, seed);
        let lambdas = exact_eigs(&rho).unwrap().values;
        let evolved = ansatz(n, 2, kind(gcnotg), seed).apply(&rho).unwrap();
        for h in hamiltonians(n, m, f, seed) {
            let c = cost_exact(&h, &evolved).unwrap();
            prop_assert!(c >= majorization_floor(&h, &lambdas) - 1e-12);
        }
    }

    #[test]
    fn adaptive_endpoints_are_exact(n in 1usize..=5, m_raw in 1usize..=6, seed: u64) {
        let m = valid_m(n, m_raw);
        let hs = hamiltonians(n, m, 0.0, seed);
        let Hamiltonian::Adaptive(ref start) = hs[2] else { unreachable!() };
        prop_assert_eq!(start.energies(), start.local().energies());
        let end = AdaptiveHamiltonian::new(start.local().clone(), start.global().clone(), 1.0).unwrap();
        prop_assert_eq!(end.energies(), start.global().energies());
    }

    #[test]
    fn global_part_has_one_degenerate_top_level(n in 1usize..=6, m_raw in 1usize..=7) {
        let m = valid_m(n, m_raw);
        let g = GlobalPart::from_local(&default_local_weights(n, m).unwrap(), m).unwrap();
        let levels = sorted_levels(&g);
        prop_assert!(levels[..m].windows(2).all(|w| w[1].0 > w[0].0));
        prop_assert!(levels[m - 1].0 < 1.0);
        prop_assert!(levels[m..].iter().all(|l| l.0 == 1.0));
    }

    #[test]
    fn exact_readout_is_majorized_by_spectrum(n in 2usize..=4, rank in 1usize..=6, gcnotg: bool, seed: u64) {
        let rho = complex_state(n, rank, seed);
        let lambdas = exact_eigs(&rho).unwrap().values;
        let a = ansatz(n, 2, kind(gcnotg), seed);
        let d = 1usize << n;
        let est = readout(&rho, &a, d, 0, &mut seeding::stream(seed, 0)).unwrap();
        prop_assert!(est.lambdas.iter().all(|l| (0.0..=1.0).contains(l)));
        let (mut got, mut want) = (0.0, 0.0);
        for (k, (e, l)) in est.lambdas.iter().zip(&lambdas).enumerate() {
            got += e;
            want += l;
            prop_assert!(got <= want + 1e-12, "k = {k}");
        }
    }

    #[test]
    fn random_states_are_real_low_rank(n in 1usize..=4, anc in 0usize..=4, seed: u64) {
        let rho = random_low_rank_state(n, anc, seed).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.matrix().iter().all(|z| z.im.abs() < 1e-12));
        let rank = exact_eigs(&rho).unwrap().values.iter().filter(|&&l| l > 1e-10).count();
        prop_assert!(rank <= 1 << anc);
    }

    #[test]
    fn schedule_is_stepwise(s in 1usize..=10, blocks in 1usize..=10, k in 0usize..=120) {
        let sch = StepwiseSchedule::new(s * blocks, s).unwrap();
        let k = k.min(sch.n_max());
        prop_assert_eq!(sch.weight(0), 0.0);
        prop_assert_eq!(sch.weight(sch.n_max()), 1.0);
        prop_assert!(sch.weight(k) <= sch.t(k));
        if sch.is_update(k) {
            prop_assert_eq!(sch.weight(k), sch.t(k));
        }
        if k > 0 {
            prop_assert!(sch.weight(k - 1) <= sch.weight(k));
        }
    }

    #[test]
    fn eigen_errors_vanish_only_on_match(
        xs in prop::collection::vec(0.0f64..1.0, 1..8), i in 0usize..8, bump in 1e-6f64..0.5,
    ) {
        let m = xs.len();
        let e = eigen_errors(&xs, &xs, m).unwrap();
        prop_assert_eq!(e.eps_lambda, 0.0);
        prop_assert_eq!(e.eps_rel, 0.0);
        let mut ys = xs.clone();
        ys[i % m] += bump;
        prop_assert!(eigen_errors(&xs, &ys, m).unwrap().eps_lambda > 0.0);
    }

    #[test]
    fn chain_hamiltonian_is_symmetric_and_cyclic(
        sites in 3usize..=6, jx in -2.0f64..2.0, jy in -2.0f64..2.0, h in 0.0f64..3.0, gamma in 0.0f64..3.2,
    ) {
        let spec = SpinChainSpec { sites, jx, jy, h, gamma, keep: 1 };
        let hm = xy_hamiltonian(&spec).unwrap();
        prop_assert!((&hm - hm.transpose()).norm() < 1e-10);
        let d = 1usize << sites;
        let shift = DMatrix::<f64>::from_fn(d, d, |r, c| {
            let rotated = ((c << 1) | (c >> (sites - 1))) & (d - 1);
            if r == rotated { 1.0 } else { 0.0 }
        });
        prop_assert!((&shift * &hm - &hm * &shift).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn parameter_shift_matches_finite_differences(
        n in 2usize..=4, layers in 1usize..=2, gcnotg: bool, m_raw in 1usize..=5, seed: u64,
    ) {
        let m = valid_m(n, m_raw);
        let rho = complex_state(n, 3, seed);
        let a = ansatz(n, layers, kind(gcnotg), seed);
        let h = &hamiltonians(n, m, 0.4, seed)[2];
        let grad = param_shift_gradient(&rho, &a, h, 0, 0).unwrap();
        let energies = h.energies();
        let mut rng = seeding::stream(0, 0);
        let step = 1e-5;
        for (i, g) in grad.iter().enumerate() {
            let up = evaluate_cost(&Ideal, &rho, &a.shift_parameter(i, step).unwrap(), &energies, 0, &mut rng).unwrap();
            let down = evaluate_cost(&Ideal, &rho, &a.shift_parameter(i, -step).unwrap(), &energies, 0, &mut rng).unwrap();
            let fd = (up - down) / (2.0 * step);
            prop_assert!((g - fd).abs() < 1e-6, "param {i}: {g} vs {fd}");
        }
    }

    #[test]
    fn fixed_costs_stay_above_floor_along_traces(
        n in 2usize..=3, global: bool, seed: u64,
    ) {
        let m = 2;
        let rho = random_low_rank_state(n, 2, seed).unwrap();
        let lambdas = exact_eigs(&rho).unwrap().values;
        let cfg = LoopConfig {
            variant: if global { CostVariant::Global } else { CostVariant::Local },
            m,
            schedule: StepwiseSchedule::new(20, 5).unwrap(),
            optimizer: OptimizerConfig::default(),
            shots: 0,
        };
        let local = default_local_weights(n, m).unwrap();
        let mut lowest = f64::INFINITY;
        optimize_with(&Ideal, &rho, ansatz(n, 2, BlockKind::RyCz, seed), &local, &cfg, seed, |snap| {
            let floor = majorization_floor(snap.hamiltonian, &lambdas);
            let c = cost_exact(snap.hamiltonian, snap.rho_tilde).unwrap();
            lowest = lowest.min(c - floor);
        }).unwrap();
        prop_assert!(lowest >= -1e-12);
    }

    #[test]
    fn completed_runs_satisfy_bounds(
        n in 2usize..=4, anc in 1usize..=3, variant_ix in 0usize..3, m_raw in 1usize..=4, seed: u64,
    ) {
        let m = valid_m(n, m_raw);
        let rho = random_low_rank_state(n, anc, seed).unwrap();
        let exact = exact_eigs(&rho).unwrap().values;
        let settings = RunSettings {
            layers: 2,
            block: BlockKind::RyCz,
            loop_config: LoopConfig {
                variant: CostVariant::ALL[variant_ix],
                m,
                schedule: StepwiseSchedule::new(20, 5).unwrap(),
                optimizer: OptimizerConfig::default(),
                shots: 0,
            },
            local: None,
            m_hat: None,
        };
        let rec = vqse_run(&rho, &exact, &settings, 0, seed).unwrap();
        prop_assert!(rec.report.violations(1e-9).is_empty(), "{:?}", rec.report);
        prop_assert!(rec.report.bound_purity <= rec.report.bound_cost + 1e-9);
        prop_assert!(rec.report.bound_purity <= rec.report.bound_purity_at_m + 1e-12);
        for row in rec.trace.iter().filter(|r| r.bound_cost.is_some()) {
            prop_assert!(row.bound_purity.unwrap() <= row.bound_cost.unwrap() + 1e-9);
            prop_assert!(row.eps_abs <= row.bound_purity.unwrap() + 1e-9);
        }

        // The purity bound tightens as more estimates are used.
        let mut diag = rec_diag(&rho, &rec.theta, n);
        diag.sort_by(|a, b| b.total_cmp(a));
        let dim = 1usize << n;
        let sweep: Vec<f64> = (1..dim).map(|k| bound_from_purity(rec.purity, &diag, n, k).unwrap()).collect();
        prop_assert!(sweep.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{sweep:?}");
    }

    #[test]
    fn runs_replay_bit_for_bit(n in 2usize..=3, seed: u64) {
        let rho = random_low_rank_state(n, 2, seed).unwrap();
        let exact = exact_eigs(&rho).unwrap().values;
        let settings = RunSettings {
            layers: 1,
            block: BlockKind::RyCz,
            loop_config: LoopConfig {
                variant: CostVariant::Adaptive,
                m: 2,
                schedule: StepwiseSchedule::new(12, 4).unwrap(),
                optimizer: OptimizerConfig::default(),
                shots: 64,
            },
            local: None,
            m_hat: None,
        };
        let a = vqse_run(&rho, &exact, &settings, 0, seed).unwrap();
        let b = vqse_run(&rho, &exact, &settings, 0, seed).unwrap();
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert_eq!(&a.theta, &b.theta);
        prop_assert_eq!(&a.estimate, &b.estimate);
    }

    #[test]
    fn reduced_chain_states_match_schmidt(
        sites in 4usize..=7, keep in 1usize..=3, h in 0.0f64..3.0, gamma in 0.0f64..1.6,
    ) {
        let spec = SpinChainSpec { sites, jx: -1.0, jy: -0.5, h, gamma, keep };
        let g = xy_ground(&spec, GroundSelection::Lexicographic).unwrap();
        let (da, db) = (1usize << keep, 1usize << (sites - keep));
        let psi = DMatrix::from_row_slice(da, db, g.state.as_slice());
        let mut schmidt: Vec<f64> = psi.singular_values().iter().map(|s| s * s).collect();
        schmidt.sort_by(|a, b| b.total_cmp(a));
        let reduced = exact_eigs(&g.reduced).unwrap().values;
        for (i, r) in reduced.iter().enumerate() {
            prop_assert!((r - schmidt.get(i).copied().unwrap_or(0.0)).abs() < 1e-10);
        }
    }
}

fn rec_diag(rho: &DensityMatrix, theta: &[f64], n: usize) -> Vec<f64> {
    LayeredAnsatz::new(n, 2, BlockKind::RyCz, theta.to_vec())
        .unwrap()
        .apply(rho)
        .unwrap()
        .diagonal()
}

#[test]
fn sampled_cost_is_unbiased() {
    for seed in [3u64, 17, 42] {
        let n = 3;
        let rho = complex_state(n, 3, seed);
        let evolved = ansatz(n, 2, BlockKind::GCnotG, seed).apply(&rho).unwrap();
        let h = LocalWeights::arithmetic(n, 0.2, 0.05, 2).unwrap();
        let exact = cost_exact(&h, &evolved).unwrap();
        let samples: Vec<f64> = (0..1000)
            .map(|s| cost_sampled(&h, &evolved, 100, &mut seeding::stream(seed, s)).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / 1000.0;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        let se = (var / 1000.0).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "seed {seed}: {mean} vs {exact} (se {se})"
        );
    }
}
