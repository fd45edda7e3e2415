use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use tqk::data::{iris, parse_csv, sample_split};
use tqk::feature_map::{Entangler, FeatureMap, FeatureMapLayout, RotationPattern};
use tqk::kernel::{kernel_from_states, pauli_decompose, KernelMode};
use tqk::multiclass::{
    build_readout_state, ensemble_decision_ovo, ensemble_decision_ovr, grover_readout, ClassEnsemble,
};
use tqk::optimizer::{minimize, OptimizationProblem};
use tqk::sim::{grover_reflections, prepare_real_amplitudes, Circuit, GateOp, Statevector};

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.3..6.3f64, n)
}

fn features(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..std::f64::consts::PI, n)
}

fn layout(pattern: RotationPattern) -> FeatureMapLayout {
    FeatureMapLayout::new(3, 2, pattern, Entangler::LinearCz)
}

fn unit(raw: &[f64]) -> Option<Vec<f64>> {
    let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > 1e-3).then(|| raw.iter().map(|a| a / norm).collect())
}

fn random_circuit(ops: &[(u8, usize, usize, f64)], n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for &(kind, a, b, t) in ops {
        let (a, b) = (a % n, b % n);
        let g = match kind % 6 {
            0 => GateOp::Rx { qubit: a, angle: t },
            1 => GateOp::Ry { qubit: a, angle: t },
            2 => GateOp::Rz { qubit: a, angle: t },
            3 => GateOp::H { qubit: a },
            4 if a != b => GateOp::Cnot { control: a, target: b },
            _ if a != b => GateOp::Cz { a, b },
            _ => GateOp::H { qubit: a },
        };
        c.push(g);
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_preserve_norm_and_invert(
        ops in prop::collection::vec((any::<u8>(), 0..3usize, 0..3usize, -6.3..6.3f64), 1..20),
        raw in prop::collection::vec(-1.0..1.0f64, 8),
    ) {
        let Some(amps) = unit(&raw) else { return Ok(()); };
        let c = random_circuit(&ops, 3);
        let s = Statevector::from_real(&amps).unwrap();
        let out = s.apply_circuit(&c).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let back = out.apply_circuit(&c.inverse()).unwrap();
        prop_assert!(back.distance(&s).unwrap() < 1e-10);
    }

    #[test]
    fn real_amplitude_preparation_is_exact(raw in prop::collection::vec(-1.0..1.0f64, 16)) {
        let Some(amps) = unit(&raw) else { return Ok(()); };
        let c = prepare_real_amplitudes(4, &[0, 1, 2, 3], &amps).unwrap();
        let out = Statevector::zero(4).unwrap().apply_circuit(&c).unwrap();
        for (a, b) in out.amplitudes().iter().zip(&amps) {
            prop_assert!((a - Complex64::new(*b, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_is_symmetric_psd_with_unit_diagonal(
        theta in angles(27),
        xs in prop::collection::vec(features(3), 2..7),
        zyz in any::<bool>(),
    ) {
        let map = if zyz { layout(RotationPattern::Zyz) } else { layout(RotationPattern::Y) };
        let theta = &theta[..map.parameter_count()];
        let states: Vec<Statevector> = xs.iter().map(|x| map.encode(x, theta).unwrap()).collect();
        let k = kernel_from_states(&states, 2, KernelMode::Exact).unwrap();
        for i in 0..k.size() {
            prop_assert!((k.entries[(i, i)] - 1.0).abs() < 1e-10);
            for j in 0..k.size() {
                prop_assert!((k.entries[(i, j)] - k.entries[(j, i)]).abs() < 1e-12);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&k.entries[(i, j)]));
            }
        }
        prop_assert!(k.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn pauli_round_trip(raw in prop::collection::vec(-2.0..2.0f64, 64), bits in 1..4usize) {
        let d = 1 << bits;
        let a = DMatrix::from_fn(d, d, |r, c| raw[r * 8 + c]);
        let m = (&a + a.transpose()) * 0.5;
        let back = pauli_decompose(&m).unwrap().reconstruct().unwrap();
        for r in 0..d {
            for c in 0..d {
                prop_assert!((back[(r, c)] - Complex64::new(m[(r, c)], 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn best_so_far_never_increases(
        center in prop::collection::vec(-1.0..1.0f64, 3),
        seed in any::<u64>(),
    ) {
        let problem = OptimizationProblem::uniform_box(3, -2.0, 2.0, 200);
        let trace = minimize(
            &problem,
            |x| x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + (5.0 * x[0]).sin() * 0.1,
            &[0.0; 3],
            seed,
        )
        .unwrap();
        let best = trace.best_so_far();
        prop_assert!(best.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(trace.evaluations_used <= 200);
        prop_assert!(trace.best_params.iter().all(|p| (-2.0..=2.0).contains(p)));
        prop_assert!((best.last().copied().unwrap() - trace.best_value).abs() < 1e-15);
    }

    #[test]
    fn grover_scales_marked_amplitudes_together(
        raw in prop::collection::vec(0.05..1.0f64, 8),
        mask in prop::collection::vec(any::<bool>(), 8),
        rounds in 1..4usize,
    ) {
        let amps = unit(&raw).unwrap();
        if mask.iter().all(|&m| m) || !mask.iter().any(|&m| m) {
            return Ok(());
        }
        let prep = prepare_real_amplitudes(3, &[0, 1, 2], &amps).unwrap();
        let state = Statevector::from_real(&amps).unwrap();
        let out = grover_reflections(&state, &mask, &prep, rounds).unwrap();
        let a = out.amplitudes();
        let marked: Vec<usize> = (0..8).filter(|&i| mask[i]).collect();
        let unmarked: Vec<usize> = (0..8).filter(|&i| !mask[i]).collect();
        for group in [&marked, &unmarked] {
            let g0 = group[0];
            for &i in group.iter() {
                prop_assert!((a[i].re * amps[g0] - a[g0].re * amps[i]).abs() < 1e-9);
                prop_assert!(a[i].im.abs() < 1e-9);
            }
        }
        let weight: f64 = marked.iter().map(|&i| amps[i] * amps[i]).sum();
        let theta = weight.sqrt().asin();
        let expected = ((2 * rounds + 1) as f64 * theta).sin().powi(2);
        let got: f64 = marked.iter().map(|&i| a[i].norm_sqr()).sum();
        prop_assert!((got - expected).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn readout_amplitudes_match_direct_sum(
        theta in angles(4),
        members in prop::collection::vec(features(2), 9),
        x in features(2),
        rounds in 0..3usize,
    ) {
        let map = FeatureMapLayout::new(2, 1, RotationPattern::Y, Entangler::LinearCz);
        let sizes = [4usize, 3, 2];
        let mut start = 0;
        let ensembles: Vec<ClassEnsemble> = sizes
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                let m = members[start..start + n].to_vec();
                start += n;
                ClassEnsemble::encode(c, m, None, &map, &theta).unwrap()
            })
            .collect();
        let inst = build_readout_state(&ensembles, &map, &theta, &x).unwrap();
        let slots = 4.0f64;
        let psi = map.encode(&x, &theta).unwrap();
        let direct: Vec<Complex64> = ensembles
            .iter()
            .map(|e| {
                e.weights
                    .iter()
                    .zip(&e.states)
                    .map(|(p, s)| psi.overlap(s).unwrap() * p.sqrt())
                    .sum::<Complex64>()
                    / (3.0 * slots).sqrt()
            })
            .collect();
        let report = grover_readout(&inst, rounds, None).unwrap();
        for (a, b) in report.amplitudes_before.iter().zip(&direct) {
            prop_assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
        let total_before: f64 = report.before.iter().sum();
        let total_after: f64 = report.after.iter().sum();
        let expected = ((2 * rounds + 1) as f64 * total_before.sqrt().asin()).sin().powi(2);
        prop_assert!((total_after - expected).abs() < 1e-9);
        for j in 0..3 {
            for k in 0..3 {
                prop_assert!((report.after[j] * report.before[k] - report.after[k] * report.before[j]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn ovo_and_ovr_agree_on_random_triples() {
    use rand::{Rng, SeedableRng};
    let map = FeatureMapLayout::new(2, 1, RotationPattern::Y, Entangler::LinearCz);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..2).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect()
    };
    let mut disagreements = 0;
    for _ in 0..1000 {
        let theta: Vec<f64> = (0..map.parameter_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ensembles: Vec<ClassEnsemble> = (0..3)
            .map(|c| {
                let members = (0..2).map(|_| draw(&mut rng)).collect();
                ClassEnsemble::encode(c, members, None, &map, &theta).unwrap()
            })
            .collect();
        let x = map.encode(&draw(&mut rng), &theta).unwrap();
        let ovo = ensemble_decision_ovo(&ensembles, &x).unwrap();
        let ovr = ensemble_decision_ovr(&ensembles, &x).unwrap();
        if ovo != ovr.class_index {
            disagreements += 1;
        }
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn csv_round_trip_and_split_determinism() {
    let ds = iris().unwrap();
    let mut text = String::from("sepal_length,sepal_width,petal_length,petal_width,species\n");
    for (x, &l) in ds.features.iter().zip(&ds.labels) {
        let cells: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("{},{}\n", cells.join(","), ds.class_names[l]));
    }
    let back = parse_csv(text.as_bytes(), "roundtrip", "species").unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.class_names, ds.class_names);

    let a = sample_split(&ds, &[10, 10, 10], 7).unwrap();
    let b = sample_split(&ds, &[10, 10, 10], 7).unwrap();
    let c = sample_split(&ds, &[10, 10, 10], 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.train, c.train);
    assert_eq!(a.train_indices().len() + a.test.len(), ds.len());
}
