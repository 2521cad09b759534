use repelsim::analysis::{generator_stationarity, invariant_gof, subsample};
use repelsim::integrate::{path_rng, simulate, RecordedStates, Representation, SimConfig};
use repelsim::model::{GeneratorVariant, PolyTestFn};
use repelsim::ModelSpec;

/// All exponent vectors over `nvars` variables with total degree in `1..=max`.
fn monomials(nvars: usize, max: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            if cur.iter().sum::<u32>() > 0 {
                out.push(cur.clone());
            }
            return;
        }
        for p in 0..=left {
            cur[i] = p;
            rec(i + 1, left - p, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, max, &mut vec![0; nvars], &mut out);
    out
}

fn check_all(a: &[f64], max_degree: u32, draws: usize, seed: u64) {
    let n = a.len();
    let basis = monomials(2 * n, max_degree);
    for (i, exps) in basis.iter().enumerate() {
        let powers: Vec<(usize, u32)> = exps.iter().copied().enumerate().filter(|(_, p)| *p > 0).collect();
        let f = PolyTestFn::monomial(n, 1.0, &powers);
        let r = generator_stationarity(&f, a, GeneratorVariant::ItoCorrected, draws, 0.0, 3.0, &mut path_rng(seed, i as u64));
        assert!(r.passed(), "f = z^{exps:?}: {:?}", r.inputs);
    }
}

#[test]
fn basis_counts() {
    assert_eq!(monomials(2, 4).len(), 14);
    assert_eq!(monomials(4, 2).len(), 14);
}

#[test]
fn ito_generator_annihilates_pi_up_to_degree_four() {
    check_all(&[1.0], 4, 1_000_000, 41);
}

#[test]
fn ito_generator_annihilates_pi_two_modes() {
    check_all(&[1.0, 0.5], 2, 1_000_000, 42);
}

#[test]
fn long_environment_run_converges_to_pi() {
    let spec = ModelSpec::canonical();
    let (dt, spacing, burn_in) = (0.005, 10.0, 20.0);
    let mut samples = Vec::new();
    for chain in 0..6 {
        let sim = SimConfig::new(dt, 2000.0, 77, Representation::Environment).with_stride(400);
        let traj = simulate(&spec, &sim, &mut path_rng(77, chain)).unwrap();
        let RecordedStates::Env(states) = traj.states else { unreachable!() };
        let kept: Vec<_> = states.into_iter().zip(&traj.times).filter(|(_, &t)| t >= burn_in).map(|(s, _)| s).collect();
        samples.extend(subsample(&kept, 400.0 * dt, spacing));
    }
    assert!(samples.len() >= 1000, "{}", samples.len());
    let r = invariant_gof(&samples, &spec.a, 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}
