use super::*;
use crate::increments::IncrementLaw;
use crate::rng;
use proptest::prelude::*;
use rand::Rng;

fn cycle3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.])
}

fn two_state() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4])
}

fn birth_death(n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = if i + 1 < n { 0.2 + 0.05 * i as f64 } else { 0.0 };
        let down = if i > 0 { 0.3 } else { 0.0 };
        if i + 1 < n {
            p[(i, i + 1)] = up;
        }
        if i > 0 {
            p[(i, i - 1)] = down;
        }
        p[(i, i)] = 1.0 - up - down;
    }
    p
}

fn part(n: usize, a: &[usize]) -> Partition {
    Partition::new(n, a).unwrap()
}

fn checks_pass(c: &[IdentityCheck], tol: f64) {
    for x in c {
        assert!(x.skipped.is_none(), "{x:?}");
        if x.threshold.is_some() {
            assert!(x.residual <= tol, "{x:?}");
        }
    }
}

#[test]
fn dual_examples() {
    let p = cycle3();
    let mu = stationary(&p).unwrap();
    let d = dual(&p, &mu).unwrap();
    let reverse = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
    assert!((&d - reverse).amax() < 1e-15);
    let bd = birth_death(6);
    let mu = stationary(&bd).unwrap();
    assert!((dual(&bd, &mu).unwrap() - &bd).amax() < 1e-14);
    let (p, _) = random_chain(3, 0, 10, 10);
    let mu = stationary(&p).unwrap();
    let d = dual(&p, &mu).unwrap();
    for x in 0..10 {
        for y in 0..10 {
            assert!((mu[x] * p[(x, y)] - mu[y] * d[(y, x)]).abs() <= 1e-14);
        }
    }
    assert!((dual(&d, &mu).unwrap() - &p).amax() <= 1e-14);
    assert!(dual(&p, &DVector::from_element(10, 0.0)).is_err());
}

#[test]
fn induced_examples() {
    let (p, _) = random_chain(5, 1, 8, 8);
    assert_eq!(induced_kernel(&p, &part(8, &(0..8).collect::<Vec<_>>())).unwrap(), p);
    assert_eq!(induced_kernel(&cycle3(), &part(3, &[0])).unwrap(), DMatrix::from_element(1, 1, 1.0));
}

/// `Σ_{k ≤ K} U Q^k V` by repeated multiplication.
fn neumann(b: &Blocks, k: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(b.u.nrows(), b.v.ncols());
    let mut t = b.u.clone();
    for _ in 0..=k {
        acc += &t * &b.v;
        t = &t * &b.q;
    }
    acc
}

#[test]
fn induced_kernel_matches_neumann_series() {
    let (p, _) = random_chain(11, 0, 8, 8);
    let pa = part(8, &[1, 4, 6]);
    let b = Blocks::new(&p, &pa);
    let series = &b.r + neumann(&b, 200);
    let exact = induced_kernel(&p, &pa).unwrap();
    assert!((series - exact).amax() <= 1e-10);
    // (I − Q)^{-1} V against its truncated series
    let mut acc = DMatrix::zeros(b.q.nrows(), b.v.ncols());
    let mut t = b.v.clone();
    for _ in 0..=200 {
        acc += &t;
        t = &b.q * t;
    }
    assert!((acc - b.hit_a().unwrap()).amax() <= 1e-10);
}

#[test]
fn entrance_and_exit_examples() {
    let p = cycle3();
    let e = entrance_kernel(&p, &part(3, &[0, 1])).unwrap();
    assert_eq!(e.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
    assert_eq!(e.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
    assert_eq!(entrance_kernel(&p, &part(3, &[2])).unwrap(), DMatrix::from_element(1, 1, 1.0));
    let (ex, x) = exit_kernel(&p, &part(3, &[0, 1])).unwrap();
    assert_eq!(ex, vec![0]);
    assert_eq!(x, DMatrix::from_element(1, 1, 1.0));
    let (p8, _) = random_chain(7, 2, 8, 8);
    let (_, x) = exit_kernel(&p8, &part(8, &[0, 1, 2, 3, 4, 5, 6])).unwrap();
    assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    assert!(matches!(exit_row(&p, &part(3, &[0, 1]), 0), Ok(_)));
    // state 0 of A^c = {0, 1} cannot step into A = {2}
    assert!(matches!(exit_row(&p, &part(3, &[2]), 0), Err(LabError::Domain(_))));
}

/// Runs the chain and tallies consecutive entrance states into `A` and
/// consecutive exit states from `A^c`.
fn simulate_pairs(p: &DMatrix<f64>, pa: &Partition, steps: u64, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = p.nrows();
    let in_a: Vec<bool> = (0..n).map(|i| pa.a.contains(&i)).collect();
    let cum: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            (0..n).map(|j| {
                acc += p[(i, j)];
                acc
            })
            .collect()
        })
        .collect();
    let mut r = rng::stream(seed, 0);
    let (mut entr, mut exit) = (DMatrix::zeros(n, n), DMatrix::zeros(n, n));
    let (mut last_en, mut last_ex): (Option<usize>, Option<usize>) = (None, None);
    let mut x = 0;
    for _ in 0..steps {
        let u: f64 = r.random();
        let y = cum[x].partition_point(|c| *c <= u).min(n - 1);
        if !in_a[x] && in_a[y] {
            if let Some(e) = last_en {
                entr[(e, y)] += 1.0;
            }
            if let Some(e) = last_ex {
                exit[(e, x)] += 1.0;
            }
            last_en = Some(y);
            last_ex = Some(x);
        }
        x = y;
    }
    (entr, exit)
}

fn within_bands(counts: &DMatrix<f64>, rows: &[usize], cols: &[usize], kernel: &DMatrix<f64>) {
    for (i, &x) in rows.iter().enumerate() {
        let total: f64 = counts.row(x).sum();
        if total < 1000.0 {
            continue;
        }
        for (j, &y) in cols.iter().enumerate() {
            let q = kernel[(i, j)];
            let est = counts[(x, y)] / total;
            let band = 3.0 * (q * (1.0 - q) / total).sqrt() + 1e-12;
            assert!((est - q).abs() <= band, "({x},{y}): {est} vs {q} ± {band}");
        }
    }
}

#[test]
fn kernels_match_simulation() {
    let (p, _) = random_chain(19, 0, 8, 8);
    let pa = part(8, &[0, 3, 5]);
    let (entr, exit) = simulate_pairs(&p, &pa, 10_000_000, 23);
    let e = entrance_kernel(&p, &pa).unwrap();
    within_bands(&entr, &pa.a, &pa.a, &e);
    let (ex, x) = exit_kernel(&p, &pa).unwrap();
    let ex_states: Vec<usize> = ex.iter().map(|i| pa.ac[*i]).collect();
    within_bands(&exit, &ex_states, &ex_states, &x);
}

#[test]
fn measures_examples() {
    let p = cycle3();
    let mu = stationary(&p).unwrap();
    let m = entrance_exit_measures(&p, &mu, &part(3, &[0, 1])).unwrap();
    assert!((m.entr[0] - 1.0 / 3.0).abs() < 1e-15 && m.entr[1].abs() < 1e-15);
    assert_eq!(m.exit.len(), 1);
    assert!((m.exit[0] - 1.0 / 3.0).abs() < 1e-15);
    let p2 = two_state();
    let mu = stationary(&p2).unwrap();
    let m = entrance_exit_measures(&p2, &mu, &part(2, &[0])).unwrap();
    let want = mu[1] * 0.6;
    assert!((want - mu[0] * 0.3).abs() < 1e-15);
    assert!((m.entr.sum() - want).abs() < 1e-15 && (m.exit.sum() - want).abs() < 1e-15);
    let all = verify_measures(&p, &stationary(&p).unwrap(), &part(3, &[0, 1, 2])).unwrap();
    assert!(all.iter().all(|c| c.skipped.is_some()));
}

#[test]
fn kac_examples() {
    let p = cycle3();
    let nu = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    assert_eq!(kac_lift(&p, &part(3, &[0, 1, 2]), &nu).unwrap(), nu);
    let lifted = kac_lift(&p, &part(3, &[0]), &DVector::from_element(1, 1.0)).unwrap();
    assert!((lifted - DVector::from_element(3, 1.0)).amax() < 1e-15);
    let (p12, _) = random_chain(2, 9, 12, 12);
    let mu = stationary(&p12).unwrap();
    let pa = part(12, &[0, 2, 3, 7]);
    let lifted = kac_lift(&p12, &pa, &kernels::sub_vec(&mu, &pa.a)).unwrap();
    assert!((lifted - &mu).amax() <= 1e-11);
    for (p, a) in [(two_state(), vec![0]), (cycle3(), vec![0, 1])] {
        let n = p.nrows();
        let mu = stationary(&p).unwrap();
        let pa = part(n, &a);
        let m = entrance_exit_measures(&p, &mu, &pa).unwrap();
        assert!((kac_lift_entrance(&p, &pa, &m.entr).unwrap() - &mu).amax() <= 1e-15);
    }
}

#[test]
fn small_chain_identities() {
    for (p, a) in [(cycle3(), vec![0, 1]), (two_state(), vec![0]), (cycle3(), vec![0])] {
        let n = p.nrows();
        let mu = stationary(&p).unwrap();
        checks_pass(&verify_invariance(&p, &mu, &part(n, &a)).unwrap(), 1e-15);
        checks_pass(&verify_duality(&p, &mu, &part(n, &a)).unwrap(), 1e-15);
        checks_pass(&verify_bijection(&p, &part(n, &a)).unwrap(), 1e-15);
    }
    for a in [[0], [1]] {
        checks_pass(&verify_bijection(&two_state(), &part(2, &a)).unwrap(), 1e-15);
    }
    let skipped = verify_invariance(&cycle3(), &stationary(&cycle3()).unwrap(), &part(3, &[])).unwrap();
    assert!(skipped.iter().all(|c| c.skipped.is_some() && c.pass));
}

#[test]
fn reversible_duality_uses_the_chain_itself() {
    let p = birth_death(7);
    let mu = stationary(&p).unwrap();
    for a in [vec![0, 1, 2], vec![3], vec![1, 4, 5]] {
        let pa = part(7, &a);
        let (ex, x) = exit_kernel(&p, &pa).unwrap();
        let e = entrance_kernel(&p, &pa.complement()).unwrap();
        let e = kernels::sub(&e, &ex, &ex);
        let w: Vec<f64> = ex.iter().map(|i| mu[pa.ac[*i]] * p.row(pa.ac[*i]).iter().enumerate().filter(|(j, _)| a.contains(j)).map(|(_, v)| v).sum::<f64>()).collect();
        for i in 0..ex.len() {
            for j in 0..ex.len() {
                assert!((w[i] * x[(i, j)] - w[j] * e[(j, i)]).abs() <= 1e-14);
            }
        }
        let c = verify_duality(&p, &mu, &pa).unwrap();
        checks_pass(&c, 1e-12);
        // with A an interval the two kernels coincide outright
        if a != [1, 4, 5] {
            assert!((x - e).amax() <= 1e-12);
            assert!(c[1].residual <= 1e-12);
        } else {
            assert!(c[1].residual > 0.1);
        }
    }
}

#[test]
fn product_reduction_examples() {
    let p = two_state();
    let mu = stationary(&p).unwrap();
    checks_pass(&verify_product_reduction(&p, &mu, &part(2, &[0])).unwrap(), 1e-14);
    let p = cycle3();
    let mu = stationary(&p).unwrap();
    // the only (exit, entrance) pair is (2, 0)
    checks_pass(&verify_product_reduction(&p, &mu, &part(3, &[0, 1])).unwrap(), 1e-15);
}

#[test]
fn torus_examples() {
    let c = torus_walk(1, 5, &IncrementLaw::simple()).unwrap().with_set(&[0, 1, 2]).unwrap();
    let mu = c.mu().unwrap();
    assert!(mu.iter().all(|v| (v - 0.2).abs() < 1e-15));
    let m = entrance_exit_measures(c.p(), mu, c.partition()).unwrap();
    assert!((m.entr[0] - 0.1).abs() < 1e-15 && m.entr[1] == 0.0 && (m.entr[2] - 0.1).abs() < 1e-15);

    let law = IncrementLaw::product(vec![IncrementLaw::simple(), IncrementLaw::simple()]).unwrap();
    let t = torus_walk(2, 4, &law).unwrap();
    let a: Vec<usize> = vec![0, 1, 4, 5];
    let t = t.with_set(&a).unwrap();
    let mu = t.mu().unwrap();
    let m = entrance_exit_measures(t.p(), mu, t.partition()).unwrap();
    // tail form: μ(x) P(x − X ∉ A) on the torus
    let steps = [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)];
    for (k, &s) in a.iter().enumerate() {
        let (i, j) = ((s / 4) as i64, (s % 4) as i64);
        let out = steps
            .iter()
            .filter(|(u, v)| {
                let (x, y) = ((i - u).rem_euclid(4), (j - v).rem_euclid(4));
                !a.contains(&((x * 4 + y) as usize))
            })
            .count() as f64
            / 4.0;
        assert_eq!(m.entr[k], out / 16.0);
    }

    let cyc = torus_walk(1, 3, &IncrementLaw::lattice(&[("1", "1")]).unwrap()).unwrap();
    assert_eq!(cyc.p(), &cycle3());
    let wide = IncrementLaw::lattice(&[("4", "1/5"), ("-1", "4/5")]).unwrap();
    assert!(matches!(torus_walk(1, 3, &wide), Err(LabError::Domain(_))));
}

#[test]
fn json_chains() {
    let c = FiniteChain::from_json(r#"{"states": ["a", "b"], "P": [[0.7, 0.3], [0.6, 0.4]], "A": [0]}"#).unwrap();
    assert_eq!(c.states()[1], serde_json::json!("b"));
    assert!((c.mu().unwrap()[0] - 2.0 / 3.0).abs() < 1e-15);
    checks_pass(&c.verify(12).unwrap(), 1e-10);
    for bad in [
        r#"{"P": [[0.7, 0.2], [0.6, 0.4]], "A": [0]}"#,
        r#"{"P": [[1.1, -0.1], [0.6, 0.4]], "A": [0]}"#,
        r#"{"P": [[1.0], [0.6, 0.4]], "A": [0]}"#,
        r#"{"P": [[0.7, 0.3], [0.6, 0.4]], "A": [5]}"#,
        r#"{"P": [[0.7, 0.3], [0.6, 0.4]], "A": [0], "extra": 1}"#,
    ] {
        assert!(matches!(FiniteChain::from_json(bad), Err(LabError::Config { .. })), "{bad}");
    }
    let red = FiniteChain::from_json(r#"{"P": [[1, 0], [0.5, 0.5]], "A": [0]}"#).unwrap();
    assert!(matches!(red.mu(), Err(LabError::Structural(_))));
}

#[test]
fn randomized_suite_passes() {
    let r = run_suite(2024, 50, 3, 30, 12).unwrap();
    assert!(r.pass, "{:?}", r.failures);
    assert!(r.maxima["kac_lift_entrance"] <= 1e-11);
    assert!(r.maxima.contains_key("product_reduction_law"));
    assert!(r.maxima["kernels_row_stochastic"] <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_identity_holds(seed in any::<u64>(), n in 3usize..16) {
        let (p, pa) = random_chain(seed, 0, n, n);
        for c in verify_all(&p, &pa, 12).unwrap() {
            prop_assert!(c.pass, "{:?}", c);
        }
        let mu = stationary(&p).unwrap();
        let d = dual(&p, &mu).unwrap();
        prop_assert!((dual(&d, &mu).unwrap() - &p).amax() <= 1e-14);
        prop_assert!(linalg::invariance_residual(&mu, &d) <= 1e-12);
    }
}

#[test]
fn torus_tail_form_holds_exactly() {
    let law = IncrementLaw::product(vec![IncrementLaw::simple(), IncrementLaw::simple()]).unwrap();
    let c = torus_tail_form_check(2, 4, &law, &[1, 1], &[2, 2]).unwrap();
    assert!(c.pass && c.residual <= 1e-12, "{c:?}");
    let skew = IncrementLaw::lattice(&[("1", "2/3"), ("-2", "1/3")]).unwrap();
    assert!(torus_tail_form_check(1, 7, &skew, &[2], &[4]).unwrap().pass);
    assert!(torus_tail_form_check(2, 4, &law, &[1, 1], &[4, 2]).is_err());
}
