use super::*;
use crate::rng;
use proptest::prelude::*;

fn skewed() -> IncrementLaw {
    IncrementLaw::lattice(&[("1", "2/3"), ("-2", "1/3")]).unwrap()
}

fn atoms1(d: &DensityOnGroup) -> Vec<(f64, f64)> {
    d.atoms().unwrap().into_iter().map(|(x, m)| (x[0], m)).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn simple_walk_pi_weights() {
    let a = atoms1(&pi_density(&IncrementLaw::simple()).unwrap());
    assert_eq!(a.len(), 2);
    assert!(close(a[0].0, -1.0, 0.0) && close(a[0].1, 0.5, 1e-15));
    assert!(close(a[1].0, 0.0, 0.0) && close(a[1].1, 0.5, 1e-15));
}

#[test]
fn skewed_pi_weights() {
    let a = atoms1(&pi_density(&skewed()).unwrap());
    let want = [(-2.0, 0.25), (-1.0, 0.25), (0.0, 0.5)];
    assert_eq!(a.len(), 3);
    for ((x, m), (wx, wm)) in a.iter().zip(want) {
        assert_eq!(*x, wx);
        assert!(close(*m, wm, 1e-15), "{x}: {m}");
    }
}

#[test]
fn laplace_pi_is_half_exponential() {
    let d = pi_density(&IncrementLaw::laplace()).unwrap();
    for x in [-3.0, -0.5, 0.0, 0.7, 4.0] {
        assert!(close(d.density1(x), 0.5 * (-f64::abs(x)).exp(), 1e-15));
    }
    assert!(close(d.total_mass().finite().unwrap(), 1.0, 1e-8));
}

#[test]
fn pi_plus_examples() {
    let d = pi_plus_density(&IncrementLaw::laplace()).unwrap();
    for x in [0.0, 0.3, 2.0, 9.0] {
        assert!(close(d.density1(x), (-x).exp(), 1e-15));
    }
    assert_eq!(d.density1(-0.1), 0.0);
    let s = atoms1(&pi_plus_density(&skewed()).unwrap());
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].0, 0.0);
    assert!(close(s[0].1, 1.0, 1e-15));
}

#[test]
fn product_orthant_densities_have_infinite_mass() {
    let law = IncrementLaw::product(vec![IncrementLaw::gaussian(), IncrementLaw::laplace()]).unwrap();
    assert_eq!(pi_plus_density(&law).unwrap().total_mass(), TotalMass::Infinite);
    assert_eq!(pi_minus_density(&law).unwrap().total_mass(), TotalMass::Infinite);
    assert!(sample_from(&pi_plus_density(&law).unwrap(), &mut rng::stream(0, 0), 3).is_err());
}

#[test]
fn entrance_density_examples() {
    let law = IncrementLaw::product(vec![IncrementLaw::simple(), IncrementLaw::simple()]).unwrap();
    let d = lambda_entr_density(&law, &SetSpec::OrthantNonneg { dim: 2 }).unwrap();
    assert_eq!(d.density(&[0.0, 0.0]), 0.75);
    let half = lambda_entr_density(&IncrementLaw::laplace(), &SetSpec::HalfLineNonneg).unwrap();
    for x in [0.0, 0.5, 3.0] {
        assert_eq!(half.density1(x), IncrementLaw::laplace().tail_up(&[x]));
    }
}

#[test]
fn box_entrance_density_matches_monte_carlo() {
    let law = IncrementLaw::uniform(1.0);
    let a = SetSpec::closed_box(vec![0.0], vec![1.0]);
    let d = lambda_entr_density(&law, &a).unwrap();
    let x = 0.5;
    let exact = d.density1(x);
    let mut r = rng::stream(31, 0);
    let n = 200_000;
    let hits = law.sample(&mut r, n).unwrap().iter().filter(|v| !a.contains1(x - **v)).count();
    let mc = hits as f64 / n as f64;
    assert!(close(exact, 0.5, 1e-15));
    assert!((mc - exact).abs() < 4.0 * (0.25 / n as f64).sqrt());
    let m = d.total_mass().finite().unwrap();
    // ∫_0^1 P(X ∉ [x-1, x]) dx = 1 - ∫_0^1 P(x-1 ≤ X ≤ x) dx = 1/2
    assert!(close(m, 0.5, 1e-9));
}

#[test]
fn exit_density_lives_on_the_complement() {
    let law = skewed();
    let a = SetSpec::HalfLineNonneg;
    let d = lambda_exit_density(&law, &a).unwrap();
    assert_eq!(d.density1(0.0), 0.0);
    // P(X ∈ [1, ∞)) from x = -1, P(X ≥ 2) from x = -2
    assert!(close(d.density1(-1.0), 2.0 / 3.0, 1e-15));
    assert_eq!(d.density1(-2.0), 0.0);
    assert!(close(d.total_mass().finite().unwrap(), 2.0 / 3.0, 1e-15));
}

#[test]
fn masks_need_lattice_laws() {
    let e = lambda_entr_density(&IncrementLaw::laplace(), &SetSpec::sites(&[0.0])).unwrap_err();
    assert!(matches!(e, LabError::Capability(_)));
}

#[test]
fn abs_moment_examples() {
    assert!(close(abs_first_moment_pi(&IncrementLaw::simple()).unwrap().closed, 0.5, 1e-15));
    let s = abs_first_moment_pi(&skewed()).unwrap();
    assert!(close(s.closed, 0.75, 1e-15) && close(s.direct, 0.75, 1e-12) && close(s.tail_integrals, 0.75, 1e-9));
    let g = abs_first_moment_pi(&IncrementLaw::gaussian()).unwrap();
    assert!(close(g.closed, 0.626_657_068_657_750_1, 1e-12));
    let l = abs_first_moment_pi(&IncrementLaw::laplace()).unwrap();
    assert!(close(l.closed, 1.0, 1e-15));
}

#[test]
fn sampler_examples() {
    let n = 100_000;
    let mut r = rng::stream(40, 0);
    let xs = sample_from(&pi_plus_density(&IncrementLaw::laplace()).unwrap(), &mut r, n).unwrap();
    let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
    let zeros = sample_from(&pi_plus_density(&skewed()).unwrap(), &mut r, 1000).unwrap();
    assert!(zeros.iter().all(|x| x[0] == 0.0));
    let sw = sample_from(&pi_density(&IncrementLaw::simple()).unwrap(), &mut r, n).unwrap();
    let f0 = sw.iter().filter(|x| x[0] == 0.0).count() as f64 / n as f64;
    assert!((f0 - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt() * 2.0);
}

#[test]
fn continuum_sampler_inverts_the_cdf() {
    let d = pi_density(&IncrementLaw::laplace()).unwrap();
    let s = Sampler::new(&d).unwrap();
    let mut r = rng::stream(41, 0);
    let mut xs: Vec<f64> = (0..20_000).map(|_| s.draw(&mut r)).collect();
    xs.sort_by(f64::total_cmp);
    let cdf = |x: f64| if x < 0.0 { 0.5 * x.exp() } else { 1.0 - 0.5 * (-x).exp() };
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (cdf(*x) - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf(*x)).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 1.95 / n.sqrt(), "{ks}");
}

#[test]
fn csv_export() {
    let mut buf = Vec::new();
    pi_plus_density(&IncrementLaw::laplace()).unwrap().write_csv(&mut buf, &[0.0, 1.0]).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("x,density\n0,1\n1,0.36787944117144"));
}

fn mean_zero_lattice() -> impl Strategy<Value = IncrementLaw> {
    (1i64..5, 1i64..5, 0u32..3).prop_map(|(up, down, zero_tenths)| {
        // weights down/(up+down), up/(up+down) scaled to leave an atom at 0
        let z = zero_tenths as i64;
        let den = 10 * (up + down);
        let mut pairs = vec![
            (up.to_string(), format!("{}/{}", down * (10 - z), den)),
            ((-down).to_string(), format!("{}/{}", up * (10 - z), den)),
        ];
        if z > 0 {
            pairs.push(("0".into(), format!("{z}/10")));
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        IncrementLaw::lattice(&refs).unwrap()
    })
}

fn any_law() -> impl Strategy<Value = IncrementLaw> {
    prop_oneof![
        mean_zero_lattice(),
        Just(IncrementLaw::laplace()),
        Just(IncrementLaw::gaussian()),
        (0.2f64..3.0).prop_map(IncrementLaw::uniform),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization(law in any_law()) {
        let pi = pi_density(&law).unwrap().total_mass().finite().unwrap();
        let plus = pi_plus_density(&law).unwrap().total_mass().finite().unwrap();
        let minus = pi_minus_density(&law).unwrap().total_mass().finite().unwrap();
        prop_assert!((pi - 1.0).abs() < 1e-8, "pi {}", pi);
        prop_assert!((plus - 1.0).abs() < 1e-8, "plus {}", plus);
        prop_assert!((minus - 1.0).abs() < 1e-8, "minus {}", minus);
    }

    #[test]
    fn mixture_identity(law in any_law(), x in -6.0f64..6.0) {
        let h = law.lattice_span();
        let x = if h > 0.0 { (x / h).round() * h } else { x };
        let pi = pi_density(&law).unwrap().density1(x);
        let mix = 0.5 * pi_plus_density(&law).unwrap().density1(x) + 0.5 * pi_minus_density(&law).unwrap().density1(x);
        prop_assert!((pi - mix).abs() <= 1e-12);
    }

    #[test]
    fn moment_identity(law in any_law()) {
        let m = abs_first_moment_pi(&law).unwrap();
        prop_assert!((m.direct - m.closed).abs() <= 1e-8 * m.closed);
    }

    #[test]
    fn orthant_consistency(a in any_law(), b in any_law(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let b = if a.is_lattice() == b.is_lattice() { b } else { a.clone() };
        for law in [a.clone(), IncrementLaw::product(vec![a.clone(), b]).unwrap()] {
            let d = law.dimension();
            let p: Vec<f64> = [x, y][..d]
                .iter()
                .zip(law.lattice_spans())
                .map(|(v, h)| if h > 0.0 { (v / h).round() * h } else { *v })
                .collect();
            let entr = lambda_entr_density(&law, &SetSpec::OrthantNonneg { dim: d }).unwrap().density(&p);
            let tail_form = 1.0 - law.tail_low(&p);
            let plus = if p.iter().all(|v| *v >= 0.0) { tail_form } else { 0.0 };
            let tol = if law.is_lattice() { 0.0 } else { 1e-12 };
            prop_assert!((entr - plus).abs() <= tol, "{} vs {}", entr, plus);
        }
    }
}
