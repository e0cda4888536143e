mod common;

#[test]
fn expansions_match_symbolic_generator() {
    for n in [6, 7, 9] {
        for (name, err) in common::algebra_residuals(n, 8, 11 + n as u64) {
            assert!(err <= 1e-12, "{name} at n = {n}: {err:e}");
        }
    }
}

#[test]
fn symbolic_oracle_knows_the_conservation_laws() {
    use common::poly::Ring;
    let ring = Ring { n: 6 };
    let energy = ring.quadratic(|x, y| if x == y { 1.0 } else { 0.0 });
    let volume = (0..6).fold(common::poly::Poly::zero(6), |acc, x| acc.add(&ring.site(x)));
    let omega = [0.3, -1.2, 0.7, 0.1, -0.4, 0.9];
    assert!(ring.generator(&energy, 1.0, 1.0).eval(&omega).abs() < 1e-13);
    assert!(ring.a(&volume).eval(&omega).abs() < 1e-13);
    assert!(ring.s1(&volume).eval(&omega).abs() < 1e-13);
    assert!(ring.s2(&volume).eval(&omega).abs() > 1e-3);
}
