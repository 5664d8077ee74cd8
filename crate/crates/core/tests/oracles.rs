mod common;

use common::adaptive_simpson;
use petviashvili::assemble::lp_norm;
use petviashvili::exact::{exact_derivative, exact_solution, solve_beta};
use petviashvili::iteration::{compute_m, energy, ProblemSpec};
use petviashvili::{Field, InitialGuess, MassKind, Mesh};

fn cn_field(mesh: &Mesh) -> Field {
    let params = solve_beta(2.0).unwrap();
    Field::from_fn(mesh, |x| exact_solution(x[0], &params).unwrap())
}

#[test]
fn lp4_norm_of_exact_solution() {
    let params = solve_beta(2.0).unwrap();
    let mesh = Mesh::interval(-2.0, 2.0, 800).unwrap();
    let u = cn_field(&mesh);
    let got = lp_norm(&mesh, &u, 4.0).unwrap();

    // The norm is that of the P1 interpolant: integrate it element by element.
    let nodal = mesh.expand(&u);
    let mut interp = 0.0;
    for e in 0..800 {
        let (a, b) = (mesh.node(e)[0], mesh.node(e + 1)[0]);
        let (ua, ub) = (nodal[e], nodal[e + 1]);
        let f = |x: f64| (ua + (ub - ua) * (x - a) / (b - a)).powi(4);
        interp += adaptive_simpson(&f, a, b, 1e-14);
    }
    let interp = interp.powf(0.25);
    assert!((got - interp).abs() <= 1e-12 * interp, "{got} vs {interp}");

    // Against the analytic function the gap is the O(h²) interpolation error.
    let f = |x: f64| exact_solution(x, &params).unwrap().powi(4);
    let analytic = adaptive_simpson(&f, -2.0, 2.0, 1e-13).powf(0.25);
    assert!(
        (got - analytic).abs() <= 1e-5 * analytic,
        "{got} vs {analytic}"
    );
}

#[test]
fn energy_of_exact_interpolant() {
    let params = solve_beta(2.0).unwrap();
    let spec = ProblemSpec::new(
        Mesh::interval(-2.0, 2.0, 800).unwrap(),
        3.0,
        1.5,
        MassKind::Lumped,
    )
    .unwrap();
    let u = cn_field(spec.mesh());
    let got = energy(&u, &spec).unwrap();
    let integrand = |x: f64| {
        let v = exact_solution(x, &params).unwrap();
        let d = exact_derivative(x, &params).unwrap();
        0.5 * (d * d + v * v) - 0.25 * v.powi(4)
    };
    let oracle = adaptive_simpson(&integrand, -2.0, 2.0, 1e-13);
    assert!((got - oracle).abs() <= 1e-5, "{got} vs {oracle}");
}

#[test]
fn m_of_parabola_matches_independent_sum() {
    let spec = ProblemSpec::new(
        Mesh::interval(-2.0, 2.0, 400).unwrap(),
        3.0,
        1.5,
        MassKind::Lumped,
    )
    .unwrap();
    let u0 = InitialGuess::Parabola.evaluate(spec.mesh()).unwrap();
    let got = compute_m(&u0, &spec).unwrap();

    // Exact integrals of the piecewise-linear interpolant for ⟨ℒu,u⟩ and the
    // trapezoidal rule for the nodal quartic term.
    let h = 4.0 / 400.0;
    let v: Vec<f64> = (0..=400)
        .map(|i| {
            let x = -2.0 + h * i as f64;
            (2.0 - x) * (2.0 + x)
        })
        .collect();
    let mut h1 = 0.0;
    let mut quartic = 0.0;
    for i in 0..400 {
        let (a, b) = (v[i], v[i + 1]);
        h1 += (b - a) * (b - a) / h + h / 3.0 * (a * a + a * b + b * b);
        quartic += 0.5 * h * (a.powi(4) + b.powi(4));
    }
    let oracle = h1 / quartic;
    assert!(got > 0.0);
    assert!((got - oracle).abs() <= 1e-8 * oracle, "{got} vs {oracle}");

    // Analytic value of the continuous functional, to discretization accuracy.
    let cont_h1 = 512.0 / 15.0 + 64.0 / 3.0;
    let cont_quartic = 2.0 * adaptive_simpson(&|x: f64| (4.0 - x * x).powi(4), 0.0, 2.0, 1e-12);
    assert!((got - cont_h1 / cont_quartic).abs() < 1e-3 * got);
}

#[test]
fn sine_mode_h1_norm() {
    let mesh = Mesh::interval(-2.0, 2.0, 2000).unwrap();
    let l = petviashvili::assemble::assemble_l(&mesh);
    let u = Field::from_fn(&mesh, |x| (std::f64::consts::PI * (x[0] + 2.0) / 4.0).sin());
    let h1 = l.bilinear(&u, &u);
    let l2 = lp_norm(&mesh, &u, 2.0).unwrap().powi(2);
    let k = std::f64::consts::PI / 4.0;
    assert!((h1 / l2 - (1.0 + k * k)).abs() < 1e-5);
}
