#![allow(dead_code)]

use petviashvili::mesh::{load_triangulation, Mesh};

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 30)
}

/// Dense generalized symmetric eigenproblem `B x = ν L x` by Cholesky
/// reduction `C = G⁻¹ B G⁻ᵀ` (with `L = G Gᵀ`) and cyclic Jacobi rotations.
/// Returns eigenvalues in descending order.
pub fn dense_generalized_eigenvalues(b: &[Vec<f64>], l: &[Vec<f64>]) -> Vec<f64> {
    let n = l.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = l[i][j];
            for k in 0..j {
                s -= g[i][k] * g[j][k];
            }
            if i == j {
                assert!(s > 0.0, "oracle: L not positive definite");
                g[i][i] = s.sqrt();
            } else {
                g[i][j] = s / g[j][j];
            }
        }
    }
    // Y = G⁻¹ B, then C = G⁻¹ Yᵀ.
    let forward = |rhs: &[f64]| {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= g[i][k] * y[k];
            }
            y[i] = s / g[i][i];
        }
        y
    };
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| forward(&(0..n).map(|i| b[i][j]).collect::<Vec<_>>()))
        .collect();
    // Column i of C = G⁻¹ (G⁻¹B)ᵀ is G⁻¹ applied to row i of G⁻¹B.
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        let row_t: Vec<f64> = (0..n).map(|j| cols[j][i]).collect();
        let z = forward(&row_t);
        for j in 0..n {
            c[j][i] = z[j];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (c[i][j] + c[j][i]);
            c[i][j] = avg;
            c[j][i] = avg;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| c[i][j] * c[i][j])
            .sum();
        if off.sqrt() < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if c[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (c[q][q] - c[p][p]) / (2.0 * c[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (c[k][p], c[k][q]);
                    c[k][p] = cs * akp - sn * akq;
                    c[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (c[p][k], c[q][k]);
                    c[p][k] = cs * apk - sn * aqk;
                    c[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| c[i][i]).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

pub fn mesh_path(name: &str) -> String {
    format!("{}/../../meshes/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load_mesh(stem: &str) -> Mesh {
    let node = std::fs::read_to_string(mesh_path(&format!("{stem}.node"))).unwrap();
    let ele = std::fs::read_to_string(mesh_path(&format!("{stem}.ele"))).unwrap();
    load_triangulation(&node, &ele).unwrap()
}
