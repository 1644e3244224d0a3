//! Floating-point LLL reduction and short-vector enumeration in small
//! dimension.
//!
//! Used only to propose candidates: callers verify every returned
//! coefficient vector exactly, and enlarge the search radius to absorb
//! rounding.

/// Integer coefficient vectors `c` (relative to `generators`) with
/// `‖Σ c_k g_k‖ <= radius`, excluding zero. Returns `None` if more than
/// `max_nodes` enumeration nodes would be visited.
pub fn short_vectors(generators: &[Vec<f64>], radius: f64, max_nodes: usize) -> Option<Vec<Vec<i64>>> {
    let m = generators.len();
    let mut b: Vec<Vec<f64>> = generators.to_vec();
    let mut u: Vec<Vec<i64>> = (0..m)
        .map(|i| (0..m).map(|j| i64::from(i == j)).collect())
        .collect();
    lll(&mut b, &mut u);
    let (mu, norms) = gram_schmidt(&b);
    if norms.iter().any(|&n| !(n > 0.0)) {
        return None;
    }

    let mut out = Vec::new();
    let mut coeffs = vec![0i64; m];
    let mut nodes = 0usize;
    let r2 = radius * radius;
    if !enumerate(m, &mu, &norms, r2, &mut coeffs, 0.0, &mut out, &mut nodes, max_nodes) {
        return None;
    }
    // back to the generators' coordinates
    Some(
        out.into_iter()
            .map(|c| {
                (0..m)
                    .map(|j| (0..m).map(|k| c[k] * u[k][j]).sum())
                    .collect()
            })
            .collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    level: usize,
    mu: &[Vec<f64>],
    norms: &[f64],
    r2: f64,
    coeffs: &mut Vec<i64>,
    partial: f64,
    out: &mut Vec<Vec<i64>>,
    nodes: &mut usize,
    max_nodes: usize,
) -> bool {
    if level == 0 {
        if coeffs.iter().any(|&c| c != 0) {
            out.push(coeffs.clone());
        }
        return true;
    }
    let k = level - 1;
    let m = coeffs.len();
    let center: f64 = -(k + 1..m).map(|j| mu[j][k] * coeffs[j] as f64).sum::<f64>();
    let slack = ((r2 - partial) / norms[k]).max(0.0).sqrt();
    let lo = (center - slack).ceil() as i64;
    let hi = (center + slack).floor() as i64;
    for c in lo..=hi {
        *nodes += 1;
        if *nodes > max_nodes {
            return false;
        }
        let d = c as f64 - center;
        let next = partial + d * d * norms[k];
        if next > r2 {
            continue;
        }
        coeffs[k] = c;
        if !enumerate(k, mu, norms, r2, coeffs, next, out, nodes, max_nodes) {
            return false;
        }
    }
    coeffs[k] = 0;
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `mu[i][j]` for `j < i` and the squared norms `‖b*_i‖²`.
fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = b.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut mu = vec![vec![0.0; m]; m];
    let mut norms = vec![0.0; m];
    for i in 0..m {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = if norms[j] > 0.0 { dot(&b[i], &star[j]) / norms[j] } else { 0.0 };
            for (x, s) in v.iter_mut().zip(&star[j]) {
                *x -= mu[i][j] * s;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (mu, norms)
}

/// LLL with parameter 0.99, tracking the unimodular transform in `u`.
fn lll(b: &mut [Vec<f64>], u: &mut [Vec<i64>]) {
    let m = b.len();
    let mut k = 1;
    let mut guard = 0;
    while k < m && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(b);
            let r = mu[k][j].round();
            if r != 0.0 {
                let ri = r as i64;
                let (bj, uj) = (b[j].clone(), u[j].clone());
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= r * y;
                }
                for (x, y) in u[k].iter_mut().zip(&uj) {
                    *x -= ri * y;
                }
            }
        }
        let (mu, norms) = gram_schmidt(b);
        if norms[k] >= (0.99 - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}
