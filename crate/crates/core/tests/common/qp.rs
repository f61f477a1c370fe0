//! Brute-force reference solver for tiny SVM duals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crisis_triage::actionability::rbf_kernel;

/// Exact dual optimum by enumerating which multipliers sit at 0, at C, or
/// strictly between, and solving the KKT system of each face.
pub struct Oracle {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> Oracle {
    let n = x.len();
    let k: Vec<f64> = (0..n * n)
        .map(|ij| (-gamma * x[ij / n].iter().zip(&x[ij % n]).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp())
        .collect();
    let objective = |a: &[f64]| {
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += a[i] * a[j] * y[i] * y[j] * k[i * n + j];
            }
        }
        a.iter().sum::<f64>() - 0.5 * q
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // Unknowns: alpha_F and b.
            let m = free.len();
            let mut lhs = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = y[i] * y[j] * k[i * n + j];
                }
                lhs[(r, m)] = y[i];
                let fixed: f64 = (0..n)
                    .filter(|j| state[*j] == 1)
                    .map(|j| y[i] * y[j] * k[i * n + j] * c)
                    .sum();
                rhs[r] = 1.0 - fixed;
                lhs[(m, r)] = y[i];
            }
            rhs[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| c * y[j]).sum::<f64>();
            let Some(sol) = lhs.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let feasible = a.iter().all(|&v| (-1e-12..=c + 1e-12).contains(&v))
            && a.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if !feasible {
            continue;
        }
        let obj = objective(&a);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, a));
        }
    }
    let (objective, alphas) = best.expect("alpha = 0 is always feasible");
    // Bias from free multipliers, else the middle of the feasible interval.
    let g = |i: usize| (0..n).map(|j| alphas[j] * y[j] * k[j * n + i]).sum::<f64>();
    let free: Vec<usize> = (0..n).filter(|&i| alphas[i] > 1e-9 && alphas[i] < c - 1e-9).collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - g(i)).sum::<f64>() / free.len() as f64
    } else {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let v = y[i] - g(i);
            let at_c = alphas[i] >= c - 1e-9;
            if (y[i] > 0.0) != at_c {
                lo = lo.max(v);
            } else {
                hi = hi.min(v);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo + hi) / 2.0,
            (true, false) => lo,
            (false, true) => hi,
            _ => 0.0,
        }
    };
    Oracle {
        alphas,
        bias,
        objective,
    }
}

pub fn oracle_decision(o: &Oracle, x: &[Vec<f64>], y: &[f64], gamma: f64, point: &[f64]) -> f64 {
    (0..x.len())
        .map(|j| o.alphas[j] * y[j] * rbf_kernel(&x[j], point, gamma).unwrap())
        .sum::<f64>()
        + o.bias
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let n = rng.gen_range(2..=6);
        let d = rng.gen_range(2..=3);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if y.contains(&1.0) && y.contains(&-1.0) {
            return (x, y);
        }
    }
}

pub fn xor_data() -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corners = [([0.0, 0.0], -1.0), ([1.0, 1.0], -1.0), ([0.0, 1.0], 1.0), ([1.0, 0.0], 1.0)];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (p, label) in corners {
        for _ in 0..5 {
            x.push(vec![p[0] + rng.gen_range(-0.05..0.05), p[1] + rng.gen_range(-0.05..0.05)]);
            y.push(label);
        }
    }
    (x, y)
}

