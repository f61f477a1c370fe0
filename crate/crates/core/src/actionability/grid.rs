use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::svm::{classify_one, train_svm, SvmHyperparams};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, metrics};
use crate::seed;

pub const DEFAULT_C_GRID: [f64; 6] = [0.5, 1.0, 5.0, 10.0, 20.0, 50.0];
pub const DEFAULT_GAMMA_GRID: [f64; 5] = [0.1, 0.5, 1.0, 3.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub mean_f1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    /// Row-major over `C` then `gamma`, in grid order.
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

impl GridResult {
    /// Heatmap data as `C,gamma,mean_f1`.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("C,gamma,mean_f1\n");
        for cell in &self.cells {
            out.push_str(&format!("{},{},{:.6}\n", cell.c, cell.gamma, cell.mean_f1));
        }
        out
    }
}

/// Assign each index to one of `k` folds so both classes are spread evenly.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("folds must be at least 2, got {k}")));
    }
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] <= 0.0).collect();
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < k {
            return Err(Error::Insufficient(format!(
                "only {} {name} examples for {k} folds; use fewer folds",
                class.len()
            )));
        }
    }
    let mut rng = seed::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; y.len()];
    for (j, &i) in pos.iter().enumerate() {
        fold[i] = j % k;
    }
    // Continue the rotation so fold sizes stay within one of each other.
    for (j, &i) in neg.iter().enumerate() {
        fold[i] = (pos.len() + j) % k;
    }
    Ok(fold)
}

fn cv_f1(x: &[Vec<f64>], y: &[f64], fold: &[usize], k: usize, hp: &SvmHyperparams, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for f in 0..k {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..x.len() {
            if fold[i] == f {
                vx.push(&x[i]);
                vy.push(if y[i] > 0.0 { 1i8 } else { -1 });
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        let model = train_svm(&tx, &ty, hp, seed::derive_seed(seed, &format!("fold/{f}")))?;
        let preds = vx
            .iter()
            .map(|v| classify_one(&model, v).map(|(l, _)| l))
            .collect::<Result<Vec<_>>>()?;
        total += metrics(&confusion(&preds, &vy)?).f1;
    }
    Ok(total / k as f64)
}

/// Mean cross-validated F1 for every `(C, gamma)` pair. Ties go to the
/// smaller gamma, then the smaller C.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[f64],
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::Config("parameter grids must be non-empty".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let fold = stratified_folds(y, folds, seed::derive_seed(seed, "folds"))?;
    let pairs: Vec<(f64, f64)> = c_grid
        .iter()
        .flat_map(|&c| gamma_grid.iter().map(move |&g| (c, g)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(c, gamma)| {
            let hp = SvmHyperparams {
                c,
                gamma,
                ..SvmHyperparams::default()
            };
            hp.validate()?;
            Ok(GridCell {
                c,
                gamma,
                mean_f1: cv_f1(x, y, &fold, folds, &hp, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = *cells
        .iter()
        .min_by(|a, b| {
            b.mean_f1
                .total_cmp(&a.mean_f1)
                .then(a.gamma.total_cmp(&b.gamma))
                .then(a.c.total_cmp(&b.c))
        })
        .expect("non-empty grid");
    Ok(GridResult { cells, best })
}
