//! Shared test support: an LP oracle independent of the simplex kernel
//! (vertex enumeration over constraint intersections) and seeded random
//! LP/instance generators.

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};

use rabsplan_core::lp::LpProblem;

pub fn rng(seed: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

pub fn pick(rng: &mut impl Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Solve the n x n augmented system in place by Gaussian elimination with
/// partial pivoting; `aug` is row-major with width n + 1, the solution lands
/// in `x`. False if singular.
fn solve_square_inplace(aug: &mut [f64], n: usize, x: &mut [f64]) -> bool {
    let w = n + 1;
    for col in 0..n {
        let mut piv = col;
        for row in (col + 1)..n {
            if aug[row * w + col].abs() > aug[piv * w + col].abs() {
                piv = row;
            }
        }
        if aug[piv * w + col].abs() < 1e-10 {
            return false;
        }
        if piv != col {
            for k in 0..w {
                aug.swap(col * w + k, piv * w + k);
            }
        }
        let pivot = aug[col * w + col];
        for row in 0..n {
            if row != col {
                let f = aug[row * w + col] / pivot;
                if f != 0.0 {
                    for k in col..w {
                        aug[row * w + k] -= f * aug[col * w + k];
                    }
                }
            }
        }
    }
    for i in 0..n {
        x[i] = aug[i * w + n] / aug[i * w + i];
    }
    true
}

/// Brute-force LP maximum by enumerating every vertex candidate: each choice
/// of n hyperplanes among the constraint rows and the nonnegativity planes.
/// Returns the best feasible objective, or None if no vertex is feasible.
pub fn vertex_enumeration_max(problem: &LpProblem) -> Option<f64> {
    let n = problem.variable_count();
    let m = problem.constraints.len();
    // plane i < m: constraint row as equality; plane m + j: x_j = 0
    let total = m + n;
    let mut combo: Vec<usize> = (0..n).collect();
    let mut best: Option<f64> = None;
    let mut aug = vec![0.0; n * (n + 1)];
    let mut x = vec![0.0; n];

    let feasible = |x: &[f64]| {
        x.iter().all(|&v| v >= -1e-7)
            && problem.constraints.iter().all(|c| {
                let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
                lhs <= c.rhs + 1e-7 * c.rhs.abs().max(1.0)
            })
    };

    loop {
        let w = n + 1;
        for (row, &p) in combo.iter().enumerate() {
            if p < m {
                aug[row * w..row * w + n].copy_from_slice(&problem.constraints[p].coeffs);
                aug[row * w + n] = problem.constraints[p].rhs;
            } else {
                aug[row * w..row * w + w].fill(0.0);
                aug[row * w + (p - m)] = 1.0;
            }
        }
        if solve_square_inplace(&mut aug, n, &mut x) && feasible(&x) {
            let value: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(value, |b: f64| b.max(value)));
        }

        // next n-combination of 0..total in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] != i + total - n {
                combo[i] += 1;
                for k in (i + 1)..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Random bounded-feasible LP with a known interior point: box rows bound
/// every variable, extra rows are satisfied strictly at a random x0. Rows
/// flipped to `>=` form (negated, often a negative rhs) exercise the
/// solver's feasibility phase.
pub fn random_bounded_lp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> LpProblem {
    let n = 1 + pick(rng, max_vars);
    let extra = 1 + pick(rng, (max_rows - n).max(1));
    let x0: Vec<f64> = (0..n).map(|_| uniform(rng, 0.1, 1.0)).collect();

    let mut problem = LpProblem::new((0..n).map(|_| uniform(rng, -1.0, 1.0)).collect());
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = 1.0;
        problem.add_constraint(row, uniform(rng, 1.5, 5.0));
    }
    for _ in 0..extra {
        let mut coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.next_u64().is_multiple_of(4) { 0.0 } else { uniform(rng, -1.0, 1.0) })
            .collect();
        let at_x0: f64 = coeffs.iter().zip(&x0).map(|(a, v)| a * v).sum();
        let mut rhs = at_x0 + uniform(rng, 0.1, 1.0);
        if rng.next_u64().is_multiple_of(3) {
            for c in &mut coeffs {
                *c = -*c;
            }
            rhs = -(at_x0 - uniform(rng, 0.1, 1.0));
        }
        problem.add_constraint(coeffs, rhs);
    }
    problem
}
