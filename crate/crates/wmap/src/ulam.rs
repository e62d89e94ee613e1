//! Independent discretization oracle: the operator restricted to uniform
//! bins, as a column-stochastic matrix.
//!
//! Entry (i, j) is `L(B_j intersect W^{-1} B_i) / L(B_j)` for uniform bins
//! `B_k = [k/n, (k+1)/n)`, computed analytically by intersecting each
//! affine branch image with the bins. No sampling anywhere, so the matrix
//! is deterministic and exact up to rounding. Each column holds at most a
//! few nonzeros (one short run per branch), so columns are stored sparse;
//! a dense n x n store at the default n = 4096 would be 134 MB of zeros.

use crate::error::{Error, Result};
use crate::map::MapParams;
use crate::markov::MarkovInstance;
use crate::scalar::{lit, Real};
use crate::step::StepFunction;
use crate::transfer::{invariant_density, second_eigenvalue};

/// Convergence threshold on the L1 change of successive normalized
/// iterates.
pub const ITERATION_TOL: f64 = 1e-12;
/// Iteration cap; hitting it flags `converged = false` on the result.
pub const ITERATION_CAP: usize = 1_000_000;

/// Column-stochastic discretization of the operator on n uniform bins.
#[derive(Debug, Clone)]
pub struct UlamModel<F> {
    n: usize,
    /// `cols[j]` lists the nonzero `(row, value)` entries of column j.
    cols: Vec<Vec<(u32, F)>>,
    map: MapParams<F>,
}

/// One eigenpair from the discretized operator.
#[derive(Debug, Clone)]
pub struct UlamEigenvalue<F> {
    pub lambda: F,
    pub vector: Vec<F>,
    pub residual: F,
    pub converged: bool,
}

/// Top-of-spectrum report; `all_converged` is false when the iteration
/// cap was hit for some pair (partial results are still returned).
#[derive(Debug, Clone)]
pub struct UlamSpectrum<F> {
    pub pairs: Vec<UlamEigenvalue<F>>,
    pub all_converged: bool,
}

impl<F: Real> UlamModel<F> {
    /// Assembles the matrix by intersecting branch images with bins.
    pub fn build(map: MapParams<F>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DomainError {
                what: "n",
                value: n as f64,
                lo: 2.0,
                hi: f64::INFINITY,
            });
        }
        let nf = F::from_usize(n).unwrap();
        let mut cols: Vec<Vec<(u32, F)>> = vec![Vec::new(); n];
        for (j, col) in cols.iter_mut().enumerate() {
            let b_lo = F::from_usize(j).unwrap() / nf;
            let b_hi = F::from_usize(j + 1).unwrap() / nf;
            for b in map.branches() {
                let lo = b_lo.max(b.domain_lo);
                let hi = b_hi.min(b.domain_hi);
                if hi <= lo {
                    continue;
                }
                let (y0, y1) = {
                    let p = b.value(lo);
                    let q = b.value(hi);
                    if p <= q {
                        (p, q)
                    } else {
                        (q, p)
                    }
                };
                let i0 = (y0 * nf).floor().to_usize().unwrap_or(0).min(n - 1);
                let i1 = (y1 * nf).ceil().to_usize().unwrap_or(n).min(n);
                for i in i0..i1.max(i0 + 1) {
                    let seg_lo = y0.max(F::from_usize(i).unwrap() / nf);
                    let seg_hi = y1.min(F::from_usize(i + 1).unwrap() / nf);
                    if seg_hi > seg_lo {
                        let mass = (seg_hi - seg_lo) / b.slope.abs() * nf;
                        match col.iter_mut().find(|(r, _)| *r as usize == i) {
                            Some((_, v)) => *v = *v + mass,
                            None => col.push((i as u32, mass)),
                        }
                    }
                }
            }
        }
        Ok(UlamModel { n, cols, map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &MapParams<F> {
        &self.map
    }

    pub fn entry(&self, row: usize, col: usize) -> F {
        self.cols[col]
            .iter()
            .find(|(r, _)| *r as usize == row)
            .map(|(_, v)| *v)
            .unwrap_or_else(F::zero)
    }

    pub fn column_sums(&self) -> Vec<F> {
        self.cols
            .iter()
            .map(|col| col.iter().fold(F::zero(), |acc, (_, v)| acc + *v))
            .collect()
    }

    /// Matrix-vector product, accumulating column contributions.
    pub fn apply(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![F::zero(); self.n];
        for (j, col) in self.cols.iter().enumerate() {
            let x = v[j];
            if x == F::zero() {
                continue;
            }
            for &(i, a) in col {
                out[i as usize] = out[i as usize] + a * x;
            }
        }
        out
    }

    /// Stationary probability vector by plain power iteration from the
    /// uniform start (the leading eigenvalue of a column-stochastic matrix
    /// is 1).
    pub fn stationary_vector(&self) -> (Vec<F>, bool) {
        let nf = F::from_usize(self.n).unwrap();
        let mut v = vec![F::one() / nf; self.n];
        let tol = lit::<F>(ITERATION_TOL);
        for _ in 0..ITERATION_CAP {
            let nv = self.apply(&v);
            let mut change = F::zero();
            for (x, y) in nv.iter().zip(&v) {
                change = change + (*x - *y).abs();
            }
            v = nv;
            if change <= tol {
                return (v, true);
            }
        }
        (v, false)
    }

    /// Stationary density as a step function (bin value = probability / width).
    pub fn stationary_density(&self) -> (StepFunction<F>, bool) {
        let (pi, converged) = self.stationary_vector();
        let nf = F::from_usize(self.n).unwrap();
        let mut bp = Vec::with_capacity(self.n + 1);
        for k in 0..=self.n {
            bp.push(F::from_usize(k).unwrap() / nf);
        }
        let vals: Vec<F> = pi.iter().map(|&p| p * nf).collect();
        (
            StepFunction::new(bp, vals).expect("uniform grid is valid"),
            converged,
        )
    }

    /// Leading k (1..=3) eigenvalues by modulus: lambda_1 = 1 via plain
    /// iteration, then deflation with the known left vector (the bin
    /// widths, i.e. the all-ones row) for lambda_2, then rank-one Wielandt
    /// deflation of the found pair for lambda_3. The third pair comes from
    /// the deflated matrix and carries no accuracy contract.
    pub fn leading_spectrum(&self, k: usize) -> Result<UlamSpectrum<F>> {
        if !(1..=3).contains(&k) {
            return Err(Error::DomainError {
                what: "k",
                value: k as f64,
                lo: 1.0,
                hi: 3.0,
            });
        }
        let mut pairs = Vec::with_capacity(k);
        let (v1, c1) = self.stationary_vector();
        let r1 = {
            let av = self.apply(&v1);
            let mut worst = F::zero();
            let mut scale = F::zero();
            for (x, y) in av.iter().zip(&v1) {
                worst = worst.max((*x - *y).abs());
                scale = scale.max(y.abs());
            }
            worst / scale
        };
        pairs.push(UlamEigenvalue {
            lambda: F::one(),
            vector: v1.clone(),
            residual: r1,
            converged: c1,
        });

        let mut all_converged = c1;
        if k >= 2 {
            let sum_v1 = v1.iter().fold(F::zero(), |a, b| a + *b);
            // deflation of lambda_1 = 1: subtract the ones-component
            let deflate1 = move |v: &mut Vec<F>, v1: &[F], sum_v1: F| {
                let s = v.iter().fold(F::zero(), |a, b| a + *b) / sum_v1;
                for (x, y) in v.iter_mut().zip(v1) {
                    *x = *x - s * *y;
                }
            };
            let (p2, c2) = self.deflated_power(
                |m, v| {
                    let mut av = m.apply(v);
                    deflate1(&mut av, &v1, sum_v1);
                    av
                },
                1,
            );
            all_converged = all_converged && c2;
            let lam2 = p2.lambda;
            let v2 = p2.vector.clone();
            pairs.push(p2);

            if k >= 3 {
                let v2n2 = v2.iter().fold(F::zero(), |a, b| a + *b * *b);
                let (p3, c3) = self.deflated_power(
                    |m, v| {
                        let mut av = m.apply(v);
                        deflate1(&mut av, &v1, sum_v1);
                        // Wielandt: remove the found second pair
                        let s = v2
                            .iter()
                            .zip(v.iter())
                            .fold(F::zero(), |a, (x, y)| a + *x * *y)
                            / v2n2;
                        for (x, y) in av.iter_mut().zip(&v2) {
                            *x = *x - lam2 * s * *y;
                        }
                        av
                    },
                    2,
                );
                all_converged = all_converged && c3;
                pairs.push(p3);
            }
        }
        Ok(UlamSpectrum {
            pairs,
            all_converged,
        })
    }

    /// Power iteration under a caller-supplied deflated multiply.
    fn deflated_power(
        &self,
        mul: impl Fn(&Self, &[F]) -> Vec<F>,
        stage: usize,
    ) -> (UlamEigenvalue<F>, bool) {
        let tol = lit::<F>(ITERATION_TOL);
        // deterministic start vector with broad spectral content
        let mut v: Vec<F> = (0..self.n)
            .map(|i| lit::<F>(((i * 2654435761 + stage * 97) % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        let n1 = v.iter().fold(F::zero(), |a, b| a + b.abs());
        v.iter_mut().for_each(|x| *x = *x / n1);

        let mut lambda = F::zero();
        let mut converged = false;
        for _ in 0..ITERATION_CAP {
            let av = mul(self, &v);
            let vv = v.iter().fold(F::zero(), |a, b| a + *b * *b);
            let rayleigh = av
                .iter()
                .zip(&v)
                .fold(F::zero(), |a, (x, y)| a + *x * *y)
                / vv;
            let n = av.iter().fold(F::zero(), |a, b| a + b.abs());
            if n < lit(1e-300) {
                // deflated space collapsed: eigenvalue 0 with the current
                // direction
                lambda = F::zero();
                converged = true;
                break;
            }
            let sign = if rayleigh < F::zero() {
                -F::one()
            } else {
                F::one()
            };
            let mut change = F::zero();
            let mut next = av;
            for (x, y) in next.iter_mut().zip(&v) {
                *x = *x / n * sign;
                change = change + (*x - *y).abs();
            }
            v = next;
            if change <= tol && (rayleigh - lambda).abs() <= tol {
                lambda = rayleigh;
                converged = true;
                break;
            }
            lambda = rayleigh;
        }
        let av = mul(self, &v);
        let mut worst = F::zero();
        let mut scale = F::zero();
        for (x, y) in av.iter().zip(&v) {
            worst = worst.max((*x - lambda * *y).abs());
            scale = scale.max(y.abs());
        }
        (
            UlamEigenvalue {
                lambda,
                vector: v,
                residual: if scale > F::zero() { worst / scale } else { worst },
                converged,
            },
            converged,
        )
    }
}

/// Oracle comparison of the discretization against the closed forms, at
/// bin count n and at n/2 (refinement should improve both quantities).
#[derive(Debug, Clone)]
pub struct CrossValidation<F> {
    pub n: usize,
    pub lambda_closed: F,
    pub lambda_ulam: F,
    pub err_lambda: F,
    pub err_density_l1: F,
    pub coarse_n: usize,
    pub coarse_err_lambda: F,
    pub coarse_err_density_l1: F,
}

/// Runs the discretization at n and n/2 against the closed-form second
/// eigenvalue and the normalized fixed density.
pub fn cross_validate<F: Real>(instance: &MarkovInstance<F>, n: usize) -> Result<CrossValidation<F>> {
    let lambda_closed = second_eigenvalue(instance)?.lambda;
    let density = invariant_density(instance);
    let run = |bins: usize| -> Result<(F, F, F)> {
        let model = UlamModel::build(instance.map().clone(), bins)?;
        let lam = model.leading_spectrum(2)?.pairs[1].lambda;
        let (rho, _) = model.stationary_density();
        Ok((lam, (lam - lambda_closed).abs(), rho.l1_distance(&density)))
    };
    let (lambda_ulam, err_lambda, err_density_l1) = run(n)?;
    let coarse_n = (n / 2).max(2);
    let (_, coarse_err_lambda, coarse_err_density_l1) = run(coarse_n)?;
    Ok(CrossValidation {
        n,
        lambda_closed,
        lambda_ulam,
        err_lambda,
        err_density_l1,
        coarse_n,
        coarse_err_lambda,
        coarse_err_density_l1,
    })
}
