use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::sampling::binomial;
use crate::error::{Result, TcaError};
use crate::format::sig6;

const RIDGE: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e12;

/// Least-squares polynomial over `dim` coordinates, each mapped affinely
/// onto `[0, 1]` by the range of the fitted data before the monomials are
/// formed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySurface {
    pub dim: usize,
    pub degree: usize,
    /// Graded order: constant, linear terms, then each higher degree with
    /// the first coordinate's exponent descending.
    pub exponents: Vec<Vec<u32>>,
    /// Coefficients on the normalised coordinates.
    pub coefficients: Vec<f64>,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    pub rmse: f64,
    /// Ratio of extreme eigenvalues of the normal matrix.
    pub condition: f64,
    pub ridge: bool,
}

fn compositions(dim: usize, total: u32) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(dim - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All exponent vectors of total degree `≤ degree`, in graded order.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    (0..=degree as u32).flat_map(|t| compositions(dim, t)).collect()
}

fn powers(u: &[f64], degree: usize) -> Vec<Vec<f64>> {
    u.iter()
        .map(|&v| {
            let mut p = Vec::with_capacity(degree + 1);
            let mut acc = 1.0;
            for _ in 0..=degree {
                p.push(acc);
                acc *= v;
            }
            p
        })
        .collect()
}

fn design_row(exponents: &[Vec<u32>], pw: &[Vec<f64>], row: &mut [f64]) {
    for (slot, e) in row.iter_mut().zip(exponents) {
        *slot = e.iter().zip(pw).map(|(&k, p)| p[k as usize]).product();
    }
}

impl PolySurface {
    pub fn coefficient_count(&self) -> usize {
        self.coefficients.len()
    }

    fn normalise(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((&v, &o), &s)| (v - o) / s)
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let pw = powers(&self.normalise(x), self.degree);
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, &c)| c * e.iter().zip(&pw).map(|(&k, p)| p[k as usize]).product::<f64>())
            .sum()
    }

    /// Gradient with respect to the original (unnormalised) coordinates.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let pw = powers(&self.normalise(x), self.degree);
        out.iter_mut().for_each(|g| *g = 0.0);
        for (e, &c) in self.exponents.iter().zip(&self.coefficients) {
            for i in 0..self.dim {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64 * pw[i][e[i] as usize - 1] / self.scale[i];
                for (j, (&k, p)) in e.iter().zip(&pw).enumerate() {
                    if j != i {
                        term *= p[k as usize];
                    }
                }
                out[i] += term;
            }
        }
    }

    /// Coefficients on the original coordinates, in the order of `exponents`.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let index: HashMap<&[u32], usize> = self
            .exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();
        let mut raw = vec![0.0; self.exponents.len()];
        for (e, &c) in self.exponents.iter().zip(&self.coefficients) {
            // Π_i ((x_i - o_i)/s_i)^{e_i} expanded binomially per coordinate.
            let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; self.dim], c)];
            for i in 0..self.dim {
                let ei = e[i] as usize;
                if ei == 0 {
                    continue;
                }
                let inv = self.scale[i].powi(ei as i32).recip();
                let mut next = Vec::with_capacity(terms.len() * (ei + 1));
                for (mono, coef) in &terms {
                    for k in 0..=ei {
                        let w = binomial(ei, k) as f64 * (-self.offset[i]).powi((ei - k) as i32) * inv;
                        let mut m = mono.clone();
                        m[i] = k as u32;
                        next.push((m, coef * w));
                    }
                }
                terms = next;
            }
            for (mono, coef) in terms {
                raw[index[mono.as_slice()]] += coef;
            }
        }
        raw
    }

    /// `n1^2*n2`-style label of monomial `j`.
    pub fn monomial_label(&self, j: usize) -> String {
        let parts: Vec<String> = self.exponents[j]
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| {
                if k == 1 {
                    format!("n{}", i + 1)
                } else {
                    format!("n{}^{k}", i + 1)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// `monomial,coefficient,raw_coefficient` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["monomial", "coefficient", "raw_coefficient"])?;
        for (j, (c, r)) in self.coefficients.iter().zip(self.raw_coefficients()).enumerate() {
            w.write_record([self.monomial_label(j), sig6(*c), sig6(r)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares fit through the normal equations, solved by Cholesky. A
/// ridge of `1e-8` is added to the diagonal when the normal matrix is
/// singular or its condition number exceeds `1e12`.
pub fn fit_poly_surface(points: &[Vec<f64>], values: &[f64], degree: usize) -> Result<PolySurface> {
    if !(2..=3).contains(&degree) {
        return Err(TcaError::invalid(format!(
            "surface degree must be 2 or 3, got {degree}"
        )));
    }
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(TcaError::invalid(
            "surface points must be nonempty and share one dimension",
        ));
    }
    if points.len() != values.len() {
        return Err(TcaError::invalid(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    if points.iter().flatten().chain(values).any(|v| !v.is_finite()) {
        return Err(TcaError::Domain("surface data contains non-finite values".to_string()));
    }
    let p = binomial(dim + degree, degree);
    let m = points.len();
    if m < 2 * p {
        return Err(TcaError::Insufficient(format!(
            "a degree-{degree} surface in {dim} coordinates has {p} coefficients and needs at least {} points, got {m}",
            2 * p
        )));
    }
    let mut offset = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for x in points {
        for i in 0..dim {
            offset[i] = offset[i].min(x[i]);
            upper[i] = upper[i].max(x[i]);
        }
    }
    let scale: Vec<f64> = offset
        .iter()
        .zip(&upper)
        .map(|(&lo, &hi)| if hi > lo { hi - lo } else { 1.0 })
        .collect();
    let exponents = monomial_exponents(dim, degree);
    debug_assert_eq!(exponents.len(), p);

    let mut a = DMatrix::<f64>::zeros(m, p);
    let mut row = vec![0.0; p];
    for (r, x) in points.iter().enumerate() {
        let u: Vec<f64> = (0..dim).map(|i| (x[i] - offset[i]) / scale[i]).collect();
        design_row(&exponents, &powers(&u, degree), &mut row);
        for (c, &v) in row.iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    let y = DVector::from_column_slice(values);
    let mut normal = a.transpose() * &a;
    let rhs = a.transpose() * &y;
    let eig = normal.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let mut ridge = condition > MAX_CONDITION;
    if ridge {
        normal += DMatrix::identity(p, p) * RIDGE;
    }
    let chol = match normal.clone().cholesky() {
        Some(c) => c,
        None if !ridge => {
            ridge = true;
            (normal + DMatrix::identity(p, p) * RIDGE)
                .cholesky()
                .ok_or_else(|| TcaError::Degenerate("normal equations are not positive definite".to_string()))?
        }
        None => {
            return Err(TcaError::Degenerate(
                "normal equations are not positive definite".to_string(),
            ))
        }
    };
    let coef = chol.solve(&rhs);
    let resid = &a * &coef - &y;
    let rmse = (resid.norm_squared() / m as f64).sqrt();
    Ok(PolySurface {
        dim,
        degree,
        exponents,
        coefficients: coef.iter().copied().collect(),
        offset,
        scale,
        rmse,
        condition,
        ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn monomial_order_and_count() {
        let e = monomial_exponents(2, 2);
        assert_eq!(
            e,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        for (d, k) in [(1, 2), (1, 3), (2, 3), (4, 2), (12, 2)] {
            assert_eq!(monomial_exponents(d, k).len(), binomial(d + k, k));
        }
    }

    #[test]
    fn exact_quadratic_is_recovered() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|v| (v[0] - 1.0).powi(2)).collect();
        let s = fit_poly_surface(&x, &y, 2).unwrap();
        assert!(s.rmse < 1e-10);
        let raw = s.raw_coefficients();
        assert_abs_diff_eq!(raw[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(raw[1], -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(raw[2], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.value(&[3.5]), 6.25, epsilon = 1e-9);
    }

    #[test]
    fn constant_data_gives_constant_surface() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64 / 29.0, (i * 7 % 30) as f64 / 29.0])
            .collect();
        let y = vec![2.5; 30];
        let s = fit_poly_surface(&x, &y, 3).unwrap();
        assert_abs_diff_eq!(s.coefficients[0], 2.5, epsilon = 1e-10);
        assert!(s.coefficients[1..].iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x: Vec<Vec<f64>> = (1..=60)
            .map(|i| {
                vec![
                    crate::stochastic::radical_inverse(i, 2),
                    crate::stochastic::radical_inverse(i, 3),
                ]
            })
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (v[0] * 3.0).sin() + v[1] * v[1] * v[0] - v[1])
            .collect();
        let s = fit_poly_surface(&x, &y, 3).unwrap();
        let p = [0.3, 0.55];
        let mut g = [0.0; 2];
        s.gradient(&p, &mut g);
        for i in 0..2 {
            let mut a = p;
            let mut b = p;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            assert_abs_diff_eq!(g[i], (s.value(&a) - s.value(&b)) / 2e-6, epsilon = 1e-6);
        }
    }

    #[test]
    fn raw_expansion_reproduces_values() {
        let x: Vec<Vec<f64>> = (1..=40)
            .map(|i| {
                vec![
                    2.0 + crate::stochastic::radical_inverse(i, 2),
                    -1.0 + 3.0 * crate::stochastic::radical_inverse(i, 3),
                ]
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|v| v[0].exp() - v[1] * v[0]).collect();
        let s = fit_poly_surface(&x, &y, 3).unwrap();
        let raw = s.raw_coefficients();
        let p = [2.4f64, 0.7];
        let direct: f64 = s
            .exponents
            .iter()
            .zip(&raw)
            .map(|(e, c)| c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32))
            .sum();
        assert_abs_diff_eq!(direct, s.value(&p), epsilon = 1e-9);
    }

    #[test]
    fn underdetermined_and_bad_degree() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        assert!(fit_poly_surface(&x, &[0.0; 5], 2).is_err());
        assert!(fit_poly_surface(&x, &[0.0; 5], 4).is_err());
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        assert!(fit_poly_surface(&x, &[0.0; 6], 2).is_ok());
    }

    #[test]
    fn duplicated_points_use_the_ridge() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 2) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|v| v[0]).collect();
        let s = fit_poly_surface(&x, &y, 2).unwrap();
        assert!(s.ridge);
        assert!(s.rmse < 1e-6);
    }

    #[test]
    fn labels_and_csv() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|v| v[0] + v[1]).collect();
        let s = fit_poly_surface(&x, &y, 2).unwrap();
        assert_eq!(s.monomial_label(0), "1");
        assert_eq!(s.monomial_label(4), "n1*n2");
        assert_eq!(s.monomial_label(5), "n2^2");
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }
}
