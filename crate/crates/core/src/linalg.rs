//! Small dense helpers shared by the models and the quantizer designers.

use num_complex::Complex64;

use crate::error::{DoqError, Result};

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Arithmetic mean of a nonempty list of equal-length vectors, summed in
/// iteration order.
pub fn centroid<'a, I>(points: I, dim: usize) -> Option<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
        count += 1;
    }
    if count == 0 {
        return None;
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    Some(acc)
}

/// Natural log-determinant of a Hermitian positive-definite matrix stored
/// row-major, via a Cholesky factorization `A = L L^H`.
pub fn hermitian_logdet(a: &[Complex64], n: usize) -> Result<f64> {
    if a.len() != n * n {
        return Err(DoqError::domain(format!(
            "expected {}x{} matrix, got {} entries",
            n,
            n,
            a.len()
        )));
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let mut logdet = 0.0;
    for j in 0..n {
        let mut diag = a[j * n + j].re;
        for k in 0..j {
            diag -= l[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(DoqError::domain("matrix is not positive definite"));
        }
        let ljj = diag.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        logdet += 2.0 * ljj.ln();
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(logdet)
}
