use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{det_phase, op_dist, unitarity_residual, CMatrix};
use crate::error::{Error, Result};

/// Unit-modulus samples of a closed loop at `k_j = −π + 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLoop {
    samples: Vec<Complex64>,
}

impl PhaseLoop {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() || samples.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "phase loop needs an even positive length, got {}",
                samples.len()
            )));
        }
        if let Some((j, z)) = samples
            .iter()
            .enumerate()
            .find(|(_, z)| (z.norm() - 1.0).abs() > 1e-10)
        {
            return Err(Error::InvalidInput(format!(
                "sample {j} has modulus {} instead of 1",
                z.norm()
            )));
        }
        Ok(Self { samples })
    }

    /// Normalizes each sample to unit modulus first. Zero samples are rejected.
    pub fn from_unnormalized(samples: Vec<Complex64>) -> Result<Self> {
        let normalized = samples
            .into_iter()
            .enumerate()
            .map(|(j, z)| {
                if z.norm() < 1e-300 {
                    Err(Error::InvalidInput(format!("sample {j} vanishes")))
                } else {
                    Ok(z / z.norm())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(normalized)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::from_unnormalized((0..n).map(|j| f(grid_point(j, n))).collect())
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Principal-branch increments, including the closing one from the last sample back to the first.
    pub fn increments(&self) -> Vec<f64> {
        let n = self.samples.len();
        (0..n)
            .map(|j| (self.samples[(j + 1) % n] * self.samples[j].conj()).arg())
            .collect()
    }

    /// Largest absolute increment; `≤ π/2` means the loop is resolved.
    pub fn max_increment(&self) -> f64 {
        self.increments()
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn pointwise_product(&self, other: &PhaseLoop) -> Result<PhaseLoop> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(
                "phase loops have different lengths".into(),
            ));
        }
        PhaseLoop::from_unnormalized(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Grid node `−π + 2πj/N`.
#[inline]
pub fn grid_point(j: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / n as f64
}

/// Degree of a closed phase loop, normalized so that `k ↦ e^{ik}` has winding 1.
pub fn winding(phase_loop: &PhaseLoop) -> Result<i64> {
    let increments = phase_loop.increments();
    if let Some((index, &increment)) = increments
        .iter()
        .enumerate()
        .find(|(_, d)| d.abs() > FRAC_PI_2)
    {
        return Err(Error::RefinementNeeded { index, increment });
    }
    let total: f64 = increments.iter().sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Continuous lift of the argument along an open path, starting at `start`.
///
/// The increments are principal-branch, so the caller is responsible for
/// resolution; use [`PhaseLoop::max_increment`] to audit it.
pub fn unwrap_phases(samples: &[Complex64], start: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut current = start;
    if let Some(first) = samples.first() {
        // shift so the lift agrees with the first sample modulo 2π
        let offset = (first * Complex64::from_polar(1.0, -start)).arg();
        current += offset;
        out.push(current);
    }
    for w in samples.windows(2) {
        current += (w[1] * w[0].conj()).arg();
        out.push(current);
    }
    out
}

/// Loop of `m×m` unitaries sampled on the same grid as [`PhaseLoop`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryLoop {
    samples: Vec<CMatrix>,
}

impl UnitaryLoop {
    pub fn new(samples: Vec<CMatrix>) -> Result<Self> {
        let looped = Self::new_unchecked(samples)?;
        let worst = looped.max_unitarity_residual();
        if worst > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "unitary loop sample off the group (residual {worst:e})"
            )));
        }
        Ok(looped)
    }

    /// Checks shapes only; for loops whose unitarity is certified elsewhere.
    pub fn new_unchecked(samples: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidInput("empty unitary loop".into()));
        };
        if samples.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "unitary loop length {} is odd",
                samples.len()
            )));
        }
        let shape = first.shape();
        if shape.0 != shape.1 || samples.iter().any(|m| m.shape() != shape) {
            return Err(Error::InvalidInput(
                "unitary loop samples must be square and equally sized".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn constant(m: CMatrix, n: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> CMatrix) -> Result<Self> {
        Self::new((0..n).map(|j| f(grid_point(j, n))).collect())
    }

    pub fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CMatrix> {
        self.samples
    }

    pub fn det_loop(&self) -> Result<PhaseLoop> {
        PhaseLoop::new(self.samples.iter().map(det_phase).collect())
    }

    pub fn det_winding(&self) -> Result<i64> {
        winding(&self.det_loop()?)
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(unitarity_residual)
            .fold(0.0, f64::max)
    }

    /// Largest operator-norm jump between neighbours, closing the loop.
    pub fn max_step(&self) -> f64 {
        let n = self.samples.len();
        (0..n)
            .map(|j| op_dist(&self.samples[(j + 1) % n], &self.samples[j]))
            .fold(0.0, f64::max)
    }

    pub fn pointwise(
        &self,
        other: &UnitaryLoop,
        f: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
    ) -> Result<UnitaryLoop> {
        if self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::InvalidInput(
                "unitary loops differ in length or dimension".into(),
            ));
        }
        UnitaryLoop::new_unchecked(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    /// Sample-wise `max ‖A_j − B_j‖`.
    pub fn distance(&self, other: &UnitaryLoop) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| op_dist(a, b))
            .fold(0.0, f64::max)
    }
}
