//! Fourier coefficients on boundary circles and boundary functions over
//! collections of circles.
//!
//! The lower part of a circle function is its projection onto the span of
//! `1, cos, sin` (modes 0 and 1); everything from mode 2 up is the higher
//! part. Modes above the cutoff are discarded explicitly.

use std::collections::BTreeMap;

use super::MeshError;

/// Scalar function on a circle stored as Fourier coefficients for modes
/// `0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCircle {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierCircle {
    pub fn zero(modes: usize) -> Self {
        FourierCircle { a0: 0.0, cos: vec![0.0; modes], sin: vec![0.0; modes] }
    }

    /// Single cosine mode `amp * cos(m t)`; `m = 0` sets the constant.
    pub fn cosine(modes: usize, m: usize, amp: f64) -> Self {
        let mut f = Self::zero(modes);
        if m == 0 {
            f.a0 = amp;
        } else {
            f.cos[m - 1] = amp;
        }
        f
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.a0;
        for m in 1..=self.modes() {
            v += self.cos[m - 1] * (m as f64 * theta).cos()
                + self.sin[m - 1] * (m as f64 * theta).sin();
        }
        v
    }

    /// Projection onto modes 0 and 1.
    pub fn lower(&self) -> FourierCircle {
        let mut f = FourierCircle::zero(self.modes());
        f.a0 = self.a0;
        if self.modes() >= 1 {
            f.cos[0] = self.cos[0];
            f.sin[0] = self.sin[0];
        }
        f
    }

    /// Projection onto modes 2 and above.
    pub fn higher(&self) -> FourierCircle {
        let mut f = self.clone();
        f.a0 = 0.0;
        if f.modes() >= 1 {
            f.cos[0] = 0.0;
            f.sin[0] = 0.0;
        }
        f
    }

    pub fn scale(&self, s: f64) -> FourierCircle {
        FourierCircle {
            a0: self.a0 * s,
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &FourierCircle) -> FourierCircle {
        assert_eq!(self.modes(), other.modes());
        FourierCircle {
            a0: self.a0 + other.a0,
            cos: self.cos.iter().zip(&other.cos).map(|(a, b)| a + b).collect(),
            sin: self.sin.iter().zip(&other.sin).map(|(a, b)| a + b).collect(),
        }
    }

    /// L2 inner product against `other` on a circle of radius `r`:
    /// `2 pi r (a0 a0' + (1/2) sum (am am' + bm bm'))`.
    pub fn inner(&self, other: &FourierCircle, radius: f64) -> f64 {
        let m = self.modes().min(other.modes());
        let mut s = self.a0 * other.a0;
        for k in 0..m {
            s += 0.5 * (self.cos[k] * other.cos[k] + self.sin[k] * other.sin[k]);
        }
        2.0 * std::f64::consts::PI * radius * s
    }

    pub fn norm_sup_coeff(&self) -> f64 {
        let mut m = self.a0.abs();
        for k in 0..self.modes() {
            m = m.max(self.cos[k].abs()).max(self.sin[k].abs());
        }
        m
    }

    /// Coefficient-wise l2 norm, radius-free.
    pub fn norm_l2_coeff(&self) -> f64 {
        let mut s = self.a0 * self.a0;
        for k in 0..self.modes() {
            s += 0.5 * (self.cos[k] * self.cos[k] + self.sin[k] * self.sin[k]);
        }
        s.sqrt()
    }
}

/// Least-squares Fourier fit of uniformly spaced samples `f(2 pi k / N)`.
///
/// Requires at least `2 modes + 1` samples; recovers band-limited inputs
/// exactly up to quadrature rounding.
pub fn circle_fourier(samples: &[f64], modes: usize) -> Result<FourierCircle, MeshError> {
    let n = samples.len();
    if n < 2 * modes + 1 {
        return Err(MeshError::Parse {
            line: 0,
            message: format!("need at least {} samples for {} modes, got {}", 2 * modes + 1, modes, n),
        });
    }
    let mut f = FourierCircle::zero(modes);
    f.a0 = samples.iter().sum::<f64>() / n as f64;
    for m in 1..=modes {
        let mut ca = 0.0;
        let mut sa = 0.0;
        for (k, &v) in samples.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
            ca += v * t.cos();
            sa += v * t.sin();
        }
        f.cos[m - 1] = 2.0 * ca / n as f64;
        f.sin[m - 1] = 2.0 * sa / n as f64;
    }
    Ok(f)
}

/// Scalar data on a collection of boundary circles, keyed by circle id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryFunction {
    pub circles: BTreeMap<u32, FourierCircle>,
}

impl BoundaryFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(ids: impl IntoIterator<Item = u32>, modes: usize) -> Self {
        BoundaryFunction {
            circles: ids.into_iter().map(|id| (id, FourierCircle::zero(modes))).collect(),
        }
    }

    pub fn get(&self, id: u32) -> Option<&FourierCircle> {
        self.circles.get(&id)
    }

    pub fn set(&mut self, id: u32, f: FourierCircle) {
        self.circles.insert(id, f);
    }

    pub fn map(&self, mut f: impl FnMut(&FourierCircle) -> FourierCircle) -> BoundaryFunction {
        BoundaryFunction {
            circles: self.circles.iter().map(|(id, c)| (*id, f(c))).collect(),
        }
    }

    pub fn add(&self, other: &BoundaryFunction) -> BoundaryFunction {
        let mut out = self.clone();
        for (id, c) in &other.circles {
            match out.circles.get_mut(id) {
                Some(existing) => *existing = existing.add(c),
                None => {
                    out.circles.insert(*id, c.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> BoundaryFunction {
        self.map(|c| c.scale(s))
    }

    pub fn norm_sup_coeff(&self) -> f64 {
        self.circles.values().fold(0.0, |m, c| m.max(c.norm_sup_coeff()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_cosine_mode_recovered() {
        let n = 64;
        let samples: Vec<f64> =
            (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        let f = circle_fourier(&samples, 8).unwrap();
        assert!((f.cos[0] - 1.0).abs() < 1e-12);
        assert!(f.a0.abs() < 1e-12);
        assert!(f.sin[0].abs() < 1e-12);
        for m in 2..=8 {
            assert!(f.cos[m - 1].abs() < 1e-12);
        }
    }

    #[test]
    fn cos3_is_higher_mode() {
        let n = 64;
        let samples: Vec<f64> = (0..n)
            .map(|k| (3.0 * 2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let f = circle_fourier(&samples, 8).unwrap();
        let lower = f.lower();
        assert!(lower.norm_sup_coeff() < 1e-12);
        assert!((f.higher().cos[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_known_coefficients() {
        // Acceptance-level example: synthesize from known coefficients at
        // M = 16 with 129 samples, reconstruct to 1e-10.
        let modes = 16;
        let mut truth = FourierCircle::zero(modes);
        truth.a0 = 0.3;
        for m in 1..=modes {
            truth.cos[m - 1] = 0.1 / m as f64;
            truth.sin[m - 1] = -0.05 / (m * m) as f64;
        }
        let n = 129;
        let samples: Vec<f64> = (0..n)
            .map(|k| truth.eval(2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let fit = circle_fourier(&samples, modes).unwrap();
        let mut err: f64 = (fit.a0 - truth.a0).abs();
        for m in 0..modes {
            err = err.max((fit.cos[m] - truth.cos[m]).abs());
            err = err.max((fit.sin[m] - truth.sin[m]).abs());
        }
        assert!(err < 1e-10, "round-trip error {err}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let samples = vec![0.0; 16];
        assert!(circle_fourier(&samples, 8).is_err());
    }

    #[test]
    fn split_is_projection() {
        let mut f = FourierCircle::zero(4);
        f.a0 = 1.0;
        f.cos = vec![0.5, 0.25, 0.0, -1.0];
        f.sin = vec![-0.5, 0.0, 2.0, 0.0];
        let lower = f.lower();
        assert_eq!(lower.lower(), lower);
        let sum = lower.add(&f.higher());
        assert_eq!(sum, f);
    }
}
