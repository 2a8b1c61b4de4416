use crate::domain::Mesh;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Separable load `g(t) = φ(t)·profile`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separable<T: Real = f64> {
    pub phi: Vec<T>,
    pub profile: Vec<T>,
}

/// Time-dependent boundary displacement sampled at `t_0 = 0 < … < t_N = 1`.
///
/// Between samples the nodal values are interpolated linearly, so the rate
/// `ġ` is piecewise constant: on `[t_k, t_{k+1})` it is the forward
/// difference of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace<T: Real = f64> {
    times: Vec<T>,
    values: Vec<Vec<T>>,
    rates: Vec<Vec<T>>,
    separable: Option<Separable<T>>,
}

impl<T: Real> LoadTrace<T> {
    pub fn from_samples(times: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Precondition("need at least two load samples, one per time".into()));
        }
        if times[0] != T::zero() || *times.last().expect("non-empty") != T::one() {
            return Err(Error::Precondition("load samples must start at t = 0 and end at t = 1".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("load sample times must increase strictly".into()));
        }
        let n = values[0].len();
        if values.iter().any(|v| v.len() != n) {
            return Err(Error::Precondition("every load sample needs the same node count".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("load values must be finite".into()));
        }
        let mut rates: Vec<Vec<T>> = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| {
                let dt = t[1] - t[0];
                v[0].iter().zip(&v[1]).map(|(&a, &b)| (b - a) / dt).collect()
            })
            .collect();
        rates.push(rates.last().expect("at least one interval").clone());
        Ok(Self { times, values, rates, separable: None })
    }

    /// `g(t) = φ(t)·profile` with `φ` sampled at `times`.
    pub fn separable(times: Vec<T>, phi: Vec<T>, profile: Vec<T>) -> Result<Self> {
        if phi.len() != times.len() {
            return Err(Error::Precondition("one φ value per sample time".into()));
        }
        let values = phi.iter().map(|&p| profile.iter().map(|&h| p * h).collect()).collect();
        let mut trace = Self::from_samples(times, values)?;
        trace.separable = Some(Separable { phi, profile });
        Ok(trace)
    }

    /// `g(t) = t·profile`.
    pub fn ramp(profile: Vec<T>) -> Self {
        Self::separable(vec![T::zero(), T::one()], vec![T::zero(), T::one()], profile)
            .expect("ramp samples are valid")
    }

    pub fn zero(node_count: usize) -> Self {
        Self::ramp(vec![T::zero(); node_count])
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }
    pub fn samples(&self) -> &[Vec<T>] {
        &self.values
    }
    /// `ġ` at each sample time (forward difference, backward at `t = 1`).
    pub fn sample_rates(&self) -> &[Vec<T>] {
        &self.rates
    }
    pub fn separable_form(&self) -> Option<&Separable<T>> {
        self.separable.as_ref()
    }
    pub fn node_count(&self) -> usize {
        self.values[0].len()
    }

    /// Index `k` of the sample interval `[t_k, t_{k+1})` holding `t`.
    fn interval(&self, t: T) -> usize {
        let last = self.times.len() - 2;
        match self.times.iter().rposition(|&s| s <= t) {
            Some(k) => k.min(last),
            None => 0,
        }
    }

    pub fn at(&self, t: T) -> Vec<T> {
        let t = t.max(T::zero()).min(T::one());
        let k = self.interval(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        if t == t1 {
            return self.values[k + 1].clone();
        }
        let w = (t - t0) / (t1 - t0);
        if let Some(s) = &self.separable {
            let phi = s.phi[k] + w * (s.phi[k + 1] - s.phi[k]);
            return s.profile.iter().map(|&h| phi * h).collect();
        }
        self.values[k].iter().zip(&self.values[k + 1]).map(|(&a, &b)| a + w * (b - a)).collect()
    }

    /// `φ(t)` for separable loads.
    pub fn phi_at(&self, t: T) -> Option<T> {
        let s = self.separable.as_ref()?;
        let k = self.interval(t);
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        Some(s.phi[k] + w * (s.phi[k + 1] - s.phi[k]))
    }

    /// `ġ` on the interval right of `t`.
    pub fn rate_at(&self, t: T) -> &[T] {
        &self.rates[self.interval(t)]
    }

    /// Sample times strictly inside `(a, b)`: the kinks of `t ↦ g(t)`.
    pub fn knots_between(&self, a: T, b: T) -> Vec<T> {
        self.times.iter().copied().filter(|&s| s > a && s < b).collect()
    }

    /// `∫_a^b ‖∇ġ(t)‖ dt`, exact for the piecewise-constant rate.
    pub fn rate_norm_integral(&self, mesh: &Mesh<T>, a: T, b: T) -> T {
        let mut total = T::zero();
        for k in 0..self.times.len() - 1 {
            let lo = self.times[k].max(a);
            let hi = self.times[k + 1].min(b);
            if hi > lo {
                total += mesh.dirichlet_energy(&self.rates[k]).sqrt() * (hi - lo);
            }
        }
        total
    }

    /// `max_t ‖∇g(t)‖`; attained at a sample because `g` is piecewise linear.
    pub fn max_gradient_norm(&self, mesh: &Mesh<T>) -> T {
        self.values.iter().map(|v| mesh.dirichlet_energy(v).sqrt()).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_rect_mesh;

    #[test]
    fn sample_validation() {
        assert!(LoadTrace::from_samples(vec![0.0, 0.5], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(LoadTrace::from_samples(vec![0.0, 0.5, 0.5, 1.0], vec![vec![0.0]; 4]).is_err());
        assert!(LoadTrace::from_samples(vec![0.0, 1.0], vec![vec![0.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn separable_is_exact_at_samples() {
        let h: Vec<f64> = vec![1.0, -2.0, 0.5];
        let trace = LoadTrace::separable(vec![0.0, 0.3, 1.0], vec![0.0, 0.7, 0.9], h.clone()).unwrap();
        for (k, &t) in trace.times().iter().enumerate() {
            let phi = trace.separable_form().unwrap().phi[k];
            let g = trace.at(t);
            for i in 0..3 {
                assert_eq!(g[i], phi * h[i]);
            }
        }
        let mid = trace.at(0.15);
        assert!((mid[0] - 0.35).abs() < 1e-15);
        assert!((trace.rate_at(0.5)[1] - (-2.0 * 0.2 / 0.7)).abs() < 1e-14);
    }

    #[test]
    fn rate_integral_of_linear_ramp() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let x: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        let trace = LoadTrace::ramp(x);
        assert!((trace.rate_norm_integral(&m, 0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((trace.rate_norm_integral(&m, 0.25, 0.5) - 0.25).abs() < 1e-12);
        assert!((trace.max_gradient_norm(&m) - 1.0).abs() < 1e-12);
    }
}
