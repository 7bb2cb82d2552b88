//! Finite spectra and the clipping audit used before applying entropy
//! functionals.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest excursion outside `[0, 1]` that clipping may silently absorb.
pub const CLIP_TOLERANCE: f64 = 1e-3;

/// How many eigenvalues were moved into the declared interval, and by how much.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClipReport {
    pub count: usize,
    pub max_magnitude: f64,
}

/// A finite multiset of real eigenvalues, kept in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    interval: (f64, f64),
    clip: ClipReport,
}

impl Spectrum {
    /// Spectrum on the declared default interval `[0, 1]` (not enforced).
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Spectrum {
            values,
            interval: (0.0, 1.0),
            clip: ClipReport::default(),
        }
    }

    /// Spectrum with no declared interval, as produced by an eigensolver.
    pub fn unbounded(values: Vec<f64>) -> Self {
        let mut s = Spectrum::new(values);
        s.interval = (f64::NEG_INFINITY, f64::INFINITY);
        s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn clip_report(&self) -> ClipReport {
        self.clip
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Moves values in `[-tol, 0)` to 0 and `(1, 1 + tol]` to 1, recording
    /// every move. Larger excursions abort.
    pub fn clip_to_unit(self, tol: f64) -> Result<Spectrum> {
        let mut clip = self.clip;
        let mut worst = 0.0f64;
        let values: Vec<f64> = self
            .values
            .into_iter()
            .map(|v| {
                let excursion = if v < 0.0 {
                    -v
                } else if v > 1.0 {
                    v - 1.0
                } else {
                    0.0
                };
                if excursion > 0.0 {
                    clip.count += 1;
                    clip.max_magnitude = clip.max_magnitude.max(excursion);
                    worst = worst.max(excursion);
                }
                v.clamp(0.0, 1.0)
            })
            .collect();
        if worst > tol {
            return Err(Error::DiscretizationTooCoarse { excursion: worst });
        }
        Ok(Spectrum {
            values,
            interval: (0.0, 1.0),
            clip,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_is_audited() {
        let s = Spectrum::unbounded(vec![1.0 + 2e-4, -5e-4, 0.3])
            .clip_to_unit(CLIP_TOLERANCE)
            .unwrap();
        assert_eq!(s.values(), &[0.0, 0.3, 1.0]);
        assert_eq!(s.clip_report().count, 2);
        assert!((s.clip_report().max_magnitude - 5e-4).abs() < 1e-15);
        assert_eq!(s.interval(), (0.0, 1.0));
    }

    #[test]
    fn large_excursion_aborts() {
        let err = Spectrum::unbounded(vec![0.5, 1.01])
            .clip_to_unit(CLIP_TOLERANCE)
            .unwrap_err();
        assert!(matches!(err, Error::DiscretizationTooCoarse { .. }));
    }
}
