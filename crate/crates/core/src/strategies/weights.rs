use crate::error::SchedError;

/// Per-thread relative capabilities, normalized so the entries sum to the
/// number of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(raw: Vec<f64>) -> Result<Self, SchedError> {
        if raw.is_empty() {
            return Err(SchedError::InvalidParam {
                schedule: "wf2",
                reason: "weight vector is empty".into(),
            });
        }
        if raw.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(SchedError::InvalidParam {
                schedule: "wf2",
                reason: "weights must be finite and positive".into(),
            });
        }
        let sum: f64 = raw.iter().sum();
        let n = raw.len() as f64;
        Ok(WeightVector(raw.into_iter().map(|w| w * n / sum).collect()))
    }

    pub fn uniform(team_size: usize) -> Self {
        WeightVector(vec![1.0; team_size])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, thread: usize) -> f64 {
        self.0[thread]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_to_team_size() {
        let w = WeightVector::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(w.as_slice(), &[1.5, 0.5]);
        let w = WeightVector::new(vec![2.0, 2.0, 2.0]).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![f64::NAN]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sum_equals_len(raw in proptest::collection::vec(0.01f64..100.0, 1..32)) {
            let w = WeightVector::new(raw).unwrap();
            let sum: f64 = w.as_slice().iter().sum();
            proptest::prop_assert!((sum - w.len() as f64).abs() < 1e-9);
        }
    }
}
