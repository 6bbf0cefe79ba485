use crate::error::{Error, Result};
use crate::rmab::History;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub arm: usize,
    /// 1-based time of the transition.
    pub time: usize,
    pub next_state: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bucket {
    pub obs: Vec<Observation>,
}

impl Bucket {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Observations grouped by the `(state, action)` they were taken from,
/// together with the shared covariate and spline matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData {
    pub n_arms: usize,
    pub buckets: [[Bucket; 2]; 2],
    pub covariates: Vec<Vec<f64>>,
    pub spline_basis: Vec<Vec<f64>>,
}

impl DesignData {
    pub fn k(&self) -> usize {
        self.covariates.first().map_or(0, Vec::len)
    }

    pub fn d(&self) -> usize {
        self.spline_basis.first().map_or(0, Vec::len)
    }

    pub fn n_obs(&self) -> usize {
        self.buckets.iter().flatten().map(Bucket::len).sum()
    }
}

pub fn build_design(history: &History, covariates: &[Vec<f64>], spline_basis: &[Vec<f64>]) -> Result<DesignData> {
    let n_arms = covariates.len();
    let mut buckets: [[Bucket; 2]; 2] = Default::default();
    for r in history.records() {
        if r.arm >= n_arms || r.time == 0 || r.time > spline_basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "record (arm {}, time {}) outside N={n_arms}, T={}",
                r.arm,
                r.time,
                spline_basis.len()
            )));
        }
        buckets[r.state as usize][r.action as usize].obs.push(Observation {
            arm: r.arm,
            time: r.time,
            next_state: r.next_state == 1,
        });
    }
    Ok(DesignData { n_arms, buckets, covariates: covariates.to_vec(), spline_basis: spline_basis.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmab::{ActionVector, SystemState, TransitionRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_history_gives_empty_buckets() {
        let d = build_design(&History::new(), &[vec![0.0]], &[vec![1.0]]).unwrap();
        assert!(d.buckets.iter().flatten().all(Bucket::is_empty));
    }

    #[test]
    fn single_record_lands_in_its_bucket() {
        let mut h = History::new();
        h.push_record(TransitionRecord { arm: 0, time: 1, state: 0, action: 1, next_state: 1 });
        let d = build_design(&h, &[vec![0.0]], &[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(d.buckets[0][1].obs, vec![Observation { arm: 0, time: 1, next_state: true }]);
        assert_eq!(d.n_obs(), 1);
    }

    #[test]
    fn full_episode_is_partitioned() {
        let (n, horizon) = (12, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut h = History::new();
        for t in 1..=horizon {
            let s = SystemState::random(n, &mut rng);
            let next = SystemState::random(n, &mut rng);
            h.push_step(t, &s, &ActionVector::from_pulled(n, &[t % n, (t + 3) % n]), &next).unwrap();
        }
        let d = build_design(&h, &vec![vec![0.0]; n], &vec![vec![1.0]; horizon]).unwrap();
        assert_eq!(d.n_obs(), n * horizon);
    }

    #[test]
    fn out_of_range_record_is_rejected() {
        let mut h = History::new();
        h.push_record(TransitionRecord { arm: 3, time: 1, state: 0, action: 0, next_state: 0 });
        assert!(build_design(&h, &[vec![0.0]], &[vec![1.0]]).is_err());
    }
}
