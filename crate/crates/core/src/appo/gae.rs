//! Generalized advantage estimation.

/// `dones[t]` marks that the episode ended after step `t`, so nothing is
/// bootstrapped across it. `bootstrap` is the value of the observation after
/// the last step.
pub fn compute_gae(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n, "values and rewards differ in length");
    assert_eq!(dones.len(), n, "dones and rewards differ in length");
    let mut adv = vec![0.0; n];
    let mut last = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n { bootstrap } else { values[t + 1] };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        last = delta + gamma * lambda * live * last;
        adv[t] = last;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[false], 0.0, 0.99, 0.95);
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn zeros() {
        let (a, _) = compute_gae(&[0.0; 5], &[0.0; 5], &[false, true, false, false, false], 0.0, 0.999, 0.95);
        assert!(a.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn undiscounted_sums_within_episode() {
        let (a, _) = compute_gae(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4], &[false, true, false, false], 0.0, 1.0, 1.0);
        assert_eq!(a, vec![3.0, 2.0, 7.0, 4.0]);
    }
}
