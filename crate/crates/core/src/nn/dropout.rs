//! Inverted dropout: at training time each entry is zeroed with probability
//! p and survivors are scaled by 1/(1-p); at inference the op is the
//! identity, so no rescaling is ever needed at evaluation time.

use rand::Rng;

use crate::error::{Error, Result};

/// Sample a dropout mask of `len` entries: 0.0 with probability p, otherwise
/// 1/(1-p). A rate of 0 yields an all-ones mask without consuming RNG draws.
pub fn dropout_mask<R: Rng>(len: usize, p: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config(format!("dropout rate {p} outside [0,1)")));
    }
    if p == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

/// Apply dropout to a vector. Identity when `training` is false or p = 0.
pub fn dropout<R: Rng>(x: &[f64], p: f64, rng: &mut R, training: bool) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config(format!("dropout rate {p} outside [0,1)")));
    }
    if !training || p == 0.0 {
        return Ok(x.to_vec());
    }
    let mask = dropout_mask(x.len(), p, rng)?;
    Ok(x.iter().zip(&mask).map(|(v, m)| v * m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_and_inference_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap(), x);
        assert_eq!(dropout(&x, 0.7, &mut rng, false).unwrap(), x);
    }

    #[test]
    fn invalid_rate_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(dropout(&[1.0], 1.0, &mut rng, true).is_err());
        assert!(dropout(&[1.0], -0.1, &mut rng, true).is_err());
    }

    #[test]
    fn survivor_rate_within_three_sigma() {
        // Monte-Carlo oracle: over 10^6 draws the survivor count is binomial
        // with mean n(1-p) and sd sqrt(n p (1-p)).
        let n = 1_000_000usize;
        for &p in &[0.1, 0.5, 0.9] {
            let mut rng = ChaCha8Rng::seed_from_u64(123);
            let mask = dropout_mask(n, p, &mut rng).unwrap();
            let survivors = mask.iter().filter(|m| **m != 0.0).count() as f64;
            let mean = n as f64 * (1.0 - p);
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (survivors - mean).abs() < 3.0 * sd,
                "p={p}: survivors {survivors} vs mean {mean} (sd {sd})"
            );
            // Survivors carry the exact inverse keep probability.
            let keep = 1.0 / (1.0 - p);
            assert!(mask.iter().all(|m| *m == 0.0 || *m == keep));
        }
    }

    #[test]
    fn identical_seeds_give_identical_masks() {
        let a = dropout_mask(512, 0.3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = dropout_mask(512, 0.3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }
}
