//! Exact success probability for tiny populations by exhaustive enumeration.
//!
//! Every non-Bob user contributes `2n` independent Bernoulli draws (one per
//! target epoch and one per random epoch). The oracle walks the full joint
//! outcome space, `2^((m-1) 2n)` leaves, multiplying probabilities and
//! checking the success event at each leaf. Nothing here shares code with the
//! Monte Carlo path.

use crate::traffic::PopulationSpec;
use crate::{Error, Result};

pub const MAX_USERS: usize = 6;
pub const MAX_PAIRS: usize = 4;
/// Upper limit on `(m - 1) * 2n`, the number of enumerated draws.
pub const MAX_DRAWS: usize = 24;

/// One user's outcome pattern over all `2n` epochs.
#[derive(Debug, Clone, Copy)]
struct Pattern {
    count: i64,
    weight: f64,
}

fn patterns(t: f64, r: f64, n: usize) -> Vec<Pattern> {
    let draws = 2 * n;
    (0u32..1 << draws)
        .map(|bits| {
            let mut count = 0;
            let mut weight = 1.0;
            for i in 0..draws {
                let hit = bits >> i & 1 == 1;
                // even bits are target epochs, odd bits random epochs
                let (p, delta) = if i % 2 == 0 { (t, 1) } else { (r, -1) };
                if hit {
                    weight *= p;
                    count += delta;
                } else {
                    weight *= 1.0 - p;
                }
            }
            Pattern { count, weight }
        })
        .collect()
}

pub fn within_limits(m: usize, n: usize) -> bool {
    m <= MAX_USERS && n <= MAX_PAIRS && (m.saturating_sub(1)) * 2 * n <= MAX_DRAWS
}

/// Probability that every member strictly outranks every non-member after
/// `n` target/random pairs.
pub fn brute_force_oracle(spec: &PopulationSpec, n: usize) -> Result<f64> {
    let m = spec.total_users();
    if !within_limits(m, n) {
        return Err(Error::TooLarge(format!(
            "m = {m}, n = {n}: need m <= {MAX_USERS}, n <= {MAX_PAIRS}, (m-1)*2n <= {MAX_DRAWS}"
        )));
    }
    let users: Vec<(bool, Vec<Pattern>)> = (0..m)
        .filter(|&u| u != spec.bob())
        .map(|u| {
            let p = spec.profile(u);
            (spec.is_member(u), patterns(p.t, p.r, n))
        })
        .collect();
    Ok(walk(&users, 1.0, i64::MAX, i64::MIN))
}

fn walk(users: &[(bool, Vec<Pattern>)], weight: f64, min_member: i64, max_other: i64) -> f64 {
    let Some(((member, pats), rest)) = users.split_first() else {
        return if min_member > max_other { weight } else { 0.0 };
    };
    pats.iter()
        .filter(|p| p.weight > 0.0)
        .map(|p| {
            let w = weight * p.weight;
            if *member {
                walk(rest, w, min_member.min(p.count), max_other)
            } else {
                walk(rest, w, min_member, max_other.max(p.count))
            }
        })
        .sum()
}
