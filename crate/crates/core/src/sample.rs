//! Farthest-point-style sampling over candidate centers: plain FPS,
//! semantics-weighted S-FPS (candidate key = foreground score times distance
//! to the selected set), and score Top-K.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fps,
    SFps,
    TopK,
}

/// Where the greedy loop starts. `Default` is strategy-dependent: FPS seeds
/// at index 0, S-FPS at the argmax score (ties to the lowest index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    Default,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct SampleRequest {
    pub candidates: Vec<Vec3>,
    pub scores: Vec<f64>,
    pub count: usize,
    pub strategy: Strategy,
    pub seed_policy: SeedPolicy,
}

impl SampleRequest {
    pub fn new(
        candidates: Vec<Vec3>,
        scores: Vec<f64>,
        count: usize,
        strategy: Strategy,
    ) -> Result<Self, CoreError> {
        if scores.len() != candidates.len() {
            return Err(CoreError::ShapeMismatch {
                expected: candidates.len(),
                got: scores.len(),
                what: "score count",
            });
        }
        if count == 0 || count > candidates.len() {
            return Err(CoreError::InvalidCount {
                requested: count,
                available: candidates.len(),
            });
        }
        if scores
            .iter()
            .any(|s| !s.is_finite() || !(0.0..=1.0).contains(s))
        {
            return Err(CoreError::NonFinite {
                what: "scores (must be finite in [0, 1])",
            });
        }
        Ok(SampleRequest {
            candidates,
            scores,
            count,
            strategy,
            seed_policy: SeedPolicy::Default,
        })
    }
}

/// Selected indices in selection order, with the weighted key each candidate
/// had when picked. The seed's key is `f64::INFINITY` (no distance yet); for
/// Top-K the key is the score.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub indices: Vec<usize>,
    pub keys: Vec<f64>,
}

pub fn sample(req: &SampleRequest) -> Result<SampleResult, CoreError> {
    let n = req.candidates.len();
    if req.count == 0 || req.count > n {
        return Err(CoreError::InvalidCount {
            requested: req.count,
            available: n,
        });
    }
    match req.strategy {
        Strategy::TopK => Ok(top_k(req)),
        Strategy::Fps | Strategy::SFps => Ok(greedy(req)),
    }
}

fn top_k(req: &SampleRequest) -> SampleResult {
    let mut order: Vec<usize> = (0..req.candidates.len()).collect();
    // highest score first, ties to the lowest index
    order.sort_by(|&a, &b| {
        req.scores[b]
            .partial_cmp(&req.scores[a])
            .expect("scores validated finite")
            .then(a.cmp(&b))
    });
    order.truncate(req.count);
    let keys = order.iter().map(|&i| req.scores[i]).collect();
    SampleResult {
        indices: order,
        keys,
    }
}

fn greedy(req: &SampleRequest) -> SampleResult {
    let n = req.candidates.len();
    let weighted = req.strategy == Strategy::SFps;

    let seed = match req.seed_policy {
        SeedPolicy::Fixed(i) => i.min(n - 1),
        SeedPolicy::Default => {
            if weighted {
                // argmax score, ties to the lowest index
                let mut best = 0;
                for i in 1..n {
                    if req.scores[i] > req.scores[best] {
                        best = i;
                    }
                }
                best
            } else {
                0
            }
        }
    };

    let mut selected = Vec::with_capacity(req.count);
    let mut keys = Vec::with_capacity(req.count);
    let mut taken = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];

    selected.push(seed);
    keys.push(f64::INFINITY);
    taken[seed] = true;

    while selected.len() < req.count {
        let last = *selected.last().expect("non-empty");
        let anchor = req.candidates[last];
        let mut best: Option<usize> = None;
        let mut best_key = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d = req.candidates[i].distance(anchor);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            let key = if weighted {
                req.scores[i] * min_dist[i]
            } else {
                min_dist[i]
            };
            // strict > with ascending scan breaks ties to the lowest index
            if key > best_key {
                best_key = key;
                best = Some(i);
            }
        }
        let pick = best.expect("count validated <= n");
        taken[pick] = true;
        selected.push(pick);
        keys.push(best_key);
    }

    SampleResult {
        indices: selected,
        keys,
    }
}
