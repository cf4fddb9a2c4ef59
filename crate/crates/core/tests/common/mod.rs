//! Independent reference computations used by the integration tests. Nothing
//! here calls into the crate's inference code: each oracle recomputes its
//! quantity from the model's definition by brute force.

#![allow(dead_code)]

use chai::domain::Meaning;
use chai::prior::{HierarchicalPrior, LexiconSpace};
use statrs::function::gamma::ln_gamma;

/// Which side of the first trial an agent was on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Speaker,
    Listener,
}

/// Two objects, two words, uniform prior over the four one-to-one-or-not
/// lexicons. After one trial where the speaker said `u1` for `o1` and the
/// listener picked `o1`, returns `post[u][o] = P(phi(u) = o)`.
///
/// Literal listener: the null object is always a candidate, so a true word
/// splits its mass between its referent and null; noise `eps` is spread
/// uniformly over the two objects and null. The speaker soft-maximizes
/// `alpha * ln L0` over the two words, then mixes in `eps` uniform noise.
/// The speaker updates on `L0(o1 | u1)`; the listener on `S1(u1 | o1)`.
pub fn two_word_posterior(eps: f64, alpha: f64, side: Side) -> [[f64; 2]; 2] {
    let l0 = |means: usize, o: usize| -> f64 {
        let base = if means == o { 0.5 } else { 0.0 };
        eps / 3.0 + (1.0 - eps) * base
    };
    let mut joint = [[0.0f64; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let lik = match side {
                Side::Speaker => l0(a, 0),
                Side::Listener => {
                    let s1 = (alpha * l0(a, 0).ln()).exp();
                    let s2 = (alpha * l0(b, 0).ln()).exp();
                    eps / 2.0 + (1.0 - eps) * s1 / (s1 + s2)
                }
            };
            joint[a][b] = 0.25 * lik;
        }
    }
    let z: f64 = joint.iter().flatten().sum();
    let mut post = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            post[0][a] += joint[a][b] / z;
            post[1][b] += joint[a][b] / z;
        }
    }
    post
}

/// `ln` of the Dirichlet-multinomial probability of one ordered sequence
/// with the given category counts, via Gamma functions.
pub fn ln_dm(alpha: &[f64], lambda: f64, counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut acc = ln_gamma(lambda) - ln_gamma(lambda + n as f64);
    for (a, &c) in alpha.iter().zip(counts) {
        acc += ln_gamma(lambda * a + c as f64) - ln_gamma(lambda * a);
    }
    acc
}

fn leaf_of(space: &LexiconSpace, i: usize, p: usize) -> usize {
    match space.lexicon(i).meanings()[p] {
        Meaning::Node(id) => id.0 as usize,
        Meaning::Empty => panic!("hierarchical lexicons assign a leaf to every word"),
    }
}

/// Exact posterior marginals by enumerating every joint assignment of
/// lexicons to the partners, with each word's community concentration
/// summed over its grid. Returns one marginal per partner, then the
/// predictive for a further partner with no data.
pub fn joint_enumeration(
    prior: &HierarchicalPrior,
    space: &LexiconSpace,
    logliks: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = space.len();
    let k = logliks.len();
    let n_prims = space.n_prims();
    let n_leaves = prior.n_leaves;
    // the extra, data-free partner yields the stranger predictive
    let total = k + 1;
    let mut state = vec![0usize; total];
    let mut log_w = Vec::new();
    let mut states = Vec::new();
    loop {
        let mut lw: f64 = state[..k].iter().zip(logliks).map(|(&i, ll)| ll[i]).sum();
        for p in 0..n_prims {
            let mut counts = vec![0usize; n_leaves];
            for &i in &state {
                counts[leaf_of(space, i, p)] += 1;
            }
            let grid = &prior.grids[p];
            let terms: Vec<f64> = grid
                .points()
                .iter()
                .zip(grid.probs())
                .map(|(a, w)| w.ln() + ln_dm(a, prior.lambda, &counts))
                .collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lw += m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
        }
        log_w.push(lw);
        states.push(state.clone());
        let mut j = 0;
        loop {
            if j == total {
                let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = log_w.iter().map(|x| (x - m).exp()).collect();
                let z: f64 = w.iter().sum();
                let mut marg = vec![vec![0.0; n]; total];
                for (s, wi) in states.iter().zip(&w) {
                    for (slot, &i) in s.iter().enumerate() {
                        marg[slot][i] += wi / z;
                    }
                }
                let stranger = marg.pop().expect("extra partner");
                return (marg, stranger);
            }
            state[j] += 1;
            if state[j] < n {
                break;
            }
            state[j] = 0;
            j += 1;
        }
    }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Every joint state `(lexicon per partner, grid point per word)` with its
/// exact posterior probability.
pub fn joint_with_alpha(
    prior: &HierarchicalPrior,
    space: &LexiconSpace,
    logliks: &[Vec<f64>],
) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let n = space.len();
    let k = logliks.len();
    let n_prims = space.n_prims();
    let sizes: Vec<usize> = std::iter::repeat_n(n, k)
        .chain(prior.grids.iter().map(|g| g.len()))
        .collect();
    let mut digits = vec![0usize; sizes.len()];
    let mut out = Vec::new();
    'outer: loop {
        let (phi, alpha) = digits.split_at(k);
        let mut lw: f64 = phi.iter().zip(logliks).map(|(&i, ll)| ll[i]).sum();
        for p in 0..n_prims {
            let mut counts = vec![0usize; prior.n_leaves];
            for &i in phi {
                counts[leaf_of(space, i, p)] += 1;
            }
            let grid = &prior.grids[p];
            lw += grid.probs()[alpha[p]].ln()
                + ln_dm(&grid.points()[alpha[p]], prior.lambda, &counts);
        }
        out.push((phi.to_vec(), alpha.to_vec(), lw));
        for j in 0..digits.len() {
            digits[j] += 1;
            if digits[j] < sizes[j] {
                continue 'outer;
            }
            digits[j] = 0;
        }
        break;
    }
    let m = out.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = out.iter().map(|s| (s.2 - m).exp()).sum();
    for s in &mut out {
        s.2 = (s.2 - m).exp() / z;
    }
    out
}
