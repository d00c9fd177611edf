//! Matching analytic eigenvalues against a numeric spectrum.

use num_complex::Complex64;
use serde::Serialize;

/// Largest analytic set for which exhaustive assignment is attempted.
const MAX_EXHAUSTIVE: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct CompareOptions {
    /// A match passes when its distance is below this.
    pub tol: f64,
    /// Eigenvalues with `|lambda| < zero_tol` count as zeros.
    pub zero_tol: f64,
    /// When set, eigenvalues with `|lambda + eps| < eps_tol * max(1, eps)` are counted.
    pub epsilon: Option<f64>,
    pub eps_tol: f64,
}

impl CompareOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            zero_tol: 1e-8,
            epsilon: None,
            eps_tol: 1e-7,
        }
    }

    /// Zero tolerance `1e-8 * max(1, norm)` for a matrix of the given Frobenius norm.
    pub fn with_matrix_norm(mut self, norm: f64) -> Self {
        self.zero_tol = 1e-8 * norm.max(1.0);
        self
    }

    pub fn with_epsilon(mut self, eps: f64, eps_tol: f64) -> Self {
        self.epsilon = Some(eps);
        self.eps_tol = eps_tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Match {
    pub analytic: [f64; 2],
    pub numeric: [f64; 2],
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    #[serde(serialize_with = "ser_complex_list")]
    pub eigenvalues: Vec<Complex64>,
    pub zero_count: usize,
    pub minus_eps_count: Option<usize>,
    pub matched_analytic: Vec<Match>,
    pub passed: bool,
}

fn ser_complex_list<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

impl SpectrumReport {
    pub fn max_distance(&self) -> f64 {
        self.matched_analytic
            .iter()
            .map(|m| m.distance)
            .fold(0.0, f64::max)
    }
}

pub fn spectrum_compare(analytic: &[Complex64], numeric: &[Complex64], tol: f64) -> SpectrumReport {
    spectrum_compare_with(analytic, numeric, &CompareOptions::new(tol))
}

/// Match each analytic value to a distinct numeric one.
///
/// Matching is greedy by global nearest pair. When two analytic values lie
/// within `2 tol` of each other (and there are at most eight), an exhaustive
/// assignment minimizing the largest distance is used instead.
pub fn spectrum_compare_with(
    analytic: &[Complex64],
    numeric: &[Complex64],
    opts: &CompareOptions,
) -> SpectrumReport {
    let crowded = analytic.iter().enumerate().any(|(i, a)| {
        analytic[i + 1..]
            .iter()
            .any(|b| (a - b).norm() < 2.0 * opts.tol)
    });
    let assignment = if crowded && analytic.len() <= MAX_EXHAUSTIVE {
        optimal_assignment(analytic, numeric)
    } else {
        greedy_assignment(analytic, numeric)
    };

    let mut matched = Vec::with_capacity(analytic.len());
    let mut passed = analytic.len() <= numeric.len();
    for (i, a) in analytic.iter().enumerate() {
        match assignment.get(i).copied().flatten() {
            Some(j) => {
                let d = (a - numeric[j]).norm();
                passed &= d < opts.tol;
                matched.push(Match {
                    analytic: [a.re, a.im],
                    numeric: [numeric[j].re, numeric[j].im],
                    distance: d,
                });
            }
            None => passed = false,
        }
    }

    let zero_count = numeric.iter().filter(|z| z.norm() < opts.zero_tol).count();
    let minus_eps_count = opts.epsilon.map(|eps| {
        let tol = opts.eps_tol * eps.abs().max(1.0);
        numeric
            .iter()
            .filter(|z| (*z + eps).norm() < tol)
            .count()
    });
    SpectrumReport {
        eigenvalues: numeric.to_vec(),
        zero_count,
        minus_eps_count,
        matched_analytic: matched,
        passed,
    }
}

fn greedy_assignment(analytic: &[Complex64], numeric: &[Complex64]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(analytic.len() * numeric.len());
    for (i, a) in analytic.iter().enumerate() {
        for (j, b) in numeric.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![None; analytic.len()];
    let mut used = vec![false; numeric.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

/// Minimize the largest distance (ties broken by the sum) over assignments
/// restricted to each analytic value's `k` nearest numeric candidates.
fn optimal_assignment(analytic: &[Complex64], numeric: &[Complex64]) -> Vec<Option<usize>> {
    let k = analytic.len();
    let candidates: Vec<Vec<usize>> = analytic
        .iter()
        .map(|a| {
            let mut idx: Vec<usize> = (0..numeric.len()).collect();
            idx.sort_by(|&x, &y| (a - numeric[x]).norm().total_cmp(&(a - numeric[y]).norm()));
            idx.truncate(k);
            idx
        })
        .collect();

    struct Search<'a> {
        analytic: &'a [Complex64],
        numeric: &'a [Complex64],
        candidates: &'a [Vec<usize>],
        used: Vec<bool>,
        current: Vec<usize>,
        best: Option<(f64, f64, Vec<usize>)>,
    }

    fn walk(s: &mut Search, i: usize, worst: f64, total: f64) {
        if let Some((bw, bt, _)) = &s.best {
            if worst > *bw || (worst == *bw && total >= *bt) {
                return;
            }
        }
        if i == s.analytic.len() {
            s.best = Some((worst, total, s.current.clone()));
            return;
        }
        for c in 0..s.candidates[i].len() {
            let j = s.candidates[i][c];
            if s.used[j] {
                continue;
            }
            let d = (s.analytic[i] - s.numeric[j]).norm();
            s.used[j] = true;
            s.current.push(j);
            walk(s, i + 1, worst.max(d), total + d);
            s.current.pop();
            s.used[j] = false;
        }
    }

    let mut s = Search {
        analytic,
        numeric,
        candidates: &candidates,
        used: vec![false; numeric.len()],
        current: Vec::with_capacity(k),
        best: None,
    };
    walk(&mut s, 0, 0.0, 0.0);
    match s.best {
        Some((_, _, idx)) => idx.into_iter().map(Some).collect(),
        None => greedy_assignment(analytic, numeric),
    }
}

/// Remove, for each `(center, count)`, the `count` remaining values closest to `center`.
pub fn strip_clusters(values: &[Complex64], clusters: &[(Complex64, usize)]) -> Vec<Complex64> {
    let mut rest = values.to_vec();
    for &(center, count) in clusters {
        for _ in 0..count.min(rest.len()) {
            let (idx, _) = rest
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - center).norm().total_cmp(&(b.1 - center).norm()))
                .expect("non-empty");
            rest.swap_remove(idx);
        }
    }
    rest
}
