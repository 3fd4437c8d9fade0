//! Independent reference implementations used only by unit tests.

use std::collections::{HashMap, HashSet};

const LN2: f64 = std::f64::consts::LN_2;

pub type Bag<'a> = &'a [(&'a str, u32)];

fn count(d: Bag<'_>, t: &str) -> f64 {
    d.iter().filter(|p| p.0 == t).map(|p| f64::from(p.1)).sum()
}

/// Scores every candidate against the seed by evaluating the weighted
/// query-likelihood sum term by term, recomputing idf, cosines, partitions
/// and background probabilities from scratch. Returns the sorted ranking.
pub fn brute_force_sdr(
    seed: Bag<'_>,
    cands: &[(&str, Bag<'_>)],
    lambda: f64,
) -> Vec<(String, f64)> {
    let n = cands.len() as f64;
    let vocab: HashSet<&str> = cands
        .iter()
        .flat_map(|(_, d)| d.iter().map(|p| p.0))
        .collect();
    let df = |t: &str| cands.iter().filter(|(_, d)| count(d, t) > 0.0).count() as f64;
    let vec_of = |d: Bag<'_>| -> HashMap<String, f64> {
        let mut v: HashMap<String, f64> = HashMap::new();
        for p in d.iter().filter(|p| vocab.contains(p.0)) {
            *v.entry(p.0.to_string()).or_default() += f64::from(p.1) * (n / df(p.0)).ln();
        }
        v
    };
    let cos = |u: &HashMap<String, f64>, v: &HashMap<String, f64>| {
        let dot: f64 = u.iter().map(|(t, w)| w * v.get(t).unwrap_or(&0.0)).sum();
        let nu = u.values().map(|w| w * w).sum::<f64>().sqrt();
        let nv = v.values().map(|w| w * w).sum::<f64>().sqrt();
        if nu == 0.0 || nv == 0.0 {
            0.0
        } else {
            dot / (nu * nv)
        }
    };
    let sv = vec_of(seed);
    let sims: Vec<f64> = cands.iter().map(|(_, d)| cos(&vec_of(d), &sv)).collect();
    let total: f64 = cands
        .iter()
        .map(|(_, d)| d.iter().map(|p| f64::from(p.1)).sum::<f64>())
        .sum();
    let seed_terms: HashSet<&str> = seed.iter().map(|p| p.0).collect();
    let mut out: Vec<(String, f64)> = cands
        .iter()
        .map(|(id, d)| {
            let len: f64 = d.iter().map(|p| f64::from(p.1)).sum();
            let mut score = 0.0;
            for &t in &seed_terms {
                let cs = count(seed, t);
                let c = count(d, t);
                if c == 0.0 {
                    continue;
                }
                let (mut sw, mut nw, mut so, mut no) = (0.0, 0.0, 0.0, 0.0);
                for (j, (_, dj)) in cands.iter().enumerate() {
                    if count(dj, t) > 0.0 {
                        sw += sims[j];
                        nw += 1.0;
                    } else {
                        so += sims[j];
                        no += 1.0;
                    }
                }
                let gw = if nw > 0.0 { sw / nw } else { 0.0 };
                let go = if no > 0.0 { so / no } else { 0.0 };
                let phi = if gw == 0.0 {
                    0.0
                } else if go == 0.0 {
                    LN2
                } else {
                    (1.0 + gw / go).ln()
                };
                let pc = cands.iter().map(|(_, dj)| count(dj, t)).sum::<f64>() / total;
                score += phi * cs * (1.0 + (1.0 - lambda) / lambda * c / (len * pc)).ln();
            }
            (id.to_string(), score)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
