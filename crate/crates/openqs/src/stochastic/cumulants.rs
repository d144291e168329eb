//! Moment → cumulant conversion for orders 1–4.
//!
//! κ(X_1..X_k) = Σ_{partitions π} (-1)^{|π|-1} (|π|-1)! ∏_{B∈π} m(B),
//! the standard Möbius inversion over set partitions.

use crate::error::Result;

/// Multi-time moment provider: `times` strictly decreasing,
/// returns m(t_1, ..., t_k).
pub type MomentFn<'a> = &'a dyn Fn(&[f64]) -> f64;

/// All partitions of {0, 1, ..., n-1}, each block sorted ascending.
fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mut smaller in partitions(n - 1) {
        // element n-1 joins an existing block ...
        for b in 0..smaller.len() {
            let mut next = smaller.clone();
            next[b].push(n - 1);
            out.push(next);
        }
        // ... or opens its own
        smaller.push(vec![n - 1]);
        out.push(smaller);
    }
    out
}

/// k-th joint cumulant at the given (strictly decreasing) times.
///
/// Moments are requested with their time arguments kept in decreasing order,
/// which every block of a partition of decreasing times automatically
/// satisfies.
pub fn cumulant(moment: MomentFn, times: &[f64]) -> Result<f64> {
    let k = times.len();
    let mut acc = 0.0;
    for part in partitions(k) {
        let blocks = part.len();
        let sign = if (blocks - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let factorial: f64 = (1..blocks).map(|x| x as f64).product();
        let mut prod = sign * factorial;
        for block in &part {
            let ts: Vec<f64> = block.iter().map(|&i| times[i]).collect();
            prod *= moment(&ts);
        }
        acc += prod;
    }
    Ok(acc)
}

/// Cumulants of orders 1..=4 sharing one moment provider.
pub fn cumulants_up_to_4<'a>(
    moment: &'a dyn Fn(&[f64]) -> f64,
) -> impl Fn(&[f64]) -> Result<f64> + 'a {
    move |times: &[f64]| {
        assert!(
            (1..=4).contains(&times.len()),
            "cumulant order must be 1..=4"
        );
        cumulant(moment, times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{rtn_moment, RtnSpec};

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(1).len(), 1);
        assert_eq!(partitions(2).len(), 2);
        assert_eq!(partitions(3).len(), 5);
        assert_eq!(partitions(4).len(), 15);
    }

    #[test]
    fn zero_mean_second_cumulant_is_second_moment() {
        let spec = RtnSpec::unbiased(0.9).unwrap();
        let m = move |ts: &[f64]| rtn_moment(&spec, ts).unwrap();
        let c = cumulants_up_to_4(&m);
        assert!(c(&[1.3]).unwrap().abs() < 1e-15);
        let times = [1.3, 0.4];
        let c2 = c(&times).unwrap();
        assert!((c2 - rtn_moment(&spec, &times).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn biased_rtn_second_cumulant_is_autocorrelation() {
        let spec = RtnSpec::new(0.8, 0.6).unwrap();
        let m = move |ts: &[f64]| rtn_moment(&spec, ts).unwrap();
        let got = cumulant(&m, &[1.5, 0.7]).unwrap();
        assert!((got - spec.autocorrelation(1.5, 0.7)).abs() < 1e-14);
    }

    #[test]
    fn independent_sum_second_cumulant_adds() {
        let a = RtnSpec::new(0.5, 0.3).unwrap();
        let b = RtnSpec::new(1.1, -0.2).unwrap();
        // moments of A+B from the binomial expansion of products of
        // independent factors
        let m_sum = move |ts: &[f64]| -> f64 {
            match ts.len() {
                1 => rtn_moment(&a, ts).unwrap() + rtn_moment(&b, ts).unwrap(),
                2 => {
                    rtn_moment(&a, ts).unwrap()
                        + rtn_moment(&b, ts).unwrap()
                        + rtn_moment(&a, &ts[..1]).unwrap() * rtn_moment(&b, &ts[1..]).unwrap()
                        + rtn_moment(&b, &ts[..1]).unwrap() * rtn_moment(&a, &ts[1..]).unwrap()
                }
                _ => unreachable!(),
            }
        };
        let ma = move |ts: &[f64]| rtn_moment(&a, ts).unwrap();
        let mb = move |ts: &[f64]| rtn_moment(&b, ts).unwrap();
        let times = [1.4, 0.6];
        let lhs = cumulant(&m_sum, &times).unwrap();
        let rhs = cumulant(&ma, &times).unwrap() + cumulant(&mb, &times).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn gaussian_fourth_moment_pairs_off() {
        // a process whose 4th moment is the sum of three pair products has
        // vanishing 4th cumulant
        let c2 = |t1: f64, t2: f64| (-0.7 * (t1 - t2).abs()).exp();
        let m = move |ts: &[f64]| -> f64 {
            match ts.len() {
                1 => 0.0,
                2 => c2(ts[0], ts[1]),
                3 => 0.0,
                4 => {
                    c2(ts[0], ts[1]) * c2(ts[2], ts[3])
                        + c2(ts[0], ts[2]) * c2(ts[1], ts[3])
                        + c2(ts[0], ts[3]) * c2(ts[1], ts[2])
                }
                _ => unreachable!(),
            }
        };
        let k4 = cumulant(&m, &[2.0, 1.4, 0.9, 0.1]).unwrap();
        assert!(k4.abs() < 1e-14, "Gaussian 4th cumulant {k4}");
    }

    #[test]
    fn rtn_fourth_cumulant_against_direct_formula() {
        // zero-mean RTN: C4 = m4 - m2m2 pairings
        let spec = RtnSpec::unbiased(0.6).unwrap();
        let m = move |ts: &[f64]| rtn_moment(&spec, ts).unwrap();
        let times = [2.2, 1.5, 0.8, 0.3];
        let k4 = cumulant(&m, &times).unwrap();
        let pair = |i: usize, j: usize| (-2.0 * 0.6 * (times[i] - times[j])).exp();
        let expect = pair(0, 1) * pair(2, 3)
            - (pair(0, 1) * pair(2, 3) + pair(0, 2) * pair(1, 3) + pair(0, 3) * pair(1, 2));
        assert!((k4 - expect).abs() < 1e-14);
    }
}
