//! Closed-form rates, memory sharing and the four comparison scenarios.
//!
//! All functions are generic over [`Scalar`]. Use [`Exact`] for identity
//! checks and [`crate::Approx`] for quick grids.

use std::fmt::Write as _;

use crate::combinatorics::{binom, cyc_closed_form};
use crate::error::{Error, Result};
use crate::pir::pir_factor;
use crate::{fmt_decimal, fmt_exact, Exact, Scalar};

/// One point of a rate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint<T> {
    pub t: T,
    pub rate: T,
    pub per_user_rate: T,
    pub users: u64,
    pub tag: String,
}

impl<T: Scalar> RatePoint<T> {
    pub fn new(t: T, rate: T, users: u64, tag: impl Into<String>) -> Self {
        let per_user_rate = rate.clone() / T::from_count(users);
        Self {
            t,
            rate,
            per_user_rate,
            users,
            tag: tag.into(),
        }
    }
}

fn count<T: Scalar>(n: usize, k: usize) -> Result<T> {
    Ok(T::from_count(binom(n as i64, k as i64)?))
}

fn check_access(caches: usize, access_degree: usize, t: usize) -> Result<()> {
    if access_degree == 0 || access_degree >= caches {
        return Err(Error::Domain(format!(
            "need 1 <= L < C; got L = {access_degree}, C = {caches}"
        )));
    }
    if t + access_degree > caches {
        return Err(Error::Domain(format!(
            "need t <= C - L; got t = {t}, C = {caches}, L = {access_degree}"
        )));
    }
    Ok(())
}

fn check_pir(servers: usize, files: usize) -> Result<()> {
    if servers < 2 || files == 0 {
        return Err(Error::Domain(format!(
            "need S >= 2 and N >= 1; got S = {servers}, N = {files}"
        )));
    }
    Ok(())
}

/// `binom(C, t + L) / binom(C, t)`: the multi-access rate without privacy.
pub fn rate_nopir<T: Scalar>(caches: usize, access_degree: usize, t: usize) -> Result<T> {
    check_access(caches, access_degree, t)?;
    Ok(count::<T>(caches, t + access_degree)? / count::<T>(caches, t)?)
}

/// Same as [`rate_nopir`] but `0` when `t > C - L` (every user holds everything).
pub fn rate_nopir_extended<T: Scalar>(caches: usize, access_degree: usize, t: usize) -> Result<T> {
    if t > caches {
        return Err(Error::Domain(format!("t = {t} exceeds C = {caches}")));
    }
    if access_degree == 0 || access_degree >= caches {
        return Err(Error::Domain(format!(
            "need 1 <= L < C; got L = {access_degree}, C = {caches}"
        )));
    }
    Ok(count::<T>(caches, t + access_degree)? / count::<T>(caches, t)?)
}

/// Multi-access MuPIR rate with privacy.
pub fn rate_theorem1<T: Scalar>(
    caches: usize,
    access_degree: usize,
    t: usize,
    servers: usize,
    files: usize,
) -> Result<T> {
    check_pir(servers, files)?;
    Ok(rate_nopir::<T>(caches, access_degree, t)? * pir_factor::<T>(servers, files))
}

/// Dedicated-cache baseline `(K - t)/(t + 1)` times the PIR factor.
pub fn rate_product_design<T: Scalar>(
    users: usize,
    t: usize,
    servers: usize,
    files: usize,
) -> Result<T> {
    check_pir(servers, files)?;
    if t > users {
        return Err(Error::Domain(format!("t = {t} exceeds K = {users}")));
    }
    Ok(T::ratio((users - t) as u64, (t + 1) as u64) * pir_factor::<T>(servers, files))
}

/// Which delivery attains the cyclic rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclicBranch {
    MultiAccess,
    Dedicated,
}

/// Both candidates of the cyclic rate, without the PIR factor.
pub fn cyclic_candidates<T: Scalar>(
    caches: usize,
    access_degree: usize,
    t: usize,
) -> Result<(T, T)> {
    check_access(caches, access_degree, t)?;
    let cyc = cyc_closed_form(caches, t + access_degree, access_degree)?.total;
    let multi = T::from_count(cyc) / count::<T>(caches, t)?;
    let dedicated = T::ratio((caches - t) as u64, (t + 1) as u64);
    Ok((multi, dedicated))
}

/// The cheaper branch; ties go to multi-access.
pub fn cyclic_branch(caches: usize, access_degree: usize, t: usize) -> Result<CyclicBranch> {
    let (multi, dedicated) = cyclic_candidates::<Exact>(caches, access_degree, t)?;
    Ok(if multi <= dedicated {
        CyclicBranch::MultiAccess
    } else {
        CyclicBranch::Dedicated
    })
}

/// Cyclic wraparound rate: the minimum of both branches times the PIR factor.
pub fn rate_theorem3<T: Scalar>(
    caches: usize,
    access_degree: usize,
    t: usize,
    servers: usize,
    files: usize,
) -> Result<T> {
    check_pir(servers, files)?;
    let (multi, dedicated) = cyclic_candidates::<T>(caches, access_degree, t)?;
    let best = if multi <= dedicated { multi } else { dedicated };
    Ok(best * pir_factor::<T>(servers, files))
}

/// Ratio of the private rate to the non-private one. Never above 2 for S >= 2.
pub fn optimality_ratio<T: Scalar>(
    caches: usize,
    access_degree: usize,
    t: usize,
    servers: usize,
    files: usize,
) -> Result<T> {
    Ok(rate_theorem1::<T>(caches, access_degree, t, servers, files)?
        / rate_nopir::<T>(caches, access_degree, t)?)
}

/// Lower convex envelope of `(t, rate)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    vertices: Vec<(T, T)>,
}

fn cross<T: Scalar>(o: &(T, T), a: &(T, T), b: &(T, T)) -> T {
    (a.0.clone() - o.0.clone()) * (b.1.clone() - o.1.clone())
        - (a.1.clone() - o.1.clone()) * (b.0.clone() - o.0.clone())
}

impl<T: Scalar> Envelope<T> {
    pub fn vertices(&self) -> &[(T, T)] {
        &self.vertices
    }

    /// Linear interpolation on the hull; `None` outside its `t` range.
    pub fn eval(&self, t: &T) -> Option<T> {
        let first = self.vertices.first()?;
        let last = self.vertices.last()?;
        if *t < first.0 || *t > last.0 {
            return None;
        }
        for pair in self.vertices.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if *t <= b.0 {
                let w = (t.clone() - a.0.clone()) / (b.0.clone() - a.0.clone());
                return Some(a.1.clone() + w * (b.1.clone() - a.1.clone()));
            }
        }
        Some(first.1.clone())
    }
}

/// Lower convex hull of the given points (duplicate `t` keeps the minimum).
pub fn memory_sharing_envelope<T: Scalar>(points: &[(T, T)]) -> Result<Envelope<T>> {
    if points.is_empty() {
        return Err(Error::Domain("envelope of no points".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });
    sorted.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut hull: Vec<(T, T)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= T::zero()
        {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(Envelope { vertices: hull })
}

/// Theorem 1 points for `t = 0..=C`, with rate 0 once users hold everything.
pub fn theorem1_points<T: Scalar>(
    caches: usize,
    access_degree: usize,
    servers: usize,
    files: usize,
) -> Result<Vec<(T, T)>> {
    check_pir(servers, files)?;
    let factor = pir_factor::<T>(servers, files);
    (0..=caches)
        .map(|t| {
            Ok((
                T::from_count(t as u64),
                rate_nopir_extended::<T>(caches, access_degree, t)? * factor.clone(),
            ))
        })
        .collect()
}

/// Both cyclic branches at every `t = 0..=C - L`, plus the trivial point at `t = C`.
pub fn cyclic_points<T: Scalar>(
    caches: usize,
    access_degree: usize,
    servers: usize,
    files: usize,
) -> Result<Vec<(T, T)>> {
    check_pir(servers, files)?;
    let factor = pir_factor::<T>(servers, files);
    let mut points = Vec::new();
    for t in 0..=caches - access_degree {
        let (multi, dedicated) = cyclic_candidates::<T>(caches, access_degree, t)?;
        let x = T::from_count(t as u64);
        points.push((x.clone(), multi * factor.clone()));
        points.push((x, dedicated * factor.clone()));
    }
    points.push((T::from_count(caches as u64), T::zero()));
    Ok(points)
}

/// Scenarios comparing multi-access (MA) with dedicated caches (DC).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Same caches, same cache size: `t_MA = t_DC`.
    SameCacheSize = 1,
    /// Same caches, same memory per user: `t_MA = t_DC / L`.
    SameUserMemory = 2,
    /// Same users `K = binom(C, L)`, same total memory: `t_MA = t_DC`.
    SameUsers = 3,
    /// Cyclic access, `K = C`, same cache size.
    Cyclic = 4,
}

impl Scenario {
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Self::SameCacheSize),
            2 => Ok(Self::SameUserMemory),
            3 => Ok(Self::SameUsers),
            4 => Ok(Self::Cyclic),
            other => Err(Error::InvalidParams(format!("scenario must be 1..4, got {other}"))),
        }
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow<T> {
    pub scenario: Scenario,
    pub caches: usize,
    pub access_degree: usize,
    pub t_dc: T,
    pub t_ma: T,
    /// False when `t_MA` is fractional and the MA rate is memory shared.
    pub integral: bool,
    pub users_ma: u64,
    pub users_dc: u64,
    pub per_user_ma: T,
    pub per_user_dc: T,
    pub per_user_ma_nopir: T,
    pub per_user_dc_nopir: T,
    /// `per_user_ma / per_user_dc`; `None` when the DC rate is zero.
    pub ratio: Option<T>,
}

fn row<T: Scalar>(
    scenario: Scenario,
    caches: usize,
    access_degree: usize,
    (t_dc, t_ma, integral): (T, T, bool),
    (users_ma, users_dc): (u64, u64),
    (ma_nopir, dc_nopir): (T, T),
    factor: &T,
) -> ComparisonRow<T> {
    let per_user_ma_nopir = ma_nopir / T::from_count(users_ma);
    let per_user_dc_nopir = dc_nopir / T::from_count(users_dc);
    let ratio = if per_user_dc_nopir == T::zero() {
        None
    } else {
        Some(per_user_ma_nopir.clone() / per_user_dc_nopir.clone())
    };
    ComparisonRow {
        scenario,
        caches,
        access_degree,
        t_dc,
        t_ma,
        integral,
        users_ma,
        users_dc,
        per_user_ma: per_user_ma_nopir.clone() * factor.clone(),
        per_user_dc: per_user_dc_nopir.clone() * factor.clone(),
        per_user_ma_nopir,
        per_user_dc_nopir,
        ratio,
    }
}

/// Rows for every `L in 1..C` and every `t` of the dedicated system.
pub fn compare_scenarios<T: Scalar>(
    caches: usize,
    servers: usize,
    files: usize,
    scenario: Scenario,
) -> Result<Vec<ComparisonRow<T>>> {
    check_pir(servers, files)?;
    if caches < 2 {
        return Err(Error::Domain(format!("need C >= 2, got {caches}")));
    }
    let factor = pir_factor::<T>(servers, files);
    let c = caches as u64;
    let mut rows = Vec::new();
    for l in 1..caches {
        let k_ma = binom(caches as i64, l as i64)?;
        match scenario {
            Scenario::SameCacheSize => {
                for t in 0..=caches {
                    let x = T::from_count(t as u64);
                    rows.push(row(
                        scenario,
                        caches,
                        l,
                        (x.clone(), x, true),
                        (k_ma, c),
                        (
                            rate_nopir_extended::<T>(caches, l, t)?,
                            T::ratio(c - t as u64, t as u64 + 1),
                        ),
                        &factor,
                    ));
                }
            }
            Scenario::SameUserMemory => {
                let points: Vec<(T, T)> = (0..=caches)
                    .map(|t| {
                        Ok((
                            T::from_count(t as u64),
                            rate_nopir_extended::<T>(caches, l, t)?,
                        ))
                    })
                    .collect::<Result<_>>()?;
                let envelope = memory_sharing_envelope(&points)?;
                for t_dc in 0..=caches {
                    let t_ma = T::ratio(t_dc as u64, l as u64);
                    let ma = envelope.eval(&t_ma).ok_or_else(|| {
                        Error::Domain(format!("t_MA = {t_dc}/{l} outside the envelope"))
                    })?;
                    rows.push(row(
                        scenario,
                        caches,
                        l,
                        (T::from_count(t_dc as u64), t_ma, t_dc % l == 0),
                        (k_ma, c),
                        (ma, T::ratio(c - t_dc as u64, t_dc as u64 + 1)),
                        &factor,
                    ));
                }
            }
            Scenario::SameUsers => {
                for t in 0..=caches {
                    let x = T::from_count(t as u64);
                    rows.push(row(
                        scenario,
                        caches,
                        l,
                        (x.clone(), x, true),
                        (k_ma, k_ma),
                        (
                            rate_nopir_extended::<T>(caches, l, t)?,
                            T::ratio(k_ma - t as u64, t as u64 + 1),
                        ),
                        &factor,
                    ));
                }
            }
            Scenario::Cyclic => {
                for t in 0..=caches - l {
                    let x = T::from_count(t as u64);
                    let (multi, dedicated) = cyclic_candidates::<T>(caches, l, t)?;
                    let best = if multi <= dedicated { multi } else { dedicated };
                    rows.push(row(
                        scenario,
                        caches,
                        l,
                        (x.clone(), x, true),
                        (c, c),
                        (best, T::ratio(c - t as u64, t as u64 + 1)),
                        &factor,
                    ));
                }
            }
        }
    }
    Ok(rows)
}

/// Header of [`comparison_csv`].
pub const COMPARISON_HEADER: &str = "scenario,C,L,t_dc,t_ma,integral_t_ma,K_ma,K_dc,\
per_user_ma,per_user_ma_dec,per_user_dc,per_user_dc_dec,\
per_user_ma_nopir,per_user_ma_nopir_dec,per_user_dc_nopir,per_user_dc_nopir_dec,\
ratio,ratio_dec";

/// CSV rendering with exact fractions next to 6-digit decimals.
pub fn comparison_csv(rows: &[ComparisonRow<Exact>]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    let pair = |v: &Exact| format!("{},{}", fmt_exact(v), fmt_decimal(v, 6));
    for r in rows {
        let ratio = r
            .ratio
            .as_ref()
            .map_or_else(|| "-,-".to_string(), pair);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario as u8,
            r.caches,
            r.access_degree,
            fmt_exact(&r.t_dc),
            fmt_exact(&r.t_ma),
            r.integral,
            r.users_ma,
            r.users_dc,
            pair(&r.per_user_ma),
            pair(&r.per_user_dc),
            pair(&r.per_user_ma_nopir),
            pair(&r.per_user_dc_nopir),
            ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Approx;

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(rate_theorem1::<Exact>(5, 3, 2, 2, 3).unwrap(), q(7, 40));
        // t_DC = 4 with L = 2 means t_MA = 2.
        let r = rate_nopir::<Exact>(8, 2, 2).unwrap() / q(28, 1);
        assert_eq!(r, q(10, 112));
        for c in 3..8 {
            for l in 1..c {
                let top = rate_theorem1::<Exact>(c, l, c - l, 2, 3).unwrap();
                let expected = q(7, 4) / Exact::from_integer((binom(c as i64, (c - l) as i64).unwrap()).into());
                assert_eq!(top, expected);
            }
        }
    }

    #[test]
    fn nopir_examples() {
        assert_eq!(rate_nopir::<Exact>(5, 3, 2).unwrap(), q(1, 10));
        assert_eq!(rate_nopir::<Exact>(8, 2, 3).unwrap(), q(1, 1));
        for t in 0..7 {
            assert_eq!(
                rate_nopir::<Exact>(7, 1, t).unwrap(),
                q(7 - t as i64, t as i64 + 1)
            );
        }
        assert!(rate_nopir::<Exact>(5, 3, 3).is_err());
        assert!(rate_nopir::<Exact>(5, 5, 0).is_err());
    }

    #[test]
    fn product_design_examples() {
        let r = rate_product_design::<Exact>(8, 2, 2, 3).unwrap();
        assert_eq!(r, q(7, 2));
        assert_eq!(r / q(8, 1), q(7, 16));
        assert_eq!(rate_product_design::<Exact>(8, 8, 2, 3).unwrap(), q(0, 1));
        assert_eq!(rate_product_design::<Exact>(8, 3, 2, 3).unwrap(), q(35, 16));
        assert!(rate_product_design::<Exact>(3, 4, 2, 3).is_err());
        assert!(rate_product_design::<Exact>(3, 1, 1, 3).is_err());
    }

    #[test]
    fn theorem3_examples() {
        let r = rate_theorem3::<Exact>(8, 2, 2, 2, 3).unwrap();
        assert_eq!(r / q(8, 1), q(7, 16));
        assert_eq!(cyclic_branch(8, 2, 2).unwrap(), CyclicBranch::Dedicated);
        let (multi, _) = cyclic_candidates::<Exact>(8, 2, 2).unwrap();
        assert_eq!(multi * q(7, 4) / q(8, 1), q(17, 32));
        let r = rate_theorem3::<Exact>(8, 2, 3, 2, 3).unwrap();
        assert_eq!(r / q(8, 1), q(7, 32));
        assert_eq!(cyclic_branch(8, 2, 3).unwrap(), CyclicBranch::MultiAccess);
        for c in 3..10 {
            for l in 1..c {
                let r = rate_theorem3::<Exact>(c, l, 0, 2, 2).unwrap();
                assert_eq!(r, q(c as i64, 1) * q(3, 2));
            }
        }
    }

    #[test]
    fn identities() {
        for c in 2..=9 {
            for l in 1..c {
                for t in 0..=c - l {
                    for (s, n) in [(2, 1), (2, 3), (3, 2), (4, 4)] {
                        let factor = pir_factor::<Exact>(s, n);
                        if l == 1 {
                            assert_eq!(
                                rate_theorem1::<Exact>(c, 1, t, s, n).unwrap(),
                                rate_product_design::<Exact>(c, t, s, n).unwrap()
                            );
                        }
                        let ratio = optimality_ratio::<Exact>(c, l, t, s, n).unwrap();
                        assert_eq!(ratio, factor);
                        assert!(ratio <= q(2, 1));
                        assert!(
                            rate_theorem3::<Exact>(c, l, t, s, n).unwrap()
                                <= rate_product_design::<Exact>(c, t, s, n).unwrap()
                        );
                    }
                }
            }
        }
        assert_eq!(optimality_ratio::<Exact>(5, 2, 1, 3, 4).unwrap(), q(40, 27));
        assert_eq!(optimality_ratio::<Exact>(5, 2, 1, 3, 1).unwrap(), q(1, 1));
    }

    #[test]
    fn float_and_exact_agree() {
        let e = rate_theorem1::<Exact>(7, 3, 2, 3, 3).unwrap();
        let f = rate_theorem1::<Approx>(7, 3, 2, 3, 3).unwrap();
        assert!((e.approx() - f).abs() < 1e-12);
    }

    #[test]
    fn envelope_basics() {
        let env = memory_sharing_envelope(&[(q(0, 1), q(4, 1)), (q(2, 1), q(0, 1))]).unwrap();
        assert_eq!(env.eval(&q(1, 1)), Some(q(2, 1)));
        assert_eq!(env.eval(&q(3, 1)), None);
        // A point above the chord is dropped.
        let env = memory_sharing_envelope(&[
            (q(0, 1), q(4, 1)),
            (q(1, 1), q(3, 1)),
            (q(2, 1), q(0, 1)),
        ])
        .unwrap();
        assert_eq!(env.vertices().len(), 2);
        assert!(memory_sharing_envelope::<Exact>(&[]).is_err());
    }

    #[test]
    fn cyclic_envelope_takes_dedicated_value() {
        let points = cyclic_points::<Exact>(8, 2, 2, 3).unwrap();
        let env = memory_sharing_envelope(&points).unwrap();
        let at2 = env.eval(&q(2, 1)).unwrap() / q(8, 1);
        assert!(at2 <= q(7, 16));
        for (t, r) in &points {
            assert!(env.eval(t).unwrap() <= *r);
        }
    }

    #[test]
    fn scenario_two_points() {
        let rows = compare_scenarios::<Exact>(8, 2, 3, Scenario::SameUserMemory).unwrap();
        for r in rows.iter().filter(|r| r.t_dc == q(r.access_degree as i64, 1)) {
            assert_eq!(r.ratio, Some(q(1, 1)), "L = {}", r.access_degree);
        }
        let r = rows
            .iter()
            .find(|r| r.access_degree == 2 && r.t_dc == q(4, 1))
            .unwrap();
        assert_eq!(r.per_user_dc_nopir, q(1, 10));
        assert_eq!(r.per_user_ma_nopir, q(10, 112));
        assert!(r.integral);
        assert!(rows.iter().any(|r| !r.integral));
    }

    #[test]
    fn scenario_four_points() {
        let rows = compare_scenarios::<Exact>(8, 2, 3, Scenario::Cyclic).unwrap();
        let r = rows
            .iter()
            .find(|r| r.access_degree == 2 && r.t_ma == q(3, 1))
            .unwrap();
        assert_eq!(r.per_user_ma, q(7, 32));
        assert_eq!(fmt_decimal(&r.per_user_dc, 3), "0.273");
        assert_eq!(fmt_decimal(&r.per_user_ma, 3), "0.219");
    }

    #[test]
    fn scenario_three_has_integral_t_everywhere() {
        for c in 2..8 {
            let rows = compare_scenarios::<Exact>(c, 2, 2, Scenario::SameUsers).unwrap();
            assert!(rows.iter().all(|r| r.integral && r.t_ma == r.t_dc));
        }
    }

    #[test]
    fn csv_shape() {
        let rows = compare_scenarios::<Exact>(4, 2, 2, Scenario::SameCacheSize).unwrap();
        let csv = comparison_csv(&rows);
        let columns = COMPARISON_HEADER.split(',').count();
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), columns, "{line}");
        }
        assert!(csv.contains(",-,-"));
        assert!(Scenario::from_index(5).is_err());
    }
}
