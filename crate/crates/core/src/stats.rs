//! Descriptive statistics used by the engagement and report modules.

use serde::Serialize;

use crate::numeric::exact_sum;

/// Linear-interpolation quantile of an ascending slice (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median; an even-sized sample takes the mean of the two central values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(exact_sum(values.iter().copied()) / values.len() as f64)
    }
}

/// Boxplot summary with Tukey whiskers (1.5 IQR fences).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: usize,
}

impl FiveNumberSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let whisker_low = v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(v[0]);
        let whisker_high = v
            .iter()
            .rev()
            .copied()
            .find(|&x| x <= hi_fence)
            .unwrap_or(v[v.len() - 1]);
        let outliers = v.iter().filter(|&&x| x < lo_fence || x > hi_fence).count();
        Some(Self {
            n: v.len(),
            min: v[0],
            q1,
            median: median(&v).unwrap(),
            q3,
            max: v[v.len() - 1],
            mean: mean(&v).unwrap(),
            whisker_low,
            whisker_high,
            outliers,
        })
    }
}

/// Pearson product-moment correlation. `None` when n < 2 or either
/// coordinate has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxy = exact_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = exact_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let syy = exact_sum(ys.iter().map(|y| (y - my) * (y - my)));
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Hartigan's dip statistic of unimodality.
///
/// Port of the classic AS 217 algorithm (greatest convex minorant / least
/// concave majorant cycling). The minimum attainable value is `1/(2n)`.
pub fn dip_statistic(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    // 1-based working copies
    let mut x = Vec::with_capacity(n + 1);
    x.push(f64::NAN);
    x.extend_from_slice(values);
    x[1..].sort_by(f64::total_cmp);

    let mut dip = 1.0;
    let mut low = 1usize;
    let mut high = n;
    if n < 2 || x[n] == x[1] {
        return dip / (2 * n) as f64;
    }

    let mut mn = vec![0usize; n + 1];
    let mut mj = vec![0usize; n + 1];
    let mut gcm = vec![0usize; n + 1];
    let mut lcm = vec![0usize; n + 1];

    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64) < (x[mnj] - x[mnmnj]) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }

    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64)
                    < (x[mjk] - x[mjmjk]) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    loop {
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        lcm[1] = low;
        let mut i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        let mut d = 0.0;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) as f64 / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) as f64
                        / (x[lcmiv] - x[lcmiv1])
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                if ix < 1 {
                    ix = 1;
                }
                if iv > l_lcm {
                    iv = l_lcm;
                }
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }

        if d < dip {
            break;
        }

        let mut dip_l: f64 = 0.0;
        for j in ig..l_gcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x[jj] - x[jb]) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }

        let mut dip_u: f64 = 0.0;
        for j in ih..l_lcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }

        dip = dip.max(dip_u.max(dip_l));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2 * n) as f64
}

const DIP_TABLE: &str = include_str!("../data/dip_critical.csv");

/// Significance level of the bundled dip critical-value table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipLevel {
    P95,
    P99,
}

/// Critical dip value under the uniform null for sample size `n`.
///
/// Interpolates `sqrt(n) * crit` linearly in `n` between tabulated sizes and
/// holds it constant beyond the table.
pub fn dip_critical_value(n: usize, level: DipLevel) -> f64 {
    let rows: Vec<(f64, f64)> = DIP_TABLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('n'))
        .filter_map(|l| {
            let mut it = l.split(',');
            let size: f64 = it.next()?.parse().ok()?;
            let c95: f64 = it.next()?.parse().ok()?;
            let c99: f64 = it.next()?.parse().ok()?;
            let c = match level {
                DipLevel::P95 => c95,
                DipLevel::P99 => c99,
            };
            Some((size, c * size.sqrt()))
        })
        .collect();
    let nf = n.max(1) as f64;
    let scaled = if nf <= rows[0].0 {
        rows[0].1
    } else if nf >= rows[rows.len() - 1].0 {
        rows[rows.len() - 1].1
    } else {
        let k = rows.iter().position(|&(s, _)| s >= nf).unwrap();
        let (n0, c0) = rows[k - 1];
        let (n1, c1) = rows[k];
        c0 + (c1 - c0) * (nf - n0) / (n1 - n0)
    };
    scaled / nf.sqrt()
}
