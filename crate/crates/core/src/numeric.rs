//! Small numeric kernels shared by the modules: compensated summation,
//! Euler–Maclaurin tails for power sums, binary entropy and ordinary
//! least squares.

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// A value together with a bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub bound: f64,
}

/// Direct summation below this index, Euler–Maclaurin beyond it.
const EM_SWITCH: u64 = 64;

/// `Σ_{k ≥ m} k^(−alpha)` for `alpha > 1`, `m ≥ 1`.
///
/// Terms below `max(m, 64)` are summed directly; the remainder is the
/// Euler–Maclaurin expansion through the B6 term. The reported bound is the
/// magnitude of the first omitted (B8) term, which dominates the remainder
/// because the derivatives of `x^(−alpha)` alternate in sign.
pub fn power_tail_sum(alpha: f64, m: u64) -> Bounded {
    debug_assert!(alpha > 1.0 && m >= 1);
    let start = m.max(EM_SWITCH);
    let direct = csum((m..start).map(|k| (k as f64).powf(-alpha)));
    let x = start as f64;
    let a = alpha;
    let p0 = x.powf(-a);
    let mut acc = CompensatedSum::new();
    acc.add(x.powf(1.0 - a) / (a - 1.0));
    acc.add(p0 / 2.0);
    acc.add(a * p0 / x / 12.0);
    let r3 = a * (a + 1.0) * (a + 2.0);
    acc.add(-r3 * p0 / x.powi(3) / 720.0);
    let r5 = r3 * (a + 3.0) * (a + 4.0);
    acc.add(r5 * p0 / x.powi(5) / 30240.0);
    let r7 = r5 * (a + 5.0) * (a + 6.0);
    let bound = r7 * p0 / x.powi(7) / 1_209_600.0 + f64::EPSILON * acc.value().abs();
    Bounded {
        value: direct + acc.value(),
        bound,
    }
}

/// `Σ_{k ≥ m} f(k)` for a smooth, eventually monotone, integrable `f`
/// defined on the reals, with `m` large enough that `f` is in its
/// asymptotic regime.
///
/// Uses `∫_m^∞ f + f(m)/2 − f'(m)/12`. The integral is evaluated after the
/// substitution `x = m·e^s` by composite Simpson with Richardson error
/// estimate. The bound adds the quadrature error, the neglected integral
/// beyond the cut-off, and `|f'(m)|/12` as a deliberately loose stand-in
/// for the Euler–Maclaurin remainder.
pub fn smooth_tail_sum<F: Fn(f64) -> f64>(f: F, m: f64) -> Bounded {
    let g = |s: f64| {
        let x = m * s.exp();
        f(x) * x
    };
    let g0 = g(0.0);
    // Find a cut-off where the integrand is negligible.
    let mut s_max = 8.0;
    while s_max < 2000.0 && g(s_max) > 1e-30 * g0.abs().max(f64::MIN_POSITIVE) {
        s_max *= 1.5;
    }
    let simpson = |panels: usize| {
        let h = s_max / panels as f64;
        let mut acc = CompensatedSum::new();
        acc.add(g(0.0));
        acc.add(g(s_max));
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc.add(w * g(i as f64 * h));
        }
        acc.value() * h / 3.0
    };
    let panels = ((s_max * 64.0) as usize).max(64) & !1;
    let fine = simpson(panels * 2);
    let coarse = simpson(panels);
    let quad_err = (fine - coarse).abs() / 15.0;
    let g_end = g(s_max);
    let g_prev = g(s_max - 1.0);
    let decay = if g_end > 0.0 && g_prev > g_end {
        (g_prev / g_end).ln()
    } else {
        1.0
    };
    let beyond = g_end.abs() / decay.max(1e-3);
    let delta = 1e-4 * m;
    let fprime = (f(m + delta) - f(m - delta)) / (2.0 * delta);
    let value = fine + f(m) / 2.0 - fprime / 12.0;
    Bounded {
        value,
        bound: quad_err + beyond + fprime.abs() / 12.0,
    }
}

/// `−q ln q − (1 − q) ln(1 − q)` in nats, with `0 · ln 0 = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    // ln_1p keeps the (1 − q) ln(1 − q) term accurate for small hazards
    -q * q.ln() - (1.0 - q) * (-q).ln_1p()
}

/// `−x ln x` with the continuous extension at 0.
#[inline]
pub fn xlogx_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Ordinary least squares fit of `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let m = x.len() as f64;
    let mx = csum(x.iter().copied()) / m;
    let my = csum(y.iter().copied()) / m;
    let sxx = csum(x.iter().map(|&xi| (xi - mx) * (xi - mx)));
    let sxy = csum(x.iter().zip(y).map(|(&xi, &yi)| (xi - mx) * (yi - my)));
    let syy = csum(y.iter().map(|&yi| (yi - my) * (yi - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = csum(
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2)),
    );
    let slope_stderr = if x.len() > 2 {
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}
