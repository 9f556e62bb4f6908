//! Algebraic quantities of the constrained `(alpha, k)` system.
//!
//! An umbilic hypersurface of `H_n` has two shape-operator eigenvalues: `k`
//! (on the `2n - 2` directions of `xi'`) and `l` (on the characteristic
//! direction). Fixing `sigma_{i,n} = c` determines `l` as a function of `k`,
//! and the pair `(alpha, k)` then evolves along the characteristic curves by
//!
//! ```text
//! k'     = (l - 2k) alpha
//! alpha' = k^2 - alpha^2 - k l
//! ```
//!
//! Everything in this module is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to recognise points on the `k = k_c1` / `k = k_c2` loci.
pub const LOCUS_TOL: f64 = 1e-12;

/// Largest `m` accepted by [`binomial`].
pub const MAX_BINOMIAL: u64 = 64;

/// `C(m, j)` in exact integer arithmetic.
pub fn binomial(m: u64, j: u64) -> Result<u64> {
    if j > m || m > MAX_BINOMIAL {
        return Err(Error::domain(format!("binomial({m}, {j}) requires j <= m <= {MAX_BINOMIAL}")));
    }
    let j = j.min(m - j);
    let mut acc: u128 = 1;
    for t in 0..j {
        // acc * (m - t) is divisible by t + 1 at every step
        acc = acc * u128::from(m - t) / u128::from(t + 1);
    }
    Ok(acc as u64)
}

/// The curvature constraint `sigma_{i,n} = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SigmaParams {
    n: u32,
    i: u32,
    c: f64,
    /// `C(2n-2, i-1)`
    w_lo: f64,
    /// `C(2n-2, i)`
    w_hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: u32,
    i: u32,
    c: f64,
}

impl TryFrom<RawParams> for SigmaParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        SigmaParams::new(raw.n, raw.i, raw.c)
    }
}

impl From<SigmaParams> for RawParams {
    fn from(p: SigmaParams) -> Self {
        RawParams { n: p.n, i: p.i, c: p.c }
    }
}

impl SigmaParams {
    pub fn new(n: u32, i: u32, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("n must be >= 2, got {n}")));
        }
        if i < 1 || i > 2 * n - 1 {
            return Err(Error::domain(format!("i must lie in [1, {}], got {i}", 2 * n - 1)));
        }
        if !c.is_finite() {
            return Err(Error::domain("c must be finite"));
        }
        let m = u64::from(2 * n - 2);
        let w_lo = binomial(m, u64::from(i - 1))? as f64;
        let w_hi = if i <= 2 * n - 2 { binomial(m, u64::from(i))? as f64 } else { 0.0 };
        Ok(SigmaParams { n, i, c, w_lo, w_hi })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Same `(n, i)` with a different curvature value.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        SigmaParams::new(self.n, self.i, c)
    }

    /// `c / C(2n-2, i-1)`.
    pub fn sigma_tilde(&self) -> f64 {
        self.c / self.w_lo
    }

    /// `(2n - i - 1) / i`, the slope of `-l` in the `c = 0` reduction.
    pub fn lin_coeff(&self) -> f64 {
        f64::from(2 * self.n - self.i - 1) / f64::from(self.i)
    }

    /// `(2n + i - 1) / i`, so that `(2k - l) k^(i-1) = line_coeff * k^i - sigma_tilde`.
    pub fn line_coeff(&self) -> f64 {
        f64::from(2 * self.n + self.i - 1) / f64::from(self.i)
    }

    /// `(2n - 1) / i`, so that `(k - l) k^(i-1) = null_coeff * k^i - sigma_tilde`.
    pub fn null_coeff(&self) -> f64 {
        f64::from(2 * self.n - 1) / f64::from(self.i)
    }

    pub fn is_even(&self) -> bool {
        self.i.is_multiple_of(2)
    }

    /// True when `l` blows up at `k = 0`.
    pub fn singular_at_zero(&self) -> bool {
        self.i >= 2 && self.c != 0.0
    }

    pub(crate) fn check_k(&self, k: f64) -> Result<()> {
        if k == 0.0 && self.singular_at_zero() {
            Err(Error::Singularity { k })
        } else {
            Ok(())
        }
    }
}

/// A point of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub k: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { alpha: 0.0, k: 0.0 };

    pub fn new(alpha: f64, k: f64) -> Result<Self> {
        if !(alpha.is_finite() && k.is_finite()) {
            return Err(Error::domain(format!("non-finite phase point ({alpha}, {k})")));
        }
        Ok(PhasePoint { alpha, k })
    }

    pub fn norm(&self) -> f64 {
        self.alpha.hypot(self.k)
    }
}

/// Roots of `l = k` (`k_c1`) and `l = 2k` (`k_c2`).
///
/// For `c > 0` the positive roots are present and `0 < k_c2 < k_c1`; even `i`
/// adds the mirrored negative pair. For odd `i` and `c < 0` the roots are the
/// negative images of the `-c` roots. Even `i` with `c < 0`, and `c = 0`, have none.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CriticalValues {
    pub k_c1_pos: Option<f64>,
    pub k_c1_neg: Option<f64>,
    pub k_c2_pos: Option<f64>,
    pub k_c2_neg: Option<f64>,
}

impl CriticalValues {
    /// The `k_c2` root on the side where periodic orbits live; for even `i`
    /// this is the positive root.
    pub fn k_c2_primary(&self) -> Option<f64> {
        self.k_c2_pos.or(self.k_c2_neg)
    }

    pub fn k_c1_primary(&self) -> Option<f64> {
        self.k_c1_pos.or(self.k_c1_neg)
    }

    pub fn k_c2_roots(&self) -> impl Iterator<Item = f64> {
        self.k_c2_pos.into_iter().chain(self.k_c2_neg)
    }

    pub fn k_c1_roots(&self) -> impl Iterator<Item = f64> {
        self.k_c1_pos.into_iter().chain(self.k_c1_neg)
    }

    pub fn is_empty(&self) -> bool {
        self.k_c2_primary().is_none()
    }
}

/// Phase-plane bucket used for portraits and sweep bookkeeping.
///
/// Bands are keyed off the `c > 0` picture. For odd `i` and `c < 0` the label
/// of `(alpha, k)` is the label of `(alpha, -k)` under `-c`; for `c = 0` the
/// `alpha`-axis plays the role of the invariant line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionLabel {
    StationaryOrigin,
    StationaryKc1,
    ConstantKLine,
    BandAboveKc1,
    BandKc2ToKc1,
    BandZeroToKc2,
    LowerHalf,
    MirrorOfAbove,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::StationaryOrigin => "StationaryOrigin",
            RegionLabel::StationaryKc1 => "StationaryKc1",
            RegionLabel::ConstantKLine => "ConstantKLine",
            RegionLabel::BandAboveKc1 => "BandAboveKc1",
            RegionLabel::BandKc2ToKc1 => "BandKc2ToKc1",
            RegionLabel::BandZeroToKc2 => "BandZeroToKc2",
            RegionLabel::LowerHalf => "LowerHalf",
            RegionLabel::MirrorOfAbove => "MirrorOfAbove",
        }
    }
}

/// `l` as a function of `k` on the constraint surface.
pub fn l_of_k(params: &SigmaParams, k: f64) -> Result<f64> {
    if params.c == 0.0 {
        return Ok(-params.lin_coeff() * k);
    }
    params.check_k(k)?;
    let head = if params.i == 1 { params.sigma_tilde() } else { params.sigma_tilde() * k.powi(1 - params.i as i32) };
    Ok(head - params.lin_coeff() * k)
}

pub fn dl_dk(params: &SigmaParams, k: f64) -> Result<f64> {
    if params.c == 0.0 || params.i == 1 {
        return Ok(-params.lin_coeff());
    }
    params.check_k(k)?;
    let i = params.i as i32;
    Ok(-f64::from(params.i - 1) * params.sigma_tilde() * k.powi(-i) - params.lin_coeff())
}

/// `sigma_{i,n}` of an umbilic point with eigenvalues `l` (once) and `k`
/// (`2n - 2` times). Only `n` and `i` of `params` are used.
pub fn sigma_of(params: &SigmaParams, l: f64, k: f64) -> f64 {
    let i = params.i as i32;
    params.w_lo * l * k.powi(i - 1) + params.w_hi * k.powi(i)
}

fn real_root(value: f64, i: u32) -> Option<f64> {
    if value == 0.0 {
        return None;
    }
    if value < 0.0 && i.is_multiple_of(2) {
        return None;
    }
    let mag = value.abs();
    let mut r = match i {
        1 => mag,
        2 => mag.sqrt(),
        3 => mag.cbrt(),
        _ => mag.powf(1.0 / f64::from(i)),
    };
    if i > 1 {
        // one Newton step on r^i = mag
        let ip = i as i32;
        r -= (r.powi(ip) - mag) / (f64::from(i) * r.powi(ip - 1));
    }
    Some(if value < 0.0 { -r } else { r })
}

pub fn critical_k(params: &SigmaParams) -> CriticalValues {
    if params.c == 0.0 {
        return CriticalValues::default();
    }
    let i = f64::from(params.i);
    let b = params.sigma_tilde();
    let c2 = real_root(i * b / f64::from(2 * params.n + params.i - 1), params.i);
    let c1 = real_root(i * b / f64::from(2 * params.n - 1), params.i);

    let out = if params.is_even() {
        CriticalValues { k_c1_pos: c1, k_c1_neg: c1.map(|v| -v), k_c2_pos: c2, k_c2_neg: c2.map(|v| -v) }
    } else if params.c > 0.0 {
        CriticalValues { k_c1_pos: c1, k_c2_pos: c2, ..Default::default() }
    } else {
        CriticalValues { k_c1_neg: c1, k_c2_neg: c2, ..Default::default() }
    };
    debug_assert!(residual_oracle_agrees(params, &out), "closed-form critical values disagree with bisection");
    out
}

/// Locates the roots of `l - 2k` and `l - k` by bisection on a bracket around
/// each closed-form root and compares.
fn residual_oracle_agrees(params: &SigmaParams, cv: &CriticalValues) -> bool {
    let check = |root: f64, shift: f64| {
        let f = |k: f64| l_of_k(params, k).map(|l| l - shift * k).unwrap_or(f64::NAN);
        let (mut lo, mut hi) = if root > 0.0 { (0.5 * root, 2.0 * root) } else { (2.0 * root, 0.5 * root) };
        let mut flo = f(lo);
        if flo * f(hi) > 0.0 {
            return false;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 || mid == lo || mid == hi {
                lo = mid;
                hi = mid;
                break;
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        (0.5 * (lo + hi) - root).abs() <= 1e-10 * root.abs().max(1.0)
    };
    cv.k_c2_roots().all(|r| check(r, 2.0)) && cv.k_c1_roots().all(|r| check(r, 1.0))
}

/// `(dk/ds, dalpha/ds)` at `p`.
pub fn vector_field(params: &SigmaParams, p: PhasePoint) -> Result<(f64, f64)> {
    let l = l_of_k(params, p.k)?;
    let dk = (l - 2.0 * p.k) * p.alpha;
    let dalpha = p.k * p.k - p.alpha * p.alpha - p.k * l;
    Ok((dk, dalpha))
}

/// Nonnegative `alpha` on the nullcline `k^2 - alpha^2 - k l = 0`, if real.
pub fn nullcline_alpha(params: &SigmaParams, k: f64) -> Result<Option<f64>> {
    params.check_k(k)?;
    if k == 0.0 {
        return Ok(Some(0.0));
    }
    // k^2 - k l = k^2 (null_coeff - sigma_tilde k^-i)
    let a = params.null_coeff();
    let shift = if params.c == 0.0 { 0.0 } else { params.sigma_tilde() * k.powi(-(params.i as i32)) };
    let q = k * k * (a - shift);
    let slack = 8.0 * f64::EPSILON * k * k * (a + shift.abs());
    if q >= 0.0 {
        Ok(Some(q.sqrt()))
    } else if q >= -slack {
        Ok(Some(0.0))
    } else {
        Ok(None)
    }
}

/// The main term `Pi` of `k'' alpha' - alpha'' k' = -(2k - l) Pi`.
pub fn main_term_pi(params: &SigmaParams, p: PhasePoint) -> Result<f64> {
    let l = l_of_k(params, p.k)?;
    let (alpha, k) = (p.alpha, p.k);
    let n = f64::from(params.n);
    let i = f64::from(params.i);
    let a2 = alpha * alpha;
    let flow = k * k - a2 - k * l;
    let c0 = (2.0 * n - 1.0) * (2.0 * n + 3.0 * i - 1.0) / (i * i);
    if params.c == 0.0 {
        return Ok(k * k * a2 * c0 + a2 * a2 * params.lin_coeff() + flow * flow);
    }
    // expanded so that i = 1 stays finite at k = 0
    let b = params.sigma_tilde();
    let ip = params.i as i32;
    let c1 = (-4.0 * n + i * i - 3.0 * i + 2.0) / i;
    let mut pi = k * k * a2 * c0 + a2 * b * k.powi(2 - ip) * c1 + a2 * b * b * k.powi(2 - 2 * ip);
    pi += a2 * a2 * params.lin_coeff();
    if params.i > 1 {
        pi += a2 * a2 * (i - 1.0) * b * k.powi(-ip);
    }
    Ok(pi + flow * flow)
}

/// True when `k` sits on an invariant line `2k = l` (the `alpha`-axis when `c = 0`).
pub fn on_invariant_line(params: &SigmaParams, k: f64) -> bool {
    if params.c == 0.0 {
        return k == 0.0;
    }
    critical_k(params).k_c2_roots().any(|kc| (k - kc).abs() <= LOCUS_TOL * kc.abs())
}

/// `d^2 alpha / dk^2` of the phase curve through `p`.
pub fn d2alpha_dk2(params: &SigmaParams, p: PhasePoint) -> Result<f64> {
    if p.alpha == 0.0 || on_invariant_line(params, p.k) {
        return Err(Error::UndefinedCurvature { alpha: p.alpha, k: p.k });
    }
    let l = l_of_k(params, p.k)?;
    let d = 2.0 * p.k - l;
    if d == 0.0 {
        return Err(Error::UndefinedCurvature { alpha: p.alpha, k: p.k });
    }
    let pi = main_term_pi(params, p)?;
    Ok(-pi / (d * d * p.alpha.powi(3)))
}

/// Deterministic bucket for `p`. Boundaries go to the band above them.
pub fn classify_region(params: &SigmaParams, p: PhasePoint) -> RegionLabel {
    if params.c < 0.0 && !params.is_even() {
        let flipped = params.with_c(-params.c).expect("negated c is valid");
        return classify_region(&flipped, PhasePoint { alpha: p.alpha, k: -p.k });
    }
    if p.alpha == 0.0 && p.k == 0.0 {
        return RegionLabel::StationaryOrigin;
    }
    if params.c == 0.0 {
        return if p.k == 0.0 {
            RegionLabel::ConstantKLine
        } else if p.k > 0.0 {
            RegionLabel::BandAboveKc1
        } else {
            RegionLabel::MirrorOfAbove
        };
    }
    let cv = critical_k(params);
    let (Some(kc1), Some(kc2)) = (cv.k_c1_pos, cv.k_c2_pos) else {
        // even i, c < 0: no critical values at all
        return if p.k >= 0.0 { RegionLabel::BandZeroToKc2 } else { RegionLabel::MirrorOfAbove };
    };
    if p.k < 0.0 {
        if !params.is_even() {
            return RegionLabel::LowerHalf;
        }
        let upper = classify_region(params, PhasePoint { alpha: p.alpha, k: -p.k });
        return match upper {
            RegionLabel::ConstantKLine | RegionLabel::StationaryKc1 => upper,
            _ => RegionLabel::MirrorOfAbove,
        };
    }
    let near = |kc: f64| (p.k - kc).abs() <= LOCUS_TOL * kc;
    if near(kc2) {
        RegionLabel::ConstantKLine
    } else if p.alpha == 0.0 && near(kc1) {
        RegionLabel::StationaryKc1
    } else if p.k >= kc1 {
        RegionLabel::BandAboveKc1
    } else if p.k > kc2 {
        RegionLabel::BandKc2ToKc1
    } else {
        RegionLabel::BandZeroToKc2
    }
}
