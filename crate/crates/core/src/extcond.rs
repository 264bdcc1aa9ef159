//! Exterior sequences that concentrate at a point of the window.
//!
//! `psi` is the `M`-th derivative of the mother bump, so its moments of order
//! `< M` vanish. `psi_N(x) = prod_i psi(N x_i)` is normalized in `W^s` and
//! centred at `x0`: `phi_N = psi_{N+N0}(. - x0) / ||psi_{N+N0}||_{W^s}`.

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{Grid, GridFunction, RegionLabel, RegionMask};
use crate::operators::{check_order, sobolev_norm, SobolevFlavor, SpectralEngine};

pub const MAX_MOMENTS: usize = 6;
/// Samples of `psi` on `[-1, 1]`, endpoints included.
pub const PROFILE_SAMPLES: usize = 4097;
pub const MOMENT_TOL: f64 = 1e-8;

/// `exp(1 - 1/(1 - r^2))` on `|r| < 1`, zero elsewhere.
pub fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Taylor coefficients of the bump at `r` up to degree `MAX_MOMENTS`,
/// by truncated power-series arithmetic in `r + eps`.
fn bump_jet(r: f64) -> [f64; MAX_MOMENTS + 1] {
    const D: usize = MAX_MOMENTS + 1;
    let mut out = [0.0; D];
    if r.abs() >= 1.0 {
        return out;
    }
    let u0 = 1.0 - r * r;
    if 1.0 / u0 > 700.0 {
        return out;
    }
    // u = 1 - (r + eps)^2
    let mut u = [0.0; D];
    u[0] = u0;
    u[1] = -2.0 * r;
    u[2] = -1.0;
    // v = 1 / u
    let mut v = [0.0; D];
    v[0] = 1.0 / u0;
    for k in 1..D {
        let acc: f64 = (1..=k.min(2)).map(|j| u[j] * v[k - j]).sum();
        v[k] = -acc / u0;
    }
    // out = exp(1 - v)
    let w: [f64; D] = std::array::from_fn(|k| if k == 0 { 1.0 - v[0] } else { -v[k] });
    out[0] = w[0].exp();
    for k in 1..D {
        let acc: f64 = (1..=k).map(|j| j as f64 * w[j] * out[k - j]).sum();
        out[k] = acc / k as f64;
    }
    out
}

/// `d^M/dr^M bump(r)` for `M <= 6`.
pub fn bump_derivative(order: usize, r: f64) -> f64 {
    assert!(order <= MAX_MOMENTS);
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    factorial * bump_jet(r)[order]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentProfile {
    moments: usize,
    samples: Vec<f64>,
    moment_defects: Vec<f64>,
}

impl MomentProfile {
    pub fn moments(&self) -> usize {
        self.moments
    }

    /// `psi` at `r_k = -1 + 2k/(PROFILE_SAMPLES - 1)`.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `|int r^k psi dr|` for `k < M`.
    pub fn moment_defects(&self) -> &[f64] {
        &self.moment_defects
    }

    pub fn value(&self, r: f64) -> f64 {
        bump_derivative(self.moments, r)
    }
}

/// The profile `psi = bump^{(M)}` with its moments checked by quadrature.
pub fn moment_profile(moments: usize) -> Result<MomentProfile> {
    if !(1..=MAX_MOMENTS).contains(&moments) {
        return Err(FracError::InvalidMomentCount(moments));
    }
    let dr = 2.0 / (PROFILE_SAMPLES - 1) as f64;
    let grid: Vec<f64> = (0..PROFILE_SAMPLES).map(|k| -1.0 + k as f64 * dr).collect();
    let samples: Vec<f64> = grid.iter().map(|&r| bump_derivative(moments, r)).collect();
    // trapezoid rule; psi and all its derivatives vanish at the endpoints
    let moment_defects: Vec<f64> = (0..moments)
        .map(|k| {
            let sum: f64 = grid.iter().zip(&samples).map(|(r, p)| r.powi(k as i32) * p).sum();
            (sum * dr).abs()
        })
        .collect();
    for (order, &defect) in moment_defects.iter().enumerate() {
        if !(defect <= MOMENT_TOL) {
            return Err(FracError::MomentDefect {
                order,
                defect,
                tol: MOMENT_TOL,
            });
        }
    }
    Ok(MomentProfile {
        moments,
        samples,
        moment_defects,
    })
}

#[derive(Debug, Clone)]
pub struct ExteriorSequence {
    grid: Grid,
    s: f64,
    x0: Vec<f64>,
    x0_index: usize,
    snap_distance: f64,
    profile: MomentProfile,
    scales: Vec<usize>,
    n0: usize,
    members: Vec<GridFunction>,
    l2_norms: Vec<f64>,
    ws_norms: Vec<f64>,
}

impl ExteriorSequence {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// The node `x0` was snapped to.
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn x0_index(&self) -> usize {
        self.x0_index
    }

    pub fn snap_distance(&self) -> f64 {
        self.snap_distance
    }

    pub fn profile(&self) -> &MomentProfile {
        &self.profile
    }

    pub fn moments(&self) -> usize {
        self.profile.moments
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    /// Half-width `1/(N + N0)` of the support cube of each member.
    pub fn half_widths(&self) -> Vec<f64> {
        self.scales.iter().map(|&n| 1.0 / (n + self.n0) as f64).collect()
    }

    pub fn l2_norms(&self) -> &[f64] {
        &self.l2_norms
    }

    pub fn ws_norms(&self) -> &[f64] {
        &self.ws_norms
    }

    /// `||phi_N||_{L^2}` strictly decreasing along the scales. This can fail
    /// when the largest scales sit near the resolution cap.
    pub fn l2_strictly_decreasing(&self) -> bool {
        self.l2_norms.windows(2).all(|p| p[1] < p[0])
    }

    pub fn norms(&self, eng: &SpectralEngine, order: f64, flavor: SobolevFlavor) -> Result<Vec<f64>> {
        self.members
            .iter()
            .map(|u| sobolev_norm(eng, u, order, flavor))
            .collect()
    }

    /// Whether every nonzero of every member lies in its closed support cube.
    pub fn support_violations(&self) -> usize {
        let h = self.grid.spacing();
        let c = self.grid.multi_index(self.x0_index);
        let mut bad = 0;
        for (u, hw) in self.members.iter().zip(self.half_widths()) {
            for (idx, &v) in u.values().iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mi = self.grid.multi_index(idx);
                let outside =
                    (0..self.grid.dim()).any(|a| (self.grid.wrapped_offset(mi[a], c[a]) as f64 * h).abs() > hw);
                if outside {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// Smallest `N0 >= 1` whose closed cube `x0 + [-1/N0, 1/N0]^n` lies in the
/// open window.
fn minimal_offset(window: &RegionMask, x0: &[f64]) -> Result<usize> {
    let bounds = window
        .bounds()
        .ok_or_else(|| FracError::InvalidArgument("window has no bounds".into()))?;
    if !bounds.contains(x0) {
        return Err(FracError::PointOutsideWindow);
    }
    let h = window.grid().spacing();
    let mut n0 = 1usize;
    while 1.0 / n0 as f64 >= h {
        if bounds.contains_cube(x0, 1.0 / n0 as f64) {
            return Ok(n0);
        }
        n0 += 1;
    }
    Err(FracError::InvalidArgument(
        "x0 is too close to the window boundary for any resolved support".into(),
    ))
}

pub fn build_sequence(
    grid: Grid,
    window: &RegionMask,
    x0: &[f64],
    moments: usize,
    scales: &[usize],
    eng: &SpectralEngine,
    s: f64,
) -> Result<ExteriorSequence> {
    check_order(grid.dim(), s)?;
    let profile = moment_profile(moments)?;
    if window.label() != RegionLabel::Window {
        return Err(FracError::InvalidArgument(
            "exterior sequences live in a Window mask".into(),
        ));
    }
    if *window.grid() != grid || *eng.grid() != grid {
        return Err(FracError::GridMismatch);
    }
    if scales.is_empty() || scales[0] == 0 || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FracError::InvalidArgument(
            "scales must be a nonempty strictly increasing list of positive integers".into(),
        ));
    }
    let (x0_index, snap_distance) = grid.nearest_node(x0)?;
    let point = grid.coords(x0_index)[..grid.dim()].to_vec();
    let n0 = minimal_offset(window, &point)?;
    let h = grid.spacing();
    let largest = scales[scales.len() - 1] + n0;
    if 1.0 / (largest as f64) < 4.0 * h {
        return Err(FracError::Unresolved {
            scale: largest,
            half_width: 1.0 / largest as f64,
            min: 4.0 * h,
        });
    }

    let m = grid.nodes_per_axis();
    let centre = m / 2;
    let target = grid.multi_index(x0_index);
    let mut shift = [0isize; 2];
    for a in 0..grid.dim() {
        shift[a] = target[a] as isize - centre as isize;
    }
    let mut members = Vec::with_capacity(scales.len());
    let mut l2_norms = Vec::with_capacity(scales.len());
    let mut ws_norms = Vec::with_capacity(scales.len());
    for &n in scales {
        let a = (n + n0) as f64;
        // per-axis factor at each integer offset from the centre node
        let axis: Vec<f64> = (0..m)
            .map(|i| profile.value(a * grid.wrapped_offset(i, centre) as f64 * h))
            .collect();
        let centred = GridFunction::from_values(
            grid,
            (0..grid.node_count())
                .map(|idx| {
                    let mi = grid.multi_index(idx);
                    (0..grid.dim()).map(|d| axis[mi[d]]).product()
                })
                .collect(),
        )?;
        let norm = sobolev_norm(eng, &centred, s, SobolevFlavor::Ws)?;
        if !(norm > 0.0) {
            return Err(FracError::DegenerateSample("sequence member vanishes on the grid"));
        }
        let member = (&centred * (1.0 / norm)).shifted(shift);
        l2_norms.push(member.l2_norm());
        ws_norms.push(sobolev_norm(eng, &member, s, SobolevFlavor::Ws)?);
        members.push(member);
    }
    Ok(ExteriorSequence {
        grid,
        s,
        x0: point,
        x0_index,
        snap_distance,
        profile,
        scales: scales.to_vec(),
        n0,
        members,
        l2_norms,
        ws_norms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub t: f64,
    pub scales: Vec<usize>,
    /// `||phi_N||_{H^{t+s}}` (Bessel) per scale.
    pub norms: Vec<f64>,
    /// Least-squares slope of `log norm` against `log N`.
    pub fitted_slope: f64,
    /// Range of `norm / N^t` along the sequence.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub pass: bool,
}

pub const SLOPE_TOL: f64 = 0.2;

pub fn scaling_report(seq: &ExteriorSequence, eng: &SpectralEngine, t_list: &[f64]) -> Result<Vec<ScalingRow>> {
    if seq.scales.len() < 3 {
        return Err(FracError::TooFewScales(seq.scales.len()));
    }
    if eng.grid() != seq.grid() {
        return Err(FracError::GridMismatch);
    }
    let logs: Vec<f64> = seq.scales.iter().map(|&n| (n as f64).ln()).collect();
    t_list
        .iter()
        .map(|&t| {
            if t + seq.s < -(seq.moments() as f64) {
                return Err(FracError::OrderBelowMoments(t + seq.s));
            }
            let norms = seq.norms(eng, t + seq.s, SobolevFlavor::Bessel)?;
            let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
            let fitted_slope = least_squares_slope(&logs, &y);
            let ratios: Vec<f64> = norms
                .iter()
                .zip(&seq.scales)
                .map(|(v, &n)| v / (n as f64).powf(t))
                .collect();
            Ok(ScalingRow {
                t,
                scales: seq.scales.clone(),
                fitted_slope,
                ratio_min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                ratio_max: ratios.iter().cloned().fold(0.0, f64::max),
                pass: (fitted_slope - t).abs() <= SLOPE_TOL,
                norms,
            })
        })
        .collect()
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
