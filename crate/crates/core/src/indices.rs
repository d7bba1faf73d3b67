//! Frequency sweeps of `|g(jω)|` and the indices read off them: crossover
//! `ω_c`, low-frequency attenuation `ρ`, peak `s_max` and its frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shaping::SensitivityModel;

/// Densify wherever neighbouring log-magnitudes differ by more than this.
pub const MAX_LOG_STEP: f64 = 0.05;
pub const DEFAULT_SWEEP_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSamples {
    pub omegas: Vec<f64>,
    pub mags: Vec<f64>,
    pub logs: Vec<f64>,
}

impl SweepSamples {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityIndices {
    pub omega_c: f64,
    pub rho: f64,
    pub s_max: f64,
    pub omega_ms: f64,
    pub stability_margin: f64,
}

impl SensitivityIndices {
    /// Builds indices from raw values, enforcing the ordering invariants.
    pub fn new(omega_c: f64, rho: f64, s_max: f64, omega_ms: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!(
                "rho must lie in [0, 1), got {rho}"
            )));
        }
        if !(s_max > 1.0) || !s_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "s_max must exceed 1, got {s_max}"
            )));
        }
        if !(omega_c > 0.0) || !(omega_ms > omega_c) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < omega_c < omega_ms, got {omega_c} and {omega_ms}"
            )));
        }
        Ok(Self {
            omega_c,
            rho,
            s_max,
            omega_ms,
            stability_margin: 1.0 / s_max,
        })
    }

    pub fn ln_s_max(&self) -> f64 {
        self.s_max.ln()
    }
}

/// Default window `[1e-4 ω_ref, 1e3 ω_ref]`, `ω_ref = max(|roots|, 1/t_d)`.
pub fn default_window(m: &SensitivityModel) -> (f64, f64) {
    let mut w_ref = m.characteristic_frequency();
    let td = m.max_dead_time();
    if td > 0.0 {
        w_ref = w_ref.max(1.0 / td);
    }
    if !(w_ref > 0.0) {
        w_ref = 1.0;
    }
    (1e-4 * w_ref, 1e3 * w_ref)
}

fn mag_at(m: &SensitivityModel, w: f64) -> Result<f64> {
    let v = m.eval(w)?.norm();
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::AxisZeroDetected { omega: w });
    }
    Ok(v)
}

/// Log-spaced sweep, densified between neighbours whose `ln|g|` differ by
/// more than [`MAX_LOG_STEP`].
pub fn sweep(
    m: &SensitivityModel,
    omega_min: f64,
    omega_max: f64,
    points: usize,
) -> Result<SweepSamples> {
    if !(omega_min > 0.0) || !(omega_max > omega_min) || !omega_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sweep window must satisfy 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidArgument(
            "sweep needs at least 2 points".into(),
        ));
    }
    let (l0, l1) = (omega_min.ln(), omega_max.ln());
    let base: Vec<f64> = (0..points)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp())
        .collect();
    let mut omegas = Vec::with_capacity(points);
    let mut logs = Vec::with_capacity(points);
    let mut prev: Option<(f64, f64)> = None;
    for &w in &base {
        let lw = mag_at(m, w)?.ln();
        if let Some((pw, pl)) = prev {
            densify(m, pw, pl, w, lw, 0, &mut omegas, &mut logs)?;
        }
        omegas.push(w);
        logs.push(lw);
        prev = Some((w, lw));
    }
    let mags = logs.iter().map(|l| l.exp()).collect();
    Ok(SweepSamples { omegas, mags, logs })
}

#[allow(clippy::too_many_arguments)]
fn densify(
    m: &SensitivityModel,
    wa: f64,
    la: f64,
    wb: f64,
    lb: f64,
    depth: usize,
    omegas: &mut Vec<f64>,
    logs: &mut Vec<f64>,
) -> Result<()> {
    if (lb - la).abs() <= MAX_LOG_STEP || depth >= 12 {
        return Ok(());
    }
    let wm = (wa * wb).sqrt();
    if !(wm > wa && wm < wb) {
        return Ok(());
    }
    let lm = mag_at(m, wm)?.ln();
    densify(m, wa, la, wm, lm, depth + 1, omegas, logs)?;
    omegas.push(wm);
    logs.push(lm);
    densify(m, wm, lm, wb, lb, depth + 1, omegas, logs)
}

/// Sweep over the default window with the default density.
pub fn default_sweep(m: &SensitivityModel) -> Result<SweepSamples> {
    let (lo, hi) = default_window(m);
    sweep(m, lo, hi, DEFAULT_SWEEP_POINTS)
}

/// Root of `|g| = 1` in `[a, b]` by bisection on `ln|g|` in `ln ω`.
fn bisect_crossing(m: &SensitivityModel, mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..200 {
        if (b - a) <= 1e-12 * b {
            break;
        }
        let c = (a * b).sqrt();
        if mag_at(m, c)? < 1.0 {
            a = c;
        } else {
            b = c;
        }
    }
    Ok((a * b).sqrt())
}

/// Golden-section maximisation of `|g|` over `[a, b]` in `ln ω`.
fn golden_max(m: &SensitivityModel, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = mag_at(m, x1.exp())?;
    let mut f2 = mag_at(m, x2.exp())?;
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = mag_at(m, x2.exp())?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = mag_at(m, x1.exp())?;
        }
    }
    let x = 0.5 * (lo + hi);
    let w = x.exp();
    Ok((w, mag_at(m, w)?))
}

/// Local maximum around sample `k`, refined when it is interior.
fn refine_peak(
    m: &SensitivityModel,
    s: &SweepSamples,
    k: usize,
    lo: usize,
    hi: usize,
) -> Result<(f64, f64)> {
    if k <= lo || k >= hi {
        return Ok((s.omegas[k], s.mags[k]));
    }
    let (w, v) = golden_max(m, s.omegas[k - 1], s.omegas[k + 1])?;
    if v >= s.mags[k] {
        Ok((w, v))
    } else {
        Ok((s.omegas[k], s.mags[k]))
    }
}

/// Frequency beyond which `|G| < 1e-3`, i.e. `|g|` is within 0.1% of one.
fn peak_search_limit(m: &SensitivityModel, s: &SweepSamples) -> usize {
    let mut last = s.len() - 1;
    for k in (0..s.len()).rev() {
        let g = m
            .open_loop
            .eval(s.omegas[k])
            .map(|v| v.norm())
            .unwrap_or(f64::INFINITY);
        if g >= 1e-3 {
            last = (k + 1).min(s.len() - 1);
            break;
        }
    }
    last
}

/// Indices with `ω_c` at the first upward unit crossing.
pub fn extract_indices(m: &SensitivityModel, s: &SweepSamples) -> Result<SensitivityIndices> {
    if s.len() < 2 {
        return Err(Error::InvalidArgument(
            "sweep has fewer than 2 samples".into(),
        ));
    }
    if s.mags[0] >= 1.0 {
        return Err(Error::LowFrequencyAmplification { mag: s.mags[0] });
    }
    let k = s
        .mags
        .iter()
        .position(|&v| v >= 1.0)
        .ok_or(Error::NoCrossover)?;
    let omega_c = bisect_crossing(m, s.omegas[k - 1], s.omegas[k])?;
    indices_with_split(m, s, omega_c)
}

/// Indices with a prescribed split frequency in place of the crossing. The
/// split must be below the first crossing.
pub fn indices_with_split(
    m: &SensitivityModel,
    s: &SweepSamples,
    split: f64,
) -> Result<SensitivityIndices> {
    if !(split > s.omegas[0]) || !(split < s.omegas[s.len() - 1]) {
        return Err(Error::InvalidArgument(format!(
            "split frequency {split} outside the sweep window"
        )));
    }
    // ρ: largest sample strictly below the split, plus the split itself when
    // it is still below unity
    let below: Vec<usize> = (0..s.len()).filter(|&i| s.omegas[i] < split).collect();
    let last_below = *below.last().expect("split above first sample");
    let kr = below
        .iter()
        .copied()
        .max_by(|&a, &b| s.mags[a].total_cmp(&s.mags[b]))
        .unwrap();
    let (_, mut rho) = refine_peak(m, s, kr, 0, last_below)?;
    let at_split = mag_at(m, split)?;
    if at_split < 1.0 {
        rho = rho.max(at_split);
    }
    if rho >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "|g| reaches {rho:.4} below the split frequency {split}"
        )));
    }

    let limit = peak_search_limit(m, s);
    let first_above = last_below + 1;
    if first_above > limit {
        return Err(Error::NoCrossover);
    }
    let kp = (first_above..=limit)
        .max_by(|&a, &b| s.mags[a].total_cmp(&s.mags[b]))
        .unwrap();
    let (omega_ms, s_max) = refine_peak(m, s, kp, first_above, limit)?;
    if s_max <= 1.0 {
        return Err(Error::NoCrossover);
    }
    SensitivityIndices::new(split, rho, s_max, omega_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;
    use crate::shaping::{make_sensitivity, ShapingConfig};

    fn model(num: &[f64], den: &[f64], td: f64) -> SensitivityModel {
        let g = TransferFunction::from_coeffs(num, den, td).unwrap();
        make_sensitivity(g, &ShapingConfig::default()).unwrap()
    }

    #[test]
    fn unit_loop_is_flat() {
        let m = model(&[1.0], &[1.0], 0.0);
        let s = sweep(&m, 0.01, 100.0, 50).unwrap();
        assert_eq!(s.len(), 50);
        assert!(s.mags.iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert_eq!(extract_indices(&m, &s), Err(Error::NoCrossover));
        let hot = model(&[-0.5], &[1.0], 0.0);
        let s = sweep(&hot, 0.01, 100.0, 10).unwrap();
        assert!(matches!(
            extract_indices(&hot, &s),
            Err(Error::LowFrequencyAmplification { .. })
        ));
    }

    #[test]
    fn integrator_with_delay() {
        // G = e^{-s}/s: |g| crosses one and peaks near the phase crossover
        let m = model(&[1.0], &[0.0, 1.0], 1.0);
        let s = default_sweep(&m).unwrap();
        let ix = extract_indices(&m, &s).unwrap();
        // |1 + e^{-jw}/(jw)|^2 = 1 + 1/w^2 - 2 sin(w)/w, so |g| = 1 where 2 w sin(w) = 1
        let mut a = 0.1_f64;
        let mut b = 1.5;
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if 1.0 - 2.0 * c * c.sin() > 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        assert!((ix.omega_c - a).abs() < 1e-8 * a, "{} vs {}", ix.omega_c, a);
        assert!(ix.rho < 1.0 && ix.s_max > 1.0 && ix.omega_ms > ix.omega_c);
        assert_eq!(ix.stability_margin, 1.0 / ix.s_max);
    }

    #[test]
    fn no_crossover() {
        let m = model(&[1.0], &[1.0, 1.0], 0.0);
        let s = sweep(&m, 0.01, 100.0, 100).unwrap();
        assert_eq!(extract_indices(&m, &s), Err(Error::NoCrossover));
    }

    #[test]
    fn rejects_bad_window() {
        let m = model(&[1.0], &[1.0], 0.0);
        assert!(sweep(&m, 0.0, 1.0, 10).is_err());
        assert!(sweep(&m, 1.0, 1.0, 10).is_err());
        assert!(sweep(&m, 0.1, 1.0, 1).is_err());
    }
}
