//! Globally adaptive 7/15-point Gauss-Kronrod quadrature over a set of
//! initial panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Single 15-point Kronrod estimate with the QUADPACK error heuristic.
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Integrates `f` over the union of the panels defined by consecutive
/// `breaks`, bisecting the panel with the largest error estimate until the
/// total estimate drops below `abs_tol` or `max_panels` is reached.
///
/// The final sum is taken in panel order so the value does not depend on
/// the refinement history.
pub fn integrate_adaptive<F>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Result<QuadOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error) = gk15(&mut f, a, b)?;
        total_err += error;
        heap.push(Panel { a, b, value, error });
    }
    let mut converged = total_err <= abs_tol;
    while !converged && heap.len() < max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b)
            || (worst.b - worst.a) <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
        {
            // cannot split further
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m)?;
        let (v2, e2) = gk15(&mut f, m, worst.b)?;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            value: v2,
            error: e2,
        });
        if total_err <= abs_tol {
            // running sum drifts; confirm with a fresh sum
            let fresh: f64 = heap.iter().map(|p| p.error).sum();
            total_err = fresh;
            converged = fresh <= abs_tol;
        }
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(QuadOutcome {
        value,
        error,
        panels: panels.len(),
        converged: converged || error <= abs_tol,
    })
}
