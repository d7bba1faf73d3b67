//! Hand-expanded `|g(jω)|` of the built-in loops, independent of the
//! generic evaluator.
#![allow(dead_code)]

/// Series PID with derivative filter on `k_p(1 − τ_0 s)e^{−t_d s}/(s(1 + τ s))`.
#[allow(clippy::too_many_arguments)]
pub fn integrating_filtered(
    w: f64,
    kp: f64,
    tau0: f64,
    tau: f64,
    td: f64,
    kc: f64,
    ti: f64,
    tdd: f64,
    alpha: f64,
) -> f64 {
    let a1 = (ti * tau0 + tdd * tau0 - ti * tdd) * w * w + 1.0;
    let b1 = ti * tdd * tau0 * w.powi(3) + (ti + tdd - tau0) * w;
    let x = ti * w * w * (1.0 - alpha * tdd * tau * w * w);
    let y = ti * (alpha * tdd + tau) * w.powi(3);
    let k = kp * kc;
    let num =
        ti * w * w * ((alpha * alpha * tdd * tdd * w * w + 1.0) * (tau * tau * w * w + 1.0)).sqrt();
    let den2 = x * x + y * y + k * k * (a1 * a1 + b1 * b1)
        - 2.0 * k * ((a1 * x + b1 * y) * (td * w).cos() + (b1 * x - a1 * y) * (td * w).sin());
    num / den2.sqrt()
}

/// Ideal PID on the same plant; the loop is
/// `τ_I s²(1 + τs) / (τ_I s²(1 + τs) + k(1 − τ_0 s)(1 + τ_I s + τ_I τ_D s²)e^{−t_d s})`.
#[allow(clippy::too_many_arguments)]
pub fn integrating_ideal(
    w: f64,
    kp: f64,
    tau0: f64,
    tau: f64,
    td: f64,
    kc: f64,
    ti: f64,
    tdd: f64,
) -> f64 {
    let a2 = ti * (tau0 - tdd) * w * w + 1.0;
    let b2 = ti * tdd * tau0 * w.powi(3) + (ti - tau0) * w;
    let k = kp * kc;
    // numerator −ω²(τ_I + jωτ_I τ)
    let (nr, ni) = (-w * w * ti, -w.powi(3) * ti * tau);
    let (c, s) = ((td * w).cos(), (td * w).sin());
    // (a2 + j b2) e^{−jωt_d}
    let (er, ei) = (a2 * c + b2 * s, b2 * c - a2 * s);
    let (dr, di) = (nr + k * er, ni + k * ei);
    (nr * nr + ni * ni).sqrt() / (dr * dr + di * di).sqrt()
}

/// PID with lead-lag on `k_p(1 − τ_0 s)e^{−t_d s}/(a_2 s² + a_1 s + 1)`.
#[allow(clippy::too_many_arguments)]
pub fn cstr(
    w: f64,
    kp: f64,
    tau0: f64,
    a2: f64,
    a1: f64,
    td: f64,
    kc: f64,
    ti: f64,
    tdd: f64,
    l1: f64,
    l2: f64,
) -> f64 {
    let a = ti * w * w * (-l1 - tdd + tau0 - tau0 * l1 * tdd * w * w) + tau0 * l1 * w * w + 1.0;
    let b = ti * w.powi(3) * (-l1 * tdd + tau0 * l1 + tau0 * tdd) + w * (l1 + ti - tau0);
    let x1 = ti * w * w * (l2 * a2 * w * w - l2 - a1);
    let y1 = ti * w * (1.0 - a2 * w * w - l2 * a1 * w * w);
    let k = kp * kc;
    let den2 = x1 * x1
        + y1 * y1
        + k * k * (a * a + b * b)
        + 2.0 * k * ((a * x1 + b * y1) * (td * w).cos() + (b * x1 - a * y1) * (td * w).sin());
    (x1 * x1 + y1 * y1).sqrt() / den2.sqrt()
}

/// Ideal PID on `k_p e^{−t_d s}/((τ_1 s − 1)(τ_2 s + 1))`; `x_2 + j y_2` is
/// `τ_I s (τ_1 s − 1)(τ_2 s + 1)` at `s = jω`.
#[allow(clippy::too_many_arguments)]
pub fn unstable_sopdt(
    w: f64,
    kp: f64,
    t1: f64,
    t2: f64,
    td: f64,
    kc: f64,
    ti: f64,
    tdd: f64,
) -> f64 {
    let x2 = ti * w * w * (t2 - t1);
    let y2 = -ti * w * (1.0 + w * w * t1 * t2);
    let x3 = 1.0 - ti * tdd * w * w;
    let k = kp * kc;
    let num = ti * w * (w.powi(4) * t1 * t1 * t2 * t2 + w * w * (t1 * t1 + t2 * t2) + 1.0).sqrt();
    let den2 = x2 * x2
        + y2 * y2
        + k * k * (x3 * x3 + ti * ti * w * w)
        + 2.0
            * k
            * ((x3 * x2 + ti * y2 * w) * (td * w).cos() + (ti * x2 * w - x3 * y2) * (td * w).sin());
    num / den2.sqrt()
}

/// Same loop with the unstable pole reflected to `(τ_1 s + 1)`.
#[allow(clippy::too_many_arguments)]
pub fn reflected_sopdt(
    w: f64,
    kp: f64,
    t1: f64,
    t2: f64,
    td: f64,
    kc: f64,
    ti: f64,
    tdd: f64,
) -> f64 {
    let x4 = ti * w * w * (t2 + t1);
    let y4 = ti * w * (t1 * t2 * w * w - 1.0);
    let x5 = 1.0 - ti * tdd * w * w;
    let k = kp * kc;
    let num = ti * w * (t1 * t1 * t2 * t2 * w.powi(4) + (t1 * t1 + t2 * t2) * w * w + 1.0).sqrt();
    let den2 = x4 * x4 + y4 * y4 + k * k * (x5 * x5 + ti * ti * w * w)
        - 2.0
            * k
            * ((x5 * x4 + y4 * ti * w) * (td * w).cos() + (x4 * ti * w - x5 * y4) * (td * w).sin());
    num / den2.sqrt()
}

/// `(case, controller, ω range, closed form)` for every built-in loop.
pub type Form = Box<dyn Fn(f64) -> f64>;

pub fn builtin_forms() -> Vec<(&'static str, &'static str, f64, f64, Form)> {
    let mut v: Vec<(&'static str, &'static str, f64, f64, Form)> = vec![
        (
            "foipdt",
            "luyben",
            1e-2,
            1e2,
            Box::new(|w| integrating_filtered(w, 0.547, 0.418, 1.06, 0.1, 1.69, 11.5, 1.15, 0.1)),
        ),
        (
            "foipdt",
            "pai",
            1e-2,
            1e2,
            Box::new(|w| integrating_ideal(w, 0.547, 0.418, 1.06, 0.1, 4.06, 2.68, 0.65)),
        ),
        (
            "cstr",
            "rc2006",
            1e-4,
            1.0,
            Box::new(|w| {
                cstr(
                    w, -0.2679, 41.6667, 279.03, -2.9781, 10.0, 1.3254, -86.251, 3.5807, 5.0, 4.112,
                )
            }),
        ),
    ];
    for (key, kc, ti, td) in [
        ("sl2008", 6.7051, 5.4738, 1.333),
        ("rc2006", 6.4285, 6.4409, 1.413),
        ("sl2007", 4.009, 8.0327, 1.6808),
    ] {
        v.push((
            "sopdt",
            key,
            1e-2,
            1e2,
            Box::new(move |w| unstable_sopdt(w, 1.0, 5.0, 2.07, 0.939, kc, ti, td)),
        ));
    }
    v
}

/// 200 log-spaced points.
pub fn grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..200)
        .map(|k| lo * (hi / lo).powf(k as f64 / 199.0))
        .collect()
}
