//! Fixed quadrature rules: the 10/21-point Gauss-Kronrod pair used by the
//! adaptive driver, and Gauss-Legendre nodes of arbitrary order.

use std::f64::consts::PI;

/// Kronrod abscissae on [-1, 1]; odd indices are the embedded Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Outcome of one Gauss-Kronrod panel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PanelEstimate {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|` by the same rule, used for the round-off floor.
    pub abs_value: f64,
    /// Set when the integrand returned a non-finite value; holds the abscissa.
    pub non_finite_at: Option<f64>,
}

/// Applies the 21-point Kronrod rule on [a, b] with the QUADPACK error heuristic.
pub(crate) fn gk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> PanelEstimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut bad = None;
    let mut eval = |x: f64| {
        let y = f(x);
        if !y.is_finite() && bad.is_none() {
            bad = Some(x);
        }
        y
    };

    let fc = eval(center);
    let mut res_g = 0.0;
    let mut res_k = WGK21[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK21[jtw];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG10[j] * (f1 + f2);
        res_k += WGK21[jtw] * (f1 + f2);
        res_abs += WGK21[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK21[jtwm1];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK21[jtwm1] * (f1 + f2);
        res_abs += WGK21[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK21[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    PanelEstimate { value, error, abs_value: res_abs, non_finite_at: bad }
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
///
/// Newton iteration on the three-term Legendre recurrence; accurate to a few
/// ulps for the orders used here (up to several hundred points).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule over consecutive breakpoints, with each
/// panel graded toward both of its ends by `s = a + (b - a)(3x^2 - 2x^3)`.
///
/// The grading turns endpoint behavior like `(b - s)^p` into something
/// polynomial-friendly, so kernels whose kinks sit on the breakpoints keep
/// spectral accuracy. Returns `(abscissa, weight, panel_index)` triples.
pub fn graded_composite_rule(breaks: &[f64], points_per_panel: usize) -> Vec<(f64, f64, usize)> {
    let (x, w) = gauss_legendre(points_per_panel);
    let mut out = Vec::with_capacity(breaks.len().saturating_sub(1) * points_per_panel);
    for (panel, pair) in breaks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let width = b - a;
        for (xi, wi) in x.iter().zip(&w) {
            let y = 0.5 * (xi + 1.0);
            let g = y * y * (3.0 - 2.0 * y);
            let dg = 6.0 * y * (1.0 - y);
            out.push((a + width * g, 0.5 * wi * width * dg, panel));
        }
    }
    out
}

/// Gauss-Legendre rule for `[start, inf)` through `s = start / (1 - y)`.
///
/// Integrands decaying like `s^-2` or faster become bounded in `y`.
pub fn mapped_tail_rule(start: f64, points: usize) -> Vec<(f64, f64)> {
    assert!(start > 0.0, "tail rule needs a positive start");
    let (x, w) = gauss_legendre(points);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let y = 0.5 * (xi + 1.0);
            let s = start / (1.0 - y);
            (s, 0.5 * wi * start / ((1.0 - y) * (1.0 - y)))
        })
        .collect()
}
