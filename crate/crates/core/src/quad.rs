//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive bisection on the interval with the largest error estimate until
/// the total estimate is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = kronrod(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut value = v;
    let mut error = e;
    loop {
        if !(value.is_finite() && error.is_finite()) {
            return Err(Error::Quadrature(format!("[{a}, {b}]: non-finite estimate {value}")));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "[{a}, {b}]: estimate {value:.6e} with error {error:.3e} after {} intervals",
                pieces.len()
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (l, r, pv, pe) = pieces.swap_remove(idx);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            return Err(Error::Quadrature(format!(
                "[{a}, {b}]: interval near {m:e} cannot be subdivided further"
            )));
        }
        let (v1, e1) = kronrod(&f, l, m);
        let (v2, e2) = kronrod(&f, m, r);
        value += v1 + v2 - pv;
        error += e1 + e2 - pe;
        pieces.push((l, m, v1, e1));
        pieces.push((m, r, v2, e2));
    }
    // Re-sum to shed the rounding drift of the incremental updates.
    let value = pieces.iter().map(|p| p.2).sum();
    let error = pieces.iter().map(|p| p.3).sum();
    Ok(Integral { value, error })
}

/// `∫_a^∞ f(x) dx` through the map `x = a + (1-s)/s`, `s ∈ (0, 1]`.
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> f64,
    a: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - s) / s;
            f(x) / (s * s)
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_and_singular_integrands() {
        let r = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-12, 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let r = integrate_to_infinity(|x| 1.0 / (1.0 + x), 0.0, 1e-10, 0.0);
        assert!(r.is_err(), "{r:?}");
    }
}
