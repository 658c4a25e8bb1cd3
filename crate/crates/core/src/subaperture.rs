//! Receive-aperture splitting, sub-aperture cross-correlation (ASAP), the
//! phase-sign sidelobe suppressor, ASAP on FMAS images, and SAMAS.

use std::fmt;
use std::ops::Range;

use num_traits::Zero;

use crate::acquisition::ImageGrid;
use crate::beamformer::{AnalyticImageStack, ApertureMask, FrameSeries};
use crate::compounding::{check_ensemble, coherent_compound, fmas_compound, FmasVariant, PixelValue, PowerImage};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// `k` ones followed by `k` zeros, repeated across the aperture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AperturePattern {
    run_length: usize,
}

impl AperturePattern {
    pub const ALTERNATE: Self = Self { run_length: 1 };
    pub const PAIRS: Self = Self { run_length: 2 };
    pub const QUADS: Self = Self { run_length: 4 };

    pub fn new(run_length: usize) -> Result<Self> {
        if run_length == 0 {
            return Err(Error::invalid("aperture pattern run length must be ≥ 1"));
        }
        Ok(Self { run_length })
    }

    pub fn run_length(&self) -> usize {
        self.run_length
    }

    /// `[1 0]`, `[1 1 0 0]`, ...
    pub fn name(&self) -> String {
        let k = self.run_length;
        let digits: Vec<&str> = std::iter::repeat_n("1", k).chain(std::iter::repeat_n("0", k)).collect();
        format!("[{}]", digits.join(" "))
    }

    /// Accepts a bare run length (`2`), a bracketed pattern (`[1 1 0 0]`) or
    /// its compact form (`1100`).
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Ok(k) = t.parse::<usize>() {
            if !t.chars().all(|c| c == '0' || c == '1') || t.len() < 2 {
                return Self::new(k);
            }
        }
        let digits: String = t.chars().filter(|c| !matches!(c, '[' | ']' | ' ' | ',')).collect();
        let bad = || Error::invalid(format!("unrecognised aperture pattern `{s}`"));
        if digits.is_empty() || !digits.len().is_multiple_of(2) {
            return Err(bad());
        }
        let k = digits.len() / 2;
        if digits[..k].chars().all(|c| c == '1') && digits[k..].chars().all(|c| c == '0') {
            Self::new(k)
        } else {
            Err(bad())
        }
    }
}

impl Default for AperturePattern {
    fn default() -> Self {
        Self::ALTERNATE
    }
}

impl fmt::Display for AperturePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Splits `num_elements` into two disjoint interleaved masks.
///
/// Complete `2k` blocks follow the pattern. Elements past the last complete
/// block are dealt to the two masks in turn, starting with the mask that
/// currently holds fewer elements.
pub fn split_aperture(num_elements: usize, pattern: AperturePattern) -> Result<(ApertureMask, ApertureMask)> {
    let k = pattern.run_length;
    if num_elements < 2 * k {
        return Err(Error::invalid(format!(
            "aperture of {num_elements} elements is smaller than one {} block",
            pattern.name()
        )));
    }
    let full = num_elements / (2 * k) * (2 * k);
    let mut first: Vec<bool> = (0..num_elements).map(|i| (i / k).is_multiple_of(2)).collect();
    // complete blocks are balanced, so the tail alternates starting with mask 1
    for (j, slot) in first[full..].iter_mut().enumerate() {
        *slot = j % 2 == 0;
    }
    let m1 = ApertureMask::new(first);
    let m2 = m1.complement();
    Ok((m1, m2))
}

/// Complex sub-aperture correlation per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationImage<T> {
    pub grid: ImageGrid,
    pub values: Vec<Cplx<T>>,
    pub ensemble_length: usize,
}

impl<T: Real> CorrelationImage<T> {
    pub fn new(grid: ImageGrid, values: Vec<Cplx<T>>, ensemble_length: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!("{} values for {} pixels", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::numerical("correlation image contains non-finite values"));
        }
        Ok(Self { grid, values, ensemble_length })
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v.conj()).collect(), ensemble_length: self.ensemble_length }
    }
}

/// Per-frame products `y1(t) · conj(y2(t))` over the ensemble frames.
pub fn frame_products<T: Real, V: PixelValue<T>>(
    y1: &FrameSeries<V>,
    y2: &FrameSeries<V>,
    ensemble: Range<usize>,
) -> Result<FrameSeries<Cplx<T>>> {
    if y1.grid != y2.grid {
        return Err(Error::shape("sub-aperture images are on different grids"));
    }
    check_ensemble(y1.frames().min(y2.frames()), &ensemble)?;
    let n = ensemble.len();
    let mut values = Vec::with_capacity(n * y1.grid.len());
    for f in ensemble {
        values.extend(y1.frame(f).iter().zip(y2.frame(f)).map(|(&a, &b)| a.mul_conj(b)));
    }
    FrameSeries::new(y1.grid, n, values)
}

/// Pixel-wise mean over all frames of `products`, in frame order.
pub fn ensemble_mean<T: Real>(products: &FrameSeries<Cplx<T>>) -> Result<CorrelationImage<T>> {
    let n = products.frames();
    if n == 0 {
        return Err(Error::invalid("empty ensemble"));
    }
    let mut acc = vec![Cplx::<T>::zero(); products.grid.len()];
    for f in 0..n {
        for (r, &p) in acc.iter_mut().zip(products.frame(f)) {
            *r += p;
        }
    }
    let inv = T::one() / T::of_usize(n);
    CorrelationImage::new(products.grid, acc.into_iter().map(|r| r * inv).collect(), n)
}

/// Pixel-wise `(1/N) Σ y1(t) · conj(y2(t))` over the ensemble frames.
pub fn asap_correlate<T: Real, V: PixelValue<T>>(
    y1: &FrameSeries<V>,
    y2: &FrameSeries<V>,
    ensemble: Range<usize>,
) -> Result<CorrelationImage<T>> {
    ensemble_mean(&frame_products(y1, y2, ensemble)?)
}

/// How a correlation image is turned into power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AsapPowerMode {
    /// `max(Re R, 0)`.
    #[default]
    RealPart,
    /// `|R|`.
    Magnitude,
}

pub fn asap_power<T: Real>(r: &CorrelationImage<T>) -> PowerImage<T> {
    asap_power_with(r, AsapPowerMode::RealPart)
}

pub fn asap_power_with<T: Real>(r: &CorrelationImage<T>, mode: AsapPowerMode) -> PowerImage<T> {
    let values = r
        .values
        .iter()
        .map(|v| match mode {
            AsapPowerMode::RealPart => v.re.max(T::zero()),
            AsapPowerMode::Magnitude => v.norm(),
        })
        .collect();
    PowerImage { grid: r.grid, values, ensemble_length: r.ensemble_length }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuppressorMode {
    /// 1 where `Re R > 0`, else 0.
    #[default]
    Binary,
    /// `max(0, cos(arg R))`.
    Smooth,
}

impl SuppressorMode {
    pub fn name(&self) -> &'static str {
        match self {
            SuppressorMode::Binary => "binary",
            SuppressorMode::Smooth => "smooth",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "smooth" => Ok(Self::Smooth),
            _ => Err(Error::invalid(format!("unknown suppressor mode `{s}`"))),
        }
    }
}

/// Per-pixel weights in `[0, 1]` derived from the correlation phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SuppressorMask<T> {
    pub grid: ImageGrid,
    pub weights: Vec<T>,
    pub mode: SuppressorMode,
}

impl<T: Real> SuppressorMask<T> {
    /// Fraction of pixels with a non-zero weight.
    pub fn pass_fraction(&self) -> f64 {
        self.weights.iter().filter(|w| **w > T::zero()).count() as f64 / self.weights.len().max(1) as f64
    }
}

#[inline]
fn suppressor_weight<T: Real>(r: Cplx<T>, mode: SuppressorMode) -> T {
    if r.re == T::zero() && r.im == T::zero() {
        return T::zero();
    }
    match mode {
        SuppressorMode::Binary => {
            if r.re > T::zero() { T::one() } else { T::zero() }
        }
        SuppressorMode::Smooth => (r.re / r.norm()).max(T::zero()).min(T::one()),
    }
}

pub fn sidelobe_suppressor<T: Real>(r: &CorrelationImage<T>, mode: SuppressorMode) -> SuppressorMask<T> {
    SuppressorMask { grid: r.grid, weights: r.values.iter().map(|&v| suppressor_weight(v, mode)).collect(), mode }
}

/// Pixel-wise `weights × power`.
pub fn apply_suppressor<T: Real>(mask: &SuppressorMask<T>, power: &PowerImage<T>) -> Result<PowerImage<T>> {
    if mask.grid != power.grid {
        return Err(Error::shape("suppressor and power image are on different grids"));
    }
    let values = mask.weights.iter().zip(&power.values).map(|(&w, &p)| w * p).collect();
    Ok(PowerImage { grid: power.grid, values, ensemble_length: power.ensemble_length })
}

fn check_pair<T: Real>(s1: &AnalyticImageStack<T>, s2: &AnalyticImageStack<T>) -> Result<()> {
    if !s1.same_layout(s2) {
        return Err(Error::shape("sub-aperture stacks differ in grid, angles or frame count"));
    }
    Ok(())
}

/// FMAS each sub-aperture stack over angles, then correlate the two real
/// frame sequences. The result is real.
pub fn asap_fmas<T: Real>(
    s1: &AnalyticImageStack<T>,
    s2: &AnalyticImageStack<T>,
    variant: FmasVariant,
    ensemble: Range<usize>,
) -> Result<CorrelationImage<T>> {
    check_pair(s1, s2)?;
    let f1 = fmas_compound(s1, variant)?;
    let f2 = fmas_compound(s2, variant)?;
    asap_correlate(&f1, &f2, ensemble)
}

/// ASAP correlation of the coherently compounded sub-aperture stacks.
pub fn asap_compound<T: Real>(
    s1: &AnalyticImageStack<T>,
    s2: &AnalyticImageStack<T>,
    ensemble: Range<usize>,
) -> Result<CorrelationImage<T>> {
    check_pair(s1, s2)?;
    let c1 = coherent_compound(s1)?;
    let c2 = coherent_compound(s2)?;
    asap_correlate(&c1, &c2, ensemble)
}

/// Intermediate products of [`samas`].
#[derive(Debug, Clone)]
pub struct SamasParts<T> {
    pub asap: CorrelationImage<T>,
    pub mask: SuppressorMask<T>,
    pub asap_fmas: CorrelationImage<T>,
    pub power: PowerImage<T>,
}

pub fn samas_detailed<T: Real>(
    s1: &AnalyticImageStack<T>,
    s2: &AnalyticImageStack<T>,
    variant: FmasVariant,
    ensemble: Range<usize>,
    mode: SuppressorMode,
) -> Result<SamasParts<T>> {
    let asap = asap_compound(s1, s2, ensemble.clone())?;
    let mask = sidelobe_suppressor(&asap, mode);
    let af = asap_fmas(s1, s2, variant, ensemble)?;
    let power = apply_suppressor(&mask, &asap_power(&af))?;
    Ok(SamasParts { asap, mask, asap_fmas: af, power })
}

/// ASAP-FMAS power gated by the suppressor from the plain ASAP phase.
pub fn samas<T: Real>(
    s1: &AnalyticImageStack<T>,
    s2: &AnalyticImageStack<T>,
    variant: FmasVariant,
    ensemble: Range<usize>,
    mode: SuppressorMode,
) -> Result<PowerImage<T>> {
    Ok(samas_detailed(s1, s2, variant, ensemble, mode)?.power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn grid(n: usize) -> ImageGrid {
        ImageGrid::new(0.0, 1.0, 0.0, 1.0, n, 1).unwrap()
    }

    fn series(n_px: usize, frames: Vec<Vec<Cplx<f64>>>) -> FrameSeries<Cplx<f64>> {
        assert!(frames.iter().all(|f| f.len() == n_px));
        FrameSeries::from_frames(grid(n_px), frames).unwrap()
    }

    fn noise(rng: &mut ChaCha8Rng, frames: usize, px: usize) -> FrameSeries<Cplx<f64>> {
        let v = (0..frames * px)
            .map(|_| Cplx::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        FrameSeries::new(grid(px), frames, v).unwrap()
    }

    #[test]
    fn split_examples() {
        let (a, b) = split_aperture(8, AperturePattern::ALTERNATE).unwrap();
        assert_eq!(a.active_elements(), vec![0, 2, 4, 6]);
        assert_eq!(b.active_elements(), vec![1, 3, 5, 7]);
        let (a, b) = split_aperture(8, AperturePattern::PAIRS).unwrap();
        assert_eq!(a.active_elements(), vec![0, 1, 4, 5]);
        assert_eq!(b.active_elements(), vec![2, 3, 6, 7]);
        assert!(split_aperture(2, AperturePattern::QUADS).is_err());
        let (a, b) = split_aperture(11, AperturePattern::QUADS).unwrap();
        assert_eq!(a.active_elements(), vec![0, 1, 2, 3, 8, 10]);
        assert_eq!(b.count(), 5);
    }

    #[test]
    fn pattern_names_and_parsing() {
        assert_eq!(AperturePattern::ALTERNATE.name(), "[1 0]");
        assert_eq!(AperturePattern::QUADS.to_string(), "[1 1 1 1 0 0 0 0]");
        assert_eq!(AperturePattern::parse("[1 1 0 0]").unwrap(), AperturePattern::PAIRS);
        assert_eq!(AperturePattern::parse("10").unwrap(), AperturePattern::ALTERNATE);
        assert_eq!(AperturePattern::parse("4").unwrap(), AperturePattern::QUADS);
        assert_eq!(AperturePattern::parse("11110000").unwrap(), AperturePattern::QUADS);
        assert!(AperturePattern::parse("[1 0 1 0]").is_err());
        assert!(AperturePattern::parse("0").is_err());
    }

    #[test]
    fn self_and_anti_correlation() {
        let y = series(2, vec![vec![Cplx::new(1.0, 2.0), Cplx::new(-3.0, 0.5)], vec![Cplx::new(0.0, 1.0), Cplx::new(2.0, 2.0)]]);
        let r = asap_correlate(&y, &y, 0..2).unwrap();
        let pd = crate::compounding::power_doppler::<f64, _>(&y, 0..2).unwrap();
        for (v, p) in r.values.iter().zip(&pd.values) {
            assert!(v.im.abs() < 1e-15 && (v.re - p).abs() < 1e-12 && v.re >= 0.0);
        }
        let neg = y.map(|v| -v);
        let r = asap_correlate(&y, &neg, 0..2).unwrap();
        for v in &r.values {
            assert!(v.re <= 0.0 && v.im.abs() < 1e-15);
            assert!((v.arg().abs() - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_errors() {
        let a = series(2, vec![vec![Cplx::zero(); 2]]);
        let b = series(3, vec![vec![Cplx::zero(); 3]]);
        assert!(matches!(asap_correlate::<f64, _>(&a, &b, 0..1), Err(Error::Shape(_))));
        assert!(asap_correlate::<f64, _>(&a, &a, 0..0).is_err());
    }

    #[test]
    fn independent_noise_decorrelates_with_ensemble() {
        // per-pixel |R| averaged over repeated seeds
        let px = 400;
        let seeds = 8;
        let mut short = vec![0.0; px];
        let mut long = vec![0.0; px];
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = noise(&mut rng, 400, px);
            let b = noise(&mut rng, 400, px);
            let r25 = asap_correlate::<f64, _>(&a, &b, 0..25).unwrap();
            let r400 = asap_correlate::<f64, _>(&a, &b, 0..400).unwrap();
            for p in 0..px {
                short[p] += r25.values[p].norm() / seeds as f64;
                long[p] += r400.values[p].norm() / seeds as f64;
            }
        }
        let smaller = long.iter().zip(&short).filter(|(l, s)| l < s).count();
        assert!(smaller as f64 >= 0.95 * px as f64, "{smaller}/{px}");
        let ratio = short.iter().sum::<f64>() / long.iter().sum::<f64>();
        // 1/√N scaling: √(400/25) = 4
        assert!((ratio / 4.0 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn power_and_suppressor_examples() {
        let r = CorrelationImage::new(
            grid(5),
            vec![Cplx::new(25.0, 0.0), Cplx::new(-3.0, 0.0), Cplx::new(3.0, 4.0), Cplx::new(1.0, 1.0), Cplx::zero()],
            1,
        )
        .unwrap();
        assert_eq!(asap_power(&r).values, vec![25.0, 0.0, 3.0, 1.0, 0.0]);
        assert_eq!(asap_power_with(&r, AsapPowerMode::Magnitude).values[2], 5.0);
        let b = sidelobe_suppressor(&r, SuppressorMode::Binary);
        assert_eq!(b.weights, vec![1.0, 0.0, 1.0, 1.0, 0.0]);
        let s = sidelobe_suppressor(&r, SuppressorMode::Smooth);
        assert_eq!(s.weights[0], 1.0);
        assert_eq!(s.weights[1], 0.0);
        assert!((s.weights[3] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(s.weights[4], 0.0);
    }

    fn stack(values: &[Vec<Vec<f64>>]) -> AnalyticImageStack<f64> {
        let a = values[0].len();
        AnalyticImageStack::from_real(grid(values[0][0].len()), (0..a).map(|i| i as f64 * 0.01).collect(), values).unwrap()
    }

    #[test]
    fn asap_fmas_examples() {
        let s = stack(&[vec![vec![1.0], vec![2.0]]]);
        let r = asap_fmas(&s, &s, FmasVariant::AsPrinted, 0..1).unwrap();
        assert_eq!(r.values[0], Cplx::new(4.0, 0.0));
        // opposite sub-apertures become positively correlated after FMAS
        let p = stack(&[vec![vec![1.0], vec![-1.0]]]);
        let n = p.map(|v| -v);
        let r = asap_fmas(&p, &n, FmasVariant::AsPrinted, 0..1).unwrap();
        assert_eq!(r.values[0], Cplx::new(1.0, 0.0));
        // while the coherent correlation of the same pair is what SAMAS gates on
        let q = stack(&[vec![vec![1.0], vec![0.5]]]);
        let nq = q.map(|v| -v);
        assert!(asap_fmas(&q, &nq, FmasVariant::AsPrinted, 0..1).unwrap().values[0].re > 0.0);
        assert_eq!(samas(&q, &nq, FmasVariant::AsPrinted, 0..1, SuppressorMode::Binary).unwrap().values[0], 0.0);
        assert_eq!(samas(&q, &q, FmasVariant::AsPrinted, 0..1, SuppressorMode::Binary).unwrap().values[0], 0.25);
    }

    #[test]
    fn samas_layout_mismatch() {
        let a = stack(&[vec![vec![1.0], vec![2.0]]]);
        let b = stack(&[vec![vec![1.0], vec![2.0], vec![3.0]]]);
        assert!(matches!(samas(&a, &b, FmasVariant::SignedSqrt, 0..1, SuppressorMode::Binary), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn split_is_disjoint_cover(n in 2usize..300, k in 1usize..9) {
            prop_assume!(n >= 2 * k);
            let (a, b) = split_aperture(n, AperturePattern::new(k).unwrap()).unwrap();
            prop_assert_eq!(a.len(), n);
            for i in 0..n {
                prop_assert!(a.is_active(i) ^ b.is_active(i));
            }
            prop_assert!(a.count().abs_diff(b.count()) <= k);
        }

        #[test]
        fn hermitian_and_cauchy_schwarz(seed in any::<u64>(), frames in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = noise(&mut rng, frames, 6);
            let b = noise(&mut rng, frames, 6);
            let ab = asap_correlate::<f64, _>(&a, &b, 0..frames).unwrap();
            let ba = asap_correlate::<f64, _>(&b, &a, 0..frames).unwrap();
            let pa = crate::compounding::power_doppler::<f64, _>(&a, 0..frames).unwrap();
            let pb = crate::compounding::power_doppler::<f64, _>(&b, 0..frames).unwrap();
            for p in 0..6 {
                prop_assert!((ab.values[p] - ba.values[p].conj()).norm() <= 1e-12);
                let bound = pa.values[p] * pb.values[p];
                prop_assert!(ab.values[p].norm_sqr() <= bound * (1.0 + 1e-9));
            }
        }

        #[test]
        fn samas_never_exceeds_asap_fmas(seed in any::<u64>(), smooth in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |_| -> Vec<Vec<Vec<f64>>> {
                (0..4).map(|_| (0..3).map(|_| (0..5).map(|_| rng.sample(StandardNormal)).collect()).collect()).collect()
            };
            let s1 = stack(&draw(0));
            let s2 = stack(&draw(1));
            let mode = if smooth { SuppressorMode::Smooth } else { SuppressorMode::Binary };
            let parts = samas_detailed(&s1, &s2, FmasVariant::SignedSqrt, 0..4, mode).unwrap();
            let af = asap_power(&parts.asap_fmas);
            for (s, a) in parts.power.values.iter().zip(&af.values) {
                prop_assert!(*s <= *a && *s >= 0.0);
            }
            for w in &parts.mask.weights {
                prop_assert!((0.0..=1.0).contains(w));
            }
        }
    }
}
