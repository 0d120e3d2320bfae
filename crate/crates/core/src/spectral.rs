//! Fourier–Walsh spectrum, spectral sample and the closed-form noise quantities.
//!
//! Characters use `χ_i(ω) = −1` when `ω_i = 1` and `+1` when `ω_i = 0`, so
//! `f̂(S) = E[f χ_S]` is the unnormalized Walsh–Hadamard transform of the
//! truth table divided by `2^n`.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::bits::SubsetMask;
use crate::boolean::BooleanFunction;
use crate::error::{invalid, probability, Error, Result};

/// All `2^n` coefficients `f̂(S)`, indexed by subset mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    n: usize,
    coefficients: Vec<f64>,
}

/// A draw of the spectral sample: `P(S) = f̂(S)²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralSample {
    pub subset: SubsetMask,
}

/// In-place Walsh–Hadamard butterfly, `O(n 2^n)`.
pub fn walsh_hadamard(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Exact spectrum of a tabulated function. The butterfly runs on integers
/// held in `f64` (exact below 2^53) and divides by `2^n` once at the end, so
/// every coefficient is an exact dyadic rational.
pub fn transform(f: &BooleanFunction) -> Result<Spectrum> {
    let t = f.table_for("transform")?;
    let mut data: Vec<f64> = t.iter().map(|&v| v as f64).collect();
    walsh_hadamard(&mut data);
    let scale = (f.n() as f64).exp2();
    for x in data.iter_mut() {
        *x /= scale;
    }
    Ok(Spectrum {
        n: f.n(),
        coefficients: data,
    })
}

impl Spectrum {
    /// Wrap raw coefficients (length must be a power of two, `2^n`).
    pub fn from_coefficients(n: usize, coefficients: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 30 || coefficients.len() != 1usize << n {
            return Err(invalid(format!(
                "spectrum for n = {n} needs 2^n coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { n, coefficients })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `f̂(S)` for a subset given as a `u64` mask.
    #[inline]
    pub fn coefficient(&self, mask: u64) -> f64 {
        self.coefficients[mask as usize]
    }

    /// `2^n f̂(S)`, an integer for spectra of ±1 tables.
    pub fn scaled_coefficient(&self, mask: u64) -> i64 {
        (self.coefficients[mask as usize] * (self.n as f64).exp2()).round() as i64
    }

    fn subset_mask(&self, s: &SubsetMask) -> Result<u64> {
        s.check_width(self.n)?;
        Ok(s.mask().expect("spectrum width fits a mask"))
    }

    /// `Σ_S f̂(S)²`.
    pub fn total_mass(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// Reconstruct the function values `f(ω) = Σ_S f̂(S) χ_S(ω)`.
    pub fn inverse(&self) -> Vec<f64> {
        let mut data = self.coefficients.clone();
        walsh_hadamard(&mut data);
        data
    }

    /// Back to a Boolean function; fails unless the values are exactly ±1.
    pub fn inverse_function(&self) -> Result<BooleanFunction> {
        let values = self.inverse();
        let table = values
            .iter()
            .map(|&v| {
                if v == 1.0 {
                    Ok(1)
                } else if v == -1.0 {
                    Ok(-1)
                } else {
                    Err(invalid(format!("inverse value {v} is not ±1")))
                }
            })
            .collect::<Result<Vec<i8>>>()?;
        BooleanFunction::from_table(self.n, table)
    }

    /// `Σ_{|S|=k} f̂(S)²`.
    pub fn level_energy(&self, k: usize) -> Result<f64> {
        if k > self.n {
            return Err(Error::OutOfRange {
                what: "level",
                detail: format!("{k} > n = {}", self.n),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(m, _)| m.count_ones() as usize == k)
            .map(|(_, c)| c * c)
            .sum())
    }

    /// All level energies `0..=n`.
    pub fn level_energies(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (m, c) in self.coefficients.iter().enumerate() {
            out[m.count_ones() as usize] += c * c;
        }
        out
    }

    /// `E[f(ω)f(ω^ε)] − E[f]² = Σ_{S≠∅} (1−ε)^{|S|} f̂(S)²`.
    pub fn noise_correlation(&self, eps: f64) -> Result<f64> {
        probability("ε", eps)?;
        let levels = self.level_energies();
        Ok(levels
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, e)| (1.0 - eps).powi(k as i32) * e)
            .sum())
    }

    /// Draw `S` with probability `f̂(S)²` (∅ included with its mass).
    pub fn sample_spectral<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpectralSample> {
        let sampler = self.spectral_sampler()?;
        Ok(sampler.sample(rng))
    }

    /// A reusable sampler for repeated spectral-sample draws.
    pub fn spectral_sampler(&self) -> Result<SpectralSampler> {
        let weights: Vec<f64> = self.coefficients.iter().map(|c| c * c).collect();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| invalid(format!("spectral weights unusable: {e}")))?;
        Ok(SpectralSampler { n: self.n, index })
    }

    /// Spectrum of `f ∘ σ_B`: `f̂(S) ↦ (−1)^{|S∩B|} f̂(S)`.
    pub fn flip_conjugate(&self, b: &SubsetMask) -> Result<Spectrum> {
        let bm = self.subset_mask(b)?;
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(m, &c)| if (m as u64 & bm).count_ones() % 2 == 1 { -c } else { c })
            .collect();
        Ok(Spectrum {
            n: self.n,
            coefficients,
        })
    }

    /// `E[f(ω) f(ω^S)] = Σ_{S′∩S=∅} f̂(S′)²`, where `ω^S` rerandomizes `S`.
    pub fn disjoint_mass(&self, s: &SubsetMask) -> Result<f64> {
        let sm = self.subset_mask(s)? as usize;
        Ok(self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(m, _)| m & sm == 0)
            .map(|(_, c)| c * c)
            .sum())
    }

    /// `Σ_{S ⊇ P} f̂(S)²`.
    pub fn superset_mass(&self, p: &SubsetMask) -> Result<f64> {
        let pm = self.subset_mask(p)? as usize;
        Ok(self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(m, _)| m & pm == pm)
            .map(|(_, c)| c * c)
            .sum())
    }

    /// `Σ_{S ⊇ P} (2^n f̂(S))²` in exact integer arithmetic.
    pub fn superset_mass_scaled(&self, p: &SubsetMask) -> Result<i128> {
        let pm = self.subset_mask(p)?;
        Ok((0..self.coefficients.len() as u64)
            .filter(|m| m & pm == pm)
            .map(|m| {
                let c = self.scaled_coefficient(m) as i128;
                c * c
            })
            .sum())
    }

    /// CSV with columns `mask` (hex), `size`, `coefficient`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mask,size,coefficient")?;
        for (m, c) in self.coefficients.iter().enumerate() {
            writeln!(w, "{m:#x},{},{c:e}", m.count_ones())?;
        }
        Ok(())
    }
}

/// Precomputed sampler over `f̂(S)²`.
pub struct SpectralSampler {
    n: usize,
    index: WeightedIndex<f64>,
}

impl SpectralSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpectralSample {
        let m = self.index.sample(rng) as u64;
        SpectralSample {
            subset: SubsetMask::from_mask(self.n, m).expect("index below 2^n"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Configuration;
    use crate::boolean::{FunctionSpec, Support};
    use crate::rng;

    // Independent oracle: f̂(S) = 2^{-n} Σ_ω f(ω) χ_S(ω) by direct summation.
    fn brute_coefficients(f: &BooleanFunction) -> Vec<f64> {
        let n = f.n();
        (0..1u64 << n)
            .map(|s| {
                let mut acc = 0.0;
                for m in 0..1u64 << n {
                    let chi = if (m & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += f.eval(&Configuration::from_mask(n, m).unwrap()) as f64 * chi;
                }
                acc / (1u64 << n) as f64
            })
            .collect()
    }

    fn build(spec: FunctionSpec) -> BooleanFunction {
        spec.build().unwrap()
    }

    #[test]
    fn transform_examples() {
        let par = build(FunctionSpec::Parity { n: 3, support: Support::All });
        let sp = transform(&par).unwrap();
        for m in 0..8 {
            assert_eq!(sp.coefficient(m), if m == 7 { 1.0 } else { 0.0 });
        }
        let dic = build(FunctionSpec::Dictator { n: 3, bit: 0 });
        let sp = transform(&dic).unwrap();
        // f = +1 iff ω_1 = 1, so f = −χ_{1}
        assert_eq!(sp.coefficient(1).abs(), 1.0);
        assert_eq!(sp.total_mass(), 1.0);
    }

    #[test]
    fn majority_three_against_brute_force() {
        let maj = build(FunctionSpec::Majority { n: 3 });
        let oracle = brute_coefficients(&maj);
        // oracle: singletons −1/2 (a one at i pushes towards +1 while χ_i = −1), triple +1/2
        assert_eq!(oracle, vec![0.0, -0.5, -0.5, 0.0, -0.5, 0.0, 0.0, 0.5]);
        assert_eq!(transform(&maj).unwrap().coefficients(), &oracle[..]);
    }

    #[test]
    fn transform_matches_brute_force_across_zoo() {
        for spec in [
            FunctionSpec::Tribes { width: 2, tribes: 3 },
            FunctionSpec::CountBand { n: 7, width: 2, centered: true },
            FunctionSpec::FlippedPairs { edges: 3 },
            FunctionSpec::Parity { n: 6, support: Support::FirstHalf },
        ] {
            let f = build(spec);
            assert_eq!(transform(&f).unwrap().coefficients(), &brute_coefficients(&f)[..]);
        }
    }

    #[test]
    fn level_energy_examples() {
        let par = transform(&build(FunctionSpec::Parity { n: 4, support: Support::All })).unwrap();
        assert_eq!(par.level_energy(4).unwrap(), 1.0);
        assert_eq!(par.level_energy(2).unwrap(), 0.0);
        assert!(par.level_energy(5).is_err());
        let maj = transform(&build(FunctionSpec::Majority { n: 3 })).unwrap();
        assert_eq!(maj.level_energy(1).unwrap(), 0.75);
    }

    #[test]
    fn noise_correlation_examples() {
        let par = transform(&build(FunctionSpec::Parity { n: 4, support: Support::All })).unwrap();
        assert_eq!(par.noise_correlation(0.5).unwrap(), 0.0625);
        let maj = transform(&build(FunctionSpec::Majority { n: 3 })).unwrap();
        assert_eq!(maj.noise_correlation(0.5).unwrap(), 0.40625);
        let t = transform(&build(FunctionSpec::Tribes { width: 2, tribes: 2 })).unwrap();
        let mean = t.coefficient(0);
        assert!((t.noise_correlation(0.0).unwrap() - (1.0 - mean * mean)).abs() < 1e-15);
        assert!(t.noise_correlation(-0.1).is_err());
    }

    #[test]
    fn noise_correlation_is_nonnegative_and_nonincreasing() {
        let sp = transform(&build(FunctionSpec::IteratedMajority { levels: 2 })).unwrap();
        let vals: Vec<f64> = (0..=20).map(|i| sp.noise_correlation(i as f64 / 20.0).unwrap()).collect();
        assert!(vals.iter().all(|&v| v >= 0.0));
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sampling_point_masses() {
        let mut r = rng::stream(3, 0);
        let dic = transform(&build(FunctionSpec::Dictator { n: 4, bit: 0 })).unwrap();
        let par = transform(&build(FunctionSpec::Parity { n: 4, support: Support::All })).unwrap();
        for _ in 0..100 {
            assert_eq!(dic.sample_spectral(&mut r).unwrap().subset.mask(), Some(1));
            assert_eq!(par.sample_spectral(&mut r).unwrap().subset.mask(), Some(15));
        }
    }

    #[test]
    fn majority_spectral_sample_frequencies() {
        let sp = transform(&build(FunctionSpec::Majority { n: 3 })).unwrap();
        let sampler = sp.spectral_sampler().unwrap();
        let mut r = rng::stream(11, 0);
        let draws = 100_000;
        let mut counts = [0u32; 8];
        for _ in 0..draws {
            counts[sampler.sample(&mut r).subset.mask().unwrap() as usize] += 1;
        }
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for m in [1, 2, 4, 7] {
            assert!((counts[m] as f64 - 0.25 * draws as f64).abs() < 3.0 * sigma, "{counts:?}");
        }
        assert_eq!(counts[0] + counts[3] + counts[5] + counts[6], 0);
    }

    #[test]
    fn flip_conjugate_matches_transform_of_flipped_function() {
        let d = build(FunctionSpec::Dictator { n: 3, bit: 0 });
        let sp = transform(&d).unwrap();
        assert_eq!(sp.flip_conjugate(&SubsetMask::zeros(3).unwrap()).unwrap(), sp);
        let b1 = SubsetMask::from_indices(3, [0]).unwrap();
        assert_eq!(sp.flip_conjugate(&b1).unwrap().coefficient(1), -sp.coefficient(1));

        // pair-band on 3 isolated edges, flipped at the second endpoints
        let f = build(FunctionSpec::CountBand { n: 6, width: 2, centered: false });
        let b = SubsetMask::from_indices(6, [1, 3, 5]).unwrap();
        let direct = transform(&build(FunctionSpec::FlippedPairs { edges: 3 })).unwrap();
        let conj = transform(&f).unwrap().flip_conjugate(&b).unwrap();
        assert_eq!(direct, conj);
        assert!((conj.total_mass() - 1.0).abs() < 1e-15);
        assert!(sp.flip_conjugate(&SubsetMask::zeros(4).unwrap()).is_err());
    }

    #[test]
    fn disjoint_mass_examples() {
        let f = build(FunctionSpec::Tribes { width: 2, tribes: 3 });
        let sp = transform(&f).unwrap();
        assert!((sp.disjoint_mass(&SubsetMask::zeros(6).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        let mean = f.mean().unwrap();
        assert_eq!(sp.disjoint_mass(&SubsetMask::ones(6).unwrap()).unwrap(), mean * mean);
        let mut r = rng::stream(5, 0);
        for _ in 0..50 {
            let t2 = SubsetMask::uniform(6, &mut r).unwrap();
            let t1 = t2.intersection(&SubsetMask::uniform(6, &mut r).unwrap()).unwrap();
            assert!(sp.disjoint_mass(&t1).unwrap() >= sp.disjoint_mass(&t2).unwrap());
        }
    }

    #[test]
    fn inverse_round_trip_and_csv() {
        let f = build(FunctionSpec::IteratedMajority { levels: 2 });
        let sp = transform(&f).unwrap();
        assert_eq!(sp.inverse_function().unwrap().table(), f.table());
        let mut out = Vec::new();
        transform(&build(FunctionSpec::Dictator { n: 2, bit: 1 })).unwrap().write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mask,size,coefficient");
        assert_eq!(lines[3], "0x2,1,-1e0");
    }

    #[test]
    fn predicate_functions_have_no_transform() {
        let f = BooleanFunction::from_predicate(40, |w| w.get(0)).unwrap();
        assert!(matches!(transform(&f), Err(Error::NotTabulated(_))));
    }
}
