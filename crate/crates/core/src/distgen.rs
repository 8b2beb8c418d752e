//! Standardized error laws and the shift-scale data generator.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp, Gamma, Normal, Poisson};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::simulate::Scenario;

/// A base distribution for the unstandardized errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    ChiSquare { df: f64 },
    Logistic { location: f64, scale: f64 },
    /// Shape-rate parameterization.
    Gamma { shape: f64, rate: f64 },
    Poisson { rate: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Family::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Family::ChiSquare { df } => df > 0.0 && df.is_finite(),
            Family::Logistic { location, scale } => location.is_finite() && scale > 0.0 && scale.is_finite(),
            Family::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Family::Poisson { rate } => rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid distribution parameters: {self}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Normal { mean, .. } => mean,
            Family::Exponential { rate } => 1.0 / rate,
            Family::ChiSquare { df } => df,
            Family::Logistic { location, .. } => location,
            Family::Gamma { shape, rate } => shape / rate,
            Family::Poisson { rate } => rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Normal { sd, .. } => sd * sd,
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::ChiSquare { df } => 2.0 * df,
            Family::Logistic { scale, .. } => scale * scale * PI * PI / 3.0,
            Family::Gamma { shape, rate } => shape / (rate * rate),
            Family::Poisson { rate } => rate,
        }
    }

    fn sampler(&self) -> Result<FamilySampler> {
        self.validate()?;
        let bad = |e: &dyn fmt::Display| Error::domain(format!("{self}: {e}"));
        Ok(match *self {
            Family::Normal { mean, sd } => FamilySampler::Normal(Normal::new(mean, sd).map_err(|e| bad(&e))?),
            Family::Exponential { rate } => FamilySampler::Exp(Exp::new(rate).map_err(|e| bad(&e))?),
            Family::ChiSquare { df } => FamilySampler::ChiSquare(ChiSquared::new(df).map_err(|e| bad(&e))?),
            Family::Logistic { location, scale } => FamilySampler::Logistic { location, scale },
            Family::Gamma { shape, rate } => {
                FamilySampler::Gamma(Gamma::new(shape, 1.0 / rate).map_err(|e| bad(&e))?)
            }
            Family::Poisson { rate } => FamilySampler::Poisson(Poisson::new(rate).map_err(|e| bad(&e))?),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Normal { mean, sd } => write!(f, "N({mean},{})", sd * sd),
            Family::Exponential { rate } => write!(f, "exp({rate})"),
            Family::ChiSquare { df } => write!(f, "chi2({df})"),
            Family::Logistic { location, scale } => write!(f, "Logistic({location},{scale})"),
            Family::Gamma { shape, rate } => write!(f, "Gamma({shape},{rate})"),
            Family::Poisson { rate } => write!(f, "Poi({rate})"),
        }
    }
}

#[derive(Debug, Clone)]
enum FamilySampler {
    Normal(Normal<f64>),
    Exp(Exp<f64>),
    ChiSquare(ChiSquared<f64>),
    Logistic { location: f64, scale: f64 },
    Gamma(Gamma<f64>),
    Poisson(Poisson<f64>),
}

impl FamilySampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FamilySampler::Normal(d) => d.sample(rng),
            FamilySampler::Exp(d) => d.sample(rng),
            FamilySampler::ChiSquare(d) => d.sample(rng),
            FamilySampler::Logistic { location, scale } => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                location + scale * (u / (1.0 - u)).ln()
            }
            FamilySampler::Gamma(d) => d.sample(rng),
            FamilySampler::Poisson(d) => d.sample(rng),
        }
    }
}

/// Contamination of a base law: each observation independently comes from
/// `family` with probability `fraction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outlier {
    pub family: Family,
    pub fraction: f64,
}

/// The distribution of the raw errors before standardization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorLaw {
    pub base: Family,
    pub outlier: Option<Outlier>,
}

impl ErrorLaw {
    pub fn pure(base: Family) -> Self {
        Self { base, outlier: None }
    }

    pub fn mixture(base: Family, family: Family, fraction: f64) -> Self {
        Self {
            base,
            outlier: Some(Outlier { family, fraction }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if let Some(o) = &self.outlier {
            o.family.validate()?;
            if !(o.fraction > 0.0 && o.fraction < 1.0) {
                return Err(Error::domain(format!("outlier fraction {} outside (0, 1)", o.fraction)));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match &self.outlier {
            None => self.base.mean(),
            Some(o) => (1.0 - o.fraction) * self.base.mean() + o.fraction * o.family.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.outlier {
            None => self.base.variance(),
            Some(o) => {
                let second = |f: &Family| f.variance() + f.mean() * f.mean();
                let raw = (1.0 - o.fraction) * second(&self.base) + o.fraction * second(&o.family);
                raw - self.mean() * self.mean()
            }
        }
    }

    /// `x ↦ (x - E x) / sd(x)` as `(shift, scale)` with standardized `(x - shift) / scale`.
    pub fn standardizer(&self) -> (f64, f64) {
        (self.mean(), self.variance().sqrt())
    }

    pub fn sampler(&self) -> Result<LawSampler> {
        self.validate()?;
        let (shift, scale) = self.standardizer();
        Ok(LawSampler {
            base: self.base.sampler()?,
            outlier: match &self.outlier {
                Some(o) => Some((o.family.sampler()?, o.fraction)),
                None => None,
            },
            shift,
            scale,
        })
    }
}

impl fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outlier {
            None => write!(f, "{}", self.base),
            Some(o) => {
                let pct = (o.fraction * 100.0).round();
                write!(f, "{}% {} & {}% {}", 100.0 - pct, self.base, pct, o.family)
            }
        }
    }
}

/// A prepared sampler for one standardized law.
#[derive(Debug, Clone)]
pub struct LawSampler {
    base: FamilySampler,
    outlier: Option<(FamilySampler, f64)>,
    shift: f64,
    scale: f64,
}

impl LawSampler {
    /// One raw draw and whether it came from the outlier component.
    pub fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        match &self.outlier {
            Some((family, q)) if rng.random::<f64>() < *q => (family.draw(rng), true),
            _ => (self.base.draw(rng), false),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.draw_raw(rng).0 - self.shift) / self.scale
    }
}

/// A reproducible random stream identified by a master seed and a stream id.
/// Distinct ids select disjoint ChaCha8 streams under the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Stream whose id is a hash of several indices.
    pub fn keyed(master_seed: u64, ids: &[u64]) -> Self {
        Self::new(master_seed, derive_key(ids))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit hash of a sequence of indices.
pub fn derive_key(ids: &[u64]) -> u64 {
    ids.iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &id| splitmix64(h ^ splitmix64(id)))
}

/// `n` i.i.d. standardized draws.
pub fn sample_standardized(law: &ErrorLaw, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let sampler = law.sampler()?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

/// Shift-scale data with all cell means zero: cell `i` holds `σ_i ε_ik`
/// with sizes `base_sizes + m`.
pub fn generate_dataset(scenario: &Scenario, m: usize, stream: &RngStream) -> Result<Dataset> {
    let design = scenario.design(m)?;
    let sampler = scenario.law.sampler()?;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(design.total());
    for (i, &n) in design.cell_sizes().iter().enumerate() {
        let sigma = scenario.scales[i];
        values.extend((0..n).map(|_| sigma * sampler.draw(&mut rng)));
    }
    Dataset::from_pooled(design, values)
}
