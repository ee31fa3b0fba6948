use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::catalog::{
    Affine, Exponential, Gamma, Gumbel, LogNormal, Normal, Pareto, Uniform, Weibull,
};
use super::QuantileModel;
use crate::error::{Error, Result};

/// One argument of a descriptor: a number or a nested model.
#[derive(Debug, Clone)]
pub enum Arg {
    Num(f64),
    Model(Arc<dyn QuantileModel>),
}

type Builder = fn(&[Arg]) -> Result<Box<dyn QuantileModel>>;

/// A registered model family.
#[derive(Clone)]
pub struct CatalogEntry {
    pub family: &'static str,
    /// Argument list as written in descriptors, with defaults.
    pub signature: &'static str,
    /// Which tail functionals are closed form, and where they come from.
    pub notes: &'static str,
    /// Descriptor of the instance used when the catalog is enumerated.
    pub example: &'static str,
    build: Builder,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("family", &self.family)
            .field("signature", &self.signature)
            .finish()
    }
}

impl CatalogEntry {
    pub fn new(
        family: &'static str,
        signature: &'static str,
        notes: &'static str,
        example: &'static str,
        build: Builder,
    ) -> Self {
        CatalogEntry {
            family,
            signature,
            notes,
            example,
            build,
        }
    }
}

/// Model families looked up by name.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    entries: BTreeMap<&'static str, CatalogEntry>,
}

fn numbers<const N: usize>(
    family: &str,
    args: &[Arg],
    defaults: [Option<f64>; N],
) -> Result<[f64; N]> {
    if args.len() > N {
        return Err(Error::InvalidParameter(format!(
            "{family} takes at most {N} arguments, got {}",
            args.len()
        )));
    }
    let mut out = [0.0; N];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match (args.get(i), defaults[i]) {
            (Some(Arg::Num(v)), _) => *v,
            (Some(Arg::Model(_)), _) => {
                return Err(Error::InvalidParameter(format!(
                    "{family}: argument {i} must be a number"
                )))
            }
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidParameter(format!(
                    "{family}: missing argument {i}"
                )))
            }
        };
    }
    Ok(out)
}

fn build_exponential(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [rate] = numbers("exponential", args, [Some(1.0)])?;
    Ok(Box::new(Exponential::new(rate)?))
}
fn build_gumbel(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [loc, scale] = numbers("gumbel", args, [Some(0.0), Some(1.0)])?;
    Ok(Box::new(Gumbel::new(loc, scale)?))
}
fn build_weibull(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [shape, scale] = numbers("weibull", args, [None, Some(1.0)])?;
    Ok(Box::new(Weibull::new(shape, scale)?))
}
fn build_normal(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [mean, sd] = numbers("normal", args, [Some(0.0), Some(1.0)])?;
    Ok(Box::new(Normal::new(mean, sd)?))
}
fn build_lognormal(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [mu, sigma] = numbers("lognormal", args, [Some(0.0), Some(1.0)])?;
    Ok(Box::new(LogNormal::new(mu, sigma)?))
}
fn build_gamma(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [shape, rate] = numbers("gamma", args, [None, Some(1.0)])?;
    Ok(Box::new(Gamma::new(shape, rate)?))
}
fn build_pareto(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [index] = numbers("pareto", args, [None])?;
    Ok(Box::new(Pareto::new(index)?))
}
fn build_uniform(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    let [lo, hi] = numbers("uniform", args, [Some(0.0), Some(1.0)])?;
    Ok(Box::new(Uniform::new(lo, hi)?))
}
fn build_affine(args: &[Arg]) -> Result<Box<dyn QuantileModel>> {
    match args {
        [Arg::Num(scale), Arg::Num(shift), Arg::Model(inner)] => {
            Ok(Box::new(Affine::new(inner.clone(), *scale, *shift)?))
        }
        _ => Err(Error::InvalidParameter(
            "affine takes (scale, shift, model descriptor)".into(),
        )),
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry::default()
    }

    /// The shipped catalog.
    pub fn standard() -> Self {
        let mut reg = ModelRegistry::empty();
        reg.register(CatalogEntry::new(
            "exponential",
            "exponential(rate=1)",
            "c(s,b) = 1/(rate b), sigma2 = (2s - s^2)/rate^2, mu = s(1 - ln s)/rate, r = 1/rate",
            "exponential(1)",
            build_exponential,
        ));
        reg.register(CatalogEntry::new(
            "gumbel",
            "gumbel(loc=0, scale=1)",
            "closed-form r(u) = scale u / ((1-u)(-ln(1-u)))",
            "gumbel(0,1)",
            build_gumbel,
        ));
        reg.register(CatalogEntry::new(
            "weibull",
            "weibull(shape, scale=1)",
            "closed-form r(u) = (scale/shape)(ln 1/u)^(1/shape - 1)",
            "weibull(2)",
            build_weibull,
        ));
        reg.register(CatalogEntry::new(
            "normal",
            "normal(mean=0, sd=1)",
            "quantile by rational approximation plus one Halley step; functionals by quadrature",
            "normal(0,1)",
            build_normal,
        ));
        reg.register(CatalogEntry::new(
            "lognormal",
            "lognormal(mu=0, sigma=1)",
            "exp of the normal quantile; functionals by quadrature",
            "lognormal(0,1)",
            build_lognormal,
        ));
        reg.register(CatalogEntry::new(
            "gamma",
            "gamma(shape, rate=1)",
            "quantile by inversion of the incomplete gamma function; functionals by quadrature",
            "gamma(2)",
            build_gamma,
        ));
        reg.register(CatalogEntry::new(
            "pareto",
            "pareto(index)",
            "Frechet domain (negative control); c(s,b) = s^(-1/a)/(ab - 1) for ab > 1",
            "pareto(2)",
            build_pareto,
        ));
        reg.register(CatalogEntry::new(
            "uniform",
            "uniform(lo=0, hi=1)",
            "bounded support (negative control); all functionals polynomial in s",
            "uniform(0,1)",
            build_uniform,
        ));
        reg.register(CatalogEntry::new(
            "affine",
            "affine(scale, shift, model)",
            "scale X + shift; closed forms inherited from the inner model",
            "affine(2,3,exponential(1))",
            build_affine,
        ));
        reg
    }

    pub fn register(&mut self, entry: CatalogEntry) {
        self.entries.insert(entry.family, entry);
    }

    pub fn get(&self, family: &str) -> Option<&CatalogEntry> {
        self.entries.get(family)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// Parse `name(p1,p2,...)`; arguments may themselves be descriptors.
    pub fn parse(&self, descriptor: &str) -> Result<Box<dyn QuantileModel>> {
        let mut parser = Parser {
            src: descriptor,
            pos: 0,
            registry: self,
        };
        let model = parser.model()?;
        parser.skip_ws();
        if parser.pos != descriptor.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(model)
    }

    /// One instance of every registered family.
    pub fn catalog(&self) -> Vec<Box<dyn QuantileModel>> {
        self.entries()
            .map(|e| {
                self.parse(e.example)
                    .expect("catalog example descriptors are valid")
            })
            .collect()
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    registry: &'a ModelRegistry,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Config(format!(
            "bad model descriptor {:?} at byte {}: {msg}",
            self.src, self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<&str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 || !rest.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn model(&mut self) -> Result<Box<dyn QuantileModel>> {
        let name = match self.ident() {
            Some(id) => id.to_ascii_lowercase(),
            None => return Err(self.error("expected a model name")),
        };
        let entry = self
            .registry
            .get(&name)
            .ok_or_else(|| Error::Config(format!("unknown model family {name:?}")))?;
        let mut args = Vec::new();
        if self.eat('(') && !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(self.error("expected ',' or ')'"));
                }
            }
        }
        (entry.build)(&args)
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphabetic())
            && !self.src[self.pos..].to_ascii_lowercase().starts_with("inf")
            && !self.src[self.pos..].to_ascii_lowercase().starts_with("nan")
        {
            return Ok(Arg::Model(Arc::from(self.model()?)));
        }
        let rest = &self.src[self.pos..];
        let len = rest.find([',', ')']).unwrap_or(rest.len());
        let text = rest[..len].trim();
        let v: f64 = text
            .parse()
            .map_err(|_| self.error(&format!("not a number: {text:?}")))?;
        self.pos += len;
        Ok(Arg::Num(v))
    }
}

fn standard_registry() -> &'static ModelRegistry {
    static REG: OnceLock<ModelRegistry> = OnceLock::new();
    REG.get_or_init(ModelRegistry::standard)
}

/// Parse a descriptor against the standard catalog.
pub fn parse_descriptor(descriptor: &str) -> Result<Box<dyn QuantileModel>> {
    standard_registry().parse(descriptor)
}
