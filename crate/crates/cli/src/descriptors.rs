//! Text forms of grids, domains, symbols and spectral functions used in
//! experiment configs. Every `Display` output parses back to an equal value.

use std::fmt;
use std::str::FromStr;

use widomlab::widom::SpectralFunction;
use widomlab::{Domain, Shape, Symbol};

/// Grids longer than this are refused.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorError(pub String);

impl fmt::Display for DescriptorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DescriptorError {}

fn err<T>(msg: impl Into<String>) -> Result<T, DescriptorError> {
    Err(DescriptorError(msg.into()))
}

fn parse_f64(s: &str) -> Result<f64, DescriptorError> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => err(format!("`{s}` is not a finite number")),
    }
}

fn parse_usize(s: &str) -> Result<usize, DescriptorError> {
    s.trim()
        .parse::<usize>()
        .or_else(|_| err(format!("`{s}` is not a non-negative integer")))
}

/// Comma-separated finite numbers, at least one.
pub fn parse_list(s: &str) -> Result<Vec<f64>, DescriptorError> {
    if s.trim().is_empty() {
        return err("empty list");
    }
    s.split(',').map(parse_f64).collect()
}

pub fn format_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// `min:max:{linear,log}:count` or an explicit comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Range {
        min: f64,
        max: f64,
        spacing: Spacing,
        count: usize,
    },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(xs) => xs.clone(),
            Grid::Range {
                min,
                max,
                spacing,
                count,
            } => {
                if *count == 1 {
                    return vec![*min];
                }
                let last = (*count - 1) as f64;
                (0..*count)
                    .map(|k| {
                        if k == 0 {
                            return *min;
                        }
                        if k + 1 == *count {
                            return *max;
                        }
                        let t = k as f64 / last;
                        match spacing {
                            Spacing::Linear => min + t * (max - min),
                            Spacing::Log => min * (max / min).powf(t),
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::List(xs) => xs.len(),
            Grid::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points rounded to integers, rejecting fractional entries.
    pub fn integer_values(&self) -> Result<Vec<usize>, DescriptorError> {
        self.values()
            .into_iter()
            .map(|x| {
                let r = x.round();
                if (x - r).abs() > 1e-9 * x.abs().max(1.0) || r < 0.0 {
                    return err(format!("grid point {x} is not a non-negative integer"));
                }
                Ok(r as usize)
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return err("empty grid");
        }
        if !s.contains(':') {
            let xs = parse_list(s)?;
            if xs.len() > MAX_GRID_POINTS {
                return err(format!("grid has more than {MAX_GRID_POINTS} points"));
            }
            return Ok(Grid::List(xs));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, spacing, count] = parts[..] else {
            return err(format!("grid `{s}` is not min:max:spacing:count"));
        };
        let (min, max) = (parse_f64(min)?, parse_f64(max)?);
        let spacing = match spacing.trim() {
            "linear" | "lin" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return err(format!("grid spacing `{other}` is neither linear nor log")),
        };
        let count = parse_usize(count)?;
        if count == 0 {
            return err("empty grid");
        }
        if count > MAX_GRID_POINTS {
            return err(format!("grid has more than {MAX_GRID_POINTS} points"));
        }
        if min > max {
            return err(format!("grid minimum {min} exceeds maximum {max}"));
        }
        if spacing == Spacing::Log && min <= 0.0 {
            return err("log grid needs a positive minimum");
        }
        if count == 1 && min != max {
            return err("a one-point range needs min = max");
        }
        Ok(Grid::Range {
            min,
            max,
            spacing,
            count,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(xs) => f.write_str(&format_list(xs)),
            Grid::Range {
                min,
                max,
                spacing,
                count,
            } => {
                let s = match spacing {
                    Spacing::Linear => "linear",
                    Spacing::Log => "log",
                };
                write!(f, "{min}:{max}:{s}:{count}")
            }
        }
    }
}

/// Splits `word key=value key=value` into the word and its fields.
fn fields(s: &str) -> Result<(&str, Vec<(&str, &str)>), DescriptorError> {
    let mut words = s.split_whitespace();
    let Some(head) = words.next() else {
        return err("empty descriptor");
    };
    let mut out = Vec::new();
    for w in words {
        let Some((k, v)) = w.split_once('=') else {
            return err(format!("`{w}` is not key=value"));
        };
        if out.iter().any(|(seen, _)| *seen == k) {
            return err(format!("field `{k}` given twice"));
        }
        out.push((k, v));
    }
    Ok((head, out))
}

fn take<'a>(fs: &[(&str, &'a str)], key: &str, what: &str) -> Result<&'a str, DescriptorError> {
    fs.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| DescriptorError(format!("{what} needs `{key}=`")))
}

fn only(fs: &[(&str, &str)], allowed: &[&str], what: &str) -> Result<(), DescriptorError> {
    match fs.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => err(format!("{what} has no field `{k}`")),
        None => Ok(()),
    }
}

/// `box lower=.. upper=..`, `box half=..`, `ball center=.. radius=..`,
/// `ellipsoid center=.. axes=..`.
pub fn parse_domain(s: &str) -> Result<Domain, DescriptorError> {
    let (head, fs) = fields(s)?;
    let built = match head {
        "box" => {
            if fs.iter().any(|(k, _)| *k == "half") {
                only(&fs, &["half"], "box")?;
                Domain::centered_box(&parse_list(take(&fs, "half", "box")?)?)
            } else {
                only(&fs, &["lower", "upper"], "box")?;
                Domain::interval_box(
                    parse_list(take(&fs, "lower", "box")?)?,
                    parse_list(take(&fs, "upper", "box")?)?,
                )
            }
        }
        "ball" => {
            only(&fs, &["center", "radius"], "ball")?;
            Domain::ball(
                parse_list(take(&fs, "center", "ball")?)?,
                parse_f64(take(&fs, "radius", "ball")?)?,
            )
        }
        "ellipsoid" => {
            only(&fs, &["center", "axes"], "ellipsoid")?;
            Domain::ellipsoid(
                parse_list(take(&fs, "center", "ellipsoid")?)?,
                parse_list(take(&fs, "axes", "ellipsoid")?)?,
            )
        }
        other => return err(format!("unknown domain kind `{other}`")),
    };
    built.map_err(|e| DescriptorError(e.to_string()))
}

pub fn format_domain(d: &Domain) -> String {
    match d.shape() {
        Shape::Box { lower, upper } => format!(
            "box lower={} upper={}",
            format_list(lower),
            format_list(upper)
        ),
        Shape::Ball { center, radius } => {
            format!("ball center={} radius={radius}", format_list(center))
        }
        Shape::Ellipsoid { center, semi_axes } => {
            format!(
                "ellipsoid center={} axes={}",
                format_list(center),
                format_list(semi_axes)
            )
        }
    }
}

/// Symbols expressible in a config.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    One,
    Constant(f64),
    Product {
        coefficient: f64,
        x_powers: Vec<u32>,
        p_powers: Vec<u32>,
    },
}

impl SymbolSpec {
    pub fn to_symbol(&self) -> Symbol {
        match self {
            SymbolSpec::One => Symbol::One,
            SymbolSpec::Constant(c) => Symbol::Constant(*c),
            SymbolSpec::Product {
                coefficient,
                x_powers,
                p_powers,
            } => Symbol::Product {
                coefficient: *coefficient,
                x_powers: x_powers.clone(),
                p_powers: p_powers.clone(),
            },
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SymbolSpec::Product { x_powers, .. } => Some(x_powers.len()),
            _ => None,
        }
    }
}

fn parse_powers(s: &str) -> Result<Vec<u32>, DescriptorError> {
    s.split(',')
        .map(|p| match p.trim().parse::<u32>() {
            Ok(k) if k <= 16 => Ok(k),
            _ => err(format!("`{p}` is not a power in 0..=16")),
        })
        .collect()
}

impl FromStr for SymbolSpec {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split_whitespace();
        match words.next() {
            Some("one") if words.next().is_none() => Ok(SymbolSpec::One),
            Some("constant") => {
                let c = parse_f64(words.next().unwrap_or(""))?;
                if words.next().is_some() {
                    return err("constant takes one value");
                }
                Ok(SymbolSpec::Constant(c))
            }
            Some("product") => {
                let (_, fs) = fields(s)?;
                only(&fs, &["coefficient", "x", "p"], "product")?;
                let coefficient = match fs.iter().find(|(k, _)| *k == "coefficient") {
                    Some((_, v)) => parse_f64(v)?,
                    None => 1.0,
                };
                let x_powers = parse_powers(take(&fs, "x", "product")?)?;
                let p_powers = parse_powers(take(&fs, "p", "product")?)?;
                if x_powers.len() != p_powers.len() {
                    return err("product symbol has x and p powers of different lengths");
                }
                Ok(SymbolSpec::Product {
                    coefficient,
                    x_powers,
                    p_powers,
                })
            }
            _ => err(format!("unknown symbol `{s}`")),
        }
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| {
            v.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            SymbolSpec::One => f.write_str("one"),
            SymbolSpec::Constant(c) => write!(f, "constant {c}"),
            SymbolSpec::Product {
                coefficient,
                x_powers,
                p_powers,
            } => {
                write!(
                    f,
                    "product coefficient={coefficient} x={} p={}",
                    join(x_powers),
                    join(p_powers)
                )
            }
        }
    }
}

/// Spectral functions expressible in a config.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Monomial(u32),
    Polynomial(Vec<f64>),
    Eta,
    Renyi(f64),
}

impl FunctionSpec {
    pub fn to_function(&self) -> Result<SpectralFunction, widomlab::Error> {
        Ok(match self {
            FunctionSpec::Monomial(k) => SpectralFunction::Monomial(*k),
            FunctionSpec::Polynomial(c) => SpectralFunction::Polynomial(c.clone()),
            FunctionSpec::Eta => SpectralFunction::Eta,
            FunctionSpec::Renyi(b) => SpectralFunction::renyi(*b)?,
        })
    }
}

impl FromStr for FunctionSpec {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words[..] {
            ["eta"] => Ok(FunctionSpec::Eta),
            ["monomial", k] => match k.parse::<u32>() {
                Ok(k) if (1..=64).contains(&k) => Ok(FunctionSpec::Monomial(k)),
                _ => err(format!("monomial degree `{k}` outside 1..=64")),
            },
            ["polynomial", c] => {
                let c = parse_list(c)?;
                if c.len() > 65 {
                    return err("polynomial degree above 64");
                }
                Ok(FunctionSpec::Polynomial(c))
            }
            ["renyi", b] => {
                let b = parse_f64(b)?;
                if b <= 0.0 {
                    return err("Renyi order must be positive");
                }
                Ok(FunctionSpec::Renyi(b))
            }
            _ => err(format!("unknown spectral function `{s}`")),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Monomial(k) => write!(f, "monomial {k}"),
            FunctionSpec::Polynomial(c) => write!(f, "polynomial {}", format_list(c)),
            FunctionSpec::Eta => f.write_str("eta"),
            FunctionSpec::Renyi(b) => write!(f, "renyi {b}"),
        }
    }
}

/// Translation vectors separated by `;`.
pub fn parse_vectors(s: &str) -> Result<Vec<Vec<f64>>, DescriptorError> {
    let vs: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<Result<_, _>>()?;
    if vs.iter().any(|v| v.len() != vs[0].len()) {
        return err("translation vectors differ in length");
    }
    Ok(vs)
}

pub fn format_vectors(vs: &[Vec<f64>]) -> String {
    vs.iter()
        .map(|v| format_list(v))
        .collect::<Vec<_>>()
        .join(";")
}

/// `c + g·x`, written `c;g1,g2,…`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineWeight {
    pub constant: f64,
    pub gradient: Vec<f64>,
}

impl FromStr for AffineWeight {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some((c, g)) = s.split_once(';') else {
            return err("weight is `constant;gradient`");
        };
        Ok(AffineWeight {
            constant: parse_f64(c)?,
            gradient: parse_list(g)?,
        })
    }
}

impl fmt::Display for AffineWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.constant, format_list(&self.gradient))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_exact() {
        let g: Grid = "25:800:log:6".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], 25.0);
        assert_eq!(v[5], 800.0);
        assert!((v[1] - 50.0).abs() < 1e-12);
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
    }

    #[test]
    fn empty_grids_rejected() {
        for s in [
            "",
            "  ",
            "1:2:log:0",
            "1:2:lin",
            "2:1:linear:3",
            "0:1:log:3",
            "1,,2",
        ] {
            assert!(s.parse::<Grid>().is_err(), "{s}");
        }
    }

    #[test]
    fn integer_grids() {
        let g: Grid = "64:2048:log:6".parse().unwrap();
        assert_eq!(
            g.integer_values().unwrap(),
            vec![64, 128, 256, 512, 1024, 2048]
        );
        assert!("1.5,2".parse::<Grid>().unwrap().integer_values().is_err());
    }

    #[test]
    fn domain_round_trip() {
        for s in [
            "box lower=-1,0 upper=1,2",
            "ball center=0,0,0 radius=1.5",
            "ellipsoid center=0.5,0 axes=1,0.25",
        ] {
            let d = parse_domain(s).unwrap();
            assert_eq!(parse_domain(&format_domain(&d)).unwrap(), d);
        }
        assert_eq!(
            parse_domain("box half=1,2").unwrap(),
            Domain::centered_box(&[1.0, 2.0]).unwrap()
        );
    }

    #[test]
    fn domain_errors_name_the_problem() {
        let e = parse_domain("ball center=0,0 radius=1 colour=red").unwrap_err();
        assert!(e.0.contains("colour"));
        assert!(parse_domain("torus").is_err());
        assert!(parse_domain("ball center=0 radius=-1").is_err());
    }

    #[test]
    fn symbol_and_function_round_trip() {
        for s in ["one", "constant 2.5", "product coefficient=-1 x=0,1 p=2,0"] {
            let sym: SymbolSpec = s.parse().unwrap();
            assert_eq!(sym.to_string().parse::<SymbolSpec>().unwrap(), sym);
        }
        for s in ["monomial 3", "polynomial 0,1,-1", "eta", "renyi 2"] {
            let f: FunctionSpec = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<FunctionSpec>().unwrap(), f);
        }
        assert!("monomial 0".parse::<FunctionSpec>().is_err());
    }

    #[test]
    fn vectors_and_weights() {
        let v = parse_vectors("1,0;0,1").unwrap();
        assert_eq!(format_vectors(&v), "1,0;0,1");
        assert!(parse_vectors("1,0;1").is_err());
        let w: AffineWeight = "1;1,0".parse().unwrap();
        assert_eq!(w.to_string().parse::<AffineWeight>().unwrap(), w);
    }
}
