use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use qfreq::covering::CoveringConfig;
use qfreq::curve::AlgebraicCurve;
use qfreq::frequency::FrequencyOptions;
use qfreq::quadrature::Tolerance;

use crate::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    /// (w^2 - z)^2 = eps^2 z^2 prod (z - z_i)
    F,
    /// w^2 = z (z - eps)
    G,
    /// w^Q = z^p
    Hom,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// JSON curve descriptor.
    #[arg(long, conflicts_with = "example")]
    pub curve: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub example: Option<Family>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Branch points of the f family, repeated; three defaults when omitted.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub zi: Vec<Complex64>,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub center: Complex64,
    #[arg(long, default_value_t = 0.05)]
    pub rmin: f64,
    #[arg(long, default_value_t = 2.0)]
    pub rmax: f64,
    /// Number of log-spaced radii.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Target accuracy of the circle quadrature.
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CoveringArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 60)]
    pub max_depth: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub const DEFAULT_ZI: [(f64, f64); 3] = [(0.3, 0.1), (-0.2, 0.3), (-0.1, -0.35)];

pub fn parse_pair(s: &str) -> Result<Complex64, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let x = a.trim().parse::<f64>().map_err(|e| format!("{a:?}: {e}"))?;
    let y = b.trim().parse::<f64>().map_err(|e| format!("{b:?}: {e}"))?;
    Ok(Complex64::new(x, y))
}

/// Validated settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub curve: AlgebraicCurve,
    pub center: Complex64,
    pub radii: Vec<f64>,
    pub options: FrequencyOptions,
    pub covering: CoveringConfig,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn builder(curve: &CurveArgs, out: &OutArgs) -> Result<Self, Failure> {
        let curve = load_curve(curve)?;
        if !out.out.is_dir() {
            return Err(Failure::Usage(format!("output directory {} does not exist", out.out.display())));
        }
        Ok(Self {
            curve,
            center: Complex64::new(0.0, 0.0),
            radii: Vec::new(),
            options: FrequencyOptions::default(),
            covering: CoveringConfig::default(),
            out: out.out.clone(),
        })
    }

    pub fn with_profile(mut self, p: &ProfileArgs) -> Result<Self, Failure> {
        if !(p.center.re.is_finite() && p.center.im.is_finite()) {
            return Err(Failure::Usage("center must be finite".into()));
        }
        if !(p.rmin > 0.0 && p.rmin <= p.rmax && p.rmax.is_finite()) {
            return Err(Failure::Usage(format!("need 0 < rmin <= rmax, got {} and {}", p.rmin, p.rmax)));
        }
        if p.samples == 0 || (p.samples == 1 && p.rmin != p.rmax) {
            return Err(Failure::Usage("samples must be at least 2 unless rmin = rmax".into()));
        }
        if !(p.tol > 0.0 && p.tol < 1e-2) {
            return Err(Failure::Usage(format!("tol must lie in (0, 1e-2), got {}", p.tol)));
        }
        self.center = p.center;
        self.radii = log_spaced(p.rmin, p.rmax, p.samples);
        self.options = FrequencyOptions {
            circle: Tolerance::new(p.tol, 1e3 * p.tol),
            radial: Tolerance::new(10.0 * p.tol, 1e5 * p.tol),
        };
        Ok(self)
    }

    pub fn with_covering(mut self, c: &CoveringArgs) -> Result<Self, Failure> {
        self.covering = CoveringConfig::new(c.lambda, c.delta, c.max_depth).map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(self)
    }
}

pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| match k {
            0 => a,
            _ if k == n - 1 => b,
            _ => (la + (lb - la) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn load_curve(args: &CurveArgs) -> Result<AlgebraicCurve, Failure> {
    if let Some(path) = &args.curve {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        return AlgebraicCurve::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    let family = args
        .example
        .ok_or_else(|| Failure::Usage("one of --curve FILE or --example {f,g,hom} is required".into()))?;
    let curve = match family {
        Family::G => AlgebraicCurve::make_g_eps(args.eps),
        Family::F => {
            let zi: Vec<Complex64> = if args.zi.is_empty() {
                DEFAULT_ZI.iter().map(|&(x, y)| Complex64::new(x, y)).collect()
            } else {
                args.zi.clone()
            };
            AlgebraicCurve::make_f_eps(args.eps, &zi)
        }
        Family::Hom => AlgebraicCurve::homogeneous(args.q, args.p),
    };
    curve.map_err(|e| Failure::Usage(e.to_string()))
}
