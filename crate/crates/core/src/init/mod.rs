//! Recurrent weight initializations.
//!
//! Every structured recipe starts from the same Gaussian null draw
//! `Ŵᵢⱼ ~ N(0, g²/N)` (the first `N²` normals of the supplied stream) and is
//! rescaled afterwards, so for a fixed seed all recipes share the null's
//! Frobenius norm (or leading eigenvalue modulus, depending on the
//! [`NormControl`]). Comparisons across recipes are therefore made at equal
//! initial weight magnitude.

mod connectome;

pub use connectome::{load_connectome, parse_connectome, Connectome};

use std::path::PathBuf;

use crate::error::{LabError, Result};
use crate::tensor::{eigenvalues, gaussian_matrix, svd, uniform_matrix, DenseMatrix, Rng};

/// Which magnitude is held equal to the Gaussian null after construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormControl {
    #[default]
    FrobeniusFixed,
    LeadingEigFixed,
}

impl NormControl {
    pub fn name(&self) -> &'static str {
        match self {
            NormControl::FrobeniusFixed => "frobenius_fixed",
            NormControl::LeadingEigFixed => "leading_eig_fixed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitKind {
    Gaussian,
    Uniform,
    /// Keep the top `rank` SVD components of the null draw.
    SvdRank { rank: usize },
    /// Replace singular values by `s₁(1 − i/N)^k`, `i = 0..N`.
    SoftRank { k: f64 },
    /// Two populations by column: the first `⌈αN⌉` columns get gain `γ`,
    /// the rest `1 − ε`.
    CellTypeBlock { alpha: f64, gamma: f64, epsilon: f64 },
    /// Dale's law with balanced excitation/inhibition.
    Dale { frac_exc: f64 },
    /// Over/under-represented chain motifs with normalized strength `tau`.
    ChainMotif { tau: f64 },
    Connectome { path: PathBuf },
    /// `σ[β̂ᵀ; 0; …; 0]`, an `N × d` first-layer matrix aligned with a teacher.
    AlignedRank1 { beta: Vec<f64>, sigma: f64 },
    /// Sparsity-preserving shuffle of another recipe's output.
    Shuffled { base: Box<InitKind> },
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitKind::Gaussian => "gaussian",
            InitKind::Uniform => "uniform",
            InitKind::SvdRank { .. } => "svd_rank",
            InitKind::SoftRank { .. } => "soft_rank",
            InitKind::CellTypeBlock { .. } => "cell_type_block",
            InitKind::Dale { .. } => "dale",
            InitKind::ChainMotif { .. } => "chain_motif",
            InitKind::Connectome { .. } => "connectome",
            InitKind::AlignedRank1 { .. } => "aligned_rank1",
            InitKind::Shuffled { .. } => "shuffled",
        }
    }

    /// The recipe's main scalar parameter, used as the x-axis of sweeps.
    pub fn rank_param(&self) -> Option<f64> {
        match self {
            InitKind::SvdRank { rank } => Some(*rank as f64),
            InitKind::SoftRank { k } => Some(*k),
            InitKind::CellTypeBlock { alpha, .. } => Some(*alpha),
            InitKind::Dale { frac_exc } => Some(*frac_exc),
            InitKind::ChainMotif { tau } => Some(*tau),
            InitKind::AlignedRank1 { sigma, .. } => Some(*sigma),
            InitKind::Shuffled { base } => base.rank_param(),
            InitKind::Gaussian | InitKind::Uniform | InitKind::Connectome { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub gain: f64,
    pub n: usize,
    pub norm_control: NormControl,
}

impl InitSpec {
    pub fn new(kind: InitKind, gain: f64, n: usize) -> Self {
        InitSpec {
            kind,
            gain,
            n,
            norm_control: NormControl::FrobeniusFixed,
        }
    }

    pub fn with_norm_control(mut self, mode: NormControl) -> Self {
        self.norm_control = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(LabError::param("n", "network size must be positive"));
        }
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(LabError::param("g", format!("gain must be finite and ≥ 0, got {}", self.gain)));
        }
        validate_kind(&self.kind, self.n)
    }

    fn null_std(&self) -> f64 {
        self.gain / (self.n as f64).sqrt()
    }
}

fn validate_kind(kind: &InitKind, n: usize) -> Result<()> {
    match kind {
        InitKind::SvdRank { rank } if *rank < 1 || *rank > n => Err(LabError::param(
            "rank",
            format!("rank must lie in 1..={n}, got {rank}"),
        )),
        InitKind::SoftRank { k } if !(*k >= 0.0) => {
            Err(LabError::param("k", format!("soft-rank exponent must be ≥ 0, got {k}")))
        }
        InitKind::CellTypeBlock {
            alpha,
            gamma,
            epsilon,
        } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(LabError::param("alpha", format!("need 0 < α < 1, got {alpha}")));
            }
            if !(*gamma > 0.0) {
                return Err(LabError::param("gamma", format!("need γ > 0, got {gamma}")));
            }
            if !(*epsilon > 0.0 && *epsilon < 1.0) {
                return Err(LabError::param("epsilon", format!("need 0 < ε < 1, got {epsilon}")));
            }
            if hyper_count(*alpha, n) < 1 {
                return Err(LabError::param("alpha", "⌈αN⌉ < 1"));
            }
            Ok(())
        }
        InitKind::Dale { frac_exc } if !(*frac_exc > 0.0 && *frac_exc < 1.0) => Err(LabError::param(
            "frac_exc",
            format!("need 0 < frac_exc < 1, got {frac_exc}"),
        )),
        InitKind::ChainMotif { tau } if !(tau.abs() < 1.0) => {
            Err(LabError::param("tau_chn", format!("need |τ| < 1, got {tau}")))
        }
        InitKind::AlignedRank1 { sigma, .. } if !(*sigma > 0.0) => {
            Err(LabError::param("sigma", format!("need σ > 0, got {sigma}")))
        }
        InitKind::Shuffled { base } => validate_kind(base, n),
        _ => Ok(()),
    }
}

fn hyper_count(alpha: f64, n: usize) -> usize {
    // Guard against 0.02·100 = 2.0000000000000004 rounding up to 3.
    let raw = alpha * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Number of excitatory columns for a Dale matrix.
pub fn excitatory_count(frac_exc: f64, n: usize) -> usize {
    ((frac_exc * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Builds the recurrent matrix described by `spec`.
pub fn generate(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    spec.validate()?;
    match &spec.kind {
        InitKind::Gaussian => make_gaussian(spec, rng),
        InitKind::Uniform => make_uniform(spec, rng),
        InitKind::SvdRank { .. } => make_svd_rank(spec, rng),
        InitKind::SoftRank { .. } => make_soft_rank(spec, rng),
        InitKind::CellTypeBlock { .. } => make_cell_type_block(spec, rng),
        InitKind::Dale { .. } => make_dale(spec, rng),
        InitKind::ChainMotif { .. } => make_chain_motif(spec, rng),
        InitKind::Connectome { path } => {
            let null = gaussian_matrix(rng, spec.n, spec.n, spec.null_std());
            let w = load_connectome(path)?;
            if w.rows() != spec.n {
                return Err(LabError::param(
                    "n",
                    format!("connectome has {} neurons but network.N = {}", w.rows(), spec.n),
                ));
            }
            rescale_like_null(&w, &null, spec.norm_control)
        }
        InitKind::AlignedRank1 { beta, sigma } => make_aligned_rank1(spec, beta, *sigma),
        InitKind::Shuffled { base } => {
            let inner = InitSpec {
                kind: (**base).clone(),
                ..spec.clone()
            };
            let w = generate(&inner, rng)?;
            Ok(shuffle_preserving_sparsity(&w, rng))
        }
    }
}

pub fn make_gaussian(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    expect_kind(spec, matches!(spec.kind, InitKind::Gaussian))?;
    Ok(gaussian_matrix(rng, spec.n, spec.n, spec.null_std()))
}

/// `Wᵢⱼ ~ U(−g/√N, g/√N)`. The uniform null is its own reference and is
/// not rescaled.
pub fn make_uniform(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    expect_kind(spec, matches!(spec.kind, InitKind::Uniform))?;
    let b = spec.null_std();
    Ok(uniform_matrix(rng, spec.n, spec.n, -b, b))
}

pub fn make_svd_rank(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    let InitKind::SvdRank { rank } = spec.kind else {
        return expect_kind(spec, false).map(|_| unreachable!());
    };
    validate_kind(&spec.kind, spec.n)?;
    let null = gaussian_matrix(rng, spec.n, spec.n, spec.null_std());
    if rank == spec.n {
        return Ok(null);
    }
    let truncated = svd(&null)?.truncated(rank);
    rescale_like_null(&truncated, &null, spec.norm_control)
}

pub fn make_soft_rank(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    let InitKind::SoftRank { k } = spec.kind else {
        return expect_kind(spec, false).map(|_| unreachable!());
    };
    validate_kind(&spec.kind, spec.n)?;
    let null = gaussian_matrix(rng, spec.n, spec.n, spec.null_std());
    let dec = svd(&null)?;
    let n = spec.n as f64;
    let s1 = dec.s[0];
    let s: Vec<f64> = (0..spec.n)
        .map(|i| s1 * (1.0 - i as f64 / n).powf(k))
        .collect();
    let w = dec.with_singular_values(&s);
    rescale_like_null(&w, &null, spec.norm_control)
}

pub fn make_cell_type_block(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    let InitKind::CellTypeBlock {
        alpha,
        gamma,
        epsilon,
    } = spec.kind
    else {
        return expect_kind(spec, false).map(|_| unreachable!());
    };
    validate_kind(&spec.kind, spec.n)?;
    let null = gaussian_matrix(rng, spec.n, spec.n, spec.null_std());
    let hyper = hyper_count(alpha, spec.n);
    let mut w = null.clone();
    for i in 0..spec.n {
        for (j, v) in w.row_mut(i).iter_mut().enumerate() {
            *v *= if j < hyper { gamma } else { 1.0 - epsilon };
        }
    }
    rescale_like_null(&w, &null, spec.norm_control)
}

/// Column `j` is excitatory for `j < round(frac_exc·N)`, inhibitory
/// otherwise. Magnitudes are `|Ŵ|`; inhibitory columns are scaled by
/// `frac_exc / (1 − frac_exc)` so expected row sums vanish.
pub fn make_dale(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    let InitKind::Dale { frac_exc } = spec.kind else {
        return expect_kind(spec, false).map(|_| unreachable!());
    };
    validate_kind(&spec.kind, spec.n)?;
    let null = gaussian_matrix(rng, spec.n, spec.n, spec.null_std());
    let n_exc = excitatory_count(frac_exc, spec.n);
    let inh_scale = frac_exc / (1.0 - frac_exc);
    let w = DenseMatrix::from_fn(spec.n, spec.n, |i, j| {
        let mag = null[(i, j)].abs();
        if j < n_exc {
            mag
        } else {
            -inh_scale * mag
        }
    });
    rescale_like_null(&w, &null, spec.norm_control)
}

/// Column sign pattern (`true` = excitatory) matching [`make_dale`].
pub fn dale_column_types(frac_exc: f64, n: usize) -> Vec<bool> {
    let n_exc = excitatory_count(frac_exc, n);
    (0..n).map(|j| j < n_exc).collect()
}

/// Chain motifs through per-neuron latent factors.
///
/// `W = Z + b·(1xᵀ + s·x1ᵀ)` with `x` a standardized Gaussian vector and
/// `s = sign(τ)`: neuron `j`'s outgoing column carries `b·xⱼ` and its
/// incoming row carries `s·b·xⱼ`, so `cov(wᵢⱼ, wⱼₖ) = s·b²` while every
/// other pair stays uncorrelated. Solving `s·b² / (σ_z² + 2b²) = τ` gives
/// `b² = |τ|σ_z² / (1 − 2|τ|)`; `|τ| ≥ 1/2` is unattainable.
pub fn make_chain_motif(spec: &InitSpec, rng: &mut Rng) -> Result<DenseMatrix> {
    let InitKind::ChainMotif { tau } = spec.kind else {
        return expect_kind(spec, false).map(|_| unreachable!());
    };
    validate_kind(&spec.kind, spec.n)?;
    if tau.abs() >= 0.5 {
        return Err(LabError::param(
            "tau_chn",
            format!("|τ| = {} is unattainable; the latent-factor construction needs |τ| < 1/2", tau.abs()),
        ));
    }
    let n = spec.n;
    let null = gaussian_matrix(rng, n, n, spec.null_std());
    if tau == 0.0 {
        return Ok(null);
    }
    if n < 3 {
        return Err(LabError::param("n", "chain motifs need at least 3 neurons"));
    }
    let mut x = rng.normal_vec(n, 1.0);
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    x.iter_mut().for_each(|v| *v /= rms);

    let var_z = spec.null_std().powi(2);
    let b = (tau.abs() * var_z / (1.0 - 2.0 * tau.abs())).sqrt();
    let s = tau.signum();
    let w = DenseMatrix::from_fn(n, n, |i, j| null[(i, j)] + b * x[j] + s * b * x[i]);
    rescale_like_null(&w, &null, spec.norm_control)
}

/// `N · d` matrix whose first row is `σ·β̂ᵀ` and all other rows are zero.
pub fn make_aligned_rank1(spec: &InitSpec, beta: &[f64], sigma: f64) -> Result<DenseMatrix> {
    let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(LabError::Degenerate("aligned initialization needs a nonzero β".into()));
    }
    if spec.n == 0 || beta.is_empty() {
        return Err(LabError::param("n", "aligned initialization needs N ≥ 1 and d ≥ 1"));
    }
    let mut w = DenseMatrix::zeros(spec.n, beta.len());
    for (j, b) in beta.iter().enumerate() {
        w[(0, j)] = sigma * b / norm;
    }
    Ok(w)
}

/// Permutes the nonzero values among the nonzero positions; zeros stay put.
pub fn shuffle_preserving_sparsity(a: &DenseMatrix, rng: &mut Rng) -> DenseMatrix {
    let positions: Vec<usize> = a
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut values: Vec<f64> = positions.iter().map(|&i| a.as_slice()[i]).collect();
    rng.shuffle(&mut values);
    let mut out = a.clone();
    let data = out.as_mut_slice();
    for (&p, v) in positions.iter().zip(values) {
        data[p] = v;
    }
    out
}

/// Scales `a` so that its Frobenius norm (or leading eigenvalue modulus)
/// equals `target`.
pub fn apply_norm_control(a: &DenseMatrix, mode: NormControl, target: f64) -> Result<DenseMatrix> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(LabError::param("target", format!("need a positive target, got {target}")));
    }
    let current = measure(a, mode)?;
    if current == 0.0 {
        return Err(LabError::Degenerate(format!(
            "cannot rescale a matrix with zero {}",
            mode.name()
        )));
    }
    Ok(a.scale(target / current))
}

fn measure(a: &DenseMatrix, mode: NormControl) -> Result<f64> {
    match mode {
        NormControl::FrobeniusFixed => Ok(a.frobenius_norm()),
        NormControl::LeadingEigFixed => Ok(eigenvalues(a)?.leading_modulus()),
    }
}

fn rescale_like_null(w: &DenseMatrix, null: &DenseMatrix, mode: NormControl) -> Result<DenseMatrix> {
    let target = measure(null, mode)?;
    if target == 0.0 {
        // g = 0: everything collapses to the zero matrix.
        return Ok(DenseMatrix::zeros(w.rows(), w.cols()));
    }
    apply_norm_control(w, mode, target)
}

fn expect_kind(spec: &InitSpec, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::param(
            "kind",
            format!("generator called with mismatched kind `{}`", spec.kind.name()),
        ))
    }
}
