//! Chaotic position generation.
//!
//! The one-parameter map
//!
//! ```text
//! f(x) = a²(2x−1)² / (4x(1−x) + a²(2x−1)²)
//! ```
//!
//! is iterated by two cross-coupled instances: each map is fed the other
//! map's previous output scaled by the public coupling factor `R`. The pair
//! `(x, y)` is then projected onto an image grid, and repeated cells are
//! discarded so that every selected pixel is used at most once.
//!
//! All arithmetic is IEEE-754 binary64 with a fixed evaluation order, so a
//! sender and a receiver on any conforming platform regenerate the same
//! stream bit for bit.

use crate::error::{Result, StegoError};
use crate::keymat::{PublicCoupling, SecretKeySet};

/// Shift applied to iterates that land exactly on 0, 0.5 or 1 (2⁻⁴⁰).
pub const DEGENERATE_SHIFT: f64 = 1.0 / 1_099_511_627_776.0;

/// Iterates skipped before the Lyapunov average starts.
pub const LYAPUNOV_TRANSIENT: usize = 1_000;

/// Central-difference step for the Lyapunov derivative.
pub const LYAPUNOV_STEP: f64 = 1e-7;

/// System parameter of the map, restricted to `alpha > 0.5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapParameter(f64);

impl MapParameter {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.5 {
            Ok(Self(alpha))
        } else {
            Err(StegoError::Domain(format!(
                "map parameter must be finite and greater than 0.5, got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Image extent in rows (`M`) and columns (`N`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImageDims {
    rows: usize,
    cols: usize,
}

impl ImageDims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(StegoError::Domain(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        rows.checked_mul(cols).ok_or_else(|| {
            StegoError::Domain(format!("image dimensions {rows}x{cols} overflow"))
        })?;
        Ok(Self { rows, cols })
    }

    pub fn rows(self) -> usize {
        self.rows
    }

    pub fn cols(self) -> usize {
        self.cols
    }

    /// Number of cells, `M·N`.
    pub fn cells(self) -> usize {
        self.rows * self.cols
    }
}

/// A 1-based grid cell: `col` in `[1, N]`, `row` in `[1, M]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelPosition {
    pub col: usize,
    pub row: usize,
}

impl PixelPosition {
    /// Row-major offset of the cell inside a grid of `dims`.
    pub fn offset(self, dims: ImageDims) -> usize {
        (self.row - 1) * dims.cols() + (self.col - 1)
    }
}

/// State of the coupled generator after `n` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChaosState {
    pub x: f64,
    pub y: f64,
    pub n: u64,
}

// Raw map evaluation. The grouping below is part of the reproducibility
// contract: numerator, denominator, then a single division.
#[inline]
fn eval_map(x: f64, alpha: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let numerator = (alpha * alpha) * (t * t);
    let denominator = (4.0 * x) * (1.0 - x) + numerator;
    numerator / denominator
}

/// One application of the map. `x` must lie in the open interval (0, 1).
pub fn map_step(x: f64, alpha: MapParameter) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(StegoError::Domain(format!(
            "map input must lie in (0, 1), got {x}"
        )));
    }
    Ok(eval_map(x, alpha.value()))
}

/// Moves `u` off the absorbing set {0, 0.5, 1}.
///
/// Values above 1 (or below 0) are first wrapped to their fractional part.
pub fn sanitize(u: f64) -> f64 {
    let u = if (0.0..=1.0).contains(&u) {
        u
    } else {
        u.rem_euclid(1.0)
    };
    if u == 0.0 {
        DEGENERATE_SHIFT
    } else if u == 1.0 {
        1.0 - DEGENERATE_SHIFT
    } else if u == 0.5 {
        0.5 + DEGENERATE_SHIFT
    } else {
        u
    }
}

/// First state of the generator: each map applied once to its own seed.
pub fn bootstrap(x0: f64, y0: f64, alpha1: MapParameter, alpha2: MapParameter) -> ChaosState {
    ChaosState {
        x: sanitize(eval_map(sanitize(x0), alpha1.value())),
        y: sanitize(eval_map(sanitize(y0), alpha2.value())),
        n: 1,
    }
}

/// One cross-coupled step: `x' = f₁(R·y)`, `y' = f₂(R·x)`.
pub fn coupled_step(
    state: ChaosState,
    alpha1: MapParameter,
    alpha2: MapParameter,
    coupling: PublicCoupling,
) -> Result<ChaosState> {
    let r = coupling.value();
    let x = map_step(sanitize(r * state.y), alpha1)?;
    let y = map_step(sanitize(r * state.x), alpha2)?;
    Ok(ChaosState {
        x: sanitize(x),
        y: sanitize(y),
        n: state.n + 1,
    })
}

/// Projects a state onto the grid, clamping the `x = 1` edge to `N`.
pub fn to_pixel(x: f64, y: f64, dims: ImageDims) -> PixelPosition {
    let project = |u: f64, len: usize| -> usize {
        let cell = (u * len as f64).floor();
        if cell.is_nan() || cell < 0.0 {
            1
        } else {
            (cell as usize).saturating_add(1).min(len)
        }
    };
    PixelPosition {
        col: project(x, dims.cols()),
        row: project(y, dims.rows()),
    }
}

/// The unbounded coupled orbit, starting with the bootstrap state.
#[derive(Clone, Debug)]
pub struct CoupledGenerator {
    alpha1: MapParameter,
    alpha2: MapParameter,
    coupling: PublicCoupling,
    seed: (f64, f64),
    state: Option<ChaosState>,
}

impl CoupledGenerator {
    pub fn new(keys: &SecretKeySet, coupling: PublicCoupling) -> Result<Self> {
        let (alpha1, alpha2) = keys.map_parameters()?;
        let coupling = coupling.checked()?;
        Ok(Self {
            alpha1,
            alpha2,
            coupling,
            seed: (keys.x0, keys.y0),
            state: None,
        })
    }
}

impl Iterator for CoupledGenerator {
    type Item = ChaosState;

    fn next(&mut self) -> Option<ChaosState> {
        let next = match self.state {
            None => bootstrap(self.seed.0, self.seed.1, self.alpha1, self.alpha2),
            Some(state) => coupled_step(state, self.alpha1, self.alpha2, self.coupling)
                .expect("sanitized iterates stay inside the map domain"),
        };
        self.state = Some(next);
        Some(next)
    }
}

/// Step budget for collecting unique positions on a grid of `dims`:
/// `20·M·N·max(1, ln(M·N))`.
pub fn iteration_cap(dims: ImageDims) -> u64 {
    let cells = dims.cells() as f64;
    (20.0 * cells * cells.ln().max(1.0)).ceil() as u64
}

/// Lazily yields duplicate-free positions in generation order.
///
/// The prefix produced is independent of how many positions are eventually
/// requested, so a receiver may read a length header first and continue.
#[derive(Clone, Debug)]
pub struct PositionSelector {
    generator: CoupledGenerator,
    dims: ImageDims,
    seen: Vec<bool>,
    found: usize,
    steps: u64,
    cap: u64,
}

impl PositionSelector {
    pub fn new(keys: &SecretKeySet, coupling: PublicCoupling, dims: ImageDims) -> Result<Self> {
        Ok(Self {
            generator: CoupledGenerator::new(keys, coupling)?,
            dims,
            seen: vec![false; dims.cells()],
            found: 0,
            steps: 0,
            cap: iteration_cap(dims),
        })
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    /// Unique positions emitted so far.
    pub fn found(&self) -> usize {
        self.found
    }

    /// Generator steps consumed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Next unseen position, or `InsufficientCapacity` once the step budget
    /// is exhausted. `requested` is only used to label the error.
    pub fn next_unique(&mut self, requested: usize) -> Result<PixelPosition> {
        while self.steps < self.cap {
            let state = self.generator.next().expect("generator is unbounded");
            self.steps += 1;
            let pos = to_pixel(state.x, state.y, self.dims);
            let offset = pos.offset(self.dims);
            if !self.seen[offset] {
                self.seen[offset] = true;
                self.found += 1;
                return Ok(pos);
            }
        }
        Err(StegoError::InsufficientCapacity {
            found: self.found,
            requested,
            steps: self.steps,
        })
    }
}

/// An ordered, duplicate-free run of grid positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionStream {
    positions: Vec<PixelPosition>,
    dims: ImageDims,
}

impl PositionStream {
    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn positions(&self) -> &[PixelPosition] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PixelPosition> {
        self.positions.iter()
    }

    pub fn into_positions(self) -> Vec<PixelPosition> {
        self.positions
    }
}

impl<'a> IntoIterator for &'a PositionStream {
    type Item = &'a PixelPosition;
    type IntoIter = std::slice::Iter<'a, PixelPosition>;

    fn into_iter(self) -> Self::IntoIter {
        self.positions.iter()
    }
}

/// Collects `count` unique positions from the coupled orbit.
pub fn select_positions(
    keys: &SecretKeySet,
    coupling: PublicCoupling,
    dims: ImageDims,
    count: usize,
) -> Result<PositionStream> {
    let mut selector = PositionSelector::new(keys, coupling, dims)?;
    if count > dims.cells() {
        return Err(StegoError::InsufficientCapacity {
            found: 0,
            requested: count,
            steps: 0,
        });
    }
    let mut positions = Vec::with_capacity(count);
    while positions.len() < count {
        positions.push(selector.next_unique(count)?);
    }
    Ok(PositionStream { positions, dims })
}

/// Attractor samples of the single map over a uniform grid of `alpha`.
pub fn bifurcation_scan(
    alpha_min: f64,
    alpha_max: f64,
    alpha_steps: usize,
    x0: f64,
    transient: usize,
    samples: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if !(alpha_min > 0.5 && alpha_min < alpha_max && alpha_max.is_finite()) {
        return Err(StegoError::Domain(format!(
            "bifurcation grid needs 0.5 < alpha_min < alpha_max, got [{alpha_min}, {alpha_max}]"
        )));
    }
    if alpha_steps == 0 {
        return Err(StegoError::Domain("alpha_steps must be at least 1".into()));
    }
    check_seed(x0)?;

    let spacing = if alpha_steps > 1 {
        (alpha_max - alpha_min) / (alpha_steps - 1) as f64
    } else {
        0.0
    };
    let scan = (0..alpha_steps)
        .map(|i| {
            let alpha = alpha_min + i as f64 * spacing;
            let mut x = sanitize(x0);
            for _ in 0..transient {
                x = sanitize(eval_map(x, alpha));
            }
            let orbit = (0..samples)
                .map(|_| {
                    x = sanitize(eval_map(x, alpha));
                    x
                })
                .collect();
            (alpha, orbit)
        })
        .collect();
    Ok(scan)
}

/// Mean of `ln|f'(x)|` along an orbit, derivative by central difference.
pub fn lyapunov_estimate(alpha: MapParameter, x0: f64, n_iters: usize) -> Result<f64> {
    if n_iters < 10_000 {
        return Err(StegoError::Domain(format!(
            "lyapunov estimate needs at least 10000 iterations, got {n_iters}"
        )));
    }
    check_seed(x0)?;
    let a = alpha.value();
    let mut x = sanitize(x0);
    for _ in 0..LYAPUNOV_TRANSIENT {
        x = sanitize(eval_map(x, a));
    }
    let mut sum = 0.0;
    for _ in 0..n_iters {
        let slope = (eval_map(x + LYAPUNOV_STEP, a) - eval_map(x - LYAPUNOV_STEP, a))
            / (2.0 * LYAPUNOV_STEP);
        // a zero slope only happens exactly at the critical point
        sum += slope.abs().max(1e-300).ln();
        x = sanitize(eval_map(x, a));
    }
    Ok(sum / n_iters as f64)
}

fn check_seed(x0: f64) -> Result<()> {
    if x0 > 0.0 && x0 < 1.0 && x0 != 0.5 {
        Ok(())
    } else {
        Err(StegoError::Domain(format!(
            "initial value must lie in (0, 1) and differ from 0.5, got {x0}"
        )))
    }
}
