//! The 1D Poisson problem `-u'' = 1` on `(0, 1)` with homogeneous Dirichlet
//! data, discretized by central differences on `n` interior points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::splitting::{galerkin_form, FiniteSplitting, MatrixSystem, Problem, Restriction, SplittingComponent};

pub const MAX_POISSON_DIMENSION: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum PoissonSplitting {
    /// Consecutive blocks of `block_size` points, neighbours sharing `overlap` points.
    OverlappingBlocks { block_size: usize, overlap: usize },
    /// Explicit 1-based inclusive ranges `(first, last)`.
    Blocks(Vec<(usize, usize)>),
    /// Overlapping blocks plus one coarse component spanned by hat functions
    /// centred at every `coarse_stride`-th grid point.
    TwoLevel { block_size: usize, overlap: usize, coarse_stride: usize },
}

impl PoissonSplitting {
    pub fn describe(&self) -> String {
        match self {
            PoissonSplitting::OverlappingBlocks { block_size, overlap } => {
                format!("overlapping_blocks(size={block_size}, overlap={overlap})")
            }
            PoissonSplitting::Blocks(b) => format!("blocks({})", b.len()),
            PoissonSplitting::TwoLevel { block_size, overlap, coarse_stride } => {
                format!("two_level(size={block_size}, overlap={overlap}, stride={coarse_stride})")
            }
        }
    }
}

/// `(n+1)^2 tridiag(-1, 2, -1)` and `b = 1`.
pub fn poisson_problem(n: usize) -> Result<Problem> {
    if n == 0 || n > MAX_POISSON_DIMENSION {
        return Err(Error::param("n", format!("must lie in 1..={MAX_POISSON_DIMENSION}, got {n}")));
    }
    let h2 = ((n + 1) * (n + 1)) as f64;
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 * h2,
        1 => -h2,
        _ => 0.0,
    });
    Problem::new(a, DVector::from_element(n, 1.0))
}

/// 0-based coordinate lists of consecutive overlapping blocks covering `0..n`.
pub fn overlapping_blocks(n: usize, block_size: usize, overlap: usize) -> Result<Vec<Vec<usize>>> {
    if block_size == 0 {
        return Err(Error::param("block_size", "must be positive"));
    }
    if overlap >= block_size {
        return Err(Error::param("overlap", format!("{overlap} must be smaller than the block size {block_size}")));
    }
    let stride = block_size - overlap;
    let mut blocks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + block_size).min(n);
        blocks.push((start..end).collect());
        if end == n {
            break;
        }
        start += stride;
    }
    Ok(blocks)
}

fn explicit_blocks(n: usize, ranges: &[(usize, usize)]) -> Result<Vec<Vec<usize>>> {
    let mut covered = vec![false; n];
    let mut blocks = Vec::with_capacity(ranges.len());
    for &(first, last) in ranges {
        if first == 0 || first > last || last > n {
            return Err(Error::param("blocks", format!("range ({first}, {last}) is not within 1..={n}")));
        }
        covered[first - 1..last].fill(true);
        blocks.push((first - 1..last).collect());
    }
    if let Some(j) = covered.iter().position(|c| !c) {
        return Err(Error::param("blocks", format!("grid point {} is not covered", j + 1)));
    }
    Ok(blocks)
}

/// Piecewise-linear interpolation from coarse nodes `stride, 2 stride, ...`
/// onto the `n` fine points, with zero boundary values at `0` and `n+1`.
pub fn coarse_interpolation(n: usize, stride: usize) -> Result<DMatrix<f64>> {
    if stride == 0 || stride > n {
        return Err(Error::param("coarse_stride", format!("must lie in 1..={n}, got {stride}")));
    }
    let nodes: Vec<usize> = (1..).map(|j| j * stride).take_while(|&p| p <= n).collect();
    let mut r = DMatrix::zeros(n, nodes.len());
    for i in 1..=n {
        // bracketing nodes, with the boundary points 0 and n+1 as virtual nodes
        let right = nodes.partition_point(|&p| p < i);
        if right < nodes.len() && nodes[right] == i {
            r[(i - 1, right)] = 1.0;
            continue;
        }
        let left_pos = if right == 0 { 0 } else { nodes[right - 1] };
        let right_pos = if right == nodes.len() { n + 1 } else { nodes[right] };
        let width = (right_pos - left_pos) as f64;
        if right > 0 {
            r[(i - 1, right - 1)] = (right_pos - i) as f64 / width;
        }
        if right < nodes.len() {
            r[(i - 1, right)] = (i - left_pos) as f64 / width;
        }
    }
    Ok(r)
}

pub fn make_poisson_1d(n: usize, splitting: &PoissonSplitting) -> Result<MatrixSystem> {
    let problem = poisson_problem(n)?;
    let (blocks, coarse) = match splitting {
        PoissonSplitting::OverlappingBlocks { block_size, overlap } => (overlapping_blocks(n, *block_size, *overlap)?, None),
        PoissonSplitting::Blocks(ranges) => (explicit_blocks(n, ranges)?, None),
        PoissonSplitting::TwoLevel { block_size, overlap, coarse_stride } => (
            overlapping_blocks(n, *block_size, *overlap)?,
            Some(coarse_interpolation(n, *coarse_stride)?),
        ),
    };
    let mut components = Vec::with_capacity(blocks.len() + 1);
    for (k, idx) in blocks.into_iter().enumerate() {
        let r = Restriction::Injection(idx);
        let local = galerkin_form(&problem, &r);
        components.push(SplittingComponent::new(k + 1, r, local, n)?);
    }
    if let Some(r) = coarse {
        let r = Restriction::Dense(r);
        let local = galerkin_form(&problem, &r);
        components.push(SplittingComponent::new(components.len() + 1, r, local, n)?);
    }
    let split = FiniteSplitting::new(n, components)?;
    let label = format!("poisson_1d(n={n}, {})", splitting.describe());
    Ok(MatrixSystem::new(problem, split)?.with_label(label))
}
