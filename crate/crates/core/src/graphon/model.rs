use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::step::{Partition, StepGraphon};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric kernel `W: [0,1]² → [0,1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphonModel {
    /// Communities `[0,e₁), …, (e_{k−1},1]` with block probabilities `S`.
    Sbm {
        breakpoints: Vec<f64>,
        blocks: Vec<Vec<f64>>,
    },
    StepFunction {
        lengths: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Smooth {
        kernel: Kernel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothness: Option<Smoothness>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Kernel {
    Constant { value: f64 },
    /// `√|x − y|`, (1, 1/2)-Hölder.
    SqrtAbsDiff,
    /// `x·y`, analytic and rank one.
    Product,
    #[serde(skip)]
    Custom(CustomKernel),
}

#[derive(Clone)]
pub struct CustomKernel(pub Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomKernel(..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Smoothness {
    Holder { h: f64, alpha: f64 },
    Analytic { m: f64, r: f64 },
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::Constant { value } => *value,
            Kernel::SqrtAbsDiff => (x - y).abs().sqrt(),
            Kernel::Product => x * y,
            Kernel::Custom(f) => (f.0)(x, y),
        }
    }
}

impl GraphonModel {
    pub fn constant(value: f64) -> Self {
        GraphonModel::Smooth {
            kernel: Kernel::Constant { value },
            smoothness: Some(Smoothness::Holder { h: 0.0, alpha: 1.0 }),
        }
    }

    /// `W(x,y) = √|x − y|`.
    pub fn sqrt_abs_diff() -> Self {
        GraphonModel::Smooth {
            kernel: Kernel::SqrtAbsDiff,
            smoothness: Some(Smoothness::Holder { h: 1.0, alpha: 0.5 }),
        }
    }

    pub fn custom<F>(f: F, smoothness: Option<Smoothness>) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        GraphonModel::Smooth {
            kernel: Kernel::Custom(CustomKernel(Arc::new(f))),
            smoothness,
        }
    }

    pub fn sbm(breakpoints: Vec<f64>, blocks: Vec<Vec<f64>>) -> Result<Self> {
        let m = GraphonModel::Sbm { breakpoints, blocks };
        m.validate()?;
        Ok(m)
    }

    /// Two communities split at `1/2 + shift`, 3/4 within and 1/4 across.
    /// At `|shift| = 1/2` the split leaves the interval and the kernel is the
    /// constant 3/4.
    pub fn two_block_shifted(shift: f64) -> Result<Self> {
        if !(-0.5..=0.5).contains(&shift) {
            return Err(Error::invalid(format!("shift {shift} outside [-1/2, 1/2]")));
        }
        let cut = 0.5 + shift;
        if cut <= 0.0 || cut >= 1.0 {
            return Self::sbm(Vec::new(), vec![vec![0.75]]);
        }
        Self::sbm(vec![cut], vec![vec![0.75, 0.25], vec![0.25, 0.75]])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GraphonModel::Sbm { breakpoints, blocks } => {
                let k = breakpoints.len() + 1;
                let mut prev = 0.0;
                for &e in breakpoints {
                    if !(e > prev && e < 1.0) {
                        return Err(Error::invalid("SBM breakpoints must be increasing inside (0,1)"));
                    }
                    prev = e;
                }
                check_square_unit_symmetric(blocks, k, "SBM block matrix")
            }
            GraphonModel::StepFunction { lengths, values } => {
                Partition::from_lengths(lengths)?;
                check_square_unit_symmetric(values, lengths.len(), "step-function values")
            }
            GraphonModel::Smooth { kernel, .. } => {
                let probes = 33;
                for i in 0..probes {
                    for j in 0..=i {
                        let x = i as f64 / (probes - 1) as f64;
                        let y = j as f64 / (probes - 1) as f64 * 0.999 + 0.0005;
                        let (a, b) = (kernel.eval(x, y), kernel.eval(y, x));
                        if !(0.0..=1.0).contains(&a) || !a.is_finite() {
                            return Err(Error::invalid(format!("kernel value {a} at ({x}, {y}) outside [0,1]")));
                        }
                        if (a - b).abs() > SYMMETRY_TOL {
                            return Err(Error::invalid(format!("kernel not symmetric at ({x}, {y})")));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            GraphonModel::Sbm { breakpoints, blocks } => {
                blocks[block_of(breakpoints, x)][block_of(breakpoints, y)]
            }
            GraphonModel::StepFunction { lengths, values } => {
                let mut acc = 0.0;
                let mut cuts = Vec::with_capacity(lengths.len().saturating_sub(1));
                for l in &lengths[..lengths.len() - 1] {
                    acc += l;
                    cuts.push(acc);
                }
                values[block_of(&cuts, x)][block_of(&cuts, y)]
            }
            GraphonModel::Smooth { kernel, .. } => kernel.eval(x, y),
        }
    }

    /// Exact step-function form for SBM and step models.
    pub fn to_step(&self) -> Option<StepGraphon> {
        match self {
            GraphonModel::Sbm { breakpoints, blocks } => {
                let mut cuts = vec![0.0];
                cuts.extend_from_slice(breakpoints);
                cuts.push(1.0);
                let partition = Partition::from_breakpoints(cuts).ok()?;
                Some(StepGraphon::new(partition, rows_to_matrix(blocks)).ok()?)
            }
            GraphonModel::StepFunction { lengths, values } => {
                let partition = Partition::from_lengths(lengths).ok()?;
                Some(StepGraphon::new(partition, rows_to_matrix(values)).ok()?)
            }
            GraphonModel::Smooth { .. } => None,
        }
    }

    pub fn smoothness(&self) -> Option<Smoothness> {
        match self {
            GraphonModel::Smooth { smoothness, .. } => *smoothness,
            _ => None,
        }
    }
}

/// Index of the community containing `x` given interior cut points.
fn block_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&e| e <= x)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.len();
    DMatrix::from_fn(k, k, |i, j| rows[i][j])
}

fn check_square_unit_symmetric(rows: &[Vec<f64>], k: usize, what: &str) -> Result<()> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(Error::invalid(format!("{what} must be {k}x{k}")));
    }
    for i in 0..k {
        for j in 0..k {
            let v = rows[i][j];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{what} entry ({i},{j}) = {v} outside [0,1]")));
            }
            if (v - rows[j][i]).abs() > SYMMETRY_TOL {
                return Err(Error::invalid(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}
