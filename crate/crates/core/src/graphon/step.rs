use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::model::GraphonModel;
use crate::error::{Error, Result};
use crate::spectral::spectral_norm;

const LENGTH_SUM_TOL: f64 = 1e-12;
/// Breakpoints closer than this are treated as the same cut.
const MERGE_TOL: f64 = 1e-12;

/// A partition of `[0,1]` into consecutive intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    cuts: Vec<f64>,
}

impl Partition {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform partition needs at least one cell");
        let cuts = (0..=n).map(|i| i as f64 / n as f64).collect();
        Partition { cuts }
    }

    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::invalid("partition needs at least one cell"));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid("partition lengths must be positive"));
        }
        let total: f64 = lengths.iter().sum();
        if (total - 1.0).abs() > LENGTH_SUM_TOL {
            return Err(Error::invalid(format!("partition lengths sum to {total}, not 1")));
        }
        let mut cuts = Vec::with_capacity(lengths.len() + 1);
        let mut acc = 0.0;
        cuts.push(0.0);
        for l in &lengths[..lengths.len() - 1] {
            acc += l;
            cuts.push(acc);
        }
        cuts.push(1.0);
        Ok(Partition { cuts })
    }

    /// `cuts` must start at 0, end at 1 and increase strictly.
    pub fn from_breakpoints(cuts: Vec<f64>) -> Result<Self> {
        if cuts.len() < 2 || cuts[0] != 0.0 || cuts[cuts.len() - 1] != 1.0 {
            return Err(Error::invalid("breakpoints must run from 0 to 1"));
        }
        if cuts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breakpoints must increase strictly"));
        }
        Ok(Partition { cuts })
    }

    pub fn len(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.cuts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cell_of(&self, x: f64) -> usize {
        let interior = &self.cuts[1..self.cuts.len() - 1];
        interior.partition_point(|&c| c <= x)
    }

    pub fn is_uniform(&self) -> bool {
        let n = self.len();
        self.cuts
            .iter()
            .enumerate()
            .all(|(i, &c)| (c - i as f64 / n as f64).abs() <= MERGE_TOL)
    }
}

/// Common refinement of two partitions: every fine cell lies inside cell
/// `left[c]` of the first partition and `right[c]` of the second.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub partition: Partition,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

pub fn refine(a: &Partition, b: &Partition) -> Refinement {
    let (ca, cb) = (a.cuts(), b.cuts());
    let mut cuts = vec![0.0];
    let mut left = Vec::new();
    let mut right = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    while i < a.len() && j < b.len() {
        let (ea, eb) = (ca[i + 1], cb[j + 1]);
        let end = if (ea - eb).abs() <= MERGE_TOL { ea.max(eb) } else { ea.min(eb) };
        if end - prev > MERGE_TOL {
            left.push(i);
            right.push(j);
            cuts.push(end);
            prev = end;
        }
        if (ea - eb).abs() <= MERGE_TOL {
            i += 1;
            j += 1;
        } else if ea < eb {
            i += 1;
        } else {
            j += 1;
        }
    }
    *cuts.last_mut().expect("at least one cell") = 1.0;
    Refinement {
        partition: Partition { cuts },
        left,
        right,
    }
}

/// Piecewise-constant kernel `Σ T_{ij} 1{x∈P_i} 1{y∈P_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepGraphon {
    partition: Partition,
    values: DMatrix<f64>,
}

impl StepGraphon {
    pub fn new(partition: Partition, values: DMatrix<f64>) -> Result<Self> {
        let m = partition.len();
        if values.nrows() != m || values.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: values.nrows(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("step graphon values must be finite"));
        }
        Ok(StepGraphon { partition, values })
    }

    pub fn constant(c: f64) -> Self {
        StepGraphon {
            partition: Partition::uniform(1),
            values: DMatrix::from_element(1, 1, c),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.partition.lengths()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.partition.len()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.values[(self.partition.cell_of(x), self.partition.cell_of(y))]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        StepGraphon {
            partition: self.partition.clone(),
            values: &self.values * factor,
        }
    }

    /// The same kernel expressed on a finer partition.
    pub fn on_refinement(&self, fine: &Partition, map: &[usize]) -> StepGraphon {
        let m = fine.len();
        StepGraphon {
            partition: fine.clone(),
            values: DMatrix::from_fn(m, m, |a, b| self.values[(map[a], map[b])]),
        }
    }

    /// `D^{1/2} T D^{1/2}` with `D = diag(lengths)`; its spectrum is the
    /// nonzero spectrum of the integral operator.
    pub fn weighted_matrix(&self) -> DMatrix<f64> {
        let root: Vec<f64> = self.lengths().iter().map(|l| l.sqrt()).collect();
        let m = self.cells();
        DMatrix::from_fn(m, m, |i, j| root[i] * self.values[(i, j)] * root[j])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        crate::spectral::is_symmetric(&self.values, tol)
    }
}

#[derive(Serialize, Deserialize)]
struct StepGraphonRecord {
    lengths: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Serialize for StepGraphon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.cells();
        StepGraphonRecord {
            lengths: self.lengths(),
            values: (0..m).map(|i| (0..m).map(|j| self.values[(i, j)]).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepGraphon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = StepGraphonRecord::deserialize(d)?;
        let partition = Partition::from_lengths(&rec.lengths).map_err(D::Error::custom)?;
        let m = partition.len();
        if rec.values.len() != m || rec.values.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("values shape does not match partition"));
        }
        let values = DMatrix::from_fn(m, m, |i, j| rec.values[i][j]);
        StepGraphon::new(partition, values).map_err(D::Error::custom)
    }
}

/// Piecewise-constant function `Σ vᵢ 1{x∈Pᵢ}` on `[0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    partition: Partition,
    values: DVector<f64>,
}

impl StepFunction {
    pub fn new(partition: Partition, values: DVector<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                expected: partition.len(),
                found: values.len(),
            });
        }
        Ok(StepFunction { partition, values })
    }

    /// `x ↦ vᵢ` on `[(i−1)/n, i/n)`.
    pub fn from_vector(values: DVector<f64>) -> Self {
        StepFunction {
            partition: Partition::uniform(values.len()),
            values,
        }
    }

    pub fn zeros(partition: Partition) -> Self {
        let m = partition.len();
        StepFunction {
            partition,
            values: DVector::zeros(m),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.partition.cell_of(x)]
    }

    pub fn inner(&self, other: &StepFunction) -> f64 {
        let r = refine(&self.partition, &other.partition);
        r.partition
            .lengths()
            .iter()
            .enumerate()
            .map(|(k, l)| l * self.values[r.left[k]] * other.values[r.right[k]])
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.partition
            .lengths()
            .iter()
            .zip(self.values.iter())
            .map(|(l, v)| l * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn on_refinement(&self, fine: &Partition, map: &[usize]) -> StepFunction {
        StepFunction {
            partition: fine.clone(),
            values: DVector::from_fn(fine.len(), |k, _| self.values[map[k]]),
        }
    }

    /// `|Pᵢ|⁻¹ ∫_{Pᵢ} f` for every cell of `target`.
    pub fn cell_averages(&self, target: &Partition) -> DVector<f64> {
        let r = refine(target, &self.partition);
        let mut acc = DVector::zeros(target.len());
        for (k, l) in r.partition.lengths().iter().enumerate() {
            acc[r.left[k]] += l * self.values[r.right[k]];
        }
        for (i, l) in target.lengths().iter().enumerate() {
            acc[i] /= l;
        }
        acc
    }
}

/// The step graphon `W_T` of a square matrix on the uniform partition.
pub fn empirical_graphon(t: &DMatrix<f64>) -> StepGraphon {
    assert_eq!(t.nrows(), t.ncols(), "empirical graphon needs a square matrix");
    StepGraphon {
        partition: Partition::uniform(t.nrows()),
        values: t.clone(),
    }
}

/// Operator norm of the integral operator of `g` on `L₂[0,1]`.
pub fn step_graphon_opnorm(g: &StepGraphon) -> f64 {
    if g.partition.is_uniform() {
        spectral_norm(&g.values) / g.cells() as f64
    } else {
        spectral_norm(&g.weighted_matrix())
    }
}

/// `‖𝕎₁ − 𝕎₂‖_op`, computed on the common refinement.
pub fn step_graphon_distance(g1: &StepGraphon, g2: &StepGraphon) -> f64 {
    let r = refine(&g1.partition, &g2.partition);
    let m = r.partition.len();
    let diff = DMatrix::from_fn(m, m, |a, b| {
        g1.values[(r.left[a], r.left[b])] - g2.values[(r.right[a], r.right[b])]
    });
    step_graphon_opnorm(&StepGraphon {
        partition: r.partition,
        values: diff,
    })
}

/// Midpoint evaluation of `model` on the uniform partition with `m` cells.
///
/// For an (H, α)-Hölder kernel the operator-norm error is O(m^{-min(α,1)}).
pub fn discretize(model: &GraphonModel, m: usize) -> Result<StepGraphon> {
    if m == 0 {
        return Err(Error::invalid("resolution must be at least 1"));
    }
    let mid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let values = DMatrix::from_fn(m, m, |i, j| model.eval(mid[i], mid[j]));
    Ok(StepGraphon {
        partition: Partition::uniform(m),
        values,
    })
}
