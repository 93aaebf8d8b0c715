use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{linspace, logspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSpacing {
    Linear,
    Log,
}

/// One axis of a tensor-product candidate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: AxisSpacing,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize, spacing: AxisSpacing) -> Result<Self> {
        let axis = Self { min, max, n, spacing };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("axis needs at least one point".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || (self.n > 1 && !(self.min < self.max)) {
            return Err(Error::InvalidArgument(format!("invalid axis bounds [{}, {}]", self.min, self.max)));
        }
        if self.spacing == AxisSpacing::Log && !(self.min > 0.0) {
            return Err(Error::InvalidArgument("log-spaced axis needs positive bounds".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        match self.spacing {
            AxisSpacing::Linear => linspace(self.min, self.max, self.n),
            AxisSpacing::Log => logspace(self.min, self.max, self.n),
        }
    }
}

/// Finite set of candidate parameters with consumed flags.
///
/// Tensor-product grids are flattened row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    axes: Option<Vec<Axis>>,
    points: Vec<Vec<f64>>,
    consumed: Vec<bool>,
}

impl CandidateSet {
    pub fn tensor(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("candidate grid needs at least one axis".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
        let total: usize = axes.iter().map(|a| a.n).product();
        let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
        let points = (0..total)
            .map(|flat| {
                multi_index(&shape, flat)
                    .iter()
                    .zip(&values)
                    .map(|(&i, v)| v[i])
                    .collect()
            })
            .collect();
        Ok(Self {
            axes: Some(axes),
            points,
            consumed: vec![false; total],
        })
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidArgument("candidate set is empty".into()));
        };
        let dim = first.len();
        for p in &points {
            check_dim("candidate dimension", dim, p.len())?;
        }
        for i in 0..points.len() {
            if points[..i].contains(&points[i]) {
                return Err(Error::InvalidArgument(format!("duplicate candidate {:?}", points[i])));
            }
        }
        let n = points.len();
        Ok(Self {
            axes: None,
            points,
            consumed: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn axes(&self) -> Option<&[Axis]> {
        self.axes.as_deref()
    }

    pub fn shape(&self) -> Option<Vec<usize>> {
        self.axes.as_ref().map(|a| a.iter().map(|x| x.n).collect())
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn consume(&mut self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::InvalidArgument(format!("candidate {index} out of range")));
        }
        self.consumed[index] = true;
        Ok(())
    }

    pub fn is_consumed(&self, index: usize) -> bool {
        self.consumed[index]
    }

    pub fn unconsumed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.consumed[i])
    }
}

pub fn multi_index(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

pub fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_grid_is_row_major() {
        let set = CandidateSet::tensor(vec![
            Axis::new(1e-3, 1e-1, 3, AxisSpacing::Log).unwrap(),
            Axis::new(1.0, 5.0, 2, AxisSpacing::Linear).unwrap(),
        ])
        .unwrap();
        assert_eq!(set.len(), 6);
        assert_eq!(set.point(0), &[1e-3, 1.0]);
        assert_eq!(set.point(1), &[1e-3, 5.0]);
        assert!((set.point(2)[0] - 1e-2).abs() < 1e-16);
        assert_eq!(set.point(5), &[1e-1, 5.0]);
        for flat in 0..6 {
            assert_eq!(flat_index(&[3, 2], &multi_index(&[3, 2], flat)), flat);
        }
    }

    #[test]
    fn consumed_flags() {
        let mut set = CandidateSet::from_points(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        set.consume(1).unwrap();
        assert_eq!(set.unconsumed().collect::<Vec<_>>(), vec![0, 2]);
        assert!(set.consume(3).is_err());
        assert!(CandidateSet::from_points(vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn invalid_axes() {
        assert!(Axis::new(0.0, 1.0, 3, AxisSpacing::Log).is_err());
        assert!(Axis::new(2.0, 1.0, 3, AxisSpacing::Linear).is_err());
        assert!(Axis::new(0.0, 1.0, 0, AxisSpacing::Linear).is_err());
    }
}
