//! Small concept classes as explicit truth tables over a finite domain.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{embed_hypercube, Label, Point};
use crate::lowerbound::lp::LinearProgram;
use crate::{Error, Result};

/// Largest cube dimension the enumerators accept.
pub const MAX_ENUM_DIM: usize = 4;

/// A class given by the values of each member on a shared point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedClass {
    pub points: Vec<Point>,
    pub functions: Vec<Vec<Label>>,
}

impl EnumeratedClass {
    pub fn new(points: Vec<Point>, functions: Vec<Vec<Label>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("class needs at least one point".into()));
        }
        let keys: BTreeSet<Vec<u64>> = points.iter().map(Point::key).collect();
        if keys.len() != points.len() {
            return Err(Error::InvalidInput("class points must be distinct".into()));
        }
        if let Some(f) = functions.iter().find(|f| f.len() != points.len()) {
            return Err(Error::InvalidInput(format!(
                "function has {} values for {} points",
                f.len(),
                points.len()
            )));
        }
        Ok(Self { points, functions })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new(c.points, c.functions)
    }

    pub fn is_negation_closed(&self) -> bool {
        let set: BTreeSet<Vec<i8>> = self.functions.iter().map(|f| f.iter().map(|l| l.as_i8()).collect()).collect();
        set.iter().all(|f| set.contains(&f.iter().map(|v| -v).collect::<Vec<_>>()))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_ENUM_DIM {
        return Err(Error::InvalidInput(format!("enumeration needs 1 <= d <= {MAX_ENUM_DIM}, got {d}")));
    }
    Ok(())
}

/// The embedded cube `{0,1}^d`; point `b` has bit `j` equal to `(b >> j) & 1`.
pub fn cube_points(d: usize) -> Result<Vec<Point>> {
    (0..1usize << d)
        .map(|b| embed_hypercube(&(0..d).map(|j| b >> j & 1 == 1).collect::<Vec<_>>()))
        .collect()
}

fn to_labels(mask: u32, n: usize) -> Vec<Label> {
    (0..n).map(|i| if mask >> i & 1 == 1 { Label::Pos } else { Label::Neg }).collect()
}

/// Every function on `{0,1}^d` computed by some decision list over single literals.
pub fn decision_list_class(d: usize) -> Result<EnumeratedClass> {
    check_dim(d)?;
    let n = 1usize << d;
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    // fires[j][pol]: points where bit j equals pol
    let fires: Vec<[u32; 2]> = (0..d)
        .map(|j| {
            let ones = (0..n).filter(|b| b >> j & 1 == 1).fold(0u32, |m, b| m | 1 << b);
            [full & !ones, ones]
        })
        .collect();
    let mut seen: BTreeSet<u32> = [0, full].into();
    let mut frontier: Vec<u32> = seen.iter().copied().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &g in &frontier {
            for lit in fires.iter().flatten() {
                for out in [0, full] {
                    let h = (lit & out) | (!lit & g);
                    if seen.insert(h) {
                        next.push(h);
                    }
                }
            }
        }
        frontier = next;
    }
    let functions = seen.into_iter().map(|m| to_labels(m, n)).collect();
    EnumeratedClass::new(cube_points(d)?, functions)
}

/// Labelings of the embedded cube realized by `sign(<w, x>)` with positive margin.
///
/// Every cube point's antipode is also a cube point, so only odd labelings
/// can qualify; each is tested by LP feasibility of `y <w, x> >= 1`.
pub fn halfspace_class(d: usize) -> Result<EnumeratedClass> {
    check_dim(d)?;
    let points = cube_points(d)?;
    let n = points.len();
    let half = n / 2;
    let mut functions = Vec::new();
    for mask in 0..1u32 << half {
        // point b and its antipode n - 1 - b get opposite labels
        let mut labels = vec![Label::Pos; n];
        for b in 0..half {
            let y = if mask >> b & 1 == 1 { Label::Pos } else { Label::Neg };
            labels[b] = y;
            labels[n - 1 - b] = -y;
        }
        // w = u - v with u, v >= 0; rows: -y <u - v, x> <= -1
        let a_ub = points
            .iter()
            .zip(&labels)
            .map(|(p, y)| {
                let r: Vec<f64> = p.coords().iter().map(|c| -y.value() * c).collect();
                r.iter().copied().chain(r.iter().map(|c| -c)).collect()
            })
            .collect();
        let lp = LinearProgram { c: vec![0.0; 2 * d], a_ub, b_ub: vec![-1.0; n], a_eq: vec![], b_eq: vec![] };
        if lp.feasible()? {
            functions.push(labels);
        }
    }
    EnumeratedClass::new(points, functions)
}
