//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation as a node with at most two parents and
//! the local partial derivative towards each. [`Var::backward`] sweeps the
//! tape once in reverse and returns the gradient of the output with respect
//! to every recorded node.
//!
//! Geometry and loss code is written against the [`Real`] trait, which is
//! implemented both by `f64` (plain evaluation) and by [`Var`] (taped
//! evaluation), so the forward computation is shared between the two.
//!
//! At kinks the subgradient of the left branch is used: `relu'(0) = 0`,
//! `|x|'(0) = 0`, `sqrt'(0) = 0` and `max(a, b)` routes to `a` on ties.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numbers the loss code can be evaluated on.
pub trait Real:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    /// A constant living wherever `self` lives.
    fn lift(self, c: f64) -> Self;
    /// `max(0, x)`.
    fn relu(self) -> Self;
    fn max(self, other: Self) -> Self;
    fn min(self, other: Self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// `t · ln(1 + e^(x/t))`.
    fn softplus(self, t: f64) -> Self;
    /// Clamps to `[0, 1]`.
    fn clamp01(self) -> Self;
}

/// Numerically stable `t · ln(1 + e^(x/t))`.
pub fn softplus(x: f64, t: f64) -> f64 {
    let z = x / t;
    if z > 0.0 {
        t * (z + (-z).exp().ln_1p())
    } else {
        t * z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Real for f64 {
    fn value(self) -> f64 {
        self
    }
    fn lift(self, c: f64) -> Self {
        c
    }
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn softplus(self, t: f64) -> Self {
        softplus(self, t)
    }
    fn clamp01(self) -> Self {
        self.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Records operations for one backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        (nodes.len() - 1) as u32
    }

    /// An independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [0, 0],
            partials: [0.0, 0.0],
        });
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.var(value)
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    fn unary(&self, a: Var<'_>, val: f64, da: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [a.idx, a.idx],
            partials: [da, 0.0],
        });
        Var {
            tape: self,
            idx,
            val,
        }
    }

    fn binary(&self, a: Var<'_>, b: Var<'_>, val: f64, da: f64, db: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [a.idx, b.idx],
            partials: [da, db],
        });
        Var {
            tape: self,
            idx,
            val,
        }
    }
}

/// Gradient of one output with respect to every node on the tape.
pub struct Gradients(Vec<f64>);

impl Gradients {
    pub fn wrt(&self, var: Var<'_>) -> f64 {
        self.0[var.idx as usize]
    }

    pub fn collect(&self, vars: &[Var<'_>]) -> Vec<f64> {
        vars.iter().map(|v| self.wrt(*v)).collect()
    }
}

/// A value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.val)
    }
}

impl<'t> Var<'t> {
    pub fn backward(self) -> Gradients {
        let nodes = self.tape.nodes.borrow();
        let mut grad = vec![0.0; nodes.len()];
        grad[self.idx as usize] = 1.0;
        for i in (0..=self.idx as usize).rev() {
            let g = grad[i];
            if g == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                if node.partials[k] != 0.0 {
                    grad[node.parents[k] as usize] += node.partials[k] * g;
                }
            }
        }
        Gradients(grad)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self::Output {
        self.tape.binary(self, rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self::Output {
        self.tape.binary(self, rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self::Output {
        self.tape
            .binary(self, rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self::Output {
        let q = self.val / rhs.val;
        self.tape.binary(self, rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self::Output {
        self.tape.unary(self, -self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self::Output {
        self.tape.unary(self, self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Self::Output {
        self.tape.unary(self, self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self::Output {
        self.tape.unary(self, self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Self::Output {
        self.tape.unary(self, self.val / rhs, 1.0 / rhs)
    }
}

impl Real for Var<'_> {
    fn value(self) -> f64 {
        self.val
    }
    fn lift(self, c: f64) -> Self {
        self.tape.constant(c)
    }
    fn relu(self) -> Self {
        if self.val > 0.0 {
            self.tape.unary(self, self.val, 1.0)
        } else {
            self.tape.unary(self, 0.0, 0.0)
        }
    }
    fn max(self, other: Self) -> Self {
        if self.val >= other.val {
            self.tape.binary(self, other, self.val, 1.0, 0.0)
        } else {
            self.tape.binary(self, other, other.val, 0.0, 1.0)
        }
    }
    fn min(self, other: Self) -> Self {
        if self.val <= other.val {
            self.tape.binary(self, other, self.val, 1.0, 0.0)
        } else {
            self.tape.binary(self, other, other.val, 0.0, 1.0)
        }
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.tape.unary(self, e, e)
    }
    fn ln(self) -> Self {
        self.tape.unary(self, self.val.ln(), 1.0 / self.val)
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.tape.unary(self, s, d)
    }
    fn abs(self) -> Self {
        let d = if self.val > 0.0 {
            1.0
        } else if self.val < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.tape.unary(self, self.val.abs(), d)
    }
    fn softplus(self, t: f64) -> Self {
        self.tape
            .unary(self, softplus(self.val, t), sigmoid(self.val / t))
    }
    fn clamp01(self) -> Self {
        if self.val <= 0.0 {
            self.tape.unary(self, 0.0, 0.0)
        } else if self.val >= 1.0 {
            self.tape.unary(self, 1.0, 0.0)
        } else {
            self.tape.unary(self, self.val, 1.0)
        }
    }
}

/// Sum of a non-empty slice.
pub fn sum<T: Real>(xs: &[T]) -> T {
    let mut it = xs.iter().copied();
    let first = it.next().expect("sum of empty slice");
    it.fold(first, |acc, x| acc + x)
}

/// Euclidean norm of a non-empty slice.
pub fn norm<T: Real>(xs: &[T]) -> T {
    let squares: Vec<T> = xs.iter().map(|&x| x * x).collect();
    sum(&squares).sqrt()
}
