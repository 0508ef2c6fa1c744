//! Minimal reverse-mode differentiation over vectors.
//!
//! Every node holds a dense `Vec<f64>`. Parameters live outside the tape and
//! are addressed by their index in the model's tensor list; `backward`
//! accumulates into one gradient buffer per tensor.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(usize),
    /// Row-major `rows × x.len()` matrix tensor times `x`.
    MatVec(usize, Var),
    Add(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Vec<f64>),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Mean(Vec<Var>),
    LogSoftmax(Var),
    /// `-x[k]` as a length-1 node.
    NegPick(Var, usize),
    /// `scale · Σ xᵢ` over length-1 nodes.
    ScaledSum(Vec<Var>, f64),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p [&'p [f64]],
    nodes: Vec<Node>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [&'p [f64]]) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn len(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn param(&mut self, tensor: usize) -> Var {
        let value = self.params[tensor].to_vec();
        self.push(value, Op::Param(tensor))
    }

    pub fn matvec(&mut self, tensor: usize, x: Var) -> Var {
        let w = self.params[tensor];
        let xv = &self.nodes[x.0].value;
        let cols = xv.len();
        debug_assert_eq!(w.len() % cols, 0);
        let out: Vec<f64> = w
            .chunks_exact(cols)
            .map(|row| row.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        self.push(out, Op::MatVec(tensor, x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = zip_with(self.value(a), self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = zip_with(self.value(a), self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    pub fn mul_const(&mut self, a: Var, c: Vec<f64>) -> Var {
        let out = zip_with(self.value(a), &c, |x, y| x * y);
        self.push(out, Op::MulConst(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(out, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let out = parts.iter().flat_map(|&p| self.value(p).iter().copied()).collect();
        self.push(out, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let out = self.value(a)[start..start + len].to_vec();
        self.push(out, Op::Slice(a, start))
    }

    pub fn mean(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let n = parts.len() as f64;
        let mut out = vec![0.0; self.len(parts[0])];
        for &p in parts {
            for (o, v) in out.iter_mut().zip(self.value(p)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n);
        self.push(out, Op::Mean(parts.to_vec()))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let out = x.iter().map(|v| v - lse).collect();
        self.push(out, Op::LogSoftmax(a))
    }

    pub fn neg_pick(&mut self, a: Var, k: usize) -> Var {
        let out = vec![-self.value(a)[k]];
        self.push(out, Op::NegPick(a, k))
    }

    pub fn scaled_sum(&mut self, parts: &[Var], scale: f64) -> Var {
        let s: f64 = parts.iter().map(|&p| self.value(p)[0]).sum();
        self.push(vec![scale * s], Op::ScaledSum(parts.to_vec(), scale))
    }

    /// Gradients of the scalar `out` with respect to every parameter tensor.
    pub fn backward(&self, out: Var) -> Vec<Vec<f64>> {
        let mut pgrad: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut grad: Vec<Option<Vec<f64>>> = vec![None; out.0 + 1];
        grad[out.0] = Some(vec![1.0; self.len(out)]);

        fn acc(grad: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grad[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=out.0).rev() {
            let Some(g) = grad[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Const => {}
                Op::Param(t) => {
                    for (p, d) in pgrad[*t].iter_mut().zip(&g) {
                        *p += d;
                    }
                }
                Op::MatVec(t, x) => {
                    let w = self.params[*t];
                    let xv = self.value(*x);
                    let cols = xv.len();
                    let gx = acc(&mut grad, *x, cols);
                    let pg = &mut pgrad[*t];
                    for (r, &gr) in g.iter().enumerate() {
                        if gr == 0.0 {
                            continue;
                        }
                        let row = &w[r * cols..(r + 1) * cols];
                        let prow = &mut pg[r * cols..(r + 1) * cols];
                        for c in 0..cols {
                            gx[c] += gr * row[c];
                            prow[c] += gr * xv[c];
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        let ga = acc(&mut grad, v, g.len());
                        ga.iter_mut().zip(&g).for_each(|(x, d)| *x += d);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).to_vec(), self.value(*b).to_vec());
                    let ga = acc(&mut grad, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * bv[k];
                    }
                    let gb = acc(&mut grad, *b, g.len());
                    for k in 0..g.len() {
                        gb[k] += g[k] * av[k];
                    }
                }
                Op::MulConst(a, c) => {
                    let ga = acc(&mut grad, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * c[k];
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = acc(&mut grad, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * y[k] * (1.0 - y[k]);
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let ga = acc(&mut grad, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * (1.0 - y[k] * y[k]);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.len(p);
                        let gp = acc(&mut grad, p, n);
                        for k in 0..n {
                            gp[k] += g[off + k];
                        }
                        off += n;
                    }
                }
                Op::Slice(a, start) => {
                    let n = self.len(*a);
                    let ga = acc(&mut grad, *a, n);
                    for k in 0..g.len() {
                        ga[start + k] += g[k];
                    }
                }
                Op::Mean(parts) => {
                    let n = parts.len() as f64;
                    for &p in parts {
                        let gp = acc(&mut grad, p, g.len());
                        for k in 0..g.len() {
                            gp[k] += g[k] / n;
                        }
                    }
                }
                Op::LogSoftmax(a) => {
                    let y = &node.value;
                    let total: f64 = g.iter().sum();
                    let ga = acc(&mut grad, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] - y[k].exp() * total;
                    }
                }
                Op::NegPick(a, k) => {
                    let n = self.len(*a);
                    acc(&mut grad, *a, n)[*k] -= g[0];
                }
                Op::ScaledSum(parts, scale) => {
                    for &p in parts {
                        acc(&mut grad, p, 1)[0] += scale * g[0];
                    }
                }
            }
        }
        pgrad
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "tape operand lengths differ");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}
