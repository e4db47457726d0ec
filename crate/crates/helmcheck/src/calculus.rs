//! Frölicher–Nijenhuis calculus on the slit tangent bundle.
//!
//! Vector fields, (1,1)-tensor fields, k-forms and vector-valued l-forms
//! over the coordinate (co)frame `(dx^1..dx^n, dy^1..dy^n)`, with the
//! inner products `i_A`, exterior derivatives `d` and `d_A`, Lie
//! derivatives, FN brackets and the dynamical covariant derivative.
//!
//! Frame indices are flat: `0..n` are the `x`-directions, `n..2n` the
//! `y`-directions. Forms store one [`ScalarField`] per strictly increasing
//! index tuple; evaluation on arbitrary tuples antisymmetrizes by sign.

use crate::error::CalcError;
use crate::expr::{CoordIndex, PhasePoint, ScalarField};
use crate::geom::SprayGeometry;

/// Largest supported form degree.
pub const MAX_FORM_DEGREE: usize = 3;
/// Largest supported argument degree of a vector-valued form.
pub const MAX_VV_DEGREE: usize = 2;

/// All strictly increasing `k`-tuples over `0..m`, in lexicographic order.
pub fn increasing_tuples(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if k > m {
        return vec![];
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(m: usize, k: usize, start: usize, depth: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if depth == k {
            out.push(cur.clone());
            return;
        }
        for v in start..m {
            cur[depth] = v;
            rec(m, k, v + 1, depth + 1, cur, out);
        }
    }
    rec(m, k, 0, 0, &mut cur, &mut out);
    out
}

/// Sorts an index tuple, returning the permutation sign; `None` on repeats.
fn sort_signed(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v: Vec<usize> = idx.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((v, sign))
}

fn d_flat(f: &ScalarField, a: usize, n: usize) -> ScalarField {
    f.diff(CoordIndex::from_flat(a, n))
}

// ---------------------------------------------------------------------------
// Vector fields
// ---------------------------------------------------------------------------

/// A vector field with `2n` components over `(d/dx^i, d/dy^i)`.
#[derive(Debug, Clone)]
pub struct VectorField {
    n: usize,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(n: usize, comps: Vec<ScalarField>) -> VectorField {
        assert_eq!(comps.len(), 2 * n);
        VectorField { n, comps }
    }

    pub fn zero(n: usize) -> VectorField {
        VectorField::new(n, vec![ScalarField::zero(n); 2 * n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn comp(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn add(&self, rhs: &VectorField) -> VectorField {
        VectorField::new(
            self.n,
            (0..2 * self.n).map(|a| self.comps[a].add(&rhs.comps[a])).collect(),
        )
    }

    pub fn sub(&self, rhs: &VectorField) -> VectorField {
        VectorField::new(
            self.n,
            (0..2 * self.n).map(|a| self.comps[a].sub(&rhs.comps[a])).collect(),
        )
    }

    /// Directional derivative `X(f)`.
    pub fn apply_scalar(&self, f: &ScalarField) -> ScalarField {
        let mut acc = ScalarField::zero(self.n);
        for (a, xc) in self.comps.iter().enumerate() {
            acc = acc.add(&xc.mul(&d_flat(f, a, self.n)));
        }
        acc
    }

    pub fn eval(&self, p: &PhasePoint) -> Result<Vec<f64>, CalcError> {
        self.comps.iter().map(|c| Ok(c.eval(p)?)).collect()
    }

    /// Max |component| over the sample set, with the arg-max point.
    pub fn max_abs(&self, points: &[PhasePoint]) -> Result<(f64, PhasePoint), CalcError> {
        max_abs_fields(&self.comps, points)
    }
}

/// Lie bracket of two vector fields.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let n = x.n;
    let comps = (0..2 * n)
        .map(|a| {
            let mut acc = ScalarField::zero(n);
            for c in 0..2 * n {
                let t1 = x.comps[c].mul(&d_flat(&y.comps[a], c, n));
                let t2 = y.comps[c].mul(&d_flat(&x.comps[a], c, n));
                acc = acc.add(&t1.sub(&t2));
            }
            acc
        })
        .collect();
    VectorField::new(n, comps)
}

fn max_abs_fields(fields: &[ScalarField], points: &[PhasePoint]) -> Result<(f64, PhasePoint), CalcError> {
    let mut best = 0.0f64;
    let mut argmax = points
        .first()
        .cloned()
        .unwrap_or(PhasePoint { x: vec![], y: vec![] });
    for p in points {
        for f in fields {
            let v = f.eval(p)?.abs();
            if v > best {
                best = v;
                argmax = p.clone();
            }
        }
    }
    Ok((best, argmax))
}

// ---------------------------------------------------------------------------
// (1,1)-tensor fields
// ---------------------------------------------------------------------------

/// A (1,1)-tensor field: `2n x 2n` matrix of scalar fields.
/// Row = output frame index, column = input frame index.
#[derive(Debug, Clone)]
pub struct TensorField11 {
    n: usize,
    m: Vec<Vec<ScalarField>>,
}

impl TensorField11 {
    pub fn new(n: usize, m: Vec<Vec<ScalarField>>) -> TensorField11 {
        assert_eq!(m.len(), 2 * n);
        for row in &m {
            assert_eq!(row.len(), 2 * n);
        }
        TensorField11 { n, m }
    }

    pub fn build(n: usize, f: impl Fn(usize, usize) -> ScalarField) -> TensorField11 {
        TensorField11::new(
            n,
            (0..2 * n).map(|a| (0..2 * n).map(|b| f(a, b)).collect()).collect(),
        )
    }

    pub fn zero(n: usize) -> TensorField11 {
        TensorField11::build(n, |_, _| ScalarField::zero(n))
    }

    pub fn identity(n: usize) -> TensorField11 {
        TensorField11::build(n, |a, b| {
            if a == b {
                ScalarField::one(n)
            } else {
                ScalarField::zero(n)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn comp(&self, a: usize, b: usize) -> &ScalarField {
        &self.m[a][b]
    }

    pub fn add(&self, rhs: &TensorField11) -> TensorField11 {
        TensorField11::build(self.n, |a, b| self.m[a][b].add(&rhs.m[a][b]))
    }

    pub fn sub(&self, rhs: &TensorField11) -> TensorField11 {
        TensorField11::build(self.n, |a, b| self.m[a][b].sub(&rhs.m[a][b]))
    }

    pub fn scale(&self, c: f64) -> TensorField11 {
        TensorField11::build(self.n, |a, b| self.m[a][b].scale(c))
    }

    /// Matrix product `self ∘ rhs`.
    pub fn compose(&self, rhs: &TensorField11) -> TensorField11 {
        TensorField11::build(self.n, |a, b| {
            let mut acc = ScalarField::zero(self.n);
            for c in 0..2 * self.n {
                acc = acc.add(&self.m[a][c].mul(&rhs.m[c][b]));
            }
            acc
        })
    }

    /// Applies the tensor to a vector field.
    pub fn apply(&self, x: &VectorField) -> VectorField {
        let comps = (0..2 * self.n)
            .map(|a| {
                let mut acc = ScalarField::zero(self.n);
                for b in 0..2 * self.n {
                    acc = acc.add(&self.m[a][b].mul(x.comp(b)));
                }
                acc
            })
            .collect();
        VectorField::new(self.n, comps)
    }

    /// Column `b` as a vector field (the image of the frame vector `e_b`).
    pub fn column(&self, b: usize) -> VectorField {
        VectorField::new(self.n, (0..2 * self.n).map(|a| self.m[a][b].clone()).collect())
    }

    pub fn eval(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>, CalcError> {
        self.m
            .iter()
            .map(|row| row.iter().map(|c| Ok(c.eval(p)?)).collect())
            .collect()
    }

    pub fn max_abs(&self, points: &[PhasePoint]) -> Result<(f64, PhasePoint), CalcError> {
        let flat: Vec<ScalarField> = self.m.iter().flatten().cloned().collect();
        max_abs_fields(&flat, points)
    }

    /// View as a vector-valued 1-form.
    pub fn to_vvform(&self) -> VectorFormField {
        VectorFormField::build(self.n, 1, |a, t| self.m[a][t[0]].clone())
    }
}

// ---------------------------------------------------------------------------
// k-forms
// ---------------------------------------------------------------------------

/// A differential k-form, `k <= 3`, stored per strictly increasing tuple.
#[derive(Debug, Clone)]
pub struct FormField {
    n: usize,
    degree: usize,
    tuples: Vec<Vec<usize>>,
    comps: Vec<ScalarField>,
}

impl FormField {
    pub fn build(n: usize, degree: usize, f: impl Fn(&[usize]) -> ScalarField) -> FormField {
        assert!(degree <= MAX_FORM_DEGREE);
        let tuples = increasing_tuples(2 * n, degree);
        let comps = tuples.iter().map(|t| f(t)).collect();
        FormField { n, degree, tuples, comps }
    }

    pub fn zero(n: usize, degree: usize) -> FormField {
        FormField::build(n, degree, |_| ScalarField::zero(n))
    }

    /// A 0-form wrapping one scalar field.
    pub fn scalar(f: &ScalarField) -> FormField {
        let n = f.dim();
        let g = f.clone();
        FormField::build(n, 0, move |_| g.clone())
    }

    /// A 1-form from its `2n` coframe components.
    pub fn one_form(n: usize, comps: Vec<ScalarField>) -> FormField {
        assert_eq!(comps.len(), 2 * n);
        FormField::build(n, 1, |t| comps[t[0]].clone())
    }

    /// A semi-basic 1-form `theta_i dx^i` from its `n` base components.
    pub fn semi_basic(n: usize, theta: &[ScalarField]) -> FormField {
        assert_eq!(theta.len(), n);
        FormField::build(n, 1, |t| {
            if t[0] < n {
                theta[t[0]].clone()
            } else {
                ScalarField::zero(n)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// Component for a strictly increasing tuple.
    pub fn comp(&self, t: &[usize]) -> &ScalarField {
        let idx = self
            .tuples
            .iter()
            .position(|u| u == t)
            .expect("tuple not strictly increasing or out of range");
        &self.comps[idx]
    }

    /// Component for an arbitrary tuple, antisymmetrized by sign.
    pub fn comp_signed(&self, idx: &[usize]) -> ScalarField {
        match sort_signed(idx) {
            None => ScalarField::zero(self.n),
            Some((sorted, sign)) => {
                let c = self.comp(&sorted);
                if sign > 0.0 {
                    c.clone()
                } else {
                    c.neg()
                }
            }
        }
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn add(&self, rhs: &FormField) -> FormField {
        assert_eq!(self.degree, rhs.degree);
        FormField::build(self.n, self.degree, |t| self.comp(t).add(rhs.comp(t)))
    }

    pub fn sub(&self, rhs: &FormField) -> FormField {
        assert_eq!(self.degree, rhs.degree);
        FormField::build(self.n, self.degree, |t| self.comp(t).sub(rhs.comp(t)))
    }

    pub fn scale(&self, c: f64) -> FormField {
        FormField::build(self.n, self.degree, |t| self.comp(t).scale(c))
    }

    /// Evaluates the form on `k` concrete tangent vectors at `p`.
    pub fn eval_on(&self, p: &PhasePoint, args: &[Vec<f64>]) -> Result<f64, CalcError> {
        assert_eq!(args.len(), self.degree);
        let k = self.degree;
        let mut acc = 0.0;
        for (idx, t) in self.tuples.iter().enumerate() {
            let c = self.comps[idx].eval(p)?;
            if c == 0.0 {
                continue;
            }
            // det of the k x k minor picking rows t from the argument matrix
            let det = match k {
                0 => 1.0,
                1 => args[0][t[0]],
                2 => args[0][t[0]] * args[1][t[1]] - args[0][t[1]] * args[1][t[0]],
                3 => {
                    let m = |i: usize, j: usize| args[i][t[j]];
                    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
                }
                _ => unreachable!(),
            };
            acc += c * det;
        }
        Ok(acc)
    }

    pub fn max_abs(&self, points: &[PhasePoint]) -> Result<(f64, PhasePoint), CalcError> {
        max_abs_fields(&self.comps, points)
    }
}

/// Exterior derivative `d: k -> k+1`.
pub fn exterior_derivative(omega: &FormField) -> Result<FormField, CalcError> {
    let k = omega.degree();
    if k + 1 > MAX_FORM_DEGREE {
        return Err(CalcError::DegreeOverflow { degree: k + 1, max: MAX_FORM_DEGREE });
    }
    let n = omega.dim();
    Ok(FormField::build(n, k + 1, |t| {
        let mut acc = ScalarField::zero(n);
        for (j, &a) in t.iter().enumerate() {
            let mut rest: Vec<usize> = t.to_vec();
            rest.remove(j);
            let term = d_flat(omega.comp(&rest), a, n);
            acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }))
}

// ---------------------------------------------------------------------------
// Vector-valued l-forms
// ---------------------------------------------------------------------------

/// A vector-valued l-form, `l <= 2`: one scalar component per value index
/// `a` in `0..2n` and strictly increasing argument tuple.
#[derive(Debug, Clone)]
pub struct VectorFormField {
    n: usize,
    degree: usize,
    tuples: Vec<Vec<usize>>,
    comps: Vec<Vec<ScalarField>>,
}

impl VectorFormField {
    pub fn build(n: usize, degree: usize, f: impl Fn(usize, &[usize]) -> ScalarField) -> VectorFormField {
        assert!(degree <= MAX_VV_DEGREE);
        let tuples = increasing_tuples(2 * n, degree);
        let comps = (0..2 * n)
            .map(|a| tuples.iter().map(|t| f(a, t)).collect())
            .collect();
        VectorFormField { n, degree, tuples, comps }
    }

    pub fn zero(n: usize, degree: usize) -> VectorFormField {
        VectorFormField::build(n, degree, |_, _| ScalarField::zero(n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn comp(&self, a: usize, t: &[usize]) -> &ScalarField {
        let idx = self
            .tuples
            .iter()
            .position(|u| u == t)
            .expect("tuple not strictly increasing or out of range");
        &self.comps[a][idx]
    }

    pub fn comp_signed(&self, a: usize, idx: &[usize]) -> ScalarField {
        match sort_signed(idx) {
            None => ScalarField::zero(self.n),
            Some((sorted, sign)) => {
                let c = self.comp(a, &sorted);
                if sign > 0.0 {
                    c.clone()
                } else {
                    c.neg()
                }
            }
        }
    }

    pub fn add(&self, rhs: &VectorFormField) -> VectorFormField {
        assert_eq!(self.degree, rhs.degree);
        VectorFormField::build(self.n, self.degree, |a, t| self.comp(a, t).add(rhs.comp(a, t)))
    }

    pub fn sub(&self, rhs: &VectorFormField) -> VectorFormField {
        assert_eq!(self.degree, rhs.degree);
        VectorFormField::build(self.n, self.degree, |a, t| self.comp(a, t).sub(rhs.comp(a, t)))
    }

    pub fn scale(&self, c: f64) -> VectorFormField {
        VectorFormField::build(self.n, self.degree, |a, t| self.comp(a, t).scale(c))
    }

    /// Inserts a vector field into the first argument slot (`l >= 1`),
    /// lowering the argument degree by one. For `l = 1` the result is a
    /// (1,1)-tensor acting as `X ↦ A(V, X)` would for `l = 2`.
    pub fn insert_vector(&self, v: &VectorField) -> VectorFormField {
        assert!(self.degree >= 1);
        VectorFormField::build(self.n, self.degree - 1, |a, t| {
            let mut acc = ScalarField::zero(self.n);
            for c in 0..2 * self.n {
                let mut idx = vec![c];
                idx.extend_from_slice(t);
                acc = acc.add(&v.comp(c).mul(&self.comp_signed(a, &idx)));
            }
            acc
        })
    }

    /// View an argument-degree-1 vector form as a (1,1)-tensor.
    pub fn to_tensor11(&self) -> TensorField11 {
        assert_eq!(self.degree, 1);
        TensorField11::build(self.n, |a, b| self.comp(a, &[b]).clone())
    }

    /// Composes a (1,1)-tensor with the values: `(B ∘ A)(X..) = B(A(X..))`.
    pub fn compose_values(&self, b: &TensorField11) -> VectorFormField {
        VectorFormField::build(self.n, self.degree, |a, t| {
            let mut acc = ScalarField::zero(self.n);
            for c in 0..2 * self.n {
                acc = acc.add(&b.comp(a, c).mul(self.comp(c, t)));
            }
            acc
        })
    }

    pub fn max_abs(&self, points: &[PhasePoint]) -> Result<(f64, PhasePoint), CalcError> {
        let flat: Vec<ScalarField> = self.comps.iter().flatten().cloned().collect();
        max_abs_fields(&flat, points)
    }
}

/// Exterior inner product: applies `B` inside each argument slot of `A`,
/// `(B ∧̄ A)(X_1..X_k) = Σ_i A(X_1,..,B X_i,..,X_k)`. For `B = Id` this
/// is `k·A`.
pub fn bar_wedge(b: &TensorField11, a: &VectorFormField) -> VectorFormField {
    let n = a.dim();
    VectorFormField::build(n, a.degree(), |val, t| {
        let mut acc = ScalarField::zero(n);
        for (slot, &ti) in t.iter().enumerate() {
            for c in 0..2 * n {
                let bc = b.comp(c, ti);
                if bc.is_zero() {
                    continue;
                }
                let mut idx: Vec<usize> = t.to_vec();
                idx[slot] = c;
                acc = acc.add(&bc.mul(&a.comp_signed(val, &idx)));
            }
        }
        acc
    })
}

// ---------------------------------------------------------------------------
// Inner products i_A
// ---------------------------------------------------------------------------

/// Inner product `i_X` of a k-form with a vector field (`l = 0`).
pub fn contract_vector(x: &VectorField, omega: &FormField) -> FormField {
    let n = omega.dim();
    if omega.degree() == 0 {
        return FormField::zero(n, 0);
    }
    let k = omega.degree();
    FormField::build(n, k - 1, |t| {
        let mut acc = ScalarField::zero(n);
        for c in 0..2 * n {
            let xc = x.comp(c);
            if xc.is_zero() {
                continue;
            }
            let mut idx = vec![c];
            idx.extend_from_slice(t);
            acc = acc.add(&xc.mul(&omega.comp_signed(&idx)));
        }
        acc
    })
}

/// Inner product `i_A` of a k-form with a (1,1)-tensor (`l = 1`):
/// `(i_A ω)(X_1..X_k) = Σ_i ω(X_1,..,A X_i,..,X_k)`.
pub fn inner_tensor11(a: &TensorField11, omega: &FormField) -> FormField {
    let n = omega.dim();
    let k = omega.degree();
    if k == 0 {
        return FormField::zero(n, 0);
    }
    FormField::build(n, k, |t| {
        let mut acc = ScalarField::zero(n);
        for (slot, &ti) in t.iter().enumerate() {
            for c in 0..2 * n {
                let ac = a.comp(c, ti);
                if ac.is_zero() {
                    continue;
                }
                let mut idx: Vec<usize> = t.to_vec();
                idx[slot] = c;
                acc = acc.add(&ac.mul(&omega.comp_signed(&idx)));
            }
        }
        acc
    })
}

/// Inner product `i_A` with a vector-valued 2-form (`l = 2`), producing a
/// (k+1)-form:
/// `(i_A ω)(X_1..X_{k+1}) = Σ_{i<j} (-1)^{i+j+1} ω(A(X_i,X_j), X_1..î..ĵ..)`.
pub fn inner_vvform2(a: &VectorFormField, omega: &FormField) -> Result<FormField, CalcError> {
    assert_eq!(a.degree(), 2);
    let n = omega.dim();
    let k = omega.degree();
    if k == 0 {
        return Ok(FormField::zero(n, 1));
    }
    if k + 1 > MAX_FORM_DEGREE {
        return Err(CalcError::DegreeOverflow { degree: k + 1, max: MAX_FORM_DEGREE });
    }
    Ok(FormField::build(n, k + 1, |t| {
        let mut acc = ScalarField::zero(n);
        for i in 0..t.len() {
            for j in (i + 1)..t.len() {
                let rest: Vec<usize> = t
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != i && *s != j)
                    .map(|(_, &v)| v)
                    .collect();
                let sign_pos = (i + j + 1) % 2 == 0;
                for c in 0..2 * n {
                    let ac = a.comp(c, &[t[i], t[j]]);
                    if ac.is_zero() {
                        continue;
                    }
                    let mut idx = vec![c];
                    idx.extend_from_slice(&rest);
                    let term = ac.mul(&omega.comp_signed(&idx));
                    acc = if sign_pos { acc.add(&term) } else { acc.sub(&term) };
                }
            }
        }
        acc
    }))
}

/// A vector-valued form usable as the subscript of `i_A` and `d_A`.
#[derive(Debug, Clone)]
pub enum VectorValued {
    Vector(VectorField),
    Tensor(TensorField11),
    Form2(VectorFormField),
}

impl VectorValued {
    pub fn degree(&self) -> usize {
        match self {
            VectorValued::Vector(_) => 0,
            VectorValued::Tensor(_) => 1,
            VectorValued::Form2(_) => 2,
        }
    }
}

/// Generic inner product `i_A ω`, dispatching on the argument degree of `A`.
pub fn inner_product(a: &VectorValued, omega: &FormField) -> Result<FormField, CalcError> {
    match a {
        VectorValued::Vector(x) => Ok(contract_vector(x, omega)),
        VectorValued::Tensor(t) => Ok(inner_tensor11(t, omega)),
        VectorValued::Form2(f) => inner_vvform2(f, omega),
    }
}

/// Exterior derivative with respect to `A`:
/// `d_A = i_A ∘ d - (-1)^{l-1} d ∘ i_A`, mapping k-forms to (k+l)-forms.
/// For `l = 0` this is the Lie derivative (Cartan's formula).
pub fn d_a(a: &VectorValued, omega: &FormField) -> Result<FormField, CalcError> {
    let l = a.degree();
    let k = omega.degree();
    if k + l > MAX_FORM_DEGREE {
        return Err(CalcError::DegreeOverflow { degree: k + l, max: MAX_FORM_DEGREE });
    }
    let first = inner_product(a, &exterior_derivative(omega)?)?;
    let second = if k == 0 {
        // i_A of a 0-form vanishes
        FormField::zero(omega.dim(), k + l)
    } else {
        exterior_derivative(&inner_product(a, omega)?)?
    };
    // (-1)^{l-1}: -1 for even l (including l = 0), +1 for odd l
    Ok(if l % 2 == 1 { first.sub(&second) } else { first.add(&second) })
}

/// `d_J`-style shorthand for a (1,1)-tensor subscript.
pub fn d_tensor(a: &TensorField11, omega: &FormField) -> Result<FormField, CalcError> {
    d_a(&VectorValued::Tensor(a.clone()), omega)
}

// ---------------------------------------------------------------------------
// Lie derivatives
// ---------------------------------------------------------------------------

/// Lie derivative of a k-form along a vector field, by the component
/// formula; Cartan's formula is checked in the tests.
pub fn lie_derivative_form(x: &VectorField, omega: &FormField) -> FormField {
    let n = omega.dim();
    FormField::build(n, omega.degree(), |t| {
        let mut acc = x.apply_scalar(omega.comp(t));
        for (slot, &ti) in t.iter().enumerate() {
            for c in 0..2 * n {
                let dxc = d_flat(x.comp(c), ti, n);
                if dxc.is_zero() {
                    continue;
                }
                let mut idx: Vec<usize> = t.to_vec();
                idx[slot] = c;
                acc = acc.add(&dxc.mul(&omega.comp_signed(&idx)));
            }
        }
        acc
    })
}

/// Lie derivative of a (1,1)-tensor: `L_X A = L_X ∘ A - A ∘ L_X`.
pub fn lie_derivative_tensor(x: &VectorField, a: &TensorField11) -> TensorField11 {
    let n = a.dim();
    TensorField11::build(n, |r, b| {
        // X^c ∂_c A^r_b - A^c_b ∂_c X^r + A^r_c ∂_b X^c
        let mut acc = ScalarField::zero(n);
        for c in 0..2 * n {
            acc = acc.add(&x.comp(c).mul(&d_flat(a.comp(r, b), c, n)));
            acc = acc.sub(&a.comp(c, b).mul(&d_flat(x.comp(r), c, n)));
            acc = acc.add(&a.comp(r, c).mul(&d_flat(x.comp(c), b, n)));
        }
        acc
    })
}

/// Lie derivative of a vector-valued l-form.
pub fn lie_derivative_vvform(x: &VectorField, a: &VectorFormField) -> VectorFormField {
    let n = a.dim();
    VectorFormField::build(n, a.degree(), |val, t| {
        let mut acc = ScalarField::zero(n);
        for c in 0..2 * n {
            acc = acc.add(&x.comp(c).mul(&d_flat(a.comp(val, t), c, n)));
            acc = acc.sub(&a.comp(c, t).mul(&d_flat(x.comp(val), c, n)));
        }
        for (slot, &ti) in t.iter().enumerate() {
            for c in 0..2 * n {
                let dxc = d_flat(x.comp(c), ti, n);
                if dxc.is_zero() {
                    continue;
                }
                let mut idx: Vec<usize> = t.to_vec();
                idx[slot] = c;
                acc = acc.add(&dxc.mul(&a.comp_signed(val, &idx)));
            }
        }
        acc
    })
}

// ---------------------------------------------------------------------------
// Frölicher–Nijenhuis brackets
// ---------------------------------------------------------------------------

/// FN bracket of two (1,1)-tensor fields, a vector-valued 2-form.
pub fn fn_bracket_11(a: &TensorField11, b: &TensorField11) -> VectorFormField {
    let n = a.dim();
    let tuples = increasing_tuples(2 * n, 2);
    // per-tuple vector values; frame brackets [e_i, e_j] vanish
    let mut columns: Vec<VectorField> = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let (i, j) = (t[0], t[1]);
        let ai = a.column(i);
        let aj = a.column(j);
        let bi = b.column(i);
        let bj = b.column(j);
        let mut acc = lie_bracket(&ai, &bj);
        acc = acc.add(&lie_bracket(&bi, &aj));
        // A[e_i, B e_j] with [e_i, Z] = ∂_i Z
        acc = acc.sub(&a.apply(&partial_vector(&bj, i, n)));
        acc = acc.sub(&b.apply(&partial_vector(&aj, i, n)));
        // A[B e_i, e_j] with [Z, e_j] = -∂_j Z
        acc = acc.add(&a.apply(&partial_vector(&bi, j, n)));
        acc = acc.add(&b.apply(&partial_vector(&ai, j, n)));
        columns.push(acc);
    }
    VectorFormField::build(n, 2, |val, t| {
        let idx = tuples.iter().position(|u| u == t).unwrap();
        columns[idx].comp(val).clone()
    })
}

fn partial_vector(z: &VectorField, dir: usize, n: usize) -> VectorField {
    VectorField::new(n, (0..2 * n).map(|a| d_flat(z.comp(a), dir, n)).collect())
}

/// Nijenhuis tensor `N_A = (1/2)[A,A]`.
pub fn nijenhuis(a: &TensorField11) -> VectorFormField {
    let n = a.dim();
    let tuples = increasing_tuples(2 * n, 2);
    let mut columns: Vec<VectorField> = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let (i, j) = (t[0], t[1]);
        let ai = a.column(i);
        let aj = a.column(j);
        let mut acc = lie_bracket(&ai, &aj);
        acc = acc.sub(&a.apply(&partial_vector(&aj, i, n)));
        acc = acc.add(&a.apply(&partial_vector(&ai, j, n)));
        columns.push(acc);
    }
    VectorFormField::build(n, 2, |val, t| {
        let idx = tuples.iter().position(|u| u == t).unwrap();
        columns[idx].comp(val).clone()
    })
}

// ---------------------------------------------------------------------------
// Commutation formulae
// ---------------------------------------------------------------------------

/// Max residuals of the three commutation identities between `i_A`, `d_B`,
/// Lie derivatives and FN brackets, evaluated at the sample points.
#[derive(Debug, Clone)]
pub struct CommutationReport {
    /// `i_A d_B - d_B i_A = d_{B∘A} - i_{[A,B]}`
    pub inner_outer: f64,
    /// `L_X i_A - i_A L_X = i_{[X,A]}`
    pub lie_inner: f64,
    /// `i_X d_A + d_A i_X = L_{AX} - i_{[X,A]}` (generalized Cartan)
    pub cartan: f64,
}

pub fn commutation_check(
    a: &TensorField11,
    b: &TensorField11,
    x: &VectorField,
    omega: &FormField,
    points: &[PhasePoint],
) -> Result<CommutationReport, CalcError> {
    // identity 1: i_A d_B - d_B i_A - d_{B∘A} + i_{[A,B]} = 0
    let lhs1 = inner_tensor11(a, &d_tensor(b, omega)?)
        .sub(&d_tensor(b, &inner_tensor11(a, omega))?);
    let rhs1 = d_tensor(&b.compose(a), omega)?
        .sub(&inner_vvform2(&fn_bracket_11(a, b), omega)?);
    let (inner_outer, _) = lhs1.sub(&rhs1).max_abs(points)?;

    // identity 2: L_X i_A - i_A L_X - i_{[X,A]} = 0
    let lxa = lie_derivative_tensor(x, a);
    let lhs2 = lie_derivative_form(x, &inner_tensor11(a, omega))
        .sub(&inner_tensor11(a, &lie_derivative_form(x, omega)));
    let rhs2 = inner_tensor11(&lxa, omega);
    let (lie_inner, _) = lhs2.sub(&rhs2).max_abs(points)?;

    // identity 3: i_X d_A + d_A i_X - L_{AX} + i_{[X,A]} = 0
    let ax = a.apply(x);
    let lhs3 = contract_vector(x, &d_tensor(a, omega)?)
        .add(&d_tensor(a, &contract_vector(x, omega))?);
    let rhs3 = lie_derivative_form(&ax, omega).sub(&inner_tensor11(&lxa, omega));
    let (cartan, _) = lhs3.sub(&rhs3).max_abs(points)?;

    Ok(CommutationReport { inner_outer, lie_inner, cartan })
}

// ---------------------------------------------------------------------------
// Dynamical covariant derivative
// ---------------------------------------------------------------------------

/// Geometric objects the dynamical covariant derivative acts on.
#[derive(Debug, Clone)]
pub enum GeomObject {
    Scalar(ScalarField),
    Vector(VectorField),
    Form(FormField),
    Tensor(TensorField11),
}

/// `∇f = S(f)`.
pub fn nabla_scalar(geom: &SprayGeometry, f: &ScalarField) -> ScalarField {
    geom.spray_field().apply_scalar(f)
}

/// `∇X = h[S, hX] + v[S, vX]`.
pub fn nabla_vector(geom: &SprayGeometry, x: &VectorField) -> VectorField {
    let s = geom.spray_field();
    let hx = geom.horizontal().apply(x);
    let vx = geom.vertical().apply(x);
    let t1 = geom.horizontal().apply(&lie_bracket(s, &hx));
    let t2 = geom.vertical().apply(&lie_bracket(s, &vx));
    t1.add(&t2)
}

/// `∇ω = L_S ω - i_Ψ ω` on k-forms.
pub fn nabla_form(geom: &SprayGeometry, omega: &FormField) -> FormField {
    lie_derivative_form(geom.spray_field(), omega).sub(&inner_tensor11(geom.psi(), omega))
}

/// `∇A = L_S A + Ψ∘A - A∘Ψ` on (1,1)-tensors.
pub fn nabla_tensor(geom: &SprayGeometry, a: &TensorField11) -> TensorField11 {
    let psi = geom.psi();
    lie_derivative_tensor(geom.spray_field(), a)
        .add(&psi.compose(a))
        .sub(&a.compose(psi))
}

/// `∇A = L_S A + Ψ∘A - A ∧̄ Ψ` on vector-valued l-forms.
pub fn nabla_vvform(geom: &SprayGeometry, a: &VectorFormField) -> VectorFormField {
    let psi = geom.psi();
    lie_derivative_vvform(geom.spray_field(), a)
        .add(&a.compose_values(psi))
        .sub(&bar_wedge(psi, a))
}

/// Dispatching form of the dynamical covariant derivative.
pub fn nabla(geom: &SprayGeometry, obj: &GeomObject) -> Result<GeomObject, CalcError> {
    match obj {
        GeomObject::Scalar(f) => Ok(GeomObject::Scalar(nabla_scalar(geom, f))),
        GeomObject::Vector(x) => Ok(GeomObject::Vector(nabla_vector(geom, x))),
        GeomObject::Form(w) => {
            if w.degree() > 2 {
                return Err(CalcError::UnsupportedKind(format!(
                    "nabla on {}-forms (max 2)",
                    w.degree()
                )));
            }
            Ok(GeomObject::Form(nabla_form(geom, w)))
        }
        GeomObject::Tensor(a) => Ok(GeomObject::Tensor(nabla_tensor(geom, a))),
    }
}

/// `d_Ψ` shorthand used by the `d∇ - ∇d` commutation tests.
pub fn d_psi(geom: &SprayGeometry, omega: &FormField) -> Result<FormField, CalcError> {
    d_tensor(geom.psi(), omega)
}
