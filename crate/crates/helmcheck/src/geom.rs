//! Semisprays and their induced geometry.
//!
//! From the coefficients `G^i` of a semispray
//! `S = y^i d/dx^i - 2 G^i d/dy^i` we build, once and eagerly:
//! the nonlinear connection `N^i_j = dG^i/dy^j`, the horizontal and
//! vertical projectors `h`, `v`, the almost-product structure `Γ`,
//! the almost-complex structure `F`, the Jacobi endomorphism `Φ`,
//! the curvature `R = (1/2)[h,h]` and the tensor `Ψ` driving the
//! dynamical covariant derivative.

use crate::calculus::{
    fn_bracket_11, lie_bracket, lie_derivative_tensor, TensorField11, VectorField,
    VectorFormField,
};
use crate::error::GeomError;
use crate::expr::{
    homogeneity_degree, is_numerically_zero, CoordIndex, PhasePoint, Rational, ScalarField,
};

/// A semispray, given by its coefficients `G^i(x, y)`.
#[derive(Debug, Clone)]
pub struct Semispray {
    n: usize,
    g: Vec<ScalarField>,
}

impl Semispray {
    pub fn new(n: usize, g: Vec<ScalarField>) -> Semispray {
        assert_eq!(g.len(), n);
        Semispray { n, g }
    }

    /// The flat semispray `G^i = 0`.
    pub fn flat(n: usize) -> Semispray {
        Semispray::new(n, vec![ScalarField::zero(n); n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[ScalarField] {
        &self.g
    }

    /// The vector field `S = y^i d/dx^i - 2 G^i d/dy^i`.
    pub fn spray_field(&self) -> VectorField {
        let n = self.n;
        let mut comps = Vec::with_capacity(2 * n);
        for i in 0..n {
            comps.push(ScalarField::var(n, CoordIndex::fiber(i + 1)));
        }
        for i in 0..n {
            comps.push(self.g[i].scale(-2.0));
        }
        VectorField::new(n, comps)
    }

    /// Nonlinear connection coefficients `N^i_j = dG^i/dy^j` (n x n).
    pub fn nonlinear_coefficients(&self) -> Vec<Vec<ScalarField>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.g[i].diff(CoordIndex::fiber(j + 1))).collect())
            .collect()
    }

    /// Decides whether the semispray is a spray: every `G^i` must be
    /// positively 2-homogeneous in `y` (or identically zero), and the
    /// Liouville bracket criterion `[C, S] = S` must agree.
    pub fn is_spray(&self, points: &[PhasePoint]) -> Result<bool, GeomError> {
        let n = self.n;
        let mut degrees_ok = true;
        for gi in &self.g {
            if is_numerically_zero(gi, points, 1e-12) {
                continue;
            }
            match homogeneity_degree(gi, points)? {
                Some(k) if k == Rational::integer(2) => {}
                _ => degrees_ok = false,
            }
        }
        // [C, S] = S in components, with C = y^i d/dy^i
        let c = liouville_field(n);
        let s = self.spray_field();
        let resid = lie_bracket(&c, &s).sub(&s);
        let mut bracket_ok = true;
        for p in points {
            for a in 0..2 * n {
                let v = resid
                    .comp(a)
                    .eval(p)
                    .map_err(GeomError::Sym)?;
                if v.abs() > 1e-8 {
                    bracket_ok = false;
                }
            }
        }
        Ok(degrees_ok && bracket_ok)
    }
}

/// The Liouville vector field `C = y^i d/dy^i`.
pub fn liouville_field(n: usize) -> VectorField {
    let mut comps = vec![ScalarField::zero(n); 2 * n];
    for i in 0..n {
        comps[n + i] = ScalarField::var(n, CoordIndex::fiber(i + 1));
    }
    VectorField::new(n, comps)
}

/// The vertical endomorphism `J`: `J(d/dx^i) = d/dy^i`, `J(d/dy^i) = 0`.
pub fn vertical_endomorphism(n: usize) -> TensorField11 {
    TensorField11::build(n, |a, b| {
        if b < n && a == b + n {
            ScalarField::one(n)
        } else {
            ScalarField::zero(n)
        }
    })
}

/// All induced structures of a semispray, built eagerly.
#[derive(Debug, Clone)]
pub struct SprayGeometry {
    spray: Semispray,
    s_field: VectorField,
    liouville: VectorField,
    j: TensorField11,
    n_conn: Vec<Vec<ScalarField>>,
    h: TensorField11,
    v: TensorField11,
    gamma: TensorField11,
    f: TensorField11,
    phi: TensorField11,
    psi: TensorField11,
    r: VectorFormField,
}

impl SprayGeometry {
    pub fn new(spray: Semispray) -> SprayGeometry {
        let n = spray.dim();
        let s_field = spray.spray_field();
        let liouville = liouville_field(n);
        let j = vertical_endomorphism(n);
        let n_conn = spray.nonlinear_coefficients();

        // h = (1/2)(Id - L_S J); in blocks h = [[I, 0], [-N, 0]]
        let lsj = lie_derivative_tensor(&s_field, &j);
        let h = TensorField11::identity(n).sub(&lsj).scale(0.5);
        let v = TensorField11::identity(n).sub(&h);
        let gamma = h.sub(&v);

        let lsh = lie_derivative_tensor(&s_field, &h);
        let f = h.compose(&lsh).sub(&j);
        let phi = v.compose(&lsh);
        // Ψ drives the dynamical covariant derivative: ∇ω = L_S ω - i_Ψ ω
        let psi = f.add(&j).sub(&phi);
        let r = fn_bracket_11(&h, &h).scale(0.5);

        SprayGeometry {
            spray,
            s_field,
            liouville,
            j,
            n_conn,
            h,
            v,
            gamma,
            f,
            phi,
            psi,
            r,
        }
    }

    pub fn dim(&self) -> usize {
        self.spray.dim()
    }

    pub fn semispray(&self) -> &Semispray {
        &self.spray
    }

    pub fn spray_field(&self) -> &VectorField {
        &self.s_field
    }

    pub fn liouville(&self) -> &VectorField {
        &self.liouville
    }

    pub fn vertical_endo(&self) -> &TensorField11 {
        &self.j
    }

    /// Nonlinear connection coefficients `N^i_j` (n x n).
    pub fn nonlinear(&self) -> &[Vec<ScalarField>] {
        &self.n_conn
    }

    pub fn horizontal(&self) -> &TensorField11 {
        &self.h
    }

    pub fn vertical(&self) -> &TensorField11 {
        &self.v
    }

    /// Almost-product structure `Γ = h - v`.
    pub fn almost_product(&self) -> &TensorField11 {
        &self.gamma
    }

    /// Almost-complex structure `F = h ∘ (L_S h) - J`.
    pub fn almost_complex(&self) -> &TensorField11 {
        &self.f
    }

    /// Jacobi endomorphism `Φ = v ∘ (L_S h)`.
    pub fn jacobi(&self) -> &TensorField11 {
        &self.phi
    }

    /// The tensor `Ψ = F + J - Φ` of the dynamical covariant derivative.
    pub fn psi(&self) -> &TensorField11 {
        &self.psi
    }

    /// Curvature `R = (1/2)[h, h]`, a vector-valued 2-form.
    pub fn curvature(&self) -> &VectorFormField {
        &self.r
    }

    /// Horizontal derivative `δf/δx^j = df/dx^j - N^k_j df/dy^k`.
    pub fn delta_x(&self, f: &ScalarField, j: usize) -> ScalarField {
        let n = self.dim();
        let mut acc = f.diff(CoordIndex::base(j + 1));
        for k in 0..n {
            acc = acc.sub(&self.n_conn[k][j].mul(&f.diff(CoordIndex::fiber(k + 1))));
        }
        acc
    }

    /// Jacobi endomorphism block by the coordinate formula
    /// `R^i_j = 2 dG^i/dx^j - S(N^i_j) - N^i_r N^r_j`, used to cross-check
    /// the intrinsic construction.
    pub fn jacobi_block(&self) -> Vec<Vec<ScalarField>> {
        let n = self.dim();
        let g = self.spray.coefficients();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = g[i].diff(CoordIndex::base(j + 1)).scale(2.0);
                        acc = acc.sub(&self.s_field.apply_scalar(&self.n_conn[i][j]));
                        for r in 0..n {
                            acc = acc.sub(&self.n_conn[i][r].mul(&self.n_conn[r][j]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Curvature components by the coordinate formula
    /// `R^k_{ij} = δN^k_i/δx^j - δN^k_j/δx^i`, used to cross-check the
    /// FN-bracket construction.
    pub fn curvature_block(&self) -> Vec<Vec<Vec<ScalarField>>> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                self.delta_x(&self.n_conn[k][i], j)
                                    .sub(&self.delta_x(&self.n_conn[k][j], i))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Whether the curvature vanishes on the sample points.
    pub fn is_flat(&self, points: &[PhasePoint], eps: f64) -> Result<bool, GeomError> {
        let (max, _) = self
            .r
            .max_abs(points)
            .map_err(|e| GeomError::LeftDomain { step: 0, reason: e.to_string() })?;
        Ok(max <= eps)
    }
}

/// A numerically integrated trajectory of the semispray.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
}

/// Fixed-step RK4 integration of `x' = y`, `y' = -2 G(x, y)`.
///
/// Stops with [`GeomError::LeftDomain`] if a coefficient evaluation fails
/// or produces a non-finite value along the way.
pub fn integrate_geodesic(
    spray: &Semispray,
    start: &PhasePoint,
    dt: f64,
    steps: usize,
    y_min: f64,
) -> Result<Trajectory, GeomError> {
    let n = spray.dim();
    let deriv = |x: &[f64], y: &[f64], step: usize| -> Result<(Vec<f64>, Vec<f64>), GeomError> {
        let p = PhasePoint::new(x.to_vec(), y.to_vec(), y_min).map_err(|e| {
            GeomError::LeftDomain { step, reason: e.to_string() }
        })?;
        let mut dy = Vec::with_capacity(n);
        for gi in spray.coefficients() {
            let v = gi.eval(&p).map_err(|e| GeomError::LeftDomain {
                step,
                reason: e.to_string(),
            })?;
            dy.push(-2.0 * v);
        }
        Ok((y.to_vec(), dy))
    };

    let mut x = start.x.clone();
    let mut y = start.y.clone();
    let mut times = vec![0.0];
    let mut points = vec![start.clone()];

    for step in 0..steps {
        let (k1x, k1y) = deriv(&x, &y, step)?;
        let x2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1x[i]).collect();
        let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k1y[i]).collect();
        let (k2x, k2y) = deriv(&x2, &y2, step)?;
        let x3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k2x[i]).collect();
        let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k2y[i]).collect();
        let (k3x, k3y) = deriv(&x3, &y3, step)?;
        let x4: Vec<f64> = (0..n).map(|i| x[i] + dt * k3x[i]).collect();
        let y4: Vec<f64> = (0..n).map(|i| y[i] + dt * k3y[i]).collect();
        let (k4x, k4y) = deriv(&x4, &y4, step)?;

        for i in 0..n {
            x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            y[i] += dt / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(GeomError::LeftDomain {
                step,
                reason: "non-finite state".to_string(),
            });
        }
        let p = PhasePoint::new(x.clone(), y.clone(), y_min).map_err(|e| {
            GeomError::LeftDomain { step, reason: e.to_string() }
        })?;
        times.push(dt * (step as f64 + 1.0));
        points.push(p);
    }

    Ok(Trajectory { times, points })
}


/// Evaluates the full structure-identity battery for a semispray at the
/// given points. Spray-only identities are reported with `residual: None`
/// ("n/a") when the semispray is not a spray. Returns the rows and the
/// overall verdict (all applicable identities pass).
pub fn identity_battery(
    geom: &SprayGeometry,
    points: &[PhasePoint],
    tol: f64,
) -> Result<(Vec<crate::report::IdentityRow>, bool), crate::error::CheckError> {
    use crate::calculus::{
        commutation_check, d_psi, d_tensor, exterior_derivative, fn_bracket_11,
        lie_derivative_form, nabla_form, nabla_scalar, nabla_tensor, nabla_vector, FormField,
        TensorField11,
    };
    use crate::report::IdentityRow;
    use crate::sample::{random_polynomial, SplitMix64};

    let n = geom.dim();
    let is_spray = geom
        .semispray()
        .is_spray(points)
        .map_err(|e| match e {
            GeomError::Sym(s) => crate::error::CheckError::Sym(s),
            other => crate::error::CheckError::PreconditionFailed {
                name: other.to_string(),
                residual: f64::NAN,
            },
        })?;
    let id = TensorField11::identity(n);
    let mut rows: Vec<IdentityRow> = Vec::new();

    let push_tensor = |rows: &mut Vec<IdentityRow>,
                           name: &str,
                           resid: &TensorField11,
                           scale_of: &TensorField11|
     -> Result<(), crate::error::CheckError> {
        let (r, _) = resid.max_abs(points).map_err(crate::error::CheckError::Calc)?;
        let (s, _) = scale_of.max_abs(points).map_err(crate::error::CheckError::Calc)?;
        rows.push(IdentityRow {
            name: name.to_string(),
            residual: Some(r),
            scale: s,
            pass: r <= tol * (1.0 + s),
        });
        Ok(())
    };

    let j = geom.vertical_endo();
    let h = geom.horizontal();
    let v = geom.vertical();
    let f = geom.almost_complex();
    let gamma = geom.almost_product();

    push_tensor(&mut rows, "J^2 = 0", &j.compose(j), j)?;
    push_tensor(&mut rows, "h + v = Id", &h.add(v).sub(&id), &id)?;
    push_tensor(&mut rows, "Gamma^2 = Id", &gamma.compose(gamma).sub(&id), &id)?;
    push_tensor(&mut rows, "F^2 = -Id", &f.compose(f).add(&id), &id)?;
    push_tensor(&mut rows, "F o J = h", &f.compose(j).sub(h), h)?;
    push_tensor(&mut rows, "J o F = v", &j.compose(f).sub(v), v)?;
    push_tensor(&mut rows, "v o F = -J", &v.compose(f).add(j), j)?;

    // [J, Phi] = 3R
    {
        let jphi = fn_bracket_11(j, geom.jacobi());
        let resid = jphi.sub(&geom.curvature().scale(3.0));
        let (r, _) = resid.max_abs(points).map_err(crate::error::CheckError::Calc)?;
        let (s, _) = geom
            .curvature()
            .max_abs(points)
            .map_err(crate::error::CheckError::Calc)?;
        rows.push(IdentityRow {
            name: "[J, Phi] = 3R".to_string(),
            residual: Some(r),
            scale: s,
            pass: r <= tol * (1.0 + s),
        });
    }

    // Phi = i_S R (sprays only)
    if is_spray {
        let isr = geom.curvature().insert_vector(geom.spray_field()).to_tensor11();
        push_tensor(&mut rows, "Phi = i_S R", &isr.sub(geom.jacobi()), geom.jacobi())?;
    } else {
        rows.push(IdentityRow {
            name: "Phi = i_S R".to_string(),
            residual: None,
            scale: 0.0,
            pass: true,
        });
    }

    for (name, a) in [
        ("nabla h = 0", h),
        ("nabla v = 0", v),
        ("nabla J = 0", j),
        ("nabla F = 0", f),
    ] {
        push_tensor(&mut rows, name, &nabla_tensor(geom, a), a)?;
    }

    for (name, x) in [("nabla S = 0", geom.spray_field()), ("nabla C = 0", geom.liouville())] {
        if is_spray {
            let nx = nabla_vector(geom, x);
            let (r, _) = nx.max_abs(points).map_err(crate::error::CheckError::Calc)?;
            let (s, _) = x.max_abs(points).map_err(crate::error::CheckError::Calc)?;
            rows.push(IdentityRow {
                name: name.to_string(),
                residual: Some(r),
                scale: s,
                pass: r <= tol * (1.0 + s),
            });
        } else {
            rows.push(IdentityRow {
                name: name.to_string(),
                residual: None,
                scale: 0.0,
                pass: true,
            });
        }
    }

    // deterministic polynomial fixtures for the derivation identities
    let mut rng = SplitMix64::new(crate::sample::DEFAULT_SEED);
    let omega = FormField::one_form(
        n,
        (0..2 * n).map(|_| random_polynomial(&mut rng, n, 2)).collect(),
    );
    let f0 = random_polynomial(&mut rng, n, 2);
    let (omega_scale, _) = omega.max_abs(points).map_err(crate::error::CheckError::Calc)?;

    let comm = commutation_check(j, h, geom.spray_field(), &omega, points)
        .map_err(crate::error::CheckError::Calc)?;
    for (name, r) in [
        ("commutation i_A d_B", comm.inner_outer),
        ("commutation L_X i_A", comm.lie_inner),
        ("generalized Cartan", comm.cartan),
    ] {
        rows.push(IdentityRow {
            name: name.to_string(),
            residual: Some(r),
            scale: omega_scale,
            pass: r <= tol * (1.0 + omega_scale),
        });
    }

    // d nabla - nabla d = d_Psi on 0- and 1-forms
    {
        let f0f = FormField::scalar(&f0);
        let lhs0 = exterior_derivative(&FormField::scalar(&nabla_scalar(geom, &f0)))
            .map_err(crate::error::CheckError::Calc)?;
        let rhs0 = nabla_form(
            geom,
            &exterior_derivative(&f0f).map_err(crate::error::CheckError::Calc)?,
        )
        .add(&d_psi(geom, &f0f).map_err(crate::error::CheckError::Calc)?);
        let (r0, _) = lhs0.sub(&rhs0).max_abs(points).map_err(crate::error::CheckError::Calc)?;

        let lhs1 = exterior_derivative(&nabla_form(geom, &omega))
            .map_err(crate::error::CheckError::Calc)?;
        let rhs1 = nabla_form(
            geom,
            &exterior_derivative(&omega).map_err(crate::error::CheckError::Calc)?,
        )
        .add(&d_psi(geom, &omega).map_err(crate::error::CheckError::Calc)?);
        let (r1, _) = lhs1.sub(&rhs1).max_abs(points).map_err(crate::error::CheckError::Calc)?;

        for (name, r) in [
            ("d nabla - nabla d = d_Psi (0-form)", r0),
            ("d nabla - nabla d = d_Psi (1-form)", r1),
        ] {
            rows.push(IdentityRow {
                name: name.to_string(),
                residual: Some(r),
                scale: omega_scale,
                pass: r <= tol * (1.0 + omega_scale),
            });
        }
    }
    let _ = (lie_derivative_form, d_tensor);

    let verdict = rows.iter().all(|r| r.pass);
    Ok((rows, verdict))
}
