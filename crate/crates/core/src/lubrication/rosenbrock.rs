//! Linearly implicit Rosenbrock 2(3) steps for autonomous two-component systems,
//! L-stable, with an embedded third-order error estimate.

const D: f64 = 1.0 / (2.0 + std::f64::consts::SQRT_2);
const E32: f64 = 6.0 + std::f64::consts::SQRT_2;

type V2 = [f64; 2];
type M2 = [[f64; 2]; 2];

fn solve(w: &M2, b: V2) -> Option<V2> {
    let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([(b[0] * w[1][1] - w[0][1] * b[1]) / det, (w[0][0] * b[1] - b[0] * w[1][0]) / det])
}

fn axpy(y: &V2, a: f64, x: &V2) -> V2 {
    [y[0] + a * x[0], y[1] + a * x[1]]
}

/// Advances `y` by `dt` for `y' = f(y)` with Jacobian `jac`. Returns `None` when the
/// stage matrix is singular.
pub(crate) fn step(f: &dyn Fn(&V2) -> V2, jac: &dyn Fn(&V2) -> M2, y: &V2, dt: f64) -> Option<(V2, V2)> {
    let j = jac(y);
    let w = [
        [1.0 - dt * D * j[0][0], -dt * D * j[0][1]],
        [-dt * D * j[1][0], 1.0 - dt * D * j[1][1]],
    ];
    let f0 = f(y);
    let k1 = solve(&w, f0)?;
    let f1 = f(&axpy(y, 0.5 * dt, &k1));
    let k2 = solve(&w, [f1[0] - k1[0], f1[1] - k1[1]])?;
    let k2 = [k2[0] + k1[0], k2[1] + k1[1]];
    let y_new = axpy(y, dt, &k2);
    let f2 = f(&y_new);
    let rhs = [
        f2[0] - E32 * (k2[0] - f1[0]) - 2.0 * (k1[0] - f0[0]),
        f2[1] - E32 * (k2[1] - f1[1]) - 2.0 * (k1[1] - f0[1]),
    ];
    let k3 = solve(&w, rhs)?;
    let err = [
        dt / 6.0 * (k1[0] - 2.0 * k2[0] + k3[0]),
        dt / 6.0 * (k1[1] - 2.0 * k2[1] + k3[1]),
    ];
    Some((y_new, err))
}
