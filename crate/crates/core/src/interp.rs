//! Private numerical utilities: tridiagonal solves and C^1/C^2 interpolation
//! on uniform grids.

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
///
/// `lower[i]` multiplies x[i-1] in row i (lower[0] unused), `upper[i]`
/// multiplies x[i+1] (upper[n-1] unused). All our systems are strictly
/// diagonally dominant, so the elimination is stable.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut Vec<f64>,
) -> Vec<f64> {
    let n = diag.len();
    assert!(n > 0 && lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c_star = vec![0.0; n];
    c_star[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = 1.0 / (diag[i] - lower[i] * c_star[i - 1]);
        c_star[i] = upper[i] * m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) * m;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c_star[i] * next;
    }
    std::mem::take(rhs)
}

/// C^2 cubic spline on a uniform grid x_k = x0 + k·h.
#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    x0: f64,
    h: f64,
    ys: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CubicSpline {
    /// The left end is clamped to the given slope; the right end is
    /// natural, which is harmless because our profiles decay there.
    pub(crate) fn new(x0: f64, h: f64, ys: Vec<f64>, left_slope: f64) -> Self {
        let n = ys.len();
        assert!(n >= 3 && h > 0.0);
        let mut lower = vec![1.0; n];
        let mut diag = vec![4.0; n];
        let mut upper = vec![1.0; n];
        let mut rhs: Vec<f64> = (0..n)
            .map(|k| {
                if k == 0 || k == n - 1 {
                    0.0
                } else {
                    6.0 * (ys[k + 1] - 2.0 * ys[k] + ys[k - 1]) / (h * h)
                }
            })
            .collect();
        diag[0] = 2.0;
        upper[0] = 1.0;
        rhs[0] = 6.0 * ((ys[1] - ys[0]) / h - left_slope) / h;
        diag[n - 1] = 1.0;
        lower[n - 1] = 0.0;
        let m = solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        Self { x0, h, ys, m }
    }

    pub(crate) fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.ys.len() - 1) as f64
    }

    /// Evaluates the spline; x is clamped to the grid by the caller.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let mut k = ((x - self.x0) / self.h).floor() as isize;
        k = k.clamp(0, n as isize - 2);
        let k = k as usize;
        let xl = self.x0 + k as f64 * self.h;
        let a = (xl + self.h - x) / self.h;
        let b = (x - xl) / self.h;
        let h2 = self.h * self.h / 6.0;
        a * self.ys[k]
            + b * self.ys[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h2
    }
}

/// C^1 piecewise cubic from values and first derivatives on a uniform grid.
#[derive(Debug, Clone)]
pub(crate) struct CubicHermite {
    x0: f64,
    h: f64,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

impl CubicHermite {
    pub(crate) fn new(x0: f64, h: f64, ys: Vec<f64>, dys: Vec<f64>) -> Self {
        assert!(ys.len() >= 2 && ys.len() == dys.len() && h > 0.0);
        Self { x0, h, ys, dys }
    }

    pub(crate) fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.ys.len() - 1) as f64
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for y in &mut self.ys {
            *y *= factor;
        }
        for dy in &mut self.dys {
            *dy *= factor;
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let mut k = ((x - self.x0) / self.h).floor() as isize;
        k = k.clamp(0, n as isize - 2);
        let k = k as usize;
        let t = (x - (self.x0 + k as f64 * self.h)) / self.h;
        let (y0, y1, d0, d1) = (self.ys[k], self.ys[k + 1], self.dys[k], self.dys[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * self.h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * self.h * d1
    }
}
