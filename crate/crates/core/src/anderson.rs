//! Anderson mixing for small fixed-point problems `z = G(z)`.

/// Residual-history extrapolator with bounded memory.
///
/// Columns are dropped oldest-first whenever the triangular factor of the
/// residual-difference matrix exceeds the conditioning limit. Memory is
/// capped by the state dimension since extra columns are linearly dependent.
#[derive(Debug, Clone)]
pub struct Anderson<const N: usize> {
    depth: usize,
    cond_max: f64,
    prev: Option<([f64; N], [f64; N])>,
    d_res: Vec<[f64; N]>,
    d_map: Vec<[f64; N]>,
}

impl<const N: usize> Anderson<N> {
    pub fn new(depth: usize, cond_max: f64) -> Self {
        Self { depth: depth.min(N).max(1), cond_max, prev: None, d_res: Vec::new(), d_map: Vec::new() }
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.d_res.clear();
        self.d_map.clear();
    }

    /// Next iterate given the current point's map value `g` and residual
    /// `res = g − z`.
    pub fn step(&mut self, g: [f64; N], res: [f64; N]) -> [f64; N] {
        if let Some((pg, pr)) = self.prev {
            let mut dr = [0.0; N];
            let mut dg = [0.0; N];
            for i in 0..N {
                dr[i] = res[i] - pr[i];
                dg[i] = g[i] - pg[i];
            }
            if dr.iter().any(|v| *v != 0.0) {
                self.d_res.push(dr);
                self.d_map.push(dg);
            }
            while self.d_res.len() > self.depth {
                self.d_res.remove(0);
                self.d_map.remove(0);
            }
        }
        self.prev = Some((g, res));
        loop {
            if self.d_res.is_empty() {
                return g;
            }
            match least_squares(&self.d_res, &res, self.cond_max) {
                Some(coef) => {
                    let mut z = g;
                    for (c, dg) in coef.iter().zip(&self.d_map) {
                        for i in 0..N {
                            z[i] -= c * dg[i];
                        }
                    }
                    if z.iter().all(|v| v.is_finite()) {
                        return z;
                    }
                    self.d_res.remove(0);
                    self.d_map.remove(0);
                }
                None => {
                    self.d_res.remove(0);
                    self.d_map.remove(0);
                }
            }
        }
    }
}

/// Minimizes `|rhs − A c|` over `c` with `A` given column-wise, by modified
/// Gram–Schmidt. Returns `None` when the diagonal of `R` spans more than
/// `cond_max`.
fn least_squares<const N: usize>(cols: &[[f64; N]], rhs: &[f64; N], cond_max: f64) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut q: Vec<[f64; N]> = cols.to_vec();
    let mut r = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in 0..j {
            let dot: f64 = (0..N).map(|i| q[k][i] * q[j][i]).sum();
            r[k][j] = dot;
            for i in 0..N {
                q[j][i] -= dot * q[k][i];
            }
        }
        let norm = (0..N).map(|i| q[j][i] * q[j][i]).sum::<f64>().sqrt();
        r[j][j] = norm;
        if norm == 0.0 {
            return None;
        }
        for i in 0..N {
            q[j][i] /= norm;
        }
    }
    let diag: Vec<f64> = (0..m).map(|j| r[j][j].abs()).collect();
    let big = diag.iter().cloned().fold(0.0, f64::max);
    let small = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if big / small > cond_max {
        return None;
    }
    let qtb: Vec<f64> = (0..m).map(|j| (0..N).map(|i| q[j][i] * rhs[i]).sum()).collect();
    let mut c = vec![0.0; m];
    for j in (0..m).rev() {
        let mut s = qtb[j];
        for k in j + 1..m {
            s -= r[j][k] * c[k];
        }
        c[j] = s / r[j][j];
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerates_linear_map() {
        // Plain iteration of this map contracts by 0.99 per step
        let g = |z: [f64; 2]| [0.99 * z[0] + 0.01 * z[1] + 1.0, -0.5 * z[0] + 0.2 * z[1]];
        let mut acc = Anderson::<2>::new(5, 1e12);
        let mut z = [0.0, 0.0];
        let mut steps = 0;
        loop {
            let gz = g(z);
            let res = [gz[0] - z[0], gz[1] - z[1]];
            if res[0].abs() + res[1].abs() < 1e-12 {
                break;
            }
            z = acc.step(gz, res);
            steps += 1;
            assert!(steps < 50, "no convergence");
        }
        let fixed = g(z);
        assert!((fixed[0] - z[0]).abs() < 1e-12);
    }
}
