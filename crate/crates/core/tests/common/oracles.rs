use mixgm::Dataset;

/// Minimizes `1/2 ||u - z||^2 + tau ||u||` by cyclic coordinate golden-section search.
pub fn numeric_prox(z: &[f64], tau: f64) -> Vec<f64> {
    let objective = |u: &[f64]| {
        let d: f64 = u.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * d + tau * u.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let mut u = z.to_vec();
    let width = z.iter().map(|v| v.abs()).fold(1.0, f64::max) * 2.0;
    for _ in 0..40 {
        for i in 0..u.len() {
            let (mut lo, mut hi) = (-width, width);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            while hi - lo > 1e-13 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                u[i] = m1;
                let f1 = objective(&u);
                u[i] = m2;
                let f2 = objective(&u);
                if f1 < f2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            u[i] = 0.5 * (lo + hi);
        }
    }
    // Newton polish where the objective is smooth
    let n = u.len();
    let zv = nalgebra::DVector::from_column_slice(z);
    let gradient = |u: &[f64]| {
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let uv = nalgebra::DVector::from_column_slice(u);
        let grad = &uv - &zv + &uv * (tau / norm);
        (uv, norm, grad)
    };
    for _ in 0..20 {
        let (uv, norm, grad) = gradient(&u);
        if norm < 1e-14 {
            break;
        }
        let hess = nalgebra::DMatrix::identity(n, n) * (1.0 + tau / norm)
            - (&uv * uv.transpose()) * (tau / (norm * norm * norm));
        let step = hess.lu().solve(&grad).unwrap();
        let trial: Vec<f64> = (0..n).map(|i| u[i] - step[i]).collect();
        // objective differences are below rounding this close to the minimum
        if gradient(&trial).2.norm() >= grad.norm() {
            break;
        }
        u = trial;
    }
    let zero = vec![0.0; n];
    if objective(&zero) <= objective(&u) {
        u = zero;
    }
    u
}

/// Pseudolikelihood of a discrete pairwise MRF from explicit energy tables.
pub struct Mrf {
    pub levels: Vec<usize>,
    pub unary: Vec<Vec<f64>>,
    pub pair: Vec<Vec<Vec<Vec<f64>>>>,
}

impl Mrf {
    pub fn energy(&self, y: &[usize]) -> f64 {
        let q = self.levels.len();
        let mut e = 0.0;
        for r in 0..q {
            e += self.unary[r][y[r]];
            for j in (r + 1)..q {
                e += self.pair[r][j][y[r]][y[j]];
            }
        }
        e
    }

    pub fn pseudolikelihood(&self, data: &Dataset) -> f64 {
        let mut total = 0.0;
        for row in data.rows() {
            let mut y = row.y.to_vec();
            for r in 0..self.levels.len() {
                let observed = self.energy(&y);
                let keep = y[r];
                let mut sum = 0.0;
                for k in 0..self.levels[r] {
                    y[r] = k;
                    sum += self.energy(&y).exp();
                }
                y[r] = keep;
                total += sum.ln() - observed;
            }
        }
        total / data.n() as f64
    }
}
