use std::fmt;
use std::sync::Arc;

pub type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
/// Writes the full gradient into the output slice (overwriting it).
pub type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
/// `(point, direction, out)`: writes `H(point) * direction` into `out`.
pub type HessVecFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// A differentiable scalar function of a dense vector.
///
/// The field also records its *support*: the sorted list of coordinates it
/// actually reads. Block partitions use the support to decide which
/// constraint touches which block, and block evaluators skip fields whose
/// support misses the block.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: Arc<EvalFn>,
    grad: Arc<GradFn>,
    hess_vec: Option<Arc<HessVecFn>>,
    support: Vec<usize>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("hess_vec", &self.hess_vec.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new<E, G>(dim: usize, eval: E, grad: G) -> Self
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "ScalarField needs a positive dimension");
        Self { dim, eval: Arc::new(eval), grad: Arc::new(grad), hess_vec: None, support: (0..dim).collect() }
    }

    pub fn with_hess_vec<H>(mut self, hv: H) -> Self
    where
        H: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.hess_vec = Some(Arc::new(hv));
        self
    }

    /// Restricts the declared support. Indices are sorted and deduplicated.
    pub fn with_support(mut self, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        assert!(support.iter().all(|&i| i < self.dim), "support index out of range");
        self.support = support;
        self
    }

    /// The zero function. Its support is empty.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_| 0.0, |_, g| g.fill(0.0)).with_hess_vec(|_, _, out| out.fill(0.0)).with_support(Vec::new())
    }

    /// `x -> c^T x + c0`.
    pub fn affine(coeffs: Vec<f64>, constant: f64) -> Self {
        let dim = coeffs.len();
        let support: Vec<usize> = (0..dim).filter(|&i| coeffs[i] != 0.0).collect();
        let c = Arc::new(coeffs);
        let c2 = Arc::clone(&c);
        Self::new(
            dim,
            move |x| constant + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
            move |_, g| g.copy_from_slice(&c2),
        )
        .with_hess_vec(|_, _, out| out.fill(0.0))
        .with_support(support)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn has_hess_vec(&self) -> bool {
        self.hess_vec.is_some()
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    #[inline]
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.grad)(x, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn hess_vec(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.hess_vec.as_ref().map(|hv| {
            let mut out = vec![0.0; self.dim];
            hv(x, v, &mut out);
            out
        })
    }

    /// Re-expresses the field over a larger coordinate space.
    ///
    /// `map[k]` is the position in the new space of old coordinate `k`.
    pub fn pullback(&self, new_dim: usize, map: &[usize]) -> ScalarField {
        assert_eq!(map.len(), self.dim, "pullback map must cover every old coordinate");
        assert!(map.iter().all(|&i| i < new_dim));
        let map: Arc<Vec<usize>> = Arc::new(map.to_vec());
        let old_dim = self.dim;
        let support = self.support.iter().map(|&k| map[k]).collect();

        let (f, m1) = (self.clone(), Arc::clone(&map));
        let eval = move |x: &[f64]| {
            let local: Vec<f64> = m1.iter().map(|&i| x[i]).collect();
            f.value(&local)
        };
        let (f, m2) = (self.clone(), Arc::clone(&map));
        let grad = move |x: &[f64], g: &mut [f64]| {
            let local: Vec<f64> = m2.iter().map(|&i| x[i]).collect();
            let mut lg = vec![0.0; old_dim];
            f.gradient_into(&local, &mut lg);
            g.fill(0.0);
            for (k, &i) in m2.iter().enumerate() {
                g[i] += lg[k];
            }
        };
        let mut out = ScalarField::new(new_dim, eval, grad);
        if self.hess_vec.is_some() {
            let (f, m3) = (self.clone(), Arc::clone(&map));
            out = out.with_hess_vec(move |x, v, o| {
                let local: Vec<f64> = m3.iter().map(|&i| x[i]).collect();
                let lv: Vec<f64> = m3.iter().map(|&i| v[i]).collect();
                let hv = f.hess_vec(&local, &lv).expect("checked above");
                o.fill(0.0);
                for (k, &i) in m3.iter().enumerate() {
                    o[i] += hv[k];
                }
            });
        }
        out.with_support(support)
    }

    /// `sum_k c_k f_k` for fields over a common dimension.
    pub fn linear_combination(terms: &[(f64, ScalarField)]) -> ScalarField {
        assert!(!terms.is_empty());
        let dim = terms[0].1.dim;
        assert!(terms.iter().all(|(_, f)| f.dim == dim));
        let terms: Arc<Vec<(f64, ScalarField)>> = Arc::new(terms.to_vec());
        let mut support: Vec<usize> = terms.iter().flat_map(|(_, f)| f.support.clone()).collect();
        support.sort_unstable();
        support.dedup();
        let has_hv = terms.iter().all(|(_, f)| f.has_hess_vec());

        let t1 = Arc::clone(&terms);
        let t2 = Arc::clone(&terms);
        let mut out = ScalarField::new(
            dim,
            move |x| t1.iter().map(|(c, f)| c * f.value(x)).sum(),
            move |x, g| {
                g.fill(0.0);
                let mut tmp = vec![0.0; dim];
                for (c, f) in t2.iter() {
                    f.gradient_into(x, &mut tmp);
                    for (gi, ti) in g.iter_mut().zip(&tmp) {
                        *gi += c * ti;
                    }
                }
            },
        );
        if has_hv {
            let t3 = Arc::clone(&terms);
            out = out.with_hess_vec(move |x, v, o| {
                o.fill(0.0);
                for (c, f) in t3.iter() {
                    let hv = f.hess_vec(x, v).expect("checked above");
                    for (oi, hi) in o.iter_mut().zip(&hv) {
                        *oi += c * hi;
                    }
                }
            });
        }
        out.with_support(support)
    }

    /// `phi(self(x))` for a one-dimensional `phi`.
    ///
    /// The Hessian-vector product needs `phi.hess_vec` (which for a scalar
    /// input returns `phi''(t) * v`) and `self.hess_vec`.
    pub fn compose_outer(&self, phi: &ScalarField) -> ScalarField {
        assert_eq!(phi.dim(), 1, "outer function must be one-dimensional");
        let dim = self.dim;
        let (inner, outer) = (self.clone(), phi.clone());
        let eval = move |x: &[f64]| outer.value(&[inner.value(x)]);
        let (inner, outer) = (self.clone(), phi.clone());
        let grad = move |x: &[f64], g: &mut [f64]| {
            let t = inner.value(x);
            let slope = outer.gradient(&[t])[0];
            inner.gradient_into(x, g);
            for gi in g.iter_mut() {
                *gi *= slope;
            }
        };
        let mut out = ScalarField::new(dim, eval, grad);
        if self.has_hess_vec() && phi.has_hess_vec() {
            let (inner, outer) = (self.clone(), phi.clone());
            out = out.with_hess_vec(move |x, v, o| {
                let t = inner.value(x);
                let slope = outer.gradient(&[t])[0];
                let curv = outer.hess_vec(&[t], &[1.0]).expect("checked above")[0];
                let g = inner.gradient(x);
                let gv: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
                let hv = inner.hess_vec(x, v).expect("checked above");
                for i in 0..o.len() {
                    o[i] = curv * gv * g[i] + slope * hv[i];
                }
            });
        }
        out.with_support(self.support.clone())
    }
}
