//! Cochain inner products, the scalar Laplacian and harmonic 1-forms.
//!
//! `M0` and `M2` are diagonal. `M1` is an octant quadrature: each vertex carries eight
//! corner cells, each spanned by one edge per axis, and the 1-form on a corner is the
//! covector read off those three edges. On sheared metrics this is what keeps the Gram
//! matrix consistent.

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RoundingError};
use crate::field::MetricField;
use crate::mesh::MeshedNilmanifold;

/// Metric-dependent inner products on the cochains of one mesh.
#[derive(Debug, Clone)]
pub struct Hodge {
    pub h: [f64; 3],
    fwd: Vec<[usize; 3]>,
    bwd: Vec<[usize; 3]>,
    /// Flattened face boundaries, `faces[offsets[f]..offsets[f + 1]]`.
    offsets: Vec<usize>,
    faces: Vec<(usize, f64)>,
    pub m0: Vec<f64>,
    w1: Vec<Matrix3<f64>>,
    pub m2: Vec<f64>,
    m1_diag: Vec<f64>,
}

impl Hodge {
    pub fn new(mesh: &MeshedNilmanifold, f: &MetricField) -> Result<Self> {
        f.check_mesh(mesh)?;
        let n = mesh.num_vertices();
        let h = mesh.spacing();
        let fwd = (0..n).map(|v| std::array::from_fn(|a| mesh.neighbor(v, a))).collect();
        let bwd = (0..n).map(|v| std::array::from_fn(|a| mesh.back_neighbor(v, a))).collect();
        let mut offsets = vec![0];
        let mut faces = Vec::with_capacity(4 * mesh.num_faces());
        for v in 0..n {
            for c in 0..3 {
                faces.extend(mesh.face_boundary(v, c));
                offsets.push(faces.len());
            }
        }
        let cell = mesh.cell_volume();
        let mut m0 = Vec::with_capacity(n);
        let mut w1 = Vec::with_capacity(n);
        let mut m2 = Vec::with_capacity(3 * n);
        for (v, g) in f.values().iter().enumerate() {
            let ginv = g.try_inverse().ok_or(RoundingError::NotPositiveDefinite { vertex: v })?;
            let vol = g.determinant().sqrt() * cell;
            m0.push(vol);
            w1.push(ginv * (vol / 8.0));
            for (a, b) in [(1, 2), (0, 2), (0, 1)] {
                let minor = ginv[(a, a)] * ginv[(b, b)] - ginv[(a, b)] * ginv[(a, b)];
                m2.push(vol * minor / (h[a] * h[b]).powi(2));
            }
        }
        let mut hodge = Self { h, fwd, bwd, offsets, faces, m0, w1, m2, m1_diag: Vec::new() };
        hodge.m1_diag = (0..3 * n)
            .map(|e| {
                let (v, a) = (e / 3, e % 3);
                4.0 * (hodge.w1[v][(a, a)] + hodge.w1[hodge.fwd[v][a]][(a, a)]) / (h[a] * h[a])
            })
            .collect();
        Ok(hodge)
    }

    pub fn num_vertices(&self) -> usize {
        self.m0.len()
    }

    pub fn volume(&self) -> f64 {
        self.m0.iter().sum()
    }

    pub fn d0(&self, f: &[f64]) -> Vec<f64> {
        (0..3 * f.len()).into_par_iter().map(|e| f[self.fwd[e / 3][e % 3]] - f[e / 3]).collect()
    }

    pub fn d0_transpose(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_vertices())
            .into_par_iter()
            .map(|v| (0..3).map(|a| x[3 * self.bwd[v][a] + a] - x[3 * v + a]).sum())
            .collect()
    }

    pub fn d1(&self, x: &[f64]) -> Vec<f64> {
        (0..self.offsets.len() - 1)
            .into_par_iter()
            .map(|f| self.faces[self.offsets[f]..self.offsets[f + 1]].iter().map(|&(e, s)| s * x[e]).sum())
            .collect()
    }

    pub fn d1_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 3 * self.num_vertices()];
        for (f, w) in y.iter().enumerate() {
            for &(e, s) in &self.faces[self.offsets[f]..self.offsets[f + 1]] {
                out[e] += s * w;
            }
        }
        out
    }

    fn octant_edge(&self, u: usize, b: usize, back: bool) -> usize {
        if back {
            3 * self.bwd[u][b] + b
        } else {
            3 * u + b
        }
    }

    /// `M1 x`.
    pub fn m1(&self, x: &[f64]) -> Vec<f64> {
        let h = self.h;
        let corners: Vec<[[f64; 3]; 8]> = (0..self.num_vertices())
            .into_par_iter()
            .map(|u| {
                std::array::from_fn(|s| {
                    let c = nalgebra::Vector3::from_fn(|b, _| x[self.octant_edge(u, b, s >> b & 1 == 1)] / h[b]);
                    let y = self.w1[u] * c;
                    [y[0], y[1], y[2]]
                })
            })
            .collect();
        (0..x.len())
            .into_par_iter()
            .map(|e| {
                let (v, a) = (e / 3, e % 3);
                let w = self.fwd[v][a];
                let mut sum = 0.0;
                for s in 0..8 {
                    if s >> a & 1 == 0 {
                        sum += corners[v][s][a];
                    } else {
                        sum += corners[w][s][a];
                    }
                }
                sum / h[a]
            })
            .collect()
    }

    pub fn inner1(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.m1(y))
    }

    /// `d0ᵀ M1 d0 f`.
    pub fn laplacian0(&self, f: &[f64]) -> Vec<f64> {
        self.d0_transpose(&self.m1(&self.d0(f)))
    }

    /// `K = M1 d0 M0⁻¹ d0ᵀ M1 + d1ᵀ M2 d1`, whose kernel is the harmonic 1-forms.
    pub fn hodge1(&self, x: &[f64]) -> Vec<f64> {
        let mx = self.m1(x);
        let div: Vec<f64> = self.d0_transpose(&mx).iter().zip(&self.m0).map(|(d, m)| d / m).collect();
        let grad = self.m1(&self.d0(&div));
        let curl: Vec<f64> = self.d1(x).iter().zip(&self.m2).map(|(c, m)| c * m).collect();
        let mut out = self.d1_transpose(&curl);
        for (o, g) in out.iter_mut().zip(grad) {
            *o += g;
        }
        out
    }

    /// Diagonal of [`Hodge::hodge1`], with `M1` replaced by its diagonal in the gradient term.
    pub fn hodge1_diagonal(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.m1_diag.iter().enumerate().map(|(e, m)| m * m * (1.0 / self.m0[e / 3] + 1.0 / self.m0[self.fwd[e / 3][e % 3]])).collect();
        for (f, w) in self.m2.iter().enumerate() {
            for &(e, s) in &self.faces[self.offsets[f]..self.offsets[f + 1]] {
                out[e] += s * s * w;
            }
        }
        out
    }

    /// Solves `d0ᵀ M1 d0 f = b` for mean-zero `f`; `b` must sum to zero.
    pub fn solve_laplacian0(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
        let n = self.num_vertices();
        let mut diag = vec![0.0; n];
        for (e, d) in self.m1_diag.iter().enumerate() {
            diag[e / 3] += d;
            diag[self.fwd[e / 3][e % 3]] += d;
        }
        let mean = b.iter().sum::<f64>() / n as f64;
        let b: Vec<f64> = b.iter().map(|x| x - mean).collect();
        let (mut x, iterations) = pcg(|v| self.laplacian0(v), &b, &diag, tol, 20 * n)?;
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        Ok((x, iterations))
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Jacobi-preconditioned conjugate gradients for a positive semidefinite operator.
pub fn pcg(op: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], diag: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = op(&p);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, a)| *r -= alpha * a);
        let res = dot(&r, &r).sqrt() / bnorm;
        if res < tol {
            return Ok((x, it));
        }
        z = r.iter().zip(diag).map(|(r, d)| r / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    let res = dot(&r, &r).sqrt() / bnorm;
    Err(RoundingError::NoConvergence { solver: "conjugate gradients", residual: res, iterations: max_iter })
}

pub const CG_TOLERANCE: f64 = 1e-11;
/// Eigenvalues of the normalized Hodge operator below this count as zero.
pub const KERNEL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub dimension: usize,
    /// Rayleigh quotients of the basis forms, then the lowest eigenvalues on their
    /// complement, all relative to the largest eigenvalue.
    pub basis_quotients: [f64; 2],
    pub complement_eigenvalues: Vec<f64>,
    pub complement_residuals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicBasis {
    /// Harmonic representatives of the classes of `dx1` and `dx2`, one value per edge.
    pub forms: [Vec<f64>; 2],
    /// `(1/vol) ∫ <α_a, α_b>`.
    pub gram: Matrix2<f64>,
    pub volume: f64,
    pub cg_iterations: [usize; 2],
    pub kernel: KernelCheck,
}

/// The two closed cochains `dx1`, `dx2`.
pub fn coordinate_forms(mesh: &MeshedNilmanifold) -> [Vec<f64>; 2] {
    let h = mesh.spacing();
    std::array::from_fn(|a| (0..mesh.num_edges()).map(|e| if e % 3 == a { h[a] } else { 0.0 }).collect())
}

pub fn harmonic_one_forms(mesh: &MeshedNilmanifold, f: &MetricField) -> Result<HarmonicBasis> {
    let hodge = Hodge::new(mesh, f)?;
    harmonic_with(mesh, &hodge)
}

pub fn harmonic_with(mesh: &MeshedNilmanifold, hodge: &Hodge) -> Result<HarmonicBasis> {
    let mut iterations = [0; 2];
    let mut forms = coordinate_forms(mesh);
    for (a, form) in forms.iter_mut().enumerate() {
        let rhs = hodge.d0_transpose(&hodge.m1(form));
        let (u, it) = hodge.solve_laplacian0(&rhs, CG_TOLERANCE)?;
        iterations[a] = it;
        for (x, d) in form.iter_mut().zip(hodge.d0(&u)) {
            *x -= d;
        }
    }
    let volume = hodge.volume();
    let gram = Matrix2::from_fn(|a, b| hodge.inner1(&forms[a], &forms[b]) / volume);
    if gram.cholesky().is_none() {
        return Err(RoundingError::KernelDimension { found: 1, eigenvalues: vec![gram.determinant()] });
    }
    let kernel = kernel_check(hodge, &forms)?;
    if kernel.dimension != 2 {
        return Err(RoundingError::KernelDimension { found: kernel.dimension, eigenvalues: kernel.complement_eigenvalues });
    }
    Ok(HarmonicBasis { forms, gram, volume, cg_iterations: iterations, kernel })
}

const KERNEL_SEED: u64 = 0x5eed;
const KERNEL_RESIDUAL: f64 = 1e-6;
const KERNEL_MAX_ITER: usize = 4000;

/// Counts the zero eigenvalues of the Hodge operator: the basis forms plus the lowest
/// eigenvalue on their orthogonal complement if it is below [`KERNEL_TOLERANCE`].
pub fn kernel_check(hodge: &Hodge, forms: &[Vec<f64>; 2]) -> Result<KernelCheck> {
    let n = forms[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(KERNEL_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut scale = 0.0;
    for _ in 0..30 {
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = hodge.hodge1(&x);
        scale = dot(&x, &y);
        x = y;
    }
    let scale = scale * 1.05;
    let quotient = |v: &[f64]| dot(v, &hodge.hodge1(v)) / dot(v, v) / scale;
    let basis_quotients = [quotient(&forms[0]), quotient(&forms[1])];
    let mut q = forms.clone();
    for a in 0..2 {
        for b in 0..a {
            let c = dot(&q[a], &q[b]);
            let (qa, qb) = q.split_at_mut(a);
            qb[0].iter_mut().zip(&qa[b]).for_each(|(x, y)| *x -= c * y);
        }
        let norm = dot(&q[a], &q[a]).sqrt();
        q[a].iter_mut().for_each(|x| *x /= norm);
    }
    let deflate = |v: &mut Vec<f64>| {
        for qa in &q {
            let c = dot(qa, v);
            v.iter_mut().zip(qa).for_each(|(x, y)| *x -= c * y);
        }
    };
    let op = |v: &[f64]| -> Vec<f64> { hodge.hodge1(v).into_iter().map(|x| x / scale).collect() };
    let diag: Vec<f64> = hodge.hodge1_diagonal().into_iter().map(|d| d / scale).collect();
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut w: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        deflate(&mut w);
        w
    };
    let mut x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate(&mut x0);
    let (eigenvalue, residual) = lowest_eigenpair(op, precondition, x0, KERNEL_RESIDUAL, KERNEL_MAX_ITER);
    let zero = |q: f64| q.abs() < KERNEL_TOLERANCE;
    let dimension = basis_quotients.iter().filter(|q| zero(**q)).count() + usize::from(zero(eigenvalue));
    Ok(KernelCheck { dimension, basis_quotients, complement_eigenvalues: vec![eigenvalue], complement_residuals: vec![residual] })
}

/// Single-vector LOBPCG for the smallest eigenvalue of a symmetric operator, returning the
/// Rayleigh quotient and the final residual norm. `precondition` must keep vectors in the
/// subspace the iteration is restricted to.
fn lowest_eigenpair(op: impl Fn(&[f64]) -> Vec<f64>, precondition: impl Fn(&[f64]) -> Vec<f64>, x0: Vec<f64>, tol: f64, max_iter: usize) -> (f64, f64) {
    let scaled = |v: &mut Vec<f64>, av: &mut Vec<f64>, c: f64| {
        v.iter_mut().for_each(|x| *x *= c);
        av.iter_mut().for_each(|x| *x *= c);
    };
    let axpy = |y: &mut Vec<f64>, a: f64, x: &[f64]| y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
    let mut x = x0;
    let mut ax = op(&x);
    let norm = dot(&x, &x).sqrt();
    scaled(&mut x, &mut ax, 1.0 / norm);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut theta = dot(&x, &ax);
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        if it % 100 == 99 {
            ax = op(&x);
            theta = dot(&x, &ax);
        }
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, x)| a - theta * x).collect();
        residual = dot(&r, &r).sqrt();
        if residual < tol {
            break;
        }
        // Orthonormal basis x, w, p of the search space, with images carried alongside.
        let mut basis = vec![(x.clone(), ax.clone())];
        let mut w = precondition(&r);
        for _ in 0..2 {
            let c = dot(&x, &w);
            axpy(&mut w, -c, &x);
        }
        let mut aw = op(&w);
        let norm = dot(&w, &w).sqrt();
        if !(norm > 0.0) {
            break;
        }
        scaled(&mut w, &mut aw, 1.0 / norm);
        basis.push((w, aw));
        if let Some((mut v, mut av)) = p.take() {
            for _ in 0..2 {
                for (b, ab) in &basis {
                    let c = dot(b, &v);
                    axpy(&mut v, -c, b);
                    axpy(&mut av, -c, ab);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 {
                scaled(&mut v, &mut av, 1.0 / norm);
                basis.push((v, av));
            }
        }
        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i].0, &basis[j].1) + dot(&basis[j].0, &basis[i].1)));
        let eig = SymmetricEigen::new(h);
        let k = eig.eigenvalues.imin();
        let y = eig.eigenvectors.column(k);
        let (mut nx, mut nax) = (vec![0.0; x.len()], vec![0.0; x.len()]);
        let (mut np, mut nap) = (vec![0.0; x.len()], vec![0.0; x.len()]);
        for (i, (b, ab)) in basis.iter().enumerate() {
            axpy(&mut nx, y[i], b);
            axpy(&mut nax, y[i], ab);
            if i > 0 {
                axpy(&mut np, y[i], b);
                axpy(&mut nap, y[i], ab);
            }
        }
        let norm = dot(&nx, &nx).sqrt();
        scaled(&mut nx, &mut nax, 1.0 / norm);
        (x, ax) = (nx, nax);
        theta = dot(&x, &ax);
        p = Some((np, nap));
    }
    (theta, residual)
}
