//! Dense complex tensor kernels.
//!
//! Everything above this layer (matrix product states, network contraction)
//! is expressed in terms of four primitives: pairwise contraction, truncated
//! singular value decomposition, thin QR, and the dense matrix exponential.
//! Tensors are immutable values in row-major layout and safe to share across
//! threads.

use crate::{Error, Result, C64};
use ndarray::prelude::*;
use ndarray_linalg::{JobSvd, Solve, SVDDC, SVD};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Absolute floor below which singular values are treated as numerical noise.
pub const SVD_NOISE_FLOOR: f64 = 1e-14;

/// Size cap for dense matrix operations, overridable through the
/// `IFTN_DENSE_LIMIT` environment variable.
pub fn dense_limit() -> usize {
    std::env::var("IFTN_DENSE_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(4096)
}

/// Dense complex tensor with positive extents and row-major data.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    data: ArrayD<C64>,
}

impl DenseTensor {
    /// Builds a tensor from a shape and row-major data, validating the
    /// element count and that every entry is finite.
    pub fn new(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Domain("tensor rank must be at least 1".into()));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dims("DenseTensor::new", shape, &[data.len()]));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("tensor contains non-finite entries".into()));
        }
        let data = ArrayD::from_shape_vec(IxDyn(shape), data)
            .map_err(|e| Error::Domain(format!("bad tensor shape: {e}")))?;
        Ok(DenseTensor { data })
    }

    /// Wraps an existing array; the caller guarantees finite entries.
    pub fn from_array(a: ArrayD<C64>) -> Self {
        let data = if a.is_standard_layout() {
            a
        } else {
            a.as_standard_layout().to_owned()
        };
        DenseTensor { data }
    }

    pub fn from_matrix(m: Array2<C64>) -> Self {
        Self::from_array(m.into_dyn())
    }

    pub fn zeros(shape: &[usize]) -> Self {
        DenseTensor {
            data: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn shape(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn rank(&self) -> usize {
        self.data.ndim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn array(&self) -> &ArrayD<C64> {
        &self.data
    }

    pub fn into_array(self) -> ArrayD<C64> {
        self.data
    }

    /// The single entry of a rank-0 or all-extent-1 tensor.
    pub fn scalar(&self) -> Result<C64> {
        if self.data.len() != 1 {
            return Err(Error::Domain(format!(
                "tensor of shape {:?} is not a scalar",
                self.shape()
            )));
        }
        Ok(*self.data.iter().next().unwrap())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.len() {
            return Err(Error::dims("reshape", self.shape(), shape));
        }
        let data = self
            .data
            .clone()
            .into_shape_with_order(IxDyn(shape))
            .map_err(|e| Error::Domain(format!("reshape: {e}")))?;
        Ok(DenseTensor { data })
    }

    pub fn permute(&self, axes: &[usize]) -> Self {
        let v = self.data.clone().permuted_axes(IxDyn(axes));
        DenseTensor::from_array(v)
    }

    /// Groups axes `[0, split)` into rows and `[split, rank)` into columns.
    pub fn as_matrix(&self, split: usize) -> Result<Array2<C64>> {
        if split == 0 || split >= self.rank() {
            return Err(Error::Domain(format!(
                "matrix split {split} out of range for rank {}",
                self.rank()
            )));
        }
        let rows: usize = self.shape()[..split].iter().product();
        let cols: usize = self.shape()[split..].iter().product();
        Ok(self
            .data
            .clone()
            .into_shape_with_order((rows, cols))
            .expect("contiguous reshape"))
    }

    pub fn conj(&self) -> Self {
        DenseTensor {
            data: self.data.mapv(|z| z.conj()),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        DenseTensor {
            data: self.data.mapv(|z| z * s),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Contracts `a` and `b` over the listed `(axis of a, axis of b)` pairs.
///
/// Free axes of `a` precede free axes of `b` in the result, each group in its
/// original order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let ra = a.rank();
    let rb = b.rank();
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in pairs {
        if ia >= ra || ib >= rb {
            return Err(Error::Domain(format!(
                "contraction axis pair ({ia},{ib}) out of range for ranks ({ra},{rb})"
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::Domain(format!(
                "axis paired twice in contraction: ({ia},{ib})"
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.shape()[ia] != b.shape()[ib] {
            return Err(Error::dims(
                format!("contract axes ({ia},{ib})"),
                a.shape(),
                b.shape(),
            ));
        }
    }
    let free_a: Vec<usize> = (0..ra).filter(|i| !used_a[*i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|i| !used_b[*i]).collect();

    let perm_a: Vec<usize> = free_a.iter().chain(pairs.iter().map(|(i, _)| i)).copied().collect();
    let perm_b: Vec<usize> = pairs.iter().map(|(_, j)| j).chain(free_b.iter()).copied().collect();

    let pa = a.permute(&perm_a);
    let pb = b.permute(&perm_b);

    let m: usize = free_a.iter().map(|&i| a.shape()[i]).product();
    let k: usize = pairs.iter().map(|&(i, _)| a.shape()[i]).product();
    let n: usize = free_b.iter().map(|&j| b.shape()[j]).product();

    let ma = pa
        .into_array()
        .into_shape_with_order((m, k))
        .expect("contiguous");
    let mb = pb
        .into_array()
        .into_shape_with_order((k, n))
        .expect("contiguous");
    let out = ma.dot(&mb);

    let mut shape: Vec<usize> = free_a.iter().map(|&i| a.shape()[i]).collect();
    shape.extend(free_b.iter().map(|&j| b.shape()[j]));
    if shape.is_empty() {
        shape.push(1);
    }
    Ok(DenseTensor::from_array(
        out.into_shape_with_order(IxDyn(&shape)).expect("contiguous"),
    ))
}

/// Result of a (possibly truncated) singular value decomposition.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Isometry carrying the row group; shape = row extents + `[rank]`.
    pub u: DenseTensor,
    /// Retained singular values, descending.
    pub s: Vec<f64>,
    /// Isometry carrying the column group; shape = `[rank]` + column extents.
    pub vdag: DenseTensor,
    /// Sum of squared discarded singular values.
    pub truncation_weight: f64,
}

/// How truncating SVDs are computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SvdBackend {
    /// LAPACK divide-and-conquer (`zgesdd`), exact.
    Gesdd,
    /// Seeded randomized range finder followed by a small exact SVD.
    ///
    /// Only used when a finite `max_rank` makes the sketch worthwhile; falls
    /// back to `Gesdd` otherwise. Deterministic for a fixed seed.
    Randomized {
        oversample: usize,
        power_iters: usize,
        seed: u64,
    },
}

impl Default for SvdBackend {
    fn default() -> Self {
        SvdBackend::Gesdd
    }
}

fn svd_matrix(m: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    match m.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        // gesdd can fail to converge on rare inputs; gesvd is slower but solid.
        _ => match m.svd(true, true) {
            Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
            Ok(_) => Err(Error::Linalg("SVD returned no factors".into())),
            Err(e) => Err(e.into()),
        },
    }
}

fn keep_count(s: &[f64], max_rank: Option<usize>, cutoff: f64) -> usize {
    let s0 = s.first().copied().unwrap_or(0.0);
    let rel = cutoff * s0;
    let mut keep = s
        .iter()
        .take_while(|&&v| v > rel && v > SVD_NOISE_FLOOR)
        .count();
    if let Some(d) = max_rank {
        keep = keep.min(d);
    }
    keep.max(1)
}

/// Truncated SVD of `t` split after axis `split`.
///
/// Retains at most `max_rank` singular values and drops those below
/// `cutoff` relative to the largest one (plus an absolute noise floor).
/// Degenerate values at the truncation boundary are kept by index in the
/// descending order, so cuts through a degenerate cluster are basis-dependent
/// but deterministic.
pub fn truncated_svd(
    t: &DenseTensor,
    split: usize,
    max_rank: Option<usize>,
    cutoff: f64,
) -> Result<SvdResult> {
    truncated_svd_backend(t, split, max_rank, cutoff, SvdBackend::Gesdd)
}

/// [`truncated_svd`] with an explicit backend choice.
pub fn truncated_svd_backend(
    t: &DenseTensor,
    split: usize,
    max_rank: Option<usize>,
    cutoff: f64,
    backend: SvdBackend,
) -> Result<SvdResult> {
    if t.is_empty() {
        return Err(Error::Domain("SVD of empty tensor".into()));
    }
    let m = t.as_matrix(split)?;
    let (rows, cols) = m.dim();

    if let SvdBackend::Randomized {
        oversample,
        power_iters,
        seed,
    } = backend
    {
        if let Some(d) = max_rank {
            let sketch = d + oversample;
            // Only sketch when it actually shrinks the problem.
            if sketch * 2 < rows.min(cols) {
                return randomized_svd(t, split, &m, d, oversample, power_iters, seed, cutoff);
            }
        }
    }

    let (u, s, vt) = svd_matrix(&m)?;
    let sv: Vec<f64> = s.to_vec();
    let keep = keep_count(&sv, max_rank, cutoff);
    let weight: f64 = sv[keep..].iter().map(|v| v * v).sum();
    Ok(assemble_svd(
        t,
        split,
        u.slice(s![.., ..keep]).to_owned(),
        sv[..keep].to_vec(),
        vt.slice(s![..keep, ..]).to_owned(),
        weight,
    ))
}

fn assemble_svd(
    t: &DenseTensor,
    split: usize,
    u: Array2<C64>,
    s: Vec<f64>,
    vt: Array2<C64>,
    truncation_weight: f64,
) -> SvdResult {
    let keep = s.len();
    let mut ushape: Vec<usize> = t.shape()[..split].to_vec();
    ushape.push(keep);
    let mut vshape = vec![keep];
    vshape.extend_from_slice(&t.shape()[split..]);
    SvdResult {
        u: DenseTensor::from_array(u.into_dyn())
            .reshape(&ushape)
            .expect("u reshape"),
        s,
        vdag: DenseTensor::from_array(vt.into_dyn())
            .reshape(&vshape)
            .expect("v reshape"),
        truncation_weight,
    }
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = StandardNormal;
    Array2::from_shape_fn((rows, cols), |_| {
        let re: f64 = dist.sample(&mut rng);
        let im: f64 = dist.sample(&mut rng);
        C64::new(re, im)
    })
}

fn thin_qr_q(m: &Array2<C64>) -> Result<Array2<C64>> {
    use ndarray_linalg::QR;
    let (q, _r) = m.qr()?;
    Ok(q)
}

#[allow(clippy::too_many_arguments)]
fn randomized_svd(
    t: &DenseTensor,
    split: usize,
    m: &Array2<C64>,
    max_rank: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
    cutoff: f64,
) -> Result<SvdResult> {
    let (rows, cols) = m.dim();
    let sketch = (max_rank + oversample).min(rows.min(cols));
    let total_sq: f64 = m.iter().map(|z| z.norm_sqr()).sum();

    // Range finder on the row space: Q spans the dominant column space of m.
    let omega = gaussian_matrix(cols, sketch, seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut q = thin_qr_q(&m.dot(&omega))?;
    for _ in 0..power_iters {
        let z = m.t().mapv(|v| v.conj()).dot(&q);
        let qz = thin_qr_q(&z)?;
        q = thin_qr_q(&m.dot(&qz))?;
    }
    // Project and solve the small problem exactly.
    let b = q.t().mapv(|v| v.conj()).dot(m);
    let (ub, s, vt) = svd_matrix(&b)?;
    let sv: Vec<f64> = s.to_vec();
    let keep = keep_count(&sv, Some(max_rank), cutoff);
    let kept_sq: f64 = sv[..keep].iter().map(|v| v * v).sum();
    let weight = (total_sq - kept_sq).max(0.0);
    let u = q.dot(&ub.slice(s![.., ..keep]));
    Ok(assemble_svd(
        t,
        split,
        u,
        sv[..keep].to_vec(),
        vt.slice(s![..keep, ..]).to_owned(),
        weight,
    ))
}

/// Thin QR of `t` split after axis `split`: returns `(q, r)` with `q` an
/// isometry of shape row-extents + `[k]` and `r` of shape `[k]` + column
/// extents.
pub fn qr_split(t: &DenseTensor, split: usize) -> Result<(DenseTensor, DenseTensor)> {
    use ndarray_linalg::QR;
    let m = t.as_matrix(split)?;
    let (q, r) = m.qr()?;
    let k = q.ncols();
    let mut qshape: Vec<usize> = t.shape()[..split].to_vec();
    qshape.push(k);
    let mut rshape = vec![k];
    rshape.extend_from_slice(&t.shape()[split..]);
    Ok((
        DenseTensor::from_array(q.into_dyn()).reshape(&qshape)?,
        DenseTensor::from_array(r.into_dyn()).reshape(&rshape)?,
    ))
}

fn mat_one_norm(a: &Array2<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Dense matrix exponential `exp(scale * h)` by Padé-13 scaling and squaring.
pub fn dense_expm(h: &DenseTensor, scale: C64) -> Result<DenseTensor> {
    if h.rank() != 2 || h.shape()[0] != h.shape()[1] {
        return Err(Error::dims("dense_expm (square matrix required)", h.shape(), h.shape()));
    }
    let n = h.shape()[0];
    if n > dense_limit() {
        return Err(Error::Resource {
            what: format!("dense_expm extent {n} exceeds limit {}", dense_limit()),
            iteration: None,
        });
    }
    let a0: Array2<C64> = h.as_matrix(1)?.mapv(|z| z * scale);

    // Higham (2005) Padé-13 coefficients.
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let norm = mat_one_norm(&a0);
    let sq = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = a0.mapv(|z| z / C64::new(2f64.powi(sq), 0.0));

    let id = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let u_core = {
        let top = a6.mapv(|z| z * C64::from(B[13]))
            + a4.mapv(|z| z * C64::from(B[11]))
            + a2.mapv(|z| z * C64::from(B[9]));
        let rest = a6.mapv(|z| z * C64::from(B[7]))
            + a4.mapv(|z| z * C64::from(B[5]))
            + a2.mapv(|z| z * C64::from(B[3]))
            + id.mapv(|z| z * C64::from(B[1]));
        a.dot(&(a6.dot(&top) + rest))
    };
    let v_core = {
        let top = a6.mapv(|z| z * C64::from(B[12]))
            + a4.mapv(|z| z * C64::from(B[10]))
            + a2.mapv(|z| z * C64::from(B[8]));
        let rest = a6.mapv(|z| z * C64::from(B[6]))
            + a4.mapv(|z| z * C64::from(B[4]))
            + a2.mapv(|z| z * C64::from(B[2]))
            + id.mapv(|z| z * C64::from(B[0]));
        a6.dot(&top) + rest
    };

    let p = &v_core + &u_core;
    let q = &v_core - &u_core;

    // Solve q * x = p column by column.
    use ndarray_linalg::FactorizeInto;
    let mut x = Array2::<C64>::zeros((n, n));
    let qf = q.factorize_into().map_err(Error::from)?;
    for (j, col) in p.columns().into_iter().enumerate() {
        let sol = qf.solve(&col.to_owned()).map_err(Error::from)?;
        x.column_mut(j).assign(&sol);
    }

    let mut r = x;
    for _ in 0..sq {
        r = r.dot(&r);
    }
    Ok(DenseTensor::from_matrix(r))
}

/// Vectorizes a density matrix column-major (ket index fast):
/// `vec(rho)[i + d*j] = rho[i, j]`.
pub fn vec_density(rho: &Array2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    Array1::from_shape_fn(d * d, |l| rho[[l % d, l / d]])
}

/// Inverse of [`vec_density`].
pub fn unvec_density(v: &ArrayView1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j])
}

/// Superoperator matrix of `rho -> a * rho * b` in the [`vec_density`]
/// convention.
pub fn superop(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let d = a.nrows();
    let mut s = Array2::<C64>::zeros((d * d, d * d));
    for j in 0..d {
        for i in 0..d {
            for jp in 0..d {
                for ip in 0..d {
                    s[[i + d * j, ip + d * jp]] = a[[i, ip]] * b[[jp, j]];
                }
            }
        }
    }
    s
}

/// The row vector that takes `vec(rho)` to `tr(rho)`.
pub fn trace_vector(d: usize) -> Array1<C64> {
    Array1::from_shape_fn(d * d, |l| {
        if l % d == l / d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::Eigh;

    fn lcg_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        let n: usize = shape.iter().product();
        let data: Vec<C64> = (0..n).map(|_| C64::new(next(), next())).collect();
        DenseTensor::new(shape, data).unwrap()
    }

    #[test]
    fn contract_identity_passthrough() {
        let id = DenseTensor::new(
            &[2, 2],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        let b = lcg_tensor(&[2, 3], 5);
        let out = contract(&id, &b, &[(1, 0)]).unwrap();
        let diff = (out.array() - b.array()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn contract_dot_product() {
        let a = DenseTensor::new(&[2], vec![C64::from(1.0), C64::from(2.0)]).unwrap();
        let b = DenseTensor::new(&[2], vec![C64::from(3.0), C64::from(4.0)]).unwrap();
        let out = contract(&a, &b, &[(0, 0)]).unwrap();
        assert!((out.scalar().unwrap() - C64::from(11.0)).norm() < 1e-15);
    }

    #[test]
    fn contract_matches_loop_oracle() {
        let a = lcg_tensor(&[3, 4, 5], 1);
        let b = lcg_tensor(&[5, 4], 2);
        // pair a-axis 1 with b-axis 1 and a-axis 2 with b-axis 0
        let out = contract(&a, &b, &[(1, 1), (2, 0)]).unwrap();
        assert_eq!(out.shape(), &[3]);
        for i in 0..3 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..4 {
                for k in 0..5 {
                    acc += a.array()[[i, j, k]] * b.array()[[k, j]];
                }
            }
            assert!((out.array()[[i]] - acc).norm() < 1e-13);
        }
    }

    #[test]
    fn contract_is_bilinear() {
        let a = lcg_tensor(&[4, 3], 11);
        let b = lcg_tensor(&[3, 2], 12);
        let alpha = C64::new(0.7, -1.3);
        let lhs = contract(&a.scale(alpha), &b, &[(1, 0)]).unwrap();
        let rhs = contract(&a, &b, &[(1, 0)]).unwrap().scale(alpha);
        let diff = (lhs.array() - rhs.array()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn contract_shape_mismatch_reports_both_shapes() {
        let a = lcg_tensor(&[2, 3], 1);
        let b = lcg_tensor(&[4, 2], 2);
        let err = contract(&a, &b, &[(1, 0)]).unwrap_err();
        match err {
            Error::DimensionMismatch { lhs, rhs, .. } => {
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![4, 2]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn svd_rank_one() {
        let u = lcg_tensor(&[6], 3);
        let v = lcg_tensor(&[5], 4);
        let outer = {
            let mut data = Vec::with_capacity(30);
            for i in 0..6 {
                for j in 0..5 {
                    data.push(u.array()[[i]] * v.array()[[j]]);
                }
            }
            DenseTensor::new(&[6, 5], data).unwrap()
        };
        let r = truncated_svd(&outer, 1, Some(8), 0.0).unwrap();
        assert_eq!(r.s.len(), 1);
        assert!(r.truncation_weight < 1e-24);
    }

    #[test]
    fn svd_identity_truncation_weight() {
        let id4 = DenseTensor::from_matrix(Array2::<C64>::eye(4));
        let r = truncated_svd(&id4, 1, Some(2), 0.0).unwrap();
        assert_eq!(r.s.len(), 2);
        assert!((r.s[0] - 1.0).abs() < 1e-14 && (r.s[1] - 1.0).abs() < 1e-14);
        assert!((r.truncation_weight - 2.0).abs() < 1e-12);
    }

    fn reconstruct(r: &SvdResult) -> Array2<C64> {
        let u = r.u.as_matrix(r.u.rank() - 1).unwrap();
        let v = r.vdag.as_matrix(1).unwrap();
        let mut us = u.clone();
        for (j, &s) in r.s.iter().enumerate() {
            us.column_mut(j).mapv_inplace(|z| z * C64::from(s));
        }
        us.dot(&v)
    }

    #[test]
    fn svd_reconstruction_and_weight() {
        let t = lcg_tensor(&[16, 16], 7);
        let r = truncated_svd(&t, 1, Some(16), 0.0).unwrap();
        let m = t.as_matrix(1).unwrap();
        let err = (&m - &reconstruct(&r)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12, "err = {err:e}");

        // truncated case: weight equals squared Frobenius error of the
        // reconstruction
        let r4 = truncated_svd(&t, 1, Some(4), 0.0).unwrap();
        let err4: f64 = (&m - &reconstruct(&r4)).iter().map(|z| z.norm_sqr()).sum();
        assert!((err4 - r4.truncation_weight).abs() < 1e-12);
    }

    #[test]
    fn svd_unbounded_reconstructs_random_tensors() {
        for &n in &[8usize, 32, 64] {
            let t = lcg_tensor(&[n, n], n as u64);
            let r = truncated_svd(&t, 1, None, 0.0).unwrap();
            let m = t.as_matrix(1).unwrap();
            let rel = (&m - &reconstruct(&r)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
                / t.norm();
            assert!(rel < 1e-12, "n={n} rel={rel:e}");
        }
    }

    #[test]
    fn svd_isometry_conditions() {
        let t = lcg_tensor(&[12, 9], 21);
        let r = truncated_svd(&t, 1, Some(5), 0.0).unwrap();
        let u = r.u.as_matrix(1).unwrap();
        let gram = u.t().mapv(|z| z.conj()).dot(&u);
        let dev = (&gram - &Array2::<C64>::eye(5)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
        let v = r.vdag.as_matrix(1).unwrap();
        let gram_v = v.dot(&v.t().mapv(|z| z.conj()));
        let dev_v = (&gram_v - &Array2::<C64>::eye(5)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev_v < 1e-12);
    }

    #[test]
    fn svd_empty_tensor_is_domain_error() {
        let t = DenseTensor::zeros(&[0, 3]);
        assert!(matches!(truncated_svd(&t, 1, None, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn randomized_backend_agrees_on_kept_values() {
        let t = lcg_tensor(&[96, 64], 9);
        let exact = truncated_svd(&t, 1, Some(8), 0.0).unwrap();
        let rnd = truncated_svd_backend(
            &t,
            1,
            Some(8),
            0.0,
            SvdBackend::Randomized { oversample: 16, power_iters: 2, seed: 42 },
        )
        .unwrap();
        for (a, b) in exact.s.iter().zip(rnd.s.iter()) {
            assert!((a - b).abs() < 1e-6 * exact.s[0], "{a} vs {b}");
        }
        // determinism
        let rnd2 = truncated_svd_backend(
            &t,
            1,
            Some(8),
            0.0,
            SvdBackend::Randomized { oversample: 16, power_iters: 2, seed: 42 },
        )
        .unwrap();
        assert_eq!(rnd.s, rnd2.s);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = DenseTensor::zeros(&[3, 3]);
        let e = dense_expm(&z, C64::new(1.0, 0.0)).unwrap();
        let dev = (&e.as_matrix(1).unwrap() - &Array2::<C64>::eye(3))
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-15);
    }

    #[test]
    fn expm_pauli_x_quarter_period() {
        let sx = DenseTensor::new(
            &[2, 2],
            vec![C64::from(0.0), C64::from(1.0), C64::from(1.0), C64::from(0.0)],
        )
        .unwrap();
        let e = dense_expm(&sx, C64::new(0.0, -std::f64::consts::FRAC_PI_2)).unwrap();
        // exp(-i pi/2 sx) = -i sx
        let target = sx.scale(C64::new(0.0, -1.0));
        let dev = (e.array() - target.array()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-13, "dev={dev:e}");
    }

    #[test]
    fn expm_matches_eigendecomposition_oracle() {
        let g = lcg_tensor(&[8, 8], 33);
        let m = g.as_matrix(1).unwrap();
        let herm = (&m + &m.t().mapv(|z| z.conj())).mapv(|z| z * C64::from(0.5));
        let scale = C64::new(0.0, -0.05);
        let e = dense_expm(&DenseTensor::from_matrix(herm.clone()), scale).unwrap();

        let (w, v) = herm.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        let mut d = Array2::<C64>::zeros((8, 8));
        for i in 0..8 {
            d[[i, i]] = (scale * C64::from(w[i])).exp();
        }
        let oracle = v.dot(&d).dot(&v.t().mapv(|z| z.conj()));
        let dev = (&e.as_matrix(1).unwrap() - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "dev={dev:e}");
    }

    #[test]
    fn expm_unitarity_for_hermitian_input() {
        let g = lcg_tensor(&[6, 6], 44);
        let m = g.as_matrix(1).unwrap();
        let herm = (&m + &m.t().mapv(|z| z.conj())).mapv(|z| z * C64::from(0.5));
        let h = DenseTensor::from_matrix(herm);
        let fwd = dense_expm(&h, C64::new(0.0, -0.3)).unwrap();
        let bwd = dense_expm(&h, C64::new(0.0, 0.3)).unwrap();
        let prod = fwd.as_matrix(1).unwrap().dot(&bwd.as_matrix(1).unwrap());
        let dev = (&prod - &Array2::<C64>::eye(6)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn expm_rejects_non_square() {
        let t = lcg_tensor(&[2, 3], 1);
        assert!(dense_expm(&t, C64::from(1.0)).is_err());
    }

    #[test]
    fn superop_conventions() {
        // rho -> a rho b, vec column-major with ket index fast
        let a = lcg_tensor(&[3, 3], 50).as_matrix(1).unwrap();
        let b = lcg_tensor(&[3, 3], 51).as_matrix(1).unwrap();
        let rho = lcg_tensor(&[3, 3], 52).as_matrix(1).unwrap();
        let direct = a.dot(&rho).dot(&b);
        let via = superop(&a, &b).dot(&vec_density(&rho));
        let dev = (&vec_density(&direct) - &via).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-13);
        let tr: C64 = trace_vector(3).dot(&vec_density(&rho));
        let tr_direct: C64 = (0..3).map(|i| rho[[i, i]]).sum();
        assert!((tr - tr_direct).norm() < 1e-14);
    }
}
