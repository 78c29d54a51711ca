//! Dense complex tensors with row-major linearization.
//!
//! The element at multi-index `(i_0, ..., i_{k-1})` of a tensor with shape
//! `(d_0, ..., d_{k-1})` is stored at offset `i_0 * d_1 * ... * d_{k-1} + ... + i_{k-1}`,
//! i.e. the last index runs fastest. Two-dimensional tensors double as
//! matrices with shape `(rows, cols)`. For operators acting on a register of
//! wires, wire 0 is the most significant part of the row/column index, so
//! `kron(a, b)` puts `a` on the lower-numbered wires.

mod linalg;
mod rng;

pub use linalg::{determinant, eigh, eigh_real, polar, qr_unitary, svd_values};
pub use rng::Rng;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex tensor, row-major.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

fn product(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![C_ZERO; product(shape)],
        }
    }

    pub fn from_data(shape: &[usize], data: Vec<Complex64>) -> Result<Self> {
        if product(shape) != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                product(shape),
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = C_ONE;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.shape[i + 1];
        }
        s
    }

    pub fn at(&self, idx: &[usize]) -> Complex64 {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = self.strides();
        let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[off]
    }

    pub fn set(&mut self, idx: &[usize], v: Complex64) {
        let strides = self.strides();
        let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[off] = v;
    }

    /// Element of a 2-d tensor.
    pub fn get2(&self, r: usize, c: usize) -> Complex64 {
        debug_assert_eq!(self.ndim(), 2);
        self.data[r * self.shape[1] + c]
    }

    pub fn set2(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert_eq!(self.ndim(), 2);
        self.data[r * self.shape[1] + c] = v;
    }

    /// Reinterprets the data with a new shape of equal total size.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if product(shape) != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Axis permutation: `result[i_{perm[0]}, ...] = self[i_0, ...]`, i.e.
    /// `perm[k]` names the input axis placed at output position `k`.
    pub fn permute(&self, perm: &[usize]) -> Result<Tensor> {
        let nd = self.shape.len();
        if perm.len() != nd {
            return Err(Error::InvalidArgument(format!(
                "permutation {:?} does not match rank {}",
                perm, nd
            )));
        }
        let mut seen = vec![false; nd];
        for &p in perm {
            if p >= nd || seen[p] {
                return Err(Error::InvalidArgument(format!("invalid permutation {:?}", perm)));
            }
            seen[p] = true;
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let in_strides = self.strides();
        let mut out = Tensor::zeros(&out_shape);
        let out_strides = out.strides();
        // walk output indices in linear order
        let n = self.data.len();
        let mut idx = vec![0usize; nd];
        for off_out in 0..n {
            let mut off_in = 0usize;
            for k in 0..nd {
                off_in += idx[k] * in_strides[perm[k]];
            }
            out.data[off_out] = self.data[off_in];
            // increment multi-index over out_shape
            for k in (0..nd).rev() {
                idx[k] += 1;
                if idx[k] < out_shape[k] {
                    break;
                }
                idx[k] = 0;
            }
            let _ = out_strides;
        }
        Ok(out)
    }

    pub fn conj(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose of a 2-d tensor.
    pub fn dagger(&self) -> Tensor {
        debug_assert_eq!(self.ndim(), 2);
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j].conj();
            }
        }
        out
    }

    pub fn transpose2(&self) -> Tensor {
        debug_assert_eq!(self.ndim(), 2);
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("add: shapes differ".into()));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.add(&other.scale(-C_ONE))
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Matrix product of 2-d tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.ndim() != 2 || other.ndim() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::ShapeMismatch(format!(
                "matmul: {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![C_ZERO; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &a) in arow.iter().enumerate() {
                if a == C_ZERO {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Kronecker product of 2-d tensors; `self` occupies the more
    /// significant (lower-numbered) wires.
    pub fn kron(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!(self.ndim(), 2);
        debug_assert_eq!(other.ndim(), 2);
        let (r1, c1) = (self.shape[0], self.shape[1]);
        let (r2, c2) = (other.shape[0], other.shape[1]);
        let mut out = Tensor::zeros(&[r1 * r2, c1 * c2]);
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                let a = self.data[i1 * c1 + j1];
                if a == C_ZERO {
                    continue;
                }
                for i2 in 0..r2 {
                    for j2 in 0..c2 {
                        out.data[(i1 * r2 + i2) * (c1 * c2) + (j1 * c2 + j2)] =
                            a * other.data[i2 * c2 + j2];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert_eq!(self.ndim(), 2);
        debug_assert_eq!(self.shape[0], self.shape[1]);
        let n = self.shape[0];
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `tr(self† other)` for same-shape tensors.
    pub fn inner(&self, other: &Tensor) -> Complex64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Deviation of a square 2-d tensor from unitarity, `max |U†U - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = self.dagger().matmul(self).unwrap();
        prod.sub(&Tensor::identity(prod.shape[0])).unwrap().max_abs()
    }

    /// Phase-minimized distance `min_phi max|A - e^{i phi} B|`; the optimal
    /// phase aligns `tr(A† B)`.
    pub fn phase_distance(&self, other: &Tensor) -> f64 {
        let ip = self.inner(other);
        let phase = if ip.norm() < 1e-300 {
            C_ONE
        } else {
            ip.conj() / ip.norm()
        };
        self.sub(&other.scale(phase)).unwrap().max_abs()
    }
}

/// Contraction over paired axes: the result carries the unpaired axes of `a`
/// followed by the unpaired axes of `b`, in their original order, and equals
/// the index-sum definition.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut used_a = vec![false; a.ndim()];
    let mut used_b = vec![false; b.ndim()];
    for &(ia, ib) in pairs {
        if ia >= a.ndim() || ib >= b.ndim() {
            return Err(Error::InvalidArgument(format!(
                "contract: axis pair ({ia},{ib}) out of range"
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::InvalidArgument(format!(
                "contract: axis pair ({ia},{ib}) repeats an axis"
            )));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::ShapeMismatch(format!(
                "contract: dim {} of a is {}, dim {} of b is {}",
                ia, a.shape[ia], ib, b.shape[ib]
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
    }
    let free_a: Vec<usize> = (0..a.ndim()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.ndim()).filter(|&i| !used_b[i]).collect();

    // a -> (free_a, contracted), b -> (contracted, free_b), then matmul
    let mut perm_a = free_a.clone();
    perm_a.extend(pairs.iter().map(|&(ia, _)| ia));
    let mut perm_b: Vec<usize> = pairs.iter().map(|&(_, ib)| ib).collect();
    perm_b.extend(free_b.iter().copied());

    let pa = a.permute(&perm_a)?;
    let pb = b.permute(&perm_b)?;
    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = pairs.iter().map(|&(ia, _)| a.shape[ia]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();
    let res = pa.reshape(&[m, k])?.matmul(&pb.reshape(&[k, n])?)?;

    let mut out_shape: Vec<usize> = free_a.iter().map(|&i| a.shape[i]).collect();
    out_shape.extend(free_b.iter().map(|&i| b.shape[i]));
    if out_shape.is_empty() {
        out_shape.push(1);
    }
    res.reshape(&out_shape)
}

/// Applies `gate` (a `g x g` matrix over the listed wires, in the listed
/// order) to the row index of `target`, whose rows factor into `wire_dims`.
/// Columns of `target` are untouched, so this computes `embed(gate) * target`.
pub fn apply_to_wires(
    gate: &Tensor,
    target: &Tensor,
    wire_dims: &[usize],
    wires: &[usize],
) -> Result<Tensor> {
    debug_assert_eq!(target.ndim(), 2);
    let d: usize = wire_dims.iter().product();
    if target.shape[0] != d {
        return Err(Error::ShapeMismatch(format!(
            "apply_to_wires: rows {} != wire product {}",
            target.shape[0], d
        )));
    }
    let gdims: Vec<usize> = wires.iter().map(|&w| wire_dims[w]).collect();
    let g: usize = gdims.iter().product();
    if gate.shape() != [g, g] {
        return Err(Error::ShapeMismatch(format!(
            "apply_to_wires: gate {:?} does not act on dims {:?}",
            gate.shape(),
            gdims
        )));
    }
    let cols = target.shape[1];
    // view target rows as wire tensor
    let mut tshape = wire_dims.to_vec();
    tshape.push(cols);
    let t = target.reshape(&tshape)?;
    // gate as [out..., in...]
    let mut gshape = gdims.clone();
    gshape.extend(gdims.iter());
    let gt = gate.reshape(&gshape)?;
    let pairs: Vec<(usize, usize)> = wires
        .iter()
        .enumerate()
        .map(|(k, &w)| (wires.len() + k, w))
        .collect();
    // result axes: gate-out axes first, then remaining target axes
    let res = contract(&gt, &t, &pairs)?;
    // permute back: output axis order is (wires..., untouched..., col)
    let untouched: Vec<usize> = (0..wire_dims.len()).filter(|w| !wires.contains(w)).collect();
    let mut cur_axes: Vec<usize> = wires.to_vec();
    cur_axes.extend(untouched.iter().copied());
    // find, for each desired output wire (0..n then col), its current position
    let mut perm = Vec::with_capacity(wire_dims.len() + 1);
    for w in 0..wire_dims.len() {
        let pos = cur_axes.iter().position(|&a| a == w).unwrap();
        perm.push(pos);
    }
    perm.push(wire_dims.len()); // column axis stayed last
    let out = res.permute(&perm)?;
    out.reshape(&[d, cols])
}

/// Partial trace of a `D x D` operator over all wires not in `keep`; the
/// result is ordered by `keep`.
pub fn partial_trace(op: &Tensor, wire_dims: &[usize], keep: &[usize]) -> Result<Tensor> {
    debug_assert_eq!(op.ndim(), 2);
    let d: usize = wire_dims.iter().product();
    if op.shape[0] != d || op.shape[1] != d {
        return Err(Error::ShapeMismatch("partial_trace: operator/wire mismatch".into()));
    }
    let n = wire_dims.len();
    let mut shape = wire_dims.to_vec();
    shape.extend(wire_dims.iter());
    let t = op.reshape(&shape)?;
    let kd: usize = keep.iter().map(|&w| wire_dims[w]).product();
    let traced: Vec<usize> = (0..n).filter(|w| !keep.contains(w)).collect();

    // permute to (keep_row, keep_col, traced_row, traced_col) and sum diagonal
    let mut perm: Vec<usize> = keep.to_vec();
    perm.extend(keep.iter().map(|&w| w + n));
    perm.extend(traced.iter().copied());
    perm.extend(traced.iter().map(|&w| w + n));
    let p = t.permute(&perm)?;
    let td: usize = traced.iter().map(|&w| wire_dims[w]).product();
    let flat = p.reshape(&[kd, kd, td, td])?;
    let mut out = Tensor::zeros(&[kd, kd]);
    for i in 0..kd {
        for j in 0..kd {
            let mut s = C_ZERO;
            for k in 0..td {
                s += flat.at(&[i, j, k, k]);
            }
            out.set2(i, j, s);
        }
    }
    Ok(out)
}

/// Closest isometry to `m` (viewed as a `D_in x D_out` matrix, `D_in >= D_out`)
/// in Frobenius norm, via the polar factor. Returns the isometry and a flag
/// that is set when the input was rank deficient and a canonical isometry
/// (identity embedding) was substituted.
pub fn isometrize(m: &Tensor) -> Result<(Tensor, bool)> {
    if m.ndim() != 2 || m.shape[0] < m.shape[1] {
        return Err(Error::InvalidArgument(format!(
            "isometrize requires D_in >= D_out, got {:?}",
            m.shape()
        )));
    }
    let svals = svd_values(m);
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    if smax <= 0.0 || svals.iter().any(|&s| s < 1e-13 * smax) {
        // canonical fallback: identity embedding on the leading block
        let mut w = Tensor::zeros(&[m.shape[0], m.shape[1]]);
        for j in 0..m.shape[1] {
            w.set2(j, j, C_ONE);
        }
        return Ok((w, true));
    }
    Ok((polar(m)?, false))
}

/// Haar-random unitary of dimension `dim` (QR of a complex Ginibre matrix
/// with the R diagonal phase fixed).
pub fn random_unitary(dim: usize, rng: &mut Rng) -> Tensor {
    assert!(dim >= 1);
    let mut g = Tensor::zeros(&[dim, dim]);
    for v in g.data_mut() {
        *v = Complex64::new(rng.normal(), rng.normal());
    }
    qr_unitary(&g)
}
