//! Trotter-circuit machinery: the 15-angle two-qubit gate parametrization,
//! brick-wall and parallel-random-pair-circuit (PRPC) layouts, and assembly
//! of circuits into disentangler/isometry tensors.
//!
//! Wire conventions follow the tensor module: wire 0 is the most significant
//! index digit, and `kron(a, b)` places `a` on the lower-numbered wires.

mod kak;

pub use kak::kak_decompose;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{apply_to_wires, Rng, Tensor, C_ONE};

/// Canonical angles of a two-qubit gate:
/// `U = (R3 (x) R4) . Rzz(tz) Ryy(ty) Rxx(tx) . (R1 (x) R2)`
/// with `R(a,b,c) = Rz(a) Ry(b) Rz(c)`, `Rz(a) = exp(-i a Z/2)`,
/// `R_ss(t) = exp(-i t s(x)s/2) = cos(t/2) I - i sin(t/2) s(x)s`.
/// Rotations `R1`/`R3` act on the lower-numbered qubit of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateAngles {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    /// Euler (z-y-z) triples of the pre-rotations R1, R2.
    pub pre: [[f64; 3]; 2],
    /// Euler triples of the post-rotations R3, R4.
    pub post: [[f64; 3]; 2],
}

impl GateAngles {
    pub const ZERO: GateAngles = GateAngles {
        theta_x: 0.0,
        theta_y: 0.0,
        theta_z: 0.0,
        pre: [[0.0; 3]; 2],
        post: [[0.0; 3]; 2],
    };

    /// Flattens to the fixed parameter order used by the Euclidean optimizer:
    /// `[R1(3), R2(3), tx, ty, tz, R3(3), R4(3)]`.
    pub fn to_vector(&self) -> [f64; 15] {
        let mut v = [0.0; 15];
        v[..3].copy_from_slice(&self.pre[0]);
        v[3..6].copy_from_slice(&self.pre[1]);
        v[6] = self.theta_x;
        v[7] = self.theta_y;
        v[8] = self.theta_z;
        v[9..12].copy_from_slice(&self.post[0]);
        v[12..].copy_from_slice(&self.post[1]);
        v
    }

    pub fn from_vector(v: &[f64; 15]) -> GateAngles {
        GateAngles {
            theta_x: v[6],
            theta_y: v[7],
            theta_z: v[8],
            pre: [[v[0], v[1], v[2]], [v[3], v[4], v[5]]],
            post: [[v[9], v[10], v[11]], [v[12], v[13], v[14]]],
        }
    }

    /// Two-qubit rotation angles only, as used by angle metrics/penalties.
    pub fn two_qubit_angles(&self) -> [f64; 3] {
        [self.theta_x, self.theta_y, self.theta_z]
    }
}

pub(crate) fn rz(a: f64) -> Tensor {
    let mut t = Tensor::zeros(&[2, 2]);
    t.set2(0, 0, Complex64::from_polar(1.0, -a / 2.0));
    t.set2(1, 1, Complex64::from_polar(1.0, a / 2.0));
    t
}

pub(crate) fn ry(b: f64) -> Tensor {
    let (s, c) = (b / 2.0).sin_cos();
    let mut t = Tensor::zeros(&[2, 2]);
    t.set2(0, 0, Complex64::new(c, 0.0));
    t.set2(0, 1, Complex64::new(-s, 0.0));
    t.set2(1, 0, Complex64::new(s, 0.0));
    t.set2(1, 1, Complex64::new(c, 0.0));
    t
}

/// Euler z-y-z rotation R(a,b,c) = Rz(a) Ry(b) Rz(c).
pub(crate) fn euler_zyz(a: f64, b: f64, c: f64) -> Tensor {
    rz(a).matmul(&ry(b)).unwrap().matmul(&rz(c)).unwrap()
}

fn pauli(which: usize) -> Tensor {
    let mut t = Tensor::zeros(&[2, 2]);
    match which {
        0 => {
            t.set2(0, 1, C_ONE);
            t.set2(1, 0, C_ONE);
        }
        1 => {
            t.set2(0, 1, Complex64::new(0.0, -1.0));
            t.set2(1, 0, Complex64::new(0.0, 1.0));
        }
        _ => {
            t.set2(0, 0, C_ONE);
            t.set2(1, 1, -C_ONE);
        }
    }
    t
}

/// R_{s(x)s}(t) = cos(t/2) I - i sin(t/2) (s (x) s) for s in {X, Y, Z}.
pub(crate) fn two_qubit_rotation(which: usize, theta: f64) -> Tensor {
    let p = pauli(which);
    let pp = p.kron(&p);
    let (s, c) = (theta / 2.0).sin_cos();
    Tensor::identity(4)
        .scale(Complex64::new(c, 0.0))
        .add(&pp.scale(Complex64::new(0.0, -s)))
        .unwrap()
}

/// Builds the 4x4 unitary of the 15-angle parametrization.
pub fn gate_from_angles(a: &GateAngles) -> Tensor {
    let r1 = euler_zyz(a.pre[0][0], a.pre[0][1], a.pre[0][2]);
    let r2 = euler_zyz(a.pre[1][0], a.pre[1][1], a.pre[1][2]);
    let r3 = euler_zyz(a.post[0][0], a.post[0][1], a.post[0][2]);
    let r4 = euler_zyz(a.post[1][0], a.post[1][1], a.post[1][2]);
    let core = two_qubit_rotation(2, a.theta_z)
        .matmul(&two_qubit_rotation(1, a.theta_y))
        .unwrap()
        .matmul(&two_qubit_rotation(0, a.theta_x))
        .unwrap();
    r3.kron(&r4)
        .matmul(&core)
        .unwrap()
        .matmul(&r1.kron(&r2))
        .unwrap()
}

/// A two-qubit gate inside a Trotter circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoQubitGate {
    pub unitary: Tensor,
    pub angles: Option<GateAngles>,
    /// Qubit pair within the circuit, application order (p, q).
    pub pair: (usize, usize),
}

impl TwoQubitGate {
    pub fn identity(pair: (usize, usize)) -> TwoQubitGate {
        TwoQubitGate {
            unitary: Tensor::identity(4),
            angles: Some(GateAngles::ZERO),
            pair,
        }
    }

    pub fn from_angles(angles: GateAngles, pair: (usize, usize)) -> TwoQubitGate {
        TwoQubitGate {
            unitary: gate_from_angles(&angles),
            angles: Some(angles),
            pair,
        }
    }

    pub fn from_unitary(unitary: Tensor, pair: (usize, usize)) -> Result<TwoQubitGate> {
        if unitary.shape() != [4, 4] || unitary.unitarity_residual() > 1e-12 {
            return Err(Error::InvalidArgument(
                "two-qubit gate must be a 4x4 unitary".into(),
            ));
        }
        Ok(TwoQubitGate {
            unitary,
            angles: None,
            pair,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    BrickWall,
    Prpc,
}

/// Wiring of a Trotter circuit: an ordered list of coverings, each a set of
/// disjoint qubit pairs acted on simultaneously.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitLayout {
    pub n: usize,
    pub t: usize,
    pub coverings: Vec<Vec<(usize, usize)>>,
    pub kind: LayoutKind,
}

impl CircuitLayout {
    pub fn gate_count(&self) -> usize {
        self.coverings.iter().map(|c| c.len()).sum()
    }
}

/// Brick-wall wiring: per Trotter step one covering of even nearest-neighbor
/// pairs (0,1),(2,3),... then one of odd pairs (1,2),(3,4),...; boundaries
/// open within the tensor.
pub fn brickwall_layout(n: usize, t: usize) -> Result<CircuitLayout> {
    if n < 2 || t < 1 {
        return Err(Error::InvalidArgument(format!(
            "brick-wall layout needs n >= 2, t >= 1 (got n={n}, t={t})"
        )));
    }
    let even: Vec<(usize, usize)> = (0..n - 1).step_by(2).map(|p| (p, p + 1)).collect();
    let odd: Vec<(usize, usize)> = (1..n - 1).step_by(2).map(|p| (p, p + 1)).collect();
    let mut coverings = Vec::with_capacity(2 * t);
    for _ in 0..t {
        coverings.push(even.clone());
        coverings.push(odd.clone());
    }
    Ok(CircuitLayout {
        n,
        t,
        coverings,
        kind: LayoutKind::BrickWall,
    })
}

/// PRPC wiring: each of the 2t coverings is an independent uniformly random
/// perfect pairing of the n qubits, frozen at construction.
pub fn prpc_layout(n: usize, t: usize, rng: &mut Rng) -> Result<CircuitLayout> {
    if n < 2 || n % 2 != 0 || t < 1 {
        return Err(Error::InvalidArgument(format!(
            "PRPC layout needs even n >= 2, t >= 1 (got n={n}, t={t})"
        )));
    }
    let mut coverings = Vec::with_capacity(2 * t);
    for _ in 0..2 * t {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        // sort within and among pairs so equal matchings compare equal
        let mut pairs: Vec<(usize, usize)> = order
            .chunks(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        pairs.sort_unstable();
        coverings.push(pairs);
    }
    Ok(CircuitLayout {
        n,
        t,
        coverings,
        kind: LayoutKind::Prpc,
    })
}

/// A Trotter circuit: wiring plus one gate per (covering, pair) slot, stored
/// in application order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrotterCircuit {
    pub layout: CircuitLayout,
    pub gates: Vec<TwoQubitGate>,
}

impl TrotterCircuit {
    /// All gates set to the identity.
    pub fn identity(layout: CircuitLayout) -> TrotterCircuit {
        let gates = layout
            .coverings
            .iter()
            .flatten()
            .map(|&pair| TwoQubitGate::identity(pair))
            .collect();
        TrotterCircuit { layout, gates }
    }

    /// Gates with all 15 angles drawn uniformly from [-scale, scale].
    pub fn random_angles(layout: CircuitLayout, scale: f64, rng: &mut Rng) -> TrotterCircuit {
        let gates = layout
            .coverings
            .iter()
            .flatten()
            .map(|&pair| {
                let mut v = [0.0; 15];
                for x in &mut v {
                    *x = rng.uniform(-scale, scale);
                }
                TwoQubitGate::from_angles(GateAngles::from_vector(&v), pair)
            })
            .collect();
        TrotterCircuit { layout, gates }
    }

    pub fn check_consistent(&self) -> Result<()> {
        if self.gates.len() != self.layout.gate_count() {
            return Err(Error::Config(format!(
                "circuit carries {} gates for {} layout slots",
                self.gates.len(),
                self.layout.gate_count()
            )));
        }
        let mut k = 0;
        for covering in &self.layout.coverings {
            let mut seen = vec![false; self.layout.n];
            for &pair in covering {
                if pair.0 >= self.layout.n || pair.1 >= self.layout.n || pair.0 == pair.1 {
                    return Err(Error::Config(format!("bad pair {pair:?}")));
                }
                if seen[pair.0] || seen[pair.1] {
                    return Err(Error::Config(format!(
                        "qubit reused within a covering: {pair:?}"
                    )));
                }
                seen[pair.0] = true;
                seen[pair.1] = true;
                if self.gates[k].pair != pair {
                    return Err(Error::Config("gate order disagrees with layout".into()));
                }
                k += 1;
            }
        }
        Ok(())
    }
}

/// Dense unitary of the whole circuit (oracle / assembly path).
pub fn circuit_unitary(c: &TrotterCircuit) -> Result<Tensor> {
    let n = c.layout.n;
    if n > 12 {
        return Err(Error::Capacity(format!(
            "circuit_unitary limited to n <= 12 qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let wire_dims = vec![2usize; n];
    let mut u = Tensor::identity(dim);
    for gate in &c.gates {
        u = apply_to_wires(&gate.unitary, &u, &wire_dims, &[gate.pair.0, gate.pair.1])?;
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorRole {
    Disentangler,
    Isometry,
}

/// Turns a 2q-qubit circuit into a MERA tensor. Disentangler: the full
/// 2^{2q} x 2^{2q} unitary. Isometry: the 2^{2q} x 2^q column block with the
/// ancilla inputs fixed to |0...0>; ancillas are the q lowest-index wires, so
/// the block consists of the first 2^q columns.
pub fn assemble_tensor(c: &TrotterCircuit, role: TensorRole, q: usize) -> Result<Tensor> {
    if c.layout.n != 2 * q {
        return Err(Error::InvalidArgument(format!(
            "tensor of q={q} needs a 2q={}-qubit circuit, got n={}",
            2 * q,
            c.layout.n
        )));
    }
    let u = circuit_unitary(c)?;
    match role {
        TensorRole::Disentangler => Ok(u),
        TensorRole::Isometry => {
            let (rows, keep) = (1usize << (2 * q), 1usize << q);
            let mut v = Tensor::zeros(&[rows, keep]);
            for i in 0..rows {
                for j in 0..keep {
                    v.set2(i, j, u.get2(i, j));
                }
            }
            Ok(v)
        }
    }
}

/// First `2^keep_qubits` columns of a circuit unitary: the isometry obtained
/// by fixing the remaining (lowest-index, most significant) input wires to
/// |0...0>. Generalizes the isometry branch of [`assemble_tensor`] to tensors
/// whose input and output widths differ by more than a factor of two.
pub fn isometry_block(u: &Tensor, keep_qubits: usize) -> Result<Tensor> {
    let rows = u.rows();
    let keep = 1usize << keep_qubits;
    if keep > u.cols() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep 2^{keep_qubits} columns of a {}-column unitary",
            u.cols()
        )));
    }
    let mut v = Tensor::zeros(&[rows, keep]);
    for i in 0..rows {
        for j in 0..keep {
            v.set2(i, j, u.get2(i, j));
        }
    }
    Ok(v)
}

/// Derivative of the Euler z-y-z rotation with respect to one of its three
/// angles (0 = first z, 1 = y, 2 = last z).
fn euler_zyz_derivative(a: f64, b: f64, c: f64, which: usize) -> Tensor {
    let half = Complex64::new(0.0, -0.5);
    match which {
        0 => pauli(2).scale(half).matmul(&euler_zyz(a, b, c)).unwrap(),
        1 => rz(a)
            .matmul(&pauli(1).scale(half))
            .unwrap()
            .matmul(&ry(b))
            .unwrap()
            .matmul(&rz(c))
            .unwrap(),
        _ => euler_zyz(a, b, c).matmul(&pauli(2).scale(half)).unwrap(),
    }
}

/// Chain rule from a gate environment to the 15 angles: given
/// `gamma = de/d(conj U)`, returns `de/d(theta_j) = 2 Re tr[gamma^dag dU/d(theta_j)]`
/// in `to_vector` order.
pub fn gate_angle_gradient(a: &GateAngles, gamma: &Tensor) -> [f64; 15] {
    let r1 = euler_zyz(a.pre[0][0], a.pre[0][1], a.pre[0][2]);
    let r2 = euler_zyz(a.pre[1][0], a.pre[1][1], a.pre[1][2]);
    let r3 = euler_zyz(a.post[0][0], a.post[0][1], a.post[0][2]);
    let r4 = euler_zyz(a.post[1][0], a.post[1][1], a.post[1][2]);
    // U = F5 F4 F3 F2 F1 with F1 = R1(x)R2, F2..F4 = Rxx, Ryy, Rzz, F5 = R3(x)R4
    let factors = [
        r1.kron(&r2),
        two_qubit_rotation(0, a.theta_x),
        two_qubit_rotation(1, a.theta_y),
        two_qubit_rotation(2, a.theta_z),
        r3.kron(&r4),
    ];
    // suffix[i] = F5 ... F_{i+1}, prefix[i] = F_{i-1} ... F1 (1-based factors)
    let mut prefix = vec![Tensor::identity(4); 6];
    let mut suffix = vec![Tensor::identity(4); 6];
    for i in 0..5 {
        prefix[i + 1] = factors[i].matmul(&prefix[i]).unwrap();
        suffix[4 - i] = suffix[5 - i].matmul(&factors[4 - i]).unwrap();
    }
    let deriv = |i: usize, df: &Tensor| -> f64 {
        let du = suffix[i + 1].matmul(df).unwrap().matmul(&prefix[i]).unwrap();
        2.0 * gamma.inner(&du).re
    };
    let mut g = [0.0; 15];
    for w in 0..3 {
        g[w] = deriv(0, &euler_zyz_derivative(a.pre[0][0], a.pre[0][1], a.pre[0][2], w).kron(&r2));
        g[3 + w] =
            deriv(0, &r1.kron(&euler_zyz_derivative(a.pre[1][0], a.pre[1][1], a.pre[1][2], w)));
        g[9 + w] = deriv(
            4,
            &euler_zyz_derivative(a.post[0][0], a.post[0][1], a.post[0][2], w).kron(&r4),
        );
        g[12 + w] = deriv(
            4,
            &r3.kron(&euler_zyz_derivative(a.post[1][0], a.post[1][1], a.post[1][2], w)),
        );
    }
    let half = Complex64::new(0.0, -0.5);
    for (k, s) in [(0usize, 6usize), (1, 7), (2, 8)] {
        let p = pauli(k);
        let df = p.kron(&p).scale(half).matmul(&factors[1 + k]).unwrap();
        g[s] = deriv(1 + k, &df);
    }
    g
}

/// Mean of |tx|, |ty|, |tz| over all supplied gates; gates without stored
/// angles are decomposed on the fly.
pub fn average_abs_angle<'a>(gates: impl IntoIterator<Item = &'a TwoQubitGate>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for g in gates {
        let angles = match g.angles {
            Some(a) => a,
            None => kak_decompose(&g.unitary)?,
        };
        for t in angles.two_qubit_angles() {
            sum += t.abs();
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{random_unitary, C_ZERO};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_angles_give_identity() {
        let u = gate_from_angles(&GateAngles::ZERO);
        assert!(u.sub(&Tensor::identity(4)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn theta_x_pi_gives_xx() {
        let a = GateAngles {
            theta_x: PI,
            ..GateAngles::ZERO
        };
        let u = gate_from_angles(&a);
        // Rxx(pi) = -i X(x)X
        let p = pauli(0);
        let expect = p.kron(&p).scale(Complex64::new(0.0, -1.0));
        assert!(u.sub(&expect).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn parametrized_gates_are_unitary() {
        let mut rng = Rng::new(7);
        for _ in 0..20 {
            let mut v = [0.0; 15];
            for x in &mut v {
                *x = rng.uniform(-PI, PI);
            }
            let u = gate_from_angles(&GateAngles::from_vector(&v));
            assert!(u.unitarity_residual() < 1e-14);
        }
    }

    #[test]
    fn angle_vector_round_trip() {
        let v: [f64; 15] = std::array::from_fn(|i| 0.1 * i as f64 - 0.7);
        assert_eq!(GateAngles::from_vector(&v).to_vector(), v);
    }

    #[test]
    fn brickwall_small_cases() {
        let l = brickwall_layout(4, 1).unwrap();
        assert_eq!(l.coverings, vec![vec![(0, 1), (2, 3)], vec![(1, 2)]]);
        assert_eq!(l.gate_count(), 3);
        assert_eq!(brickwall_layout(6, 3).unwrap().gate_count(), 15);
        let l2 = brickwall_layout(2, 2).unwrap();
        assert_eq!(l2.coverings.len(), 4);
        assert_eq!(l2.gate_count(), 2); // odd coverings are empty
    }

    #[test]
    fn prpc_structure_and_determinism() {
        let mut rng = Rng::new(11);
        let l = prpc_layout(4, 1, &mut rng).unwrap();
        assert_eq!(l.coverings.len(), 2);
        assert_eq!(l.gate_count(), 4);
        for c in &l.coverings {
            let mut qubits: Vec<usize> = c.iter().flat_map(|&(a, b)| [a, b]).collect();
            qubits.sort_unstable();
            assert_eq!(qubits, vec![0, 1, 2, 3]);
        }
        let l1 = prpc_layout(6, 2, &mut Rng::new(5)).unwrap();
        let l2 = prpc_layout(6, 2, &mut Rng::new(5)).unwrap();
        assert_eq!(l1, l2);
        let mut rng2 = Rng::new(3);
        let l3 = prpc_layout(2, 3, &mut rng2).unwrap();
        assert!(l3.coverings.iter().all(|c| c == &vec![(0, 1)]));
        assert!(prpc_layout(5, 1, &mut rng2).is_err());
    }

    #[test]
    fn prpc_matchings_are_uniform() {
        // n=6 has 15 perfect matchings; 10^4 coverings, 3 sigma band
        let mut rng = Rng::new(2024);
        let mut counts = std::collections::HashMap::new();
        let samples = 10_000usize;
        let l = prpc_layout(6, samples / 2, &mut rng).unwrap();
        for c in &l.coverings {
            *counts.entry(c.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 15);
        let p = 1.0 / 15.0;
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        for (_, &n) in counts.iter() {
            assert!((n as f64 - samples as f64 * p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn circuit_unitary_identity_and_single_gate() {
        let c = TrotterCircuit::identity(brickwall_layout(4, 1).unwrap());
        let u = circuit_unitary(&c).unwrap();
        assert!(u.sub(&Tensor::identity(16)).unwrap().max_abs() < 1e-14);

        let mut rng = Rng::new(21);
        let g = random_unitary(4, &mut rng);
        let layout = brickwall_layout(2, 1).unwrap();
        let mut c = TrotterCircuit::identity(layout);
        c.gates[0] = TwoQubitGate::from_unitary(g.clone(), (0, 1)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert!(u.sub(&g).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn disjoint_gates_kron_oracle() {
        let mut rng = Rng::new(22);
        let g1 = random_unitary(4, &mut rng);
        let g2 = random_unitary(4, &mut rng);
        let layout = brickwall_layout(4, 1).unwrap();
        let mut c = TrotterCircuit::identity(layout);
        c.gates[0] = TwoQubitGate::from_unitary(g1.clone(), (0, 1)).unwrap();
        c.gates[1] = TwoQubitGate::from_unitary(g2.clone(), (2, 3)).unwrap();
        // leave the odd-covering gate as identity
        let u = circuit_unitary(&c).unwrap();
        assert!(u.sub(&g1.kron(&g2)).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn assemble_identity_isometry_appends_reference() {
        let c = TrotterCircuit::identity(brickwall_layout(2, 1).unwrap());
        let v = assemble_tensor(&c, TensorRole::Isometry, 1).unwrap();
        assert_eq!(v.shape(), &[4, 2]);
        // ancilla is wire 0 (most significant): |psi> -> |0>|psi>
        for j in 0..2 {
            for i in 0..4 {
                let expect = if i == j { C_ONE } else { C_ZERO };
                assert_abs_diff_eq!((v.get2(i, j) - expect).norm(), 0.0);
            }
        }
        let d = assemble_tensor(&c, TensorRole::Disentangler, 1).unwrap();
        assert!(d.sub(&Tensor::identity(4)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn random_circuit_isometry_is_isometric() {
        let mut rng = Rng::new(33);
        let layout = brickwall_layout(4, 2).unwrap();
        let c = TrotterCircuit::random_angles(layout, 1.5, &mut rng);
        c.check_consistent().unwrap();
        let v = assemble_tensor(&c, TensorRole::Isometry, 2).unwrap();
        assert_eq!(v.shape(), &[16, 4]);
        assert!(v.unitarity_residual() < 1e-12);
        let u = assemble_tensor(&c, TensorRole::Disentangler, 2).unwrap();
        assert!(u.unitarity_residual() < 1e-12);
    }

    #[test]
    fn angle_gradient_matches_finite_differences() {
        let mut rng = Rng::new(40);
        for _ in 0..5 {
            let mut v = [0.0; 15];
            for x in &mut v {
                *x = rng.uniform(-PI, PI);
            }
            let mut gamma = Tensor::zeros(&[4, 4]);
            for z in gamma.data_mut() {
                *z = Complex64::new(rng.normal(), rng.normal());
            }
            // e(theta) = 2 Re tr[gamma^dag U(theta)], so de/dtheta_j is exactly
            // what gate_angle_gradient reports for this gamma
            let g = gate_angle_gradient(&GateAngles::from_vector(&v), &gamma);
            let eval = |v: &[f64; 15]| -> f64 {
                2.0 * gamma.inner(&gate_from_angles(&GateAngles::from_vector(v))).re
            };
            let h = 1e-6;
            for j in 0..15 {
                let (mut vp, mut vm) = (v, v);
                vp[j] += h;
                vm[j] -= h;
                let fd = (eval(&vp) - eval(&vm)) / (2.0 * h);
                assert_abs_diff_eq!(g[j], fd, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn average_angle_examples() {
        let g = TwoQubitGate::from_angles(
            GateAngles {
                theta_x: 0.2,
                theta_y: -0.4,
                theta_z: 0.6,
                ..GateAngles::ZERO
            },
            (0, 1),
        );
        assert_abs_diff_eq!(average_abs_angle([&g]).unwrap(), 0.4, epsilon = 1e-15);
        let id = TwoQubitGate::identity((0, 1));
        assert_abs_diff_eq!(average_abs_angle([&id, &id]).unwrap(), 0.0);
        // order invariance
        let h = TwoQubitGate::from_angles(
            GateAngles {
                theta_x: 1.0,
                ..GateAngles::ZERO
            },
            (1, 2),
        );
        let a1 = average_abs_angle([&g, &h]).unwrap();
        let a2 = average_abs_angle([&h, &g]).unwrap();
        assert_abs_diff_eq!(a1, a2, epsilon = 1e-15);
    }
}
