//! Causal-cone energy evaluation and environments for the homogeneous
//! modified-binary TMERA: ascending/descending superoperators and per-gate
//! Wirtinger gradients.
//!
//! Position classes. One layer maps a coarse pair (2i, 2i+1) through the
//! shared isometry V into fine sites (4i..4i+3); the shared disentangler u
//! then acts on (4i+1, 4i+2). A two-site term at the fine scale falls into
//! four inequivalent classes relative to this window:
//!
//!   1. bond (4i,   4i+1): even fine bond, left half of a window,
//!   2. bond (4i+1, 4i+2): odd fine bond under the disentangler,
//!   3. bond (4i+2, 4i+3): even fine bond, right half of a window,
//!   4. bond (4i+3, 4i+4): odd fine bond between windows; its causal cone
//!      contains two isometries and no disentangler.
//!
//! With X = (I (x) u (x) I) . (V (x) V) mapping the coarse pair into the
//! four fine sites, the classes conjugate the term into coarse two-site
//! operators A_k(h) = X^dag embed_k(h) X (class 4 uses V (x) V alone). Every
//! even coarse bond collects classes 1-3 and every odd coarse bond class 4,
//! so tracking the (even-bond, odd-bond) operator pair
//!
//!   He' = A1(He) + A2(Ho) + A3(He),   Ho' = A4(Ho)
//!
//! preserves the total energy sum(i) <h_i> exactly from scale to scale; this
//! enumeration is pinned by the state-vector oracle tests below. The top
//! closure pairs the operators with |00><00| on each of the n_top periodic
//! bonds (n_top is even, so even/odd alternation is consistent around the
//! ring).
//!
//! Densities descend through the trace-pairing adjoints with uniform
//! position averaging: rho_e = (A1* + A3*)(rho_e')/2 and
//! rho_o = (A2*(rho_e') + A4*(rho_o'))/2, normalized so that
//! E = (n_tau/2) (tr[rho_e He] + tr[rho_o Ho]) holds at every scale.
//!
//! Gradients are Wirtinger-style: for each variational object X the
//! environment is Gamma = de/d(conj X), so the real directional derivative
//! along dX is 2 Re tr[Gamma^dag dX]. Reverse accumulation reuses the
//! per-layer ascended operators and descended densities cached in an
//! [`EvaluationContext`]; a context is single-owner, and parallel drivers
//! clone the state snapshot per context.

use std::cell::Cell;

use crate::circuits::TrotterCircuit;
use crate::error::{Error, Result};
use crate::models::{build_term, embed_to_qubits, ModelSpec};
use crate::network::{LayerTensors, MeraConfig, MeraLayer, TMeraState};
use crate::tensor::{apply_to_wires, contract, partial_trace, Tensor, C_ONE};

/// Even/odd-bond two-site operator pair at scale `tau` (0 = physical).
#[derive(Debug, Clone)]
pub struct AscendedOperator {
    pub tau: usize,
    /// Operator carried by even bonds (2k, 2k+1) at this scale.
    pub even: Tensor,
    /// Operator carried by odd bonds (2k+1, 2k+2).
    pub odd: Tensor,
}

impl AscendedOperator {
    /// Parity-averaged operator with the branching factor normalized out:
    /// `(even + odd) / 2^{tau+1}`. The identity pair is a fixed point of
    /// ascending in this normalization, and at the top scale
    /// `e = tr[rho_top . average]` because both top densities coincide.
    pub fn branching_normalized_average(&self) -> Tensor {
        let w = num_complex::Complex64::new(1.0 / (1u64 << (self.tau + 1)) as f64, 0.0);
        self.even.add(&self.odd).unwrap().scale(w)
    }
}

/// Position-averaged two-site reduced densities at scale `tau`, one per bond
/// parity; each is Hermitian, PSD, trace 1.
#[derive(Debug, Clone)]
pub struct LayerDensity {
    pub tau: usize,
    pub even: Tensor,
    pub odd: Tensor,
}

/// Dense assembled maps of one layer, shared by ascend/descend/environment
/// computations. Only thin `f^4 x c^2` objects are formed; the partial traces
/// over fine wires are fused into the contractions.
pub struct LayerMaps {
    /// Fine site dimension below the layer.
    f: usize,
    /// Coarse site dimension above (chi).
    c: usize,
    /// Assembled disentangler, f^2 x f^2.
    u: Tensor,
    /// Assembled isometry, f^2 x c.
    v: Tensor,
    /// V (x) V, f^4 x c^2.
    k: Tensor,
    /// (I (x) u (x) I) . (V (x) V), f^4 x c^2.
    x: Tensor,
    /// Superoperator applications performed through these maps.
    ops: Cell<usize>,
}

/// Partial trace of `b . xc^dag` over the fine wires not in `keep`, where
/// `b` and `xc` are thin `f^4 x m` maps; returns an f^2 x f^2 operator on the
/// kept wire pair.
fn ptrace_product(b: &Tensor, xc: &Tensor, f: usize, keep: (usize, usize)) -> Result<Tensor> {
    let m = b.shape()[1];
    let b5 = b.reshape(&[f, f, f, f, m])?;
    let x5 = xc.conj().reshape(&[f, f, f, f, m])?;
    let mut pairs: Vec<(usize, usize)> = (0..4)
        .filter(|w| *w != keep.0 && *w != keep.1)
        .map(|w| (w, w))
        .collect();
    pairs.push((4, 4));
    // free axes: (keep.0, keep.1) of b then of conj(x)
    contract(&b5, &x5, &pairs)?.reshape(&[f * f, f * f])
}

impl LayerMaps {
    fn build(layer: &MeraLayer, f: usize, q: usize) -> Result<LayerMaps> {
        let c = 1usize << q;
        let u = layer.disentangler_tensor()?;
        let v = layer.isometry_tensor(q)?;
        if u.shape() != [f * f, f * f] || v.shape() != [f * f, c] {
            return Err(Error::ShapeMismatch(format!(
                "layer maps for f={f}, c={c} got u {:?}, v {:?}",
                u.shape(),
                v.shape()
            )));
        }
        let k = v.kron(&v);
        let x = apply_to_wires(&u, &k, &[f, f, f, f], &[1, 2])?;
        Ok(LayerMaps {
            f,
            c,
            u,
            v,
            k,
            x,
            ops: Cell::new(0),
        })
    }

    fn count(&self, n: usize) {
        self.ops.set(self.ops.get() + n);
    }

    /// One position class: `thin^dag . embed(h on wires) . thin`.
    fn conjugate_class(&self, h: &Tensor, thin: &Tensor, wires: &[usize; 2]) -> Result<Tensor> {
        self.count(1);
        let f = self.f;
        let hx = apply_to_wires(h, thin, &[f, f, f, f], wires)?;
        thin.dagger().matmul(&hx)
    }

    /// Ascends the even/odd operator pair one scale up.
    pub fn ascend(&self, h: &AscendedOperator) -> Result<AscendedOperator> {
        let d = self.f * self.f;
        if h.even.shape() != [d, d] || h.odd.shape() != [d, d] {
            return Err(Error::ShapeMismatch(format!(
                "ascend: operators {:?}/{:?} do not match fine dimension {d}",
                h.even.shape(),
                h.odd.shape()
            )));
        }
        let a1 = self.conjugate_class(&h.even, &self.x, &[0, 1])?;
        let a2 = self.conjugate_class(&h.odd, &self.x, &[1, 2])?;
        let a3 = self.conjugate_class(&h.even, &self.x, &[2, 3])?;
        let a4 = self.conjugate_class(&h.odd, &self.k, &[1, 2])?;
        Ok(AscendedOperator {
            tau: h.tau + 1,
            even: a1.add(&a2)?.add(&a3)?,
            odd: a4,
        })
    }

    /// Descends the density pair one scale down (adjoint of [`ascend`] under
    /// the multiplicity-weighted trace pairing; see module docs).
    pub fn descend(&self, rho: &LayerDensity) -> Result<LayerDensity> {
        let d = self.c * self.c;
        if rho.even.shape() != [d, d] || rho.odd.shape() != [d, d] {
            return Err(Error::ShapeMismatch(format!(
                "descend: densities {:?}/{:?} do not match coarse dimension {d}",
                rho.even.shape(),
                rho.odd.shape()
            )));
        }
        if rho.tau == 0 {
            return Err(Error::InvalidArgument(
                "descend: already at the physical scale".into(),
            ));
        }
        self.count(4);
        let be = self.x.matmul(&rho.even)?;
        let bo = self.k.matmul(&rho.odd)?;
        let a1 = ptrace_product(&be, &self.x, self.f, (0, 1))?;
        let a2 = ptrace_product(&be, &self.x, self.f, (1, 2))?;
        let a3 = ptrace_product(&be, &self.x, self.f, (2, 3))?;
        let a4 = ptrace_product(&bo, &self.k, self.f, (1, 2))?;
        let half = num_complex::Complex64::new(0.5, 0.0);
        Ok(LayerDensity {
            tau: rho.tau - 1,
            even: a1.add(&a3)?.scale(half),
            odd: a2.add(&a4)?.scale(half),
        })
    }

    pub fn ops_performed(&self) -> usize {
        self.ops.get()
    }
}

/// Maps of layer `tau` (1-based, 1 = bottom) of a TMERA state.
pub fn layer_maps(state: &TMeraState, tau: usize) -> Result<LayerMaps> {
    if tau == 0 || tau > state.config.layers {
        return Err(Error::InvalidArgument(format!(
            "layer index {tau} outside 1..={}",
            state.config.layers
        )));
    }
    let f = 1usize << state.config.site_qubits(tau - 1);
    LayerMaps::build(&state.layers[tau - 1], f, state.config.q)
}

/// Top reference densities: |00><00| on both bond parities.
pub fn top_density(config: &MeraConfig) -> LayerDensity {
    let d = config.chi() * config.chi();
    let mut m = Tensor::zeros(&[d, d]);
    m.set2(0, 0, C_ONE);
    LayerDensity {
        tau: config.layers,
        even: m.clone(),
        odd: m,
    }
}

/// Per-layer caches for one (state, model) pair: assembled maps, ascended
/// operators at every scale, descended densities at every scale, and the
/// energy density. Single-owner; clone the state per parallel context.
pub struct EvaluationContext {
    pub config: MeraConfig,
    maps: Vec<LayerMaps>,
    /// `ascended[tau]`: operator pair at scale tau, 0..=T.
    pub ascended: Vec<AscendedOperator>,
    /// `densities[tau]`: density pair at scale tau, 0..=T.
    pub densities: Vec<LayerDensity>,
    /// Energy density e = E/N.
    pub energy: f64,
}

impl EvaluationContext {
    pub fn new(state: &TMeraState, model: &ModelSpec) -> Result<EvaluationContext> {
        let config = state.config;
        config.validate()?;
        let term = embed_to_qubits(&build_term(model)?);
        if term.d != 1usize << config.q0 {
            return Err(Error::ShapeMismatch(format!(
                "model embeds to dimension {} but the network expects q0 = {} qubits per site",
                term.d, config.q0
            )));
        }
        let maps = (1..=config.layers)
            .map(|tau| layer_maps(state, tau))
            .collect::<Result<Vec<_>>>()?;

        let mut ascended = Vec::with_capacity(config.layers + 1);
        ascended.push(AscendedOperator {
            tau: 0,
            even: term.matrix.clone(),
            odd: term.matrix.clone(),
        });
        for m in &maps {
            let next = m.ascend(ascended.last().unwrap())?;
            ascended.push(next);
        }

        let mut densities = vec![top_density(&config)];
        for m in maps.iter().rev() {
            let next = m.descend(densities.last().unwrap())?;
            densities.push(next);
        }
        densities.reverse();

        // close at the top: n_top/2 bonds of each parity, all |00><00|
        let top = ascended.last().unwrap();
        let e_complex = (top.even.get2(0, 0) + top.odd.get2(0, 0))
            * (config.n_top() as f64 / 2.0 / config.n_sites as f64);
        if e_complex.im.abs() > 1e-12 {
            return Err(Error::Numerical(format!(
                "energy density has imaginary part {:.2e}",
                e_complex.im
            )));
        }
        Ok(EvaluationContext {
            config,
            maps,
            ascended,
            densities,
            energy: e_complex.re,
        })
    }

    /// Energy density re-derived at scale `tau` from the cached operator and
    /// density pairs; equals `self.energy` at every scale (consistency check).
    pub fn energy_at_scale(&self, tau: usize) -> f64 {
        let h = &self.ascended[tau];
        let rho = &self.densities[tau];
        let weight = self.config.sites_at(tau) as f64 / 2.0 / self.config.n_sites as f64;
        ((rho.even.dagger().matmul(&h.even).unwrap().trace()
            + rho.odd.dagger().matmul(&h.odd).unwrap().trace())
            * weight)
            .re
    }

    /// Total superoperator applications through all layer maps so far;
    /// independent of N at fixed T (homogeneity).
    pub fn superoperator_applications(&self) -> usize {
        self.maps.iter().map(|m| m.ops_performed()).sum()
    }

    /// Environments of every variational object of `state` (which must be the
    /// state this context was built from).
    pub fn environments(&self, state: &TMeraState) -> Result<EnvironmentSet> {
        let mut layers = Vec::with_capacity(self.config.layers);
        for tau in 1..=self.config.layers {
            let m = &self.maps[tau - 1];
            let below = &self.ascended[tau - 1];
            let rho = &self.densities[tau];
            // e contribution of this layer: s * (tr[rho_e (A1+A2+A3)] + tr[rho_o A4])
            let s = num_complex::Complex64::new(
                self.config.sites_at(tau) as f64 / 2.0 / self.config.n_sites as f64,
                0.0,
            );
            let (f, dims) = (m.f, [m.f, m.f, m.f, m.f]);
            // classes 1-3 share X rho_e X^dag; fuse them before the gate trace
            let c_mat = apply_to_wires(&below.even, &m.x, &dims, &[0, 1])?
                .add(&apply_to_wires(&below.odd, &m.x, &dims, &[1, 2])?)?
                .add(&apply_to_wires(&below.even, &m.x, &dims, &[2, 3])?)?;
            let d_mat = c_mat.matmul(&rho.even)?;
            // Gamma_W = H_sum W K rho_e K^dag, traced onto the u slot
            let gamma_u = ptrace_product(&d_mat, &m.k, f, (1, 2))?.scale(s);
            // isometry environment: both V slots of V (x) V, classes 1-4
            let y = apply_to_wires(&m.u.dagger(), &d_mat, &dims, &[1, 2])?.add(
                &apply_to_wires(&below.odd, &m.k, &dims, &[1, 2])?.matmul(&rho.odd)?,
            )?;
            let y4 = y.reshape(&[f * f, f * f, m.c, m.c])?;
            let vc = m.v.conj();
            let z1 = contract(&y4, &vc, &[(1, 0), (3, 1)])?;
            let z2 = contract(&y4, &vc, &[(0, 0), (2, 1)])?;
            let gamma_v = z1.add(&z2)?.scale(s);

            let layer = &state.layers[tau - 1];
            layers.push(match &layer.tensors {
                LayerTensors::Full { .. } => LayerEnvironment::Full {
                    disentangler: if layer.disentangler_frozen {
                        None
                    } else {
                        Some(gamma_u)
                    },
                    isometry: gamma_v,
                },
                LayerTensors::Circuits {
                    disentangler,
                    isometry,
                } => {
                    let dis = if layer.disentangler_frozen {
                        None
                    } else {
                        Some(circuit_gate_environments(disentangler, &gamma_u)?)
                    };
                    // pad Gamma_V with zero columns: the isometry is the first
                    // c columns of the circuit unitary
                    let mut gv_full = Tensor::zeros(&[f * f, f * f]);
                    for i in 0..f * f {
                        for j in 0..m.c {
                            gv_full.set2(i, j, gamma_v.get2(i, j));
                        }
                    }
                    LayerEnvironment::Circuits {
                        disentangler: dis,
                        isometry: circuit_gate_environments(isometry, &gv_full)?,
                    }
                }
            });
        }
        Ok(EnvironmentSet {
            energy: self.energy,
            layers,
        })
    }
}

/// Environments of one layer, mirroring its parametrization: per-gate 4x4
/// matrices in circuit modes (frozen disentanglers get no entry), whole
/// tensors in fMERA mode.
#[derive(Debug, Clone)]
pub enum LayerEnvironment {
    Circuits {
        disentangler: Option<Vec<Tensor>>,
        isometry: Vec<Tensor>,
    },
    Full {
        disentangler: Option<Tensor>,
        isometry: Tensor,
    },
}

/// Environments of every variational object, ordered as `state.layers`.
#[derive(Debug, Clone)]
pub struct EnvironmentSet {
    pub energy: f64,
    pub layers: Vec<LayerEnvironment>,
}

/// Splits a circuit-level environment into per-gate environments by reverse
/// accumulation: with U = G_m ... G_1 (embedded), the gate environment is
/// Gamma_i = ptrace[R_i U^dag Gamma_U R_{i-1}^dag] onto the gate's pair.
fn circuit_gate_environments(circuit: &TrotterCircuit, gamma_u: &Tensor) -> Result<Vec<Tensor>> {
    let n = circuit.layout.n;
    let dim = 1usize << n;
    if gamma_u.shape() != [dim, dim] {
        return Err(Error::ShapeMismatch(format!(
            "circuit environment {:?} does not match {n} qubits",
            gamma_u.shape()
        )));
    }
    let wire_dims = vec![2usize; n];
    // prefixes[i] = G_i ... G_1
    let mut prefixes = Vec::with_capacity(circuit.gates.len() + 1);
    prefixes.push(Tensor::identity(dim));
    for g in &circuit.gates {
        let next = apply_to_wires(
            &g.unitary,
            prefixes.last().unwrap(),
            &wire_dims,
            &[g.pair.0, g.pair.1],
        )?;
        prefixes.push(next);
    }
    let a = prefixes.last().unwrap().dagger().matmul(gamma_u)?;
    let mut envs = Vec::with_capacity(circuit.gates.len());
    for (i, g) in circuit.gates.iter().enumerate() {
        let g_emb = prefixes[i + 1].matmul(&a)?.matmul(&prefixes[i].dagger())?;
        envs.push(partial_trace(&g_emb, &wire_dims, &[g.pair.0, g.pair.1])?);
    }
    Ok(envs)
}

/// Energy density e = (1/N) sum(i) <psi|h_i|psi> by causal-cone contraction.
pub fn energy(state: &TMeraState, model: &ModelSpec) -> Result<f64> {
    Ok(EvaluationContext::new(state, model)?.energy)
}

/// Environments (and energy) of all variational objects of `state`.
pub fn environments(state: &TMeraState, model: &ModelSpec) -> Result<EnvironmentSet> {
    EvaluationContext::new(state, model)?.environments(state)
}
