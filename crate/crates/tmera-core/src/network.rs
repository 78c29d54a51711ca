//! The TMERA state object: homogeneous modified-binary layer structure,
//! parametrization modes, initialization, and explicit state-vector
//! construction for small systems.
//!
//! Wiring (preparation direction, coarse -> fine, per layer): every coarse
//! site j expands through the shared isometry V into fine sites (2j, 2j+1);
//! then the shared disentangler u acts on fine pairs (4i+1, 4i+2). With an
//! even coarse site count those pairs never wrap, and every second fine bond
//! carries a disentangler — the modified-binary pattern. The network is
//! periodic; the top is the fixed product state |0...0> on n_top sites.

use serde::{Deserialize, Serialize};

use crate::circuits::{
    brickwall_layout, circuit_unitary, isometry_block, prpc_layout, CircuitLayout,
    LayoutKind, TrotterCircuit, TwoQubitGate,
};
use crate::error::{Error, Result};
use crate::models::{apply_two_site, TwoSiteTerm};
use crate::tensor::{contract, isometrize, random_unitary, Rng, Tensor, C_ONE, C_ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parametrization {
    /// Trotter circuits with gates stored as 15-angle vectors.
    TrotterAngles,
    /// Trotter circuits with gates stored as free 4x4 unitaries.
    TrotterUnitary,
    /// Full per-layer tensors (fMERA); no circuit constraint.
    FullTensor,
}

/// Structural parameters of a homogeneous modified-binary TMERA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeraConfig {
    /// Physical sites N.
    pub n_sites: usize,
    /// Layers T; each halves the site count (branching ratio b = 2).
    pub layers: usize,
    /// Qubits per renormalized site; bond dimension chi = 2^q.
    pub q: usize,
    /// Qubits per physical site after embedding (ceil log2 of the local dim).
    pub q0: usize,
    /// Trotter steps per tensor.
    pub trotter_steps: usize,
    pub layout: LayoutKind,
    pub parametrization: Parametrization,
}

impl MeraConfig {
    pub fn chi(&self) -> usize {
        1 << self.q
    }

    /// Renormalized sites left above the topmost layer.
    pub fn n_top(&self) -> usize {
        self.n_sites >> self.layers
    }

    /// Site count at level tau (0 = physical, T = top).
    pub fn sites_at(&self, tau: usize) -> usize {
        self.n_sites >> tau
    }

    /// Qubits per site at level tau.
    pub fn site_qubits(&self, tau: usize) -> usize {
        if tau == 0 {
            self.q0
        } else {
            self.q
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.q == 0 || self.q0 == 0 || self.trotter_steps == 0 {
            return Err(Error::Config("T, q, q0, t must all be positive".into()));
        }
        if self.n_sites % (1 << self.layers) != 0 {
            return Err(Error::Config(format!(
                "N = {} is not divisible by 2^T = {}",
                self.n_sites,
                1 << self.layers
            )));
        }
        let n_top = self.n_top();
        if n_top < 2 || n_top % 2 != 0 {
            return Err(Error::Config(format!(
                "n_top = N / 2^T = {n_top} must be even and at least 2"
            )));
        }
        if self.q > 2 * self.q0 {
            return Err(Error::Config(format!(
                "q = {} exceeds the 2 q0 = {} qubits entering the bottom isometry",
                self.q,
                2 * self.q0
            )));
        }
        Ok(())
    }
}

/// Tensor content of one layer: either a pair of Trotter circuits or a pair
/// of explicit tensors (fMERA).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LayerTensors {
    Circuits {
        disentangler: TrotterCircuit,
        isometry: TrotterCircuit,
    },
    Full {
        /// f^2 x f^2 unitary.
        disentangler: Tensor,
        /// f^2 x chi isometry, V^dag V = I.
        isometry: Tensor,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeraLayer {
    pub tensors: LayerTensors,
    /// TTTN mode: disentangler pinned to identity and excluded from the
    /// variational parameter set.
    pub disentangler_frozen: bool,
}

impl MeraLayer {
    /// Assembled disentangler as a dense f^2 x f^2 unitary.
    pub fn disentangler_tensor(&self) -> Result<Tensor> {
        match &self.tensors {
            LayerTensors::Circuits { disentangler, .. } => circuit_unitary(disentangler),
            LayerTensors::Full { disentangler, .. } => Ok(disentangler.clone()),
        }
    }

    /// Assembled isometry as a dense f^2 x chi matrix (chi = 2^q columns).
    pub fn isometry_tensor(&self, q: usize) -> Result<Tensor> {
        match &self.tensors {
            LayerTensors::Circuits { isometry, .. } => {
                isometry_block(&circuit_unitary(isometry)?, q)
            }
            LayerTensors::Full { isometry, .. } => Ok(isometry.clone()),
        }
    }
}

/// A full TMERA variational state. `layers[0]` is the bottom layer (acting
/// on physical sites); `layers[T-1]` touches the top reference state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TMeraState {
    pub config: MeraConfig,
    pub layers: Vec<MeraLayer>,
}

fn make_layout(n: usize, config: &MeraConfig, rng: &mut Rng) -> Result<CircuitLayout> {
    match config.layout {
        LayoutKind::BrickWall => brickwall_layout(n, config.trotter_steps),
        LayoutKind::Prpc => prpc_layout(n, config.trotter_steps, rng),
    }
}

#[derive(Clone, Copy)]
enum GateInit {
    UniformAngles(f64),
    Haar,
}

fn init_circuit(layout: CircuitLayout, init: GateInit, rng: &mut Rng) -> TrotterCircuit {
    match init {
        GateInit::UniformAngles(scale) => TrotterCircuit::random_angles(layout, scale, rng),
        GateInit::Haar => {
            let gates = layout
                .coverings
                .iter()
                .flatten()
                .map(|&pair| {
                    TwoQubitGate::from_unitary(random_unitary(4, rng), pair).expect("haar gate")
                })
                .collect();
            TrotterCircuit { layout, gates }
        }
    }
}

fn init_layer(config: &MeraConfig, tau: usize, init: GateInit, rng: &mut Rng) -> Result<MeraLayer> {
    let fq = config.site_qubits(tau - 1); // qubits per fine site below this layer
    let tensors = match config.parametrization {
        Parametrization::TrotterAngles | Parametrization::TrotterUnitary => {
            let gate_init = match (config.parametrization, init) {
                (Parametrization::TrotterAngles, GateInit::Haar) => {
                    // angle mode draws all 15 angles uniform in [-pi, pi]
                    GateInit::UniformAngles(std::f64::consts::PI)
                }
                (_, other) => other,
            };
            LayerTensors::Circuits {
                disentangler: init_circuit(make_layout(2 * fq, config, rng)?, gate_init, rng),
                isometry: init_circuit(make_layout(2 * fq, config, rng)?, gate_init, rng),
            }
        }
        Parametrization::FullTensor => {
            let f = 1usize << fq;
            match init {
                GateInit::Haar => {
                    let mut g = Tensor::zeros(&[f * f, config.chi()]);
                    for v in g.data_mut() {
                        *v = num_complex::Complex64::new(rng.normal(), rng.normal());
                    }
                    let (iso, _) = isometrize(&g)?;
                    LayerTensors::Full {
                        disentangler: random_unitary(f * f, rng),
                        isometry: iso,
                    }
                }
                GateInit::UniformAngles(scale) => {
                    // compile near-identity circuits into explicit tensors
                    let dc = init_circuit(
                        make_layout(2 * fq, config, rng)?,
                        GateInit::UniformAngles(scale),
                        rng,
                    );
                    let ic = init_circuit(
                        make_layout(2 * fq, config, rng)?,
                        GateInit::UniformAngles(scale),
                        rng,
                    );
                    LayerTensors::Full {
                        disentangler: circuit_unitary(&dc)?,
                        isometry: isometry_block(&circuit_unitary(&ic)?, config.q)?,
                    }
                }
            }
        }
    };
    Ok(MeraLayer {
        tensors,
        disentangler_frozen: false,
    })
}

/// Fully random initialization: Haar gates (or uniform [-pi, pi] angles in
/// angle mode), Haar/Ginibre tensors in fMERA mode.
pub fn init_random(config: &MeraConfig, rng: &mut Rng) -> Result<TMeraState> {
    config.validate()?;
    let layers = (1..=config.layers)
        .map(|tau| init_layer(config, tau, GateInit::Haar, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(TMeraState {
        config: *config,
        layers,
    })
}

/// All two-qubit angles uniform in [-scale, scale]; scale = 0 gives the
/// exact identity network preparing |0...0>.
pub fn init_near_identity(config: &MeraConfig, scale: f64, rng: &mut Rng) -> Result<TMeraState> {
    config.validate()?;
    if scale < 0.0 {
        return Err(Error::InvalidArgument("scale must be non-negative".into()));
    }
    let layers = (1..=config.layers)
        .map(|tau| init_layer(config, tau, GateInit::UniformAngles(scale), rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(TMeraState {
        config: *config,
        layers,
    })
}

/// TTTN mode: pin every disentangler to the identity and mark it
/// non-variational. Gate values are overwritten.
pub fn freeze_disentanglers(state: &mut TMeraState) {
    for layer in &mut state.layers {
        match &mut layer.tensors {
            LayerTensors::Circuits { disentangler, .. } => {
                *disentangler = TrotterCircuit::identity(disentangler.layout.clone());
            }
            LayerTensors::Full { disentangler, .. } => {
                *disentangler = Tensor::identity(disentangler.rows());
            }
        }
        layer.disentangler_frozen = true;
    }
}

/// Unfreezes disentanglers without changing their values (TTTN -> TMERA).
pub fn promote_tttn_to_tmera(state: &mut TMeraState) {
    for layer in &mut state.layers {
        layer.disentangler_frozen = false;
    }
}

/// Inserts a new topmost layer initialized near the identity, halving n_top
/// and preserving all existing layer values.
pub fn add_layer(state: &mut TMeraState, scale: f64, rng: &mut Rng) -> Result<()> {
    let n_top = state.config.n_top();
    if n_top / 2 < 2 || (n_top / 2) % 2 != 0 {
        return Err(Error::Config(format!(
            "cannot add a layer: n_top would become {} (needs even >= 2)",
            n_top / 2
        )));
    }
    let mut config = state.config;
    config.layers += 1;
    config.validate()?;
    let new_layer = init_layer(&config, config.layers, GateInit::UniformAngles(scale), rng)?;
    state.config = config;
    state.layers.push(new_layer);
    Ok(())
}

/// Applies a [f, f, c] isometry to site axis `j`, expanding it into two
/// axes in place.
fn apply_isometry_axis(state: &Tensor, v3: &Tensor, j: usize) -> Result<Tensor> {
    let n = state.ndim();
    let out = contract(v3, state, &[(2, j)])?;
    // out axes: [f, f, state axes except j]; move the two f axes to j, j+1
    let mut perm = Vec::with_capacity(n + 1);
    let trailing = |k: usize| if k < j { 2 + k } else { 1 + k };
    for k in 0..j {
        perm.push(trailing(k));
    }
    perm.push(0);
    perm.push(1);
    for k in j + 1..n {
        perm.push(trailing(k));
    }
    out.permute(&perm)
}

/// Applies a [f, f, f, f] two-site operator to site axes (a, b), a < b.
fn apply_gate_axes(state: &Tensor, u4: &Tensor, a: usize, b: usize) -> Result<Tensor> {
    let n = state.ndim();
    let out = contract(u4, state, &[(2, a), (3, b)])?;
    // out axes: [fa, fb, state axes except a and b]
    let mut perm = Vec::with_capacity(n);
    let trailing = |k: usize| {
        // position of original axis k among the surviving state axes
        2 + k - usize::from(k > a) - usize::from(k > b)
    };
    for k in 0..n {
        if k == a {
            perm.push(0);
        } else if k == b {
            perm.push(1);
        } else {
            perm.push(trailing(k));
        }
    }
    out.permute(&perm)
}

/// Prepares the explicit qubit-embedded state vector, dimension 2^{q0 N},
/// by running the network top-down. Physical dimensions d < 2^{q0} simply
/// leave the padded basis states unpopulated.
pub fn build_state_vector(state: &TMeraState) -> Result<Tensor> {
    let config = &state.config;
    config.validate()?;
    if config.q0 * config.n_sites > 20 {
        return Err(Error::Capacity(format!(
            "state vector needs {} qubits (> 20)",
            config.q0 * config.n_sites
        )));
    }

    // top reference |0...0> on n_top sites of dimension chi
    let n_top = config.n_top();
    let mut psi = Tensor::zeros(&vec![config.chi(); n_top]);
    psi.data_mut()[0] = C_ONE;

    for tau in (1..=config.layers).rev() {
        let layer = &state.layers[tau - 1];
        let coarse = config.sites_at(tau);
        let fq = config.site_qubits(tau - 1);
        let f = 1usize << fq;
        let v3 = layer.isometry_tensor(config.q)?.reshape(&[f, f, config.chi()])?;
        // expand coarse sites back-to-front so axis indices stay valid
        for j in (0..coarse).rev() {
            psi = apply_isometry_axis(&psi, &v3, j)?;
        }
        let u4 = layer.disentangler_tensor()?.reshape(&[f, f, f, f])?;
        let fine = 2 * coarse;
        let mut i = 1;
        while i + 1 < fine {
            psi = apply_gate_axes(&psi, &u4, i, i + 1)?;
            i += 4;
        }
    }

    let dim = 1usize << (config.q0 * config.n_sites);
    let psi = psi.reshape(&[dim])?;
    let norm = psi.frobenius_norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "state-vector norm deviates from 1 by {:.2e}",
            (norm - 1.0).abs()
        )));
    }
    Ok(psi)
}

/// Oracle energy density: contracts the explicit state vector with the
/// embedded two-site term summed over all periodic bonds. Exponential in N —
/// test/oracle use only.
pub fn state_vector_energy(state: &TMeraState, term: &TwoSiteTerm) -> Result<f64> {
    let config = &state.config;
    let f = 1usize << config.q0;
    if term.d != f {
        return Err(Error::ShapeMismatch(format!(
            "term dimension {} does not match embedded site dimension {f}",
            term.d
        )));
    }
    let psi = build_state_vector(state)?;
    let n = config.n_sites;
    let mut h_psi = vec![C_ZERO; psi.data().len()];
    for i in 0..n {
        apply_two_site(&term.matrix, psi.data(), &mut h_psi, n, f, i, (i + 1) % n);
    }
    let mut energy = num_complex::Complex64::new(0.0, 0.0);
    for (a, b) in psi.data().iter().zip(&h_psi) {
        energy += a.conj() * b;
    }
    if energy.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "energy has imaginary part {:.2e}",
            energy.im
        )));
    }
    Ok(energy.re / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_term, embed_to_qubits, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn small_config(parametrization: Parametrization) -> MeraConfig {
        MeraConfig {
            n_sites: 8,
            layers: 2,
            q: 1,
            q0: 1,
            trotter_steps: 1,
            layout: LayoutKind::BrickWall,
            parametrization,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(Parametrization::TrotterAngles);
        c.validate().unwrap();
        assert_eq!(c.n_top(), 2);
        c.n_sites = 12;
        assert!(c.validate().is_err()); // n_top = 3, odd
        c.n_sites = 8;
        c.layers = 3;
        assert!(c.validate().is_err()); // n_top = 1
        c.layers = 2;
        c.q = 3;
        assert!(c.validate().is_err()); // q > 2 q0
    }

    #[test]
    fn identity_network_prepares_reference() {
        let c = small_config(Parametrization::TrotterAngles);
        let state = init_near_identity(&c, 0.0, &mut Rng::new(1)).unwrap();
        let psi = build_state_vector(&state).unwrap();
        assert_abs_diff_eq!((psi.data()[0] - C_ONE).norm(), 0.0, epsilon = 1e-14);
        for v in &psi.data()[1..] {
            assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn identity_network_energy_is_product_state_energy() {
        let c = small_config(Parametrization::TrotterAngles);
        let state = init_near_identity(&c, 0.0, &mut Rng::new(1)).unwrap();
        let t1 = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 1.0 }).unwrap());
        assert_abs_diff_eq!(
            state_vector_energy(&state, &t1).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        let t0 = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 0.0 }).unwrap());
        assert_abs_diff_eq!(
            state_vector_energy(&state, &t0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn near_identity_energy_is_close_to_identity_energy() {
        let c = small_config(Parametrization::TrotterAngles);
        let t = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 1.0 }).unwrap());
        let state = init_near_identity(&c, 0.01, &mut Rng::new(3)).unwrap();
        let e = state_vector_energy(&state, &t).unwrap();
        assert!((e - 0.25).abs() < 0.05, "energy {e} strayed too far");
    }

    #[test]
    fn random_state_normalized_all_modes() {
        for mode in [
            Parametrization::TrotterAngles,
            Parametrization::TrotterUnitary,
            Parametrization::FullTensor,
        ] {
            let c = small_config(mode);
            let state = init_random(&c, &mut Rng::new(17)).unwrap();
            for layer in &state.layers {
                assert!(layer.disentangler_tensor().unwrap().unitarity_residual() < 1e-12);
                assert!(layer.isometry_tensor(c.q).unwrap().unitarity_residual() < 1e-12);
            }
            let psi = build_state_vector(&state).unwrap();
            assert_abs_diff_eq!(psi.frobenius_norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let c = small_config(Parametrization::TrotterAngles);
        let s1 = init_random(&c, &mut Rng::new(5)).unwrap();
        let s2 = init_random(&c, &mut Rng::new(5)).unwrap();
        let p1 = build_state_vector(&s1).unwrap();
        let p2 = build_state_vector(&s2).unwrap();
        assert_eq!(p1.data(), p2.data());

        let t = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 0.5 }).unwrap());
        let e1 = state_vector_energy(&s1, &t).unwrap();
        let e3 =
            state_vector_energy(&init_random(&c, &mut Rng::new(6)).unwrap(), &t).unwrap();
        assert!((e1 - e3).abs() > 1e-8, "different seeds gave equal energy");
    }

    #[test]
    fn freeze_and_promote_keep_energy() {
        let c = small_config(Parametrization::TrotterAngles);
        let mut state = init_random(&c, &mut Rng::new(9)).unwrap();
        freeze_disentanglers(&mut state);
        for layer in &state.layers {
            assert!(layer.disentangler_frozen);
            let u = layer.disentangler_tensor().unwrap();
            assert!(u.sub(&Tensor::identity(u.rows())).unwrap().max_abs() < 1e-14);
        }
        let t = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 0.5 }).unwrap());
        let before = state_vector_energy(&state, &t).unwrap();
        promote_tttn_to_tmera(&mut state);
        assert!(state.layers.iter().all(|l| !l.disentangler_frozen));
        let after = state_vector_energy(&state, &t).unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-14);
    }

    #[test]
    fn add_layer_preserves_lower_layers() {
        let c = MeraConfig {
            n_sites: 16,
            layers: 2,
            ..small_config(Parametrization::TrotterAngles)
        };
        let mut state = init_random(&c, &mut Rng::new(12)).unwrap();
        let lower_before = state.layers.clone();
        add_layer(&mut state, 0.0, &mut Rng::new(13)).unwrap();
        assert_eq!(state.config.layers, 3);
        assert_eq!(state.config.n_top(), 2);
        for (a, b) in lower_before.iter().zip(&state.layers) {
            match (&a.tensors, &b.tensors) {
                (
                    LayerTensors::Circuits { disentangler: d1, isometry: i1 },
                    LayerTensors::Circuits { disentangler: d2, isometry: i2 },
                ) => {
                    assert_eq!(d1.layout, d2.layout);
                    assert_eq!(i1.layout, i2.layout);
                    for (g1, g2) in d1.gates.iter().zip(&d2.gates).chain(i1.gates.iter().zip(&i2.gates)) {
                        assert_eq!(g1.unitary.data(), g2.unitary.data());
                    }
                }
                _ => panic!("unexpected layer content"),
            }
        }
        let t = embed_to_qubits(&build_term(&ModelSpec::Xxz { delta: 1.0 }).unwrap());
        let e = state_vector_energy(&state, &t).unwrap();
        let exact = crate::models::exact_ground_energy(&ModelSpec::Xxz { delta: 1.0 }, 16).unwrap();
        assert!(e.is_finite() && e >= exact - 1e-10);

        // adding another layer would leave n_top = 1
        assert!(add_layer(&mut state, 0.0, &mut Rng::new(14)).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let c = small_config(Parametrization::TrotterAngles);
        let state = init_random(&c, &mut Rng::new(20)).unwrap();
        let json = serde_json::to_string(&state).unwrap();
        let back: TMeraState = serde_json::from_str(&json).unwrap();
        let p1 = build_state_vector(&state).unwrap();
        let p2 = build_state_vector(&back).unwrap();
        assert_eq!(p1.data(), p2.data());
    }
}

