//! Dense assembly of the QSVT circuit `𝒬(U_H, Φ)` and its block-level characterization.
//!
//! Register layout, most significant first: monitoring qubit, `m` encoding ancillas, system.
//! The flat index is `monitor·(N·M) + ancilla·N + system`.

use serde::{Deserialize, Serialize};

use crate::blockenc::{csd_from_spectrum, dilate_with_spectrum, BlockEncoding, CsdFactors};
use crate::error::{Error, Result};
use crate::numkernel::{eigh, ComplexMatrix, HermitianSpectrum, StateVector, C64, I, ZERO};
use crate::qsp::{extract_pq, to_su2, Convention, PhaseFactorSet, QspPolynomialPair};

pub const CIRCUIT_UNITARY_TOL: f64 = 1e-10;

/// Which block encoding takes the `+1` exponents of the interleaving.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `U_H`.
    Forward,
    /// `Z_a U_H† Z_a` with `Z_a = diag(I_N, −I)` the reflection on the encoding ancillas.
    /// Its canonical cosine-sine form has right factor `W₂`, which is what the odd-degree
    /// second block of the one-step feedforward circuit needs.
    Adjoint,
    /// `U_H†` without the reflection.
    PlainAdjoint,
}

impl Orientation {
    /// Forward for even `d`, adjoint for odd `d`.
    pub fn parity_of(d: usize) -> Orientation {
        if d % 2 == 0 {
            Orientation::Forward
        } else {
            Orientation::Adjoint
        }
    }
}

fn require_circuit(phi: &PhaseFactorSet) -> Result<()> {
    if phi.convention() != Convention::Circuit {
        return Err(Error::Domain("QSVT assembly expects circuit phase factors".into()));
    }
    Ok(())
}

fn rotation_diagonal(enc: &BlockEncoding, phi: f64) -> Vec<C64> {
    let n = enc.encoded_dim();
    (0..enc.dim())
        .map(|i| C64::from_polar(1.0, if i < n { phi } else { -phi }))
        .collect()
}

/// `Z_a A Z_a`.
fn reflect(enc: &BlockEncoding, a: &ComplexMatrix) -> ComplexMatrix {
    let n = enc.encoded_dim();
    ComplexMatrix::from_fn(a.rows(), a.cols(), |r, c| {
        if (r < n) == (c < n) {
            a[(r, c)]
        } else {
            -a[(r, c)]
        }
    })
}

fn scale_columns(m: &mut ComplexMatrix, d: &[C64]) {
    for r in 0..m.rows() {
        for (c, f) in d.iter().enumerate() {
            m[(r, c)] *= f;
        }
    }
}

/// `R(φ₀) ∏_{k=1}^{d} U_H^{(−1)^{d−k}} R(φ_k)` with `R(φ) = diag(e^{iφ} I_N, e^{−iφ} I)`.
pub fn assemble_interleaved(
    enc: &BlockEncoding,
    phi: &PhaseFactorSet,
    orientation: Orientation,
) -> Result<ComplexMatrix> {
    require_circuit(phi)?;
    let u = enc.unitary().clone();
    let ud = u.adjoint();
    let (plus, minus) = match orientation {
        Orientation::Forward => (u, ud),
        Orientation::PlainAdjoint => (ud, u),
        Orientation::Adjoint => (reflect(enc, &ud), reflect(enc, &u)),
    };
    let v = phi.values();
    let d = phi.degree();
    let mut acc = ComplexMatrix::identity(enc.dim());
    scale_columns(&mut acc, &rotation_diagonal(enc, v[0]));
    for (k, &phik) in v.iter().enumerate().skip(1) {
        let factor = if (d - k) % 2 == 0 { &plus } else { &minus };
        acc = acc.matmul(factor);
        scale_columns(&mut acc, &rotation_diagonal(enc, phik));
    }
    Ok(acc)
}

/// `½ [[𝒰(Φ) + 𝒰(−Φ), 𝒰(Φ) − 𝒰(−Φ)], [𝒰(Φ) − 𝒰(−Φ), 𝒰(Φ) + 𝒰(−Φ)]]`.
pub fn assemble_full(
    enc: &BlockEncoding,
    phi: &PhaseFactorSet,
    orientation: Orientation,
) -> Result<ComplexMatrix> {
    let up = assemble_interleaved(enc, phi, orientation)?;
    let um = assemble_interleaved(enc, &phi.negated(), orientation)?;
    let sum = (&up + &um).scale_real(0.5);
    let diff = (&up - &um).scale_real(0.5);
    let n = enc.dim();
    let mut q = ComplexMatrix::zeros(2 * n, 2 * n);
    q.set_block(0, 0, &sum);
    q.set_block(0, n, &diff);
    q.set_block(n, 0, &diff);
    q.set_block(n, n, &sum);
    Ok(q)
}

/// An assembled QSVT circuit.
#[derive(Clone, Debug)]
pub struct QsvtCircuit {
    pub encoding: BlockEncoding,
    pub phases: PhaseFactorSet,
    pub orientation: Orientation,
    matrix: ComplexMatrix,
}

impl QsvtCircuit {
    pub fn new(encoding: BlockEncoding, phases: PhaseFactorSet, orientation: Orientation) -> Result<Self> {
        let matrix = assemble_full(&encoding, &phases, orientation)?;
        let residual = matrix.unitarity_residual();
        if residual > CIRCUIT_UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(QsvtCircuit {
            encoding,
            phases,
            orientation,
            matrix,
        })
    }

    pub fn degree(&self) -> usize {
        self.phases.degree()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Total register dimension `2·N·M`.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        state.apply(&self.matrix)
    }
}

/// `|0^{m+1}⟩ ⊗ |φ⟩`.
pub fn embed_input(phi: &[C64], enc: &BlockEncoding) -> Result<StateVector> {
    if phi.len() != enc.encoded_dim() {
        return Err(Error::Dimension(format!(
            "input of length {} for an encoding of dimension {}",
            phi.len(),
            enc.encoded_dim()
        )));
    }
    let mut amps = vec![ZERO; 2 * enc.dim()];
    amps[..phi.len()].copy_from_slice(phi);
    StateVector::new(amps)
}

/// Which completion block plays `T₂` in a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum T2Choice {
    /// `W₂` for odd degree, `V₂` for even degree.
    ByParity,
    W2,
    V2,
}

/// Predicted `N×N` blocks of `𝒬` for the single-ancilla dilation. Block index `2·monitor + ancilla`.
#[derive(Clone, Debug)]
pub struct BlockTable {
    pub n: usize,
    pub blocks: Vec<Vec<ComplexMatrix>>,
}

impl BlockTable {
    pub fn block(&self, row: usize, col: usize) -> &ComplexMatrix {
        &self.blocks[row][col]
    }

    /// `f(H) = P_Re(H)`.
    pub fn f_h(&self) -> &ComplexMatrix {
        self.block(0, 0)
    }

    /// `i P_Im(H)`.
    pub fn i_p_im(&self) -> &ComplexMatrix {
        self.block(0, 2)
    }

    /// `i √(I−H²) Q_Re(H) V V₂†`.
    pub fn i_s_q_re(&self) -> &ComplexMatrix {
        self.block(0, 3)
    }

    /// `T₂ V† √(I−H²) Q_Im(H)`.
    pub fn t2_s_q_im(&self) -> &ComplexMatrix {
        self.block(1, 0)
    }

    /// `A₁,₃ = −i T₂ P_Im(Σ) V₂†`.
    pub fn a13(&self) -> &ComplexMatrix {
        self.block(1, 3)
    }

    /// Per-block `max |predicted − actual|` against an assembled `𝒬`.
    pub fn residuals(&self, full: &ComplexMatrix) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..4)
            .map(|r| {
                (0..4)
                    .map(|c| self.blocks[r][c].max_abs_diff(&full.submatrix(r * n, c * n, n, n)))
                    .collect()
            })
            .collect()
    }

    pub fn max_residual(&self, full: &ComplexMatrix) -> f64 {
        self.residuals(full)
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }

    /// Residual over the blocks written out explicitly in the characterization theorem.
    pub fn named_residual(&self, full: &ComplexMatrix) -> f64 {
        let r = self.residuals(full);
        [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (1, 3), (2, 0), (3, 0)]
            .iter()
            .map(|&(a, b)| r[a][b])
            .fold(0.0, f64::max)
    }
}

fn diag_sandwich(left: &ComplexMatrix, d: &[C64], right: &ComplexMatrix) -> ComplexMatrix {
    let mut r = right.clone();
    r.scale_rows(d);
    left.matmul(&r)
}

struct Ingredients {
    spec: HermitianSpectrum,
    csd: CsdFactors,
    pair: QspPolynomialPair,
}

fn ingredients(h: &ComplexMatrix, phi: &PhaseFactorSet) -> Result<Ingredients> {
    require_circuit(phi)?;
    if phi.degree() == 0 {
        return Err(Error::Domain(
            "a degree-0 circuit contains no block encoding; nothing to predict".into(),
        ));
    }
    let spec = eigh(h)?;
    let csd = csd_from_spectrum(&spec)?;
    let pair = extract_pq(&to_su2(phi)?)?;
    Ok(Ingredients { spec, csd, pair })
}

/// All sixteen `N×N` blocks of `𝒬(U_H, Φ)` from `(P, Q)` and the cosine-sine factors.
pub fn predicted_blocks(h: &ComplexMatrix, phi: &PhaseFactorSet) -> Result<BlockTable> {
    predicted_blocks_with(h, phi, T2Choice::ByParity)
}

pub fn predicted_blocks_with(h: &ComplexMatrix, phi: &PhaseFactorSet, choice: T2Choice) -> Result<BlockTable> {
    let Ingredients { spec, csd, pair } = ingredients(h, phi)?;
    let d = phi.degree();
    let n = spec.dim();
    let v = &spec.vectors;
    let vd = v.adjoint();
    let t2 = match choice {
        T2Choice::ByParity => csd.t2(d),
        T2Choice::W2 => &csd.w2,
        T2Choice::V2 => &csd.v2,
    };
    let v2d = csd.v2.adjoint();

    let sig = &spec.values;
    let s: Vec<f64> = csd.s.clone();
    let col = |g: &dyn Fn(usize) -> C64| -> Vec<C64> { (0..n).map(g).collect() };
    let p = |j: usize| pair.p_at(sig[j]);
    let q = |j: usize| pair.q_at(sig[j]);

    let f_d = col(&|j| C64::new(p(j).re, 0.0));
    let ipim_d = col(&|j| I * p(j).im);
    let sqim_d = col(&|j| C64::new(s[j] * q(j).im, 0.0));
    let isqre_d = col(&|j| I * s[j] * q(j).re);

    // V·g(Σ)·V† and friends
    let vv2 = v.matmul(&v2d);
    let f_h = diag_sandwich(v, &f_d, &vd);
    let ipim_h = diag_sandwich(v, &ipim_d, &vd);
    let b01 = diag_sandwich(v, &sqim_d, &vd).matmul(&vv2).scale_real(-1.0);
    let b03 = diag_sandwich(v, &isqre_d, &vd).matmul(&vv2);
    let b10 = diag_sandwich(t2, &sqim_d, &vd);
    let b12 = diag_sandwich(t2, &isqre_d, &vd);
    let b11 = diag_sandwich(t2, &f_d, &v2d);
    let b13 = diag_sandwich(t2, &ipim_d, &v2d).scale_real(-1.0);

    let sum = [[f_h.clone(), b01], [b10, b11]];
    let diff = [[ipim_h, b03], [b12, b13]];
    let mut blocks = vec![vec![ComplexMatrix::zeros(n, n); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let (mr, ar) = (r / 2, r % 2);
            let (mc, ac) = (c / 2, c % 2);
            blocks[r][c] = if mr == mc {
                sum[ar][ac].clone()
            } else {
                diff[ar][ac].clone()
            };
        }
    }
    Ok(BlockTable { n, blocks })
}

fn require_symmetric(phi: &PhaseFactorSet) -> Result<()> {
    if !phi.is_su2_symmetric() {
        return Err(Error::NonSymmetricPhases);
    }
    Ok(())
}

/// Predicted `|⊥⟩ = |1⟩ ⊗ (i P_Im(H)|φ⟩ ; i T₂ V† √(I−H²) Q_Re(H)|φ⟩)` for symmetric phases.
pub fn garbage_state(h: &ComplexMatrix, phi: &PhaseFactorSet, input: &StateVector) -> Result<StateVector> {
    require_symmetric(phi)?;
    let n = h.rows();
    if input.len() != n {
        return Err(Error::Dimension(format!("input length {} vs N = {n}", input.len())));
    }
    let table = predicted_blocks(h, phi)?;
    let top = table.i_p_im().mul_vec(input.amplitudes());
    let bottom = table.block(1, 2).mul_vec(input.amplitudes());
    let mut amps = vec![ZERO; 4 * n];
    amps[2 * n..3 * n].copy_from_slice(&top);
    amps[3 * n..].copy_from_slice(&bottom);
    StateVector::new(amps)
}

/// `(I − |0^{m+1}⟩⟨0^{m+1}| ⊗ I) 𝒬 |0^{m+1}⟩|φ⟩` from the assembled circuit.
pub fn actual_garbage(circuit: &QsvtCircuit, input: &StateVector) -> Result<StateVector> {
    let n = circuit.encoding.encoded_dim();
    let mut out = circuit.apply(&embed_input(input.amplitudes(), &circuit.encoding)?);
    for i in 0..n {
        out[i] = ZERO;
    }
    Ok(out)
}

/// `(‖f(H)φ‖², ‖P_Im(H)φ‖², ‖√(I−H²) Q_Re(H)φ‖²)`; sums to `‖φ‖²` for symmetric phases.
pub fn norm_terms(h: &ComplexMatrix, phi: &PhaseFactorSet, input: &StateVector) -> Result<[f64; 3]> {
    let table = predicted_blocks(h, phi)?;
    let a = input.amplitudes();
    let norm2 = |m: &ComplexMatrix| m.mul_vec(a).iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok([norm2(table.f_h()), norm2(table.i_p_im()), norm2(table.i_s_q_re())])
}

/// Dilation plus its eigendecomposition, built once and shared by circuits over the same `H`.
#[derive(Clone, Debug)]
pub struct EncodedHamiltonian {
    pub h: ComplexMatrix,
    pub spectrum: HermitianSpectrum,
    pub encoding: BlockEncoding,
}

impl EncodedHamiltonian {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        let spectrum = eigh(h)?;
        let encoding = dilate_with_spectrum(h, &spectrum)?;
        Ok(EncodedHamiltonian {
            h: h.clone(),
            spectrum,
            encoding,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }
}
