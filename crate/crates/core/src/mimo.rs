//! Multi-user MIMO throughput game on a cellular interference network.
//!
//! Player `i` chooses a transmit covariance `X_i ⪰ 0` with `tr X_i ≤ p` and
//! receives
//!
//! ```text
//! R_i(X) = log det(I + Σ_j H_ji X_j H_ji†) − log det(W_{-i}),
//! W_{-i} = I + Σ_{j≠i} H_ji X_j H_ji†
//! ```
//!
//! (natural log). `R_i` is concave in `X_i` with gradient `H_ii† W⁻¹ H_ii`,
//! `W` the full covariance; the second log-det does not depend on `X_i`.
//! The Nash equilibria are the solutions of the VI with `F_i = −∇_{X_i} R_i`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{eig, ComplexMatrix, HermitianMatrix};
use crate::problem::{complex_gaussian, BlockProfile, BlockSpec, Mapping, NoiseModel, SpectraSet, SviProblem, TraceMode};
use crate::textio;

/// Transmit covariances, one block per user.
pub type GameState = BlockProfile;

/// Transmitter-to-receiver distances (km) of the seven-cell reference network;
/// row = transmitter, column = receiver.
pub const CANONICAL_DISTANCES: [[f64; 7]; 7] = [
    [0.89, 1.01, 1.05, 1.10, 1.01, 1.05, 1.10],
    [1.01, 0.89, 1.05, 2.10, 2.69, 2.66, 1.99],
    [1.10, 1.90, 0.89, 1.01, 2.10, 2.72, 2.72],
    [1.99, 2.61, 1.94, 0.89, 1.10, 2.10, 2.76],
    [2.56, 2.69, 2.66, 1.99, 0.89, 1.05, 2.10],
    [2.52, 2.10, 2.72, 2.72, 1.90, 0.89, 1.01],
    [1.90, 1.10, 2.10, 2.76, 2.61, 1.94, 0.89],
];

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    /// `distance[tx][rx]` in km.
    distance: Vec<Vec<f64>>,
    max_power: f64,
}

impl NetworkTopology {
    pub fn new(distance: Vec<Vec<f64>>, tx_antennas: Vec<usize>, rx_antennas: Vec<usize>, max_power: f64) -> Result<Self> {
        let n = distance.len();
        if n == 0 {
            return Err(Error::Domain("network needs at least one user".into()));
        }
        for (i, row) in distance.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if let Some(d) = row.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                return Err(Error::Domain(format!("distance {d} in row {i} is not positive")));
            }
        }
        if tx_antennas.len() != n || rx_antennas.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: tx_antennas.len().min(rx_antennas.len()) });
        }
        if tx_antennas.iter().chain(&rx_antennas).any(|&a| a == 0) {
            return Err(Error::Domain("antenna counts must be positive".into()));
        }
        if !(max_power > 0.0 && max_power.is_finite()) {
            return Err(Error::Domain(format!("max power must be positive, got {max_power}")));
        }
        Ok(Self { tx_antennas, rx_antennas, distance, max_power })
    }

    /// Distances from transmitter and receiver positions (km).
    pub fn from_positions(tx: &[(f64, f64)], rx: &[(f64, f64)], antennas: (usize, usize), max_power: f64) -> Result<Self> {
        if tx.len() != rx.len() {
            return Err(Error::DimensionMismatch { expected: tx.len(), got: rx.len() });
        }
        let distance = tx
            .iter()
            .map(|&(tx_x, tx_y)| rx.iter().map(|&(rx_x, rx_y)| (tx_x - rx_x).hypot(tx_y - rx_y)).collect())
            .collect();
        let n = tx.len();
        Self::new(distance, vec![antennas.0; n], vec![antennas.1; n], max_power)
    }

    /// Whitespace-separated square distance matrix, one transmitter per line; `#` starts a comment.
    pub fn from_distance_text(text: &str, antennas: (usize, usize), max_power: f64) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad distance `{t}`") }))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        Self::new(rows, vec![antennas.0; n], vec![antennas.1; n], max_power)
    }

    pub fn with_uniform_antennas(mut self, tx: usize, rx: usize) -> Result<Self> {
        let n = self.users();
        self.tx_antennas = vec![tx; n];
        self.rx_antennas = vec![rx; n];
        Self::new(self.distance, self.tx_antennas, self.rx_antennas, self.max_power)
    }

    pub fn users(&self) -> usize {
        self.distance.len()
    }

    pub fn tx_antennas(&self, user: usize) -> usize {
        self.tx_antennas[user]
    }

    pub fn rx_antennas(&self, user: usize) -> usize {
        self.rx_antennas[user]
    }

    pub fn distance(&self, tx: usize, rx: usize) -> f64 {
        self.distance[tx][rx]
    }

    pub fn max_power(&self) -> f64 {
        self.max_power
    }

    /// One `tr X_i ≤ p` block per user.
    pub fn strategy_set(&self) -> SpectraSet {
        SpectraSet::new(
            self.tx_antennas
                .iter()
                .map(|&m| BlockSpec { dim: m, bound: self.max_power, mode: TraceMode::AtMost })
                .collect(),
        )
        .expect("validated topology")
    }
}

/// Seven hexagonal cells of radius 1 km, one link per cell, unit power and
/// two antennas per side (change with [`NetworkTopology::with_uniform_antennas`]).
pub fn canonical_topology() -> NetworkTopology {
    let distance = CANONICAL_DISTANCES.iter().map(|r| r.to_vec()).collect();
    NetworkTopology::new(distance, vec![2; 7], vec![2; 7], 1.0).expect("constant table")
}

/// Channel matrices `H[tx][rx]`, each `n_rx × m_tx`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    h: Vec<Vec<ComplexMatrix>>,
}

impl ChannelSet {
    pub fn new(h: Vec<Vec<ComplexMatrix>>, topology: &NetworkTopology) -> Result<Self> {
        let n = topology.users();
        if h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.len() });
        }
        for (tx, row) in h.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (rx, m) in row.iter().enumerate() {
                if m.rows() != topology.rx_antennas(rx) || m.cols() != topology.tx_antennas(tx) {
                    return Err(Error::Domain(format!(
                        "channel tx={tx} rx={rx} is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        topology.rx_antennas(rx),
                        topology.tx_antennas(tx)
                    )));
                }
            }
        }
        Ok(Self { h })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    /// Channel from transmitter `tx` to receiver `rx`.
    pub fn channel(&self, tx: usize, rx: usize) -> &ComplexMatrix {
        &self.h[tx][rx]
    }

    pub fn to_text(&self) -> String {
        let labels: Vec<String> = (0..self.users())
            .flat_map(|tx| (0..self.users()).map(move |rx| format!("tx={tx} rx={rx}")))
            .collect();
        let mats = self.h.iter().flatten();
        textio::write_matrices(labels.iter().map(String::as_str).zip(mats))
    }

    pub fn from_text(text: &str, topology: &NetworkTopology) -> Result<Self> {
        let n = topology.users();
        let items = textio::read_matrices(text)?;
        if items.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: items.len() });
        }
        let mut it = items.into_iter();
        let h = (0..n).map(|_| (0..n).map(|_| it.next().expect("counted").1).collect()).collect();
        Self::new(h, topology)
    }
}

/// Rayleigh fading: every entry of `H[tx][rx]` is circular complex Gaussian
/// with variance `1 / distance(tx, rx)²`.
pub fn sample_channels<R: Rng + ?Sized>(topology: &NetworkTopology, rng: &mut R) -> ChannelSet {
    let n = topology.users();
    let h = (0..n)
        .map(|tx| {
            (0..n)
                .map(|rx| {
                    let d = topology.distance(tx, rx);
                    complex_gaussian(rng, topology.rx_antennas(rx), topology.tx_antennas(tx), 1.0 / (d * d))
                })
                .collect()
        })
        .collect();
    ChannelSet { h }
}

fn check_state(channels: &ChannelSet, x: &GameState, user: usize) -> Result<()> {
    if x.len() != channels.users() {
        return Err(Error::DimensionMismatch { expected: channels.users(), got: x.len() });
    }
    if user >= channels.users() {
        return Err(Error::Domain(format!("user {user} out of range")));
    }
    Ok(())
}

fn covariance(channels: &ChannelSet, x: &GameState, rx: usize, skip: Option<usize>) -> Result<HermitianMatrix> {
    check_state(channels, x, rx)?;
    let n_rx = channels.channel(rx, rx).rows();
    let mut w = HermitianMatrix::identity(n_rx);
    for tx in 0..channels.users() {
        if Some(tx) == skip {
            continue;
        }
        let h = channels.channel(tx, rx);
        if x.block(tx).dim() != h.cols() {
            return Err(Error::DimensionMismatch { expected: h.cols(), got: x.block(tx).dim() });
        }
        w += &x.block(tx).congruence(h);
    }
    Ok(w)
}

/// Interference-plus-noise covariance `W_{-i} = I + Σ_{j≠i} H_ji X_j H_ji†` at receiver `i`.
pub fn mui_covariance(channels: &ChannelSet, x: &GameState, user: usize) -> Result<HermitianMatrix> {
    covariance(channels, x, user, Some(user))
}

/// Full received covariance `I + Σ_j H_ji X_j H_ji†` at receiver `i`.
pub fn full_covariance(channels: &ChannelSet, x: &GameState, user: usize) -> Result<HermitianMatrix> {
    covariance(channels, x, user, None)
}

fn cholesky(w: &HermitianMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(w.as_matrix().clone()).ok_or_else(|| Error::NotPsd(eig(w).map(|e| e.min()).unwrap_or(f64::NAN)))
}

fn log_det(w: &HermitianMatrix) -> Result<f64> {
    let l = cholesky(w)?;
    Ok(2.0 * l.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>())
}

/// Achievable rate `R_i` (nats).
pub fn throughput(channels: &ChannelSet, x: &GameState, user: usize) -> Result<f64> {
    Ok(log_det(&full_covariance(channels, x, user)?)? - log_det(&mui_covariance(channels, x, user)?)?)
}

/// `∇_{X_i} R_i = H_ii† W⁻¹ H_ii`.
pub fn throughput_gradient(channels: &ChannelSet, x: &GameState, user: usize) -> Result<HermitianMatrix> {
    let w = full_covariance(channels, x, user)?;
    let h = channels.channel(user, user).as_matrix();
    let solved = cholesky(&w)?.solve(h);
    let g: DMatrix<Complex64> = h.adjoint() * solved;
    Ok(HermitianMatrix::symmetrized(g))
}

/// Largest utility-gradient improvement available to `user`:
/// `max_{Z feasible} tr(∇R_i (Z − X_i)) = p·λ_max(∇R_i) − tr(∇R_i X_i)`.
pub fn best_response_gain(channels: &ChannelSet, x: &GameState, user: usize, max_power: f64) -> Result<f64> {
    let g = throughput_gradient(channels, x, user)?;
    let top = eig(&g)?.max().max(0.0);
    Ok(max_power * top - g.inner(x.block(user)))
}

/// Game mapping `F_i(X) = −H_ii† W⁻¹ H_ii` with power constraints `tr X_i ≤ p`
/// and Hermitian Gaussian feedback noise of level `sigma`.
pub fn game_to_svi(topology: &NetworkTopology, channels: ChannelSet, sigma: f64) -> Result<SviProblem> {
    if channels.users() != topology.users() {
        return Err(Error::DimensionMismatch { expected: topology.users(), got: channels.users() });
    }
    let channels = Arc::new(channels);
    let mapping: Mapping = Arc::new(move |x: &BlockProfile| {
        let blocks = (0..channels.users())
            .map(|i| throughput_gradient(&channels, x, i).map(|g| -&g))
            .collect::<Result<_>>()?;
        Ok(BlockProfile::new(blocks))
    });
    let noise = if sigma == 0.0 { NoiseModel::None } else { NoiseModel::gaussian(sigma)? };
    SviProblem::new(topology.strategy_set(), mapping, noise)
}
