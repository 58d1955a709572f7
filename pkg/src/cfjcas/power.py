"""Power allocation: sensing-SNR matrix, SINR/power cones, CCP and the communication-centric baseline.

Throughout, ``q`` is the vector of amplitudes ``sqrt(rho_i)``; entry 0
belongs to the sensing stream and entry i to UE i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import socp
from .channel import ChannelSet
from .errors import InfeasibleAllocationError
from .precoding import PrecoderSet


@dataclass(frozen=True)
class SinrCoefficients:
    gains: np.ndarray  # (n_ue, n_ue + 1), |h_i^H w_j|
    noise_std: float

    @property
    def n_ue(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class SensingSnrMatrix:
    a: np.ndarray

    @property
    def re_a(self) -> np.ndarray:
        return self.a.real

    def snr(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(q @ self.re_a @ q)


@dataclass
class PowerSolution:
    q: np.ndarray
    sensing_snr: float
    ue_sinrs: np.ndarray
    per_ap_power: np.ndarray
    iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)

    @property
    def rho(self) -> np.ndarray:
        return self.q**2

    @property
    def total_power(self) -> float:
        return float(np.sum(self.rho))


def build_sinr_coefficients(channels: ChannelSet, precoders: PrecoderSet,
                            noise_variance: float) -> SinrCoefficients:
    gains = np.abs(channels.comm_channels.conj() @ precoders.w)
    return SinrCoefficients(gains=gains, noise_std=float(np.sqrt(noise_variance)))


def evaluate_sinr(coeffs: SinrCoefficients, rho) -> np.ndarray:
    """Downlink SINR of every UE for stream powers `rho` (entry 0 = sensing)."""
    rho = np.asarray(rho, dtype=float)
    g2 = coeffs.gains**2
    received = g2 @ rho
    idx = np.arange(coeffs.n_ue)
    desired = g2[idx, idx + 1] * rho[idx + 1]
    return desired / (received - desired + coeffs.noise_std**2)


def per_ap_power(precoders: PrecoderSet, rho) -> np.ndarray:
    """Average transmit power of every transmitter AP."""
    return (precoders.per_ap_norms**2).T @ np.asarray(rho, dtype=float)


def build_sensing_matrix(channels: ChannelSet, precoders: PrecoderSet, noise_variance: float,
                         symbols=None) -> SensingSnrMatrix:
    """Matrix A with sensing SNR ``q @ Re(A) @ q``.

    With `symbols` (``tau x (n_ue + 1)``) the symbol sums are taken
    literally. Without, they are replaced by their expectation for
    independent unit-power symbols, which keeps only the diagonal.
    """
    sigma2 = channels.sensing_gain_variances                     # (n_rx, n_tx)
    rx_gain = np.sum(np.abs(channels.rx_responses) ** 2, axis=1)  # a_r^H a_r
    weight = rx_gain @ sigma2                                    # (n_tx,)
    v = np.einsum("km,kms->ks", channels.tx_responses, precoders.per_ap)
    inner = np.einsum("k,ki,kj->ij", weight, v.conj(), v)
    m, n_rx = channels.m_antennas, channels.n_rx
    if symbols is None:
        a = np.diag(np.diag(inner)) / (m * n_rx * noise_variance)
    else:
        s = np.asarray(symbols)
        tau = s.shape[0]
        a = inner * (s.conj().T @ s) / (tau * m * n_rx * noise_variance)
    return SensingSnrMatrix(a=a)


def _sinr_cone(coeffs, active, ue, gamma_c):
    gains = coeffs.gains[ue]
    pos = {s: j for j, s in enumerate(active)}
    stream = ue + 1
    if gains[stream] == 0:
        raise InfeasibleAllocationError(f"UE {ue} has zero gain on its own precoder")
    n = len(active)
    others = [s for s in active if s != stream]
    a = np.zeros((len(others) + 1, n))
    for row, s in enumerate(others):
        a[row, pos[s]] = gains[s] / coeffs.noise_std
    b = np.zeros(len(others) + 1)
    b[-1] = 1.0
    f = np.zeros(n)
    f[pos[stream]] = gains[stream] / (coeffs.noise_std * np.sqrt(gamma_c))
    return socp.Cone(a, b, f, 0.0)


def _constraint_cones(coeffs, precoders, active, gamma_c, p_tx, p_total_cap, n_extra=0):
    """SINR cones, per-AP cones and optional total cap over the `active` streams."""
    cones = [_sinr_cone(coeffs, active, i, gamma_c) for i in range(coeffs.n_ue) if i + 1 in active]
    norms = precoders.per_ap_norms[active]                       # (n_active, n_tx)
    for k in range(precoders.n_tx):
        cones.append(socp.Cone(np.diag(norms[:, k]), np.zeros(len(active)),
                               np.zeros(len(active)), np.sqrt(p_tx)))
    if p_total_cap is not None:
        n = len(active)
        cones.append(socp.Cone(np.eye(n), np.zeros(n), np.zeros(n), np.sqrt(p_total_cap)))
    if n_extra:
        cones = [socp.Cone(np.hstack([c.a, np.zeros((c.a.shape[0], n_extra))]), c.b,
                           np.append(c.f, np.zeros(n_extra)), c.g) for c in cones]
    return cones


def _active_streams(coeffs, with_sensing):
    start = 0 if with_sensing else 1
    return list(range(start, coeffs.n_ue + 1))


def build_ccp_subproblem(a_matrix: SensingSnrMatrix, coeffs: SinrCoefficients, precoders: PrecoderSet,
                         q_prev, gamma_c: float, p_tx: float, p_total_cap: float | None = None,
                         with_sensing: bool = True) -> socp.SocProgram:
    """Convex subproblem of one CCP step: the objective linearized at `q_prev`.

    Variables are the amplitudes of the active streams (all streams, or the
    UE streams only when `with_sensing` is false).
    """
    q_prev = np.asarray(q_prev, dtype=float)
    if np.any(q_prev < 0):
        raise ValueError("q_prev must be nonnegative")
    active = _active_streams(coeffs, with_sensing)
    objective = -(a_matrix.re_a @ q_prev)[active]
    cones = _constraint_cones(coeffs, precoders, active, gamma_c, p_tx, p_total_cap)
    return socp.SocProgram(objective=objective, cones=cones, nonneg=True)


def _solution(q, coeffs, precoders, a_matrix, iterations, converged, history=()):
    rho = q**2
    snr = a_matrix.snr(q) if a_matrix is not None else float("nan")
    return PowerSolution(q=q, sensing_snr=snr, ue_sinrs=evaluate_sinr(coeffs, rho),
                         per_ap_power=per_ap_power(precoders, rho), iterations=iterations,
                         converged=converged, objective_history=list(history))


def is_feasible(q, coeffs, precoders, gamma_c, p_tx, p_total_cap=None, rtol=1e-9) -> bool:
    rho = np.asarray(q, dtype=float) ** 2
    if coeffs.n_ue and np.any(evaluate_sinr(coeffs, rho) < gamma_c * (1 - rtol)):
        return False
    if np.any(per_ap_power(precoders, rho) > p_tx * (1 + rtol)):
        return False
    return p_total_cap is None or rho.sum() <= p_total_cap * (1 + rtol)


def baseline_allocate(coeffs: SinrCoefficients, precoders: PrecoderSet, gamma_c: float, p_tx: float,
                      p_total_cap: float | None = None, a_matrix: SensingSnrMatrix | None = None,
                      tol: float = 1e-10) -> PowerSolution:
    """Communication-centric allocation: minimum total power meeting every SINR target.

    The sensing stream gets no power. Solved as one SOCP in epigraph form.
    """
    n_ue = coeffs.n_ue
    if n_ue == 0:
        return _solution(np.zeros(1), coeffs, precoders, a_matrix, 1, True)
    active = _active_streams(coeffs, with_sensing=False)
    cones = _constraint_cones(coeffs, precoders, active, gamma_c, p_tx, p_total_cap, n_extra=1)
    # ||q|| <= t, with t the last variable
    cones.append(socp.Cone(np.hstack([np.eye(n_ue), np.zeros((n_ue, 1))]), np.zeros(n_ue),
                           np.append(np.zeros(n_ue), 1.0), 0.0))
    objective = np.append(np.zeros(n_ue), 1.0)
    sol = socp.solve(socp.SocProgram(objective, cones, nonneg=True), tol=tol)
    if sol.status == socp.INFEASIBLE:
        raise InfeasibleAllocationError("SINR and power constraints cannot be met")
    q = np.concatenate([[0.0], np.maximum(sol.q[:n_ue], 0.0)])
    return _solution(q, coeffs, precoders, a_matrix, 1, sol.optimal)


def initial_point(coeffs, precoders, gamma_c, p_tx, p_total_cap=None, with_sensing=True):
    """Baseline solution plus a small sensing amplitude, shrunk until feasible."""
    base = baseline_allocate(coeffs, precoders, gamma_c, p_tx, p_total_cap)
    q0 = base.q.copy()
    if with_sensing:
        amp = 1e-3 * np.sqrt(p_tx)
        for _ in range(60):
            q0[0] = amp
            if is_feasible(q0, coeffs, precoders, gamma_c, p_tx, p_total_cap):
                break
            amp *= 0.5
        else:
            q0[0] = 0.0
    return q0


def ccp_allocate(a_matrix: SensingSnrMatrix, coeffs: SinrCoefficients, precoders: PrecoderSet,
                 gamma_c: float, p_tx: float, p_total_cap: float | None = None, eps: float | None = None,
                 q0=None, with_sensing: bool = True, max_iter: int = 100,
                 tol: float = 1e-10) -> PowerSolution:
    """Maximize the sensing SNR with the concave-convex procedure.

    Each step maximizes the objective linearized at the previous iterate
    over the (convex) SINR and power cones, and stops once
    ``||Re(A) (q_c - q_{c-1})|| <= eps``.
    """
    re_a = a_matrix.re_a
    if eps is None:
        eps = 1e-6 * np.linalg.norm(re_a, 2)
    if q0 is None:
        q0 = initial_point(coeffs, precoders, gamma_c, p_tx, p_total_cap, with_sensing)
    q_prev = np.asarray(q0, dtype=float).copy()
    if not with_sensing:
        q_prev[0] = 0.0
    active = _active_streams(coeffs, with_sensing)

    program = build_ccp_subproblem(a_matrix, coeffs, precoders, q_prev, gamma_c, p_tx,
                                   p_total_cap, with_sensing)
    start, slack = socp.find_interior(program, q_prev[active])
    if slack <= 0:
        raise InfeasibleAllocationError("SINR and power constraints cannot be met")

    history = [a_matrix.snr(q_prev)]
    converged = False
    iterations = 0
    q = q_prev
    for iterations in range(1, max_iter + 1):
        if iterations > 1:
            program = build_ccp_subproblem(a_matrix, coeffs, precoders, q_prev, gamma_c, p_tx,
                                           p_total_cap, with_sensing)
        sol = socp.solve(program, tol=tol, x0=start)
        if sol.status == socp.INFEASIBLE:
            raise InfeasibleAllocationError("CCP subproblem infeasible")
        q = np.zeros_like(q_prev)
        q[active] = np.maximum(sol.q, 0.0)
        history.append(a_matrix.snr(q))
        if np.linalg.norm(re_a @ (q - q_prev)) <= eps:
            converged = True
            break
        q_prev = q
    return _solution(q, coeffs, precoders, a_matrix, iterations, converged, history)
