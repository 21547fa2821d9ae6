"""Exact statevector QAOA for diagonal (Ising) cost Hamiltonians.

Basis index bit ``i`` is qubit ``i`` / variable ``x_i`` (little-endian), and
the cost eigenvalue of ``|x>`` is the Ising energy with ``z_i = 1 - 2 x_i``.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize

from .qubo import IsingModel

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
WARM_PAD = 0.01


@dataclass
class QaoaParams:
    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=float))
        if self.gammas.shape != self.betas.shape or self.gammas.size < 1:
            raise ValueError("need p >= 1 gammas and the same number of betas")

    @property
    def p(self):
        return self.gammas.size

    @property
    def vector(self):
        return np.concatenate([self.gammas, self.betas])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        p = v.size // 2
        return cls(v[:p], v[p:])


@dataclass
class QaoaRun:
    params: QaoaParams
    expectation: float
    probabilities: np.ndarray       # exact, length 2^n
    counts: Optional[np.ndarray] = None
    shots: int = 0
    restarts: int = 0
    restart_values: List[float] = field(default_factory=list)
    n_evals: int = 0

    @property
    def p(self):
        return self.params.p

    @property
    def n(self):
        return int(np.log2(self.probabilities.size))

    @property
    def frequencies(self):
        if self.counts is None:
            return self.probabilities
        return self.counts / max(self.shots, 1)

    def sampled_masks(self):
        """Bitstrings observed at least once (all support if never sampled)."""
        src = self.counts if self.counts is not None else self.probabilities
        return np.flatnonzero(src > 0)

    def mass_by_weight(self, exact=False):
        dist = self.probabilities if exact or self.counts is None else self.frequencies
        w = np.array([bin(i).count("1") for i in range(dist.size)])
        return np.bincount(w, weights=dist, minlength=self.n + 1)


def energy_table(ising: IsingModel, max_qubits=MAX_QUBITS):
    """E(x) for all 2^n basis states."""
    n = ising.n
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceeds the simulator cap of {max_qubits}")
    idx = np.arange(1 << n, dtype=np.int64)
    z = [1.0 - 2.0 * ((idx >> i) & 1) for i in range(n)]
    E = np.full(idx.size, float(ising.c))
    for i in range(n):
        if ising.h[i]:
            E += ising.h[i] * z[i]
        for j in range(i + 1, n):
            if ising.J[i, j]:
                E += ising.J[i, j] * z[i] * z[j]
    return E


def apply_mixer(psi, beta, n):
    """exp(-i beta X) on every qubit, in place on a copy."""
    c, s = np.cos(beta), -1j * np.sin(beta)
    out = psi.copy()
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        a = v[:, 0, :].copy()
        b = v[:, 1, :]
        v[:, 0, :] = c * a + s * b
        v[:, 1, :] = s * a + c * b
    return out


def simulate_energies(E, params: QaoaParams, n):
    psi = np.full(E.size, 2.0 ** (-n / 2), dtype=complex)
    for g, b in zip(params.gammas, params.betas):
        psi = psi * np.exp(-1j * g * E)
        psi = apply_mixer(psi, b, n)
    return psi


def simulate(ising: IsingModel, params: QaoaParams, energies=None):
    """Final statevector of the p-layer QAOA circuit."""
    E = energy_table(ising) if energies is None else energies
    return simulate_energies(E, params, ising.n)


def expectation(ising: IsingModel, params: QaoaParams, energies=None):
    E = energy_table(ising) if energies is None else energies
    psi = simulate_energies(E, params, ising.n)
    return float(np.dot(np.abs(psi) ** 2, E))


def sample(probabilities, shots=100_000, seed=None):
    """Multinomial shot counts from exact probabilities."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p)


def _initial_points(p, restarts, warm, rng):
    points = []
    if warm is not None:
        g = np.concatenate([warm.gammas[:p], rng.uniform(-WARM_PAD, WARM_PAD, max(0, p - warm.p))])
        b = np.concatenate([warm.betas[:p], rng.uniform(-WARM_PAD, WARM_PAD, max(0, p - warm.p))])
        points.append(np.concatenate([g, b]))
    else:
        points.append(np.full(2 * p, np.pi / 4))
    for _ in range(restarts - 1):
        points.append(rng.uniform(0.0, np.pi, 2 * p))
    return points


def optimize(ising: IsingModel, p=1, restarts=5, warm: Optional[QaoaParams] = None,
             max_iters=100, seed=None, energies=None, shot_noise=0, rhobeg=0.5):
    """Multi-start COBYLA minimisation of the exact QAOA expectation.

    Restart 1 starts at pi/4 everywhere, or at ``warm`` padded with values in
    [-0.01, 0.01] for added layers; later restarts draw uniformly from [0, pi].
    ``shot_noise > 0`` replaces the exact objective by a sampled estimate with
    that many shots (noise studies only).
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if p < 1:
        raise ValueError("depth p must be >= 1")
    E = energy_table(ising) if energies is None else energies
    n = ising.n
    rng = np.random.default_rng(seed)
    noise_rng = np.random.default_rng(rng.integers(2**63))

    def objective(v):
        psi = simulate_energies(E, QaoaParams.from_vector(v), n)
        probs = np.abs(psi) ** 2
        if shot_noise:
            counts = sample(probs, shot_noise, noise_rng)
            return float(np.dot(counts, E) / shot_noise)
        return float(np.dot(probs, E))

    best = None
    values, n_evals = [], 0
    for r, x0 in enumerate(_initial_points(p, restarts, warm, rng)):
        track = {"f": objective(x0), "x": np.array(x0)}

        def f(v, track=track):
            val = objective(v)
            if val < track["f"]:
                track["f"], track["x"] = val, np.array(v)
            return val

        res = minimize(f, x0, method="COBYLA", options={"maxiter": max_iters, "rhobeg": rhobeg})
        n_evals += int(res.nfev) + 1
        values.append(track["f"])
        # ties resolved by restart index
        if best is None or track["f"] < best[0]:
            best = (track["f"], track["x"])
    params = QaoaParams.from_vector(best[1])
    psi = simulate_energies(E, params, n)
    probs = np.abs(psi) ** 2
    return QaoaRun(params, float(np.dot(probs, E)), probs, restarts=restarts,
                   restart_values=values, n_evals=n_evals)


def run_depth_schedule(ising: IsingModel, depths=(1,), restarts=5, shots=100_000, seed=0,
                       max_iters=100, energies=None) -> List[QaoaRun]:
    """Optimise and sample each depth, warm-starting from the previous one."""
    depths = list(depths)
    if depths != sorted(depths):
        raise ValueError("depths must be ascending")
    E = energy_table(ising) if energies is None else energies
    ss = np.random.SeedSequence(seed)
    runs, warm = [], None
    for p, child in zip(depths, ss.spawn(len(depths))):
        opt_seed, shot_seed = child.spawn(2)
        run = optimize(ising, p, restarts, warm, max_iters, np.random.default_rng(opt_seed), E)
        run.counts = sample(run.probabilities, shots, np.random.default_rng(shot_seed))
        run.shots = shots
        runs.append(run)
        warm = run.params
    return runs


def write_distribution_csv(path, run: QaoaRun, energies, exact=False):
    """Observed bitstrings (or full support if ``exact``), most probable first."""
    n = run.n
    dist = run.probabilities if exact else run.frequencies
    idx = np.flatnonzero(dist > 0)
    idx = idx[np.lexsort((idx, -dist[idx]))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bitstring", "index", "count", "probability", "energy", "hamming_weight"])
        for i in idx:
            # printed with x_0 first to match the little-endian feature order
            bits = "".join(str((int(i) >> q) & 1) for q in range(n))
            count = "" if run.counts is None else int(run.counts[i])
            w.writerow([bits, int(i), count, repr(float(dist[i])), repr(float(energies[i])),
                        bin(int(i)).count("1")])
