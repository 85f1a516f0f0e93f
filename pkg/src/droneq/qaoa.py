"""Dense statevector QAOA over a diagonal cost Hamiltonian.

The cost unitary multiplies each basis amplitude by ``exp(-i gamma E(x))``;
the mixer is ``exp(-i beta sum_j X_j)``, applied one qubit at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .qubo import (
    BRUTE_FORCE_CAP,
    CapacityError,
    CostModel,
    brute_force_minimize,
    greedy_descent,
    index_to_bits,
)

DEFAULT_QUBIT_CAP = 20
MAX_QUBIT_CAP = 26

# (gamma, beta) starting points; gamma is in units of 1/std(spectrum)
_STARTS = ((0.8, 0.4), (2.0, 0.7), (0.3, 1.2))


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have equal length")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def depth(self) -> int:
        return len(self.gammas)


@dataclass(frozen=True)
class QaoaConfig:
    depth: int = 1
    optimizer_max_evals: int = 150
    shots: int = 1024
    seed: int = 0
    qubit_cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not 0 <= self.qubit_cap <= MAX_QUBIT_CAP:
            raise ValueError(f"qubit_cap must lie in [0, {MAX_QUBIT_CAP}]")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")

    def with_seed(self, seed: int) -> "QaoaConfig":
        return QaoaConfig(self.depth, self.optimizer_max_evals, self.shots, int(seed), self.qubit_cap)


@dataclass(frozen=True)
class Sample:
    bitstring: tuple[int, ...]
    count: int
    energy: float


@dataclass(frozen=True)
class SampleSet:
    """Measured bitstrings sorted by energy (ties by bitstring)."""

    samples: tuple[Sample, ...]

    @property
    def shots(self) -> int:
        return sum(s.count for s in self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def to_list(self) -> list[dict]:
        return [{"bitstring": list(s.bitstring), "count": s.count, "energy": s.energy} for s in self.samples]


@dataclass(frozen=True)
class QaoaOutcome:
    bitstring: tuple[int, ...]
    energy: float
    samples: SampleSet
    params: QaoaParams | None = None
    # None when the statevector path ran; otherwise "classical-fallback:<method>"
    fallback: str | None = None
    evaluations: int = field(default=0, compare=False)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds qubit cap {cap}")


def uniform_state(n: int, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    _check_cap(n, qubit_cap)
    dim = 1 << n
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)


def _n_qubits(state: np.ndarray) -> int:
    n = int(state.size).bit_length() - 1
    if state.ndim != 1 or state.size != 1 << n:
        raise ValueError(f"state length {state.size} is not a power of two")
    return n


def apply_cost_phase(state: np.ndarray, cost: CostModel, gamma: float) -> np.ndarray:
    n = _n_qubits(state)
    if n != cost.n_vars:
        raise ValueError(f"state has {n} qubits, cost has {cost.n_vars} variables")
    return _phase(state, cost.spectrum(), gamma)


def _phase(state: np.ndarray, energies: np.ndarray, gamma: float) -> np.ndarray:
    return state * np.exp(-1j * gamma * energies)


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply ``Rx(2 beta)`` to every qubit."""
    n = _n_qubits(state)
    c, s = math.cos(beta), -1j * math.sin(beta)
    out = np.array(state, dtype=complex, copy=True)
    for q in range(n):
        view = out.reshape(-1, 2, 1 << q)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] *= c
        view[:, 0, :] += s * a1
        a1 *= c
        a1 += s * a0
    return out


def simulate(cost: CostModel, params: QaoaParams, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    state = uniform_state(cost.n_vars, qubit_cap)
    if params.depth == 0:
        return state
    energies = cost.spectrum()
    return _evolve(state, energies, params.gammas, params.betas)


def _evolve(state: np.ndarray, energies: np.ndarray, gammas: Sequence[float], betas: Sequence[float]) -> np.ndarray:
    for g, b in zip(gammas, betas):
        state = apply_mixer(_phase(state, energies, g), b)
    return state


def expected_energy(state: np.ndarray, cost: CostModel) -> float:
    if state.size != 1 << cost.n_vars:
        raise ValueError("state dimension does not match cost model")
    return float(np.dot(np.abs(state) ** 2, cost.spectrum()))


def _initial_points(depth: int) -> list[np.ndarray]:
    points = []
    for g0, b0 in _STARTS:
        frac = (np.arange(depth) + 0.5) / depth
        points.append(np.concatenate([g0 * frac, b0 * (1.0 - frac)]))
    return points


def optimize_params(cost: CostModel, config: QaoaConfig) -> QaoaParams:
    """Nelder-Mead over ``(gammas, betas)`` from three fixed starts.

    The evaluation budget ``config.optimizer_max_evals`` is shared between the
    starts. Gammas are searched in units of ``1/std(E)`` so the starting points
    are meaningful regardless of the cost scale.
    """
    params, _ = _optimize(cost, config)
    return params


def _optimize(cost: CostModel, config: QaoaConfig) -> tuple[QaoaParams, int]:
    n = cost.n_vars
    _check_cap(n, config.qubit_cap)
    p = config.depth
    energies = cost.spectrum()
    spread = float(energies.std())
    scale = 1.0 / spread if spread > 1e-12 else 1.0
    psi0 = uniform_state(n, config.qubit_cap)
    probs_scratch = np.empty(energies.size)
    evals = 0

    def objective(theta: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        psi = _evolve(psi0, energies, theta[:p] * scale, theta[p:])
        np.abs(psi, out=probs_scratch)
        return float(np.dot(probs_scratch * probs_scratch, energies))

    starts = _initial_points(p)
    per_start = max(1, config.optimizer_max_evals // len(starts))
    best_theta, best_val = None, math.inf
    for x0 in starts:
        val0 = objective(x0)
        if val0 < best_val:
            best_theta, best_val = x0, val0
        if spread <= 1e-12:
            continue
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxfev": per_start, "xatol": 1e-4, "fatol": 1e-9 * max(1.0, spread)},
        )
        if res.fun < best_val:
            best_theta, best_val = np.asarray(res.x), float(res.fun)
    params = QaoaParams(tuple(best_theta[:p] * scale), tuple(best_theta[p:]))
    return params, evals


def sample(state: np.ndarray, cost: CostModel, shots: int, seed: int | np.random.Generator) -> SampleSet:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    n = _n_qubits(state)
    probs = np.abs(state) ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    hit = np.flatnonzero(counts)
    energies = cost.spectrum()[hit]
    items = [Sample(index_to_bits(int(i), n), int(counts[i]), float(e)) for i, e in zip(hit, energies)]
    items.sort(key=lambda s: (s.energy, s.bitstring))
    return SampleSet(tuple(items))


def qaoa_minimize(cost: CostModel, config: QaoaConfig = QaoaConfig()) -> QaoaOutcome:
    """Optimize, simulate and sample; return the lowest-energy measured bitstring.

    Problems above ``config.qubit_cap`` are solved classically instead: exact
    enumeration up to 26 variables, seeded greedy bit-flip descent beyond.
    """
    n = cost.n_vars
    if n > config.qubit_cap:
        if n <= BRUTE_FORCE_CAP:
            x, e = brute_force_minimize(cost)
            tag = "classical-fallback:brute-force"
        else:
            x, e = greedy_descent(cost, np.random.default_rng(config.seed))
            tag = "classical-fallback:greedy"
        return QaoaOutcome(x, e, SampleSet((Sample(x, config.shots, e),)), None, tag)
    params, evals = _optimize(cost, config)
    state = simulate(cost, params, config.qubit_cap)
    samples = sample(state, cost, config.shots, config.seed)
    best = samples.samples[0]
    return QaoaOutcome(best.bitstring, best.energy, samples, params, None, evals)
