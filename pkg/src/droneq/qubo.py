"""Binary optimization models: QUBO, Ising, and generic pseudo-Boolean costs.

Bit ``j`` of a bitstring maps to bit ``j`` of the basis-state index, so the
integer index of ``x`` is ``sum(x[j] << j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

BRUTE_FORCE_CAP = 26


class CapacityError(ValueError):
    """Raised when a problem exceeds a configured size limit."""


def bit_matrix(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows are the bitstrings with integer index in ``[start, stop)``."""
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> j) & 1 for j in range(n))


def bits_to_index(bits: Sequence[int]) -> int:
    return sum(int(b) << j for j, b in enumerate(bits))


def _check_bits(x: Sequence[int], n: int) -> None:
    if len(x) != n:
        raise ValueError(f"bitstring has length {len(x)}, model has {n} variables")
    if any(b not in (0, 1) for b in x):
        raise ValueError(f"bitstring entries must be 0 or 1, got {list(x)}")


class CostModel:
    """Arbitrary objective over ``n_vars`` binary variables.

    Parameters
    ----------
    n_vars : int
        Number of binary variables.
    evaluator : callable
        Maps a bitstring (tuple of 0/1) to a real value.
    batch_evaluator : callable, optional
        Maps an ``(k, n_vars)`` int8 bit matrix to ``k`` values. Used to build
        the full spectrum quickly; falls back to ``evaluator`` row by row.
    """

    def __init__(
        self,
        n_vars: int,
        evaluator: Callable[[tuple[int, ...]], float],
        batch_evaluator: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> None:
        if n_vars < 0:
            raise ValueError("n_vars must be non-negative")
        # object.__setattr__ so frozen dataclass subclasses can share this init
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "_evaluator", evaluator)
        object.__setattr__(self, "_batch", batch_evaluator)
        object.__setattr__(self, "_spectrum", None)

    def evaluate(self, x: Sequence[int]) -> float:
        _check_bits(x, self.n_vars)
        return float(self._evaluator(tuple(int(b) for b in x)))

    def evaluate_many(self, bits: np.ndarray) -> np.ndarray:
        if self._batch is not None:
            return np.asarray(self._batch(bits), dtype=float)
        return np.array([self._evaluator(tuple(int(b) for b in row)) for row in bits], dtype=float)

    def spectrum(self, cap: int = BRUTE_FORCE_CAP) -> np.ndarray:
        """Energies of all ``2**n_vars`` basis states, indexed little-endian."""
        if self.n_vars > cap:
            raise CapacityError(f"{self.n_vars} variables exceeds enumeration cap {cap}")
        if self._spectrum is None:
            n = self.n_vars
            chunk = 1 << 16
            parts = [
                self.evaluate_many(bit_matrix(n, lo, min(lo + chunk, 1 << n)))
                for lo in range(0, 1 << n, chunk)
            ]
            spec = np.concatenate(parts)
            spec.flags.writeable = False
            object.__setattr__(self, "_spectrum", spec)
        return self._spectrum


@dataclass(frozen=True)
class QuboModel(CostModel):
    """``sum_{j<k} Q[j,k] x_j x_k + sum_j b_j x_j + C`` over ``x in {0,1}^n``.

    Quadratic keys are stored with ``j < k``; entries given as ``(k, j)`` or
    duplicated are folded together on construction.
    """

    n_vars: int
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    linear: Sequence[float] = ()
    constant: float = 0.0

    def __post_init__(self) -> None:
        n = self.n_vars
        if n < 0:
            raise ValueError("n_vars must be non-negative")
        linear = tuple(float(v) for v in self.linear) if self.linear else (0.0,) * n
        if len(linear) != n:
            raise ValueError(f"linear has {len(linear)} entries for {n} variables")
        folded: dict[tuple[int, int], float] = {}
        for (j, k), v in self.quadratic.items():
            j, k = int(j), int(k)
            if j == k:
                raise ValueError(f"diagonal quadratic key ({j}, {k}); put it in linear")
            if not (0 <= j < n and 0 <= k < n):
                raise ValueError(f"quadratic key ({j}, {k}) out of range for {n} variables")
            key = (min(j, k), max(j, k))
            folded[key] = folded.get(key, 0.0) + float(v)
        values = list(folded.values()) + list(linear) + [float(self.constant)]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("QUBO coefficients must be finite")
        object.__setattr__(self, "quadratic", dict(sorted(folded.items())))
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "constant", float(self.constant))
        CostModel.__init__(self, n, self._energy_tuple, self._energy_batch)

    def _energy_tuple(self, x: tuple[int, ...]) -> float:
        e = self.constant
        for j, b in enumerate(self.linear):
            if x[j]:
                e += b
        for (j, k), q in self.quadratic.items():
            if x[j] and x[k]:
                e += q
        return e

    def _energy_batch(self, bits: np.ndarray) -> np.ndarray:
        xf = bits.astype(float)
        e = xf @ np.asarray(self.linear, dtype=float) + self.constant
        for (j, k), q in self.quadratic.items():
            e += q * (bits[:, j] & bits[:, k])
        return e

    def spectrum(self, cap: int = BRUTE_FORCE_CAP) -> np.ndarray:
        """Energies of all basis states, built by doubling one variable at a time."""
        n = self.n_vars
        if n > cap:
            raise CapacityError(f"{n} variables exceeds enumeration cap {cap}")
        if self._spectrum is None:
            column: dict[int, list[tuple[int, float]]] = {}
            for (j, k), q in self.quadratic.items():
                column.setdefault(k, []).append((j, q))
            spec = np.empty(1 << n, dtype=float)
            spec[0] = self.constant
            for k in range(n):
                size = 1 << k
                # couplings of x_k to the lower bits, over the first 2**k states
                field = np.zeros(size)
                for j, q in column.get(k, ()):
                    field.reshape(-1, 2, 1 << j)[:, 1, :] += q
                np.add(spec[:size], field + self.linear[k], out=spec[size:2 * size])
            spec.flags.writeable = False
            object.__setattr__(self, "_spectrum", spec)
        return self._spectrum

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "quadratic": [[j, k, v] for (j, k), v in self.quadratic.items()],
            "linear": list(self.linear),
            "constant": self.constant,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "QuboModel":
        try:
            n = int(doc["n_vars"])
            quad = {(int(j), int(k)): float(v) for j, k, v in doc.get("quadratic", [])}
            return cls(n, quad, [float(v) for v in doc.get("linear", [0.0] * n)], float(doc.get("constant", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed QUBO document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuboModel":
        return cls.from_dict(json.loads(text))

    def __hash__(self) -> int:
        return hash((self.n_vars, tuple(self.quadratic.items()), self.linear, self.constant))


@dataclass(frozen=True)
class IsingModel:
    """``sum_{j<k} J[j,k] z_j z_k + sum_j h_j z_j + offset`` over ``z in {-1,+1}^n``."""

    n_vars: int
    couplings: Mapping[tuple[int, int], float]
    fields: tuple[float, ...]
    offset: float


def qubo_energy(model: QuboModel, x: Sequence[int]) -> float:
    return model.evaluate(x)


def to_ising(model: QuboModel) -> IsingModel:
    """Substitute ``x_j = (1 - z_j) / 2`` into ``model``."""
    h = [-b / 2.0 for b in model.linear]
    offset = model.constant + sum(model.linear) / 2.0
    couplings = {}
    for (j, k), q in model.quadratic.items():
        # x_j x_k = (1 - z_j - z_k + z_j z_k) / 4
        couplings[(j, k)] = q / 4.0
        h[j] -= q / 4.0
        h[k] -= q / 4.0
        offset += q / 4.0
    return IsingModel(model.n_vars, couplings, tuple(h), offset)


def ising_energy(model: IsingModel, z: Sequence[int]) -> float:
    if len(z) != model.n_vars:
        raise ValueError(f"spin vector has length {len(z)}, model has {model.n_vars} spins")
    if any(s not in (-1, 1) for s in z):
        raise ValueError(f"spins must be -1 or +1, got {list(z)}")
    e = model.offset
    for j, h in enumerate(model.fields):
        e += h * z[j]
    for (j, k), c in model.couplings.items():
        e += c * z[j] * z[k]
    return float(e)


def brute_force_minimize(cost: CostModel, cap: int = BRUTE_FORCE_CAP) -> tuple[tuple[int, ...], float]:
    """Exact global minimum by enumeration.

    Ties go to the lexicographically smallest bitstring ``(x_0, x_1, ...)``.
    """
    n = cost.n_vars
    if n > cap:
        raise CapacityError(f"{n} variables exceeds brute-force cap {cap}")
    energies = cost.spectrum(cap=max(cap, n))
    best = float(energies.min())
    ties = np.flatnonzero(energies == best)
    winner = min(index_to_bits(int(i), n) for i in ties)
    return winner, best


def greedy_descent(
    cost: CostModel, rng: np.random.Generator, restarts: int = 8
) -> tuple[tuple[int, ...], float]:
    """Steepest single-bit-flip descent from seeded random starts."""
    n = cost.n_vars
    best_x: tuple[int, ...] | None = None
    best_e = math.inf
    for _ in range(max(1, restarts)):
        x = [int(b) for b in rng.integers(0, 2, size=n)]
        e = cost.evaluate(x)
        while True:
            move, move_e = None, e
            for j in range(n):
                x[j] ^= 1
                ej = cost.evaluate(x)
                x[j] ^= 1
                if ej < move_e:
                    move, move_e = j, ej
            if move is None:
                break
            x[move] ^= 1
            e = move_e
        if e < best_e or (e == best_e and tuple(x) < best_x):
            best_x, best_e = tuple(x), e
    return best_x, best_e


def random_qubo(n: int, rng: np.random.Generator, low: float = -5.0, high: float = 5.0) -> QuboModel:
    quad = {(j, k): rng.uniform(low, high) for j in range(n) for k in range(j + 1, n)}
    return QuboModel(n, quad, rng.uniform(low, high, size=n).tolist(), float(rng.uniform(low, high)))


def all_bitstrings(n: int) -> Iterable[tuple[int, ...]]:
    for i in range(1 << n):
        yield index_to_bits(i, n)
