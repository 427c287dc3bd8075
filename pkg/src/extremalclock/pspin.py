"""The p-spin environment on the hypercube and its comparison machinery.

The Hamiltonian is the full i.i.d. coupling-tensor form

    H_n(x) = n^{(1-p)/2} sum_{i_1..i_p} J_{i_1..i_p} x_{i_1} ... x_{i_p},

whose covariance is exactly n * R(x, x')^p with the normalized overlap
R = 1 - 2 dist(x, x')/n.  Trap depths are tau(x) = exp(beta H(x)),
handled exclusively as log tau = beta H.  On top of the environment the
module provides:

* ``make_schedule`` -- the rescaling sequences gamma = n^{-c},
  alpha = gamma/beta, a_n, log c_n = gamma beta n, theta_n = 3 n^2 and
  the sub-block length v_n = round(n^omega);
* ``H1BlockProcess`` -- the decoupled comparison process with
  within-block covariance 1 - 2p|i-j|/n (PSD-repaired when needed) and
  independence across blocks;
* ``block_max_tail`` -- the block-maximum tail probabilities with and
  without exponential marks;
* ``thin_indices`` -- Bernoulli(gamma^2 log n) index dilution;
* ``gaussian_comparison_rhs`` / ``max_cdf_mc`` -- the normal-comparison
  upper bound and the Monte Carlo max-CDF it dominates;
* ``HypercubeSRW`` / ``PSpinEnvironment`` -- the jump-chain model and
  environment oracle consumed by the generic engine, with vectorised
  kernels for p in {2, 3} that advance thousands of replicas per numpy
  pass using O(n^{p-1}) incremental Hamiltonian updates.

States are length-n numpy vectors with entries +-1 (float for BLAS).
"""

from __future__ import annotations

import hashlib
import itertools
import math
import struct
import threading
import warnings
from collections import OrderedDict

import numpy as np
from scipy.integrate import quad

from . import engine
from .engine import EnvironmentOracle, JumpChainModel, ScalingSchedule, BlockStats
from .stats import MCAccumulator

__all__ = [
    "TensorBudgetError",
    "NumericalError",
    "IntegrityError",
    "PSpinInstance",
    "build_instance",
    "hamiltonian",
    "delta_flip",
    "tau",
    "overlap",
    "srw_step",
    "make_schedule",
    "H1BlockProcess",
    "sample_h1_block",
    "sample_h1_process",
    "block_max_tail",
    "thin_indices",
    "gaussian_comparison_rhs",
    "max_cdf_mc",
    "save_instance",
    "load_instance",
    "sample_hamiltonians",
    "HypercubeSRW",
    "PSpinEnvironment",
]

GENERATOR_ID = "philox-normal-v1"
DEFAULT_TENSOR_BUDGET = 4 * 1024 ** 3  # bytes
DEFAULT_CACHE_SIZE = 2 ** 22


class TensorBudgetError(MemoryError):
    """Requested coupling tensor exceeds the memory budget."""


class NumericalError(RuntimeError):
    """Covariance factorisation failed beyond repair."""


class IntegrityError(RuntimeError):
    """Persisted instance does not match its regenerated tensor."""


def _as_spins(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("spin state must be a 1-d vector")
    if not np.all(np.abs(arr) == 1.0):
        raise ValueError("spin entries must be +-1")
    return arr


class PSpinInstance:
    """Immutable p-spin environment: coupling tensor plus (beta, gamma).

    The tensor is regenerated deterministically from (n, p, seed) by a
    Philox stream, so persistence stores only the header.  Hamiltonian
    values are memoised per visited state in a bounded LRU map held in
    thread-local storage (the instance itself is shareable).
    """

    def __init__(self, n: int, p: int, seed: int, tensor: np.ndarray,
                 beta: float = 1.0, c: float = 0.25,
                 cache_size: int = DEFAULT_CACHE_SIZE):
        self.n = n
        self.p = p
        self.seed = seed
        self.tensor = tensor
        self.tensor.setflags(write=False)
        self.beta = float(beta)
        self.c = float(c)
        self.gamma = float(n) ** (-c)
        self.scale = float(n) ** ((1 - p) / 2.0)
        self.cache_size = cache_size
        self._tls = threading.local()
        self._sym = None
        self._sym_diag2 = None
        self._sym_diag3 = None

    def _cache(self) -> OrderedDict:
        cache = getattr(self._tls, "cache", None)
        if cache is None:
            cache = OrderedDict()
            self._tls.cache = cache
        return cache

    def cache_put(self, key: bytes, value: float) -> None:
        cache = self._cache()
        cache[key] = value
        cache.move_to_end(key)
        if len(cache) > self.cache_size:
            cache.popitem(last=False)

    def cache_get(self, key: bytes):
        cache = self._cache()
        value = cache.get(key)
        if value is not None:
            cache.move_to_end(key)
        return value

    def symmetric_tensor(self) -> np.ndarray:
        """Symmetrised couplings (same Hamiltonian, axis-exchangeable).

        Built lazily; only the vectorised walkers need it.  Doubles the
        tensor memory while alive.
        """
        if self._sym is None:
            J = self.tensor
            if self.p == 2:
                self._sym = (J + J.T) / 2.0
            elif self.p == 3:
                acc = np.zeros_like(J)
                for perm in itertools.permutations(range(3)):
                    acc += J.transpose(perm)
                self._sym = acc / 6.0
                n = self.n
                idx = np.arange(n)
                self._sym_diag2 = self._sym[idx, idx, :]   # S[k,k,l]
                self._sym_diag3 = self._sym[idx, idx, idx]  # S[k,k,k]
            else:
                raise ValueError(f"symmetrised walker kernels support p in {{2,3}}, got {self.p}")
        return self._sym

    def head_hash(self) -> bytes:
        return hashlib.sha256(self.tensor.ravel()[:64].tobytes()).digest()


def _tensor_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def build_instance(n: int, p: int, seed: int, beta: float = 1.0, c: float = 0.25,
                   memory_budget: int = DEFAULT_TENSOR_BUDGET) -> PSpinInstance:
    """Draw the n^p i.i.d. standard-Gaussian couplings for size n.

    The covariance E H(x)H(x') = n R^p holds exactly in distribution
    for this construction.  Raises TensorBudgetError with the maximum
    feasible n when n^p doubles exceed ``memory_budget``.
    """
    if n < 2 or p < 2:
        raise ValueError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
    needed = 8 * n ** p
    if needed > memory_budget:
        max_n = int((memory_budget / 8) ** (1.0 / p))
        raise TensorBudgetError(
            f"tensor for n={n}, p={p} needs {needed} bytes > budget {memory_budget}; "
            f"max feasible n for p={p} is {max_n}"
        )
    tensor = _tensor_rng(seed).standard_normal(n ** p).reshape((n,) * p)
    return PSpinInstance(n=n, p=p, seed=seed, tensor=tensor, beta=beta, c=c)


def hamiltonian(inst: PSpinInstance, x) -> float:
    """Full tensor contraction H(x), memoised per visited state."""
    arr = _as_spins(x)
    key = arr.tobytes()
    hit = inst.cache_get(key)
    if hit is not None:
        return hit
    sub = inst.tensor
    for _ in range(inst.p):
        sub = sub @ arr
    value = float(inst.scale * sub)
    inst.cache_put(key, value)
    return value


def delta_flip(inst: PSpinInstance, x, coordinate: int, h_old: float) -> float:
    """H of x with one coordinate flipped, at cost O(n^{p-1}).

    Multilinear expansion in the perturbation d = -2 x_k: for every
    nonempty subset of tensor axes pinned to index k, contract the
    remaining axes with x and weight by d^{|subset|}.
    """
    arr = _as_spins(x)
    k = int(coordinate)
    if not 0 <= k < inst.n:
        raise ValueError(f"coordinate {k} out of range for n={inst.n}")
    d = -2.0 * arr[k]
    delta = 0.0
    for r in range(1, inst.p + 1):
        weight = d ** r
        for axes in itertools.combinations(range(inst.p), r):
            index = tuple(k if a in axes else slice(None) for a in range(inst.p))
            sub = inst.tensor[index]
            for _ in range(inst.p - r):
                sub = sub @ arr
            delta += weight * float(sub)
    h_new = h_old + inst.scale * delta
    flipped = arr.copy()
    flipped[k] = -flipped[k]
    inst.cache_put(flipped.tobytes(), h_new)
    return h_new


def tau(inst: PSpinInstance, x) -> float:
    """log tau(x) = beta * H(x); trap depths exist only in log form."""
    return inst.beta * hamiltonian(inst, x)


def overlap(x, y) -> float:
    """Normalised overlap 1 - 2 dist(x,y)/n = <x,y>/n."""
    a = _as_spins(x)
    b = _as_spins(y)
    if a.shape != b.shape:
        raise ValueError(f"state lengths differ: {a.shape} vs {b.shape}")
    return float(a @ b) / a.size


def srw_step(x, rng: np.random.Generator) -> np.ndarray:
    """One simple-random-walk step: flip a uniformly chosen coordinate."""
    arr = _as_spins(x)
    out = arr.copy()
    k = int(rng.integers(arr.size))
    out[k] = -out[k]
    return out


def make_schedule(n: int, p: int, c: float, beta: float) -> ScalingSchedule:
    """Rescaling schedule for the p-spin SRW at inverse temperature beta.

    gamma = n^{-c}, alpha = gamma/beta, a_n = sqrt(2 pi n) gamma^{-1}
    exp(gamma^2 n / 2), log c_n = gamma beta n, theta_n = 3 n^2, and
    v_n = round(n^omega) with omega the midpoint of (c + 1/2, 1).
    Warns when alpha >= 1 (the asymptotic regime is not entered; the
    schedule type itself rejects alpha > 1).
    """
    if not 0.0 < c < 0.5:
        raise ValueError(f"c must lie in (0, 1/2), got {c}")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    gamma = float(n) ** (-c)
    alpha = gamma / beta
    if alpha >= 1.0:
        warnings.warn(
            f"alpha_n = {alpha:.6g} >= 1: power transform leaves the subadditive "
            "regime; asymptotic statements do not apply", stacklevel=2)
    exponent = gamma * gamma * n / 2.0
    if exponent > 700.0:
        raise ValueError(f"a_n overflows (gamma^2 n / 2 = {exponent:.3g}); n too large for this c")
    a_n = math.sqrt(2.0 * math.pi * n) / gamma * math.exp(exponent)
    omega = (c + 1.5) / 2.0
    v_n = max(1, int(round(float(n) ** omega)))
    return ScalingSchedule(
        n=n, a_n=a_n, log_c_n=gamma * beta * n, theta_n=3 * n * n,
        alpha_n=alpha, v_n=v_n, p=p, beta=beta, gamma=gamma, c_exponent=c,
    )


# ---------------------------------------------------------------------------
# decoupled comparison process H^1


def _repair_covariance(delta: np.ndarray):
    """Clip negative eigenvalues, renormalise the diagonal to 1.

    Returns (repaired matrix, Frobenius distance to the input).
    """
    w, v = np.linalg.eigh(delta)
    if np.all(w >= 0.0):
        return delta, 0.0
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.T
    diag = np.diag(m).copy()
    if np.any(diag <= 0.0):
        raise NumericalError("PSD repair produced a non-positive diagonal entry")
    scale = 1.0 / np.sqrt(diag)
    repaired = m * scale[:, None] * scale[None, :]
    repaired = (repaired + repaired.T) / 2.0
    return repaired, float(np.linalg.norm(repaired - delta))


class H1BlockProcess:
    """Block-independent Gaussian comparison process.

    Within a block of length v_n the covariance is the linearised
    overlap decay Delta^1_{ij} = 1 - 2p|i-j|/n; distinct blocks are
    independent.  For block lengths that are large relative to n the
    printed matrix is indefinite; it is repaired by eigenvalue clipping
    with diagonal renormalisation, and ``repair_distance`` records the
    Frobenius-norm change (0 when no repair was needed).
    """

    def __init__(self, n: int, p: int, v_n: int):
        if v_n < 1:
            raise ValueError(f"block length must be >= 1, got {v_n}")
        self.n = n
        self.p = p
        self.v_n = v_n
        idx = np.arange(v_n)
        delta = 1.0 - 2.0 * p * np.abs(idx[:, None] - idx[None, :]) / n
        np.fill_diagonal(delta, 1.0)
        self.raw = delta
        self.covariance, self.repair_distance = _repair_covariance(delta)
        w, v = np.linalg.eigh(self.covariance)
        if np.any(w < -1e-10):
            raise NumericalError("covariance still indefinite after repair")
        self._factor = v * np.sqrt(np.clip(w, 0.0, None))

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """(size, v_n) draws of one block."""
        z = rng.standard_normal((size, self.v_n))
        return z @ self._factor.T


def sample_h1_block(n: int, p: int, v_n: int, rng: np.random.Generator) -> np.ndarray:
    """Single block draw; see H1BlockProcess for the covariance."""
    return H1BlockProcess(n, p, v_n).sample(rng, 1)[0]


def sample_h1_process(n: int, p: int, v_n: int, length: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Concatenated independent blocks covering ``length`` indices.

    length need not divide into whole blocks; the final partial block
    is a truncated draw of a full block (leading-submatrix covariance).
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    proc = H1BlockProcess(n, p, v_n)
    n_blocks = -(-length // v_n)
    draws = proc.sample(rng, n_blocks)
    return draws.reshape(-1)[:length]


def block_max_tail(u: float, process, index_set, sched: ScalingSchedule,
                   reps: int, rng: np.random.Generator,
                   with_marks: bool = False) -> MCAccumulator:
    """Tail of the block maximum: P(max_{i in I} e^{sqrt(n) beta U_i} > u^{1/alpha} c_n).

    ``process`` must expose ``sample(rng, size) -> (size, L)`` with unit
    variance marginals U_i (H1BlockProcess does); ``index_set`` uses the
    1-based convention of the block {1, ..., v_n}.  With
    ``with_marks=True`` each term carries an independent Exp(1) factor.
    Comparison happens in the log domain.
    """
    if sched.beta is None:
        raise ValueError("schedule carries no beta; build it with make_schedule")
    idx = np.asarray(sorted(index_set), dtype=int)
    if idx.size == 0 or idx[0] < 1:
        raise ValueError("index set must be nonempty with 1-based indices")
    cols = idx - 1
    log_threshold = sched.log_threshold(u)
    scale = math.sqrt(sched.n) * sched.beta
    acc = MCAccumulator()
    chunk = 65536
    remaining = reps
    while remaining > 0:
        m = min(chunk, remaining)
        draws = process.sample(rng, m)
        if draws.shape[1] < idx[-1]:
            raise ValueError(f"process of length {draws.shape[1]} cannot cover index {idx[-1]}")
        terms = scale * draws[:, cols]
        if with_marks:
            terms = terms + np.log(rng.standard_exponential(terms.shape))
        acc.update_many((terms.max(axis=1) > log_threshold).astype(float))
        remaining -= m
    return acc


def thin_indices(k: int, n: int, rng: np.random.Generator, *, gamma: float) -> np.ndarray:
    """Bernoulli-diluted index set over {1, ..., k}.

    Inclusion rate gamma^2 rho_n with rho_n = log n, the minimal
    diverging choice.  The rate must not exceed 1.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    rate = gamma * gamma * math.log(n)
    if rate < 0.0 or rate > 1.0:
        raise ValueError(f"thinning rate gamma^2 log n = {rate:.6g} outside [0, 1]")
    if rate == 0.0 or k == 0:
        return np.empty(0, dtype=int)
    keep = rng.random(k) < rate
    return np.nonzero(keep)[0] + 1


# ---------------------------------------------------------------------------
# Gaussian comparison (normal comparison inequality, upper bound form)


def _check_comparison_matrix(delta: np.ndarray, name: str) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(delta, delta.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if not np.allclose(np.diag(delta), 1.0, atol=1e-12):
        raise ValueError(f"{name} must have unit diagonal")
    if np.min(np.linalg.eigvalsh(delta)) < -1e-10:
        raise ValueError(f"{name} must be positive semi-definite")
    return delta


def gaussian_comparison_rhs(delta0, delta1, s: float) -> float:
    """Upper bound on P(max H^0 <= s) - P(max H^1 <= s).

    sum over ordered pairs i != j of (D0_ij - D1_ij)^+ *
    exp(-s^2/(1 + Dmax_ij)) * int_0^1 (1 - (Dh_ij)^2)^{-1/2} dh,
    with Dh the linear interpolation.  The h-integral uses adaptive
    quadrature at relative tolerance 1e-8.  Entries with |Dh| reaching
    1 on the path make the integral singular and are rejected.
    """
    d0 = _check_comparison_matrix(delta0, "delta0")
    d1 = _check_comparison_matrix(delta1, "delta1")
    if d0.shape != d1.shape:
        raise ValueError("covariance matrices must share a shape")
    dim = d0.shape[0]
    total = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            diff = d0[i, j] - d1[i, j]
            pos = max(diff, 0.0)
            if pos == 0.0:
                continue
            # interpolation path is the segment [d1_ij, d0_ij]
            if max(abs(d0[i, j]), abs(d1[i, j])) >= 1.0:
                raise ValueError(
                    f"|interpolated correlation| reaches 1 at entry ({i},{j}); integral singular")
            dmax = max(d0[i, j], d1[i, j])
            a, b = d0[i, j], d1[i, j]
            integral, _ = quad(
                lambda h: 1.0 / math.sqrt(1.0 - (h * a + (1.0 - h) * b) ** 2),
                0.0, 1.0, epsabs=0.0, epsrel=1e-8)
            # ordered pairs (i,j) and (j,i) contribute identically
            total += 2.0 * pos * math.exp(-s * s / (1.0 + dmax)) * integral
    return total


def max_cdf_mc(delta, s: float, reps: int, rng: np.random.Generator) -> MCAccumulator:
    """Monte Carlo estimate of P(max_i H_i <= s) for H ~ N(0, delta)."""
    d = _check_comparison_matrix(delta, "delta")
    w, v = np.linalg.eigh(d)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    acc = MCAccumulator()
    chunk = 65536
    remaining = reps
    while remaining > 0:
        m = min(chunk, remaining)
        z = rng.standard_normal((m, d.shape[0]))
        samples = z @ factor.T
        acc.update_many((samples.max(axis=1) <= s).astype(float))
        remaining -= m
    return acc


# ---------------------------------------------------------------------------
# persistence: header-only binary format, tensor regenerated from the seed

_MAGIC = b"PSPN"
_HEADER = struct.Struct("<4sIQQQ32s32s")


def save_instance(inst: PSpinInstance, path) -> None:
    """Write the (n, p, seed, generator id, head hash) header.

    The tensor itself is never stored; loading regenerates it and
    checks the hash of the first 64 entries.
    """
    gen = GENERATOR_ID.encode("ascii").ljust(32, b"\0")
    blob = _HEADER.pack(_MAGIC, 1, inst.n, inst.p, inst.seed, gen, inst.head_hash())
    with open(path, "wb") as fh:
        fh.write(blob)


def load_instance(path, beta: float = 1.0, c: float = 0.25,
                  memory_budget: int = DEFAULT_TENSOR_BUDGET) -> PSpinInstance:
    """Regenerate a persisted instance and verify its integrity.

    beta and c are run parameters, not part of the persisted identity.
    """
    with open(path, "rb") as fh:
        blob = fh.read(_HEADER.size)
    if len(blob) != _HEADER.size:
        raise IntegrityError("truncated instance file")
    magic, version, n, p, seed, gen, digest = _HEADER.unpack(blob)
    if magic != _MAGIC or version != 1:
        raise IntegrityError(f"unrecognized instance header {magic!r} v{version}")
    gen_id = gen.rstrip(b"\0").decode("ascii")
    if gen_id != GENERATOR_ID:
        raise IntegrityError(f"unknown tensor generator {gen_id!r}")
    inst = build_instance(int(n), int(p), int(seed), beta=beta, c=c,
                          memory_budget=memory_budget)
    if inst.head_hash() != digest:
        raise IntegrityError("tensor head hash mismatch; generator drift?")
    return inst


def sample_hamiltonians(n: int, p: int, states, reps: int,
                        rng: np.random.Generator, chunk: int = 4096) -> np.ndarray:
    """H values at fixed states across `reps` fresh environments.

    Returns a (reps, len(states)) array; column j is H(states[j]) as the
    coupling tensor is redrawn.  Used for covariance verification, where
    building full instances per draw would dominate the cost.
    """
    cols = np.stack([
        # kron(x, x, ..., x) flattens the contraction to one matvec
        _kron_power(_as_spins(x), p) for x in states
    ], axis=1)
    scale = float(n) ** ((1 - p) / 2.0)
    out = np.empty((reps, len(states)))
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        draws = rng.standard_normal((m, n ** p))
        out[done:done + m] = scale * (draws @ cols)
        done += m
    return out


def _kron_power(x: np.ndarray, p: int) -> np.ndarray:
    out = x
    for _ in range(p - 1):
        out = np.kron(out, x)
    return out


# ---------------------------------------------------------------------------
# jump-chain model with vectorised kernels


class PSpinEnvironment(EnvironmentOracle):
    """Environment oracle wrapping an instance: log tau = beta H, C = 2^n."""

    def __init__(self, inst: PSpinInstance):
        self.inst = inst
        self.log_C = inst.n * math.log(2.0)

    def log_tau(self, x) -> float:
        return tau(self.inst, x)


class _BatchWalker:
    """Synchronous SRW replicas with incremental Hamiltonian tracking.

    Holds R spin rows plus the contraction field F that makes each flip
    an O(n) (p=2) or O(n^2) (p=3) update; ``H`` is kept current after
    every step.  Drift from incremental updates is bounded by
    steps * machine epsilon relative to the contraction magnitude,
    negligible for block lengths 3n^2 at desk scale.
    """

    def __init__(self, inst: PSpinInstance, x0: np.ndarray):
        self.inst = inst
        self.X = np.array(x0, dtype=float, copy=True)
        if self.X.ndim != 2 or self.X.shape[1] != inst.n:
            raise ValueError("start states must form an (R, n) array")
        self.S = inst.symmetric_tensor()
        self._recompute()

    def _recompute(self) -> None:
        inst, X = self.inst, self.X
        if inst.p == 2:
            self.F = X @ self.S
        else:
            # F[r, i] = sum_{j,l} S[i,j,l] x_j x_l
            t = np.tensordot(X, self.S, axes=([1], [2]))  # (R, i, j)
            self.F = np.einsum("rij,rj->ri", t, X)
        self.K = np.einsum("ri,ri->r", self.F, self.X)
        self.H = inst.scale * self.K

    @property
    def R(self) -> int:
        return self.X.shape[0]

    def step(self, rng: np.random.Generator) -> None:
        inst = self.inst
        R, n = self.X.shape
        rows = np.arange(R)
        k = rng.integers(0, n, R)
        d = -2.0 * self.X[rows, k]
        if inst.p == 2:
            s_rows = self.S[k]  # (R, n)
            dk = 2.0 * d * self.F[rows, k] + d * d * self.S[k, k]
            self.F += d[:, None] * s_rows
        else:
            a = self.F[rows, k]
            sd2 = inst._sym_diag2[k]           # (R, n): S[k,k,l]
            b = np.einsum("rl,rl->r", sd2, self.X)
            c3 = inst._sym_diag3[k]
            dk = 3.0 * d * a + 3.0 * d * d * b + d ** 3 * c3
            m = self.S.transpose(1, 0, 2)[k]   # (R, n, n): S[i, k_r, l]
            self.F += (2.0 * d)[:, None] * np.einsum("ril,rl->ri", m, self.X) \
                + (d * d)[:, None] * sd2
        self.K += dk
        self.X[rows, k] += d
        self.H = inst.scale * self.K

    def restrict(self, keep: np.ndarray) -> "_BatchWalker":
        w = object.__new__(_BatchWalker)
        w.inst = self.inst
        w.S = self.S
        w.X = self.X[keep]
        w.F = self.F[keep]
        w.K = self.K[keep]
        w.H = self.H[keep]
        return w


class HypercubeSRW(JumpChainModel):
    """Simple random walk on {-1,+1}^n with uniform invariant measure.

    Implements the generic jump-chain interface plus vectorised hooks
    (block statistics, two-time overlaps, stationary rate sampling) that
    the condition estimators pick up automatically for p in {2, 3}
    environments; anything else falls back to the reference loops.
    """

    period = 2

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self.n = n
        self._log_pi = -n * math.log(2.0)

    def initial_state(self, rng):
        return rng.integers(0, 2, self.n).astype(float) * 2.0 - 1.0

    def next_state(self, x, rng):
        return srw_step(x, rng)

    def log_pi(self, x) -> float:
        return self._log_pi

    def overlap(self, x, y) -> float:
        return overlap(x, y)

    def sample_stationary(self, reps: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, (reps, self.n)).astype(float) * 2.0 - 1.0

    def step_batch(self, states: np.ndarray, rng: np.random.Generator,
                   steps: int = 1) -> np.ndarray:
        """Advance every row `steps` SRW flips (no environment needed)."""
        X = np.array(states, dtype=float, copy=True)
        rows = np.arange(X.shape[0])
        for _ in range(steps):
            k = rng.integers(0, self.n, X.shape[0])
            X[rows, k] = -X[rows, k]
        return X

    def _fast_env(self, env) -> PSpinInstance | None:
        if isinstance(env, PSpinEnvironment) and env.inst.p in (2, 3) \
                and env.inst.n == self.n:
            return env.inst
        return None

    def _rate_offset(self, env) -> float:
        # log lambda^{-1} = beta H - log C - log pi
        return -env.log_C - self._log_pi

    def batch_log_inv_rates(self, env, states) -> np.ndarray:
        """log lambda^{-1} at each given state."""
        inst = self._fast_env(env)
        if inst is None:
            return np.asarray([
                engine.log_inverse_rate(env, self, x) for x in states
            ])
        X = np.asarray(states, dtype=float)
        out = np.empty(X.shape[0])
        done = 0
        while done < X.shape[0]:
            m = min(8192, X.shape[0] - done)
            out[done:done + m] = inst.beta * _BatchWalker(inst, X[done:done + m]).H
            done += m
        return out + self._rate_offset(env)

    def stationary_log_inv_rates(self, env, reps: int,
                                 rng: np.random.Generator) -> np.ndarray:
        """log lambda^{-1}(x) for reps stationary draws (no stepping)."""
        inst = self._fast_env(env)
        if inst is None:
            return np.asarray([
                engine.log_inverse_rate(env, self, self.initial_state(rng))
                for _ in range(reps)
            ])
        out = np.empty(reps)
        done = 0
        while done < reps:
            m = min(8192, reps - done)
            X = self.sample_stationary(m, rng)
            out[done:done + m] = inst.beta * _BatchWalker(inst, X).H
            done += m
        return out + self._rate_offset(env)

    def block_statistics(self, env, theta: int, reps: int, rng: np.random.Generator,
                         starts=None, want_max: bool = False,
                         want_end: bool = False) -> BlockStats:
        inst = self._fast_env(env)
        if inst is None:
            return engine.generic_block_statistics(
                self, env, theta, reps, rng, starts=starts,
                want_max=want_max, want_end=want_end)
        offset = self._rate_offset(env)
        chunk = 8192 if inst.p == 2 else max(256, 2_000_000 // (self.n * self.n))
        log_sums = np.empty(reps)
        log_maxes = np.empty(reps) if want_max else None
        ends = np.empty((reps, self.n)) if want_end else None
        done = 0
        while done < reps:
            m = min(chunk, reps - done)
            if starts is None:
                x0 = self.sample_stationary(m, rng)
            else:
                x0 = np.asarray(starts[done:done + m], dtype=float)
            walker = _BatchWalker(inst, x0)
            ls = np.full(m, -math.inf)
            lm = np.full(m, -math.inf)
            for _ in range(theta):
                walker.step(rng)
                term = inst.beta * walker.H + offset \
                    + np.log(rng.standard_exponential(m))
                np.logaddexp(ls, term, out=ls)
                np.maximum(lm, term, out=lm)
            log_sums[done:done + m] = ls
            if want_max:
                log_maxes[done:done + m] = lm
            if want_end:
                ends[done:done + m] = walker.X
            done += m
        return BlockStats(log_sums=log_sums, log_maxes=log_maxes, end_states=ends)

    def correlation_overlaps(self, env, log_t1: float, log_t2: float, reps: int,
                             rng: np.random.Generator, step_budget: int):
        inst = self._fast_env(env)
        if inst is None:
            return engine.generic_correlation_overlaps(
                self, env, log_t1, log_t2, reps, rng, step_budget)
        offset = self._rate_offset(env)
        n = self.n
        x_first = np.zeros((reps, n))
        have1 = np.zeros(reps, dtype=bool)
        overlaps = np.full(reps, np.nan)
        walker = _BatchWalker(inst, self.sample_stationary(reps, rng))
        cum = np.full(reps, -math.inf)
        alive = np.arange(reps)  # output row of each walker row
        for _ in range(step_budget):
            term = inst.beta * walker.H + offset \
                + np.log(rng.standard_exponential(walker.R))
            nxt = np.logaddexp(cum, term)
            cross1 = ~have1 & (nxt > log_t1)
            if np.any(cross1):
                x_first[alive[cross1]] = walker.X[cross1]
                have1 |= cross1
            cross2 = nxt > log_t2
            if np.any(cross2):
                rows = alive[cross2]
                overlaps[rows] = np.einsum(
                    "ri,ri->r", x_first[rows], walker.X[cross2]) / n
                keep = ~cross2
                if not np.any(keep):
                    break
                walker = walker.restrict(keep)
                alive = alive[keep]
                cum = nxt[keep]
                have1 = have1[keep]
            else:
                cum = nxt
            walker.step(rng)
        finished = ~np.isnan(overlaps)
        return overlaps[finished], int(reps - finished.sum())
