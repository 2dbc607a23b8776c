"""Transfer-operator thermodynamics for locally constant potentials.

Higher-block recoding turns any memory-``k`` potential into a memory-1
function on a chain whose states are the admissible ``k``-words.  The
weighted transition matrix then carries the full transfer operator, and
pressure, equilibrium (Gibbs) Markov measures, entropy and integrals all
come from its Perron eigendata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .errors import MemoryTooLarge, NoConvergence, NotPrimitive, ValidationError
from .sft import MAX_POTENTIAL_VALUE, Potential, SubshiftSpec, Word, admissible_words


@dataclass(eq=False)
class RecodedChain:
    """Higher-block presentation of a subshift.

    States are the admissible ``block``-words; state ``w`` may step to ``w'``
    iff they overlap in ``block - 1`` symbols and the merged
    ``(block+1)``-word is admissible.  The state at time ``t`` of a point is
    its coordinate window ``t .. t+block-1``.
    """

    base: SubshiftSpec
    block: int
    states: tuple[Word, ...]
    index: dict[Word, int] = field(repr=False)
    adjacency: np.ndarray = field(repr=False)
    #: step[s, a] = state index reached from s by shifting in symbol a, or -1.
    step: np.ndarray = field(repr=False)
    _primitivity: int | None = field(default=None, repr=False)

    @property
    def num_states(self) -> int:
        return len(self.states)

    def last_symbols(self) -> np.ndarray:
        return np.array([w[-1] for w in self.states], dtype=np.int64)

    def successor_lists(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.adjacency[i]) for i in range(self.num_states)]

    def primitivity_power(self) -> int:
        """Smallest q with (adjacency ** q) entrywise positive.

        Raises :class:`NotPrimitive` if no power up to the sharp bound works.
        Recoding a primitive subshift always yields a primitive state graph.
        """
        if self._primitivity is None:
            n = self.num_states
            bound = (n - 1) ** 2 + 1
            power = self.adjacency.astype(bool)
            for k in range(1, bound + 1):
                if power.all():
                    self._primitivity = k
                    break
                power = (power.astype(np.uint8) @ self.adjacency) > 0
            else:
                raise NotPrimitive("recoded state graph is not primitive")
        return self._primitivity


def recode(spec: SubshiftSpec, block: int) -> RecodedChain:
    """Build the ``block``-word chain presentation of the subshift."""
    if block < 1:
        raise ValueError("recoding block must be >= 1")
    states = tuple(admissible_words(spec, block))
    index = {w: i for i, w in enumerate(states)}
    n = len(states)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    step = np.full((n, spec.alphabet_size), -1, dtype=np.int64)
    for i, w in enumerate(states):
        for a in spec.successors(w[-1]):
            j = index[w[1:] + (a,)]
            adjacency[i, j] = 1
            step[i, a] = j
    return RecodedChain(spec, block, states, index, adjacency, step)


def phi_vector(chain: RecodedChain, phi: Potential) -> np.ndarray:
    """Evaluate a potential on every chain state (the state is the window)."""
    if phi.memory > chain.block:
        raise MemoryTooLarge(f"potential memory {phi.memory} exceeds recoding block {chain.block}")
    vec = np.array([phi.value(w) for w in chain.states], dtype=np.float64)
    if np.any(np.abs(vec) > MAX_POTENTIAL_VALUE):
        raise ValidationError(f"potential values exceed magnitude {MAX_POTENTIAL_VALUE}")
    return vec


@dataclass(eq=False)
class WeightedMatrix:
    """Transfer matrix ``M[w, w'] = adjacency(w, w') * exp(phi(w))``.

    Weights sit on the source state, so the row sums of ``M**n`` starting at
    a state accumulate ``exp`` of Birkhoff sums over all words extending it.
    """

    chain: RecodedChain
    matrix: np.ndarray
    phi_by_state: np.ndarray


def transfer_matrix(chain: RecodedChain, phi: Potential) -> WeightedMatrix:
    vec = phi_vector(chain, phi)
    matrix = chain.adjacency.astype(np.float64) * np.exp(vec)[:, None]
    return WeightedMatrix(chain, matrix, vec)


@dataclass
class RPFData:
    """Perron eigendata of a primitive non-negative matrix.

    ``right`` and ``left`` are entrywise positive with ``sum(left) == 1``
    and ``left @ right == 1``; ``residual`` is the achieved relative
    eigen-equation defect.
    """

    eigenvalue: float
    right: np.ndarray
    left: np.ndarray
    residual: float
    iterations: int


def _perron(matrix: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, np.ndarray, float, int]:
    """Power iteration on a matrix and its transpose, with renormalization.

    Primitivity gives a spectral gap, hence geometric convergence; the
    eigenvalue estimate is the Rayleigh quotient of the current pair.
    """
    n = matrix.shape[0]
    h = np.full(n, 1.0 / n)
    v = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        mh = matrix @ h
        vm = v @ matrix
        lam = float(v @ mh) / float(v @ h)
        if lam <= 0 or not math.isfinite(lam):
            raise NoConvergence(f"degenerate eigenvalue estimate {lam}")
        res_h = float(np.max(np.abs(mh - lam * h))) / (lam * float(np.max(h)))
        res_v = float(np.max(np.abs(vm - lam * v))) / (lam * float(np.max(v)))
        if max(res_h, res_v) <= tol:
            return lam, h, v, max(res_h, res_v), it
        h = mh / mh.sum()
        v = vm / vm.sum()
    raise NoConvergence(f"power iteration did not reach residual {tol} in {max_iter} iterations")


def rpf_solve(M: WeightedMatrix, tol: float = 1e-13, max_iter: int = 10 ** 6) -> RPFData:
    """Perron eigenvalue and positive left/right eigenvectors of a transfer matrix."""
    M.chain.primitivity_power()  # raises NotPrimitive on bad input
    lam, h, v, _, it = _perron(M.matrix, tol, max_iter)
    v = v / v.sum()
    h = h / float(v @ h)
    res = max(
        float(np.max(np.abs(M.matrix @ h - lam * h))),
        float(np.max(np.abs(v @ M.matrix - lam * v))),
    ) / lam
    return RPFData(lam, h, v, res, it)


def pressure(spec: SubshiftSpec, phi: Potential, block: int | None = None,
             tol: float = 1e-13) -> float:
    """Topological pressure: log of the Perron eigenvalue of the transfer matrix.

    The value is independent of the recoding block as long as
    ``block >= phi.memory``.
    """
    k = phi.memory if block is None else block
    if k < phi.memory:
        raise MemoryTooLarge(f"block {k} below potential memory {phi.memory}")
    chain = recode(spec, k)
    rpf = rpf_solve(transfer_matrix(chain, phi), tol=tol)
    return math.log(rpf.eigenvalue)


@dataclass(eq=False)
class MarkovMeasure:
    """A shift-invariant Markov measure presented on a recoded chain.

    ``transition`` is a stochastic matrix supported on the chain adjacency;
    ``stationary`` is its stationary probability vector.
    """

    chain: RecodedChain
    transition: np.ndarray
    stationary: np.ndarray


def _polish_stationary(pi: np.ndarray, P: np.ndarray, rounds: int = 64) -> np.ndarray:
    pi = pi / pi.sum()
    for _ in range(rounds):
        nxt = pi @ P
        nxt = nxt / nxt.sum()
        if float(np.max(np.abs(nxt - pi))) < 1e-16:
            return nxt
        pi = nxt
    return pi


def gibbs_measure(rpf: RPFData, M: WeightedMatrix) -> MarkovMeasure:
    """The equilibrium Markov measure built from Perron eigendata.

    ``P[w, w'] = M[w, w'] h[w'] / (lam h[w])`` with stationary vector
    ``pi = left * right``; this measure maximizes entropy plus the integral
    of the potential.
    """
    lam, h, v = rpf.eigenvalue, rpf.right, rpf.left
    P = M.matrix * h[None, :] / (lam * h[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    pi = _polish_stationary(v * h, P)
    return MarkovMeasure(M.chain, P, pi)


def equilibrium_measure(spec: SubshiftSpec, phi: Potential, block: int | None = None,
                        tol: float = 1e-13) -> MarkovMeasure:
    """Convenience: recode, weight, solve and assemble the Gibbs measure."""
    k = phi.memory if block is None else block
    if k < phi.memory:
        raise MemoryTooLarge(f"block {k} below potential memory {phi.memory}")
    chain = recode(spec, k)
    M = transfer_matrix(chain, phi)
    return gibbs_measure(rpf_solve(M, tol=tol), M)


def entropy(mu: MarkovMeasure) -> float:
    """Entropy rate ``-sum_w pi_w sum_w' P log P`` with ``0 log 0 = 0``."""
    P = mu.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(mu.stationary @ plogp.sum(axis=1)))


def integrate(mu: MarkovMeasure, phi: Potential) -> float:
    """Integral of a potential: stationary average of its state values."""
    return float(mu.stationary @ phi_vector(mu.chain, phi))


def variational_gap(spec: SubshiftSpec, pot: Potential, mu: MarkovMeasure) -> float:
    """Pressure minus (integral + entropy) of ``mu``; non-negative, zero only
    at the equilibrium measure of ``pot`` among Markov measures."""
    return pressure(spec, pot) - integrate(mu, pot) - entropy(mu)


def random_markov_measure(chain: RecodedChain, rng: np.random.Generator,
                          concentration: float = 1.0) -> MarkovMeasure:
    """Random fully supported Markov measure on the chain (Dirichlet rows)."""
    n = chain.num_states
    P = np.zeros((n, n))
    for i in range(n):
        succ = np.flatnonzero(chain.adjacency[i])
        P[i, succ] = rng.dirichlet(np.full(len(succ), concentration))
    return MarkovMeasure(chain, P, stationary_distribution(P))


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible stochastic matrix (linear solve)."""
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.maximum(pi, 0.0)
    return _polish_stationary(pi, P)
