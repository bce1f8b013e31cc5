"""Small dense quantum core: states, measurements, operations, entropies."""

import logging
import math
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from qkdsec.core import cinfo
from qkdsec.core.config import HERMITIAN_TOL, MAX_TOTAL_DIM, MIN_OUTCOME_PROB, PROB_TOL
from qkdsec.core.exceptions import CapacityError, InvalidInputError, UnsupportedError
from qkdsec.schemas.distributions import ProbDist
from qkdsec.schemas.quantum import (
    DensityOperator,
    DensityRangeSpec,
    MeasurementConstraint,
    Povm,
    QuantumOperation,
)

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Pauli label order used by Bell-diagonal error tables: I, Z, X, Y
PAULI_LABELS = "IZXY"
PAULIS = (PAULI_I, PAULI_Z, PAULI_X, PAULI_Y)

BELL_LABELS = ("psi+", "psi-", "phi+", "phi-")

# rows: measurement basis Z, X, Y; columns: Pauli label I, Z, X, Y applied to Bob
ERROR_FLIPS = np.array([
    [0, 0, 1, 1],
    [0, 1, 0, 1],
    [0, 1, 1, 0],
], dtype=np.int8)

QUBIT_BASES = {
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "X": (np.array([1, 1], dtype=complex) / SQRT2, np.array([1, -1], dtype=complex) / SQRT2),
    "Y": (np.array([1, 1j], dtype=complex) / SQRT2, np.array([1, -1j], dtype=complex) / SQRT2),
}
BASIS_NAMES = ("Z", "X", "Y")

State = Union[DensityOperator, np.ndarray]


def _matrix(rho: State) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def _check_dims(a: int, b: int, what: str):
    if a != b:
        raise InvalidInputError(f"dimension mismatch in {what}: {a} vs {b}")


def eigenvalues(rho: State) -> np.ndarray:
    """Eigenvalues clamped to [0, 1] and renormalized, descending"""
    if isinstance(rho, DensityOperator):
        return rho.eigenvalues()
    w = np.clip(np.linalg.eigvalsh(_matrix(rho)), 0.0, 1.0)
    return np.sort(w / w.sum())[::-1]


def trace_distance(rho: State, sigma: State) -> float:
    """Half the trace norm of rho - sigma"""
    a, b = _matrix(rho), _matrix(sigma)
    _check_dims(a.shape[0], b.shape[0], "trace distance")
    diff = a - b
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(min(1.0, 0.5 * np.abs(w).sum()))


def trace_distance_pure(phi, psi) -> float:
    """sqrt(1 - |<phi|psi>|^2) for unit vectors"""
    phi = np.asarray(phi, dtype=complex) / np.linalg.norm(phi)
    psi = np.asarray(psi, dtype=complex) / np.linalg.norm(psi)
    return float(math.sqrt(max(0.0, 1.0 - abs(np.vdot(phi, psi)) ** 2)))


def measure(rho: State, povm: Povm) -> ProbDist:
    """Outcome distribution tr(F_z rho) over the POVM labels"""
    m = _matrix(rho)
    _check_dims(m.shape[0], povm.dim, "measurement")
    probs = np.array([np.real(np.trace(e @ m)) for e in povm.elements])
    probs = np.clip(probs, 0.0, None)
    return ProbDist.from_array(povm.labels, probs / probs.sum())


def apply_operation(op: QuantumOperation, rho: State) -> DensityOperator:
    m = _matrix(rho)
    _check_dims(m.shape[0], op.dim, "quantum operation")
    out = sum(k @ m @ k.conj().T for k in op.kraus)
    return DensityOperator.from_matrix(out)


def projection_disturbance_bound(op: QuantumOperation, rho: State) -> float:
    """sqrt(1 - sum_z |tr(E_z rho)|^2), the disturbance bound for Kraus families"""
    m = _matrix(rho)
    overlap = sum(abs(np.trace(k @ m)) ** 2 for k in op.kraus)
    return float(math.sqrt(max(0.0, 1.0 - overlap)))


def partial_trace(matrix, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in `keep`"""
    m = np.asarray(matrix, dtype=complex)
    dims = list(dims)
    total = int(np.prod(dims))
    _check_dims(m.shape[0], total, "partial trace")
    keep = sorted(keep)
    n = len(dims)
    t = m.reshape(dims + dims)
    # trace out from the highest index so axis positions stay valid
    for sub in sorted(set(range(n)) - set(keep), reverse=True):
        current = t.ndim // 2
        t = np.trace(t, axis1=sub, axis2=sub + current)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def condition_on_outcome(rho: State, povm: Povm, outcome: Any) -> DensityOperator:
    """State on H after measuring the H' factor of rho on H (x) H' and seeing `outcome`"""
    m = _matrix(rho)
    d_b = povm.dim
    if m.shape[0] % d_b:
        raise InvalidInputError(f"state dimension {m.shape[0]} is not a multiple of {d_b}")
    d_a = m.shape[0] // d_b
    element = povm.elements[povm.index(outcome)]
    weighted = np.kron(np.eye(d_a), element) @ m
    c = float(np.real(np.trace(weighted)))
    if c <= MIN_OUTCOME_PROB:
        raise InvalidInputError(f"outcome {outcome!r} has zero probability")
    return DensityOperator.from_matrix(partial_trace(weighted, (d_a, d_b), keep=[0]) / c)


def q_entropy(rho: State, alpha: float, eps: cinfo.Eps = 0.0) -> float:
    """Renyi entropy of the eigenvalue distribution, smoothed over commuting perturbations"""
    spectrum = eigenvalues(rho)
    dist = ProbDist.from_array(range(len(spectrum)), spectrum)
    e = cinfo.eps_value(eps)
    if e == 0:
        return cinfo.renyi_entropy(dist, alpha)
    if alpha == 0 or math.isinf(alpha):
        return cinfo.smooth_renyi(dist, alpha, e)
    raise UnsupportedError(f"smooth quantum entropy supports orders 0 and inf, got {alpha}")


def bloch_vector(rho: State) -> np.ndarray:
    m = _matrix(rho)
    _check_dims(m.shape[0], 2, "Bloch vector")
    return np.array([float(np.real(np.trace(m @ p))) for p in (PAULI_X, PAULI_Y, PAULI_Z)])


def q_entropy_qubit_oracle(rho: State, alpha: float, eps: cinfo.Eps, steps: int = 40) -> float:
    """Smooth entropy of a qubit over the whole trace-distance ball, by a grid over the Bloch ball.

    Order inf maximizes and order 0 minimizes over every state within eps, commuting with rho or not.
    """
    if not (alpha == 0 or math.isinf(alpha)):
        raise UnsupportedError(f"the qubit oracle supports orders 0 and inf, got {alpha}")
    e = cinfo.eps_value(eps)
    r = bloch_vector(rho)
    radii = np.linspace(0.0, 1.0, steps + 1)
    theta = np.linspace(0.0, math.pi, steps + 1)
    phi = np.linspace(0.0, 2 * math.pi, 2 * steps, endpoint=False)
    t, th, ph = np.meshgrid(radii, theta, phi, indexing="ij")
    grid = np.stack([t * np.sin(th) * np.cos(ph), t * np.sin(th) * np.sin(ph), t * np.cos(th)], axis=-1)
    points = [grid.reshape(-1, 3), r[None, :]]
    norm_r = np.linalg.norm(r)
    if norm_r > 0:
        points.append(np.outer(radii, r / norm_r))
    points = np.concatenate(points)
    # qubit trace distance is half the Euclidean distance of Bloch vectors
    inside = 0.5 * np.linalg.norm(points - r, axis=1) <= e + 1e-12
    norms = np.minimum(np.linalg.norm(points[inside], axis=1), 1.0)
    if math.isinf(alpha):
        return float(np.max(-np.log2((1 + norms) / 2)))
    return 0.0 if np.any(norms >= 1 - 1e-12) else 1.0


def von_neumann_entropy(rho: State) -> float:
    return q_entropy(rho, 1.0)


def steer_to_distribution(rho: State, povm: Povm, target: ProbDist) -> DensityOperator:
    """Apply the coupling-based Kraus family that moves measure(rho, F) onto `target`"""
    if not povm.orthogonal:
        raise InvalidInputError("steering requires an orthogonal POVM")
    if tuple(target.alphabet) != tuple(povm.labels):
        raise InvalidInputError("target distribution must be indexed by the POVM labels")
    current = measure(rho, povm)
    joint = cinfo.maximal_coupling(current, target).matrix()
    k = len(povm.labels)
    transition = np.eye(k)
    for z in range(k):
        row_mass = joint[z].sum()
        if row_mass > 1e-15:
            transition[z] = joint[z] / row_mass
    basis = povm.basis_vectors()
    kets = [basis[:, z] for z in range(k)]
    kraus = [sum(math.sqrt(transition[z, z]) * np.outer(kets[z], kets[z].conj()) for z in range(k))]
    for z in range(k):
        for z2 in range(k):
            if z != z2 and transition[z, z2] > 0:
                kraus.append(math.sqrt(transition[z, z2]) * np.outer(kets[z2], kets[z].conj()))
    return apply_operation(QuantumOperation(kraus=tuple(kraus)), rho)


def schur_check(rho: State, povm: Povm) -> bool:
    """Outcome probabilities of an orthogonal measurement are majorized by the spectrum"""
    if not povm.orthogonal:
        raise InvalidInputError("the majorization check needs an orthogonal POVM")
    return cinfo.majorizes(eigenvalues(rho), measure(rho, povm).array)


def bell_states() -> np.ndarray:
    """Columns psi+, psi-, phi+, phi- with psi = (|00> +- |11>), phi = (|01> +- |10>)"""
    return np.array([
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, -1],
        [1, -1, 0, 0],
    ], dtype=complex) / SQRT2


def _check_simplex(lambdas: Sequence[float]) -> np.ndarray:
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (4,) or np.any(lam < -PROB_TOL) or abs(lam.sum() - 1.0) > PROB_TOL:
        raise InvalidInputError(f"Bell weights {tuple(lambdas)} are not a point of the simplex")
    return np.clip(lam, 0.0, None)


def bell_diagonal_state(lambdas: Sequence[float]) -> DensityOperator:
    lam = _check_simplex(lambdas)
    b = bell_states()
    return DensityOperator.from_matrix(b @ np.diag(lam) @ b.conj().T)


def bell_measurement() -> Povm:
    b = bell_states()
    return Povm.from_basis([b[:, i] for i in range(4)], BELL_LABELS)


def qubit_povm(basis: str, flip: bool = False) -> Povm:
    """Projective qubit measurement in Z, X or Y with labels 0/1 (swapped if `flip`)"""
    v0, v1 = QUBIT_BASES[basis]
    labels = (1, 0) if flip else (0, 1)
    return Povm.from_basis([v0, v1], labels)


def tensor_povm(first: Povm, second: Povm) -> Povm:
    """Product measurement with pair labels"""
    elements, labels = [], []
    for la, a in zip(first.labels, first.elements):
        for lb, b in zip(second.labels, second.elements):
            elements.append(np.kron(a, b))
            labels.append((la, lb))
    return Povm(elements=tuple(elements), labels=tuple(labels), orthogonal=first.orthogonal and second.orthogonal)


def mixed_povm(povms: Sequence[Povm], weights: Sequence[float], names: Sequence[Any]) -> Povm:
    """Pick povms[i] with probability weights[i] and report (names[i], *outcome)"""
    if not (len(povms) == len(weights) == len(names)) or abs(sum(weights) - 1.0) > PROB_TOL:
        raise InvalidInputError("mixture needs one weight and name per POVM, weights summing to 1")
    elements, labels = [], []
    for povm, weight, name in zip(povms, weights, names):
        for label, e in zip(povm.labels, povm.elements):
            elements.append(weight * e)
            labels.append((name,) + (label if isinstance(label, tuple) else (label,)))
    return Povm(elements=tuple(elements), labels=tuple(labels))


def basis_pair_povm(basis_a: str, basis_b: str) -> Povm:
    """Alice measures basis_a, Bob basis_b; Bob's Y outcomes are relabelled so psi+ correlates"""
    povm = tensor_povm(qubit_povm(basis_a), qubit_povm(basis_b, flip=(basis_b == "Y")))
    order = [(0, 0), (0, 1), (1, 0), (1, 1)]
    idx = [povm.index(lab) for lab in order]
    return Povm(elements=tuple(povm.elements[i] for i in idx), labels=tuple(order), orthogonal=povm.orthogonal)


def bell_error_rates(lambdas: Sequence[float]) -> Tuple[float, float, float]:
    """Matched-basis error probabilities (Z, X, Y) of a Bell-diagonal state"""
    lam = _check_simplex(lambdas)
    return tuple(float(ERROR_FLIPS[b] @ lam) for b in range(3))


def bell_diagonal_range(constraints: Sequence[MeasurementConstraint] = ()) -> DensityRangeSpec:
    """Bell-diagonal states satisfying the given measurement constraints"""
    b = bell_states()
    points = tuple(DensityOperator.pure(b[:, i]) for i in range(4))
    return DensityRangeSpec(extreme_points=points, constraints=tuple(constraints), label="bell-diagonal")


def purify(rho: State) -> np.ndarray:
    """Vector on H (x) H whose first-factor reduced state is rho"""
    m = _matrix(rho)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    d = m.shape[0]
    vec = np.zeros(d * d, dtype=complex)
    for i in range(d):
        vec += math.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[i])
    return vec


def depolarizing_operation(p: float) -> QuantumOperation:
    """Qubit channel rho -> (1-p) rho + p/3 sum_i sigma_i rho sigma_i"""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"depolarizing probability {p} outside [0, 1]")
    return QuantumOperation(kraus=(
        math.sqrt(1 - p) * PAULI_I,
        math.sqrt(p / 3) * PAULI_X,
        math.sqrt(p / 3) * PAULI_Y,
        math.sqrt(p / 3) * PAULI_Z,
    ))


def extend_operation(op: QuantumOperation, other_dim: int, position: int = 1) -> QuantumOperation:
    """Act with `op` on one factor of a bipartite space (position 0 or 1)"""
    eye = np.eye(other_dim)
    if position == 0:
        kraus = tuple(np.kron(k, eye) for k in op.kraus)
    else:
        kraus = tuple(np.kron(eye, k) for k in op.kraus)
    return QuantumOperation(kraus=kraus)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.ones((1, 1), dtype=complex)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityOperator:
    """Ginibre-distributed density operator"""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real)


def random_orthogonal_povm(dim: int, rng: np.random.Generator) -> Povm:
    u = random_unitary(dim, rng)
    return Povm.from_basis([u[:, i] for i in range(dim)], tuple(range(dim)))


def random_kraus(dim: int, count: int, rng: np.random.Generator) -> QuantumOperation:
    """Kraus family cut from the first `dim` columns of a random unitary"""
    v = random_unitary(dim * count, rng)[:, :dim]
    return QuantumOperation(kraus=tuple(v[i * dim:(i + 1) * dim] for i in range(count)))


def check_total_dim(dim: int):
    if dim > MAX_TOTAL_DIM:
        raise CapacityError(f"dimension {dim} exceeds the cap {MAX_TOTAL_DIM}")


def b92_signal_states(alpha: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """u+, u-, u~+, u~- with u~+ orthogonal to u+ and u~- orthogonal to u-"""
    beta = math.sqrt(1 - alpha ** 2)
    return (np.array([beta, alpha]), np.array([beta, -alpha]),
            np.array([alpha, -beta]), np.array([alpha, beta]))


def b92_environment_vectors(alpha: float, delta: float, e: float, c: float, t: float) -> np.ndarray:
    """Rows e+, e-, e~+, e~- realizing the overlaps, with the cross term fixed by unitarity"""
    beta = math.sqrt(1 - alpha ** 2)
    if delta == 0:
        if abs(e - 1.0) > HERMITIAN_TOL:
            raise InvalidInputError("inconsistent b92 overlaps: an undisturbed channel needs <e+|e-> = 1")
        cross = 0.0
    else:
        cross = (beta ** 2 - alpha ** 2) * (1 - (1 - delta) * e + delta * t) / (
            2 * alpha * beta * math.sqrt(delta * (1 - delta))) if delta < 1 else 0.0
    half = cross / 2
    if abs(half) > 1.0 + HERMITIAN_TOL:
        raise InvalidInputError(f"inconsistent b92 overlaps: cross overlap {half:.6g} outside [-1, 1]")
    gram = np.array([
        [1.0, e, c, half],
        [e, 1.0, half, c],
        [c, half, 1.0, t],
        [half, c, t, 1.0],
    ])
    w, v = np.linalg.eigh(gram)
    if w.min() < -HERMITIAN_TOL:
        raise InvalidInputError(f"inconsistent b92 overlaps: Gram matrix has eigenvalue {w.min():.3g}")
    return v * np.sqrt(np.clip(w, 0.0, None))
