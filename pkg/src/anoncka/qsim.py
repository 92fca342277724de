"""Exact statevector simulation for small qubit registers.

Conventions, fixed across the whole package:

* Qubit 0 is the *most significant* bit of a basis index, so for a 4-qubit
  register the index 0b0110 = 6 means ``|q0 q1 q2 q3> = |0110>``. Operator
  strings such as ``"ZZZX"`` read left to right as qubit 0..3.
* Measurement outcome bit 0 corresponds to the +1 eigenvalue of the measured
  observable, bit 1 to the -1 eigenvalue.
* Measuring a qubit removes it from the register; the remaining qubits keep
  their relative order.
* Values are immutable after construction; every operation returns a new
  value. Concurrent simulations only need their own random generators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 16
MAX_DENSITY_QUBITS = 10

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_BRANCH_EPS = 1e-12  # probability below this is treated as an impossible branch


class SizeError(ValueError):
    """Register size outside the supported range."""


class DimensionMismatchError(ValueError):
    """Operands act on registers of different sizes."""


class Basis(enum.Enum):
    """Single-qubit measurement basis (Pauli observable)."""

    X = "X"
    Y = "Y"
    Z = "Z"


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over ``n_qubits`` qubits.

    ``n_qubits == 0`` (a fully measured register, single amplitude of modulus
    one) is permitted so that measurement loops can consume every qubit.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 0 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [0, {MAX_QUBITS}], got {self.n_qubits}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} is not 1 within 1e-12")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def _check_qubit(self, qubit: int) -> None:
        if not 0 <= qubit < self.n_qubits:
            raise IndexError(f"qubit {qubit} out of range for {self.n_qubits}-qubit state")

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.n_qubits)


def basis_state(n: int, index: int) -> StateVector:
    """Computational basis state ``|index>`` on ``n`` qubits."""
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    if not 0 <= index < 2**n:
        raise IndexError(f"basis index {index} out of range for {n} qubits")
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


def ghz_state(n: int) -> StateVector:
    """The n-qubit GHZ state, equal superposition of all-zeros and all-ones."""
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = _SQRT_HALF
    amps[-1] = _SQRT_HALF
    return StateVector(n, amps)


def rotated_ghz(n: int, theta: float) -> StateVector:
    """GHZ state with a phase ``exp(i*theta)`` on the all-ones branch.

    Trace distance to the GHZ state is ``|sin(theta/2)|``; at ``theta == pi``
    this is the -1 eigenstate of every even-Y X/Y parity observable.
    """
    return apply_rz(ghz_state(n), 0, theta)


def ghz_prime_state() -> StateVector:
    """Four-qubit state (|0110> - |1001>)/sqrt(2), polarisation H=0, V=1.

    This is the raw output of the two-pair photonic source; it is locally
    equivalent to the 4-qubit GHZ state (see ``local_correct_ghz_prime``).
    """
    amps = np.zeros(16, dtype=complex)
    amps[0b0110] = _SQRT_HALF
    amps[0b1001] = -_SQRT_HALF
    return StateVector(4, amps)


def local_correct_ghz_prime(s: StateVector) -> StateVector:
    """Local Pauli frame change mapping the photonic state onto GHZ.

    Bit-flips the two middle qubits and phase-flips qubit 0 (an involution up
    to global phase). Maps ``ghz_prime_state()`` to ``ghz_state(4)`` exactly.
    """
    if s.n_qubits != 4:
        raise SizeError(f"expected a 4-qubit state, got {s.n_qubits} qubits")
    out = apply_pauli_x(s, 1)
    out = apply_pauli_x(out, 2)
    return apply_pauli_z(out, 0)


def apply_pauli_x(s: StateVector, qubit: int) -> StateVector:
    s._check_qubit(qubit)
    t = np.take(s.as_tensor(), [1, 0], axis=qubit)
    return StateVector(s.n_qubits, t.reshape(-1))


def apply_pauli_z(s: StateVector, qubit: int) -> StateVector:
    """Negate every amplitude whose ``qubit`` bit is 1."""
    s._check_qubit(qubit)
    t = s.as_tensor().copy()
    idx: list = [slice(None)] * s.n_qubits
    idx[qubit] = 1
    t[tuple(idx)] *= -1.0
    return StateVector(s.n_qubits, t.reshape(-1))


def apply_rz(s: StateVector, qubit: int, theta: float) -> StateVector:
    """Multiply every amplitude whose ``qubit`` bit is 1 by ``exp(i*theta)``.

    On a GHZ state the result is independent of which qubit is rotated, which
    is exactly what hides the identity of the rotating party.
    """
    s._check_qubit(qubit)
    t = s.as_tensor().copy()
    idx: list = [slice(None)] * s.n_qubits
    idx[qubit] = 1
    t[tuple(idx)] *= np.exp(1j * theta)
    return StateVector(s.n_qubits, t.reshape(-1))


def apply_hadamard(s: StateVector, qubit: int) -> StateVector:
    s._check_qubit(qubit)
    t = s.as_tensor()
    a0 = np.take(t, 0, axis=qubit)
    a1 = np.take(t, 1, axis=qubit)
    out = np.stack([(a0 + a1) * _SQRT_HALF, (a0 - a1) * _SQRT_HALF], axis=qubit)
    return StateVector(s.n_qubits, out.reshape(-1))


def _branch_vectors(s: StateVector, qubit: int, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized post-measurement vectors for outcomes 0 and 1.

    Outcome 0 projects onto the +1 eigenvector: |+> for X, (|0>+i|1>)/sqrt(2)
    for Y, |0> for Z. The measured qubit's axis is removed.
    """
    t = s.as_tensor()
    a0 = np.take(t, 0, axis=qubit).reshape(-1)
    a1 = np.take(t, 1, axis=qubit).reshape(-1)
    if basis is Basis.Z:
        return a0, a1
    if basis is Basis.X:
        return (a0 + a1) * _SQRT_HALF, (a0 - a1) * _SQRT_HALF
    return (a0 - 1j * a1) * _SQRT_HALF, (a0 + 1j * a1) * _SQRT_HALF


def branch_probabilities(s: StateVector, qubit: int, basis: Basis) -> tuple[float, float]:
    """Born probabilities of outcomes (0, 1) for measuring ``qubit``."""
    s._check_qubit(qubit)
    b0, b1 = _branch_vectors(s, qubit, basis)
    return float(np.vdot(b0, b0).real), float(np.vdot(b1, b1).real)


def project(s: StateVector, qubit: int, basis: Basis, outcome: int) -> tuple[float, StateVector]:
    """Deterministically project onto the given outcome.

    Returns the branch probability and the renormalized post-measurement
    state with the measured qubit removed. Raises on an (almost) impossible
    branch. This is the workhorse for exhaustive branch enumeration.
    """
    s._check_qubit(qubit)
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    branches = _branch_vectors(s, qubit, basis)
    vec = branches[outcome]
    prob = float(np.vdot(vec, vec).real)
    if prob < _BRANCH_EPS:
        raise ValueError(f"branch (qubit={qubit}, basis={basis.value}, outcome={outcome}) has probability ~0")
    return prob, StateVector(s.n_qubits - 1, vec / np.sqrt(prob))


def measure(
    s: StateVector, qubit: int, basis: Basis, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Projective measurement of one qubit, sampling with Born probabilities.

    Returns the outcome bit and the renormalized post-measurement state with
    the measured qubit removed (``n_qubits`` drops by one).
    """
    s._check_qubit(qubit)
    b0, b1 = _branch_vectors(s, qubit, basis)
    p0 = float(np.vdot(b0, b0).real)
    outcome = 0 if rng.random() < p0 else 1
    vec = b0 if outcome == 0 else b1
    prob = p0 if outcome == 0 else 1.0 - p0
    if prob < _BRANCH_EPS:
        raise RuntimeError("sampled a zero-probability branch; this must be unreachable")
    return outcome, StateVector(s.n_qubits - 1, vec / np.sqrt(prob))


def reorder_qubits(s: StateVector, order: tuple[int, ...]) -> StateVector:
    """Permute the register so new qubit ``i`` is old qubit ``order[i]``."""
    if sorted(order) != list(range(s.n_qubits)):
        raise ValueError(f"order {order} is not a permutation of 0..{s.n_qubits - 1}")
    t = np.transpose(s.as_tensor(), order)
    return StateVector(s.n_qubits, t.reshape(-1))


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit state")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2 of two pure states."""
    return abs(overlap(a, b)) ** 2


def states_equal(a: StateVector, b: StateVector, tol: float = 1e-10) -> bool:
    """Equality up to a global phase (overlap modulus within ``tol`` of 1)."""
    if a.n_qubits != b.n_qubits:
        return False
    return abs(abs(overlap(a, b)) - 1.0) <= tol


def amplitudes_as_pairs(s: StateVector) -> list[list[float]]:
    """Debug dump: amplitudes as JSON-friendly [re, im] pairs."""
    return [[float(a.real), float(a.imag)] for a in s.amplitudes]


# --- density matrices and ensembles -------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on <= 10 qubits."""

    n_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_DENSITY_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_DENSITY_QUBITS}], got {self.n_qubits}")
        dim = 2**self.n_qubits
        mat = np.ascontiguousarray(self.entries, dtype=complex)
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("matrix is not Hermitian within 1e-10")
        tr = np.trace(mat)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace {tr!r} is not 1 within 1e-10")
        if np.linalg.eigvalsh(mat).min() < -1e-10:
            raise ValueError("matrix has an eigenvalue below -1e-10")
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)


@dataclass(frozen=True)
class NoiseEnsemble:
    """Probabilistic mixture of pure states, all on the same register size."""

    components: tuple[tuple[float, StateVector], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("ensemble needs at least one component")
        probs = np.array([p for p, _ in self.components], dtype=float)
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("component probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"component probabilities sum to {probs.sum()!r}, not 1")
        sizes = {s.n_qubits for _, s in self.components}
        if len(sizes) != 1:
            raise DimensionMismatchError(f"components span register sizes {sorted(sizes)}")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "_cumulative", np.cumsum(probs))

    @property
    def n_qubits(self) -> int:
        return self.components[0][1].n_qubits


def density_from_pure(psi: StateVector) -> DensityMatrix:
    return DensityMatrix(psi.n_qubits, np.outer(psi.amplitudes, psi.amplitudes.conj()))


def density_from_ensemble(e: NoiseEnsemble) -> DensityMatrix:
    """Sum of p * |psi><psi| over the ensemble components."""
    if e.n_qubits > MAX_DENSITY_QUBITS:
        raise SizeError(f"density matrices support at most {MAX_DENSITY_QUBITS} qubits")
    vecs = np.stack([s.amplitudes for _, s in e.components])
    probs = np.array([p for p, _ in e.components])
    mat = (vecs.T * probs) @ vecs.conj()
    return DensityMatrix(e.n_qubits, mat)


def sample_ensemble(e: NoiseEnsemble, rng: np.random.Generator) -> StateVector:
    """Draw one component state with its ensemble probability."""
    i = int(np.searchsorted(getattr(e, "_cumulative"), rng.random(), side="right"))
    i = min(i, len(e.components) - 1)
    return e.components[i][1]


def werner_p_for_fidelity(n: int, fidelity: float) -> float:
    """Mixing weight p such that the Werner-like GHZ mixture hits ``fidelity``.

    Solves p + (1 - p)/2^n = fidelity; feasible only above the white-noise
    floor 1/2^n.
    """
    floor = 2.0**-n
    if not floor < fidelity <= 1.0:
        raise ValueError(f"fidelity {fidelity} outside feasible range ({floor}, 1]")
    return (fidelity - floor) / (1.0 - floor)


def werner_ghz(n: int, p: float, *, ghz: StateVector | None = None) -> NoiseEnsemble:
    """Werner-like mixture p * |GHZ><GHZ| + (1 - p) * I / 2^n as an ensemble.

    The white-noise part is spelled out as all 2^n computational basis states,
    so the materialized ensemble is limited to n <= 10; for larger registers
    use ``sample_werner_ghz``. Fidelity with GHZ is p + (1 - p)/2^n.

    ``ghz`` may substitute a different coherent component (e.g. the corrected
    photonic state) and must equal the GHZ state up to numerical noise.
    """
    if not 1 <= n <= MAX_DENSITY_QUBITS:
        raise SizeError(f"materialized Werner mixtures support n in [1, {MAX_DENSITY_QUBITS}]")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    coherent = ghz if ghz is not None else ghz_state(n)
    if coherent.n_qubits != n:
        raise DimensionMismatchError("coherent component has the wrong register size")
    white = (1.0 - p) / 2**n
    components = [(p, coherent)]
    components += [(white, basis_state(n, z)) for z in range(2**n)]
    return NoiseEnsemble(tuple(components))


def sample_werner_ghz(n: int, p: float, rng: np.random.Generator) -> StateVector:
    """Sample from the Werner-like GHZ mixture without materializing it (n <= 16)."""
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if rng.random() < p:
        return ghz_state(n)
    return basis_state(n, int(rng.integers(0, 2**n)))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of (a - b), via a Hermitian eigensolver."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit matrix")
    eigs = np.linalg.eigvalsh(a.entries - b.entries)
    return float(0.5 * np.abs(eigs).sum())


def fidelity_with_pure(rho: DensityMatrix, psi: StateVector) -> float:
    """<psi| rho |psi>."""
    if rho.n_qubits != psi.n_qubits:
        raise DimensionMismatchError(f"{rho.n_qubits}-qubit matrix vs {psi.n_qubits}-qubit state")
    return float(np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes).real)
