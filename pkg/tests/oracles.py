"""Independent brute-force oracles used to pin expected values.

Everything here is built from first principles (explicit Pauli matrices,
Kronecker products, exhaustive XOR-table enumeration) and deliberately avoids
the package's measurement path, so it can serve as a second route for
checking the Monte Carlo implementations.
"""

from __future__ import annotations

import itertools

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def operator_from_string(ops: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, qubit 0 leftmost."""
    mat = np.array([[1.0 + 0j]])
    for ch in ops:
        mat = np.kron(mat, PAULI[ch])
    return mat


def even_y_settings(k: int):
    """All X/Y basis-bit vectors of length k with an even number of Y's."""
    for bits in itertools.product((0, 1), repeat=k):
        if sum(bits) % 2 == 0:
            yield bits


def exact_verification_acceptance(rho: np.ndarray) -> float:
    """Acceptance probability of the GHZ parity test, computed exactly.

    For basis bits b the verdict is 'outcome parity == (#Y / 2) mod 2', i.e.
    the state lies in the (-1)^(#Y/2) eigenspace of the X/Y Pauli string P_b.
    The acceptance probability under one setting is tr(rho (I + t P_b)/2)
    with t = (-1)^(#Y/2); the protocol draws settings uniformly from the
    even-Y vectors, so the total is the uniform average.
    """
    k = int(np.log2(rho.shape[0]))
    dim = 2**k
    total = 0.0
    settings = list(even_y_settings(k))
    for bits in settings:
        ops = "".join("Y" if b else "X" for b in bits)
        sign = (-1) ** ((sum(bits) // 2) % 2)
        projector = 0.5 * (np.eye(dim) + sign * operator_from_string(ops))
        total += float(np.trace(rho @ projector).real)
    return total / len(settings)


def pure_state_trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sqrt(1 - |<a|b>|^2), the closed form for pure states."""
    return float(np.sqrt(max(0.0, 1.0 - abs(np.vdot(a, b)) ** 2)))


def enumerate_notification_tables(n: int, alice: int, receivers: frozenset[int], target: int):
    """Yield the notification bit z computed from every valid share table.

    A valid table assigns each dealer a row of n bits whose parity is 0,
    except Alice's row, whose parity is 1 iff the target is a receiver. Rows
    are enumerated over all free-bit choices (first n-1 bits free, last bit
    fixed by the parity), which is exhaustive over the protocol's randomness
    for one target round.
    """
    member = int(target in receivers)
    row_choices = []
    for dealer in range(n):
        parity = member if dealer == alice else 0
        rows = []
        for free in itertools.product((0, 1), repeat=n - 1):
            last = (sum(free) + parity) % 2
            rows.append((*free, last))
        row_choices.append(rows)
    for table in itertools.product(*row_choices):
        column_parity = [0] * n
        for row in table:
            for holder, bit in enumerate(row):
                column_parity[holder] ^= bit
        z = 0
        for bit in column_parity:
            z ^= bit
        yield z


def keygen_success_probability(rho: np.ndarray, participant_slots: tuple[int, ...]) -> float:
    """Probability that the participants' Z outcomes all agree, exactly.

    Sums the diagonal weight of all basis states whose bits at the
    participant slots are constant.
    """
    k = int(np.log2(rho.shape[0]))
    total = 0.0
    for index in range(2**k):
        bits = [(index >> (k - 1 - q)) & 1 for q in range(k)]
        values = {bits[s] for s in participant_slots}
        if len(values) == 1:
            total += float(rho[index, index].real)
    return total
