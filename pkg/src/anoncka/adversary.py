"""Pluggable dishonest behaviours for the verifiable key agreement run.

Three strategies:

* :class:`HonestCurious` -- a coalition that follows the protocol but records
  everything it sees. Injecting it never changes a single output bit.
* :class:`DishonestSource` -- the source emits arbitrary states instead of
  GHZ states.
* :class:`WithholdingAgent` -- a bystander that skips its entanglement-round
  measurement, announces a fresh coin instead, keeps its qubit, and measures
  it later to guess the key. Undetectable in keygen rounds, caught with
  probability 1/2 per verification round.

All dishonest randomness is drawn from the bundle's adversary stream, so an
honest run and its honest-curious twin consume identical honest draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from .netmodel import AdversaryView, Network, RoleAssignment, extract_view
from .protocols import AvkaResult, avka
from .qsim import Basis, NoiseEnsemble, StateVector, ghz_state, sample_ensemble
from .rng import RngBundle


class ConfigurationError(ValueError):
    """Strategy inconsistent with the role assignment."""


@dataclass(frozen=True)
class HonestCurious:
    coalition: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coalition", frozenset(self.coalition))


@dataclass(frozen=True)
class DishonestSource:
    generator: Union[NoiseEnsemble, StateVector]


@dataclass(frozen=True)
class WithholdingAgent:
    party: int
    later_basis: Basis = Basis.Z


AdversaryStrategy = Union[HonestCurious, DishonestSource, WithholdingAgent]


@dataclass(frozen=True)
class AdversaryRun:
    result: AvkaResult
    view: AdversaryView
    adversary_key_guess: str


def dishonest_source_states(
    generator: Union[NoiseEnsemble, StateVector],
    count: int,
    rng,
) -> list[StateVector]:
    """Sample ``count`` emissions from a dishonest source."""
    if isinstance(generator, StateVector):
        return [generator] * count
    return [sample_ensemble(generator, rng) for _ in range(count)]


def _check_strategy(roles: RoleAssignment, strategy: AdversaryStrategy) -> None:
    if isinstance(strategy, HonestCurious):
        if roles.alice in strategy.coalition:
            raise ConfigurationError("coalition must exclude Alice (her knowledge is trivial)")
        if len(strategy.coalition) > roles.n - 2:
            raise ConfigurationError(
                f"coalition of {len(strategy.coalition)} exceeds the corruption bound {roles.n - 2}"
            )
        if any(not 0 <= p < roles.n for p in strategy.coalition):
            raise ConfigurationError(f"coalition {sorted(strategy.coalition)} out of range")
    elif isinstance(strategy, WithholdingAgent):
        if strategy.party not in roles.non_participants:
            raise ConfigurationError(
                f"withholding agent {strategy.party} must be a non-participant"
            )
    elif isinstance(strategy, DishonestSource):
        gen = strategy.generator
        size = gen.n_qubits if isinstance(gen, (NoiseEnsemble, StateVector)) else None
        if size != roles.n:
            raise ConfigurationError(f"dishonest source emits {size}-qubit states for n={roles.n}")
    else:
        raise ConfigurationError(f"unknown strategy {strategy!r}")


def run_with_adversary(
    roles: RoleAssignment,
    num_states: int,
    keygen_denom: int,
    strategy: AdversaryStrategy,
    net: Network,
    rng: RngBundle,
    source: Callable[[], StateVector] | None = None,
) -> AdversaryRun:
    """Execute a verifiable key agreement run with one adversary injected.

    ``source`` is the honest source (pure GHZ by default); a DishonestSource
    strategy replaces it. Returns the protocol result, the adversary's view
    of the transcript, and its key guess (empty unless withholding).
    """
    _check_strategy(roles, strategy)
    if source is None:
        source = lambda: ghz_state(roles.n)

    withholder = None
    withholder_basis = Basis.Z
    coalition: frozenset[int] = frozenset()

    if isinstance(strategy, HonestCurious):
        coalition = strategy.coalition
    elif isinstance(strategy, WithholdingAgent):
        withholder = strategy.party
        withholder_basis = strategy.later_basis
        coalition = frozenset({strategy.party})
    elif isinstance(strategy, DishonestSource):
        gen = strategy.generator
        if isinstance(gen, StateVector):
            source = lambda: gen
        else:
            source = lambda: sample_ensemble(gen, rng.adversary)

    result = avka(
        roles,
        num_states,
        keygen_denom,
        source,
        net,
        rng,
        withholder=withholder,
        withholder_basis=withholder_basis,
    )
    view = extract_view(net.transcript, coalition, roles.n)
    return AdversaryRun(result=result, view=view, adversary_key_guess=result.withholder_guess)
