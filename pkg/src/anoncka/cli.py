"""Batch experiment runner.

Commands (see README for config key documentation):

* ``run``          -- execute a verifiable key agreement run (or the
                      unverified variant when ``D`` is absent) and print the
                      result as JSON.
* ``theorem1``     -- acceptance-bound checks over a rotated-GHZ and/or
                      Werner-fidelity grid, printed as CSV (or JSON).
* ``anonymity``    -- total-variation distance between a coalition's views
                      under two identity hypotheses, printed as JSON.
* ``experiment``   -- the three-configuration table-top demonstration at a
                      given fidelity, printed as JSON (or CSV).
* ``notify-demo``  -- print the XOR share table of one notification round.

Exit codes: 0 on success/validated, 1 on usage or config errors, 2 when the
protocol rejected or aborted. Same config + same seed gives byte-identical
output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Callable

import numpy as np

from . import adversary as adv
from .analysis import (
    bound_checks_to_csv,
    ame_anonymity_runner,
    check_theorem1,
    estimate_anonymity_tvd,
    notification_anonymity_runner,
    reproduce_experiment,
)
from .netmodel import Network, RoleAssignment
from .protocols import aka, avka, notification
from .qsim import (
    Basis,
    MAX_DENSITY_QUBITS,
    NoiseEnsemble,
    StateVector,
    ghz_prime_state,
    ghz_state,
    local_correct_ghz_prime,
    rotated_ghz,
    sample_ensemble,
    werner_ghz,
    werner_p_for_fidelity,
)
from .rng import RngBundle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2


class CliError(Exception):
    """Invalid usage or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise CliError(message)


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must be a JSON object")
    return cfg


def _require(cfg: dict, key: str, kind: type, check: Callable[[Any], bool] = lambda v: True):
    if key not in cfg:
        raise CliError(f"missing config key {key!r}")
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise CliError(f"config key {key!r} must be {kind.__name__}, got {value!r}")
    if not check(value):
        raise CliError(f"config key {key!r} has invalid value {value!r}")
    return value


def _roles_from(cfg: dict) -> RoleAssignment:
    n = _require(cfg, "n", int, lambda v: v >= 1)
    alice = _require(cfg, "alice", int)
    receivers = _require(cfg, "receivers", list)
    if not all(isinstance(r, int) for r in receivers):
        raise CliError("config key 'receivers' must be a list of party ids")
    try:
        return RoleAssignment(n=n, alice=alice, receivers=frozenset(receivers))
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _seed_from(cfg: dict) -> int:
    return _require(cfg, "seed", int)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _make_source(cfg: dict, roles: RoleAssignment, bundle: RngBundle):
    noise = cfg.get("noise", {"model": "pure"})
    if not isinstance(noise, dict):
        raise CliError("config key 'noise' must be an object")
    model = noise.get("model", "pure")
    if model == "pure":
        state = ghz_state(roles.n)
        return lambda: state
    if model == "werner":
        fidelity = _require(noise, "fidelity", float)
        try:
            weight = werner_p_for_fidelity(roles.n, fidelity)
            ensemble = werner_ghz(roles.n, weight)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        return lambda: sample_ensemble(ensemble, bundle.source)
    if model == "ghz_prime":
        if roles.n != 4:
            raise CliError("noise model 'ghz_prime' needs n=4")
        base = local_correct_ghz_prime(ghz_prime_state())
        fidelity = noise.get("fidelity", 1.0)
        if fidelity == 1.0:
            return lambda: base
        try:
            weight = werner_p_for_fidelity(4, float(fidelity))
            ensemble = werner_ghz(4, weight, ghz=base)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        return lambda: sample_ensemble(ensemble, bundle.source)
    raise CliError(f"unknown noise model {model!r}")


def _make_strategy(cfg: dict, roles: RoleAssignment) -> adv.AdversaryStrategy | None:
    spec = cfg.get("adversary")
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise CliError("config key 'adversary' must be an object")
    kind = spec.get("kind")
    if kind == "honest_curious":
        coalition = _require(spec, "coalition", list)
        return adv.HonestCurious(coalition=frozenset(coalition))
    if kind == "withholding":
        party = _require(spec, "party", int)
        basis = spec.get("basis", "Z")
        if basis not in ("X", "Y", "Z"):
            raise CliError(f"withholding basis must be X, Y or Z, got {basis!r}")
        return adv.WithholdingAgent(party=party, later_basis=Basis(basis))
    if kind == "dishonest_source":
        return adv.DishonestSource(generator=_dishonest_generator(spec, roles.n))
    raise CliError(f"unknown adversary kind {kind!r}")


def _dishonest_generator(spec: dict, n: int) -> StateVector | NoiseEnsemble:
    state = spec.get("state")
    if state == "ghz":
        return ghz_state(n)
    if state == "ghz_minus":
        return rotated_ghz(n, math.pi)
    if state == "zeros":
        amps = np.zeros(2**n, dtype=complex)
        amps[0] = 1.0
        return StateVector(n, amps)
    if state == "rotated":
        return rotated_ghz(n, _require(spec, "theta", float))
    if state == "werner":
        fidelity = _require(spec, "fidelity", float)
        try:
            return werner_ghz(n, werner_p_for_fidelity(n, fidelity))
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    raise CliError(f"unknown dishonest source state {state!r}")


def cmd_run(cfg: dict, fmt: str) -> int:
    if fmt != "json":
        raise CliError("command 'run' only supports --format json")
    roles = _roles_from(cfg)
    seed = _seed_from(cfg)
    num_states = _require(cfg, "L", int, lambda v: v >= 0)
    bundle = RngBundle.from_seed(seed, roles.n)
    net = Network(roles.n, bundle.network)
    source = _make_source(cfg, roles, bundle)
    strategy = _make_strategy(cfg, roles)

    if cfg.get("D") is None:
        if strategy is not None:
            raise CliError("adversary strategies need the verifiable variant (set D)")
        keys = aka(roles, [source() for _ in range(num_states)], net, bundle)
        _emit(
            {
                "command": "aka",
                "roles": {"n": roles.n, "alice": roles.alice, "receivers": sorted(roles.receivers)},
                "keys": {str(p): bits for p, bits in sorted(keys.items())},
                "seed": seed,
            }
        )
        return EXIT_OK

    keygen_denom = _require(cfg, "D", int, lambda v: v >= 1)
    if strategy is None:
        result = avka(roles, num_states, keygen_denom, source, net, bundle)
        payload = result.to_dict(roles)
    else:
        try:
            run = adv.run_with_adversary(
                roles, num_states, keygen_denom, strategy, net, bundle, source=source
            )
        except adv.ConfigurationError as exc:
            raise CliError(str(exc)) from exc
        result = run.result
        payload = result.to_dict(roles)
        payload["adversary"] = {
            "kind": cfg["adversary"]["kind"],
            "view_entries": len(run.view.visible_entries),
            "key_guess": run.adversary_key_guess,
        }
    payload["command"] = "avka"
    payload["seed"] = seed
    _emit(payload)
    return EXIT_OK if result.validated else EXIT_REJECTED


def cmd_theorem1(cfg: dict, fmt: str) -> int:
    seed = _seed_from(cfg)
    trials = _require(cfg, "trials", int, lambda v: v >= 1)
    k = cfg.get("n", 4)
    if not isinstance(k, int) or k < 2:
        raise CliError("config key 'n' must be an integer >= 2")
    if k > MAX_DENSITY_QUBITS:
        raise CliError(f"exact trace distance needs n <= {MAX_DENSITY_QUBITS}, got {k}")
    theta_grid = cfg.get("theta_grid", [])
    fidelity_grid = cfg.get("fidelity_grid", [])
    if not isinstance(theta_grid, list) or not isinstance(fidelity_grid, list):
        raise CliError("'theta_grid' and 'fidelity_grid' must be lists of numbers")
    family: list[StateVector | NoiseEnsemble] = [rotated_ghz(k, float(t)) for t in theta_grid]
    try:
        family += [
            werner_ghz(k, werner_p_for_fidelity(k, float(f))) for f in fidelity_grid
        ]
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    checks = check_theorem1(family, trials, np.random.default_rng(seed))
    if fmt == "csv":
        sys.stdout.write(bound_checks_to_csv(checks))
    else:
        _emit({"command": "theorem1", "checks": [c.to_dict() for c in checks], "seed": seed})
    return EXIT_OK


def cmd_anonymity(cfg: dict, fmt: str) -> int:
    if fmt != "json":
        raise CliError("command 'anonymity' only supports --format json")
    seed = _seed_from(cfg)
    trials = _require(cfg, "trials", int, lambda v: v >= 2)
    n = _require(cfg, "n", int, lambda v: v >= 2)
    protocol = _require(cfg, "protocol", str, lambda v: v in ("ame", "notification"))
    coalition = frozenset(_require(cfg, "coalition", list))

    def hyp(key: str) -> RoleAssignment:
        spec = _require(cfg, key, dict)
        return _roles_from({"n": n, **spec})

    hyp_a, hyp_b = hyp("hypothesis_a"), hyp("hypothesis_b")
    runner = ame_anonymity_runner() if protocol == "ame" else notification_anonymity_runner()
    try:
        estimate = estimate_anonymity_tvd(
            runner, hyp_a, hyp_b, coalition, trials, np.random.default_rng(seed)
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    payload = estimate.to_dict()
    payload.update({"command": "anonymity", "protocol": protocol, "seed": seed})
    _emit(payload)
    return EXIT_OK


def cmd_experiment(cfg: dict, fmt: str) -> int:
    seed = _seed_from(cfg)
    trials = _require(cfg, "trials", int, lambda v: v >= 1)
    fidelity = _require(cfg, "fidelity", float, lambda v: 0.0 < v <= 1.0)
    source = cfg.get("source", "werner")
    if source not in ("werner", "ghz_prime"):
        raise CliError(f"config key 'source' must be 'werner' or 'ghz_prime', got {source!r}")
    try:
        report = reproduce_experiment(
            fidelity,
            trials,
            np.random.default_rng(seed),
            from_ghz_prime=source == "ghz_prime",
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if fmt == "csv":
        sys.stdout.write(report.to_csv())
    else:
        payload = report.to_dict()
        payload.update({"command": "experiment", "seed": seed})
        _emit(payload)
    return EXIT_OK


def cmd_notify_demo(cfg: dict, fmt: str) -> int:
    if fmt != "json":
        raise CliError("command 'notify-demo' only supports --format json (table on stdout)")
    roles = _roles_from(cfg)
    seed = _seed_from(cfg)
    target = cfg.get("target")
    if target is None:
        target = min(roles.receivers) if roles.receivers else 0
    if not isinstance(target, int) or not 0 <= target < roles.n:
        raise CliError(f"config key 'target' must be a party id, got {target!r}")

    bundle = RngBundle.from_seed(seed, roles.n)
    net = Network(roles.n, bundle.network)
    outcome = notification(roles, net, bundle)

    shares = {
        (e.sender, e.receiver): e.bits
        for e in net.transcript
        if e.phase == f"notify[target={target}]:shares"
    }
    partials = [
        e.bits
        for e in net.transcript
        if e.phase == f"notify[target={target}]:partials"
    ]
    n = roles.n
    print(f"notification share table for target {target} (seed {seed})")
    header = "dealer\\holder | " + " ".join(f"{k}" for k in range(n)) + " | parity"
    print(header)
    print("-" * len(header))
    for dealer in range(n):
        row = [shares[(dealer, holder)] for holder in range(n)]
        tag = " (alice)" if dealer == roles.alice else ""
        print(f"{dealer:>13} | " + " ".join(row) + f" | {sum(map(int, row)) % 2}{tag}")
    print("-" * len(header))
    print(f"{'column xor':>13} | " + " ".join(partials) + f" | {sum(map(int, partials)) % 2}")
    print(f"notified bits: {''.join(map(str, outcome.notified))} (receivers {sorted(roles.receivers)})")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "theorem1": cmd_theorem1,
    "anonymity": cmd_anonymity,
    "experiment": cmd_experiment,
    "notify-demo": cmd_notify_demo,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="anoncka", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--format", choices=("json", "csv"), default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args.config)
        if args.seed is not None:
            cfg = {**cfg, "seed": args.seed}
        fmt = args.format
        if fmt is None:
            fmt = "csv" if args.command == "theorem1" else "json"
        return COMMANDS[args.command](cfg, fmt)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
