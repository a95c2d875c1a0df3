"""Core data model for split-workflow slot scheduling.

A training batch is a two-stage job per client: a forward task (p slots on a
helper, released r slots after batch start) and a backward task (p' slots on
the same helper, available once the client finishes its middle-part round
trip). All times are expressed in discrete scheduler slots; raw milliseconds
only appear upstream in the scenario generator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict


class SchedulingError(Exception):
    """Base class for errors raised by this package."""


class DegenerateInstanceError(SchedulingError):
    """Instance has no edges or a client with no eligible helper."""


class IncompleteScheduleError(SchedulingError):
    """Schedule is missing slots for some client's task."""


class InfeasibleError(SchedulingError):
    """Model or subproblem admits no feasible point."""


class UnboundedError(SchedulingError):
    """LP relaxation is unbounded."""


Triple = tuple[int, int, int]  # (helper, client, slot)


@dataclass(frozen=True)
class DeviceProfile:
    """One profiled device: full-batch training times per model, memory, role.

    full_batch_s maps a model name to seconds for one full local batch
    (forward + backward over all layers). Devices flagged unusable carry no
    timings and are skipped by the samplers.
    """

    name: str
    memory_gb: float
    full_batch_s: dict[str, float] = field(default_factory=dict)
    role: str = "client"  # "client" | "helper" | "excluded"
    note: str = ""

    def __post_init__(self):
        if self.memory_gb <= 0:
            raise ValueError(f"device {self.name}: memory must be positive")
        for model, sec in self.full_batch_s.items():
            if sec <= 0:
                raise ValueError(f"device {self.name}: non-positive time for {model}")


@dataclass(frozen=True)
class EdgeTiming:
    """Slot timings for one (helper, client) pair.

    r        slots before the forward task is available at the helper
             (client computes its first part and uploads activations)
    p        forward processing slots at the helper
    l        slots for the client to finish the forward pass once the helper
             is done (download activations, last part forward, loss)
    l_prime  slots for the client's own backward work plus gradient upload
    p_prime  backward processing slots at the helper
    r_prime  trailing slots after the helper finishes backward (gradient
             download and first-part backward at the client)
    link_delay_per_mb  raw sampled link delay (seconds per MB), kept for
             provenance; never used after discretization
    """

    r: int
    p: int
    l: int
    l_prime: int
    p_prime: int
    r_prime: int
    link_delay_per_mb: float = 0.0

    def __post_init__(self):
        for name in ("r", "l", "l_prime", "r_prime"):
            if getattr(self, name) < 0:
                raise ValueError(f"edge timing {name} must be >= 0")
        if self.p < 1 or self.p_prime < 1:
            raise ValueError("processing slots p and p_prime must be >= 1")


def _horizon_from_edges(clients, edges) -> int:
    if not edges:
        raise DegenerateInstanceError("degenerate instance: no edges")
    span = max(e.r + e.l + e.r_prime + e.l_prime for e in edges.values())
    total = 0
    for j in clients:
        incident = [e for (i, jj), e in edges.items() if jj == j]
        if not incident:
            raise DegenerateInstanceError(f"degenerate instance: client {j} has no edges")
        total += max(e.p + e.p_prime for e in incident)
    return span + total


@dataclass(frozen=True)
class ProblemInstance:
    """One batch-scheduling problem: clients, helpers, per-edge slot timings.

    edges maps (helper, client) to EdgeTiming; a missing pair means the
    helper is not eligible for that client. horizon is always the value of
    compute_horizon; passing it explicitly is only a cross-check.
    """

    clients: tuple[int, ...]
    helpers: tuple[int, ...]
    edges: dict[tuple[int, int], EdgeTiming]
    memory_demand: dict[int, float]
    memory_capacity: dict[int, float]
    slot_length_ms: float
    switching_cost: dict[int, int] = field(default_factory=dict)
    horizon: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(self.clients))
        object.__setattr__(self, "helpers", tuple(self.helpers))
        if len(set(self.clients)) != len(self.clients):
            raise ValueError("duplicate client ids")
        if len(set(self.helpers)) != len(self.helpers):
            raise ValueError("duplicate helper ids")
        if self.slot_length_ms <= 0:
            raise ValueError("slot_length_ms must be positive")
        helper_set, client_set = set(self.helpers), set(self.clients)
        for (i, j) in self.edges:
            if i not in helper_set or j not in client_set:
                raise ValueError(f"edge ({i}, {j}) references unknown node")
        for j in self.clients:
            if j not in self.memory_demand:
                raise ValueError(f"client {j} missing memory demand")
        for i in self.helpers:
            if i not in self.memory_capacity:
                raise ValueError(f"helper {i} missing memory capacity")
        sw = {i: int(self.switching_cost.get(i, 0)) for i in self.helpers}
        if any(v < 0 for v in sw.values()):
            raise ValueError("switching cost must be >= 0")
        object.__setattr__(self, "switching_cost", sw)
        t = _horizon_from_edges(self.clients, self.edges)
        if self.horizon is not None and self.horizon != t:
            raise ValueError(f"horizon {self.horizon} != computed {t}")
        object.__setattr__(self, "horizon", t)

    def helpers_of(self, j: int) -> list[int]:
        return sorted(i for (i, jj) in self.edges if jj == j)

    def clients_of(self, i: int) -> list[int]:
        return sorted(j for (ii, j) in self.edges if ii == i)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class Assignment:
    """Total map client -> helper."""

    by_client: dict[int, int]

    def helper_of(self, j: int) -> int:
        return self.by_client[j]

    def clients_of(self, i: int) -> list[int]:
        return sorted(j for j, h in self.by_client.items() if h == i)

    def load_gb(self, instance: ProblemInstance, i: int) -> float:
        return sum(instance.memory_demand[j] for j in self.clients_of(i))


@dataclass(frozen=True)
class Schedule:
    """Slot occupancy: fwd and bwd triples (helper, client, slot).

    Plain container: capacity and domain rules are the validator's job, so
    that invalid schedules (e.g. hand-built mutants) can still be represented
    and diagnosed. Every schedule produced by a solver in this package passes
    validate() with no findings.
    """

    fwd: frozenset[Triple]
    bwd: frozenset[Triple]

    def __post_init__(self):
        object.__setattr__(self, "fwd", frozenset(tuple(t) for t in self.fwd))
        object.__setattr__(self, "bwd", frozenset(tuple(t) for t in self.bwd))

    def slots(self, i: int, j: int, kind: str) -> list[int]:
        triples = self.fwd if kind == "fwd" else self.bwd
        return sorted(t for (ii, jj, t) in triples if ii == i and jj == j)

    def busy_slots(self, i: int) -> set[int]:
        return {t for (ii, _, t) in self.fwd | self.bwd if ii == i}


@dataclass(frozen=True)
class SolveStats:
    method: str
    status: str = "feasible"  # optimal | feasible | limit | infeasible
    wall_clock_s: float = 0.0
    iterations: int | None = None
    optimal: bool = False
    lower_bound: float | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolveOutcome:
    """A full solution: assignment, schedule, completion profile, stats."""

    assignment: Assignment
    schedule: Schedule
    phi_f: dict[int, int]
    c_f: dict[int, int]
    phi: dict[int, int]
    c: dict[int, int]
    makespan: int
    stats: SolveStats

    def __post_init__(self):
        if self.c and self.makespan != max(self.c.values()):
            raise ValueError("makespan must equal the largest completion")


def compute_horizon(instance: ProblemInstance) -> int:
    """Scheduling horizon T: worst single-edge span plus serialized work.

    T = max over edges of (r + l + r' + l')
        + sum over clients of max over incident edges of (p + p').
    Any schedule needs no more than T slots, so binary slot variables range
    over [0, T).
    """
    return _horizon_from_edges(instance.clients, instance.edges)


def compute_fwd_horizon(instance: ProblemInstance) -> int:
    """Horizon for the forward-only subproblem.

    T_f = max over edges of (r + l) + sum over clients of max incident p.
    """
    if not instance.edges:
        raise DegenerateInstanceError("degenerate instance: no edges")
    span = max(e.r + e.l for e in instance.edges.values())
    total = 0
    for j in instance.clients:
        incident = [e for (i, jj), e in instance.edges.items() if jj == j]
        total += max(e.p for e in incident)
    return span + total


def discretize(value_ms: float, slot_length_ms: float) -> int:
    """Number of slots covering value_ms; positive durations take >= 1 slot."""
    if slot_length_ms <= 0:
        raise ValueError("slot length must be positive")
    if value_ms < 0:
        raise ValueError("durations must be >= 0")
    if value_ms == 0:
        return 0
    # guard against float noise pushing an exact multiple up a slot
    return max(1, math.ceil(value_ms / slot_length_ms - 1e-9))


def count_switches(slots, horizon: int) -> int:
    """Occupancy boundaries of a task strictly inside the horizon.

    Sums |on(t) - on(t+1)| over adjacent slot pairs t in [0, horizon-2].
    A contiguous run starting at slot 0 therefore counts once (its end),
    matching the preemption-penalty convention of the ILP builder.
    """
    ss = sorted(set(slots))
    if not ss:
        return 0
    switches = 0
    run_start = ss[0]
    prev = ss[0]
    for t in ss[1:] + [None]:
        if t is not None and t == prev + 1:
            prev = t
            continue
        if run_start >= 1:
            switches += 1
        if prev < horizon - 1:
            switches += 1
        if t is not None:
            run_start = prev = t
    return switches


@dataclass(frozen=True)
class Completion:
    phi_f: dict[int, int]
    c_f: dict[int, int]
    phi: dict[int, int]
    c: dict[int, int]
    makespan: int


def completion_from_schedule(instance: ProblemInstance, assignment: Assignment,
                             schedule: Schedule,
                             require_bwd: bool = True) -> Completion:
    """Completion profile implied by a schedule.

    phi_f/phi are last-slot-plus-one of the forward/backward tasks; c_f adds
    the client's forward tail l, c adds the trailing r'. Helpers with a
    switching cost add mu per occupancy boundary into c_f (forward
    boundaries) and c (forward + backward boundaries). Deterministic and
    independent of triple iteration order. With require_bwd=False a schedule
    whose backward slots are still pending yields empty phi/c and makespan 0.
    """
    t_hor = instance.horizon
    phi_f, c_f, phi, c = {}, {}, {}, {}
    for j in instance.clients:
        if j not in assignment.by_client:
            raise IncompleteScheduleError(f"incomplete schedule: client {j} unassigned")
        i = assignment.by_client[j]
        if (i, j) not in instance.edges:
            raise IncompleteScheduleError(f"incomplete schedule: no edge ({i}, {j})")
        e = instance.edges[(i, j)]
        xs = schedule.slots(i, j, "fwd")
        zs = schedule.slots(i, j, "bwd")
        if len(xs) != e.p or (require_bwd and len(zs) != e.p_prime):
            raise IncompleteScheduleError(
                f"incomplete schedule: client {j} has {len(xs)}/{e.p} fwd "
                f"and {len(zs)}/{e.p_prime} bwd slots")
        mu = instance.switching_cost.get(i, 0)
        sx = count_switches(xs, t_hor) if mu else 0
        phi_f[j] = xs[-1] + 1
        c_f[j] = phi_f[j] + e.l + mu * sx
        if zs:
            sz = count_switches(zs, t_hor) if mu else 0
            phi[j] = zs[-1] + 1
            c[j] = phi[j] + e.r_prime + mu * (sx + sz)
    return Completion(phi_f, c_f, phi, c, max(c.values()) if c else 0)


# ---------------------------------------------------------------------------
# JSON round-trip. Canonical form: sorted keys, two-space indent, trailing
# newline; reserialization of a parsed document is byte-identical.

def instance_to_json(instance: ProblemInstance) -> str:
    doc = {
        "clients": list(instance.clients),
        "helpers": list(instance.helpers),
        "slot_length_ms": instance.slot_length_ms,
        "memory_demand": {str(j): v for j, v in sorted(instance.memory_demand.items())},
        "memory_capacity": {str(i): v for i, v in sorted(instance.memory_capacity.items())},
        "switching_cost": {str(i): v for i, v in sorted(instance.switching_cost.items())},
        "edges": [
            {"helper": i, "client": j, **{k: v for k, v in asdict(e).items()}}
            for (i, j), e in sorted(instance.edges.items())
        ],
        "horizon": instance.horizon,
        "meta": instance.meta,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def instance_from_json(text: str) -> ProblemInstance:
    doc = json.loads(text)
    edges = {}
    for row in doc["edges"]:
        key = (int(row["helper"]), int(row["client"]))
        edges[key] = EdgeTiming(
            r=row["r"], p=row["p"], l=row["l"], l_prime=row["l_prime"],
            p_prime=row["p_prime"], r_prime=row["r_prime"],
            link_delay_per_mb=row.get("link_delay_per_mb", 0.0))
    return ProblemInstance(
        clients=tuple(int(j) for j in doc["clients"]),
        helpers=tuple(int(i) for i in doc["helpers"]),
        edges=edges,
        memory_demand={int(j): v for j, v in doc["memory_demand"].items()},
        memory_capacity={int(i): v for i, v in doc["memory_capacity"].items()},
        slot_length_ms=doc["slot_length_ms"],
        switching_cost={int(i): v for i, v in doc.get("switching_cost", {}).items()},
        horizon=doc.get("horizon"),
        meta=doc.get("meta", {}),
    )


def outcome_to_json(outcome: SolveOutcome) -> str:
    """Canonical outcome document; volatile wall-clock time is excluded so
    reruns with the same seed and config serialize byte-identically."""
    stats = {
        "method": outcome.stats.method,
        "status": outcome.stats.status,
        "iterations": outcome.stats.iterations,
        "optimal": outcome.stats.optimal,
        "lower_bound": outcome.stats.lower_bound,
        "extra": outcome.stats.extra,
    }
    doc = {
        "assignment": {str(j): i for j, i in sorted(outcome.assignment.by_client.items())},
        "schedule": {
            "fwd": sorted(list(t) for t in outcome.schedule.fwd),
            "bwd": sorted(list(t) for t in outcome.schedule.bwd),
        },
        "phi_f": {str(j): v for j, v in sorted(outcome.phi_f.items())},
        "c_f": {str(j): v for j, v in sorted(outcome.c_f.items())},
        "phi": {str(j): v for j, v in sorted(outcome.phi.items())},
        "c": {str(j): v for j, v in sorted(outcome.c.items())},
        "makespan": outcome.makespan,
        "stats": stats,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def outcome_from_json(text: str) -> SolveOutcome:
    doc = json.loads(text)
    stats = doc["stats"]
    return SolveOutcome(
        assignment=Assignment({int(j): i for j, i in doc["assignment"].items()}),
        schedule=Schedule(
            fwd=frozenset(tuple(t) for t in doc["schedule"]["fwd"]),
            bwd=frozenset(tuple(t) for t in doc["schedule"]["bwd"])),
        phi_f={int(j): v for j, v in doc["phi_f"].items()},
        c_f={int(j): v for j, v in doc["c_f"].items()},
        phi={int(j): v for j, v in doc["phi"].items()},
        c={int(j): v for j, v in doc["c"].items()},
        makespan=doc["makespan"],
        stats=SolveStats(
            method=stats["method"], status=stats["status"],
            iterations=stats["iterations"], optimal=stats["optimal"],
            lower_bound=stats["lower_bound"], extra=stats.get("extra", {})),
    )
