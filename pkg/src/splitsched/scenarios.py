"""Instance generation from a measured device catalog.

Two generation modes mirror a small-testbed setup and a larger synthetic
cluster:

  scenario 1  devices drawn uniformly from the catalog pools, every client
              trains the same model split at the same cut layers, helper
              memory is the device RAM.
  scenario 2  per-device full-batch times interpolated uniformly between the
              slowest and fastest catalog entry of each pool, cut layers drawn
              per client, demands and capacities drawn so memory binds.

Per-part compute times are pro-rated by layer count from the measured
full-batch time, with a fixed forward share of the total; transfers add the
activation (or gradient) volume at the cut times a per-edge delay drawn
log-uniformly. All randomness derives from per-entity streams seeded with
sha256(seed, role, index), so growing a pool keeps existing entities stable:
helper sweeps see nested helper sets, not a reshuffle.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
from dataclasses import dataclass, field
from importlib import resources

from .model import DeviceProfile, EdgeTiming, ProblemInstance, discretize

MODEL_LAYERS = {"resnet101": 37, "vgg19": 25}
DEFAULT_CUTS = {"resnet101": (3, 33), "vgg19": (3, 23)}
DEFAULT_SLOT_MS = {"resnet101": 180.0, "vgg19": 550.0}


class CatalogError(ValueError):
    pass


def load_catalog(path=None) -> dict[str, DeviceProfile]:
    """Parse the device catalog CSV into profiles keyed by device name."""
    if path is None:
        text = resources.files("splitsched.data").joinpath(
            "device_catalog.csv").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = list(csv.DictReader(text.splitlines()))
    if not rows:
        raise CatalogError("catalog is empty")
    merged: dict[str, dict] = {}
    for lineno, row in enumerate(rows, start=2):
        try:
            name = row["name"].strip()
            role = row["role"].strip()
            memory = float(row["memory_gb"])
            model = row["model"].strip()
            raw = (row["full_batch_s"] or "").strip()
            batch = float(raw) if raw else None
            note = (row.get("note") or "").strip()
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"malformed catalog row at line {lineno}: {exc}") from exc
        if not name or role not in ("client", "helper", "excluded") or memory <= 0:
            raise CatalogError(f"malformed catalog row at line {lineno}")
        if batch is not None and batch <= 0:
            raise CatalogError(f"malformed catalog row at line {lineno}: "
                               f"full_batch_s must be positive")
        if batch is None and role != "excluded":
            raise CatalogError(f"malformed catalog row at line {lineno}: "
                               f"missing full_batch_s for usable device")
        entry = merged.setdefault(name, {"role": role, "memory": memory,
                                         "batch": {}, "note": note})
        if entry["role"] != role or entry["memory"] != memory:
            raise CatalogError(f"conflicting entries for device {name} "
                               f"at line {lineno}")
        if model in entry["batch"]:
            raise CatalogError(f"duplicate (device, model) pair at line {lineno}")
        if batch is not None:
            entry["batch"][model] = batch
        if note:
            entry["note"] = note
    return {name: DeviceProfile(name=name, role=e["role"], memory_gb=e["memory"],
                                full_batch_s=e["batch"], note=e["note"])
            for name, e in sorted(merged.items())}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: int
    n_clients: int
    n_helpers: int
    model: str = "resnet101"
    seed: int = 0
    slot_length_ms: float | None = None   # None = per-model default
    fwd_share: float = 1.0 / 3.0
    act_mb_first_cut: float = 32.0
    act_mb_second_cut: float = 16.0
    delay_s_per_mb: tuple = (0.02, 0.2)   # log-uniform range
    demand_gb: float = 0.1                # scenario 1 per-client footprint
    demand_gb_range: tuple = (0.5, 2.0)   # scenario 2
    capacity_fraction: tuple = (0.25, 1.0)  # scenario 2, fraction of RAM
    cut_first_range: tuple = (3, 7)       # scenario 2
    cut_second_back_range: tuple = (1, 5)  # scenario 2: layers after second cut
    time_scale: float = 1.0
    switching_cost: int = 0

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ValueError("scenario must be 1 or 2")
        if self.model not in MODEL_LAYERS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.n_clients < 1 or self.n_helpers < 1:
            raise ValueError("need at least one client and one helper")
        if not 0 < self.fwd_share < 1:
            raise ValueError("fwd_share must be in (0, 1)")
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")


def _rng(seed: int, *tags) -> random.Random:
    digest = hashlib.sha256(":".join([str(seed), *map(str, tags)]).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _part_seconds(full_batch_s: float, layers: int, cuts: tuple, fwd_share: float):
    """Forward/backward seconds of the three parts, pro-rated by layer count."""
    first, second = cuts
    spans = (first, second - first, layers - second)
    fwd = [full_batch_s * fwd_share * s / layers for s in spans]
    bwd = [full_batch_s * (1.0 - fwd_share) * s / layers for s in spans]
    return fwd, bwd


def _pool(catalog, role, model):
    pool = [d for d in catalog.values()
            if d.role == role and model in d.full_batch_s]
    if not pool:
        raise CatalogError(f"catalog has no {role} device with {model} timings")
    return sorted(pool, key=lambda d: d.name)


def _ensure_memory_feasible(demand: dict, capacity: dict) -> tuple[dict, int]:
    """Scale capacities up until a first-fit-decreasing packing exists."""
    caps = dict(capacity)
    for bump in range(200):
        free = dict(caps)
        ok = True
        for j, d in sorted(demand.items(), key=lambda kv: (-kv[1], kv[0])):
            target = max(sorted(free), key=lambda i: (free[i], -i))
            if free[target] + 1e-9 < d:
                ok = False
                break
            free[target] -= d
        if ok:
            return caps, bump
        caps = {i: v * 1.05 for i, v in caps.items()}
    raise CatalogError("could not reach a memory-feasible capacity profile")


def generate(spec: ScenarioSpec, catalog: dict | None = None) -> ProblemInstance:
    catalog = catalog or load_catalog()
    model = spec.model
    layers = MODEL_LAYERS[model]
    slot_ms = spec.slot_length_ms or DEFAULT_SLOT_MS[model]
    client_pool = _pool(catalog, "client", model)
    helper_pool = _pool(catalog, "helper", model)

    clients = list(range(1, spec.n_clients + 1))
    helpers = list(range(1, spec.n_helpers + 1))

    client_batch, client_cuts, demand = {}, {}, {}
    for j in clients:
        rng = _rng(spec.seed, "client", j)
        if spec.scenario == 1:
            device = rng.choice(client_pool)
            client_batch[j] = device.full_batch_s[model]
            client_cuts[j] = DEFAULT_CUTS[model]
            demand[j] = spec.demand_gb
        else:
            lo = min(d.full_batch_s[model] for d in client_pool)
            hi = max(d.full_batch_s[model] for d in client_pool)
            client_batch[j] = rng.uniform(lo, hi)
            cut_rng = _rng(spec.seed, "cuts", j)
            first = cut_rng.randint(*spec.cut_first_range)
            second = layers - cut_rng.randint(*spec.cut_second_back_range)
            client_cuts[j] = (first, second)
            demand[j] = _rng(spec.seed, "demand", j).uniform(*spec.demand_gb_range)

    helper_batch, capacity = {}, {}
    for i in helpers:
        rng = _rng(spec.seed, "helper", i)
        if spec.scenario == 1:
            device = rng.choice(helper_pool)
            helper_batch[i] = device.full_batch_s[model]
            capacity[i] = device.memory_gb
        else:
            lo = min(d.full_batch_s[model] for d in helper_pool)
            hi = max(d.full_batch_s[model] for d in helper_pool)
            helper_batch[i] = rng.uniform(lo, hi)
            ram = max(d.memory_gb for d in helper_pool)
            capacity[i] = ram * rng.uniform(*spec.capacity_fraction)

    capacity, bumps = _ensure_memory_feasible(demand, capacity)

    edges = {}
    lo_d, hi_d = spec.delay_s_per_mb
    for i in helpers:
        for j in clients:
            omega = math.exp(_rng(spec.seed, "edge", i, j).uniform(
                math.log(lo_d), math.log(hi_d)))
            cuts = client_cuts[j]
            cf, cb = _part_seconds(client_batch[j], layers, cuts, spec.fwd_share)
            hf, hb = _part_seconds(helper_batch[i], layers, cuts, spec.fwd_share)
            up1 = spec.act_mb_first_cut * omega
            down2 = spec.act_mb_second_cut * omega
            scale = spec.time_scale * 1000.0  # seconds -> scaled ms

            def slots(seconds):
                return discretize(seconds * scale, slot_ms)

            edges[(i, j)] = EdgeTiming(
                r=slots(cf[0] + up1),
                p=max(1, slots(hf[1])),
                l=slots(down2 + cf[2]),
                l_prime=slots(cb[2] + down2),
                p_prime=max(1, slots(hb[1])),
                r_prime=slots(up1 + cb[0]),
                link_delay_per_mb=omega)
    switching = {i: spec.switching_cost for i in helpers}
    meta = {"scenario": spec.scenario, "model": model, "seed": spec.seed,
            "slot_length_ms": slot_ms, "time_scale": spec.time_scale,
            "capacity_bumps": bumps}
    return ProblemInstance(clients=tuple(clients), helpers=tuple(helpers),
                           edges=edges, memory_demand=demand,
                           memory_capacity=capacity, slot_length_ms=slot_ms,
                           switching_cost=switching, meta=meta)


def generate_reduction_family(n_clients: int, n_helpers: int) -> ProblemInstance:
    """Degenerate timing profile: unit forward and backward work, no latency.

    Every client needs exactly one forward and one backward slot on any
    helper, so the optimal makespan is analytically 2 * ceil(J / I) and the
    horizon collapses to 2J. Useful as a solver sanity family.
    """
    clients = list(range(1, n_clients + 1))
    helpers = list(range(1, n_helpers + 1))
    edges = {(i, j): EdgeTiming(r=0, p=1, l=0, l_prime=0, p_prime=1, r_prime=0)
             for i in helpers for j in clients}
    return ProblemInstance(clients=tuple(clients), helpers=tuple(helpers),
                           edges=edges,
                           memory_demand={j: 0.0 for j in clients},
                           memory_capacity={i: 1.0 for i in helpers},
                           slot_length_ms=1.0,
                           switching_cost={i: 0 for i in helpers},
                           meta={"family": "reduction", "n_clients": n_clients,
                                 "n_helpers": n_helpers})


def _cv(values) -> float:
    values = list(values)
    mean = sum(values) / len(values)
    if mean == 0:
        return 0.0
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return math.sqrt(var) / mean


def heterogeneity(instance: ProblemInstance) -> float:
    """Dispersion index: summed coefficients of variation of per-edge
    end-to-end work, client memory demands, and helper capacities.

    Fleets that differ only in compute score on the first term; fleets whose
    memory footprints and helper sizes also spread score strictly higher.
    """
    work = _cv(e.r + e.p + e.l + e.l_prime + e.p_prime + e.r_prime
               for e in instance.edges.values())
    demand = _cv(instance.memory_demand[j] for j in instance.clients)
    capacity = _cv(instance.memory_capacity[i] for i in instance.helpers)
    return work + demand + capacity
