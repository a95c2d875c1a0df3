import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from splitsched import EdgeTiming, ProblemInstance


@pytest.fixture
def single_edge_instance():
    """One client, one helper: makespan has the closed form
    r + p + l + l' + p' + r' because nothing contends for slots."""
    return ProblemInstance(
        clients=(0,), helpers=(0,),
        edges={(0, 0): EdgeTiming(r=2, p=3, l=1, l_prime=2, p_prime=1, r_prime=1)},
        memory_demand={0: 1.0}, memory_capacity={0: 2.0},
        slot_length_ms=100.0)


@pytest.fixture
def two_client_instance():
    """Two clients on one helper, identical timings, forcing contention."""
    e = EdgeTiming(r=1, p=2, l=1, l_prime=1, p_prime=1, r_prime=1)
    return ProblemInstance(
        clients=(0, 1), helpers=(0,),
        edges={(0, 0): e, (0, 1): e},
        memory_demand={0: 1.0, 1: 1.0}, memory_capacity={0: 4.0},
        slot_length_ms=100.0)


@pytest.fixture
def two_helper_instance():
    """Three clients, two helpers, asymmetric timings and tight memory."""
    def et(r, p, l, lp, pp, rp):
        return EdgeTiming(r=r, p=p, l=l, l_prime=lp, p_prime=pp, r_prime=rp)
    edges = {
        (0, 0): et(0, 1, 0, 0, 1, 0), (0, 1): et(1, 2, 1, 0, 1, 1),
        (0, 2): et(0, 2, 0, 1, 2, 1),
        (1, 0): et(1, 2, 1, 1, 1, 1), (1, 1): et(0, 1, 0, 0, 2, 0),
        (1, 2): et(2, 1, 1, 0, 1, 1),
    }
    return ProblemInstance(
        clients=(0, 1, 2), helpers=(0, 1), edges=edges,
        memory_demand={0: 2.0, 1: 2.0, 2: 2.0},
        memory_capacity={0: 4.0, 1: 2.0},
        slot_length_ms=100.0)
