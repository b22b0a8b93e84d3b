"""Monte Carlo simulator of probabilistic forwarding, plus a static oracle.

The protocol: the source broadcasts each of its n coded packets to its
neighbors; every other transmit-eligible node, the first time it receives a
given packet, forwards it to all neighbors with probability p and stays
silent otherwise, ignoring later copies. Each node's forwarding coin for
each packet is a fixed uniform drawn from a seeded stream and compared
against p, which makes realizations couple monotonically across p and n:
raising either can only grow the receive sets.

The dynamic simulation floods packet by packet with a frontier walk. The
static oracle computes, for one packet, the connected component of the
source among "open" nodes (eligible, coin below p) and adds its neighbor
boundary; under shared coins the two routes must agree exactly, which is
the simulator's core self-check.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError, UndecodableError
from .numerics import MonotoneSearchSpec, SearchDirection, bisect_monotone
from .topology import Topology

__all__ = [
    "SimConfig",
    "TrialOutcome",
    "SimSummary",
    "trial_seed",
    "packet_seed",
    "run_trial",
    "run_monte_carlo",
    "static_receive_set",
    "empirical_min_p",
]


@dataclass(eq=False)
class SimConfig:
    """One simulation setting: graph, code parameters, probability, repetitions."""

    topology: Topology
    data_packets: int
    coded_packets: int
    forward_prob: float
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.data_packets < 1:
            raise ParameterError(f"data_packets must be >= 1, got {self.data_packets}")
        if self.coded_packets < self.data_packets:
            raise UndecodableError(
                f"coded_packets {self.coded_packets} < data_packets {self.data_packets}")
        if not 0.0 <= self.forward_prob <= 1.0:
            raise ParameterError(f"forward_prob must be in [0, 1], got {self.forward_prob}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")


@dataclass(eq=False)
class TrialOutcome:
    """Aggregates of one trial: per-node reception counts, simulcast count,
    and the number of nodes holding at least k packets."""

    received_count: np.ndarray
    transmissions: int
    decoders: int


@dataclass(frozen=True)
class SimSummary:
    mean_coverage: float
    mean_transmissions: float
    std_err_coverage: float
    std_err_transmissions: float
    trials: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """The per-trial stream used by run_monte_carlo."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))


def packet_seed(seed, packet_index: int) -> np.random.SeedSequence:
    """The per-packet stream a trial derives from its own seed.

    Sharing this seed between run_trial and static_receive_set is what
    "shared coins" means.
    """
    ss = _as_seed_sequence(seed)
    return np.random.SeedSequence(entropy=ss.entropy,
                                  spawn_key=(*ss.spawn_key, packet_index))


def _packet_coins(topology: Topology, seed) -> np.ndarray:
    return np.random.default_rng(_as_seed_sequence(seed)).random(topology.node_count)


@njit(cache=True, nogil=True)
def _flood_packet(indptr, indices, forwards, source, received, queue):
    """Dynamic frontier walk of one packet.

    `received` must arrive all-False and `queue` must have room for every
    node; both are caller-owned scratch. Returns the number of simulcast
    transmissions (= nodes that forwarded, source included).
    """
    received[source] = True
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for ptr in range(indptr[u], indptr[u + 1]):
            v = indices[ptr]
            if not received[v]:
                received[v] = True  # first reception: decision is final
                if forwards[v]:
                    queue[tail] = v
                    tail += 1
    return tail


def run_trial(config: SimConfig, seed) -> TrialOutcome:
    """Simulate all n packets once; packets are mutually independent."""
    topo = config.topology
    indptr, indices = topo.csr
    n_nodes = topo.node_count
    received_count = np.zeros(n_nodes, dtype=np.int64)
    received = np.zeros(n_nodes, dtype=np.bool_)
    queue = np.empty(n_nodes, dtype=np.int64)
    transmissions = 0
    for j in range(config.coded_packets):
        coins = _packet_coins(topo, packet_seed(seed, j))
        forwards = topo.transmit_eligible & (coins < config.forward_prob)
        forwards[topo.source] = True
        received[:] = False
        transmissions += _flood_packet(indptr, indices, forwards,
                                       topo.source, received, queue)
        received_count += received
    decoders = int(np.count_nonzero(received_count >= config.data_packets))
    return TrialOutcome(received_count=received_count,
                        transmissions=transmissions, decoders=decoders)


def run_monte_carlo(config: SimConfig, workers: int = 1,
                    per_trial_sink=None) -> SimSummary:
    """Average run_trial over seeded trials; deterministic for a given config
    regardless of worker count or scheduling.

    per_trial_sink, when given, receives CSV lines `trial,decoders,transmissions`.
    """
    n_nodes = config.topology.node_count

    def one(i: int) -> tuple[int, int]:
        outcome = run_trial(config, trial_seed(config.master_seed, i))
        return outcome.decoders, outcome.transmissions

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.trials)))
    else:
        results = [one(i) for i in range(config.trials)]
    if per_trial_sink is not None:
        per_trial_sink.write("trial,decoders,transmissions\n")
        for i, (decoders, transmissions) in enumerate(results):
            per_trial_sink.write(f"{i},{decoders},{transmissions}\n")
    coverage = np.array([r[0] / n_nodes for r in results])
    transmissions = np.array([float(r[1]) for r in results])
    t = config.trials
    if t > 1:
        se_cov = float(coverage.std(ddof=1) / math.sqrt(t))
        se_tx = float(transmissions.std(ddof=1) / math.sqrt(t))
    else:
        se_cov = se_tx = 0.0
    return SimSummary(
        mean_coverage=float(coverage.mean()),
        mean_transmissions=float(transmissions.mean()),
        std_err_coverage=se_cov,
        std_err_transmissions=se_tx,
        trials=t,
    )


def static_receive_set(topology: Topology, forward_prob: float, seed) -> set[int]:
    """Receive set of a single packet, computed without simulating.

    Nodes are "open" when eligible with coin below forward_prob (source
    forced open, ineligible nodes forced closed); the receive set is the
    source's open component plus its neighbor boundary. Under a shared
    packet seed this equals the dynamic receive set exactly.
    """
    if not 0.0 <= forward_prob <= 1.0:
        raise ParameterError(f"forward_prob must be in [0, 1], got {forward_prob}")
    coins = _packet_coins(topology, seed)
    open_mask = topology.transmit_eligible & (coins < forward_prob)
    open_mask[topology.source] = True

    indptr, indices = topology.csr
    n = topology.node_count
    adj = csr_matrix(
        (np.ones(indices.size, dtype=np.int32), indices, indptr), shape=(n, n))
    open_nodes = np.flatnonzero(open_mask)
    sub = adj[open_nodes][:, open_nodes]
    _, labels = connected_components(sub, directed=False)
    source_pos = int(np.searchsorted(open_nodes, topology.source))
    component = np.zeros(n, dtype=bool)
    component[open_nodes[labels == labels[source_pos]]] = True
    receive = component | (adj @ component > 0)
    return {int(v) for v in np.flatnonzero(receive)}


def empirical_min_p(topology: Topology, data_packets: int, coded_packets: int,
                    delta: float, trials: int, tol: float, master_seed: int,
                    workers: int = 1) -> float:
    """Least p whose Monte Carlo coverage reaches 1 - delta, by bisection.

    Every probe reuses the same per-(trial, node, packet) uniforms (the
    seeds do not depend on p), so per-realization coverage is nondecreasing
    in p and the search is a deterministic monotone bisection on the
    empirical curve.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must be in (0, 1), got {delta}")

    def coverage(p: float) -> float:
        config = SimConfig(
            topology=topology, data_packets=data_packets,
            coded_packets=coded_packets, forward_prob=p, trials=trials,
            master_seed=master_seed)
        return run_monte_carlo(config, workers=workers).mean_coverage

    spec = MonotoneSearchSpec(
        lower=0.0, upper=1.0, target=1.0 - delta, tolerance=tol,
        direction=SearchDirection.FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET)
    return bisect_monotone(coverage, spec)
