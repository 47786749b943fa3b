"""Hot-potato packet routing on allowed networks, with livelock-free epoch wrappers."""

from .livelock import (
    EpochConfig,
    EpochLabel,
    Variant,
    detect_livelock,
    epoch_beats,
    epoch_label_for,
    estimate_flush_time,
    find_livelock_example,
    flush_check,
    psr_wrap,
    two_state_wrap,
)
from .schemes import (
    collision_counting,
    distance_priority,
    eulerian_scheme,
    inverse_distance_priority,
    promote,
    random_scheme,
)
from .simcore import InjectionRequest, Network, NetworkState, Packet, Scheme, run, state_fingerprint, step
from .topology import (
    UNREACHABLE,
    Multigraph,
    add_buffer_loops,
    diameter,
    eulerian_circuit,
    interpolate_virtual_routers,
    shortest_distances,
    validate_network,
)

__version__ = "0.1.0"
