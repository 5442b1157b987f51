"""Semi-random graph partitioning toolkit."""

__version__ = "0.1.0"

from .graphs import (  # noqa: F401
    Graph,
    Partition,
    cut_cost,
    cut_cost_restricted,
    cut_edges,
    edge_boundary,
    expansion,
)
from .instances import (  # noqa: F401
    AdversaryStrategy,
    MulticutDemands,
    PlantedInstance,
    generate_multicut_demands,
    generate_planted_expander,
    generate_sr,
    sr_cost,
)
