"""flowcheck: flow domains, flow graphs and interfaces, plus a dynamic
monitor that validates concurrent data-structure models against flow-based
invariants (memory safety, leak freedom, keyset disjointness,
linearizability) at desk scale."""

from .domains import (
    FlowDomain,
    LabelDomain,
    keyset_domain,
    last_edge_domain,
    law_check,
    lower_bound_domain,
    make_domain,
    make_label_domain,
    path_count_domain,
    product_domain,
    upper_bound_domain,
)
from .graphs import (
    FlowGraph,
    InflowedGraph,
    Undefined,
    attach,
    capacity,
    disjoint_union,
    fg_compose,
    fg_decompose,
    fg_equiv,
    flow_values,
    inflow_equiv,
    make_graph,
    project_inflow,
)
from .interfaces import (
    FlowInterface,
    contextual_extension,
    int_compose,
    interface_equal,
    interface_of,
    satisfies,
)
from .intervals import KeySet
from .conditions import (
    GlobalInvariant,
    Structure,
    builtin_condition,
    check_global,
    edgeset_report,
)
from .heap import (
    GhostAbort,
    State,
    abstract_region,
    dirty_region_ok,
    ghost_mark,
    ghost_sync,
    ghost_unmark,
    state_compose,
    synced_region_ok,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
