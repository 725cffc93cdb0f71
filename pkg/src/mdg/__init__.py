"""mdg: a miniature dataflow-graph kernel compiler and benchmark suite.

Pipeline: express the spectral-element stiffness apply as a dataflow graph,
transform it (tiling, fusion, scratch promotion, ...), interpret it or lower
it to portable C, and verify/benchmark everything against a brute-force
numerical oracle with bit-exact expectations.
"""

from .errors import (
    ApplicabilityError,
    BindingError,
    CodegenError,
    ContractError,
    GraphLookupError,
    MdgError,
    NumericError,
    ParseError,
    RangeError,
    UninitializedReadError,
    VersionError,
)
from .sem import (
    ElementField,
    GeomFactors,
    GllBasis,
    ax_reference,
    box_geometry,
    dense_assemble,
    flops_model,
    gll_basis,
    legendre_eval,
    operator_matrices,
    random_spd_geometry,
)
from .symexpr import Affine, MinExpr, make_min, parse_affine
from .ir import (
    CopyNode,
    DataContainer,
    DataflowGraph,
    Diagnostic,
    ForNode,
    MapNode,
    Memlet,
    Range,
    Schedule,
    State,
    Storage,
    Tasklet,
    Wcr,
    structurally_equal,
    validate,
)
from .axprogram import ABI_CONTAINER_ORDER, ax_arrays, build_ax_program
from .serde import SCHEMA_VERSION, deserialize, serialize
from .interp import Bindings, execute
from .transforms import (
    PassRecipe,
    apply_device_transformations,
    apply_recipe,
    ax_optimization_recipe,
    local_storage,
    map_collapse,
    map_expansion,
    map_fusion,
    map_tiling,
    map_to_for_loop,
    parse_recipe,
    set_schedule,
    simplify,
    state_fusion,
    strip_mining,
    warp_tiling,
)
from .codegen import EmitConfig, generate_interface_header, generate_source
from .bench import BenchRecord, read_csv, run_bench, write_csv
from .plotsvg import plot_svg

__version__ = "0.1.0"

__all__ = [
    "MdgError",
    "RangeError",
    "ContractError",
    "NumericError",
    "GraphLookupError",
    "ApplicabilityError",
    "ParseError",
    "VersionError",
    "BindingError",
    "UninitializedReadError",
    "CodegenError",
    "GllBasis",
    "ElementField",
    "GeomFactors",
    "legendre_eval",
    "gll_basis",
    "box_geometry",
    "random_spd_geometry",
    "operator_matrices",
    "ax_reference",
    "dense_assemble",
    "flops_model",
    "Affine",
    "MinExpr",
    "make_min",
    "parse_affine",
    "DataflowGraph",
    "DataContainer",
    "State",
    "MapNode",
    "ForNode",
    "Tasklet",
    "CopyNode",
    "Memlet",
    "Range",
    "Storage",
    "Schedule",
    "Wcr",
    "Diagnostic",
    "validate",
    "structurally_equal",
    "ABI_CONTAINER_ORDER",
    "build_ax_program",
    "ax_arrays",
    "SCHEMA_VERSION",
    "serialize",
    "deserialize",
    "Bindings",
    "execute",
    "PassRecipe",
    "parse_recipe",
    "apply_recipe",
    "map_expansion",
    "map_collapse",
    "map_fusion",
    "map_tiling",
    "strip_mining",
    "warp_tiling",
    "local_storage",
    "state_fusion",
    "map_to_for_loop",
    "set_schedule",
    "simplify",
    "apply_device_transformations",
    "ax_optimization_recipe",
    "EmitConfig",
    "generate_source",
    "generate_interface_header",
    "BenchRecord",
    "run_bench",
    "write_csv",
    "read_csv",
    "plot_svg",
    "__version__",
]
