from .matpower import (
    BRANCH_COLS,
    BUS_COLS,
    GEN_COLS,
    DanglingReferenceError,
    DuplicateBusError,
    MatpowerCase,
    MatpowerSyntaxError,
    case_to_network,
    load_case,
    load_network,
    matpower_parse,
)
from .yaml_config import (
    LoopSpecError,
    ParserRegistry,
    UnboundVariableError,
    UnknownKeywordError,
    YamlConfigError,
    YamlContext,
    YamlScope,
    apply_yaml_file,
    default_registry,
    load_yaml_file,
    loop_expand,
    substitute,
    substitute_string,
    yaml_apply,
)

__all__ = [
    "YamlConfigError",
    "UnknownKeywordError",
    "UnboundVariableError",
    "LoopSpecError",
    "YamlScope",
    "YamlContext",
    "ParserRegistry",
    "default_registry",
    "substitute",
    "substitute_string",
    "loop_expand",
    "yaml_apply",
    "load_yaml_file",
    "apply_yaml_file",
    "BUS_COLS",
    "GEN_COLS",
    "BRANCH_COLS",
    "MatpowerCase",
    "MatpowerSyntaxError",
    "DanglingReferenceError",
    "DuplicateBusError",
    "matpower_parse",
    "load_case",
    "load_network",
    "case_to_network",
]
