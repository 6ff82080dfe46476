"""Reading and writing workflows: the line-oriented text notation and
the JSON interchange form."""

from .cwn import ParseError, parse_cwn, to_cwn
from .jsonio import SchemaError, from_dict, to_dict
from .jsonio import dumps as dumps_json
from .jsonio import loads as loads_json

__all__ = [
    "ParseError",
    "SchemaError",
    "parse_cwn",
    "to_cwn",
    "from_dict",
    "to_dict",
    "dumps_json",
    "loads_json",
]
