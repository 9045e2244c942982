"""Extended integers: ℤ ∪ {−∞, +∞} as plain Python numbers.

Finite values are `int`; the two infinities are `math.inf` and `-math.inf`. Python
already orders these correctly, so comparisons need no helper. Addition does:
`-inf + inf` is `nan` in float arithmetic, and here it is an error instead.
"""

import math
from typing import Annotated

from pydantic import BeforeValidator, PlainSerializer, WithJsonSchema

from tcr.utils.errors import ExtendedArithmeticError

POS_INF = math.inf
NEG_INF = -math.inf

POS_INF_TOKEN = "+inf"
NEG_INF_TOKEN = "-inf"


def is_finite(value: int | float) -> bool:
    return value not in (POS_INF, NEG_INF)


def ext_add(a: int | float, b: int | float) -> int | float:
    if (a == NEG_INF and b == POS_INF) or (a == POS_INF and b == NEG_INF):
        raise ExtendedArithmeticError("-inf + +inf is undefined")
    return a + b


def parse_extended(value: object) -> int | float:
    """Coerce scenario-file input to an extended integer.

    Accepts ints, integral floats, ±inf floats, and the string tokens
    "-inf", "+inf", "inf" and decimal integer strings. Booleans are rejected.
    """
    if isinstance(value, bool):
        raise ValueError("boolean is not an extended integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isinf(value):
            return value
        if value.is_integer():
            return int(value)
        raise ValueError(f"{value!r} is not integral")
    if isinstance(value, str):
        token = value.strip().lower()
        if token in (POS_INF_TOKEN, "inf", "infinity", "+infinity"):
            return POS_INF
        if token in (NEG_INF_TOKEN, "-infinity"):
            return NEG_INF
        try:
            return int(token)
        except ValueError:
            raise ValueError(f"{value!r} is not an extended integer") from None
    raise ValueError(f"{value!r} is not an extended integer")


def format_extended(value: int | float) -> str:
    if value == POS_INF:
        return POS_INF_TOKEN
    if value == NEG_INF:
        return NEG_INF_TOKEN
    return str(int(value))


def to_json_extended(value: int | float) -> int | str:
    if is_finite(value):
        return int(value)
    return format_extended(value)


def from_matrix_cell(value: float) -> int | float:
    """numpy float64 cell back to the extended-integer convention."""
    if math.isinf(value):
        return POS_INF if value > 0 else NEG_INF
    return int(value)


ExtendedInt = Annotated[
    int | float,
    BeforeValidator(parse_extended),
    PlainSerializer(to_json_extended, when_used="json"),
    WithJsonSchema({"anyOf": [{"type": "integer"}, {"enum": [NEG_INF_TOKEN, POS_INF_TOKEN], "type": "string"}]}),
]
