"""Plain-text formats for distortion tables and strictly causal designs.

Both follow the channel format's conventions (see probcore): 'key value'
headers, '#' comments, a block of whitespace-separated rows.

Distortion table::

    card_s 2
    card_shat 2
    rows
    0 1
    1 0

Design (input distribution plus test channel, x-major s-minor rows)::

    card_u 2
    input_pmf 0.5 0.5
    test_channel
    1 0
    0 1
    1 0
    0 1
"""

from __future__ import annotations

import numpy as np

from .cdsolve import JointDesign
from .errors import ParseError, ValidationError
from .estimator import DistortionTable
from .probcore import SimplexVector, StochasticTable


def _parse_blocks(text, int_fields, vector_fields, block_name):
    fields = {}
    rows = []
    in_block = False
    block_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_block:
            try:
                rows.append([float(v) for v in line.split()])
            except ValueError:
                raise ParseError(f"bad {block_name} row {line!r}", line=lineno)
            continue
        key, _, rest = line.partition(" ")
        if key == block_name:
            in_block = True
            block_line = lineno
        elif key in int_fields:
            try:
                fields[key] = int(rest.strip())
            except ValueError:
                raise ParseError(f"{key} must be an integer, got {rest.strip()!r}", line=lineno)
        elif key in vector_fields:
            try:
                fields[key] = [float(v) for v in rest.split()]
            except ValueError:
                raise ParseError(f"bad {key} {rest!r}", line=lineno)
        else:
            raise ParseError(f"unknown field {key!r}", line=lineno)
    if not in_block:
        raise ParseError(f"missing {block_name} block")
    return fields, rows, block_line


def parse_distortion(text: str) -> DistortionTable:
    fields, rows, block_line = _parse_blocks(text, ("card_s", "card_shat"), (), "rows")
    for key in ("card_s", "card_shat"):
        if key not in fields:
            raise ParseError(f"missing field {key!r}")
    if len(rows) != fields["card_s"]:
        raise ParseError(
            f"expected {fields['card_s']} rows, found {len(rows)}", line=block_line
        )
    if any(len(r) != fields["card_shat"] for r in rows):
        raise ParseError(f"rows must have card_shat={fields['card_shat']} entries",
                         line=block_line)
    try:
        return DistortionTable(np.array(rows))
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc


def serialize_distortion(d: DistortionTable) -> str:
    lines = [f"card_s {d.card_s}", f"card_shat {d.card_shat}", "rows"]
    for row in d.d:
        lines.append(" ".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def parse_design(text: str, card_x: int, card_s: int) -> JointDesign:
    """Parse a strictly causal design; channel alphabets fix the row count."""
    fields, rows, block_line = _parse_blocks(text, ("card_u",), ("input_pmf",), "test_channel")
    for key in ("card_u", "input_pmf"):
        if key not in fields:
            raise ParseError(f"missing field {key!r}")
    if len(fields["input_pmf"]) != card_x:
        raise ParseError(f"input_pmf must have card_x={card_x} entries")
    if len(rows) != card_x * card_s:
        raise ParseError(
            f"expected card_x*card_s={card_x * card_s} test_channel rows, found {len(rows)}",
            line=block_line,
        )
    if any(len(r) != fields["card_u"] for r in rows):
        raise ParseError(f"rows must have card_u={fields['card_u']} entries", line=block_line)
    try:
        return JointDesign(
            SimplexVector(np.array(fields["input_pmf"])),
            StochasticTable(np.array(rows)),
            fields["card_u"],
        )
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc


def serialize_design(design: JointDesign) -> str:
    lines = [
        f"card_u {design.card_u}",
        "input_pmf " + " ".join(format(v, ".17g") for v in design.input_pmf.probs),
        "test_channel",
    ]
    for row in design.test_channel.rows:
        lines.append(" ".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"
