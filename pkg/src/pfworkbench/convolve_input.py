"""Line-oriented input for the ``convolve`` command.

Two blocks, one per curve::

    # comments start with '#'
    [system]
    fibre = s
    param = nu
    radical u1 = s ; s - 1 ; s - nu^2
    A = -(1 - 3*nu^2)/(nu*(1 - nu^2))
    B = 1/(1 - nu^2)
    beta = 2/((1 - nu^2)*(s - nu^2)^2) * u1

``radical`` lists the factors of the radicand separated by ``;``.  ``beta``
is ``<rational function> * <radical>`` or a plain rational function.  Parse
errors report the line and column of the offending text.
"""

from __future__ import annotations

import re

from .forms import AlgElem, SqrtContext
from .grammar import ParseError, parse_ratfun
from .families import InhomSystem2

__all__ = ["parse_systems", "ParseError"]

_KEYS = ("fibre", "param", "radical", "A", "B", "beta")


def _err(msg, line_no, col=1, text=""):
    return ParseError(msg, text, col - 1, line_no, 0)


def parse_systems(text):
    blocks = []
    cur = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.strip() == "[system]":
            cur = {"_line": line_no}
            blocks.append(cur)
            continue
        if cur is None:
            raise _err("expected '[system]' before the first entry", line_no)
        m = re.match(r"\s*(radical)\s+([A-Za-z_]\w*)\s*=\s*", line)
        if m:
            cur["radical"] = (m.group(2), line[m.end():], line_no, m.end())
            continue
        m = re.match(r"\s*([A-Za-z_]\w*)\s*=\s*", line)
        if not m:
            raise _err("expected 'key = value'", line_no, len(line) - len(line.lstrip()) + 1, line)
        key = m.group(1)
        if key not in _KEYS:
            raise _err(f"unknown key {key!r}", line_no, m.start(1) + 1, line)
        cur[key] = (line[m.end():], line_no, m.end())
    systems = tuple(_build(b) for b in blocks)
    if len(systems) != 2:
        raise _err(f"expected exactly two [system] blocks, found {len(systems)}", 1)
    return systems


def _build(block):
    for k in ("fibre", "param"):
        if k not in block:
            raise _err(f"system is missing {k!r}", block["_line"])
    fibre = block["fibre"][0].strip()
    param = block["param"][0].strip()
    vs = (fibre, param)
    parsed = {}
    # parse what is there in file order so syntax errors surface before missing keys
    for key in sorted((k for k in _KEYS[2:] if k in block), key=lambda k: block[k][-2]):
        if key == "radical":
            name, rtext, rline, rcol = block["radical"]
            factors = []
            offset = rcol
            for piece in rtext.split(";"):
                if piece.strip():
                    factors.append(parse_ratfun(piece, vs, rline, offset))
                offset += len(piece) + 1
            parsed["radical"] = (name, factors)
        elif key in ("A", "B"):
            text, line, col = block[key]
            parsed[key] = parse_ratfun(text, (param,), line, col).with_vars(vs)
        else:
            parsed["beta"] = block["beta"]
    for k in _KEYS:
        if k not in block:
            raise _err(f"system is missing {k!r}", block["_line"])
    name, factors = parsed["radical"]
    ctx = SqrtContext([(name, factors)], (fibre,), param)
    btext, bline, bcol = parsed["beta"]
    m = re.match(r"(.*)\*\s*" + re.escape(name) + r"\s*$", btext)
    if m:
        coeff = parse_ratfun(m.group(1), vs, bline, bcol)
        beta = AlgElem.radical(ctx, name) * coeff
    else:
        beta = AlgElem.scalar(ctx, parse_ratfun(btext, vs, bline, bcol))
    return InhomSystem2(parsed["A"], parsed["B"], beta, ctx)
