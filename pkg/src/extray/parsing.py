"""Parsing of polynomial and complex-number command inputs."""

from __future__ import annotations

import re

from .errors import NotMonic, ParseError
from .poly import Polynomial

_BARE_I = re.compile(r"(^|[+\-*/(])j")


def parse_complex(text: str) -> complex:
    """Parse "a+bi" style input (also bare reals, "i", "2i", "1e-3i")."""
    s = text.strip().replace("−", "-").replace(" ", "")
    if not s:
        raise ParseError("empty complex literal")
    s = s.replace("i", "j")
    s = _BARE_I.sub(r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError as exc:
        raise ParseError(f"bad complex literal {text!r}") from exc


def parse_polynomial(text: str) -> Polynomial:
    """Coefficients constant-term first ("-2,0,1"), or "q:c" for z^2 + c.

    Non-monic input is rejected: divide through by the leading coefficient
    and absorb the scale with the affine change z -> a^(1/(d-1)) z first.
    """
    s = text.strip()
    if s.startswith("q:"):
        return Polynomial.quadratic(parse_complex(s[2:]))
    parts = s.split(",")
    coeffs: list[complex] = []
    pos = 0
    for part in parts:
        if not part.strip():
            raise ParseError(f"empty coefficient at position {pos}")
        try:
            coeffs.append(parse_complex(part))
        except ParseError as exc:
            raise ParseError(f"coefficient {pos}: {exc}") from exc
        pos += 1
    if len(coeffs) < 3:
        raise ParseError("need degree >= 2 (at least three coefficients)")
    if coeffs[-1] != 1:
        raise NotMonic(
            f"leading coefficient is {coeffs[-1]}, not 1; divide through by it "
            "and rescale z by a^(1/(d-1)) to renormalize, then retry"
        )
    return Polynomial.from_coefficients(coeffs)
