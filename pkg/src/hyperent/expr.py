"""Build states from product-of-sums notation.

Expressions are written the way photon states are usually written by hand::

    (H V + V H)(w11 w12 + w12 w11)(a11 b11 - a12 b12)

Juxtaposition multiplies, ``+``/``-`` add, and numbers scale. Inside one
expanded monomial the first symbol of each degree of freedom belongs to
photon A and the second to photon B. Symbols:

* ``H``, ``V``: polarization
* ``w11 w12 w21 w22``: photon frequencies 1, 2, 4, 8; ``w1``/``w2``: pump
  frequencies 3 and 12; ``f<n>``: frequency ``n`` verbatim
* anything else: a spatial mode name

A degree of freedom that never appears is set to :data:`~hyperent.state.ERASED`.
"""

from __future__ import annotations

import re
from collections import defaultdict

from .errors import UsageError
from .state import ERASED, STANDARD, PhotonLabel, PureState, Registry, normalize

FREQ_SYMBOLS = {"w11": 1, "w12": 2, "w21": 4, "w22": 8, "w1": 3, "w2": 12}

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)|([A-Za-z][A-Za-z0-9_@]*)|(.))")

Monomial = tuple[complex, tuple[str, ...]]


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    for num, ident, op in _TOKEN.findall(text):
        if num:
            tokens.append(("num", num))
        elif ident:
            tokens.append(("sym", ident))
        elif op.strip():
            if op not in "+-*()":
                raise UsageError(f"unexpected character {op!r} in {text!r}")
            tokens.append(("op", op))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.text = text

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise UsageError(f"expected {value!r} in {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> list[Monomial]:
        out = self.sum()
        if self.pos != len(self.tokens):
            raise UsageError(f"trailing input in {self.text!r}")
        return out

    def sum(self) -> list[Monomial]:
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        out = [(sign * c, s) for c, s in self.product()]
        while self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
            out += [(sign * c, s) for c, s in self.product()]
        return out

    def product(self) -> list[Monomial]:
        out: list[Monomial] = [(1, ())]
        seen = False
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                continue
            if kind == "num":
                self.take()
                factor = [(complex(float(val)), ())]
            elif kind == "sym":
                self.take()
                factor = [(1, (val,))]
            elif val == "(":
                self.take()
                factor = self.sum()
                self.take(")")
            else:
                break
            seen = True
            out = [(c1 * c2, s1 + s2) for c1, s1 in out for c2, s2 in factor]
        if not seen:
            raise UsageError(f"empty product in {self.text!r}")
        return out


def _classify(symbol: str) -> tuple[str, object]:
    if symbol in ("H", "V"):
        return "pol", symbol
    if symbol in FREQ_SYMBOLS:
        return "freq", FREQ_SYMBOLS[symbol]
    if re.fullmatch(r"f\d+", symbol):
        return "freq", int(symbol[1:])
    return "mode", symbol


def expand(text: str) -> list[Monomial]:
    """Fully distribute ``text`` into ``(coefficient, symbols)`` monomials."""
    return _Parser(text).parse()


def state_from_expr(text: str, registry: Registry = STANDARD, normalized: bool = True) -> PureState:
    """Evaluate ``text`` into a :class:`PureState` (normalized by default)."""
    amps: dict[tuple[PhotonLabel, ...], complex] = defaultdict(complex)
    arity = None
    for coef, symbols in expand(text):
        per_dof: dict[str, list] = {"pol": [], "freq": [], "mode": []}
        for sym in symbols:
            dof, value = _classify(sym)
            per_dof[dof].append(value)
        n = max(len(v) for v in per_dof.values())
        if any(len(v) not in (0, n) for v in per_dof.values()):
            raise UsageError(f"monomial {' '.join(symbols)} does not give every photon the same fields")
        if arity is None:
            arity = n
        elif n != arity:
            raise UsageError(f"mixed photon counts in {text!r}")
        key = tuple(
            PhotonLabel(*(per_dof[d][k] if per_dof[d] else ERASED for d in ("pol", "freq", "mode")))
            for k in range(n)
        )
        amps[key] += coef
    state = PureState(amps, arity=arity, registry=registry)
    if normalized:
        state = normalize(state)[0]
    return state
