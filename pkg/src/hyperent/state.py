"""Sparse pure states of one or two photons.

A photon is labeled by its polarization, frequency (an integer in units of the
lowest signal frequency) and spatial mode. A :class:`PureState` maps a tuple of
such labels, one per photon, to a complex amplitude. Every operation returns a
new state; nothing is mutated after construction.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateStateError, UsageError

ERASED = "*"
"""Sentinel for a degree of freedom that carries no information (never omitted)."""

SPARSITY = 1e-14
UNITARY_ATOL = 1e-12
NORM_ATOL = 1e-9

POLARIZATIONS = ("H", "V")
PHOTON_FREQS = (1, 2, 4, 8)
PUMP_FREQS = (3, 12)
DOFS = ("pol", "freq", "mode")


class PhotonLabel(NamedTuple):
    pol: str
    freq: int | str
    mode: str

    def __str__(self) -> str:
        return f"{self.pol},{self.freq},{self.mode}"


Key = tuple[PhotonLabel, ...]


def _standard_modes() -> frozenset[str]:
    modes = {"p", "p_v", "pu", "pl"}
    for x in "ab":
        for n in "12":
            modes |= {f"{x}{n}", f"{x}{n}_v"}
        for ij in ("11", "12", "21", "22"):
            modes.add(f"{x}{ij}")
            modes |= {f"{x}{ij}@{f}" for f in PHOTON_FREQS}
        modes |= {f"{x}T1", f"{x}B1", f"{x}T2", f"{x}B2", f"{x}u", f"{x}d"}
    return frozenset(modes)


@dataclass(frozen=True)
class Registry:
    """The set of mode and frequency values a state may reference."""

    modes: frozenset[str]
    freqs: frozenset[int]

    def check(self, label: PhotonLabel) -> None:
        if label.pol not in POLARIZATIONS and label.pol != ERASED:
            raise UsageError(f"unknown polarization {label.pol!r}")
        if label.freq != ERASED and label.freq not in self.freqs:
            raise UsageError(f"unregistered frequency {label.freq!r}")
        if label.mode != ERASED and label.mode not in self.modes:
            raise UsageError(f"unregistered mode {label.mode!r}")

    def has_mode(self, mode: str) -> bool:
        return mode in self.modes


STANDARD = Registry(_standard_modes(), frozenset((1, 2, 3, 4, 6, 8, 12)))


class PureState:
    """Immutable sparse state vector.

    Args:
        amplitudes: map from label tuples (one label per photon) to amplitudes.
        arity: number of photons; inferred from the keys when omitted.
        registry: allowed modes and frequencies.

    Amplitudes with magnitude below ``SPARSITY`` are dropped.
    """

    __slots__ = ("_amps", "arity", "registry")

    def __init__(
        self,
        amplitudes: Mapping[Key, complex] | Iterable[tuple[Key, complex]],
        arity: int | None = None,
        registry: Registry = STANDARD,
    ):
        items = amplitudes.items() if isinstance(amplitudes, Mapping) else amplitudes
        amps: dict[Key, complex] = {}
        for key, amp in items:
            key = tuple(PhotonLabel(*lab) for lab in key)
            if arity is None:
                arity = len(key)
            if len(key) != arity:
                raise UsageError(f"label {key} does not have arity {arity}")
            for lab in key:
                registry.check(lab)
            amps[key] = amps.get(key, 0j) + complex(amp)
        if arity not in (1, 2):
            raise UsageError(f"arity must be 1 or 2, got {arity}")
        self._amps = {k: a for k, a in amps.items() if abs(a) >= SPARSITY}
        self.arity = arity
        self.registry = registry

    @classmethod
    def _trusted(cls, amps: Mapping[Key, complex], arity: int, registry: Registry) -> "PureState":
        # labels already validated by the caller
        self = object.__new__(cls)
        self._amps = {k: a for k, a in amps.items() if abs(a) >= SPARSITY}
        self.arity = arity
        self.registry = registry
        return self

    @classmethod
    def basis(cls, *labels: PhotonLabel | tuple, registry: Registry = STANDARD) -> "PureState":
        """Return the basis state with amplitude 1 on ``labels``."""
        return cls({tuple(labels): 1.0}, registry=registry)

    @property
    def amplitudes(self) -> Mapping[Key, complex]:
        return MappingProxyType(self._amps)

    def items(self):
        return self._amps.items()

    def __iter__(self) -> Iterator[Key]:
        return iter(self._amps)

    def __len__(self) -> int:
        return len(self._amps)

    def __getitem__(self, key: Key) -> complex:
        return self._amps.get(tuple(key), 0j)

    def __repr__(self) -> str:
        terms = " + ".join(
            f"({a.real:.4g}{a.imag:+.4g}j)|{';'.join(map(str, k))}>" for k, a in list(self._amps.items())[:6]
        )
        more = "" if len(self) <= 6 else f" + ... ({len(self)} terms)"
        return f"PureState({terms}{more})"

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._amps.values()))

    def weight(self) -> float:
        """Squared norm."""
        return sum(abs(a) ** 2 for a in self._amps.values())

    def support(self, photon: int) -> set[PhotonLabel]:
        return {key[photon] for key in self._amps}

    def _check_compatible(self, other: "PureState") -> None:
        if self.arity != other.arity:
            raise UsageError(f"arity mismatch: {self.arity} vs {other.arity}")
        if self.registry != other.registry:
            raise UsageError("states come from different registries")

    def __add__(self, other: "PureState") -> "PureState":
        self._check_compatible(other)
        out = dict(self._amps)
        for k, a in other.items():
            out[k] = out.get(k, 0j) + a
        return PureState._trusted(out, self.arity, self.registry)

    def __sub__(self, other: "PureState") -> "PureState":
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> "PureState":
        scalar = complex(scalar)
        return PureState._trusted({k: a * scalar for k, a in self.items()}, self.arity, self.registry)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "PureState":
        return self * (1 / scalar)

    def allclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        """Entrywise comparison of the two amplitude maps."""
        self._check_compatible(other)
        keys = self._amps.keys() | other._amps.keys()
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    def canonical(self) -> "PureState":
        """Fix the global phase: the largest amplitude (first in label order on ties) is real positive."""
        if not self._amps:
            return self
        keys = sorted(self._amps, key=lambda k: tuple(map(str, k)))
        peak = max(abs(self._amps[k]) for k in keys)
        lead = next(k for k in keys if abs(self._amps[k]) >= peak - 1e-12)
        a = self._amps[lead]
        return self * (abs(a) / a)

    def map_photon(
        self, photon: int | None, fn: Callable[[PhotonLabel], Iterable[tuple[PhotonLabel, complex]]]
    ) -> "PureState":
        """Apply a single-photon linear map given by its action on basis labels.

        ``photon=None`` applies the map to every photon (an element that all
        photons pass through).
        """
        photons = range(self.arity) if photon is None else (self._photon_index(photon),)
        amps = self._amps
        for p in photons:
            cache: dict[PhotonLabel, tuple] = {}
            out: dict[Key, complex] = defaultdict(complex)
            for key, amp in amps.items():
                lab = key[p]
                images = cache.get(lab)
                if images is None:
                    images = tuple((new, complex(c)) for new, c in fn(lab))
                    for new, _ in images:
                        self.registry.check(new)
                    cache[lab] = images
                for new, c in images:
                    out[key[:p] + (new,) + key[p + 1 :]] += amp * c
            amps = out
        return PureState._trusted(amps, self.arity, self.registry)

    def relabel(self, photon: int | None, fn: Callable[[PhotonLabel], PhotonLabel]) -> "PureState":
        """Injective relabeling; raises :class:`UsageError` if two labels collide."""
        photons = range(self.arity) if photon is None else (self._photon_index(photon),)
        amps = self._amps
        for p in photons:
            out: dict[Key, complex] = {}
            for key, amp in amps.items():
                new = fn(key[p])
                self.registry.check(new)
                nkey = key[:p] + (new,) + key[p + 1 :]
                if nkey in out:
                    raise UsageError(f"relabeling merges distinct labels into {nkey}")
                out[nkey] = amp
            amps = out
        return PureState._trusted(amps, self.arity, self.registry)

    def filter(self, keep: Callable[[Key], bool]) -> "PureState":
        """Unnormalized projection onto the labels selected by ``keep``."""
        return PureState._trusted({k: a for k, a in self.items() if keep(k)}, self.arity, self.registry)

    def _photon_index(self, photon: int) -> int:
        if photon not in range(self.arity):
            raise UsageError(f"photon {photon} out of range for arity {self.arity}")
        return photon


def photon_index(photon: int | str) -> int:
    """Accept 0/1 or 'A'/'B'."""
    if isinstance(photon, str):
        try:
            return {"A": 0, "B": 1}[photon.upper()]
        except KeyError:
            raise UsageError(f"unknown photon {photon!r}") from None
    return photon


def tensor(a: PureState, b: PureState) -> PureState:
    """Two-photon product state ``a ⊗ b``."""
    if a.arity != 1 or b.arity != 1:
        raise UsageError("tensor expects two single-photon states")
    if a.registry != b.registry:
        raise UsageError("states come from different registries")
    amps = {(ka[0], kb[0]): x * y for ka, x in a.items() for kb, y in b.items()}
    return PureState._trusted(amps, 2, a.registry)


def inner_product(a: PureState, b: PureState) -> complex:
    """``⟨a|b⟩``, conjugate-linear in ``a``."""
    a._check_compatible(b)
    keys = a if len(a) <= len(b) else b
    return complex(sum(a[k].conjugate() * b[k] for k in keys))


def fidelity(a: PureState, b: PureState) -> float:
    """``|⟨a|b⟩|²`` for normalized states."""
    for s in (a, b):
        if abs(s.norm() - 1) > NORM_ATOL:
            raise UsageError(f"fidelity needs normalized states (norm {s.norm():.6g})")
    return abs(inner_product(a, b)) ** 2


def normalize(state: PureState) -> tuple[PureState, float]:
    """Return the normalized state and the norm it had before."""
    n = state.norm()
    if n == 0:
        raise DegenerateStateError("cannot normalize the zero state")
    return state / n, n


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(len(u)), rtol=0, atol=atol)


def apply_mode_unitary(
    state: PureState, photon: int | str | None, dof: str, u: np.ndarray, values: Sequence[Hashable]
) -> PureState:
    """Apply ``u`` to one degree of freedom of a photon.

    ``u[r, c]`` is the amplitude for ``values[c] -> values[r]``. Labels whose
    ``dof`` value is not listed are left untouched.
    """
    if dof not in DOFS:
        raise UsageError(f"unknown degree of freedom {dof!r}")
    u = np.asarray(u, dtype=complex)
    if len(values) != len(set(values)) or u.shape != (len(values), len(values)):
        raise UsageError("matrix must be square over distinct values")
    if not is_unitary(u):
        raise UsageError("matrix is not unitary")
    probe = PhotonLabel(ERASED, ERASED, ERASED)
    for v in values:
        state.registry.check(probe._replace(**{dof: v}))
    index = {v: c for c, v in enumerate(values)}
    n = len(values)

    def act(label: PhotonLabel):
        c = index.get(getattr(label, dof))
        if c is None:
            return ((label, 1.0),)
        return tuple((label._replace(**{dof: values[r]}), u[r, c]) for r in range(n) if u[r, c] != 0)

    return state.map_photon(None if photon is None else photon_index(photon), act)


Branch = tuple[Hashable, PureState, float]


def measurement_branches(state: PureState, outcome_of: Callable[[Key], Hashable]) -> list[Branch]:
    """Enumerate ``(outcome, collapsed normalized state, probability)`` for a projective readout.

    Outcomes appear in order of first occurrence in the state, which keeps
    seeded sampling reproducible.
    """
    groups: dict[Hashable, dict[Key, complex]] = {}
    for key, amp in state.items():
        groups.setdefault(outcome_of(key), {})[key] = amp
    total = state.weight()
    if total == 0:
        raise DegenerateStateError("cannot measure the zero state")
    branches = []
    for outcome, amps in groups.items():
        w = sum(abs(a) ** 2 for a in amps.values())
        collapsed = PureState._trusted({k: a / math.sqrt(w) for k, a in amps.items()}, state.arity, state.registry)
        branches.append((outcome, collapsed, w / total))
    return branches


def choose(branches: Sequence[Branch], rng: np.random.Generator) -> Branch:
    """Sample one branch by its probability."""
    r = rng.random()
    acc = 0.0
    for b in branches:
        acc += b[2]
        if r < acc:
            return b
    return branches[-1]


def measure(state: PureState, outcome_of: Callable[[Key], Hashable], rng: np.random.Generator) -> Branch:
    return choose(measurement_branches(state, outcome_of), rng)


def marginal_distribution(state: PureState, photon: int | str, dof: str) -> dict[Hashable, float]:
    """Probability of each value of ``dof`` on one photon."""
    p = state._photon_index(photon_index(photon))
    if dof not in DOFS:
        raise UsageError(f"unknown degree of freedom {dof!r}")
    total = state.weight()
    dist: dict[Hashable, float] = {}
    for key, amp in state.items():
        v = getattr(key[p], dof)
        dist[v] = dist.get(v, 0.0) + abs(amp) ** 2 / total
    return dist


def project_photon(state: PureState, photon: int | str, bra: PureState) -> PureState:
    """Contract one photon of a two-photon state with ``⟨bra|``.

    Returns the unnormalized conditional state of the other photon.
    """
    p = state._photon_index(photon_index(photon))
    if state.arity != 2 or bra.arity != 1:
        raise UsageError("project_photon expects a two-photon state and a one-photon bra")
    conj = {k[0]: a.conjugate() for k, a in bra.items()}
    out: dict[Key, complex] = defaultdict(complex)
    for key, amp in state.items():
        c = conj.get(key[p])
        if c is not None:
            out[(key[1 - p],)] += c * amp
    return PureState._trusted(out, 1, state.registry)


def photon_factor(state: PureState, photon: int | str) -> PureState:
    """Single-photon factor of a two-photon product state (up to phase).

    Raises :class:`UsageError` if the state is entangled.
    """
    p = state._photon_index(photon_index(photon))
    lead = max(state, key=lambda k: abs(state[k]))
    other = lead[1 - p]
    factor = PureState._trusted(
        {(k[p],): a for k, a in state.items() if k[1 - p] == other}, 1, state.registry
    )
    factor = normalize(factor)[0]
    rest = project_photon(state, p, factor)
    rebuilt = tensor(factor, rest) if p == 0 else tensor(rest, factor)
    if not rebuilt.allclose(state, atol=1e-10):
        raise UsageError("state is not a product across the two photons")
    return factor


# State dump format: one CSV record per label, sorted, amplitudes at full precision.

DUMP_FIELDS = ("polA", "freqA", "modeA", "polB", "freqB", "modeB", "re", "im")
DUMP_HEADER = "# hyperent-state v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_state(state: PureState) -> str:
    buf = io.StringIO()
    buf.write(f"{DUMP_HEADER} arity={state.arity}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DUMP_FIELDS)
    for key in sorted(state, key=lambda k: tuple(map(str, k))):
        amp = state[key]
        fields = [str(v) for lab in key for v in lab]
        fields += [""] * (6 - len(fields))
        w.writerow(fields + [_fmt(amp.real), _fmt(amp.imag)])
    return buf.getvalue()


def load_state(text: str, registry: Registry = STANDARD) -> PureState:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(DUMP_HEADER):
        raise UsageError("missing state dump header")
    arity = int(lines[0].split("arity=")[1])
    rows = list(csv.reader(lines[1:]))
    if tuple(rows[0]) != DUMP_FIELDS:
        raise UsageError("unexpected dump columns")

    def label(pol: str, freq: str, mode: str) -> PhotonLabel:
        return PhotonLabel(pol, freq if freq == ERASED else int(freq), mode)

    amps = {}
    for row in rows[1:]:
        labs = tuple(label(*row[3 * n : 3 * n + 3]) for n in range(arity))
        amps[labs] = complex(float(row[6]), float(row[7]))
    return PureState(amps, arity=arity, registry=registry)
