"""Command-line entry point: ``hyperent {generate,verify,discriminate,qkd}``.

Every command prints a report that starts with a schema header carrying the
seed and ends with a status line. Exit status is 0 iff every check passed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import discrimination, pipeline, qkd
from .rng import stream
from .state import ERASED, PHOTON_FREQS, PhotonLabel, PureState, dump_state, inner_product
from .verify import run_battery

REPORT_SCHEMA = "hyperent-report/1"
FIDELITY_FLOOR = 1 - 1e-9


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 0
    rounds: int = 1000
    eve: float = 0.0
    eve_basis: str = "product"
    out: str | None = None
    dump_state: bool = False
    side: str = "A"
    i: int | None = None
    j: int | None = None
    trials: int = 1000

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0 <= self.eve <= 1:
            raise ValueError("--eve must lie in [0, 1]")


class Report:
    def __init__(self, command: str, seed: int, out=None):
        self.out = sys.stdout if out is None else out
        self.ok = True
        self.line(f"# {REPORT_SCHEMA} command={command} seed={seed}")

    def line(self, text: str) -> None:
        print(text, file=self.out)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.ok &= bool(passed)
        self.line(f"check\t{name}\t{'PASS' if passed else 'FAIL'}\t{detail}")

    def finish(self) -> int:
        self.line(f"status\t{'PASS' if self.ok else 'FAIL'}")
        return 0 if self.ok else 1


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_generate(cfg: RunConfig) -> int:
    rep = Report("generate", cfg.seed)
    checkpoints, p = pipeline.run_pipeline()
    for c in checkpoints:
        rep.check(f"fidelity/{c.stage}", c.fidelity >= FIDELITY_FLOOR, f"{c.fidelity:.15f}")
    rep.line(f"value\tsuccess_probability\t{p:.15f}")
    if cfg.dump_state:
        text = dump_state(checkpoints[-1].state)
        if cfg.out:
            _write(cfg.out, text)
            rep.line(f"value\tstate_dump\t{cfg.out}")
        else:
            rep.line(text.rstrip("\n"))
    return rep.finish()


def cmd_verify(cfg: RunConfig) -> int:
    rep = Report("verify", cfg.seed)
    for c in run_battery(cfg.seed):
        rep.check(c.name, c.passed, c.detail)
    return rep.finish()


def random_single_photon(rng: np.random.Generator, side: str) -> PureState:
    """Haar-like random state in one side's 16-dimensional frequency-spatial space."""
    modes = discrimination.spatial_modes(side)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    v /= np.linalg.norm(v)
    labels = [(PhotonLabel(ERASED, f, m),) for f in PHOTON_FREQS for m in modes]
    return PureState(dict(zip(labels, v)))


def cmd_discriminate(cfg: RunConfig) -> int:
    rep = Report("discriminate", cfg.seed)
    rng = stream(cfg.seed, 0)
    if cfg.i is None and cfg.j is None:
        state = random_single_photon(rng, cfg.side)
        rep.line(f"value\tinput\trandom superposition side={cfg.side}")
    elif cfg.i is None or cfg.j is None:
        rep.line("error\t--i and --j must be given together")
        return 2
    else:
        state = discrimination.basis_state(cfg.side, cfg.i, cfg.j)
        rep.line(f"value\tinput\tpsi_{cfg.i}{cfg.j} side={cfg.side}")
    expected = {
        o: abs(inner_product(discrimination.basis_state(cfg.side, *o), state)) ** 2 for o in qkd.OUTCOMES
    }
    counts = discrimination.discriminate_counts(state, cfg.trials, rng, cfg.side)
    worst = 0.0
    for o in qkd.OUTCOMES:
        n, p = counts.get(o, 0), expected[o]
        sigma = np.sqrt(cfg.trials * p * (1 - p))
        z = abs(n - cfg.trials * p) / sigma if sigma > 0 else (0.0 if n == cfg.trials * p else np.inf)
        worst = max(worst, z)
        rep.line(f"count\t{o.i}{o.j}\t{n}\texpected={cfg.trials * p:.3f}")
    rep.check("histogram_within_3sigma", worst <= 3, f"max z={worst:.3f}")
    if cfg.i is not None:
        hit = counts.get(discrimination.DiscriminationOutcome(cfg.i, cfg.j), 0)
        rep.check("deterministic", hit == cfg.trials, f"{hit}/{cfg.trials}")
    return rep.finish()


def cmd_qkd(cfg: RunConfig) -> int:
    key, stats = qkd.run_session(cfg.rounds, cfg.seed, cfg.eve, cfg.eve_basis)
    text = qkd.transcript(stats)
    if cfg.out:
        _write(cfg.out, text)
    rep = Report("qkd", cfg.seed)
    rep.line(f"value\trounds\t{stats.rounds}")
    rep.line(f"value\tkey_bits\t{stats.key_bits}")
    rep.line(f"value\terrors\t{stats.errors}")
    rep.line(f"value\terror_rate\t{stats.error_rate:.6f}")
    rep.line(f"value\teve_rounds\t{stats.eve_rounds}")
    rep.line(f"value\tper_k\t{','.join(map(str, stats.per_k))}")
    rep.line(f"value\tchi_square\t{stats.chi_square:.6f}\tthreshold99={stats.chi_square_threshold:.6f}")
    rep.check("key_bits", stats.key_bits == 8 * stats.rounds, f"{stats.key_bits}")
    if cfg.eve == 0:
        rep.check("noiseless_zero_errors", stats.errors == 0, f"{stats.errors}")
    if cfg.out:
        rep.line(f"value\ttranscript\t{cfg.out}")
    else:
        rep.line(text.rstrip("\n"))
    return rep.finish()


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "discriminate": cmd_discriminate,
    "qkd": cmd_qkd,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperent", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write the state dump or transcript here")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="run the source pipeline and check every stage")
    g.add_argument("--dump-state", action="store_true")

    sub.add_parser("verify", parents=[common], help="run the invariant battery")

    d = sub.add_parser("discriminate", parents=[common], help="histogram of apparatus outcomes")
    d.add_argument("--side", choices=("A", "B"), default="A")
    d.add_argument("--i", type=int, choices=range(1, 5))
    d.add_argument("--j", type=int, choices=range(1, 5))
    d.add_argument("--trials", type=int, default=1000)

    q = sub.add_parser("qkd", parents=[common], help="run a key-distribution session")
    q.add_argument("--rounds", type=int, default=1000)
    q.add_argument("--eve", type=float, default=0.0, help="per-round interception probability")
    q.add_argument("--eve-basis", choices=qkd.EVE_BASES, default="product")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fields = {k.replace("-", "_"): v for k, v in vars(args).items()}
    try:
        cfg = RunConfig(**fields)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
