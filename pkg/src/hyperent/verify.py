"""Invariant battery shared by the ``verify`` command and the test-suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrimination import HADAMARD_ROWS, basis_state, measure_photon
from .expr import state_from_expr
from .optics import BS_MATRIX
from .pipeline import run_pipeline
from .qkd import (
    OUTCOMES,
    PSI_S_EXPR,
    SIGMA_TARGETS,
    apply_sigma,
    correlation_table,
    cyclic_shift,
    decompose_products,
    decompose_sigma,
    source_state,
    product_prefactor,
    reconstruct_products,
    sigma_unitary,
    sign_pattern,
)
from .rng import stream
from .state import fidelity, inner_product, is_unitary, normalize, project_photon

TOL = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _gram(side: str) -> np.ndarray:
    states = [basis_state(side, *o) for o in OUTCOMES]
    return np.array([[inner_product(a, b) for b in states] for a in states])


def check_generation() -> list[Check]:
    checkpoints, p = run_pipeline()
    out = [
        Check(f"generation/{c.stage}", c.fidelity >= 1 - TOL, f"fidelity={c.fidelity:.15f}") for c in checkpoints
    ]
    out.append(Check("generation/postselect_probability", abs(p - 0.5) <= TOL, f"p={p:.15f}"))
    return out


def check_unitarity() -> list[Check]:
    worst = max(
        np.abs(sigma_unitary(k).u.conj().T @ sigma_unitary(k).u - np.eye(4)).max() for k in SIGMA_TARGETS
    )
    return [
        Check("unitarity/beam_splitter", is_unitary(BS_MATRIX), "(T+B)/sqrt2 -> T, (T-B)/sqrt2 -> B"),
        Check("unitarity/sigma", worst <= TOL, f"max|u^dag u - I|={worst:.3g}"),
    ]


def check_orthonormality() -> list[Check]:
    out = []
    for side in "AB":
        dev = np.abs(_gram(side) - np.eye(16)).max()
        out.append(Check(f"orthonormal/side_{side}", dev <= TOL, f"max|G - I|={dev:.3g}"))
    h = np.array(HADAMARD_ROWS)
    out.append(Check("orthonormal/sign_rows", np.array_equal(h @ h.T, 4 * np.eye(4)), "H H^T = 4 I"))
    return out


def check_sigma() -> list[Check]:
    psi_s = state_from_expr(PSI_S_EXPR)
    fids = [fidelity(apply_sigma(psi_s, k), state_from_expr(SIGMA_TARGETS[k])) for k in SIGMA_TARGETS]
    recomposed = 0
    for k in SIGMA_TARGETS:
        m, n = decompose_sigma(k)
        v = sign_pattern(n) @ cyclic_shift(m)
        recomposed += abs(abs(np.vdot(v, sigma_unitary(k).u)) / 4 - 1) <= TOL and 4 * m + n == k
    return [
        Check("sigma/targets", min(fids) >= 1 - TOL, f"min fidelity={min(fids):.15f}"),
        Check("sigma/identity", np.allclose(sigma_unitary(1).u, np.eye(4), atol=TOL), "u(1) = I"),
        Check("sigma/decompose", recomposed == 16, f"{recomposed}/16 recomposed"),
    ]


def check_product_expansion() -> list[Check]:
    coeffs = decompose_products(source_state())
    rebuilt = normalize(reconstruct_products(coeffs))[0]
    f = fidelity(rebuilt, source_state())
    mags = [abs(c) for c in coeffs.values()]
    summed = normalize(reconstruct_products({o: 1.0 for o in OUTCOMES}))[0]
    f_sum = fidelity(summed, source_state())
    c = product_prefactor()
    return [
        Check("products/reconstruction", f >= 1 - TOL, f"fidelity={f:.15f}"),
        Check("products/equal_weights", max(mags) - min(mags) <= TOL, f"|c_ij|={mags[0]:.15f}"),
        Check("products/normalized_sum", f_sum >= 1 - TOL, f"fidelity={f_sum:.15f} prefactor={c.real:.15g}"),
    ]


def check_correlations() -> list[Check]:
    table = correlation_table()
    diag = all(table[(1, o)] == o for o in OUTCOMES)
    return [
        Check("correlation/injective", table.is_injective(), f"{len(table.entries)} entries"),
        Check("correlation/sigma1_diagonal", diag, "k=1 gives Bob = Alice"),
    ]


def check_discrimination(seed: int = 0) -> list[Check]:
    rng = stream(seed, 0)
    correct = 0
    for side in "AB":
        for o in OUTCOMES:
            got, _, p = measure_photon(basis_state(side, *o), rng, side)
            correct += got == o and abs(p - 1) <= TOL
    return [Check("discrimination/basis_states", correct == 32, f"{correct}/32")]


def noiseless_grid(seed: int = 0) -> int:
    """Correct inferences over every (operation, Alice outcome) pair.

    Alice's outcome is imposed by projecting photon A; Bob's photon then goes
    through the real apparatus.
    """
    table = correlation_table()
    rng = stream(seed, 1)
    ok = 0
    for k in SIGMA_TARGETS:
        after = apply_sigma(source_state(), k)
        for a in OUTCOMES:
            bob_state = normalize(project_photon(after, 0, basis_state("A", *a)))[0]
            b, _, _ = measure_photon(bob_state, rng, "B")
            ok += table.infer(a, b) == k
    return ok


def check_noiseless_grid(seed: int = 0) -> list[Check]:
    ok = noiseless_grid(seed)
    return [Check("qkd/noiseless_grid", ok == 256, f"{ok}/256")]


def run_battery(seed: int = 0) -> list[Check]:
    checks = []
    for fn in (
        check_generation,
        check_unitarity,
        check_orthonormality,
        check_sigma,
        check_product_expansion,
        check_correlations,
    ):
        checks += fn()
    checks += check_noiseless_grid(seed)
    checks += check_discrimination(seed)
    return checks
