"""Per-family default parameter bundles for the benchmark problems.

One place encodes the interpolation caliber, smoothing counts, test-vector
counts, coarsening mode and coarsest-level size used for each chain
family, so solves, tables, and the command-line interface all draw from
the same source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chains import ChainProblem, make_chain, molloy_net, petri_reachability
from .coarsen import CoarseningConfig
from .interp import InterpConfig
from .relax import SmootherConfig
from .bootstrap import SetupConfig


@dataclass(frozen=True)
class FamilyPreset:
    caliber: int
    sweeps: int
    n_tests: int
    stop_size: int
    mode: str
    cr_threshold: float = 0.7
    cr_sweeps: int = 5


PRESETS: dict[str, FamilyPreset] = {
    "birth-death": FamilyPreset(caliber=2, sweeps=3, n_tests=8, stop_size=30,
                                mode="geometric1d"),
    "uniform2d": FamilyPreset(caliber=4, sweeps=3, n_tests=8, stop_size=290,
                              mode="geometric2d"),
    "tandem": FamilyPreset(caliber=4, sweeps=3, n_tests=8, stop_size=290,
                           mode="geometric2d"),
    "planar": FamilyPreset(caliber=3, sweeps=5, n_tests=8, stop_size=500,
                           mode="cr", cr_threshold=0.78),
    "petri": FamilyPreset(caliber=3, sweeps=5, n_tests=10, stop_size=500,
                          mode="cr", cr_threshold=0.8),
    # imported chains carry no geometry, so coarsening is always algebraic
    "imported": FamilyPreset(caliber=3, sweeps=5, n_tests=8, stop_size=500,
                             mode="cr", cr_threshold=0.78),
}


def default_setup_config(family: str, cycles: int = 1, seed: int = 1,
                         **overrides) -> SetupConfig:
    """SetupConfig filled from the family preset; keyword overrides win."""
    if family not in PRESETS:
        raise ValueError(f"no preset for family {family!r}")
    p = PRESETS[family]
    values = dict(
        n_tests=p.n_tests,
        setup_cycles=max(cycles, 1),
        smoother=SmootherConfig(omega=0.7, sweeps_pre=p.sweeps, sweeps_post=p.sweeps),
        interp=InterpConfig(caliber=p.caliber, search_radius=1,
                            constrain_constant_in_q=True),
        coarsening=CoarseningConfig(mode=p.mode, stop_size=p.stop_size,
                                    cr_sweeps=p.cr_sweeps,
                                    cr_threshold=p.cr_threshold),
        seed=seed,
    )
    values.update(overrides)
    return SetupConfig(**values)


def build_problem(family: str, n: int | None = None, seed: int = 1,
                  mu: float = 0.96, tokens: int | None = None,
                  petri_spec=None, **params) -> ChainProblem:
    """Construct a benchmark problem from family plus its natural size knob.

    For lattice families ``n`` must be a perfect square (the side length
    is derived); the Petri preset takes ``tokens`` instead of ``n``.
    """
    if family == "birth-death":
        return make_chain(family, n=n, mu=mu)
    if family in ("uniform2d", "tandem"):
        side = int(round(n ** 0.5))
        if side * side != n:
            raise ValueError(f"{family} needs a square size, got {n}")
        return make_chain(family, side=side, **params)
    if family == "planar":
        return make_chain(family, n=n, seed=seed)
    if family == "petri":
        if petri_spec is not None:
            return petri_reachability(petri_spec)
        if tokens is None:
            raise ValueError("petri needs a token count or an explicit net")
        return petri_reachability(molloy_net(tokens))
    raise ValueError(f"unknown family {family!r}")
