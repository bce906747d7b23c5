"""Exact transient distributions for tiny windows, as simulator ground truth.

States of an n-site window (n <= 12) are bitmasks with site i <-> bit i, site
indices counted from the left window edge. The generator encodes exactly the
replay dynamics: unit death rate per occupied site, birth onto a vacant site
at the summed kernel rate from its occupied in-window neighbours, plus, under
the frozen boundary policy, constant source terms from the virtual occupied
sites beyond the edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .engine import BoundaryPolicy, Configuration
from .errors import CapacityError, ParameterError
from .graphical import InteractionKernel

MAX_SITES = 12


@dataclass
class GeneratorMatrix:
    """Sparse CTMC generator over the 2^n configuration space."""

    kernel: InteractionKernel
    n_sites: int
    boundary: BoundaryPolicy
    Q: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return 2 ** self.n_sites

    @property
    def uniformization_rate(self) -> float:
        return float(-self.Q.diagonal().min())


def build_generator(kernel: InteractionKernel, n_sites: int,
                    boundary: BoundaryPolicy = BoundaryPolicy.VACANT_OUTSIDE) -> GeneratorMatrix:
    """Exact generator for the windowed process on n_sites sites."""
    if n_sites < 1:
        raise ParameterError("need at least one site")
    if n_sites > MAX_SITES:
        raise CapacityError(f"n_sites={n_sites} exceeds the exact-solver limit {MAX_SITES}")
    M = kernel.range
    nst = 2 ** n_sites
    frozen = boundary is BoundaryPolicy.FROZEN_OCCUPIED_OUTSIDE
    # constant boundary in-flow onto each site (frozen policy only)
    inflow = np.zeros(n_sites)
    if frozen:
        for i in range(n_sites):
            for v in list(range(-M, 0)) + list(range(n_sites, n_sites + M)):
                j = i - v
                if j != 0 and abs(j) <= M:
                    inflow[i] += kernel.rates.get(j, 0.0)
    rows, cols, vals = [], [], []
    for state in range(nst):
        out = 0.0
        for i in range(n_sites):
            bit = 1 << i
            if state & bit:
                rows.append(state)
                cols.append(state & ~bit)
                vals.append(1.0)
                out += 1.0
            else:
                rate = inflow[i]
                for j, mu in kernel.rates.items():
                    src = i - j
                    if 0 <= src < n_sites and state & (1 << src):
                        rate += mu
                if rate > 0:
                    rows.append(state)
                    cols.append(state | bit)
                    vals.append(rate)
                    out += rate
        rows.append(state)
        cols.append(state)
        vals.append(-out)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(nst, nst))
    return GeneratorMatrix(kernel, n_sites, boundary, Q)


def _initial_vector(gen: GeneratorMatrix, initial) -> np.ndarray:
    if isinstance(initial, Configuration):
        if initial.window.n_sites != gen.n_sites:
            raise ParameterError("configuration size does not match generator")
        initial = int(sum(1 << i for i, b in enumerate(initial.occupied) if b))
    if isinstance(initial, (int, np.integer)):
        if not (0 <= initial < gen.n_states):
            raise ParameterError("initial state index out of range")
        p0 = np.zeros(gen.n_states)
        p0[int(initial)] = 1.0
        return p0
    p0 = np.asarray(initial, dtype=np.float64)
    if p0.shape != (gen.n_states,) or p0.min() < 0 or abs(p0.sum() - 1.0) > 1e-9:
        raise ParameterError("initial must be a state, a Configuration, or a distribution")
    return p0


def transient_distribution(gen: GeneratorMatrix, initial, t: float,
                           tol: float = 1e-10) -> np.ndarray:
    """Distribution of the state at time t by uniformization.

    The Poisson-weighted power series is truncated once the remaining weight
    drops below ``tol``, so the L1 truncation error is certified <= tol.
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    p0 = _initial_vector(gen, initial)
    if t == 0:
        return p0
    lam = gen.uniformization_rate
    if lam <= 0:
        return p0
    mu = lam * t
    if mu > 700:
        raise CapacityError("uniformization horizon too large (lam * t > 700)")
    P = sp.eye(gen.n_states, format="csr") + gen.Q.tocsr() / lam
    K = int(poisson.isf(tol, mu)) + 1
    while poisson.sf(K, mu) > tol:
        K += 10
    v = p0.copy()
    w = float(np.exp(-mu))
    res = w * v
    for k in range(1, K + 1):
        v = v @ P
        w *= mu / k
        res += w * v
    s = res.sum()
    if abs(s - 1.0) > 1e-9:
        raise ArithmeticError(f"uniformization lost mass: sum={s}")
    return res


def extinction_probability_exact(gen: GeneratorMatrix, initial, t: float) -> float:
    """Mass at the all-vacant state at time t."""
    return float(transient_distribution(gen, initial, t)[0])


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p - q).sum())


def multinomial_tv_band(p, n_draws: int, n_boot: int = 2000, seed: int = 0,
                        z: float = 3.0) -> float:
    """mean + z * sd of the TV distance between a size-n_draws multinomial
    sample and its own law p (Monte Carlo with a fixed internal seed)."""
    p = np.asarray(p, dtype=np.float64)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7411]))
    tvs = np.empty(n_boot)
    chunk = max(1, min(n_boot, int(2e7 // max(p.size, 1))))
    i = 0
    while i < n_boot:
        m = min(chunk, n_boot - i)
        counts = rng.multinomial(n_draws, p, size=m)
        tvs[i:i + m] = 0.5 * np.abs(counts / n_draws - p).sum(axis=1)
        i += m
    return float(tvs.mean() + z * tvs.std())


def empirical_distribution(states, n_sites: int) -> np.ndarray:
    """Frequencies of observed state bitmasks over the 2^n_sites state space."""
    states = np.asarray(states)
    return np.bincount(states, minlength=2 ** n_sites) / states.shape[0]


def save_fixture(path, gen: GeneratorMatrix, t: float, distribution) -> None:
    with open(path, "w") as fh:
        json.dump({
            "rates": {str(j): mu for j, mu in gen.kernel.rates.items()},
            "n_sites": gen.n_sites,
            "boundary": gen.boundary.value,
            "t": t,
            "distribution": list(map(float, distribution)),
        }, fh, indent=2, sort_keys=True)


def load_fixture(path) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    d["rates"] = {int(j): mu for j, mu in d["rates"].items()}
    d["boundary"] = BoundaryPolicy(d["boundary"])
    d["distribution"] = np.asarray(d["distribution"])
    return d
