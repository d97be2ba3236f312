"""Independent reference implementations used only by tests.

Everything here is deliberately written in plain nested-loop Python over
unit cells and pointwise haar_eval calls, so it shares no code path with
the vectorized contraction kernels it checks.
"""

from __future__ import annotations

import itertools

import numpy as np

from simplexht.core import CellFunction, haar_eval
from simplexht.dyadic import enumerate_tuples


def cell_ranges(interval_tuple):
    scale = interval_tuple.scale
    return [
        range(iv.index << scale, (iv.index + 1) << scale)
        for iv in interval_tuple.intervals
    ]


def brute_pairing(functions, interval_tuple) -> float:
    n = functions[0].dimension
    scale = interval_tuple.scale
    total = 0.0
    for cells in itertools.product(*cell_ranges(interval_tuple)):
        prod = 2.0 ** -scale
        for i, f in enumerate(functions):
            args = tuple(cells[j] for j in range(n + 1) if j != i)
            prod *= float(f.values[args])
        for interval, c in zip(interval_tuple.intervals, cells):
            prod *= haar_eval(interval, c + 0.5)
        total += prod
    return total


def brute_sup(functions, scale_count: int) -> float:
    n = functions[0].dimension
    L = functions[0].side_exponent
    total = 0.0
    for scale in range(1, scale_count + 1):
        for tup in enumerate_tuples(scale, L, n):
            total += abs(brute_pairing(functions, tup))
    return total


def brute_form(functions, coefficients, scale_count: int) -> float:
    n = functions[0].dimension
    L = functions[0].side_exponent
    total = 0.0
    for scale in range(1, scale_count + 1):
        for tup in enumerate_tuples(scale, L, n):
            eps = coefficients.value(scale, tup)
            total += eps * brute_pairing(functions, tup)
    return total


def brute_aux(functions, k: int, scale_count: int) -> float:
    n = functions[0].dimension
    L = functions[0].side_exponent
    total = 0.0
    for scale in range(1, scale_count + 1):
        weight = (2.0 ** -scale) ** (n - k + 1)
        for tup in enumerate_tuples(scale, L, n):
            ranges = cell_ranges(tup)
            doubled = [
                itertools.product(ranges[j], ranges[j]) for j in range(k + 1, n + 1)
            ]
            for outer in itertools.product(*doubled):
                inner_total = 0.0
                for inner in itertools.product(*ranges[: k + 1]):
                    prod = 1.0
                    for i in range(k + 1):
                        prod *= haar_eval(tup.intervals[i], inner[i] + 0.5)
                    for i in range(k + 1):
                        for code in range(1 << (n - k)):
                            args = [inner[j] for j in range(k + 1) if j != i]
                            args.extend(
                                outer[j][(code >> j) & 1] for j in range(n - k)
                            )
                            prod *= float(functions[i].values[tuple(args)])
                    inner_total += prod
                total += weight * abs(inner_total)
    return total


def random_cell_functions(rng, n: int, L: int, count: int | None = None):
    side = 1 << L
    count = n + 1 if count is None else count
    return [
        CellFunction(n, L, rng.integers(-3, 4, size=(side,) * n).astype(float))
        for _ in range(count)
    ]


def mc_truncated_form(functions, trunc, n_samples: int, seed: int):
    """Importance-sampled Monte-Carlo estimate of the truncated continuous form.

    Samples y uniformly on the common grid box and the kernel variable x
    log-uniformly on +-[r, R]; returns (estimate, standard_error).  Uses
    multilinear interpolation evaluated pointwise, independent of the
    engine's vectorized path.
    """
    rng = np.random.default_rng(seed)
    f0 = functions[0]
    n = f0.dimension
    A = f0.half_extent
    log_ratio = np.log(trunc.R / trunc.r)
    vals = np.empty(n_samples)
    for s in range(n_samples):
        y = rng.uniform(-A, A, size=n)
        u = rng.uniform(np.log(trunc.r), np.log(trunc.R))
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        x = sign * np.exp(u)
        prod = interp_eval(f0, y)
        for i in range(1, n + 1):
            args = np.empty(n)
            args[0] = x - np.sum(y)
            args[1:] = [y[j] for j in range(n) if j != i - 1]
            prod *= interp_eval(functions[i], args)
        # density: y uniform over (2A)^n, u uniform over log ratio, sign 1/2;
        # integrand contributes prod / x * |jacobian dx/du| = prod / x * |x|
        vals[s] = prod * np.sign(x) * (2 * A) ** n * 2 * log_ratio
    est = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / np.sqrt(n_samples))
    return est, err


def interp_eval(f, point):
    """Multilinear interpolation of a GridSampledFunction at one point."""
    coords = (np.asarray(point) + f.half_extent) / f.spacing - 0.5
    lo = np.floor(coords).astype(int)
    frac = coords - lo
    total = 0.0
    n = f.dimension
    N = f.cells_per_axis
    for corner in itertools.product((0, 1), repeat=n):
        idx = lo + np.array(corner)
        weight = 1.0
        for d in range(n):
            weight *= frac[d] if corner[d] else 1.0 - frac[d]
        if np.any(idx < 0) or np.any(idx >= N):
            continue
        total += weight * float(f.samples[tuple(idx)])
    return total
