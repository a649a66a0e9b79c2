"""The acceptance suite: eleven numeric criteria, each with a runtime budget."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from math import pi

import numpy as np

from .empirical import (
    basis_invariance_check,
    commutation_check,
    coordinate_harmonic,
    empirical_spectrum,
    match_spectra,
    near_zero_fraction,
)
from .oracles import projective1_oracle, sphere1_oracle
from .recon import divergence_probe, reconstruction_partial_sums, snowflake_scan, tail_bound
from .spaces import Product, Projective, Sphere, Torus, circle, grid_points, sample_uniform
from .spectra import (
    asymptotic_exponent_fit,
    build_spectrum,
    projective_eigenvalue,
    projective_eigenvalues,
    projective_recurrence_values,
    recurrence_lift,
    sphere_eigenvalues,
    trace_partial_sums,
)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    runtime: float
    limit: float

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name} ({self.runtime:.2f}s / {self.limit:g}s): {self.detail}"

    def to_dict(self):
        return asdict(self)


def rp2_signs():
    recs = [projective_eigenvalue(2, d) for d in range(2, 13, 2)]
    signs = [int(np.sign(r.value)) for r in recs]
    alternating = signs == [1, -1, 1, -1, 1, -1]
    resolved = all(abs(r.value) > 10 * r.error for r in recs)
    worst = max(r.error / abs(r.value) for r in recs)
    return alternating and resolved, f"signs {signs}, max error/|lambda| {worst:.1e}"


def closed_form():
    s = sphere_eigenvalues(1, 50)
    e1 = max(abs(s[m] - sphere1_oracle(m)) for m in range(1, 51))
    p = projective_eigenvalues(1, 50)
    e2 = max(abs(p[2 * j] - projective1_oracle(2 * j)) for j in range(1, 26))
    return max(e1, e2) <= 1e-9, f"S1 max err {e1:.1e}, RP1 max err {e2:.1e}"


def recurrence():
    worst_lift = worst_chain = 0.0
    for n in (1, 3, 5):
        low = projective_eigenvalues(n, 42)
        high = projective_eigenvalues(n + 2, 40)
        chain = projective_recurrence_values(n, 40)
        for tk in range(4, 43, 2):
            lifted = recurrence_lift(n, tk, low[tk], low[tk - 2])
            ref = high[tk - 2]
            worst_lift = max(worst_lift, abs(lifted - ref) / max(1.0, abs(ref)))
        for tk in range(2, 41, 2):
            worst_chain = max(worst_chain, abs(chain[tk] - low[tk]) / max(1.0, abs(low[tk])))
    ok = worst_lift <= 1e-8 and worst_chain <= 1e-8
    return ok, f"one-step lift {worst_lift:.1e}, chained from RP1 {worst_chain:.1e}"


def exponents():
    fits = {n: asymptotic_exponent_fit(build_spectrum(Projective(n), 80), 5, 40).slope for n in (1, 3, 5)}
    target = {1: -2.0, 3: -3.0, 5: -4.0}
    ok = all(abs(fits[n] - target[n]) <= 0.15 for n in fits)
    return ok, ", ".join(f"RP{n} slope {fits[n]:.3f} (want {target[n]:.1f})" for n in fits)


def trace():
    s2 = build_spectrum(Sphere(2), 400)
    part = trace_partial_sums(s2)
    deg = s2.degrees
    rel = np.diff(part)[deg[1:] > 100] / part[1:][deg[1:] > 100]
    sphere_ok = bool(np.all(rel < 1e-3))

    rp3 = build_spectrum(Projective(3), 100_000)
    part3 = trace_partial_sums(rp3)
    deg3 = rp3.degrees
    cut = [100, 1000, 10_000, 100_000]
    sums = np.array([part3[deg3 <= K][-1] for K in cut])
    c = np.diff(sums) / np.log(10)
    stable = float(np.max(c) / np.min(c) - 1.0)
    term = np.abs(rp3.values) * rp3.multiplicities
    k = deg3 // 2
    upper = k >= 1000
    slope = np.polyfit(np.log(k[upper]), np.log(term[upper]), 1)[0]
    growing = bool(np.all(np.diff(sums) > 0))
    rp3_ok = growing and stable <= 0.2 and abs(slope + 1.0) <= 0.05
    detail = (
        f"S2 max rel increment past 100: {rel.max():.1e}; RP3 sums {np.round(sums, 3).tolist()}, "
        f"c per decade {np.round(c, 4).tolist()} (spread {stable:.1%}), term slope {slope:.3f}"
    )
    return sphere_ok and rp3_ok, detail


def _circle_errors(N):
    emp = empirical_spectrum(grid_points(circle(), N))
    rep = match_spectra(emp, build_spectrum(circle(), 20), 10)
    errs = np.concatenate([r.rel_errors for r in rep.records])
    return errs, sum(len(r.empirical_values) for r in rep.records)


def empirical_convergence():
    e400, c400 = _circle_errors(400)
    e800, c800 = _circle_errors(800)
    ok = c400 == c800 == 10 and e400.max() <= 0.01 and e800.max() <= 0.01 and bool(np.all(e800 <= 1.5 * 0.5 * e400))
    ratio = float(np.max(e800 / e400))
    return ok, f"max rel err N=400 {e400.max():.2e}, N=800 {e800.max():.2e}, worst err ratio {ratio:.3f} (<= 0.75)"


def commutation():
    res = commutation_check(Sphere(2), coordinate_harmonic(Sphere(2), 0), mc_samples=200_000, seed=0)
    ok = res.consistent(3.0)
    return ok, (
        f"lambda_hat {res.ratio:.5f} +- {res.ratio_stderr:.5f} vs {res.analytic:.5f}; "
        f"residual {res.residual:.4f} vs 3-sigma band {3 * res.residual_band:.4f}"
    )


def snowflake():
    scan = snowflake_scan(64, 400)
    alpha_ok = abs(scan.alpha - 0.5) <= 0.005
    flat_ok = scan.ratio_spread <= scan.ratio_tolerance
    const_ok = abs(scan.ratio_mean - pi / 2) <= 0.01 * pi / 2
    detail = (
        f"alpha {scan.alpha:.4f}; ratio spread {scan.ratio_spread:.3%} within tail tolerance {scan.ratio_tolerance:.3%}; "
        f"ratio {scan.ratio_mean:.4f} vs pi/2 = {pi / 2:.4f} (pi = {pi:.4f})"
    )
    return alpha_ok and flat_ok and const_ok, detail


def reconstruction(pairs=20, seed=0):
    s2 = Sphere(2)
    X = sample_uniform(s2, 2 * pairs, seed).points
    worst_rel, bound_ok = 0.0, True
    for i in range(pairs):
        x, y = X[2 * i], X[2 * i + 1]
        series = reconstruction_partial_sums(s2, x, y, 200)
        err = abs(series.at(200) - series.target)
        worst_rel = max(worst_rel, err / series.target)
        bound_ok &= tail_bound(s2, [float(np.dot(x, y))], 200) >= err
    probe = divergence_probe(3, 0.0, (100, 1000, 10_000, 100_000))
    inc = probe.increments
    rp3_ok = min(inc) > 0.5 and probe.law == "logarithmic"
    ok = worst_rel <= 0.01 and bound_ok and rp3_ok
    return ok, (
        f"S2 worst rel err {worst_rel:.2e} over {pairs} pairs, tail bound dominates: {bool(bound_ok)}; "
        f"RP3 decade increments {np.round(inc, 4).tolist()} ({probe.law})"
    )


def basis_invariance():
    emp = empirical_spectrum(grid_points(circle(), 400))
    within = max(basis_invariance_check(emp, s, "within") for s in range(5))
    across = basis_invariance_check(emp, 0, "across")
    ident = basis_invariance_check(emp, 0, "identity")
    ok = within <= 1e-8 and across > 1e-3 and ident == 0.0
    return ok, f"within {within:.1e}, across {across:.3f}, identity {ident:.1e}"


def product():
    t2 = Product(circle(), circle())
    table = build_spectrum(t2, 60)
    f = build_spectrum(circle(), 60)
    union = np.sort(np.concatenate([f.nonzero_multiset(), f.nonzero_multiset()]))[::-1]
    exact = bool(np.array_equal(table.nonzero_multiset(), union))
    emp = empirical_spectrum(grid_points(Torus((2 * pi, 2 * pi)), 30))
    rep = match_spectra(emp, table, 8)
    matched = sum(len(r.empirical_values) for r in rep.records)
    err = rep.max_slot_error() if matched == 8 else float("inf")
    zero = near_zero_fraction(emp)
    ok = exact and err <= 0.03 and zero >= 0.5
    return ok, f"exact union {exact}; top-8 (by |lambda|) max rel err {err:.2e}; near-zero fraction {zero:.1%}"


CRITERIA = {
    "rp2_signs": (rp2_signs, 1.0),
    "closed_form": (closed_form, 5.0),
    "recurrence": (recurrence, 10.0),
    "exponents": (exponents, 10.0),
    "trace": (trace, 30.0),
    "empirical_convergence": (empirical_convergence, 60.0),
    "commutation": (commutation, 60.0),
    "snowflake": (snowflake, 10.0),
    "reconstruction": (reconstruction, 30.0),
    "basis_invariance": (basis_invariance, 10.0),
    "product": (product, 120.0),
}


def run_criterion(name):
    func, limit = CRITERIA[name]
    start = time.perf_counter()
    try:
        passed, detail = func()
    except Exception as exc:  # a crash is a failure, reported by name
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    if elapsed > limit:
        passed, detail = False, f"{detail}; over runtime budget"
    return CriterionResult(name, bool(passed), detail, elapsed, limit)


def run_all(only=None):
    names = list(CRITERIA) if not only else list(only)
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criteria: {', '.join(unknown)}")
    return [run_criterion(n) for n in names]
