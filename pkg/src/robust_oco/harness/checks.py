"""Named verification suites: each replays a module's guarantees as a checklist.

Every check returns a CheckReport with one verdict line per property, and the
CLI maps the overall outcome to its exit code. The suites are deliberately
oracle-flavored: brute-force summation, exhaustive enumeration, Monte Carlo
with explicit standard errors, and round-trip inversions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..adversaries import AdversarySpec, make_adversary, random_sign_expectation
from ..core import norm
from ..epigraph import EpigraphPoint, weighted_project
from ..mirror_descent import link_inverse_solve, link_value
from ..protocol import ProtocolConfig, RobustProtocol
from ..regularizer import HuberRegularizer, check_sum_bounds
from ..thresholds import (
    GradientFilter,
    MagnitudeTracker,
    check_filter_properties,
    check_tracker_properties,
)
from .config import ExperimentConfig
from .runner import run_experiment


@dataclass
class CheckReport:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)

    def line(self, ok: bool, text: str) -> None:
        self.lines.append(f"[{'ok' if ok else 'FAIL'}] {text}")
        if not ok:
            self.passed = False


def check_filter_lemma(streams: int = 1000, seed: int = 2024) -> CheckReport:
    """Budget-respecting random streams through the clipping filter."""
    report = CheckReport("filter_lemma", True)
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(streams):
        T = int(rng.integers(30, 300))
        k = int(rng.integers(0, 6))
        G = float(rng.uniform(0.5, 8.0))
        tau_G = float(rng.uniform(G / 20.0, 2.0 * G))
        dim = int(rng.integers(1, 4))
        f = GradientFilter(k=k, tau_G=tau_G)
        # true gradients bounded by G; up to k rounds get wild corruption,
        # any number of rounds get sub-G corruption
        big = set(rng.choice(T, size=int(rng.integers(0, k + 1)), replace=False))
        trace = []
        for t in range(T):
            d = rng.standard_normal(dim)
            g = d / max(norm(d), 1e-12) * rng.uniform(0.0, G)
            if t in big:
                g_tilde = g * rng.uniform(5.0, 40.0) + rng.standard_normal(dim) * G
            elif rng.uniform() < 0.2:
                e = rng.standard_normal(dim)
                g_tilde = g + e / max(norm(e), 1e-12) * rng.uniform(0.0, 0.99 * G)
            else:
                g_tilde = g
            h_t = f.h
            out, h_next, _ = f.step(g_tilde)
            trace.append((norm(g_tilde), norm(out), h_t, h_next))
        ok, violated = check_filter_properties(trace, tau_G=tau_G, k=k, G=G)
        if not ok:
            failures += 1
            report.line(False, f"stream violated {violated} (k={k}, G={G:.3g}, tau={tau_G:.3g})")
    report.line(failures == 0, f"{streams - failures}/{streams} random streams satisfied all four filter properties")
    return report


def check_tracker_lemma(streams: int = 1000, seed: int = 2025) -> CheckReport:
    """Arbitrary iterate traces through the magnitude tracker."""
    report = CheckReport("tracker_lemma", True)
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(streams):
        T = int(rng.integers(20, 400))
        tau_D = float(rng.uniform(0.05, 5.0))
        style = rng.integers(0, 3)
        if style == 0:
            norms = rng.uniform(0.0, 10.0, size=T)
        elif style == 1:
            norms = np.abs(np.cumsum(rng.standard_normal(T)))
        else:
            norms = np.exp(rng.uniform(-2, 2)) * np.exp(
                np.linspace(0, rng.uniform(0, 12), T)
            ) * rng.uniform(0.5, 1.0, size=T)
        tracker = MagnitudeTracker(tau_D=tau_D)
        trace = []
        for w_norm in norms:
            z_t = tracker.z
            z_next, doubled = tracker.step(float(w_norm))
            trace.append((float(w_norm), z_t, z_next, doubled))
        ok, violated = check_tracker_properties(trace, tau_D=tau_D)
        if not ok:
            failures += 1
            report.line(False, f"trace violated {violated} (tau_D={tau_D:.3g})")
    report.line(failures == 0, f"{streams - failures}/{streams} random traces satisfied all tracker properties")
    return report


def check_regularizer_sums(traces: int = 1000, seed: int = 2026) -> CheckReport:
    """Literal-summation envelope of the Huber penalty at p = ln T."""
    report = CheckReport("regularizer_sums", True)
    rng = np.random.default_rng(seed)
    failures = 0
    horizons = (10, 100, 1000)
    for i in range(traces):
        T = horizons[i % len(horizons)]
        c = float(rng.uniform(0.1, 10.0))
        alpha = float(rng.uniform(0.01, 10.0))
        u = float(rng.uniform(0.0, 20.0))
        style = rng.integers(0, 3)
        if style == 0:
            norms = rng.uniform(0.0, 5.0, size=T)
        elif style == 1:
            norms = np.abs(rng.standard_normal(T)) * math.exp(rng.uniform(-2, 3))
        else:
            norms = np.zeros(T)
            norms[rng.integers(0, T)] = rng.uniform(0.0, 100.0)
        lower_ok, upper_ok = check_sum_bounds(norms.tolist(), u, c=c, alpha=alpha, T=T)
        if not (lower_ok and upper_ok):
            failures += 1
            report.line(
                False,
                f"envelope failed (lower={lower_ok}, upper={upper_ok}) "
                f"T={T} c={c:.3g} alpha={alpha:.3g} u={u:.3g}",
            )
    report.line(failures == 0, f"{traces - failures}/{traces} random traces satisfied both penalty-sum bounds")
    return report


def check_md_inversion(samples: int = 1000, seed: int = 2027) -> CheckReport:
    """Round-trip of the monotone link through its bisection inverse."""
    report = CheckReport("md_inversion", True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    for _ in range(samples):
        h = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
        V = h * h * float(rng.uniform(1.0, 50.0))
        a = float(np.exp(rng.uniform(math.log(1e-4), math.log(10.0))))
        c = 0.0 if rng.uniform() < 0.25 else float(rng.uniform(0.05, 10.0))
        p = float(rng.uniform(1.5, 10.0))
        alpha = float(rng.uniform(0.05, 5.0))
        reg = HuberRegularizer(c=c, p=p, alpha=alpha)
        for w in rng.uniform(0.0, 3.0, size=int(rng.integers(0, 4))):
            reg.advance(float(w))
        x0 = float(np.exp(rng.uniform(math.log(1e-6), math.log(1e3))))
        z = V / (h * h)
        x_star = a * math.expm1(z) if z < 700 else math.inf
        low_branch = x0 <= x_star
        y = link_value(x0, V, h, a, reg, low_branch)
        x_back = link_inverse_solve(y, V, h, a, reg)
        rel = abs(x_back - x0) / max(x0, 1e-300)
        worst = max(worst, rel)
        if rel > 1e-8:
            failures += 1
            report.line(False, f"round-trip error {rel:.2e} at x0={x0:.6g} (V={V:.3g}, h={h:.3g})")
    report.line(
        failures == 0,
        f"{samples - failures}/{samples} round-trips within 1e-8 relative (worst {worst:.2e})",
    )
    return report


def check_epigraph_feasibility(samples: int = 1000, seed: int = 2028) -> CheckReport:
    """Weighted projection feasibility and stationarity residuals."""
    report = CheckReport("epigraph_feasibility", True)
    rng = np.random.default_rng(seed)
    failures = 0
    worst_resid = 0.0
    for _ in range(samples):
        dim = int(rng.integers(1, 6))
        w_hat = rng.standard_normal(dim) * math.exp(rng.uniform(-1, 2))
        y_hat = float(rng.standard_normal() * math.exp(rng.uniform(-1, 2)))
        h = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
        gamma = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
        point = EpigraphPoint(w_hat, y_hat)
        proj = weighted_project(point, h, gamma)
        nw2 = float(np.dot(proj.w, proj.w))
        if proj.y < nw2:
            failures += 1
            report.line(False, f"infeasible projection: y={proj.y} < ||w||^2={nw2}")
            continue
        if y_hat >= float(np.dot(w_hat, w_hat)):
            if proj is not point:
                failures += 1
                report.line(False, "interior point was moved by projection")
            continue
        s = norm(proj.w)
        target = h * h * norm(w_hat)
        resid = abs(s * (h * h + 2.0 * gamma * gamma * (s * s - y_hat)) - target)
        rel = resid / max(1.0, target)
        worst_resid = max(worst_resid, rel)
        if rel > 1e-9:
            failures += 1
            report.line(False, f"stationarity residual {rel:.2e} (h={h:.3g}, gamma={gamma:.3g})")
    report.line(
        failures == 0,
        f"{samples - failures}/{samples} projections feasible with residual <= 1e-9 "
        f"(worst {worst_resid:.2e})",
    )
    return report


def check_random_seq() -> CheckReport:
    """Exact enumeration of the aligned random-sign sum against its floor."""
    report = CheckReport("random_seq", True)
    for T in range(1, 21):
        value = random_sign_expectation(T)
        floor = math.sqrt(T / 16.0)
        report.line(value >= floor, f"T={T}: E|S_T| = {value:.6f} >= sqrt(T/16) = {floor:.6f}")
    exact4 = random_sign_expectation(4)
    report.line(exact4 == 1.5, f"T=4 enumeration equals 1.5 exactly (got {exact4})")
    return report


def check_lb_theorem2_floor(seeds: int = 2000) -> CheckReport:
    """Monte Carlo regret floor for the matched lower-bound stream."""
    report = CheckReport("lb_theorem2_floor", True)
    T, k, D = 64, 8, 1.0
    regrets = np.empty(seeds)
    for s in range(seeds):
        spec = AdversarySpec(kind="lb_theorem2", T=T, k=k, D=D, seed=s, dim=1)
        cfg = ExperimentConfig(
            algorithm="known_g",
            adversary=spec,
            protocol=ProtocolConfig(mode="known_g", T=T, k=k, G=1.0),
            comparator="adversary",
        )
        regrets[s] = run_experiment(cfg, seed=s).summary["final_true_regret"]
    mean = float(regrets.mean())
    se = float(regrets.std(ddof=1) / math.sqrt(seeds))
    floor = D * (k + math.sqrt((T - k) / 16.0))
    ok = mean >= floor - 3.0 * se
    report.line(
        ok,
        f"seed-mean regret {mean:.4f} >= floor {floor:.4f} - 3*SE ({3 * se:.4f}) "
        f"over {seeds} seeds",
    )
    return report


ORIGIN_SAFETY_KINDS = (
    "sign_flip_window", "lb_theorem2", "lb_origin", "dro_reweight", "iid_random",
)


def check_origin_safety(T: int = 1000, ks=(0, 10, 100), seed: int = 7) -> CheckReport:
    """Regret at the origin stays constant-order for every adversary at every budget.

    The exponential-comparator stream caps its own horizon at 30 by
    construction, so it is checked there; all other kinds run the full T.
    """
    report = CheckReport("origin_safety", True)
    epsilon, G = 1.0, 1.0
    for kind in ORIGIN_SAFETY_KINDS:
        for k in ks:
            T_eff = min(T, 30) if kind == "lb_origin" else T
            k_eff = min(k, T_eff) if kind == "lb_origin" else k
            window = max(1, int(0.75 * T_eff))
            if kind == "sign_flip_window" and window + k_eff - 1 > T_eff:
                window = max(1, T_eff - k_eff + 1)
            spec = AdversarySpec(
                kind=kind, T=T_eff, k=k_eff, window_start=window,
                seed=seed, dim=1, G=G, epsilon=epsilon,
            )
            adversary = make_adversary(spec)
            cfg = ExperimentConfig(
                algorithm="known_g",
                adversary=spec,
                protocol=ProtocolConfig(
                    mode="known_g", T=T_eff, epsilon=epsilon,
                    k=adversary.budget, G=G,
                ),
                comparator=(0.0,),
            )
            result = run_experiment(cfg, seed=seed)
            regret0 = result.summary["final_true_regret"]
            bound = 20.0 * epsilon * G * (1.0 + math.log(T_eff)) ** 2
            report.line(
                regret0 <= bound,
                f"{kind} k={k_eff} T={T_eff}: R_T(0) = {regret0:.4f} <= {bound:.2f}",
            )
    return report


def check_decomposition_identity(configs: int = 50, seed: int = 99) -> CheckReport:
    """The four-way regret split reproduces the measured regret on random runs."""
    report = CheckReport("decomposition_identity", True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    for i in range(configs):
        T = int(rng.integers(20, 150))
        k = int(rng.integers(1, 8))
        dim = int(rng.integers(1, 4))
        mode = ("known_g", "unknown_g_case1", "unknown_g_case2")[i % 3]
        kind = ("dro_reweight", "lb_theorem2", "iid_random")[int(rng.integers(0, 3))]
        if kind == "lb_theorem2":
            dim = max(dim, 1)
        spec = AdversarySpec(
            kind=kind, T=T, k=min(k, (T - 1) // 2), seed=int(rng.integers(0, 1 << 30)),
            dim=dim, G=float(rng.uniform(0.5, 3.0)),
        )
        adversary = make_adversary(spec)
        proto = ProtocolConfig(
            mode=mode, T=T, epsilon=float(rng.uniform(0.5, 2.0)),
            k=max(adversary.budget, 1),
            G=adversary.lipschitz_bound if mode == "known_g" else None,
            tau_G=float(rng.uniform(0.2, 2.0)), dim=dim,
        )
        comparator = rng.standard_normal(dim) * 2.0
        protocol = RobustProtocol(proto, comparator=comparator)
        gap = 0.0
        for t in range(1, T + 1):
            w = protocol.predict()
            g, g_tilde = adversary.round(t, w)
            protocol.round(g_tilde, g_true=g)
            gap = max(gap, protocol.decomposition_gap())
        worst = max(worst, gap)
        if gap > 1e-6:
            failures += 1
            report.line(False, f"config {i} ({mode}, {kind}): per-round gap {gap:.2e}")
    report.line(
        failures == 0,
        f"{configs - failures}/{configs} random configs satisfied the identity "
        f"within 1e-6 (worst gap {worst:.2e})",
    )
    return report


CHECKS = {
    "filter_lemma": check_filter_lemma,
    "tracker_lemma": check_tracker_lemma,
    "regularizer_sums": check_regularizer_sums,
    "md_inversion": check_md_inversion,
    "epigraph_feasibility": check_epigraph_feasibility,
    "random_seq": check_random_seq,
    "lb_theorem2_floor": check_lb_theorem2_floor,
    "origin_safety": check_origin_safety,
    "decomposition_identity": check_decomposition_identity,
}


def run_check(name: str) -> CheckReport:
    if name not in CHECKS:
        raise KeyError(
            f"unknown check {name!r}; valid names: {', '.join(sorted(CHECKS))}"
        )
    return CHECKS[name]()
