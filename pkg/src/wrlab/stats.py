"""Hypothesis-test battery for the three-arm group comparisons.

All tests are two-sided. The orchestrator gates the parametric path on
per-group normality (one-sample KS against the fitted normal) and equal
variances (Levene); otherwise it falls back to Mann-Whitney U pairwise
plus Kruskal-Wallis overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import distributions as dist
from .errors import (
    DegenerateDeviations,
    TooFewGroups,
    TooFewSamples,
    ZeroVariance,
)

DEFAULT_ALPHA = 0.05

# exact Mann-Whitney enumeration is used up to this pooled size
MWU_EXACT_LIMIT = 16


@dataclass(frozen=True, slots=True)
class TestResult:
    test: str
    statistic: float
    p_value: float
    n_per_group: list[int]
    method_notes: str = ""

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value {self.p_value} outside [0, 1]")
        if not math.isfinite(self.statistic):
            raise ValueError("statistic must be finite")

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_per_group": list(self.n_per_group),
            "method_notes": self.method_notes,
        }


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _var(xs: Sequence[float], ddof: int = 1) -> float:
    m = _mean(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - ddof)


def ks_normality(sample: Sequence[float]) -> TestResult:
    """One-sample KS against a normal with the sample's mean and std.

    The p-value comes from the asymptotic Kolmogorov distribution at
    sqrt(n)*D. Because the normal's parameters are estimated from the
    same data, this p is conservative (the Lilliefors situation); the
    caveat is recorded in method_notes.
    """
    xs = sorted(float(x) for x in sample)
    n = len(xs)
    if n < 4:
        raise TooFewSamples(f"KS normality needs n >= 4, got {n}")
    mu = _mean(xs)
    var = _var(xs)
    if var == 0.0:
        raise ZeroVariance("constant sample has no distribution shape to test")
    sd = math.sqrt(var)
    d_stat = 0.0
    for i, x in enumerate(xs):
        z = dist.normal_cdf(x, mu, sd)
        d_stat = max(d_stat, (i + 1) / n - z, z - i / n)
    p = dist.kolmogorov_sf(math.sqrt(n) * d_stat)
    return TestResult(
        test="ks_normality",
        statistic=d_stat,
        p_value=p,
        n_per_group=[n],
        method_notes=(
            "normal parameters estimated from the sample (Lilliefors caveat: "
            "asymptotic Kolmogorov p is conservative)"
        ),
    )


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sample KS with the asymptotic p; informational in reports."""
    xa = sorted(float(x) for x in a)
    xb = sorted(float(x) for x in b)
    na, nb = len(xa), len(xb)
    if na < 1 or nb < 1:
        raise TooFewSamples("both samples must be non-empty")
    pooled = sorted(set(xa + xb))
    d_stat = 0.0
    ia = ib = 0
    for v in pooled:
        while ia < na and xa[ia] <= v:
            ia += 1
        while ib < nb and xb[ib] <= v:
            ib += 1
        d_stat = max(d_stat, abs(ia / na - ib / nb))
    ne = na * nb / (na + nb)
    p = dist.kolmogorov_sf(math.sqrt(ne) * d_stat)
    return TestResult(
        test="ks_two_sample",
        statistic=d_stat,
        p_value=p,
        n_per_group=[na, nb],
        method_notes="asymptotic two-sample Kolmogorov-Smirnov",
    )


def levene(groups: Sequence[Sequence[float]]) -> TestResult:
    """Levene's W on absolute deviations from group means."""
    k = len(groups)
    if k < 2:
        raise TooFewGroups(f"Levene needs >= 2 groups, got {k}")
    for g in groups:
        if len(g) < 2:
            raise TooFewSamples("each group needs n >= 2")
    z = [[abs(x - _mean(g)) for x in g] for g in groups]
    n_total = sum(len(g) for g in groups)
    z_group_means = [_mean(zg) for zg in z]
    z_grand = sum(sum(zg) for zg in z) / n_total
    between = sum(len(zg) * (zm - z_grand) ** 2 for zg, zm in zip(z, z_group_means))
    within = sum(
        sum((v - zm) ** 2 for v in zg) for zg, zm in zip(z, z_group_means)
    )
    if within == 0.0:
        raise DegenerateDeviations(
            "within-group deviation variance is zero; W is undefined "
            "(constant groups, or every group's deviations are identical)"
        )
    w = (n_total - k) / (k - 1) * between / within
    p = dist.f_sf(w, k - 1, n_total - k)
    return TestResult(
        test="levene",
        statistic=w,
        p_value=p,
        n_per_group=[len(g) for g in groups],
        method_notes="mean-centered absolute deviations, F reference",
    )


def t_independent(
    a: Sequence[float], b: Sequence[float], welch: bool = False
) -> TestResult:
    """Two-sided independent-samples t-test (pooled variance by default)."""
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise TooFewSamples("t-test needs n >= 2 per group")
    ma, mb = _mean(a), _mean(b)
    va, vb = _var(a), _var(b)
    if welch:
        sa, sb = va / na, vb / nb
        if sa + sb == 0.0:
            raise ZeroVariance("both groups constant; t is undefined")
        se = math.sqrt(sa + sb)
        df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
        notes = "Welch variant (unpooled variance, Welch-Satterthwaite df)"
    else:
        pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        if pooled == 0.0:
            raise ZeroVariance("pooled variance is zero; t is undefined")
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
        df = na + nb - 2
        notes = "pooled variance, two-sided"
    t = (ma - mb) / se
    p = dist.t_sf_two_sided(t, df)
    return TestResult(
        test="t_independent",
        statistic=t,
        p_value=p,
        n_per_group=[na, nb],
        method_notes=notes,
    )


def _ranks_with_ties(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Midranks of the pooled values plus tie-group sizes."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    ties = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = mid
        ties.append(j - i + 1)
        i = j + 1
    return ranks, ties


def _mwu_exact_counts(n: int, m: int) -> list[int]:
    """Distribution of U over all C(n+m, n) tie-free rank arrangements.

    counts[u] is the number of arrangements giving U = u for the group of
    size n against the group of size m. Recurrence on the largest pooled
    value: N(i,j)(u) = N(i-1,j)(u-j) + N(i,j-1)(u) (an A-value beats all j
    B-values so far; a B-value adds nothing).
    """
    max_u = n * m
    prev = [[1] + [0] * max_u for _ in range(m + 1)]  # i = 0: U must be 0
    for _ in range(1, n + 1):
        cur = [[0] * (max_u + 1) for _ in range(m + 1)]
        cur[0][0] = 1  # j = 0: U must be 0
        for j in range(1, m + 1):
            row = cur[j]
            below = cur[j - 1]
            prow = prev[j]
            for u in range(max_u + 1):
                v = below[u]
                if u >= j:
                    v += prow[u - j]
                row[u] = v
        prev = cur
    return prev[m]


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U.

    Exact enumeration of the U distribution when the pooled sample is
    small (<= MWU_EXACT_LIMIT) and tie-free; otherwise the normal
    approximation with tie and continuity corrections.
    """
    na, nb = len(a), len(b)
    if na < 1 or nb < 1:
        raise TooFewSamples("both samples must be non-empty")
    pooled = [float(x) for x in a] + [float(x) for x in b]
    ranks, ties = _ranks_with_ties(pooled)
    rank_a = sum(ranks[:na])
    u_a = rank_a - na * (na + 1) / 2.0
    has_ties = any(t > 1 for t in ties)

    if na + nb <= MWU_EXACT_LIMIT and not has_ties:
        counts = _mwu_exact_counts(na, nb)
        total = sum(counts)
        u_int = int(round(u_a))
        p_le = sum(counts[: u_int + 1]) / total
        p_ge = sum(counts[u_int:]) / total
        p = min(1.0, 2.0 * min(p_le, p_ge))
        notes = "exact U distribution (tie-free enumeration by recurrence)"
    else:
        n = na + nb
        mean_u = na * nb / 2.0
        tie_term = sum(t**3 - t for t in ties) / (n * (n - 1)) if n > 1 else 0.0
        var_u = na * nb / 12.0 * ((n + 1) - tie_term)
        if var_u <= 0.0:
            p = 1.0
            notes = "degenerate pooled sample (all values tied); p fixed at 1"
        else:
            diff = u_a - mean_u
            cc = 0.5 if diff > 0 else (-0.5 if diff < 0 else 0.0)
            z = (diff - cc) / math.sqrt(var_u)
            p = min(1.0, 2.0 * dist.normal_sf(abs(z)))
            notes = "normal approximation with tie and continuity corrections"
    return TestResult(
        test="mann_whitney_u",
        statistic=u_a,
        p_value=p,
        n_per_group=[na, nb],
        method_notes=notes,
    )


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H with tie correction, chi-square reference."""
    k = len(groups)
    if k < 2:
        raise TooFewGroups(f"Kruskal-Wallis needs >= 2 groups, got {k}")
    sizes = [len(g) for g in groups]
    if any(s < 1 for s in sizes):
        raise TooFewSamples("every group must be non-empty")
    pooled = [float(x) for g in groups for x in g]
    n = len(pooled)
    ranks, ties = _ranks_with_ties(pooled)
    h = 0.0
    start = 0
    for size in sizes:
        r = sum(ranks[start : start + size])
        h += r * r / size
        start += size
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    correction = 1.0 - sum(t**3 - t for t in ties) / (n**3 - n) if n > 1 else 1.0
    if correction == 0.0:
        h = 0.0
        notes = "all values tied; H fixed at 0"
    else:
        h /= correction
        notes = "tie-corrected H, chi-square reference with k-1 df"
    # guard tiny negative values from float cancellation
    h = max(0.0, h)
    p = dist.chi2_sf(h, k - 1)
    return TestResult(
        test="kruskal_wallis",
        statistic=h,
        p_value=p,
        n_per_group=sizes,
        method_notes=notes,
    )


@dataclass(slots=True)
class ComparisonReport:
    """Everything compare_groups ran: gate tests, path, pairwise, overall."""

    alpha: float
    path: str
    normality: dict[str, TestResult]
    levene: TestResult
    pairwise: dict[str, TestResult]
    overall: TestResult | None
    significant_pairs: dict[str, bool]
    overall_significant: bool | None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "path": self.path,
            "normality": {g: r.to_dict() for g, r in self.normality.items()},
            "levene": self.levene.to_dict(),
            "pairwise": {p: r.to_dict() for p, r in self.pairwise.items()},
            "overall": None if self.overall is None else self.overall.to_dict(),
            "significant_pairs": dict(self.significant_pairs),
            "overall_significant": self.overall_significant,
            "notes": list(self.notes),
        }


def pair_key(g1: str, g2: str) -> str:
    return f"{g1} vs {g2}"


def compare_groups(
    groups: dict[str, Sequence[float]],
    alpha: float = DEFAULT_ALPHA,
    welch: bool = False,
) -> ComparisonReport:
    """Run the gated battery over named groups of per-subject deltas.

    Parametric path (pairwise t-tests) runs only when every group passes
    KS normality and Levene finds equal variances at ``alpha``; otherwise
    Mann-Whitney U pairwise and Kruskal-Wallis overall.
    """
    if len(groups) < 2:
        raise TooFewGroups(f"need >= 2 groups, got {len(groups)}")
    names = list(groups)
    normality = {g: ks_normality(groups[g]) for g in names}
    lev = levene([groups[g] for g in names])
    all_normal = all(r.p_value > alpha for r in normality.values())
    equal_var = lev.p_value > alpha
    parametric = all_normal and equal_var

    pairwise: dict[str, TestResult] = {}
    notes: list[str] = []
    pairs = [
        (names[i], names[j])
        for i in range(len(names))
        for j in range(i + 1, len(names))
    ]
    if parametric:
        path = "parametric"
        for g1, g2 in pairs:
            pairwise[pair_key(g1, g2)] = t_independent(groups[g1], groups[g2], welch)
        overall = None
        notes.append(
            "parametric path: pairwise independent t-tests; no overall one-way "
            "test in this battery"
        )
    else:
        path = "nonparametric"
        for g1, g2 in pairs:
            pairwise[pair_key(g1, g2)] = mann_whitney_u(groups[g1], groups[g2])
        overall = kruskal_wallis([groups[g] for g in names]) if len(names) >= 2 else None
        why = []
        if not all_normal:
            why.append("normality rejected for at least one group")
        if not equal_var:
            why.append("Levene rejected equal variances")
        notes.append("nonparametric path: " + "; ".join(why))
    # two-sample KS between pairs, informational only (the equal-distribution
    # assumption check is not used for gating)
    for g1, g2 in pairs:
        ks = ks_two_sample(groups[g1], groups[g2])
        notes.append(
            f"two-sample KS {pair_key(g1, g2)}: D={ks.statistic:.4f} p={ks.p_value:.4f}"
        )

    significant = {key: r.p_value < alpha for key, r in pairwise.items()}
    return ComparisonReport(
        alpha=alpha,
        path=path,
        normality=normality,
        levene=lev,
        pairwise=pairwise,
        overall=overall,
        significant_pairs=significant,
        overall_significant=None if overall is None else overall.p_value < alpha,
        notes=notes,
    )


__all__ = [
    "DEFAULT_ALPHA",
    "MWU_EXACT_LIMIT",
    "TestResult",
    "ComparisonReport",
    "ks_normality",
    "ks_two_sample",
    "levene",
    "t_independent",
    "mann_whitney_u",
    "kruskal_wallis",
    "compare_groups",
    "pair_key",
]
