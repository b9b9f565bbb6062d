"""Degree bookkeeping on formal time-antiderivatives of the dual profiles.

For a term ∂ₜ^{−k}Φ⁽ʲ⁾:
    d⁽⁰⁾ = k if j = 0, k − 1 if j = 1
    d⁽¹⁾ = k − 1 if j = 0, k if j = 1
A proposed linear identity between such terms is contradicted when, at one
of the two levels, a single term carries the strictly largest degree.
All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations


@dataclass(frozen=True)
class FormalTerm:
    """coeff · ∂ₜ^{−k} Φ⁽ʲ⁾"""

    j: int
    k: int
    coeff: Fraction = Fraction(1)

    def __post_init__(self):
        if self.j not in (0, 1):
            raise ValueError("j must be 0 or 1")
        if self.k < 0:
            raise ValueError("antiderivative order k must be >= 0")
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        if self.coeff == 0:
            raise ValueError("zero coefficient")

    def __str__(self) -> str:
        c = "" if self.coeff == 1 else f"{self.coeff}*"
        op = "" if self.k == 0 else f"dt^-{self.k} "
        return f"{c}{op}Phi{self.j}"


@dataclass(frozen=True)
class Derivative:
    """coeff · ∂ₜⁿ Φ⁽ʲ⁾, the natural way to write a proposed identity."""

    j: int
    n: int
    coeff: Fraction = Fraction(1)

    def __post_init__(self):
        if self.j not in (0, 1):
            raise ValueError("j must be 0 or 1")
        if self.n < 0:
            raise ValueError("derivative order must be >= 0")
        object.__setattr__(self, "coeff", Fraction(self.coeff))


@dataclass
class Certificate:
    status: str
    level: int | None = None
    witness: FormalTerm | None = None
    narrative: list = field(default_factory=list)

    @property
    def contradiction(self) -> bool:
        return self.status == "contradiction"

    def render(self) -> str:
        lines = list(self.narrative)
        if self.contradiction:
            lines.append(f"=> contradiction at level {self.level}: {self.witness} has the unique maximal degree")
        else:
            lines.append("=> inconclusive: no level has a unique maximal-degree term")
        return "\n".join(lines)


def degree(term, level: int) -> int:
    """d⁽ˡᵉᵛᵉˡ⁾ of a FormalTerm or a (j, k) pair."""
    j, k = (term.j, term.k) if isinstance(term, FormalTerm) else term
    if level == 0:
        return k if j == 0 else k - 1
    if level == 1:
        return k - 1 if j == 0 else k
    raise ValueError("level must be 0 or 1")


def normalize(lhs, rhs) -> list:
    """Move everything to one side and rewrite derivatives as antiderivatives.

    ``Σ cᵢ ∂ₜ^{nᵢ}Φ = 0`` is integrated N = max nᵢ times, giving
    ``Σ cᵢ ∂ₜ^{−(N−nᵢ)}Φ = 0``. Like terms are merged and zeros dropped.
    """
    items = [(lhs, 1)] + [(t, -1) for t in rhs]
    if all(isinstance(t, FormalTerm) for t, _ in items):
        raw = [(t.j, t.k, s * t.coeff) for t, s in items]
    else:
        ders = [t if isinstance(t, Derivative) else None for t, _ in items]
        if any(d is None for d in ders):
            raise TypeError("mix of FormalTerm and Derivative inputs")
        N = max(d.n for d in ders)
        raw = [(d.j, N - d.n, s * d.coeff) for d, (_, s) in zip(ders, items)]
    merged: dict = {}
    for j, k, c in raw:
        merged[(j, k)] = merged.get((j, k), Fraction(0)) + c
    return [FormalTerm(j, k, c) for (j, k), c in sorted(merged.items()) if c != 0]


def check_dependency(lhs, rhs) -> Certificate:
    if not rhs:
        raise ValueError("rhs must be nonempty")
    terms = normalize(lhs, rhs)
    narrative = ["normalized identity: 0 = " + (" + ".join(str(t) for t in terms) if terms else "0")]
    if not terms:
        return Certificate("inconclusive", narrative=narrative)
    for level in (0, 1):
        degs = [degree(t, level) for t in terms]
        narrative.append(f"level {level} degrees: " + ", ".join(f"{t}:{d}" for t, d in zip(terms, degs)))
        top = max(degs)
        winners = [t for t, d in zip(terms, degs) if d == top]
        if len(winners) == 1:
            return Certificate("contradiction", level, winners[0], narrative)
    return Certificate("inconclusive", narrative=narrative)


def _leading_term_contradiction(support) -> bool:
    # support: set of (j, n) derivative orders with nonzero coefficient
    N = max(n for _, n in support)
    terms = [(j, N - n) for j, n in support]
    for level in (0, 1):
        degs = [degree(t, level) for t in terms]
        if degs.count(max(degs)) == 1:
            return True
    return False


def predict_independence(k_star: int) -> bool:
    """True iff every nonempty support in {∂ₜᵏΦʲ : j ∈ {0,1}, 1 ≤ k ≤ k*} is contradicted."""
    if k_star <= 0:
        return True
    universe = [(j, k) for j in (0, 1) for k in range(1, k_star + 1)]
    for size in range(1, len(universe) + 1):
        for support in combinations(universe, size):
            if not _leading_term_contradiction(support):
                return False
    return True


def collision_rule_holds(k_max: int = 10) -> bool:
    """Equal d⁽⁰⁾ between a Φ⁰ and a Φ¹ term forces k₀ = k₁ − 1 and |Δd⁽¹⁾| = 2."""
    for k0 in range(k_max + 1):
        for k1 in range(k_max + 1):
            if degree((0, k0), 0) == degree((1, k1), 0):
                if k0 != k1 - 1 or abs(degree((0, k0), 1) - degree((1, k1), 1)) != 2:
                    return False
    return True


EXAMPLE_1 = (Derivative(1, 2), [Derivative(1, 1), Derivative(0, 0)])
EXAMPLE_2 = (Derivative(1, 2), [Derivative(0, 1), Derivative(1, 0)])
