"""Forest expansions of conditional cumulant generating functions.

Two quadratic recursions generate everything here, with exact polynomial
coefficients:

* the cumulant recursion ``K[1] = sum of leaves``,
  ``K[n+1] = 1/2 * sum_{k=1..n} K[k] <> K[n+1-k]`` — ``n! * K[n]`` is the
  n-th conditional cumulant of the terminal value;
* the joint-CGF recursion ``G[2] = (a^2/2 + b) * (Y<>Y)``,
  ``G[k] = 1/2 * sum_{j=2..k-2} G[k-j] <> G[j] + a * (Y <> G[k-1])`` for the
  pair (martingale, its quadratic variation), plus a three-parameter variant
  with a second leaf ``zeta`` for a forward-curve functional.

``reorder`` connects the two: running the two-letter cumulant recursion over
``{Y, QV}``, substituting the QV leaf by the two-leaf cherry ``(Y,Y)`` and
regrouping by leaf count reproduces the G expansion order by order, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .algebra import Forest, Poly, PolyLike, join, leaf

__all__ = [
    "ExpansionResult",
    "k_expansion",
    "g_expansion",
    "spx_g_expansion",
    "specialize",
    "reorder",
    "DEFAULT_MAX_ORDER_CAP",
]

# Shape counts grow like Wedderburn-Etherington numbers, so even order 12 is
# trivial; the cap just catches accidentally huge requests.
DEFAULT_MAX_ORDER_CAP = 64

HALF = Fraction(1, 2)


@dataclass(frozen=True, eq=True)
class ExpansionResult:
    """Orders of a forest expansion plus the request metadata.

    ``orders`` maps order index to :class:`Forest`; K expansions carry orders
    1..max_order, G-type expansions 2..max_order.  Forests may be structurally
    zero (e.g. after a specializing substitution that cancels everything).
    """

    kind: str  # "K" | "G" | "SPXG"
    alphabet: Tuple[str, ...]
    symbols: Tuple[str, ...]
    orders: Dict[int, Forest] = field(compare=True)

    def max_order(self) -> int:
        return max(self.orders) if self.orders else 0

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.orders.values())


def _check_order(max_order: int, low: int) -> None:
    if not isinstance(max_order, int):
        raise TypeError("max_order must be an integer")
    if max_order < low:
        raise ValueError(f"max_order must be >= {low}, got {max_order}")
    if max_order > DEFAULT_MAX_ORDER_CAP:
        raise ValueError(f"max_order {max_order} exceeds cap {DEFAULT_MAX_ORDER_CAP}")


def k_expansion(
    max_order: int,
    alphabet: Sequence[str] = ("Y",),
    symbols: Optional[Sequence[str]] = None,
) -> ExpansionResult:
    """Cumulant forests K[1..max_order] over the given leaf alphabet.

    For a single-letter alphabet, K[1] is the bare leaf with coefficient 1.
    For multi-letter alphabets each leaf enters K[1] weighted by its own
    formal symbol (defaults ``z1, z2, ...``), so coefficients of higher
    orders are polynomials recording all mixed contributions.

    Args:
        max_order: highest order to generate (>= 1).
        alphabet: leaf labels, nonempty.
        symbols: one weight symbol per label; optional for univariate.

    Returns:
        ExpansionResult with kind "K" and orders 1..max_order.
    """
    _check_order(max_order, 1)
    if not alphabet:
        raise ValueError("alphabet must be nonempty")
    labels = tuple(alphabet)
    if symbols is None:
        syms: Tuple[str, ...] = () if len(labels) == 1 else tuple(
            f"z{i+1}" for i in range(len(labels))
        )
    else:
        if len(symbols) != len(labels):
            raise ValueError("symbols must match alphabet length")
        syms = tuple(symbols)

    if syms:
        k1 = Forest({leaf(l): Poly.symbol(s) for l, s in zip(labels, syms)})
    else:
        k1 = Forest.of(leaf(labels[0]), 1)

    orders: Dict[int, Forest] = {1: k1}
    for n in range(1, max_order):
        acc = Forest.zero()
        for k in range(1, n + 1):
            acc = acc + orders[k].diamond(orders[n + 1 - k])
        orders[n + 1] = acc.scale(HALF)
    return ExpansionResult(kind="K", alphabet=labels, symbols=syms, orders=orders)


def g_expansion(max_order: int) -> ExpansionResult:
    """Joint-CGF forests G[2..max_order] for (martingale, quadratic variation).

    Coefficients are exact polynomials in the weights ``a`` (martingale) and
    ``b`` (quadratic variation).  Every tree in G[k] has exactly k leaves.
    """
    _check_order(max_order, 2)
    a = Poly.symbol("a")
    b = Poly.symbol("b")
    y = leaf("Y")
    cherry = Forest.of(join(y, y))
    g2_coeff = a * a * HALF + b
    orders: Dict[int, Forest] = {2: cherry.scale(g2_coeff)}
    y_forest = Forest.of(y)
    for k in range(3, max_order + 1):
        acc = Forest.zero()
        for j in range(2, k - 1):
            acc = acc + orders[k - j].diamond(orders[j])
        acc = acc.scale(HALF)
        acc = acc + y_forest.diamond(orders[k - 1]).scale(a)
        orders[k] = acc
    return ExpansionResult(kind="G", alphabet=("Y",), symbols=("a", "b"), orders=orders)


def spx_g_expansion(max_order: int) -> ExpansionResult:
    """Three-parameter G forests over the two-leaf alphabet {Y, zeta}.

    ``Y`` is the price log-martingale leaf, ``zeta`` a forward-curve leaf;
    weights are (a, b, c) for (price, quadratic variation, curve).  The order-2
    seed is ``(a(a-1)/2 + b)(Y<>Y) + ac (Y<>zeta) + c^2/2 (zeta<>zeta)`` and
    the recursion gains the extra branch ``c * (zeta <> G[k-1])``.

    Specializing (a, b, c) = (1, 0, 0) collapses every order to the zero
    forest — the martingality cancellation.
    """
    _check_order(max_order, 2)
    a = Poly.symbol("a")
    b = Poly.symbol("b")
    c = Poly.symbol("c")
    y = leaf("Y")
    z = leaf("zeta")
    g2 = (
        Forest.of(join(y, y), a * (a - 1) * HALF + b)
        + Forest.of(join(y, z), a * c)
        + Forest.of(join(z, z), c * c * HALF)
    )
    orders: Dict[int, Forest] = {2: g2}
    y_forest = Forest.of(y)
    z_forest = Forest.of(z)
    for k in range(3, max_order + 1):
        acc = Forest.zero()
        for j in range(2, k - 1):
            acc = acc + orders[k - j].diamond(orders[j])
        acc = acc.scale(HALF)
        acc = acc + y_forest.diamond(orders[k - 1]).scale(a)
        acc = acc + z_forest.diamond(orders[k - 1]).scale(c)
        orders[k] = acc
    return ExpansionResult(
        kind="SPXG", alphabet=("Y", "zeta"), symbols=("a", "b", "c"), orders=orders
    )


def specialize(
    result: ExpansionResult, bindings: Mapping[str, PolyLike]
) -> ExpansionResult:
    """Substitute symbols in every coefficient (rationals or polynomials).

    Substitution is exact; trees whose coefficient cancels to zero disappear
    structurally.  Bindings may be partial (binding only ``b = 0`` leaves the
    ``a``-dependence symbolic; binding only ``a = 0`` can cancel whole orders).
    Symbols still free afterwards surface later, when a numeric evaluation
    demands values for them.

    Args:
        result: any expansion result.
        bindings: symbol -> int | Fraction | Poly (may reference other symbols,
            e.g. ``b -> -a^2/2``).

    Returns:
        A new ExpansionResult with the same order keys.
    """
    unknown = set(bindings) - {
        s for f in result.orders.values() for _, p in f for s in p.symbols()
    } - set(result.symbols)
    if unknown:
        raise ValueError(f"bindings for unknown symbols: {sorted(unknown)}")
    new_orders: Dict[int, Forest] = {}
    for n, f in result.orders.items():
        new_orders[n] = f.map_coeffs(lambda p: p.substitute(bindings))
    return ExpansionResult(
        kind=result.kind,
        alphabet=result.alphabet,
        symbols=result.symbols,
        orders=new_orders,
    )


def reorder(two_variate_k: ExpansionResult) -> ExpansionResult:
    """Regroup a two-letter K expansion by leaf count into a G expansion.

    The input must be a K expansion over exactly two labels, the second being
    the quadratic-variation leaf.  That leaf is substituted by the cherry
    ``(Y,Y)`` over the first label, all orders are summed, and the result is
    regraded by leaf count.  Leaf-count bucket n is complete once K orders up
    to n are present (a substituted leaf doubles, so K[m] spreads over leaf
    counts m..2m and bucket n draws on orders ceil(n/2)..n); buckets above
    ``max_order`` would be incomplete and are not emitted.

    Returns:
        ExpansionResult of kind "G" with orders 2..max_order, coefficient-exact
        equal to :func:`g_expansion` when the input symbols are (a, b).
    """
    if two_variate_k.kind != "K" or len(two_variate_k.alphabet) != 2:
        raise ValueError(
            "reorder expects a K expansion over exactly two leaf labels, got "
            f"kind={two_variate_k.kind!r} alphabet={two_variate_k.alphabet!r}"
        )
    y_label, qv_label = two_variate_k.alphabet
    cherry = join(leaf(y_label), leaf(y_label))
    total = Forest.zero()
    for f in two_variate_k.orders.values():
        total = total + f.substitute_leaf(qv_label, cherry)
    buckets = total.grade_by_leaves()
    max_order = two_variate_k.max_order()
    orders = {n: f for n, f in buckets.items() if 2 <= n <= max_order}
    # ensure order keys are contiguous even if a bucket cancelled to zero
    for n in range(2, max_order + 1):
        orders.setdefault(n, Forest.zero())
    return ExpansionResult(
        kind="G",
        alphabet=(y_label,),
        symbols=two_variate_k.symbols,
        orders=dict(sorted(orders.items())),
    )
