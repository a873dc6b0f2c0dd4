"""Cascade-product precoder construction and closed-form degrees of freedom.

The construction follows the asymptotic alignment recipe for K >= 3 users on
a symbol extension of length T: user 1 transmits on all entrywise products
``prod T_kl^{n_kl}`` of N = (K-1)(K-2) - 1 cascade diagonals applied to the
all-ones vector (exponents up to n), user 3 on the same products with
exponents up to n - 1 behind a fixed prefix, and every other user on a fixed
diagonal rescaling of user 3's block. Per layer this yields
D = (n+1)^N + n^N total streams across one signal space of dimension D.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapacityError, DegenerateRealizationError, ParameterError
from .extension_core import EffectiveChannel

SINGLE_LAYER = "single"
DOUBLE_LAYER = "double"
LAYERS = (SINGLE_LAYER, DOUBLE_LAYER)

# Refuse to materialize exponent enumerations beyond this many tuples; the
# closed-form accounting covers the asymptotic regime without them.
TUPLE_GUARD = 1_000_000

# An exponent tuple maps each cascade key pair (k, l) to its exponent.
ExponentTuple = dict[tuple[int, int], int]


@dataclass(frozen=True)
class PrecoderConfig:
    """Derived sizing for one alignment construction.

    ``exponent_cap`` is the symmetric exponent bound n, ``cascade_order`` the
    count N of cascade generators, ``effective_dim`` the per-layer dimension
    D = (n+1)^N + n^N, and ``extension_length`` the raw slot count T (equal
    to D for a single layer, 2D for the double layer).
    """

    users: int
    exponent_cap: int
    cascade_order: int
    layer: str
    extension_length: int
    effective_dim: int

    def __post_init__(self) -> None:
        if self.users < 3:
            raise ParameterError(f"need at least 3 users, got {self.users}")
        if self.exponent_cap < 1:
            raise ParameterError(f"exponent cap must be >= 1, got {self.exponent_cap}")
        if self.layer not in LAYERS:
            raise ParameterError(f"unknown layer tag {self.layer!r}")
        n_order = (self.users - 1) * (self.users - 2) - 1
        if self.cascade_order != n_order:
            raise ParameterError(f"cascade order {self.cascade_order} != {n_order}")
        dim = (self.exponent_cap + 1) ** self.cascade_order + self.exponent_cap**self.cascade_order
        if self.effective_dim != dim:
            raise ParameterError(f"effective dim {self.effective_dim} != {dim}")
        length = dim if self.layer == SINGLE_LAYER else 2 * dim
        if self.extension_length != length:
            raise ParameterError(f"extension length {self.extension_length} != {length}")


def cascade_pairs(users: int) -> list[tuple[int, int]]:
    """Key pairs (k, l) indexing the cascade generators, in sorted order.

    Both labels run over 2..users with k != l, and the reserved pair (2, 3)
    is excluded, leaving N = (users-1)(users-2) - 1 pairs.
    """
    if users < 3:
        raise ParameterError(f"need at least 3 users, got {users}")
    return [
        (k, l)
        for k in range(2, users + 1)
        for l in range(2, users + 1)
        if k != l and (k, l) != (2, 3)
    ]


def make_config(users: int, n: int, layer: str) -> PrecoderConfig:
    """Size an alignment construction for ``users`` pairs and exponent cap ``n``.

    All arithmetic is exact integer arithmetic, so the huge dimensions of the
    asymptotic regime (for example users=5, n=82) are represented without
    rounding; only explicit enumeration is capped elsewhere.
    """
    if users < 3:
        raise ParameterError(f"need at least 3 users, got {users}")
    if n < 1:
        raise ParameterError(f"exponent cap must be >= 1, got {n}")
    if layer not in LAYERS:
        raise ParameterError(f"unknown layer tag {layer!r}")
    order = (users - 1) * (users - 2) - 1
    dim = (n + 1) ** order + n**order
    length = dim if layer == SINGLE_LAYER else 2 * dim
    return PrecoderConfig(
        users=users,
        exponent_cap=n,
        cascade_order=order,
        layer=layer,
        extension_length=length,
        effective_dim=dim,
    )


def enumerate_tuples(config: PrecoderConfig, cap: int) -> list[ExponentTuple]:
    """List every exponent tuple with entries in 0..cap, lexicographically.

    ``cap`` must be the configured exponent cap n (user 1's family) or n - 1
    (user 3's family). The enumeration is refused above ``TUPLE_GUARD``
    tuples rather than silently materializing an astronomical list.
    """
    if cap not in (config.exponent_cap, config.exponent_cap - 1):
        raise ParameterError(
            f"cap {cap} is neither the exponent cap {config.exponent_cap} nor one below it"
        )
    count = (cap + 1) ** config.cascade_order
    if count > TUPLE_GUARD:
        raise CapacityError(
            f"{count} exponent tuples exceed the enumeration guard ({TUPLE_GUARD}); "
            "use closed_form_dof for accounting at this size"
        )
    pairs = cascade_pairs(config.users)
    return [
        dict(zip(pairs, combo))
        for combo in itertools.product(range(cap + 1), repeat=config.cascade_order)
    ]


@dataclass(frozen=True)
class CascadeSet:
    """Cascade generator diagonals plus the direct-to-cross ratio kappa.

    ``matrices[(k, l)]`` is the length-D diagonal of
    ``T_kl = H_21 H_23^-1 H_13 H_k1^-1 H_kl H_1l^-1`` (entrywise on effective
    diagonals); ``kappa`` is the diagonal of ``H_11^-1 H_12``.
    """

    users: int
    dim: int
    matrices: dict[tuple[int, int], np.ndarray]
    kappa: np.ndarray


def build_cascades(eff: EffectiveChannel) -> CascadeSet:
    """Form every cascade generator T_kl and kappa from effective diagonals.

    Raises
    ------
    DegenerateRealizationError
        If any entrywise quotient overflows or underflows to an unusable
        value; the effective diagonals themselves are nonzero by construction,
        so this only fires on extreme magnitude spread.
    """
    d = eff.diagonal
    common = d(2, 1) / d(2, 3) * d(1, 3)
    matrices: dict[tuple[int, int], np.ndarray] = {}
    for k, l in cascade_pairs(eff.users):
        mat = common / d(k, 1) * d(k, l) / d(1, l)
        if not np.all(np.isfinite(mat)) or np.any(mat == 0):
            raise DegenerateRealizationError(f"cascade ({k}, {l}) left the representable range")
        matrices[(k, l)] = mat
    kappa = d(1, 2) / d(1, 1)
    if not np.all(np.isfinite(kappa)) or np.any(kappa == 0):
        raise DegenerateRealizationError("kappa left the representable range")
    return CascadeSet(users=eff.users, dim=eff.dim, matrices=matrices, kappa=kappa)


@dataclass(frozen=True)
class PrecoderSet:
    """Per-user precoder matrices over one effective signal space.

    ``precoders[k]`` is the D x d_k complex matrix for 1-based user k with
    unit-norm columns; ``column_order[k]`` records the exponent vector behind
    each column, aligned with ``pairs``. ``scalar_multiplies`` counts the
    scalar multiply/divide operations spent building the set (vector passes
    times their length), a hook for complexity regressions.
    """

    users: int
    dim: int
    precoders: dict[int, np.ndarray]
    stream_counts: dict[int, int]
    pairs: tuple[tuple[int, int], ...]
    column_order: dict[int, tuple[tuple[int, ...], ...]]
    scalar_multiplies: int


def build_precoders(eff: EffectiveChannel, config: PrecoderConfig) -> PrecoderSet:
    """Build the cascade-product precoders for every user.

    User 1's columns are ``prod T_kl^{e_kl} @ ones`` over all exponent tuples
    with entries up to n; user 3's are the cap n - 1 tuples behind the prefix
    ``H_21 H_23^-1``; user i (i != 1, 3) rescales user 3's block by
    ``H_1i^-1 H_13``. Columns are normalized to unit Euclidean norm, and all
    cascade powers are cached so the scalar work stays linear in D for fixed
    (users, n).

    Parameters
    ----------
    eff : EffectiveChannel
        Must satisfy ``eff.dim == config.effective_dim``.
    config : PrecoderConfig

    Returns
    -------
    PrecoderSet

    Raises
    ------
    ParameterError
        On any dimension mismatch between ``eff`` and ``config``.
    CapacityError
        If the exponent enumeration would exceed ``TUPLE_GUARD``.
    DegenerateRealizationError
        If a cascade or a column degenerates numerically.
    """
    if eff.users != config.users:
        raise ParameterError(f"user count {eff.users} != configured {config.users}")
    if eff.dim != config.effective_dim:
        raise ParameterError(f"effective dim {eff.dim} != configured {config.effective_dim}")

    dim = eff.dim
    cap = config.exponent_cap
    pairs = cascade_pairs(config.users)
    cascades = build_cascades(eff)
    # build_cascades spends 3 vector ops on the shared prefix and kappa plus
    # 3 per key pair, each over D entries; fold that into the op count.
    ops = (3 + 3 * len(pairs)) * dim

    # Cache T_kl^e for e = 0..cap once; every column is then a handful of
    # cached-vector products instead of repeated exponentiation.
    tables: dict[tuple[int, int], np.ndarray] = {}
    for pair in pairs:
        table = np.empty((cap + 1, dim), dtype=complex)
        table[0] = 1.0
        for e in range(1, cap + 1):
            table[e] = table[e - 1] * cascades.matrices[pair]
            ops += dim
        tables[pair] = table

    def product_columns(tuples: list[ExponentTuple]) -> tuple[np.ndarray, int]:
        cols = np.ones((dim, len(tuples)), dtype=complex)
        spent = 0
        for idx, tup in enumerate(tuples):
            for pair in pairs:
                e = tup[pair]
                if e:
                    cols[:, idx] *= tables[pair][e]
                    spent += dim
        return cols, spent

    tuples_full = enumerate_tuples(config, cap)
    tuples_reduced = enumerate_tuples(config, cap - 1)

    raw: dict[int, np.ndarray] = {}
    v1, spent = product_columns(tuples_full)
    ops += spent
    raw[1] = v1

    base3, spent = product_columns(tuples_reduced)
    ops += spent
    # the user-3 prefix H_21 H_23^-1 is not one of the cascades
    prefix = eff.diagonal(2, 1) / eff.diagonal(2, 3)
    ops += dim
    raw[3] = prefix[:, None] * base3
    ops += dim * base3.shape[1]

    for i in range(2, config.users + 1):
        if i == 3:
            continue
        ratio = eff.diagonal(1, 3) / eff.diagonal(1, i)
        ops += dim
        raw[i] = ratio[:, None] * raw[3]
        ops += dim * base3.shape[1]

    precoders: dict[int, np.ndarray] = {}
    for user, mat in sorted(raw.items()):
        if not np.all(np.isfinite(mat)):
            raise DegenerateRealizationError(f"precoder columns for user {user} overflowed")
        norms = np.sqrt(np.sum(np.abs(mat) ** 2, axis=0))
        ops += mat.size  # squared magnitudes
        if np.any(norms == 0):
            raise DegenerateRealizationError(f"precoder column for user {user} vanished")
        precoders[user] = mat / norms[None, :]
        ops += mat.size

    order_full = tuple(tuple(t[p] for p in pairs) for t in tuples_full)
    order_reduced = tuple(tuple(t[p] for p in pairs) for t in tuples_reduced)
    column_order = {u: (order_full if u == 1 else order_reduced) for u in precoders}
    stream_counts = {u: precoders[u].shape[1] for u in precoders}
    return PrecoderSet(
        users=config.users,
        dim=dim,
        precoders=precoders,
        stream_counts=stream_counts,
        pairs=tuple(pairs),
        column_order=column_order,
        scalar_multiplies=ops,
    )


@dataclass(frozen=True)
class DofValue:
    """Exact degrees of freedom as a reduced fraction plus a float rendering."""

    numerator: int
    denominator: int
    value: float

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def closed_form_dof(users: int, n: int, layer: str) -> DofValue:
    """Exact total degrees of freedom of the construction.

    Per layer the signal space has dimension (n+1)^N + n^N carrying
    (n+1)^N + (users-1) n^N streams, so

        dof_single = ((n+1)^N + (users-1) n^N) / ((n+1)^N + n^N)

    and the double layer halves it (same streams over twice the slots). The
    arithmetic is exact, so users=5 layers at n in the tens of thousands are
    still cheap.
    """
    config = make_config(users, n, layer)
    order = config.cascade_order
    hi = (n + 1) ** order
    lo = n**order
    dof = Fraction(hi + (users - 1) * lo, hi + lo)
    if layer == DOUBLE_LAYER:
        dof = dof / 2
    return DofValue(numerator=dof.numerator, denominator=dof.denominator, value=float(dof))
