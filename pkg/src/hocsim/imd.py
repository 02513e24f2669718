"""Intermodulation index tuples and the monomial features built from them.

Positions (``k``, ``k1``, ...) index into the used-subcarrier vector ``I``;
frequency closure is checked on the subcarrier numbers ``I[k]``.

Every term is stored as a :class:`Monomial`: the positions entering plainly
and the positions entering conjugated. Permutation-equivalent tuples are
folded to one canonical representative, so a learned coefficient absorbs the
multiplicity (e.g. the factor 2 on ``d_0 |d_1|^2``).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import NamedTuple

import numpy as np


class Monomial(NamedTuple):
    plain: tuple[int, ...]
    conj: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.plain) + len(self.conj)

    def label(self, I=None) -> str:
        name = (lambda p: f"r[{p}]") if I is None else (lambda p: f"r[{I[p]}]")
        parts = [name(p) for p in self.plain] + [name(p) + "*" for p in self.conj]
        return " ".join(parts)


def _check(I, k):
    I = [int(i) for i in I]
    if len(set(I)) != len(I) or I != sorted(I):
        raise ValueError("subcarrier indices must be sorted and unique")
    if not 0 <= k < len(I):
        raise ValueError(f"target position {k} out of range for {len(I)} subcarriers")
    return I


def enum_imd3(I, k: int) -> list[tuple[int, int, int]]:
    """Tuples ``(k1, k2, k3)``, ``k1 <= k2``, with ``I[k1] + I[k2] - I[k3] = I[k]``."""
    I = _check(I, k)
    where = {v: p for p, v in enumerate(I)}
    out = []
    for k1 in range(len(I)):
        for k2 in range(k1, len(I)):
            k3 = where.get(I[k1] + I[k2] - I[k])
            if k3 is not None:
                out.append((k1, k2, k3))
    return sorted(out)


def enum_imd5(I, k: int) -> list[tuple[int, int, int, int, int]]:
    """Tuples ``(k1..k5)``, ``k1 <= k2 <= k3``, ``k4 <= k5``, with
    ``I[k1] + I[k2] + I[k3] - I[k4] - I[k5] = I[k]``."""
    I = _check(I, k)
    n = len(I)
    pairs = defaultdict(list)
    for k4 in range(n):
        for k5 in range(k4, n):
            pairs[I[k4] + I[k5]].append((k4, k5))
    out = []
    for k1, k2, k3 in combinations_with_replacement(range(n), 3):
        for k4, k5 in pairs.get(I[k1] + I[k2] + I[k3] - I[k], ()):
            out.append((k1, k2, k3, k4, k5))
    return sorted(out)


@dataclass(frozen=True)
class ImdTermSet:
    """Linear term plus closure-satisfying IMD3 (and optionally IMD5) terms for one target."""

    target: int
    imd3: tuple[tuple[int, int, int], ...]
    imd5: tuple[tuple[int, int, int, int, int], ...] = ()

    @classmethod
    def build(cls, I, k: int, order: int = 5) -> "ImdTermSet":
        if order not in (1, 3, 5):
            raise ValueError("order must be 1, 3 or 5")
        imd3 = tuple(enum_imd3(I, k)) if order >= 3 else ()
        imd5 = tuple(enum_imd5(I, k)) if order >= 5 else ()
        return cls(target=k, imd3=imd3, imd5=imd5)

    @property
    def order(self) -> int:
        return 5 if self.imd5 else (3 if self.imd3 else 1)

    def monomials(self) -> list[Monomial]:
        terms = [Monomial((self.target,), ())]
        terms += [Monomial((a, b), (c,)) for a, b, c in self.imd3]
        terms += [Monomial((a, b, c), (d, e)) for a, b, c, d, e in self.imd5]
        return terms

    def __len__(self):
        return 1 + len(self.imd3) + len(self.imd5)

    def to_text(self, I=None) -> str:
        lines = [f"target {self.target}" + ("" if I is None else f" subcarrier {I[self.target]}")]
        lines.append(f"linear {self.target}")
        lines += ["imd3 " + " ".join(map(str, t)) for t in self.imd3]
        lines += ["imd5 " + " ".join(map(str, t)) for t in self.imd5]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ImdTermSet":
        target, imd3, imd5 = None, [], []
        for line in text.splitlines():
            f = line.split()
            if not f:
                continue
            if f[0] == "target":
                target = int(f[1])
            elif f[0] == "imd3":
                imd3.append(tuple(int(v) for v in f[1:4]))
            elif f[0] == "imd5":
                imd5.append(tuple(int(v) for v in f[1:6]))
            elif f[0] != "linear":
                raise ValueError(f"unrecognised term line {line!r}")
        if target is None:
            raise ValueError("missing target line")
        return cls(target=target, imd3=tuple(imd3), imd5=tuple(imd5))


FULL3_FAMILIES = 9


@dataclass(frozen=True)
class FullThirdOrderTermSet:
    """Every monomial up to degree 3 in ``r`` and ``r*``, grouped in nine families.

    Family layout (``n`` used subcarriers, ``<=`` marks an ordered pair):

    ===  ====================  =====================  ================
    fam  monomial              index constraint       size
    ===  ====================  =====================  ================
    1    r[k1]                 free                   n
    2    r[k1]*                free                   n
    3    r[k1] r[k2]           k1 <= k2               C(n+1, 2)
    4    r[k1]* r[k2]          free                   n^2
    5    r[k1]* r[k2]*         k1 <= k2               C(n+1, 2)
    6    r[k1] r[k2] r[k3]     k1 <= k2 <= k3         C(n+2, 3)
    7    r[k1]* r[k2] r[k3]    k1 free, k2 <= k3      n C(n+1, 2)
    8    r[k1]* r[k2]* r[k3]   k1 <= k2, k3 free      n C(n+1, 2)
    9    r[k1]* r[k2]* r[k3]*  k1 <= k2 <= k3         C(n+2, 3)
    ===  ====================  =====================  ================

    No frequency-closure filtering is applied; which terms matter is left
    to the regression.
    """

    target: int
    families: tuple[tuple[tuple[int, ...], ...], ...]

    @classmethod
    def build(cls, I, k: int) -> "FullThirdOrderTermSet":
        I = _check(I, k)
        n = range(len(I))
        pairs = list(combinations_with_replacement(n, 2))
        triples = list(combinations_with_replacement(n, 3))
        fam = (
            [(a,) for a in n],
            [(a,) for a in n],
            pairs,
            list(product(n, n)),
            pairs,
            triples,
            [(a, b, c) for a in n for b, c in pairs],
            [(a, b, c) for a, b in pairs for c in n],
            triples,
        )
        return cls(target=k, families=tuple(tuple(f) for f in fam))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.families)

    def __len__(self):
        return sum(self.sizes)

    def monomials(self) -> list[Monomial]:
        f = self.families
        terms = [Monomial(t, ()) for t in f[0]]
        terms += [Monomial((), t) for t in f[1]]
        terms += [Monomial(t, ()) for t in f[2]]
        terms += [Monomial((b,), (a,)) for a, b in f[3]]
        terms += [Monomial((), t) for t in f[4]]
        terms += [Monomial(t, ()) for t in f[5]]
        terms += [Monomial((b, c), (a,)) for a, b, c in f[6]]
        terms += [Monomial((c,), (a, b)) for a, b, c in f[7]]
        terms += [Monomial((), t) for t in f[8]]
        return terms

    def family_of(self) -> np.ndarray:
        """Family number (1..9) of each monomial, aligned with :meth:`monomials`."""
        return np.repeat(np.arange(1, FULL3_FAMILIES + 1), self.sizes)


def support_mask(terms: FullThirdOrderTermSet, I) -> np.ndarray:
    """Which full-set monomials belong to the reduced linear + IMD3 combiner."""
    reduced = set(ImdTermSet.build(I, terms.target, order=3).monomials())
    mask = []
    for m in terms.monomials():
        canon = Monomial(tuple(sorted(m.plain)), tuple(sorted(m.conj)))
        mask.append(canon in reduced)
    return np.array(mask)


class FeatureMap:
    """Vectorised evaluation of a fixed list of monomials.

    Built once per term set; :meth:`__call__` maps received symbols of shape
    ``(..., N_U)`` to features of shape ``(..., n_terms)``.
    """

    def __init__(self, monomials, n_used: int):
        self.monomials = list(monomials)
        self.n_used = n_used
        width = max([max(len(m.plain), len(m.conj)) for m in self.monomials] + [1])
        pad = n_used  # index of the appended column of ones
        self._plain = np.full((len(self.monomials), width), pad)
        self._conj = np.full((len(self.monomials), width), pad)
        for i, m in enumerate(self.monomials):
            self._plain[i, : len(m.plain)] = m.plain
            self._conj[i, : len(m.conj)] = m.conj
        self.degrees = np.array([m.degree for m in self.monomials])

    def __len__(self):
        return len(self.monomials)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=complex)
        if r.shape[-1] != self.n_used:
            raise ValueError(f"expected {self.n_used} subcarriers, got {r.shape[-1]}")
        ones = np.ones(r.shape[:-1] + (1,), dtype=complex)
        ext = np.concatenate([r, ones], axis=-1)
        ext_c = np.concatenate([r.conj(), ones], axis=-1)
        return np.prod(ext[..., self._plain], axis=-1) * np.prod(ext_c[..., self._conj], axis=-1)


def build_features(r, terms) -> np.ndarray:
    """Monomial features of ``r`` for an :class:`ImdTermSet` or :class:`FullThirdOrderTermSet`."""
    r = np.asarray(r)
    return FeatureMap(terms.monomials(), r.shape[-1])(r)


def term_counts(I) -> list[tuple[int, int]]:
    """(IMD3, IMD5) term counts per target position."""
    return [(len(enum_imd3(I, k)), len(enum_imd5(I, k))) for k in range(len(I))]


def enum_full3(I, k: int) -> FullThirdOrderTermSet:
    return FullThirdOrderTermSet.build(I, k)
