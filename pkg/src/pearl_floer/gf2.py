"""Exact linear algebra over GF(2) for graded cochain complexes.

Matrices are stored as bit-packed rows (one Python int per row, bit j =
column j), so all arithmetic is exact and word-parallel.  On top of the
matrix layer the module provides graded cochain complexes with a checked
``d^2 = 0`` predicate, cohomology ranks, chain-map verification, mapping
cones (hence quasi-isomorphism detection), and decreasing filtrations with
their spectral pages.

Filtration convention: a filtered complex carries one integer level per
generator, and ``G^p`` is the span of the generators of level >= p, so
``G^0 >= G^1 >= ...``.  The differential must not decrease levels.  The
page ranks are computed from the standard approximate-cycle spaces

    Z_r(p, q) = { x in G^p C^{p+q} : d x in G^{p+r} C^{p+q+1} },
    rank E_r(p, q) = dim Z_r(p, q)
                     - dim( Z_{r-1}(p+1, q-1) + d Z_{r-1}(p-r+1, q+r-2) ),

with ``G^a`` read as the whole complex for a <= 0 and as zero for a beyond
the maximal level.  Pages stabilise once r exceeds the maximal level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

__all__ = [
    "GF2Error",
    "ShapeMismatch",
    "DegreeViolation",
    "NotAComplex",
    "NotChainMap",
    "FiltrationViolated",
    "GF2Matrix",
    "gf2_rank",
    "span_basis",
    "nullspace_of_columns",
    "SquareZeroReport",
    "GradedComplex",
    "verify_chain_map",
    "mapping_cone",
    "is_quasi_iso",
    "FilteredComplex",
    "SpectralTable",
    "spectral_pages",
]


class GF2Error(Exception):
    """Base class for exact-linear-algebra failures."""


class ShapeMismatch(GF2Error):
    """Operand shapes are incompatible."""


class DegreeViolation(GF2Error):
    """A differential or map entry connects generators of the wrong degrees."""


class NotAComplex(GF2Error):
    """The differential does not square to zero."""


class NotChainMap(GF2Error):
    """The given map does not intertwine the differentials."""


class FiltrationViolated(GF2Error):
    """The differential strictly decreases the filtration level somewhere."""


def gf2_rank(rows: Iterable[int]) -> int:
    """Rank of the row span of bit-packed vectors, by exact elimination.

    Pivots are chosen deterministically: columns are scanned left to right
    (low bit first) and the pivot row for a column is the not-yet-used row
    of lowest index carrying that bit.
    """
    basis: dict[int, int] = {}  # lowest set bit -> reduced row
    rank = 0
    for row in rows:
        while row:
            low = row & -row
            if low in basis:
                row ^= basis[low]
            else:
                basis[low] = row
                rank += 1
                break
    return rank


def span_basis(vectors: Iterable[int]) -> list[int]:
    """A reduced basis of the GF(2) span of bit-packed vectors."""
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            low = v & -v
            if low in basis:
                v ^= basis[low]
            else:
                basis[low] = v
                break
    return [basis[k] for k in sorted(basis)]


def nullspace_of_columns(columns: Sequence[int]) -> list[int]:
    """Kernel of ``lambda -> XOR of columns[j] over set bits j of lambda``.

    Returns combination masks (bit j = coefficient of columns[j]) forming a
    basis of the kernel, in deterministic order.
    """
    basis: dict[int, tuple[int, int]] = {}  # lowest set bit -> (reduced col, combo)
    kernel: list[int] = []
    for j, col in enumerate(columns):
        combo = 1 << j
        while col:
            low = col & -col
            if low not in basis:
                basis[low] = (col, combo)
                break
            bcol, bcombo = basis[low]
            col ^= bcol
            combo ^= bcombo
        else:
            kernel.append(combo)
    return kernel


class GF2Matrix:
    """A dense matrix over GF(2) with bit-packed rows."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: Sequence[int] | None = None):
        if rows < 0 or cols < 0:
            raise ShapeMismatch(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        if data is None:
            self.data = [0] * rows
        else:
            if len(data) != rows:
                raise ShapeMismatch(f"expected {rows} rows, got {len(data)}")
            mask = (1 << cols) - 1
            for r in data:
                if r & ~mask:
                    raise ShapeMismatch("row data has bits beyond the column count")
            self.data = list(data)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "GF2Matrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "GF2Matrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def from_entries(
        cls, rows: int, cols: int, entries: Iterable[tuple[int, int]]
    ) -> "GF2Matrix":
        """Build from (row, col) entries; repeated entries cancel in pairs."""
        m = cls(rows, cols)
        for i, j in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ShapeMismatch(f"entry ({i}, {j}) outside shape ({rows}, {cols})")
            m.data[i] ^= 1 << j
        return m

    @classmethod
    def from_dense(cls, array: Sequence[Sequence[int]]) -> "GF2Matrix":
        rows = len(array)
        cols = len(array[0]) if rows else 0
        data = []
        for row in array:
            if len(row) != cols:
                raise ShapeMismatch("ragged dense input")
            data.append(sum((1 << j) for j, v in enumerate(row) if int(v) % 2))
        return cls(rows, cols, data)

    # -- access ------------------------------------------------------------

    def get(self, i: int, j: int) -> int:
        return (self.data[i] >> j) & 1

    def row(self, i: int) -> int:
        return self.data[i]

    def column(self, j: int) -> int:
        bit = 1 << j
        out = 0
        for i, r in enumerate(self.data):
            if r & bit:
                out |= 1 << i
        return out

    def entries(self) -> Iterator[tuple[int, int]]:
        for i, r in enumerate(self.data):
            while r:
                low = r & -r
                yield (i, low.bit_length() - 1)
                r ^= low

    def to_dense(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.cols)] for r in self.data]

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.data)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "GF2Matrix") -> "GF2Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeMismatch("addition of different shapes")
        return GF2Matrix(
            self.rows, self.cols, [a ^ b for a, b in zip(self.data, other.data)]
        )

    def __matmul__(self, other: "GF2Matrix") -> "GF2Matrix":
        if self.cols != other.rows:
            raise ShapeMismatch(
                f"product shape mismatch ({self.rows}x{self.cols} @"
                f" {other.rows}x{other.cols})"
            )
        out = [0] * self.rows
        for i, r in enumerate(self.data):
            acc = 0
            while r:
                low = r & -r
                acc ^= other.data[low.bit_length() - 1]
                r ^= low
            out[i] = acc
        return GF2Matrix(self.rows, other.cols, out)

    def apply(self, vector: int) -> int:
        """Matrix times a bit-packed column vector (bit j = coordinate j)."""
        out = 0
        v = vector
        while v:
            low = v & -v
            out ^= self.column(low.bit_length() - 1)
            v ^= low
        return out

    def transpose(self) -> "GF2Matrix":
        out = [0] * self.cols
        for i, r in enumerate(self.data):
            while r:
                low = r & -r
                out[low.bit_length() - 1] |= 1 << i
                r ^= low
        return GF2Matrix(self.cols, self.rows, out)

    def rank(self) -> int:
        return gf2_rank(self.data)

    # -- comparison / display ----------------------------------------------

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GF2Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, tuple(self.data)))

    def __repr__(self) -> str:
        return f"GF2Matrix({self.rows}x{self.cols}, {sum(bin(r).count('1') for r in self.data)} entries)"


@dataclass(frozen=True)
class SquareZeroReport:
    """Outcome of a d^2 = 0 check, with the first offending entry if any."""

    ok: bool
    witness: tuple[str, str] | None = None
    witness_indices: tuple[int, int] | None = None


@dataclass(frozen=True)
class GradedComplex:
    """A finite GF(2) cochain complex with integer-graded generators.

    ``differential`` acts on generator indices: entry (i, j) = 1 means the
    differential of generator j contains generator i, which forces
    ``degrees[i] == degrees[j] + 1`` (checked at construction).  Whether
    ``d^2 = 0`` holds is *not* assumed; it is checked on demand so that
    broken inputs can be reported rather than rejected blindly.
    """

    degrees: tuple[int, ...]
    differential: GF2Matrix
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.degrees)
        d = self.differential
        if (d.rows, d.cols) != (n, n):
            raise ShapeMismatch(
                f"differential is {d.rows}x{d.cols} for {n} generators"
            )
        if self.labels is not None and len(self.labels) != n:
            raise ShapeMismatch("one label per generator required")
        for i, j in d.entries():
            if self.degrees[i] != self.degrees[j] + 1:
                raise DegreeViolation(
                    f"entry {self.label(j)} -> {self.label(i)} maps degree"
                    f" {self.degrees[j]} to degree {self.degrees[i]}"
                )

    def __len__(self) -> int:
        return len(self.degrees)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else f"g{i}"

    def degree_indices(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, k in enumerate(self.degrees):
            out.setdefault(k, []).append(i)
        return dict(sorted(out.items()))

    def verify_square_zero(self) -> SquareZeroReport:
        """Exactly check d^2 = 0; report the first offending pair otherwise.

        The witness is (source generator, offending image component), found
        by scanning source generators in index order and, within a source,
        image components in index order.
        """
        sq = self.differential @ self.differential
        for j in range(len(self.degrees)):
            col = sq.column(j)
            if col:
                i = (col & -col).bit_length() - 1
                return SquareZeroReport(
                    ok=False,
                    witness=(self.label(j), self.label(i)),
                    witness_indices=(j, i),
                )
        return SquareZeroReport(ok=True)

    def cohomology_ranks(self) -> dict[int, int]:
        """Rank of the degree-k cohomology for every degree with generators.

        Raises :class:`NotAComplex` when d^2 != 0.
        """
        report = self.verify_square_zero()
        if not report.ok:
            raise NotAComplex(
                f"d^2 != 0 (witness {report.witness[0]} -> {report.witness[1]})"
            )
        by_degree = self.degree_indices()
        rank_from: dict[int, int] = {}
        for k, idx in by_degree.items():
            rank_from[k] = gf2_rank(self.differential.column(j) for j in idx)
        out: dict[int, int] = {}
        for k, idx in by_degree.items():
            out[k] = len(idx) - rank_from.get(k, 0) - rank_from.get(k - 1, 0)
        return out


def verify_chain_map(c1: GradedComplex, c2: GradedComplex, phi: GF2Matrix) -> bool:
    """Whether phi (columns = generators of c1) satisfies phi d1 = d2 phi.

    phi must have shape (len(c2), len(c1)) and be degree-preserving.
    """
    if (phi.rows, phi.cols) != (len(c2), len(c1)):
        raise ShapeMismatch(
            f"map is {phi.rows}x{phi.cols}, expected {len(c2)}x{len(c1)}"
        )
    for i, j in phi.entries():
        if c2.degrees[i] != c1.degrees[j]:
            raise DegreeViolation(
                f"map entry {c1.label(j)} -> {c2.label(i)} shifts degree"
                f" {c1.degrees[j]} to {c2.degrees[i]}"
            )
    return phi @ c1.differential == c2.differential @ phi


def mapping_cone(
    c1: GradedComplex, c2: GradedComplex, phi: GF2Matrix
) -> GradedComplex:
    """Mapping cone of a chain map: Cone^k = C1^{k+1} (+) C2^k.

    The differential is the block matrix [[d1, 0], [phi, d2]] acting on the
    shifted copy of C1 followed by C2.
    """
    if not verify_chain_map(c1, c2, phi):
        raise NotChainMap("cannot form the cone of a map that is not a chain map")
    n1, n2 = len(c1), len(c2)
    degrees = tuple(k - 1 for k in c1.degrees) + c2.degrees
    rows = [c1.differential.row(i) for i in range(n1)]
    rows += [phi.row(i) | (c2.differential.row(i) << n1) for i in range(n2)]
    labels = tuple(f"shift[{c1.label(i)}]" for i in range(n1)) + tuple(
        c2.label(i) for i in range(n2)
    )
    return GradedComplex(degrees, GF2Matrix(n1 + n2, n1 + n2, rows), labels)


def is_quasi_iso(c1: GradedComplex, c2: GradedComplex, phi: GF2Matrix) -> bool:
    """Whether a chain map induces an isomorphism on cohomology.

    Decided exactly through acyclicity of the mapping cone.  Raises
    :class:`NotChainMap` when phi is not a chain map, and propagates
    :class:`NotAComplex` when either differential fails d^2 = 0.
    """
    for c in (c1, c2):
        rep = c.verify_square_zero()
        if not rep.ok:
            raise NotAComplex(
                f"d^2 != 0 (witness {rep.witness[0]} -> {rep.witness[1]})"
            )
    if not verify_chain_map(c1, c2, phi):
        raise NotChainMap("the given map does not intertwine the differentials")
    cone = mapping_cone(c1, c2, phi)
    return all(r == 0 for r in cone.cohomology_ranks().values())


@dataclass(frozen=True)
class FilteredComplex:
    """A graded complex with a decreasing filtration by generator levels.

    ``G^p`` is spanned by the generators of level >= p; the differential
    must map each generator to generators of the same or higher level.
    """

    complex: GradedComplex
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.complex)
        if len(self.levels) != n:
            raise ShapeMismatch("one filtration level per generator required")
        for lev in self.levels:
            if lev < 0:
                raise FiltrationViolated(f"negative filtration level {lev}")
        for i, j in self.complex.differential.entries():
            if self.levels[i] < self.levels[j]:
                raise FiltrationViolated(
                    f"entry {self.complex.label(j)} -> {self.complex.label(i)} drops"
                    f" level {self.levels[j]} to {self.levels[i]}"
                )

    @property
    def max_level(self) -> int:
        return max(self.levels) if self.levels else 0


@dataclass(frozen=True)
class SpectralTable:
    """Rank table of the spectral pages of a filtered complex.

    ``pages[r]`` maps (p, q) to the rank of E_r at column p and total
    degree p + q; zero ranks are omitted.  Pages stabilise at
    ``r_stable = max_level + 1`` and ``e_inf`` equals that page.
    """

    pages: tuple[dict[tuple[int, int], int], ...]
    e_inf: dict[tuple[int, int], int]
    max_level: int

    @property
    def r_stable(self) -> int:
        return self.max_level + 1

    def rank(self, r: int, p: int, q: int) -> int:
        if r >= len(self.pages):
            return self.e_inf.get((p, q), 0)
        return self.pages[r].get((p, q), 0)

    def e_inf_rank(self, p: int, q: int) -> int:
        return self.e_inf.get((p, q), 0)


def spectral_pages(fc: FilteredComplex, r_max: int | None = None) -> SpectralTable:
    """Rank tables of the pages E_0 .. E_max(r_max, stabilisation), plus E_inf."""
    cx = fc.complex
    n = len(cx)
    levels = fc.levels
    degrees = cx.degrees
    maxlev = fc.max_level
    r_stable = maxlev + 1
    r_top = r_stable if r_max is None else max(r_max, r_stable)
    columns = [cx.differential.column(j) for j in range(n)]

    def d_apply(vec: int) -> int:
        out = 0
        v = vec
        while v:
            low = v & -v
            out ^= columns[low.bit_length() - 1]
            v ^= low
        return out

    def z_space(p: int, r: int, ndeg: int) -> list[int]:
        """Basis of Z_r(p, ndeg - p) = G^p C^ndeg intersect d^{-1} G^{p+r}."""
        dom = [j for j in range(n) if degrees[j] == ndeg and levels[j] >= p]
        if not dom:
            return []
        cut = p + r
        bad = 0
        for i in range(n):
            if degrees[i] == ndeg + 1 and levels[i] < cut:
                bad |= 1 << i
        combos = nullspace_of_columns([columns[j] & bad for j in dom])
        vectors = []
        for combo in combos:
            vec = 0
            c = combo
            while c:
                low = c & -c
                vec |= 1 << dom[low.bit_length() - 1]
                c ^= low
            vectors.append(vec)
        return vectors

    present_degrees = sorted(set(degrees))

    def page(r: int) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for ndeg in present_degrees:
            for p in range(0, maxlev + 1):
                if r == 0:
                    rank = sum(
                        1
                        for j in range(n)
                        if degrees[j] == ndeg and levels[j] == p
                    )
                else:
                    zr = z_space(p, r, ndeg)
                    if not zr:
                        continue
                    den = list(z_space(p + 1, r - 1, ndeg))
                    den += [d_apply(v) for v in z_space(p - r + 1, r - 1, ndeg - 1)]
                    rank = len(zr) - len(span_basis(den))
                if rank:
                    out[(p, ndeg - p)] = rank
        return out

    pages = tuple(page(r) for r in range(r_top + 1))
    return SpectralTable(pages=pages, e_inf=dict(pages[r_stable]), max_level=maxlev)
