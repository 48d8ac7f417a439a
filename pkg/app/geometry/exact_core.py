"""
Exact arithmetic substrate.

Scalars are sympy ``Rational`` values, matrices are ``ImmutableMatrix``
instances with rational entries and polynomials are sparse ``PolyElement``
objects over ``QQ``. Every polynomial ring carries one generator more than the
number of coordinates: the last generator is the formal deformation
parameter ``nu``, so the exponent of the last slot is the nu-degree.
"""
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from sympy import ImmutableMatrix, Rational, SympifyError, diag, sympify
from sympy.polys.domains import QQ
from sympy.polys.orderings import lex
from sympy.polys.polyerrors import PolynomialError
from sympy.polys.rings import PolyElement, PolyRing

from app.core.exceptions import DimensionMismatchError, InputError, SingularMatrixError

logger = logging.getLogger(__name__)

ScalarLike = Union[int, str, Rational, Any]
Monomial = Tuple[Tuple[int, ...], int]

_SCALAR_PATTERN = re.compile(r"^-?\d+(/\d+)?$")


def to_scalar(value: ScalarLike) -> Rational:
    """Convert ints, "p/q" strings, Fractions and ground-domain elements to a Rational"""
    if isinstance(value, bool):
        raise InputError(f"booleans are not scalars: {value!r}")
    if isinstance(value, Rational):
        return value
    if isinstance(value, str):
        text = value.replace(" ", "")
        if not _SCALAR_PATTERN.match(text):
            raise InputError(f"not a rational literal: {value!r}")
        if "/" in text and int(text.split("/")[1]) == 0:
            raise InputError(f"zero denominator: {value!r}")
        return Rational(text)
    if isinstance(value, int):
        return Rational(value)
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        # Fraction, gmpy mpq and the pure python QQ element all expose these
        return Rational(int(value.numerator), int(value.denominator))
    if hasattr(value, "__index__"):
        return Rational(int(value))
    raise InputError(f"cannot interpret {value!r} as an exact rational")


def scalar_to_str(value: ScalarLike) -> str:
    q = to_scalar(value)
    if q.q == 1:
        return str(q.p)
    return f"{q.p}/{q.q}"


# --------------------------------------------------------------------------
# Matrices
# --------------------------------------------------------------------------


def matrix(rows: Sequence[Sequence[ScalarLike]]) -> ImmutableMatrix:
    """Build an exact matrix from nested row lists"""
    if not rows:
        raise DimensionMismatchError("matrix needs at least one row")
    width = len(rows[0])
    for index, row in enumerate(rows):
        if len(row) != width:
            raise DimensionMismatchError(f"row {index} has {len(row)} entries, expected {width}")
    return ImmutableMatrix([[to_scalar(entry) for entry in row] for row in rows])


def vector(values: Sequence[ScalarLike]) -> ImmutableMatrix:
    """Column vector"""
    return ImmutableMatrix(len(values), 1, [to_scalar(entry) for entry in values])


def identity(size: int) -> ImmutableMatrix:
    return ImmutableMatrix.eye(size)


def zero_matrix(rows: int, cols: Optional[int] = None) -> ImmutableMatrix:
    return ImmutableMatrix.zeros(rows, rows if cols is None else cols)


def unit_vector(size: int, index: int) -> ImmutableMatrix:
    entries = [Rational(0)] * size
    entries[index] = Rational(1)
    return ImmutableMatrix(size, 1, entries)


def block_diagonal(*blocks: ImmutableMatrix) -> ImmutableMatrix:
    return ImmutableMatrix(diag(*blocks))


def is_zero(m: ImmutableMatrix) -> bool:
    return not any(m)


def mat_mul(a: ImmutableMatrix, b: ImmutableMatrix) -> ImmutableMatrix:
    """
    Exact matrix product.

    Raises:
        DimensionMismatchError: if a.cols != b.rows
    """
    if a.cols != b.rows:
        raise DimensionMismatchError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return ImmutableMatrix(a * b)


def solve_linear(m: ImmutableMatrix, rhs: ImmutableMatrix) -> ImmutableMatrix:
    """
    Solve m x = rhs exactly.

    Args:
        m: square invertible matrix
        rhs: right-hand side with m.rows rows (any number of columns)

    Returns:
        The unique exact solution x

    Raises:
        DimensionMismatchError: non-square m or incompatible rhs
        SingularMatrixError: m is singular; the error carries the rank
    """
    if m.rows != m.cols:
        raise DimensionMismatchError(f"solve_linear needs a square matrix, got {m.rows}x{m.cols}")
    if rhs.rows != m.rows:
        raise DimensionMismatchError(f"right-hand side has {rhs.rows} rows, expected {m.rows}")
    rank = m.rank()
    if rank < m.rows:
        raise SingularMatrixError("singular matrix", rank=rank, size=m.rows)
    return ImmutableMatrix(m.LUsolve(rhs))


def inverse(m: ImmutableMatrix) -> ImmutableMatrix:
    return solve_linear(m, identity(m.rows))


def nullspace_basis(m: ImmutableMatrix) -> List[ImmutableMatrix]:
    """Exact basis of the kernel as column vectors"""
    return [ImmutableMatrix(column) for column in m.nullspace()]


def span_contains(columns: Sequence[ImmutableMatrix], candidate: ImmutableMatrix) -> bool:
    """True when candidate lies in the span of the given column vectors"""
    if not columns:
        return is_zero(candidate)
    base = ImmutableMatrix.hstack(*columns)
    return base.rank() == ImmutableMatrix.hstack(base, candidate).rank()


def commutator(a: ImmutableMatrix, b: ImmutableMatrix) -> ImmutableMatrix:
    return ImmutableMatrix(a * b - b * a)


def matrix_to_json(m: ImmutableMatrix) -> List[List[str]]:
    return [[scalar_to_str(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]


def vector_to_json(v: ImmutableMatrix) -> List[str]:
    return [scalar_to_str(entry) for entry in v]


def matrix_from_json(data: Any, location: Sequence[Any] = ()) -> ImmutableMatrix:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise InputError("expected a non-empty list of rows", location)
    try:
        return matrix(data)
    except DimensionMismatchError as exc:
        raise InputError(str(exc), location) from exc


# --------------------------------------------------------------------------
# Polynomials
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def poly_ring(num_vars: int) -> PolyRing:
    """QQ[z1..zN, nu]; the ring objects are cached so equal sizes share generators"""
    names = [f"z{i}" for i in range(1, num_vars + 1)] + ["nu"]
    return PolyRing(names, QQ, lex)


def _qq(value: ScalarLike) -> Any:
    return QQ.from_sympy(to_scalar(value))


@dataclass(frozen=True)
class MultiPoly:
    """
    Sparse polynomial in num_vars coordinates with a formal parameter nu.

    Terms are keyed by (exponent vector, nu-degree). Zero coefficients are
    never stored (the underlying PolyElement prunes them).
    """

    num_vars: int
    element: PolyElement

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> "MultiPoly":
        return cls(num_vars, poly_ring(num_vars).zero)

    @classmethod
    def constant(cls, num_vars: int, value: ScalarLike) -> "MultiPoly":
        return cls(num_vars, poly_ring(num_vars).ground_new(_qq(value)))

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "MultiPoly":
        if not 0 <= index < num_vars:
            raise DimensionMismatchError(f"variable index {index} outside 0..{num_vars - 1}")
        return cls(num_vars, poly_ring(num_vars).gens[index])

    @classmethod
    def nu(cls, num_vars: int) -> "MultiPoly":
        return cls(num_vars, poly_ring(num_vars).gens[num_vars])

    @classmethod
    def from_terms(cls, num_vars: int, terms: Mapping[Monomial, ScalarLike]) -> "MultiPoly":
        raw = {}
        for (exps, nu_degree), coeff in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != num_vars:
                raise DimensionMismatchError(f"exponent vector {exps} has length {len(exps)}, expected {num_vars}")
            if any(e < 0 for e in exps) or nu_degree < 0:
                raise DimensionMismatchError(f"negative exponent in {exps}, nu^{nu_degree}")
            key = exps + (int(nu_degree),)
            raw[key] = raw.get(key, QQ.zero) + _qq(coeff)
        return cls(num_vars, poly_ring(num_vars).from_dict(raw))

    @classmethod
    def from_raw(cls, num_vars: int, raw: Mapping[Tuple[int, ...], Any]) -> "MultiPoly":
        """Build from monomials that already include the nu slot and QQ coefficients"""
        return cls(num_vars, poly_ring(num_vars).from_dict(dict(raw)))

    @classmethod
    def linear_form(cls, row: Sequence[ScalarLike], constant: ScalarLike = 0) -> "MultiPoly":
        size = len(row)
        terms: Dict[Monomial, ScalarLike] = {}
        for index, coeff in enumerate(row):
            exps = [0] * size
            exps[index] = 1
            terms[(tuple(exps), 0)] = coeff
        terms[((0,) * size, 0)] = constant
        return cls.from_terms(size, terms)

    @classmethod
    def quadratic_form(cls, sym: ImmutableMatrix) -> "MultiPoly":
        """z -> 1/2 z^T S z for a symmetric S"""
        size = sym.rows
        terms: Dict[Monomial, Rational] = {}
        for i in range(size):
            for j in range(size):
                if sym[i, j] == 0:
                    continue
                exps = [0] * size
                exps[i] += 1
                exps[j] += 1
                key = (tuple(exps), 0)
                terms[key] = terms.get(key, Rational(0)) + sym[i, j] / 2
        return cls.from_terms(size, terms)

    @classmethod
    def parse(cls, text: str, num_vars: int, prefix: str = "z") -> "MultiPoly":
        """Parse an expression written in prefix1..prefixN and nu"""
        ring_ = poly_ring(num_vars)
        names = {f"{prefix}{i + 1}": ring_.symbols[i] for i in range(num_vars)}
        names["nu"] = ring_.symbols[num_vars]
        try:
            expr = sympify(text, locals=names)
            return cls(num_vars, ring_.from_expr(expr))
        except (SympifyError, PolynomialError, ValueError, TypeError) as exc:
            raise InputError(f"cannot parse polynomial {text!r} in {prefix}1..{prefix}{num_vars}: {exc}") from exc

    # -- inspection -------------------------------------------------------

    @property
    def ring(self) -> PolyRing:
        return poly_ring(self.num_vars)

    @property
    def is_zero(self) -> bool:
        return not self.element

    def __bool__(self) -> bool:
        return bool(self.element)

    def terms(self) -> Dict[Monomial, Rational]:
        return {(monom[:-1], monom[-1]): QQ.to_sympy(coeff) for monom, coeff in self.element.items()}

    def nu_degree(self) -> int:
        return max((monom[-1] for monom in self.element), default=0)

    def total_degree(self) -> int:
        """Degree in the coordinates (nu excluded); 0 for constants and for zero"""
        return max((sum(monom[:-1]) for monom in self.element), default=0)

    def nu_part(self, degree: int) -> "MultiPoly":
        """Coefficient of nu^degree, as a nu-free polynomial"""
        raw = {monom[:-1] + (0,): coeff for monom, coeff in self.element.items() if monom[-1] == degree}
        return MultiPoly.from_raw(self.num_vars, raw)

    def truncate(self, max_nu_degree: int) -> "MultiPoly":
        raw = {monom: coeff for monom, coeff in self.element.items() if monom[-1] <= max_nu_degree}
        return MultiPoly.from_raw(self.num_vars, raw)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other: Any) -> PolyElement:
        if isinstance(other, MultiPoly):
            if other.num_vars != self.num_vars:
                raise DimensionMismatchError(f"polynomials in {self.num_vars} and {other.num_vars} variables")
            return other.element
        return self.ring.ground_new(_qq(other))

    def __add__(self, other: Any) -> "MultiPoly":
        return MultiPoly(self.num_vars, self.element + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "MultiPoly":
        return MultiPoly(self.num_vars, self.element - self._coerce(other))

    def __rsub__(self, other: Any) -> "MultiPoly":
        return MultiPoly(self.num_vars, self._coerce(other) - self.element)

    def __mul__(self, other: Any) -> "MultiPoly":
        return MultiPoly(self.num_vars, self.element * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.num_vars, -self.element)

    def __pow__(self, exponent: int) -> "MultiPoly":
        return MultiPoly(self.num_vars, self.element**exponent)

    def diff(self, var: int) -> "MultiPoly":
        if not 0 <= var < self.num_vars:
            raise DimensionMismatchError(f"variable index {var} outside 0..{self.num_vars - 1}")
        return MultiPoly(self.num_vars, self.element.diff(self.ring.gens[var]))

    def evaluate(self, point: Sequence[ScalarLike], nu: ScalarLike = 0) -> Rational:
        if len(point) != self.num_vars:
            raise DimensionMismatchError(f"point has {len(point)} coordinates, expected {self.num_vars}")
        values = [_qq(value) for value in point] + [_qq(nu)]
        return QQ.to_sympy(self.ring.domain.convert(self.element(*values)))

    def compose(self, substitutions: Sequence["MultiPoly"], target_vars: Optional[int] = None) -> "MultiPoly":
        """
        Substitute the i-th coordinate by substitutions[i]; nu is kept.

        All substitutions must live in the same number of variables, which is
        the number of variables of the result.
        """
        if len(substitutions) != self.num_vars:
            raise DimensionMismatchError(f"{len(substitutions)} substitutions for {self.num_vars} variables")
        if target_vars is None:
            if not substitutions:
                raise DimensionMismatchError("target size needed when composing a constant")
            target_vars = substitutions[0].num_vars
        if any(sub.num_vars != target_vars for sub in substitutions):
            raise DimensionMismatchError("substitutions live in different rings")
        target = poly_ring(target_vars)
        nu_gen = target.gens[target_vars]
        powers: Dict[Tuple[int, int], PolyElement] = {}

        def power(index: int, exponent: int) -> PolyElement:
            key = (index, exponent)
            if key not in powers:
                base = nu_gen if index == self.num_vars else substitutions[index].element
                powers[key] = base**exponent
            return powers[key]

        result = target.zero
        for monom, coeff in self.element.items():
            term = target.ground_new(coeff)
            for index, exponent in enumerate(monom):
                if exponent:
                    term = term * power(index, exponent)
            result += term
        return MultiPoly(target_vars, result)

    def embed(self, target_vars: int, offset: int = 0) -> "MultiPoly":
        """Reinterpret coordinate i as coordinate offset + i of a larger ring"""
        if offset + self.num_vars > target_vars:
            raise DimensionMismatchError(f"cannot embed {self.num_vars} variables at {offset} into {target_vars}")
        raw = {}
        for monom, coeff in self.element.items():
            exps = [0] * (target_vars + 1)
            exps[offset : offset + self.num_vars] = monom[:-1]
            exps[target_vars] = monom[-1]
            raw[tuple(exps)] = coeff
        return MultiPoly.from_raw(target_vars, raw)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> List[Dict[str, Any]]:
        items = sorted(self.terms().items(), key=lambda item: (item[0][1], item[0][0]))
        return [{"exps": list(exps), "nu": nu, "coeff": scalar_to_str(coeff)} for (exps, nu), coeff in items]

    @classmethod
    def from_json(cls, num_vars: int, data: Any, location: Sequence[Any] = ()) -> "MultiPoly":
        if not isinstance(data, list):
            raise InputError("polynomial must be a list of terms", location)
        terms: Dict[Monomial, ScalarLike] = {}
        for index, term in enumerate(data):
            where = tuple(location) + (index,)
            if not isinstance(term, dict) or "exps" not in term or "coeff" not in term:
                raise InputError("term needs 'exps' and 'coeff'", where)
            key = (tuple(term["exps"]), int(term.get("nu", 0)))
            if len(key[0]) != num_vars:
                raise InputError(f"exponent vector length {len(key[0])}, expected {num_vars}", where)
            terms[key] = to_scalar(terms.get(key, 0)) + to_scalar(term["coeff"])
        return cls.from_terms(num_vars, terms)

    def __str__(self) -> str:
        return str(self.element)


def poly_arith(a: MultiPoly, b: Union[MultiPoly, ScalarLike], op: str) -> MultiPoly:
    """
    Exact add / mul / scale.

    For ``scale`` the second operand is a scalar or a constant polynomial.
    """
    if op == "add":
        return a + b
    if op == "mul":
        if not isinstance(b, MultiPoly):
            raise DimensionMismatchError("mul expects two polynomials; use scale for scalars")
        return a * b
    if op == "scale":
        if isinstance(b, MultiPoly):
            if b.total_degree() > 0 or b.nu_degree() > 0:
                raise DimensionMismatchError("scale expects a constant")
            factor = b.terms().get(((0,) * b.num_vars, 0), Rational(0))
        else:
            factor = to_scalar(b)
        return a * factor
    raise ValueError(f"unknown polynomial operation: {op}")


def poly_diff(p: MultiPoly, var: int) -> MultiPoly:
    return p.diff(var)


def poly_eval(p: MultiPoly, point: Sequence[ScalarLike], nu: ScalarLike = 0) -> Rational:
    return p.evaluate(point, nu)


def linear_combination(coefficients: Iterable[ScalarLike], items: Iterable[ImmutableMatrix]) -> ImmutableMatrix:
    """Sum of c_i * M_i; items must be non-empty"""
    total = None
    for coeff, item in zip(coefficients, items):
        term = to_scalar(coeff) * item
        total = term if total is None else total + term
    if total is None:
        raise DimensionMismatchError("empty linear combination")
    return ImmutableMatrix(total)
