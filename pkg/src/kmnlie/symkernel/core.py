"""Expression nodes and the canonical (expanded) arithmetic behind them.

Canonical expressions are interned, so two canonical nodes are equal exactly
when they are the same object.  Internally every canonical expression is a
*poly*: a dict mapping monomials to nonzero ``Fraction`` coefficients.  A
monomial is a tuple of ``(base, exponent)`` pairs sorted by the base's sort
key, where each base is an atom (symbol, ``FDeriv``, elementary function),
a primitive sum raised to a non positive-integer power, or a rational
constant raised to a non-integer power.  Exponents are canonical
expressions themselves, which is how ``u**(n-1) * u**2 -> u**(n+1)`` works.

Domain convention: bases are assumed positive when powers are merged, i.e.
``(u**a)**b == u**(a*b)``.  The numeric tier samples every symbol from
[0.5, 2.0], consistent with this.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

__all__ = [
    "Expr", "Const", "Sym", "FDeriv", "Func", "Pow", "Mul", "Add",
    "const", "sym", "jet", "red", "as_expr", "normalize",
    "T", "X", "U", "EPS", "OMEGA", "ZERO", "ONE", "HALF",
    "FUNC_KINDS",
]

FUNC_KINDS = ("exp", "ln", "sin", "cos", "arctan", "sqrt")

_F0 = Fraction(0)
_F1 = Fraction(1)

_KIND_RANK = {"indep": 0, "jet": 1, "red": 2, "param": 3}


class Expr:
    """Immutable symbolic expression.

    Arithmetic operators return canonical (normalized) expressions.
    """

    __slots__ = ("_hash", "_canon", "_keyc", "_polyc", "_freec", "__weakref__")

    # -- structural protocol -------------------------------------------------
    def _fields(self):
        raise NotImplementedError

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                return isinstance(self, Const) and self.value == other
            return NotImplemented
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        if self._canon and other._canon:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __lt__(self, other):
        return normalize(self).key < normalize(other).key

    @property
    def key(self):
        k = self._keyc
        if k is None:
            k = self._keyc = self._make_key()
        return k

    @property
    def free_symbols(self) -> frozenset:
        fs = self._freec
        if fs is None:
            fs = self._freec = self._make_free()
        return fs

    def __repr__(self):
        from .printing import to_str
        return f"Expr({to_str(self)!r})"

    def __str__(self):
        from .printing import to_str
        return to_str(self)

    # -- arithmetic ------------------------------------------------------------
    def __add__(self, other):
        return from_poly(padd(to_poly(self), to_poly(as_expr(other))))

    __radd__ = __add__

    def __sub__(self, other):
        return from_poly(padd(to_poly(self), pscale(to_poly(as_expr(other)), -_F1)))

    def __rsub__(self, other):
        return from_poly(padd(to_poly(as_expr(other)), pscale(to_poly(self), -_F1)))

    def __mul__(self, other):
        return from_poly(pmul(to_poly(self), to_poly(as_expr(other))))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return from_poly(pmul(to_poly(self), ppow(to_poly(as_expr(other)), MINUS_ONE)))

    def __rtruediv__(self, other):
        return from_poly(pmul(to_poly(as_expr(other)), ppow(to_poly(self), MINUS_ONE)))

    def __pow__(self, other):
        return from_poly(ppow(to_poly(self), normalize(as_expr(other))))

    def __rpow__(self, other):
        return from_poly(ppow(to_poly(as_expr(other)), normalize(self)))

    def __neg__(self):
        return from_poly(pscale(to_poly(self), -_F1))

    def __pos__(self):
        return normalize(self)


_INTERN: dict = {}


def _intern(cls, fields):
    k = (cls, fields)
    node = _INTERN.get(k)
    if node is None:
        node = object.__new__(cls)
        node._init_fields(*fields)
        node._hash = hash(k)
        node._canon = True
        node._keyc = None
        node._polyc = None
        node._freec = None
        node = _INTERN.setdefault(k, node)
    return node


class Const(Expr):
    """Exact rational constant."""

    __slots__ = ("value",)

    def __new__(cls, value=0):
        v = value if type(value) is Fraction else Fraction(value)
        return _intern(cls, (v,))

    def _init_fields(self, value):
        self.value = value

    def _fields(self):
        return (self.value,)

    def _make_key(self):
        return (0, self.value)

    def _make_free(self):
        return frozenset()

    def __reduce__(self):
        return (Const, (self.value,))


class Sym(Expr):
    """Named symbol.

    ``kind`` is one of ``indep`` (t, x), ``jet`` (u and its derivatives,
    ``index = (#t, #x)``), ``red`` (reduction variables omega and phi with
    ``index`` = derivative order, omega has index -1) or ``param``.
    """

    __slots__ = ("name", "kind", "index")

    def __new__(cls, name, kind="param", index=None):
        return _intern(cls, (name, kind, index))

    def _init_fields(self, name, kind, index):
        self.name = name
        self.kind = kind
        self.index = index

    def _fields(self):
        return (self.name, self.kind, self.index)

    def _make_key(self):
        idx = self.index
        if idx is None:
            idx = ()
        elif not isinstance(idx, tuple):
            idx = (idx,)
        return (1, _KIND_RANK[self.kind], idx, self.name)

    def _make_free(self):
        return frozenset((self,))

    @property
    def order(self):
        if self.kind == "jet":
            return self.index[0] + self.index[1]
        return 0

    def __reduce__(self):
        return (Sym, (self.name, self.kind, self.index))


class FDeriv(Expr):
    """The arbitrary function f(t) differentiated ``order`` times.

    Order -1 denotes a fixed antiderivative of f.
    """

    __slots__ = ("order",)

    def __new__(cls, order=0):
        if order < -1:
            raise ValueError("FDeriv order must be >= -1")
        return _intern(cls, (int(order),))

    def _init_fields(self, order):
        self.order = order

    def _fields(self):
        return (self.order,)

    def _make_key(self):
        return (2, self.order)

    def _make_free(self):
        return frozenset((self,))

    def __reduce__(self):
        return (FDeriv, (self.order,))


def _raw(cls, fields):
    node = object.__new__(cls)
    node._init_fields(*fields)
    node._hash = hash((cls, fields))
    node._canon = False
    node._keyc = None
    node._polyc = None
    node._freec = None
    return node


class Func(Expr):
    """Elementary function applied to one argument."""

    __slots__ = ("kind", "arg")

    def __new__(cls, kind, arg):
        if kind not in FUNC_KINDS:
            raise ValueError(f"unknown function kind {kind!r}")
        return _raw(cls, (kind, as_expr(arg)))

    def _init_fields(self, kind, arg):
        self.kind = kind
        self.arg = arg

    def _fields(self):
        return (self.kind, self.arg)

    def _make_key(self):
        return (3, self.kind, self.arg.key)

    def _make_free(self):
        return self.arg.free_symbols

    def __reduce__(self):
        return (Func, (self.kind, self.arg))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __new__(cls, base, exp):
        return _raw(cls, (as_expr(base), as_expr(exp)))

    def _init_fields(self, base, exp):
        self.base = base
        self.exp = exp

    def _fields(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (5, self.base.key, self.exp.key)

    def _make_free(self):
        return self.base.free_symbols | self.exp.free_symbols

    def __reduce__(self):
        return (Pow, (self.base, self.exp))


class Mul(Expr):
    __slots__ = ("factors",)

    def __new__(cls, factors):
        return _raw(cls, (tuple(as_expr(f) for f in factors),))

    def _init_fields(self, factors):
        self.factors = factors

    def _fields(self):
        return (self.factors,)

    def _make_key(self):
        return (6, tuple(f.key for f in self.factors))

    def _make_free(self):
        out = frozenset()
        for f in self.factors:
            out |= f.free_symbols
        return out

    def __reduce__(self):
        return (Mul, (self.factors,))


class Add(Expr):
    __slots__ = ("terms",)

    def __new__(cls, terms):
        return _raw(cls, (tuple(as_expr(t) for t in terms),))

    def _init_fields(self, terms):
        self.terms = terms

    def _fields(self):
        return (self.terms,)

    def _make_key(self):
        return (4, tuple(t.key for t in self.terms))

    def _make_free(self):
        out = frozenset()
        for t in self.terms:
            out |= t.free_symbols
        return out

    def __reduce__(self):
        return (Add, (self.terms,))


# ---------------------------------------------------------------------------
# constructors

def const(v) -> Const:
    return Const(v)


def sym(name: str) -> Sym:
    """Parameter symbol (m, n, k, eps, sigma, ...)."""
    return Sym(name, "param", None)


def jet(nt: int, nx: int) -> Sym:
    """u differentiated nt times in t and nx times in x."""
    name = "u" if nt == 0 and nx == 0 else "u_" + "t" * nt + "x" * nx
    return Sym(name, "jet", (nt, nx))


def red(order: int) -> Sym:
    """Reduction variable: order -1 is omega, order j >= 0 is phi^(j)."""
    if order < 0:
        return Sym("omega", "red", -1)
    return Sym("phi" + "'" * order, "red", order)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, float):
        # floats are accepted only when exactly representable as short decimals
        return Const(Fraction(repr(v)))
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))
T = Sym("t", "indep", 0)
X = Sym("x", "indep", 1)
U = jet(0, 0)
EPS = sym("eps")
OMEGA = red(-1)


# ---------------------------------------------------------------------------
# canonical node factories

def _cfunc(kind, arg):
    return _intern(Func, (kind, arg))


def _cpow(base, exp):
    return _intern(Pow, (base, exp))


def _cmul(factors):
    return _intern(Mul, (factors,))


def _cadd(terms):
    return _intern(Add, (terms,))


# ---------------------------------------------------------------------------
# poly arithmetic

def _is_int(e):
    return type(e) is Const and e.value.denominator == 1


def _is_posint(e):
    return type(e) is Const and e.value.denominator == 1 and e.value > 0


def _is_param_only(e: Expr) -> bool:
    for s in e.free_symbols:
        if not (type(s) is Sym and s.kind == "param"):
            return False
    return True


def padd(P, Q):
    if not P:
        return Q
    if not Q:
        return P
    if len(P) < len(Q):
        P, Q = Q, P
    R = dict(P)
    for m, c in Q.items():
        v = R.get(m)
        if v is None:
            R[m] = c
        else:
            v = v + c
            if v:
                R[m] = v
            else:
                del R[m]
    return R


def pscale(P, c):
    if not c:
        return {}
    if c == 1:
        return P
    return {m: v * c for m, v in P.items()}


def pmul(P, Q):
    if not P or not Q:
        return {}
    R = {}
    for m1, c1 in P.items():
        for m2, c2 in Q.items():
            c12 = c1 * c2
            for m, c in mono_mul(m1, m2).items():
                v = R.get(m)
                if v is None:
                    R[m] = c * c12
                else:
                    v = v + c * c12
                    if v:
                        R[m] = v
                    else:
                        del R[m]
    return R


_UNIT = ((), _F1)


@lru_cache(maxsize=500_000)
def mono_mul(m1, m2):
    if not m1:
        return {m2: _F1}
    if not m2:
        return {m1: _F1}
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    merged = False
    while i < n1 and j < n2:
        b1, e1 = m1[i]
        b2, e2 = m2[j]
        if b1 is b2:
            out.append((b1, eadd(e1, e2)))
            merged = True
            i += 1
            j += 1
        elif b1.key < b2.key:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    special = merged
    if not special:
        nexp = 0
        for b, _ in out:
            if type(b) is Func and b.kind == "exp":
                nexp += 1
        special = nexp > 1
    if not special:
        return {tuple(out): _F1}
    return _finalize(out)


def _finalize(factors):
    """Turn a sorted list of (base, exp) pairs into a canonical poly."""
    coef = _F1
    out = []
    exps = None
    expand = None
    consts = {}
    for b, e in factors:
        if e is ZERO:
            continue
        tb = type(b)
        if tb is Const:
            consts[b] = eadd(consts[b], e) if b in consts else e
            continue
        if b is EPS and _is_int(e):
            if e.value.numerator % 2 == 0:
                continue
            out.append((b, ONE))
            continue
        if tb is Func and b.kind == "exp":
            if exps is None:
                exps = []
            exps.append((b, e))
            continue
        if tb is Add and _is_posint(e):
            if expand is None:
                expand = []
            expand.append((b, e))
            continue
        out.append((b, e))
    # numeric bases: fold into the coefficient, merging leftovers that share
    # a base, e.g. (-2)^(1/3) leaves 2^(1/3) beside an existing 2^(2/3)
    while consts:
        left = {}
        for b, e in consts.items():
            c, facs = _const_pow(b.value, e)
            coef *= c
            for fb, fe in facs:
                left[fb] = eadd(left[fb], fe) if fb in left else fe
        if all(_const_pow(b.value, e) == (_F1, [(b, e)]) for b, e in left.items()):
            out.extend((b, e) for b, e in left.items() if e is not ZERO)
            break
        consts = left
    # const bases may have been re-created out of order; keep sorted
    out.sort(key=lambda be: be[0].key)
    res = {tuple(out): coef} if coef else {}
    if exps:
        arg = {}
        for b, e in exps:
            arg = padd(arg, pmul(to_poly(e), to_poly(b.arg)))
        res = pmul(res, exp_poly(arg))
    if expand:
        for b, e in expand:
            res = pmul(res, _ppow_int(to_poly(b), int(e.value)))
    return res


def _iroot(n, q):
    """Exact integer q-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** q == n:
            return cand
    return None


def _prime_factors(n, limit=10**5):
    """{p: mult} by trial division; an unfactored cofactor is kept whole."""
    out = {}
    d = 2
    while d * d <= n and d <= limit:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _const_pow(c: Fraction, e: Expr):
    """c**e as (rational coefficient, list of leftover (base, exp) factors).

    With a rational exponent the base is split into primes, each keeping an
    exponent in [0, 1), so equal numbers get equal factor lists.
    """
    if c == 1:
        return _F1, []
    if type(e) is Const:
        ev = e.value
        if ev.denominator == 1:
            if c == 0 and ev < 0:
                raise ZeroDivisionError("zero to a negative power")
            return c ** ev.numerator, []
        p, q = ev.numerator, ev.denominator
        if c == 0:
            if ev < 0:
                raise ZeroDivisionError("zero to a negative power")
            return _F0, []
        sign = 1
        a = c
        if c < 0:
            if q % 2 == 0:
                return _F1, [(Const(c), e)]
            a = -c
            sign = -1 if p % 2 else 1
        rn, rd = _iroot(a.numerator, q), _iroot(a.denominator, q)
        if rn is not None and rd is not None:
            return sign * Fraction(rn, rd) ** p, []
        coef = Fraction(sign)
        facs = []
        mults = dict(_prime_factors(a.numerator))
        for pr, k in _prime_factors(a.denominator).items():
            mults[pr] = mults.get(pr, 0) - k
        for pr in sorted(mults):
            x = ev * mults[pr]
            whole = x.numerator // x.denominator
            coef *= Fraction(pr) ** whole
            if x != whole:
                facs.append((Const(pr), Const(x - whole)))
        return coef, facs
    if c == 0:
        return _F0, []
    return _F1, [(Const(c), e)]


def _ppow_int(P, n):
    if n == 0:
        return {(): _F1}
    if n == 1:
        return P
    result = None
    base = P
    while n:
        if n & 1:
            result = base if result is None else pmul(result, base)
        n >>= 1
        if n:
            base = pmul(base, base)
    return result


def _content(P):
    g = 0
    l = 1
    for c in P.values():
        g = gcd(g, c.numerator)
        l = l * c.denominator // gcd(l, c.denominator)
    return Fraction(g, l)


def _leading_coef(P):
    m = min(P, key=monokey)
    return P[m]


def ppow(P, e: Expr):
    """P ** e with e canonical."""
    if e is ZERO:
        return {(): _F1}
    if e is ONE:
        return P
    if not P:
        if type(e) is Const and e.value < 0:
            raise ZeroDivisionError("zero to a negative power")
        return {}
    if len(P) == 1:
        (mono, c), = P.items()
        cc, facs = _const_pow(c, e)
        factors = [(b, emul(eb, e)) for b, eb in mono] + facs
        factors.sort(key=lambda be: be[0].key)
        return pscale(_finalize(factors), cc)
    if _is_posint(e):
        return _ppow_int(P, int(e.value))
    content = _content(P)
    if _is_int(e) and _leading_coef(P) < 0:
        content = -content
    base = from_poly(pscale(P, 1 / content))
    cc, facs = _const_pow(content, e)
    factors = sorted([(base, e)] + facs, key=lambda be: be[0].key)
    return pscale({tuple(factors): _F1}, cc)


@lru_cache(maxsize=200_000)
def eadd(e1, e2):
    if e1 is ZERO:
        return e2
    if e2 is ZERO:
        return e1
    if type(e1) is Const and type(e2) is Const:
        return Const(e1.value + e2.value)
    return from_poly(padd(to_poly(e1), to_poly(e2)))


@lru_cache(maxsize=200_000)
def emul(e1, e2):
    if e1 is ONE:
        return e2
    if e2 is ONE:
        return e1
    if type(e1) is Const and type(e2) is Const:
        return Const(e1.value * e2.value)
    return from_poly(pmul(to_poly(e1), to_poly(e2)))


def _split_ln_term(mono):
    """If mono is (param-only) * ln(b), return (b, param monomial)."""
    ln_b = None
    rest = []
    for b, e in mono:
        if type(b) is Func and b.kind == "ln" and e is ONE and ln_b is None:
            ln_b = b
            continue
        if not (_is_param_only(b) and _is_param_only(e)):
            return None
        rest.append((b, e))
    if ln_b is None:
        return None
    return ln_b.arg, tuple(rest)


def exp_poly(A):
    if not A:
        return {(): _F1}
    res = {(): _F1}
    rest = {}
    for mono, c in A.items():
        sp = _split_ln_term(mono)
        if sp is None:
            rest[mono] = c
            continue
        b, pm = sp
        res = pmul(res, ppow(to_poly(b), from_poly({pm: c})))
    if rest:
        res = pmul(res, {((_cfunc("exp", from_poly(rest)), ONE),): _F1})
    return res


def _ln_atom(b):
    return {((_cfunc("ln", b), ONE),): _F1}


def ln_poly(A):
    if not A:
        raise ZeroDivisionError("ln(0)")
    if len(A) == 1:
        (mono, c), = A.items()
        if c > 0:
            res = {} if c == 1 else _ln_atom(Const(c))
            for b, e in mono:
                if type(b) is Func and b.kind == "exp":
                    term = pmul(to_poly(e), to_poly(b.arg))
                elif type(b) is Const:
                    term = pmul(to_poly(e), _ln_atom(b))
                else:
                    term = pmul(to_poly(e), _ln_atom(b))
                res = padd(res, term)
            return res
        return _ln_atom(from_poly(A))
    content = _content(A)
    base = from_poly(pscale(A, 1 / content))
    res = _ln_atom(base)
    if content != 1:
        res = padd(res, _ln_atom(Const(content)))
    return res


def func_poly(kind, A):
    if kind == "exp":
        return exp_poly(A)
    if kind == "ln":
        return ln_poly(A)
    if kind == "sqrt":
        return ppow(A, HALF)
    if not A:
        return {(): _F1} if kind == "cos" else {}
    sign = 1
    if _leading_coef(A) < 0:
        A = pscale(A, -_F1)
        sign = -1
    atom = {((_cfunc(kind, from_poly(A)), ONE),): _F1}
    if sign < 0 and kind in ("sin", "arctan"):
        return pscale(atom, -_F1)
    return atom


# ---------------------------------------------------------------------------
# conversion

def monokey(mono):
    return tuple((b.key, e.key) for b, e in mono)


def to_poly(e: Expr):
    if e._canon:
        P = e._polyc
        if P is None:
            P = e._polyc = _canon_poly(e)
        return P
    return _raw_poly(e)


def _canon_poly(e):
    t = type(e)
    if t is Const:
        return {(): e.value} if e.value else {}
    if t is Sym or t is FDeriv or t is Func:
        return {((e, ONE),): _F1}
    if t is Pow:
        return {((e.base, e.exp),): _F1}
    if t is Mul:
        c = _F1
        mono = []
        for f in e.factors:
            if type(f) is Const:
                c = f.value
            elif type(f) is Pow:
                mono.append((f.base, f.exp))
            else:
                mono.append((f, ONE))
        return {tuple(mono): c}
    if t is Add:
        P = {}
        for term in e.terms:
            (m, c), = to_poly(term).items()
            P[m] = c
        return P
    raise TypeError(t)


def _raw_poly(e):
    t = type(e)
    if t is Add:
        P = {}
        for term in e.terms:
            P = padd(P, to_poly(term))
        return P
    if t is Mul:
        P = {(): _F1}
        for f in e.factors:
            P = pmul(P, to_poly(f))
            if not P:
                break
        return P
    if t is Pow:
        return ppow(to_poly(e.base), normalize(e.exp))
    if t is Func:
        return func_poly(e.kind, to_poly(e.arg))
    raise TypeError(t)


def _term_expr(mono, c):
    factors = [b if e is ONE else _cpow(b, e) for b, e in mono]
    if c != 1 or not factors:
        factors.insert(0, Const(c))
    if len(factors) == 1:
        return factors[0]
    return _cmul(tuple(factors))


def from_poly(P) -> Expr:
    if not P:
        return ZERO
    if len(P) == 1:
        (m, c), = P.items()
        node = _term_expr(m, c)
    else:
        items = sorted(P.items(), key=lambda mc: monokey(mc[0]))
        node = _cadd(tuple(_term_expr(m, c) for m, c in items))
    if node._polyc is None:
        node._polyc = P
    return node


def _neg_add_bases(P):
    """Sum bases carrying negative rational exponents, with the worst exponent."""
    worst = {}
    for mono in P:
        for b, e in mono:
            if type(b) is Add and type(e) is Const and e.value < 0:
                w = worst.get(b)
                if w is None or e.value < w:
                    worst[b] = e.value
    return worst


def mul_base_power(P, base, p):
    """P * base^p with the exponent added monomial by monomial.

    Unlike pmul with an expanded power, base^-2 * base^2 cancels exactly;
    leftover positive integer powers of sums are expanded as usual.
    """
    out = {}
    for mono, c in P.items():
        fac = dict(mono)
        fac[base] = eadd(fac[base], p) if base in fac else p
        for m2, c2 in _finalize(sorted(fac.items(), key=lambda be: be[0].key)).items():
            v = out.get(m2, _F0) + c * c2
            if v:
                out[m2] = v
            else:
                out.pop(m2, None)
    return out


def _split_nested(b):
    """(numerator poly, {den: exponent}) for a sum whose terms have sum denominators."""
    num = to_poly(b)
    worst = _neg_add_bases(num)
    if not worst:
        return None
    for d, w in sorted(worst.items(), key=lambda dw: dw[0].key):
        num = mul_base_power(num, d, Const(-w))
    if not num:
        return None
    return num, worst


def _flatten_nested(P):
    """Rewrite integer powers of nested fractions as numerator^e * den^(-w e)."""
    for _ in range(8):
        split = {}
        for mono in P:
            for b, e in mono:
                if (type(b) is Add and type(e) is Const and e.value.denominator == 1
                        and b not in split):
                    split[b] = _split_nested(b)
        split = {b: v for b, v in split.items() if v is not None}
        if not split:
            return P
        out = {}
        for mono, c in P.items():
            term = {(): c}
            for b, e in mono:
                if b in split:
                    num, dens = split[b]
                    term = pmul(term, ppow(num, e))
                    for d, w in dens.items():
                        term = mul_base_power(term, d, Const(w * e.value))
                else:
                    term = mul_base_power(term, b, e)
            out = padd(out, term)
        P = out
    return P


def _together_is_zero(P) -> bool:
    P = _flatten_nested(P)
    if not P:
        return True
    worst = _neg_add_bases(P)
    if not worst:
        return False
    Q = P
    for b, w in sorted(worst.items(), key=lambda bw: bw[0].key):
        Q = mul_base_power(Q, b, Const(-w))
        if not Q:
            return True
    return not Q


def normalize(e) -> Expr:
    """Canonical form of ``e``; idempotent.

    Beyond the expanded canonical form, a result whose terms carry sums in
    denominators is multiplied through by those denominators; if the
    numerator cancels, zero is returned.
    """
    e = as_expr(e)
    if e._canon:
        r = e
    else:
        r = from_poly(to_poly(e))
    if r is ZERO or type(r) is not Add:
        return r
    if _together_is_zero(to_poly(r)):
        return ZERO
    return r
