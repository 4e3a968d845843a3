"""A first-order probabilistic language whose denotation is a kernel.

Terms: let-binding, sampling from a distribution family, soft constraints
(score), indicator-guarded branching, pure expressions (arithmetic over
variables), pairs, and fail.  The denotation brackets every construct
into the kernel algebra: sequencing goes through the left product, score
through the action on the unit kernel, branching through indicator-scored
sums.  An operational weighted sampler mirrors the denotation, drawing
sample sites through the randomisation module.

Concrete syntax (see the grammar in the README):

    let x = sample(uniform 0 1) in
    score(2 * x);
    if x <= 0.5 then (x, 0) else (x, 1)

Numeric literals parse exactly (decimals become rationals), so discrete
programs stay on the exact path end to end.
"""

from __future__ import annotations

import math
import random as _random
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BoundViolation,
    NotZeroInftyAbsCont,
    ProgramSyntaxError,
    ScopeError,
    TypeMismatch,
    UnsampleableSite,
    Unsupported,
)
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_mul
from .funcs import (
    AbsF,
    Add,
    Compose,
    Const,
    ExpF,
    ExtLit,
    FloorF,
    FnExpr,
    Id,
    Indicator,
    LogF,
    Mul,
    PairFn,
    PdfNormal,
    Proj1,
    Proj2,
    SafeDiv,
    SqrtF,
    Sub,
    as_weight,
    eval_fn,
    partial_left,
)
from .kernels import (
    ConstK,
    Det,
    KernelExpr,
    PMClosed,
    PMDensity,
    PMDirac,
    PMPiece,
    ParamK,
    ProdL,
    PullK,
    PushK,
    ScoreK,
    SumK,
    ZeroK,
    as_const_measure,
    classify_kernel,
    eval_kernel,
)
from .measures import (
    DiracB,
    MeasureExpr,
    Weighted,
    beta_measure,
    counting_nat,
    dirac,
    lebesgue,
    measure_of,
    measures_agree,
    normal_measure,
    normalize,
    poisson_measure,
    scale_measure,
    singleton_set,
    sum_measures,
    total_mass,
    uniform,
)
from .randomise import Randomiser, randomise_subprob, sample_via
from .sets import NEG_INF, POS_INF, interval, real_atoms
from .spaces import BOTTOM, NAT, Prod, REAL, SpaceExpr, UNIT, Unit


# ---------------------------------------------------------------------------
# abstract syntax


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class EVar(Expr):
    name: str
    pos: tuple = None


@dataclass(frozen=True)
class ENum(Expr):
    value: object  # int or Fraction
    pos: tuple = None


@dataclass(frozen=True)
class EBin(Expr):
    op: str
    left: Expr
    right: Expr
    pos: tuple = None


@dataclass(frozen=True)
class ECmp(Expr):
    op: str
    left: Expr
    right: Expr
    pos: tuple = None


@dataclass(frozen=True)
class ECall(Expr):
    name: str
    args: tuple
    pos: tuple = None


@dataclass(frozen=True)
class EFnApp(Expr):
    """An embedded function term applied to an expression (produced by
    transformations; concrete syntax dsl{...}(arg))."""

    fn: FnExpr
    arg: Expr
    pos: tuple = None


@dataclass(frozen=True)
class DistSpec:
    name: str
    args: tuple  # of Expr
    pos: tuple = None


class Term:
    pass


@dataclass(frozen=True)
class TVar(Term):
    name: str
    pos: tuple = None


@dataclass(frozen=True)
class TExpr(Term):
    expr: Expr
    pos: tuple = None


@dataclass(frozen=True)
class TLet(Term):
    name: str
    bound: Term
    body: Term
    pos: tuple = None


@dataclass(frozen=True)
class TSample(Term):
    dist: DistSpec
    pos: tuple = None


@dataclass(frozen=True)
class TScore(Term):
    weight: Expr
    body: Term
    pos: tuple = None


@dataclass(frozen=True)
class TIf(Term):
    guard: Expr
    then_t: Term
    else_t: Term
    pos: tuple = None


@dataclass(frozen=True)
class TPair(Term):
    first: Term
    second: Term
    pos: tuple = None


@dataclass(frozen=True)
class TFail(Term):
    space: SpaceExpr = REAL
    pos: tuple = None


# ---------------------------------------------------------------------------
# lexer / parser


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<comment>//[^\n]*)|(?P<num>\d+\.\d+|\d+|\.\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_-]*)"
    r"|(?P<dsl>dsl\{)"
    r"|(?P<op><=|>=|==|!=|<|>|[()+\-*/,;={}])"
    r")"
)

_KEYWORDS = {"let", "in", "sample", "score", "if", "then", "else", "fail"}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str):
    tokens = []
    line = 1
    col = 1
    i = 0
    n = len(src)
    while i < n:
        m = _TOKEN_RE.match(src, i)
        if not m or m.end() == i:
            stray = src[i]
            if stray in "\n":
                line += 1
                col = 1
                i += 1
                continue
            if stray.isspace():
                i += 1
                col += 1
                continue
            raise ProgramSyntaxError(f"unexpected character {stray!r}", line, col)
        skipped = src[i : m.start(1) if m.start(1) >= 0 else m.end()]
        for ch in src[i : m.end()]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        text = m.group("comment") or m.group("num") or m.group("name") or m.group("dsl") or m.group("op")
        if m.group("comment"):
            i = m.end()
            continue
        if m.group("num"):
            kind = "num"
        elif m.group("name"):
            kind = "kw" if m.group("name") in _KEYWORDS else "name"
        elif m.group("dsl"):
            kind = "dsl"
        else:
            kind = "op"
        start_col = col - len(text)
        tokens.append(_Token(kind, text, line, max(1, start_col)))
        i = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


_DIST_NAMES = {
    "uniform": 2,
    "normal": 2,
    "bernoulli": 1,
    "poisson": 1,
    "beta-density": 2,
    "dirac": 1,
    "lebesgue": 0,
    "counting-nat": 0,
    "scale": None,
    "sum": None,
}


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text) -> _Token:
        t = self.next()
        if t.text != text:
            raise ProgramSyntaxError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def fail(self, msg):
        t = self.peek()
        raise ProgramSyntaxError(msg, t.line, t.col)

    # terms ------------------------------------------------------------

    def term(self) -> Term:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "let":
                self.next()
                name = self.next()
                if name.kind != "name":
                    raise ProgramSyntaxError("expected a variable name", name.line, name.col)
                self.expect("=")
                bound = self.term()
                inkw = self.next()
                if inkw.text != "in":
                    raise ProgramSyntaxError("expected 'in'", inkw.line, inkw.col)
                body = self.term()
                return TLet(name.text, bound, body, (t.line, t.col))
            if t.text == "sample":
                self.next()
                self.expect("(")
                dist = self.dist()
                self.expect(")")
                return TSample(dist, (t.line, t.col))
            if t.text == "score":
                self.next()
                self.expect("(")
                w = self.expr()
                self.expect(")")
                self.expect(";")
                body = self.term()
                return TScore(w, body, (t.line, t.col))
            if t.text == "if":
                self.next()
                guard = self.expr()
                th = self.next()
                if th.text != "then":
                    raise ProgramSyntaxError("expected 'then'", th.line, th.col)
                then_t = self.term()
                el = self.next()
                if el.text != "else":
                    raise ProgramSyntaxError("expected 'else'", el.line, el.col)
                else_t = self.term()
                return TIf(guard, then_t, else_t, (t.line, t.col))
            if t.text == "fail":
                self.next()
                return TFail(pos=(t.line, t.col))
        if t.text == "(":
            # pair or parenthesised term: try a term, look for a comma
            save = self.pos
            self.next()
            first = self.term()
            sep = self.next()
            if sep.text == ",":
                second = self.term()
                self.expect(")")
                return TPair(first, second, (t.line, t.col))
            if sep.text == ")":
                return first
            # fall back to expression parsing
            self.pos = save
        expr = self.expr()
        return TExpr(expr, (t.line, t.col))

    def dist(self) -> DistSpec:
        if self.peek().text == "(":
            self.next()
            d = self.dist()
            self.expect(")")
            return d
        t = self.next()
        if t.text not in _DIST_NAMES:
            raise ProgramSyntaxError(f"unknown distribution {t.text!r}", t.line, t.col)
        name = t.text
        if name == "scale":
            if self.peek().text == "inf":
                self.next()
                w = ENum(INF, (t.line, t.col))
            else:
                w = self.expr_atom()
            return DistSpec(name, (w, self.dist()), (t.line, t.col))
        if name == "sum":
            return DistSpec(name, (self.dist(), self.dist()), (t.line, t.col))
        args = []
        for _ in range(_DIST_NAMES[name]):
            args.append(self.expr_atom())
        return DistSpec(name, tuple(args), (t.line, t.col))

    # expressions --------------------------------------------------------

    def expr(self) -> Expr:
        return self.cmp_expr()

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        t = self.peek()
        if t.text in ("<=", "<", ">=", ">", "==", "!="):
            self.next()
            right = self.add_expr()
            return ECmp(t.text, left, right, (t.line, t.col))
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while self.peek().text in ("+", "-"):
            op = self.next()
            right = self.mul_expr()
            left = EBin(op.text, left, right, (op.line, op.col))
        return left

    def mul_expr(self) -> Expr:
        left = self.unary_expr()
        while self.peek().text in ("*", "/"):
            op = self.next()
            right = self.unary_expr()
            left = EBin(op.text, left, right, (op.line, op.col))
        return left

    def unary_expr(self) -> Expr:
        t = self.peek()
        if t.text == "-":
            self.next()
            inner = self.unary_expr()
            return EBin("-", ENum(0, (t.line, t.col)), inner, (t.line, t.col))
        return self.expr_atom()

    def expr_atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            if "." in t.text:
                value = Fraction(t.text)
            else:
                value = int(t.text)
            return ENum(value, (t.line, t.col))
        if t.kind == "dsl":
            depth = 1
            chunks = []
            while depth:
                tok = self.next()
                if tok.kind == "eof":
                    raise ProgramSyntaxError("unterminated dsl{ ... }", t.line, t.col)
                if tok.text == "{":
                    depth += 1
                if tok.text == "}":
                    depth -= 1
                    if depth == 0:
                        break
                chunks.append(tok.text)
            from .dsl import parse_fn

            fn = parse_fn(" ".join(chunks))
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return EFnApp(fn, arg, (t.line, t.col))
        if t.kind == "name":
            if self.peek().text == "(":
                self.next()
                args = [self.expr()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.expr())
                self.expect(")")
                return ECall(t.text, tuple(args), (t.line, t.col))
            return EVar(t.text, (t.line, t.col))
        if t.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ProgramSyntaxError(f"unexpected token {t.text!r}", t.line, t.col)


def parse(src: str) -> Term:
    """Parse program text; raises ProgramSyntaxError with position."""
    p = _Parser(src)
    t = p.term()
    trailing = p.peek()
    if trailing.kind != "eof":
        raise ProgramSyntaxError(
            f"trailing input {trailing.text!r}", trailing.line, trailing.col
        )
    _infer(t, [])  # scope and type checking
    return t


# ---------------------------------------------------------------------------
# typing


def _lookup(env, name):
    for i in range(len(env) - 1, -1, -1):
        if env[i][0] == name:
            return i, env[i][1]
    raise ScopeError(f"unbound variable {name!r}")


def _expr_type(e: Expr, env) -> SpaceExpr:
    if isinstance(e, ENum):
        return REAL
    if isinstance(e, EVar):
        _, space = _lookup(env, e.name)
        return space
    if isinstance(e, (EBin, ECmp)):
        lt = _expr_type(e.left, env)
        rt = _expr_type(e.right, env)
        for t in (lt, rt):
            if t not in (REAL, NAT):
                raise TypeMismatch(f"arithmetic on a non-numeric value of type {t!r}")
        return REAL
    if isinstance(e, ECall):
        for a in e.args:
            _expr_type(a, env)
        return REAL
    if isinstance(e, EFnApp):
        _expr_type(e.arg, env)
        cod = e.fn.cod
        from .spaces import EXTREAL

        return REAL if cod is EXTREAL else cod
    raise TypeMismatch(f"not an expression: {e!r}")


_DIST_SPACES = {
    "uniform": REAL,
    "normal": REAL,
    "bernoulli": REAL,
    "poisson": NAT,
    "beta-density": REAL,
    "dirac": REAL,
    "lebesgue": REAL,
    "counting-nat": NAT,
}


def _dist_type(d: DistSpec, env) -> SpaceExpr:
    if d.name == "scale":
        return _dist_type(d.args[1], env)
    if d.name == "sum":
        a = _dist_type(d.args[0], env)
        b = _dist_type(d.args[1], env)
        if a != b:
            raise TypeMismatch("sum of distributions on different spaces")
        return a
    for a in d.args:
        _expr_type(a, env)
    return _DIST_SPACES[d.name]


def _infer(t: Term, env) -> SpaceExpr:
    if isinstance(t, TVar):
        return _lookup(env, t.name)[1]
    if isinstance(t, TExpr):
        return _expr_type(t.expr, env)
    if isinstance(t, TLet):
        bound = _infer(t.bound, env)
        return _infer(t.body, env + [(t.name, bound)])
    if isinstance(t, TSample):
        return _dist_type(t.dist, env)
    if isinstance(t, TScore):
        _expr_type(t.weight, env)
        return _infer(t.body, env)
    if isinstance(t, TIf):
        _expr_type(t.guard, env)
        a = _infer(t.then_t, env)
        b = _infer(t.else_t, env)
        if a != b:
            raise TypeMismatch(f"branch types differ: {a!r} vs {b!r}")
        return a
    if isinstance(t, TPair):
        return Prod(_infer(t.first, env), _infer(t.second, env))
    if isinstance(t, TFail):
        return t.space
    raise TypeMismatch(f"not a term: {t!r}")


def program_type(t: Term) -> SpaceExpr:
    return _infer(t, [])


# ---------------------------------------------------------------------------
# denotation


def _env_space(env) -> SpaceExpr:
    space = UNIT
    for _, s in env:
        space = Prod(space, s)
    return space


def _var_fn(env, name) -> FnExpr:
    idx, space = _lookup(env, name)
    g = _env_space(env)
    path = Id(g)
    # peel (len(env) - 1 - idx) outer layers, then take the right slot
    steps = len(env) - 1 - idx
    cur = g
    fn = None
    for _ in range(steps):
        fn = Proj1(cur) if fn is None else Compose(Proj1(cur), fn)
        cur = cur.left
    take = Proj2(cur)
    return take if fn is None else Compose(take, fn)


def _expr_fn(e: Expr, env) -> FnExpr:
    g = _env_space(env)
    if isinstance(e, ENum):
        return Const(g, e.value, REAL)
    if isinstance(e, EVar):
        fn = _var_fn(env, e.name)
        from .funcs import NatToReal

        return NatToReal(fn) if fn.cod == NAT else fn
    if isinstance(e, EBin):
        l = _expr_fn(e.left, env)
        r = _expr_fn(e.right, env)
        ops = {"+": Add, "-": Sub, "*": Mul, "/": SafeDiv}
        return ops[e.op](l, r)
    if isinstance(e, ECmp):
        l = _expr_fn(e.left, env)
        r = _expr_fn(e.right, env)
        delta = Sub(l, r)
        regions = {
            "<=": interval(NEG_INF, 0, False, True),
            "<": interval(NEG_INF, 0, False, False),
            ">=": interval(0, POS_INF, True, False),
            ">": interval(0, POS_INF, False, False),
            "==": real_atoms([0]),
        }
        if e.op == "!=":
            from .sets import complement

            return Compose(Indicator(complement(real_atoms([0]))), delta)
        return Compose(Indicator(regions[e.op]), delta)
    if isinstance(e, ECall):
        unary = {"exp": ExpF, "log": LogF, "sqrt": SqrtF, "abs": AbsF, "floor": FloorF}
        if e.name in unary and len(e.args) == 1:
            return unary[e.name](_expr_fn(e.args[0], env))
        if e.name == "pdf-normal" and len(e.args) == 3:
            return PdfNormal(
                _expr_fn(e.args[0], env),
                _expr_fn(e.args[1], env),
                _expr_fn(e.args[2], env),
            )
        raise TypeMismatch(f"unknown function {e.name!r}/{len(e.args)}")
    if isinstance(e, EFnApp):
        arg = _expr_fn(e.arg, env)
        if e.fn.dom == NAT and arg.cod == REAL:
            from .funcs import NatOfFloor

            arg = NatOfFloor(arg)
        return Compose(e.fn, arg)
    raise TypeMismatch(f"not an expression: {e!r}")


def _const_value(e: Expr):
    if isinstance(e, ENum):
        return e.value
    if isinstance(e, EBin) and e.op == "-" and isinstance(e.left, ENum) and e.left.value == 0:
        inner = _const_value(e.right)
        return None if inner is None else -inner
    return None


def _dist_measure(d: DistSpec, env):
    """Closed measure for constant arguments, else None."""
    vals = [_const_value(a) for a in d.args if isinstance(a, Expr)]
    if d.name == "scale":
        w = _const_value(d.args[0])
        inner = _dist_measure(d.args[1], env)
        if w is None or inner is None:
            return None
        return scale_measure(w, inner)
    if d.name == "sum":
        a = _dist_measure(d.args[0], env)
        b = _dist_measure(d.args[1], env)
        if a is None or b is None:
            return None
        return sum_measures([a, b])
    if any(v is None for v in vals):
        return None
    if d.name == "uniform":
        return uniform(vals[0], vals[1])
    if d.name == "normal":
        return normal_measure(vals[0], vals[1])
    if d.name == "bernoulli":
        p = Fraction(vals[0])
        return sum_measures(
            [
                scale_measure(p, dirac(1, REAL)),
                scale_measure(1 - p, dirac(0, REAL)),
            ]
        )
    if d.name == "poisson":
        return poisson_measure(float(vals[0]))
    if d.name == "beta-density":
        return beta_measure(vals[0], vals[1])
    if d.name == "dirac":
        return dirac(vals[0], REAL)
    if d.name == "lebesgue":
        return lebesgue()
    if d.name == "counting-nat":
        return counting_nat()
    raise TypeMismatch(f"unknown distribution {d.name!r}")


def _dist_kernel(d: DistSpec, env) -> KernelExpr:
    g = _env_space(env)
    mu = _dist_measure(d, env)
    if mu is not None:
        return ConstK(g, mu)
    # parameter-dependent families
    if d.name == "bernoulli":
        p = _expr_fn(d.args[0], env)
        q = Sub(Const(g, 1, REAL), p)
        return ParamK(
            g,
            (
                PMPiece(p, PMClosed(DiracB(1, REAL))),
                PMPiece(q, PMClosed(DiracB(0, REAL))),
            ),
        )
    if d.name == "normal":
        m = _expr_fn(d.args[0], env)
        s = _expr_fn(d.args[1], env)
        gr = Prod(g, REAL)
        dens = PdfNormal(
            Proj2(gr), Compose(m, Proj1(gr)), Compose(s, Proj1(gr))
        )
        from .sets import FullSet

        return ParamK(g, (PMPiece(ONE, PMDensity(FullSet(REAL), dens)),))
    if d.name == "dirac":
        return Det(_expr_fn(d.args[0], env))
    raise Unsupported(f"parameter-dependent {d.name!r} sites are not representable")


def denote(t: Term, env=None) -> KernelExpr:
    """The denotation of a (well-typed) term as a kernel from the
    environment space."""
    env = env or []
    g = _env_space(env)
    if isinstance(t, (TVar, TExpr)):
        e = t.expr if isinstance(t, TExpr) else EVar(t.name)
        fn = _expr_fn(e, env) if not isinstance(e, EVar) else _var_fn(env, e.name)
        return Det(fn)
    if isinstance(t, TLet):
        k1 = denote(t.bound, env)
        inner_env = env + [(t.name, k1.cod)]
        k2 = denote(t.body, inner_env)
        joint = ProdL(k1, k2)
        return PushK(joint, Proj2(Prod(k1.cod, k2.cod)))
    if isinstance(t, TSample):
        return _dist_kernel(t.dist, env)
    if isinstance(t, TScore):
        w = _expr_fn(t.weight, env)
        unit_k = Det(Const(g, (), UNIT))
        gated = ScoreK(unit_k, _as_score_fn(w, g))
        inner_env = env + [("_", UNIT)]
        body = denote(t.body, inner_env)
        joint = ProdL(gated, body)
        return PushK(joint, Proj2(Prod(UNIT, body.cod)))
    if isinstance(t, TIf):
        guard = _expr_fn(t.guard, env)
        a = denote(t.then_t, env)
        b = denote(t.else_t, env)
        ga = _as_score_fn(guard, g, over=a.cod)
        gb = _as_score_fn(Sub(Const(g, 1, REAL), guard), g, over=b.cod)
        return SumK((ScoreK(a, ga), ScoreK(b, gb)))
    if isinstance(t, TPair):
        k1 = denote(t.first, env)
        inner_env = env + [("_", k1.cod)]
        k2 = denote(t.second, env)
        lifted = PullK(Proj1(Prod(g, k1.cod)), k2)
        return ProdL(k1, lifted)
    if isinstance(t, TFail):
        space = _infer(t, env)
        return ZeroK(g, space)
    raise TypeMismatch(f"not a term: {t!r}")


def _as_score_fn(w: FnExpr, g: SpaceExpr, over: SpaceExpr = UNIT) -> FnExpr:
    """Lift an environment-weight onto the (env, output) pair space."""
    return Compose(w, Proj1(Prod(g, over)))


# ---------------------------------------------------------------------------
# importance and rejection transformations


def sample_sites(t: Term):
    """Pre-order list of Sample sites."""
    out = []

    def walk(t):
        if isinstance(t, TSample):
            out.append(t)
        elif isinstance(t, TLet):
            walk(t.bound)
            walk(t.body)
        elif isinstance(t, TScore):
            walk(t.body)
        elif isinstance(t, TIf):
            walk(t.then_t)
            walk(t.else_t)
        elif isinstance(t, TPair):
            walk(t.first)
            walk(t.second)

    walk(t)
    return out


def importance_transform(t: Term, site: int, proposal: DistSpec) -> Term:
    """Replace the site's target with: draw from the proposal, score by
    the density ratio, return the draw."""
    sites = sample_sites(t)
    if not 0 <= site < len(sites):
        raise TypeMismatch(f"no sample site {site}")
    target = sites[site]
    mu_t = _dist_measure(target.dist, [])
    mu_p = _dist_measure(proposal, [])
    if mu_t is None or mu_p is None:
        raise Unsupported("importance transformation needs constant site measures")
    from .calculus import rn_derivative

    res = rn_derivative(ConstK(UNIT, mu_t), ConstK(UNIT, mu_p))
    d = partial_left(res.derivative, ())
    fresh = f"_is{site}"
    replacement = TLet(
        fresh,
        TSample(proposal),
        TScore(EFnApp(d, EVar(fresh)), TExpr(EVar(fresh))),
    )

    replaced = [False]

    def rebuild(t):
        if isinstance(t, TSample):
            if t is target and not replaced[0]:
                replaced[0] = True
                return replacement
            return t
        if isinstance(t, TLet):
            return TLet(t.name, rebuild(t.bound), rebuild(t.body), t.pos)
        if isinstance(t, TScore):
            return TScore(t.weight, rebuild(t.body), t.pos)
        if isinstance(t, TIf):
            return TIf(t.guard, rebuild(t.then_t), rebuild(t.else_t), t.pos)
        if isinstance(t, TPair):
            return TPair(rebuild(t.first), rebuild(t.second), t.pos)
        return t

    return rebuild(t)


def rejection_sampler(mu, nu, bound, seed, n, probe_grid=64):
    """Accept proposal draws y with probability d(y)/bound where d is the
    density of mu against nu; returns accepted points from n proposals.
    Ratios above the bound raise BoundViolation (correctness depends on
    the bound)."""
    if isinstance(mu, MeasureExpr):
        mu_k = ConstK(UNIT, mu)
    else:
        mu_k = mu
    if isinstance(nu, MeasureExpr):
        nu_k = ConstK(UNIT, nu)
    else:
        nu_k = nu
    from .calculus import rn_derivative

    res = rn_derivative(mu_k, nu_k)
    d = partial_left(res.derivative, ())
    rand = randomiser_for(as_const_measure(nu_k))
    rng = _random.Random(seed)
    bound = float(bound)
    # probe the ratio over the proposal's draws before trusting the bound
    probes = sample_via(rand, (), derived_seed_for(seed), probe_grid)
    for y in probes:
        if y is BOTTOM:
            continue
        ratio = float(as_weight(eval_fn(d, y)))
        if ratio > bound * (1 + 1e-9):
            raise BoundViolation(
                f"density ratio {ratio} exceeds the declared bound {bound}"
            )
    out = []
    for _ in range(n):
        u = rng.random()
        y = eval_fn(rand.det, ((), u))
        if y is BOTTOM:
            continue
        ratio = float(as_weight(eval_fn(d, y)))
        if ratio > bound * (1 + 1e-9):
            raise BoundViolation(
                f"density ratio {ratio} exceeds the declared bound {bound}"
            )
        w = rng.random()
        if w <= ratio / bound:
            out.append(y)
    return out


def derived_seed_for(seed):
    from .randomise import derived_seed

    return derived_seed(seed, 977)


def randomiser_for(mu: MeasureExpr) -> Randomiser:
    return randomise_subprob(mu)


# ---------------------------------------------------------------------------
# operational sampler


@dataclass(frozen=True)
class WeightedSample:
    value: object  # Point or BOTTOM
    weight: ExtReal


class _Compiled:
    """Per-node compiled artifacts for the operational interpreter."""

    def __init__(self, root: Term):
        self.fns = {}
        self.rands = {}
        self.root = root

    def expr_fn(self, e: Expr, env_layout):
        key = (id(e), tuple(env_layout))
        if key not in self.fns:
            self.fns[key] = _expr_fn(e, list(env_layout))
        return self.fns[key]

    def randomiser(self, site: TSample, env_layout, env_tuple):
        mu = _dist_measure(site.dist, [])
        if mu is not None:
            key = id(site)
            if key not in self.rands:
                label = classify_kernel(ConstK(UNIT, mu))
                if label not in ("Probability", "Subprobability"):
                    raise UnsampleableSite(
                        f"sample site draws a {label} measure; apply the "
                        "importance transformation first"
                    )
                self.rands[key] = randomise_subprob(mu)
            return self.rands[key]
        # parameter-dependent site: close over the current environment
        kernel = _dist_kernel(site.dist, list(env_layout))
        mu_x = eval_kernel(kernel, env_tuple)
        label = classify_kernel(ConstK(UNIT, mu_x))
        if label not in ("Probability", "Subprobability"):
            raise UnsampleableSite(
                f"sample site draws a {label} measure; apply the importance "
                "transformation first"
            )
        return randomise_subprob(mu_x)


def run_sampler(t: Term, seed: int, n: int):
    """n weighted draws from the program's operational semantics; score
    weights multiply, sample sites draw through inverse-CDF randomisers,
    and failed or restricted paths yield BOTTOM values."""
    program_type(t)
    compiled = _Compiled(t)
    rng = _random.Random(seed)
    out = []
    for _ in range(n):
        value, weight = _run(t, [], (), compiled, rng, ONE)
        out.append(WeightedSample(value, weight))
    return out


def _run(t: Term, env_layout, env_tuple, compiled, rng, weight):
    if isinstance(t, TVar):
        fn = compiled.expr_fn(EVar(t.name), env_layout)
        return eval_fn(fn, env_tuple), weight
    if isinstance(t, TExpr):
        fn = compiled.expr_fn(t.expr, env_layout)
        return eval_fn(fn, env_tuple), weight
    if isinstance(t, TLet):
        v, weight = _run(t.bound, env_layout, env_tuple, compiled, rng, weight)
        if v is BOTTOM:
            return BOTTOM, weight
        space = _infer(t.bound, list(env_layout))
        return _run(
            t.body,
            env_layout + [(t.name, space)],
            (env_tuple, v),
            compiled,
            rng,
            weight,
        )
    if isinstance(t, TSample):
        rand = compiled.randomiser(t, env_layout, env_tuple)
        u = rng.random()
        v = eval_fn(rand.det, ((), u))
        return v, weight
    if isinstance(t, TScore):
        fn = compiled.expr_fn(t.weight, env_layout)
        w = as_weight(eval_fn(fn, env_tuple))
        return _run(t.body, env_layout, env_tuple, compiled, rng, ext_mul(weight, w))
    if isinstance(t, TIf):
        fn = compiled.expr_fn(t.guard, env_layout)
        g = eval_fn(fn, env_tuple)
        if g is BOTTOM:
            return BOTTOM, weight
        if g == 1:
            return _run(t.then_t, env_layout, env_tuple, compiled, rng, weight)
        if g == 0:
            return _run(t.else_t, env_layout, env_tuple, compiled, rng, weight)
        raise TypeMismatch("if-guards must be indicators valued in {0, 1}")
    if isinstance(t, TPair):
        a, weight = _run(t.first, env_layout, env_tuple, compiled, rng, weight)
        if a is BOTTOM:
            return BOTTOM, weight
        b, weight = _run(t.second, env_layout, env_tuple, compiled, rng, weight)
        if b is BOTTOM:
            return BOTTOM, weight
        return (a, b), weight
    if isinstance(t, TFail):
        return BOTTOM, weight
    raise TypeMismatch(f"not a term: {t!r}")


def estimate(samples, f=lambda v: float(v)):
    """Self-normalised estimate of E[f] under the program's denotation."""
    num = 0.0
    den = 0.0
    for s in samples:
        if s.value is BOTTOM:
            continue
        w = float(s.weight)
        num += w * f(s.value)
        den += w
    if den == 0:
        raise ZeroDivisionError("no surviving mass in the sample")
    return num / den


# ---------------------------------------------------------------------------
# equivalence


EXACT_FINITE = "ExactFinite"
PROBE = "Probe"


def equivalent(p: Term, q: Term, mode=EXACT_FINITE, tol=1e-6) -> bool:
    """Extensional equality of denotations for closed programs: exact
    atom-table comparison (ExactFinite) or probe agreement (Probe)."""
    tp = program_type(p)
    tq = program_type(q)
    if tp != tq:
        raise TypeMismatch(f"program types differ: {tp!r} vs {tq!r}")
    mp = eval_kernel(denote(p), ())
    mq = eval_kernel(denote(q), ())
    if mode == EXACT_FINITE:
        return _atoms_table(mp) == _atoms_table(mq)
    return measures_agree(mp, mq, tol=tol)


def _atoms_table(mu: MeasureExpr):
    """Exact atom-to-weight table of a purely atomic measure."""
    nf = normalize(mu)
    if nf.lazy:
        raise Unsupported("exact comparison needs purely atomic measures")
    table = {}
    for w, b in nf.pieces:
        from .measures import base_atoms

        atoms = base_atoms(b)
        if atoms is None or (not atoms and not isinstance(b, DiracB)):
            if atoms == []:
                raise Unsupported("exact comparison needs purely atomic measures")
            raise Unsupported("exact comparison needs purely atomic measures")
        for p in atoms:
            cur = table.get(p, ZERO)
            table[p] = cur + (w if isinstance(b, DiracB) else w)
    return {p: w for p, w in table.items() if not w.is_zero}


def swap_adjacent_lets(t: Term) -> Term:
    """Swap two adjacent independent lets (the commutativity rewrite)."""
    if (
        isinstance(t, TLet)
        and isinstance(t.body, TLet)
        and not _mentions(t.body.bound, t.name)
    ):
        inner = t.body
        return TLet(inner.name, inner.bound, TLet(t.name, t.bound, inner.body))
    raise TypeMismatch("term does not start with two independent lets")


def _mentions(t, name) -> bool:
    if isinstance(t, TVar):
        return t.name == name
    if isinstance(t, TExpr):
        return _expr_mentions(t.expr, name)
    if isinstance(t, TLet):
        return _mentions(t.bound, name) or (
            t.name != name and _mentions(t.body, name)
        )
    if isinstance(t, TSample):
        return any(_expr_mentions(a, name) for a in t.dist.args if isinstance(a, Expr))
    if isinstance(t, TScore):
        return _expr_mentions(t.weight, name) or _mentions(t.body, name)
    if isinstance(t, TIf):
        return (
            _expr_mentions(t.guard, name)
            or _mentions(t.then_t, name)
            or _mentions(t.else_t, name)
        )
    if isinstance(t, TPair):
        return _mentions(t.first, name) or _mentions(t.second, name)
    return False


def _expr_mentions(e, name) -> bool:
    if isinstance(e, EVar):
        return e.name == name
    if isinstance(e, (EBin, ECmp)):
        return _expr_mentions(e.left, name) or _expr_mentions(e.right, name)
    if isinstance(e, ECall):
        return any(_expr_mentions(a, name) for a in e.args)
    if isinstance(e, EFnApp):
        return _expr_mentions(e.arg, name)
    return False


# ---------------------------------------------------------------------------
# serialisation


def unparse(t: Term) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TExpr):
        return unparse_expr(t.expr)
    if isinstance(t, TLet):
        return f"let {t.name} = {unparse(t.bound)} in\n{unparse(t.body)}"
    if isinstance(t, TSample):
        return f"sample({_unparse_dist(t.dist)})"
    if isinstance(t, TScore):
        return f"score({unparse_expr(t.weight)});\n{unparse(t.body)}"
    if isinstance(t, TIf):
        return (
            f"if {unparse_expr(t.guard)} then {unparse(t.then_t)} "
            f"else {unparse(t.else_t)}"
        )
    if isinstance(t, TPair):
        return f"({unparse(t.first)}, {unparse(t.second)})"
    if isinstance(t, TFail):
        return "fail"
    raise TypeMismatch(f"not a term: {t!r}")


def _unparse_dist(d: DistSpec) -> str:
    if d.name == "scale":
        return f"scale {unparse_expr(d.args[0])} {_unparse_dist(d.args[1])}"
    if d.name == "sum":
        return f"sum {_unparse_dist(d.args[0])} {_unparse_dist(d.args[1])}"
    parts = [d.name] + [unparse_expr(a) for a in d.args]
    return " ".join(parts)


def unparse_expr(e: Expr) -> str:
    if isinstance(e, ENum):
        if isinstance(e.value, Fraction) and e.value.denominator != 1:
            return str(float(e.value)) if _exact_float(e.value) else f"({e.value.numerator} / {e.value.denominator})"
        return str(e.value)
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EBin):
        return f"({unparse_expr(e.left)} {e.op} {unparse_expr(e.right)})"
    if isinstance(e, ECmp):
        return f"{unparse_expr(e.left)} {e.op} {unparse_expr(e.right)}"
    if isinstance(e, ECall):
        return f"{e.name}({', '.join(unparse_expr(a) for a in e.args)})"
    if isinstance(e, EFnApp):
        from .dsl import unparse_fn

        return f"dsl{{{unparse_fn(e.fn)}}}({unparse_expr(e.arg)})"
    raise TypeMismatch(f"not an expression: {e!r}")


def _exact_float(fr: Fraction) -> bool:
    try:
        return Fraction(float(fr)) == fr
    except (OverflowError, ValueError):
        return False
