"""S-expression front end for spaces, sets, functions, measures, and
kernels (the .sfkd format: UTF-8, ; comments).

Numbers parse exactly: integers, n/d rationals, and decimal literals all
become rationals; `inf` is the infinite weight.  Every emitted term
re-parses to a structurally equal object (round-trip property, tested).
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import ProgramSyntaxError, TypeMismatch, Unsupported
from .extreal import INF, ONE, ExtReal, as_ext
from .funcs import (
    AbsF,
    Add,
    CaseFn,
    Compose,
    Const,
    ExpF,
    ExtAddFn,
    ExtDivFn,
    ExtLit,
    ExtMulFn,
    FloorF,
    FnExpr,
    Id,
    IfSet,
    Indicator,
    InjL,
    InjR,
    LogF,
    Mul,
    NatOfFloor,
    NatToReal,
    Neg,
    PairFn,
    PdfBeta,
    PdfNormal,
    PdfPoisson,
    Proj1,
    Proj2,
    RestrictTo,
    SafeDiv,
    SqrtF,
    Sub,
)
from .kernels import (
    ComposeK,
    ConstK,
    Det,
    KernelExpr,
    ProdL,
    ProdR,
    PullK,
    PushK,
    ScoreK,
    SumK,
    ZeroK,
)
from .measures import (
    CountingFin,
    CountingNat,
    DiracB,
    FiniteSum,
    LebesgueDensity,
    MeasureExpr,
    ProductBase,
    JointDensity,
    SeqSum,
    Weighted,
    ZeroMeasure,
    beta_measure,
    constant_repeat,
    counting_nat,
    dirac,
    geometric_weights,
    lebesgue,
    normal_measure,
    poisson_measure,
    scale_measure,
    sum_measures,
    uniform,
)
from .sets import (
    EmptySet,
    FullSet,
    Interval,
    NEG_INF,
    POS_INF,
    SetExpr,
    complement,
    fin_set,
    intersect,
    interval,
    nat_set,
    prod_set,
    real_atoms,
    real_set,
    sum_set,
    union,
)
from .spaces import Fin, NAT, Nat, Prod, REAL, Real, SpaceExpr, Sum, UNIT, Unit


# ---------------------------------------------------------------------------
# reader


def _tokenize(src: str):
    out = []
    i = 0
    line, col = 1, 1
    while i < len(src):
        c = src[i]
        if c == ";":
            while i < len(src) and src[i] != "\n":
                i += 1
            continue
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c in "()":
            out.append((c, line, col))
            i += 1
            col += 1
            continue
        j = i
        while j < len(src) and not src[j].isspace() and src[j] not in "();":
            j += 1
        out.append((src[i:j], line, col))
        col += j - i
        i = j
    return out


def read_sexpr(src: str):
    """One s-expression -> nested lists of atom strings."""
    tokens = _tokenize(src)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise ProgramSyntaxError("unexpected end of input")
        tok, line, col = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ProgramSyntaxError("missing )", line, col)
                if tokens[pos][0] == ")":
                    pos += 1
                    return items
                items.append(parse())
        if tok == ")":
            raise ProgramSyntaxError("unexpected )", line, col)
        return tok

    expr = parse()
    if pos != len(tokens):
        tok, line, col = tokens[pos]
        raise ProgramSyntaxError(f"trailing input {tok!r}", line, col)
    return expr


def _num(atom):
    if atom == "inf":
        return POS_INF
    if atom == "-inf":
        return NEG_INF
    if "/" in atom:
        n, d = atom.split("/", 1)
        return Fraction(int(n), int(d))
    if "." in atom or "e" in atom or "E" in atom:
        return Fraction(atom)
    return int(atom)


def _is_num(atom):
    if not isinstance(atom, str):
        return False
    if atom in ("inf", "-inf"):
        return True
    try:
        _num(atom)
        return True
    except (ValueError, TypeError):
        return False


# ---------------------------------------------------------------------------
# spaces


def parse_space(sx) -> SpaceExpr:
    if isinstance(sx, str):
        if sx == "unit":
            return UNIT
        if sx == "real":
            return REAL
        if sx == "nat":
            return NAT
        raise ProgramSyntaxError(f"unknown space {sx!r}")
    head = sx[0]
    if head == "space":
        return parse_space(sx[1])
    if head == "fin":
        return Fin(tuple(sx[1:]))
    if head == "prod":
        return Prod(parse_space(sx[1]), parse_space(sx[2]))
    if head == "sum":
        return Sum(parse_space(sx[1]), parse_space(sx[2]))
    raise ProgramSyntaxError(f"unknown space form {head!r}")


def unparse_space(sp: SpaceExpr) -> str:
    if isinstance(sp, Unit):
        return "unit"
    if isinstance(sp, Real):
        return "real"
    if isinstance(sp, Nat):
        return "nat"
    if isinstance(sp, Fin):
        return "(fin " + " ".join(sp.labels) + ")"
    if isinstance(sp, Prod):
        return f"(prod {unparse_space(sp.left)} {unparse_space(sp.right)})"
    if isinstance(sp, Sum):
        return f"(sum {unparse_space(sp.left)} {unparse_space(sp.right)})"
    raise TypeMismatch(f"not a space: {sp!r}")


# ---------------------------------------------------------------------------
# sets


def parse_set(sx, space: SpaceExpr = REAL) -> SetExpr:
    if isinstance(sx, str):
        if sx == "empty":
            return EmptySet(space)
        if sx == "full" or sx == "all":
            return FullSet(space)
        raise ProgramSyntaxError(f"unknown set {sx!r}")
    head = sx[0]
    if head == "set":
        return parse_set(sx[1], space)
    if head == "ival":
        lo = _num(sx[1])
        hi = _num(sx[2])
        lo_closed, hi_closed = True, True
        rest = sx[3:]
        i = 0
        while i < len(rest):
            if rest[i] == ":lo":
                lo_closed = rest[i + 1] == "closed"
                i += 2
            elif rest[i] == ":hi":
                hi_closed = rest[i + 1] == "closed"
                i += 2
            else:
                raise ProgramSyntaxError(f"unknown interval option {rest[i]!r}")
        return interval(lo, hi, lo_closed, hi_closed)
    if head == "atom":
        return real_atoms([_num(sx[1])])
    if head == "union":
        parts = [parse_set(s, space) for s in sx[1:]]
        out = parts[0]
        for p in parts[1:]:
            out = union(out, p)
        return out
    if head == "inter":
        parts = [parse_set(s, space) for s in sx[1:]]
        out = parts[0]
        for p in parts[1:]:
            out = intersect(out, p)
        return out
    if head == "compl":
        return complement(parse_set(sx[1], space))
    if head == "upto":
        return nat_set(set(range(int(sx[1]) + 1)))
    if head == "natset":
        return nat_set({int(a) for a in sx[1:]})
    if head == "conat":
        return nat_set({int(a) for a in sx[1:]}, cofinite=True)
    if head == "finset":
        if not isinstance(space, Fin):
            raise TypeMismatch("finset needs a finite space context")
        return fin_set(space, set(sx[1:]))
    if head == "rect":
        if not isinstance(space, Prod):
            raise TypeMismatch("rect needs a product space context")
        return prod_set(
            space,
            [(parse_set(sx[1], space.left), parse_set(sx[2], space.right))],
        )
    raise ProgramSyntaxError(f"unknown set form {head!r}")


def _fmt_num(v) -> str:
    if v == POS_INF:
        return "inf"
    if v == NEG_INF:
        return "-inf"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def unparse_set(s: SetExpr) -> str:
    if isinstance(s, EmptySet):
        return "empty"
    if isinstance(s, FullSet):
        return "full"
    from .sets import FinSet, NatSet, ProdSet, RealSet, SumSet

    if isinstance(s, RealSet):
        parts = []
        for iv in s.intervals:
            opts = []
            if iv.lo != NEG_INF:
                opts.append(f":lo {'closed' if iv.lo_closed else 'open'}")
            if iv.hi != POS_INF:
                opts.append(f":hi {'closed' if iv.hi_closed else 'open'}")
            opt = (" " + " ".join(opts)) if opts else ""
            parts.append(f"(ival {_fmt_num(iv.lo)} {_fmt_num(iv.hi)}{opt})")
        for a in s.atoms_in:
            parts.append(f"(atom {_fmt_num(a)})")
        core = parts[0] if len(parts) == 1 else "(union " + " ".join(parts) + ")"
        if s.atoms_out:
            outs = " ".join(f"(atom {_fmt_num(a)})" for a in s.atoms_out)
            inner = outs if len(s.atoms_out) == 1 else "(union " + outs + ")"
            return f"(inter {core} (compl {inner}))"
        return core
    if isinstance(s, NatSet):
        head = "conat" if s.cofinite else "natset"
        return f"({head} " + " ".join(str(m) for m in sorted(s.members)) + ")"
    if isinstance(s, FinSet):
        return "(finset " + " ".join(sorted(s.members)) + ")"
    if isinstance(s, ProdSet):
        rects = [
            f"(rect {unparse_set(a)} {unparse_set(b)})" for a, b in s.rects
        ]
        return rects[0] if len(rects) == 1 else "(union " + " ".join(rects) + ")"
    if isinstance(s, SumSet):
        raise Unsupported("sum-space sets have no surface syntax yet")
    raise TypeMismatch(f"not a set: {s!r}")


# ---------------------------------------------------------------------------
# functions


def parse_fn(src_or_sx, dom: SpaceExpr = REAL) -> FnExpr:
    sx = read_sexpr(src_or_sx) if isinstance(src_or_sx, str) else src_or_sx
    return _parse_fn(sx, dom)


def _parse_fn(sx, dom: SpaceExpr) -> FnExpr:
    if isinstance(sx, str):
        if sx == "id":
            return Id(dom)
        if sx == "floor":
            return FloorF(Id(REAL))
        if sx == "exp":
            return ExpF(Id(REAL))
        if sx == "log":
            return LogF(Id(REAL))
        if sx == "sqrt":
            return SqrtF(Id(REAL))
        if sx == "abs":
            return AbsF(Id(REAL))
        if sx == "neg":
            return Neg(Id(REAL))
        if sx == "nat-of-floor":
            return NatOfFloor(Id(REAL))
        if sx == "nat-to-real":
            return NatToReal(Id(NAT))
        if sx == "proj1":
            if not isinstance(dom, Prod):
                raise TypeMismatch("proj1 needs a product domain")
            return Proj1(dom)
        if sx == "proj2":
            if not isinstance(dom, Prod):
                raise TypeMismatch("proj2 needs a product domain")
            return Proj2(dom)
        if _is_num(sx):
            return Const(dom, _num(sx), REAL)
        raise ProgramSyntaxError(f"unknown function {sx!r}")
    head = sx[0]
    if head == "fn":
        return _parse_fn(sx[1], dom)
    if head == "compose":
        # (compose f g): f after g; g's domain is the ambient one
        inner = _parse_fn(sx[-1], dom)
        out = inner
        for part in reversed(sx[1:-1]):
            out = Compose(_parse_fn(part, out.cod), out)
        return out
    if head == "const":
        value = _num(sx[1]) if _is_num(sx[1]) else sx[1]
        cod = parse_space(sx[2]) if len(sx) > 2 else REAL
        return Const(dom, value, cod)
    if head == "pair":
        return PairFn(_parse_fn(sx[1], dom), _parse_fn(sx[2], dom))
    if head in ("add", "sub", "mul", "div"):
        ctor = {"add": Add, "sub": Sub, "mul": Mul, "div": SafeDiv}[head]
        return ctor(_parse_fn(sx[1], dom), _parse_fn(sx[2], dom))
    if head in ("neg", "abs", "floor", "exp", "log", "sqrt", "nat-of-floor", "nat-to-real"):
        ctor = {
            "neg": Neg,
            "abs": AbsF,
            "floor": FloorF,
            "exp": ExpF,
            "log": LogF,
            "sqrt": SqrtF,
            "nat-of-floor": NatOfFloor,
            "nat-to-real": NatToReal,
        }[head]
        return ctor(_parse_fn(sx[1], dom))
    if head == "ind":
        s = parse_set(sx[1], dom)
        return Indicator(s)
    if head == "restrict":
        s = parse_set(sx[1], dom)
        return RestrictTo(s)
    if head == "ifset":
        s = parse_set(sx[1], dom)
        return IfSet(s, _parse_fn(sx[2], dom), _parse_fn(sx[3], dom))
    if head == "extlit":
        return ExtLit(dom, INF if sx[1] == "inf" else as_ext(_num(sx[1])))
    if head in ("extadd", "extmul", "extdiv"):
        ctor = {"extadd": ExtAddFn, "extmul": ExtMulFn, "extdiv": ExtDivFn}[head]
        return ctor(_parse_fn(sx[1], dom), _parse_fn(sx[2], dom))
    if head == "pdf-normal":
        return PdfNormal(
            _parse_fn(sx[1], dom), _parse_fn(sx[2], dom), _parse_fn(sx[3], dom)
        )
    if head == "pdf-beta":
        return PdfBeta(
            _parse_fn(sx[1], dom), _parse_fn(sx[2], dom), _parse_fn(sx[3], dom)
        )
    if head == "pdf-poisson":
        return PdfPoisson(_parse_fn(sx[1], dom), _parse_fn(sx[2], dom))
    raise ProgramSyntaxError(f"unknown function form {head!r}")


def unparse_fn(f: FnExpr) -> str:
    if isinstance(f, Id):
        return "id"
    if isinstance(f, Const):
        if f._cod == REAL and isinstance(f.value, (int, Fraction)):
            return f"(const {_fmt_num(Fraction(f.value))})"
        if isinstance(f.value, str):
            return f"(const {f.value} {unparse_space(f._cod)})"
        return f"(const {_fmt_num(f.value)} {unparse_space(f._cod)})"
    if isinstance(f, Proj1):
        return "proj1"
    if isinstance(f, Proj2):
        return "proj2"
    if isinstance(f, PairFn):
        return f"(pair {unparse_fn(f.first)} {unparse_fn(f.second)})"
    if isinstance(f, Compose):
        return f"(compose {unparse_fn(f.outer)} {unparse_fn(f.inner)})"
    binops = {Add: "add", Sub: "sub", Mul: "mul", SafeDiv: "div",
              ExtAddFn: "extadd", ExtMulFn: "extmul", ExtDivFn: "extdiv"}
    for cls, name in binops.items():
        if type(f) is cls:
            return f"({name} {unparse_fn(f.left)} {unparse_fn(f.right)})"
    unops = {Neg: "neg", AbsF: "abs", FloorF: "floor", ExpF: "exp",
             LogF: "log", SqrtF: "sqrt", NatOfFloor: "nat-of-floor",
             NatToReal: "nat-to-real"}
    for cls, name in unops.items():
        if type(f) is cls:
            inner = f.operand
            if isinstance(inner, Id):
                return name
            return f"({name} {unparse_fn(inner)})"
    if isinstance(f, Indicator):
        return f"(ind {unparse_set(f.set_expr)})"
    if isinstance(f, RestrictTo):
        return f"(restrict {unparse_set(f.set_expr)})"
    if isinstance(f, IfSet):
        return (
            f"(ifset {unparse_set(f.cond)} {unparse_fn(f.then_fn)} "
            f"{unparse_fn(f.else_fn)})"
        )
    if isinstance(f, ExtLit):
        w = "inf" if f.weight.is_inf else _fmt_num(f.weight.v)
        return f"(extlit {w})"
    if isinstance(f, PdfNormal):
        return f"(pdf-normal {unparse_fn(f.point)} {unparse_fn(f.mean)} {unparse_fn(f.sd)})"
    if isinstance(f, PdfBeta):
        return f"(pdf-beta {unparse_fn(f.point)} {unparse_fn(f.a)} {unparse_fn(f.b)})"
    if isinstance(f, PdfPoisson):
        return f"(pdf-poisson {unparse_fn(f.point)} {unparse_fn(f.rate)})"
    raise Unsupported(f"no surface syntax for {type(f).__name__}")


# ---------------------------------------------------------------------------
# measures


def parse_measure(src_or_sx, space: SpaceExpr = REAL) -> MeasureExpr:
    sx = read_sexpr(src_or_sx) if isinstance(src_or_sx, str) else src_or_sx
    return _parse_measure(sx, space)


def _parse_measure(sx, space) -> MeasureExpr:
    if isinstance(sx, str):
        if sx == "zero":
            return ZeroMeasure(space)
        if sx == "lebesgue":
            return lebesgue()
        raise ProgramSyntaxError(f"unknown measure {sx!r}")
    head = sx[0]
    if head == "dirac":
        value = _num(sx[1]) if _is_num(sx[1]) else sx[1]
        return dirac(value, space)
    if head == "counting-nat":
        if len(sx) == 1 or sx[1] == "all":
            return counting_nat()
        s = parse_set(sx[1], NAT)
        return Weighted(ONE, CountingNat(s))
    if head == "lebesgue":
        if len(sx) == 1:
            return lebesgue()
        return lebesgue(_num(sx[1]), _num(sx[2]))
    if head == "density":
        s = parse_set(sx[1], REAL)
        f = _parse_fn(sx[2], REAL)
        return Weighted(ONE, LebesgueDensity(s, f))
    if head == "uniform":
        return uniform(_num(sx[1]), _num(sx[2]))
    if head == "normal":
        return normal_measure(_num(sx[1]), _num(sx[2]))
    if head == "beta":
        return beta_measure(_num(sx[1]), _num(sx[2]))
    if head == "poisson":
        return poisson_measure(float(_num(sx[1])))
    if head == "scale":
        w = INF if sx[1] == "inf" else as_ext(_num(sx[1]))
        return scale_measure(w, _parse_measure(sx[2], space))
    if head == "sum":
        return sum_measures([_parse_measure(s, space) for s in sx[1:]])
    if head == "seqsum":
        family = sx[1]
        if family == "constant-repeat":
            return constant_repeat(_parse_measure(sx[2], space))
        if family == "geometric-weights":
            return geometric_weights(_num(sx[2]), _parse_measure(sx[3], space))
        raise ProgramSyntaxError(f"unknown lazy family {family!r}")
    raise ProgramSyntaxError(f"unknown measure form {head!r}")


def unparse_measure(mu: MeasureExpr) -> str:
    if isinstance(mu, ZeroMeasure):
        return "zero"
    if isinstance(mu, Weighted):
        body = _unparse_base(mu.base)
        if mu.weight == ONE:
            return body
        w = "inf" if mu.weight.is_inf else _fmt_num(mu.weight.v)
        return f"(scale {w} {body})"
    if isinstance(mu, FiniteSum):
        return "(sum " + " ".join(unparse_measure(p) for p in mu.parts) + ")"
    if isinstance(mu, SeqSum):
        fam = mu.family
        if fam and fam[0] == "const-repeat":
            return f"(seqsum constant-repeat {unparse_measure(fam[1])})"
        if fam and fam[0] == "geometric":
            return f"(seqsum geometric-weights {_fmt_num(fam[1])} {unparse_measure(fam[2])})"
        if fam and fam[0] == "nat-pmf" and isinstance(fam[1], PdfPoisson):
            rate = fam[1].rate
            if isinstance(rate, Const):
                return f"(poisson {_fmt_num(Fraction(rate.value))})"
        raise Unsupported("no surface syntax for this lazy sum")
    raise TypeMismatch(f"not a measure: {mu!r}")


def _unparse_base(b) -> str:
    if isinstance(b, DiracB):
        v = b.point
        if isinstance(v, str):
            return f"(dirac {v})"
        return f"(dirac {_fmt_num(v if isinstance(v, Fraction) else Fraction(v))})"
    if isinstance(b, CountingNat):
        if isinstance(b.set_expr, FullSet):
            return "(counting-nat all)"
        return f"(counting-nat {unparse_set(b.set_expr)})"
    if isinstance(b, CountingFin):
        return f"(counting-fin {unparse_set(b.set_expr)})"
    if isinstance(b, LebesgueDensity):
        if b.density is None:
            if isinstance(b.support, FullSet):
                return "lebesgue"
            from .sets import RealSet

            if (
                isinstance(b.support, RealSet)
                and len(b.support.intervals) == 1
                and not b.support.atoms_in
                and not b.support.atoms_out
            ):
                iv = b.support.intervals[0]
                return f"(lebesgue {_fmt_num(iv.lo)} {_fmt_num(iv.hi)})"
            raise Unsupported("no surface syntax for this support")
        if isinstance(b.density, PdfNormal) and isinstance(b.support, FullSet):
            m, s = b.density.mean, b.density.sd
            if isinstance(m, Const) and isinstance(s, Const):
                return f"(normal {_fmt_num(Fraction(m.value))} {_fmt_num(Fraction(s.value))})"
        if isinstance(b.density, PdfBeta):
            a, bb = b.density.a, b.density.b
            if isinstance(a, Const) and isinstance(bb, Const):
                return f"(beta {_fmt_num(Fraction(a.value))} {_fmt_num(Fraction(bb.value))})"
        return f"(density {unparse_set(b.support)} {unparse_fn(b.density)})"
    raise Unsupported(f"no surface syntax for {type(b).__name__}")


# ---------------------------------------------------------------------------
# kernels


def parse_kernel(src_or_sx, dom: SpaceExpr = UNIT) -> KernelExpr:
    sx = read_sexpr(src_or_sx) if isinstance(src_or_sx, str) else src_or_sx
    return _parse_kernel(sx, dom)


def _parse_kernel(sx, dom) -> KernelExpr:
    if isinstance(sx, str):
        raise ProgramSyntaxError(f"unknown kernel {sx!r}")
    head = sx[0]
    if head == "det":
        return Det(_parse_fn(sx[1], dom))
    if head == "constk":
        if len(sx) == 3:
            dom = parse_space(sx[1])
            return ConstK(dom, _parse_measure(sx[2], REAL))
        return ConstK(dom, _parse_measure(sx[1], REAL))
    if head == "kcompose":
        k = _parse_kernel(sx[1], dom)
        l = _parse_kernel(sx[2], k.cod)
        return ComposeK(k, l)
    if head == "kpush":
        k = _parse_kernel(sx[1], dom)
        return PushK(k, _parse_fn(sx[2], k.cod))
    if head == "kpull":
        f = _parse_fn(sx[1], dom)
        k = _parse_kernel(sx[2], f.cod)
        return PullK(f, k)
    if head == "kscore":
        k = _parse_kernel(sx[1], dom)
        return ScoreK(k, _parse_fn(sx[2], Prod(k.dom, k.cod)))
    if head == "prodl":
        k = _parse_kernel(sx[1], dom)
        l = _parse_kernel(sx[2], Prod(k.dom, k.cod))
        return ProdL(k, l)
    if head == "prodr":
        k = _parse_kernel(sx[1], dom)
        l = _parse_kernel(sx[2], dom)
        return ProdR(k, l)
    if head == "ksum":
        parts = [_parse_kernel(s, dom) for s in sx[1:]]
        return SumK(tuple(parts))
    raise ProgramSyntaxError(f"unknown kernel form {head!r}")


def unparse_kernel(k: KernelExpr) -> str:
    if isinstance(k, Det):
        return f"(det {unparse_fn(k.fn)})"
    if isinstance(k, ConstK):
        if k.dom == UNIT:
            return f"(constk {unparse_measure(k.measure)})"
        return f"(constk {unparse_space(k.dom)} {unparse_measure(k.measure)})"
    if isinstance(k, ComposeK):
        return f"(kcompose {unparse_kernel(k.first)} {unparse_kernel(k.second)})"
    if isinstance(k, PushK):
        return f"(kpush {unparse_kernel(k.kernel)} {unparse_fn(k.fn)})"
    if isinstance(k, PullK):
        return f"(kpull {unparse_fn(k.fn)} {unparse_kernel(k.kernel)})"
    if isinstance(k, ScoreK):
        return f"(kscore {unparse_kernel(k.kernel)} {unparse_fn(k.fn)})"
    if isinstance(k, ProdL):
        return f"(prodl {unparse_kernel(k.first)} {unparse_kernel(k.second)})"
    if isinstance(k, ProdR):
        return f"(prodr {unparse_kernel(k.first)} {unparse_kernel(k.second)})"
    if isinstance(k, SumK):
        return "(ksum " + " ".join(unparse_kernel(p) for p in k.parts) + ")"
    raise Unsupported(f"no surface syntax for {type(k).__name__}")
