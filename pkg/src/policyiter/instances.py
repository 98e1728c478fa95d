"""Seeded random MDPs, the named desk instances and the MDP text format.

Text format (whitespace separated, ``#`` starts a comment)::

    MDP 1
    n k
    gamma num/den
    R s a num/den          # all n*k required
    P s a s' num/den       # sparse; omitted entries are zero
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .mdp import Mdp, validate_mdp
from .rng import Rng

MAGIC = "MDP"
VERSION = "1"
FLOAT_MAGIC = "MDP-FLOAT"


class MdpFormatError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class GenSpec:
    n: int
    k: int
    seed: int = 0
    gamma: Fraction = Fraction(9, 10)
    density: Fraction = Fraction(1, 2)
    reward_lo: int = -10
    reward_hi: int = 10
    reward_den: int = 1
    max_weight: int = 9

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "density", Fraction(self.density))
        if self.n < 1 or self.k < 1:
            raise ValueError("n and k must be >= 1")
        if not (0 <= self.gamma < 1):
            raise ValueError("gamma must be in [0, 1)")
        if not (0 < self.density <= 1):
            raise ValueError("density must be in (0, 1]")
        if self.reward_lo > self.reward_hi or self.reward_den < 1:
            raise ValueError("bad reward grid")
        if self.max_weight < 1:
            raise ValueError("max_weight must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "GenSpec":
        """Parse ``n=4,k=2,seed=7,gamma=9/10,density=1/2,rewards=-10..10/1``."""
        kw = {}
        for item in filter(None, (p.strip() for p in text.split(","))):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {item!r}")
            key = key.strip()
            if key in ("n", "k", "seed", "max_weight"):
                kw[key] = int(val)
            elif key in ("gamma", "density"):
                kw[key] = Fraction(val)
            elif key == "rewards":
                m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)(?:/(\d+))?", val.strip())
                if not m:
                    raise ValueError(f"rewards must look like lo..hi[/den], got {val!r}")
                kw["reward_lo"], kw["reward_hi"] = int(m[1]), int(m[2])
                kw["reward_den"] = int(m[3] or 1)
            else:
                raise ValueError(f"unknown generator key {key!r}")
        if "n" not in kw or "k" not in kw:
            raise ValueError("generator spec needs n and k")
        return cls(**kw)


def random_mdp(spec: GenSpec) -> Mdp:
    """Draw an exact MDP; rows are integer weights over their common sum."""
    rng = Rng(spec.seed)
    n, k = spec.n, spec.k
    dn, dd = spec.density.numerator, spec.density.denominator
    P, R = [], []
    for s in range(n):
        ps, rs = [], []
        for a in range(k):
            weights = [rng.below(spec.max_weight) + 1 if rng.bernoulli(dn, dd) else 0 for _ in range(n)]
            if not any(weights):
                weights[rng.below(n)] = rng.below(spec.max_weight) + 1
            total = sum(weights)
            ps.append([Fraction(w, total) for w in weights])
            span = spec.reward_hi - spec.reward_lo + 1
            rs.append(Fraction(spec.reward_lo + rng.below(span), spec.reward_den))
        P.append(ps)
        R.append(rs)
    return Mdp(P=P, R=R, gamma=spec.gamma)


# Reserved for the exponential sequential-PI family; its construction is not
# available to us, so asking for it fails loudly.
RESERVED_INSTANCES = ("melekopoglou-condon",)


def builtin_instance(name: str) -> Mdp:
    half = Fraction(1, 2)
    if name == "M2":
        # state 0: a0 stays (r=0), a1 goes to 1 (r=0); state 1: a0 stays (r=1), a1 goes to 0 (r=0)
        P = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
        R = [[0, 0], [1, 0]]
    elif name == "M2c":
        P = [[[1, 0], [1, 0]], [[0, 1], [0, 1]]]
        R = [[1, 0], [0, 1]]
    elif name in RESERVED_INSTANCES:
        raise NotImplementedError(f"instance {name!r} is reserved but not implemented")
    else:
        raise KeyError(f"unknown builtin instance {name!r}; choose from M2, M2c")
    return Mdp.exact(P, R, half)


def _fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def serialize_mdp(mdp: Mdp) -> str:
    """Render an MDP in the text format.

    Float MDPs are written under a separate magic for export only;
    :func:`parse_mdp` refuses them.
    """
    exact = mdp.is_exact
    fmt = _fmt if exact else repr
    lines = [f"{MAGIC if exact else FLOAT_MAGIC} {VERSION}", f"{mdp.n} {mdp.k}", f"gamma {fmt(mdp.gamma)}"]
    for s in range(mdp.n):
        for a in range(mdp.k):
            lines.append(f"R {s} {a} {fmt(mdp.R[s][a])}")
    for s in range(mdp.n):
        for a in range(mdp.k):
            for t, p in enumerate(mdp.P[s][a]):
                if p != 0:
                    lines.append(f"P {s} {a} {t} {fmt(p)}")
    return "\n".join(lines) + "\n"


_RATIONAL = re.compile(r"[+-]?\d+(?:/\d+)?")


def _rational(tok: str, line: int) -> Fraction:
    if not _RATIONAL.fullmatch(tok):
        raise MdpFormatError(f"expected num/den rational, got {tok!r}", line)
    try:
        return Fraction(tok)
    except ZeroDivisionError:
        raise MdpFormatError(f"zero denominator in {tok!r}", line) from None


def _index(tok: str, bound: int, what: str, line: int) -> int:
    if not tok.isdigit():
        raise MdpFormatError(f"expected {what} index, got {tok!r}", line)
    i = int(tok)
    if i >= bound:
        raise MdpFormatError(f"{what} index {i} out of range 0..{bound - 1}", line)
    return i


def parse_mdp(text: str) -> Mdp:
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if toks:
            records.append((lineno, toks))
    if not records:
        raise MdpFormatError("empty input")

    lineno, toks = records[0]
    if toks[0] == FLOAT_MAGIC:
        raise MdpFormatError("float MDP files are export-only and cannot be parsed", lineno)
    if toks != [MAGIC, VERSION]:
        raise MdpFormatError(f"expected header '{MAGIC} {VERSION}'", lineno)
    if len(records) < 3:
        raise MdpFormatError("missing size or gamma line")

    lineno, toks = records[1]
    if len(toks) != 2 or not all(t.isdigit() for t in toks):
        raise MdpFormatError("expected 'n k'", lineno)
    n, k = int(toks[0]), int(toks[1])
    if n < 1 or k < 1:
        raise MdpFormatError("n and k must be >= 1", lineno)

    lineno, toks = records[2]
    if len(toks) != 2 or toks[0] != "gamma":
        raise MdpFormatError("expected 'gamma num/den'", lineno)
    gamma = _rational(toks[1], lineno)
    if not (0 <= gamma < 1):
        raise MdpFormatError(f"gamma {gamma} outside [0, 1)", lineno)

    R = [[None] * k for _ in range(n)]
    P = [[[Fraction(0)] * n for _ in range(k)] for _ in range(n)]
    seen_p = set()
    for lineno, toks in records[3:]:
        kind = toks[0]
        if kind == "R":
            if len(toks) != 4:
                raise MdpFormatError("expected 'R s a num/den'", lineno)
            s, a = _index(toks[1], n, "state", lineno), _index(toks[2], k, "action", lineno)
            if R[s][a] is not None:
                raise MdpFormatError(f"duplicate entry R {s} {a}", lineno)
            R[s][a] = _rational(toks[3], lineno)
        elif kind == "P":
            if len(toks) != 5:
                raise MdpFormatError("expected 'P s a s' num/den'", lineno)
            s = _index(toks[1], n, "state", lineno)
            a = _index(toks[2], k, "action", lineno)
            t = _index(toks[3], n, "state", lineno)
            if (s, a, t) in seen_p:
                raise MdpFormatError(f"duplicate entry P {s} {a} {t}", lineno)
            seen_p.add((s, a, t))
            p = _rational(toks[4], lineno)
            if not (0 <= p <= 1):
                raise MdpFormatError(f"probability {p} outside [0, 1]", lineno)
            P[s][a][t] = p
        else:
            raise MdpFormatError(f"unknown directive {kind!r}", lineno)

    missing = [(s, a) for s in range(n) for a in range(k) if R[s][a] is None]
    if missing:
        raise MdpFormatError(f"missing reward lines for {missing}")
    for s in range(n):
        for a in range(k):
            total = sum(P[s][a])
            if total != 1:
                raise MdpFormatError(f"P row (s={s},a={a}) sums to {total}, expected 1")
    mdp = Mdp(P=P, R=R, gamma=gamma)
    problems = validate_mdp(mdp)
    if problems:
        raise MdpFormatError("; ".join(problems))
    return mdp
