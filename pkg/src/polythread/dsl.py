"""Text forms: an s-expression syntax for threads and JSON vector configs.

Thread syntax::

    S  D  extern  X                      leaves and recursion variables
    (pcc f.m t1 t2)  (pcc tau t1 t2)     postconditional composition
    (tau t)  (do f.m t)                  prefix forms (both branches equal)
    (pcs f.m t1 ... tk)                  postconditional switch
    (switch i)  (mig n t1 t2)  (choice t1 ... tk)
    (rec X (X t) (Y u) ...)              <X | X = t, Y = u, ...>

``;`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import json
import re

from .distributed import Site
from .errors import TermError
from .fragsearch import FsSite
from .terms import (
    D, EXTERN, TAU, Basic, Choice, Deadlock, ExternSwitch, Mig, Pcc, Pcs, RecRef,
    RecSpec, S, Stop, Switch, Tau, Thread, Var, free_vars,
)

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_ACTION = re.compile(r"([a-z0-9_]+)\.([a-z0-9_]+)\Z")
_NAT = re.compile(r"\d+\Z")


def _tokens(text: str) -> list:
    code = "\n".join(line.split(";", 1)[0] for line in text.splitlines())
    return _TOKEN.findall(code)


def _read(tokens: list, i: int):
    """Token list -> nested lists of atoms."""
    if i >= len(tokens):
        raise TermError("unexpected end of input")
    tok = tokens[i]
    if tok == ")":
        raise TermError("unexpected ')'")
    if tok != "(":
        return tok, i + 1
    items = []
    i += 1
    while True:
        if i >= len(tokens):
            raise TermError("missing ')'")
        if tokens[i] == ")":
            return items, i + 1
        item, i = _read(tokens, i)
        items.append(item)


def parse_action(text: str):
    if text == "tau":
        return TAU
    m = _ACTION.match(text)
    if not m:
        raise TermError(f"bad action {text!r}")
    return Basic(m.group(1), m.group(2))


def _nat(text) -> int:
    if not isinstance(text, str) or not _NAT.match(text):
        raise TermError(f"expected a natural number, got {text!r}")
    return int(text)


def _arity(form, n, head):
    if len(form) != n:
        raise TermError(f"({head} ...) takes {n - 1} arguments")


def _build(form) -> Thread:
    if isinstance(form, str):
        if form == "S":
            return S
        if form == "D":
            return D
        if form == "extern":
            return EXTERN
        if form[:1].isupper():
            return Var(form)
        raise TermError(f"unknown thread {form!r}")
    if not form or not isinstance(form[0], str):
        raise TermError("a compound thread starts with its operator name")
    head, args = form[0], form[1:]
    if head == "pcc":
        _arity(form, 4, head)
        return Pcc(parse_action(args[0]), _build(args[1]), _build(args[2]))
    if head == "tau":
        _arity(form, 2, head)
        x = _build(args[0])
        return Pcc(TAU, x, x)
    if head == "do":
        _arity(form, 3, head)
        x = _build(args[1])
        return Pcc(parse_action(args[0]), x, x)
    if head == "pcs":
        if len(args) < 2:
            raise TermError("(pcs a t1 ...) needs at least one branch")
        return Pcs(parse_action(args[0]), tuple(_build(b) for b in args[1:]))
    if head == "switch":
        _arity(form, 2, head)
        return Switch(_nat(args[0]))
    if head == "mig":
        _arity(form, 4, head)
        return Mig(_nat(args[0]), _build(args[1]), _build(args[2]))
    if head == "choice":
        if not args:
            raise TermError("(choice ...) needs at least one branch")
        return Choice(tuple(_build(b) for b in args))
    if head == "rec":
        if len(args) < 2 or not isinstance(args[0], str):
            raise TermError("(rec X (X t) ...) needs a variable and equations")
        eqs = []
        for eq in args[1:]:
            if not isinstance(eq, list) or len(eq) != 2 or not isinstance(eq[0], str):
                raise TermError("a recursion equation has the form (X t)")
            eqs.append((eq[0], _build(eq[1])))
        return RecRef(args[0], RecSpec(tuple(eqs)))
    raise TermError(f"unknown operator {head!r}")


def parse_thread(text: str) -> Thread:
    """Parse one closed thread."""
    tokens = _tokens(text)
    if not tokens:
        raise TermError("empty thread text")
    form, end = _read(tokens, 0)
    if end != len(tokens):
        raise TermError("trailing input after thread")
    t = _build(form)
    free = free_vars(t)
    if free:
        raise TermError(f"free recursion variable {min(free)}")
    return t


def format_action(a) -> str:
    return "tau" if isinstance(a, Tau) else str(a)


def format_thread(t: Thread) -> str:
    """Inverse of ``parse_thread`` for plain terms."""
    if isinstance(t, Stop):
        return "S"
    if isinstance(t, Deadlock):
        return "D"
    if isinstance(t, ExternSwitch):
        return "extern"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Switch):
        return f"(switch {t.index})"
    if isinstance(t, Pcc):
        a = format_action(t.action)
        if t.pos == t.neg:
            if isinstance(t.action, Tau):
                return f"(tau {format_thread(t.pos)})"
            return f"(do {a} {format_thread(t.pos)})"
        return f"(pcc {a} {format_thread(t.pos)} {format_thread(t.neg)})"
    if isinstance(t, Pcs):
        body = " ".join(format_thread(b) for b in t.branches)
        return f"(pcs {format_action(t.action)} {body})"
    if isinstance(t, Mig):
        return f"(mig {t.target} {format_thread(t.pos)} {format_thread(t.neg)})"
    if isinstance(t, Choice):
        return "(choice " + " ".join(format_thread(b) for b in t.branches) + ")"
    if isinstance(t, RecRef):
        eqs = " ".join(f"({n} {format_thread(b)})" for n, b in t.spec.equations)
        return f"(rec {t.name} {eqs})"
    raise TermError(f"no text form for {type(t).__name__}")


# -- vector configs ----------------------------------------------------------


def _json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise TermError(f"bad JSON: {e}") from None


def _threads(items, what) -> tuple:
    if not isinstance(items, list) or not all(isinstance(x, str) for x in items):
        raise TermError(f"{what} must be a list of thread texts")
    return tuple(parse_thread(x) for x in items)


def parse_thread_vector(text: str) -> tuple:
    """A JSON list of thread texts."""
    return _threads(_json(text), "a thread vector")


def format_thread_vector(ts) -> str:
    return json.dumps([format_thread(t) for t in ts], indent=2)


def _entries(data):
    """Accept a bare entry list or {"locations": [...], "entries": [...]}."""
    locations = None
    if isinstance(data, dict):
        locations = data.get("locations")
        data = data.get("entries")
        if locations is not None:
            if not isinstance(locations, list) or not all(
                    isinstance(l, int) and not isinstance(l, bool) and l >= 0 for l in locations):
                raise TermError("locations must be a list of natural numbers")
            locations = frozenset(locations)
    if not isinstance(data, list):
        raise TermError("a distributed vector config is a list of entries")
    for e in data:
        if not isinstance(e, dict) or "location" not in e:
            raise TermError(f"bad entry {e!r}")
        l = e["location"]
        if not isinstance(l, int) or isinstance(l, bool) or l < 0:
            raise TermError(f"bad location {l!r}")
        if locations is not None and l not in locations:
            raise TermError(f"location {l} is not in the configured location set")
    return data, locations


def parse_dist_vector(text: str) -> tuple:
    """DistVec config -> (entries, configured locations or None)."""
    data, locations = _entries(_json(text))
    delta = tuple(Site(e["location"], _threads(e.get("threads", []), "threads")) for e in data)
    return delta, locations


def parse_fs_vector(text: str) -> tuple:
    """FsDistVec config -> (entries, configured locations or None, n).

    ``n`` (the number of fragment indices) is taken from the config's
    ``"n"`` field when present and otherwise from the largest index seen.
    """
    raw = _json(text)
    n = raw.get("n") if isinstance(raw, dict) else None
    data, locations = _entries(raw)
    out = []
    for e in data:
        frags = e.get("fragments", [])
        if not isinstance(frags, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in frags):
            raise TermError("fragments must be a list of integers")
        out.append(FsSite(e["location"], _threads(e.get("threads", []), "threads"),
                          frozenset(frags)))
    largest = max((max(s.fragments) for s in out if s.fragments), default=0)
    if n is None:
        n = largest
    elif not isinstance(n, int) or isinstance(n, bool) or n < largest:
        raise TermError(f"n={n!r} is smaller than a listed fragment index")
    return tuple(out), locations, n


def format_dist_vector(delta, locations=None) -> str:
    entries = []
    for s in delta:
        e = {"location": s.location, "threads": [format_thread(t) for t in s.threads]}
        if isinstance(s, FsSite):
            e["fragments"] = sorted(s.fragments)
        entries.append(e)
    if locations is None:
        return json.dumps(entries, indent=2)
    return json.dumps({"locations": sorted(locations), "entries": entries}, indent=2)
