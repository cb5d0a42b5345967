"""Command-line interface: ``polythread <command> ...``.

Exit status: 0 success, 1 law failure, 2 usage or parse error,
3 runtime error (unresolved choice, unserved focus, state overflow, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import axioms
from .acp import TranslationError, pretty_spec, transition_dump, translate_service, translate_thread
from .distributed import pci_d
from .dsl import (
    format_thread, format_thread_vector, parse_dist_vector, parse_fs_vector, parse_thread,
    parse_thread_vector,
)
from .errors import ExecutionError, PolythreadError, StateOverflow, TermError
from .fragsearch import pci_fs
from .interleave import pci
from .polythreading import internalize, internalize_binary
from .progfrag import Architecture, extract, load_fragments, parse_program, run_architecture
from .runtime import ReplySource, Resolver, Trace
from .services import builtin_service, format_reply, load_services

SEED_ENV = "POLYTHREAD_SEED"

log = logging.getLogger("polythread")


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _resolver(spec: str | None) -> Resolver | None:
    if spec is None:
        return None
    if spec.strip() == "seed":
        return Resolver(seed=default_seed())
    return Resolver.parse(spec)


def _replies(args, services=None) -> ReplySource:
    script = [s for s in args.replies.split(",") if s.strip()] if args.replies else None
    return ReplySource(script=script, services=services, seed=args.reply_seed)


def _emit(trace: Trace, fmt: str):
    if fmt == "json":
        print(json.dumps(trace.to_json(), indent=2, sort_keys=True))
        return
    for n, step in enumerate(trace.steps, 1):
        line = f"{n:4d}  {step.action}"
        if step.reply is not None:
            line += f"  -> {format_reply(step.reply)}"
        origin = getattr(step.bare, "origin", None)
        if origin is not None:
            line += f"  ({origin} processed)"
        print(line)
    print(trace.outcome)


def _fragments_json(path: str | None) -> tuple:
    return parse_thread_vector(_read(path)) if path else ()


def _thread_arg(args) -> object:
    if args.thread is not None:
        return parse_thread(args.thread)
    if args.thread_file is not None:
        return parse_thread(_read(args.thread_file))
    raise UsageError("give --thread or --thread-file")


# -- commands ----------------------------------------------------------------


def cmd_run(args):
    program = parse_program(_read(args.program))
    frags = load_fragments(args.fragments) if args.fragments else ()
    services = load_services(_read(args.services)) if args.services else {}
    arch = Architecture(program, frags, services, _resolver(args.resolver), _replies(args))
    _emit(run_architecture(arch, args.max_steps), args.format)
    return 0


def cmd_interleave(args):
    beta = parse_thread_vector(_read(args.threads))
    trace = pci(beta, _fragments_json(args.fragments), _resolver(args.resolver),
                args.max_steps, _replies(args))
    _emit(trace, args.format)
    return 0


def cmd_distribute(args):
    delta, locs = parse_dist_vector(_read(args.config))
    trace = pci_d(delta, _fragments_json(args.fragments), _resolver(args.resolver),
                  args.max_steps, _replies(args), locations=locs)
    _emit(trace, args.format)
    return 0


def cmd_fragsearch(args):
    delta, locs, _n = parse_fs_vector(_read(args.config))
    trace = pci_fs(delta, _fragments_json(args.fragments), _resolver(args.resolver),
                   args.max_steps, _replies(args), locations=locs)
    _emit(trace, args.format)
    return 0


def cmd_internalize(args):
    p = _thread_arg(args)
    ps = _fragments_json(args.fragments)
    q, qs = (internalize_binary if args.binary else internalize)(p, ps)
    print(format_thread(q))
    print(format_thread_vector(qs))
    return 0


def cmd_translate(args):
    if args.service:
        params = json.loads(args.params) if args.params else None
        svc = builtin_service(args.service, params)
        methods = [m for m in (args.methods or "").split(",") if m]
        p = translate_service(svc, methods or ["m"], args.limit)
    else:
        p = translate_thread(_thread_arg(args), _fragments_json(args.fragments),
                             tls_as_basic=args.tls_as_basic)
    print(transition_dump(p, args.limit) if args.dump else pretty_spec(p))
    return 0


def cmd_check_axioms(args):
    seed = args.seed if args.seed is not None else default_seed()
    results, secs = axioms.timed_suite(args.suite, args.cases, seed)
    for r in results:
        status = "pass" if r.ok else "FAIL"
        print(f"{r.name:<16} {status}  {r.passed}/{r.passed + r.failed}")
        for f in r.failures:
            print(f"    {f}")
    bad = sum(not r.ok for r in results)
    print(f"{len(results) - bad}/{len(results)} laws pass in {secs:.1f}s (seed {seed})")
    return 0 if bad == 0 else 1


def cmd_extract(args):
    print(format_thread(extract(parse_program(_read(args.program)))))
    return 0


# -- parser ------------------------------------------------------------------


def _sim_flags(p):
    p.add_argument("--resolver", help="script:1,0,2 | seed:N | seed | interactive")
    p.add_argument("--replies", help="comma-separated reply script, e.g. T,F,2")
    p.add_argument("--reply-seed", type=int, help="seed for replies not otherwise determined")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--format", choices=("json", "text"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polythread", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a program with fragments and services")
    p.add_argument("--program", required=True)
    p.add_argument("--fragments", help="directory of *.is files or one file")
    p.add_argument("--services", help="JSON service config")
    _sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("interleave", help="cyclic interleaving of a thread vector")
    p.add_argument("--threads", required=True, help="JSON list of threads")
    p.add_argument("--fragments", help="JSON list of fragment threads")
    _sim_flags(p)
    p.set_defaults(func=cmd_interleave)

    p = sub.add_parser("distribute", help="distributed interleaving")
    p.add_argument("--config", required=True, help="distributed vector JSON")
    p.add_argument("--fragments", help="JSON list of fragment threads")
    _sim_flags(p)
    p.set_defaults(func=cmd_distribute)

    p = sub.add_parser("fragsearch", help="distributed interleaving with fragment searching")
    p.add_argument("--config", required=True, help="vector JSON with fragment sets")
    p.add_argument("--fragments", help="JSON list of fragment threads")
    _sim_flags(p)
    p.set_defaults(func=cmd_fragsearch)

    for name, fn, hlp in (("internalize", cmd_internalize, "replace external selection"),
                          ("translate", cmd_translate, "print the process translation")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--thread")
        p.add_argument("--thread-file")
        p.add_argument("--fragments", help="JSON list of fragment threads")
        p.set_defaults(func=fn)
        if name == "internalize":
            p.add_argument("--binary", action="store_true", help="use the halving selector")
        else:
            p.add_argument("--service", help="builtin service kind instead of a thread")
            p.add_argument("--params", help="JSON parameters for --service")
            p.add_argument("--methods", help="comma-separated methods for --service")
            p.add_argument("--tls-as-basic", action="store_true")
            p.add_argument("--dump", action="store_true", help="JSON transition system")
            p.add_argument("--limit", type=int, default=10_000)

    p = sub.add_parser("check-axioms", help="run the randomized law suites")
    p.add_argument("--suite", default="all", choices=axioms.suite_names())
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_check_axioms)

    p = sub.add_parser("extract", help="print the thread of an instruction sequence")
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_extract)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, TermError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ExecutionError, StateOverflow, TranslationError, PolythreadError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
