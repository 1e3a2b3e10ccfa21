"""Command-line entry point: ``check``, ``run`` and ``simulate``.

Exit codes: 0 success, 1 diagnostics, 2 runtime failure, 3 I/O or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

from .errors import LangError, ScenarioError, SemaError, SourceError
from .frontend import parse_source
from .frontend.nodes import Program
from .sema import check_program, collect_diagnostics, types as t
from .values import Aid, decode_canonical

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3
TRACE_ENV = "PERCEPTLANG_TRACE"

log = logging.getLogger("perceptlang")


class ConfigError(Exception):
    """Bad flags or unreadable files; maps to exit code 3."""


# -- helpers ----------------------------------------------------------------


def _load(paths) -> Program:
    program = Program(None, [])
    for path in paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
        program = program.merged(parse_source(text, str(path)))
    return program


def _print_diagnostics(diags, stream) -> None:
    for d in diags:
        print(d.render(), file=stream)


@contextmanager
def _trace_sink(path: Optional[str]):
    path = os.environ.get(TRACE_ENV) or path
    if path in (None, "", "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open trace file {path}: {exc.strerror or exc}") from None
    with fh:
        yield fh


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def convert_arg(raw: str, ty, table, platform_id: str):
    """Turn the text of ``--arg name=value`` into a value of type ``ty``."""
    if ty == t.TEXT:
        return raw
    if ty == t.AID:
        return Aid.parse(raw, platform_id)
    if ty == t.INTEGER:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}") from None
    if ty in (t.FLOAT, t.DOUBLE):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}") from None
    if ty == t.BOOLEAN:
        if raw not in ("true", "false"):
            raise ConfigError(f"expected true or false, got {raw!r}")
        return raw == "true"
    try:
        return decode_canonical(raw, table, ty)
    except LangError as exc:
        raise ConfigError(f"cannot read {raw!r} as {ty}: {exc}") from None


def parse_kv(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}")
        out[name] = value
    return out


def default_local_name(type_name: str) -> str:
    """``ShapeProvider`` -> ``provider``: the last CamelCase word, lowercased."""
    words = re.findall(r"[A-Z][a-z0-9]*|[a-z0-9]+", type_name)
    return (words[-1] if words else type_name).lower()


def _spawn_plan(typed, entry: str, entry_name: Optional[str], spawns) -> list[tuple[str, str]]:
    if entry not in typed.agents:
        raise ConfigError(f"unknown entry agent type '{entry}'")
    plan = []
    if spawns:
        for item in spawns:
            local, sep, type_name = item.partition(":")
            if not sep or not local or not type_name:
                raise ConfigError(f"expected NAME:TYPE, got {item!r}")
            if type_name not in typed.agents:
                raise ConfigError(f"unknown agent type '{type_name}'")
            plan.append((local, type_name))
    else:
        # Every other agent type that needs no on-create arguments.
        for name, info in typed.agents.items():
            if name != entry and not info.create_params:
                plan.append((default_local_name(name), name))
    plan.append((entry_name or default_local_name(entry), entry))
    locals_ = [p[0] for p in plan]
    dup = {n for n in locals_ if locals_.count(n) > 1}
    if dup:
        raise ConfigError(f"agent name(s) used twice: {', '.join(sorted(dup))}; use --spawn or --name")
    return plan


# -- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    start = time.perf_counter()
    program = _load(args.files)
    diags = collect_diagnostics(program, str(args.files[0]))
    _print_diagnostics(diags, sys.stderr)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        return EXIT_DIAGNOSTICS
    if not args.quiet:
        print(f"ok: {len(args.files)} file(s), {len(program.decls)} declaration(s) in {time.perf_counter() - start:.3f}s")
    return EXIT_OK


def _wait_quiet(agents, timeout: float) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if all(not a.alive or (a.state.name == "WAITING" and not a.has_runnable_work()) for a in agents):
            return
        time.sleep(0.01)


def cmd_run(args) -> int:
    from .platform import Platform, RemoteContainer
    from .runtime import Trace

    if args.mode == "deterministic" and (args.seed is None or args.max_steps is None):
        raise ConfigError("deterministic mode requires --seed and --max-steps")
    if args.connect and args.mode == "deterministic":
        raise ConfigError("--connect runs in live mode only")
    program = _load(args.files)
    typed = check_program(program, file=str(args.files[0]))
    plan = _spawn_plan(typed, args.entry, args.name, args.spawn)
    raw_args = parse_kv(args.arg)
    deterministic = args.mode == "deterministic"
    with _trace_sink(args.trace_out) as sink:
        trace = Trace(sink)
        if args.connect:
            host = RemoteContainer(args.container, args.platform_id, program=typed, trace=trace)
            try:
                host.attach(parse_endpoint(args.connect))
            except LangError as exc:
                raise ConfigError(str(exc)) from None
        else:
            host = Platform(args.platform_id, deterministic=deterministic, program=typed, trace=trace)
            if args.listen:
                bound = host.listen(*parse_endpoint(args.listen))
                print(f"listening on {bound[0]}:{bound[1]}", file=sys.stderr)
        agents = []
        try:
            for local, type_name in plan:
                spawn_args = {}
                if type_name == args.entry:
                    params = dict(typed.agents[type_name].create_params)
                    unknown = set(raw_args) - set(params)
                    if unknown:
                        raise ConfigError(f"{type_name} has no on-create parameter(s) {', '.join(sorted(unknown))}")
                    spawn_args = {k: convert_arg(v, params[k], typed.table, args.platform_id) for k, v in raw_args.items()}
                agents.append(host.spawn(type_name, local, spawn_args))
            if deterministic:
                host.run(args.max_steps)
            else:
                _wait_quiet(agents, args.timeout)
        except ConfigError:
            raise
        except LangError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        finally:
            if isinstance(host, RemoteContainer):
                host.detach()
            else:
                host.shutdown()
        failures = [e for a in agents for e in a.handler_errors]
    for msg in failures:
        print(f"handler error: {msg}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


def cmd_simulate(args) -> int:
    from .robosim import Mission, load_scenario, parse_injections
    from .runtime import Trace

    cfg = load_scenario(args.scenario)
    if args.inject:
        cfg.injections.extend(parse_injections(args.inject))
    if args.inject_file:
        try:
            lines = Path(args.inject_file).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.inject_file}: {exc.strerror or exc}") from None
        cfg.injections.extend(parse_injections(lines))
    cfg.validate()
    with _trace_sink(args.trace_out) as sink:
        mission = Mission(cfg, args.seed, deterministic=args.mode == "deterministic", trace=Trace(sink))
        result = mission.run(args.max_steps)
    report = result.report()
    if args.report_out:
        try:
            Path(args.report_out).write_text(report + "\n" + result.truth.to_text(), encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot write {args.report_out}: {exc.strerror or exc}") from None
    else:
        sys.stderr.write(report)
    return EXIT_RUNTIME if result.handler_errors else EXIT_OK


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perceptlang", description="Check and run agent programs.")
    p.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="type-check source files")
    c.add_argument("files", nargs="+", type=Path)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="spawn agents and run them")
    r.add_argument("files", nargs="+", type=Path)
    r.add_argument("--entry", required=True, help="agent type to spawn with --arg values")
    r.add_argument("--name", help="local name of the entry agent")
    r.add_argument("--arg", action="append", metavar="NAME=VALUE", help="on-create argument of the entry agent")
    r.add_argument("--spawn", action="append", metavar="NAME:TYPE", help="extra agent without arguments")
    r.add_argument("--mode", choices=("live", "deterministic"), default="deterministic")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-steps", type=int, default=1000)
    r.add_argument("--timeout", type=float, default=5.0, help="live mode: seconds to wait for quiescence")
    r.add_argument("--trace-out", help="trace file, '-' for stdout")
    r.add_argument("--platform-id", default="p1")
    r.add_argument("--container", default="c1", help="container name used with --connect")
    g = r.add_mutually_exclusive_group()
    g.add_argument("--listen", metavar="HOST:PORT")
    g.add_argument("--connect", metavar="HOST:PORT")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="run the RoboMe corridor mission")
    s.add_argument("--scenario", type=Path, help="scenario file (default: packaged corridor)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-steps", type=int, default=6000)
    s.add_argument("--mode", choices=("live", "deterministic"), default="deterministic")
    s.add_argument("--inject", action="append", metavar="'at T [inject] PERCEPT [priority K]'")
    s.add_argument("--inject-file", type=Path)
    s.add_argument("--trace-out", help="trace file, '-' for stdout")
    s.add_argument("--report-out", help="score report and ground truth (default: stderr)")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SemaError as exc:
        _print_diagnostics(exc.diagnostics, sys.stderr)
        return EXIT_DIAGNOSTICS
    except SourceError as exc:
        print(exc, file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except LangError as exc:
        # Scenario problems are configuration errors; the rest happen at run time.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, ScenarioError) else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
