"""Command-line front end: configuration, dispatch and file output."""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

from .errors import ConfigError, WhquantError
from .figures import BUILDERS, FIGURE_MAP, Settings, build_fock

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("chi", "mass", "veff", "phase", "traj", "qqdot", "spectrum", "fock", "reproduce-all")

BASE_SECTIONS = {
    "model": ("a", "b", "m0", "L", "V0", "q0"),
    "window": ("sigma_l", "sigma_p", "gamma", "hbar"),
    "grid": ("q_min", "q_max", "n"),
}

# Per-command keys; the value says whether the key takes a comma-separated list.
COMMAND_KEYS = {
    "chi": {"sigma_p": True},
    "mass": {"q0": True, "sigma_p": True},
    "veff": {"sigma_free": True, "sigma": True, "q0": True},
    "phase": {"sigma_free": True, "energy_free": False, "q0": True, "energies": True,
              "gamma_coupled": False, "field_n": False, "p_max": False},
    "qqdot": {"q0": True, "energies": True, "gamma_coupled": False},
    "traj": {"gamma_coupled": False, "dt": False, "steps": False, "q_start": False,
             "traj_energies": True},
    "spectrum": {"spectrum_V0": False, "margin": False, "n_states": False, "min_weight": False,
                 "sizes": True},
    "fock": {"fock_sigma_l": False, "fock_sigma_p": False, "fock_gamma": False, "n_max": False,
             "calibrate_n": False, "strict_closed": False},
}

INT_KEYS = {"n", "field_n", "steps", "n_states", "sizes", "n_max", "calibrate_n"}


def _number(key: str, text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if key in INT_KEYS:
        if not v.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(v)
    return v


def _value(key: str, text: str, is_list: bool):
    if is_list:
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise ConfigError(f"{key}: empty list")
        return tuple(_number(key, t) for t in items)
    return _number(key, text)


def load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if path is None:
        return cp
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    known = set(BASE_SECTIONS) | set(COMMAND_KEYS)
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
        allowed = BASE_SECTIONS.get(sec) or COMMAND_KEYS[sec]
        for key in cp[sec]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
    return cp


def settings_for(cp: configparser.ConfigParser, command: str) -> Settings:
    kw = {}
    types = {f.name: f.type for f in fields(Settings)}
    for sec, keys in BASE_SECTIONS.items():
        if cp.has_section(sec):
            for key in keys:
                if key in cp[sec]:
                    v = _number(key, cp[sec][key])
                    kw[key] = int(v) if types[key] in ("int", int) else float(v)
    extra = {}
    if command in COMMAND_KEYS and cp.has_section(command):
        for key, text in cp[command].items():
            extra[key] = _value(key, text, COMMAND_KEYS[command][key])
    if "n" in kw and kw["n"] < 2:
        raise ConfigError("grid n must be at least 2")
    try:
        return Settings(**kw, extra=extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def run_command(command: str, cp, out: Path, fmt: str) -> list[str]:
    """Compute one command's data and write it under ``out``; return the file names."""
    st = settings_for(cp, command)
    if command == "fock":
        doc = build_fock(st)
        name = "fock_q0.json"
        _write(out / name, json.dumps(doc, indent=1) + "\n")
        return [name]
    tables = BUILDERS[command](st)
    names = []
    for t in tables:
        name = f"{t.name}.{fmt}"
        _write(out / name, t.to_csv() if fmt == "csv" else t.to_json())
        names.append(name)
    return names


def reproduce_all(cp, out: Path, fmt: str, threads: int) -> dict:
    """Run every command; computations fan out over threads, writes stay serial."""
    t0 = time.perf_counter()
    figure_cmds = sorted({cmd for cmd, _ in FIGURE_MAP.values()})
    jobs = [c for c in COMMANDS if c != "reproduce-all"]

    def compute(cmd):
        st = settings_for(cp, cmd)
        return cmd, (build_fock(st) if cmd == "fock" else BUILDERS[cmd](st))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(compute, jobs))
    files = {}
    for cmd, res in results:
        if cmd == "fock":
            _write(out / "fock_q0.json", json.dumps(res, indent=1) + "\n")
            files[cmd] = ["fock_q0.json"]
            continue
        names = []
        for t in res:
            name = f"{t.name}.{fmt}"
            _write(out / name, t.to_csv() if fmt == "csv" else t.to_json())
            names.append(name)
        files[cmd] = names
    figures = {fig: [n for n in files[cmd] if n.startswith(prefixes)]
               for fig, (cmd, prefixes) in FIGURE_MAP.items()}
    manifest = {
        "commands": files,
        "figures": figures,
        "figure_commands": figure_cmds,
        "seconds": round(time.perf_counter() - t0, 3),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="whquant", description="Figure data for truncated-interval quantization.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="INI-style configuration file")
    ap.add_argument("--out", metavar="PATH", default="out", help="output directory (default: out)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--seed", type=int, default=0, help="reserved; all computations are deterministic")
    ap.add_argument("--threads", type=int, default=1, metavar="N")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cp = load_config(args.config)
        out = Path(args.out)
        if args.command == "reproduce-all":
            m = reproduce_all(cp, out, args.format, args.threads)
            print(f"wrote {sum(len(v) for v in m['commands'].values())} files to {out} in {m['seconds']} s")
        else:
            names = run_command(args.command, cp, out, args.format)
            print(f"wrote {len(names)} files to {out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WhquantError as exc:
        code = EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_NUMERIC
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
