"""Command-line front end and flat key = value configuration files.

Subcommands: solve-one, scf, compare-nucleus, export-wf, gen-basis.
Exit codes: 0 success, 2 configuration or parse error, 3 numerical or
conditioning error, 4 SCF non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .angular import AngularSymmetry, L_LETTERS
from .basis import (
    BasisFormatError,
    even_tempered_shells,
    parse_basis_file,
    serialize_basis,
)
from .dirac_one import (
    SPEED_OF_LIGHT,
    SpectrumSplitError,
    SupercriticalError,
    solve_block,
    sommerfeld_energy,
)
from .integrals import ConditioningError, IntegralError, SlaterCache
from .nucleus import eta_from_rms, gaussian_nucleus, point_nucleus, rms_radius_bohr
from .properties import (
    default_grid,
    nucleus_comparison_report,
    orbital_functions,
    radial_functions_on_grid,
)
from .scf import (
    AtomSpec,
    Occupation,
    ScfOptions,
    VariationalCollapseError,
    aufbau_occupations,
    run_scf,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NONCONVERGED = 4


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    """Ten significant digits, the table precision used throughout."""
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# configuration


def parse_key_values(text: str) -> dict[str, str]:
    """Flat `key = value` lines with dotted keys; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    Z: float = 0.0
    mass_number: float | None = None
    nucleus_model: str = "point"
    eta_override: float | None = None
    c: float = SPEED_OF_LIGHT
    basis_file: str | None = None
    et_alpha: float | None = None
    et_beta: float | None = None
    et_counts: dict[int, int] = field(default_factory=dict)
    occupations: str = "aufbau"
    electrons: int | None = None
    kappas: tuple[int, ...] = (-1,)
    max_iter: int = 200
    e_tol: float = 1e-9
    d_tol: float = 1e-7
    damping: float = 0.4
    level_shift: float = 0.0
    lindep_threshold: float = 1e-12
    threads: int = 1
    grid_points: int = 600
    grid_r_min: float = 1e-7
    grid_r_max: float = 10.0
    out_dir: str = "."
    raw: dict[str, str] = field(default_factory=dict)


def _parse_occupation_token(token: str) -> Occupation:
    # e.g. "2p-:4" -> n=2, l=1, j=1/2 shell holding 4 electrons
    label, _, count = token.partition(":")
    if not count:
        raise ConfigError(f"occupation {token!r} needs a :count")
    label = label.strip()
    minus = label.endswith("-")
    if minus:
        label = label[:-1]
    n = int(label[:-1])
    letter = label[-1].lower()
    if letter not in L_LETTERS:
        raise ConfigError(f"unknown shell letter in {token!r}")
    l = L_LETTERS.index(letter)
    if l == 0:
        if minus:
            raise ConfigError("s shells have no minus branch")
        kappa = -1
    else:
        kappa = l if minus else -(l + 1)
    return Occupation(n, AngularSymmetry(kappa), float(count))


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    kv = parse_key_values(text)
    cfg = RunConfig(raw=dict(kv))

    def take(key, cast=str, default=None):
        if key in kv:
            try:
                return cast(kv.pop(key))
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        return default

    cfg.Z = take("element.Z", float, 0.0)
    if cfg.Z <= 0:
        raise ConfigError("element.Z must be set and positive")
    cfg.mass_number = take("element.mass_number", float)
    cfg.nucleus_model = take("nucleus.model", str, "point").lower()
    if cfg.nucleus_model not in ("point", "gaussian"):
        raise ConfigError(f"nucleus.model must be point|gaussian")
    cfg.eta_override = take("nucleus.eta_override", float)
    if cfg.eta_override is not None and cfg.nucleus_model != "gaussian":
        raise ConfigError("nucleus.eta_override requires nucleus.model = gaussian")
    cfg.c = take("c", float, SPEED_OF_LIGHT)

    cfg.basis_file = take("basis.source", str)
    cfg.et_alpha = take("basis.even_tempered.alpha", float)
    cfg.et_beta = take("basis.even_tempered.beta", float)
    for l, letter in enumerate(L_LETTERS[:5]):
        count = take(f"basis.even_tempered.count.{letter}", int)
        if count is not None:
            cfg.et_counts[l] = count
    have_et = cfg.et_alpha is not None or cfg.et_beta is not None or cfg.et_counts
    if cfg.basis_file and have_et:
        raise ConfigError("choose exactly one basis source: file or even_tempered")
    if not cfg.basis_file and not have_et:
        raise ConfigError("no basis source configured")
    if have_et and (cfg.et_alpha is None or cfg.et_beta is None or not cfg.et_counts):
        raise ConfigError(
            "even-tempered basis needs alpha, beta and at least one count.<l>"
        )

    cfg.occupations = take("occupations", str, "aufbau")
    cfg.electrons = take("electrons", int)
    kappas = take("solve_one.kappas", str)
    if kappas:
        cfg.kappas = tuple(int(k) for k in kappas.replace(",", " ").split())
    cfg.max_iter = take("scf.max_iter", int, 200)
    cfg.e_tol = take("scf.e_tol", float, 1e-9)
    cfg.d_tol = take("scf.d_tol", float, 1e-7)
    cfg.damping = take("scf.damping", float, 0.4)
    cfg.level_shift = take("scf.level_shift", float, 0.0)
    cfg.lindep_threshold = take("scf.lindep_threshold", float, 1e-12)
    cfg.threads = take("threads", int, 1)
    env_threads = os.environ.get("DIRAC_GAUSS_THREADS")
    if env_threads:
        cfg.threads = int(env_threads)
    cfg.grid_points = take("grid.points", int, 600)
    cfg.grid_r_min = take("grid.r_min", float, 1e-7)
    cfg.grid_r_max = take("grid.r_max", float, 10.0)
    cfg.out_dir = take("outputs.dir", str, ".")
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return cfg


def build_model(cfg: RunConfig, variant: str | None = None):
    variant = variant or cfg.nucleus_model
    if variant == "point":
        return point_nucleus(cfg.Z)
    if cfg.eta_override is not None:
        return gaussian_nucleus(cfg.Z, cfg.eta_override)
    mass = cfg.mass_number if cfg.mass_number is not None else 2.5 * cfg.Z
    return gaussian_nucleus(cfg.Z, eta_from_rms(rms_radius_bohr(mass)))


def build_shells(cfg: RunConfig):
    if cfg.basis_file:
        try:
            text = Path(cfg.basis_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read basis file: {exc}") from exc
        return parse_basis_file(text)
    return even_tempered_shells(cfg.et_alpha, cfg.et_beta, cfg.et_counts)


def build_occupations(cfg: RunConfig):
    if cfg.occupations == "aufbau":
        n_elec = cfg.electrons if cfg.electrons is not None else round(cfg.Z)
        return aufbau_occupations(n_elec)
    return tuple(_parse_occupation_token(t) for t in cfg.occupations.split())


def scf_options(cfg: RunConfig) -> ScfOptions:
    return ScfOptions(
        max_iter=cfg.max_iter,
        e_tol=cfg.e_tol,
        d_tol=cfg.d_tol,
        damping=cfg.damping,
        level_shift=cfg.level_shift,
        lindep_threshold=cfg.lindep_threshold,
        threads=cfg.threads,
    )


# ---------------------------------------------------------------------------
# outputs


def _write(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_manifest(out: Path, cfg: RunConfig, command: str) -> None:
    lines = [
        f"# dirac-gauss {__version__}",
        f"# command: {command}",
        f"# timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
    ]
    lines += [f"{k} = {v}" for k, v in sorted(cfg.raw.items())]
    _write(out / "run_manifest.txt", lines)


def write_levels_csv(out: Path, name: str, state, occs) -> None:
    occ_by_key = {(o.n, o.symmetry.kappa): o.n_a for o in occs}
    lines = ["label,n,kappa,occupation,energy_hartree"]
    for lv in state.levels:
        occ = occ_by_key[(lv.n, lv.kappa)]
        lines.append(f"{lv.label()},{lv.n},{lv.kappa},{fmt(occ)},{fmt(lv.energy)}")
    _write(out / name, lines)


def write_iteration_log(out: Path, name: str, state) -> None:
    lines = ["iteration\ttotal_energy\tabs_delta_e\tdensity_delta"]
    for it, e, de, dd in state.history:
        de_s = fmt(de) if np.isfinite(de) else "inf"
        lines.append(f"{it}\t{fmt(e)}\t{de_s}\t{fmt(dd) if np.isfinite(dd) else 'inf'}")
    _write(out / name, lines)


def write_energy_summary(out: Path, name: str, state) -> None:
    lines = [
        f"total_energy_hartree = {fmt(state.total_energy)}",
        f"trace_energy_hartree = {fmt(state.trace_energy)}",
        f"iterations = {state.iteration}",
        f"converged = {str(state.converged).lower()}",
        f"energy_delta = {fmt(state.energy_delta)}",
        f"density_delta = {fmt(state.density_delta)}",
    ]
    _write(out / name, lines)


# ---------------------------------------------------------------------------
# commands


def cmd_solve_one(cfg: RunConfig, out: Path) -> int:
    shells = build_shells(cfg)
    model = build_model(cfg)
    lines = ["kappa,n,energy_hartree,analytic_hartree,deviation"]
    for kappa in cfg.kappas:
        sym = AngularSymmetry(kappa)
        if sym not in shells:
            raise ConfigError(f"basis has no kappa={kappa} shell")
        levels = solve_block(shells[sym], model, cfg.c, cfg.lindep_threshold)
        for lv in levels[:4]:
            if model.is_point:
                ana = sommerfeld_energy(lv.n, kappa, cfg.Z, cfg.c)
                dev = lv.energy - ana
                lines.append(
                    f"{kappa},{lv.n},{fmt(lv.energy)},{fmt(ana)},{fmt(dev)}"
                )
            else:
                lines.append(f"{kappa},{lv.n},{fmt(lv.energy)},,")
    _write(out / "one_electron.csv", lines)
    print(f"wrote {out / 'one_electron.csv'}")
    return EXIT_OK


def cmd_scf(cfg: RunConfig, out: Path) -> int:
    shells = build_shells(cfg)
    occs = build_occupations(cfg)
    spec = AtomSpec(build_model(cfg), occs, cfg.c)
    state = run_scf(spec, shells, scf_options(cfg))
    write_levels_csv(out, "levels.csv", state, occs)
    write_iteration_log(out, "iterations.tsv", state)
    write_energy_summary(out, "energy.txt", state)
    print(f"total energy: {fmt(state.total_energy)} hartree "
          f"({state.iteration} iterations, converged={state.converged})")
    if not state.converged:
        print("SCF did not converge; partial outputs written", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_compare_nucleus(cfg: RunConfig, out: Path) -> int:
    shells = build_shells(cfg)
    occs = build_occupations(cfg)
    spec_p = AtomSpec(point_nucleus(cfg.Z), occs, cfg.c)
    spec_g = AtomSpec(build_model(cfg, "gaussian"), occs, cfg.c)
    cache = SlaterCache(shells)
    reports, state_p, state_g = nucleus_comparison_report(
        spec_p, spec_g, shells, scf_options(cfg), cache=cache
    )
    lines = ["label,e_point,e_gaussian,delta"]
    for r in reports:
        lines.append(
            f"{r.label},{fmt(r.energy_point)},{fmt(r.energy_gaussian)},{fmt(r.delta)}"
        )
    _write(out / "compare.csv", lines)
    write_iteration_log(out, "iterations_point.tsv", state_p)
    write_iteration_log(out, "iterations_gaussian.tsv", state_g)
    print(f"wrote {out / 'compare.csv'}")
    if not (state_p.converged and state_g.converged):
        print("at least one SCF did not converge; report is partial", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_export_wf(cfg: RunConfig, out: Path, selector: str) -> int:
    shells = build_shells(cfg)
    occs = build_occupations(cfg)
    spec = AtomSpec(build_model(cfg), occs, cfg.c)
    state = run_scf(spec, shells, scf_options(cfg))
    if not state.converged:
        print("SCF did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    grid = default_grid(cfg.grid_points, cfg.grid_r_min, cfg.grid_r_max)
    labels = {lv.label(): lv for lv in state.levels}
    if selector == "all":
        chosen = list(state.levels)
    elif selector in labels:
        chosen = [labels[selector]]
    else:
        raise ConfigError(
            f"unknown level {selector!r}; valid: {' '.join(sorted(labels))} or 'all'"
        )
    for lv in chosen:
        shell = shells[lv.symmetry]
        r, u, v = radial_functions_on_grid(lv, shell, grid)
        norm = np.trapezoid(u * u + v * v, r)
        lines = ["r_bohr,u,v"]
        lines += [f"{fmt(ri)},{fmt(ui)},{fmt(vi)}" for ri, ui, vi in zip(r, u, v)]
        lines.append(f"# trapezoid_norm = {fmt(norm)}")
        _write(out / f"wf_{lv.label()}.csv", lines)
    # one file per component across all occupied levels, mirroring the
    # whole-atom radial-function plots
    for comp, idx in (("large", 1), ("small", 2)):
        header = ["r_bohr"] + [lv.label() for lv in state.levels]
        cols = [grid]
        for lv in state.levels:
            trio = radial_functions_on_grid(lv, shells[lv.symmetry], grid)
            cols.append(trio[idx])
        lines = [",".join(header)]
        for row in zip(*cols):
            lines.append(",".join(fmt(x) for x in row))
        _write(out / f"wf_all_{comp}.csv", lines)
    print(f"wrote {len(chosen)} level file(s) and 2 component files to {out}")
    return EXIT_OK


def cmd_gen_basis(args) -> int:
    counts: dict[int, int] = {}
    for token in args.counts.split(","):
        letter, _, num = token.partition(":")
        letter = letter.strip().lower()
        if letter not in L_LETTERS[:5] or not num:
            raise ConfigError(f"bad count token {token!r}; use e.g. s:26,p:23")
        counts[L_LETTERS.index(letter)] = int(num)
    shells = even_tempered_shells(args.alpha, args.beta, counts)
    text = serialize_basis(shells, args.symbol, args.Z)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {args.output}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dirac-gauss",
        description="Radial Dirac and Dirac-Hartree-Fock solver in Gaussian bases",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve-one", "scf", "compare-nucleus", "export-wf"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        if name == "export-wf":
            sp.add_argument("--level", default="all", help="level label or 'all'")
    gb = sub.add_parser("gen-basis")
    gb.add_argument("--alpha", type=float, required=True)
    gb.add_argument("--beta", type=float, required=True)
    gb.add_argument("--counts", required=True, help="e.g. s:26,p:23,d:17,f:11")
    gb.add_argument("--symbol", default="X")
    gb.add_argument("--Z", type=int, default=1)
    gb.add_argument("--output", required=True)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "gen-basis":
            return cmd_gen_basis(args)
        cfg = load_config(args.config)
        out = Path(args.out) if args.out else Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out, cfg, args.command)
        if args.command == "solve-one":
            return cmd_solve_one(cfg, out)
        if args.command == "scf":
            return cmd_scf(cfg, out)
        if args.command == "compare-nucleus":
            return cmd_compare_nucleus(cfg, out)
        if args.command == "export-wf":
            return cmd_export_wf(cfg, out, args.level)
        raise ConfigError(f"unknown command {args.command}")
    except (ConditioningError, IntegralError, SpectrumSplitError,
            SupercriticalError, VariationalCollapseError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, BasisFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
