"""Command-line interface: parameter sweeps, tables and sweep-data emission.

Commands (see README): phase, table1, bdi, table2, bulk-spectrum, interface,
flow, dirac, weyl.  Common flags: --config PATH, --out DIR, --threads N,
--format csv|json.  TOPOPLASMA_THREADS is the fallback for --threads.
Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bulk, dirac, interface, invariants
from .config import (
    RunConfig,
    parse_config,
    plasma_from_section,
    reg_from_string,
    threads_from_env,
)
from .errors import (
    InvalidParameter,
    NotApplicable,
    NumericalFailure,
    ResolutionError,
)
from .params import PlasmaParams
from .runio import ResultRecord, write_record

DEFAULT_REG = "omega-decay:0.01"


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _parse_range(spec: str) -> np.ndarray:
    """'lo:hi:n' -> n uniformly spaced values."""
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except Exception:
        raise InvalidParameter(f"range spec must be lo:hi:n, got {spec!r}")


def _parse_floats(spec: str) -> list[float]:
    return [float(tok) for tok in spec.split(",") if tok.strip()]


def _load_config(args, command: str) -> RunConfig:
    if getattr(args, "config", None):
        cfg = parse_config(Path(args.config).read_text())
        if cfg.command and cfg.command != command:
            raise InvalidParameter(
                f"config file is for command {cfg.command!r}, not {command!r}"
            )
        return RunConfig(command=command, sections=cfg.sections)
    return RunConfig(command=command, sections={})


def _write_rows_csv(rows, header):
    def writer(path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    return writer


def _finish(args, command, config_echo, payload, extra_files=None,
            csv_optional=False) -> int:
    if csv_optional and getattr(args, "format", "csv") == "json":
        extra_files = None
    rec = ResultRecord(command=command, config=config_echo, payload=payload)
    root = write_record(rec, args.out, extra_files)
    print(json.dumps({"run_id": rec.run_id, "out": str(root), **payload_brief(payload)},
                     sort_keys=True))
    return 0


def payload_brief(payload: dict) -> dict:
    """Short echo for stdout: drop bulky arrays."""
    out = {}
    for k, v in payload.items():
        if isinstance(v, (list, tuple)) and len(v) > 12:
            out[k] = f"<{len(v)} rows>"
        else:
            out[k] = v
    return out


def _plasma_from_flags(args, cfg: RunConfig, section: str = "plasma") -> PlasmaParams:
    over = {}
    for key in ("omega_c", "omega_p", "k_z"):
        v = getattr(args, key, None)
        if v is not None:
            over[(section, key)] = v
    if getattr(args, "reg", None) is not None:
        over[(section, "reg")] = args.reg
    cfg = cfg.with_overrides(over)
    return plasma_from_section(cfg, section)


# --------------------------------------------------------------------------
# command handlers
# --------------------------------------------------------------------------

def cmd_phase(args) -> int:
    cfg = _load_config(args, "phase")
    rows = []
    boundaries = []
    if args.omega_p is not None:
        # (Omega, k_z) plane at fixed omega_p
        ocs = _parse_range(args.omega_c_range)
        kzs = _parse_range(args.k_z_range)
        if ocs.size < 1 or kzs.size < 1:
            raise InvalidParameter("degenerate grid")
        for oc in ocs:
            for kz in kzs:
                ph = bulk.classify_phase(PlasmaParams(oc, args.omega_p, kz))
                rows.append((f"{oc:.10g}", f"{kz:.10g}", ph.value))
        for oc in ocs:
            if oc == 0:
                continue
            for branch, val in _kz_boundaries(oc, args.omega_p):
                boundaries.append((branch, f"{oc:.10g}", f"{val:.10g}"))
        header = ["omega_c", "k_z", "phase"]
    else:
        kz = args.k_z if args.k_z is not None else float(cfg.require("plasma", "k_z"))
        ocs = _parse_range(args.omega_c_range)
        wps = _parse_range(args.omega_p_range)
        for oc in ocs:
            for wp in wps:
                ph = bulk.classify_phase(PlasmaParams(oc, wp, kz))
                rows.append((f"{oc:.10g}", f"{wp:.10g}", ph.value))
        for oc in ocs:
            if oc == 0:
                continue
            om_minus, om_plus = bulk.transition_frequencies(oc, kz)
            boundaries.append(("omega_minus", f"{oc:.10g}", f"{om_minus:.10g}"))
            boundaries.append(("omega_plus", f"{oc:.10g}", f"{om_plus:.10g}"))
        header = ["omega_c", "omega_p", "phase"]
    payload = {"n_points": len(rows), "n_boundary_points": len(boundaries)}
    echo = {"omega_p": args.omega_p, "k_z": args.k_z,
            "omega_c_range": args.omega_c_range,
            "k_z_range": getattr(args, "k_z_range", None),
            "omega_p_range": getattr(args, "omega_p_range", None)}
    return _finish(args, "phase", echo, payload, {
        "phase_grid.csv": _write_rows_csv(rows, header),
        "boundaries.csv": _write_rows_csv(
            boundaries, ["branch", "omega_c", "value"]),
    })


def _kz_boundaries(omega_c: float, omega_p: float):
    """k_z values where omega_p meets the crossing frequencies, at fixed Omega."""
    from scipy.optimize import brentq

    out = []
    target = omega_p / abs(omega_c)

    def f_plus(x):
        return 0.5 * (math.sqrt(x**4 + 4 * x * x) + x * x) - target

    def f_minus(x):
        return 0.5 * (math.sqrt(x**4 + 4 * x * x) - x * x) - target

    if f_plus(1e-9) * f_plus(1e6) < 0:
        x = brentq(f_plus, 1e-9, 1e6)
        out.append(("omega_plus", x * abs(omega_c)))
    if target < 1.0 and f_minus(1e-9) * f_minus(1e9) < 0:
        x = brentq(f_minus, 1e-9, 1e9)
        out.append(("omega_minus", x * abs(omega_c)))
    return out


def cmd_table1(args) -> int:
    sigmas = _parse_floats(args.sigma_bar)
    rows = []
    for sb in sigmas:
        for ph in bulk.Phase:
            if ph is bulk.Phase.BOUNDARY:
                continue
            c = invariants.table1_row(ph, sb)
            rows.append((f"{sb:.10g}", ph.value, *[f"{x:.12g}" for x in c]))
    payload = {"sigma_bar": sigmas, "n_rows": len(rows),
               "rows": [list(r) for r in rows]}
    return _finish(args, "table1", {"sigma_bar": args.sigma_bar}, payload, {
        "table1.csv": _write_rows_csv(rows, ["sigma_bar", "phase",
                                             "C1", "C2", "C3", "C4"]),
    }, csv_optional=True)


def cmd_bdi(args) -> int:
    reg = reg_from_string(args.reg)
    oc_n, wp_n = _parse_floats(args.north)
    oc_s, wp_s = _parse_floats(args.south)
    pN = PlasmaParams(oc_n, wp_n, args.k_z, reg=reg)
    pS = PlasmaParams(oc_s, wp_s, args.k_z, reg=reg)
    ells = [args.ell] if args.ell else [1, 2]
    payload = {}
    for ell in ells:
        r = invariants.bdi(pN, pS, ell)
        payload[f"ell{ell}"] = {
            "value": r.value,
            "raw": r.raw,
            "is_bdi": r.is_bdi,
            "rounding_residual": r.rounding_residual,
            "gap_mismatch": r.gluing.gap_mismatch,
        }
    echo = {"north": args.north, "south": args.south,
            "k_z": args.k_z, "reg": args.reg, "ell": args.ell}
    return _finish(args, "bdi", echo, payload)


def cmd_table2(args) -> int:
    reg = reg_from_string(args.reg or DEFAULT_REG)
    rows = []
    payload_rows = []
    for name, pS, pN, b1, b2 in invariants.table2(reg):
        rows.append((name, b1.value, int(b1.is_bdi), f"{b1.raw:.6g}",
                     b2.value, int(b2.is_bdi), f"{b2.raw:.6g}"))
        payload_rows.append({
            "transition": name,
            "bdi": [b1.value, b2.value],
            "is_bdi": [b1.is_bdi, b2.is_bdi],
            "raw": [b1.raw, b2.raw],
        })
    payload = {"reg": args.reg or DEFAULT_REG, "rows": payload_rows}
    return _finish(args, "table2", {"reg": args.reg or DEFAULT_REG}, payload, {
        "table2.csv": _write_rows_csv(rows, [
            "transition", "bdi_ell1", "is_bdi_ell1", "raw_ell1",
            "bdi_ell2", "is_bdi_ell2", "raw_ell2"]),
    }, csv_optional=True)


def cmd_bulk_spectrum(args) -> int:
    cfg = _load_config(args, "bulk-spectrum")
    p = _plasma_from_flags(args, cfg)
    ks = np.linspace(0.0, args.k_max, args.n_k)
    H = bulk.bulk_hamiltonian_grid(p, ks, np.zeros_like(ks))
    w = np.linalg.eigvalsh(H)
    rows = [(f"{k:.10g}", *[f"{x:.12g}" for x in wk]) for k, wk in zip(ks, w)]
    payload = {"n_k": args.n_k, "k_max": args.k_max,
               "params": [p.omega_c, p.omega_p, p.k_z]}
    echo = {"omega_c": p.omega_c, "omega_p": p.omega_p, "k_z": p.k_z,
            "reg": args.reg, "k_max": args.k_max, "n_k": args.n_k}
    return _finish(args, "bulk-spectrum", echo, payload, {
        "bands.csv": _write_rows_csv(
            rows, ["k"] + [f"omega_{j}" for j in range(-4, 5)]),
    })


# --- interface presets -----------------------------------------------------

def _preset(name: str, n_y: int, L: float, width: float, kx_spec: str):
    kx = _parse_range(kx_spec)
    disc = interface.InterfaceDiscretization(n_y=n_y, L=L, kx_grid=tuple(kx))
    if name == "i-ii":
        om_minus, _ = bulk.transition_frequencies(1.0, 2.0)
        prof = interface.ParameterProfile(
            omega_c=1.0,
            omega_p=interface.LogisticProfile(0.5 * om_minus, 1.5 * om_minus, width),
            k_z=2.0, L=L)
        return prof, disc, "full", (1, 2)
    if name == "ii-iii":
        _, om_plus = bulk.transition_frequencies(1.0, 1.0)
        prof = interface.ParameterProfile(
            omega_c=1.0,
            omega_p=interface.LogisticProfile(0.5 * om_plus, 1.5 * om_plus, width),
            k_z=1.0, L=L)
        return prof, disc, "full", (1,)
    if name == "ii-minus-plus":
        prof = interface.ParameterProfile(
            omega_c=interface.LogisticProfile(-0.75, 0.75, width),
            omega_p=1.0, k_z=2.0, L=L)
        return prof, disc, "full", (1, 2)
    if name == "iv":
        prof = interface.ParameterProfile(
            omega_c=interface.LogisticProfile(-1.0, 1.0, width),
            omega_p=1.0, k_z=0.0, L=L)
        return prof, disc, "tm", (1, 2)
    if name == "i-minus-plus":
        kz = 2.0
        omc = interface.LogisticProfile(-1.0, 1.0, width)

        def wp_fn(y, LL):
            # omega_p(y) = 0.5 * omega_-(Omega(y), k_z); the profile passes
            # through the singular point (Omega, omega_p) = (0, 0) at y = 0
            # and at the wrap.  omega_- = kz^2 / omega_+ is the stable form
            # as Omega -> 0 (omega_+ diverges, omega_- ~ |Omega|).
            oc = np.abs(np.asarray(omc(y, LL), dtype=float))
            safe = np.where(oc > 0, oc, 1.0)
            om_plus = 0.5 * (np.hypot(kz * kz / safe, 2.0 * kz) + kz * kz / safe)
            return np.where(oc > 0, 0.5 * kz * kz / om_plus, 0.0)

        prof = interface.ParameterProfile(
            omega_c=omc,
            omega_p=interface.FunctionProfile(
                wp_fn, south=0.5 * bulk.transition_frequencies(-1.0, kz)[0],
                north=0.5 * bulk.transition_frequencies(1.0, kz)[0]),
            k_z=kz, L=L)
        return prof, disc, "full", (1, 2)
    raise InvalidParameter(f"unknown preset {name!r}")


def _run_interface(args, want_flow: bool) -> int:
    threads = threads_from_env(args.threads)
    prof, disc, system, gaps = _preset(args.preset, args.n_y, args.L,
                                       args.width, args.kx)
    records = interface.sweep_spectrum(prof, disc, system=system, threads=threads)
    records, removed = interface.filter_spurious(records)
    reg = reg_from_string(args.reg or DEFAULT_REG)
    # gaps come from the unregularized bulk spectra (the interface operator
    # is diagonalized without regularization); only the BDI sees the scheme
    pS = prof.bulk_params("south")
    pN = prof.bulk_params("north")
    payload = {
        "preset": args.preset,
        "system": system,
        "n_y": args.n_y,
        "n_kx": len(disc.kx_grid),
        "removed_spurious": len(removed),
        "south": [pS.omega_c, pS.omega_p, pS.k_z],
        "north": [pN.omega_c, pN.omega_p, pN.k_z],
    }
    if want_flow:
        for ell in gaps:
            gap = interface.common_gap(pS, pN, ell, system=system)
            b = invariants.bdi(pN.with_(reg=reg), pS.with_(reg=reg), ell)
            entry = {"bdi": b.value, "is_bdi": b.is_bdi,
                     "gap": [gap.lo, gap.hi], "global": gap.is_global}
            if gap.is_global:
                try:
                    rep = interface.spectral_flow(records, gap)
                    entry["flow"] = rep.flow
                    entry["crossings"] = len(rep.branch_list)
                except NotApplicable:
                    entry["flow"] = None
                dos = interface.gap_dos_probe(records, gap)
                entry["ingap_mean"] = dos["mean"]
            payload[f"gap{ell}"] = entry
    echo = {"preset": args.preset, "n_y": args.n_y, "L": args.L,
            "width": args.width, "kx": args.kx, "reg": args.reg,
            "system": system}
    return _finish(args, "flow" if want_flow else "interface", echo, payload, {
        "sweep.csv": lambda path: interface.write_sweep_csv(records, path),
    })


def cmd_interface(args) -> int:
    return _run_interface(args, want_flow=False)


def cmd_flow(args) -> int:
    return _run_interface(args, want_flow=True)


def cmd_dirac(args) -> int:
    threads = threads_from_env(args.threads)
    if args.model in ("reduce-minus", "reduce-plus"):
        p = PlasmaParams(args.omega_c, args.omega_p, args.k_z)
        m = dirac.reduce_minus(p) if args.model == "reduce-minus" else dirac.reduce_plus(p)
        payload = {
            "which": m.which, "alpha": m.alpha, "beta": m.beta,
            "omega_star": m.omega_star, "omega_tilde": m.omega_tilde,
            "velocity": m.velocity, "gap_overlap": dirac.gap_overlap(m),
        }
        echo = {"model": args.model, "omega_c": args.omega_c,
                "omega_p": args.omega_p, "k_z": args.k_z}
        return _finish(args, "dirac", echo, payload)
    if args.model == "wall":
        dp = dirac.DiracProfile(v_x=1.0, v_y=1.0, m=np.tanh, V=0.0,
                                eta=args.eta, n_y=args.n_y, L=args.L)
        bdi_val = dirac.dirac_bdi((1.0, 1.0, 1.0), (1.0, 1.0, -1.0)).value
    elif args.model == "singular1":
        dp = dirac.singular_one_profile(n_y=args.n_y, L=args.L, eta=args.eta)
        bdi_val = dirac.dirac_bdi((1.0, 1.0, 1.0), (-1.0, 1.0, 1.0)).value
    elif args.model == "singular2":
        dp = dirac.singular_two_profile(n_y=args.n_y, L=args.L, eta=args.eta)
        bdi_val = -1
    else:
        raise InvalidParameter(f"unknown dirac model {args.model!r}")
    xis = _parse_range(args.xi)
    records = dirac.dirac_interface_spectrum(dp, xis, threads=threads)
    records, removed = interface.filter_spurious(records)
    gap = bulk.GapInterval(ell=1, lo=-abs(args.gap_edge), hi=abs(args.gap_edge),
                           is_global=True)
    dos = interface.gap_dos_probe(records, gap)
    payload = {"model": args.model, "bdi": bdi_val,
               "removed_spurious": len(removed),
               "ingap_mean": dos["mean"], "ingap_max": dos["max"]}
    try:
        rep = interface.spectral_flow(records, gap)
        payload["flow"] = rep.flow
    except (NotApplicable, ResolutionError):
        payload["flow"] = None
    echo = {"model": args.model, "n_y": args.n_y, "L": args.L,
            "eta": args.eta, "xi": args.xi, "gap_edge": args.gap_edge}
    return _finish(args, "dirac", echo, payload, {
        "sweep.csv": lambda path: interface.write_sweep_csv(records, path),
    })


def cmd_weyl(args) -> int:
    scales = _parse_floats(args.nscale)
    rows = []
    for n in scales:
        r = dirac.weyl_residual(dirac.WeylProbe(n_scale=n, energy=args.energy,
                                                xi=args.xi))
        rows.append((f"{n:.10g}", f"{r:.10g}"))
    payload = {"nscale": scales, "residuals": [float(r[1]) for r in rows],
               "energy": args.energy, "xi": args.xi}
    echo = {"nscale": args.nscale, "energy": args.energy, "xi": args.xi}
    return _finish(args, "weyl", echo, payload, {
        "weyl.csv": _write_rows_csv(rows, ["n_scale", "residual"]),
    }, csv_optional=True)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--config", help="INI config file; flags override it")
    sp.add_argument("--out", default="runs", help="output directory")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (TOPOPLASMA_THREADS fallback)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="topoplasma",
        description="Magnetized cold-plasma topological invariants and interface spectra",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phase", help="phase-diagram grid")
    sp.add_argument("--omega-p", type=float, dest="omega_p")
    sp.add_argument("--k-z", type=float, dest="k_z")
    sp.add_argument("--omega-c-range", default="-2:2:41")
    sp.add_argument("--k-z-range", default="0.05:3:30")
    sp.add_argument("--omega-p-range", default="0.05:3:30")
    _add_common(sp)
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("table1", help="curvature integrals per phase")
    sp.add_argument("--sigma-bar", default="0,1,10", dest="sigma_bar")
    _add_common(sp)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("bdi", help="bulk-difference invariant of one pair")
    sp.add_argument("--north", required=True, help="omega_c,omega_p")
    sp.add_argument("--south", required=True, help="omega_c,omega_p")
    sp.add_argument("--k-z", type=float, required=True, dest="k_z")
    sp.add_argument("--ell", type=int, choices=(1, 2))
    sp.add_argument("--reg", default=DEFAULT_REG)
    _add_common(sp)
    sp.set_defaults(func=cmd_bdi)

    sp = sub.add_parser("table2", help="BDI table over all transitions")
    sp.add_argument("--reg")
    _add_common(sp)
    sp.set_defaults(func=cmd_table2)

    sp = sub.add_parser("bulk-spectrum", help="bulk bands over a radial scan")
    sp.add_argument("--omega-c", type=float, dest="omega_c")
    sp.add_argument("--omega-p", type=float, dest="omega_p")
    sp.add_argument("--k-z", type=float, dest="k_z")
    sp.add_argument("--reg")
    sp.add_argument("--k-max", type=float, default=5.0)
    sp.add_argument("--n-k", type=int, default=400)
    _add_common(sp)
    sp.set_defaults(func=cmd_bulk_spectrum)

    for name, fn, hlp in (
        ("interface", cmd_interface, "interface spectrum sweep (CSV)"),
        ("flow", cmd_flow, "interface sweep plus spectral flow and BDI"),
    ):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--preset", required=True,
                        choices=("i-ii", "ii-iii", "ii-minus-plus", "iv",
                                 "i-minus-plus"))
        sp.add_argument("--n-y", type=int, default=300)
        sp.add_argument("--L", type=float, default=30.0)
        sp.add_argument("--width", type=float, default=2.0)
        sp.add_argument("--kx", default="-3:3:121")
        sp.add_argument("--reg")
        _add_common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("dirac", help="reduced models and singular demos")
    sp.add_argument("--model", required=True,
                    choices=("reduce-minus", "reduce-plus", "wall",
                             "singular1", "singular2"))
    sp.add_argument("--omega-c", type=float, default=1.0, dest="omega_c")
    sp.add_argument("--omega-p", type=float, default=0.83, dest="omega_p")
    sp.add_argument("--k-z", type=float, default=2.0, dest="k_z")
    sp.add_argument("--n-y", type=int, default=400)
    sp.add_argument("--L", type=float, default=20.0)
    sp.add_argument("--eta", type=float, default=0.0)
    sp.add_argument("--xi", default="-2:2:41")
    sp.add_argument("--gap-edge", type=float, default=0.8, dest="gap_edge")
    _add_common(sp)
    sp.set_defaults(func=cmd_dirac)

    sp = sub.add_parser("weyl", help="Weyl-sequence residuals")
    sp.add_argument("--nscale", default="4,8,16,32")
    sp.add_argument("--energy", type=float, default=0.0)
    sp.add_argument("--xi", type=float, default=0.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_weyl)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if getattr(args, "config", None):
            Path(args.config).read_text()  # fail fast on a missing file
        return args.func(args)
    except (InvalidParameter, NotApplicable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ResolutionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
