"""Command-line front end: model values, simulated experiments and table/figure data."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from importlib import resources
from typing import Any, Callable

import numpy as np
from scipy.optimize import bisect

from . import expsim, states, witnesses, workx
from .qcore import BlochDir, fidelity_pure

log = logging.getLogger("demonwork")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SCHEMA_VERSION = 1
PHI_COS_062 = float(np.arccos(0.62))
PHI_COS_085 = float(np.arccos(0.85))
PATH_QUBIT = 2
# Charis = path qubit, first polarisation qubit, second polarisation qubit
TABLE_ROLES = (2, 0, 1)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    mu: float | None = None
    phi: float | None = None
    base: str = "ghzc"
    alpha: float | None = None
    angles: list | None = None
    n_angles: int = 19
    points: int | None = None
    grid: int = 512
    mode: str | None = None
    rate: float | None = None
    duration: float | None = None
    resamples: int | None = None
    restarts: int = 64
    seed: int | None = None
    tomography: bool = False
    degrees: bool = False
    out: str | None = None
    format: str | None = None

    def validate(self):
        if self.mu is not None and not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"--mu must lie in [0, 1], got {self.mu}")
        if self.base not in {b.value for b in states.Base}:
            raise ConfigError(f"--base must be one of ghz, ghzc, w; got {self.base!r}")
        if self.mode is not None and self.mode not in {m.value for m in workx.Mode}:
            raise ConfigError(f"--mode must be single-v or adaptive-v; got {self.mode!r}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"--format must be csv or json; got {self.format!r}")
        if self.points is not None and self.points < 2:
            raise ConfigError("--points must be at least 2")
        if self.n_angles < 2:
            raise ConfigError("--n-angles must be at least 2")
        if self.grid < 8:
            raise ConfigError("--grid must be at least 8")
        for name in ("rate", "duration"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"--{name} must be positive")
        if (self.rate is None) != (self.duration is None):
            raise ConfigError("--rate and --duration must be given together")
        if self.resamples is not None and self.resamples < 100:
            raise ConfigError("--resamples must be at least 100")
        if self.stochastic and self.seed is None:
            raise ConfigError(f"'{self.command}' with counting statistics needs --seed")

    @property
    def stochastic(self) -> bool:
        return self.command in ("simulate-counts", "tomography") or self.rate is not None

    def angle(self, x):
        return None if x is None else float(np.radians(x) if self.degrees else x)

    def pts(self, default: int) -> int:
        return self.points if self.points is not None else default


def exceeds(value: float, threshold: float) -> bool:
    """Verdict on the values as printed, so output files are self-consistent."""
    return _round6(value) > _round6(threshold)


def _round6(x: float) -> float:
    return float(f"{float(x):.6g}")


# -- helpers -----------------------------------------------------------------


def _two_qubit(cfg: RunConfig):
    if cfg.mu is None or cfg.phi is None:
        raise ConfigError(f"'{cfg.command}' needs --mu and --phi")
    return states.werner_like(cfg.mu, cfg.angle(cfg.phi))


def _three_qubit(cfg: RunConfig):
    return states.rho3(1.0 if cfg.mu is None else cfg.mu, cfg.base)


def mu_from_fidelity(f: float, n: int = 3) -> float:
    """White-noise weight whose fidelity with the pure resource equals ``f``."""
    d = 2**n
    return (f - 1.0 / d) / (1.0 - 1.0 / d)


def reference_rows(table: int) -> list[dict]:
    text = resources.files("demonwork").joinpath("data/measured_tables.csv").read_text()
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        if int(r["table"]) != table:
            continue
        rows.append({k: (v if k == "resource" or v == "" else float(v)) for k, v in r.items()})
    return rows


def _modes(cfg: RunConfig) -> list[str]:
    return [cfg.mode] if cfg.mode else [m.value for m in workx.Mode]


def max_w2(rho, cfg: RunConfig) -> workx.MaxWork2:
    n_points = cfg.pts(1024) if cfg.command == "work2" else 1024
    return workx.max_work2(rho, n_normals=cfg.grid, n_points=n_points)


# -- commands ----------------------------------------------------------------


def cmd_work2(cfg: RunConfig) -> list[dict]:
    rho = _two_qubit(cfg)
    mw = max_w2(rho, cfg)
    n = mw.result.circle.normal.vec
    row = {
        "mu": cfg.mu,
        "phi": cfg.angle(cfg.phi),
        "W": mw.result.average,
        "threshold": workx.THRESHOLDS.two_qubit,
        "witnessed": exceeds(mw.result.average, workx.THRESHOLDS.two_qubit),
        "normal_x": n[0],
        "normal_y": n[1],
        "normal_z": n[2],
    }
    if cfg.rate is not None:
        pr = expsim.work2_protocol(rho, mw.result.circle, cfg.n_angles, cfg.rate, cfg.duration, cfg.seed)
        row.update(
            {
                "n_angles": cfg.n_angles,
                "W_sim": pr.average,
                "sigma_prop": pr.sigma,
                "witnessed_sim": exceeds(pr.average, workx.THRESHOLDS.two_qubit),
            }
        )
        if cfg.resamples:
            row["sigma_mc"] = expsim.monte_carlo_sigma(
                expsim.protocol_work_from_counts, pr.counts, cfg.resamples, cfg.seed
            )
    return [row]


def cmd_work3(cfg: RunConfig) -> list[dict]:
    rho = _three_qubit(cfg)
    rows = []
    for mode in _modes(cfg):
        mw = workx.max_work3(rho, mode)
        row = {"base": cfg.base, "mu": 1.0 if cfg.mu is None else cfg.mu, "mode": mode, "W": mw.result.average}
        for u in workx.AXES:
            w, v = mw.result.per_axis[u]
            row[f"W_{u}"] = w
            # optimiser residue below 1e-6 printed as 0
            vec = np.where(np.abs(v.vec) < 1e-6, 0.0, v.vec) + 0.0
            row[f"v_{u}"] = " ".join(f"{c:.6g}" for c in vec)
        row.update(
            {
                "threshold_sep": workx.THRESHOLDS.three_sep,
                "threshold_wclass": workx.THRESHOLDS.three_wclass,
                "entangled": exceeds(mw.result.average, workx.THRESHOLDS.three_sep),
                "ghz_class": exceeds(mw.result.average, workx.THRESHOLDS.three_wclass),
            }
        )
        rows.append(row)
    return rows


def cmd_bell(cfg: RunConfig) -> dict:
    rho = _two_qubit(cfg)
    phi = cfg.angle(cfg.phi)
    rep = witnesses.max_bell(rho)
    out = {
        "mu": cfg.mu,
        "phi": phi,
        "S_max": rep.value,
        "alpha_opt": rep.details["alpha"],
        "S_max_closed_form": witnesses.max_bell_family(cfg.mu, phi).value,
        "threshold": witnesses.BELL_LOCAL_BOUND,
        "violated": exceeds(rep.value, witnesses.BELL_LOCAL_BOUND),
    }
    if cfg.alpha is not None:
        out["alpha"] = cfg.angle(cfg.alpha)
        out["S_fixed_alpha"] = witnesses.bell_S(rho, out["alpha"])
    if cfg.rate is not None:
        rec = expsim.simulate_tomography(rho, cfg.rate, cfg.duration, cfg.seed)
        est = witnesses.max_bell(expsim.linear_inversion(rec)).value
        out["S_tomography"] = est
        out["sigma_mc"] = expsim.tomography_monte_carlo_sigma(
            lambda r: witnesses.max_bell(r, 36).value, rec, cfg.resamples or 1000, cfg.seed
        )
        out["violated_tomography"] = exceeds(est, witnesses.BELL_LOCAL_BOUND)
    return out


def cmd_tangle(cfg: RunConfig) -> dict:
    rho = _two_qubit(cfg)
    out = {"mu": cfg.mu, "phi": cfg.angle(cfg.phi), "T": witnesses.tangle2(rho)}
    if cfg.rate is not None:
        rec = expsim.simulate_tomography(rho, cfg.rate, cfg.duration, cfg.seed)
        out["T_tomography"] = witnesses.tangle2(expsim.linear_inversion(rec))
        out["sigma_mc"] = expsim.tomography_monte_carlo_sigma(
            witnesses.tangle2, rec, cfg.resamples or 1000, cfg.seed
        )
    return out


def cmd_svetlichny(cfg: RunConfig) -> dict:
    rho = _three_qubit(cfg)
    source = "model"
    if cfg.tomography:
        if cfg.rate is None:
            raise ConfigError("--tomography needs --rate, --duration and --seed")
        rho = expsim.linear_inversion(expsim.simulate_tomography(rho, cfg.rate, cfg.duration, cfg.seed))
        source = "tomography"
    rep = witnesses.max_svetlichny(rho, restarts=cfg.restarts, seed=cfg.seed or 0)
    out = {"base": cfg.base, "mu": 1.0 if cfg.mu is None else cfg.mu, "source": source}
    out.update(rep.as_dict())
    out["violated"] = exceeds(rep.value, witnesses.SVETLICHNY_BOUND)
    out["S3_quoted_angles"] = witnesses.svet_S3(rho, witnesses.QUOTED_GHZC_ANGLES)
    return out


def cmd_table1(cfg: RunConfig) -> list[dict]:
    two = workx.THRESHOLDS.two_qubit
    rows = []
    for p in reference_rows(1):
        rho = states.werner_like(p["mu"], p["phi"])
        w = max_w2(rho, cfg).result.average
        s_cf = witnesses.max_bell_family(p["mu"], p["phi"]).value
        s_num = witnesses.max_bell(rho).value
        t = witnesses.tangle2(rho)
        rows.append(
            {
                "mu": p["mu"],
                "phi": p["phi"],
                "W_model": w,
                "S_model": s_cf,
                "S_model_numeric": s_num,
                "T_model": t,
                "W_measured": p["W"],
                "W_measured_err": p["W_err"],
                "S_measured": p["S"],
                "S_measured_err": p["S_err"],
                "T_measured": p["T"],
                "T_measured_err": p["T_err"],
                "W_model_witnessed": exceeds(w, two),
                "S_model_violated": exceeds(s_cf, witnesses.BELL_LOCAL_BOUND),
                "W_measured_bold": bool(p["W_bold"]),
                "S_measured_bold": bool(p["S_bold"]),
                "W_agree": exceeds(w, two) == bool(p["W_bold"]),
                "S_agree": exceeds(s_cf, witnesses.BELL_LOCAL_BOUND) == bool(p["S_bold"]),
            }
        )
    return rows


def cmd_tables23(cfg: RunConfig) -> list[dict]:
    measured = {(r["resource"], bool(r["dephased"])): r for r in reference_rows(2) + reference_rows(3)}
    rows = []
    for res in ("ghzc", "w"):
        fid = measured[(res, False)]["fidelity"]
        mus = {"ideal": 1.0, "noisy": cfg.mu if cfg.mu is not None else mu_from_fidelity(fid)}
        for model, mu in mus.items():
            for deph in (False, True):
                rho = states.rho3(mu, res)
                if deph:
                    rho = states.dephase_qubit(rho, PATH_QUBIT)
                for mode in _modes(cfg):
                    ws = workx.role_works(rho, mode, TABLE_ROLES)
                    ref = measured[(res, deph)]
                    row = {"resource": res, "model": model, "mu": mu, "dephased": deph, "mode": mode}
                    for k, w in enumerate(ws, start=1):
                        row[f"W{k}"] = w
                        row[f"W{k}_entangled"] = exceeds(w, workx.THRESHOLDS.three_sep)
                        row[f"W{k}_ghz_class"] = exceeds(w, workx.THRESHOLDS.three_wclass)
                    for k in (1, 2, 3):
                        row[f"W{k}_measured"] = ref[f"W{k}"]
                    rows.append(row)
    return rows


def _crossing(f: Callable[[float], float], lo=0.0, hi=1.0):
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        return None
    return bisect(f, lo, hi, xtol=1e-6)


def cmd_fig2(cfg: RunConfig) -> list[dict]:
    phis = [cfg.angle(cfg.phi)] if cfg.phi is not None else [PHI_COS_062, PHI_COS_085]
    mus = np.linspace(0.0, 1.0, cfg.pts(51))
    two = workx.THRESHOLDS.two_qubit
    rows = []
    for phi in phis:
        wfun = lambda m: max_w2(states.werner_like(m, phi), cfg).result.average
        for m in mus:
            rows.append(
                {
                    "kind": "curve",
                    "phi": phi,
                    "mu": m,
                    "W": wfun(m),
                    "S": witnesses.max_bell_family(m, phi).value,
                    "quantity": "",
                }
            )
        for q, f in (
            ("S", lambda m: witnesses.max_bell_family(m, phi).value - witnesses.BELL_LOCAL_BOUND),
            ("W", lambda m: wfun(m) - two),
        ):
            root = _crossing(f)
            rows.append({"kind": "crossing", "phi": phi, "mu": root, "W": None, "S": None, "quantity": q})
    return rows


def cmd_fig3(cfg: RunConfig) -> list[dict]:
    n = cfg.pts(11)
    rows = []
    for m in np.linspace(0.5, 1.0, n):
        for phi in np.linspace(0.0, np.pi / 2, n):
            w = max_w2(states.werner_like(m, phi), cfg).result.average
            s = witnesses.max_bell_family(m, phi).value
            rows.append(
                {
                    "mu": m,
                    "phi": phi,
                    "W": w,
                    "S": s,
                    "W_shown": w if exceeds(w, workx.THRESHOLDS.two_qubit) else None,
                    "S_shown": s if exceeds(s, witnesses.BELL_LOCAL_BOUND) else None,
                }
            )
    return rows


def cmd_fig5(cfg: RunConfig) -> list[dict]:
    n = cfg.pts(37)
    rows = []
    for base in ("ghzc", "w"):
        rho = states.rho3(1.0 if cfg.mu is None else cfg.mu, base)
        scan = workx.direction_scan3(rho, n, 2 * n - 1)
        for i, t in enumerate(scan.thetas):
            for j, p in enumerate(scan.phis):
                rows.append({"base": base, "theta": t, "phi_az": p, "W": scan.works[i, j]})
    return rows


def cmd_fig6(cfg: RunConfig) -> list[dict]:
    rows = []
    for base in ("ghzc", "w"):
        for m in np.linspace(0.0, 1.0, cfg.pts(21)):
            rho = states.rho3(m, base)
            row = {"base": base, "mu": m}
            for u in workx.AXES:
                v = BlochDir.axis(u)
                row[f"W_v{u}"] = workx.avg_work3(rho, v, workx.Mode.SINGLE_V).average
            rows.append(row)
    return rows


def cmd_simulate_counts(cfg: RunConfig) -> dict:
    rho = _two_qubit(cfg)
    if cfg.rate is None:
        raise ConfigError("simulate-counts needs --rate and --duration")
    angles = [cfg.angle(a) for a in (cfg.angles or [0.0, 0.0])]
    rec = expsim.simulate_counts(rho, angles, cfg.rate, cfg.duration, cfg.seed)
    return json.loads(rec.to_json())


def cmd_tomography(cfg: RunConfig) -> dict:
    if cfg.rate is None:
        raise ConfigError("tomography needs --rate and --duration")
    if cfg.phi is not None:
        rho = _two_qubit(cfg)
        target = states.phi_state(cfg.angle(cfg.phi))
    else:
        rho = _three_qubit(cfg)
        target = states.base_state(cfg.base)
    rec = expsim.simulate_tomography(rho, cfg.rate, cfg.duration, cfg.seed)
    est = expsim.linear_inversion(rec)
    out = json.loads(rec.to_json())
    out.update(
        {
            "reconstruction_real": est.matrix.real.tolist(),
            "reconstruction_imag": est.matrix.imag.tolist(),
            "fidelity_with_target": fidelity_pure(est, target),
            "fidelity_true_state": fidelity_pure(rho, target),
            "purity": est.purity(),
        }
    )
    return out


COMMANDS: dict[str, tuple[Callable, str]] = {
    "work2": (cmd_work2, "maximised two-qubit circle-averaged work"),
    "work3": (cmd_work3, "three-qubit axis-averaged work"),
    "bell": (cmd_bell, "CHSH-type Bell function"),
    "tangle": (cmd_tangle, "two-qubit tangle"),
    "svetlichny": (cmd_svetlichny, "optimised Svetlichny function"),
    "table1": (cmd_table1, "two-qubit model vs measured table"),
    "tables23": (cmd_tables23, "three-qubit role permutations with/without dephasing"),
    "fig2": (cmd_fig2, "W(mu) and S(mu) curves with threshold crossings"),
    "fig3": (cmd_fig3, "(mu, phi) surfaces of W and S"),
    "fig5": (cmd_fig5, "three-qubit work over Charis directions"),
    "fig6": (cmd_fig6, "three-qubit work against mu for v along x, y, z"),
    "simulate-counts": (cmd_simulate_counts, "Poisson coincidence counts for one setting"),
    "tomography": (cmd_tomography, "simulated Pauli tomography and reconstruction"),
}


# -- output ------------------------------------------------------------------


def _fmt(x: Any) -> Any:
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _round6(x)
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return x


def _csv_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    if isinstance(x, (list, tuple)):
        return " ".join(_csv_cell(v) for v in x)
    return str(x)


def render(result, command: str, fmt: str | None) -> str:
    rows = result if isinstance(result, list) else [result]
    fmt = fmt or ("csv" if isinstance(result, list) else "json")
    schema = f"{command}/{SCHEMA_VERSION}"
    if fmt == "json":
        payload = {"schema": schema, "rows" if isinstance(result, list) else "report": _fmt(result)}
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_csv_cell(r.get(c)) for c in cols])
    return buf.getvalue()


# -- argument handling -------------------------------------------------------


def _mode_arg(text: str) -> str:
    alias = {"single": "single-v", "adaptive": "adaptive-v"}
    text = alias.get(text, text)
    if text not in {m.value for m in workx.Mode}:
        raise argparse.ArgumentTypeError("expected single-v or adaptive-v")
    return text


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="JSON file supplying any option; command-line values win")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--points", type=int, help="grid resolution")
    g.add_argument("--rate", type=float, help="pair rate per setting, 1/s")
    g.add_argument("--duration", type=float, help="acquisition time per setting, s")
    g.add_argument("--resamples", type=int, help="Monte Carlo resamples")
    g.add_argument("--mode", type=_mode_arg, help="single-v or adaptive-v")
    g.add_argument("--degrees", action="store_true", help="angle inputs are in degrees")
    g.add_argument("-v", "--verbose", action="store_true")
    s = p.add_argument_group("state and protocol")
    s.add_argument("--mu", type=float)
    s.add_argument("--phi", type=float)
    s.add_argument("--base", choices=[b.value for b in states.Base])
    s.add_argument("--alpha", type=float)
    s.add_argument("--angles", type=float, nargs="+")
    s.add_argument("--n-angles", dest="n_angles", type=int)
    s.add_argument("--grid", type=int, help="number of circle normals scanned")
    s.add_argument("--restarts", type=int)
    s.add_argument("--tomography", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demonwork", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _global_flags()
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[parent], help=help_, description=help_)
    return parser


def load_config(argv: list[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    merged: dict[str, Any] = {}
    if "config" in ns:
        try:
            with open(ns["config"]) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        merged.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    merged.update({k: v for k, v in ns.items() if k not in ("config", "verbose")})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> str:
    func, _ = COMMANDS[cfg.command]
    return render(func(cfg), cfg.command, cfg.format)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING)
    try:
        cfg = load_config(argv)
        log.info("config: %s", asdict(cfg))
        text = run(cfg)
    except ConfigError as exc:
        print(f"demonwork: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"demonwork: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"demonwork: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
