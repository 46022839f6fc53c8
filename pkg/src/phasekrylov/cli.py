"""Command-line front end: run an experiment from an INI config and write CSV/JSON/binary output.

Config sections (see configs/*.ini):

    [system]   N, L, mass, potential = harmonic | quartic | polynomial,
               omega, g, coeffs (comma-separated, constant term first)
    [state]    kind = coherent | gaussian | eigenstate, q0, p0, width, index
    [operator] observable = position | energy, n_levels, probe = position
    [run]      t_max, n_samples, k_max (0 = run to closure), tol, lambda_max,
               fd_step, check_tol, n_bases, theta
    [outputs]  directory, formats

Exit status is 0 when every identity checked by the command holds within its
tolerance, 1 when one fails, 2 on a configuration or numerical error. Errors
are printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import complexity as cx
from . import dynamics as dy
from . import krylov as kr
from . import quantum as qm
from . import superphase as sp
from . import wigner as wg
from .gridcore import make_grid
from .moyal import star_genvalue_residual, star_lanczos_step

POTENTIALS = ("harmonic", "quartic", "polynomial")
STATE_KINDS = ("coherent", "gaussian", "eigenstate")
OBSERVABLES = ("position", "energy")
FORMATS = ("csv", "json", "bin")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

@dataclass
class SystemSpec:
    N: int = 256
    L: float = 24.0
    mass: float = 1.0
    potential: str = "harmonic"
    omega: float = 1.0
    g: float = 0.05
    coeffs: tuple = ()


@dataclass
class StateSpec:
    kind: str = "coherent"
    q0: float = 1.5
    p0: float = 0.0
    width: float = 1.0
    index: int = 0


@dataclass
class OperatorSpec:
    observable: str = "position"
    n_levels: int = 4
    probe: str = "position"


@dataclass
class RunSpec:
    t_max: float = 4 * np.pi
    n_samples: int = 50
    k_max: int = 0
    tol: float = 1e-10
    lambda_max: int = 3
    fd_step: float = 1e-4
    check_tol: float = 1e-5
    n_bases: int = 0
    theta: float = 0.1


@dataclass
class OutputSpec:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass
class ExperimentConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    state: StateSpec = field(default_factory=StateSpec)
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    run: RunSpec = field(default_factory=RunSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    def validate(self):
        s, r = self.system, self.run
        if s.potential not in POTENTIALS:
            raise ConfigError(f"unknown potential {s.potential!r}; built-ins are {POTENTIALS}")
        if s.potential == "polynomial" and not s.coeffs:
            raise ConfigError("polynomial potential needs coeffs")
        if self.state.kind not in STATE_KINDS:
            raise ConfigError(f"unknown state kind {self.state.kind!r}")
        if self.operator.observable not in OBSERVABLES or self.operator.probe not in OBSERVABLES:
            raise ConfigError(f"observables must be one of {OBSERVABLES}")
        for name in ("L", "mass", "omega"):
            if getattr(s, name) <= 0:
                raise ConfigError(f"system.{name} must be positive")
        for name in ("t_max", "n_samples", "tol", "fd_step", "check_tol", "theta"):
            if getattr(r, name) <= 0:
                raise ConfigError(f"run.{name} must be positive")
        if r.k_max < 0 or r.n_bases < 0 or self.operator.n_levels < 1:
            raise ConfigError("k_max, n_bases must be >= 0 and n_levels >= 1")
        if r.lambda_max < 1 or r.lambda_max % 2 == 0:
            raise ConfigError(f"run.lambda_max must be a positive odd integer, got {r.lambda_max}")
        for f in self.outputs.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown output format {f!r}")
        return self

    # round trip through INI text
    def to_ini(self) -> str:
        cp = _parser()
        for name, sec in asdict(self).items():
            cp[name] = {k: _fmt(v) for k, v in sec.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = _parser()
        cp.read_string(text)
        unknown = set(cp.sections()) - {"system", "state", "operator", "run", "outputs"}
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        cfg = cls()
        for name in ("system", "state", "operator", "run", "outputs"):
            if name in cp:
                _fill(getattr(cfg, name), cp[name], name)
        return cfg.validate()

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_ini(Path(path).read_text())


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep N distinct from n
    return cp


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _fill(obj, section, name):
    for key, raw in section.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown key {name}.{key}")
        cur = getattr(obj, key)
        try:
            if isinstance(cur, bool):
                val = section.getboolean(key)
            elif isinstance(cur, int):
                val = int(raw)
            elif isinstance(cur, float):
                val = float(raw)
            elif isinstance(cur, tuple):
                parts = [p.strip() for p in raw.split(",") if p.strip()]
                val = tuple(float(p) for p in parts) if key == "coeffs" else tuple(parts)
            else:
                val = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
        setattr(obj, key, val)


# ---------------------------------------------------------------- builders

def build_potential(s: SystemSpec):
    if s.potential == "harmonic":
        return qm.harmonic_potential(s.omega, s.mass)
    if s.potential == "quartic":
        return qm.quartic_potential(s.omega, s.g, s.mass)
    return qm.PolynomialPotential(tuple(s.coeffs))


def build_state(grid, spec, st: StateSpec) -> qm.StateVector:
    if st.kind == "eigenstate":
        return spec.state(st.index)
    if st.kind == "coherent":
        return qm.coherent_state(grid, st.q0, st.p0, 1.0)
    return qm.gaussian_state(grid, st.q0, st.p0, st.width)


@dataclass
class System:
    grid: object
    potential: object
    H: object
    spec: object


def build_system(cfg: ExperimentConfig) -> System:
    s = cfg.system
    grid = make_grid(s.N, s.L, s.mass)
    pot = build_potential(s)
    H = qm.build_hamiltonian(grid, pot)
    return System(grid, pot, H, qm.eigendecompose(H))


def _times(r: RunSpec) -> np.ndarray:
    return np.linspace(0.0, r.t_max, r.n_samples)


def _observable(sysm: System, name: str, n_levels: int) -> qm.OperatorMatrix:
    base = qm.position_operator(sysm.grid) if name == "position" else sysm.H
    return qm.low_energy_projection(sysm.spec, base, n_levels)


# ---------------------------------------------------------------- output

class Writer:
    """Writes tables in the requested formats plus a manifest naming each relation."""

    def __init__(self, out: Path, formats):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.formats = tuple(formats)
        self.manifest = {}

    def table(self, name: str, header, rows, relation: str):
        rows = [list(r) for r in rows]
        if "csv" in self.formats or not ({"json"} & set(self.formats)):
            path = self.out / f"{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for r in rows:
                    w.writerow([_cell(x) for x in r])
            self.manifest[path.name] = relation
        if "json" in self.formats:
            path = self.out / f"{name}.json"
            path.write_text(json.dumps({"relation": relation, "columns": list(header),
                                        "rows": [[_jsonable(x) for x in r] for r in rows]}, indent=1))
            self.manifest[path.name] = relation

    def summary(self, name: str, data: dict, relation: str):
        path = self.out / f"{name}.json"
        path.write_text(json.dumps({k: _jsonable(v) for k, v in data.items()}, indent=2, sort_keys=True))
        self.manifest[path.name] = relation

    def close(self):
        (self.out / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True))


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------- commands

def _state_setup(cfg):
    sysm = build_system(cfg)
    psi0 = build_state(sysm.grid, sysm.spec, cfg.state)
    psi0.check_boundary()
    k_max = cfg.run.k_max or None
    kb = kr.lanczos_state(sysm.H, psi0, k_max=k_max, tol=cfg.run.tol, spectrum=sysm.spec)
    pset = wg.krylov_phase_set(kb)
    return sysm, psi0, kb, pset, wg.spreading_kernel(pset)


def cmd_state_complexity(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    sysm, psi0, kb, pset, K = _state_setup(cfg)
    rows, snaps, worst = [], [], 0.0
    ts = _times(cfg.run)
    snap_idx = set(np.linspace(0, len(ts) - 1, 5).astype(int).tolist())
    for i, t in enumerate(ts):
        psi = qm.evolve_state(sysm.spec, psi0, t)
        phi = kr.amplitudes(kb, psi, t)
        cd = cx.complexity_direct(phi)
        cp = cx.complexity_phase(wg.wigner_of_state(psi), K)
        gap = abs(cd - cp)
        worst = max(worst, gap / (1 + cd))
        rows.append([t, cd, cp, gap, cx.generalized_complexity(phi, 2)])
        if i in snap_idx:
            snaps += [[t, n, p] for n, p in enumerate(phi.probabilities)]
    w.table("complexity", ["t", "C_direct", "C_phase", "abs_diff", "C2_direct"], rows,
            "C_direct = sum_n n |phi_n(t)|^2; C_phase = integral of K(q,p) W(q,p,t); "
            "C2_direct = sum_n n^2 |phi_n(t)|^2")
    w.table("lanczos", ["n", "a_n", "b_n"], [[n, a, b] for n, (a, b) in enumerate(zip(kb.a, kb.b))],
            "three-term recursion H K_n = a_n K_n + b_{n+1} K_{n+1} + b_n K_{n-1}")
    w.table("spreading", ["t", "n", "p_n"], snaps, "p_n(t) = |<K_n|psi(t)>|^2 at snapshot times")
    b1 = float(kb.b[1]) if kb.dim > 1 else 0.0
    summary = {"D_K": kb.dim, "b1": b1, "max_rel_diff": worst, "tolerance": cfg.run.check_tol}
    if b1 > 0:
        te = np.linspace(1e-3, 1e-2, 20) / b1
        Ce = [cx.complexity_direct(kr.amplitudes(kb, qm.evolve_state(sysm.spec, psi0, t), t)) for t in te]
        summary["early_fit"] = cx.early_time_fit(te, Ce)
    if cfg.run.k_max and kb.dim == cfg.run.k_max:
        summary["long_time_average"] = "undefined: chain truncated at k_max"
    else:
        try:
            summary["long_time_average"] = cx.long_time_average(kb, sysm.spec, psi0)
        except cx.ComplexityError as exc:
            summary["long_time_average"] = f"undefined: {exc}"
    if cfg.run.n_bases and kb.dim > 2:
        probe = cx.minimization_probe(kb, lambda t: kr.amplitudes(kb, qm.evolve_state(sysm.spec, psi0, t), t),
                                      ts, cfg.run.n_bases, np.random.default_rng(seed))
        summary["minimization_window_end"] = probe.window_end
        w.table("minimization", ["t", "C_krylov", "min_cost_gap"],
                list(zip(probe.times, probe.krylov_cost, probe.min_gap)),
                "min over sampled rotated bases of sum_n n |<B_n|psi(t)>|^2 minus the Krylov cost")
    ok = worst <= cfg.run.check_tol
    summary["pass"] = ok
    w.summary("summary", summary, "run summary: b1, early-time fit of C ~ beta t^2, long-time average")
    return ok


def cmd_rate_split(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    sysm, psi0, kb, pset, K = _state_setup(cfg)
    lam = list(range(3, cfg.run.lambda_max + 1, 2))
    h = cfg.run.fd_step
    C = lambda t: cx.complexity_direct(kr.amplitudes(kb, qm.evolve_state(sysm.spec, psi0, t), t))
    rows, worst = [], 0.0
    for t in _times(cfg.run):
        W = wg.wigner_of_state(qm.evolve_state(sysm.spec, psi0, t))
        rc, rq = dy.complexity_rate_split(K, dy.liouville_split(W, sysm.potential, cfg.run.lambda_max, cfg.system.mass))
        qcols = [rq.get(l, 0.0) for l in lam]
        total = rc + sum(qcols)
        if t >= h:
            fd = (C(t + h) - C(t - h)) / (2 * h)
        else:  # second-order one-sided stencil at the start of the run
            fd = (-3 * C(t) + 4 * C(t + h) - C(t + 2 * h)) / (2 * h)
        worst = max(worst, abs(total - fd))
        rows.append([t, rc, *qcols, total, fd, abs(total - fd)])
    header = ["t", "rate_classical", *[f"rate_quantum_l{l}" for l in lam], "rate_sum", "fd_total", "abs_diff"]
    w.table("rate_split", header, rows,
            "rate_classical = integral of K times (-(p/m) dW/dq + V'(q) dW/dp); rate_quantum_lL = integral of K "
            "times (1/L!) (2i)^(1-L) V^(L)(q) d^L W/dp^L; fd_total = second-order finite difference of C(t)")
    ok = worst <= 1e-4
    w.summary("summary", {"max_abs_diff": worst, "tolerance": 1e-4, "pass": ok, "lambdas": lam},
              "rate split summary")
    return ok


def _operator_setup(cfg):
    sysm = build_system(cfg)
    O0 = qm.hs_normalize(_observable(sysm, cfg.operator.observable, cfg.operator.n_levels))
    kb = kr.lanczos_operator(sysm.H, O0, k_max=cfg.run.k_max or None, tol=cfg.run.tol, spectrum=sysm.spec)
    return sysm, O0, kb


def cmd_operator_complexity(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    sysm, O0, kb = _operator_setup(cfg)
    ops = sp.operator_krylov_phase_set(kb)
    rows, worst = [], 0.0
    for t in _times(cfg.run):
        Ot = qm.evolve_operator(sysm.spec, O0, t)
        cd = sp.operator_complexity_direct(kb, Ot)
        cph = sp.operator_complexity_phase(ops, Ot)
        cc = sp.operator_complexity_centre(ops, Ot)
        worst = max(worst, abs(cd - cph), abs(cd - cc))
        rows.append([t, cd, cph, cc, abs(cd - cph)])
    w.table("operator_complexity", ["t", "C_direct", "C_double_phase", "C_centre", "abs_diff"], rows,
            "C_direct = sum_n n |<<O_n|O(t)>>|^2; C_double_phase = double-phase integral of W_O(t) "
            "against (2 pi)^2 sum_n n W_nn; C_centre = sum_n n |int conj(O_n) O(t)|^2 / (2 pi D)^2")
    w.table("operator_lanczos", ["n", "b_n"], list(enumerate(kb.b)), "Liouvillian recursion coefficients")
    ok = worst <= 1e-4
    w.summary("summary", {"D_K": kb.dim, "max_abs_diff": worst, "tolerance": 1e-4, "pass": ok},
              "operator complexity summary")
    return ok


def cmd_otoc(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    sysm = build_system(cfg)
    O0 = qm.hs_normalize(_observable(sysm, cfg.operator.observable, cfg.operator.n_levels))
    V = _observable(sysm, cfg.operator.probe, cfg.operator.n_levels)
    kb = kr.lanczos_operator(sysm.H, O0, k_max=cfg.run.k_max or None, tol=cfg.run.tol, spectrum=sysm.spec)
    ts = _times(cfg.run)
    rows, worst, F, CK = [], 0.0, [], []
    for t in ts:
        Ot = qm.evolve_operator(sysm.spec, O0, t)
        ft, fp = sp.otoc_direct(V, Ot), sp.otoc_phase(V, Ot)
        rel = abs(ft - fp) / max(abs(ft), 1e-12) if abs(ft) > 1e-12 else abs(ft - fp)
        worst = max(worst, rel)
        F.append(ft)
        CK.append(sp.operator_complexity_direct(kb, Ot))
        rows.append([t, ft, fp, rel, CK[-1]])
    summary = {"max_rel_gap": worst, "tolerance": 1e-4}
    try:
        diag = sp.growth_bound_diagnostic(ts, F, CK)
        for r, q in zip(rows, diag.ratios):
            r.append(q)
        summary.update({"bound_c": diag.c, "bound_max_ratio_after_fit": diag.max_ratio_after_fit,
                        "bound_violations": diag.violations})
    except ValueError as exc:
        for r in rows:
            r.append(float("nan"))
        summary["bound_c"] = f"undefined: {exc}"
    w.table("otoc", ["t", "F_trace", "F_phase", "rel_gap", "C_K", "F_over_cC"], rows,
            "F_trace = <<[V,O(t)]|[V,O(t)]>>; F_phase = double-phase integral of W_O(t) against "
            "V*V(x+) + V*V(x-) - 2 V(x+) V(x-); F_over_cC monitors F <= c C_K with c fitted on the "
            "first three samples with C_K > 0 (diagnostic, not checked)")
    ok = worst <= 1e-4
    summary["pass"] = ok
    w.summary("summary", summary, "squared commutator summary")
    return ok


def cmd_wigner_dump(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    sysm = build_system(cfg)
    psi0 = build_state(sysm.grid, sysm.spec, cfg.state)
    psi0.check_boundary()
    for i, t in enumerate(_times(cfg.run)):
        W = wg.wigner_of_state(qm.evolve_state(sysm.spec, psi0, t))
        if "bin" in w.formats:
            binp, _ = wg.save_field(W, w.out / f"wigner_{i:04d}")
            w.manifest[binp.name] = f"W(q,p,t={t!r}), Wigner normalization"
        if "csv" in w.formats or "json" in w.formats:
            q, v = wg.slice_rows(W, "q")
            w.table(f"wigner_slice_{i:04d}", ["q", "W_at_p0"], zip(q, v.real), f"W(q, p=0, t={t!r})")
    return True


# ---------------------------------------------------------------- identity suite

def _suite_checks(cfg: ExperimentConfig, seed: int):
    """(name, residual, tolerance) on small instances."""
    out = []
    g = make_grid(256, 20.0)
    H = qm.build_hamiltonian(g, qm.harmonic_potential())
    spec = qm.eigendecompose(H)
    W0 = wg.wigner_of_state(spec.state(0))
    out.append(("ground-state W(0,0) = 1/pi", abs(W0.values[128, 128].real - 1 / np.pi), 1e-6))
    out.append(("Wigner normalization", abs(W0.integrate() - 1), 1e-8))
    Hf = wg.hamiltonian_symbol(g, qm.harmonic_potential())
    normH = float(np.max(np.abs(Hf.values)))
    res = max(star_genvalue_residual(Hf, wg.wigner_of_state(spec.state(n)),
                                     spec.eigenvalues[n], spec.eigenvalues[n]) for n in range(10))
    out.append(("star-genvalue residual / ||H||", res / normH, 1e-6))

    g = make_grid(256, 24.0)
    pot = qm.harmonic_potential()
    H = qm.build_hamiltonian(g, pot)
    spec = qm.eigendecompose(H)
    psi0 = qm.coherent_state(g, 1.5, 0.0)
    kb = kr.lanczos_state(H, psi0, k_max=8, spectrum=spec)
    pset = wg.krylov_phase_set(kb)
    F = pset.fields.reshape(8 * 8, -1)
    G = pset.grid.cell_area * (F @ F.conj().T)
    ideal = np.eye(64) / (2 * np.pi)
    out.append(("Krylov phase-function orthonormality", float(np.max(np.abs(G - ideal))), 1e-6))
    Hfield = wg.hamiltonian_field(g, pot)
    res = max(float(np.max(np.abs(star_lanczos_step(Hfield, pset, n).values
                                   - kb.b[n + 1] * pset.fields[n + 1, n]))) for n in range(7))
    out.append(("star-Lanczos step residual / ||H||", res / float(np.max(np.abs(Hfield.values))), 1e-6))
    K = wg.spreading_kernel(pset)
    M = np.array([[np.real(K.overlap(pset.field(i, j))) for j in range(8)] for i in range(8)])
    out.append(("kernel integrals j delta_ij", float(np.max(np.abs(M - np.diag(np.arange(8))))), 1e-6))
    W = wg.wigner_of_state(qm.evolve_state(spec, psi0, 0.7))
    split = dy.liouville_split(W, pot, 3)
    out.append(("harmonic quantum terms vanish",
                float(np.max(np.abs(dy.quantum_term(W, pot, 3).values))), 1e-12))
    out.append(("split equals Moyal rhs",
                float(np.max(np.abs(split.total().values - dy.moyal_rhs(W, Hfield).values))), 1e-5))

    g = make_grid(32, float(np.sqrt(32 * np.pi)))
    pot = qm.quartic_potential(g=0.05)
    H = qm.build_hamiltonian(g, pot)
    spec = qm.eigendecompose(H)
    Q = qm.position_operator(g)
    O0 = qm.hs_normalize(qm.low_energy_projection(spec, Q, 4))
    okb = kr.lanczos_operator(H, O0, k_max=4, spectrum=spec)
    ops = sp.operator_krylov_phase_set(okb)
    D = okb.dim
    ov = np.array([[[[ops.field(n, m).inner(ops.field(i, j)) for j in range(D)] for i in range(D)]
                    for m in range(D)] for n in range(D)])
    ideal = np.einsum("ni,mj->nmij", np.eye(D), np.eye(D)) / (2 * np.pi) ** 2
    out.append(("double orthonormality", float(np.max(np.abs(ov - ideal))), 1e-4))
    Ot = qm.evolve_operator(spec, O0, 0.9)
    out.append(("operator complexity double-phase vs direct",
                abs(sp.operator_complexity_phase(ops, Ot) - sp.operator_complexity_direct(okb, Ot)), 1e-4))
    V = qm.low_energy_projection(spec, Q, 4)
    ft = sp.otoc_direct(V, Ot)
    out.append(("squared commutator phase vs trace", abs(sp.otoc_phase(V, Ot) - ft) / ft, 1e-4))
    hf = wg.hamiltonian_symbol(g, qm.harmonic_potential())
    Qg, Pg, xq, xp = sp.dwt_minus(hf).centre_chord()
    out.append(("oscillator Liouvillian transform",
                float(np.max(np.abs(sp.dwt_minus(hf).values - (Qg * xq + Pg * xp)))), 1e-10))
    return out


def cmd_identity_suite(cfg: ExperimentConfig, w: Writer, seed: int) -> bool:
    checks = _suite_checks(cfg, seed)
    rows = [[name, res, tol, bool(res <= tol)] for name, res, tol in checks]
    w.table("identity_suite", ["check", "residual", "tolerance", "pass"], rows,
            "measured residual of each identity on a small instance")
    return all(r[3] for r in rows)


COMMANDS = {
    "state-complexity": cmd_state_complexity,
    "rate-split": cmd_rate_split,
    "operator-complexity": cmd_operator_complexity,
    "otoc": cmd_otoc,
    "identity-suite": cmd_identity_suite,
    "wigner-dump": cmd_wigner_dump,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasekrylov", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="INI experiment config (defaults when omitted)")
    ap.add_argument("--out", type=Path, help="output directory (overrides outputs.directory)")
    ap.add_argument("--format", choices=FORMATS, action="append",
                    help="output format; repeat for several (overrides outputs.formats)")
    ap.add_argument("--seed", type=int, default=0, help="seed for random-basis sampling")
    ap.add_argument("--threads", type=int, default=None, help="cap on BLAS/FFT threads")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig().validate()
        if args.format:
            cfg.outputs.formats = tuple(args.format)
        out = args.out if args.out is not None else Path(cfg.outputs.directory)
        w = Writer(out, cfg.outputs.formats)
        (w.out / "config.ini").write_text(cfg.to_ini())
        with threadpool_limits(limits=args.threads):
            ok = COMMANDS[args.command](cfg, w, args.seed)
        w.close()
    except Exception as exc:  # reported as machine-readable JSON
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err), file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, "pass": bool(ok), "out": str(out)}))
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
