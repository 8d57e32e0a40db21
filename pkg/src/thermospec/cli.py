"""Command-line front end: ``analyze``, ``validate`` and ``fixtures``.

Exit codes: 0 success, 1 failed fixture checks, 2 invalid configuration,
3 enumeration budget exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fixtures
from .config import AnalysisConfig, ConfigError, load
from .legendre import SampledConvexFunction, alpha_bounds, phase_transitions, transform_L1
from .potentials import Geometric, LocallyConstant, RegularityTag, classify, exact_table
from .spectra import (
    SpectrumCurve,
    Status,
    birkhoff_spectrum_direct,
    birkhoff_spectrum_legendre,
    dimension_spectrum,
    entropy_spectrum,
    glued_spectrum,
    high_entropy_window,
    lyapunov_spectra,
    pressure_function,
    singular_spectrum,
)
from .systems import BudgetExceeded, GluedSystem, PiecewiseConformalMap, as_symbolic
from .legendre import default_q_grid
from .thermo import pressure_curve, pressure_derivative_check, part_pressures

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 1, 2, 3, 4

REGION_TEXT = {
    Status.PROVED_EQUAL.value: "alpha is a one-sided derivative of a differentiable stretch of the pressure with an "
                               "equilibrium state there; the spectrum equals the Legendre transform",
    Status.HULL.value: "alpha lies in a phase-transition gap or at a closed endpoint without upper "
                       "semicontinuity; the Legendre transform is only an upper bound (concave hull)",
    Status.GLUED.value: "glued system; the spectrum is the maximum of the parts' exact spectra",
    Status.OUT_OF_DOMAIN.value: "alpha is outside the range of averages; the level set is empty",
    Status.HIGH_ENTROPY.value: "discontinuous potential; equality is proved only where the spectrum exceeds the "
                               "entropy carried by the discontinuities, elsewhere it is an upper bound",
    Status.SINGULAR.value: "potential takes the value +inf; equality is proved from the q <= 0 side",
}


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")
    path.write_bytes(buf.getvalue().encode("ascii"))


def write_spectrum(path: Path, spec: SpectrumCurve) -> None:
    _write_csv(path, ("alpha", "value", "status"), zip(spec.alpha, spec.values, spec.status))


class Analysis:
    """One ``analyze`` run: computes the requested artifacts and the report text."""

    def __init__(self, cfg: AnalysisConfig, out: Path, n_max: int | None = None):
        self.cfg = cfg
        self.out = out
        self.n_max = n_max
        self.report: list[str] = []
        self.spectra: dict[str, SpectrumCurve] = {}
        self.F: SampledConvexFunction | None = None

    @property
    def sym(self):
        return as_symbolic(self.cfg.system)

    def _check_length(self, n: int) -> None:
        if self.n_max is not None and n > self.n_max:
            raise BudgetExceeded(f"cylinder length {n} exceeds --n-max {self.n_max}")

    def _q_grid(self) -> np.ndarray:
        num = self.cfg.numeric
        grid = num.q_grid()
        if grid is not None:
            return grid
        if self.cfg.singular:
            return np.linspace(num.q_min, min(num.q_max, 0.0), 2001)
        return np.linspace(num.q_min, num.q_max, 4001)

    def _pressure_samples(self) -> SampledConvexFunction:
        if self.F is None:
            cfg = self.cfg
            zti = -math.inf if cfg.singular else 0.0
            func = pressure_function(self.sym, cfg.potential, zti)
            if cfg.numeric.q_step is None and not cfg.singular:
                grid = default_q_grid(func)
                hard = (False, False)
            else:
                grid = self._q_grid()
                hard = (False, True) if cfg.singular else (False, False)
            self.F = SampledConvexFunction(grid, func(grid), func, hard_ends=hard)
        return self.F

    # individual analyses ------------------------------------------------

    def pressure(self) -> None:
        cfg = self.cfg
        grid = self._q_grid()
        n = None
        if exact_table(cfg.potential) is None:
            n = cfg.numeric.n_bracket
            self._check_length(n)
        curve = pressure_curve(cfg.system if n else self.sym, cfg.potential, grid, n,
                               zero_times_inf=-math.inf if cfg.singular else 0.0, budget=cfg.numeric.budget)
        _write_csv(self.out / "pressure.csv", ("q", "value", "lo", "hi", "method"),
                   zip(curve.q_grid, curve.values, curve.lo, curve.hi, curve.method))
        self.report.append(f"pressure: {len(curve)} points on [{fmt(grid[0])}, {fmt(grid[-1])}], method {curve.method[0]}"
                           + (f" at n = {n}" if n else ""))
        for note in curve.notes:
            self.report.append(f"  note: {note}")

    def birkhoff(self) -> None:
        cfg = self.cfg
        alphas = cfg.numeric.alpha
        if cfg.singular:
            spec = singular_spectrum(self.sym, cfg.potential, self._q_grid(), alphas)
        elif isinstance(cfg.system, GluedSystem):
            try:
                spec = glued_spectrum(cfg.system, cfg.potential, cfg.numeric.q_grid(), alphas, cfg.numeric.kink_tol)
            except ValueError as exc:
                self.report.append(f"  note: per-part spectra unavailable ({exc}); using the Legendre transform")
                spec = birkhoff_spectrum_legendre(self._pressure_samples(), cfg.flags.equilibrium_available,
                                                  cfg.flags.entropy_usc, alphas, cfg.numeric.kink_tol)
        else:
            spec = birkhoff_spectrum_legendre(self._pressure_samples(), cfg.flags.equilibrium_available,
                                              cfg.flags.entropy_usc, alphas, cfg.numeric.kink_tol)
        h0 = cfg.numeric.h0
        reg = classify(cfg.potential, cfg.system)
        if h0 is None and reg.tag == RegularityTag.BOUNDED_MEASURABLE and reg.h0 > 0:
            h0 = reg.h0
        if h0 is not None and not cfg.singular:
            win = high_entropy_window(self._pressure_samples(), h0, spec)
            spec = win.spectrum
            ia = win.alpha_interval
            self.report.append(f"high-entropy window for h0 = {fmt(h0)}: alpha in "
                               + (f"({fmt(ia[0])}, {fmt(ia[1])})" if ia else "(empty)")
                               + (f", q in ({fmt(win.q_interval[0])}, {fmt(win.q_interval[1])})" if ia else ""))
        self.spectra["birkhoff"] = spec

    def entropy(self) -> None:
        cfg = self.cfg
        res = entropy_spectrum(self.sym, cfg.potential, None, cfg.numeric.q_grid(), cfg.flags.equilibrium_available,
                               cfg.flags.entropy_usc)
        self.report.append(f"entropy: P(phi) = {fmt(res.pressure)}")
        self.spectra["entropy"] = res.spectrum

    def lyapunov(self) -> None:
        res = lyapunov_spectra(self.cfg.cmap, self.cfg.numeric.q_grid(), self.cfg.flags.entropy_usc)
        self.report.append(f"lyapunov: Bowen root = {fmt(res.bowen_root)}, max L_D = {fmt(res.max_dimension)} "
                           f"at alpha = {fmt(res.argmax)}")
        self.spectra["lyapunov"] = res.entropy_curve
        self.spectra["lyapunov-dimension"] = res.dimension_curve

    def dimension(self) -> None:
        cfg = self.cfg
        pot = cfg.potential
        if isinstance(pot, Geometric):
            pot = pot.as_locally_constant()
        res = dimension_spectrum(cfg.cmap, pot, cfg.numeric.q_grid(), cfg.flags.entropy_usc)
        s = res.strip
        self.report.append(f"dimension: two-parameter pressure strip {'smooth' if s.smooth else 'NOT smooth'} "
                           f"(half-height {fmt(s.eta)})")
        self.spectra["dimension"] = res.spectrum

    def oracle(self) -> None:
        cfg = self.cfg
        num = cfg.numeric
        for n in num.n_list:
            self._check_length(n)
        target = cfg.system
        est = birkhoff_spectrum_direct(target, cfg.potential, num.alpha, num.epsilon, num.n_list, num.budget)
        legendre = [math.nan] * len(est)
        if exact_table(cfg.potential) is not None and not cfg.singular:
            legendre = [t.value for t in transform_L1(self._pressure_samples(), [e.alpha for e in est])]
        rows = []
        for e, lv in zip(est, legendre):
            for n, count, value in e.trace:
                rows.append((e.alpha, e.epsilon, n, count, value, lv, abs(value - lv) if math.isfinite(value) and math.isfinite(lv) else math.nan))
        _write_csv(self.out / "oracle.csv", ("alpha", "epsilon", "n", "count", "oracle", "legendre", "difference"), rows)
        worst = max((r[-1] for r in rows if r[2] == max(num.n_list) and math.isfinite(r[-1])), default=math.nan)
        self.report.append(f"oracle-compare: {len(est)} alpha points, n = {list(num.n_list)}, epsilon = {fmt(num.epsilon)}, "
                           f"max |oracle - legendre| at largest n = {fmt(worst)}")

    def phase_report(self) -> None:
        cfg = self.cfg
        lines = ["# phase transitions of q -> P(q phi)", "q,left_slope,right_slope,refined"]
        if exact_table(cfg.potential) is None:
            lines.append("# unavailable: needs an exact pressure")
        else:
            F = self._pressure_samples()
            kinks = phase_transitions(F, cfg.numeric.kink_tol)
            for k in kinks:
                lines.append(",".join((fmt(k.q), fmt(k.left_slope), fmt(k.right_slope), "true" if k.refined else "false")))
            lo, hi = alpha_bounds(F)
            lines.append(f"# range of averages: [{fmt(lo)}, {fmt(hi)}]")
            for k in kinks:
                if isinstance(cfg.system, GluedSystem):
                    parts = part_pressures(cfg.system, cfg.potential, k.q)
                    lines.append(f"# at q = {fmt(k.q)}: part pressures " + " ".join(fmt(p) for p in parts))
                if not cfg.singular:
                    d = pressure_derivative_check(self.sym, cfg.potential, k.q)
                    lines.append(f"# at q = {fmt(k.q)}: differentiable = {str(d.differentiable).lower()}")
            self.report.append(f"phase-report: {len(kinks)} transition(s)")
        (self.out / "transitions.txt").write_bytes(("\n".join(lines) + "\n").encode("ascii"))

    # driver ---------------------------------------------------------------

    def run(self) -> None:
        steps = {
            "pressure": self.pressure,
            "birkhoff": self.birkhoff,
            "entropy": self.entropy,
            "lyapunov": self.lyapunov,
            "dimension": self.dimension,
            "oracle-compare": self.oracle,
            "phase-report": self.phase_report,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        for name in self.cfg.analyses:
            steps[name]()
        order = ("birkhoff", "entropy", "lyapunov", "dimension")
        primary = next((k for k in order if k in self.spectra), None)
        for kind, spec in self.spectra.items():
            write_spectrum(self.out / f"spectrum_{kind}.csv", spec)
        if primary:
            write_spectrum(self.out / "spectrum.csv", self.spectra[primary])
        self._write_report(primary)

    def _write_report(self, primary: str | None) -> None:
        cfg = self.cfg
        reg = classify(cfg.potential, cfg.system)
        head = [
            f"config: {cfg.source or '<string>'}" + (f" ({cfg.label})" if cfg.label else ""),
            f"system: {cfg.system!r}",
            f"potential: {type(cfg.potential).__name__}" + (f" {cfg.potential.label}" if getattr(cfg.potential, 'label', '') else ""),
            "",
            "assumptions",
            f"  regularity class: {reg.tag.value}" + (f" (h0 = {fmt(reg.h0)})" if reg.tag == RegularityTag.BOUNDED_MEASURABLE else ""),
            f"  regularity note: {reg.note}" if reg.note else "  regularity note: none",
            f"  entropy map upper semicontinuous (declared): {str(cfg.flags.entropy_usc).lower()}",
            f"  equilibrium states available (declared): {str(cfg.flags.equilibrium_available).lower()}",
            "",
            "analyses",
        ]
        body = ["  " + line for line in self.report]
        regions = ["", "spectrum regions"]
        for kind, spec in self.spectra.items():
            marker = " (spectrum.csv)" if kind == primary else ""
            regions.append(f"  {kind}{marker}: {len(spec)} points")
            for st in Status:
                count = sum(1 for s in spec.status if s == st.value)
                if count:
                    regions.append(f"    {st.value} x{count}: {REGION_TEXT[st.value]}")
            for note in spec.notes:
                regions.append(f"    note: {note}")
        text = "\n".join(head + body + (regions if self.spectra else [])) + "\n"
        (self.out / "report.txt").write_bytes(text.encode("utf-8"))


def analyze(config_path: str, out: str | Path, n_max: int | None = None) -> Analysis:
    cfg = load(config_path)
    a = Analysis(cfg, Path(out), n_max)
    a.run()
    return a


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermospec", description="Pressure functions and multifractal spectra.")
    sub = p.add_subparsers(dest="verb", required=True)
    a = sub.add_parser("analyze", help="run the analyses listed in a config")
    a.add_argument("config")
    a.add_argument("--out", default="out", help="output directory (default: ./out)")
    a.add_argument("--n-max", type=int, default=None, help="refuse cylinder enumerations longer than this")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    f = sub.add_parser("fixtures", help="built-in closed-form scenarios")
    fsub = f.add_subparsers(dest="action", required=True)
    fsub.add_parser("list")
    r = fsub.add_parser("run")
    r.add_argument("name", help="fixture name or 'all'")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "validate":
            cfg = load(args.config)
            print(f"{args.config}: ok ({', '.join(cfg.analyses)})")
            return EXIT_OK
        if args.verb == "analyze":
            if args.n_max is not None and args.n_max < 1:
                print("--n-max must be positive", file=sys.stderr)
                return EXIT_CONFIG
            analyze(args.config, args.out, args.n_max)
            print(f"wrote results to {args.out}")
            return EXIT_OK
        if args.action == "list":
            for name in fixtures.FIXTURES:
                print(f"{name}: {fixtures.describe(name)}")
            return EXIT_OK
        names = list(fixtures.FIXTURES) if args.name == "all" else [args.name]
        ok = True
        for name in names:
            for check in fixtures.run(name):
                print(f"[{name}] {check.line()}")
                ok &= check.passed
        return EXIT_OK if ok else EXIT_CHECKS
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ArithmeticError, ValueError, TypeError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
