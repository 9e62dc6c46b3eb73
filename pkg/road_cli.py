"""RoadNet command-line front end.

Usage:
    python road_cli.py gen --n 2500 --seed 7 --out pts.csv
    python road_cli.py build --family beta --beta 1.0 --in pts.csv --out net/
    python road_cli.py stats --in net/
    python road_cli.py table1 --n 2500 --reps 10 --seed 7 --out run1/

Exit status is 0 on success, 1 on a RoadNet error (one-line diagnostic on
stderr) and 2 on a usage error.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from road_errors import InvalidParameterError, RoadNetError
from road_settings import get_settings

logger = logging.getLogger("roadnet.cli")

STOCHASTIC_FAMILIES = ("hammersley",)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _add_profile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.add_argument("--inner-margin", type=float, default=None)
    p.add_argument("--min-count", type=int, default=None)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--out", default=None, help="run directory (default: <runs_dir>/<verb>-<config hash>)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON experiment config or run manifest")
    _add_profile_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadnet", description="Spatial networks on random points")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="sample a point configuration")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=("finite-uniform", "poisson"), default="finite-uniform")
    p.add_argument("--side", type=float, default=None, help="window side for the Poisson model")
    p.add_argument("--rate", type=float, default=1.0)

    from builders import FAMILIES
    p = sub.add_parser("build", help="build a network over a points file")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--method", choices=("bowyer-watson", "scipy"), default="bowyer-watson")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--lines", type=float, default=None, help="overlay a Poisson line process of this intensity")
    p.add_argument("--planarize", action="store_true")

    p = sub.add_parser("stats", help="summary statistics of a network")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None, help="summary JSON path (default stdout)")
    p.add_argument("--profile-out", default=None, help="ratio profile CSV path")
    p.add_argument("--planarized", action=argparse.BooleanOptionalAction, default=None,
                   help="route on the planarized network (default: only for hammersley)")
    _add_profile_flags(p)

    p = sub.add_parser("table1", help="tractable network statistics")
    _add_experiment_flags(p)

    p = sub.add_parser("fig6", help="ratio profiles of the nested families")
    _add_experiment_flags(p)

    p = sub.add_parser("fig7", help="length/efficiency trade-off along the beta family")
    _add_experiment_flags(p)
    p.add_argument("--betas", type=_float_list, default=None)

    p = sub.add_parser("converge", help="convergence of length and degree in n")
    _add_experiment_flags(p)
    p.add_argument("--family", default="gabriel")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--n-grid", type=_int_list, default=None)

    p = sub.add_parser("paradox", help="average stretch against line overlays")
    _add_experiment_flags(p)
    p.add_argument("--intensities", type=_float_list, default=None)

    p = sub.add_parser("render", help="render a network to SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pixels", type=int, default=800)
    p.add_argument("--junctions", action="store_true")

    p = sub.add_parser("analytics-dump", help="write every analytic constant as CSV")
    p.add_argument("--out", default=None)
    p.add_argument("--betas", type=_float_list, default=None)
    return parser


class CommandRunner:
    """Executes parsed commands, logging each through the audit trail."""

    def __init__(self, parser: argparse.ArgumentParser, log_callback=None):
        self.parser = parser
        self.settings = get_settings()
        self.log_callback = log_callback

    def _log(self, action: str, success: bool, details: str = "", duration_ms: int = 0):
        if self.log_callback:
            self.log_callback("cli", action, success, details)
        (logger.info if success else logger.error)("%s: %s", action, details)
        if self.settings.audit_enabled:
            from road_database import get_audit_log
            get_audit_log().log_action(component="cli", action=action, output_summary=details,
                                       duration_ms=duration_ms, success=success)

    def usage_error(self, message: str):
        self.parser.error(message)

    def _profile(self, args, inner_margin: Optional[float] = None, planarized: bool = False):
        from metrics import ProfileParams
        base = ProfileParams.from_settings(inner_margin)
        updates = {
            "bin_width": args.bin_width,
            "d_max": args.d_max,
            "inner_margin": args.inner_margin,
            "min_count": args.min_count,
        }
        values = {**base.model_dump(), **{k: v for k, v in updates.items() if v is not None}}
        values["planarized"] = planarized
        try:
            return ProfileParams(**values)
        except ValueError as exc:
            raise InvalidParameterError("profile", str(exc).splitlines()[0]) from exc

    # ---- verbs ----

    def cmd_gen(self, args) -> None:
        import net_io
        from geometry import Window, sample_finite_model, sample_poisson
        if args.model == "finite-uniform":
            if args.n is None:
                self.usage_error("gen: --n is required for the finite-uniform model")
            config = sample_finite_model(args.n, args.seed)
        else:
            if args.side is None:
                self.usage_error("gen: --side is required for the poisson model")
            config = sample_poisson(Window(args.side), args.rate, args.seed)
        net_io.write_points(config, args.out)
        self._log("gen", True, f"{config.n} points -> {args.out}")

    def cmd_build(self, args) -> None:
        import net_io
        from builders import build_family, overlay_line_process, planarize
        needed = {"beta": "beta", "gp": "p", "geometric": "c", "k-neighbor": "K"}.get(args.family)
        if needed and getattr(args, needed) is None:
            self.usage_error(f"build: --{needed} is required for family {args.family}")
        stochastic = args.family in STOCHASTIC_FAMILIES or args.lines is not None
        if stochastic and args.seed is None:
            self.usage_error("build: --seed is required for stochastic networks")

        config = net_io.read_points(args.input)
        params = {k: getattr(args, k) for k in ("beta", "p", "c", "K") if getattr(args, k) is not None}
        params["method"] = args.method
        net = build_family(config, args.family, params, seed=args.seed)
        if args.lines is not None:
            net = overlay_line_process(net, args.lines, args.seed)
        if args.planarize:
            net = planarize(net)
        net_io.write_network(net, args.out)
        self._log("build", True, f"{net!r} -> {args.out}")

    def cmd_stats(self, args) -> None:
        import net_io
        from metrics import summarize_with_profile
        net = net_io.read_network(args.input)
        hammersley = net.family.label == "hammersley"
        margin = self.settings.hammersley_margin if hammersley else None
        planarized = hammersley if args.planarized is None else args.planarized
        params = self._profile(args, margin, planarized)
        summary, profile = summarize_with_profile(net, params)
        if summary.unreachable_fraction > 0:
            print(f"warning: network is disconnected ({summary.components} components); "
                  f"route statistics are infinite", file=sys.stderr)
        if args.profile_out:
            net_io.write_profile(profile, args.profile_out)
        if args.out:
            net_io.write_summary(summary, args.out)
        else:
            print(json.dumps({"schema": net_io.SCHEMA_VERSION, **summary.to_dict()}, indent=2, sort_keys=True))
        self._log("stats", True, f"L={summary.L:.4f} R~={summary.r_tilde}")

    def _experiment(self, args, experiment: str, **extra):
        from experiments import ExperimentConfig, ExperimentHarness, load_config
        if args.config:
            config = load_config(args.config)
            if config.experiment != experiment:
                self.usage_error(f"{experiment}: config describes experiment {config.experiment!r}")
        else:
            if args.seed is None:
                self.usage_error(f"{experiment}: --seed is required")
            values = {
                "experiment": experiment,
                "n": args.n if args.n is not None else 2500,
                "replicates": args.reps if args.reps is not None else self.settings.replicates,
                "master_seed": args.seed,
                "profile": self._profile(args),
                "hammersley_margin": self.settings.hammersley_margin,
                "gp_max_n": self.settings.gp_max_n,
                "code_version": self.settings.code_version,
                **{k: v for k, v in extra.items() if v is not None},
            }
            try:
                config = ExperimentConfig(**values)
            except ValueError as exc:
                raise InvalidParameterError("config", str(exc).splitlines()[0]) from exc
        out_dir = args.out or Path(self.settings.runs_dir) / f"{experiment}-{config.config_hash()}"
        harness = ExperimentHarness(workers=args.workers, log_callback=self.log_callback)
        return harness.run(config, out_dir=out_dir)

    def cmd_table1(self, args) -> None:
        result = self._experiment(args, "table1")
        for row in result.table:
            print(f"{row.family:>12}  L={row.L:.3f}  degree={row.degree:.3f}  R~={row.rtilde:.3f}")

    def cmd_fig6(self, args) -> None:
        result = self._experiment(args, "fig6")
        for label, profile in sorted(result.profiles.items()):
            print(f"{label:>12}  argmax d={profile.argmax_center}  R~={profile.r_tilde:.3f}")

    def cmd_fig7(self, args) -> None:
        result = self._experiment(args, "fig7", beta_grid=args.betas)
        for point in result.curve:
            print(f"{point.label:>12}  L={point.L:.3f}  R~={point.R:.3f}")
        if any(p.label == "delaunay" for p in result.curve):
            from experiments import delaunay_vs_beta
            c = delaunay_vs_beta(result.curve)
            verdict = "more" if c["delaunay_more_efficient"] else "less"
            print(f"delaunay R~={c['delaunay_R']:.3f} vs beta curve R~={c['beta_R']:.3f} at L={c['beta_L']:.3f}: "
                  f"{verdict} efficient")

    def cmd_converge(self, args) -> None:
        from experiments import FamilySpec
        params = {"beta": args.beta} if args.beta is not None else {}
        try:
            spec = FamilySpec(family=args.family, params=params)
        except ValueError as exc:
            self.usage_error(f"converge: {str(exc).splitlines()[0]}")
        result = self._experiment(args, "converge", families=[spec], n_grid=args.n_grid)
        for point in result.convergence:
            print(f"n={point.n:>6}  L={point.mean_L:.4f}  degree={point.mean_degree:.4f}  |L-L*|={point.L_deviation}")

    def cmd_paradox(self, args) -> None:
        result = self._experiment(args, "paradox", line_intensities=args.intensities)
        for row in result.paradox:
            print(f"lambda={row.intensity:<6g} added={row.added_length_per_area:.4f}  "
                  f"R_ave={row.r_ave:.4f}  rho(1)={row.rho_at_1:.4f}")

    def cmd_render(self, args) -> None:
        import net_io
        from render_svg import RenderStyle, write_svg
        net = net_io.read_network(args.input)
        write_svg(net, args.out, RenderStyle(pixel_size=args.pixels, show_junctions=args.junctions))
        self._log("render", True, f"{net.n_edges} edges -> {args.out}")

    def cmd_analytics_dump(self, args) -> None:
        import net_io
        from analytics import analytics_dump
        values = analytics_dump(args.betas if args.betas is not None else self.settings.beta_grid)
        if args.out:
            net_io.write_analytics(values, args.out)
        else:
            print("\n".join(net_io.write_analytics(values)))

    def run(self, args) -> None:
        handler = getattr(self, "cmd_" + args.verb.replace("-", "_"))
        started = time.perf_counter()
        try:
            handler(args)
        except RoadNetError as exc:
            self._log(args.verb, False, str(exc), int((time.perf_counter() - started) * 1000))
            raise


def _configure_logging() -> None:
    level = getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def execute(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _configure_logging()
        CommandRunner(parser).run(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else 2)
    except RoadNetError as exc:
        message = " ".join(str(exc).split())
        print(f"roadnet: error: {message}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
