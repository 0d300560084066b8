"""Command-line surface.

Subcommands:

    bound     closed-form MGF/tail bounds for a problem file
    exact     exact MGF values on a theta grid (plus growth-rate columns)
    simulate  empirical tails with CIs next to the theoretical bound
    verify    the full inequality suite; nonzero exit on any violation

Problem files are JSON with a versioned schema tag; see README for the
field reference.  Reports are JSON on stdout (floats serialized with
round-trip-exact repr), CSV rows use %.17g, and both are byte-identical
for a fixed seed.  Exit codes: 0 success, 2 problem-file validation
error, 3 verification violation, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import bounds as bnd
from . import lift, matcore, mc
from .chain import leon_perron, rng_for, two_state_hoeffding_chain, validate_chain
from .errors import NumericError, ValidationError
from .instances import centered_blocks

SCHEMA = "matconc-problem/1"
REPORT_SCHEMA = "matconc-report/1"

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_VIOLATION = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# problem files


def _fail(path, msg):
    raise ValidationError(f"{path}: {msg}")


def normalize_problem(raw):
    """Fill defaults and validate field shapes; returns a canonical dict
    that loads back to the identical internal state."""
    if not isinstance(raw, dict):
        _fail("$", "problem file must be a JSON object")
    schema = raw.get("schema", SCHEMA)
    if schema != SCHEMA:
        _fail("schema", f"expected {SCHEMA!r}, got {schema!r}")
    out = {"schema": SCHEMA}

    chain_spec = raw.get("chain")
    if not isinstance(chain_spec, dict) or len(chain_spec) != 1:
        _fail("chain", "must be an object with exactly one of: matrix, leon_perron, two_state")
    kind = next(iter(chain_spec))
    if kind == "matrix":
        out["chain"] = {"matrix": [[float(v) for v in row] for row in chain_spec["matrix"]]}
    elif kind == "leon_perron":
        body = chain_spec[kind]
        if "pi" not in body or "lambda" not in body:
            _fail("chain.leon_perron", "needs fields pi and lambda")
        out["chain"] = {"leon_perron": {"pi": [float(v) for v in body["pi"]],
                                        "lambda": float(body["lambda"])}}
    elif kind == "two_state":
        body = chain_spec[kind]
        for f in ("a", "b", "lambda"):
            if f not in body:
                _fail("chain.two_state", f"missing field {f}")
        out["chain"] = {"two_state": {"a": float(body["a"]), "b": float(body["b"]),
                                      "lambda": float(body["lambda"])}}
    else:
        _fail("chain", f"unknown chain kind {kind!r}")

    obs_spec = raw.get("observable")
    if not isinstance(obs_spec, dict):
        _fail("observable", "must be an object")
    if "matrices" in obs_spec:
        norm_obs = {"matrices": np.asarray(obs_spec["matrices"], dtype=float).tolist()}
        if "matrices_im" in obs_spec:
            norm_obs["matrices_im"] = np.asarray(obs_spec["matrices_im"], dtype=float).tolist()
    elif "generator" in obs_spec:
        gen = obs_spec["generator"]
        if gen not in ("rademacher_diag", "random_seed_based"):
            _fail("observable.generator", f"unknown generator {gen!r}")
        norm_obs = {"generator": gen, "d": int(obs_spec.get("d", 1))}
        if gen == "random_seed_based":
            norm_obs["seed"] = int(obs_spec.get("seed", 0))
            norm_obs["scale"] = float(obs_spec.get("scale", 1.0))
    else:
        _fail("observable", "needs either matrices or generator")
    out["observable"] = norm_obs

    n = raw.get("n")
    if not isinstance(n, int) or n < 1:
        _fail("n", "horizon must be a positive integer")
    out["n"] = n

    mode = raw.get("mode", "hoeffding")
    if mode not in ("hoeffding", "bernstein"):
        _fail("mode", f"must be hoeffding or bernstein, got {mode!r}")
    out["mode"] = mode

    out["phi"] = float(raw.get("phi", 0.0))
    if not (-math.pi / 2 <= out["phi"] <= math.pi / 2):
        _fail("phi", "must lie in [-pi/2, pi/2]")

    initial = raw.get("initial", "stationary")
    if isinstance(initial, str):
        if initial != "stationary":
            _fail("initial", f"unknown tag {initial!r}")
        out["initial"] = "stationary"
    else:
        out["initial"] = [float(v) for v in initial]
    out["nonstationary_p"] = float(raw.get("nonstationary_p", 2.0))

    out["complex"] = bool(raw.get("complex", False))
    tail = raw.get("tail", "upper")
    if tail not in ("upper", "lower"):
        _fail("tail", f"must be upper or lower, got {tail!r}")
    out["tail"] = tail

    if "hoeffding_bounds" in raw:
        out["hoeffding_bounds"] = [[float(a), float(b)] for a, b in raw["hoeffding_bounds"]]
    if "bernstein" in raw:
        body = raw["bernstein"]
        if "variances" not in body or "M" not in body:
            _fail("bernstein", "needs fields variances and M")
        out["bernstein"] = {"variances": [float(v) for v in body["variances"]],
                            "M": float(body["M"])}
    return out


def _build_chain(norm):
    kind = next(iter(norm["chain"]))
    body = norm["chain"][kind]
    if kind == "matrix":
        return validate_chain(np.asarray(body, dtype=float))
    if kind == "leon_perron":
        return leon_perron(np.asarray(body["pi"], dtype=float), body["lambda"])
    chn, _ = two_state_hoeffding_chain(body["a"], body["b"], body["lambda"])
    return chn


def _build_values(norm, chn):
    """Per-state matrices from the observable section, before any
    embedding or sign flip.  Returns (values, is_time_dependent)."""
    obs_spec = norm["observable"]
    if "matrices" in obs_spec:
        re = np.asarray(obs_spec["matrices"], dtype=float)
        if "matrices_im" in obs_spec:
            im = np.asarray(obs_spec["matrices_im"], dtype=float)
            if im.shape != re.shape:
                _fail("observable.matrices_im", "shape differs from matrices")
            if not norm["complex"]:
                _fail("observable.matrices_im", "imaginary parts require complex: true")
            return re + 1j * im, re.ndim == 4
        return re, re.ndim == 4
    gen = obs_spec["generator"]
    d = obs_spec["d"]
    if gen == "rademacher_diag":
        f = np.where(np.arange(chn.m) < chn.m // 2, 1.0, -1.0)
        if abs(float(chn.pi @ f)) > 1e-10:
            _fail("observable.generator",
                  "rademacher_diag needs a chain whose pi balances the two halves")
        return np.stack([v * np.eye(d) for v in f]), False
    rng = rng_for(obs_spec["seed"])
    return centered_blocks(rng, chn.pi, d, scale=obs_spec["scale"]), False


def _tight_hoeffding(values, time_dependent, n):
    if time_dependent:
        eigs = np.linalg.eigvalsh(values)
        return [(float(eigs[j].min()), float(eigs[j].max())) for j in range(n)]
    eigs = np.linalg.eigvalsh(values)
    return [(float(eigs.min()), float(eigs.max()))] * n


def _tight_bernstein_params(pi, values, time_dependent, n):
    def one(blocks):
        sq = np.einsum("x,xij,xjk->ik", pi, blocks, blocks)
        return float(np.linalg.eigvalsh(sq)[-1]), float(np.abs(np.linalg.eigvalsh(blocks)).max())

    if time_dependent:
        per = [one(values[j]) for j in range(n)]
        return [v for v, _ in per], max(mc_ for _, mc_ in per)
    v, m_cap = one(values)
    return [v] * n, m_cap


class Problem:
    """Parsed problem file: validated chain, observable, and parameters."""

    def __init__(self, norm):
        self.norm = norm
        self.chain = _build_chain(norm)
        values, time_dependent = _build_values(norm, self.chain)
        self.warnings = []
        self.complex_dim = None

        if norm["complex"]:
            if not np.iscomplexobj(values):
                values = values.astype(complex)
            self.complex_dim = values.shape[-1]
            stacked = np.stack([
                matcore.embed_complex(values[idx])
                for idx in np.ndindex(values.shape[:-2])
            ]).reshape(values.shape[:-2] + (2 * self.complex_dim, 2 * self.complex_dim))
            values = stacked
            self.warnings.append(
                "complex-embedding: Hermitian input embedded as real symmetric "
                "2d x 2d; bounds carry an extra factor 2 and d refers to the "
                "complex dimension")
        if norm["tail"] == "lower":
            values = -values
            self.warnings.append(
                "lower-tail: observable negated; reported bounds apply to the "
                "lower tail of the original observable")

        n = norm["n"]
        if values.ndim == 4 and values.shape[0] != n:
            _fail("observable.matrices", f"time axis {values.shape[0]} differs from n = {n}")

        kwargs = {}
        if norm["mode"] == "hoeffding":
            declared = norm.get("hoeffding_bounds")
            if declared is not None:
                if len(declared) != n:
                    _fail("hoeffding_bounds", f"need {n} pairs, got {len(declared)}")
                pairs = [(a, b) for a, b in declared]
                if norm["tail"] == "lower":
                    pairs = [(-b, -a) for a, b in pairs]
            else:
                pairs = _tight_hoeffding(values, values.ndim == 4, n)
            kwargs["hoeffding_bounds"] = pairs
        else:
            declared = norm.get("bernstein")
            if declared is not None:
                if len(declared["variances"]) != n:
                    _fail("bernstein.variances", f"need {n} entries")
                variances, m_cap = declared["variances"], declared["M"]
            else:
                variances, m_cap = _tight_bernstein_params(
                    self.chain.pi, values, values.ndim == 4, n)
            kwargs["bernstein_variances"] = variances
            kwargs["bernstein_norm_bound"] = m_cap

        self.obs = lift.make_observable(values, n=n, **kwargs)
        lift.validate_observable(self.obs, self.chain.pi)
        self.phi = norm["phi"]
        self.mode = norm["mode"]
        self.initial = (norm["initial"] if norm["initial"] == "stationary"
                        else np.asarray(norm["initial"], dtype=float))

    @property
    def report_dim(self):
        return self.complex_dim if self.complex_dim is not None else self.obs.d

    def params(self):
        if self.mode == "hoeffding":
            return bnd.HoeffdingParams(self.report_dim, self.chain.lam,
                                       self.obs.hoeffding_bounds)
        return bnd.BernsteinParams(self.report_dim, self.chain.lam,
                                   self.obs.bernstein_variances,
                                   self.obs.bernstein_norm_bound)

    def finish_report(self, report):
        """Apply the corrections the problem file requests."""
        if self.complex_dim is not None:
            report = bnd.complex_correction(report)
        if not isinstance(self.initial, str):
            report = bnd.nonstationary_correction(
                report, self.initial, self.chain.pi, self.norm["nonstationary_p"])
        return report


def load_problem(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read problem file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"problem file is not valid JSON: {exc}") from exc
    return Problem(normalize_problem(raw))


# ---------------------------------------------------------------------------
# output plumbing


def _grid(text, name):
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError:
        raise ValidationError(f"{name} must look like a:b:steps, got {text!r}") from None
    if steps < 1:
        raise ValidationError(f"{name} needs at least one step")
    return np.linspace(a, b, steps)


def _g17(x):
    return format(float(x), ".17g")


def _emit(report, stream=None):
    stream = stream or sys.stdout
    json.dump(report, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _write_csv(path, rows):
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quantity", "n", "theta", "phi", "point",
                         "ci_low", "ci_high", "trials", "seed"])
        for row in rows:
            writer.writerow(row)


def _report_value(name, value, formula_id, **extra):
    out = {"name": name, "value": value, "formula_id": formula_id}
    out.update(extra)
    return out


def _bound_entry(name, rep):
    return _report_value(
        name, rep.value, rep.formula_id,
        theta_used=rep.theta_used,
        theta_domain=[rep.theta_domain[0],
                      "inf" if math.isinf(rep.theta_domain[1]) else rep.theta_domain[1]],
        corrections=[[k, "inf" if isinstance(v, float) and math.isinf(v) else v]
                     for k, v in rep.multiplicative_corrections],
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(args):
    prob = load_problem(args.spec)
    params = prob.params()
    warnings = list(prob.warnings)
    results = []

    if prob.mode == "bernstein":
        warnings.append(bnd.WARN_BERNSTEIN_DOMAIN)
        warnings.append(bnd.WARN_BERNSTEIN_SIGN)
        warnings.append(bnd.WARN_ALPHA1_FORM)
        theta_cap = bnd.bernstein_theta_max(params.lam, params.M)
    else:
        theta_cap = math.inf

    theta_grid = _grid(args.theta_grid, "--theta-grid") if args.theta_grid else np.linspace(0.05, 1.0, 20)
    for theta in theta_grid:
        theta = float(theta)
        used = theta
        if theta >= theta_cap:
            used = theta_cap - 1e-9
            warnings.append(
                f"theta-clamp: requested theta {_g17(theta)} outside the admissible "
                f"domain; clamped to {_g17(used)}")
        try:
            value = (bnd.hoeffding_mgf_bound(params, used) if prob.mode == "hoeffding"
                     else bnd.bernstein_mgf_bound(params, used))
        except NumericError as exc:
            # the bound blows up approaching the domain boundary; report
            # the row as infinite instead of aborting the whole run
            value = "inf"
            warnings.append(f"mgf-overflow: {exc}")
        results.append(_report_value(
            "mgf_bound", value, f"{prob.mode}-mgf", theta=used))

    t_grid = _grid(args.t_grid, "--t-grid") if args.t_grid else []
    for t in t_grid:
        t = float(t)
        rep = (bnd.hoeffding_tail_bound(params, t) if prob.mode == "hoeffding"
               else bnd.bernstein_tail_bound(params, t))
        rep = prob.finish_report(rep)
        warnings.extend(w for w in rep.warnings if w not in warnings)
        results.append(dict(_bound_entry("tail_bound", rep), t=t))

    _emit({
        "schema": REPORT_SCHEMA,
        "command": "bound",
        "inputs": {"spec": prob.norm},
        "results": results,
        "warnings": warnings,
    })
    return EXIT_OK


def cmd_exact(args):
    prob = load_problem(args.spec)
    warnings = list(prob.warnings)
    theta_grid = _grid(args.theta_grid, "--theta-grid") if args.theta_grid else np.linspace(0.0, 1.0, 11)
    results = []
    oracle_ok = args.oracle
    if oracle_ok and prob.chain.m ** prob.obs.n > 100_000:
        raise ValidationError(
            f"--oracle needs m^n <= 100000 paths, got {prob.chain.m}^{prob.obs.n}; "
            "reduce the instance")
    for theta in theta_grid:
        theta = float(theta)
        entry = {
            "name": "exact_mgf",
            "theta": theta,
            "value": lift.exact_mgf(prob.chain, prob.obs, theta, prob.phi),
            "formula_id": "transfer-mgf",
        }
        if not prob.obs.time_dependent:
            blocks = lift.t_blocks(prob.obs.at(0), prob.phi)
            rep = lift.leading_eigenvalue_sandwich(prob.chain, blocks, theta)
            entry["leading_eigenvalue"] = rep.leading_eigenvalue
            entry["essential_radius_bound"] = rep.essential_radius_bound
            entry["growth_root"] = lift.root_rstar(
                prob.chain.pi, prob.chain.lam, blocks, theta)
        if oracle_ok:
            entry["oracle"] = mc.enumerated_mgf(prob.chain, prob.obs, theta, prob.phi)
        results.append(entry)
    _emit({
        "schema": REPORT_SCHEMA,
        "command": "exact",
        "inputs": {"spec": prob.norm},
        "results": results,
        "warnings": warnings,
    })
    return EXIT_OK


def cmd_simulate(args):
    prob = load_problem(args.spec)
    params = prob.params()
    warnings = list(prob.warnings)
    if args.trials < 100:
        raise ValidationError("--trials must be at least 100")
    t_grid = (_grid(args.t_grid, "--t-grid") if args.t_grid
              else mc.tail_grid_for(params))
    results = []
    csv_rows = []
    initial = prob.initial
    for t in t_grid:
        t = float(t)
        est = mc.estimate_tail(prob.chain, prob.obs, t, args.trials, args.seed,
                               initial=initial)
        rep = (bnd.hoeffding_tail_bound(params, t) if prob.mode == "hoeffding"
               else bnd.bernstein_tail_bound(params, t))
        rep = prob.finish_report(rep)
        warnings.extend(w for w in rep.warnings if w not in warnings)
        results.append({
            "name": "empirical_tail",
            "t": t,
            "point": est.point,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "bound": rep.value,
            "bound_formula_id": rep.formula_id,
            "bound_theta_used": rep.theta_used,
        })
        csv_rows.append(["empirical_tail", prob.obs.n, _g17(t), _g17(prob.phi),
                         _g17(est.point), _g17(est.ci_low), _g17(est.ci_high),
                         args.trials, args.seed])
        csv_rows.append([rep.formula_id, prob.obs.n, _g17(t), _g17(prob.phi),
                         _g17(rep.value), "", "", "", ""])
    if args.csv:
        _write_csv(args.csv, csv_rows)
    _emit({
        "schema": REPORT_SCHEMA,
        "command": "simulate",
        "inputs": {"spec": prob.norm, "trials": args.trials, "seed": args.seed},
        "results": results,
        "warnings": warnings,
    })
    return EXIT_OK


def cmd_verify(args):
    records = mc.verify_all(seed=args.seed, instance_count=args.suite_size,
                            trials=args.trials, corrupt=args.inject_violation)
    total = sum(r.violations for r in records)
    if args.json:
        _emit({
            "schema": REPORT_SCHEMA,
            "command": "verify",
            "inputs": {"seed": args.seed, "suite_size": args.suite_size,
                       "trials": args.trials},
            "records": [asdict(r) for r in records],
            "violations_total": total,
        })
    else:
        for r in records:
            status = "ok" if r.violations == 0 else "VIOLATION"
            line = (f"[{status}] {r.inequality_id}: {r.instances_tested} instances, "
                    f"{r.violations} violations, worst margin {_g17(r.worst_margin)}")
            if r.note:
                line += f" ({r.note})"
            print(line)
        print(f"total violations: {total}")
    return EXIT_OK if total == 0 else EXIT_VIOLATION


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="matconc",
        description="Concentration bounds for sums of Markov-dependent random "
                    "matrices: closed-form bounds, exact transfer-operator "
                    "evaluation, simulation, and inequality verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="closed-form MGF and tail bounds")
    p_bound.add_argument("--spec", required=True, help="problem JSON file")
    p_bound.add_argument("--theta-grid", help="a:b:steps grid for the MGF curve")
    p_bound.add_argument("--t-grid", help="a:b:steps grid of tail thresholds")
    p_bound.set_defaults(func=cmd_bound)

    p_exact = sub.add_parser("exact", help="exact MGF on a theta grid")
    p_exact.add_argument("--spec", required=True)
    p_exact.add_argument("--theta-grid")
    p_exact.add_argument("--oracle", action="store_true",
                         help="add a path-enumeration oracle column (tiny instances)")
    p_exact.set_defaults(func=cmd_exact)

    p_sim = sub.add_parser("simulate", help="empirical tails with CIs")
    p_sim.add_argument("--spec", required=True)
    p_sim.add_argument("--t-grid")
    p_sim.add_argument("--trials", type=int, default=10000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--csv", help="also write CSV rows to this file")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run the inequality suite")
    p_ver.add_argument("--suite-size", type=int, default=50)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--trials", type=int, default=20000)
    p_ver.add_argument("--json", action="store_true",
                       help="machine-readable verification records")
    p_ver.add_argument("--inject-violation", help=argparse.SUPPRESS)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
