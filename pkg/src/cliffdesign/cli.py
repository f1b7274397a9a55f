"""Command-line entry point: ``cliffdesign <subcommand> ...``.

Output is JSON (default) or CSV.  JSON floats are written with 17 significant
digits so equal seeds and configs give byte-identical files.
Exit codes: 2 bad arguments, 3 resource limit, 4 numerical conditioning.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import ConditioningError, ResourceLimitError

SCHEMA = "cliffdesign/1"

EXPLAIN = {
    "enumerate": "Enumerates the stochastic Lagrangian subspaces Sigma_{t,t}: count, "
                 "permutation members and defect dimensions.  Exercises the commutant "
                 "theorem's index set and the product formula prod_{k=0}^{t-2}(2^k + 1).",
    "gram": "Gram matrix of the operators Q_T^{(x)n}: rank, eigenvalue range, row sums against "
            "prod_r (1 + 2^{r-n}), and optionally the cofactor Gram-Schmidt coefficients with the "
            "three coefficient bounds of the constructed-basis lemma.",
    "haar-overlap": "Per-T values of <Q_T|P_H|Q_T> and of the diagonal twirl, with the 7/8 "
                    "Haar-symmetrization bound for non-permutation T.",
    "hamming": "Weight-preservation probabilities: Pr[h(Oy) = h(y)] against the column bound, "
               "Pr[h(x) = h(y)] on T against 7/8, and the defect-shift probability.",
    "eta": "The overlap constant eta_{K,t}: the largest |<Q_T|R_1(K)|Q_T'>| over non-permutation T "
           "(overlap-bound lemma); equals 1 exactly when K is Clifford.",
    "converge": "||Delta_t(sigma_k) - P_H||_2 for K-interleaved Clifford circuits in the small "
                "commutant basis, with the (dim H)^2 diamond bound and the closed-form depth bound.  "
                "The diamond column is an upper bound, never the exact diamond norm.",
    "bound": "Closed-form log2 of 2^{33t^4 + t log k}(1 + 2^{32t^2 - n})^{5k} eta_bar^{k-1}, and the "
             "Haar-interleaved depth 36(33t^4 + 3t log(1/eps)).",
    "gap": "Spectral gap of the frustration-free walk Hamiltonian H_{n,t} = n(id - Delta_t(sigma_G)) "
           "by dense eigensolve; checks lambda_2(Delta_t) = 1 - gap/n and the ground dimension "
           "against the Gram rank.",
    "frame-potential": "Monte Carlo frame potential E|tr(U^dag V)|^{2t} for Haar, uniform Clifford "
                       "or K-interleaved measures; targets t!, |Sigma_{t,t}| and t! + ||.||_2^2.",
    "sample-clifford": "Uniform random Cliffords as tableaux (images of X_j then Z_j, with sign bits).",
}


class UsageError(Exception):
    pass


# --- output -------------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_json(obj) -> str:
    """JSON with every float printed to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, complex):
        return to_json([obj.real, obj.imag])
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _num(float(v)) if isinstance(v, (float, np.floating)) else v
                    for k, v in r.items()})
    return buf.getvalue()


# --- subcommands ----------------------------------------------------------------------

def _bits(v: int, length: int) -> str:
    return format(v, f"0{length}b")[::-1]


def cmd_enumerate(a):
    from .lagrangian import enumerate_sigma, sigma_size, unpack
    sigma = enumerate_sigma(a.t)
    rows = [{
        "index": i,
        "permutation": T.is_permutation,
        "left_defect_dim": T.left_defect_dim,
        "right_defect_dim": T.right_defect_dim,
        "basis": " ".join(f"{_bits(x, a.t)}|{_bits(y, a.t)}"
                          for x, y in (unpack(b, a.t) for b in T.space.basis)),
    } for i, T in enumerate(sigma)]
    result = {"t": a.t, "count": len(sigma), "formula": sigma_size(a.t),
              "permutations": sum(T.is_permutation for T in sigma), "elements": rows}
    return result, rows


def cmd_gram(a):
    from .commutant import (frame_operator_deviation, gram, gram_schmidt_bounds,
                            gram_schmidt_cofactors, pochhammer_s, row_sums)
    model = gram(a.t, a.n)
    ev = model.eigenvalues
    result = {"t": a.t, "n": a.n, "size": model.size, "rank": model.rank,
              "min_eigenvalue": float(ev[0]), "max_eigenvalue": float(ev[-1]),
              "frame_deviation": frame_operator_deviation(a.t, a.n)}
    rows = []
    if a.check_rowsums:
        target = pochhammer_s(a.t, a.n)
        sums = row_sums(model)
        rel = np.abs(sums - target) / target
        result.update({"rowsum_target": target, "rowsum_max_rel_error": float(rel.max())})
        rows = [{"index": i, "row_sum": float(s), "rel_error": float(r)}
                for i, (s, r) in enumerate(zip(sums, rel))]
    if a.gram_schmidt:
        basis = gram_schmidt_cofactors(model, exact=a.exact)
        result["gram_schmidt"] = gram_schmidt_bounds(model, basis)
        result["gram_schmidt"]["max_normalized_offdiag"] = basis.max_normalized_offdiag(model)
    if not rows:
        rows = [{"i": i, "j": j, "log2_entry": int(a.n * model.gram_log2[i, j])}
                for i in range(model.size) for j in range(model.size)]
    return result, rows


def cmd_haar_overlap(a):
    from .hamming import pair_prob
    from .lagrangian import StochasticLagrangian, anti_identity, enumerate_sigma
    from .operators import diag_overlap, haar_overlap
    if a.t == 6:
        items = [StochasticLagrangian.from_orthogonal(anti_identity(6))]
    else:
        items = list(enumerate_sigma(a.t))
    rows = []
    for i, T in enumerate(items):
        rows.append({"index": i, "permutation": T.is_permutation,
                     "defect_dim": T.defect_dim, "haar": haar_overlap(T),
                     "diag": diag_overlap(T), "pair_prob": float(pair_prob(T).probability)})
    nonperm = [r["haar"] for r in rows if not r["permutation"]]
    top = max(nonperm) if nonperm else None
    for r in rows:
        r["is_max"] = bool(top is not None and not r["permutation"] and abs(r["haar"] - top) < 1e-12)
    result = {"t": a.t, "max_nonpermutation": top, "bound": 7 / 8,
              "within_bound": top is None or top <= 7 / 8 + 1e-12, "elements": rows}
    if a.t == 6:
        result["note"] = "t=6 uses the directly constructed anti-identity only"
    return result, rows


def cmd_hamming(a):
    from .hamming import defect_shift_prob, pair_prob, preserve_prob
    from .lagrangian import (StochasticLagrangian, anti_identity, defect_element, defects,
                             enumerate_Ot, enumerate_sigma)
    rows = []
    result = {"t": a.t}
    if a.anti_id:
        rep = preserve_prob(anti_identity(a.t))
        result["anti_identity"] = rep.as_dict()
        rows.append({"kind": "anti-identity", "index": 0, **rep.as_dict()})
        return result, rows
    if a.t <= 6:
        for i, O in enumerate(enumerate_Ot(a.t)):
            rep = preserve_prob(O)
            rows.append({"kind": "orthogonal", "index": i, **rep.as_dict()})
    if a.t <= 5:
        for i, T in enumerate(enumerate_sigma(a.t)):
            if a.all or not T.is_permutation:
                rows.append({"kind": "lagrangian", "index": i, **pair_prob(T).as_dict()})
    if a.t == 4:
        T = defect_element(4)
        _, N = defects(T)
        shift = defect_shift_prob(N, N.space.basis[0])
        result["defect_pair"] = pair_prob(T).as_dict()
        result["defect_shift"] = {"probability": float(shift), "probability_exact": str(shift)}
    if a.t % 4 == 2 and a.t <= 20:
        result["anti_identity"] = preserve_prob(anti_identity(a.t)).as_dict()
    return result, rows


def cmd_eta(a):
    from .moments import eta_table, parse_gate
    K = parse_gate(a.gate)
    table = eta_table(a.t, K, not a.no_identity)
    rows = [{"index": i, "row_max": v} for i, v in enumerate(table["row_max"])]
    return {"t": a.t, "gate": K.label, "gate_entries": K.to_list(), "clifford": K.is_clifford,
            "include_identity": not a.no_identity, **table}, rows


def cmd_converge(a):
    from .moments import (convergence_log2_curve, diamond_bound, eta, eta_bar,
                          haar_interleaved_model, interleaved_model, paper_depth_bound, parse_gate,
                          spectral_contraction)
    if a.haar_interleaved:
        model = haar_interleaved_model(a.t, a.n)
        factor = 7 / 8
        label = "haar"
    else:
        K = parse_gate(a.gate)
        model = interleaved_model(a.t, a.n, K, not a.no_identity)
        factor = eta_bar(eta(a.t, K, not a.no_identity))
        label = K.label
    logs = convergence_log2_curve(model, a.k_max)
    rows = []
    for k in range(1, a.k_max + 1):
        norm = float(np.exp2(logs[k - 1]))
        rows.append({"k": k, "norm": norm, "diamond_bound": diamond_bound(norm, a.t, a.n),
                     "log2_paper_bound": paper_depth_bound(a.t, a.n, k, factor)})
    result = {"t": a.t, "n": a.n, "gate": label, "spectral_contraction": spectral_contraction(model),
              "eta_bar": factor, "complement_dim": model.complement_dim, "rows": rows,
              "diamond_caveat": "diamond_bound = (dim H)^2 * 2-norm, an upper bound only"}
    return result, rows


def cmd_bound(a):
    from .moments import eta, eta_bar, haar_interleaved_depth, paper_depth_bound, parse_gate
    if a.eta_bar is not None:
        factor = a.eta_bar
    elif a.gate:
        factor = eta_bar(eta(a.t, parse_gate(a.gate)))
    else:
        raise UsageError("bound needs --eta-bar or --gate")
    result = {"t": a.t, "n": a.n, "k": a.k, "eta_bar": factor,
              "log2_bound": paper_depth_bound(a.t, a.n, a.k, factor)}
    if a.eps is not None:
        result["haar_interleaved_depth"] = haar_interleaved_depth(a.t, a.eps)
    return result, [result]


def cmd_gap(a):
    from .stabilizer import walk_gap_report
    res = walk_gap_report(a.t, a.n)
    return res, [res]


def cmd_frame_potential(a):
    from .moments import parse_gate
    from .stabilizer import frame_potential_mc
    K = parse_gate(a.gate) if a.family == "interleaved" else None
    est, se = frame_potential_mc(a.t, a.n, a.family, a.samples, a.seed, K=K, k=a.k,
                                 block=a.block, threads=a.threads)
    res = {"t": a.t, "n": a.n, "family": a.family, "k": a.k, "samples": a.samples,
           "estimate": est, "stderr": se}
    return res, [res]


def cmd_sample_clifford(a):
    from .stabilizer import sample_clifford
    rng = np.random.Generator(np.random.Philox(a.seed))
    tabs = [sample_clifford(a.n, rng) for _ in range(a.count)]
    out = [{"n": t.n, "x": [_bits(v, t.n) for v in t.x], "z": [_bits(v, t.n) for v in t.z],
            "signs": list(t.signs)} for t in tabs]
    rows = [{"index": i, "x": " ".join(o["x"]), "z": " ".join(o["z"]),
             "signs": "".join(map(str, o["signs"]))} for i, o in enumerate(out)]
    return {"n": a.n, "count": a.count, "tableaux": out}, rows


COMMANDS = {
    "enumerate": cmd_enumerate, "gram": cmd_gram, "haar-overlap": cmd_haar_overlap,
    "hamming": cmd_hamming, "eta": cmd_eta, "converge": cmd_converge, "bound": cmd_bound,
    "gap": cmd_gap, "frame-potential": cmd_frame_potential, "sample-clifford": cmd_sample_clifford,
}


# --- parsing --------------------------------------------------------------------------

def _default_seed() -> int:
    raw = os.environ.get("CDL_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CDL_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "tableau-json"], default="json")
    common.add_argument("--json", action="store_true", help="same as --format json")
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="default: $CDL_SEED, else 0")
    common.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    common.add_argument("--explain", action="store_true", help="describe what this computes and exit")

    p = argparse.ArgumentParser(prog="cliffdesign", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    s = add("enumerate", "list Sigma_{t,t}")
    s.add_argument("--t", type=int, required=True)

    s = add("gram", "Gram matrix checks")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--check-rowsums", action="store_true")
    s.add_argument("--gram-schmidt", action="store_true")
    s.add_argument("--exact", action="store_true", help="rational Gram-Schmidt")

    s = add("haar-overlap", "per-T Haar overlaps")
    s.add_argument("--t", type=int, required=True)

    s = add("hamming", "weight-preservation probabilities")
    s.add_argument("--t", type=int, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="include permutations")
    g.add_argument("--anti-id", action="store_true", help="only the anti-identity")

    s = add("eta", "overlap constant eta_{K,t}")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--gate", default="T")
    s.add_argument("--no-identity", action="store_true")

    s = add("converge", "convergence sweep over k")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k-max", type=int, required=True)
    s.add_argument("--gate", default="T")
    s.add_argument("--haar-interleaved", action="store_true")
    s.add_argument("--no-identity", action="store_true")

    s = add("bound", "closed-form depth bound")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eta-bar", type=float)
    s.add_argument("--gate")
    s.add_argument("--eps", type=float, help="also report the Haar-interleaved depth")

    s = add("gap", "walk Hamiltonian spectral gap")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)

    s = add("frame-potential", "Monte Carlo frame potential")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--family", choices=["haar", "clifford", "interleaved"], required=True)
    s.add_argument("--gate", default="T")
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--samples", type=int, default=3200)
    s.add_argument("--block", type=int, default=32)

    s = add("sample-clifford", "uniform random Clifford tableaux")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=1)
    return p


def _validate(a) -> None:
    for name in ("t", "n", "k", "k_max", "samples", "count", "block"):
        v = getattr(a, name, None)
        if v is not None and v < (0 if name == "k" else 1):
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    if a.threads is not None and a.threads < 1:
        raise UsageError("--threads must be positive")
    if a.format == "tableau-json" and a.command != "sample-clifford":
        raise UsageError("--format tableau-json is only for sample-clifford")
    if a.json:
        a.format = "json"


def _config(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in ("explain", "json", "output")}


def dispatch(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    # --explain needs no other arguments
    if "--explain" in argv:
        name = next((w for w in argv if w in COMMANDS), None)
        if name is not None:
            print(EXPLAIN[name])
            return 0
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        if a.seed is None:
            a.seed = _default_seed()
        _validate(a)
        result, rows = COMMANDS[a.command](a)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ResourceLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return 3
    except ConditioningError as e:
        print(f"conditioning failure: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if a.format == "csv":
        text = to_csv(rows)
    else:
        text = to_json({"schema": SCHEMA, "version": __version__, "config": _config(a),
                        "result": result}) + "\n"
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
